//! Discrete differential operators, stresses, and the Leray projection.
//!
//! Periodic mode is trigonometric collocation: the Laplacian carries the full
//! `-|2 pi k|^2` symbol, first derivatives carry `i 2 pi k~` with the Nyquist
//! bin zeroed (keeping d/dx a real skew-adjoint map), and the projection acts
//! mode-by-mode as `I - k k^T / |k|^2`. Bounded mode is second-order centered
//! differences on cell centers with ghost closures chosen per field role; the
//! compact 5-point Laplacians are exactly the negative Dirichlet forms
//! reported by [`Grid::grad_norm_sq`], and the cell gradient (even ghosts) is
//! exactly minus the transpose of the cell divergence (odd ghosts), which is
//! what makes the collocated pressure projection well-posed.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{BcMode, FieldRole, Grid, ScalarField, TensorField, VectorField};

type C = Complex<f64>;

/// Divergence level enforced by the projection.
pub const DIV_TOL: f64 = 1e-10;

/// Ghost reflection rule across walls in `dirichlet_neumann` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ghost {
    /// Mirror value (homogeneous Neumann).
    Even,
    /// Mirror with sign flip (homogeneous Dirichlet at the wall face).
    Odd,
}

impl FieldRole {
    pub(crate) fn ghost(self) -> Ghost {
        match self {
            FieldRole::Velocity => Ghost::Odd,
            FieldRole::Director => Ghost::Even,
        }
    }
}

// ---------------------------------------------------------------------------
// scalar-array kernels
// ---------------------------------------------------------------------------

fn ghost_value(data: &[f64], nx: usize, ny: usize, ix: i64, iy: i64, ghost: Ghost) -> f64 {
    let mut sign = 1.0;
    let cx = if ix < 0 {
        if ghost == Ghost::Odd {
            sign = -sign;
        }
        0
    } else if ix >= nx as i64 {
        if ghost == Ghost::Odd {
            sign = -sign;
        }
        nx - 1
    } else {
        ix as usize
    };
    let cy = if iy < 0 {
        if ghost == Ghost::Odd {
            sign = -sign;
        }
        0
    } else if iy >= ny as i64 {
        if ghost == Ghost::Odd {
            sign = -sign;
        }
        ny - 1
    } else {
        iy as usize
    };
    sign * data[cy * nx + cx]
}

fn fd_deriv(grid: &Grid, data: &[f64], axis: usize, ghost: Ghost) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let inv2h = 0.5 / if axis == 0 { grid.hx } else { grid.hy };
    let mut out = vec![0.0; data.len()];
    for iy in 0..ny as i64 {
        for ix in 0..nx as i64 {
            let (pa, pb) = if axis == 0 { (ix + 1, ix - 1) } else { (iy + 1, iy - 1) };
            let (hi, lo) = if axis == 0 {
                (ghost_value(data, nx, ny, pa, iy, ghost), ghost_value(data, nx, ny, pb, iy, ghost))
            } else {
                (ghost_value(data, nx, ny, ix, pa, ghost), ghost_value(data, nx, ny, ix, pb, ghost))
            };
            out[iy as usize * nx + ix as usize] = (hi - lo) * inv2h;
        }
    }
    out
}

fn fd_laplacian(grid: &Grid, data: &[f64], ghost: Ghost) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ihx2, ihy2) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut out = vec![0.0; data.len()];
    for iy in 0..ny as i64 {
        for ix in 0..nx as i64 {
            let c = data[iy as usize * nx + ix as usize];
            let xm = ghost_value(data, nx, ny, ix - 1, iy, ghost);
            let xp = ghost_value(data, nx, ny, ix + 1, iy, ghost);
            let ym = ghost_value(data, nx, ny, ix, iy - 1, ghost);
            let yp = ghost_value(data, nx, ny, ix, iy + 1, ghost);
            out[iy as usize * nx + ix as usize] =
                (xm - 2.0 * c + xp) * ihx2 + (ym - 2.0 * c + yp) * ihy2;
        }
    }
    out
}

/// Dirichlet form of the compact Laplacian for one component: satisfies
/// `(1/N) sum v (-Lap v) = fd_dirichlet_form(v) / N` exactly.
fn fd_dirichlet_form(grid: &Grid, data: &[f64], ghost: Ghost) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ihx2, ihy2) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut acc = 0.0;
    for iy in 0..ny {
        for ix in 1..nx {
            let d = data[iy * nx + ix] - data[iy * nx + ix - 1];
            acc += d * d * ihx2;
        }
        if ghost == Ghost::Odd {
            let a = data[iy * nx];
            let b = data[iy * nx + nx - 1];
            acc += 2.0 * (a * a + b * b) * ihx2;
        }
    }
    for ix in 0..nx {
        for iy in 1..ny {
            let d = data[iy * nx + ix] - data[(iy - 1) * nx + ix];
            acc += d * d * ihy2;
        }
        if ghost == Ghost::Odd {
            let a = data[ix];
            let b = data[(ny - 1) * nx + ix];
            acc += 2.0 * (a * a + b * b) * ihy2;
        }
    }
    acc
}

/// Spectral first derivatives of one component, sharing the forward transform.
fn spectral_grad(grid: &Grid, data: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sp = grid.spectral();
    let spec = sp.forward(data);
    let mut gx = spec.clone();
    let mut gy = spec;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = iy * grid.nx + ix;
            gx[k] *= C::new(0.0, sp.kx_deriv[ix]);
            gy[k] *= C::new(0.0, sp.ky_deriv[iy]);
        }
    }
    (sp.inverse(gx), sp.inverse(gy))
}

fn spectral_laplacian(grid: &Grid, data: &[f64]) -> Vec<f64> {
    let sp = grid.spectral();
    let mut spec = sp.forward(data);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k2 = sp.kx[ix] * sp.kx[ix] + sp.ky[iy] * sp.ky[iy];
            spec[iy * grid.nx + ix] *= -k2;
        }
    }
    sp.inverse(spec)
}

impl Grid {
    // -- core differential operators ---------------------------------------

    /// Componentwise Laplacian with the role's boundary closure.
    pub fn laplacian(&self, v: &VectorField) -> VectorField {
        assert_eq!(*self, v.grid);
        let mut out = self.vector_field(v.role);
        match self.bc_mode {
            BcMode::Periodic => {
                out.x = spectral_laplacian(self, &v.x);
                out.y = spectral_laplacian(self, &v.y);
            }
            BcMode::DirichletNeumann => {
                let g = v.role.ghost();
                out.x = fd_laplacian(self, &v.x, g);
                out.y = fd_laplacian(self, &v.y, g);
            }
        }
        out
    }

    /// Scalar Laplacian with Neumann (even-ghost) closure.
    pub fn laplacian_scalar(&self, s: &ScalarField) -> ScalarField {
        assert_eq!(*self, s.grid);
        let data = match self.bc_mode {
            BcMode::Periodic => spectral_laplacian(self, &s.data),
            BcMode::DirichletNeumann => fd_laplacian(self, &s.data, Ghost::Even),
        };
        ScalarField { grid: self.clone(), data }
    }

    /// Gradient of a scalar (even-ghost closure in bounded mode); the output
    /// is velocity-tagged so it can feed the projection.
    pub fn gradient(&self, s: &ScalarField) -> VectorField {
        assert_eq!(*self, s.grid);
        let (gx, gy) = match self.bc_mode {
            BcMode::Periodic => spectral_grad(self, &s.data),
            BcMode::DirichletNeumann => {
                (fd_deriv(self, &s.data, 0, Ghost::Even), fd_deriv(self, &s.data, 1, Ghost::Even))
            }
        };
        VectorField { grid: self.clone(), x: gx, y: gy, role: FieldRole::Velocity }
    }

    /// Divergence with the role's boundary closure.
    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        assert_eq!(*self, v.grid);
        let g = v.role.ghost();
        let (dx, dy) = match self.bc_mode {
            BcMode::Periodic => {
                let (gx, _) = spectral_grad(self, &v.x);
                let (_, gy) = spectral_grad(self, &v.y);
                (gx, gy)
            }
            BcMode::DirichletNeumann => {
                (fd_deriv(self, &v.x, 0, g), fd_deriv(self, &v.y, 1, g))
            }
        };
        let data = dx.iter().zip(&dy).map(|(a, b)| a + b).collect();
        ScalarField { grid: self.clone(), data }
    }

    /// Velocity/director gradient tensor `(grad v)_{ij} = d_j v_i`.
    pub fn grad_tensor(&self, v: &VectorField) -> TensorField {
        assert_eq!(*self, v.grid);
        let g = v.role.ghost();
        let ((xx, xy), (yx, yy)) = match self.bc_mode {
            BcMode::Periodic => (spectral_grad(self, &v.x), spectral_grad(self, &v.y)),
            BcMode::DirichletNeumann => (
                (fd_deriv(self, &v.x, 0, g), fd_deriv(self, &v.x, 1, g)),
                (fd_deriv(self, &v.y, 0, g), fd_deriv(self, &v.y, 1, g)),
            ),
        };
        TensorField { grid: self.clone(), xx, xy, yx, yy }
    }

    /// Transport term `(u . grad d)_i = u_j d_j d_i`.
    pub fn advect(&self, u: &VectorField, d: &VectorField) -> VectorField {
        let gd = self.grad_tensor(d);
        let mut out = self.vector_field(d.role);
        for k in 0..self.len() {
            out.x[k] = u.x[k] * gd.xx[k] + u.y[k] * gd.xy[k];
            out.y[k] = u.x[k] * gd.yx[k] + u.y[k] * gd.yy[k];
        }
        out
    }

    /// Stretching term `(d . grad u)_i = d_j d_j u_i`.
    pub fn stretch(&self, d: &VectorField, u: &VectorField) -> VectorField {
        let gu = self.grad_tensor(u);
        let mut out = self.vector_field(d.role);
        for k in 0..self.len() {
            out.x[k] = d.x[k] * gu.xx[k] + d.y[k] * gu.xy[k];
            out.y[k] = d.x[k] * gu.yx[k] + d.y[k] * gu.yy[k];
        }
        out
    }

    /// Elastic stress contraction `(grad d (.) grad d)_{ij} = d_i d_k d_j d_k`.
    pub fn ericksen_stress(&self, d: &VectorField) -> TensorField {
        let gd = self.grad_tensor(d);
        let mut t = self.tensor_field();
        for k in 0..self.len() {
            // (grad d)_{ki}: xx = dx(d_x), xy = dy(d_x), yx = dx(d_y), yy = dy(d_y)
            t.xx[k] = gd.xx[k] * gd.xx[k] + gd.yx[k] * gd.yx[k];
            t.xy[k] = gd.xx[k] * gd.xy[k] + gd.yx[k] * gd.yy[k];
            t.yx[k] = t.xy[k];
            t.yy[k] = gd.xy[k] * gd.xy[k] + gd.yy[k] * gd.yy[k];
        }
        t
    }

    /// Stretching stress `(g (x) d)_{ij} = g_i d_j`.
    pub fn stretch_stress(&self, d: &VectorField, g: &VectorField) -> TensorField {
        assert_eq!(*self, d.grid);
        assert_eq!(*self, g.grid);
        let mut t = self.tensor_field();
        for k in 0..self.len() {
            t.xx[k] = g.x[k] * d.x[k];
            t.xy[k] = g.x[k] * d.y[k];
            t.yx[k] = g.y[k] * d.x[k];
            t.yy[k] = g.y[k] * d.y[k];
        }
        t
    }

    /// Row-wise tensor divergence `(div T)_i = d_j T_{ij}`. In bounded mode the
    /// rows take even ghosts (product-of-fields closure); the momentum update
    /// only uses this operator in periodic mode, where it is exactly minus the
    /// adjoint of [`Grid::grad_tensor`] on velocities.
    pub fn tensor_divergence(&self, t: &TensorField) -> VectorField {
        assert_eq!(*self, t.grid);
        let mut out = self.vector_field(FieldRole::Velocity);
        match self.bc_mode {
            BcMode::Periodic => {
                let (axx, _) = spectral_grad(self, &t.xx);
                let (_, axy) = spectral_grad(self, &t.xy);
                let (ayx, _) = spectral_grad(self, &t.yx);
                let (_, ayy) = spectral_grad(self, &t.yy);
                for k in 0..self.len() {
                    out.x[k] = axx[k] + axy[k];
                    out.y[k] = ayx[k] + ayy[k];
                }
            }
            BcMode::DirichletNeumann => {
                let axx = fd_deriv(self, &t.xx, 0, Ghost::Even);
                let axy = fd_deriv(self, &t.xy, 1, Ghost::Even);
                let ayx = fd_deriv(self, &t.yx, 0, Ghost::Even);
                let ayy = fd_deriv(self, &t.yy, 1, Ghost::Even);
                for k in 0..self.len() {
                    out.x[k] = axx[k] + axy[k];
                    out.y[k] = ayx[k] + ayy[k];
                }
            }
        }
        out
    }

    // -- energy norms --------------------------------------------------------

    /// Discrete `||grad v||^2`: spectral Parseval in periodic mode, the exact
    /// Dirichlet form of the compact Laplacian in bounded mode.
    pub fn grad_norm_sq(&self, v: &VectorField) -> f64 {
        assert_eq!(*self, v.grid);
        match self.bc_mode {
            BcMode::Periodic => {
                let g = self.grad_tensor(v);
                g.norm_sq()
            }
            BcMode::DirichletNeumann => {
                let ghost = v.role.ghost();
                (fd_dirichlet_form(self, &v.x, ghost) + fd_dirichlet_form(self, &v.y, ghost))
                    * self.quad_weight()
            }
        }
    }

    // -- dealiasing ----------------------------------------------------------

    /// 2/3-rule truncation (periodic mode); identity in bounded mode.
    pub fn dealias_scalar(&self, s: &ScalarField) -> ScalarField {
        match self.bc_mode {
            BcMode::DirichletNeumann => s.clone(),
            BcMode::Periodic => {
                ScalarField { grid: self.clone(), data: self.dealias_data(&s.data) }
            }
        }
    }

    pub fn dealias(&self, v: &VectorField) -> VectorField {
        match self.bc_mode {
            BcMode::DirichletNeumann => v.clone(),
            BcMode::Periodic => VectorField {
                grid: self.clone(),
                x: self.dealias_data(&v.x),
                y: self.dealias_data(&v.y),
                role: v.role,
            },
        }
    }

    /// Raw-component 2/3 truncation; identity in bounded mode.
    pub fn dealias_component(&self, data: &[f64]) -> Vec<f64> {
        match self.bc_mode {
            BcMode::DirichletNeumann => data.to_vec(),
            BcMode::Periodic => self.dealias_data(data),
        }
    }

    fn dealias_data(&self, data: &[f64]) -> Vec<f64> {
        let sp = self.spectral();
        let mut spec = sp.forward(data);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if !(sp.keep_x[ix] && sp.keep_y[iy]) {
                    spec[iy * self.nx + ix] = C::new(0.0, 0.0);
                }
            }
        }
        sp.inverse(spec)
    }

    // -- Leray projection ----------------------------------------------------

    /// Projects onto discretely divergence-free fields.
    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        self.leray_project_with_potential(v, None).expect("projection solve").0
    }

    /// Projection returning the pressure potential `phi` with `u = v - grad phi`.
    pub fn leray_project_with_potential(
        &self,
        v: &VectorField,
        warm: Option<&ScalarField>,
    ) -> Result<(VectorField, ScalarField)> {
        assert_eq!(*self, v.grid);
        match self.bc_mode {
            BcMode::Periodic => Ok(self.leray_spectral(v)),
            BcMode::DirichletNeumann => self.leray_pressure_poisson(v, warm),
        }
    }

    fn leray_spectral(&self, v: &VectorField) -> (VectorField, ScalarField) {
        let sp = self.spectral();
        let mut vx = sp.forward(&v.x);
        let mut vy = sp.forward(&v.y);
        let mut phi = vec![C::new(0.0, 0.0); self.len()];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (kx, ky) = (sp.kx_deriv[ix], sp.ky_deriv[iy]);
                let k2 = kx * kx + ky * ky;
                if k2 == 0.0 {
                    continue;
                }
                let k = iy * self.nx + ix;
                let kv = kx * vx[k] + ky * vy[k];
                vx[k] -= kx * kv / k2;
                vy[k] -= ky * kv / k2;
                // Removed part is grad(phi) with phi_k = -i (k . v)/|k|^2.
                phi[k] = C::new(0.0, -1.0) * kv / k2;
            }
        }
        let out = VectorField {
            grid: self.clone(),
            x: sp.inverse(vx),
            y: sp.inverse(vy),
            role: v.role,
        };
        (out, ScalarField { grid: self.clone(), data: sp.inverse(phi) })
    }

    /// Collocated pressure-Poisson projection: solves `A psi = div v` with
    /// `A = -div grad` (CG; symmetric PSD, constant nullspace) and returns
    /// `u = v + grad psi`, i.e. `phi = -psi`.
    fn leray_pressure_poisson(
        &self,
        v: &VectorField,
        warm: Option<&ScalarField>,
    ) -> Result<(VectorField, ScalarField)> {
        let mut b = self.divergence(v);
        let mean = b.mean();
        for val in &mut b.data {
            *val -= mean;
        }
        let apply_a = |s: &ScalarField| -> ScalarField {
            let g = self.gradient(s);
            let mut d = self.divergence(&g);
            for val in &mut d.data {
                *val = -*val;
            }
            d
        };
        let psi = cg_solve(self, apply_a, &b, warm, DIV_TOL * 0.1, 40 * (self.nx + self.ny))?;
        let g = self.gradient(&psi);
        let projected = v.add_scaled(1.0, &g);
        let mut phi = psi;
        for val in &mut phi.data {
            *val = -*val;
        }
        Ok((projected, phi))
    }
}

/// Plain conjugate gradient on scalar fields; `tol_inf` bounds the max-norm of
/// the residual, which for the projection is literally the divergence left in
/// the projected field.
fn cg_solve(
    grid: &Grid,
    apply_a: impl Fn(&ScalarField) -> ScalarField,
    b: &ScalarField,
    warm: Option<&ScalarField>,
    tol_inf: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    let mut x = warm.cloned().unwrap_or_else(|| grid.scalar_field());
    let ax = apply_a(&x);
    let mut r = b.clone();
    for k in 0..r.data.len() {
        r.data[k] -= ax.data[k];
    }
    if r.max_abs() <= tol_inf {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut rs = r.inner(&r);
    for _ in 0..max_iter {
        let ap = apply_a(&p);
        let pap = p.inner(&ap);
        if pap <= 0.0 {
            // Search direction degenerated into the nullspace.
            break;
        }
        let alpha = rs / pap;
        for k in 0..x.data.len() {
            x.data[k] += alpha * p.data[k];
            r.data[k] -= alpha * ap.data[k];
        }
        if r.max_abs() <= tol_inf {
            return Ok(x);
        }
        let rs_new = r.inner(&r);
        let beta = rs_new / rs;
        rs = rs_new;
        for k in 0..p.data.len() {
            p.data[k] = r.data[k] + beta * p.data[k];
        }
    }
    Err(Error::LinearSolve { residual: r.max_abs(), iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn torus(n: usize) -> Grid {
        Grid::new(n, n, BcMode::Periodic).unwrap()
    }

    fn boxg(n: usize) -> Grid {
        Grid::new(n, n, BcMode::DirichletNeumann).unwrap()
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        for g in [torus(16), boxg(16)] {
            let v = g.vector_from_fn(FieldRole::Director, |_, _| [0.7, -0.3]);
            let lap = g.laplacian(&v);
            assert!(lap.max_abs() < 1e-12, "mode {:?}", g.bc_mode);
        }
    }

    #[test]
    fn spectral_laplacian_is_exact_on_low_modes() {
        let g = torus(32);
        let v = g.vector_from_fn(FieldRole::Director, |x, _| [(TAU * x).sin(), 0.0]);
        let lap = g.laplacian(&v);
        let expect = g.vector_from_fn(FieldRole::Director, |x, _| {
            [-TAU * TAU * (TAU * x).sin(), 0.0]
        });
        let diff = lap.add_scaled(-1.0, &expect);
        assert!(diff.max_abs() < 1e-10, "defect {}", diff.max_abs());
    }

    #[test]
    fn fd_laplacian_exact_on_quadratics_interior_and_ghost_rows_match_convention() {
        let n = 16;
        let g = boxg(n);
        let v = g.vector_from_fn(FieldRole::Velocity, |x, _| [x * (1.0 - x), 0.0]);
        let lap = g.laplacian(&v);
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let got = lap.x[g.idx(ix, iy)];
                assert!((got + 2.0).abs() < 1e-9, "interior ({ix},{iy}) got {got}");
            }
        }
        // Boundary rows reproduce the odd-ghost stencil by hand.
        let at = |ix: usize, iy: usize| v.x[g.idx(ix, iy)];
        let iy = 0usize;
        for ix in 1..n - 1 {
            let ghost = -at(ix, 0); // odd reflection across y = 0
            let expect = (at(ix - 1, iy) - 2.0 * at(ix, iy) + at(ix + 1, iy)) / (g.hx * g.hx)
                + (ghost - 2.0 * at(ix, iy) + at(ix, iy + 1)) / (g.hy * g.hy);
            let got = lap.x[g.idx(ix, iy)];
            assert!((got - expect).abs() < 1e-10, "boundary row ({ix},{iy})");
        }
    }

    #[test]
    fn gradient_of_constant_vanishes_and_div_grad_equals_laplacian() {
        let g = torus(32);
        let c = g.scalar_from_fn(|_, _| 1.3);
        assert!(g.gradient(&c).max_abs() < 1e-13);

        let s = g.scalar_from_fn(|x, _| (TAU * x).sin());
        let dg = g.divergence(&g.gradient(&s));
        let lap = g.laplacian_scalar(&s);
        let worst = dg
            .data
            .iter()
            .zip(&lap.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-10, "div grad vs laplacian defect {worst}");
    }

    #[test]
    fn advect_examples() {
        let g = torus(32);
        let d = g.vector_from_fn(FieldRole::Director, |x, _| [(TAU * x).sin(), 0.0]);
        let zero_u = g.vector_field(FieldRole::Velocity);
        assert!(g.advect(&zero_u, &d).max_abs() < 1e-13);

        let const_d = g.vector_from_fn(FieldRole::Director, |_, _| [0.4, 0.6]);
        let u = g.vector_from_fn(FieldRole::Velocity, |_, y| [(TAU * y).sin(), 0.0]);
        assert!(g.advect(&u, &const_d).max_abs() < 1e-12);

        let ones = g.vector_from_fn(FieldRole::Velocity, |_, _| [1.0, 0.0]);
        let adv = g.advect(&ones, &d);
        let expect = g.vector_from_fn(FieldRole::Director, |x, _| [TAU * (TAU * x).cos(), 0.0]);
        assert!(adv.add_scaled(-1.0, &expect).max_abs() < 1e-10);
    }

    #[test]
    fn stretch_examples() {
        let g = torus(32);
        let u = g.vector_from_fn(FieldRole::Velocity, |x, _| [(TAU * x).sin(), 0.0]);
        let zero_u = g.vector_field(FieldRole::Velocity);
        let d_e1 = g.vector_from_fn(FieldRole::Director, |_, _| [1.0, 0.0]);
        assert!(g.stretch(&d_e1, &zero_u).max_abs() < 1e-13);

        let st = g.stretch(&d_e1, &u);
        let expect = g.vector_from_fn(FieldRole::Director, |x, _| [TAU * (TAU * x).cos(), 0.0]);
        assert!(st.add_scaled(-1.0, &expect).max_abs() < 1e-10);

        // d orthogonal to the only varying row of grad u.
        let d_e2 = g.vector_from_fn(FieldRole::Director, |_, _| [0.0, 1.0]);
        assert!(g.stretch(&d_e2, &u).max_abs() < 1e-12);
    }

    #[test]
    fn ericksen_stress_examples() {
        let g = torus(32);
        let const_d = g.vector_from_fn(FieldRole::Director, |_, _| [0.3, 0.9]);
        let t = g.ericksen_stress(&const_d);
        assert!(t.norm_sq() < 1e-24);

        let d = g.vector_from_fn(FieldRole::Director, |x, _| [(TAU * x).sin(), 0.0]);
        let t = g.ericksen_stress(&d);
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let (x, _) = g.coords(ix, iy);
                let expect = TAU * TAU * (TAU * x).cos().powi(2);
                let k = g.idx(ix, iy);
                assert!((t.xx[k] - expect).abs() < 1e-9);
                assert!(t.xy[k].abs() < 1e-10 && t.yx[k].abs() < 1e-10 && t.yy[k].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stretch_stress_cancellation_is_pointwise_exact() {
        let g = torus(16);
        let d = g.vector_from_fn(FieldRole::Director, |x, y| {
            [(TAU * x).sin() + 0.3, (TAU * y).cos()]
        });
        let gg = g.vector_from_fn(FieldRole::Director, |x, y| {
            [(TAU * (x + y)).cos(), (TAU * x).sin() * 0.7]
        });
        let u = g.vector_from_fn(FieldRole::Velocity, |x, y| {
            [(TAU * y).sin(), (TAU * x).sin()]
        });
        let zero_g = g.vector_field(FieldRole::Director);
        assert!(g.stretch_stress(&d, &zero_g).norm_sq() == 0.0);

        let lhs = g.stretch_stress(&d, &gg).inner(&g.grad_tensor(&u));
        let rhs = g.stretch(&d, &u).inner(&gg);
        assert!((lhs - rhs).abs() < 1e-13, "cancellation defect {}", (lhs - rhs).abs());
    }

    #[test]
    fn leray_annihilates_gradients_and_is_idempotent() {
        let g = torus(32);
        let s = g.scalar_from_fn(|x, y| (TAU * x).sin() * (TAU * 2.0 * y).cos());
        let gs = g.gradient(&s);
        let proj = g.leray_project(&gs);
        assert!(proj.max_abs() < 1e-11, "gradient should project to zero");

        let v = g.vector_from_fn(FieldRole::Velocity, |x, y| {
            [(TAU * y).sin() + 0.2 * (TAU * x).cos(), (TAU * x).sin()]
        });
        let p1 = g.leray_project(&v);
        assert!(g.divergence(&p1).max_abs() < DIV_TOL);
        let p2 = g.leray_project(&p1);
        assert!(p1.add_scaled(-1.0, &p2).max_abs() < 1e-12, "idempotent");
    }

    #[test]
    fn leray_pressure_poisson_bounded_mode() {
        let g = boxg(16);
        let v = g.vector_from_fn(FieldRole::Velocity, |x, y| {
            let wx = (std::f64::consts::PI * x).sin();
            let wy = (std::f64::consts::PI * y).sin();
            [wx * wx * (TAU * y).cos(), wy * wy * (TAU * x).sin() * 0.6]
        });
        let (p1, _phi) = g.leray_project_with_potential(&v, None).unwrap();
        assert!(g.divergence(&p1).max_abs() < DIV_TOL, "div after projection");
        let p2 = g.leray_project(&p1);
        assert!(p1.add_scaled(-1.0, &p2).max_abs() < 1e-9, "idempotent to solver tol");
    }

    #[test]
    fn bounded_gradient_is_minus_transpose_of_divergence() {
        // <grad s, v> = -<s, div v> exactly with even/odd ghost pairing.
        let g = boxg(12);
        let s = g.scalar_from_fn(|x, y| (3.1 * x + 1.7 * y * y).sin());
        let v = g.vector_from_fn(FieldRole::Velocity, |x, y| {
            [(2.2 * y + 0.3).cos() * x, (1.3 * x).sin() * (y - 0.4)]
        });
        let lhs = g.gradient(&s).inner(&v);
        let rhs = -s.inner(&g.divergence(&v));
        assert!((lhs - rhs).abs() < 1e-13, "adjointness defect {}", (lhs - rhs).abs());
    }

    #[test]
    fn bounded_dirichlet_form_matches_compact_laplacian() {
        let g = boxg(12);
        for role in [FieldRole::Velocity, FieldRole::Director] {
            let v = g.vector_from_fn(role, |x, y| [(2.9 * x).sin() * y, (1.1 + x * y).cos()]);
            let q = g.grad_norm_sq(&v);
            let pair = -v.inner(&g.laplacian(&v));
            assert!((q - pair).abs() < 1e-12, "{role:?}: form {q} vs pairing {pair}");
        }
    }
}

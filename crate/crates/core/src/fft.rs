//! Fast transforms backing the discrete operators.
//!
//! Periodic mode uses plain complex 2-D FFTs (`rustfft`). The bounded mode
//! needs cosine/sine transforms: the cell-centered compact Laplacians with
//! even (Neumann) and odd (Dirichlet) ghost closures are diagonalized by
//! DCT-II and DST-II respectively, which gives exact direct Helmholtz solves.
//! Both are built on length-2n complex FFTs of the even/odd extension.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

type C = Complex<f64>;

/// FFT plans and wavenumber tables for the periodic unit torus.
pub struct SpectralTransforms {
    pub nx: usize,
    pub ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// Signed angular wavenumbers `2 pi k~` per x index (Nyquist kept).
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// First-derivative symbols: signed wavenumbers with the Nyquist bin
    /// zeroed, the standard collocation choice keeping d/dx skew-adjoint.
    pub kx_deriv: Vec<f64>,
    pub ky_deriv: Vec<f64>,
    /// 2/3-rule dealias masks per axis index.
    pub keep_x: Vec<bool>,
    pub keep_y: Vec<bool>,
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralTransforms {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let two_pi = 2.0 * std::f64::consts::PI;
        let ks = |n: usize| -> (Vec<f64>, Vec<f64>, Vec<bool>) {
            let mut full = Vec::with_capacity(n);
            let mut deriv = Vec::with_capacity(n);
            let mut keep = Vec::with_capacity(n);
            let cutoff = (n / 3) as i64;
            for i in 0..n {
                let s = signed_index(i, n);
                full.push(two_pi * s as f64);
                let nyquist = n % 2 == 0 && i == n / 2;
                deriv.push(if nyquist { 0.0 } else { two_pi * s as f64 });
                keep.push(s.abs() <= cutoff);
            }
            (full, deriv, keep)
        };
        let (kx, kx_deriv, keep_x) = ks(nx);
        let (ky, ky_deriv, keep_y) = ks(ny);
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            kx,
            ky,
            kx_deriv,
            ky_deriv,
            keep_x,
            keep_y,
        }
    }

    /// Forward 2-D FFT of a real field (row-major, x fastest).
    pub fn forward(&self, data: &[f64]) -> Vec<C> {
        assert_eq!(data.len(), self.nx * self.ny);
        let mut buf: Vec<C> = data.iter().map(|&v| C::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        buf
    }

    /// Inverse 2-D FFT; normalizes and returns the real part.
    pub fn inverse(&self, mut spec: Vec<C>) -> Vec<f64> {
        self.fft2(&mut spec, true);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    fn fft2(&self, buf: &mut [C], inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        for row in buf.chunks_exact_mut(self.nx) {
            fx.process(row);
        }
        let mut col = vec![C::new(0.0, 0.0); self.ny];
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                col[iy] = buf[iy * self.nx + ix];
            }
            fy.process(&mut col);
            for iy in 0..self.ny {
                buf[iy * self.nx + ix] = col[iy];
            }
        }
    }
}

/// Which axis a 1-D transform sweeps over.
#[derive(Clone, Copy, PartialEq)]
enum Axis {
    X,
    Y,
}

/// DCT-II / DST-II machinery for the cell-centered bounded grid.
pub struct CosSinTransforms {
    pub nx: usize,
    pub ny: usize,
    fwd_2x: Arc<dyn Fft<f64>>,
    inv_2x: Arc<dyn Fft<f64>>,
    fwd_2y: Arc<dyn Fft<f64>>,
    inv_2y: Arc<dyn Fft<f64>>,
    /// Quarter-sample phase tables `exp(-i pi k / (2n))`, k = 0..n-1.
    phase_x: Vec<C>,
    phase_y: Vec<C>,
}

impl CosSinTransforms {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let phases = |n: usize| -> Vec<C> {
            (0..n)
                .map(|k| C::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64)))
                .collect()
        };
        Self {
            nx,
            ny,
            fwd_2x: planner.plan_fft_forward(2 * nx),
            inv_2x: planner.plan_fft_inverse(2 * nx),
            fwd_2y: planner.plan_fft_forward(2 * ny),
            inv_2y: planner.plan_fft_inverse(2 * ny),
            phase_x: phases(nx),
            phase_y: phases(ny),
        }
    }

    fn plans(&self, axis: Axis) -> (usize, &Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>, &[C]) {
        match axis {
            Axis::X => (self.nx, &self.fwd_2x, &self.inv_2x, &self.phase_x),
            Axis::Y => (self.ny, &self.fwd_2y, &self.inv_2y, &self.phase_y),
        }
    }

    /// DCT-II along one axis of a 2-D field: `X_k = sum_i x_i cos(pi k (i+1/2)/n)`.
    fn dct2_axis(&self, data: &mut [f64], axis: Axis) {
        let (n, fwd, _, phase) = self.plans(axis);
        self.sweep(data, axis, |line, buf| {
            for i in 0..n {
                buf[i] = C::new(line[i], 0.0);
                buf[2 * n - 1 - i] = C::new(line[i], 0.0);
            }
            fwd.process(buf);
            for k in 0..n {
                line[k] = 0.5 * (phase[k] * buf[k]).re;
            }
        });
    }

    /// Exact inverse of [`dct2_axis`].
    fn dct3_axis(&self, data: &mut [f64], axis: Axis) {
        let (n, _, inv, phase) = self.plans(axis);
        self.sweep(data, axis, |line, buf| {
            buf[0] = C::new(2.0 * line[0], 0.0);
            for k in 1..n {
                let y = 2.0 * line[k] * phase[k].conj();
                buf[k] = y;
                buf[2 * n - k] = y.conj();
            }
            buf[n] = C::new(0.0, 0.0);
            inv.process(buf);
            let scale = 1.0 / (2 * n) as f64;
            for i in 0..n {
                line[i] = buf[i].re * scale;
            }
        });
    }

    /// DST-II along one axis: `S_m = sum_i x_i sin(pi (m+1) (i+1/2)/n)`, m = 0..n-1.
    fn dst2_axis(&self, data: &mut [f64], axis: Axis) {
        let (n, fwd, _, phase) = self.plans(axis);
        self.sweep(data, axis, |line, buf| {
            for i in 0..n {
                buf[i] = C::new(line[i], 0.0);
                buf[2 * n - 1 - i] = C::new(-line[i], 0.0);
            }
            fwd.process(buf);
            // S_k = Re((i/2) e^{-i pi k/(2n)} Y_k), modes k = 1..n.
            for m in 0..n {
                let k = m + 1;
                let ph = if k < n {
                    phase[k]
                } else {
                    C::from_polar(1.0, -std::f64::consts::PI * 0.5)
                };
                line[m] = 0.5 * (C::new(0.0, 1.0) * ph * buf[k]).re;
            }
        });
    }

    /// Exact inverse of [`dst2_axis`].
    fn dst3_axis(&self, data: &mut [f64], axis: Axis) {
        let (n, _, inv, phase) = self.plans(axis);
        self.sweep(data, axis, |line, buf| {
            buf[0] = C::new(0.0, 0.0);
            for m in 0..n - 1 {
                let k = m + 1;
                let y = C::new(0.0, -2.0) * phase[k].conj() * line[m];
                buf[k] = y;
                buf[2 * n - k] = y.conj();
            }
            buf[n] = C::new(2.0 * line[n - 1], 0.0);
            inv.process(buf);
            let scale = 1.0 / (2 * n) as f64;
            for i in 0..n {
                line[i] = buf[i].re * scale;
            }
        });
    }

    /// Applies `op` to every grid line along `axis`, with a scratch complex
    /// buffer of length 2n.
    fn sweep<F: FnMut(&mut [f64], &mut [C])>(&self, data: &mut [f64], axis: Axis, mut op: F) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(data.len(), nx * ny);
        match axis {
            Axis::X => {
                let mut buf = vec![C::new(0.0, 0.0); 2 * nx];
                for row in data.chunks_exact_mut(nx) {
                    op(row, &mut buf);
                }
            }
            Axis::Y => {
                let mut buf = vec![C::new(0.0, 0.0); 2 * ny];
                let mut line = vec![0.0; ny];
                for ix in 0..nx {
                    for iy in 0..ny {
                        line[iy] = data[iy * nx + ix];
                    }
                    op(&mut line, &mut buf);
                    for iy in 0..ny {
                        data[iy * nx + ix] = line[iy];
                    }
                }
            }
        }
    }

    /// Eigenvalues of minus the compact 1-D Neumann Laplacian, DCT-II ordering.
    pub fn neumann_eigenvalues(n: usize, h: f64) -> Vec<f64> {
        (0..n)
            .map(|k| 2.0 / (h * h) * (1.0 - (std::f64::consts::PI * k as f64 / n as f64).cos()))
            .collect()
    }

    /// Eigenvalues of minus the compact 1-D Dirichlet Laplacian, DST-II ordering
    /// (entry m corresponds to mode m+1).
    pub fn dirichlet_eigenvalues(n: usize, h: f64) -> Vec<f64> {
        (0..n)
            .map(|m| {
                2.0 / (h * h) * (1.0 - (std::f64::consts::PI * (m + 1) as f64 / n as f64).cos())
            })
            .collect()
    }

    /// Direct solve of `(c I - a Lap_N) x = b` on the cell-centered grid with
    /// even ghost closure. Requires `c + a lambda > 0` for every eigenvalue.
    pub fn helmholtz_solve_neumann(&self, b: &[f64], c: f64, a: f64, hx: f64, hy: f64) -> Vec<f64> {
        let lx = Self::neumann_eigenvalues(self.nx, hx);
        let ly = Self::neumann_eigenvalues(self.ny, hy);
        let mut w = b.to_vec();
        self.dct2_axis(&mut w, Axis::X);
        self.dct2_axis(&mut w, Axis::Y);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                w[iy * self.nx + ix] /= c + a * (lx[ix] + ly[iy]);
            }
        }
        self.dct3_axis(&mut w, Axis::Y);
        self.dct3_axis(&mut w, Axis::X);
        w
    }

    /// Direct solve of `(c I - a Lap_D) x = b` with odd ghost closure.
    pub fn helmholtz_solve_dirichlet(
        &self,
        b: &[f64],
        c: f64,
        a: f64,
        hx: f64,
        hy: f64,
    ) -> Vec<f64> {
        let lx = Self::dirichlet_eigenvalues(self.nx, hx);
        let ly = Self::dirichlet_eigenvalues(self.ny, hy);
        let mut w = b.to_vec();
        self.dst2_axis(&mut w, Axis::X);
        self.dst2_axis(&mut w, Axis::Y);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                w[iy * self.nx + ix] /= c + a * (lx[ix] + ly[iy]);
            }
        }
        self.dst3_axis(&mut w, Axis::Y);
        self.dst3_axis(&mut w, Axis::X);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dct2(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        v * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos()
                    })
                    .sum()
            })
            .collect()
    }

    fn naive_dst2(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                let k = (m + 1) as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        v * (std::f64::consts::PI * k * (i as f64 + 0.5) / n as f64).sin()
                    })
                    .sum()
            })
            .collect()
    }

    fn test_line(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * i + 3) as f64 * 0.37).sin() + 0.2 * i as f64).collect()
    }

    #[test]
    fn dct2_matches_naive_and_roundtrips() {
        for n in [8usize, 12, 16] {
            let t = CosSinTransforms::new(n, 4);
            let line = test_line(n);
            // Build a field whose rows are all `line`.
            let mut field: Vec<f64> = (0..4).flat_map(|_| line.clone()).collect();
            let mut spec = field.clone();
            t.dct2_axis(&mut spec, Axis::X);
            let expect = naive_dct2(&line);
            for (a, b) in spec[..n].iter().zip(&expect) {
                assert!((a - b).abs() < 1e-11, "dct2 {a} vs naive {b}");
            }
            t.dct3_axis(&mut spec, Axis::X);
            for (a, b) in spec.iter().zip(&field) {
                assert!((a - b).abs() < 1e-12, "dct roundtrip {a} vs {b}");
            }
            // Same along y.
            let ty = CosSinTransforms::new(4, n);
            let mut fy: Vec<f64> = vec![0.0; 4 * n];
            for iy in 0..n {
                for ix in 0..4 {
                    fy[iy * 4 + ix] = line[iy];
                }
            }
            field = fy.clone();
            ty.dct2_axis(&mut fy, Axis::Y);
            ty.dct3_axis(&mut fy, Axis::Y);
            for (a, b) in fy.iter().zip(&field) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dst2_matches_naive_and_roundtrips() {
        for n in [8usize, 12, 16] {
            let t = CosSinTransforms::new(n, 3);
            let line = test_line(n);
            let field: Vec<f64> = (0..3).flat_map(|_| line.clone()).collect();
            let mut spec = field.clone();
            t.dst2_axis(&mut spec, Axis::X);
            let expect = naive_dst2(&line);
            for (a, b) in spec[..n].iter().zip(&expect) {
                assert!((a - b).abs() < 1e-11, "dst2 {a} vs naive {b}");
            }
            t.dst3_axis(&mut spec, Axis::X);
            for (a, b) in spec.iter().zip(&field) {
                assert!((a - b).abs() < 1e-12, "dst roundtrip {a} vs {b}");
            }
        }
    }

    #[test]
    fn helmholtz_neumann_inverts_the_ghost_stencil()
    {
        let (nx, ny) = (12, 8);
        let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let t = CosSinTransforms::new(nx, ny);
        let b: Vec<f64> = (0..nx * ny).map(|i| ((i * 7 + 1) as f64 * 0.61).sin()).collect();
        let a = 0.037;
        let x = t.helmholtz_solve_neumann(&b, 1.0, a, hx, hy);
        // Verify (I - a Lap_N) x = b with explicit even-ghost differences.
        let at = |ix: i64, iy: i64| -> f64 {
            let cx = ix.clamp(0, nx as i64 - 1) as usize;
            let cy = iy.clamp(0, ny as i64 - 1) as usize;
            x[cy * nx + cx]
        };
        for iy in 0..ny as i64 {
            for ix in 0..nx as i64 {
                let lap = (at(ix - 1, iy) - 2.0 * at(ix, iy) + at(ix + 1, iy)) / (hx * hx)
                    + (at(ix, iy - 1) - 2.0 * at(ix, iy) + at(ix, iy + 1)) / (hy * hy);
                let lhs = at(ix, iy) - a * lap;
                let rhs = b[iy as usize * nx + ix as usize];
                assert!((lhs - rhs).abs() < 1e-11, "residual {} at ({ix},{iy})", lhs - rhs);
            }
        }
    }

    #[test]
    fn helmholtz_dirichlet_inverts_the_ghost_stencil() {
        let (nx, ny) = (8, 12);
        let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let t = CosSinTransforms::new(nx, ny);
        let b: Vec<f64> = (0..nx * ny).map(|i| ((i * 5 + 2) as f64 * 0.43).cos()).collect();
        let a = 0.11;
        let x = t.helmholtz_solve_dirichlet(&b, 1.0, a, hx, hy);
        // Odd ghosts: value reflects with sign flip across the wall.
        let at = |ix: i64, iy: i64| -> f64 {
            let (sx, cx) = if ix < 0 {
                (-1.0, 0)
            } else if ix >= nx as i64 {
                (-1.0, nx - 1)
            } else {
                (1.0, ix as usize)
            };
            let (sy, cy) = if iy < 0 {
                (-1.0, 0)
            } else if iy >= ny as i64 {
                (-1.0, ny - 1)
            } else {
                (1.0, iy as usize)
            };
            sx * sy * x[cy * nx + cx]
        };
        for iy in 0..ny as i64 {
            for ix in 0..nx as i64 {
                let lap = (at(ix - 1, iy) - 2.0 * at(ix, iy) + at(ix + 1, iy)) / (hx * hx)
                    + (at(ix, iy - 1) - 2.0 * at(ix, iy) + at(ix, iy + 1)) / (hy * hy);
                let lhs = at(ix, iy) - a * lap;
                let rhs = b[iy as usize * nx + ix as usize];
                assert!((lhs - rhs).abs() < 1e-11, "residual {} at ({ix},{iy})", lhs - rhs);
            }
        }
    }

    #[test]
    fn spectral_roundtrip_and_symbol() {
        let (nx, ny) = (16, 8);
        let t = SpectralTransforms::new(nx, ny);
        let field: Vec<f64> = (0..nx * ny).map(|i| ((i as f64) * 0.77).sin()).collect();
        let spec = t.forward(&field);
        let back = t.inverse(spec);
        for (a, b) in back.iter().zip(&field) {
            assert!((a - b).abs() < 1e-12);
        }
        // Nyquist bins of the derivative symbol are zeroed.
        assert_eq!(t.kx_deriv[nx / 2], 0.0);
        assert_eq!(t.ky_deriv[ny / 2], 0.0);
        assert!((t.kx[1] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}

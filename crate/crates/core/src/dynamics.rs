//! Time integration of the coupled velocity/director system with per-step
//! energy accounting.
//!
//! One step is a first-order semi-implicit splitting. Director: implicit
//! Laplacian, explicit bulk force and transport,
//! `(d+ - d)/dt + u.grad d - delta d.grad u = L Lap d+ - f(d)`. Velocity:
//! implicit viscosity, explicit skew-form convection and coupling forces,
//! then Leray projection; the pressure is recovered from the projection. The
//! elastic force is applied in the pointwise-adjoint form
//! `-(grad d)^T (L Lap d+ - f(d))` and the stretching force as the divergence
//! of the stretching stress, so the transport and stretching energy exchanges
//! cancel between the two equations to round-off and the signed budget defect
//! `EE(t+) - EE(t) + dt D(t+)` stays O(dt^2) per accepted step. The energy law
//! is monitored, never enforced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BcMode, FieldRole, Grid, ScalarField, VectorField};
use crate::ops::DIV_TOL;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Viscosity (nu > 0).
    pub nu: f64,
    /// Elastic constant (the coefficient L > 0 of the director Laplacian).
    pub elastic: f64,
    /// Stretching switch (delta >= 0; delta > 0 requires periodic boundaries).
    pub delta: f64,
    pub potential: PotentialSpec,
}

impl ModelParams {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("params.nu must be positive, got {}", self.nu)));
        }
        if !(self.elastic > 0.0 && self.elastic.is_finite()) {
            return Err(Error::Config(format!("params.L must be positive, got {}", self.elastic)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "params.delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if self.delta > 0.0 && grid.bc_mode != BcMode::Periodic {
            return Err(Error::Config(
                "params.delta > 0 requires grid.bc_mode = periodic: with Dirichlet velocity \
                 boundaries the stretching estimates are open and the scheme does not support it"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub d: VectorField,
    /// Pressure recovered from the last projection; diagnostic only.
    pub p: ScalarField,
}

impl State {
    pub fn new(grid: &Grid, u: VectorField, d: VectorField) -> Self {
        assert_eq!(u.role, FieldRole::Velocity);
        assert_eq!(d.role, FieldRole::Director);
        Self { t: 0.0, u, d, p: grid.scalar_field() }
    }

    pub fn grid(&self) -> &Grid {
        &self.d.grid
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.d.is_finite() && self.p.is_finite()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
}

/// Total energy `EE = 1/2 ||u||^2 + 1/2 int (L |grad d|^2 + psi_hat(|d|^2) - |d|^2)`.
pub fn total_energy(s: &State, p: &ModelParams) -> EnergyBreakdown {
    let grid = s.grid();
    let kinetic = 0.5 * s.u.norm_sq();
    let elastic = 0.5 * p.elastic * grid.grad_norm_sq(&s.d);
    let w = grid.quad_weight();
    let bulk = s
        .d
        .x
        .iter()
        .zip(&s.d.y)
        .map(|(&a, &b)| p.potential.bulk_density([a, b]))
        .sum::<f64>()
        * w;
    EnergyBreakdown { kinetic, elastic, bulk, total: kinetic + elastic + bulk }
}

/// Stationary residual field `-L Lap d + f(d)`.
pub fn residual_field(d: &VectorField, p: &ModelParams) -> VectorField {
    let grid = &d.grid;
    let lap = grid.laplacian(d);
    let mut out = grid.vector_field(FieldRole::Director);
    for k in 0..grid.len() {
        let f = p.potential.f(d.at(k));
        out.x[k] = -p.elastic * lap.x[k] + f[0];
        out.y[k] = -p.elastic * lap.y[k] + f[1];
    }
    out
}

/// Dissipation functional `D = ||-L Lap d + f(d)||^2 + nu ||grad u||^2`.
pub fn dissipation(s: &State, p: &ModelParams) -> f64 {
    residual_field(&s.d, p).norm_sq() + p.nu * s.grid().grad_norm_sq(&s.u)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub total_energy: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub dissipation: f64,
    /// `|EE(t+) - EE(t) + dt D(t+)|` for the step ending at `t`.
    pub budget_defect: f64,
    pub max_abs_d: f64,
    pub grad_u_norm: f64,
    /// `|| -L Lap d + f(d) ||`.
    pub residual_norm: f64,
}

impl StepReport {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.dt,
            self.total_energy,
            self.kinetic,
            self.elastic,
            self.bulk,
            self.dissipation,
            self.budget_defect,
            self.max_abs_d,
            self.grad_u_norm,
            self.residual_norm,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn for_state(s: &State, p: &ModelParams, dt: f64, prev_total: Option<f64>) -> Self {
        let e = total_energy(s, p);
        let res = residual_field(&s.d, p);
        let grad_u_sq = s.grid().grad_norm_sq(&s.u);
        let diss = res.norm_sq() + p.nu * grad_u_sq;
        let defect = prev_total.map_or(0.0, |e0| (e.total - e0 + dt * diss).abs());
        StepReport {
            t: s.t,
            dt,
            total_energy: e.total,
            kinetic: e.kinetic,
            elastic: e.elastic,
            bulk: e.bulk,
            dissipation: diss,
            budget_defect: defect,
            max_abs_d: s.d.max_abs(),
            grad_u_norm: grad_u_sq.sqrt(),
            residual_norm: res.norm_sq().sqrt(),
        }
    }
}

/// Largest admissible step: `dt * advective rate <= 0.5` and
/// `dt * max reaction <= 0.5`. Returns the bound and which limit is active.
pub fn cfl_dt_max(s: &State, p: &ModelParams) -> (f64, &'static str) {
    let grid = s.grid();
    let mut adv: f64 = 0.0;
    for k in 0..grid.len() {
        adv = adv.max(s.u.x[k].abs() / grid.hx + s.u.y[k].abs() / grid.hy);
    }
    if p.delta > 0.0 {
        let gu = grid.grad_tensor(&s.u);
        let mut stretch: f64 = 0.0;
        for k in 0..grid.len() {
            let fro = (gu.xx[k] * gu.xx[k]
                + gu.xy[k] * gu.xy[k]
                + gu.yx[k] * gu.yx[k]
                + gu.yy[k] * gu.yy[k])
                .sqrt();
            stretch = stretch.max(fro);
        }
        adv += p.delta * stretch;
    }
    let mut reaction: f64 = 0.0;
    for k in 0..grid.len() {
        let d = s.d.at(k);
        let q = d[0] * d[0] + d[1] * d[1];
        reaction =
            reaction.max((p.potential.psi(q) - 1.0).abs() + 2.0 * p.potential.psi_prime(q) * q);
    }
    let dt_adv = 0.5 / adv.max(1e-300);
    let dt_reac = 0.5 / reaction.max(1e-300);
    if dt_adv < dt_reac {
        (dt_adv, "advective")
    } else {
        (dt_reac, "reaction")
    }
}

/// Scratch carried across steps inside a run (pressure warm start).
#[derive(Default)]
struct StepScratch {
    psi_warm: Option<ScalarField>,
}

/// Advances one semi-implicit step. Rejects `dt` beyond the CFL bound and
/// flags non-finite values.
pub fn step(s: &State, p: &ModelParams, dt: f64) -> Result<(State, StepReport)> {
    step_full(s, p, dt, false, &mut StepScratch::default())
}

fn helmholtz_vec(grid: &Grid, rhs: &VectorField, a: f64) -> VectorField {
    // Solves (I - a Lap) x = rhs with the role's boundary closure.
    let mut out = grid.vector_field(rhs.role);
    match grid.bc_mode {
        BcMode::Periodic => {
            let sp = grid.spectral();
            let solve = |data: &[f64]| -> Vec<f64> {
                let mut spec = sp.forward(data);
                for iy in 0..grid.ny {
                    for ix in 0..grid.nx {
                        let k2 = sp.kx[ix] * sp.kx[ix] + sp.ky[iy] * sp.ky[iy];
                        spec[iy * grid.nx + ix] /= 1.0 + a * k2;
                    }
                }
                sp.inverse(spec)
            };
            out.x = solve(&rhs.x);
            out.y = solve(&rhs.y);
        }
        BcMode::DirichletNeumann => {
            let cs = grid.cossin();
            let (hx, hy) = (grid.hx, grid.hy);
            let solve = |data: &[f64]| match rhs.role {
                FieldRole::Director => cs.helmholtz_solve_neumann(data, 1.0, a, hx, hy),
                FieldRole::Velocity => cs.helmholtz_solve_dirichlet(data, 1.0, a, hx, hy),
            };
            out.x = solve(&rhs.x);
            out.y = solve(&rhs.y);
        }
    }
    out
}

fn step_full(
    s: &State,
    p: &ModelParams,
    dt: f64,
    director_only: bool,
    scratch: &mut StepScratch,
) -> Result<(State, StepReport)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let (dt_max, which) = cfl_dt_max(s, p);
    if dt > dt_max {
        return Err(Error::CflViolation { dt, dt_max, which });
    }
    let grid = s.grid().clone();
    let n = grid.len();
    let energy_before = total_energy(s, p).total;

    // -- director update -----------------------------------------------------
    let grad_d = grid.grad_tensor(&s.d);
    let mut f_d = grid.vector_field(FieldRole::Director);
    for k in 0..n {
        let f = p.potential.f(s.d.at(k));
        f_d.x[k] = f[0];
        f_d.y[k] = f[1];
    }
    let f_d = grid.dealias(&f_d);

    let mut transport = grid.vector_field(FieldRole::Director);
    for k in 0..n {
        transport.x[k] = s.u.x[k] * grad_d.xx[k] + s.u.y[k] * grad_d.xy[k];
        transport.y[k] = s.u.x[k] * grad_d.yx[k] + s.u.y[k] * grad_d.yy[k];
    }
    let transport = grid.dealias(&transport);

    let stretching = if p.delta > 0.0 {
        let st = grid.stretch(&s.d, &s.u);
        Some(grid.dealias(&st))
    } else {
        None
    };

    let mut rhs_d = s.d.clone();
    for k in 0..n {
        rhs_d.x[k] += dt * (-transport.x[k] - f_d.x[k]);
        rhs_d.y[k] += dt * (-transport.y[k] - f_d.y[k]);
    }
    if let Some(st) = &stretching {
        for k in 0..n {
            rhs_d.x[k] += dt * p.delta * st.x[k];
            rhs_d.y[k] += dt * p.delta * st.y[k];
        }
    }
    let d_plus = grid.dealias(&helmholtz_vec(&grid, &rhs_d, dt * p.elastic));

    // Scheme-applied residual g~ = L Lap d+ - f(d); its dealiased copy is the
    // one the velocity forces must see for the energy pairing to cancel.
    let lap_d_plus = grid.laplacian(&d_plus);
    let mut g_tilde = grid.vector_field(FieldRole::Director);
    for k in 0..n {
        g_tilde.x[k] = p.elastic * lap_d_plus.x[k] - f_d.x[k];
        g_tilde.y[k] = p.elastic * lap_d_plus.y[k] - f_d.y[k];
    }
    let g_t = grid.dealias(&g_tilde);

    // -- velocity update ------------------------------------------------------
    let (u_plus, pressure) = if director_only {
        (s.u.clone(), grid.scalar_field())
    } else {
        let grad_u = grid.grad_tensor(&s.u);
        // Skew-symmetric convection: 1/2 (u.grad u + div(u x u)).
        let mut conv = grid.vector_field(FieldRole::Velocity);
        for k in 0..n {
            conv.x[k] = s.u.x[k] * grad_u.xx[k] + s.u.y[k] * grad_u.xy[k];
            conv.y[k] = s.u.x[k] * grad_u.yx[k] + s.u.y[k] * grad_u.yy[k];
        }
        let conv_a = grid.dealias(&conv);
        let mut uu = grid.tensor_field();
        for k in 0..n {
            uu.xx[k] = s.u.x[k] * s.u.x[k];
            uu.xy[k] = s.u.x[k] * s.u.y[k];
            uu.yx[k] = uu.xy[k];
            uu.yy[k] = s.u.y[k] * s.u.y[k];
        }
        let uu = match grid.bc_mode {
            BcMode::Periodic => {
                let mut t = uu;
                t.xx = grid.dealias_component(&t.xx);
                t.xy = grid.dealias_component(&t.xy);
                t.yx = t.xy.clone();
                t.yy = grid.dealias_component(&t.yy);
                t
            }
            BcMode::DirichletNeumann => uu,
        };
        let conv_b = grid.tensor_divergence(&uu);

        // Elastic coupling force in pointwise-adjoint form: -(grad d)^T g~.
        let mut force = grid.vector_field(FieldRole::Velocity);
        for k in 0..n {
            force.x[k] = -(grad_d.xx[k] * g_t.x[k] + grad_d.yx[k] * g_t.y[k]);
            force.y[k] = -(grad_d.xy[k] * g_t.x[k] + grad_d.yy[k] * g_t.y[k]);
        }
        let mut force = grid.dealias(&force);
        if p.delta > 0.0 {
            let stress = grid.stretch_stress(&s.d, &g_t);
            let stress = match grid.bc_mode {
                BcMode::Periodic => {
                    let mut t = stress;
                    t.xx = grid.dealias_component(&t.xx);
                    t.xy = grid.dealias_component(&t.xy);
                    t.yx = grid.dealias_component(&t.yx);
                    t.yy = grid.dealias_component(&t.yy);
                    t
                }
                BcMode::DirichletNeumann => stress,
            };
            let div_stress = grid.tensor_divergence(&stress);
            force = force.add_scaled(-p.delta, &div_stress);
        }

        let mut rhs_u = s.u.clone();
        for k in 0..n {
            rhs_u.x[k] += dt * (-0.5 * (conv_a.x[k] + conv_b.x[k]) + force.x[k]);
            rhs_u.y[k] += dt * (-0.5 * (conv_a.y[k] + conv_b.y[k]) + force.y[k]);
        }
        let u_star = helmholtz_vec(&grid, &rhs_u, dt * p.nu);
        let warm = scratch.psi_warm.as_ref();
        let (u_proj, phi) = grid.leray_project_with_potential(&u_star, warm)?;
        if grid.bc_mode == BcMode::DirichletNeumann {
            let mut psi = phi.clone();
            for v in &mut psi.data {
                *v = -*v;
            }
            scratch.psi_warm = Some(psi);
        }
        let u_proj = grid.dealias(&u_proj);
        let mut pres = phi;
        for v in &mut pres.data {
            *v /= dt;
        }
        (u_proj, pres)
    };

    let new_state = State { t: s.t + dt, u: u_plus, d: d_plus, p: pressure };
    if !new_state.is_finite() {
        return Err(Error::Blowup { t: new_state.t, what: "non-finite value in the state".into() });
    }
    let report = StepReport::for_state(&new_state, p, dt, Some(energy_before));
    if !report.is_finite() {
        return Err(Error::Blowup { t: new_state.t, what: "non-finite value in the step report".into() });
    }
    Ok((new_state, report))
}

// ---------------------------------------------------------------------------
// run schedule and trajectory log
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    /// Fixed step; rejected if it ever exceeds the CFL bound.
    Fixed(f64),
    /// `dt = safety * dt_max(state)` recomputed every step.
    Auto { safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Dissipation threshold (D_stop).
    pub d_stop: f64,
    /// Director drift threshold over the window (d_stop in the model docs).
    pub drift_stop: f64,
    /// Window length in time units.
    pub t_win: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { d_stop: 1e-10, drift_stop: 1e-8, t_win: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    /// budget_tol = max(factor * C_hat * dt^2, floor).
    pub factor: f64,
    pub floor: f64,
    /// Steps of the calibration pre-pass estimating C_hat.
    pub calibration_steps: usize,
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        Self { factor: 10.0, floor: 1e-12, calibration_steps: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSchedule {
    pub dt: DtPolicy,
    pub t_end: f64,
    /// Log a report every `log_every` accepted steps (>= 1).
    pub log_every: usize,
    /// Keep a full state snapshot every `snapshot_every` accepted steps;
    /// 0 keeps only the final state.
    pub snapshot_every: usize,
    pub stopping: StoppingRule,
    pub budget: BudgetPolicy,
    pub stop_on_convergence: bool,
    /// Freeze u = 0 and integrate the director gradient flow only.
    pub director_only: bool,
}

impl RunSchedule {
    pub fn fixed_dt(dt: f64, t_end: f64) -> Self {
        Self {
            dt: DtPolicy::Fixed(dt),
            t_end,
            log_every: 1,
            snapshot_every: 0,
            stopping: StoppingRule::default(),
            budget: BudgetPolicy::default(),
            stop_on_convergence: true,
            director_only: false,
        }
    }

    pub fn auto_dt(safety: f64, t_end: f64) -> Self {
        Self { dt: DtPolicy::Auto { safety }, ..Self::fixed_dt(0.0, t_end) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Termination {
    Converged,
    ReachedTEnd,
    Aborted(String),
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: VectorField,
    pub d: VectorField,
    pub p: ScalarField,
}

/// Run-level constants the post-hoc diagnostics need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub delta: f64,
    pub nu: f64,
    pub elastic: f64,
    pub d0_max_abs: f64,
    pub budget_tol: f64,
    pub budget_coeff: f64,
    pub dt_nominal: f64,
    pub stopping: StoppingRule,
    pub director_only: bool,
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub meta: RunMeta,
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
}

impl TrajectoryLog {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Sum of per-step |budget defect| over the whole run.
    pub fn total_budget_defect(&self) -> f64 {
        self.reports.iter().map(|r| r.budget_defect).sum()
    }
}

pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub final_state: State,
}

fn pick_dt(policy: DtPolicy, s: &State, p: &ModelParams, remaining: f64) -> Result<f64> {
    let dt = match policy {
        DtPolicy::Fixed(dt) => dt,
        DtPolicy::Auto { safety } => {
            if !(safety > 0.0 && safety < 1.0) {
                return Err(Error::Config(format!(
                    "scheme.cfl_safety must be in (0, 1), got {safety}"
                )));
            }
            let (dt_max, _) = cfl_dt_max(s, p);
            safety * dt_max
        }
    };
    Ok(dt.min(remaining))
}

/// Integrates from `s0` until `t_end` or until the convergence criterion
/// (`D <= d_stop` and window drift `<= drift_stop`) fires. A calibration
/// pre-pass estimates the budget coefficient; aborts preserve the partial log
/// and the last valid state.
pub fn run(s0: &State, p: &ModelParams, sched: &RunSchedule) -> Result<RunOutcome> {
    let grid = s0.grid().clone();
    p.validate(&grid)?;
    p.potential.validate(4.0)?;
    if sched.log_every == 0 {
        return Err(Error::Config("output.cadence must be >= 1".into()));
    }
    if !(sched.t_end > 0.0) {
        return Err(Error::Config(format!("scheme.t_end must be positive, got {}", sched.t_end)));
    }
    let mut start = s0.clone();
    start.t = 0.0;
    // The schedule owns the projection invariant on u0.
    if !sched.director_only && grid.divergence(&start.u).max_abs() > DIV_TOL {
        let (proj, _) = grid.leray_project_with_potential(&start.u, None)?;
        start.u = proj;
    }

    // Calibration pre-pass for the budget tolerance.
    let mut coeff: f64 = 0.0;
    let mut dt_nominal: f64 = 0.0;
    {
        let mut scratch = StepScratch::default();
        let mut s = start.clone();
        for _ in 0..sched.budget.calibration_steps {
            if s.t >= sched.t_end {
                break;
            }
            let dt = pick_dt(sched.dt, &s, p, sched.t_end - s.t)?;
            dt_nominal = dt_nominal.max(dt);
            match step_full(&s, p, dt, sched.director_only, &mut scratch) {
                Ok((next, rep)) => {
                    coeff = coeff.max(rep.budget_defect / (dt * dt));
                    s = next;
                }
                Err(_) => break,
            }
        }
    }
    let budget_coeff = sched.budget.factor * coeff;
    let budget_tol = (budget_coeff * dt_nominal * dt_nominal).max(sched.budget.floor);

    let meta = RunMeta {
        delta: p.delta,
        nu: p.nu,
        elastic: p.elastic,
        d0_max_abs: start.d.max_abs(),
        budget_tol,
        budget_coeff,
        dt_nominal,
        stopping: sched.stopping,
        director_only: sched.director_only,
    };

    let mut reports = Vec::new();
    let mut snapshots = Vec::new();
    let mut s = start.clone();
    let mut scratch = StepScratch::default();
    reports.push(StepReport::for_state(&s, p, 0.0, None));
    // The initial state is always available to post-hoc analysis.
    snapshots.push(Snapshot { t: s.t, u: s.u.clone(), d: s.d.clone(), p: s.p.clone() });

    // Ring of recent director states for the window-drift criterion.
    let mut window: std::collections::VecDeque<(f64, VectorField)> = Default::default();
    window.push_back((s.t, s.d.clone()));

    let mut termination = Termination::ReachedTEnd;
    let mut step_count: usize = 0;
    let eps_t = 1e-12 * sched.t_end;
    while s.t < sched.t_end - eps_t {
        let dt = match pick_dt(sched.dt, &s, p, sched.t_end - s.t) {
            Ok(dt) => dt,
            Err(e) => {
                termination = Termination::Aborted(e.to_string());
                break;
            }
        };
        match step_full(&s, p, dt, sched.director_only, &mut scratch) {
            Ok((next, rep)) => {
                s = next;
                step_count += 1;
                let log_now = step_count % sched.log_every == 0;
                if log_now {
                    reports.push(rep);
                }
                if sched.snapshot_every > 0 && step_count % sched.snapshot_every == 0 {
                    snapshots.push(Snapshot {
                        t: s.t,
                        u: s.u.clone(),
                        d: s.d.clone(),
                        p: s.p.clone(),
                    });
                }
                window.push_back((s.t, s.d.clone()));
                let horizon = s.t - sched.stopping.t_win;
                while window.len() > 2 && window[1].0 <= horizon {
                    window.pop_front();
                }
                if sched.stop_on_convergence
                    && rep.dissipation <= sched.stopping.d_stop
                    && window.front().map(|(t0, _)| *t0 <= horizon + 1e-12).unwrap_or(false)
                {
                    let drift = s.d.add_scaled(-1.0, &window.front().unwrap().1).norm();
                    if drift <= sched.stopping.drift_stop {
                        if !log_now {
                            reports.push(rep);
                        }
                        termination = Termination::Converged;
                        break;
                    }
                }
                if s.t >= sched.t_end - eps_t && !log_now {
                    reports.push(rep);
                }
            }
            Err(e @ (Error::Blowup { .. } | Error::CflViolation { .. })) => {
                termination = Termination::Aborted(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }

    snapshots.push(Snapshot { t: s.t, u: s.u.clone(), d: s.d.clone(), p: s.p.clone() });
    let log = TrajectoryLog { meta, reports, snapshots, termination };
    Ok(RunOutcome { log, final_state: s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BcMode;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn gl_params() -> ModelParams {
        ModelParams {
            nu: 1.0,
            elastic: 1.0,
            delta: 0.0,
            potential: PotentialSpec::ginzburg_landau(),
        }
    }

    fn constant_unit_state(grid: &Grid) -> State {
        let u = grid.vector_field(FieldRole::Velocity);
        let d = grid.vector_from_fn(FieldRole::Director, |_, _| [1.0, 0.0]);
        State::new(grid, u, d)
    }

    #[test]
    fn delta_requires_periodic_mode() {
        let grid = Grid::new(16, 16, BcMode::DirichletNeumann).unwrap();
        let mut p = gl_params();
        p.delta = 1.0;
        assert!(p.validate(&grid).is_err());
        let torus = Grid::new(16, 16, BcMode::Periodic).unwrap();
        assert!(p.validate(&torus).is_ok());
    }

    #[test]
    fn energy_examples() {
        let grid = Grid::new(32, 32, BcMode::Periodic).unwrap();
        let p = gl_params();

        let s = constant_unit_state(&grid);
        let e = total_energy(&s, &p);
        assert!(e.total.abs() < 1e-13, "minimizer has zero energy, got {}", e.total);

        let zero_d = State::new(
            &grid,
            grid.vector_field(FieldRole::Velocity),
            grid.vector_field(FieldRole::Director),
        );
        let e = total_energy(&zero_d, &p);
        assert!((e.total - 0.25).abs() < 1e-13, "d = 0 energy 1/4, got {}", e.total);

        let shear = State::new(
            &grid,
            grid.vector_from_fn(FieldRole::Velocity, |_, y| [(TAU * y).sin(), 0.0]),
            grid.vector_from_fn(FieldRole::Director, |_, _| [1.0, 0.0]),
        );
        let e = total_energy(&shear, &p);
        assert!((e.total - 0.25).abs() < 1e-12, "kinetic 1/4, got {}", e.total);
    }

    #[test]
    fn dissipation_examples() {
        let grid = Grid::new(32, 32, BcMode::Periodic).unwrap();
        let p = gl_params();

        assert!(dissipation(&constant_unit_state(&grid), &p) < 1e-24);

        // d = 0 is stationary: f(0) = 0.
        let zero_d = State::new(
            &grid,
            grid.vector_field(FieldRole::Velocity),
            grid.vector_field(FieldRole::Director),
        );
        assert!(dissipation(&zero_d, &p) < 1e-26);

        let shear = State::new(
            &grid,
            grid.vector_from_fn(FieldRole::Velocity, |_, y| [(TAU * y).sin(), 0.0]),
            grid.vector_from_fn(FieldRole::Director, |_, _| [1.0, 0.0]),
        );
        let expect = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let d = dissipation(&shear, &p);
        assert!((d - expect).abs() < 1e-10, "D = 2 pi^2, got {d}");
    }

    #[test]
    fn constant_unit_director_is_a_fixed_point() {
        for mode in [BcMode::Periodic, BcMode::DirichletNeumann] {
            let grid = Grid::new(16, 16, mode).unwrap();
            let p = gl_params();
            let s = constant_unit_state(&grid);
            let (next, rep) = step(&s, &p, 0.2).unwrap();
            let drift = next.d.add_scaled(-1.0, &s.d).max_abs();
            assert!(drift < 1e-13, "{mode:?}: director moved by {drift}");
            assert!(next.u.max_abs() < 1e-13);
            assert!(rep.budget_defect <= 1e-12, "{mode:?}: defect {}", rep.budget_defect);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let grid = Grid::new(16, 16, BcMode::Periodic).unwrap();
        let p = gl_params();
        let s = constant_unit_state(&grid);
        // Reaction rate at |d| = 1 is 2 psi'(1) = 2, so dt_max = 0.25.
        let err = step(&s, &p, 0.3).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }), "{err}");
    }

    #[test]
    fn stationary_run_terminates_by_convergence_immediately() {
        let grid = Grid::new(16, 16, BcMode::Periodic).unwrap();
        let p = gl_params();
        let s = constant_unit_state(&grid);
        let mut sched = RunSchedule::fixed_dt(0.2, 10.0);
        sched.stopping.t_win = 0.6;
        let out = run(&s, &p, &sched).unwrap();
        assert!(out.log.converged(), "terminated by {:?}", out.log.termination);
        assert!(out.final_state.t < 10.0, "stopped early at t = {}", out.final_state.t);
        for r in &out.log.reports {
            assert!(r.budget_defect <= 1e-12);
            assert!(r.total_energy.abs() < 1e-12);
        }
    }

    #[test]
    fn energy_decreases_on_generic_data() {
        for mode in [BcMode::Periodic, BcMode::DirichletNeumann] {
            let grid = Grid::new(16, 16, mode).unwrap();
            let p = gl_params();
            let d = grid.vector_from_fn(FieldRole::Director, |x, y| {
                let amp = 0.05;
                [
                    1.0 - amp * (TAU * x).cos() * (TAU * y).sin() * 0.5,
                    amp * (TAU * x).sin() * (TAU * y).cos(),
                ]
            });
            let u0 = grid.vector_from_fn(FieldRole::Velocity, |x, y| {
                let wx = (std::f64::consts::PI * x).sin();
                let wy = (std::f64::consts::PI * y).sin();
                [0.02 * wx * wx * (TAU * y).cos(), 0.02 * wy * wy * (TAU * x).cos()]
            });
            let s = State::new(&grid, u0, d);
            let sched = RunSchedule::auto_dt(0.4, 1.0);
            let out = run(&s, &p, &sched).unwrap();
            assert!(matches!(out.log.termination, Termination::ReachedTEnd | Termination::Converged));
            let tol = out.log.meta.budget_tol;
            for w in out.log.reports.windows(2) {
                let uphill = w[1].total_energy - w[0].total_energy;
                assert!(
                    uphill <= tol,
                    "{mode:?}: uphill step {uphill} beyond budget_tol {tol} at t = {}",
                    w[1].t
                );
            }
        }
    }

    #[test]
    fn budget_defect_is_second_order_per_step() {
        // Total defect over a fixed horizon should roughly halve when dt
        // halves. The asymptotic regime needs dt * (fastest rate) < 1, so the
        // study runs with small elastic constant and viscosity and low-mode
        // data; under-resolved fast transients would otherwise contribute a
        // dt-independent chunk.
        let grid = Grid::new(32, 32, BcMode::Periodic).unwrap();
        let p = ModelParams {
            nu: 0.05,
            elastic: 0.05,
            delta: 0.0,
            potential: PotentialSpec::ginzburg_landau(),
        };
        let d = grid.vector_from_fn(FieldRole::Director, |x, y| {
            [1.0 - 0.1 * (TAU * x).cos() * (TAU * y).sin(), 0.1 * (TAU * y).sin()]
        });
        let u = grid.vector_from_fn(FieldRole::Velocity, |x, y| {
            [0.05 * (TAU * y).sin(), 0.05 * (TAU * x).sin()]
        });
        let u = grid.leray_project(&u);
        let s = State::new(&grid, u, d);
        let mut totals = Vec::new();
        for dt in [0.05, 0.025] {
            let mut sched = RunSchedule::fixed_dt(dt, 1.0);
            sched.stop_on_convergence = false;
            sched.budget.calibration_steps = 0;
            let out = run(&s, &p, &sched).unwrap();
            totals.push(out.log.total_budget_defect());
        }
        let ratio = totals[0] / totals[1];
        assert!(
            (1.6..=2.4).contains(&ratio),
            "defect ratio {ratio} (totals {totals:?}) not ~2"
        );
    }
}

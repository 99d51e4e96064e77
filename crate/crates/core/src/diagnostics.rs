//! Post-hoc trajectory analysis: theorem-style verdicts on energy
//! monotonicity, the maximum principle, omega-limit convergence, decay-rate
//! fits, dissipation boundedness, and the two single-limit criteria.
//!
//! Verdicts are pure functions of the log and the configured tolerances:
//! re-running an analysis on the same artifacts reproduces them bit for bit.

use serde::{Deserialize, Serialize};

use crate::dynamics::{residual_field, ModelParams, State, TrajectoryLog};
use crate::grid::VectorField;
use crate::stationary::{classify, Classification, CriterionReport};

/// Allowed overshoot of `max |d|` above 1 for the maximum principle.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;

/// Final-frame thresholds for the omega-limit verdict.
pub const OMEGA_GRAD_U_TOL: f64 = 1e-6;
pub const OMEGA_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    EnergyInequality,
    MaxPrinciple,
    OmegaLimit,
    SinglePoint,
    DecayRate,
    DissipationBound,
    LargeL,
    SmallEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// The theorem's hypotheses are not met by this run (not a failure).
    NotApplicable,
    /// The run does not contain enough signal to decide.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem: TheoremId,
    pub status: VerdictStatus,
    /// Derived boolean: everything except an outright failure counts as pass.
    pub pass: bool,
    pub metrics: Vec<(String, f64)>,
    pub notes: String,
}

impl TheoremVerdict {
    fn new(theorem: TheoremId, status: VerdictStatus, metrics: Vec<(String, f64)>, notes: String) -> Self {
        Self { theorem, status, pass: status != VerdictStatus::Fail, metrics, notes }
    }
}

/// Energy inequality: no consecutive reports may go uphill beyond the run's
/// calibrated budget tolerance.
pub fn energy_monotonicity_check(log: &TrajectoryLog) -> TheoremVerdict {
    let tol = log.meta.budget_tol;
    let mut worst_uphill = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    for w in log.reports.windows(2) {
        let uphill = w[1].total_energy - w[0].total_energy;
        if uphill > worst_uphill {
            worst_uphill = uphill;
            worst_t = w[1].t;
        }
    }
    if !worst_uphill.is_finite() {
        worst_uphill = 0.0;
    }
    let total_defect = log.total_budget_defect();
    let status = if worst_uphill <= tol { VerdictStatus::Pass } else { VerdictStatus::Fail };
    TheoremVerdict::new(
        TheoremId::EnergyInequality,
        status,
        vec![
            ("worst_uphill".into(), worst_uphill.max(0.0)),
            ("worst_uphill_t".into(), worst_t),
            ("budget_tol".into(), tol),
            ("total_budget_defect".into(), total_defect),
        ],
        format!("{} reports compared", log.reports.len()),
    )
}

/// Maximum principle: `sup_t max |d| <= 1 + tol`, applicable only to
/// stretching-free runs started inside the unit ball.
pub fn max_principle_check(log: &TrajectoryLog) -> TheoremVerdict {
    let sup = log.reports.iter().fold(0.0f64, |m, r| m.max(r.max_abs_d));
    let metrics = vec![
        ("sup_max_abs_d".into(), sup),
        ("overshoot".into(), (sup - 1.0).max(0.0)),
        ("d0_max_abs".into(), log.meta.d0_max_abs),
        ("delta".into(), log.meta.delta),
    ];
    if log.meta.delta > 0.0 {
        return TheoremVerdict::new(
            TheoremId::MaxPrinciple,
            VerdictStatus::NotApplicable,
            metrics,
            "stretching active (delta > 0): the bound is not expected to hold".into(),
        );
    }
    if log.meta.d0_max_abs > 1.0 + 1e-12 {
        return TheoremVerdict::new(
            TheoremId::MaxPrinciple,
            VerdictStatus::NotApplicable,
            metrics,
            "initial director leaves the unit ball: hypothesis unmet".into(),
        );
    }
    let status = if sup <= 1.0 + MAX_PRINCIPLE_TOL {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    TheoremVerdict::new(TheoremId::MaxPrinciple, status, metrics, String::new())
}

/// Omega-limit: the final frame must have small velocity gradient and small
/// stationary residual; the limit's classification is recorded.
pub fn omega_limit_check(log: &TrajectoryLog, final_state: &State, p: &ModelParams) -> TheoremVerdict {
    let grid = final_state.grid();
    let grad_u = grid.grad_norm_sq(&final_state.u).sqrt();
    let residual = residual_field(&final_state.d, p).norm();
    let class = classify(&final_state.d);
    let metrics = vec![
        ("grad_u_final".into(), grad_u),
        ("residual_final".into(), residual),
        ("t_end".into(), final_state.t),
        ("classification_constant_unit".into(), (class == Classification::ConstantUnit) as u8 as f64),
        ("classification_zero".into(), (class == Classification::Zero) as u8 as f64),
    ];
    let notes = format!(
        "limit classified {class:?}; on a fixed grid all norms are equivalent, so weak and \
         strong convergence are indistinguishable here"
    );
    if !log.converged() {
        return TheoremVerdict::new(TheoremId::OmegaLimit, VerdictStatus::Inconclusive, metrics, notes);
    }
    let status = if grad_u <= OMEGA_GRAD_U_TOL && residual <= OMEGA_RESIDUAL_TOL {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    TheoremVerdict::new(TheoremId::OmegaLimit, status, metrics, notes)
}

/// Single-point convergence: the trajectory's window drift criterion fired
/// and the director stopped moving.
pub fn single_point_check(log: &TrajectoryLog) -> TheoremVerdict {
    let drift = window_drift(log);
    let mut metrics = vec![("drift_stop".into(), log.meta.stopping.drift_stop)];
    if let Some((window, drift)) = drift {
        metrics.push(("window".into(), window));
        metrics.push(("drift".into(), drift));
    }
    if log.converged() {
        TheoremVerdict::new(
            TheoremId::SinglePoint,
            VerdictStatus::Pass,
            metrics,
            "window-drift stopping criterion fired".into(),
        )
    } else {
        TheoremVerdict::new(
            TheoremId::SinglePoint,
            VerdictStatus::Inconclusive,
            metrics,
            "run ended without meeting the convergence criterion".into(),
        )
    }
}

fn window_drift(log: &TrajectoryLog) -> Option<(f64, f64)> {
    let last = log.snapshots.last()?;
    let horizon = last.t - log.meta.stopping.t_win;
    let past = log.snapshots.iter().rev().find(|s| s.t <= horizon)?;
    let drift = last.d.add_scaled(-1.0, &past.d).norm();
    Some((last.t - past.t, drift))
}

/// Dissipation boundedness: `D` must not regrow on the trailing half, must be
/// non-increasing (up to budget tolerance) on the trailing quarter, and must
/// end below the stopping threshold. Also estimates the constant `C*` of the
/// differential inequality `dD/dt <= C* (D^3 + 1)` from increasing segments.
pub fn dissipation_bound_check(log: &TrajectoryLog) -> TheoremVerdict {
    let n = log.reports.len();
    let d_end = log.reports.last().map_or(f64::NAN, |r| r.dissipation);
    let mut c_star: f64 = 0.0;
    for w in log.reports.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let dd = w[1].dissipation - w[0].dissipation;
        if dd > 0.0 {
            let d = w[0].dissipation;
            c_star = c_star.max(dd / dt / (d * d * d + 1.0));
        }
    }
    let half = n / 2;
    let sup_first: f64 = log.reports[..half.max(1)].iter().fold(0.0, |m, r| m.max(r.dissipation));
    let sup_trailing: f64 = log.reports[half..].iter().fold(0.0, |m, r| m.max(r.dissipation));
    let q3 = 3 * n / 4;
    let mut worst_increase: f64 = 0.0;
    for w in log.reports[q3.min(n.saturating_sub(2))..].windows(2) {
        worst_increase = worst_increase.max(w[1].dissipation - w[0].dissipation);
    }
    let tol = log.meta.budget_tol;
    let d_stop = log.meta.stopping.d_stop;
    let bounded = sup_trailing <= sup_first.max(d_stop);
    let tail_monotone = worst_increase <= tol;
    let ended_low = d_end <= d_stop;
    let status = if bounded && tail_monotone && ended_low {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    TheoremVerdict::new(
        TheoremId::DissipationBound,
        status,
        vec![
            ("c_star_estimate".into(), c_star),
            ("sup_trailing_half".into(), sup_trailing),
            ("sup_first_half".into(), sup_first),
            ("worst_tail_increase".into(), worst_increase),
            ("d_final".into(), d_end),
            ("d_stop".into(), d_stop),
        ],
        String::new(),
    )
}

struct LineFit {
    slope: f64,
    intercept: f64,
    rss: f64,
    slope_se: f64,
}

fn linfit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let dof = (xs.len().max(3) - 2) as f64;
    let slope_se = (rss / dof / sxx).sqrt();
    LineFit { slope, intercept, rss, slope_se }
}

/// Decay-rate fit on the tail of `||d(t) - d_inf||`: compares an exponential
/// model (log-linear) against the algebraic model `C (1+t)^{-s}` with
/// `theta = s / (1 + 2s)`, and, when the limit is a constant unit vector,
/// checks the fitted exponential rate against the predicted smallest nonzero
/// linearized eigenvalue `min(2 psi'(1), 4 pi^2 L)` within a factor of two.
pub fn decay_fit(log: &TrajectoryLog, d_inf: &VectorField, p: &ModelParams) -> TheoremVerdict {
    let dists: Vec<(f64, f64)> = log
        .snapshots
        .iter()
        .map(|s| (s.t, s.d.add_scaled(-1.0, d_inf).norm()))
        .collect();
    let mut metrics = vec![("n_snapshots".into(), dists.len() as f64)];
    if dists.len() < 8 {
        return TheoremVerdict::new(
            TheoremId::DecayRate,
            VerdictStatus::Inconclusive,
            metrics,
            "too few snapshots for a tail fit".into(),
        );
    }
    let peak = dists
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let tail = &dists[peak..];
    let min_pos = tail.iter().map(|(_, d)| *d).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let floor = (3.0 * min_pos).max(1e-13);
    let pts: Vec<(f64, f64)> = tail.iter().copied().filter(|(_, d)| *d >= floor).collect();
    let dmax = pts.iter().map(|(_, d)| *d).fold(0.0f64, f64::max);
    let dmin = pts.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    let decades = if dmin > 0.0 { (dmax / dmin).log10() } else { 0.0 };
    metrics.push(("decades".into(), decades));
    metrics.push(("n_fit_points".into(), pts.len() as f64));
    if pts.len() < 8 || decades < 3.0 {
        return TheoremVerdict::new(
            TheoremId::DecayRate,
            VerdictStatus::Inconclusive,
            metrics,
            format!("tail spans only {decades:.2} decades before saturating at solver tolerance"),
        );
    }
    let ts: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
    let logs: Vec<f64> = pts.iter().map(|(_, d)| d.ln()).collect();
    let exp_fit = linfit(&ts, &logs);
    let log1p: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let alg_fit = linfit(&log1p, &logs);
    let mu = -exp_fit.slope;
    let s = -alg_fit.slope;
    let theta = s / (1.0 + 2.0 * s);
    metrics.push(("mu".into(), mu));
    metrics.push(("mu_se".into(), exp_fit.slope_se));
    metrics.push(("theta".into(), theta));
    metrics.push(("rss_exp".into(), exp_fit.rss));
    metrics.push(("rss_alg".into(), alg_fit.rss));
    metrics.push(("ln_c_exp".into(), exp_fit.intercept));
    metrics.push(("ln_c_alg".into(), alg_fit.intercept));
    metrics.push(("alg_exponent".into(), s));
    let exp_selected = exp_fit.rss <= alg_fit.rss;
    metrics.push(("exponential_selected".into(), exp_selected as u8 as f64));

    let class = classify(d_inf);
    let predicted = if class == Classification::ConstantUnit {
        let tau = 2.0 * std::f64::consts::PI;
        Some((2.0 * p.potential.psi_prime(1.0)).min(tau * tau * p.elastic))
    } else {
        None
    };
    if let Some(pr) = predicted {
        metrics.push(("predicted_rate".into(), pr));
    }
    let status = if exp_selected {
        match predicted {
            Some(pr) if mu >= 0.5 * pr && mu <= 2.0 * pr => VerdictStatus::Pass,
            Some(_) => VerdictStatus::Fail,
            None => VerdictStatus::Pass,
        }
    } else {
        // Algebraic decay is the generic non-analytic prediction; report it.
        VerdictStatus::Pass
    };
    let notes = if exp_selected {
        match predicted {
            Some(pr) => format!("exponential fit mu = {mu:.4} vs predicted {pr:.4}"),
            None => format!("exponential fit mu = {mu:.4}; no spectral prediction for this limit"),
        }
    } else {
        format!("algebraic fit preferred: theta = {theta:.4}")
    };
    TheoremVerdict::new(TheoremId::DecayRate, status, metrics, notes)
}

/// Lifts a criterion report (large-L / small-energy) into a verdict.
pub fn verdict_from_criterion(rep: &CriterionReport) -> TheoremVerdict {
    let theorem = if rep.name == "large_L" { TheoremId::LargeL } else { TheoremId::SmallEnergy };
    TheoremVerdict::new(
        theorem,
        if rep.pass { VerdictStatus::Pass } else { VerdictStatus::Fail },
        rep.values.clone(),
        rep.notes.clone(),
    )
}

/// Plain-text table of verdicts.
pub fn render_table(verdicts: &[TheoremVerdict]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<20} {:<14} notes\n", "theorem", "status"));
    out.push_str(&format!("{:-<20} {:-<14} {:-<40}\n", "", "", ""));
    for v in verdicts {
        out.push_str(&format!("{:<20} {:<14} {}\n", format!("{:?}", v.theorem), format!("{:?}", v.status), v.notes));
        for (k, val) in &v.metrics {
            out.push_str(&format!("    {k} = {val:.6e}\n"));
        }
    }
    out
}

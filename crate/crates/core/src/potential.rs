//! Bulk potential families for the director field.
//!
//! The bulk force is `f(d) = (psi(|d|^2) - 1) d` where `psi` is increasing with
//! `psi(0) = 0`, `psi(1) = 1`, `psi'(1) > 0` and a global derivative bound
//! `c_psi`. Its antiderivative `psi_hat` (fixed by `psi_hat(1) = 1`) enters the
//! bulk energy density `(psi_hat(|d|^2) - |d|^2) / 2`, which is nonnegative and
//! vanishes exactly on unit directors. Three concrete families are shipped so
//! both the analytic and the merely-C^1 regimes of the long-time theory can be
//! exercised.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the algebraic hypothesis checks in [`validate_potential`].
pub const HYPOTHESIS_TOL: f64 = 1e-10;

/// Samples per unit interval used by hypothesis validation.
pub const SAMPLES_PER_UNIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum PotentialFamily {
    /// `psi(r) = r`: the quartic double well, `f(d) = (|d|^2 - 1) d`. Analytic.
    GinzburgLandau,
    /// `psi(r) = r` for `r <= 1`, `1 + tanh(r - 1)` above. C^1 but not
    /// analytic at `r = 1`; coincides with Ginzburg-Landau on `[0, 1]`.
    CappedGl,
    /// `psi(r) = (1 - exp(-a r)) / (1 - exp(-a))`. Analytic with saturating,
    /// globally bounded derivative.
    ExpSaturating { a: f64 },
}

/// A validated bulk potential: the family plus the global bound on `psi'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    /// Global bound on `psi'`; canonical per family, overridable upward.
    pub c_psi: f64,
}

impl PotentialSpec {
    pub fn new(family: PotentialFamily) -> Result<Self> {
        let c_psi = match family {
            PotentialFamily::GinzburgLandau | PotentialFamily::CappedGl => 1.0,
            PotentialFamily::ExpSaturating { a } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Config(format!(
                        "params.potential.a must be a positive finite real, got {a}"
                    )));
                }
                // psi' is decreasing, so the bound is attained at r = 0.
                a / (-(-a).exp_m1())
            }
        };
        Ok(Self { family, c_psi })
    }

    pub fn ginzburg_landau() -> Self {
        Self::new(PotentialFamily::GinzburgLandau).unwrap()
    }

    pub fn capped_gl() -> Self {
        Self::new(PotentialFamily::CappedGl).unwrap()
    }

    pub fn exp_saturating(a: f64) -> Result<Self> {
        Self::new(PotentialFamily::ExpSaturating { a })
    }

    pub fn psi(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::GinzburgLandau => r,
            PotentialFamily::CappedGl => {
                if r <= 1.0 {
                    r
                } else {
                    1.0 + (r - 1.0).tanh()
                }
            }
            PotentialFamily::ExpSaturating { a } => (-a * r).exp_m1() / (-a).exp_m1(),
        }
    }

    pub fn psi_prime(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::GinzburgLandau => 1.0,
            PotentialFamily::CappedGl => {
                if r <= 1.0 {
                    1.0
                } else {
                    let c = (r - 1.0).cosh();
                    1.0 / (c * c)
                }
            }
            PotentialFamily::ExpSaturating { a } => a * (-a * r).exp() / (-(-a).exp_m1()),
        }
    }

    /// Antiderivative of `psi` with `psi_hat(1) = 1`, in closed form per family.
    pub fn psi_hat(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::GinzburgLandau => 0.5 * (r * r + 1.0),
            PotentialFamily::CappedGl => {
                if r <= 1.0 {
                    0.5 * (r * r + 1.0)
                } else {
                    // 1 + (r-1) + ln cosh(r-1), written overflow-safely.
                    let x = r - 1.0;
                    let ln_cosh = x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2;
                    1.0 + x + ln_cosh
                }
            }
            PotentialFamily::ExpSaturating { a } => {
                let den = -(-a).exp_m1(); // 1 - e^{-a}
                let anti = |r: f64| (r + (-a * r).exp_m1() / a) / den;
                1.0 + anti(r) - anti(1.0)
            }
        }
    }

    /// Bulk restoring force `f(d) = (psi(|d|^2) - 1) d`.
    pub fn f(&self, d: [f64; 2]) -> [f64; 2] {
        let q = d[0] * d[0] + d[1] * d[1];
        let s = self.psi(q) - 1.0;
        [s * d[0], s * d[1]]
    }

    /// Bulk energy density `(psi_hat(|d|^2) - |d|^2) / 2`; nonnegative, zero
    /// exactly on `|d| = 1`.
    pub fn bulk_density(&self, d: [f64; 2]) -> f64 {
        let q = d[0] * d[0] + d[1] * d[1];
        0.5 * (self.psi_hat(q) - q)
    }

    /// Hessian of the convex auxiliary function `Xi(d) = psi_hat(|d|^2) / 2`:
    /// `psi(|d|^2) I + 2 psi'(|d|^2) d (x) d`.
    pub fn xi_hessian(&self, d: [f64; 2]) -> [[f64; 2]; 2] {
        let q = d[0] * d[0] + d[1] * d[1];
        let p = self.psi(q);
        let dp = 2.0 * self.psi_prime(q);
        [
            [p + dp * d[0] * d[0], dp * d[0] * d[1]],
            [dp * d[1] * d[0], p + dp * d[1] * d[1]],
        ]
    }

    /// Recorded `(kappa, sigma)` pair with `psi_hat(r) - r >= kappa (1-r)^sigma`
    /// on `[0, 1]`. Not claimed optimal.
    pub fn kappa_sigma(&self) -> (f64, f64) {
        match self.family {
            PotentialFamily::GinzburgLandau | PotentialFamily::CappedGl => (0.5, 2.0),
            // psi' decreases, so psi_hat'' >= psi'(1) on [0,1] and the Taylor
            // bound at r = 1 holds with kappa = psi'(1)/2.
            PotentialFamily::ExpSaturating { .. } => (0.5 * self.psi_prime(1.0), 2.0),
        }
    }

    pub fn validate(&self, r_max: f64) -> Result<ValidationReport> {
        validate_potential(self, r_max)
    }
}

/// Scalar potential interface for the hypothesis validator. `PotentialSpec`
/// implements it; tests use it to feed deliberately corrupted potentials.
pub trait BulkPotential {
    fn psi(&self, r: f64) -> f64;
    fn psi_prime(&self, r: f64) -> f64;
    fn psi_hat(&self, r: f64) -> f64;
    fn c_psi(&self) -> f64;
}

impl BulkPotential for PotentialSpec {
    fn psi(&self, r: f64) -> f64 {
        PotentialSpec::psi(self, r)
    }
    fn psi_prime(&self, r: f64) -> f64 {
        PotentialSpec::psi_prime(self, r)
    }
    fn psi_hat(&self, r: f64) -> f64 {
        PotentialSpec::psi_hat(self, r)
    }
    fn c_psi(&self) -> f64 {
        self.c_psi
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst sampled violation magnitude (0 when the hypothesis holds).
    pub worst_violation: f64,
    /// Sample location of the worst violation.
    pub worst_at: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub r_max: f64,
    pub samples_per_unit: usize,
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} (violation {:.3e} at r = {:.6})", c.name, c.worst_violation, c.worst_at))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Validates the potential hypotheses by dense sampling on `[0, r_max]`.
///
/// Checks, each reported with its worst sampled violation: `psi(0) = 0`,
/// `psi(1) = 1`, `psi'(1) > 0`, monotonicity of `psi`, `0 <= psi' <= c_psi`,
/// `psi_hat(1) = 1`, `psi_hat' = psi` (verified in integrated form against
/// two-point Gauss quadrature per sample interval), and `(psi(r) - 1) r >= 0`
/// for `r >= 1`. Fails if any violation exceeds [`HYPOTHESIS_TOL`].
pub fn validate_potential<P: BulkPotential>(p: &P, r_max: f64) -> Result<ValidationReport> {
    if !(r_max >= 2.0) {
        return Err(Error::Config(format!("validation requires r_max >= 2, got {r_max}")));
    }
    let n = (r_max * SAMPLES_PER_UNIT as f64).ceil() as usize;
    let h = r_max / n as f64;

    let mut checks = Vec::new();
    let mut record = |name: &'static str, violation: f64, at: f64| {
        checks.push(HypothesisCheck {
            name,
            pass: violation <= HYPOTHESIS_TOL,
            worst_violation: violation,
            worst_at: at,
        });
    };

    record("psi(0) = 0", p.psi(0.0).abs(), 0.0);
    record("psi(1) = 1", (p.psi(1.0) - 1.0).abs(), 1.0);
    record("psi'(1) > 0", (-p.psi_prime(1.0)).max(0.0), 1.0);
    record("psi_hat(1) = 1", (p.psi_hat(1.0) - 1.0).abs(), 1.0);

    let worst = |acc: &mut (f64, f64), violation: f64, at: f64| {
        if violation > acc.0 {
            *acc = (violation, at);
        }
    };

    let mut mono = (0.0, 0.0);
    let mut deriv_range = (0.0, 0.0);
    let mut anti = (0.0, 0.0);
    let mut sign = (0.0, 0.0);
    // 2-point Gauss-Legendre nodes on [-1, 1].
    let gauss = 1.0 / 3.0_f64.sqrt();
    for i in 0..=n {
        let r = i as f64 * h;
        let dp = p.psi_prime(r);
        worst(&mut deriv_range, (-dp).max(dp - p.c_psi()).max(0.0), r);
        if r >= 1.0 {
            worst(&mut sign, (-(p.psi(r) - 1.0) * r).max(0.0), r);
        }
        if i < n {
            let r1 = r + h;
            worst(&mut mono, (p.psi(r) - p.psi(r1)).max(0.0), r);
            let mid = r + 0.5 * h;
            let quad = 0.5 * h * (p.psi(mid - 0.5 * h * gauss) + p.psi(mid + 0.5 * h * gauss));
            worst(&mut anti, (p.psi_hat(r1) - p.psi_hat(r) - quad).abs(), r);
        }
    }
    record("psi nondecreasing", mono.0, mono.1);
    record("0 <= psi' <= c_psi", deriv_range.0, deriv_range.1);
    record("psi_hat' = psi", anti.0, anti.1);
    record("(psi(r) - 1) r >= 0 for r >= 1", sign.0, sign.1);

    let report = ValidationReport { r_max, samples_per_unit: SAMPLES_PER_UNIT, checks };
    if report.all_pass() {
        Ok(report)
    } else {
        Err(Error::PotentialInvalid(report.failure_summary()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<PotentialSpec> {
        vec![
            PotentialSpec::ginzburg_landau(),
            PotentialSpec::capped_gl(),
            PotentialSpec::exp_saturating(4.0).unwrap(),
        ]
    }

    #[test]
    fn ginzburg_landau_validates_with_unit_derivative_bound() {
        let spec = PotentialSpec::ginzburg_landau();
        assert_eq!(spec.c_psi, 1.0);
        let report = spec.validate(4.0).expect("all hypotheses hold");
        assert!(report.all_pass());
        assert_eq!(report.checks.len(), 8);
    }

    #[test]
    fn capped_gl_validates_despite_the_kink() {
        let spec = PotentialSpec::capped_gl();
        let report = spec.validate(4.0).expect("all hypotheses hold");
        assert!(report.all_pass());
        // C^1 matching at r = 1.
        assert!((spec.psi_prime(1.0 - 1e-12) - spec.psi_prime(1.0 + 1e-12)).abs() < 1e-9);
    }

    #[test]
    fn exp_saturating_validates() {
        let spec = PotentialSpec::exp_saturating(4.0).unwrap();
        assert!(spec.validate(4.0).unwrap().all_pass());
        // c_psi = psi'(0) since psi' decreases.
        assert!((spec.psi_prime(0.0) - spec.c_psi).abs() < 1e-12);
    }

    /// Potential with psi(1) != 1, used to exercise the failure path.
    struct Corrupted;

    impl BulkPotential for Corrupted {
        fn psi(&self, r: f64) -> f64 {
            0.9 * r
        }
        fn psi_prime(&self, _r: f64) -> f64 {
            0.9
        }
        fn psi_hat(&self, r: f64) -> f64 {
            0.45 * r * r + 0.55
        }
        fn c_psi(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn corrupted_potential_fails_on_psi_of_one() {
        let err = validate_potential(&Corrupted, 4.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("psi(1) = 1"), "diagnostic names the violated hypothesis: {msg}");
    }

    #[test]
    fn bulk_force_examples() {
        let gl = PotentialSpec::ginzburg_landau();
        assert_eq!(gl.f([1.0, 0.0]), [0.0, 0.0]);
        let f = gl.f([2.0, 0.0]);
        assert!((f[0] - 6.0).abs() < 1e-14 && f[1] == 0.0);
        for spec in all_families() {
            assert_eq!(spec.f([0.0, 0.0]), [0.0, 0.0]);
        }
    }

    #[test]
    fn bulk_density_examples() {
        let gl = PotentialSpec::ginzburg_landau();
        assert!(gl.bulk_density([1.0, 0.0]).abs() < 1e-15);
        assert!((gl.bulk_density([0.0, 0.0]) - 0.25).abs() < 1e-15);
        assert!((gl.bulk_density([2.0, 0.0]) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn bulk_density_nonnegative_and_zero_only_on_unit_circle() {
        for spec in all_families() {
            for i in 0..400 {
                let t = i as f64 * 0.05;
                let d = [t * (1.7 * t).cos(), t * (1.7 * t).sin()];
                let e = spec.bulk_density(d);
                assert!(e >= -1e-14, "density must be nonnegative, got {e} at {d:?}");
                let dev = ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs();
                if dev > 1e-3 {
                    assert!(e > 0.0, "density vanishes only on |d| = 1");
                }
            }
        }
    }

    #[test]
    fn force_is_gradient_of_bulk_density() {
        let h = 1e-5;
        for spec in all_families() {
            for k in 0..60 {
                let a = 0.11 * k as f64;
                let d = [1.4 * (3.0 * a).cos(), 1.4 * (5.0 * a).sin()];
                let f = spec.f(d);
                for c in 0..2 {
                    let mut dp = d;
                    let mut dm = d;
                    dp[c] += h;
                    dm[c] -= h;
                    let fd = (spec.bulk_density(dp) - spec.bulk_density(dm)) / (2.0 * h);
                    assert!(
                        (f[c] - fd).abs() <= 1e-6,
                        "{spec:?}: grad mismatch {} vs {} at {d:?}",
                        f[c],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn xi_hessian_examples() {
        for spec in all_families() {
            let h = spec.xi_hessian([0.0, 0.0]);
            assert_eq!(h, [[0.0, 0.0], [0.0, 0.0]]);
        }
        let gl = PotentialSpec::ginzburg_landau();
        let h = gl.xi_hessian([1.0, 0.0]);
        assert!((h[0][0] - 3.0).abs() < 1e-14);
        assert!((h[1][1] - 1.0).abs() < 1e-14);
        assert_eq!(h[0][1], 0.0);
        assert_eq!(h[1][0], 0.0);
    }

    #[test]
    fn xi_hessian_positive_semidefinite_and_matches_finite_differences() {
        let h = 1e-5;
        for spec in all_families() {
            for k in 0..60 {
                let a = 0.17 * k as f64;
                let d = [1.8 * (2.0 * a).cos(), 1.8 * (3.0 * a + 0.4).sin()];
                let m = spec.xi_hessian(d);
                assert!((m[0][1] - m[1][0]).abs() < 1e-14, "symmetric");
                // 2x2 PSD: trace and determinant nonnegative.
                let tr = m[0][0] + m[1][1];
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                assert!(tr >= -1e-12 && det >= -1e-10, "PSD violated at {d:?}: tr {tr}, det {det}");
                // Cross-check against central-difference Hessian of Xi.
                let xi = |d: [f64; 2]| 0.5 * spec.psi_hat(d[0] * d[0] + d[1] * d[1]);
                for i in 0..2 {
                    for j in 0..2 {
                        let mut dpp = d;
                        let mut dpm = d;
                        let mut dmp = d;
                        let mut dmm = d;
                        dpp[i] += h;
                        dpp[j] += h;
                        dpm[i] += h;
                        dpm[j] -= h;
                        dmp[i] -= h;
                        dmp[j] += h;
                        dmm[i] -= h;
                        dmm[j] -= h;
                        let fd = (xi(dpp) - xi(dpm) - xi(dmp) + xi(dmm)) / (4.0 * h * h);
                        assert!(
                            (m[i][j] - fd).abs() < 1e-4 * m[i][j].abs().max(1.0),
                            "{spec:?}: hessian[{i}][{j}] {} vs fd {} at {d:?}",
                            m[i][j],
                            fd
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kappa_sigma_bounds_hold_on_unit_interval() {
        for spec in all_families() {
            let (kappa, sigma) = spec.kappa_sigma();
            let mut worst: f64 = 0.0;
            for i in 0..=4096 {
                let r = i as f64 / 4096.0;
                let lhs = spec.psi_hat(r) - r;
                let rhs = kappa * (1.0 - r).powf(sigma);
                worst = worst.max(rhs - lhs);
            }
            assert!(worst <= 1e-12, "{spec:?}: bound violated by {worst}");
        }
    }

    #[test]
    fn psi_hat_matches_quadrature_oracle() {
        // Composite Simpson integration of psi from 1, as an independent check
        // of the closed-form antiderivatives.
        for spec in all_families() {
            for &r in &[0.0, 0.3, 0.9, 1.0, 1.5, 2.7, 4.0] {
                let n = 4000;
                let h = (r - 1.0) / n as f64;
                let mut acc = spec.psi(1.0) + spec.psi(r);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * spec.psi(1.0 + i as f64 * h);
                }
                let integral = acc * h / 3.0;
                let expect = 1.0 + integral;
                assert!(
                    (spec.psi_hat(r) - expect).abs() < 1e-9,
                    "{spec:?}: psi_hat({r}) = {} vs oracle {}",
                    spec.psi_hat(r),
                    expect
                );
            }
        }
    }

    #[test]
    fn r_max_below_two_is_rejected() {
        let gl = PotentialSpec::ginzburg_landau();
        assert!(gl.validate(1.5).is_err());
    }
}

//! Run configuration: a single TOML file with nested sections. No
//! environment-variable overrides except `OUT_DIR` (handled by the CLI).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{BudgetPolicy, DtPolicy, ModelParams, RunSchedule, State, StoppingRule};
use crate::error::{Error, Result};
use crate::grid::{BcMode, Grid};
use crate::init;
use crate::potential::{PotentialFamily, PotentialSpec};
use crate::stationary::SolveMethod;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    pub init: InitSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub stopping: StoppingSection,
    #[serde(default)]
    pub criteria: CriteriaSection,
    #[serde(default)]
    pub stationary: StationarySection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub bc_mode: BcMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub nu: f64,
    #[serde(rename = "L")]
    pub elastic: f64,
    #[serde(default)]
    pub delta: f64,
    pub potential: PotentialSection,
}

// No deny_unknown_fields here: serde cannot combine it with flatten.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSection {
    #[serde(flatten)]
    pub family: PotentialFamily,
    /// Optional override of the derivative bound.
    pub c_psi: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// Fixed step; omit (or set 0) for CFL-adaptive stepping.
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub budget_factor: f64,
    pub budget_floor: f64,
    pub calibration_steps: usize,
    pub director_only: bool,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            dt: 0.0,
            t_end: 10.0,
            cfl_safety: 0.4,
            budget_factor: 10.0,
            budget_floor: 1e-12,
            calibration_steps: 25,
            director_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    ConstantUnit,
    ZeroDirector,
    PerturbedUnit,
    VortexPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Kinetic energy of the random divergence-free initial velocity
    /// (0 keeps the fluid at rest).
    #[serde(default)]
    pub kinetic_energy: f64,
    #[serde(default = "default_vortex_core")]
    pub vortex_core: f64,
    #[serde(default = "default_vortex_separation")]
    pub vortex_separation: f64,
}

fn default_amplitude() -> f64 {
    1e-2
}
fn default_k_max() -> usize {
    3
}
fn default_vortex_core() -> f64 {
    0.08
}
fn default_vortex_separation() -> f64 {
    0.3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Log a report every `cadence` steps.
    pub cadence: usize,
    /// Keep a state snapshot every `snapshot_every` steps (0: endpoints only).
    pub snapshot_every: usize,
    pub out_dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { cadence: 1, snapshot_every: 10, out_dir: "runs/out".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingSection {
    pub d_stop: f64,
    pub d_drift_stop: f64,
    pub t_win: f64,
}

impl Default for StoppingSection {
    fn default() -> Self {
        let s = StoppingRule::default();
        Self { d_stop: s.d_stop, d_drift_stop: s.drift_stop, t_win: s.t_win }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriteriaSection {
    /// Smallness threshold for the small-energy criterion; the check is
    /// skipped when absent (the theorem only asserts existence of one).
    pub small_energy_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarySection {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_time: f64,
    pub max_iter: usize,
    /// Number of low eigenvalues reported by the spectrum probe.
    pub eigen_k: usize,
    pub zero_tol: Option<f64>,
}

impl Default for StationarySection {
    fn default() -> Self {
        Self {
            method: SolveMethod::GradientFlow,
            tol: 1e-9,
            max_time: 400.0,
            max_iter: 60,
            eigen_k: 8,
            zero_tol: None,
        }
    }
}

/// Everything a run needs, constructed and validated from a config.
#[derive(Debug)]
pub struct BuiltRun {
    pub grid: Grid,
    pub params: ModelParams,
    pub schedule: RunSchedule,
    pub state0: State,
}

impl RunConfig {
    pub fn from_str(raw: &str) -> Result<Self> {
        toml::from_str(raw).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<(Self, String)> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Ok((Self::from_str(&raw)?, raw))
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let mut spec = PotentialSpec::new(self.params.potential.family)?;
        if let Some(c) = self.params.potential.c_psi {
            if !(c > 0.0 && c >= spec.c_psi) {
                return Err(Error::Config(format!(
                    "params.potential.c_psi = {c} must be positive and at least the canonical \
                     bound {}",
                    spec.c_psi
                )));
            }
            spec.c_psi = c;
        }
        Ok(spec)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(ModelParams {
            nu: self.params.nu,
            elastic: self.params.elastic,
            delta: self.params.delta,
            potential: self.potential()?,
        })
    }

    pub fn schedule(&self) -> Result<RunSchedule> {
        let s = &self.scheme;
        let dt = if s.dt > 0.0 {
            DtPolicy::Fixed(s.dt)
        } else {
            DtPolicy::Auto { safety: s.cfl_safety }
        };
        Ok(RunSchedule {
            dt,
            t_end: s.t_end,
            log_every: self.output.cadence.max(1),
            snapshot_every: self.output.snapshot_every,
            stopping: StoppingRule {
                d_stop: self.stopping.d_stop,
                drift_stop: self.stopping.d_drift_stop,
                t_win: self.stopping.t_win,
            },
            budget: BudgetPolicy {
                factor: s.budget_factor,
                floor: s.budget_floor,
                calibration_steps: s.calibration_steps,
            },
            stop_on_convergence: true,
            director_only: s.director_only,
        })
    }

    pub fn build(&self) -> Result<BuiltRun> {
        let grid = Grid::new(self.grid.nx, self.grid.ny, self.grid.bc_mode)?;
        let params = self.model_params()?;
        params.validate(&grid)?;
        params.potential.validate(4.0)?;
        let schedule = self.schedule()?;
        let i = &self.init;
        let d0 = match i.kind {
            InitKind::ConstantUnit => init::constant_unit_director(&grid),
            InitKind::ZeroDirector => init::zero_director(&grid),
            InitKind::PerturbedUnit => {
                init::perturbed_unit_director(&grid, i.seed, i.amplitude, i.k_max)
            }
            InitKind::VortexPair => {
                init::vortex_pair_director(&grid, i.vortex_core, i.vortex_separation)
            }
        };
        let u0 = init::random_divfree_velocity(&grid, i.seed, i.kinetic_energy, i.k_max)?;
        let state0 = State::new(&grid, u0, d0);
        Ok(BuiltRun { grid, params, schedule, state0 })
    }
}

/// Content hash of the raw config text, recorded in the run metadata.
pub fn config_sha256(raw: &str) -> String {
    let mut h = Sha256::new();
    h.update(raw.as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("potential hypothesis violated: {0}")]
    PotentialInvalid(String),

    #[error("time step {dt:.3e} violates the CFL bound {dt_max:.3e} ({which})")]
    CflViolation { dt: f64, dt_max: f64, which: &'static str },

    #[error("numerical blow-up at t = {t}: {what}")]
    Blowup { t: f64, what: String },

    #[error("stationary solve did not converge: best residual {residual:.3e} after {iterations} iterations")]
    StationaryDidNotConverge { residual: f64, iterations: usize },

    #[error("eigensolver did not converge: worst residual {residual:.3e} after {iterations} iterations")]
    EigensolverDidNotConverge { residual: f64, iterations: usize },

    #[error("linear solver stalled: residual {residual:.3e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    #[error("analysis input error: {0}")]
    AnalysisInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 blow-up, 4 analysis input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::PotentialInvalid(_) => 2,
            Error::Blowup { .. } => 3,
            Error::AnalysisInput(_) | Error::Io(_) => 4,
            _ => 1,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RouterError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical blow-up at step {step} (t = {t})")]
    Blowup { step: usize, t: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("stored spin wave is empty")]
    EmptySpinWave,
    #[error("fit error: {0}")]
    Fit(String),
    #[error("optimization error: {0}")]
    Optimization(String),
    #[error("step resolution too coarse: phase per step {phase_per_step:.3} rad exceeds {limit} rad")]
    Resolution { phase_per_step: f64, limit: f64 },
    #[error("degenerate sweep: sweep rate is zero")]
    DegenerateSweep,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RouterError>;

impl RouterError {
    /// Process exit status: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parameter(_) | Self::Domain(_) | Self::Config(_) | Self::Io(_) => 2,
            _ => 3,
        }
    }
}

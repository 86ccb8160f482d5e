use thiserror::Error;

/// Errors raised while constructing or verifying model data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EcsError {
    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    #[error("spectrum structure: {0}")]
    SpectrumStructure(String),

    #[error("root {root} lies within {gap:e} of 1")]
    UnitRoot { root: f64, gap: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("profile is constant; a nonconstant periodic function is required")]
    ConstantProfile,

    #[error("traceless part is numerically zero (|A|_inf = {norm:e})")]
    VanishingTraceless { norm: f64 },

    #[error("Riccati solution escapes to infinity in channel {channel} near t = {time}")]
    BlowUp { channel: usize, time: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("calibration stagnated; residual history {history:?}")]
    Calibration { history: Vec<f64> },

    #[error("perturbation leaves the basin of the constant seed ({0}); reduce its amplitude")]
    Basin(String),

    #[error("consistency: {0}")]
    Consistency(String),

    #[error("ill-conditioned matrix (condition number {condition:e})")]
    Conditioning { condition: f64 },

    #[error("integrator accuracy: {0}")]
    IntegratorAccuracy(String),

    #[error("conservation violated: spread {spread:e}")]
    Conservation { spread: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("geometry verification failed for {identity}: {detail}")]
    GeometryVerification { identity: String, detail: String },

    #[error("schema: {0}")]
    Schema(String),

    #[error("io: {0}")]
    Io(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<EcsError>,
    },
}

impl EcsError {
    pub fn at_stage(self, stage: &'static str) -> Self {
        EcsError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for EcsError {
    fn from(e: std::io::Error) -> Self {
        EcsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for EcsError {
    fn from(e: serde_json::Error) -> Self {
        EcsError::Schema(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EcsError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NopairError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("integral evaluation failed: {0}")]
    Integral(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("overlap pencil ill-conditioned: {0}")]
    Conditioning(String),

    #[error("state classification ambiguous: {0}")]
    Classification(String),

    #[error("optimization stagnated: {0}")]
    Stagnation(String),

    #[error("requested state not available: {0}")]
    Selector(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<NopairError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NopairError {
    pub fn in_stage(self, stage: &'static str) -> Self {
        NopairError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

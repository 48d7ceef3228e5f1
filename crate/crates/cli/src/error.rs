use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qauto_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Machine-readable error record printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use qauto_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::ZeroD => "zero_d",
                E::DNotExpanding(_) => "d_not_expanding",
                E::Overflow { .. } => "overflow",
                E::Indeterminate(_) => "indeterminate",
                E::ChartDomain(_) => "chart_domain",
                E::BelowFloor { .. } => "below_floor",
                E::Premise(_) => "premise",
                E::TermExplosion { .. } => "term_explosion",
                E::DominanceLost { .. } => "dominance_lost",
                E::InvalidArgument(_) => "invalid_argument",
            },
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Config(_) => "config",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.kind(), message: self.to_string() }
    }
}

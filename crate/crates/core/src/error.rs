use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("ambiguous date format: {0}; pass an explicit date format")]
    AmbiguousDateFormat(String),
    #[error("unparseable date `{value}` on row {row}")]
    BadDate { row: usize, value: String },
    #[error("dataset spans {found} season(s), need at least {needed}")]
    InsufficientSeasons { needed: usize, found: usize },
    #[error("unknown team `{0}`")]
    UnknownTeam(String),
    #[error("rho {rho} outside feasible range [{lower}, {upper}]")]
    InfeasibleRho { rho: f64, lower: f64, upper: f64 },
    #[error("tail mass {achieved:e} exceeds tolerance {tolerance:e} at grid bound {bound}")]
    TailMass {
        achieved: f64,
        tolerance: f64,
        bound: usize,
    },
    #[error("teams below the minimum match count: {}", .0.join(", "))]
    InsufficientMatches(Vec<String>),
    #[error("estimation window is empty")]
    EmptyWindow,
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model coverage mismatch: {0}")]
    CoverageMismatch(String),
    #[error("invalid forecast: {0}")]
    InvalidForecast(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

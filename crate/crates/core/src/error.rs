use thiserror::Error;

/// Everything that can go wrong across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid character {0:?} in word literal")]
    InvalidLetter(char),
    #[error("generator index {index} exceeds rank {rank}")]
    RankExceeded { index: usize, rank: usize },
    #[error("rank must lie in 1..=26, got {0}")]
    InvalidRank(usize),
    #[error("element is not loxodromic")]
    NotLoxodromic,
    #[error("boundary prefix of depth {depth} cannot resolve a word of length {needed}")]
    PrefixTooShallow { depth: usize, needed: usize },

    #[error("boundary regions {0} and {1} overlap")]
    DisksOverlap(usize, usize),
    #[error("generator {generator} violates ping-pong at ({x}, {y})")]
    MappingViolation { generator: usize, x: f64, y: f64 },
    #[error("generator {0} is not loxodromic")]
    NonLoxodromicGenerator(usize),
    #[error("fundamental domain reduction exceeded {0} steps")]
    IterationLimit(usize),
    #[error("base point lies {0} away from the geodesic")]
    BaseNotOnGeodesic(f64),
    #[error("point {0} is outside the fundamental domain")]
    OutsideDomain(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("invalid step distribution: {0}")]
    InvalidDistribution(String),
    #[error("boundary estimate did not settle: {0}")]
    Unstable(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("step distribution is not nearest-neighbor")]
    NotNearestNeighbor,
    #[error("step distribution does not charge every generator and inverse")]
    NotIrreducible,
    #[error("validation failed on {cylinder}: {detail}")]
    ValidationFailed { cylinder: String, detail: String },
    #[error("cylinder depth {have} is insufficient, need {need}")]
    DepthInsufficient { have: usize, need: usize },
    #[error("closed geodesic of length {length} is shorter than window {depth}")]
    TooShort { length: usize, depth: usize },
    #[error("measures live on different charts or depths")]
    ChartMismatch,
    #[error("requested ray length {requested} exceeds available {available}")]
    RayTooLong { requested: f64, available: f64 },
    #[error("operation not supported for this model: {0}")]
    Unsupported(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("continued fraction term {term} at position {index} is not a positive integer")]
    InvalidTerm { index: usize, term: i64 },
    #[error("requested {requested} terms but only {available} are available")]
    InsufficientTerms { requested: usize, available: usize },
    #[error("the Gauss shift of an empty expansion is undefined")]
    EmptyExpansion,
    #[error("{0}")]
    Domain(String),
    #[error("evaluation at a pole of the Blaschke fraction")]
    Pole,
    #[error("could not build a continuous lift: {0}")]
    Lift(String),
    #[error("precision floor reached at level {level}")]
    PrecisionFloor { level: usize },
    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("pair is not renormalizable: height is infinite")]
    NotRenormalizable,
    #[error("height undetermined after {iterations} iterations")]
    HeightUndetermined { iterations: usize },
    #[error("rescaling factor {0} exceeds the precision limit")]
    RescaleOverflow(f64),
    #[error("orbit combinatorics are inconsistent with a circle homeomorphism at level {level}")]
    Combinatorics { level: usize },
    #[error("orbit budget of {budget} iterates exhausted before level {level}")]
    Budget { budget: u64, level: usize },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

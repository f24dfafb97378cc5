use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. `code()` gives the short,
/// machine-parseable token the CLI prints on its error line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {count} samples exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },

    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// A calibration denominator vanished. `origin` names the estimator whose
    /// closed form broke down.
    #[error("singular calibration in {origin}")]
    SingularCalibration { origin: &'static str },

    #[error("singular q substitution: weighted x total is zero")]
    SingularSubstitution,

    #[error("division by zero: x is zero for sample unit {unit}")]
    DivisionByZero { unit: usize },

    #[error("invalid distance: d*q is not positive for unit {unit}")]
    InvalidDistance { unit: usize },

    #[error("incomplete design: no joint inclusion probability for pair ({i}, {j})")]
    IncompleteDesign { i: usize, j: usize },

    #[error("wrong residual kind: {found} is not accepted here (expected {expected})")]
    WrongResidual {
        expected: &'static str,
        found: &'static str,
    },

    #[error("singular pairwise calibration: sum of D*Q*delta^2 is zero")]
    SingularPairCalibration,

    #[error("pair degeneracy: delta is zero for pair ({i}, {j})")]
    PairDegeneracy { i: usize, j: usize },

    #[error("singular moment: fourth-moment denominator is zero")]
    SingularMoment,

    #[error("stratum {stratum} has {size} sampled units; at least 2 are required")]
    InsufficientStratum { stratum: String, size: usize },

    #[error("{map} is undefined for value {value} of unit {unit}")]
    Domain {
        unit: usize,
        value: f64,
        map: &'static str,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> String {
        match self {
            Error::InvalidSample(_) => "invalid-sample".into(),
            Error::DegenerateDesign(_) => "degenerate-design".into(),
            Error::Precondition(_) => "precondition".into(),
            Error::EnumerationTooLarge { .. } => "enumeration-too-large".into(),
            Error::LengthMismatch { .. } => "length-mismatch".into(),
            Error::SingularCalibration { origin } => format!("singular-calibration[{origin}]"),
            Error::SingularSubstitution => "singular-substitution".into(),
            Error::DivisionByZero { .. } => "division-by-zero".into(),
            Error::InvalidDistance { .. } => "invalid-distance".into(),
            Error::IncompleteDesign { .. } => "incomplete-design".into(),
            Error::WrongResidual { .. } => "wrong-residual".into(),
            Error::SingularPairCalibration => "singular-pair-calibration".into(),
            Error::PairDegeneracy { .. } => "pair-degeneracy".into(),
            Error::SingularMoment => "singular-moment".into(),
            Error::InsufficientStratum { .. } => "insufficient-stratum".into(),
            Error::Domain { .. } => "domain".into(),
            Error::Parse { .. } => "parse".into(),
            Error::Config(_) => "config".into(),
            Error::Io(_) => "io".into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("unknown level {level}: the pool has levels 1..={max}")]
    UnknownLevel { level: usize, max: usize },

    #[error("standing assumptions violated: {0}")]
    AssumptionsViolated(String),

    #[error(
        "continuation condition fails at level {level}: r/lambda_j - 1 = {lhs} > vbar_(j-1)/b_(j-1) = {rhs}"
    )]
    ContinuationViolated { level: usize, lhs: f64, rhs: f64 },

    #[error(
        "hyp-lambda condition fails at level {level}: (v'_(j-1)(b_(j-1)+))^+ b_(j-1)/vbar_(j-1) = {lhs} > psi_1(r/lambda_j) = {rhs}"
    )]
    HypLambdaViolated { level: usize, lhs: f64, rhs: f64 },

    #[error("invalid contract caps: {0}")]
    InvalidCaps(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }
}

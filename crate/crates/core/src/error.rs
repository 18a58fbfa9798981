use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular jet: division by a jet with zero constant term")]
    SingularJet,

    #[error("domain error in {op} at {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("constant `{0}` has no value")]
    UnboundConstant(String),

    #[error("non-finite value at derivative index {index:?}")]
    NonFinite { index: Vec<usize> },

    #[error("metric is degenerate at {x:?}")]
    MetricDegenerate { x: Vec<f64> },

    #[error("fundamental tensor is singular")]
    MetricSingular,

    #[error("point {x:?} is outside the chart domain")]
    OutsideDomain { x: Vec<f64> },

    #[error("regularity violated at (b2={b2}, s={s}): {which} = {margin}")]
    Regularity {
        b2: f64,
        s: f64,
        which: &'static str,
        margin: f64,
    },

    #[error("1-form is not closed and conformal (residual {residual:e})")]
    NotConformal { residual: f64 },

    #[error("zero denominator in eta at (b2={b2}, s={s})")]
    ZeroDenominator { b2: f64, s: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("index error: {0}")]
    Index(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unknown catalog entry `{name}`; did you mean one of {suggestions:?}")]
    UnknownCatalog {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("sampler exhausted after {attempts} attempts ({accepted} accepted)")]
    SamplerExhausted { attempts: usize, accepted: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

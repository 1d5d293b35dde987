use thiserror::Error;

/// Reason an evaluation left the real domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    NegativeBaseFractionalExponent,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainKind::LogNonPositive => "log of a non-positive argument",
            DomainKind::SqrtNegative => "sqrt of a negative argument",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NegativeBaseFractionalExponent => {
                "negative base raised to a fractional exponent"
            }
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },

    #[error("domain error: {kind}")]
    Domain { kind: DomainKind },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric is singular at {point:?}: conformal factor vanishes")]
    SingularMetric { point: Vec<f64> },

    #[error("{what} is non-finite at {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error("degenerate tensor at {point:?}: 3*f_{i}+f_{j} vanishes with nonzero derivative")]
    Degenerate { i: usize, j: usize, point: Vec<f64> },

    #[error("no admissible ratio defines the log-gradient component {component} at {point:?}")]
    NoAdmissibleRatio { component: usize, point: Vec<f64> },

    #[error("adaptive quadrature failed to reach tolerance {tol} (best error {best})")]
    QuadratureFailure { tol: f64, best: f64 },

    #[error("scale ratios disagree across components: spread {spread} exceeds tolerance {tol}")]
    ScaleInconsistent { spread: f64, tol: f64 },

    #[error("no component of the tensor is usable at the base point")]
    ScaleUndetermined,

    #[error("quadratic family is identically zero")]
    DegenerateFamily,

    #[error("tensor components vanish identically (h = 0)")]
    DegenerateTensor,

    #[error("ratio field takes a negative value at {point:?}: f changes sign")]
    NegativeRadicand { point: Vec<f64> },

    #[error("scenario schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn domain(kind: DomainKind) -> Self {
        Error::Domain { kind }
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

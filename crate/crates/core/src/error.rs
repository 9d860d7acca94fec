use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported mesh: {domain} with {kind} elements")]
    UnsupportedMesh { domain: String, kind: String },

    #[error("no quadrature rule of degree {requested} (maximum {max})")]
    QuadratureDegree { requested: usize, max: usize },

    #[error("singular local mass matrix on {0}")]
    SingularMass(String),

    #[error("inconsistent local block: {0}")]
    LocalBlock(String),

    #[error("structurally singular matrix: no pivot available at column {index}")]
    StructurallySingular { index: usize },

    #[error("numerically singular matrix: estimated reciprocal condition number {rcond:.3e}")]
    NumericallySingular { rcond: f64 },

    #[error("residual check failed: relative residual {residual:.3e} exceeds {tolerance:.1e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("case `{0}` has no exact solution")]
    MissingExact(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("cannot compute rate from non-positive error {0:e}")]
    NonPositiveError(f64),

    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("solve failed at level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

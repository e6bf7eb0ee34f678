use thiserror::Error;

/// Errors produced by the library.
///
/// `exit_code` groups them the way the CLI reports them: structural
/// assumption violations are distinguishable from numerical degeneracy.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a unit: constant term is zero or below the invertibility threshold")]
    NotAUnit,

    #[error("series square root requires constant term 1, got {0}")]
    SqrtConstantTerm(String),

    #[error("shift-divide requires a zero constant term")]
    ShiftDivide,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    RowSum { row: usize, sum: String },

    #[error("negative entry at ({i},{j})")]
    NegativeEntry { i: usize, j: usize },

    #[error("structural assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("window too small: need at least {need} states, got {got}")]
    WindowTooSmall { need: usize, got: usize },

    #[error("root finding did not converge: residual {residual:e} after {iters} iterations")]
    RootNonConvergence { residual: f64, iters: usize },

    #[error("ill-separated roots: a root lies within {band:e} of the unit circle")]
    IllSeparatedRoots { band: f64 },

    #[error("near-multiple root: |P'(z)| = {deriv:e} at z = {z}")]
    NearMultipleRoot { deriv: f64, z: String },

    #[error("start state {0} must lie in the mid class for the modified kernel")]
    StartNotMid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// CLI exit code class: 2 structural, 3 numerical degeneracy, 64 usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AssumptionViolated(_) | Error::StartNotMid(_) => 2,
            Error::RootNonConvergence { .. }
            | Error::IllSeparatedRoots { .. }
            | Error::NearMultipleRoot { .. }
            | Error::NotAUnit
            | Error::SingularSystem => 3,
            Error::Parse(_) | Error::Invalid(_) => 64,
            _ => 64,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("eigenvalue {lambda:.3e} lies on the spectral cut within noise")]
    CutAmbiguity { lambda: f64 },

    #[error("unstable rank decision: cutoff {cutoff:.1e} is not inside a gap of factor {gap:.0e}; values {values:?}")]
    UnstableRank {
        cutoff: f64,
        gap: f64,
        values: Vec<f64>,
    },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a Lagrangian projector (defect {defect:.3e})")]
    NotLagrangian { defect: f64 },

    #[error("endpoint degeneracy: W has an eigenvalue at -1 at t = {t}")]
    EndpointDegenerate { t: f64 },

    #[error("path step too coarse: {0}")]
    PathTooCoarse(String),

    #[error("branch matching ambiguous near t = {t}: {detail}")]
    BranchAmbiguity { t: f64, detail: String },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("extrapolation did not converge (residual {residual:.3e})")]
    NonConvergent { residual: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

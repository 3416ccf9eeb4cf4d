use thiserror::Error;

/// Errors raised by the numeric kernel and the modules built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("generator list is empty")]
    EmptyGenerators,
    #[error("basis is rank deficient at element {index}")]
    RankDeficient { index: usize },
    #[error("basis is not orthonormal")]
    NotOrthonormal,
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("effective state has eigenvalue {min_eigenvalue:.6e} below the PSD tolerance")]
    NonPositiveEffectiveState { min_eigenvalue: f64 },
    #[error("observability basis is not abelian (commutator norm {norm:.3e} between elements {i} and {j})")]
    NotAbelian { i: usize, j: usize, norm: f64 },
    #[error("Clausius term {index} has vanishing h_j with non-negligible dissipation")]
    SingularClausiusTerm { index: usize },
    #[error("SLD equation is singular for a mixed state (eigenvalue pair ({a}, {b}))")]
    SingularSld { a: usize, b: usize },
    #[error("length mismatch: {what} has {found}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("line search diverged at iteration {iteration}")]
    DivergentStep { iteration: usize },
}

impl Error {
    /// True for errors caused by a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveEffectiveState { .. }
                | Error::NonFiniteObjective { .. }
                | Error::DivergentStep { .. }
                | Error::SingularSld { .. }
                | Error::SingularClausiusTerm { .. }
                | Error::RankDeficient { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

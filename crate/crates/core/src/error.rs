use thiserror::Error;

#[derive(Debug, Error)]
pub enum WgmError {
    #[error("operator dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator contains a non-finite entry")]
    NonFiniteEntry,
    #[error("Fock truncation must have at least 2 levels, got {0}")]
    TruncationTooSmall(usize),
    #[error("density matrix not Hermitian: max defect {0:.3e}")]
    NotHermitian(f64),
    #[error("density matrix trace differs from 1 by {0:.3e}")]
    TraceNotUnit(f64),
    #[error("density matrix not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("|eps1| and |eps2| differ by {0:.3e} relative; the exceptional-angle formula assumes equal moduli")]
    AmplitudeMismatch(f64),
    #[error("degenerate drive: steady-state denominator {0:.3e} is singular")]
    DegenerateDrive(f64),
    #[error("transmission normalization undefined at F = 0")]
    ZeroDrive,
    #[error("Newton iteration failed to converge after {0} iterations (residual {1:.3e})")]
    NewtonDiverged(usize, f64),
    #[error("steady-state linear solve failed: {0}")]
    SolverFailure(String),
    #[error("steady state is not unique (Liouvillian null space has dimension > 1)")]
    NonUniqueSteadyState,
    #[error("mode population {0:.3e} too small for a normalized correlation function")]
    VanishingPopulation(f64),
    #[error("weak-drive amplitude block is singular (resonant degeneracy)")]
    SingularAmplitudeBlock,
    #[error("system is not at an exceptional point: min(|J1|,|J2|) = {0:.3e}")]
    NotAtExceptionalPoint(f64),
    #[error("truncation ladder exceeded cap N = {cap} without converging (last drift {drift:.3e})")]
    TruncationCapExceeded { cap: usize, drift: f64 },
    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("nucleus {index} sits exactly on lattice site {site:?}; the potential diverges there (enable the on-site cutoff to use pi*v0)")]
    NucleusOnSite { index: usize, site: [usize; 3] },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {iterations} iterations; residuals {residuals:?} (tolerance {tol:e})")]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
        tol: f64,
    },

    #[error("Hartree-Fock did not converge after {sweeps} sweeps; last orbital-energy drift {drift:e}")]
    HartreeFockNotConverged { sweeps: usize, drift: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("energy {energy} lies inside the band [{band_bottom}, {band_top}]: Green function has a pole")]
    Pole {
        energy: f64,
        band_bottom: f64,
        band_top: f64,
    },

    #[error("no sign change in bracket [{lo}, {hi}]: residuals {f_lo:e} and {f_hi:e}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("dense problem of dimension {dim} exceeds the configured limit {limit}")]
    MemoryGuard { dim: usize, limit: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("empty fit window: {0}")]
    EmptyWindow(String),

    #[error("at ratio t_f/v0 = {ratio}: {source}")]
    AtRatio {
        ratio: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed field snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an iterative method, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::NotConverged { .. }
            | Error::HartreeFockNotConverged { .. }
            | Error::NoBracket { .. } => true,
            Error::AtRatio { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

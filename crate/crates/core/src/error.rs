use thiserror::Error;

/// Errors raised across the laboratory.
///
/// The CLI maps variants onto exit codes through [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no open modes: kW/pi = {k_over_pi_w:.6} < 1")]
    NoOpenModes { k_over_pi_w: f64 },

    #[error("wavenumber too close to the cutoff of mode {mode} (distance {distance:.3e}, margin {margin:.3e})")]
    NearCutoff { mode: usize, distance: f64, margin: f64 },

    #[error(
        "grid too coarse: lattice supports {lattice} open modes but the continuum has {continuum}; raise grid_resolution"
    )]
    ResolutionTooCoarse { lattice: usize, continuum: usize },

    #[error("singular linear system in column {column} (condition estimate {condition:.3e})")]
    Singular { column: usize, condition: f64 },

    #[error("scattering matrix quality: unitarity defect {defect:.3e} exceeds {threshold:.3e}")]
    SolverQuality { defect: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("Fock sector of dimension {dimension} exceeds the cap {cap}")]
    SectorTooLarge { dimension: usize, cap: usize },

    #[error("phase aliasing: {0}")]
    PhaseAliasing(String),

    #[error("truncation budget violated: {0}")]
    Truncation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Scenario,
    Solver,
    Tolerance,
    Other,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Geometry(_)
            | Error::InvalidScenario(_)
            | Error::NoOpenModes { .. }
            | Error::NearCutoff { .. }
            | Error::ResolutionTooCoarse { .. }
            | Error::Domain(_)
            | Error::Json(_) => Category::Scenario,
            Error::Singular { .. } | Error::PhaseAliasing(_) => Category::Solver,
            Error::SolverQuality { .. } | Error::NotUnitary { .. } | Error::Truncation(_) => {
                Category::Tolerance
            }
            _ => Category::Other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

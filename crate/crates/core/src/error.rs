use thiserror::Error;

/// Errors shared across the library.
///
/// Infeasibility is a first-class outcome, not a panic: several
/// decompositions only exist when a half-line integral vanishes, and the
/// caller needs the obstruction value to report or to correct.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Cell grid too coarse to resolve the requested object.
    #[error("cell scale {cell_scale} cannot resolve an object that needs scale {required} or finer")]
    Resolution { required: i32, cell_scale: i32 },

    /// Interval endpoints do not lie on the function's cell grid.
    #[error("interval [{lo}, {hi}) is not aligned to the cell grid at scale {cell_scale}")]
    Alignment { lo: f64, hi: f64, cell_scale: i32 },

    /// A scale or size left the supported window.
    #[error("{what} = {value} outside supported range [{min}, {max}]")]
    Range {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    /// Operation requires a zero-integral input.
    #[error("input must have zero integral; got {value:e}")]
    NonzeroIntegral { value: f64 },

    /// A real-valued parameter left its mathematical domain.
    #[error("{what} = {value} outside its admissible domain")]
    Domain { what: &'static str, value: f64 },

    /// Requested decomposition flavor does not exist for this input.
    #[error("decomposition infeasible: half-line integral obstruction {obstruction}")]
    Infeasible { obstruction: f64 },

    /// Input carries mass on the wrong side of the origin.
    #[error("expected support in [0, inf); found mass {mass} at negative cells")]
    NegativeSupport { mass: f64 },

    /// Function and operator live on different grids.
    #[error("grid mismatch: operator expects scale {expected_scale} over [{expected_lo}, {expected_hi}); got scale {found_scale}")]
    GridMismatch {
        expected_scale: i32,
        expected_lo: i64,
        expected_hi: i64,
        found_scale: i32,
    },

    /// A declared-shape check failed (atom conditions, linearity probe, ...).
    #[error("contract violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

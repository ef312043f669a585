use core::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two grids that must share a shape do not.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A grid value is NaN or infinite; names the offending cell.
    NonFinite { row: usize, col: usize },
    /// A heatmap that must be a distribution has a negative entry.
    NegativeValue { row: usize, col: usize, value: f64 },
    /// A heatmap that must be a distribution does not sum to 1 within 1e-9.
    NotNormalized { sum: f64 },
    /// A distribution with zero total mass was supplied.
    DegenerateMass,
    /// The exact LP oracle only accepts small grids.
    GridTooLarge { cells: usize, limit: usize },
    /// A grid is too small to carry a ground metric (fewer than 2 cells).
    GridTooSmall { height: usize, width: usize },
    /// A point lies outside the grid it must index into.
    OutOfBounds {
        x: f64,
        y: f64,
        height: usize,
        width: usize,
    },
    /// Paired inputs have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// An input collection that must be non-empty is empty.
    EmptyInput(&'static str),
    /// A configuration or parameter value violates its invariant.
    InvalidParameter {
        what: &'static str,
        reason: &'static str,
    },
    /// Normalization distance for NME must be strictly positive.
    BadNormalization { value: f64 },
    /// A landmark-mapping index does not exist in its format.
    MappingIndex { index: usize, len: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite value at cell (row {row}, col {col})")
            }
            Error::NegativeValue { row, col, value } => write!(
                f,
                "negative value {value} at cell (row {row}, col {col}) in a distribution"
            ),
            Error::NotNormalized { sum } => {
                write!(f, "distribution sums to {sum}, expected 1 within 1e-9")
            }
            Error::DegenerateMass => write!(f, "distribution has zero total mass"),
            Error::GridTooLarge { cells, limit } => write!(
                f,
                "grid has {cells} cells; the exact LP oracle is limited to {limit}"
            ),
            Error::GridTooSmall { height, width } => {
                write!(f, "grid {height}x{width} has fewer than 2 cells")
            }
            Error::OutOfBounds {
                x,
                y,
                height,
                width,
            } => write!(
                f,
                "point ({x}, {y}) lies outside the {width}x{height} grid"
            ),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InvalidParameter { what, reason } => {
                write!(f, "invalid {what}: {reason}")
            }
            Error::BadNormalization { value } => {
                write!(f, "normalization distance must be > 0, got {value}")
            }
            Error::MappingIndex { index, len } => {
                write!(f, "mapping index {index} out of range for format of {len} landmarks")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

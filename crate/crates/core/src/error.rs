use std::fmt;

/// Which side of a table a line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("table has no strictly positive entry")]
    ZeroTable,
    #[error("{axis} {index} sums to zero")]
    ZeroLine { axis: Axis, index: usize },
    #[error("expected {expected} {axis} labels, got {found}")]
    LabelCount {
        axis: Axis,
        expected: usize,
        found: usize,
    },
    #[error("table is empty")]
    EmptyTable,
    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("model vanishes at ({row}, {col}) where the table is positive")]
    SupportMismatch { row: usize, col: usize },
    #[error("table is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("table is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("lambda {lambda} outside the admissible range [1, {max}]")]
    LambdaOutOfRange { lambda: f64, max: f64 },
    #[error("{axis} group {group} is empty")]
    EmptyGroup { axis: Axis, group: usize },
    #[error("partition has {found} entries, expected {expected}")]
    PartitionLength { expected: usize, found: usize },
    #[error("latent distribution is {rows}x{cols}, expected square")]
    SquareOnly { rows: usize, cols: usize },
    #[error("row group {group} has zero mass")]
    ZeroRowGroup { group: usize },
    #[error("model vertex weights differ from table margins by {deviation:e}")]
    MarginMismatch { deviation: f64 },
    #[error("symmetric variant requires a symmetric {what} (max asymmetry {max_asymmetry:e})")]
    SymmetryViolation {
        what: &'static str,
        max_asymmetry: f64,
    },
    #[error("emissions inconsistent with frequencies (residual {residual:e})")]
    InfeasibleWeights { residual: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

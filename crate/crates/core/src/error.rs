use std::fmt;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh too coarse: h_target = {h_target} gives {interior} interior vertices (need at least 3)")]
    MeshTooCoarse { h_target: f64, interior: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field has {got} values but mesh has {expected} vertices")]
    FieldLength { expected: usize, got: usize },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("ellipticity violated: alpha = {value:e} at x = ({x:.6}, {y:.6}) for parameter y = {param}")]
    Ellipticity {
        value: f64,
        x: f64,
        y: f64,
        param: ParamDisplay,
    },

    #[error("conjugate gradient stalled after {iterations} iterations: relative residual {residual:e} > tolerance {tolerance:e}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("level {level}, node {node}: {source}")]
    AtNode {
        level: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("variance estimate is negative beyond the clamp threshold: min {min:e} < -{threshold:e}")]
    NegativeVariance { min: f64, threshold: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("refusing to overwrite {0} (use --force)")]
    WouldOverwrite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Ellipticity { .. }
            | Error::NoConvergence { .. }
            | Error::NegativeVariance { .. }
            | Error::InvalidMesh(_)
            | Error::MeshTooCoarse { .. } => true,
            Error::AtNode { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_node(self, level: usize, node: usize) -> Error {
        Error::AtNode {
            level,
            node,
            source: Box::new(self),
        }
    }
}

/// Parameter vector formatted for diagnostics.
#[derive(Debug, Clone)]
pub struct ParamDisplay(pub Vec<f64>);

impl fmt::Display for ParamDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.6}")?;
        }
        write!(f, "]")
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum FbiError {
    #[error("configuration error: {0}")]
    Config(String),

    /// Several validation failures collected in one pass.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("element {element}: {message}")]
    Element { element: usize, message: String },

    #[error("singular beam configuration in element {element}: |r'| = {norm:e}")]
    SingularBeam { element: usize, norm: f64 },

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("coupling error: {0}")]
    Coupling(String),

    #[error("mesh file error (line {line}): {message}")]
    MeshFile { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FbiError {
    /// Short machine-readable category used by the CLI failure report and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            FbiError::Config(_) | FbiError::Validation(_) => "config",
            FbiError::Element { .. } | FbiError::SingularBeam { .. } => "element",
            FbiError::NoConvergence { .. } => "convergence",
            FbiError::LinearSolver(_) => "linear_solver",
            FbiError::Coupling(_) => "coupling",
            FbiError::MeshFile { .. } => "mesh_file",
            FbiError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, FbiError>;

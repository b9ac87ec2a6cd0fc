//! Library half of the `laguerre` binary: config schema, pipeline drivers
//! and artifact formats. Kept as a library so integration tests can parse
//! and rebuild artifacts without going through a subprocess.

pub mod atomic;
pub mod config;
pub mod csvio;
pub mod export;
pub mod report;
pub mod run;
pub mod vtk;

use thiserror::Error;

/// Version stamp written into every artifact header.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level failure classes, one per reserved exit code. Everything the
/// binary can fail with is folded into one of these three.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Single-line machine-readable error record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

// Input-shape problems (bad domain, coincident input seeds, inconsistent
// counts, nonsense tolerances) are config errors; only conditions arising
// during computation count as solver failures.
impl From<laguerre::diagram::DiagramError> for CliError {
    fn from(e: laguerre::diagram::DiagramError) -> Self {
        use laguerre::diagram::DiagramError as E;
        match e {
            E::CellExceedsMinimalImage(_) => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<laguerre::transport::TransportError> for CliError {
    fn from(e: laguerre::transport::TransportError) -> Self {
        use laguerre::transport::TransportError as E;
        match e {
            E::Diagram(inner) => inner.into(),
            E::Stalled { .. } | E::MaxIterations { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<laguerre::lloyd::LloydError> for CliError {
    fn from(e: laguerre::lloyd::LloydError) -> Self {
        use laguerre::lloyd::LloydError as E;
        match e {
            E::Transport(inner) => inner.into(),
            E::BadIterations(_) | E::BadDamping(_) => CliError::Config(e.to_string()),
            E::EmptyCell { .. } | E::EnergyIncreased { .. } => CliError::Solver(e.to_string()),
        }
    }
}

// Bad seed/target specs are user input problems, not solver failures.
impl From<laguerre::seeding::SeedingError> for CliError {
    fn from(e: laguerre::seeding::SeedingError) -> Self {
        CliError::Config(e.to_string())
    }
}

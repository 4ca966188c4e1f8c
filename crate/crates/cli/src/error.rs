/// Command-level failures, each mapped to a process exit code: configuration
/// and input-file problems exit 1, simulation or output errors exit 2, and a
/// table build with failed nodes exits 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("{count} grid node(s) failed tuning")]
    NodeFailures { count: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Run(_) => 2,
            CliError::NodeFailures { .. } => 3,
        }
    }

    pub fn config(msg: impl core::fmt::Display) -> CliError {
        CliError::Config(msg.to_string())
    }

    pub fn run(msg: impl core::fmt::Display) -> CliError {
        CliError::Run(msg.to_string())
    }
}

//! Experiment harness for the jgsa library: configuration, baselines,
//! reports, and the end-to-end runner behind the `jgsa` binary.

pub mod baselines;
pub mod config;
pub mod report;
pub mod runner;

/// Harness-level failures, grouped by exit code: config errors exit 2,
/// data errors 3, numerical failures 4.
#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "config error: {m}"),
            HarnessError::Data(m) => write!(f, "data error: {m}"),
            HarnessError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

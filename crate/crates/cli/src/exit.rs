use std::fmt;

use codesign_core::CodesignError;

/// Failure classes, one per process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Solver(CodesignError),
    /// A verification check failed; reported with the solver exit code.
    Verification(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Solver(e) => match e {
                CodesignError::AllStartsFailed { .. } => 4,
                CodesignError::DimensionTooLarge { .. } => 5,
                CodesignError::Diverged { .. } | CodesignError::TooManyDiverged { .. } => 6,
                _ => 3,
            },
            CliError::Verification(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Solver(_) => match self.code() {
                4 => "all_starts_failed",
                5 => "dimension_cap",
                6 => "simulation_divergence",
                _ => "solver",
            },
            CliError::Verification(_) => "verification",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Verification(m) => f.write_str(m),
            CliError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl From<CodesignError> for CliError {
    fn from(e: CodesignError) -> Self {
        CliError::Solver(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

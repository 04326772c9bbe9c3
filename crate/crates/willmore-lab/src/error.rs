use std::fmt;

use willmore_core::Error as CoreError;

/// Exit code for invalid configuration or unusable input.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for solver failures on valid input.
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug)]
pub enum LabError {
    Core(CoreError),
    Io(std::io::Error),
    /// Unparseable or inconsistent mesh file.
    Format(String),
    /// Invalid command-line configuration.
    Config(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) => match e {
                CoreError::SingularInversion
                | CoreError::AtomicConcentration
                | CoreError::EmptyBallSearchFailed
                | CoreError::LinearSolveFailure { .. }
                | CoreError::NewtonStagnation { .. }
                | CoreError::IllConditionedPeriods
                | CoreError::UniformizationResidual(_) => EXIT_SOLVER,
                _ => EXIT_VALIDATION,
            },
            _ => EXIT_VALIDATION,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Core(e) => write!(f, "{e}"),
            LabError::Io(e) => write!(f, "io error: {e}"),
            LabError::Format(msg) => write!(f, "file format: {msg}"),
            LabError::Config(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<CoreError> for LabError {
    fn from(e: CoreError) -> Self {
        LabError::Core(e)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e)
    }
}

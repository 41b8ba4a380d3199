use sensorctl_core::dmc::DmcError;
use sensorctl_core::lqg::LqgError;
use sensorctl_core::machine_repair::MachineRepairError;
use sensorctl_core::pomdp::PomdpError;
use sensorctl_core::schedule::ScheduleError;
use thiserror::Error;

/// Failure categories, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    ModelInvalid(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::ModelInvalid(_) => "model-invalid",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::ModelInvalid(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<MachineRepairError> for CliError {
    fn from(e: MachineRepairError) -> Self {
        match e {
            MachineRepairError::ZeroProbabilityMeasurement => CliError::Numeric(e.to_string()),
            _ => CliError::ModelInvalid(e.to_string()),
        }
    }
}

impl From<PomdpError> for CliError {
    fn from(e: PomdpError) -> Self {
        match e {
            PomdpError::ZeroProbabilityMeasurement { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::ModelInvalid(e.to_string()),
        }
    }
}

impl From<LqgError> for CliError {
    fn from(e: LqgError) -> Self {
        match e {
            LqgError::SingularInnovation { .. } | LqgError::SingularControlWeight { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::ModelInvalid(e.to_string()),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Lqg(inner) => inner.into(),
            ScheduleError::SearchSpaceTooLarge { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::ModelInvalid(e.to_string()),
        }
    }
}

impl From<DmcError> for CliError {
    fn from(e: DmcError) -> Self {
        match e {
            DmcError::NoMinimizer { .. } | DmcError::RootFinderFailure(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::ModelInvalid(e.to_string()),
        }
    }
}

use std::path::Path;

use ftmav_core::control::ControlError;
use ftmav_core::maneuverability::ManeuverError;
use ftmav_core::planner::PlanError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
    #[error("unknown table id `{0}`")]
    UnknownTable(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 2 config or input, 3 infeasible, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Infeasible(_) => 3,
            HarnessError::Numerical(_) => 4,
            _ => 2,
        }
    }
}

impl From<PlanError> for HarnessError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Infeasible(_) | PlanError::NoFeasibleTime => HarnessError::Infeasible(e.to_string()),
            PlanError::InvalidMission(_) | PlanError::MissingPolytope(_) | PlanError::EmptyFaultList => {
                HarnessError::Config(e.to_string())
            }
            PlanError::SolverStalled { .. } | PlanError::Maneuver(_) => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<ManeuverError> for HarnessError {
    fn from(e: ManeuverError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

impl From<ControlError> for HarnessError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Vehicle(_) | ControlError::Actuation(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] ri_mech::Error),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("output: {0}")]
    Output(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {name}: {source}")]
    Scenario {
        name: String,
        #[source]
        source: Box<RunError>,
    },
}

impl RunError {
    /// True for problems with the scenario document itself.
    pub fn is_config(&self) -> bool {
        match self {
            RunError::Config(_) | RunError::Parameter(_) => true,
            RunError::Scenario { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use std::fmt;

/// Stable exit codes: config errors 2, corpus errors 3, missing stage
/// dependencies 4, anything else 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Corpus(String),
    DependencyMissing(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Corpus(_) => 3,
            CliError::DependencyMissing(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Corpus(m) => write!(f, "corpus error: {m}"),
            CliError::DependencyMissing(m) => write!(f, "missing dependency: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<molforge_core::chem::CorpusError> for CliError {
    fn from(e: molforge_core::chem::CorpusError) -> Self {
        CliError::Corpus(e.to_string())
    }
}

impl From<molforge_core::training::TrainingError> for CliError {
    fn from(e: molforge_core::training::TrainingError) -> Self {
        match e {
            molforge_core::training::TrainingError::Corpus(c) => CliError::Corpus(c.to_string()),
            molforge_core::training::TrainingError::BadConfig(m) => CliError::Config(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<molforge_core::guidance::GuidanceError> for CliError {
    fn from(e: molforge_core::guidance::GuidanceError) -> Self {
        match e {
            molforge_core::guidance::GuidanceError::BadConfig(m) => CliError::Config(m),
            molforge_core::guidance::GuidanceError::MissingModule(what, which) => {
                CliError::DependencyMissing(format!("{what} needs {which}"))
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<molforge_core::eval::EvalError> for CliError {
    fn from(e: molforge_core::eval::EvalError) -> Self {
        match e {
            molforge_core::eval::EvalError::EmptySampleSet => {
                CliError::Corpus("sample file has no usable lines".into())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<molforge_core::numeric::CheckpointError> for CliError {
    fn from(e: molforge_core::numeric::CheckpointError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

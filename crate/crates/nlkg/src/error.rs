use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error(transparent)]
    Numerical(#[from] nlkg_core::Error),
}

impl CliError {
    /// `2` for configuration problems, `3` for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use nlkg_core::Error as E;
        match self {
            CliError::Numerical(E::InvalidParams(_) | E::CflViolation { .. } | E::GridTooCoarse { .. }) => 2,
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Config(_) => "Config".into(),
            CliError::Io(_) => "Io".into(),
            CliError::MissingColumn(_) => "MissingColumn".into(),
            CliError::Numerical(e) => {
                let name = format!("{e:?}");
                name.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

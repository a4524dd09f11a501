use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("config field `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn from_toml(text: &str, err: &toml::de::Error) -> Self {
        let (line, column) = match err.span() {
            Some(span) => {
                let before = &text[..span.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
                (line, column)
            }
            None => (0, 0),
        };
        ConfigError::Parse {
            line,
            column,
            message: err.message().to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: &'static str,
        #[source]
        source: fiberqed::Error,
    },

    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) trait Context<T> {
    fn context(self, scenario: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for fiberqed::Result<T> {
    fn context(self, scenario: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Scenario { scenario, source })
    }
}

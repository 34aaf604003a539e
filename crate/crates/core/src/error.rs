use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{field} = {value} is out of range, expected {expected}")]
    OutOfRange {
        field: String,
        value: i64,
        expected: String,
    },

    #[error("{what} needs {required} but the limit is {limit}")]
    Guard {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn out_of_range(field: impl Into<String>, value: i64, expected: impl Into<String>) -> Self {
        Error::OutOfRange {
            field: field.into(),
            value,
            expected: expected.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// CLI failures, each mapped to a stable exit code and a machine-readable
/// kind emitted in the JSON error object.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read input file {path}: {source}")]
    MissingInput {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("no usable rows after dropping incomplete ones ({dropped} dropped); need at least 2")]
    NoUsableRows { dropped: usize },

    #[error("response has zero sample variance")]
    ZeroVariance,

    #[error("invalid arguments: {0}")]
    BadArguments(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] cpreg::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput { .. } => 2,
            CliError::MissingColumn(_) => 3,
            CliError::NoUsableRows { .. } => 4,
            CliError::ZeroVariance => 5,
            CliError::BadArguments(_) => 6,
            CliError::Core(cpreg::Error::InvalidConfig(_)) => 6,
            CliError::Csv(_) | CliError::Io(_) | CliError::Core(_) => 7,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingInput { .. } => "missing_input",
            CliError::MissingColumn(_) => "missing_column",
            CliError::NoUsableRows { .. } => "no_usable_rows",
            CliError::ZeroVariance => "zero_variance",
            CliError::BadArguments(_) => "bad_arguments",
            CliError::Csv(_) => "csv",
            CliError::Io(_) => "io",
            CliError::Core(cpreg::Error::InvalidConfig(_)) => "bad_arguments",
            CliError::Core(_) => "computation",
        }
    }
}

use thiserror::Error;
use varfrac_core::VarfracError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(VarfracError),

    #[error("{0} of {1} inequality checks failed")]
    InequalityFailed(usize, usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::InequalityFailed(..) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<VarfracError> for CliError {
    fn from(e: VarfracError) -> Self {
        match e {
            VarfracError::InvalidParameter { .. } | VarfracError::DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

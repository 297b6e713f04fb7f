use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("input: {0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Model(#[from] mspl::Error),
}

impl CliError {
    /// Every error the CLI reports is a validation failure in the exit-code
    /// sense: bad flags, bad input files, or inputs the model rejects.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

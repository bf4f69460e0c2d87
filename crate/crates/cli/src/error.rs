use maserbat::MaserError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Model(#[from] MaserError),
    #[error("fine-tuned run left its chamber: population {0:e} above the first chamber")]
    Trapping(f64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            CliError::Trapping(_) => 2,
            _ => 1,
        }
    }
}

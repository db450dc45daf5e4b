//! Command errors mapped onto process exit codes.
//!
//! 0 success, 1 I/O or schema problems, 2 degenerate analysis,
//! 3 numeric divergence.

use thiserror::Error;

pub type CmdResult<T> = Result<T, CmdError>;

#[derive(Debug, Error)]
pub enum CmdError {
    /// Unreadable input, malformed CSV/JSON, or a rejected configuration.
    #[error("{0}")]
    Schema(String),

    /// Structurally valid input on which the requested analysis is
    /// undefined (unidentifiable fit, too few levels or samples).
    #[error("{0}")]
    Degenerate(String),

    /// The simulation state diverged.
    #[error("{0}")]
    Divergence(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Schema(_) => 1,
            CmdError::Degenerate(_) => 2,
            CmdError::Divergence(_) => 3,
        }
    }
}

/// Maps a core error into the exit-code taxonomy, with context.
pub fn from_core(context: &str, err: phri_core::Error) -> CmdError {
    use phri_core::Error as E;
    let msg = format!("{context}: {err}");
    match err {
        E::NonFiniteState(_) => CmdError::Divergence(msg),
        E::InsufficientData { .. } | E::DegenerateData(_) | E::ZeroVariance => {
            CmdError::Degenerate(msg)
        }
        _ => CmdError::Schema(msg),
    }
}

pub fn io_err(context: &str, err: std::io::Error) -> CmdError {
    CmdError::Schema(format!("{context}: {err}"))
}

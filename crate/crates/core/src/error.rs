use std::fmt;

use thiserror::Error;

use crate::io::config::ConfigError;

pub type Result<T> = std::result::Result<T, Error>;

/// Per-term breakdown of a time-step computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CflBreakdown {
    pub acoustic: f64,
    pub kinetic_transport: f64,
    pub viscous: f64,
    pub characteristic: f64,
    pub drag_stiffness: f64,
    pub max_dt: f64,
    pub safety: f64,
}

impl CflBreakdown {
    pub fn min_term(&self) -> f64 {
        [
            self.acoustic,
            self.kinetic_transport,
            self.viscous,
            self.characteristic,
            self.drag_stiffness,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for CflBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "acoustic={:e} transport={:e} viscous={:e} characteristic={:e} drag={:e} max_dt={:e} safety={}",
            self.acoustic,
            self.kinetic_transport,
            self.viscous,
            self.characteristic,
            self.drag_stiffness,
            self.max_dt,
            self.safety
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value at cell {index}")]
    NonFinite { index: usize },

    #[error("negative density {value:e} at cell {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("support escaped the phase box at x={x:?}, v={v:?}; enlarge v_max")]
    SupportEscape { x: Vec<f64>, v: Vec<f64> },

    #[error("alignment fields are stale (built at epoch {fields}, state is at epoch {state})")]
    StaleFields { fields: u64, state: u64 },

    #[error("characteristic exponent (1+a)*dt = {exponent} exceeds 30; reduce the time step")]
    Timestep { exponent: f64 },

    #[error("negative density {value:e} at cell {cell} after fluid step; retry with dt <= {suggested_dt:e}")]
    CflViolation {
        cell: usize,
        value: f64,
        suggested_dt: f64,
    },

    #[error("time step underflow (dt={dt:e}): {breakdown}")]
    DtUnderflow { dt: f64, breakdown: CflBreakdown },

    #[error("grid or shape mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Snapshot(_) => 4,
            _ => 3,
        }
    }
}

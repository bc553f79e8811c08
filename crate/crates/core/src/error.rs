use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsapError {
    #[error("invalid spin magnitude: 2s = {0} (must be >= 1)")]
    InvalidSpin(u32),

    #[error("invalid spin label {0:?}")]
    SpinLabel(String),

    #[error("projection 2m = {two_m} is not a level of spin 2s = {twice_s}")]
    InvalidProjection { two_m: i32, twice_s: u32 },

    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),

    #[error("empty excitation sector: N = {requested} (allowed 0..={max})")]
    EmptySector { requested: usize, max: usize },

    #[error("basis state {0} is not a member of this block")]
    StateNotInBlock(String),

    #[error("malformed basis label {0:?}")]
    BadLabel(String),

    #[error("time {t} outside the pulse window [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("full product space has dimension {dim}, above the guard of {guard}")]
    DimensionGuard { dim: usize, guard: usize },

    #[error("propagation failed at t = {t}: {reason}")]
    Propagation { t: f64, reason: String },

    #[error("eigensolver failed at t = {0}")]
    Eigensolver(f64),

    #[error("initial state is not an eigenvector of H(0): residual {0:e}")]
    NotAnEigenvector(f64),

    #[error("invalid site selection: {0}")]
    InvalidSites(String),

    #[error("density matrix trace {0} deviates from 1")]
    TraceDeviation(f64),

    #[error("states belong to different blocks")]
    BlockMismatch,

    #[error("no tabulated final state for 2s = {twice_s}, n = {leaves}, N = {excitations}")]
    NotTabulated {
        twice_s: u32,
        leaves: usize,
        excitations: usize,
    },

    #[error("residual excitation {0:e} on L or M")]
    ResidualExcitation(f64),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("sweep needs ≥ 2 sweep points")]
    SweepPoints,

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, DsapError>;

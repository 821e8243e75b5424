use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unsupported topology: {0}")]
    Topology(String),
    #[error("scale ODE aborted at t = {t}: {reason}")]
    ScaleOde { t: f64, reason: String },
    #[error("time step failed at t = {t}: {reason}")]
    Cfl { t: f64, reason: String },
    #[error("monitor `{monitor}` breached at t = {t}: measured {measured:.3e} > tolerance {tolerance:.3e}")]
    Monitor {
        monitor: &'static str,
        t: f64,
        measured: f64,
        tolerance: f64,
    },
    #[error("insufficient window: {0}")]
    Window(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

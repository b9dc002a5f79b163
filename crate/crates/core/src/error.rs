use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoeffError {
    #[error("theta = {0} lies outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("theta^2 = 1/5: delta1 does not depend on lambda1 (parabola case), use evaluate_p")]
    ParabolaCase,
    #[error("coefficients are inadmissible: need gamma1 >= 0 and delta1 > 0, got gamma1 = {gamma1}, delta1 = {delta1}")]
    Inadmissible { gamma1: f64, delta1: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispersionError {
    #[error("model phase speed denominator vanishes at k = {0}")]
    VanishingDenominator(f64),
    #[error("unsupported Taylor order {0}; expected one of 0, 2, 4, 6")]
    UnsupportedOrder(usize),
    #[error("invalid dispersion grid: k_max = {k_max}, n = {n}")]
    InvalidGrid { k_max: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid size {0} is not a power of two >= 4")]
    BadSize(usize),
    #[error("domain length {0} must be positive and finite")]
    BadLength(f64),
    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error(
        "inverse transform left an imaginary residue {residue:e} (relative), expected a real field"
    )]
    ImaginaryResidue { residue: f64 },
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("solution blew up after t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("trajectory needs at least {needed} snapshots, has {got}")]
    ShortTrajectory { needed: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
}

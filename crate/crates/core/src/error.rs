use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("lattice volume overflows the platform integer width")]
    VolumeOverflow,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("slab interval [{lo}, {hi}] out of range 1..={len} on axis {axis}")]
    SlabOutOfRange {
        axis: usize,
        lo: i64,
        hi: i64,
        len: usize,
    },

    #[error("invalid field spec: {0}")]
    InvalidSpec(String),

    #[error("invalid mixing profile: {0}")]
    InvalidProfile(String),

    #[error("mixing hypothesis violated: rho'({lag}) = {value} is not < 1")]
    MixingHypothesis { lag: usize, value: f64 },

    #[error("quadrature too coarse: {points} points per axis, at least {required} required")]
    QuadratureResolution { points: usize, required: usize },

    #[error("n too small for blocking: {0}")]
    Blocking(String),

    #[error("degenerate limit variance (sigma^2 = 0): {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative count {value} at cell {index}")]
    NegativeCount { index: usize, value: i64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("table has no observations")]
    EmptyTable,
    #[error("probability vector is not on the simplex")]
    NotOnSimplex,
    #[error("odds ratio is 0/0")]
    IndeterminateOddsRatio,
    #[error("gamma is undefined: no concordant or discordant pairs")]
    GammaUndefined,
    #[error("row {0} has zero probability mass")]
    ZeroRowMass(usize),
    #[error("margins are inconsistent")]
    InconsistentMargins,
    #[error("prior concentration must be positive, got {0}")]
    NonPositivePrior(f64),
    #[error("Dirichlet draw degenerated to zero mass")]
    DegenerateDraw,
    #[error("observed point is not in the sample space")]
    ObservedNotInSpace,
    #[error("partitions overlap at point {0}")]
    OverlappingPartitions(usize),
    #[error("finite model: {0}")]
    InvalidModel(&'static str),
    #[error("prior mass of the non-discovery event is zero")]
    EmptyNullEvent,
    #[error("prior mass of the discovery event is zero")]
    EmptyDiscoveryEvent,
    #[error("all resampling weights are zero")]
    AllZeroWeights,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("sampler failure: {0}")]
    Sampler(&'static str),
}

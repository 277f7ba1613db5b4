use thiserror::Error;

/// Every failure the planning pipeline can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("query point at y = {y} lies within the edge singularity band")]
    EdgeSingularity { y: f64 },
    #[error("safety distance Dmin = {dmin} is not positive")]
    NonpositiveSafetyDistance { dmin: f64 },
    #[error("gradient vanished at ({x}, {y}) before reaching the target")]
    LocalMinimumStall { x: f64, y: f64 },
    #[error("descent exceeded {0} steps")]
    MaxStepsExceeded(usize),
    #[error("weighted normal matrix is singular (need four distinct abscissae)")]
    DegenerateFit,
    #[error("constraint window is empty: x_start {x_start} >= x_end {x_end}")]
    EmptyWindow { x_start: f64, x_end: f64 },
    #[error("no cubic satisfies the corridor constraints")]
    Infeasible,
    #[error("active-set solver hit its iteration cap")]
    SolverStall,
    #[error("sideslip {beta_deg} deg exceeds the model's sanity bound")]
    NumericBlowup { beta_deg: f64 },
    #[error("cross-track error {error} m exceeded the divergence limit")]
    TrackingDiverged { error: f64 },
    #[error("lateral displacement {displacement} m is too small to be a lane change")]
    NoLaneChangeDetected { displacement: f64 },
    #[error("time to collision {ttc} s is below the gate threshold")]
    BrakeFirst { ttc: f64 },
    #[error("invalid input: {0}")]
    Invalid(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

//! One-dimensional dynamics on the fiber `[0, 1]`.

mod independence;
mod intersection;
mod map;
mod ns;
mod proportion;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use independence::{
    rational_independence, rotation_density_check, select_independent, DensityVerdict,
    IndependenceValue,
};
pub use intersection::{
    center_intersection_search, intersection_oracle, threshold_analysis, IntersectionCertificate,
    OraclePair, SearchBudget, ThresholdReport, ORACLE_PAIR_CAP,
};
pub use map::{
    estimate_holder, image, iterate, Composed, Flipped, Identity, Inverse, IntervalMap,
    IntervalMapSpec, Linear, MapRef, Mobius, Polynomial, Rescaled, Smoothness,
};
pub use ns::{ns_analyze, NsModel};
pub use proportion::{uniform_proportion_check, ProportionReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("multiplier at the sink is {alpha}, not below 1")]
    NotContracting { alpha: f64 },
    #[error("fixed-point search failed: {reason}")]
    RootFindFail { reason: String },
    #[error("precondition violated: {reason}")]
    PreconditionViolated { reason: String },
    #[error("|J| = {length} does not exceed the threshold L = {threshold} at epsilon = {epsilon}")]
    ThresholdNotMet { length: f64, threshold: f64, epsilon: f64 },
    #[error("only {found} index pairs found, {required} required")]
    BudgetExhausted { found: usize, required: usize, partial: Box<IntersectionCertificate> },
    #[error("fundamental domains leave the analyzed neighborhood: {reason}")]
    RangeOutsideNeighborhood { reason: String },
    #[error("measured distortion ratio {measured} is below the bound {bound}")]
    DistortionBoundViolated { measured: f64, bound: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// A closed subinterval `[lo, hi]` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ClosedInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FiberError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(FiberError::InvalidInterval { lo, hi });
        }
        Ok(ClosedInterval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// Overlap length, or `None` when the intervals are disjoint.
    pub fn overlap(&self, other: &ClosedInterval) -> Option<f64> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(hi - lo)
    }

    pub fn intersection(&self, other: &ClosedInterval) -> Option<ClosedInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(ClosedInterval { lo, hi })
    }
}

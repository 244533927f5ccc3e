//! Desk-scale experiments on the skew product: orbit coverage, basin
//! classification, density of periodic Birkhoff sums, the periodic-orbit
//! sequence with shrinking independence values, Pliss rotations, and the
//! symbolic counterexample.
//!
//! These measure consistency with the theorems; none of them proves
//! anything.

mod ari;
mod basins;
mod counterexample;
mod density;
mod pliss;
mod transitivity;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::FiberError;
use crate::skew::{Boundary, FiberPoint, SkewError, SkewProduct};
use crate::torus::TorusError;

pub use ari::{
    ari_sequence_build, candidate_pool, AriReport, AriSetup, AriStep, Chosen, PlissSummary,
    PseudoOrbitLengths,
};
pub use basins::{
    basin_budget_stability, classify_grid, intermingled_basins_scan, Basin, BasinReport,
    BudgetStability, CellCounts,
};
pub use counterexample::{
    default_intervals, horseshoe_counterexample_demo, CounterexampleReport, CounterexampleSetup, SymbolicFixedPoint,
};
pub use density::{birkhoff_density_scan, DensityReport, Histogram};
pub use pliss::{pliss_reindex, PlissReport};
pub use transitivity::{transitivity_probe, CoverageReport, Reachability};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid grid: {field} {reason}")]
    InvalidGrid { field: &'static str, reason: String },
    #[error("boundary {boundary:?} is not mostly contracting: {reason}")]
    NotMostlyContracting { boundary: Boundary, reason: String },
    #[error("hypothesis unmet: {reason}")]
    HypothesisUnmet { reason: String },
    #[error("no candidate orbit for the dyadic window at m = {m} ({achieved} levels built)")]
    CandidateExhausted { m: u32, achieved: u32, partial: Box<AriReport> },
    #[error("no Pliss time: {reason}")]
    NoPlissTime { reason: String },
    #[error("interval orbits meet at n = {n}: overlap {overlap:e}")]
    IntervalsNotSeparated { n: i64, overlap: f64 },
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

/// Cell grid on `T^d x [0, 1]` with sampling budget and classifier
/// thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Subdivisions per base axis.
    pub base_cells: usize,
    /// Subdivisions of the fiber.
    pub fiber_cells: usize,
    pub iterations: u64,
    pub samples_per_cell: usize,
    pub seed: u64,
    /// `theta_0`: a sample belongs to `B(mu_0)` when its trailing mean of
    /// `t` is below `theta_0`, to `B(mu_1)` when above `1 - theta_0`.
    pub threshold: f64,
    /// Share of the iterations averaged by the classifier.
    pub trailing_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            base_cells: 8,
            fiber_cells: 4,
            iterations: 100_000,
            samples_per_cell: 100,
            seed: 0,
            threshold: 0.05,
            trailing_fraction: 0.1,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |field, reason: &str| Err(ExperimentError::InvalidGrid { field, reason: reason.into() });
        if self.base_cells == 0 {
            return bad("base_cells", "must be positive");
        }
        if self.fiber_cells == 0 {
            return bad("fiber_cells", "must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations", "must be positive");
        }
        if self.samples_per_cell == 0 {
            return bad("samples_per_cell", "must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 0.5) {
            return bad("threshold", "must lie in (0, 1/2)");
        }
        if !(self.trailing_fraction > 0.0 && self.trailing_fraction <= 1.0) {
            return bad("trailing_fraction", "must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn cell_count(&self, dim: usize) -> usize {
        self.base_cells.pow(dim as u32) * self.fiber_cells
    }

    /// Cell of `(x, p)`: base cells vary fastest, the fiber layer slowest.
    pub fn cell_of(&self, x: &[f64], p: FiberPoint) -> usize {
        let n = self.base_cells;
        let mut idx = 0;
        for xi in x.iter().rev() {
            idx = idx * n + ((xi * n as f64) as usize).min(n - 1);
        }
        idx + self.base_cells.pow(x.len() as u32) * self.layer_of(p)
    }

    pub fn layer_of(&self, p: FiberPoint) -> usize {
        let m = self.fiber_cells;
        // near the top, read the layer off s to keep it exact
        let layer = if p.t <= 0.5 {
            (p.t * m as f64) as usize
        } else {
            m.saturating_sub((p.s * m as f64).ceil() as usize)
        };
        layer.min(m - 1)
    }

    /// Lower corner of the base part of a cell and its fiber layer.
    pub fn cell_origin(&self, cell: usize, dim: usize) -> (Vec<f64>, usize) {
        let n = self.base_cells;
        let per_layer = n.pow(dim as u32);
        let (mut b, layer) = (cell % per_layer, cell / per_layer);
        let mut x = Vec::with_capacity(dim);
        for _ in 0..dim {
            x.push((b % n) as f64 / n as f64);
            b /= n;
        }
        (x, layer)
    }
}

/// One step of `F` on `(x, p)` in place; `scratch` must have the length of
/// `x`.
pub(crate) fn advance(f: &SkewProduct, x: &mut Vec<f64>, scratch: &mut Vec<f64>, p: FiberPoint) -> FiberPoint {
    let q = f.fiber().step(x, p);
    f.base().apply_float_into(x, scratch);
    std::mem::swap(x, scratch);
    q
}

/// Generator for work item `stream` of a run seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_round_trip() {
        let g = GridSpec { base_cells: 16, fiber_cells: 8, ..Default::default() };
        for cell in [0, 17, 255, 256, 2047] {
            let (x, layer) = g.cell_origin(cell, 2);
            let centre: Vec<f64> = x.iter().map(|c| c + 0.5 / 16.0).collect();
            let t = (layer as f64 + 0.5) / 8.0;
            assert_eq!(g.cell_of(&centre, FiberPoint::new(t)), cell);
        }
        assert_eq!(g.layer_of(FiberPoint::TOP), 7);
        assert_eq!(g.layer_of(FiberPoint::BOTTOM), 0);
    }

    #[test]
    fn zero_sizes_are_rejected() {
        let g = GridSpec { fiber_cells: 0, ..Default::default() };
        assert!(matches!(g.validate(), Err(ExperimentError::InvalidGrid { field: "fiber_cells", .. })));
        assert!(GridSpec::default().validate().is_ok());
    }
}

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::skew::{mostly_contracting_check, Boundary, FiberPoint, Sign, SkewError, SkewProduct};

use super::{advance, stream_rng, ExperimentError, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    /// Basin of the SRB measure on the bottom torus.
    Bottom,
    Top,
    Unresolved,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub bottom: u32,
    pub top: u32,
    pub unresolved: u32,
}

impl CellCounts {
    pub fn total(&self) -> u32 {
        self.bottom + self.top + self.unresolved
    }

    fn add(&mut self, b: Basin) {
        match b {
            Basin::Bottom => self.bottom += 1,
            Basin::Top => self.top += 1,
            Basin::Unresolved => self.unresolved += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub grid: GridSpec,
    pub trailing_window: u64,
    pub cells: Vec<CellCounts>,
    pub samples: u64,
    pub bottom_fraction: f64,
    pub top_fraction: f64,
    /// Share of samples classified to either basin.
    pub union_fraction: f64,
    pub min_bottom_fraction: f64,
    pub min_top_fraction: f64,
    /// Quadrature values on the bottom and top boundary when checked.
    pub boundary_integrals: Option<[f64; 2]>,
}

impl BasinReport {
    /// Rows `cell, layer, bottom, top, unresolved` for CSV export.
    pub fn rows(&self, dim: usize) -> Vec<(usize, usize, CellCounts)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(c, counts)| (c, self.grid.cell_origin(c, dim).1, *counts))
            .collect()
    }
}

/// Fiber point below which `t` (or `1 - t`) is treated as absorbed.
///
/// Once `t` is subnormal, the trailing mean is decided: climbing back to
/// `theta_0` needs `ln t` to rise by about 700 against the negative drift.
const ABSORBED: f64 = f64::MIN_POSITIVE;

fn classify(f: &SkewProduct, mut x: Vec<f64>, mut p: FiberPoint, grid: &GridSpec, window: u64) -> Basin {
    let n = grid.iterations;
    let window_start = n - window;
    let mut scratch = vec![0.0; x.len()];
    let mut sum = 0.0;
    for i in 0..n {
        if p.t < ABSORBED || p.s < ABSORBED {
            let remaining = (n - i.max(window_start)) as f64;
            if p.s < ABSORBED {
                sum += remaining;
            }
            break;
        }
        p = advance(f, &mut x, &mut scratch, p);
        if i >= window_start {
            sum += p.t;
        }
    }
    let mean = sum / window as f64;
    if mean < grid.threshold {
        Basin::Bottom
    } else if mean > 1.0 - grid.threshold {
        Basin::Top
    } else {
        Basin::Unresolved
    }
}

/// Classify `samples_per_cell` seeded points of every cell by the trailing
/// mean of `t`, with no check on the boundary exponents.
///
/// Cell `c` draws its samples from stream `c` of the seed, so the counts do
/// not depend on the worker count.
pub fn classify_grid(f: &SkewProduct, grid: &GridSpec) -> Result<BasinReport, ExperimentError> {
    grid.validate()?;
    let d = f.base().dim();
    let window = ((grid.iterations as f64 * grid.trailing_fraction).ceil() as u64).clamp(1, grid.iterations);
    let width = 1.0 / grid.base_cells as f64;
    let height = 1.0 / grid.fiber_cells as f64;
    let cells: Vec<CellCounts> = (0..grid.cell_count(d))
        .into_par_iter()
        .map(|cell| {
            let (origin, layer) = grid.cell_origin(cell, d);
            let mut rng = stream_rng(grid.seed, cell as u64);
            let mut counts = CellCounts::default();
            for _ in 0..grid.samples_per_cell {
                let x: Vec<f64> = origin.iter().map(|o| o + width * rng.random::<f64>()).collect();
                let t = (layer as f64 + rng.random::<f64>()) * height;
                counts.add(classify(f, x, FiberPoint::new(t), grid, window));
            }
            counts
        })
        .collect();
    let samples: u64 = cells.iter().map(|c| c.total() as u64).sum();
    let total = |g: fn(&CellCounts) -> u32| cells.iter().map(|c| g(c) as u64).sum::<u64>() as f64 / samples as f64;
    let per_cell_min = |g: fn(&CellCounts) -> u32| {
        cells.iter().map(|c| g(c) as f64 / c.total() as f64).fold(f64::INFINITY, f64::min)
    };
    let bottom_fraction = total(|c| c.bottom);
    let top_fraction = total(|c| c.top);
    Ok(BasinReport {
        grid: *grid,
        trailing_window: window,
        samples,
        bottom_fraction,
        top_fraction,
        union_fraction: bottom_fraction + top_fraction,
        min_bottom_fraction: per_cell_min(|c| c.bottom),
        min_top_fraction: per_cell_min(|c| c.top),
        cells,
        boundary_integrals: None,
    })
}

/// Basin scan for a system that is mostly contracting on both boundaries.
pub fn intermingled_basins_scan(f: &SkewProduct, grid: &GridSpec) -> Result<BasinReport, ExperimentError> {
    let mut integrals = [0.0; 2];
    for (i, b) in [Boundary::Bottom, Boundary::Top].into_iter().enumerate() {
        let q = match mostly_contracting_check(f, b, 64) {
            Ok(q) => q,
            Err(SkewError::InconclusiveSign { value, error }) => {
                return Err(ExperimentError::NotMostlyContracting {
                    boundary: b,
                    reason: format!("integral {value:e} within its error {error:e}"),
                })
            }
            Err(e) => return Err(e.into()),
        };
        if q.sign != Sign::Negative {
            return Err(ExperimentError::NotMostlyContracting {
                boundary: b,
                reason: format!("integral {:e} is positive", q.value),
            });
        }
        integrals[i] = q.value;
    }
    let mut report = classify_grid(f, grid)?;
    report.boundary_integrals = Some(integrals);
    Ok(report)
}

/// Agreement of two scans that differ only in the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetStability {
    pub bottom_change: f64,
    pub top_change: f64,
    pub union_change: f64,
    /// Binomial standard error of the total fractions.
    pub standard_error: f64,
    pub stable: bool,
}

pub fn basin_budget_stability(a: &BasinReport, b: &BasinReport) -> BudgetStability {
    let n = a.samples.min(b.samples).max(1) as f64;
    let p = a.bottom_fraction;
    let standard_error = (p * (1.0 - p) / n).sqrt().max(1.0 / n);
    let bottom_change = (a.bottom_fraction - b.bottom_fraction).abs();
    let top_change = (a.top_fraction - b.top_fraction).abs();
    let union_change = (a.union_fraction - b.union_fraction).abs();
    let stable = [bottom_change, top_change, union_change].iter().all(|&c| c <= 2.0 * standard_error);
    BudgetStability { bottom_change, top_change, union_change, standard_error, stable }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::perturb_flow;

    fn small(iterations: u64) -> GridSpec {
        GridSpec { base_cells: 4, fiber_cells: 4, iterations, samples_per_cell: 8, seed: 5, ..Default::default() }
    }

    #[test]
    fn product_interior_is_unresolved() {
        let f = SkewProduct::kan_cat(0.0).unwrap();
        let r = classify_grid(&f, &small(2_000)).unwrap();
        let rows = r.rows(2);
        for (_, layer, c) in rows {
            if layer == 1 || layer == 2 {
                assert_eq!(c.unresolved, 8);
            }
        }
        assert!(matches!(
            intermingled_basins_scan(&f, &small(10)),
            Err(ExperimentError::NotMostlyContracting { .. })
        ));
    }

    #[test]
    fn strong_flow_makes_bottom_an_attractor() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let (g, _) = perturb_flow(&f, 0.5, &[]).unwrap();
        let r = classify_grid(&g, &small(5_000)).unwrap();
        assert_eq!(r.bottom_fraction, 1.0);
    }

    #[test]
    fn counts_ignore_thread_count() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let a = classify_grid(&f, &small(3_000)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| classify_grid(&f, &small(3_000))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_kan_mixes_both_basins() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let r = intermingled_basins_scan(&f, &small(60_000)).unwrap();
        assert!(r.bottom_fraction > 0.1 && r.top_fraction > 0.1, "{r:?}");
        for c in &r.cells {
            assert_eq!(c.total(), 8);
        }
    }
}

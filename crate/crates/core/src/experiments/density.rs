use serde::{Deserialize, Serialize};

use crate::skew::{birkhoff_sum, Boundary, SkewProduct};
use crate::torus::orbits_up_to;

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize, values: &[f64]) -> Self {
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if v >= lo && v <= hi {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        Histogram { lo, hi, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub boundary: Boundary,
    pub period_cap: u64,
    pub orbits: usize,
    pub negative: usize,
    pub positive: usize,
    pub window: f64,
    pub epsilon: f64,
    /// Largest gap between consecutive sums in `[-window, window]`, the
    /// window ends included.
    pub max_gap: f64,
    pub dense: bool,
    pub histogram: Histogram,
    /// Sums in increasing order, for export.
    pub sums: Vec<f64>,
}

/// Birkhoff sums of all orbits with period up to `period_cap`, and whether
/// they are `epsilon`-dense in `[-window, window]`.
pub fn birkhoff_density_scan(
    f: &SkewProduct,
    b: Boundary,
    period_cap: u64,
    orbit_cap: u64,
    window: f64,
    epsilon: f64,
    bins: usize,
) -> Result<DensityReport, ExperimentError> {
    let orbits = orbits_up_to(f.base(), period_cap, orbit_cap)?;
    let mut sums: Vec<f64> = orbits.iter().map(|o| birkhoff_sum(f, o, b).sum).collect();
    sums.sort_by(f64::total_cmp);
    let negative = sums.iter().filter(|&&s| s < 0.0).count();
    let positive = sums.iter().filter(|&&s| s > 0.0).count();
    if negative == 0 || positive == 0 {
        return Err(ExperimentError::HypothesisUnmet {
            reason: format!(
                "{} orbits up to period {period_cap}: {negative} negative and {positive} positive sums",
                sums.len()
            ),
        });
    }
    let mut max_gap = 0.0_f64;
    let mut prev = -window;
    for &s in sums.iter().filter(|&&s| s > -window && s < window) {
        max_gap = max_gap.max(s - prev);
        prev = s;
    }
    max_gap = max_gap.max(window - prev);
    Ok(DensityReport {
        boundary: b,
        period_cap,
        orbits: sums.len(),
        negative,
        positive,
        window,
        epsilon,
        max_gap,
        dense: max_gap < epsilon,
        histogram: Histogram::new(-window, window, bins.max(1), &sums),
        sums,
    })
}

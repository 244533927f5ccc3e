use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::torus::{orbits_up_to, PeriodicOrbit};

use super::family::Boundary;
use super::system::{grid_point, SkewProduct};
use super::SkewError;

/// Neumaier-compensated sum.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Birkhoff sum of `ln d_t phi(., b)` along a boundary periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSum {
    pub boundary: Boundary,
    pub period: usize,
    pub sum: f64,
    /// Central Lyapunov exponent `sum / period`.
    pub exponent: f64,
}

/// `S = sum_i ln d_t phi(A^i p, b)` over one period.
///
/// The terms are sorted before compensated summation, so every
/// representative of the orbit gives the same value.
pub fn birkhoff_sum(f: &SkewProduct, orbit: &PeriodicOrbit, b: Boundary) -> BirkhoffSum {
    let mut terms: Vec<f64> = orbit
        .points
        .iter()
        .map(|p| f.fiber().boundary_log_derivative_with(f.fiber().coupling_exact(p), b))
        .collect();
    terms.sort_by(f64::total_cmp);
    let sum = compensated_sum(terms);
    let period = orbit.period();
    BirkhoffSum { boundary: b, period, sum, exponent: sum / period as f64 }
}

/// Sign of a quadrature value that exceeds its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub boundary: Boundary,
    /// Trapezoid value on the finer grid.
    pub value: f64,
    /// Difference between the `n` and `2n` grids.
    pub error_estimate: f64,
    pub resolution: usize,
    pub sign: Sign,
}

/// Periodic trapezoid rule for `g` over `T^d` with `n` points per axis.
fn torus_trapezoid(d: usize, n: usize, g: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let cells = n.pow(d as u32);
    let partial: Vec<f64> = (0..cells).into_par_iter().map(|i| g(&grid_point(i, d, n))).collect();
    compensated_sum(partial) / cells as f64
}

/// `integral over T^d of ln d_t phi(x, b) dx` against Lebesgue measure,
/// which is the boundary SRB measure for a linear base.
///
/// The integrand is analytic and periodic, so the trapezoid rule converges
/// geometrically and the gap between resolutions `n` and `2n` bounds the
/// error of the finer value.
pub fn mostly_contracting_check(
    f: &SkewProduct,
    b: Boundary,
    resolution: usize,
) -> Result<QuadratureResult, SkewError> {
    let d = f.base().dim();
    let n = resolution.max(2);
    let g = |x: &[f64]| f.fiber().boundary_log_derivative(x, b);
    let coarse = torus_trapezoid(d, n, &g);
    let fine = torus_trapezoid(d, 2 * n, &g);
    let error_estimate = (fine - coarse).abs();
    if fine.abs() <= error_estimate {
        return Err(SkewError::InconclusiveSign { value: fine, error: error_estimate });
    }
    let sign = if fine < 0.0 { Sign::Negative } else { Sign::Positive };
    Ok(QuadratureResult { boundary: b, value: fine, error_estimate, resolution: n, sign })
}

/// Exponents of one periodic orbit on both boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitExponents {
    pub orbit: PeriodicOrbit,
    pub bottom: BirkhoffSum,
    pub top: BirkhoffSum,
}

pub fn orbit_exponents(f: &SkewProduct, orbits: &[PeriodicOrbit]) -> Vec<OrbitExponents> {
    orbits
        .iter()
        .map(|o| OrbitExponents {
            orbit: o.clone(),
            bottom: birkhoff_sum(f, o, Boundary::Bottom),
            top: birkhoff_sum(f, o, Boundary::Top),
        })
        .collect()
}

/// Forward Birkhoff averages of `ln d_t phi(., b)` along random boundary
/// orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledAverages {
    pub boundary: Boundary,
    pub seed: u64,
    pub iterations: usize,
    pub averages: Vec<f64>,
    pub max: f64,
}

/// Birkhoff averages along `samples` random float orbits of the base.
///
/// Sample `i` draws its start from a generator seeded with `(seed, i)`, so
/// the result is independent of the worker count.
pub fn sampled_birkhoff_averages(
    f: &SkewProduct,
    b: Boundary,
    samples: usize,
    iterations: usize,
    seed: u64,
) -> SampledAverages {
    let d = f.base().dim();
    let averages: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut acc = Vec::with_capacity(iterations);
            for _ in 0..iterations {
                acc.push(f.fiber().boundary_log_derivative(&x, b));
                x = f.base().apply_float(&x);
            }
            compensated_sum(acc) / iterations as f64
        })
        .collect();
    let max = averages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SampledAverages { boundary: b, seed, iterations, averages, max }
}

/// Consequence of the periodic exponents for typical boundary orbits: when
/// no periodic orbit up to the cap expands, sampled averages should not
/// exceed `slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBoundCheck {
    pub boundary: Boundary,
    pub period_cap: u64,
    pub max_periodic_exponent: f64,
    pub hypothesis_holds: bool,
    pub sampled: SampledAverages,
    pub slack: f64,
    /// `None` when the hypothesis fails and nothing is predicted.
    pub consistent: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
pub fn periodic_bound_check(
    f: &SkewProduct,
    b: Boundary,
    period_cap: u64,
    orbit_cap: u64,
    samples: usize,
    iterations: usize,
    seed: u64,
    slack: f64,
) -> Result<PeriodicBoundCheck, SkewError> {
    let orbits = orbits_up_to(f.base(), period_cap, orbit_cap)?;
    let max_periodic_exponent = orbits
        .iter()
        .map(|o| birkhoff_sum(f, o, b).exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    let hypothesis_holds = max_periodic_exponent <= 0.0;
    let sampled = sampled_birkhoff_averages(f, b, samples, iterations, seed);
    let consistent = hypothesis_holds.then_some(sampled.max <= slack);
    Ok(PeriodicBoundCheck {
        boundary: b,
        period_cap,
        max_periodic_exponent,
        hypothesis_holds,
        sampled,
        slack,
        consistent,
    })
}

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::torus::PeriodicOrbit;

use super::exponents::birkhoff_sum;
use super::family::{Boundary, FiberPoint};
use super::holonomy::{holonomy_along, HolonomyOptions, Leaf};
use super::system::SkewProduct;
use super::SkewError;

/// Geometry of the twist construction around a contracting bottom orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSetup {
    /// Distance from `p` to `r` along the unstable line.
    pub rho: f64,
    /// Distance from `p` to the base of `x_0` along the stable line.
    pub stable_offset: f64,
    /// Fiber coordinate of `x_0`.
    pub t0: f64,
    /// The slope is fitted over `n` in `[n_min, n_max]`.
    pub n_min: usize,
    pub n_max: usize,
    /// Truncation of every holonomy.
    pub truncation: usize,
}

impl Default for TwistSetup {
    fn default() -> Self {
        TwistSetup { rho: 0.1, stable_offset: 0.1, t0: 0.5, n_min: 10, n_max: 40, truncation: 90 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    pub period: usize,
    pub lambda_s: f64,
    pub lambda_c: f64,
    pub lambda_u: f64,
    /// `(lambda_u - lambda_c) / (lambda_u - lambda_s) * lambda_s`.
    pub lambda_p: f64,
    /// Times `n` (multiples of the period) and the distances `d_n`.
    pub times: Vec<usize>,
    pub distances: Vec<f64>,
    /// Last time in the fit window before `d_n` drops to the rounding level
    /// of `w_n`; later times are left out of the fit.
    pub resolved_until: Option<usize>,
    /// Least-squares slope of `ln d_n` over the fit window.
    pub fitted_slope: Option<f64>,
    /// `max (ln d_n - n lambda_p)` over the fit window.
    pub max_excess: Option<f64>,
}

/// `(lambda_u - lambda_c) / (lambda_u - lambda_s) * lambda_s`.
pub fn twist_rate(lambda_s: f64, lambda_c: f64, lambda_u: f64) -> f64 {
    (lambda_u - lambda_c) / (lambda_u - lambda_s) * lambda_s
}

const RESOLUTION_ULPS: f64 = 64.0;

/// Measure the central twist `d_n = d_c(w'_n, w_n)` at a boundary orbit
/// with non-positive bottom exponent.
///
/// With `x_n = F^n(x_0)` for `x_0` on the center-stable leaf of `p`:
/// `y_n` is the stable projection of `x_n` to the center leaf of `p`,
/// `z_n` and `w_n` are the unstable holonomy images of `x_n` and `y_n`
/// towards `r`, and `w'_n` is the stable projection of `z_n` to the center
/// leaf of `r`. Only times that are multiples of the period are used, so
/// `p` is fixed by `F^n`.
pub fn central_twist_decay(
    f: &SkewProduct,
    p: &PeriodicOrbit,
    setup: &TwistSetup,
) -> Result<TwistReport, SkewError> {
    let a = f.base();
    let s = a.splitting();
    let period = p.period();
    let lambda_c = birkhoff_sum(f, p, Boundary::Bottom).exponent;
    if !(lambda_c <= 0.0) {
        return Err(SkewError::NotContracting { exponent: lambda_c });
    }
    let (lambda_s, lambda_u) = (s.rate_s, s.rate_u);
    let lambda_p = twist_rate(lambda_s, lambda_c, lambda_u);

    let opts = HolonomyOptions { truncation: Some(setup.truncation), cauchy_tolerance: f64::INFINITY, ..Default::default() };
    let unit = |dim: usize, v: f64| {
        let mut c = DVector::zeros(dim);
        c[0] = v;
        c
    };
    let (ds, du) = (s.stable_dim(), s.unstable_dim());
    let pf = p.base().to_f64();
    let shift = |x: &[f64], c: &DVector<f64>, leaf: Leaf| -> Vec<f64> {
        let o = match leaf {
            Leaf::Stable => s.stable_vector(c),
            Leaf::Unstable => s.unstable_vector(c),
        };
        x.iter().zip(o.iter()).map(|(x, o)| (x + o).rem_euclid(1.0)).collect()
    };
    let r = shift(&pf, &unit(du, setup.rho), Leaf::Unstable);
    let (hol_pr, _) = holonomy_along(f, &pf, &DVector::zeros(du), &unit(du, setup.rho), Leaf::Unstable, &opts)?;

    let mut cs = unit(ds, setup.stable_offset);
    let mut fiber = FiberPoint::new(setup.t0);
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut floors = Vec::new();
    for n in 1..=setup.n_max {
        let base = shift(&p.at(n as i64 - 1).to_f64(), &cs, Leaf::Stable);
        fiber = f.fiber().step(&base, fiber);
        cs = s.stable_block() * cs;
        if n % period != 0 {
            continue;
        }
        // x_n sits over p + E_s cs
        let (to_p, _) = holonomy_along(f, &pf, &cs, &DVector::zeros(ds), Leaf::Stable, &opts)?;
        let y = to_p.apply(fiber);
        let xn = shift(&pf, &cs, Leaf::Stable);
        let (up, _) = holonomy_along(f, &xn, &DVector::zeros(du), &unit(du, setup.rho), Leaf::Unstable, &opts)?;
        let z = up.apply(fiber);
        let w = hol_pr.apply(y);
        let (to_r, _) = holonomy_along(f, &r, &cs, &DVector::zeros(ds), Leaf::Stable, &opts)?;
        let w_prime = to_r.apply(z);
        times.push(n);
        distances.push((w_prime.t - w.t).abs());
        floors.push(RESOLUTION_ULPS * f64::EPSILON * w.t.abs().max(w_prime.t.abs()));
    }

    let in_window: Vec<usize> =
        (0..times.len()).filter(|&i| times[i] >= setup.n_min && times[i] <= setup.n_max).collect();
    let all_zero = in_window.iter().all(|&i| distances[i] == 0.0);
    // Stop at the first distance lost in the rounding of w_n.
    let window: Vec<(f64, f64)> = in_window
        .iter()
        .take_while(|&&i| distances[i] > floors[i])
        .map(|&i| (times[i] as f64, distances[i]))
        .collect();
    let resolved_until = window.last().map(|w| w.0 as usize);
    let mut report = TwistReport {
        period,
        lambda_s,
        lambda_c,
        lambda_u,
        lambda_p,
        times,
        distances,
        resolved_until,
        fitted_slope: None,
        max_excess: None,
    };
    if all_zero {
        return Ok(report);
    }
    if window.len() < 2 {
        return Err(SkewError::DegenerateGeometry {
            reason: format!("{} of {} distances in the fit window exceed the rounding floor", window.len(), in_window.len()),
            partial: Box::new(report),
        });
    }
    let pts: Vec<(f64, f64)> = window.iter().map(|&(n, d)| (n, d.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    report.fitted_slope = Some(sxy / sxx);
    report.max_excess = pts.iter().map(|&(n, l)| l - n * lambda_p).reduce(f64::max);
    Ok(report)
}

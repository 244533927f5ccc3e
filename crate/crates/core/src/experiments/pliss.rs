use serde::{Deserialize, Serialize};

use crate::skew::{Boundary, FiberPoint, HolderEstimate, SkewProduct};
use crate::torus::PeriodicOrbit;

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissReport {
    pub boundary: Boundary,
    pub period: usize,
    pub exponent: f64,
    pub target_rate: f64,
    /// Rotation index `n`: the orbit is read from `A^n p`.
    pub shift: usize,
    pub rotated: PeriodicOrbit,
    /// `(1/k) sum_{i<k} ln d_t phi(A^{n+i} p, b)` for `k = 1..=period`.
    pub partial_averages: Vec<f64>,
    /// Length of the largest fiber interval at the boundary on which every
    /// partial average up to the period stays below `target_rate / 2`.
    pub contracting_center: f64,
    /// `[-(1/6) l (1 - e^{l theta / 6}) / C]^{1/theta}` with `l = 3 target_rate`.
    pub center_bound: f64,
    pub holder: HolderEstimate,
}

const CENTER_GRID: usize = 4096;

/// Lipschitz constant in `t` of `ln d_t phi(x, t)`, over all `x`.
fn fiber_log_lipschitz(f: &SkewProduct) -> f64 {
    let fam = f.fiber();
    let m = fam.epsilon() * fam.params().psi.sup_bound();
    let kan = 2.0 * m / (1.0 - m);
    let e = (-fam.tau()).exp();
    kan + 2.0 * (1.0 - e) * (1.0 + m) / e
}

/// Rotate a contracting boundary orbit to a Pliss time for `target_rate`
/// and measure its contracting center.
///
/// The rotation starts at the first maximum of the cumulative sums of
/// `ln d_t phi - target_rate`; from there every forward partial sum stays
/// below `k target_rate`. Checking `k <= period` suffices because the full
/// period already averages below the target.
pub fn pliss_reindex(
    f: &SkewProduct,
    orbit: &PeriodicOrbit,
    b: Boundary,
    target_rate: f64,
) -> Result<PlissReport, ExperimentError> {
    let fam = f.fiber();
    let period = orbit.period();
    let couplings: Vec<f64> = orbit.points.iter().map(|p| fam.coupling_exact(p)).collect();
    let logs: Vec<f64> = couplings.iter().map(|&c| fam.boundary_log_derivative_with(c, b)).collect();
    let exponent = crate::skew::compensated_sum(logs.iter().copied()) / period as f64;
    if !(exponent < target_rate && target_rate < 0.0) {
        return Err(ExperimentError::NoPlissTime {
            reason: format!("need exponent {exponent} < target {target_rate} < 0"),
        });
    }

    let mut best = (0usize, 0.0_f64);
    let mut acc = 0.0;
    for (j, l) in logs.iter().enumerate().take(period) {
        if acc > best.1 {
            best = (j, acc);
        }
        acc += l - target_rate;
    }
    let shift = best.0;
    let rot = |i: usize| (shift + i) % period;

    let mut partial_averages = Vec::with_capacity(period);
    let mut sum = 0.0;
    for k in 1..=period {
        sum += logs[rot(k - 1)];
        partial_averages.push(sum / k as f64);
    }
    let slack = 1e-12;
    if let Some((k, avg)) =
        partial_averages.iter().enumerate().find(|(k, &a)| a > target_rate + slack * (*k as f64 + 1.0))
    {
        return Err(ExperimentError::NoPlissTime {
            reason: format!("partial average {avg} over {} steps exceeds {target_rate}", k + 1),
        });
    }

    let level = target_rate / 2.0;
    let holds = |u: f64| -> bool {
        let mut q = b.distance(FiberPoint::new(u));
        let mut sum = 0.0;
        for k in 1..=period {
            let c = couplings[rot(k - 1)];
            sum += fam.derivative_with(c, q).ln();
            if sum / k as f64 > level {
                return false;
            }
            q = fam.step_with(c, q);
        }
        true
    };
    let mut good = 0.0;
    let mut bad = None;
    for j in 1..=CENTER_GRID {
        let u = j as f64 / CENTER_GRID as f64;
        if holds(u) {
            good = u;
        } else {
            bad = Some(u);
            break;
        }
    }
    if let Some(mut hi) = bad {
        for _ in 0..50 {
            let mid = 0.5 * (good + hi);
            if holds(mid) {
                good = mid;
            } else {
                hi = mid;
            }
        }
    }

    let holder = HolderEstimate {
        constant: fam.holder().constant.max(fiber_log_lipschitz(f)),
        exponent: fam.holder().exponent,
    };
    let l = 3.0 * target_rate;
    let theta = holder.exponent;
    let center_bound = (-(l / 6.0) * (1.0 - (l * theta / 6.0).exp()) / holder.constant).powf(1.0 / theta);
    let mut points = orbit.points.clone();
    points.rotate_left(shift);
    Ok(PlissReport {
        boundary: b,
        period,
        exponent,
        target_rate,
        shift,
        rotated: PeriodicOrbit { points },
        partial_averages,
        contracting_center: good,
        center_bound,
        holder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::{FiberFamily, KanParams, TrigPolynomial};
    use crate::torus::{ExactPoint, ToralAutomorphism};

    fn contracting_orbit() -> PeriodicOrbit {
        let a = ToralAutomorphism::cat_map();
        PeriodicOrbit::through(&a, &ExactPoint::from_fractions(&[(2, 5), (4, 5)]), 4).unwrap()
    }

    #[test]
    fn period_two_orbit_rotation() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let o = contracting_orbit();
        let lc = crate::skew::birkhoff_sum(&f, &o, Boundary::Bottom).exponent;
        let r = pliss_reindex(&f, &o, Boundary::Bottom, lc / 3.0).unwrap();
        assert!(r.shift < 2);
        assert!(r.partial_averages.iter().all(|&a| a <= lc / 3.0 + 1e-12));
        assert!(r.contracting_center >= r.center_bound, "{} vs {}", r.contracting_center, r.center_bound);
        assert!(r.center_bound > 0.0);
    }

    #[test]
    fn constant_derivative_needs_no_shift() {
        let psi = TrigPolynomial::constant(-1.0, 2).unwrap();
        let fam = FiberFamily::kan(KanParams::new(0.3, psi).unwrap());
        let f = SkewProduct::new(ToralAutomorphism::cat_map(), fam).unwrap();
        let o = contracting_orbit();
        let r = pliss_reindex(&f, &o, Boundary::Bottom, 0.7f64.ln() / 3.0).unwrap();
        assert_eq!(r.shift, 0);
        for a in &r.partial_averages {
            assert!((a - 0.7f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn expanding_orbit_has_no_pliss_time() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let o = PeriodicOrbit { points: vec![ExactPoint::origin(2)] };
        assert!(matches!(
            pliss_reindex(&f, &o, Boundary::Bottom, -0.01),
            Err(ExperimentError::NoPlissTime { .. })
        ));
    }
}

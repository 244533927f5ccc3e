use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::map::{estimate_holder, IntervalMap, Smoothness};
use super::{ClosedInterval, FiberError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionReport {
    /// `|J_i| / |Omega_i|` for each `i` in the range.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// `min / max`.
    pub rho_hat: f64,
    /// `exp(-C^2 / (1 - beta^theta))`.
    pub rho_bound: f64,
}

/// Merge overlapping intervals.
fn merge(mut parts: Vec<ClosedInterval>) -> Vec<ClosedInterval> {
    parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<ClosedInterval> = Vec::new();
    for p in parts {
        match out.last_mut() {
            Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
            _ => out.push(p),
        }
    }
    out
}

/// Measure how evenly the `g`-saturation of `J` fills the fundamental
/// domains `Omega_i = (g^{i+1}(y), g^i(y)]` and compare the spread with the
/// distortion bound built from the Hölder data of `ln g'`.
pub fn uniform_proportion_check(
    g: &dyn IntervalMap,
    j: &ClosedInterval,
    y: f64,
    range: Range<usize>,
    holder: Option<Smoothness>,
) -> Result<ProportionReport, FiberError> {
    let outside = |reason: String| Err(FiberError::RangeOutsideNeighborhood { reason });
    if !(y > 0.0 && y < 1.0) || range.is_empty() {
        return outside(format!("base point {y} or range {range:?} unusable"));
    }
    // the neighborhood is the part of (0, 1) where g(t) < t
    let samples = 256;
    if (1..=samples).any(|n| {
        let t = y * n as f64 / samples as f64;
        g.value(t) >= t
    }) {
        return outside(format!("g has a fixed point or repelling region below {y}"));
    }

    let omega0 = ClosedInterval { lo: g.value(y), hi: y };
    // J_0 = union over n of g^n(J) ∩ Omega_0
    let mut parts = Vec::new();
    for dir in [1i64, -1] {
        let mut cur = *j;
        for _ in 0..2000 {
            if let Some(p) = cur.intersection(&omega0) {
                if p.length() > 0.0 {
                    parts.push(p);
                }
            }
            if dir > 0 && cur.hi < omega0.lo {
                break;
            }
            if dir < 0 && (cur.lo > omega0.hi || cur.lo >= 1.0 - 1e-15) {
                break;
            }
            let next = if dir > 0 {
                ClosedInterval { lo: g.value(cur.lo), hi: g.value(cur.hi) }
            } else {
                ClosedInterval { lo: g.inverse(cur.lo), hi: g.inverse(cur.hi) }
            };
            if next == cur {
                break;
            }
            cur = next;
        }
    }
    let mut comps = merge(parts);
    if comps.is_empty() {
        return outside("the saturation of J misses the fundamental domain".into());
    }

    let mut ratios = Vec::with_capacity(range.len());
    let (mut top, mut bottom) = (omega0.hi, omega0.lo);
    for i in 0..range.end {
        if i >= range.start {
            let len: f64 = comps.iter().map(|c| c.length()).sum();
            let omega = top - bottom;
            if !(omega > 0.0) || bottom < 1e-300 {
                return outside(format!("fundamental domain {i} underflows"));
            }
            ratios.push(len / omega);
        }
        for c in comps.iter_mut() {
            *c = ClosedInterval { lo: g.value(c.lo), hi: g.value(c.hi) };
        }
        top = bottom;
        bottom = g.value(bottom);
    }

    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let rho_hat = min / max;
    let beta = g.derivative(0.0);
    let (c, theta) = match holder.unwrap_or_else(|| estimate_holder(g, 0.0, y, 129)) {
        Smoothness::Holder { constant, exponent } => (constant.max(1.0), exponent),
        Smoothness::C1 => (1.0, 1.0),
    };
    let rho_bound = (-c * c / (1.0 - beta.powf(theta))).exp();
    if rho_hat < rho_bound {
        return Err(FiberError::DistortionBoundViolated { measured: rho_hat, bound: rho_bound });
    }
    Ok(ProportionReport { ratios, min, max, rho_hat, rho_bound })
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::independence::{rational_independence, IndependenceValue};
use super::map::{estimate_holder, IntervalMap, Mobius, Smoothness};
use super::{ClosedInterval, FiberError};

/// Largest number of `(k, l)` pairs the exhaustive oracle will enumerate.
pub const ORACLE_PAIR_CAP: u64 = 1_000_000;

/// Iterates whose images fall below this are not searched.
const UNDERFLOW_GUARD: f64 = 1e-250;
const GRID: usize = 1000;
const INFLATION: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_k: usize,
    pub max_l: usize,
    pub min_pairs: usize,
    /// When set, the hypothesis `(ln alpha, ln beta) < epsilon` and the size
    /// condition `|J| > L(epsilon)` are checked before searching.
    pub epsilon: Option<f64>,
    pub independence_bound: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_k: 4000,
            max_l: 4000,
            min_pairs: 20,
            epsilon: None,
            independence_bound: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPair {
    pub k: usize,
    pub l: usize,
    pub overlap: ClosedInterval,
}

/// Effective form of the threshold `L(epsilon)` and its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub epsilon: f64,
    pub independence: IndependenceValue,
    /// Linearization radius (largest dyadic passing the remainder checks).
    pub delta: Option<f64>,
    /// `sup |I_t|` over the fundamental family.
    pub domain_size: f64,
    pub holder_constant: f64,
    pub rho: f64,
    /// Argument `rho^{-1} 3 epsilon D / (1 - beta - epsilon)` fed to `G`.
    pub scaled_epsilon: f64,
    pub window: f64,
    /// Inflated `L(epsilon)`; infinite when any ingredient is undefined.
    pub threshold: f64,
    /// The same quantity for the Möbius map with the same `beta`.
    pub reference_threshold: f64,
    /// Set when the two thresholds differ by more than 10%.
    pub nonlinearity_discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub pairs: Vec<CertifiedPair>,
    /// `min_n |overlap_n| / max(alpha^k_n, beta^l_n)`.
    pub bound_constant: f64,
    /// The same minimum over the second half of the pairs.
    pub tail_constant: f64,
    /// `sup_n |k_n ln alpha - l_n ln beta|`.
    pub log_gap: f64,
    pub threshold: Option<ThresholdReport>,
}

impl IntersectionCertificate {
    fn from_pairs(alpha: f64, beta: f64, pairs: Vec<CertifiedPair>) -> Self {
        let ratio = |p: &CertifiedPair| {
            let scale = alpha.powi(p.k as i32).max(beta.powi(p.l as i32));
            p.overlap.length() / scale
        };
        let c = pairs.iter().map(ratio).fold(f64::INFINITY, f64::min);
        let tail = pairs[pairs.len() / 2..]
            .iter()
            .map(ratio)
            .fold(f64::INFINITY, f64::min);
        let log_gap = pairs
            .iter()
            .map(|p| (p.k as f64 * alpha.ln() - p.l as f64 * beta.ln()).abs())
            .fold(0.0, f64::max);
        IntersectionCertificate {
            alpha,
            beta,
            pairs,
            bound_constant: c,
            tail_constant: tail,
            log_gap,
            threshold: None,
        }
    }
}

fn check_inside(iv: &ClosedInterval) -> Result<(), FiberError> {
    if iv.lo <= 0.0 || iv.hi >= 1.0 || iv.lo > iv.hi {
        return Err(FiberError::InvalidInterval { lo: iv.lo, hi: iv.hi });
    }
    Ok(())
}

/// Endpoints of `f^k(iv)` for `k = 0..=count`, via monotonicity.
fn forward_images(f: &dyn IntervalMap, iv: &ClosedInterval, count: usize) -> Vec<ClosedInterval> {
    let mut out = Vec::with_capacity(count + 1);
    let mut cur = *iv;
    out.push(cur);
    for _ in 0..count {
        cur = ClosedInterval { lo: f.value(cur.lo), hi: f.value(cur.hi) };
        out.push(cur);
    }
    out
}

fn apply(h: &dyn IntervalMap, iv: &ClosedInterval) -> ClosedInterval {
    ClosedInterval { lo: h.value(iv.lo), hi: h.value(iv.hi) }
}

/// Find strictly increasing `k_n, l_n` with
/// `h(f^{k_n}(I)) ∩ g^{l_n}(J)` of positive length.
///
/// For each `k` the admissible `l` form a contiguous range (the images of
/// `J` move monotonically towards 0). The `l` with the largest overlap is
/// taken, and `k` is skipped when that `l` does not advance.
pub fn center_intersection_search(
    f: &dyn IntervalMap,
    g: &dyn IntervalMap,
    h: &dyn IntervalMap,
    i: &ClosedInterval,
    j: &ClosedInterval,
    budget: &SearchBudget,
) -> Result<IntersectionCertificate, FiberError> {
    check_inside(i)?;
    check_inside(j)?;
    let alpha = f.derivative(0.0);
    let beta = g.derivative(0.0);
    for m in [alpha, beta] {
        if !(m > 0.0 && m < 1.0) {
            return Err(FiberError::NotContracting { alpha: m });
        }
    }

    let threshold = match budget.epsilon {
        Some(eps) => {
            let report = threshold_analysis(f, g, h, eps, budget.independence_bound);
            if report.independence.value >= eps {
                return Err(FiberError::PreconditionViolated {
                    reason: format!(
                        "(ln alpha, ln beta) = {:e} is not below {eps:e}",
                        report.independence.value
                    ),
                });
            }
            if j.length() <= report.threshold {
                return Err(FiberError::ThresholdNotMet {
                    length: j.length(),
                    threshold: report.threshold,
                    epsilon: eps,
                });
            }
            Some(report)
        }
        None => None,
    };

    let g_images: Vec<ClosedInterval> = {
        let mut v = forward_images(g, j, budget.max_l);
        let keep = v.iter().position(|iv| iv.hi < UNDERFLOW_GUARD).unwrap_or(v.len());
        v.truncate(keep);
        v
    };
    let f_images = forward_images(f, i, budget.max_k);

    let mut pairs = Vec::new();
    let mut prev_l: Option<usize> = None;
    for k in 1..=budget.max_k {
        if alpha.powi(k as i32) < UNDERFLOW_GUARD {
            break;
        }
        let a = apply(h, &f_images[k]);
        // g-images move down with l: first l with lo <= a.hi, last with hi >= a.lo
        let l_min = g_images.partition_point(|iv| iv.lo > a.hi);
        let l_end = g_images.partition_point(|iv| iv.hi >= a.lo);
        let best = (l_min..l_end)
            .filter_map(|l| {
                g_images[l]
                    .intersection(&a)
                    .filter(|o| o.length() > 0.0)
                    .map(|o| (l, o))
            })
            .max_by(|x, y| x.1.length().total_cmp(&y.1.length()));
        if let Some((l, overlap)) = best.filter(|b| prev_l.is_none_or(|p| b.0 > p)) {
            pairs.push(CertifiedPair { k, l, overlap });
            prev_l = Some(l);
        }
    }

    if pairs.is_empty() || pairs.len() < budget.min_pairs {
        let partial = if pairs.is_empty() {
            IntersectionCertificate {
                alpha,
                beta,
                pairs: vec![],
                bound_constant: 0.0,
                tail_constant: 0.0,
                log_gap: 0.0,
                threshold,
            }
        } else {
            let mut c = IntersectionCertificate::from_pairs(alpha, beta, pairs.clone());
            c.threshold = threshold;
            c
        };
        return Err(FiberError::BudgetExhausted {
            found: pairs.len(),
            required: budget.min_pairs.max(1),
            partial: Box::new(partial),
        });
    }
    let mut cert = IntersectionCertificate::from_pairs(alpha, beta, pairs);
    cert.threshold = threshold;
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePair {
    pub k: usize,
    pub l: usize,
    pub overlap: f64,
}

/// Every `(k, l)` in `[0, k_max] x [0, l_max]` with
/// `h(f^k(I)) ∩ g^l(J)` nonempty, in lexicographic order.
pub fn intersection_oracle(
    f: &dyn IntervalMap,
    g: &dyn IntervalMap,
    h: &dyn IntervalMap,
    i: &ClosedInterval,
    j: &ClosedInterval,
    k_max: usize,
    l_max: usize,
) -> Result<Vec<OraclePair>, FiberError> {
    let total = (k_max as u64 + 1) * (l_max as u64 + 1);
    if total > ORACLE_PAIR_CAP {
        return Err(FiberError::PreconditionViolated {
            reason: format!("{total} pairs exceed the oracle cap {ORACLE_PAIR_CAP}"),
        });
    }
    let a: Vec<ClosedInterval> = forward_images(f, i, k_max)
        .iter()
        .map(|iv| apply(h, iv))
        .collect();
    let b = forward_images(g, j, l_max);
    Ok(a.par_iter()
        .enumerate()
        .flat_map_iter(|(k, ak)| {
            b.iter().enumerate().filter_map(move |(l, bl)| {
                ak.overlap(bl).map(|overlap| OraclePair { k, l, overlap })
            })
        })
        .collect())
}

/// Largest dyadic `delta` such that the linearization remainders of `f`,
/// `g`, `h` at 0 satisfy `|R(x)| < eps x` and `|R'(x)| < slope / 2` on
/// `[0, max(delta, h(delta))]`.
fn linearization_radius(maps: [&dyn IntervalMap; 3], h: &dyn IntervalMap, eps: f64) -> Option<f64> {
    let slopes: Vec<f64> = maps.iter().map(|m| m.derivative(0.0)).collect();
    (1..=60).map(|j| 0.5_f64.powi(j)).find(|&delta| {
        let top = delta.max(h.value(delta));
        (1..=GRID).all(|n| {
            let x = top * n as f64 / GRID as f64;
            maps.iter().zip(&slopes).all(|(m, &s)| {
                let r = m.value(x) - s * x;
                let dr = m.derivative(x) - s;
                r.abs() < eps * x && (dr / s).abs() < 0.5
            })
        })
    })
}

/// Evaluate `L(epsilon)` through its defining suprema on a grid.
pub fn threshold_analysis(
    f: &dyn IntervalMap,
    g: &dyn IntervalMap,
    h: &dyn IntervalMap,
    eps: f64,
    independence_bound: u64,
) -> ThresholdReport {
    let alpha = f.derivative(0.0);
    let beta = g.derivative(0.0);
    let independence = rational_independence(alpha.ln(), beta.ln(), independence_bound);
    let mut report = threshold_core(f, g, h, eps);
    report.independence = independence;
    let reference = Mobius { alpha: beta };
    report.reference_threshold = threshold_core(f, &reference, h, eps).threshold;
    let (l, r) = (report.threshold, report.reference_threshold);
    report.nonlinearity_discrepancy = if l.is_finite() && r.is_finite() {
        (l - r).abs() > 0.1 * r
    } else {
        l.is_finite() != r.is_finite()
    };
    report
}

fn threshold_core(
    f: &dyn IntervalMap,
    g: &dyn IntervalMap,
    h: &dyn IntervalMap,
    eps: f64,
) -> ThresholdReport {
    let beta = g.derivative(0.0);
    let mut report = ThresholdReport {
        epsilon: eps,
        independence: IndependenceValue { value: f64::NAN, k: 0, l: 0 },
        delta: None,
        domain_size: f64::NAN,
        holder_constant: f64::NAN,
        rho: f64::NAN,
        scaled_epsilon: f64::NAN,
        window: f64::INFINITY,
        threshold: f64::INFINITY,
        reference_threshold: f64::INFINITY,
        nonlinearity_discrepancy: false,
    };
    let Some(delta) = linearization_radius([f, g, h], h, eps) else {
        return report;
    };
    report.delta = Some(delta);

    // fundamental family I_t = (g(t), t], t in D_0 = (g(h(delta)), h(delta)]
    let top = h.value(delta);
    let bottom = g.value(top);
    let grid: Vec<f64> = (1..=GRID)
        .map(|n| bottom + (top - bottom) * n as f64 / GRID as f64)
        .collect();
    let d = grid.iter().map(|&t| t - g.value(t)).fold(0.0, f64::max);
    report.domain_size = d;

    let (c, theta) = match estimate_holder(g, 0.0, top, 129) {
        Smoothness::Holder { constant, exponent } => (constant.max(1.0), exponent),
        Smoothness::C1 => (1.0, 1.0),
    };
    report.holder_constant = c;
    let rho = (-c * c / (1.0 - beta.powf(theta))).exp();
    report.rho = rho;

    let margin = 1.0 - beta - eps;
    if margin <= 0.0 {
        return report;
    }
    let e = 3.0 * eps * d / (rho * margin);
    report.scaled_epsilon = e;

    // G(e): the four sufficient-condition terms
    let mut window = e;
    for &u in &grid {
        let gu = g.value(u);
        if u - e < 0.0 || gu - e < 0.0 || gu + e > 1.0 {
            return report;
        }
        let terms = [
            gu + e - g.value(u - e),
            e,
            g.inverse(gu + e) - u + e,
            u - g.inverse(gu - e),
        ];
        window = terms.iter().copied().fold(window, f64::max);
    }
    report.window = window;

    // L = sup over s in D_0 and l >= 0 of |g^{-l}([s - G, s])|
    let mut sup = 0.0_f64;
    for &s in &grid {
        let (mut lo, mut hi) = (s - window, s);
        if lo < 0.0 {
            return report;
        }
        for _ in 0..4000 {
            sup = sup.max(hi - lo);
            if lo >= 1.0 - 1e-12 {
                break;
            }
            let (nlo, nhi) = (g.inverse(lo), g.inverse(hi));
            if nlo == lo && nhi == hi {
                break;
            }
            lo = nlo;
            hi = nhi;
        }
    }
    report.threshold = INFLATION * sup;
    report
}

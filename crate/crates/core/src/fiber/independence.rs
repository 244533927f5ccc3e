use serde::{Deserialize, Serialize};

use super::FiberError;

/// Approximation of `(a, b) = inf { |k a + l b| : k a + l b != 0 }` with the
/// integer pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceValue {
    pub value: f64,
    pub k: i64,
    pub l: i64,
}

/// Relative tolerance below which `k a + l b` counts as an exact zero.
const ZERO_ULPS: f64 = 64.0 * f64::EPSILON;

/// `|k a + l b|` unless it is rounding noise. `a_size` bounds the
/// magnitude `a` had before it was reduced, since the reduction error
/// scales with it.
fn combination(a: f64, a_size: f64, b: f64, k: i64, l: i64) -> Option<f64> {
    let v = (k as f64 * a + l as f64 * b).abs();
    let scale = (k as f64).abs() * a_size + (l as f64 * b).abs();
    (v > ZERO_ULPS * scale).then_some(v)
}

/// Minimum of the nonzero `|k a + l b|` over `0 < |k| <= bound` and all `l`.
///
/// The infimum does not change under `a -> a + j b`, so the search runs on
/// the representative of `a` in `[0, |b|)`; the returned `l` refers to the
/// original `a`. Runs in `O(bound)`: for each `k >= 0` only the integers `l`
/// next to `-k a / b` can be minimal.
pub fn rational_independence(a: f64, b: f64, bound: u64) -> IndependenceValue {
    assert!(b != 0.0 && bound >= 1);
    let turns = (a / b.abs()).floor();
    let r = a - turns * b.abs();
    let shift = (turns * b.signum()) as i64;
    let kmax = bound as i64;
    let mut best = IndependenceValue { value: f64::INFINITY, k: 0, l: 0 };
    let mut consider = |k: i64, l: i64| {
        if k == 0 && l == 0 {
            return;
        }
        if let Some(v) = combination(r, a.abs().max(r.abs()), b, k, l) {
            if v < best.value {
                best = IndependenceValue { value: v, k, l: l - k * shift };
            }
        }
    };
    for k in 0..=kmax {
        let centre = (-(k as f64) * r / b).floor() as i64;
        for l in centre - 1..=centre + 2 {
            consider(k, l);
        }
        if k == 0 {
            consider(0, 1);
        }
    }
    best
}

/// Dense-orbit verdict for the rotation `x -> x + a mod |b|` from `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityVerdict {
    pub dense: bool,
    pub steps: u64,
    pub max_gap: f64,
}

const MAX_STEPS: u64 = 50_000_000;

/// Whether the rotation orbit of `0` is `epsilon`-dense, judged by the
/// largest gap between consecutive orbit points being below `epsilon`.
///
/// The number of simulated steps is chosen from the best return time
/// `k <= ceil(|b| / epsilon) + 1` found by Dirichlet's box principle.
pub fn rotation_density_check(a: f64, b: f64, epsilon: f64) -> DensityVerdict {
    assert!(b != 0.0 && epsilon > 0.0);
    let period = b.abs();
    let dirichlet = (period / epsilon).ceil() as u64 + 1;
    let step = a.rem_euclid(period);
    let mut steps = dirichlet + 1;
    let mut best_cost = u64::MAX;
    for k in 1..=dirichlet {
        let r = (k as f64 * step).rem_euclid(period);
        let dist = r.min(period - r);
        if dist <= ZERO_ULPS * (k as f64 * step + period) {
            continue;
        }
        if dist < epsilon {
            let cost = k.saturating_mul((period / dist).ceil() as u64 + 1);
            if cost < best_cost {
                best_cost = cost;
                steps = cost;
            }
        }
    }
    let steps = steps.min(MAX_STEPS);
    let mut pts: Vec<f64> = (0..steps)
        .map(|n| (n as f64 * step).rem_euclid(period))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut max_gap = period - pts[pts.len() - 1] + pts[0];
    for w in pts.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    DensityVerdict { dense: max_gap < epsilon, steps, max_gap }
}

/// Pick whichever of `a1`, `a2` has `(a, b) < epsilon`, given
/// `0 < |a1 - a2| < epsilon` mod `b`.
pub fn select_independent(
    a1: f64,
    a2: f64,
    b: f64,
    epsilon: f64,
) -> Result<(f64, IndependenceValue), FiberError> {
    let period = b.abs();
    let r = (a1 - a2).rem_euclid(period);
    let gap = r.min(period - r);
    if gap <= ZERO_ULPS * (a1.abs() + a2.abs() + period) || gap >= epsilon {
        return Err(FiberError::PreconditionViolated {
            reason: format!("|a1 - a2| mod b = {gap:e} not in (0, {epsilon:e})"),
        });
    }
    let bound = (16 * ((period / gap).ceil() as u64 + 1)).min(10_000_000);
    for a in [a1, a2] {
        let v = rational_independence(a, b, bound);
        if v.value < epsilon {
            return Ok((a, v));
        }
    }
    Err(FiberError::PreconditionViolated {
        reason: format!("neither candidate certified below {epsilon:e} with bound {bound}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ratio_gives_b_over_q() {
        for k in [7, 8, 50] {
            let v = rational_independence(3.0 / 7.0, 1.0, k);
            assert!((v.value - 1.0 / 7.0).abs() < 1e-12);
        }
        assert_eq!(rational_independence(1.0, 1.0, 10).value, 1.0);
    }

    #[test]
    fn golden_ratio_residues_shrink() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut last = f64::INFINITY;
        for k in [10, 100, 1000] {
            let v = rational_independence(phi, 1.0, k).value;
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn large_a_is_reduced_first() {
        let (a, b) = (9.123, 0.262);
        let v = rational_independence(a, b, 64);
        assert!((v.value - (v.k as f64 * a + v.l as f64 * b).abs()).abs() < 1e-9);
        let r = rational_independence(a.rem_euclid(b), b, 64);
        assert!((v.value - r.value).abs() < 1e-12);
        assert_eq!(rational_independence(-2.5, -1.0, 4).value, 0.5);
    }

    #[test]
    fn density_examples() {
        assert!(rotation_density_check(0.5, 1.0, 0.6).dense);
        assert!(!rotation_density_check(1.0, 1.0, 0.4).dense);
        assert!(rotation_density_check(2f64.sqrt(), 1.0, 0.01).dense);
    }

    #[test]
    fn selection_examples() {
        let eps = 0.1;
        let (a, v) = select_independent(0.5, 0.5 + eps / 2.0, 1.0, eps).unwrap();
        assert_eq!(a, 0.5 + eps / 2.0);
        assert!(v.value < eps);
        let (_, v) = select_independent(1.0 / 3.0, 1.0 / 3.0 + eps / 3.0, 1.0, eps).unwrap();
        assert!(v.value < eps);
        assert!(matches!(
            select_independent(0.25, 1.25, 1.0, eps),
            Err(FiberError::PreconditionViolated { .. })
        ));
    }
}

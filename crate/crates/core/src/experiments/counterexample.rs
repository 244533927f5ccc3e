use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fiber::{ClosedInterval, IntervalMap};
use crate::skew::Boundary;

use super::{stream_rng, ExperimentError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSetup {
    /// Interval orbits are compared for `|n| <= range`.
    pub range: i64,
    /// Length of the repeated symbol word of each sample.
    pub word_length: usize,
    pub orbits: usize,
    pub iterations: u64,
    pub seed: u64,
}

impl Default for CounterexampleSetup {
    fn default() -> Self {
        CounterexampleSetup { range: 50, word_length: 40, orbits: 32, iterations: 10_000, seed: 0 }
    }
}

/// Fixed point `(w^inf, b)` of the symbolic skew product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicFixedPoint {
    /// `0` for the point `p = 0^inf` (fiber `Phi`), `1` for `q = 1^inf`
    /// (fiber `Phi^-1`).
    pub symbol: u8,
    pub boundary: Boundary,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub setup: CounterexampleSetup,
    pub u: ClosedInterval,
    pub v: ClosedInterval,
    /// Smallest gap between `Phi^n(U)` and `V` over the tested range.
    pub min_gap: f64,
    pub fixed_points: Vec<SymbolicFixedPoint>,
    /// Each boundary carries one contracting and one expanding fixed point.
    pub sign_pattern_holds: bool,
    /// Sampled steps that landed in `V`.
    pub entries_into_v: u64,
    /// Largest `|n|` with the fiber coordinate at `Phi^n(t_0)`.
    pub max_excursion: i64,
    pub steps: u64,
}

impl CounterexampleReport {
    pub fn separated(&self) -> bool {
        self.entries_into_v == 0
    }
}

/// `Phi^n(t)` for any integer `n`.
fn power(phi: &dyn IntervalMap, t: f64, n: i64) -> f64 {
    let mut t = t;
    for _ in 0..n.unsigned_abs() {
        t = if n > 0 { phi.value(t) } else { phi.inverse(t) };
    }
    t
}

/// Symbolic skew product over the full two-shift that applies `Phi` on
/// symbol 0 and `Phi^-1` on symbol 1.
///
/// Every boundary fixed point needed for interconnection exists, yet fiber
/// orbits of `U` never reach `V` because each fiber coordinate stays on a
/// single `Phi`-orbit. Open intervals `U` and `V` are treated as their
/// closures.
pub fn horseshoe_counterexample_demo(
    phi: &dyn IntervalMap,
    u: ClosedInterval,
    v: ClosedInterval,
    setup: &CounterexampleSetup,
) -> Result<CounterexampleReport, ExperimentError> {
    let (d0, d1) = (phi.derivative(0.0), phi.derivative(1.0));
    if !(phi.value(0.0) == 0.0 && phi.value(1.0) == 1.0 && d0 < 1.0 && d1 > 1.0) {
        return Err(ExperimentError::HypothesisUnmet {
            reason: format!("need a sink at 0 and a source at 1, got derivatives {d0} and {d1}"),
        });
    }
    if !(u.lo > 0.0 && u.hi < 1.0 && v.lo > 0.0 && v.hi < 1.0) {
        return Err(ExperimentError::HypothesisUnmet { reason: "U and V must lie inside (0, 1)".into() });
    }

    let mut min_gap = f64::INFINITY;
    for n in -setup.range..=setup.range {
        let image = ClosedInterval { lo: power(phi, u.lo, n), hi: power(phi, u.hi, n) };
        if let Some(overlap) = image.overlap(&v) {
            return Err(ExperimentError::IntervalsNotSeparated { n, overlap });
        }
        min_gap = min_gap.min((v.lo - image.hi).max(image.lo - v.hi));
    }

    let (l0, l1) = (d0.ln(), d1.ln());
    let fixed_points = vec![
        SymbolicFixedPoint { symbol: 0, boundary: Boundary::Bottom, exponent: l0 },
        SymbolicFixedPoint { symbol: 0, boundary: Boundary::Top, exponent: l1 },
        SymbolicFixedPoint { symbol: 1, boundary: Boundary::Bottom, exponent: -l0 },
        SymbolicFixedPoint { symbol: 1, boundary: Boundary::Top, exponent: -l1 },
    ];
    let sign_pattern_holds = [Boundary::Bottom, Boundary::Top].iter().all(|b| {
        let on = fixed_points.iter().filter(|p| p.boundary == *b);
        on.clone().any(|p| p.exponent < 0.0) && on.clone().any(|p| p.exponent > 0.0)
    });

    let mut entries_into_v = 0;
    let mut max_excursion = 0_i64;
    for orbit in 0..setup.orbits {
        let mut rng = stream_rng(setup.seed, orbit as u64);
        let word: Vec<bool> = (0..setup.word_length).map(|_| rng.random()).collect();
        let mut t = rng.random_range(u.lo..u.hi);
        let mut n = 0_i64;
        for k in 0..setup.iterations {
            if word[k as usize % word.len()] {
                t = phi.inverse(t);
                n -= 1;
            } else {
                t = phi.value(t);
                n += 1;
            }
            max_excursion = max_excursion.max(n.abs());
            if v.contains(t) {
                entries_into_v += 1;
            }
        }
    }

    Ok(CounterexampleReport {
        setup: *setup,
        u,
        v,
        min_gap,
        fixed_points,
        sign_pattern_holds,
        entries_into_v,
        max_excursion,
        steps: setup.orbits as u64 * setup.iterations,
    })
}

/// Two disjoint closed pieces of the fundamental domain `(Phi(0.9), 0.9)`.
pub fn default_intervals(phi: &dyn IntervalMap) -> (ClosedInterval, ClosedInterval) {
    let (a, b) = (phi.value(0.9), 0.9);
    let w = b - a;
    (
        ClosedInterval { lo: a + 0.1 * w, hi: a + 0.4 * w },
        ClosedInterval { lo: a + 0.6 * w, hi: a + 0.9 * w },
    )
}

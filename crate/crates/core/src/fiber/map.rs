use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ClosedInterval;

/// Regularity data of `ln f'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothness {
    C1,
    /// `|ln f'(x) - ln f'(y)| <= constant |x - y|^exponent`.
    Holder { constant: f64, exponent: f64 },
}

/// An increasing `C^1` map of `[0, 1]` into itself.
pub trait IntervalMap: Debug + Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;

    /// Preimage of `y`; the default bisects on `[0, 1]`.
    fn inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if y <= self.value(0.0) {
            return 0.0;
        }
        if y >= self.value(1.0) {
            return 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C1
    }

    fn boundary_preserving(&self) -> bool {
        true
    }
}

pub type MapRef = Arc<dyn IntervalMap>;

/// `f^n(t)` for `n >= 0`, or `f^{-|n|}(t)` for negative `n`.
pub fn iterate(f: &dyn IntervalMap, t: f64, n: i64) -> f64 {
    let mut x = t;
    for _ in 0..n.unsigned_abs() {
        x = if n >= 0 { f.value(x) } else { f.inverse(x) };
    }
    x
}

/// Image of an interval under an increasing map.
pub fn image(f: &dyn IntervalMap, iv: &ClosedInterval) -> ClosedInterval {
    ClosedInterval { lo: f.value(iv.lo), hi: f.value(iv.hi) }
}

/// Estimate a Lipschitz constant of `ln f'` on `[lo, hi]` from pairwise
/// samples, returned as Hölder data with exponent 1 and constant at least 1.
pub fn estimate_holder(f: &dyn IntervalMap, lo: f64, hi: f64, samples: usize) -> Smoothness {
    if let s @ Smoothness::Holder { .. } = f.smoothness() {
        return s;
    }
    let n = samples.max(2);
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f.derivative(x).ln()).collect();
    let mut c = 1.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[j] - xs[i];
            if dx > 0.0 {
                c = c.max((ys[j] - ys[i]).abs() / dx);
            }
        }
    }
    Smoothness::Holder { constant: c, exponent: 1.0 }
}

/// `t -> alpha t / (1 - (1 - alpha) t)`: the Möbius NS-map with
/// `f'(0) = alpha` and `f'(1) = 1 / alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub alpha: f64,
}

impl IntervalMap for Mobius {
    fn value(&self, t: f64) -> f64 {
        self.alpha * t / (1.0 - (1.0 - self.alpha) * t)
    }
    fn derivative(&self, t: f64) -> f64 {
        let q = 1.0 - (1.0 - self.alpha) * t;
        self.alpha / (q * q)
    }
    fn inverse(&self, y: f64) -> f64 {
        y / (self.alpha + (1.0 - self.alpha) * y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub slope: f64,
}

impl IntervalMap for Linear {
    fn value(&self, t: f64) -> f64 {
        self.slope * t
    }
    fn derivative(&self, _t: f64) -> f64 {
        self.slope
    }
    fn inverse(&self, y: f64) -> f64 {
        y / self.slope
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Holder { constant: 1.0, exponent: 1.0 }
    }
    fn boundary_preserving(&self) -> bool {
        self.slope == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Identity;

impl IntervalMap for Identity {
    fn value(&self, t: f64) -> f64 {
        t
    }
    fn derivative(&self, _t: f64) -> f64 {
        1.0
    }
    fn inverse(&self, y: f64) -> f64 {
        y
    }
}

/// Polynomial with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl IntervalMap for Polynomial {
    fn value(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c)
    }
    fn boundary_preserving(&self) -> bool {
        self.value(0.0).abs() < 1e-14 && (self.value(1.0) - 1.0).abs() < 1e-14
    }
}

/// `t -> f(s t) / s`, the conjugate of `f` restricted to `[0, s]`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub inner: MapRef,
    pub scale: f64,
}

impl IntervalMap for Rescaled {
    fn value(&self, t: f64) -> f64 {
        self.inner.value(self.scale * t) / self.scale
    }
    fn derivative(&self, t: f64) -> f64 {
        self.inner.derivative(self.scale * t)
    }
    fn inverse(&self, y: f64) -> f64 {
        self.inner.inverse(self.scale * y) / self.scale
    }
}

#[derive(Debug, Clone)]
pub struct Inverse(pub MapRef);

impl IntervalMap for Inverse {
    fn value(&self, t: f64) -> f64 {
        self.0.inverse(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        1.0 / self.0.derivative(self.0.inverse(t))
    }
    fn inverse(&self, y: f64) -> f64 {
        self.0.value(y)
    }
    fn boundary_preserving(&self) -> bool {
        self.0.boundary_preserving()
    }
}

/// `t -> 1 - f(1 - t)`: exchanges the roles of the two endpoints.
#[derive(Debug, Clone)]
pub struct Flipped(pub MapRef);

impl IntervalMap for Flipped {
    fn value(&self, t: f64) -> f64 {
        1.0 - self.0.value(1.0 - t)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.0.derivative(1.0 - t)
    }
    fn inverse(&self, y: f64) -> f64 {
        1.0 - self.0.inverse(1.0 - y)
    }
    fn boundary_preserving(&self) -> bool {
        self.0.boundary_preserving()
    }
}

/// Composition applying `maps[0]` first.
#[derive(Debug, Clone)]
pub struct Composed(pub Vec<MapRef>);

impl IntervalMap for Composed {
    fn value(&self, t: f64) -> f64 {
        self.0.iter().fold(t, |x, f| f.value(x))
    }
    fn derivative(&self, t: f64) -> f64 {
        let mut x = t;
        let mut d = 1.0;
        for f in &self.0 {
            d *= f.derivative(x);
            x = f.value(x);
        }
        d
    }
    fn inverse(&self, y: f64) -> f64 {
        self.0.iter().rev().fold(y, |x, f| f.inverse(x))
    }
    fn boundary_preserving(&self) -> bool {
        self.0.iter().all(|f| f.boundary_preserving())
    }
}

/// Serializable description of a builtin interval map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum IntervalMapSpec {
    Mobius { alpha: f64 },
    Linear { slope: f64 },
    Polynomial { coeffs: Vec<f64> },
    Identity,
}

impl IntervalMapSpec {
    pub fn build(&self) -> MapRef {
        match self {
            IntervalMapSpec::Mobius { alpha } => Arc::new(Mobius { alpha: *alpha }),
            IntervalMapSpec::Linear { slope } => Arc::new(Linear { slope: *slope }),
            IntervalMapSpec::Polynomial { coeffs } => {
                Arc::new(Polynomial { coeffs: coeffs.clone() })
            }
            IntervalMapSpec::Identity => Arc::new(Identity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_endpoint_data() {
        let f = Mobius { alpha: 0.5 };
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(1.0), 1.0);
        assert!((f.derivative(0.0) - 0.5).abs() < 1e-15);
        assert!((f.derivative(1.0) - 2.0).abs() < 1e-15);
        for t in [0.1, 0.5, 0.9] {
            assert!((f.inverse(f.value(t)) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn default_inverse_bisects() {
        let p = Polynomial { coeffs: vec![0.0, 0.5, 1.5, -1.0] };
        assert!(p.boundary_preserving());
        for t in [0.01, 0.3, 0.77] {
            assert!((p.inverse(p.value(t)) - t).abs() < 1e-14);
        }
    }

    #[test]
    fn composed_and_flipped() {
        let f: MapRef = Arc::new(Mobius { alpha: 0.3 });
        let c = Composed(vec![f.clone(), Arc::new(Inverse(f.clone()))]);
        assert!((c.value(0.42) - 0.42).abs() < 1e-14);
        assert!((c.derivative(0.42) - 1.0).abs() < 1e-12);
        let fl = Flipped(f);
        assert!((fl.derivative(1.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trip() {
        let s = IntervalMapSpec::Mobius { alpha: 0.25 };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<IntervalMapSpec>(&json).unwrap(), s);
    }
}

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::fiber::IntervalMap;
use crate::torus::point::wrap_centered;
use crate::torus::ToralAutomorphism;

use super::family::{FiberFamily, FiberPoint};
use super::system::SkewProduct;
use super::SkewError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leaf {
    Stable,
    Unstable,
}

/// Truncation and convergence settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyOptions {
    /// Fixed truncation; `None` picks it from the domination margin.
    pub truncation: Option<usize>,
    /// Target for the margin-based tail estimate.
    pub tail_tolerance: f64,
    /// Largest accepted change between truncations `N` and `N + 10`.
    pub cauchy_tolerance: f64,
    /// Largest accepted off-leaf component of `y - x`.
    pub leaf_tolerance: f64,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions {
            truncation: None,
            tail_tolerance: 1e-12,
            cauchy_tolerance: 1e-10,
            leaf_tolerance: 1e-10,
        }
    }
}

const CAUCHY_EXTRA: usize = 10;
const MAX_TRUNCATION: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Op {
    coupling: f64,
    inverse: bool,
}

/// Fiber action of a truncated holonomy: a fixed composition of fiber maps
/// and their inverses.
#[derive(Debug, Clone)]
pub struct HolonomyMap {
    family: FiberFamily,
    ops: Vec<Op>,
}

impl HolonomyMap {
    pub fn apply(&self, p: FiberPoint) -> FiberPoint {
        self.ops.iter().fold(p, |q, op| {
            if op.inverse {
                self.family.inverse_step_with(op.coupling, q)
            } else {
                self.family.step_with(op.coupling, q)
            }
        })
    }

    /// The holonomy in the opposite direction.
    pub fn reversed(&self) -> HolonomyMap {
        let ops = self.ops.iter().rev().map(|o| Op { coupling: o.coupling, inverse: !o.inverse }).collect();
        HolonomyMap { family: self.family.clone(), ops }
    }

    fn derivative_at(&self, p: FiberPoint) -> f64 {
        let mut q = p;
        let mut d = 1.0;
        for op in &self.ops {
            if op.inverse {
                q = self.family.inverse_step_with(op.coupling, q);
                d /= self.family.derivative_with(op.coupling, q);
            } else {
                d *= self.family.derivative_with(op.coupling, q);
                q = self.family.step_with(op.coupling, q);
            }
        }
        d
    }
}

impl IntervalMap for HolonomyMap {
    fn value(&self, t: f64) -> f64 {
        self.apply(FiberPoint::new(t)).t
    }

    fn derivative(&self, t: f64) -> f64 {
        self.derivative_at(FiberPoint::new(t))
    }

    fn inverse(&self, y: f64) -> f64 {
        self.reversed().value(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub leaf: Leaf,
    pub truncation: usize,
    /// Distance from `x` to `y` along the leaf.
    pub leaf_distance: f64,
    /// Largest change of the value between truncations `N` and `N + 10`.
    pub cauchy_value: f64,
    pub cauchy_derivative: f64,
}

/// `t -> lim phi^n_{A^{-n} y} o (phi^n_{A^{-n} x})^{-1}(t)`: the fiber action
/// of the unstable holonomy from the center leaf over `x` to the one over
/// `y`, for `y` on the unstable leaf of `x`.
pub fn unstable_holonomy_fiber(
    f: &SkewProduct,
    x: &[f64],
    y: &[f64],
    options: &HolonomyOptions,
) -> Result<(HolonomyMap, HolonomyReport), SkewError> {
    let (from, to) = leaf_coordinates(f.base(), x, y, Leaf::Unstable, options.leaf_tolerance)?;
    holonomy_along(f, x, &from, &to, Leaf::Unstable, options)
}

/// `t -> lim (phi^n_y)^{-1} o phi^n_x (t)` for `y` on the stable leaf of `x`.
pub fn stable_holonomy_fiber(
    f: &SkewProduct,
    x: &[f64],
    y: &[f64],
    options: &HolonomyOptions,
) -> Result<(HolonomyMap, HolonomyReport), SkewError> {
    let (from, to) = leaf_coordinates(f.base(), x, y, Leaf::Stable, options.leaf_tolerance)?;
    holonomy_along(f, x, &from, &to, Leaf::Stable, options)
}

/// Leaf coordinates of `x` (zero) and `y` relative to the anchor `x`.
fn leaf_coordinates(
    a: &ToralAutomorphism,
    x: &[f64],
    y: &[f64],
    leaf: Leaf,
    tol: f64,
) -> Result<(DVector<f64>, DVector<f64>), SkewError> {
    if x.len() != a.dim() || y.len() != a.dim() {
        return Err(SkewError::NotSameLeaf { off_leaf: f64::INFINITY });
    }
    let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| wrap_centered(b - a)).collect();
    let s = a.splitting();
    let (cs, cu) = s.decompose(&v);
    let (along, across) = match leaf {
        Leaf::Stable => (cs, s.unstable_vector(&cu).norm()),
        Leaf::Unstable => (cu, s.stable_vector(&cs).norm()),
    };
    if across > tol {
        return Err(SkewError::NotSameLeaf { off_leaf: across });
    }
    Ok((DVector::zeros(along.len()), along))
}

/// Holonomy between `anchor + E c_from` and `anchor + E c_to`, where `E` is
/// the basis of the chosen leaf direction.
///
/// The anchor orbit is iterated in floating point; that pseudo-orbit is
/// shadowed by a true orbit starting within rounding of the anchor, and the
/// leaf offsets are propagated exactly through the linear blocks.
pub fn holonomy_along(
    f: &SkewProduct,
    anchor: &[f64],
    c_from: &DVector<f64>,
    c_to: &DVector<f64>,
    leaf: Leaf,
    options: &HolonomyOptions,
) -> Result<(HolonomyMap, HolonomyReport), SkewError> {
    let a = f.base();
    let s = a.splitting();
    let family = f.fiber().clone();
    let offset = |c: &DVector<f64>| match leaf {
        Leaf::Stable => s.stable_vector(c),
        Leaf::Unstable => s.unstable_vector(c),
    };
    let leaf_distance = offset(&(c_to - c_from)).norm();
    if c_from == c_to {
        let report = HolonomyReport {
            leaf,
            truncation: 0,
            leaf_distance,
            cauchy_value: 0.0,
            cauchy_derivative: 0.0,
        };
        return Ok((HolonomyMap { family, ops: Vec::new() }, report));
    }

    let m = f.margins();
    let rate = match leaf {
        Leaf::Unstable => m.max_derivative / s.expansion(),
        Leaf::Stable => s.contraction() / m.min_derivative,
    };
    let n = match options.truncation {
        Some(n) => n.max(1),
        None => {
            let raw = (options.tail_tolerance / leaf_distance).ln() / rate.ln();
            (raw.ceil().max(1.0) as usize).min(MAX_TRUNCATION)
        }
    };

    // couplings along both orbits, index k meaning time -k (unstable) or k (stable)
    let total = n + CAUCHY_EXTRA + 1;
    let mut from = Vec::with_capacity(total);
    let mut to = Vec::with_capacity(total);
    let mut base = anchor.to_vec();
    let (mut cf, mut ct) = (c_from.clone(), c_to.clone());
    for _ in 0..total {
        let point = |c: &DVector<f64>| -> Vec<f64> {
            let o = offset(c);
            base.iter().zip(o.iter()).map(|(b, o)| (b + o).rem_euclid(1.0)).collect()
        };
        from.push(family.coupling(&point(&cf)));
        to.push(family.coupling(&point(&ct)));
        match leaf {
            Leaf::Unstable => {
                base = a.apply_inverse_float(&base);
                cf = s.unstable_block_inverse() * cf;
                ct = s.unstable_block_inverse() * ct;
            }
            Leaf::Stable => {
                base = a.apply_float(&base);
                cf = s.stable_block() * cf;
                ct = s.stable_block() * ct;
            }
        }
    }

    let build = |n: usize| {
        let ops = match leaf {
            Leaf::Unstable => (1..=n)
                .map(|k| Op { coupling: from[k], inverse: true })
                .chain((1..=n).rev().map(|k| Op { coupling: to[k], inverse: false }))
                .collect(),
            Leaf::Stable => (0..n)
                .map(|k| Op { coupling: from[k], inverse: false })
                .chain((0..n).rev().map(|k| Op { coupling: to[k], inverse: true }))
                .collect(),
        };
        HolonomyMap { family: family.clone(), ops }
    };
    let map = build(n);
    let longer = build(n + CAUCHY_EXTRA);
    let (mut cv, mut cd): (f64, f64) = (0.0, 0.0);
    for i in 0..=32 {
        let t = i as f64 / 32.0;
        cv = cv.max((map.value(t) - longer.value(t)).abs());
        cd = cd.max((map.derivative(t) - longer.derivative(t)).abs());
    }
    let report = HolonomyReport { leaf, truncation: n, leaf_distance, cauchy_value: cv, cauchy_derivative: cd };
    if cv.max(cd) > options.cauchy_tolerance {
        return Err(SkewError::NoConvergence { truncation: n, difference: cv.max(cd) });
    }
    Ok((map, report))
}

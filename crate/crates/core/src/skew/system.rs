use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::torus::{PeriodicOrbit, ToralAutomorphism};

use super::exponents::birkhoff_sum;
use super::family::{Boundary, FiberFamily, FiberPoint};
use super::SkewError;

/// Grid resolution per axis used by [`check_domination`].
pub const DOMINATION_GRID: usize = 64;

/// Outcome of the pointwise domination check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationMargins {
    /// `inf d_t phi - |A|_{L^s}|`.
    pub stable: f64,
    /// `m(A|_{L^u}) - sup d_t phi`.
    pub unstable: f64,
    pub min_derivative: f64,
    pub max_derivative: f64,
    /// `|A|_{L^s}| < m_c / |c|` and `m(A|_{L^u}) > |c| / m_c` on the grid.
    pub center_bunched: bool,
    pub grid_points: u64,
}

/// `F(x, t) = (A x, phi(x, t))` with its domination margins.
#[derive(Debug, Clone)]
pub struct SkewProduct {
    base: ToralAutomorphism,
    fiber: FiberFamily,
    margins: DominationMargins,
}

impl SkewProduct {
    pub fn new(base: ToralAutomorphism, fiber: FiberFamily) -> Result<Self, SkewError> {
        if base.dim() != fiber.dim() {
            return Err(SkewError::InvalidFamily {
                reason: format!("psi lives on T^{} but the base is T^{}", fiber.dim(), base.dim()),
            });
        }
        let margins = check_domination(&base, &fiber)?;
        Ok(SkewProduct { base, fiber, margins })
    }

    /// The cat map with the standard Kan coupling at the given `epsilon`.
    pub fn kan_cat(epsilon: f64) -> Result<Self, SkewError> {
        let kan = super::KanParams::new(epsilon, super::TrigPolynomial::first_cosine(2))?;
        SkewProduct::new(ToralAutomorphism::cat_map(), FiberFamily::kan(kan))
    }

    pub fn base(&self) -> &ToralAutomorphism {
        &self.base
    }

    pub fn fiber(&self) -> &FiberFamily {
        &self.fiber
    }

    pub fn margins(&self) -> &DominationMargins {
        &self.margins
    }

    /// One step of `F` on a float base point (reduced mod 1).
    pub fn step(&self, x: &[f64], p: FiberPoint) -> (Vec<f64>, FiberPoint) {
        (self.base.apply_float(x), self.fiber.step(x, p))
    }

    /// Fiber point after following the base orbit `xs` in order.
    pub fn fiber_along<'a>(
        &self,
        xs: impl IntoIterator<Item = &'a Vec<f64>>,
        p: FiberPoint,
    ) -> FiberPoint {
        xs.into_iter().fold(p, |q, x| self.fiber.step(x, q))
    }
}

/// Check `|A|_{L^s}| < d_t phi < m(A|_{L^u})` on a grid of
/// `64^d` base points times 64 fiber points (boundaries included).
pub fn check_domination(
    base: &ToralAutomorphism,
    fiber: &FiberFamily,
) -> Result<DominationMargins, SkewError> {
    let d = base.dim();
    let n = DOMINATION_GRID;
    let contraction = base.splitting().contraction();
    let expansion = base.splitting().expansion();
    let cells = n.pow(d as u32);
    let fiber_pts: Vec<FiberPoint> =
        (0..n).map(|j| FiberPoint { t: j as f64 / (n - 1) as f64, s: (n - 1 - j) as f64 / (n - 1) as f64 }).collect();

    // per base point: (min, argmin t, max, argmax t) over the fiber
    let per_cell: Vec<(f64, f64, f64, f64)> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let x = grid_point(idx, d, n);
            let c = fiber.coupling(&x);
            let mut lo = (f64::INFINITY, 0.0);
            let mut hi = (f64::NEG_INFINITY, 0.0);
            for p in &fiber_pts {
                let v = fiber.derivative_with(c, *p);
                if v < lo.0 {
                    lo = (v, p.t);
                }
                if v > hi.0 {
                    hi = (v, p.t);
                }
            }
            (lo.0, lo.1, hi.0, hi.1)
        })
        .collect();

    let (mut min_d, mut max_d) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut worst_lo, mut worst_hi) = ((0, 0.0), (0, 0.0));
    let mut bunched = true;
    for (i, &(lo, tlo, hi, thi)) in per_cell.iter().enumerate() {
        if lo < min_d {
            min_d = lo;
            worst_lo = (i, tlo);
        }
        if hi > max_d {
            max_d = hi;
            worst_hi = (i, thi);
        }
        let ratio = lo / hi;
        bunched &= contraction < ratio && expansion > 1.0 / ratio;
    }
    let stable = min_d - contraction;
    let unstable = expansion - max_d;
    if !(stable > 0.0) {
        return Err(SkewError::DominationViolated {
            point: grid_point(worst_lo.0, d, n),
            t: worst_lo.1,
            derivative: min_d,
            bound: contraction,
        });
    }
    if !(unstable > 0.0) {
        return Err(SkewError::DominationViolated {
            point: grid_point(worst_hi.0, d, n),
            t: worst_hi.1,
            derivative: max_d,
            bound: expansion,
        });
    }
    Ok(DominationMargins {
        stable,
        unstable,
        min_derivative: min_d,
        max_derivative: max_d,
        center_bunched: bunched,
        grid_points: (cells * n) as u64,
    })
}

/// Base grid point with multi-index packed into `idx`.
pub(crate) fn grid_point(mut idx: usize, d: usize, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for xi in x.iter_mut() {
        *xi = (idx % n) as f64 / n as f64;
        idx /= n;
    }
    x
}

/// Exponent change of one boundary orbit under [`perturb_flow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentShift {
    pub orbit: PeriodicOrbit,
    pub boundary: Boundary,
    pub before: f64,
    pub after: f64,
    /// `after - before`, expected `-tau` on the bottom and `+tau` on top.
    pub shift: f64,
    /// Exponent of the perturbed system recomputed from its numerical
    /// derivative instead of the closed form.
    pub after_numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub tau: f64,
    /// `d Phi_tau / dt (0) = e^{-tau}`.
    pub alpha: f64,
    pub shifts: Vec<ExponentShift>,
    /// Largest deviation of a shift from `-+tau`, over closed-form and
    /// numerical exponents.
    pub max_deviation: f64,
    pub margins: DominationMargins,
}

/// `G = Phi_tau o F`, where `Phi_tau` is the time-`tau` map of
/// `t' = t (t - 1)`; exponents on the bottom boundary drop by `tau`.
pub fn perturb_flow(
    f: &SkewProduct,
    tau: f64,
    orbits: &[PeriodicOrbit],
) -> Result<(SkewProduct, PerturbationReport), SkewError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(SkewError::InvalidFamily { reason: format!("flow time {tau} must be >= 0") });
    }
    let fiber = f.fiber.clone().with_flow(f.fiber.tau() + tau);
    let g = SkewProduct::new(f.base.clone(), fiber)?;
    let mut shifts = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for orbit in orbits {
        for b in [Boundary::Bottom, Boundary::Top] {
            let before = birkhoff_sum(f, orbit, b).exponent;
            let after = birkhoff_sum(&g, orbit, b).exponent;
            let after_numeric = orbit
                .points
                .iter()
                .map(|p| g.fiber.derivative(&p.to_f64(), b.point()).ln())
                .sum::<f64>()
                / orbit.period() as f64;
            let expected = match b {
                Boundary::Bottom => -tau,
                Boundary::Top => tau,
            };
            let shift = after - before;
            max_deviation = max_deviation
                .max((shift - expected).abs())
                .max((after_numeric - before - expected).abs());
            shifts.push(ExponentShift { orbit: orbit.clone(), boundary: b, before, after, shift, after_numeric });
        }
    }
    let report = PerturbationReport {
        tau,
        alpha: (-tau).exp(),
        shifts,
        max_deviation,
        margins: g.margins,
    };
    Ok((g, report))
}

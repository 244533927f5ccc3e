use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::point::{exact_distance, rat_to_f64, round_rational, torus_distance, ExactPoint, TorusPoint};
use super::{ShadowConstants, ToralAutomorphism, TorusError};
use crate::intmat;

/// A sequence of torus points treated as an orbit with small jumps.
///
/// Lifts are chosen by rounding: `e_i = x_{i+1} - A x_i - m_i` with the
/// integer vector `m_i` nearest to `x_{i+1} - A x_i`. A periodic
/// pseudo-orbit also carries the wrap jump from the last point back to the
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOrbit {
    pub points: Vec<TorusPoint>,
    pub periodic: bool,
}

impl PseudoOrbit {
    pub fn new(points: Vec<TorusPoint>, periodic: bool) -> Self {
        PseudoOrbit { points, periodic }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn jump_count(&self) -> usize {
        if self.periodic {
            self.points.len()
        } else {
            self.points.len().saturating_sub(1)
        }
    }

    /// Jump vectors `e_i` in floating point.
    pub fn jumps(&self, a: &ToralAutomorphism) -> Vec<Vec<f64>> {
        let n = self.points.len();
        (0..self.jump_count())
            .map(|i| {
                let (x, y) = (&self.points[i], &self.points[(i + 1) % n]);
                if let (TorusPoint::Exact(x), TorusPoint::Exact(y)) = (x, y) {
                    let ax = intmat::mul_rat_vec(a.matrix(), x.coords());
                    return y
                        .coords()
                        .iter()
                        .zip(&ax)
                        .map(|(v, u)| {
                            let d = v - u;
                            rat_to_f64(&(&d - BigRational::from_integer(round_rational(&d))))
                        })
                        .collect();
                }
                let (x, y) = (x.to_f64(), y.to_f64());
                let ax = a.apply_lift(&x);
                ax.iter().zip(&y).map(|(u, v)| v - u - (v - u).round()).collect()
            })
            .collect()
    }

    /// Largest jump norm.
    pub fn delta(&self, a: &ToralAutomorphism) -> f64 {
        self.jumps(a)
            .iter()
            .map(|e| e.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ShadowResult {
    pub orbit: Vec<TorusPoint>,
    /// Largest distance from a shadow point to its pseudo-orbit point.
    pub max_error: f64,
    /// Distance at each index.
    pub errors: Vec<f64>,
    /// Pointwise a-priori bound from the actual jumps.
    pub bounds: Vec<f64>,
    pub delta: f64,
    pub constants: ShadowConstants,
}

impl ShadowResult {
    /// The uniform form `C_0 mu_0^{min(i, n-i)} delta` of the estimate.
    pub fn uniform_bound(&self, i: usize) -> f64 {
        let n = self.orbit.len();
        let c = &self.constants;
        c.c0 * c.mu0.powi(i.min(n - i) as i32) * self.delta
    }
}

/// Shadow a pseudo-orbit by a genuine orbit.
///
/// Periodic inputs are solved exactly: the shadow starts at the unique
/// solution of `(I - A^n) y_0 = sum A^{n-1-i} m_i`, which is a periodic
/// point. Finite inputs are corrected in floating point, summing stable
/// components forward and unstable components backward.
pub fn shadow_pseudo_orbit(
    a: &ToralAutomorphism,
    po: &PseudoOrbit,
) -> Result<ShadowResult, TorusError> {
    let constants = a.splitting().shadow;
    let jumps = po.jumps(a);
    let norms: Vec<f64> = jumps
        .iter()
        .map(|e| e.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    let delta = norms.iter().copied().fold(0.0, f64::max);
    if delta >= constants.delta0 {
        return Err(TorusError::DeltaTooLarge { delta, delta0: constants.delta0 });
    }
    let bounds = pointwise_bounds(&constants, &norms, po.len(), po.periodic);
    if po.is_empty() {
        return Ok(ShadowResult {
            orbit: vec![],
            max_error: 0.0,
            errors: vec![],
            bounds,
            delta,
            constants,
        });
    }
    let orbit = if delta == 0.0 && po.points.iter().all(|p| p.is_exact()) {
        po.points.clone()
    } else if po.periodic {
        periodic_shadow(a, po)
            .into_iter()
            .map(TorusPoint::Exact)
            .collect::<Vec<_>>()
    } else {
        finite_shadow(a, po, &jumps)
    };
    let errors: Vec<f64> = orbit
        .iter()
        .zip(&po.points)
        .map(|(y, x)| match (y, x) {
            (TorusPoint::Exact(y), TorusPoint::Exact(x)) => exact_distance(x, y),
            (TorusPoint::Exact(y), TorusPoint::Float(x)) => {
                exact_distance(&ExactPoint::from_f64(x), y)
            }
            _ => torus_distance(&y.to_f64(), &x.to_f64()),
        })
        .collect();
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(ShadowResult { orbit, max_error, errors, bounds, delta, constants })
}

fn periodic_shadow(a: &ToralAutomorphism, po: &PseudoOrbit) -> Vec<ExactPoint> {
    let n = po.len();
    let d = a.dim();
    let xs: Vec<ExactPoint> = po.points.iter().map(|p| p.to_exact()).collect();
    // m_i: nearest integer to x_{i+1} - A x_i
    let shifts: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let ax = intmat::mul_rat_vec(a.matrix(), xs[i].coords());
            xs[(i + 1) % n]
                .coords()
                .iter()
                .zip(&ax)
                .map(|(y, u)| round_rational(&(y - u)))
                .collect()
        })
        .collect();
    // r = sum_i A^{n-1-i} m_i by Horner
    let mut r = vec![BigInt::from(0); d];
    for m in &shifts {
        r = intmat::mul_vec(a.matrix(), &r);
        for (ri, mi) in r.iter_mut().zip(m) {
            *ri += mi;
        }
    }
    let lhs = intmat::sub(&intmat::identity(d), &a.power(n as i64));
    let y0 = intmat::solve_rational(&lhs, &r).expect("I - A^n is invertible for hyperbolic A");
    let mut out = Vec::with_capacity(n);
    let mut y: Vec<BigRational> = y0;
    for m in shifts.iter().take(n) {
        out.push(ExactPoint::new(y.clone()));
        let ay = intmat::mul_rat_vec(a.matrix(), &y);
        y = ay
            .into_iter()
            .zip(m)
            .map(|(v, mi)| v + BigRational::from_integer(mi.clone()))
            .collect();
    }
    out
}

fn finite_shadow(a: &ToralAutomorphism, po: &PseudoOrbit, jumps: &[Vec<f64>]) -> Vec<TorusPoint> {
    let n = po.len();
    let s = a.splitting();
    let (ds, du) = (s.stable_dim(), s.unstable_dim());
    let split: Vec<(DVector<f64>, DVector<f64>)> = jumps.iter().map(|e| s.decompose(e)).collect();

    let mut stable = vec![DVector::zeros(ds); n];
    for i in 0..n - 1 {
        stable[i + 1] = s.stable_block() * &stable[i] - &split[i].0;
    }
    let mut unstable = vec![DVector::zeros(du); n];
    for i in (0..n - 1).rev() {
        unstable[i] = s.unstable_block_inverse() * (&unstable[i + 1] + &split[i].1);
    }
    (0..n)
        .map(|i| {
            let x = po.points[i].to_f64();
            let corr = s.stable_vector(&stable[i]) + s.unstable_vector(&unstable[i]);
            TorusPoint::float(&x.iter().zip(corr.iter()).map(|(u, c)| u + c).collect::<Vec<_>>())
        })
        .collect()
}

/// `|Delta_i| <= K kappa sum_j (mu^{i-1-j} [j < i] + mu^{j-i+1} [j >= i]) |e_j|`,
/// with cyclic distances and a `1 / (1 - mu^n)` factor for periodic input.
fn pointwise_bounds(c: &ShadowConstants, norms: &[f64], n: usize, periodic: bool) -> Vec<f64> {
    let kk = c.transient * c.projection_norm;
    let mu = c.mu0;
    (0..n)
        .map(|i| {
            let mut total = 0.0;
            for (j, e) in norms.iter().enumerate() {
                let (back, fwd) = if periodic {
                    let n = n as i64;
                    let (i, j) = (i as i64, j as i64);
                    ((i - 1 - j).rem_euclid(n), (j - i).rem_euclid(n) + 1)
                } else {
                    let (i, j) = (i as i64, j as i64);
                    if j < i {
                        (i - 1 - j, i64::MAX)
                    } else {
                        (i64::MAX, j - i + 1)
                    }
                };
                let term = |k: i64| if k == i64::MAX { 0.0 } else { mu.powi(k as i32) };
                total += (term(back) + term(fwd)) * e;
            }
            let wrap = if periodic { 1.0 / (1.0 - mu.powi(n as i32)) } else { 1.0 };
            kk * wrap * total
        })
        .collect()
}

/// Re-insert a shadow orbit as a pseudo-orbit and return its largest jump.
pub fn residual(a: &ToralAutomorphism, orbit: &[TorusPoint], periodic: bool) -> f64 {
    if orbit.iter().all(|p| p.is_exact()) {
        let n = orbit.len();
        let count = if periodic { n } else { n.saturating_sub(1) };
        let worst = (0..count)
            .map(|i| {
                let ax = a.apply_exact(&orbit[i].to_exact());
                exact_distance(&ax, &orbit[(i + 1) % n].to_exact())
            })
            .fold(0.0, f64::max);
        return worst;
    }
    PseudoOrbit::new(orbit.to_vec(), periodic).delta(a)
}

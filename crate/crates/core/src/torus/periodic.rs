use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::point::ExactPoint;
use super::{ToralAutomorphism, TorusError};
use crate::intmat;

/// An exact periodic orbit, stored starting from its lexicographically
/// smallest point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub points: Vec<ExactPoint>,
}

impl PeriodicOrbit {
    /// Orbit through `p`, or `None` if `p` has no period `<= max_period`.
    pub fn through(a: &ToralAutomorphism, p: &ExactPoint, max_period: usize) -> Option<Self> {
        let mut points = vec![p.clone()];
        let mut x = a.apply_exact(p);
        while &x != p {
            if points.len() >= max_period {
                return None;
            }
            points.push(x.clone());
            x = a.apply_exact(&x);
        }
        Some(Self::canonical(points))
    }

    fn canonical(mut points: Vec<ExactPoint>) -> Self {
        let start = points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        points.rotate_left(start);
        PeriodicOrbit { points }
    }

    pub fn base(&self) -> &ExactPoint {
        &self.points[0]
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }

    /// Orbit point `A^i p` for any integer `i`.
    pub fn at(&self, i: i64) -> &ExactPoint {
        &self.points[i.rem_euclid(self.period() as i64) as usize]
    }

    pub fn float_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.to_f64()).collect()
    }

    pub fn contains(&self, p: &ExactPoint) -> bool {
        self.points.contains(p)
    }

    /// Checks `A points[i] = points[i+1]` exactly and minimality.
    pub fn verify(&self, a: &ToralAutomorphism) -> bool {
        let n = self.period();
        let closes = (0..n).all(|i| a.apply_exact(&self.points[i]) == self.points[(i + 1) % n]);
        let distinct = self.points.iter().collect::<HashSet<_>>().len() == n;
        closes && distinct
    }
}

/// All points with `A^n x = x`, grouped into orbits sorted by
/// representative. Fails when the count `|det(A^n - I)|` exceeds `cap`.
pub fn periodic_points(
    a: &ToralAutomorphism,
    n: u64,
    cap: u64,
) -> Result<Vec<PeriodicOrbit>, TorusError> {
    let d = a.dim();
    let m = intmat::sub(&a.power(n as i64), &intmat::identity(d));
    let count = intmat::det(&m).abs();
    if count.to_u64().is_none_or(|c| c > cap) {
        return Err(TorusError::OverflowBudget { period: n, count: count.to_string(), cap });
    }
    let smith = intmat::smith_form(&m);
    let diag: Vec<u64> = smith
        .diagonal
        .iter()
        .map(|x| x.to_u64().expect("diagonal bounded by count"))
        .collect();

    let mut seen: HashSet<ExactPoint> = HashSet::new();
    let mut orbits = Vec::new();
    let mut w = vec![0u64; d];
    loop {
        // x = V (w / diag) mod 1
        let scaled: Vec<BigRational> = w
            .iter()
            .zip(&diag)
            .map(|(&wi, &di)| BigRational::new(BigInt::from(wi), BigInt::from(di)))
            .collect();
        let x = ExactPoint::new(intmat::mul_rat_vec(&smith.right, &scaled));
        if !seen.contains(&x) {
            let orbit = PeriodicOrbit::through(a, &x, n as usize)
                .expect("solutions of the congruence have period dividing n");
            seen.extend(orbit.points.iter().cloned());
            orbits.push(orbit);
        }
        // odometer over the box prod [0, d_i)
        let mut k = 0;
        loop {
            if k == d {
                orbits.sort_by(|x, y| x.base().cmp(y.base()));
                return Ok(orbits);
            }
            w[k] += 1;
            if w[k] < diag[k] {
                break;
            }
            w[k] = 0;
            k += 1;
        }
    }
}

/// Orbits whose minimal period is exactly `n`.
pub fn orbits_of_exact_period(
    a: &ToralAutomorphism,
    n: u64,
    cap: u64,
) -> Result<Vec<PeriodicOrbit>, TorusError> {
    Ok(periodic_points(a, n, cap)?
        .into_iter()
        .filter(|o| o.period() as u64 == n)
        .collect())
}

/// All periodic orbits with minimal period in `1..=max_period`, ordered by
/// period and then representative.
pub fn orbits_up_to(
    a: &ToralAutomorphism,
    max_period: u64,
    cap: u64,
) -> Result<Vec<PeriodicOrbit>, TorusError> {
    let mut out = Vec::new();
    for n in 1..=max_period {
        out.extend(orbits_of_exact_period(a, n, cap)?);
    }
    Ok(out)
}

/// Number of points fixed by `A^n` (no enumeration).
pub fn fixed_point_count(a: &ToralAutomorphism, n: u64) -> BigInt {
    let m = intmat::sub(&a.power(n as i64), &intmat::identity(a.dim()));
    let c = intmat::det(&m).abs();
    debug_assert!(!c.is_zero());
    c
}

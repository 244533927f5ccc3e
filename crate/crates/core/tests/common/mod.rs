//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use kanlab::intmat;
use kanlab::torus::{ExactPoint, PseudoOrbit, ToralAutomorphism, TorusPoint};
use nalgebra::DVector;
use num_bigint::BigInt;
use rand::Rng;

/// Points of the `1/D` lattice fixed by `A^n`, with `D = |det(A^n - I)|`,
/// counted one by one.
pub fn lattice_fixed_points(a: [[i64; 2]; 2], n: u32) -> u64 {
    let mul = |x: [[i64; 2]; 2], y: [[i64; 2]; 2]| {
        let mut z = [[0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let mut p = [[1, 0], [0, 1]];
    for _ in 0..n {
        p = mul(p, a);
    }
    let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
    let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let mut count = 0;
    for i in 0..d {
        for j in 0..d {
            let u = (m[0][0] * i + m[0][1] * j).rem_euclid(d);
            let v = (m[1][0] * i + m[1][1] * j).rem_euclid(d);
            if u == 0 && v == 0 {
                count += 1;
            }
        }
    }
    count
}

/// A random point of period dividing `n`, from `(I - A^n) y = r` with a
/// random integer `r`.
pub fn random_periodic_point(a: &ToralAutomorphism, n: usize, rng: &mut impl Rng) -> ExactPoint {
    let d = a.dim();
    let lhs = intmat::sub(&intmat::identity(d), &a.power(n as i64));
    let r: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.random_range(-1000..1000))).collect();
    let y = intmat::solve_rational(&lhs, &r).expect("hyperbolic");
    ExactPoint::new(y.iter().map(kanlab::torus::point::frac).collect())
}

/// A periodic pseudo-orbit of length `n` that follows the orbit of a
/// periodic point `p`, pushed off along the stable direction at the start
/// and along the unstable direction at the end, so that the only jump of
/// size about `delta` sits at the wrap.
pub fn closing_pseudo_orbit<R: Rng>(
    a: &ToralAutomorphism,
    n: usize,
    delta: f64,
    rng: &mut R,
) -> (PseudoOrbit, ExactPoint) {
    let p = random_periodic_point(a, n, rng);
    let s = a.splitting();
    let lu = s.expansion();
    let unit = |dim: usize, rng: &mut R| {
        let v = DVector::<f64>::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm().max(f64::MIN_POSITIVE);
        v / norm
    };
    // the stable part starts at size delta / 4 and decays; the unstable part
    // is placed in eigen-coordinates so that it reaches delta / (4 lambda_u)
    // at the last index
    let mut cs = unit(s.stable_dim(), rng) * (delta / 4.0);
    let mut cu = unit(s.unstable_dim(), rng) * (delta / (4.0 * lu));
    for _ in 0..n - 1 {
        cu = s.unstable_block_inverse() * cu;
    }
    let mut points = Vec::with_capacity(n);
    let mut q = p.clone();
    for _ in 0..n {
        let offset = s.stable_vector(&cs) + s.unstable_vector(&cu);
        let x: Vec<f64> = q.to_f64().iter().zip(offset.iter()).map(|(p, o)| p + o).collect();
        points.push(TorusPoint::float(&x));
        q = a.apply_exact(&q);
        cs = s.stable_block() * cs;
        cu = s.unstable_block() * cu;
    }
    (PseudoOrbit::new(points, true), p)
}

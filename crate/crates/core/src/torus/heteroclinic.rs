use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::point::ExactPoint;
use super::{ToralAutomorphism, TorusError};

/// A point `z` in `W^u(p) ∩ W^s(q)`, stored as exact anchors plus offsets
/// along the splitting:
/// `z = q - v_s = p + k + v_u` in the lift.
///
/// Forward iterates are `A^n q - A^n v_s` and backward iterates are
/// `A^{-n} p + A^{-n} v_u`; both offsets shrink, so long orbits stay accurate
/// in floating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicPoint {
    pub source: ExactPoint,
    pub target: ExactPoint,
    pub translate: Vec<i64>,
    pub stable_coords: Vec<f64>,
    pub unstable_coords: Vec<f64>,
    /// `z` in the lift `q - v_s`, not reduced.
    pub lift: Vec<f64>,
}

impl HeteroclinicPoint {
    pub fn point(&self) -> Vec<f64> {
        self.lift.iter().map(|c| c.rem_euclid(1.0)).collect()
    }

    /// `|v_s|`: distance from `z` to `q` along `L^s`.
    pub fn stable_offset(&self, a: &ToralAutomorphism) -> Vec<f64> {
        let cs = DVector::from_column_slice(&self.stable_coords);
        a.splitting().stable_vector(&cs).as_slice().to_vec()
    }

    pub fn unstable_offset(&self, a: &ToralAutomorphism) -> Vec<f64> {
        let cu = DVector::from_column_slice(&self.unstable_coords);
        a.splitting().unstable_vector(&cu).as_slice().to_vec()
    }

    /// `A^n z` for `n >= 0`, reduced mod 1.
    pub fn forward(&self, a: &ToralAutomorphism, n: u64) -> Vec<f64> {
        let s = a.splitting();
        let mut cs = DVector::from_column_slice(&self.stable_coords);
        for _ in 0..n {
            cs = s.stable_block() * cs;
        }
        let anchor = a.iterate_exact(&self.target, n as i64).to_f64();
        let off = s.stable_vector(&cs);
        anchor
            .iter()
            .zip(off.iter())
            .map(|(x, o)| (x - o).rem_euclid(1.0))
            .collect()
    }

    /// `A^{-n} z` for `n >= 0`, reduced mod 1.
    pub fn backward(&self, a: &ToralAutomorphism, n: u64) -> Vec<f64> {
        let s = a.splitting();
        let mut cu = DVector::from_column_slice(&self.unstable_coords);
        for _ in 0..n {
            cu = s.unstable_block_inverse() * cu;
        }
        let anchor = a.iterate_exact(&self.source, -(n as i64)).to_f64();
        let off = s.unstable_vector(&cu);
        anchor
            .iter()
            .zip(off.iter())
            .map(|(x, o)| (x + o).rem_euclid(1.0))
            .collect()
    }

    /// `z, A z, ..., A^{n-1} z`, built incrementally.
    pub fn forward_orbit(&self, a: &ToralAutomorphism, n: usize) -> Vec<Vec<f64>> {
        let s = a.splitting();
        let mut cs = DVector::from_column_slice(&self.stable_coords);
        let mut anchor = self.target.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let off = s.stable_vector(&cs);
            out.push(
                anchor
                    .to_f64()
                    .iter()
                    .zip(off.iter())
                    .map(|(x, o)| (x - o).rem_euclid(1.0))
                    .collect(),
            );
            anchor = a.apply_exact(&anchor);
            cs = s.stable_block() * cs;
        }
        out
    }

    /// `z, A^{-1} z, ..., A^{-(n-1)} z`, built incrementally.
    pub fn backward_orbit(&self, a: &ToralAutomorphism, n: usize) -> Vec<Vec<f64>> {
        let s = a.splitting();
        let mut cu = DVector::from_column_slice(&self.unstable_coords);
        let mut anchor = self.source.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let off = s.unstable_vector(&cu);
            out.push(
                anchor
                    .to_f64()
                    .iter()
                    .zip(off.iter())
                    .map(|(x, o)| (x + o).rem_euclid(1.0))
                    .collect(),
            );
            anchor = a.apply_inverse_exact(&anchor);
            cu = s.unstable_block_inverse() * cu;
        }
        out
    }

    /// `A^i z` for any integer `i`.
    pub fn at(&self, a: &ToralAutomorphism, i: i64) -> Vec<f64> {
        if i >= 0 {
            self.forward(a, i as u64)
        } else {
            self.backward(a, i.unsigned_abs())
        }
    }
}

/// Integer vectors with Euclidean norm `<= bound`, in lexicographic order.
fn lattice_ball(dim: usize, bound: f64) -> Vec<Vec<i64>> {
    let r = bound.floor() as i64;
    let mut out = Vec::new();
    let mut v = vec![-r; dim];
    loop {
        let norm2: i64 = v.iter().map(|x| x * x).sum();
        if (norm2 as f64) <= bound * bound + 1e-9 {
            out.push(v.clone());
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            v[k] += 1;
            if v[k] <= r {
                break;
            }
            v[k] = -r;
        }
    }
}

/// Heteroclinic point from `source` to `target` (in the unstable manifold of
/// `source` and the stable manifold of `target`) of smallest total offset
/// `|v_s| + |v_u|` over integer translates of norm `<= norm_bound`.
///
/// Ties go to the lexicographically smallest lift. With `exclude_trivial`
/// the zero-offset solution (when `source == target`) is skipped.
pub fn heteroclinic_point(
    a: &ToralAutomorphism,
    source: &ExactPoint,
    target: &ExactPoint,
    norm_bound: f64,
    exclude_trivial: bool,
) -> Result<HeteroclinicPoint, TorusError> {
    let d = a.dim();
    if source.dim() != d || target.dim() != d {
        return Err(TorusError::DimensionMismatch { expected: d, got: source.dim() });
    }
    let s = a.splitting();
    let p = source.to_f64();
    let q = target.to_f64();
    let mut best: Option<(f64, Vec<f64>, HeteroclinicPoint)> = None;
    for k in lattice_ball(d, norm_bound) {
        let v: Vec<f64> = (0..d).map(|i| q[i] - p[i] - k[i] as f64).collect();
        if exclude_trivial && v.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12 {
            continue;
        }
        let (cs, cu) = s.decompose(&v);
        let vs = s.stable_vector(&cs);
        let vu = s.unstable_vector(&cu);
        let cost = vs.norm() + vu.norm();
        let lift: Vec<f64> = (0..d).map(|i| q[i] - vs[i]).collect();
        let better = match &best {
            None => true,
            Some((c, l, _)) => {
                let tol = 1e-12 * c.max(1.0);
                cost < c - tol || ((cost - c).abs() <= tol && lift < *l)
            }
        };
        if better {
            let h = HeteroclinicPoint {
                source: source.clone(),
                target: target.clone(),
                translate: k.clone(),
                stable_coords: cs.as_slice().to_vec(),
                unstable_coords: cu.as_slice().to_vec(),
                lift: lift.clone(),
            };
            best = Some((cost, lift, h));
        }
    }
    best.map(|b| b.2)
        .ok_or(TorusError::NoSolutionInBound { bound: norm_bound })
}

#[cfg(test)]
mod tests {
    use super::super::point::torus_distance;
    use super::*;

    #[test]
    fn trivial_solution_at_common_fixed_point() {
        let a = ToralAutomorphism::cat_map();
        let o = ExactPoint::origin(2);
        let h = heteroclinic_point(&a, &o, &o, 3.0, false).unwrap();
        assert!(torus_distance(&h.point(), &[0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn homoclinic_point_of_origin_lies_on_both_lines() {
        let a = ToralAutomorphism::cat_map();
        let o = ExactPoint::origin(2);
        let h = heteroclinic_point(&a, &o, &o, 3.0, true).unwrap();
        let s = a.splitting();
        // z - k is on L^u and z is on L^s, in the lift
        let z = &h.lift;
        let (_, cu_of_z) = s.decompose(z);
        let on_s = s.unstable_vector(&cu_of_z).norm();
        assert!(on_s < 1e-10);
        let zk: Vec<f64> = z.iter().zip(&h.translate).map(|(x, k)| x - *k as f64).collect();
        let (cs_of_zk, _) = s.decompose(&zk);
        assert!(s.stable_vector(&cs_of_zk).norm() < 1e-10);
        assert!(h.translate.iter().any(|&k| k != 0));
    }

    #[test]
    fn forward_and_backward_convergence() {
        let a = ToralAutomorphism::cat_map();
        let o = ExactPoint::origin(2);
        let q = ExactPoint::from_fractions(&[(3, 5), (1, 5)]);
        let h = heteroclinic_point(&a, &o, &q, 3.0, false).unwrap();
        let fwd = h.forward(&a, 60);
        let target = a.iterate_exact(&q, 60).to_f64();
        assert!(torus_distance(&fwd, &target) < 1e-8);
        let orbit = h.forward_orbit(&a, 61);
        assert!(torus_distance(&orbit[60], &fwd) < 1e-12);
        let back = h.backward_orbit(&a, 31);
        assert!(torus_distance(&back[30], &h.backward(&a, 30)) < 1e-12);
        let back = h.backward(&a, 60);
        assert!(torus_distance(&back, &[0.0, 0.0]) < 1e-8);
        // the two representations agree at time 0
        assert!(torus_distance(&h.forward(&a, 0), &h.backward(&a, 0)) < 1e-12);
    }
}

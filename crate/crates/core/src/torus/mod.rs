//! Hyperbolic automorphisms of the torus `T^d = R^d / Z^d`.
//!
//! Exact rational arithmetic handles periodic points and shadowing of
//! periodic pseudo-orbits; floating point is used for the invariant
//! splitting and for long orbits.

mod heteroclinic;
mod periodic;
pub mod point;
mod shadow;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::{self, IntMatrix};

pub use heteroclinic::{heteroclinic_point, HeteroclinicPoint};
pub use periodic::{
    fixed_point_count, orbits_of_exact_period, orbits_up_to, periodic_points, PeriodicOrbit,
};
pub use point::{ExactPoint, TorusPoint};
pub use shadow::{residual, shadow_pseudo_orbit, PseudoOrbit, ShadowResult};

/// Eigenvalue moduli closer than this to 1 are treated as neutral.
pub const HYPERBOLICITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("matrix must be square with at least one row")]
    NotSquare,
    #[error("determinant {det} is not +-1")]
    NotUnimodular { det: String },
    #[error("eigenvalue of modulus {modulus} is within tolerance of the unit circle")]
    NotHyperbolic { modulus: f64 },
    #[error("|det(A^{period} - I)| = {count} exceeds the enumeration cap {cap}")]
    OverflowBudget { period: u64, count: String, cap: u64 },
    #[error("no lattice translate with norm <= {bound} yields an intersection")]
    NoSolutionInBound { bound: f64 },
    #[error("pseudo-orbit jump {delta:e} is not below delta_0 = {delta0:e}")]
    DeltaTooLarge { delta: f64, delta0: f64 },
    #[error("exact coordinate denominator has {bits} bits, limit is {limit}")]
    DenominatorTooLarge { bits: u64, limit: u64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Constants of the linear shadowing estimate, derived from the splitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowConstants {
    /// Larger operator norm of the two spectral projections.
    pub projection_norm: f64,
    /// Transient growth factor: `|B^k| <= K mu^k` on both subspaces.
    pub transient: f64,
    /// Per-step contraction `mu_0 = max(e^{rate_s}, e^{-rate_u})`.
    pub mu0: f64,
    /// `C_0 = 2 K kappa / (1 - mu_0)`.
    pub c0: f64,
    /// Largest admissible jump, `1 / (4 C_0)`.
    pub delta0: f64,
}

/// Invariant splitting `R^d = L^s + L^u` with orthonormal bases.
#[derive(Debug, Clone)]
pub struct HyperbolicSplitting {
    pub stable_basis: Vec<Vec<f64>>,
    pub unstable_basis: Vec<Vec<f64>>,
    /// `ln` of the largest stable eigenvalue modulus.
    pub rate_s: f64,
    /// `ln` of the smallest unstable eigenvalue modulus.
    pub rate_u: f64,
    pub shadow: ShadowConstants,
    es: DMatrix<f64>,
    eu: DMatrix<f64>,
    /// Inverse of `[Es | Eu]`, giving coordinates in the adapted basis.
    coords: DMatrix<f64>,
    bs: DMatrix<f64>,
    bu: DMatrix<f64>,
    bu_inv: DMatrix<f64>,
}

impl HyperbolicSplitting {
    pub fn stable_dim(&self) -> usize {
        self.es.ncols()
    }

    pub fn unstable_dim(&self) -> usize {
        self.eu.ncols()
    }

    /// Coordinates `(c_s, c_u)` of `v` in the adapted basis.
    pub fn decompose(&self, v: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let c = &self.coords * DVector::from_column_slice(v);
        let ds = self.stable_dim();
        (
            c.rows(0, ds).into_owned(),
            c.rows(ds, self.unstable_dim()).into_owned(),
        )
    }

    pub fn stable_vector(&self, cs: &DVector<f64>) -> DVector<f64> {
        &self.es * cs
    }

    pub fn unstable_vector(&self, cu: &DVector<f64>) -> DVector<f64> {
        &self.eu * cu
    }

    /// Restriction of `A` to `L^s` in stable-basis coordinates.
    pub fn stable_block(&self) -> &DMatrix<f64> {
        &self.bs
    }

    pub fn unstable_block(&self) -> &DMatrix<f64> {
        &self.bu
    }

    pub fn unstable_block_inverse(&self) -> &DMatrix<f64> {
        &self.bu_inv
    }

    /// `|A|_{L^s}|` and `m(A|_{L^u})` in the adapted norm.
    pub fn contraction(&self) -> f64 {
        self.rate_s.exp()
    }

    pub fn expansion(&self) -> f64 {
        self.rate_u.exp()
    }

    /// Largest deviation `|A v - P(A v)|` of basis images from their own
    /// subspace.
    pub fn invariance_defect(&self, a: &DMatrix<f64>) -> f64 {
        let defect = |basis: &DMatrix<f64>| {
            let img = a * basis;
            let proj = basis * (basis.transpose() * &img);
            (img - proj).amax()
        };
        defect(&self.es).max(defect(&self.eu))
    }
}

/// A hyperbolic element of `GL(d, Z)` acting on `T^d`.
#[derive(Debug, Clone)]
pub struct ToralAutomorphism {
    matrix: IntMatrix,
    inverse: IntMatrix,
    det: i8,
    float: DMatrix<f64>,
    float_inverse: DMatrix<f64>,
    splitting: HyperbolicSplitting,
}

impl PartialEq for ToralAutomorphism {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// Validate a square integer matrix as a hyperbolic toral automorphism and
/// compute its splitting.
pub fn validate_automorphism(rows: &[Vec<i64>]) -> Result<ToralAutomorphism, TorusError> {
    ToralAutomorphism::new(rows)
}

impl ToralAutomorphism {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self, TorusError> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(TorusError::NotSquare);
        }
        let matrix = intmat::from_i64(rows);
        let det = intmat::det(&matrix);
        if !det.abs().is_one() {
            return Err(TorusError::NotUnimodular { det: det.to_string() });
        }
        let det = if det.is_positive() { 1 } else { -1 };

        // exact screen: +-1 can never be an eigenvalue
        let cp = intmat::charpoly(&matrix);
        for root in [BigInt::one(), -BigInt::one()] {
            if intmat::eval_poly(&cp, &root).is_zero() {
                return Err(TorusError::NotHyperbolic { modulus: 1.0 });
            }
        }

        let float = DMatrix::from_fn(d, d, |i, j| rows[i][j] as f64);
        let eig = float.clone().complex_eigenvalues();
        for l in eig.iter() {
            if (l.norm() - 1.0).abs() < HYPERBOLICITY_TOL {
                return Err(TorusError::NotHyperbolic { modulus: l.norm() });
            }
        }
        let inverse = intmat::unimodular_inverse(&matrix);
        let float_inverse = DMatrix::from_fn(d, d, |i, j| {
            inverse[i][j].to_f64().expect("small integer entry")
        });
        let splitting = split(&float, eig.as_slice())?;
        Ok(ToralAutomorphism { matrix, inverse, det, float, float_inverse, splitting })
    }

    pub fn cat_map() -> Self {
        Self::new(&[vec![2, 1], vec![1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn det(&self) -> i8 {
        self.det
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.matrix
            .iter()
            .map(|r| r.iter().map(|v| v.to_i64().expect("small entry")).collect())
            .collect()
    }

    pub fn inverse_matrix(&self) -> &IntMatrix {
        &self.inverse
    }

    pub fn float_matrix(&self) -> &DMatrix<f64> {
        &self.float
    }

    pub fn float_inverse(&self) -> &DMatrix<f64> {
        &self.float_inverse
    }

    pub fn splitting(&self) -> &HyperbolicSplitting {
        &self.splitting
    }

    /// Integer matrix of `A^n` for any integer `n`.
    pub fn power(&self, n: i64) -> IntMatrix {
        if n >= 0 {
            intmat::pow(&self.matrix, n as u64)
        } else {
            intmat::pow(&self.inverse, n.unsigned_abs())
        }
    }

    pub fn apply_exact(&self, x: &ExactPoint) -> ExactPoint {
        ExactPoint::new(intmat::mul_rat_vec(&self.matrix, x.coords()))
    }

    pub fn apply_inverse_exact(&self, x: &ExactPoint) -> ExactPoint {
        ExactPoint::new(intmat::mul_rat_vec(&self.inverse, x.coords()))
    }

    /// `A x` in the lift (no reduction).
    pub fn apply_lift(&self, x: &[f64]) -> Vec<f64> {
        (&self.float * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn apply_float(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_lift(x);
        y.iter_mut().for_each(|c| *c = c.rem_euclid(1.0));
        y
    }

    /// `A x mod 1` written into `out`, without allocating.
    pub fn apply_float_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.float[(i, j)] * xj;
            }
            *o = acc.rem_euclid(1.0);
        }
    }

    pub fn apply_inverse_float(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.float_inverse * DVector::from_column_slice(x);
        y.iter().map(|c| c.rem_euclid(1.0)).collect()
    }

    /// `A^n x`; exact points stay exact, float points are reduced every step.
    pub fn iterate(&self, x: &TorusPoint, n: i64) -> TorusPoint {
        match x {
            TorusPoint::Exact(p) => TorusPoint::Exact(self.iterate_exact(p, n)),
            TorusPoint::Float(v) => {
                let mut y = v.clone();
                for _ in 0..n.unsigned_abs() {
                    y = if n >= 0 {
                        self.apply_float(&y)
                    } else {
                        self.apply_inverse_float(&y)
                    };
                }
                TorusPoint::Float(y)
            }
        }
    }

    pub fn iterate_exact(&self, x: &ExactPoint, n: i64) -> ExactPoint {
        ExactPoint::new(intmat::mul_rat_vec(&self.power(n), x.coords()))
    }

    /// Float iteration that also returns the accumulated integer lift
    /// corrections `m_i` with `y_{i+1} = A y_i - m_i`.
    pub fn iterate_with_lifts(&self, x: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<i64>>) {
        let mut y = x.to_vec();
        let mut lifts = Vec::with_capacity(n);
        for _ in 0..n {
            let z = self.apply_lift(&y);
            lifts.push(z.iter().map(|c| c.floor() as i64).collect());
            y = z.iter().map(|c| c - c.floor()).collect();
        }
        (y, lifts)
    }
}

/// Compute `L^s`, `L^u` as images of the complementary spectral factors of
/// the characteristic polynomial.
fn split(
    a: &DMatrix<f64>,
    eig: &[nalgebra::Complex<f64>],
) -> Result<HyperbolicSplitting, TorusError> {
    let d = a.nrows();
    let stable: Vec<_> = eig.iter().copied().filter(|l| l.norm() < 1.0).collect();
    let unstable: Vec<_> = eig.iter().copied().filter(|l| l.norm() > 1.0).collect();

    // L^u = image of chi_s(A), L^s = image of chi_u(A)
    let eu = image_basis(&poly_at_matrix(a, &stable), unstable.len());
    let es = image_basis(&poly_at_matrix(a, &unstable), stable.len());

    let rate_s = stable.iter().map(|l| l.norm()).fold(0.0_f64, f64::max).ln();
    let rate_u = unstable
        .iter()
        .map(|l| l.norm())
        .fold(f64::INFINITY, f64::min)
        .ln();

    let mut e = DMatrix::zeros(d, d);
    e.columns_mut(0, es.ncols()).copy_from(&es);
    e.columns_mut(es.ncols(), eu.ncols()).copy_from(&eu);
    let coords = e
        .clone()
        .try_inverse()
        .ok_or(TorusError::NotHyperbolic { modulus: 1.0 })?;

    let bs = es.transpose() * a * &es;
    let bu = eu.transpose() * a * &eu;
    let bu_inv = bu
        .clone()
        .try_inverse()
        .ok_or(TorusError::NotHyperbolic { modulus: 0.0 })?;

    let shadow = shadow_constants(&e, &coords, &bs, &bu_inv, rate_s, rate_u);
    let columns = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    };
    Ok(HyperbolicSplitting {
        stable_basis: columns(&es),
        unstable_basis: columns(&eu),
        rate_s,
        rate_u,
        shadow,
        es,
        eu,
        coords,
        bs,
        bu,
        bu_inv,
    })
}

/// Real matrix `prod (A - l I)` over the given roots; conjugate pairs are
/// multiplied together so the result is real.
fn poly_at_matrix(a: &DMatrix<f64>, roots: &[nalgebra::Complex<f64>]) -> DMatrix<f64> {
    let d = a.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let mut out = id.clone();
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = roots[i];
        if l.im.abs() < 1e-12 {
            out = out * (a - &id * l.re);
        } else {
            // pair with its conjugate
            if let Some(j) = (i + 1..roots.len())
                .find(|&j| !used[j] && (roots[j] - l.conj()).norm() < 1e-8)
            {
                used[j] = true;
            }
            let quad = a * a - a * (2.0 * l.re) + &id * l.norm_sqr();
            out = out * quad;
        }
    }
    out
}

/// Orthonormal basis of the column space, keeping the `rank` dominant left
/// singular vectors.
fn image_basis(m: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut basis = DMatrix::zeros(m.nrows(), rank);
    for (k, &i) in order.iter().take(rank).enumerate() {
        let mut col = u.column(i).into_owned();
        // sign convention: first significant entry positive
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col = -col;
            }
        }
        basis.set_column(k, &col);
    }
    basis
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

fn shadow_constants(
    e: &DMatrix<f64>,
    coords: &DMatrix<f64>,
    bs: &DMatrix<f64>,
    bu_inv: &DMatrix<f64>,
    rate_s: f64,
    rate_u: f64,
) -> ShadowConstants {
    let d = e.nrows();
    let ds = bs.nrows();
    let mut mask_s = DMatrix::<f64>::zeros(d, d);
    for i in 0..ds {
        mask_s[(i, i)] = 1.0;
    }
    let mask_u = DMatrix::<f64>::identity(d, d) - &mask_s;
    let ps = e * mask_s * coords;
    let pu = e * mask_u * coords;
    let projection_norm = spectral_norm(&ps).max(spectral_norm(&pu));

    let mu0 = rate_s.exp().max((-rate_u).exp());
    let mut transient = 1.0_f64;
    let (mut ps_k, mut pu_k) = (
        DMatrix::<f64>::identity(ds, ds),
        DMatrix::<f64>::identity(bu_inv.nrows(), bu_inv.nrows()),
    );
    for k in 1..=256 {
        ps_k = &ps_k * bs;
        pu_k = &pu_k * bu_inv;
        let scale = mu0.powi(k);
        if scale < 1e-280 {
            break;
        }
        transient = transient
            .max(spectral_norm(&ps_k) / scale)
            .max(spectral_norm(&pu_k) / scale);
    }
    let c0 = 2.0 * transient * projection_norm / (1.0 - mu0);
    ShadowConstants { projection_norm, transient, mu0, c0, delta0: 1.0 / (4.0 * c0) }
}

//! Small dense integer and rational matrices.
//!
//! Everything here works on `BigInt` so that powers of hyperbolic matrices
//! (whose entries grow like the leading eigenvalue to the power `n`) never
//! overflow. Dimensions are tiny (d <= 4), so plain `Vec<Vec<_>>` storage is
//! used throughout.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn from_i64(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

pub fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = BigInt::zero();
            for l in 0..k {
                acc += &a[i][l] * &b[l][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn mul_vec(a: &IntMatrix, v: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn mul_rat_vec(a: &IntMatrix, v: &[BigRational]) -> Vec<BigRational> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(BigRational::zero(), |acc, (x, y)| {
                    acc + BigRational::from_integer(x.clone()) * y
                })
        })
        .collect()
}

/// `a^n` for `n >= 0` by repeated squaring.
pub fn pow(a: &IntMatrix, mut n: u64) -> IntMatrix {
    let mut result = identity(a.len());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = mul(&result, &base);
        }
        n >>= 1;
        if n > 0 {
            base = mul(&base, &base);
        }
    }
    result
}

pub fn sub(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn det(a: &IntMatrix) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m = a.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Characteristic polynomial `det(xI - A)` via Faddeev-LeVerrier; returned
/// with the leading coefficient first.
pub fn charpoly(a: &IntMatrix) -> Vec<BigInt> {
    let n = a.len();
    let mut coeffs = vec![BigInt::one()];
    let mut m = identity(n);
    for k in 1..=n {
        let am = mul(a, &m);
        let trace: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        let c = -trace / BigInt::from(k as i64);
        coeffs.push(c.clone());
        m = am;
        for i in 0..n {
            m[i][i] += &c;
        }
    }
    coeffs
}

pub fn eval_poly(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    coeffs
        .iter()
        .fold(BigInt::zero(), |acc, c| acc * x + c)
}

/// Adjugate-based inverse of a unimodular matrix. Panics if `|det| != 1`.
pub fn unimodular_inverse(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let d = det(a);
    assert!(d.abs().is_one(), "matrix is not unimodular");
    if n == 1 {
        return vec![vec![d]];
    }
    let mut inv = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: IntMatrix = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| a[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = det(&minor);
            let s = if (i + j) % 2 == 0 { cof } else { -cof };
            inv[i][j] = s * &d;
        }
    }
    inv
}

/// Diagonal Smith form `U A V = D` of a square integer matrix. Only `D`
/// (as its diagonal) and the right transform `V` are returned, which is all
/// the congruence solver needs.
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub right: IntMatrix,
}

pub fn smith_form(a: &IntMatrix) -> SmithForm {
    let n = a.len();
    let mut m = a.clone();
    let mut v = identity(n);

    for k in 0..n {
        loop {
            let pivot = (k..n)
                .flat_map(|i| (k..n).map(move |j| (i, j)))
                .filter(|&(i, j)| !m[i][j].is_zero())
                .min_by(|&(i1, j1), &(i2, j2)| m[i1][j1].abs().cmp(&m[i2][j2].abs()));
            let Some((pi, pj)) = pivot else {
                // remaining block is zero
                return SmithForm { diagonal: (0..n).map(|i| m[i][i].clone()).collect(), right: v };
            };
            m.swap(k, pi);
            if pj != k {
                for row in m.iter_mut() {
                    row.swap(k, pj);
                }
                for row in v.iter_mut() {
                    row.swap(k, pj);
                }
            }

            let mut clean = true;
            for i in k + 1..n {
                if m[i][k].is_zero() {
                    continue;
                }
                let q = m[i][k].div_floor(&m[k][k]);
                for j in k..n {
                    let t = &q * &m[k][j];
                    m[i][j] -= t;
                }
                if !m[i][k].is_zero() {
                    clean = false;
                }
            }
            for j in k + 1..n {
                if m[k][j].is_zero() {
                    continue;
                }
                let q = m[k][j].div_floor(&m[k][k]);
                for i in k..n {
                    let t = &q * &m[i][k];
                    m[i][j] -= t;
                }
                for row in v.iter_mut() {
                    let t = &q * &row[k];
                    row[j] -= t;
                }
                if !m[k][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the trailing block
            let offender = (k + 1..n)
                .flat_map(|i| (k + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !m[i][j].is_multiple_of(&m[k][k]));
            match offender {
                Some((i, _)) => {
                    for j in k..n {
                        let t = m[i][j].clone();
                        m[k][j] += t;
                    }
                }
                None => break,
            }
        }
        if m[k][k].is_negative() {
            for row in m.iter_mut() {
                row[k] = -row[k].clone();
            }
            for row in v.iter_mut() {
                row[k] = -row[k].clone();
            }
        }
    }
    SmithForm { diagonal: (0..n).map(|i| m[i][i].clone()).collect(), right: v }
}

/// Solve `M x = b` exactly over the rationals. Returns `None` if `M` is
/// singular.
pub fn solve_rational(m: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigRational>> {
    let n = m.len();
    let mut aug: Vec<Vec<BigRational>> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            row.iter()
                .chain(std::iter::once(bi))
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, piv);
        let p = aug[col][col].clone();
        for j in col..=n {
            aug[col][j] = &aug[col][j] / &p;
        }
        for r in 0..n {
            if r == col || aug[r][col].is_zero() {
                continue;
            }
            let f = aug[r][col].clone();
            for j in col..=n {
                let t = &f * &aug[col][j];
                aug[r][j] -= t;
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        from_i64(&[vec![2, 1], vec![1, 1]])
    }

    #[test]
    fn determinant_and_charpoly_of_cat_map() {
        assert_eq!(det(&cat()), BigInt::one());
        let cp = charpoly(&cat());
        assert_eq!(cp, vec![BigInt::from(1), BigInt::from(-3), BigInt::from(1)]);
    }

    #[test]
    fn inverse_is_inverse() {
        let u = from_i64(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(mul(&u, &unimodular_inverse(&u)), identity(2));
        let w = from_i64(&[vec![1, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
        assert!(det(&w).abs().is_one());
        assert_eq!(mul(&unimodular_inverse(&w), &w), identity(3));
    }

    #[test]
    fn smith_diagonal_product_is_determinant() {
        for n in 1..=6 {
            let m = sub(&pow(&cat(), n), &identity(2));
            let s = smith_form(&m);
            let prod: BigInt = s.diagonal.iter().product();
            assert_eq!(prod.abs(), det(&m).abs());
            assert!(s.diagonal[1].is_multiple_of(&s.diagonal[0]));
            assert!(det(&s.right).abs().is_one());
        }
    }

    #[test]
    fn rational_solve_recovers_solution() {
        let m = from_i64(&[vec![3, 1], vec![1, 2]]);
        let x = solve_rational(&m, &[BigInt::from(1), BigInt::from(0)]).unwrap();
        assert_eq!(x[0], BigRational::new(2.into(), 5.into()));
        assert_eq!(x[1], BigRational::new((-1).into(), 5.into()));
    }
}

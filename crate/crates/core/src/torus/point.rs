use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TorusError;

/// Largest denominator (in bits) an exact point may carry. Shadow orbits of
/// long pseudo-orbits have denominators around `|det(A^n - I)|`, so this is
/// generous.
pub const DEFAULT_DENOMINATOR_BITS: u64 = 1 << 14;

/// A point of `T^d` with exact rational coordinates reduced into `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPoint(Vec<BigRational>);

pub fn frac(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(x.floor().to_integer())
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    // reduce first so huge numerators and denominators do not overflow
    let f = frac(x);
    let whole = x.floor().to_integer().to_f64().unwrap_or(f64::NAN);
    let numer = f.numer();
    let denom = f.denom();
    let bits = denom.bits();
    let part = if bits > 1000 {
        let shift = bits - 1000;
        let n = (numer >> shift).to_f64().unwrap_or(0.0);
        let d = (denom >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    } else {
        numer.to_f64().unwrap_or(0.0) / denom.to_f64().unwrap_or(f64::INFINITY)
    };
    whole + part
}

impl ExactPoint {
    pub fn new(coords: Vec<BigRational>) -> Self {
        ExactPoint(coords.iter().map(frac).collect())
    }

    pub fn checked(coords: Vec<BigRational>, max_bits: u64) -> Result<Self, TorusError> {
        let p = Self::new(coords);
        let bits = p.max_denominator_bits();
        if bits > max_bits {
            return Err(TorusError::DenominatorTooLarge { bits, limit: max_bits });
        }
        Ok(p)
    }

    pub fn from_fractions(pairs: &[(i64, i64)]) -> Self {
        Self::new(pairs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    pub fn origin(dim: usize) -> Self {
        ExactPoint(vec![BigRational::zero(); dim])
    }

    /// Exact conversion of a float point (every finite double is dyadic).
    pub fn from_f64(coords: &[f64]) -> Self {
        Self::new(
            coords
                .iter()
                .map(|&c| BigRational::from_f64(c).expect("finite coordinate"))
                .collect(),
        )
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rat_to_f64).collect()
    }

    pub fn max_denominator_bits(&self) -> u64 {
        self.0.iter().map(|c| c.denom().bits()).max().unwrap_or(0)
    }

    pub fn common_denominator(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }
}

impl fmt::Debug for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Renders a rational as `"num/den"` (or `"num"` for integers).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

impl Serialize for ExactPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(format_rational).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let coords = v
            .iter()
            .map(|s| {
                parse_rational(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExactPoint::new(coords))
    }
}

/// A torus point in either exact or floating-point mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "coords", rename_all = "lowercase")]
pub enum TorusPoint {
    Exact(ExactPoint),
    Float(Vec<f64>),
}

impl TorusPoint {
    pub fn float(coords: &[f64]) -> Self {
        TorusPoint::Float(coords.iter().map(|c| c.rem_euclid(1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Exact(p) => p.dim(),
            TorusPoint::Float(v) => v.len(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TorusPoint::Exact(p) => p.to_f64(),
            TorusPoint::Float(v) => v.clone(),
        }
    }

    pub fn to_exact(&self) -> ExactPoint {
        match self {
            TorusPoint::Exact(p) => p.clone(),
            TorusPoint::Float(v) => ExactPoint::from_f64(v),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TorusPoint::Exact(_))
    }
}

/// Signed representative of `x` in `[-1/2, 1/2)`.
pub fn wrap_centered(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Euclidean distance on `T^d = R^d / Z^d`.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_centered(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Exact torus displacement `b - a` reduced into `[-1/2, 1/2)^d`.
pub fn exact_displacement(a: &ExactPoint, b: &ExactPoint) -> Vec<BigRational> {
    let half = rat(1, 2);
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| {
            let d = y - x;
            let r = frac(&(d + &half)) - &half;
            r
        })
        .collect()
}

pub fn exact_distance(a: &ExactPoint, b: &ExactPoint) -> f64 {
    exact_displacement(a, b)
        .iter()
        .map(|d| rat_to_f64(d).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn round_rational(x: &BigRational) -> BigInt {
    let half = rat(1, 2);
    (x + half).floor().to_integer()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_formatting() {
        let p = ExactPoint::from_fractions(&[(7, 5), (-1, 5)]);
        assert_eq!(p, ExactPoint::from_fractions(&[(2, 5), (4, 5)]));
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"["2/5","4/5"]"#);
        let back: ExactPoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn huge_denominators_convert() {
        let big = BigInt::from(3).pow(900u32);
        let x = BigRational::new(&big - 1, big.clone());
        let f = rat_to_f64(&x);
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_centered(0.75) + 0.25).abs() < 1e-15);
        assert!((torus_distance(&[0.95, 0.0], &[0.05, 0.0]) - 0.1).abs() < 1e-12);
        let a = ExactPoint::from_fractions(&[(9, 10), (0, 1)]);
        let b = ExactPoint::from_fractions(&[(1, 10), (0, 1)]);
        assert_eq!(exact_displacement(&a, &b)[0], rat(1, 5));
    }

    #[test]
    fn denominator_limit() {
        let err = ExactPoint::checked(vec![rat(1, 1 << 40)], 20).unwrap_err();
        assert!(matches!(err, TorusError::DenominatorTooLarge { .. }));
    }
}

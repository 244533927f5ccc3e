use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::fiber::{IntervalMap, Smoothness};
use crate::torus::point::{frac, rat_to_f64};
use crate::torus::ExactPoint;

use super::SkewError;

/// One harmonic `a cos(2 pi k.x) + b sin(2 pi k.x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl TrigTerm {
    fn amplitude(&self) -> f64 {
        if self.freq.iter().all(|&k| k == 0) {
            self.cos.abs()
        } else {
            self.cos.hypot(self.sin)
        }
    }

    fn freq_norm(&self) -> f64 {
        self.freq.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()
    }

    fn at_phase(&self, phase: f64) -> f64 {
        let (s, c) = (TAU * phase).sin_cos();
        self.cos * c + self.sin * s
    }
}

/// A real trigonometric polynomial on `T^d`.
///
/// Construction rescales the coefficients so that the sum of amplitudes is
/// at most 1, which bounds `sup |psi|` by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TrigTerm>", into = "Vec<TrigTerm>")]
pub struct TrigPolynomial {
    terms: Vec<TrigTerm>,
    dim: usize,
}

impl TryFrom<Vec<TrigTerm>> for TrigPolynomial {
    type Error = SkewError;

    fn try_from(terms: Vec<TrigTerm>) -> Result<Self, SkewError> {
        TrigPolynomial::new(terms)
    }
}

impl From<TrigPolynomial> for Vec<TrigTerm> {
    fn from(p: TrigPolynomial) -> Self {
        p.terms
    }
}

impl TrigPolynomial {
    pub fn new(mut terms: Vec<TrigTerm>) -> Result<Self, SkewError> {
        let dim = terms.first().map_or(0, |t| t.freq.len());
        if dim == 0 || terms.iter().any(|t| t.freq.len() != dim) {
            return Err(SkewError::InvalidFamily {
                reason: "psi needs terms with frequency vectors of one common nonzero length".into(),
            });
        }
        if terms.iter().any(|t| !t.cos.is_finite() || !t.sin.is_finite()) {
            return Err(SkewError::InvalidFamily { reason: "non-finite psi coefficient".into() });
        }
        let weight: f64 = terms.iter().map(TrigTerm::amplitude).sum();
        if weight > 1.0 {
            for t in &mut terms {
                t.cos /= weight;
                t.sin /= weight;
            }
        }
        Ok(TrigPolynomial { terms, dim })
    }

    /// `cos(2 pi x_1)` on `T^dim`.
    pub fn first_cosine(dim: usize) -> Self {
        let mut freq = vec![0; dim];
        freq[0] = 1;
        TrigPolynomial { terms: vec![TrigTerm { freq, cos: 1.0, sin: 0.0 }], dim }
    }

    pub fn constant(value: f64, dim: usize) -> Result<Self, SkewError> {
        TrigPolynomial::new(vec![TrigTerm { freq: vec![0; dim], cos: value, sin: 0.0 }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.freq.iter().zip(x).map(|(&k, xi)| k as f64 * xi).sum();
                t.at_phase(phase.rem_euclid(1.0))
            })
            .sum()
    }

    /// Evaluation with the phase `k.x mod 1` reduced in exact arithmetic.
    pub fn eval_exact(&self, x: &ExactPoint) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut phase = BigRational::zero();
                for (&k, xi) in t.freq.iter().zip(x.coords()) {
                    phase += BigRational::from_integer(BigInt::from(k)) * xi;
                }
                t.at_phase(rat_to_f64(&frac(&phase)))
            })
            .sum()
    }

    /// Upper bound on `sup |psi|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(TrigTerm::amplitude).sum()
    }

    /// Upper bound on the Lipschitz constant of `psi` for the flat metric.
    pub fn lipschitz_bound(&self) -> f64 {
        TAU * self.terms.iter().map(|t| t.amplitude() * t.freq_norm()).sum::<f64>()
    }
}

/// Parameters of the Kan-type family `phi(x, t) = t + eps t (1 - t) psi(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanParams {
    pub epsilon: f64,
    pub psi: TrigPolynomial,
}

impl KanParams {
    pub fn new(epsilon: f64, psi: TrigPolynomial) -> Result<Self, SkewError> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(SkewError::InvalidFamily {
                reason: format!("epsilon {epsilon} outside [0, 1)"),
            });
        }
        Ok(KanParams { epsilon, psi })
    }

    /// `epsilon = 0.3`, `psi = cos(2 pi x_1)` on `T^2`.
    pub fn standard() -> Self {
        KanParams { epsilon: 0.3, psi: TrigPolynomial::first_cosine(2) }
    }
}

/// Fiber coordinate kept together with its complement, so that points near
/// either boundary keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub t: f64,
    /// `1 - t`.
    pub s: f64,
}

impl FiberPoint {
    pub fn new(t: f64) -> Self {
        FiberPoint { t, s: 1.0 - t }
    }

    pub const BOTTOM: FiberPoint = FiberPoint { t: 0.0, s: 1.0 };
    pub const TOP: FiberPoint = FiberPoint { t: 1.0, s: 0.0 };

    /// Recompute the larger coordinate from the smaller one, which carries
    /// the relative precision.
    pub fn normalized(self) -> Self {
        if self.t <= self.s {
            FiberPoint { t: self.t, s: 1.0 - self.t }
        } else {
            FiberPoint { t: 1.0 - self.s, s: self.s }
        }
    }

    /// Exchange the roles of the two boundaries.
    pub fn flipped(self) -> Self {
        FiberPoint { t: self.s, s: self.t }
    }
}

/// One of the two boundary tori.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `t = 0`.
    Bottom,
    /// `t = 1`.
    Top,
}

impl Boundary {
    pub fn opposite(self) -> Self {
        match self {
            Boundary::Bottom => Boundary::Top,
            Boundary::Top => Boundary::Bottom,
        }
    }

    pub fn point(self) -> FiberPoint {
        match self {
            Boundary::Bottom => FiberPoint::BOTTOM,
            Boundary::Top => FiberPoint::TOP,
        }
    }

    /// Distance from this boundary, with its complement.
    pub fn distance(self, p: FiberPoint) -> FiberPoint {
        match self {
            Boundary::Bottom => p,
            Boundary::Top => p.flipped(),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Boundary::Bottom => 0,
            Boundary::Top => 1,
        }
    }
}

/// Hölder data `(C_phi, theta)` of `x -> ln d_t phi(x, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub constant: f64,
    pub exponent: f64,
}

/// Serializable description of a fiber family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    Kan {
        epsilon: f64,
        psi: TrigPolynomial,
        /// Time of the boundary flow composed after the Kan map.
        #[serde(default)]
        tau: f64,
    },
}

/// The fiber maps `t -> phi(x, t)`: a Kan map followed by the time-`tau`
/// map of the flow of `t' = t (t - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberFamily {
    kan: KanParams,
    tau: f64,
    /// `e^{-tau}`.
    flow_factor: f64,
}

impl FiberFamily {
    pub fn kan(kan: KanParams) -> Self {
        FiberFamily { kan, tau: 0.0, flow_factor: 1.0 }
    }

    pub fn from_descriptor(d: &FamilyDescriptor) -> Result<Self, SkewError> {
        match d {
            FamilyDescriptor::Kan { epsilon, psi, tau } => {
                if !tau.is_finite() {
                    return Err(SkewError::InvalidFamily { reason: "non-finite tau".into() });
                }
                Ok(FiberFamily::kan(KanParams::new(*epsilon, psi.clone())?).with_flow(*tau))
            }
        }
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor::Kan {
            epsilon: self.kan.epsilon,
            psi: self.kan.psi.clone(),
            tau: self.tau,
        }
    }

    /// Replace the flow time.
    pub fn with_flow(mut self, tau: f64) -> Self {
        self.tau = tau;
        self.flow_factor = (-tau).exp();
        self
    }

    pub fn params(&self) -> &KanParams {
        &self.kan
    }

    pub fn epsilon(&self) -> f64 {
        self.kan.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.kan.psi.dim()
    }

    pub fn coupling(&self, x: &[f64]) -> f64 {
        self.kan.epsilon * self.kan.psi.eval(x)
    }

    pub fn coupling_exact(&self, x: &ExactPoint) -> f64 {
        self.kan.epsilon * self.kan.psi.eval_exact(x)
    }

    fn flow(&self, p: FiberPoint, factor: f64) -> FiberPoint {
        if factor == 1.0 {
            return p;
        }
        let den = p.s + p.t * factor;
        FiberPoint { t: p.t * factor / den, s: p.s / den }.normalized()
    }

    /// `phi(x, .)` applied to `p`.
    pub fn step(&self, x: &[f64], p: FiberPoint) -> FiberPoint {
        self.step_with(self.coupling(x), p)
    }

    /// `phi(x, .)` for a precomputed coupling `eps psi(x)`.
    pub fn step_with(&self, c: f64, p: FiberPoint) -> FiberPoint {
        let q = FiberPoint { t: p.t * (1.0 + c * p.s), s: p.s * (1.0 - c * p.t) }.normalized();
        self.flow(q, self.flow_factor)
    }

    pub fn inverse_step(&self, x: &[f64], p: FiberPoint) -> FiberPoint {
        self.inverse_step_with(self.coupling(x), p)
    }

    pub fn inverse_step_with(&self, c: f64, p: FiberPoint) -> FiberPoint {
        let q = self.flow(p, 1.0 / self.flow_factor);
        // t + c t (1 - t) = y, solved in the cancellation-free form
        let root = |c: f64, y: f64| 2.0 * y / ((1.0 + c) + ((1.0 + c).powi(2) - 4.0 * c * y).sqrt());
        FiberPoint { t: root(c, q.t), s: root(-c, q.s) }.normalized()
    }

    /// `d_t phi(x, t)`.
    pub fn derivative(&self, x: &[f64], p: FiberPoint) -> f64 {
        self.derivative_with(self.coupling(x), p)
    }

    pub fn derivative_with(&self, c: f64, p: FiberPoint) -> f64 {
        let kan = 1.0 + c * (p.s - p.t);
        if self.flow_factor == 1.0 {
            return kan;
        }
        let q = FiberPoint { t: p.t * (1.0 + c * p.s), s: p.s * (1.0 - c * p.t) };
        let den = q.s + q.t * self.flow_factor;
        kan * self.flow_factor / (den * den)
    }

    /// `ln d_t phi(x, b)` at a boundary, in closed form.
    pub fn boundary_log_derivative_with(&self, c: f64, b: Boundary) -> f64 {
        match b {
            Boundary::Bottom => c.ln_1p() - self.tau,
            Boundary::Top => (-c).ln_1p() + self.tau,
        }
    }

    pub fn boundary_log_derivative(&self, x: &[f64], b: Boundary) -> f64 {
        self.boundary_log_derivative_with(self.coupling(x), b)
    }

    /// Hölder data of `ln d_t phi(., b)` from the analytic derivative bound:
    /// exponent 1 and constant `eps Lip(psi) / (1 - eps sup|psi|)`, at least 1.
    pub fn holder(&self) -> HolderEstimate {
        let eps = self.kan.epsilon;
        let lip = eps * self.kan.psi.lipschitz_bound() / (1.0 - eps * self.kan.psi.sup_bound());
        HolderEstimate { constant: lip.max(1.0), exponent: 1.0 }
    }

    /// The fiber map over `x` as an interval map, read in the distance from
    /// boundary `from`.
    pub fn section(&self, x: &[f64], from: Boundary) -> Section {
        Section { family: self.clone(), coupling: self.coupling(x), from }
    }
}

/// `t -> phi(x, t)` for a fixed base point.
#[derive(Debug, Clone)]
pub struct Section {
    family: FiberFamily,
    coupling: f64,
    from: Boundary,
}

impl Section {
    fn lift(&self, u: f64) -> FiberPoint {
        self.from.distance(FiberPoint::new(u))
    }
}

impl IntervalMap for Section {
    fn value(&self, u: f64) -> f64 {
        let p = self.family.step_with(self.coupling, self.lift(u));
        self.from.distance(p).t
    }

    fn derivative(&self, u: f64) -> f64 {
        self.family.derivative_with(self.coupling, self.lift(u))
    }

    fn inverse(&self, y: f64) -> f64 {
        let p = self.family.inverse_step_with(self.coupling, self.lift(y));
        self.from.distance(p).t
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(eps: f64, tau: f64) -> FiberFamily {
        FiberFamily::kan(KanParams::new(eps, TrigPolynomial::first_cosine(2)).unwrap()).with_flow(tau)
    }

    #[test]
    fn boundaries_are_fixed_exactly() {
        let f = family(0.3, 0.2);
        for x in [[0.0, 0.0], [0.3, 0.9], [0.71, 0.2]] {
            assert_eq!(f.step(&x, FiberPoint::BOTTOM), FiberPoint::BOTTOM);
            assert_eq!(f.step(&x, FiberPoint::TOP), FiberPoint::TOP);
        }
    }

    #[test]
    fn inverse_and_derivative() {
        let f = family(0.3, 0.05);
        let x = [0.37, 0.11];
        for t in [1e-9, 0.2, 0.5, 0.93, 1.0 - 1e-9] {
            let p = FiberPoint::new(t);
            let back = f.inverse_step(&x, f.step(&x, p));
            assert!((back.t - p.t).abs() < 1e-14 * p.t.max(1e-300) + 1e-16);
            assert!((back.s - p.s).abs() < 1e-14 * p.s.max(1e-300) + 1e-16);
            let h = 1e-6;
            let fd = (f.step(&x, FiberPoint::new(t + h)).t - f.step(&x, FiberPoint::new(t - h)).t)
                / (2.0 * h);
            if t > 1e-3 && t < 1.0 - 1e-3 {
                assert!((fd - f.derivative(&x, p)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn boundary_derivatives_match_closed_form() {
        let f = family(0.3, 0.05);
        let x = [0.0, 0.0];
        let d0 = f.derivative(&x, FiberPoint::BOTTOM).ln();
        assert!((d0 - (1.3f64.ln() - 0.05)).abs() < 1e-14);
        assert!((f.boundary_log_derivative(&x, Boundary::Top) - (0.7f64.ln() + 0.05)).abs() < 1e-14);
    }

    #[test]
    fn coordinates_stay_complementary() {
        let f = family(0.3, 0.0);
        let x = [0.4, 0.8];
        let mut p = FiberPoint::new(1e-3);
        for _ in 0..200 {
            p = f.step(&x, p);
        }
        for _ in 0..200 {
            p = f.inverse_step(&x, p);
        }
        assert!((p.t - 1e-3).abs() < 1e-15);
        assert_eq!(p.s, 1.0 - p.t);
    }

    #[test]
    fn normalization_caps_amplitude() {
        let psi = TrigPolynomial::new(vec![
            TrigTerm { freq: vec![1, 0], cos: 2.0, sin: 0.0 },
            TrigTerm { freq: vec![0, 1], cos: 0.0, sin: 2.0 },
        ])
        .unwrap();
        assert!((psi.sup_bound() - 1.0).abs() < 1e-15);
        assert!((psi.eval(&[0.0, 0.25]) - 1.0).abs() < 1e-12);
        let json = serde_json::to_string(&psi).unwrap();
        assert_eq!(serde_json::from_str::<TrigPolynomial>(&json).unwrap(), psi);
    }

    #[test]
    fn exact_and_float_evaluation_agree() {
        let psi = TrigPolynomial::first_cosine(2);
        let p = ExactPoint::from_fractions(&[(3, 5), (1, 5)]);
        assert!((psi.eval_exact(&p) - psi.eval(&p.to_f64())).abs() < 1e-15);
        assert!((psi.eval_exact(&p) + 0.809_016_994_374_947_4).abs() < 1e-15);
    }

    #[test]
    fn section_reads_from_either_boundary() {
        let f = family(0.3, 0.0);
        let x = [0.0, 0.0];
        let top = f.section(&x, Boundary::Top);
        assert!((top.derivative(0.0) - 0.7).abs() < 1e-15);
        let u = 0.25;
        assert!((top.value(u) - (1.0 - f.step(&x, FiberPoint::new(1.0 - u)).t)).abs() < 1e-15);
        assert!((top.inverse(top.value(u)) - u).abs() < 1e-15);
    }
}

use serde::{Deserialize, Serialize};

use crate::fiber::{rational_independence, select_independent, IndependenceValue};
use crate::skew::{birkhoff_sum, Boundary, HolderEstimate, SkewProduct};
use crate::torus::{
    heteroclinic_point, orbits_up_to, shadow_pseudo_orbit, ExactPoint, HeteroclinicPoint, PeriodicOrbit,
    PseudoOrbit, ShadowConstants, ToralAutomorphism, TorusPoint,
};

use super::pliss::pliss_reindex;
use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AriSetup {
    pub m_max: u32,
    /// Candidates `p_bar` come from all orbits up to this period.
    pub period_cap: u64,
    pub orbit_cap: u64,
    /// Norm bound on lattice translates for heteroclinic points.
    pub translate_bound: f64,
    pub boundary: Boundary,
}

impl Default for AriSetup {
    fn default() -> Self {
        AriSetup { m_max: 4, period_cap: 10, orbit_cap: 1 << 20, translate_bound: 3.0, boundary: Boundary::Bottom }
    }
}

/// Segment lengths of the pseudo-orbits at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoOrbitLengths {
    /// Tail of the sum below `eps_bar / 2` from here on (`p_bar` side).
    pub k0: usize,
    /// Jumps near `p_bar` below `delta_0 eps_bar / 2` from here on.
    pub k1: usize,
    pub l0: usize,
    pub l1: usize,
    /// `max{k0, k1, m pi(p_bar)}`, a multiple of `pi(p_bar)`.
    pub k: usize,
    /// `max{l0, l1, m k}`, a multiple of `pi(p_0)`.
    pub l: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chosen {
    /// The shadow of `P'_m`.
    Prime,
    /// The shadow of `P''_m`, which also winds once around `p_bar`.
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AriStep {
    pub m: u32,
    pub candidate: PeriodicOrbit,
    pub candidate_sum: f64,
    /// `|S(p_bar) - S(p_0)|`, inside `(2^-m, 2^{-m+1})`.
    pub candidate_gap: f64,
    pub eps_bar: f64,
    pub lengths: PseudoOrbitLengths,
    /// Largest jump of `P'_m` and `P''_m`.
    pub jumps: [f64; 2],
    /// Largest distance from a shadow to its pseudo-orbit.
    pub shadow_errors: [f64; 2],
    pub periods: [usize; 2],
    /// Both shadows close up exactly under the base map.
    pub verified: [bool; 2],
    /// `S(p'_m)`, `S(p''_m)`.
    pub sums: [f64; 2],
    /// `|S(p'') - S(p') - S(p_0)|`.
    pub sandwich: f64,
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
    pub sandwich_holds: bool,
    pub chosen: Chosen,
    pub chosen_base: ExactPoint,
    pub chosen_sum: f64,
    /// Certified `(S(p_m), S(p_0)) < 2^{-m+2}`.
    pub independence_p0: IndependenceValue,
    /// `(S(p_m), S(q_0))` with `|k| <= independence_bound`.
    pub independence_q0: IndependenceValue,
    pub independence_bound: u64,
    /// `|lambda^c(p_m) - lambda^c(p_0)|`.
    pub drift: f64,
    /// Pliss rotation of `p_m` for `lambda^c(p_0) / 3` and the measured
    /// contracting center with its lower bound, when the exponent of `p_m`
    /// is already below that target.
    pub pliss: Option<PlissSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlissSummary {
    pub shift: usize,
    pub contracting_center: f64,
    pub center_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AriReport {
    pub setup: AriSetup,
    pub p0: PeriodicOrbit,
    pub q0: PeriodicOrbit,
    pub p0_sum: f64,
    pub q0_sum: f64,
    pub holder: HolderEstimate,
    pub shadow: ShadowConstants,
    /// `C` in `|S(p') - (P + 2K lambda(p_bar) + 2L lambda(p_0))| < C eps_bar^theta`.
    pub constant: f64,
    pub steps: Vec<AriStep>,
    pub independence_decreasing: bool,
    pub drift_decreasing: bool,
}

/// Orbits up to the period cap with their Birkhoff sums, in order of period
/// and representative.
pub fn candidate_pool(
    f: &SkewProduct,
    setup: &AriSetup,
) -> Result<Vec<(PeriodicOrbit, f64)>, ExperimentError> {
    Ok(orbits_up_to(f.base(), setup.period_cap, setup.orbit_cap)?
        .into_iter()
        .map(|o| {
            let s = birkhoff_sum(f, &o, setup.boundary).sum;
            (o, s)
        })
        .collect())
}

/// Resolution of the `(S(p_m), S(q_0))` estimate at level `m`.
fn independence_bound(m: u32) -> u64 {
    1 << (m + 4)
}

fn round_up(n: usize, step: usize) -> usize {
    n.div_ceil(step).max(1) * step
}

/// Smallest multiple of `step` with `bound(n) < target`.
fn first_below(step: usize, target: f64, bound: impl Fn(usize) -> f64) -> usize {
    let mut n = step;
    while bound(n) >= target {
        n += step;
    }
    n
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `A^i z` for `i` in `-back..forward`.
fn segment(a: &ToralAutomorphism, z: &HeteroclinicPoint, back: usize, forward: usize) -> Vec<TorusPoint> {
    let mut out: Vec<TorusPoint> =
        z.backward_orbit(a, back + 1).into_iter().skip(1).rev().map(TorusPoint::Float).collect();
    out.extend(z.forward_orbit(a, forward).into_iter().map(TorusPoint::Float));
    out
}

struct Shadowed {
    orbit: PeriodicOrbit,
    jump: f64,
    error: f64,
    verified: bool,
    sum: f64,
}

fn shadow(f: &SkewProduct, points: Vec<TorusPoint>, b: Boundary) -> Result<Shadowed, ExperimentError> {
    let a = f.base();
    let n = points.len();
    let po = PseudoOrbit::new(points, true);
    let jump = po.delta(a);
    let s = shadow_pseudo_orbit(a, &po)?;
    let start = s.orbit[0].to_exact();
    let closes = a.iterate_exact(&start, n as i64) == start;
    let orbit = PeriodicOrbit::through(a, &start, n).ok_or_else(|| ExperimentError::HypothesisUnmet {
        reason: "shadow of a periodic pseudo-orbit is not periodic".into(),
    })?;
    let verified = closes && orbit.verify(a);
    let sum = birkhoff_sum(f, &orbit, b).sum;
    Ok(Shadowed { orbit, jump, error: s.max_error, verified, sum })
}

/// Build the sequence `p_m` of periodic orbits whose Birkhoff sums become
/// asymptotically independent of `S(q_0)`, following the shadowing
/// construction with effective constants.
///
/// At level `m` a candidate `p_bar` with `2^-m < |S(p_bar) - S(p_0)| <
/// 2^{-m+1}` is taken from `pool` (first in pool order). Heteroclinic points
/// `x_0` from `p_0` to `p_bar` and `y_0` from `p_bar` to `p_0` give the
/// periodic pseudo-orbits
/// `P' = (A^{-K} y_0 .. A^{L-1} y_0, A^{-L} x_0 .. A^{K-1} x_0)` and
/// `P'' = orbit(p_bar) + P'`, which are shadowed exactly. The sandwich
/// `2^{-m-1} < |S(p'') - S(p') - S(p_0)| < 2^{-m+2}` is then checked and one
/// of the two shadows is selected so that `(S(p_m), S(p_0)) < 2^{-m+2}`.
///
/// `eps_bar = 2^{-(m+4)} / (2C)`, where `C` collects the Hölder and
/// shadowing constants.
pub fn ari_sequence_build(
    f: &SkewProduct,
    p0: &PeriodicOrbit,
    q0: &PeriodicOrbit,
    pool: &[(PeriodicOrbit, f64)],
    setup: &AriSetup,
) -> Result<AriReport, ExperimentError> {
    let a = f.base();
    let b = setup.boundary;
    let p0_bs = birkhoff_sum(f, p0, b);
    let q0_bs = birkhoff_sum(f, q0, b);
    if !(p0_bs.sum < 0.0 && q0_bs.sum > 0.0) {
        return Err(ExperimentError::HypothesisUnmet {
            reason: format!("need S(p0) < 0 < S(q0), got {} and {}", p0_bs.sum, q0_bs.sum),
        });
    }
    let holder = f.fiber().holder();
    let theta = holder.exponent;
    let sc = a.splitting().shadow;
    let (mu, kappa) = (sc.mu0, sc.transient);
    let constant =
        1.0 + holder.constant * sc.c0.powf(theta) * 2.0 * sc.delta0.powf(theta) / (1.0 - mu.powf(theta));
    let tail = |v: f64, n: usize| {
        holder.constant * (kappa * v).powf(theta) * mu.powf(n as f64 * theta) / (1.0 - mu.powf(theta))
    };
    let pi0 = p0.period();

    let mut report = AriReport {
        setup: *setup,
        p0: p0.clone(),
        q0: q0.clone(),
        p0_sum: p0_bs.sum,
        q0_sum: q0_bs.sum,
        holder,
        shadow: sc,
        constant,
        steps: Vec::new(),
        independence_decreasing: true,
        drift_decreasing: true,
    };

    for m in 1..=setup.m_max {
        let (lo, hi) = (0.5_f64.powi(m as i32), 0.5_f64.powi(m as i32 - 1));
        let Some((candidate, candidate_sum)) = pool.iter().find(|(o, s)| {
            let gap = (s - p0_bs.sum).abs();
            gap > lo && gap < hi && o != p0
        }) else {
            let achieved = report.steps.len() as u32;
            return Err(ExperimentError::CandidateExhausted { m, achieved, partial: Box::new(report) });
        };
        let pib = candidate.period();
        let eps_bar = 0.5_f64.powi(m as i32 + 4) / (2.0 * constant);
        let x0 = heteroclinic_point(a, p0.base(), candidate.base(), setup.translate_bound, false)?;
        let y0 = heteroclinic_point(a, candidate.base(), p0.base(), setup.translate_bound, false)?;
        let (xs, xu) = (norm(&x0.stable_offset(a)), norm(&x0.unstable_offset(a)));
        let (ys, yu) = (norm(&y0.stable_offset(a)), norm(&y0.unstable_offset(a)));

        let jump_target = 0.5 * sc.delta0 * eps_bar;
        let k0 = first_below(pib, eps_bar / 2.0, |n| tail(yu, n) + tail(xs, n));
        let k1 = first_below(pib, jump_target, |n| kappa * xs.max(yu) * mu.powi(n as i32));
        let l0 = first_below(pi0, eps_bar / 2.0, |n| tail(ys, n) + tail(xu, n));
        let l1 = first_below(pi0, jump_target, |n| kappa * ys.max(xu) * mu.powi(n as i32));
        let k = round_up(k0.max(k1).max(m as usize * pib), pib);
        let l = round_up(l0.max(l1).max(m as usize * k), pi0);
        let lengths = PseudoOrbitLengths { k0, k1, l0, l1, k, l };

        let mut prime = segment(a, &y0, k, l);
        prime.extend(segment(a, &x0, l, k));
        let mut double: Vec<TorusPoint> =
            candidate.points.iter().map(|p| TorusPoint::Float(p.to_f64())).collect();
        double.extend(prime.iter().cloned());
        let sp = shadow(f, prime, b)?;
        let sd = shadow(f, double, b)?;

        let sandwich = (sd.sum - sp.sum - p0_bs.sum).abs();
        let sandwich_lower = 0.5_f64.powi(m as i32 + 1);
        let sandwich_upper = 0.5_f64.powi(m as i32 - 2);
        let eps = sandwich_upper;
        let (picked, independence_p0) = select_independent(sd.sum, sp.sum, p0_bs.sum, eps)?;
        let (chosen, chosen_orbit) =
            if picked == sd.sum { (Chosen::Double, &sd.orbit) } else { (Chosen::Prime, &sp.orbit) };
        let chosen_exponent = picked / chosen_orbit.period() as f64;
        let bound = independence_bound(m);
        let independence_q0 = rational_independence(picked, q0_bs.sum, bound);
        let pliss = pliss_reindex(f, chosen_orbit, b, p0_bs.exponent / 3.0).ok().map(|r| PlissSummary {
            shift: r.shift,
            contracting_center: r.contracting_center,
            center_bound: r.center_bound,
        });

        report.steps.push(AriStep {
            m,
            candidate: candidate.clone(),
            candidate_sum: *candidate_sum,
            candidate_gap: (candidate_sum - p0_bs.sum).abs(),
            eps_bar,
            lengths,
            jumps: [sp.jump, sd.jump],
            shadow_errors: [sp.error, sd.error],
            periods: [sp.orbit.period(), sd.orbit.period()],
            verified: [sp.verified, sd.verified],
            sums: [sp.sum, sd.sum],
            sandwich,
            sandwich_lower,
            sandwich_upper,
            sandwich_holds: sandwich_lower < sandwich && sandwich < sandwich_upper,
            chosen,
            chosen_base: chosen_orbit.base().clone(),
            chosen_sum: picked,
            independence_p0,
            independence_q0,
            independence_bound: bound,
            drift: (chosen_exponent - p0_bs.exponent).abs(),
            pliss,
        });
    }
    let pairs = report.steps.windows(2);
    report.independence_decreasing =
        pairs.clone().all(|w| w[1].independence_q0.value < w[0].independence_q0.value);
    report.drift_decreasing = pairs.clone().all(|w| w[1].drift < w[0].drift);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::ExactPoint;

    fn orbits() -> (SkewProduct, PeriodicOrbit, PeriodicOrbit) {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let p0 = PeriodicOrbit::through(f.base(), &ExactPoint::from_fractions(&[(2, 5), (4, 5)]), 4).unwrap();
        let q0 = PeriodicOrbit { points: vec![ExactPoint::origin(2)] };
        (f, p0, q0)
    }

    #[test]
    fn pool_of_p0_alone_is_exhausted() {
        let (f, p0, q0) = orbits();
        let s = birkhoff_sum(&f, &p0, Boundary::Bottom).sum;
        let err = ari_sequence_build(&f, &p0, &q0, &[(p0.clone(), s)], &AriSetup::default()).unwrap_err();
        match err {
            ExperimentError::CandidateExhausted { m, achieved, .. } => assert_eq!((m, achieved), (1, 0)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn first_two_levels() {
        let (f, p0, q0) = orbits();
        let setup = AriSetup { m_max: 2, period_cap: 8, ..Default::default() };
        let pool = candidate_pool(&f, &setup).unwrap();
        let r = ari_sequence_build(&f, &p0, &q0, &pool, &setup).unwrap();
        for s in &r.steps {
            assert!(s.verified[0] && s.verified[1]);
            assert!(s.sandwich_holds, "{s:?}");
            assert!(s.independence_p0.value < s.sandwich_upper);
            assert_eq!(s.lengths.k % s.candidate.period(), 0);
            assert_eq!(s.lengths.l % 2, 0);
        }
    }

    #[test]
    fn wrong_signs_are_rejected() {
        let (f, p0, q0) = orbits();
        assert!(matches!(
            ari_sequence_build(&f, &q0, &p0, &[], &AriSetup::default()),
            Err(ExperimentError::HypothesisUnmet { .. })
        ));
    }
}

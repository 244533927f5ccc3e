use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fiber::{ns_analyze, ClosedInterval, Composed, Flipped, Inverse, MapRef};
use crate::torus::{heteroclinic_point, orbits_up_to, HeteroclinicPoint, PeriodicOrbit};

use super::exponents::{birkhoff_sum, BirkhoffSum};
use super::family::{Boundary, FiberPoint};
use super::system::SkewProduct;
use super::SkewError;

/// Search limits and classifier thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterconnectionSearch {
    pub period_cap: u64,
    /// Cap on `|det(A^n - I)|` during orbit enumeration.
    pub orbit_cap: u64,
    /// Norm bound on lattice translates for heteroclinic points.
    pub translate_bound: f64,
    /// Forward steps allowed before a fiber point counts as not attracted.
    pub max_forward_steps: usize,
    /// A fiber point is attracted once it enters `[0, enter]` ...
    pub enter: f64,
    /// ... and then stays below `stay` for `hold` more steps.
    pub stay: f64,
    pub hold: usize,
    /// Target accuracy of the truncated unstable trace.
    pub tail_tolerance: f64,
    /// Shortest overlap accepted as a witness.
    pub min_overlap: f64,
}

impl Default for InterconnectionSearch {
    fn default() -> Self {
        InterconnectionSearch {
            period_cap: 2,
            orbit_cap: 1 << 16,
            translate_bound: 3.0,
            max_forward_steps: 20_000,
            enter: 1e-4,
            stay: 1e-3,
            hold: 100,
            tail_tolerance: 1e-12,
            min_overlap: 1e-6,
        }
    }
}

/// A boundary periodic orbit with its central Birkhoff data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOrbit {
    pub orbit: PeriodicOrbit,
    pub birkhoff: BirkhoffSum,
}

/// Fiber data over one base heteroclinic point `z` from the expanding
/// orbit to the contracting one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCrossing {
    pub heteroclinic: HeteroclinicPoint,
    pub base_point: Vec<f64>,
    /// Boundary at which the contracting orbit attracts.
    pub sink_boundary: Boundary,
    /// Fiber interval of the unstable set of the expanding orbit over `z`.
    pub unstable_trace: ClosedInterval,
    /// Fiber interval of the stable set of the contracting orbit over `z`.
    pub stable_trace: ClosedInterval,
    pub overlap: ClosedInterval,
    /// Number of backward base steps used for the unstable trace.
    pub truncation: usize,
    /// `(sup d_t phi / m(A|L^u))^N |v_u|`.
    pub tail_bound: f64,
    /// Change of the unstable trace endpoint between `N` and `N + period`.
    pub cauchy_difference: f64,
    /// Endpoint of the local unstable interval at the expanding orbit.
    pub local_unstable_edge: f64,
}

/// Four boundary orbits with the sign pattern of boundary interconnection
/// and the two fiber crossings that connect them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterconnectionWitness {
    /// Contracting on the bottom.
    pub p0: BoundaryOrbit,
    /// Expanding on the top.
    pub p1: BoundaryOrbit,
    /// Expanding on the bottom.
    pub q0: BoundaryOrbit,
    /// Contracting on the top.
    pub q1: BoundaryOrbit,
    /// Stable set of `p0` meets the unstable set of `p1`.
    pub p_crossing: FiberCrossing,
    /// Stable set of `q1` meets the unstable set of `q0`.
    pub q_crossing: FiberCrossing,
}

/// Search boundary periodic orbits up to `period_cap` for an
/// interconnection witness.
///
/// Candidates are tried in order of period and then orbit representative;
/// the first pair whose fiber traces overlap by more than `min_overlap`
/// wins. Failure is reported as [`SkewError::Absent`], which only means no
/// witness exists within the caps.
pub fn boundary_interconnection(
    f: &SkewProduct,
    search: &InterconnectionSearch,
) -> Result<InterconnectionWitness, SkewError> {
    let orbits = orbits_up_to(f.base(), search.period_cap, search.orbit_cap)?;
    let tagged: Vec<(BoundaryOrbit, BoundaryOrbit)> = orbits
        .iter()
        .map(|o| {
            let pick = |b| BoundaryOrbit { orbit: o.clone(), birkhoff: birkhoff_sum(f, o, b) };
            (pick(Boundary::Bottom), pick(Boundary::Top))
        })
        .collect();
    let bottom_sinks: Vec<&BoundaryOrbit> =
        tagged.iter().map(|t| &t.0).filter(|o| o.birkhoff.sum < 0.0).collect();
    let bottom_sources: Vec<&BoundaryOrbit> =
        tagged.iter().map(|t| &t.0).filter(|o| o.birkhoff.sum > 0.0).collect();
    let top_sinks: Vec<&BoundaryOrbit> =
        tagged.iter().map(|t| &t.1).filter(|o| o.birkhoff.sum < 0.0).collect();
    let top_sources: Vec<&BoundaryOrbit> =
        tagged.iter().map(|t| &t.1).filter(|o| o.birkhoff.sum > 0.0).collect();

    let absent = |reason: String| SkewError::Absent { reason };
    let counts = format!(
        "{} orbits up to period {}: {} contracting / {} expanding on the bottom, {} / {} on top",
        orbits.len(),
        search.period_cap,
        bottom_sinks.len(),
        bottom_sources.len(),
        top_sinks.len(),
        top_sources.len()
    );
    if bottom_sinks.is_empty() || bottom_sources.is_empty() || top_sinks.is_empty() || top_sources.is_empty()
    {
        return Err(absent(format!("sign pattern missing; {counts}")));
    }

    let mut best_overlap = 0.0_f64;
    let mut first_pair = |sinks: &[&BoundaryOrbit], sources: &[&BoundaryOrbit], sink_b: Boundary| {
        for sink in sinks {
            for source in sources {
                match fiber_crossing(f, &sink.orbit, &source.orbit, sink_b, search) {
                    Ok(c) if c.overlap.length() > search.min_overlap => {
                        return Some(((*sink).clone(), (*source).clone(), c));
                    }
                    Ok(c) => best_overlap = best_overlap.max(c.overlap.length()),
                    Err(_) => {}
                }
            }
        }
        None
    };
    let Some((p0, p1, p_crossing)) = first_pair(&bottom_sinks, &top_sources, Boundary::Bottom) else {
        return Err(absent(format!(
            "no p0/p1 crossing with overlap > {:e} (best {best_overlap:e}); {counts}",
            search.min_overlap
        )));
    };
    let Some((q1, q0, q_crossing)) = first_pair(&top_sinks, &bottom_sources, Boundary::Top) else {
        return Err(absent(format!(
            "no q0/q1 crossing with overlap > {:e} (best {best_overlap:e}); {counts}",
            search.min_overlap
        )));
    };
    Ok(InterconnectionWitness { p0, p1, q0, q1, p_crossing, q_crossing })
}

/// Fiber traces over a heteroclinic point from `source` (expanding at the
/// boundary opposite to `sink_b`) to `sink` (contracting at `sink_b`).
///
/// All fiber work is done in the distance `u` from `sink_b`, so the sink
/// boundary is `u = 0` and the source boundary is `u = 1`.
pub fn fiber_crossing(
    f: &SkewProduct,
    sink: &PeriodicOrbit,
    source: &PeriodicOrbit,
    sink_b: Boundary,
    search: &InterconnectionSearch,
) -> Result<FiberCrossing, SkewError> {
    let a = f.base();
    let fam = f.fiber();
    let z = heteroclinic_point(a, source.base(), sink.base(), search.translate_bound, true)?;

    // local unstable interval of the source at the source boundary:
    // the basin of u = 1 for the inverse return map
    let ret: Vec<MapRef> = source
        .float_points()
        .iter()
        .map(|x| Arc::new(fam.section(x, sink_b)) as MapRef)
        .collect();
    let inv_return: MapRef = Arc::new(Flipped(Arc::new(Inverse(Arc::new(Composed(ret))))));
    let ns = ns_analyze(inv_return).map_err(|e| SkewError::Absent {
        reason: format!("source return map is not expanding at its boundary: {e}"),
    })?;
    let edge = 1.0 - ns.smallest_fixed;

    // truncation from the domination margin
    let period = source.period();
    let ratio = f.margins().max_derivative / a.splitting().expansion();
    let start = z.unstable_offset(a).iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let raw = ((search.tail_tolerance / start).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let truncation = raw.div_ceil(period) * period;
    let tail_bound = ratio.powi(truncation as i32) * start;

    let back = z.backward_orbit(a, truncation + period + 1);
    let push = |n: usize| {
        // start over A^{-n} z, which sits next to the source point
        let mut p = FiberPoint { t: edge, s: ns.smallest_fixed };
        for k in (1..=n).rev() {
            p = sink_b.distance(fam.step(&back[k], sink_b.distance(p)));
        }
        p
    };
    let lower = push(truncation);
    let lower_next = push(truncation + period);
    let unstable_trace = ClosedInterval { lo: lower.t, hi: 1.0 };

    // stable set of the sink over z: [0, v) in u
    let fwd = z.forward_orbit(a, search.max_forward_steps);
    let attracted = |u: FiberPoint| {
        let mut p = u;
        let mut held: Option<usize> = None;
        for x in &fwd {
            p = sink_b.distance(fam.step(x, sink_b.distance(p)));
            match held {
                None if p.t <= search.enter => held = Some(0),
                Some(_) if p.t >= search.stay => return false,
                Some(h) if h + 1 >= search.hold => return true,
                Some(h) => held = Some(h + 1),
                None => {}
            }
        }
        false
    };
    let (mut lo, mut hi) = (FiberPoint::BOTTOM, FiberPoint::TOP);
    for _ in 0..64 {
        let mid = FiberPoint { t: 0.5 * (lo.t + hi.t), s: 0.5 * (lo.s + hi.s) };
        if mid.t <= lo.t || mid.t >= hi.t {
            break;
        }
        if attracted(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let stable_trace = ClosedInterval { lo: 0.0, hi: lo.t };
    let overlap_u = ClosedInterval { lo: lower.t.min(lo.t), hi: lo.t };
    // report everything in t
    let to_t = |iv: ClosedInterval| match sink_b {
        Boundary::Bottom => iv,
        Boundary::Top => ClosedInterval { lo: 1.0 - iv.hi, hi: 1.0 - iv.lo },
    };
    Ok(FiberCrossing {
        base_point: z.point(),
        heteroclinic: z,
        sink_boundary: sink_b,
        unstable_trace: to_t(unstable_trace),
        stable_trace: to_t(stable_trace),
        overlap: to_t(overlap_u),
        truncation,
        tail_bound,
        cauchy_difference: (lower.t - lower_next.t).abs(),
        local_unstable_edge: match sink_b {
            Boundary::Bottom => edge,
            Boundary::Top => 1.0 - edge,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::{FiberFamily, KanParams, TrigPolynomial};
    use crate::torus::{ExactPoint, ToralAutomorphism};

    #[test]
    fn default_kan_has_witness_with_predicted_signs() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let w = boundary_interconnection(&f, &InterconnectionSearch::default()).unwrap();
        let origin = ExactPoint::origin(2);
        let two = ExactPoint::from_fractions(&[(2, 5), (4, 5)]);
        assert_eq!(w.q0.orbit.base(), &origin);
        assert_eq!(w.q1.orbit.base(), &origin);
        assert_eq!(w.p0.orbit.base(), &two);
        assert_eq!(w.p1.orbit.base(), &two);
        assert!(w.p0.birkhoff.sum < 0.0 && w.p1.birkhoff.sum > 0.0);
        assert!(w.q1.birkhoff.sum < 0.0 && w.q0.birkhoff.sum > 0.0);
        for c in [&w.p_crossing, &w.q_crossing] {
            assert!(c.overlap.length() > 1e-4, "{c:?}");
            assert!(c.cauchy_difference < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn product_system_is_absent() {
        let f = SkewProduct::kan_cat(0.0).unwrap();
        assert!(matches!(
            boundary_interconnection(&f, &InterconnectionSearch::default()),
            Err(SkewError::Absent { .. })
        ));
    }

    #[test]
    fn constant_coupling_is_absent() {
        let psi = TrigPolynomial::constant(1.0, 2).unwrap();
        let fam = FiberFamily::kan(KanParams::new(0.3, psi).unwrap());
        let f = SkewProduct::new(ToralAutomorphism::cat_map(), fam).unwrap();
        assert!(matches!(
            boundary_interconnection(&f, &InterconnectionSearch::default()),
            Err(SkewError::Absent { .. })
        ));
    }
}

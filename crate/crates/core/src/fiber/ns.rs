use std::sync::Arc;

use super::map::{estimate_holder, MapRef, Rescaled, Smoothness};
use super::{ClosedInterval, FiberError};

const GRID: usize = 1 << 10;
const BISECTION_TOL: f64 = 1e-12;

/// A boundary return map normalized to an NS-map: `0` is a sink with
/// multiplier `alpha`, and `s_p` is the smallest positive fixed point.
#[derive(Debug, Clone)]
pub struct NsModel {
    pub alpha: f64,
    pub smallest_fixed: f64,
    /// `[0, s_p]`; its interior is the basin of the sink.
    pub contracting_interval: ClosedInterval,
    /// `t -> f(s_p t) / s_p`, fixing exactly `0` and `1`.
    pub rescaled: MapRef,
    pub holder: Smoothness,
}

/// Locate the smallest positive fixed point of `f` and build the rescaled
/// NS-map.
///
/// If `f` has no fixed point in `(0, 1)`, `s_p = 1`; for maps that are not
/// boundary preserving this pins the contracting interval at `1`.
pub fn ns_analyze(f: MapRef) -> Result<NsModel, FiberError> {
    let alpha = f.derivative(0.0);
    if !alpha.is_finite() {
        return Err(FiberError::RootFindFail { reason: "non-finite derivative at 0".into() });
    }
    if alpha >= 1.0 {
        return Err(FiberError::NotContracting { alpha });
    }
    if f.boundary_preserving() && (f.value(1.0) - 1.0).abs() > 1e-12 {
        return Err(FiberError::RootFindFail {
            reason: format!("boundary-preserving map has f(1) = {}", f.value(1.0)),
        });
    }

    let residual = |t: f64| f.value(t) - t;
    let mut smallest = 1.0;
    let mut prev = 0.0;
    for i in 1..GRID {
        let t = i as f64 / GRID as f64;
        let r = residual(t);
        if !r.is_finite() {
            return Err(FiberError::RootFindFail { reason: format!("residual at {t} is {r}") });
        }
        if r >= 0.0 {
            smallest = if r == 0.0 { t } else { bisect(&residual, prev, t) };
            break;
        }
        prev = t;
    }

    let rescaled: MapRef = if smallest == 1.0 {
        f.clone()
    } else {
        Arc::new(Rescaled { inner: f.clone(), scale: smallest })
    };
    let holder = estimate_holder(f.as_ref(), 0.0, smallest, 129);
    Ok(NsModel {
        alpha,
        smallest_fixed: smallest,
        contracting_interval: ClosedInterval { lo: 0.0, hi: smallest },
        rescaled,
        holder,
    })
}

/// Bisection on a bracket with `r(lo) < 0 <= r(hi)`.
fn bisect(r: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if r(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

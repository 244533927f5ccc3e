//! The skew product `F(x, t) = (A x, phi(x, t))` on `T^d x [0, 1]`.
//!
//! Both boundary tori are invariant. The fiber direction is the center, and
//! the central exponents at boundary periodic orbits decide which boundary
//! attracts nearby interior points.

mod exponents;
mod family;
mod holonomy;
mod interconnect;
mod system;
mod twist;

use thiserror::Error;

use crate::fiber::FiberError;
use crate::torus::TorusError;

pub use exponents::{
    birkhoff_sum, compensated_sum, mostly_contracting_check, orbit_exponents,
    periodic_bound_check, sampled_birkhoff_averages, BirkhoffSum, OrbitExponents, PeriodicBoundCheck,
    QuadratureResult, SampledAverages, Sign,
};
pub use family::{
    Boundary, FamilyDescriptor, FiberFamily, FiberPoint, HolderEstimate, KanParams, Section,
    TrigPolynomial, TrigTerm,
};
pub use holonomy::{
    holonomy_along, stable_holonomy_fiber, unstable_holonomy_fiber, HolonomyMap, HolonomyOptions,
    HolonomyReport, Leaf,
};
pub use interconnect::{
    boundary_interconnection, fiber_crossing, BoundaryOrbit, FiberCrossing,
    InterconnectionSearch, InterconnectionWitness,
};
pub use system::{
    check_domination, perturb_flow, DominationMargins, ExponentShift, PerturbationReport,
    SkewProduct, DOMINATION_GRID,
};
pub use twist::{central_twist_decay, twist_rate, TwistReport, TwistSetup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkewError {
    #[error("invalid fiber family: {reason}")]
    InvalidFamily { reason: String },
    #[error("domination fails at x = {point:?}, t = {t}: derivative {derivative} against bound {bound}")]
    DominationViolated { point: Vec<f64>, t: f64, derivative: f64, bound: f64 },
    #[error("quadrature value {value:e} is within its error estimate {error:e}")]
    InconclusiveSign { value: f64, error: f64 },
    #[error("no interconnection witness within the search caps: {reason}")]
    Absent { reason: String },
    #[error("points are not on a common leaf (off-leaf component {off_leaf:e})")]
    NotSameLeaf { off_leaf: f64 },
    #[error("holonomy truncation {truncation} changes by {difference:e} over 10 more steps")]
    NoConvergence { truncation: usize, difference: f64 },
    #[error("central exponent {exponent} is positive")]
    NotContracting { exponent: f64 },
    #[error("degenerate twist geometry: {reason}")]
    DegenerateGeometry { reason: String, partial: Box<TwistReport> },
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

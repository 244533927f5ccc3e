use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::skew::{orbit_exponents, DominationMargins, OrbitExponents};
use crate::torus::orbits_up_to;

use super::run::{quadrature, QuadratureEntry};
use super::{LabError, RunConfig};

/// Periods listed by [`describe`].
pub const DESCRIBE_PERIOD_CAP: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub matrix: Vec<Vec<i64>>,
    /// `ln` of the weakest unstable eigenvalue modulus.
    pub lambda_u: f64,
    /// `ln` of the strongest stable eigenvalue modulus.
    pub lambda_s: f64,
    pub margins: DominationMargins,
    pub quadrature: Vec<QuadratureEntry>,
    pub orbits: Vec<OrbitExponents>,
}

/// Rates, domination margins, boundary integrals and the central
/// exponents of all orbits of period at most [`DESCRIBE_PERIOD_CAP`].
pub fn describe(config: &RunConfig) -> Result<SystemSummary, LabError> {
    let f = config.validate()?;
    let s = f.base().splitting();
    let orbits = orbits_up_to(f.base(), DESCRIBE_PERIOD_CAP, config.caps.orbit_cap).map_err(|e| {
        LabError::ConfigInvalid { path: "caps.orbit_cap".into(), reason: e.to_string(), cause: Some(e.into()) }
    })?;
    Ok(SystemSummary {
        matrix: config.system.matrix.clone(),
        lambda_u: s.rate_u,
        lambda_s: s.rate_s,
        margins: *f.margins(),
        quadrature: quadrature(&f),
        orbits: orbit_exponents(&f, &orbits),
    })
}

impl fmt::Display for SystemSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.matrix.iter().map(|r| format!("{r:?}")).collect();
        writeln!(f, "base matrix      {}", rows.join(" "))?;
        writeln!(f, "lambda_u         {:+.6}", self.lambda_u)?;
        writeln!(f, "lambda_s         {:+.6}", self.lambda_s)?;
        let m = &self.margins;
        writeln!(f, "d_t phi range    [{:.6}, {:.6}]", m.min_derivative, m.max_derivative)?;
        writeln!(f, "stable margin    {:+.6}", m.stable)?;
        writeln!(f, "unstable margin  {:+.6}", m.unstable)?;
        writeln!(f, "center bunched   {}", m.center_bunched)?;
        for q in &self.quadrature {
            let value = match q.value {
                Some(v) => format!("{v:+.6e} (+- {:.1e})", q.error_estimate.unwrap_or(0.0)),
                None => q.note.clone().unwrap_or_default(),
            };
            writeln!(f, "integral {:<7} {value}", format!("{:?}", q.boundary).to_lowercase())?;
        }
        writeln!(f)?;
        writeln!(f, "{:>6}  {:<24} {:>12} {:>12}", "period", "orbit point", "lambda_c(0)", "lambda_c(1)")?;
        for o in &self.orbits {
            let mut point = String::new();
            for (i, c) in o.orbit.base().coords().iter().enumerate() {
                let sep = if i == 0 { "(" } else { ", " };
                write!(point, "{sep}{}", crate::torus::point::format_rational(c))?;
            }
            point.push(')');
            writeln!(
                f,
                "{:>6}  {:<24} {:>+12.6} {:>+12.6}",
                o.orbit.period(),
                point,
                o.bottom.exponent,
                o.top.exponent
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::{FamilyDescriptor, TrigPolynomial};

    #[test]
    fn default_summary_lists_short_orbits() {
        let s = describe(&RunConfig::bundled()).unwrap();
        assert_eq!(s.orbits.len(), 3);
        assert!((s.lambda_u - 2.618_033_988_749_895_f64.ln()).abs() < 1e-12);
        let origin = &s.orbits[0];
        assert!((origin.bottom.exponent - 1.3f64.ln()).abs() < 1e-12);
        assert!((origin.top.exponent - 0.7f64.ln()).abs() < 1e-12);
        let text = s.to_string();
        assert!(text.contains("lambda_u"));
        assert!(text.contains("(2/5, 4/5)") || text.contains("(3/5, 1/5)"));
    }

    #[test]
    fn product_has_zero_exponents() {
        let mut c = RunConfig::bundled();
        c.system.family = FamilyDescriptor::Kan { epsilon: 0.0, psi: TrigPolynomial::first_cosine(2), tau: 0.0 };
        let s = describe(&c).unwrap();
        for o in &s.orbits {
            assert_eq!(o.bottom.exponent, 0.0);
            assert_eq!(o.top.exponent, 0.0);
        }
    }
}

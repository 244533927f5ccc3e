use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiments::{ExperimentError, GridSpec};
use crate::skew::{FamilyDescriptor, FiberFamily, SkewError, SkewProduct, TrigPolynomial};
use crate::torus::ToralAutomorphism;

use super::LabError;

/// The configuration shipped with the crate: cat map, Kan coupling at
/// `epsilon = 0.3`, and the five fast experiments.
pub const BUNDLED_DEFAULT: &str = include_str!("../../configs/kan_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Integer rows of the base automorphism.
    pub matrix: Vec<Vec<i64>>,
    pub family: FamilyDescriptor,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            matrix: vec![vec![2, 1], vec![1, 1]],
            family: FamilyDescriptor::Kan { epsilon: 0.3, psi: TrigPolynomial::first_cosine(2), tau: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Exponents,
    Interconnect,
    Transitivity,
    Basins,
    Density,
    Ari,
    Perturb,
    Counterexample,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Exponents,
        ExperimentKind::Interconnect,
        ExperimentKind::Transitivity,
        ExperimentKind::Basins,
        ExperimentKind::Density,
        ExperimentKind::Ari,
        ExperimentKind::Perturb,
        ExperimentKind::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exponents => "exponents",
            ExperimentKind::Interconnect => "interconnect",
            ExperimentKind::Transitivity => "transitivity",
            ExperimentKind::Basins => "basins",
            ExperimentKind::Density => "density",
            ExperimentKind::Ari => "ari",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Counterexample => "counterexample",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Basin-scan grid; the seed comes from [`RunConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub base_cells: usize,
    pub fiber_cells: usize,
    pub iterations: u64,
    pub samples_per_cell: usize,
    pub threshold: f64,
    pub trailing_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        GridConfig {
            base_cells: g.base_cells,
            fiber_cells: g.fiber_cells,
            iterations: g.iterations,
            samples_per_cell: g.samples_per_cell,
            threshold: g.threshold,
            trailing_fraction: g.trailing_fraction,
        }
    }
}

impl GridConfig {
    pub fn spec(&self, seed: u64) -> GridSpec {
        GridSpec {
            base_cells: self.base_cells,
            fiber_cells: self.fiber_cells,
            iterations: self.iterations,
            samples_per_cell: self.samples_per_cell,
            seed,
            threshold: self.threshold,
            trailing_fraction: self.trailing_fraction,
        }
    }
}

/// Enumeration caps and per-experiment budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest period in the density scan and the ARI candidate pool.
    pub period_cap: u64,
    /// Cap on `|det(A^n - I)|` for any enumeration.
    pub orbit_cap: u64,
    pub exponent_period_cap: u64,
    pub interconnect_period_cap: u64,
    pub transitivity_iterations: u64,
    pub transitivity_base_cells: usize,
    pub transitivity_fiber_cells: usize,
    pub density_window: f64,
    pub density_epsilon: f64,
    pub histogram_bins: usize,
    pub ari_levels: u32,
    pub perturb_tau: f64,
    /// Largest period of the orbits whose exponent shift is reported.
    pub perturb_period_cap: u64,
    /// Repeat the basin scan with twice the iterations and compare.
    pub basin_budget_doubling: bool,
    /// Multiplier `Phi'(0)` of the Möbius fiber map in the counterexample.
    pub counterexample_alpha: f64,
    pub counterexample_range: i64,
    pub counterexample_orbits: usize,
    pub counterexample_iterations: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            period_cap: 10,
            orbit_cap: 1 << 20,
            exponent_period_cap: 4,
            interconnect_period_cap: 2,
            transitivity_iterations: 10_000_000,
            transitivity_base_cells: 16,
            transitivity_fiber_cells: 8,
            density_window: 1.0,
            density_epsilon: 0.1,
            histogram_bins: 40,
            ari_levels: 4,
            perturb_tau: 0.5,
            perturb_period_cap: 3,
            basin_budget_doubling: false,
            counterexample_alpha: 0.5,
            counterexample_range: 50,
            counterexample_orbits: 32,
            counterexample_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    /// Run in this order.
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemSpec::default(),
            experiments: Vec::new(),
            grid: GridConfig::default(),
            caps: Caps::default(),
            seed: 0,
            out: None,
        }
    }
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> LabError {
    LabError::ConfigInvalid { path: path.into(), reason: reason.into(), cause: None }
}

impl RunConfig {
    /// Parse JSON, reporting the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner().to_string())
        })
    }

    pub fn bundled() -> Self {
        RunConfig::from_json(BUNDLED_DEFAULT).expect("bundled config parses")
    }

    pub fn to_json(&self) -> Result<String, LabError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical JSON with the output directory removed.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { out: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Check every field and build the skew product.
    pub fn validate(&self) -> Result<SkewProduct, LabError> {
        let base = ToralAutomorphism::new(&self.system.matrix).map_err(|e| LabError::ConfigInvalid {
            path: "system.matrix".into(),
            reason: e.to_string(),
            cause: Some(SkewError::Torus(e)),
        })?;
        let skew_invalid = |path: &str, e: SkewError| LabError::ConfigInvalid {
            path: path.into(),
            reason: e.to_string(),
            cause: Some(e),
        };
        let fiber =
            FiberFamily::from_descriptor(&self.system.family).map_err(|e| skew_invalid("system.family", e))?;
        let f = SkewProduct::new(base, fiber).map_err(|e| skew_invalid("system.family", e))?;

        self.grid.spec(self.seed).validate().map_err(|e| match e {
            ExperimentError::InvalidGrid { field, reason } => invalid(format!("grid.{field}"), reason),
            e => invalid("grid", e.to_string()),
        })?;
        let c = &self.caps;
        let positive: [(&str, bool); 13] = [
            ("period_cap", c.period_cap > 0),
            ("orbit_cap", c.orbit_cap > 0),
            ("exponent_period_cap", c.exponent_period_cap > 0),
            ("interconnect_period_cap", c.interconnect_period_cap > 0),
            ("transitivity_iterations", c.transitivity_iterations > 0),
            ("transitivity_base_cells", c.transitivity_base_cells > 0),
            ("transitivity_fiber_cells", c.transitivity_fiber_cells > 0),
            ("density_window", c.density_window > 0.0),
            ("density_epsilon", c.density_epsilon > 0.0),
            ("histogram_bins", c.histogram_bins > 0),
            ("ari_levels", c.ari_levels > 0),
            ("perturb_period_cap", c.perturb_period_cap > 0),
            ("counterexample_iterations", c.counterexample_iterations > 0),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(invalid(format!("caps.{name}"), "must be positive"));
        }
        if !(c.perturb_tau >= 0.0 && c.perturb_tau.is_finite()) {
            return Err(invalid("caps.perturb_tau", "must be finite and non-negative"));
        }
        if !(c.counterexample_alpha > 0.0 && c.counterexample_alpha < 1.0) {
            return Err(invalid("caps.counterexample_alpha", "must lie in (0, 1)"));
        }
        if c.counterexample_orbits == 0 {
            return Err(invalid("caps.counterexample_orbits", "must be positive"));
        }
        if c.counterexample_range < 0 {
            return Err(invalid("caps.counterexample_range", "must be non-negative"));
        }
        for (i, k) in self.experiments.iter().enumerate() {
            if self.experiments[..i].contains(k) {
                return Err(invalid(format!("experiments[{i}]"), format!("`{k}` is listed twice")));
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_validates() {
        let c = RunConfig::bundled();
        assert_eq!(c.experiments.len(), 5);
        c.validate().unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn strong_coupling_is_a_domination_failure() {
        let mut c = RunConfig::bundled();
        c.system.family = FamilyDescriptor::Kan { epsilon: 0.7, psi: TrigPolynomial::first_cosine(2), tau: 0.0 };
        match c.validate() {
            Err(LabError::ConfigInvalid { path, cause: Some(SkewError::DominationViolated { .. }), .. }) => {
                assert_eq!(path, "system.family")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_the_field_path() {
        let text = r#"{"system": {"matrix": [[2, 1], [1, 1]], "family": {"name": "kan", "epsilon": 0.3,
            "psi": [{"freq": [1, 0], "cos": 1.0}]}}, "caps": {"period_cap": "ten"}}"#;
        match RunConfig::from_json(text) {
            Err(LabError::ConfigInvalid { path, .. }) => assert_eq!(path, "caps.period_cap"),
            other => panic!("{other:?}"),
        }
        let mut c = RunConfig::bundled();
        c.caps.histogram_bins = 0;
        assert!(matches!(c.validate(), Err(LabError::ConfigInvalid { path, .. }) if path == "caps.histogram_bins"));
        c = RunConfig::bundled();
        c.system.matrix = vec![vec![1, 1], vec![0, 1]];
        assert!(matches!(c.validate(), Err(LabError::ConfigInvalid { path, .. }) if path == "system.matrix"));
    }

    #[test]
    fn output_directory_does_not_change_the_hash() {
        let a = RunConfig::bundled();
        let b = RunConfig { out: Some("/tmp/elsewhere".into()), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::experiments::{
    ari_sequence_build, basin_budget_stability, birkhoff_density_scan, candidate_pool, default_intervals,
    horseshoe_counterexample_demo, intermingled_basins_scan, transitivity_probe, AriReport, AriSetup,
    BasinReport, BudgetStability, CounterexampleReport, CounterexampleSetup, CoverageReport, DensityReport,
    ExperimentError, GridSpec,
};
use crate::fiber::Mobius;
use crate::skew::{
    boundary_interconnection, mostly_contracting_check, orbit_exponents, perturb_flow, Boundary,
    DominationMargins, InterconnectionSearch, InterconnectionWitness, OrbitExponents, PerturbationReport,
    SkewProduct,
};
use crate::torus::orbits_up_to;

use super::export::{self, Written};
use super::{ExperimentKind, LabError, RunConfig};

/// Quadrature resolution per axis for the boundary integrals.
const QUADRATURE_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEntry {
    pub boundary: Boundary,
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
    /// Why the value is missing.
    pub note: Option<String>,
}

pub(crate) fn quadrature(f: &SkewProduct) -> Vec<QuadratureEntry> {
    [Boundary::Bottom, Boundary::Top]
        .into_iter()
        .map(|b| match mostly_contracting_check(f, b, QUADRATURE_RESOLUTION) {
            Ok(q) => QuadratureEntry {
                boundary: b,
                value: Some(q.value),
                error_estimate: Some(q.error_estimate),
                note: None,
            },
            Err(e) => QuadratureEntry { boundary: b, value: None, error_estimate: None, note: Some(e.to_string()) },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentsReport {
    pub period_cap: u64,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub margins: DominationMargins,
    pub quadrature: Vec<QuadratureEntry>,
    pub orbits: Vec<OrbitExponents>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinsOutput {
    pub scan: BasinReport,
    /// The same scan with twice the iterations, when requested.
    pub doubled: Option<BasinReport>,
    pub stability: Option<BudgetStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "report", rename_all = "snake_case")]
pub enum ExperimentOutput {
    Exponents(ExponentsReport),
    Interconnect(Box<InterconnectionWitness>),
    Transitivity(CoverageReport),
    Basins(BasinsOutput),
    Density(DensityReport),
    Ari(Box<AriReport>),
    Perturb(PerturbationReport),
    Counterexample(CounterexampleReport),
}

fn transitivity_grid(config: &RunConfig) -> GridSpec {
    GridSpec {
        base_cells: config.caps.transitivity_base_cells,
        fiber_cells: config.caps.transitivity_fiber_cells,
        iterations: config.caps.transitivity_iterations,
        ..config.grid.spec(config.seed)
    }
}

/// Run one experiment on a validated system.
pub fn run_experiment(
    f: &SkewProduct,
    config: &RunConfig,
    kind: ExperimentKind,
) -> Result<ExperimentOutput, ExperimentError> {
    let caps = &config.caps;
    Ok(match kind {
        ExperimentKind::Exponents => {
            let orbits = orbits_up_to(f.base(), caps.exponent_period_cap, caps.orbit_cap)?;
            let s = f.base().splitting();
            ExperimentOutput::Exponents(ExponentsReport {
                period_cap: caps.exponent_period_cap,
                lambda_u: s.rate_u,
                lambda_s: s.rate_s,
                margins: *f.margins(),
                quadrature: quadrature(f),
                orbits: orbit_exponents(f, &orbits),
            })
        }
        ExperimentKind::Interconnect => {
            let search = InterconnectionSearch {
                period_cap: caps.interconnect_period_cap,
                orbit_cap: caps.orbit_cap,
                ..Default::default()
            };
            ExperimentOutput::Interconnect(Box::new(boundary_interconnection(f, &search)?))
        }
        ExperimentKind::Transitivity => ExperimentOutput::Transitivity(transitivity_probe(f, &transitivity_grid(config))?),
        ExperimentKind::Basins => {
            let grid = config.grid.spec(config.seed);
            let scan = intermingled_basins_scan(f, &grid)?;
            let (doubled, stability) = if caps.basin_budget_doubling {
                let doubled = intermingled_basins_scan(f, &GridSpec { iterations: 2 * grid.iterations, ..grid })?;
                let stability = basin_budget_stability(&scan, &doubled);
                (Some(doubled), Some(stability))
            } else {
                (None, None)
            };
            ExperimentOutput::Basins(BasinsOutput { scan, doubled, stability })
        }
        ExperimentKind::Density => ExperimentOutput::Density(birkhoff_density_scan(
            f,
            Boundary::Bottom,
            caps.period_cap,
            caps.orbit_cap,
            caps.density_window,
            caps.density_epsilon,
            caps.histogram_bins,
        )?),
        ExperimentKind::Ari => {
            let setup = AriSetup {
                m_max: caps.ari_levels,
                period_cap: caps.period_cap,
                orbit_cap: caps.orbit_cap,
                ..Default::default()
            };
            let pool = candidate_pool(f, &setup)?;
            let pick = |negative: bool| {
                pool.iter().find(|(_, s)| if negative { *s < 0.0 } else { *s > 0.0 }).map(|(o, _)| o.clone())
            };
            let (Some(p0), Some(q0)) = (pick(true), pick(false)) else {
                return Err(ExperimentError::HypothesisUnmet {
                    reason: "no pair of boundary orbits with sums of both signs in the pool".into(),
                });
            };
            ExperimentOutput::Ari(Box::new(ari_sequence_build(f, &p0, &q0, &pool, &setup)?))
        }
        ExperimentKind::Perturb => {
            let orbits = orbits_up_to(f.base(), caps.perturb_period_cap, caps.orbit_cap)?;
            ExperimentOutput::Perturb(perturb_flow(f, caps.perturb_tau, &orbits)?.1)
        }
        ExperimentKind::Counterexample => {
            let phi = Mobius { alpha: caps.counterexample_alpha };
            let (u, v) = default_intervals(&phi);
            let setup = CounterexampleSetup {
                range: caps.counterexample_range,
                orbits: caps.counterexample_orbits,
                iterations: caps.counterexample_iterations,
                seed: config.seed,
                ..Default::default()
            };
            ExperimentOutput::Counterexample(horseshoe_counterexample_demo(&phi, u, v, &setup)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    #[serde(flatten)]
    pub status: RunStatus,
    pub wall_seconds: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub experiments: Vec<ExperimentRecord>,
    /// Every file written except the manifest itself.
    pub files: Vec<FileRecord>,
    pub wall_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Validate `config`, run its experiments in order, and write one JSON
/// report per experiment (plus CSV and PGM exports) and a manifest to
/// `out`.
///
/// On a failing experiment the manifest is still written, listing the
/// completed reports and the failure, before the error is returned.
pub fn run(config: &RunConfig, out: &Path) -> Result<Manifest, LabError> {
    let started = Instant::now();
    let f = config.validate()?;
    fs::create_dir_all(out).map_err(LabError::io(out))?;
    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config.hash(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        experiments: Vec::new(),
        files: Vec::new(),
        wall_seconds: 0.0,
    };
    let config_copy = RunConfig { out: None, ..config.clone() };
    manifest.files.push(export::write_json(out, "config.json", &config_copy)?.record);

    for &kind in &config.experiments {
        log::info!("running {kind}");
        let t = Instant::now();
        let result = run_experiment(&f, config, kind);
        let wall_seconds = t.elapsed().as_secs_f64();
        match result {
            Ok(output) => {
                let written: Vec<Written> = export::write_output(out, &output, f.base().dim())?;
                log::info!("{kind} finished in {wall_seconds:.2} s, {} files", written.len());
                manifest.experiments.push(ExperimentRecord {
                    name: kind.name().into(),
                    status: RunStatus::Ok,
                    wall_seconds,
                    files: written.iter().map(|w| w.record.path.clone()).collect(),
                });
                manifest.files.extend(written.into_iter().map(|w| w.record));
            }
            Err(source) => {
                log::error!("{kind} failed: {source}");
                manifest.experiments.push(ExperimentRecord {
                    name: kind.name().into(),
                    status: RunStatus::Failed { error: source.to_string() },
                    wall_seconds,
                    files: Vec::new(),
                });
                manifest.wall_seconds = started.elapsed().as_secs_f64();
                export::write_json(out, MANIFEST_FILE, &manifest)?;
                return Err(LabError::Experiment { name: kind.name(), source });
            }
        }
    }
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    export::write_json(out, MANIFEST_FILE, &manifest)?;
    Ok(manifest)
}

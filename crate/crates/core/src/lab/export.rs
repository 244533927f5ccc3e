//! Report files: pretty JSON for every experiment, CSV tables, and plain
//! PGM images of the basin grid.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiments::BasinReport;

use super::run::{ExperimentOutput, FileRecord};
use super::LabError;

pub(crate) struct Written {
    pub record: FileRecord,
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<Written, LabError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(LabError::io(&path))?;
    Ok(Written {
        record: FileRecord {
            path: name.into(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        },
    })
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<Written, LabError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(dir, name, &bytes)
}

fn write_csv<R: Serialize>(
    dir: &Path,
    name: &str,
    rows: impl IntoIterator<Item = R>,
) -> Result<Written, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Csv(e.into_error().into()))?;
    write_bytes(dir, name, &bytes)
}

/// Plain (P2) graymap with one pixel per base cell of a fiber layer; the
/// gray level is the share of samples in the basin of the bottom torus.
///
/// Rows run over the last base coordinates (top row highest), columns over
/// the first.
pub fn basin_layer_pgm(report: &BasinReport, dim: usize, layer: usize) -> String {
    let n = report.grid.base_cells;
    let per_layer = n.pow(dim as u32);
    let height = per_layer / n;
    let mut out = format!("P2\n# bottom-basin share, fiber layer {layer}\n{n} {height}\n255\n");
    for row in (0..height).rev() {
        let line: Vec<String> = (0..n)
            .map(|col| {
                let c = &report.cells[layer * per_layer + row * n + col];
                let level = (255.0 * c.bottom as f64 / c.total().max(1) as f64).round() as u32;
                level.to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct ExponentRow<'a> {
    period: usize,
    point: &'a str,
    bottom_sum: f64,
    bottom_exponent: f64,
    top_sum: f64,
    top_exponent: f64,
}

#[derive(Serialize)]
struct CellRow {
    cell: usize,
    layer: usize,
    first_hit: Option<u64>,
}

#[derive(Serialize)]
struct BasinRow {
    cell: usize,
    layer: usize,
    bottom: u32,
    top: u32,
    unresolved: u32,
}

#[derive(Serialize)]
struct BinRow {
    lo: f64,
    hi: f64,
    count: u64,
}

#[derive(Serialize)]
struct AriRow {
    m: u32,
    candidate_period: usize,
    candidate_gap: f64,
    eps_bar: f64,
    k: usize,
    l: usize,
    period_prime: usize,
    period_double: usize,
    sandwich: f64,
    sandwich_lower: f64,
    sandwich_upper: f64,
    sandwich_holds: bool,
    chosen_sum: f64,
    independence_q0: f64,
    drift: f64,
    contracting_center: Option<f64>,
}

#[derive(Serialize)]
struct ShiftRow {
    period: usize,
    boundary: &'static str,
    before: f64,
    after: f64,
    shift: f64,
    after_numeric: f64,
}

fn point_label(p: &crate::torus::ExactPoint) -> String {
    let coords: Vec<String> = p.coords().iter().map(crate::torus::point::format_rational).collect();
    coords.join(" ")
}

/// Write the JSON report of `output` and its tables.
pub(crate) fn write_output(dir: &Path, output: &ExperimentOutput, dim: usize) -> Result<Vec<Written>, LabError> {
    let name = match output {
        ExperimentOutput::Exponents(_) => "exponents",
        ExperimentOutput::Interconnect(_) => "interconnect",
        ExperimentOutput::Transitivity(_) => "transitivity",
        ExperimentOutput::Basins(_) => "basins",
        ExperimentOutput::Density(_) => "density",
        ExperimentOutput::Ari(_) => "ari",
        ExperimentOutput::Perturb(_) => "perturb",
        ExperimentOutput::Counterexample(_) => "counterexample",
    };
    let mut files = vec![write_json(dir, &format!("{name}.json"), output)?];
    match output {
        ExperimentOutput::Exponents(r) => {
            let labels: Vec<String> = r.orbits.iter().map(|o| point_label(o.orbit.base())).collect();
            let rows = r.orbits.iter().zip(&labels).map(|(o, label)| ExponentRow {
                period: o.orbit.period(),
                point: label,
                bottom_sum: o.bottom.sum,
                bottom_exponent: o.bottom.exponent,
                top_sum: o.top.sum,
                top_exponent: o.top.exponent,
            });
            files.push(write_csv(dir, "exponents.csv", rows)?);
        }
        ExperimentOutput::Transitivity(r) => {
            let per_layer = r.cells / r.fiber_cells;
            let rows = r
                .first_hit
                .iter()
                .enumerate()
                .map(|(cell, &first_hit)| CellRow { cell, layer: cell / per_layer, first_hit });
            files.push(write_csv(dir, "transitivity_cells.csv", rows)?);
        }
        ExperimentOutput::Basins(b) => {
            let rows = b.scan.rows(dim).into_iter().map(|(cell, layer, c)| BasinRow {
                cell,
                layer,
                bottom: c.bottom,
                top: c.top,
                unresolved: c.unresolved,
            });
            files.push(write_csv(dir, "basins_cells.csv", rows)?);
            for layer in 0..b.scan.grid.fiber_cells {
                let image = basin_layer_pgm(&b.scan, dim, layer);
                files.push(write_bytes(dir, &format!("basins_layer{layer}.pgm"), image.as_bytes())?);
            }
        }
        ExperimentOutput::Density(r) => {
            #[derive(Serialize)]
            struct SumRow {
                sum: f64,
            }
            files.push(write_csv(dir, "density_sums.csv", r.sums.iter().map(|&sum| SumRow { sum }))?);
            let h = &r.histogram;
            let width = (h.hi - h.lo) / h.counts.len() as f64;
            let rows = h.counts.iter().enumerate().map(|(i, &count)| BinRow {
                lo: h.lo + i as f64 * width,
                hi: h.lo + (i + 1) as f64 * width,
                count,
            });
            files.push(write_csv(dir, "density_histogram.csv", rows)?);
        }
        ExperimentOutput::Ari(r) => {
            let rows = r.steps.iter().map(|s| AriRow {
                m: s.m,
                candidate_period: s.candidate.period(),
                candidate_gap: s.candidate_gap,
                eps_bar: s.eps_bar,
                k: s.lengths.k,
                l: s.lengths.l,
                period_prime: s.periods[0],
                period_double: s.periods[1],
                sandwich: s.sandwich,
                sandwich_lower: s.sandwich_lower,
                sandwich_upper: s.sandwich_upper,
                sandwich_holds: s.sandwich_holds,
                chosen_sum: s.chosen_sum,
                independence_q0: s.independence_q0.value,
                drift: s.drift,
                contracting_center: s.pliss.map(|p| p.contracting_center),
            });
            files.push(write_csv(dir, "ari_levels.csv", rows)?);
        }
        ExperimentOutput::Perturb(r) => {
            let rows = r.shifts.iter().map(|s| ShiftRow {
                period: s.orbit.period(),
                boundary: match s.boundary {
                    crate::skew::Boundary::Bottom => "bottom",
                    crate::skew::Boundary::Top => "top",
                },
                before: s.before,
                after: s.after,
                shift: s.shift,
                after_numeric: s.after_numeric,
            });
            files.push(write_csv(dir, "perturb_shifts.csv", rows)?);
        }
        ExperimentOutput::Interconnect(_) | ExperimentOutput::Counterexample(_) => {}
    }
    Ok(files)
}

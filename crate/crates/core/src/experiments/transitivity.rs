use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::skew::{FiberPoint, SkewProduct};

use super::{advance, stream_rng, ExperimentError, GridSpec};

/// Cell-to-cell reachability built from short orbit segments started in
/// every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reachability {
    pub segment_length: usize,
    pub starts_per_cell: usize,
    pub edges: usize,
    pub components: usize,
    /// Cells in the largest strongly connected component.
    pub largest_component: usize,
    /// Every cell reaches every other cell.
    pub strongly_connected: bool,
    /// The cells visited by the long orbit lie in one component.
    pub visited_strongly_connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub seed: u64,
    pub iterations: u64,
    pub base_cells: usize,
    pub fiber_cells: usize,
    pub start: Vec<f64>,
    pub start_t: f64,
    pub cells: usize,
    pub visited: usize,
    pub visited_fraction: f64,
    /// Visited share of each fiber layer.
    pub layer_fractions: Vec<f64>,
    /// Iteration at which each cell was first entered.
    pub first_hit: Vec<Option<u64>>,
    pub reachability: Reachability,
    pub note: String,
}

const SEGMENT_LENGTH: usize = 8;
const STARTS_PER_CELL: usize = 16;

/// Follow one orbit from a seeded interior point and record which grid
/// cells it enters.
///
/// This is an operational stand-in for transitivity: full coverage is
/// consistent with a dense orbit, and low coverage is a finding rather than
/// an error.
pub fn transitivity_probe(f: &SkewProduct, grid: &GridSpec) -> Result<CoverageReport, ExperimentError> {
    grid.validate()?;
    let d = f.base().dim();
    let cells = grid.cell_count(d);
    let mut rng = stream_rng(grid.seed, u64::MAX);
    let start: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let start_t = rng.random_range(0.1..0.9);

    let mut first_hit = vec![None; cells];
    let (mut x, mut scratch) = (start.clone(), vec![0.0; d]);
    let mut p = FiberPoint::new(start_t);
    for n in 0..grid.iterations {
        let c = grid.cell_of(&x, p);
        first_hit[c].get_or_insert(n);
        p = advance(f, &mut x, &mut scratch, p);
    }
    let visited = first_hit.iter().filter(|h| h.is_some()).count();
    let per_layer = cells / grid.fiber_cells;
    let layer_fractions = (0..grid.fiber_cells)
        .map(|l| {
            first_hit[l * per_layer..(l + 1) * per_layer].iter().filter(|h| h.is_some()).count() as f64
                / per_layer as f64
        })
        .collect();

    let reachability = reachability(f, grid, &first_hit);
    Ok(CoverageReport {
        seed: grid.seed,
        iterations: grid.iterations,
        base_cells: grid.base_cells,
        fiber_cells: grid.fiber_cells,
        start,
        start_t,
        cells,
        visited,
        visited_fraction: visited as f64 / cells as f64,
        layer_fractions,
        first_hit,
        reachability,
        note: "cell coverage and reachability are a numerical surrogate for transitivity, not a proof of density"
            .into(),
    })
}

fn reachability(f: &SkewProduct, grid: &GridSpec, first_hit: &[Option<u64>]) -> Reachability {
    let d = f.base().dim();
    let cells = first_hit.len();
    let width = 1.0 / grid.base_cells as f64;
    let height = 1.0 / grid.fiber_cells as f64;
    let mut graph: DiGraphMap<usize, ()> = DiGraphMap::with_capacity(cells, cells * STARTS_PER_CELL);
    let mut scratch = vec![0.0; d];
    for cell in 0..cells {
        graph.add_edge(cell, cell, ());
        let (origin, layer) = grid.cell_origin(cell, d);
        let mut rng = stream_rng(grid.seed, cell as u64);
        for _ in 0..STARTS_PER_CELL {
            let mut x: Vec<f64> = origin.iter().map(|o| o + width * rng.random::<f64>()).collect();
            let mut p = FiberPoint::new((layer as f64 + rng.random::<f64>()) * height);
            for _ in 0..SEGMENT_LENGTH {
                p = advance(f, &mut x, &mut scratch, p);
                graph.add_edge(cell, grid.cell_of(&x, p), ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let largest = sccs.iter().max_by_key(|c| c.len()).cloned().unwrap_or_default();
    let in_largest: std::collections::HashSet<usize> = largest.iter().copied().collect();
    let visited_strongly_connected = first_hit
        .iter()
        .enumerate()
        .filter(|(_, h)| h.is_some())
        .all(|(c, _)| in_largest.contains(&c));
    Reachability {
        segment_length: SEGMENT_LENGTH,
        starts_per_cell: STARTS_PER_CELL,
        edges: graph.edge_count(),
        components: sccs.len(),
        largest_component: largest.len(),
        strongly_connected: sccs.len() == 1,
        visited_strongly_connected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(iterations: u64) -> GridSpec {
        GridSpec { base_cells: 8, fiber_cells: 4, iterations, seed: 11, ..Default::default() }
    }

    #[test]
    fn product_stays_in_one_layer() {
        let f = SkewProduct::kan_cat(0.0).unwrap();
        let r = transitivity_probe(&f, &grid(200_000)).unwrap();
        assert!(r.visited_fraction <= 0.25 + 1e-12);
        assert_eq!(r.layer_fractions.iter().filter(|&&l| l > 0.0).count(), 1);
        assert!(!r.reachability.strongly_connected);
    }

    #[test]
    fn coverage_grows_with_budget() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let short = transitivity_probe(&f, &grid(1_000)).unwrap();
        let long = transitivity_probe(&f, &grid(20_000)).unwrap();
        assert!(short.visited <= long.visited);
        for (a, b) in short.first_hit.iter().zip(&long.first_hit) {
            if a.is_some() {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn default_reachability_is_strongly_connected() {
        let f = SkewProduct::kan_cat(0.3).unwrap();
        let r = transitivity_probe(&f, &grid(10_000)).unwrap();
        assert!(r.reachability.strongly_connected, "{:?}", r.reachability);
        assert!(r.reachability.visited_strongly_connected);
    }
}

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use cubenet::planner::Capacity;
use cubenet::scenario::Scenario;
use cubenet::{CellId, CubeHierarchy, FlowGraph, GridCoord, GridDims, Rect, Region, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rect(rng: &mut ChaCha8Rng, dims: GridDims) -> Rect {
    let (a, b) = (rng.gen_range(0..dims.width), rng.gen_range(0..dims.width));
    let (c, d) = (rng.gen_range(0..dims.height), rng.gen_range(0..dims.height));
    Rect::new(a.min(b), c.min(d), a.max(b), c.max(d))
}

/// Union of 1..=max_rects random rectangles.
pub fn random_region(rng: &mut ChaCha8Rng, dims: GridDims, max_rects: usize) -> Region {
    let n = rng.gen_range(1..=max_rects);
    let rects: Vec<Rect> = (0..n).map(|_| random_rect(rng, dims)).collect();
    Region::from_rects(dims, &rects).unwrap()
}

pub fn random_values(rng: &mut ChaCha8Rng, dims: GridDims) -> cubenet::GridValues {
    cubenet::GridValues::from_fn(dims, |_| cubenet::value::from_i64(rng.gen_range(-20..=60)))
}

fn key(region: &Region) -> Vec<u64> {
    let mut k = vec![0u64; region.dims().area().div_ceil(64)];
    for p in region.cells() {
        let i = region.dims().index(p);
        k[i / 64] |= 1 << (i % 64);
    }
    k
}

/// Fewest disjoint hierarchy cells (grid locations included) whose union is
/// `region`, by exhaustive search on the first uncovered location.
pub fn exact_cover_min(h: &CubeHierarchy, region: &Region) -> usize {
    fn go(h: &CubeHierarchy, residual: &Region, memo: &mut HashMap<Vec<u64>, usize>) -> usize {
        let Some(first) = residual.first_cell() else {
            return 0;
        };
        let k = key(residual);
        if let Some(&v) = memo.get(&k) {
            return v;
        }
        let mut best = usize::MAX;
        for level in 0..=h.height() {
            let cell = h.cell(h.config().cell_containing(level, first));
            if !cell.bounds.coords().all(|p| residual.contains(p)) {
                continue;
            }
            let mut rest = residual.clone();
            for p in cell.bounds.coords() {
                rest.remove(p);
            }
            best = best.min(1 + go(h, &rest, memo));
        }
        memo.insert(k, best);
        best
    }
    go(h, region, &mut HashMap::new())
}

/// Every finite s-t cut of a graph, as source-side flags, when the number of
/// unconstrained nodes is at most `max_free`.
pub fn enumerate_cuts(g: &FlowGraph, max_free: usize) -> Option<Vec<Vec<bool>>> {
    let n = g.node_count();
    let mut forced: Vec<Option<bool>> = vec![None; n];
    for &v in g.source_tied() {
        forced[v] = Some(true);
    }
    for &v in g.sink_tied() {
        if forced[v] == Some(true) {
            return Some(Vec::new());
        }
        forced[v] = Some(false);
    }
    let free: Vec<usize> = (0..n).filter(|&v| forced[v].is_none()).collect();
    if free.len() > max_free {
        return None;
    }
    let mut out = Vec::new();
    for mask in 0u64..(1 << free.len()) {
        let mut side: Vec<bool> = forced.iter().map(|f| f.unwrap_or(false)).collect();
        for (bit, &v) in free.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        let finite = g
            .edges()
            .iter()
            .all(|e| e.capacity == Capacity::Unit || side[e.child] == side[e.parent]);
        if finite {
            out.push(side);
        }
    }
    Some(out)
}

/// Signed sum and cut points of one cut.
pub fn cut_reading(g: &FlowGraph, h: &CubeHierarchy, side: &[bool]) -> (Value, Vec<CellId>) {
    let mut total = cubenet::value::zero();
    let mut points = Vec::new();
    for e in g.edges() {
        if side[e.child] != side[e.parent] {
            let v = h.value(e.point);
            if side[e.child] {
                total += v;
            } else {
                total -= v;
            }
            points.push(e.point);
        }
    }
    (total, points)
}

/// Fewest distinct summaries over all ways of answering each query with one
/// of its own finite cuts, or `upper` if nothing beats it.
pub fn joint_optimum(per_query: &[Vec<BTreeSet<CellId>>], upper: usize) -> usize {
    fn go(per_query: &[Vec<BTreeSet<CellId>>], acc: &BTreeSet<CellId>, best: &mut usize) {
        if acc.len() >= *best {
            return;
        }
        match per_query.split_first() {
            None => *best = acc.len(),
            Some((options, rest)) => {
                for o in options {
                    let next: BTreeSet<CellId> = acc.union(o).copied().collect();
                    go(rest, &next, best);
                }
            }
        }
    }
    // A superset of another option never helps.
    let pruned: Vec<Vec<BTreeSet<CellId>>> = per_query
        .iter()
        .map(|opts| {
            let mut opts: Vec<_> = opts.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            opts.sort_by_key(|o| o.len());
            let mut kept: Vec<BTreeSet<CellId>> = Vec::new();
            for o in opts {
                if !kept.iter().any(|k| k.is_subset(&o)) {
                    kept.push(o);
                }
            }
            kept
        })
        .collect();
    let mut best = upper;
    go(&pruned, &BTreeSet::new(), &mut best);
    best
}

/// Distinct lattice points at which the region has a corner.
pub fn corner_points(region: &Region) -> usize {
    cubenet::classify_corners(region)
        .into_iter()
        .map(|c| c.point)
        .collect::<BTreeSet<GridCoord>>()
        .len()
}

//! Failure handling.
//!
//! Two kinds of loss are covered:
//! - a node loses its stored slots; they are rebuilt from a local square of
//!   neighbours, or from farther nodes when the node is a junction;
//! - whole areas go dark; queries are planned around the unreadable summaries
//!   and, when that is impossible, the missing part is estimated from the
//!   smallest enclosing area that can still be computed exactly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridCoord, Region};
use crate::hierarchy::{CellId, CubeHierarchy, HierarchyConfig};
use crate::planner::{plan_avoiding, QueryPlan};
use crate::sim::Construction;
use crate::value::{self, Value};

/// Failed nodes and failed cell areas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSet {
    pub nodes: BTreeSet<GridCoord>,
    pub cells: BTreeSet<CellId>,
}

impl FailureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_node(mut self, p: GridCoord) -> Self {
        self.nodes.insert(p);
        self
    }

    pub fn with_cell(mut self, id: CellId) -> Self {
        self.cells.insert(id);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.cells.is_empty()
    }

    pub fn extend(&mut self, other: &FailureSet) {
        self.nodes.extend(other.nodes.iter().copied());
        self.cells.extend(other.cells.iter().copied());
    }

    pub fn validate(&self, config: &HierarchyConfig) -> Result<()> {
        for &p in &self.nodes {
            config.dims().check(p)?;
        }
        for id in &self.cells {
            if id.level > config.height() {
                return Err(Error::Config(format!("no level {} in the hierarchy", id.level)));
            }
            let (nx, ny) = config.level_shape(id.level);
            if id.cx >= nx || id.cy >= ny {
                return Err(Error::OutOfBounds {
                    coord: GridCoord::new(id.cx, id.cy),
                    width: nx,
                    height: ny,
                });
            }
        }
        Ok(())
    }

    /// Grid locations that are down.
    pub fn area(&self, config: &HierarchyConfig) -> Region {
        let mut r = Region::empty(config.dims());
        for &p in &self.nodes {
            r.insert(p);
        }
        for &id in &self.cells {
            for p in config.cell(id).bounds.coords() {
                r.insert(p);
            }
        }
        r
    }

    /// Summaries, at every level, whose storing node is down.
    pub fn unavailable(&self, config: &HierarchyConfig) -> BTreeSet<CellId> {
        let area = self.area(config);
        let mut out = BTreeSet::new();
        for p in area.cells() {
            out.insert(CellId::new(0, p.x, p.y));
            for level in 1..=config.height() {
                if config.is_junction(p, level) {
                    out.insert(config.cell_containing(level, p));
                }
            }
        }
        out
    }
}

/// `node:x,y` or `cell:LEVEL:x0,y0` (the cell's top-left location).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSpec {
    Node(GridCoord),
    Cell { level: usize, top_left: GridCoord },
}

impl CellSpec {
    pub fn resolve(&self, config: &HierarchyConfig) -> Result<FailureSet> {
        match *self {
            CellSpec::Node(p) => {
                config.dims().check(p)?;
                Ok(FailureSet::new().with_node(p))
            }
            CellSpec::Cell { level, top_left } => {
                if level > config.height() {
                    return Err(Error::Config(format!("no level {level} in the hierarchy")));
                }
                config.dims().check(top_left)?;
                let id = config.cell_containing(level, top_left);
                if config.cell(id).bounds.top_left() != top_left {
                    return Err(Error::Config(format!(
                        "{top_left} is not the top-left corner of a level-{level} cell"
                    )));
                }
                Ok(FailureSet::new().with_cell(id))
            }
        }
    }
}

impl FromStr for CellSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Scenario(format!("bad cell spec `{s}`, expected node:x,y or cell:LEVEL:x0,y0"));
        let coord = |t: &str| -> Result<GridCoord> {
            let (x, y) = t.split_once(',').ok_or_else(bad)?;
            Ok(GridCoord::new(
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        if let Some(rest) = s.strip_prefix("node:") {
            return Ok(CellSpec::Node(coord(rest)?));
        }
        if let Some(rest) = s.strip_prefix("cell:") {
            let (level, xy) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(CellSpec::Cell {
                level: level.trim().parse().map_err(|_| bad())?,
                top_left: coord(xy)?,
            });
        }
        Err(bad())
    }
}

impl fmt::Display for CellSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellSpec::Node(p) => write!(f, "node:{},{}", p.x, p.y),
            CellSpec::Cell { level, top_left } => write!(f, "cell:{}:{},{}", level, top_left.x, top_left.y),
        }
    }
}

/// A lost slot rebuilt from other nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecovery {
    pub value: Value,
    pub donors: Vec<GridCoord>,
    /// Sum of hop distances from the failed node to each donor.
    pub distance: usize,
    /// Number of stored values read.
    pub points_read: usize,
}

impl NodeRecovery {
    fn absorb(&mut self, other: NodeRecovery) {
        for d in other.donors {
            if !self.donors.contains(&d) {
                self.donors.push(d);
            }
        }
        self.points_read += other.points_read;
        self.distance += other.distance;
    }
}

/// Lattice of level-`level` junction positions along one axis.
struct Lattice<'a> {
    config: &'a HierarchyConfig,
    level: usize,
}

impl Lattice<'_> {
    fn next_x(&self, x: usize) -> Option<usize> {
        (x + 1..self.config.dims().width).find(|&c| self.config.is_junction_col(c, self.level))
    }

    fn next_y(&self, y: usize) -> Option<usize> {
        (y + 1..self.config.dims().height).find(|&r| self.config.is_junction_row(r, self.level))
    }

    fn prev_x(&self, x: usize) -> Option<usize> {
        (0..x).rev().find(|&c| self.config.is_junction_col(c, self.level))
    }

    fn prev_y(&self, y: usize) -> Option<usize> {
        (0..y).rev().find(|&r| self.config.is_junction_row(r, self.level))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corner {
    C,
    B,
    A,
}

/// Solve the square identity
/// `D(d) = [a]D(a) + [b]D(b) - [c]D(c) + [d junction]V(d)` for the failed node,
/// where `D` is slot `slot` and the square is drawn on the level-`lattice`
/// junction lattice. `[q]` is 1 when `q` lies in the same level-`slot` cell as `d`.
fn solve_square(
    c: &Construction,
    failed: &BTreeSet<GridCoord>,
    node: GridCoord,
    slot: usize,
    lattice: usize,
) -> Option<NodeRecovery> {
    let config = c.config();
    let lat = Lattice { config, level: lattice };
    let same_cell = |p: GridCoord, q: GridCoord| config.cell_containing(slot, p) == config.cell_containing(slot, q);

    for corner in [Corner::C, Corner::B, Corner::A] {
        let d = match corner {
            Corner::C => lat.next_x(node.x).zip(lat.next_y(node.y)).map(|(x, y)| GridCoord::new(x, y)),
            Corner::B => lat.next_x(node.x).map(|x| GridCoord::new(x, node.y)),
            Corner::A => lat.next_y(node.y).map(|y| GridCoord::new(node.x, y)),
        };
        let Some(d) = d else { continue };
        if !same_cell(node, d) {
            continue;
        }
        let a = lat.prev_y(d.y).map(|y| GridCoord::new(d.x, y));
        let b = lat.prev_x(d.x).map(|x| GridCoord::new(x, d.y));
        let cc = lat.prev_x(d.x).zip(lat.prev_y(d.y)).map(|(x, y)| GridCoord::new(x, y));
        // Everything on the right-hand side except the failed node itself.
        let mut terms: Vec<(GridCoord, i64)> = vec![(d, 1)];
        for (q, sign) in [(a, -1), (b, -1), (cc, 1)] {
            if let Some(q) = q.filter(|&q| q != node && same_cell(q, d)) {
                terms.push((q, sign));
            }
        }
        if terms.iter().any(|(q, _)| failed.contains(q)) {
            continue;
        }
        let mut sum = value::zero();
        let mut reads = 0;
        for &(q, sign) in &terms {
            sum += value::scaled(sign, c.state(q).slot(slot)?);
            reads += 1;
        }
        if config.is_junction(d, slot - 1) {
            let mass = if slot == 1 {
                c.state(d).local
            } else {
                c.state(d).slot(slot - 1)?
            };
            sum -= mass;
            reads += 1;
        }
        // The failed node enters with +1 as a or b and -1 as c.
        let value = if corner == Corner::C { -sum } else { sum };
        let donors: Vec<GridCoord> = terms.iter().map(|&(q, _)| q).collect();
        return Some(NodeRecovery {
            value,
            distance: donors.iter().map(|q| q.hops(&node)).sum(),
            donors,
            points_read: reads,
        });
    }
    None
}

fn check_slot(c: &Construction, node: GridCoord, level: usize) -> Result<()> {
    c.config().dims().check(node)?;
    if level == 0 || level > c.config().height() {
        return Err(Error::Config(format!("slot {level} does not exist")));
    }
    if c.state(node).slot(level).is_none() {
        return Err(Error::Config(format!("{node} does not store slot {level}")));
    }
    Ok(())
}

/// Rebuild slot `level` of a failed node from a local square of nodes that
/// store the same slot. Junctions of level `level` have no such square.
pub fn recover_node(
    c: &Construction,
    failed: &BTreeSet<GridCoord>,
    node: GridCoord,
    level: usize,
) -> Result<NodeRecovery> {
    check_slot(c, node, level)?;
    if c.config().is_junction(node, level) {
        return Err(Error::Unrecoverable(format!(
            "{node} is a level-{level} junction; use junction recovery"
        )));
    }
    solve_square(c, failed, node, level, level - 1).ok_or_else(|| {
        Error::Unrecoverable(format!("no live square around {node} for slot {level}"))
    })
}

/// Rebuild the level-`level` summary held by a failed junction.
///
/// First the next slot at the node is rebuilt: from a square on the
/// level-`level` lattice, or on the finer level-`(level-1)` lattice when nodes
/// keep an extra slot (`redundant`). If the node is also a junction one level
/// up, that slot is its own summary one level up and is rebuilt recursively.
/// Then the summary is that slot minus what the node's lattice predecessors
/// in the same parent cell contribute.
pub fn recover_junction(
    c: &Construction,
    failed: &BTreeSet<GridCoord>,
    node: GridCoord,
    level: usize,
    redundant: bool,
) -> Result<NodeRecovery> {
    let config = c.config();
    config.dims().check(node)?;
    if level == 0 || !config.is_junction(node, level) {
        return Err(Error::Config(format!("{node} is not a level-{level} junction")));
    }
    if redundant && !c.redundant() {
        return Err(Error::Config("construction did not keep redundant slots".into()));
    }
    if level >= config.height() {
        return Err(Error::Unrecoverable(format!(
            "{node} holds a top-level summary with no parent slot"
        )));
    }
    let slot = level + 1;
    let mut rec = if config.is_junction(node, slot) {
        recover_junction(c, failed, node, slot, redundant)?
    } else {
        let lattice = if redundant { level - 1 } else { level };
        solve_square(c, failed, node, slot, lattice).ok_or_else(|| {
            Error::Unrecoverable(format!("no live square around {node} for slot {slot}"))
        })?
    };

    let lat = Lattice { config, level };
    let parent = config.cell_containing(slot, node);
    let inside = |q: &GridCoord| config.cell_containing(slot, *q) == parent;
    let a = lat.prev_y(node.y).map(|y| GridCoord::new(node.x, y)).filter(inside);
    let b = lat.prev_x(node.x).map(|x| GridCoord::new(x, node.y)).filter(inside);
    let cc = lat
        .prev_x(node.x)
        .zip(lat.prev_y(node.y))
        .map(|(x, y)| GridCoord::new(x, y))
        .filter(inside);
    let mut value = rec.value;
    let mut extra = NodeRecovery {
        value: value::zero(),
        donors: Vec::new(),
        distance: 0,
        points_read: 0,
    };
    for (q, sign) in [(a, -1), (b, -1), (cc, 1)] {
        let Some(q) = q else { continue };
        if failed.contains(&q) {
            return Err(Error::Unrecoverable(format!("predecessor {q} of {node} is down")));
        }
        let v = c
            .state(q)
            .slot(slot)
            .ok_or_else(|| Error::Simulation(format!("{q} lacks slot {slot}")))?;
        value += value::scaled(sign, v);
        extra.donors.push(q);
        extra.distance += q.hops(&node);
        extra.points_read += 1;
    }
    rec.absorb(extra);
    rec.value = value;
    Ok(rec)
}

/// Rebuild any stored slot of a failed node, escalating to junction recovery.
pub fn recover_slot(
    c: &Construction,
    failed: &BTreeSet<GridCoord>,
    node: GridCoord,
    level: usize,
) -> Result<NodeRecovery> {
    check_slot(c, node, level)?;
    if c.config().is_junction(node, level) {
        recover_junction(c, failed, node, level, c.redundant())
    } else {
        recover_node(c, failed, node, level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoveryKind {
    Exact,
    Estimate,
    Unrecoverable,
}

impl fmt::Display for RecoveryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoveryKind::Exact => "exact",
            RecoveryKind::Estimate => "estimate",
            RecoveryKind::Unrecoverable => "unrecoverable",
        })
    }
}

/// Outcome for one connected failed area touching the query.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaRecovery {
    pub kind: RecoveryKind,
    /// Failed part of the query.
    pub requested: Region,
    /// Area whose sum was computed; `None` when nothing enclosing it is computable.
    pub recovered: Option<Region>,
    /// Exact sum over `recovered`.
    pub recovered_sum: Option<Value>,
    pub estimate: Option<f64>,
    pub plan: Option<QueryPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub kind: RecoveryKind,
    /// Exact answer or estimate; `None` when unrecoverable.
    pub value: Option<f64>,
    /// Set when the whole answer is exact.
    pub exact: Option<Value>,
    /// Total size of the failed part of the query.
    pub requested_area: usize,
    /// Total size of the areas actually computed for it.
    pub recovered_area: usize,
    pub points_read: usize,
    /// Plan for the part of the query outside the failed area.
    pub live_plan: QueryPlan,
    pub areas: Vec<AreaRecovery>,
}

/// Answer `query` under area failures.
///
/// The live part of the query is planned around unreadable summaries. Each
/// connected failed area touching the query is then handled bottom-up: its
/// failed part `Q` is grown to the failed locations under the enclosing cell
/// at each level (and finally the whole failed set) until the grown area `A`
/// can be computed exactly. The contribution is `V(A) * |Q| / |A|`, exact when
/// `A = Q`.
pub fn recover_region(h: &CubeHierarchy, failures: &FailureSet, query: &Region) -> Result<RecoveryResult> {
    let config = h.config();
    if query.dims() != config.dims() {
        return Err(Error::DimensionMismatch("query and hierarchy grids differ".into()));
    }
    failures.validate(config)?;
    let failed = failures.area(config);
    let unavailable = failures.unavailable(config);

    let live = query.difference(&failed);
    let live_plan = plan_avoiding(h, &live, &unavailable)
        .map_err(|e| Error::Unrecoverable(format!("live part of the query is blocked: {e}")))?;
    let mut points_read = live_plan.size();
    let mut areas = Vec::new();

    for component in failed.components() {
        let requested = component.intersection(query);
        if requested.is_empty() {
            continue;
        }
        let mut tried: Vec<Region> = Vec::new();
        let mut found = None;
        for level in 0..=config.height() + 1 {
            let grown = if level > config.height() {
                failed.clone()
            } else {
                let mut under = Region::empty(config.dims());
                let cells: BTreeSet<CellId> =
                    requested.cells().map(|p| config.cell_containing(level, p)).collect();
                for id in cells {
                    for p in config.cell(id).bounds.coords() {
                        under.insert(p);
                    }
                }
                under.intersection(&failed)
            };
            if tried.contains(&grown) {
                continue;
            }
            if let Ok(plan) = plan_avoiding(h, &grown, &unavailable) {
                found = Some((grown, plan));
                break;
            }
            tried.push(grown);
        }
        let area = match found {
            Some((grown, plan)) => {
                points_read += plan.size();
                let v = plan.value;
                let estimate = value::to_f64(v) * requested.len() as f64 / grown.len() as f64;
                AreaRecovery {
                    kind: if grown == requested {
                        RecoveryKind::Exact
                    } else {
                        RecoveryKind::Estimate
                    },
                    requested,
                    recovered: Some(grown),
                    recovered_sum: Some(v),
                    estimate: Some(estimate),
                    plan: Some(plan),
                }
            }
            None => AreaRecovery {
                kind: RecoveryKind::Unrecoverable,
                requested,
                recovered: None,
                recovered_sum: None,
                estimate: None,
                plan: None,
            },
        };
        areas.push(area);
    }

    let kind = if areas.iter().any(|a| a.kind == RecoveryKind::Unrecoverable) {
        RecoveryKind::Unrecoverable
    } else if areas.iter().any(|a| a.kind == RecoveryKind::Estimate) {
        RecoveryKind::Estimate
    } else {
        RecoveryKind::Exact
    };
    let exact = (kind == RecoveryKind::Exact).then(|| {
        areas
            .iter()
            .filter_map(|a| a.recovered_sum)
            .fold(live_plan.value, |acc, v| acc + v)
    });
    let value = (kind != RecoveryKind::Unrecoverable).then(|| {
        areas
            .iter()
            .filter_map(|a| a.estimate)
            .fold(value::to_f64(live_plan.value), |acc, v| acc + v)
    });
    Ok(RecoveryResult {
        kind,
        value,
        exact,
        requested_area: areas.iter().map(|a| a.requested.len()).sum(),
        recovered_area: areas.iter().filter_map(|a| a.recovered.as_ref()).map(Region::len).sum(),
        points_read,
        live_plan,
        areas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailurePlan {
    /// Exact plan that reads no unavailable summary.
    Exact(QueryPlan),
    /// No such plan exists; fell back to area recovery.
    Recovered(RecoveryResult),
}

/// Plan around failures; fall back to recovery when every plan is blocked.
pub fn plan_with_failures(h: &CubeHierarchy, failures: &FailureSet, query: &Region) -> Result<FailurePlan> {
    failures.validate(h.config())?;
    let unavailable = failures.unavailable(h.config());
    match plan_avoiding(h, query, &unavailable) {
        Ok(plan) => Ok(FailurePlan::Exact(plan)),
        Err(_) => recover_region(h, failures, query).map(FailurePlan::Recovered),
    }
}

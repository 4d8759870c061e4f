//! Min-cut query planning over the colored hierarchy tree.
//!
//! Every containment edge `child -> parent` of the tree becomes an undirected
//! unit-capacity edge standing for the child's summary. The source is tied to
//! Grey leaves and the sink to White leaves and the synthetic root with
//! infinite capacity. Any finite s-t cut `(S, T)` answers the query:
//!
//! ```text
//! V(G) = sum of V(child) over cut edges with child in S
//!      - sum of V(child) over cut edges with child in T
//! ```
//!
//! so a minimum cut is a plan reading the fewest summaries. A summary that is
//! unavailable gets an infinite edge and can never be part of a cut.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::FlowNetwork;
use crate::hierarchy::{CellId, Color, CubeHierarchy, HierarchyTree, NodeKind};
use crate::prefix_sum::PsPointId;
use crate::value::{self, Value};

/// A stored summary that a plan reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DataRef {
    Cell(CellId),
    Prefix(PsPointId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanTerm {
    pub point: DataRef,
    pub coef: i64,
}

/// Signed data points whose weighted sum is the query aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub terms: Vec<PlanTerm>,
    pub value: Value,
}

impl QueryPlan {
    pub fn empty() -> Self {
        Self {
            terms: Vec::new(),
            value: value::zero(),
        }
    }

    /// Number of distinct data points read.
    pub fn size(&self) -> usize {
        self.terms.len()
    }

    pub fn cells(&self) -> Vec<CellId> {
        self.terms
            .iter()
            .filter_map(|t| match t.point {
                DataRef::Cell(id) => Some(id),
                DataRef::Prefix(_) => None,
            })
            .collect()
    }

    pub fn signed_cells(&self) -> Vec<(CellId, i64)> {
        self.terms
            .iter()
            .filter_map(|t| match t.point {
                DataRef::Cell(id) => Some((id, t.coef)),
                DataRef::Prefix(_) => None,
            })
            .collect()
    }

    /// Re-evaluate the cell terms against a simple cube.
    pub fn evaluate(&self, h: &CubeHierarchy) -> Value {
        self.signed_cells()
            .into_iter()
            .fold(value::zero(), |acc, (id, c)| acc + value::scaled(c, h.value(id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Capacity {
    Unit,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentEdge {
    pub child: usize,
    pub parent: usize,
    pub point: CellId,
    pub capacity: Capacity,
}

/// One tree edge of one query, as graph node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct QueryEdge {
    child: usize,
    parent: usize,
    point: CellId,
}

/// Flow graph for one query, or the combined graph of a batch.
///
/// Graph nodes are numbered `0..node_count`; node 0 is the synthetic root.
/// Source and sink are implicit.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    node_count: usize,
    node_cells: Vec<Option<CellId>>,
    source_tied: Vec<usize>,
    sink_tied: Vec<usize>,
    edges: Vec<ContainmentEdge>,
    queries: Vec<Vec<QueryEdge>>,
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[ContainmentEdge] {
        &self.edges
    }

    /// Nodes with an infinite edge from the source.
    pub fn source_tied(&self) -> &[usize] {
        &self.source_tied
    }

    /// Nodes with an infinite edge to the sink.
    pub fn sink_tied(&self) -> &[usize] {
        &self.sink_tied
    }

    pub fn node_cell(&self, node: usize) -> Option<CellId> {
        self.node_cells[node]
    }

    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    /// Set the capacity of every edge standing for a failed summary to infinity.
    pub fn mark_failed(mut self, failed: &BTreeSet<CellId>) -> Self {
        for e in &mut self.edges {
            if failed.contains(&e.point) {
                e.capacity = Capacity::Infinite;
            }
        }
        self
    }
}

/// Every finite cut is smaller than this many unit edges plus one.
fn infinity(g: &FlowGraph) -> u64 {
    g.edges.iter().filter(|e| e.capacity == Capacity::Unit).count() as u64 + 1
}

/// No finite cut exists: the query cannot be answered exactly from the
/// available summaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasible {
    /// Unavailable summaries whose infinite edges cross the min cut.
    pub blocking: Vec<CellId>,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no finite cut; blocked by {} unavailable summaries", self.blocking.len())
    }
}

impl std::error::Error for Infeasible {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Role {
    GreyLeaf,
    WhiteLeaf,
    Inner,
}

fn role(tree: &HierarchyTree, idx: usize) -> Role {
    let n = &tree.nodes[idx];
    match (n.is_leaf(), n.color) {
        (true, Color::Grey) => Role::GreyLeaf,
        (true, Color::White) => Role::WhiteLeaf,
        _ => Role::Inner,
    }
}

pub fn build_flow_graph(tree: &HierarchyTree) -> FlowGraph {
    build_combined_graph(std::slice::from_ref(tree))
}

/// Union of the per-query graphs.
///
/// A cell that is a Grey leaf in one query and a White leaf in another gets two
/// replicas. Every other appearance of a cell shares a single node (a Partial
/// appearance joins the Grey replica if there is one, else the White one), so
/// two edges of the same summary can only ever be a Grey/White replica pair
/// hanging off the same parent.
pub fn build_combined_graph(trees: &[HierarchyTree]) -> FlowGraph {
    let mut roles: HashMap<CellId, (bool, bool)> = HashMap::new();
    for tree in trees {
        for (i, n) in tree.nodes.iter().enumerate() {
            if let Some(id) = n.cell() {
                let e = roles.entry(id).or_default();
                match role(tree, i) {
                    Role::GreyLeaf => e.0 = true,
                    Role::WhiteLeaf => e.1 = true,
                    Role::Inner => {}
                }
            }
        }
    }

    let mut node_cells = vec![None];
    let mut replicas: HashMap<(CellId, Role), usize> = HashMap::new();
    let mut source_tied = Vec::new();
    let mut sink_tied = vec![0usize];
    let mut edges: Vec<ContainmentEdge> = Vec::new();
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queries = Vec::with_capacity(trees.len());

    for tree in trees {
        let mut map = vec![0usize; tree.nodes.len()];
        let mut qedges = Vec::new();
        // Parents precede children in tree order.
        for (i, n) in tree.nodes.iter().enumerate() {
            let id = match n.kind {
                NodeKind::Root => {
                    map[i] = 0;
                    continue;
                }
                NodeKind::Cell(id) => id,
            };
            let (has_grey, has_white) = roles[&id];
            let key_role = match role(tree, i) {
                Role::Inner if has_grey => Role::GreyLeaf,
                Role::Inner if has_white => Role::WhiteLeaf,
                r => r,
            };
            let node = *replicas.entry((id, key_role)).or_insert_with(|| {
                node_cells.push(Some(id));
                let node = node_cells.len() - 1;
                match key_role {
                    Role::GreyLeaf => source_tied.push(node),
                    Role::WhiteLeaf => sink_tied.push(node),
                    Role::Inner => {}
                }
                node
            });
            map[i] = node;
            let parent = map[n.parent.expect("cell nodes have parents")];
            edge_ids.entry((node, parent)).or_insert_with(|| {
                edges.push(ContainmentEdge {
                    child: node,
                    parent,
                    point: id,
                    capacity: Capacity::Unit,
                });
                edges.len() - 1
            });
            qedges.push(QueryEdge {
                child: node,
                parent,
                point: id,
            });
        }
        queries.push(qedges);
    }

    FlowGraph {
        node_count: node_cells.len(),
        node_cells,
        source_tied,
        sink_tied,
        edges,
        queries,
    }
}

/// Result of one min cut over a (possibly combined) graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPlan {
    /// One plan per query, read off that query's subgraph.
    pub plans: Vec<QueryPlan>,
    /// Distinct summaries to retrieve to answer every query.
    pub retrieval: Vec<CellId>,
    /// Summary of every cut edge, with repetition. Equal to `retrieval` when no
    /// summary is cut twice.
    pub cut_points: Vec<CellId>,
    /// Capacity of the minimum cut (= max flow).
    pub cut_value: u64,
    /// False when planning each query on its own retrieved fewer summaries
    /// than the joint cut and those plans were returned instead.
    pub joint: bool,
}

/// Solve max-flow / min-cut and read a plan per query.
pub fn solve(g: &FlowGraph, h: &CubeHierarchy) -> Result<CombinedPlan, Infeasible> {
    let inf = infinity(g);
    let s = g.node_count;
    let t = g.node_count + 1;
    let mut net = FlowNetwork::new(g.node_count + 2);
    for &n in &g.source_tied {
        net.add_arc(s, n, inf);
    }
    for &n in &g.sink_tied {
        net.add_arc(n, t, inf);
    }
    for e in &g.edges {
        let cap = match e.capacity {
            Capacity::Unit => 1,
            Capacity::Infinite => inf,
        };
        net.add_edge(e.child, e.parent, cap);
    }
    let flow = net.max_flow(s, t, u64::MAX);
    let side = net.source_side(s);

    if flow >= inf {
        let blocking: BTreeSet<CellId> = g
            .edges
            .iter()
            .filter(|e| e.capacity == Capacity::Infinite && side[e.child] != side[e.parent])
            .map(|e| e.point)
            .collect();
        return Err(Infeasible {
            blocking: blocking.into_iter().collect(),
        });
    }

    let mut cut_points: Vec<CellId> = g
        .edges
        .iter()
        .filter(|e| side[e.child] != side[e.parent])
        .map(|e| e.point)
        .collect();
    cut_points.sort();
    let retrieval: Vec<CellId> = cut_points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();

    let plans = g
        .queries
        .iter()
        .map(|qedges| {
            let mut terms: Vec<PlanTerm> = qedges
                .iter()
                .filter(|e| side[e.child] != side[e.parent])
                .map(|e| PlanTerm {
                    point: DataRef::Cell(e.point),
                    coef: if side[e.child] { 1 } else { -1 },
                })
                .collect();
            terms.sort_by(|a, b| b.coef.cmp(&a.coef).then(a.point.cmp(&b.point)));
            let value = terms.iter().fold(value::zero(), |acc, t| match t.point {
                DataRef::Cell(id) => acc + value::scaled(t.coef, h.value(id)),
                DataRef::Prefix(_) => acc,
            });
            QueryPlan { terms, value }
        })
        .collect();

    Ok(CombinedPlan {
        plans,
        retrieval,
        cut_points,
        cut_value: flow,
        joint: true,
    })
}

/// Minimum-size signed plan for a single-query graph.
pub fn min_cut_plan(g: &FlowGraph, h: &CubeHierarchy) -> Result<QueryPlan, Infeasible> {
    let mut out = solve(g, h)?;
    Ok(out.plans.swap_remove(0))
}

/// Jointly plan several queries over one hierarchy.
///
/// The joint cut never reads a summary twice, but forcing shared cells onto
/// one side can cost more than it saves; in that case the separately
/// optimized plans are returned.
pub fn combined_plan(trees: &[HierarchyTree], h: &CubeHierarchy) -> Result<CombinedPlan, Infeasible> {
    let joint = solve(&build_combined_graph(trees), h)?;
    let mut separate = Vec::with_capacity(trees.len());
    for tree in trees {
        separate.push(solve(&build_flow_graph(tree), h)?);
    }
    let union: BTreeSet<CellId> = separate.iter().flat_map(|s| s.retrieval.iter().copied()).collect();
    if union.len() >= joint.retrieval.len() {
        return Ok(joint);
    }
    let mut cut_points: Vec<CellId> = separate.iter().flat_map(|s| s.cut_points.iter().copied()).collect();
    cut_points.sort();
    Ok(CombinedPlan {
        cut_value: separate.iter().map(|s| s.cut_value).sum(),
        plans: separate.into_iter().map(|mut s| s.plans.swap_remove(0)).collect(),
        retrieval: union.into_iter().collect(),
        cut_points,
        joint: false,
    })
}

/// Color, build and solve in one step.
pub fn plan_region(h: &CubeHierarchy, region: &crate::grid::Region) -> QueryPlan {
    let tree = crate::hierarchy::color_tree(h, region);
    min_cut_plan(&build_flow_graph(&tree), h).expect("graphs without failures always have a finite cut")
}

/// Plan while avoiding unavailable summaries. Unavailable Grey or White cells
/// are expanded into their children before the graph is built.
pub fn plan_avoiding(
    h: &CubeHierarchy,
    region: &crate::grid::Region,
    unavailable: &BTreeSet<CellId>,
) -> Result<QueryPlan, Infeasible> {
    let tree = crate::hierarchy::color_tree_avoiding(h, region, |id| unavailable.contains(&id));
    let g = build_flow_graph(&tree).mark_failed(unavailable);
    min_cut_plan(&g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDims, GridValues, Rect, Region};
    use crate::hierarchy::{color_tree, HierarchyConfig};

    fn cube(w: usize, h: usize, fanouts: &[usize]) -> CubeHierarchy {
        let dims = GridDims::new(w, h).unwrap();
        let values = GridValues::from_fn(dims, |p| value::from_i64((p.x * 7 + p.y * 3 + 1) as i64));
        CubeHierarchy::build(&values, HierarchyConfig::new(dims, fanouts.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn full_region_reads_top_cells() {
        let h = cube(8, 8, &[2, 2]);
        let plan = plan_region(&h, &Region::full(h.dims()));
        let mut cells = plan.cells();
        cells.sort();
        let mut top: Vec<_> = h.config().top_cells().collect();
        top.sort();
        assert_eq!(cells, top);
        assert_eq!(plan.value, h.total());
    }

    #[test]
    fn empty_region_has_empty_plan() {
        let h = cube(4, 4, &[2]);
        let tree = color_tree(&h, &Region::empty(h.dims()));
        let plan = min_cut_plan(&build_flow_graph(&tree), &h).unwrap();
        assert_eq!(plan, QueryPlan::empty());
    }

    #[test]
    fn plan_value_matches_direct_sum() {
        let h = cube(8, 8, &[2, 2]);
        let dims = h.dims();
        let values = GridValues::from_fn(dims, |p| value::from_i64((p.x * 7 + p.y * 3 + 1) as i64));
        let region = Region::from_rects(dims, &[Rect::new(1, 0, 6, 3), Rect::new(0, 5, 3, 7)]).unwrap();
        let plan = plan_region(&h, &region);
        assert_eq!(plan.value, values.region_sum(&region));
        assert_eq!(plan.evaluate(&h), plan.value);
    }

    #[test]
    fn failing_an_unrelated_cell_changes_nothing() {
        let h = cube(8, 8, &[2, 2]);
        let region = Region::from_rects(h.dims(), &[Rect::new(0, 0, 3, 3)]).unwrap();
        let tree = color_tree(&h, &region);
        let g = build_flow_graph(&tree);
        let before = min_cut_plan(&g, &h).unwrap();
        let failed: BTreeSet<_> = [CellId::new(1, 3, 3)].into();
        let after = min_cut_plan(&g.mark_failed(&failed), &h).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn identical_queries_share_everything() {
        let h = cube(8, 8, &[2, 2]);
        let region = Region::from_rects(h.dims(), &[Rect::new(1, 1, 6, 4)]).unwrap();
        let tree = color_tree(&h, &region);
        let single = min_cut_plan(&build_flow_graph(&tree), &h).unwrap();
        let both = combined_plan(&[tree.clone(), tree], &h).unwrap();
        assert_eq!(both.retrieval.len(), single.size());
        assert_eq!(both.plans[0], single);
        assert_eq!(both.plans[1], single);
    }
}

//! Multiresolution cube summaries over a 2-D sensor grid.
//!
//! The crate builds nested SUM summaries ("cube cells") over a grid of sensor
//! readings and answers spatial aggregate queries with as few summary reads as
//! possible:
//!
//! - [`grid`]: coordinates, sensor values, rectilinear regions and corners.
//! - [`hierarchy`]: the cell hierarchy, junction placement and query coloring.
//! - [`division`]: greedy minimum cover of a region by hierarchy cells.
//! - [`planner`]: min-cut query planning, joint planning for query batches and
//!   failure-aware planning.
//! - [`prefix_sum`]: the prefix-sum cube variant and its query planner.
//! - [`sim`]: a deterministic simulation of the one-packet-per-node distributed
//!   construction protocol.
//! - [`recovery`]: recovery of lost node values and area-failure estimates.
//! - [`scenario`]: the JSON scenario format consumed by the CLI.

pub mod division;
pub mod error;
pub mod flow;
pub mod grid;
pub mod hierarchy;
pub mod planner;
pub mod prefix_sum;
pub mod recovery;
pub mod scenario;
pub mod sim;
pub mod value;

pub use division::{greedy_divide, CellCover};
pub use error::{Error, Result};
pub use grid::{classify_corners, Corner, CornerKind, GridCoord, GridDims, GridValues, Rect, Region};
pub use hierarchy::{
    color_tree, color_tree_avoiding, Cell, CellId, Color, CubeHierarchy, HierarchyConfig,
    HierarchyTree, NodeKind, TreeNode,
};
pub use planner::{
    build_flow_graph, combined_plan, min_cut_plan, CombinedPlan, DataRef, FlowGraph, Infeasible,
    PlanTerm, QueryPlan,
};
pub use prefix_sum::{PrefixSumCube, PsPlan, PsPointId};
pub use recovery::{
    plan_with_failures, recover_junction, recover_node, recover_region, CellSpec, FailurePlan,
    FailureSet, RecoveryKind, RecoveryResult,
};
pub use sim::{run_construction, Construction, NodeState, Packet, SimStats};

pub use value::Value;

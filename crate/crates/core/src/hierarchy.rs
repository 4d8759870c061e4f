//! The multiresolution cell hierarchy.
//!
//! Level 0 is the grid itself (one cell per location). A level-`k` cell spans
//! `F_k x F_k` level-`(k-1)` cells, so its side is `period(k) = F_1 * ... * F_k`
//! grid locations. Cells that would cross the grid's right or bottom edge are
//! clipped. Every cell's summary is stored at its lower-right location, the
//! cell's junction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridCoord, GridDims, GridValues, Rect, Region};
use crate::value::{self, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    dims: GridDims,
    fanouts: Vec<usize>,
    periods: Vec<usize>,
}

impl HierarchyConfig {
    pub fn new(dims: GridDims, fanouts: Vec<usize>) -> Result<Self> {
        if fanouts.is_empty() {
            return Err(Error::Config("fanout list is empty".into()));
        }
        if fanouts[0] < 1 {
            return Err(Error::Config("F_1 must be at least 1".into()));
        }
        if let Some((k, f)) = fanouts.iter().enumerate().skip(1).find(|(_, &f)| f < 2) {
            return Err(Error::Config(format!("F_{} = {f} must be at least 2", k + 1)));
        }
        let mut periods = Vec::with_capacity(fanouts.len() + 1);
        periods.push(1usize);
        for &f in &fanouts {
            let p = periods.last().unwrap().checked_mul(f).ok_or_else(|| {
                Error::Config("fanout product overflows".into())
            })?;
            periods.push(p);
        }
        Ok(Self { dims, fanouts, periods })
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn fanouts(&self) -> &[usize] {
        &self.fanouts
    }

    /// Number of summary levels above the grid.
    pub fn height(&self) -> usize {
        self.fanouts.len()
    }

    /// `F_k` for `k >= 1`.
    pub fn fanout(&self, level: usize) -> usize {
        self.fanouts[level - 1]
    }

    /// Side length, in grid locations, of a level-`level` cell.
    pub fn period(&self, level: usize) -> usize {
        self.periods[level]
    }

    /// Number of cells per row and per column at `level`.
    pub fn level_shape(&self, level: usize) -> (usize, usize) {
        let p = self.period(level);
        (self.dims.width.div_ceil(p), self.dims.height.div_ceil(p))
    }

    pub fn level_len(&self, level: usize) -> usize {
        let (nx, ny) = self.level_shape(level);
        nx * ny
    }

    pub fn cell(&self, id: CellId) -> Cell {
        let p = self.period(id.level);
        let x0 = id.cx * p;
        let y0 = id.cy * p;
        let x1 = ((id.cx + 1) * p).min(self.dims.width) - 1;
        let y1 = ((id.cy + 1) * p).min(self.dims.height) - 1;
        Cell {
            id,
            bounds: Rect::new(x0, y0, x1, y1),
            junction: GridCoord::new(x1, y1),
        }
    }

    pub fn cell_containing(&self, level: usize, p: GridCoord) -> CellId {
        let period = self.period(level);
        CellId::new(level, p.x / period, p.y / period)
    }

    pub fn parent(&self, id: CellId) -> Option<CellId> {
        if id.level >= self.height() {
            return None;
        }
        let f = self.fanout(id.level + 1);
        Some(CellId::new(id.level + 1, id.cx / f, id.cy / f))
    }

    pub fn children(&self, id: CellId) -> Vec<CellId> {
        if id.level == 0 {
            return Vec::new();
        }
        let f = self.fanout(id.level);
        let (nx, ny) = self.level_shape(id.level - 1);
        let mut out = Vec::with_capacity(f * f);
        for cy in id.cy * f..((id.cy + 1) * f).min(ny) {
            for cx in id.cx * f..((id.cx + 1) * f).min(nx) {
                out.push(CellId::new(id.level - 1, cx, cy));
            }
        }
        out
    }

    pub fn cells_at_level(&self, level: usize) -> impl Iterator<Item = CellId> {
        let (nx, ny) = self.level_shape(level);
        (0..ny).flat_map(move |cy| (0..nx).map(move |cx| CellId::new(level, cx, cy)))
    }

    pub fn top_cells(&self) -> impl Iterator<Item = CellId> {
        self.cells_at_level(self.height())
    }

    /// Index of a cell within its level's row-major list.
    pub fn level_index(&self, id: CellId) -> usize {
        let (nx, _) = self.level_shape(id.level);
        id.cy * nx + id.cx
    }

    /// True if `x` is the last column of some level-`level` cell.
    pub fn is_junction_col(&self, x: usize, level: usize) -> bool {
        (x + 1).is_multiple_of(self.period(level)) || x + 1 == self.dims.width
    }

    pub fn is_junction_row(&self, y: usize, level: usize) -> bool {
        (y + 1).is_multiple_of(self.period(level)) || y + 1 == self.dims.height
    }

    /// True if `p` stores the summary of a level-`level` cell.
    pub fn is_junction(&self, p: GridCoord, level: usize) -> bool {
        self.is_junction_col(p.x, level) && self.is_junction_row(p.y, level)
    }

    /// Highest level for which `p` is a junction; every node is a level-0 junction.
    pub fn junction_level(&self, p: GridCoord) -> usize {
        (1..=self.height())
            .take_while(|&k| self.is_junction(p, k))
            .last()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub level: usize,
    pub cx: usize,
    pub cy: usize,
}

impl CellId {
    pub const fn new(level: usize, cx: usize, cy: usize) -> Self {
        Self { level, cx, cy }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub id: CellId,
    pub bounds: Rect,
    pub junction: GridCoord,
}

impl Cell {
    pub fn level(&self) -> usize {
        self.id.level
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}({},{})", self.id.level, self.bounds.x0, self.bounds.y0)
    }
}

/// Simple-sum cube: the SUM of every cell at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeHierarchy {
    config: HierarchyConfig,
    /// `sums[k]` holds level-`k` summaries in row-major cell order.
    sums: Vec<Vec<Value>>,
}

impl CubeHierarchy {
    pub fn build(values: &GridValues, config: HierarchyConfig) -> Result<Self> {
        if values.dims() != config.dims() {
            return Err(Error::DimensionMismatch(format!(
                "values are {}x{}, hierarchy expects {}x{}",
                values.dims().width,
                values.dims().height,
                config.dims().width,
                config.dims().height
            )));
        }
        let mut sums = vec![values.as_slice().to_vec()];
        for level in 1..=config.height() {
            let prev = &sums[level - 1];
            let mut cur = vec![value::zero(); config.level_len(level)];
            for child in config.cells_at_level(level - 1) {
                let parent = config.parent(child).expect("child below top level");
                cur[config.level_index(parent)] += prev[config.level_index(child)];
            }
            sums.push(cur);
        }
        Ok(Self { config, sums })
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn dims(&self) -> GridDims {
        self.config.dims()
    }

    pub fn height(&self) -> usize {
        self.config.height()
    }

    pub fn cell(&self, id: CellId) -> Cell {
        self.config.cell(id)
    }

    /// `V(cell)`.
    pub fn value(&self, id: CellId) -> Value {
        self.sums[id.level][self.config.level_index(id)]
    }

    pub(crate) fn set_value(&mut self, id: CellId, v: Value) {
        let i = self.config.level_index(id);
        self.sums[id.level][i] = v;
    }

    pub fn total(&self) -> Value {
        self.sums[self.height()].iter().copied().fold(value::zero(), |a, b| a + b)
    }

    /// Cells of level >= 1 whose summary is stored at `p`, lowest level first.
    pub fn cells_at(&self, p: GridCoord) -> Vec<Cell> {
        (1..=self.height())
            .filter(|&k| self.config.is_junction(p, k))
            .map(|k| self.config.cell(self.config.cell_containing(k, p)))
            .collect()
    }

    /// Add `delta` to one reading and propagate along its ancestor chain.
    pub fn apply_delta(&mut self, p: GridCoord, delta: Value) {
        let mut id = CellId::new(0, p.x, p.y);
        loop {
            let i = self.config.level_index(id);
            self.sums[id.level][i] += delta;
            match self.config.parent(id) {
                Some(parent) => id = parent,
                None => break,
            }
        }
    }

    /// One line per cell of level >= 1: `level x0 y0 x1 y1 junction_x junction_y value`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for level in 1..=self.height() {
            for id in self.config.cells_at_level(level) {
                let c = self.config.cell(id);
                out.push_str(&format!(
                    "{} {} {} {} {} {} {} {}\n",
                    level,
                    c.bounds.x0,
                    c.bounds.y0,
                    c.bounds.x1,
                    c.bounds.y1,
                    c.junction.x,
                    c.junction.y,
                    self.value(id)
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    /// Cell fully inside the query region.
    Grey,
    /// Cell disjoint from the query region.
    White,
    /// Cell straddling the region boundary.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Synthetic parent of the whole hierarchy.
    Root,
    Cell(CellId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub color: Color,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl TreeNode {
    pub fn cell(&self) -> Option<CellId> {
        match self.kind {
            NodeKind::Root => None,
            NodeKind::Cell(id) => Some(id),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Containment tree of a hierarchy colored against one region.
///
/// Node 0 is the synthetic root. Grey and White cells are leaves unless their
/// own summary is unavailable, in which case they are expanded into children of
/// the same color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyTree {
    pub nodes: Vec<TreeNode>,
}

impl HierarchyTree {
    pub const ROOT: usize = 0;

    pub fn root(&self) -> &TreeNode {
        &self.nodes[Self::ROOT]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, id: CellId) -> Option<usize> {
        self.nodes.iter().position(|n| n.cell() == Some(id))
    }

    pub fn color_of(&self, id: CellId) -> Option<Color> {
        self.find(id).map(|i| self.nodes[i].color)
    }

    pub fn cells_with(&self, color: Color) -> Vec<CellId> {
        self.nodes
            .iter()
            .filter(|n| n.color == color)
            .filter_map(|n| n.cell())
            .collect()
    }
}

/// Color the hierarchy against `region`, pruning below Grey and White cells.
pub fn color_tree(h: &CubeHierarchy, region: &Region) -> HierarchyTree {
    color_tree_avoiding(h, region, |_| false)
}

/// Like [`color_tree`], but cells whose summary is unavailable are expanded so
/// their children can stand in for them.
pub fn color_tree_avoiding(
    h: &CubeHierarchy,
    region: &Region,
    unavailable: impl Fn(CellId) -> bool,
) -> HierarchyTree {
    let counts = RegionCounts::new(region);
    let config = h.config();
    let color = |id: CellId| {
        let b = config.cell(id).bounds;
        let inside = counts.count(&b);
        if inside == 0 {
            Color::White
        } else if inside == b.area() {
            Color::Grey
        } else {
            Color::Partial
        }
    };

    let root_color = if region.is_empty() {
        Color::White
    } else if region.len() == region.dims().area() {
        Color::Grey
    } else {
        Color::Partial
    };
    let mut nodes = vec![TreeNode {
        kind: NodeKind::Root,
        color: root_color,
        parent: None,
        children: Vec::new(),
    }];
    if root_color == Color::White {
        return HierarchyTree { nodes };
    }

    let mut stack: Vec<(CellId, usize)> = config.top_cells().map(|id| (id, 0)).collect();
    stack.reverse();
    while let Some((id, parent)) = stack.pop() {
        let c = color(id);
        let idx = nodes.len();
        nodes.push(TreeNode {
            kind: NodeKind::Cell(id),
            color: c,
            parent: Some(parent),
            children: Vec::new(),
        });
        nodes[parent].children.push(idx);
        let expand = match c {
            Color::Partial => true,
            Color::Grey | Color::White => id.level > 0 && unavailable(id),
        };
        if expand {
            let mut kids = config.children(id);
            kids.reverse();
            stack.extend(kids.into_iter().map(|k| (k, idx)));
        }
    }
    HierarchyTree { nodes }
}

/// Summed-area table over a region's indicator, for O(1) rectangle counts.
pub(crate) struct RegionCounts {
    width: usize,
    table: Vec<usize>,
}

impl RegionCounts {
    pub(crate) fn new(region: &Region) -> Self {
        let dims = region.dims();
        let w = dims.width + 1;
        let mut table = vec![0usize; w * (dims.height + 1)];
        for y in 0..dims.height {
            for x in 0..dims.width {
                let v = region.contains(GridCoord::new(x, y)) as usize;
                table[(y + 1) * w + x + 1] =
                    v + table[y * w + x + 1] + table[(y + 1) * w + x] - table[y * w + x];
            }
        }
        Self { width: w, table }
    }

    pub(crate) fn count(&self, r: &Rect) -> usize {
        let w = self.width;
        self.table[(r.y1 + 1) * w + r.x1 + 1] + self.table[r.y0 * w + r.x0]
            - self.table[r.y0 * w + r.x1 + 1]
            - self.table[(r.y1 + 1) * w + r.x0]
    }
}

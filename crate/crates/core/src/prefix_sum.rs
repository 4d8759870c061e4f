//! Prefix-sum cubes.
//!
//! Inside every level-`k` cell, each child (a level-`(k-1)` cell, or a grid
//! location for `k = 1`) stores the sum of all children of the same cell that
//! lie above and to the left of it, inclusive. The entry lives at the child's
//! junction, so it covers the rectangle from the cell's top-left corner to the
//! child's bottom-right corner.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridCoord, GridValues, Rect, Region};
use crate::hierarchy::{CellId, CubeHierarchy, HierarchyConfig, RegionCounts};
use crate::planner::{DataRef, PlanTerm, QueryPlan};
use crate::value::{self, Value};

/// One prefix-sum entry: child `(col, row)` of `cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PsPointId {
    pub cell: CellId,
    pub col: usize,
    pub row: usize,
}

impl PsPointId {
    pub const fn new(cell: CellId, col: usize, row: usize) -> Self {
        Self { cell, col, row }
    }

    pub fn level(&self) -> usize {
        self.cell.level
    }
}

#[derive(Debug, Clone)]
pub struct PrefixSumCube {
    cube: CubeHierarchy,
    /// `tables[k][cell]` is the row-major table of a level-`k` cell; index 0 unused.
    tables: Vec<Vec<Vec<Value>>>,
}

impl PrefixSumCube {
    pub fn build(values: &GridValues, config: HierarchyConfig) -> Result<Self> {
        let cube = CubeHierarchy::build(values, config)?;
        let config = cube.config().clone();
        let mut tables = vec![Vec::new()];
        for level in 1..=config.height() {
            let mut per_cell = Vec::with_capacity(config.level_len(level));
            for id in config.cells_at_level(level) {
                let (cols, rows) = child_shape(&config, id);
                let mut t = vec![value::zero(); cols * rows];
                for r in 0..rows {
                    for c in 0..cols {
                        let mut v = cube.value(child_id(&config, id, c, r));
                        if c > 0 {
                            v += t[r * cols + c - 1];
                        }
                        if r > 0 {
                            v += t[(r - 1) * cols + c];
                        }
                        if c > 0 && r > 0 {
                            v -= t[(r - 1) * cols + c - 1];
                        }
                        t[r * cols + c] = v;
                    }
                }
                per_cell.push(t);
            }
            tables.push(per_cell);
        }
        Ok(Self { cube, tables })
    }

    pub fn config(&self) -> &HierarchyConfig {
        self.cube.config()
    }

    /// The simple-sum cube over the same data.
    pub fn simple(&self) -> &CubeHierarchy {
        &self.cube
    }

    /// Children per row and column of `cell`.
    pub fn child_shape(&self, cell: CellId) -> (usize, usize) {
        child_shape(self.config(), cell)
    }

    pub fn entry(&self, p: PsPointId) -> Value {
        let (cols, _) = self.child_shape(p.cell);
        let ci = self.config().level_index(p.cell);
        self.tables[p.cell.level][ci][p.row * cols + p.col]
    }

    /// Grid location that stores the entry.
    pub fn location(&self, p: PsPointId) -> GridCoord {
        self.config().cell(child_id(self.config(), p.cell, p.col, p.row)).junction
    }

    /// Rectangle of grid locations summed by the entry.
    pub fn covered(&self, p: PsPointId) -> Rect {
        let cell = self.config().cell(p.cell).bounds;
        let child = self.config().cell(child_id(self.config(), p.cell, p.col, p.row)).bounds;
        Rect::new(cell.x0, cell.y0, child.x1, child.y1)
    }

    pub fn points(&self) -> impl Iterator<Item = PsPointId> + '_ {
        (1..=self.config().height()).flat_map(move |k| {
            self.config().cells_at_level(k).flat_map(move |id| {
                let (cols, rows) = self.child_shape(id);
                (0..rows).flat_map(move |r| (0..cols).map(move |c| PsPointId::new(id, c, r)))
            })
        })
    }

    /// Value a level-`level` slot carries at grid location `p`: the sum of the
    /// cell's children whose junction is above-left of `p`, inclusive.
    pub fn dominance_value(&self, level: usize, p: GridCoord) -> Value {
        let config = self.config();
        let cell = config.cell_containing(level, p);
        let (cols, rows) = self.child_shape(cell);
        let col = (0..cols)
            .take_while(|&c| config.cell(child_id(config, cell, c, 0)).junction.x <= p.x)
            .last();
        let row = (0..rows)
            .take_while(|&r| config.cell(child_id(config, cell, 0, r)).junction.y <= p.y)
            .last();
        match (col, row) {
            (Some(c), Some(r)) => self.entry(PsPointId::new(cell, c, r)),
            _ => value::zero(),
        }
    }

    /// Sum over children `rect` (in child coordinates) of `cell` from at most
    /// four entries: bottom-right + top-left-outer - top-right-outer - bottom-left-outer.
    pub fn rectangle_sum(&self, cell: CellId, rect: Rect) -> Result<(Value, Vec<PlanTerm>)> {
        if cell.level == 0 || cell.level > self.config().height() {
            return Err(Error::InvalidRect(format!("level {} has no prefix sums", cell.level)));
        }
        let (cols, rows) = self.child_shape(cell);
        if rect.x0 > rect.x1 || rect.y0 > rect.y1 || rect.x1 >= cols || rect.y1 >= rows {
            return Err(Error::InvalidRect(format!(
                "{rect} does not fit in a {cols}x{rows} cell"
            )));
        }
        let mut terms = vec![PlanTerm {
            point: DataRef::Prefix(PsPointId::new(cell, rect.x1, rect.y1)),
            coef: 1,
        }];
        if rect.x0 > 0 && rect.y0 > 0 {
            terms.push(PlanTerm {
                point: DataRef::Prefix(PsPointId::new(cell, rect.x0 - 1, rect.y0 - 1)),
                coef: 1,
            });
        }
        if rect.y0 > 0 {
            terms.push(PlanTerm {
                point: DataRef::Prefix(PsPointId::new(cell, rect.x1, rect.y0 - 1)),
                coef: -1,
            });
        }
        if rect.x0 > 0 {
            terms.push(PlanTerm {
                point: DataRef::Prefix(PsPointId::new(cell, rect.x0 - 1, rect.y1)),
                coef: -1,
            });
        }
        Ok((self.evaluate(&terms), terms))
    }

    /// Sum over an arbitrary region using level-1 entries only. The region is
    /// cut along level-1 cell boundaries; inside each cell the fragment costs
    /// one entry per corner, except corners on the cell's top or left edge,
    /// whose entries are implicitly zero.
    pub fn rectilinear_sum(&self, region: &Region) -> Result<(Value, Vec<PlanTerm>)> {
        if region.dims() != self.config().dims() {
            return Err(Error::DimensionMismatch("region and cube grids differ".into()));
        }
        let config = self.config();
        let mut terms = Vec::new();
        for cell in config.cells_at_level(1) {
            let b = config.cell(cell).bounds;
            if region.count_in_rect(&b) == 0 {
                continue;
            }
            terms.extend(self.fragment_terms(cell, |c, r| {
                region.contains(GridCoord::new(b.x0 + c, b.y0 + r))
            }));
        }
        Ok((self.evaluate(&terms), terms))
    }

    /// Signed entries of `cell` whose sum is the indicator `inside` over its children.
    pub(crate) fn fragment_terms(
        &self,
        cell: CellId,
        inside: impl Fn(usize, usize) -> bool,
    ) -> Vec<PlanTerm> {
        let (cols, rows) = self.child_shape(cell);
        let f = |c: usize, r: usize| -> i64 { (c < cols && r < rows && inside(c, r)) as i64 };
        let mut terms = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let coef = f(c, r) - f(c + 1, r) - f(c, r + 1) + f(c + 1, r + 1);
                if coef != 0 {
                    terms.push(PlanTerm {
                        point: DataRef::Prefix(PsPointId::new(cell, c, r)),
                        coef,
                    });
                }
            }
        }
        terms
    }

    pub fn evaluate(&self, terms: &[PlanTerm]) -> Value {
        terms.iter().fold(value::zero(), |acc, t| match t.point {
            DataRef::Prefix(p) => acc + value::scaled(t.coef, self.entry(p)),
            DataRef::Cell(id) => acc + value::scaled(t.coef, self.cube.value(id)),
        })
    }

    /// Minimum-cost plan built from disjoint pieces of the region.
    ///
    /// A piece is one of
    /// - a grey entry, whose covered rectangle lies inside the region (cost 1);
    /// - a re-colored entry: a straddling entry minus the white entries that
    ///   cancel its part outside the region (cost 1 + number of white entries);
    /// - the corner expansion of what is left of the region inside one level-1
    ///   cell (cost = number of entries).
    ///
    /// The search branches on the first uncovered location and memoizes on the
    /// uncovered set.
    pub fn ps_query_plan(&self, region: &Region) -> Result<PsPlan> {
        if region.dims() != self.config().dims() {
            return Err(Error::DimensionMismatch("region and cube grids differ".into()));
        }
        let pieces = self.static_pieces(region);
        let mut by_cell: Vec<Vec<usize>> = vec![Vec::new(); region.dims().area()];
        for (i, piece) in pieces.iter().enumerate() {
            for p in piece.area.cells() {
                by_cell[region.dims().index(p)].push(i);
            }
        }
        let mut search = PieceSearch {
            cube: self,
            pieces: &pieces,
            by_cell: &by_cell,
            memo: HashMap::new(),
        };
        let (cost, chosen) = search.best(region);
        let mut merged: HashMap<DataRef, i64> = HashMap::new();
        for piece in &chosen {
            for t in &piece.terms {
                *merged.entry(t.point).or_default() += t.coef;
            }
        }
        let mut terms: Vec<PlanTerm> = merged
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(point, coef)| PlanTerm { point, coef })
            .collect();
        terms.sort_by(|a, b| b.coef.cmp(&a.coef).then(a.point.cmp(&b.point)));
        let value = self.evaluate(&terms);
        Ok(PsPlan {
            plan: QueryPlan { terms, value },
            cost,
            pieces: chosen,
        })
    }

    /// Grey and re-colored candidate pieces for `region`.
    pub(crate) fn static_pieces(&self, region: &Region) -> Vec<Piece> {
        let counts = RegionCounts::new(region);
        let config = self.config();
        let mut out = Vec::new();
        for p in self.points() {
            let covered = self.covered(p);
            let inside = counts.count(&covered);
            if inside == 0 {
                continue;
            }
            let area = area_of(region, &covered);
            if inside == covered.area() {
                out.push(Piece {
                    area,
                    terms: vec![PlanTerm {
                        point: DataRef::Prefix(p),
                        coef: 1,
                    }],
                    cost: 1,
                    kind: PieceKind::Grey,
                });
                continue;
            }
            // Each child under the entry must be wholly in or wholly out, and
            // the out children must be closed toward the top-left.
            let mut out_child = vec![false; (p.col + 1) * (p.row + 1)];
            let mut ok = true;
            'scan: for r in 0..=p.row {
                for c in 0..=p.col {
                    let b = config.cell(child_id(config, p.cell, c, r)).bounds;
                    let n = counts.count(&b);
                    if n == 0 {
                        out_child[r * (p.col + 1) + c] = true;
                    } else if n != b.area() {
                        ok = false;
                        break 'scan;
                    }
                }
            }
            if !ok {
                continue;
            }
            let is_out = |c: usize, r: usize| c <= p.col && r <= p.row && out_child[r * (p.col + 1) + c];
            let lower_set = (0..=p.row).all(|r| {
                (0..=p.col).all(|c| {
                    !is_out(c, r) || ((c == 0 || is_out(c - 1, r)) && (r == 0 || is_out(c, r - 1)))
                })
            });
            if !lower_set {
                continue;
            }
            // Maximal out children form a staircase, left to right.
            let maximal: Vec<(usize, usize)> = (0..=p.col)
                .flat_map(|c| (0..=p.row).map(move |r| (c, r)))
                .filter(|&(c, r)| is_out(c, r) && !is_out(c + 1, r) && !is_out(c, r + 1))
                .collect();
            let mut terms = vec![PlanTerm {
                point: DataRef::Prefix(p),
                coef: 1,
            }];
            for &(c, r) in &maximal {
                terms.push(PlanTerm {
                    point: DataRef::Prefix(PsPointId::new(p.cell, c, r)),
                    coef: -1,
                });
            }
            for w in maximal.windows(2) {
                terms.push(PlanTerm {
                    point: DataRef::Prefix(PsPointId::new(p.cell, w[0].0, w[1].1)),
                    coef: 1,
                });
            }
            let cost = terms.len();
            out.push(Piece {
                area,
                terms,
                cost,
                kind: PieceKind::Recolored,
            });
        }
        out
    }

    /// Corner expansion of `residual` inside the level-1 cell holding `at`.
    pub(crate) fn closeout_piece(&self, residual: &Region, at: GridCoord) -> Piece {
        let config = self.config();
        let cell = config.cell_containing(1, at);
        let b = config.cell(cell).bounds;
        let terms = self.fragment_terms(cell, |c, r| residual.contains(GridCoord::new(b.x0 + c, b.y0 + r)));
        Piece {
            area: area_of(residual, &b),
            cost: terms.len(),
            terms,
            kind: PieceKind::CornerExpansion,
        }
    }
}

fn area_of(region: &Region, rect: &Rect) -> Region {
    let mut area = Region::empty(region.dims());
    for q in rect.coords().filter(|&q| region.contains(q)) {
        area.insert(q);
    }
    area
}

pub(crate) fn child_shape(config: &HierarchyConfig, cell: CellId) -> (usize, usize) {
    let f = config.fanout(cell.level);
    let (nx, ny) = config.level_shape(cell.level - 1);
    (
        ((cell.cx + 1) * f).min(nx) - cell.cx * f,
        ((cell.cy + 1) * f).min(ny) - cell.cy * f,
    )
}

pub(crate) fn child_id(config: &HierarchyConfig, cell: CellId, col: usize, row: usize) -> CellId {
    let f = config.fanout(cell.level);
    CellId::new(cell.level - 1, cell.cx * f + col, cell.cy * f + row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceKind {
    Grey,
    Recolored,
    CornerExpansion,
}

/// A set of signed entries summing exactly to `area`, a part of the query.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub area: Region,
    pub terms: Vec<PlanTerm>,
    pub cost: usize,
    pub kind: PieceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsPlan {
    /// Merged signed entries.
    pub plan: QueryPlan,
    /// Sum of piece costs.
    pub cost: usize,
    pub pieces: Vec<Piece>,
}

struct PieceSearch<'a> {
    cube: &'a PrefixSumCube,
    pieces: &'a [Piece],
    by_cell: &'a [Vec<usize>],
    memo: HashMap<Vec<u64>, (usize, Vec<Piece>)>,
}

impl PieceSearch<'_> {
    fn best(&mut self, residual: &Region) -> (usize, Vec<Piece>) {
        let Some(first) = residual.first_cell() else {
            return (0, Vec::new());
        };
        let key = residual.bits();
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut options: Vec<Piece> = self.by_cell[residual.dims().index(first)]
            .iter()
            .map(|&i| &self.pieces[i])
            .filter(|p| p.area.is_subset(residual))
            .cloned()
            .collect();
        options.push(self.cube.closeout_piece(residual, first));

        let mut best: Option<(usize, Vec<Piece>)> = None;
        for piece in options {
            if best.as_ref().is_some_and(|(c, _)| piece.cost >= *c) {
                continue;
            }
            let rest = residual.difference(&piece.area);
            let (sub, mut chosen) = self.best(&rest);
            let total = sub + piece.cost;
            if best.as_ref().is_none_or(|(c, _)| total < *c) {
                chosen.insert(0, piece);
                best = Some((total, chosen));
            }
        }
        let best = best.expect("the corner expansion always applies");
        self.memo.insert(key, best.clone());
        best
    }
}

//! Grid coordinates, sensor values and rectilinear regions.
//!
//! The origin `(0, 0)` is the top-left grid location; `x` grows to the right
//! and `y` grows downward. Corners of a region live on the lattice of cell
//! boundaries, so lattice point `(x, y)` is the top-left corner of grid
//! location `(x, y)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{self, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub x: usize,
    pub y: usize,
}

impl GridCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Chebyshev (8-neighbour hop) distance.
    pub fn hops(&self, other: &GridCoord) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

/// Row-major order: top to bottom, then left to right.
impl Ord for GridCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for GridCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "grid must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, p: GridCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn check(&self, p: GridCoord) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                coord: p,
                width: self.width,
                height: self.height,
            })
        }
    }

    #[inline]
    pub fn index(&self, p: GridCoord) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn coord(&self, index: usize) -> GridCoord {
        GridCoord::new(index % self.width, index / self.width)
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width - 1, self.height - 1)
    }

    /// All coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = GridCoord> + '_ {
        (0..self.area()).map(|i| self.coord(i))
    }
}

/// Inclusive axis-aligned rectangle of grid locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub const fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn from_corners(top_left: GridCoord, bottom_right: GridCoord) -> Result<Self> {
        if top_left.x > bottom_right.x || top_left.y > bottom_right.y {
            return Err(Error::InvalidRect(format!(
                "corner {top_left} is not above-left of {bottom_right}"
            )));
        }
        Ok(Self::new(top_left.x, top_left.y, bottom_right.x, bottom_right.y))
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn top_left(&self) -> GridCoord {
        GridCoord::new(self.x0, self.y0)
    }

    pub fn bottom_right(&self) -> GridCoord {
        GridCoord::new(self.x1, self.y1)
    }

    pub fn contains(&self, p: GridCoord) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 <= x1 && y0 <= y1).then(|| Rect::new(x0, y0, x1, y1))
    }

    pub fn coords(&self) -> impl Iterator<Item = GridCoord> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| GridCoord::new(x, y)))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})-({},{})", self.x0, self.y0, self.x1, self.y1)
    }
}

/// Level-0 data: one reading per grid location, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    dims: GridDims,
    values: Vec<Value>,
}

impl GridValues {
    pub fn new(dims: GridDims, values: Vec<Value>) -> Result<Self> {
        if values.len() != dims.area() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {}x{} grid, got {}",
                dims.area(),
                dims.width,
                dims.height,
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn from_fn(dims: GridDims, mut f: impl FnMut(GridCoord) -> Value) -> Self {
        let values = dims.coords().map(&mut f).collect();
        Self { dims, values }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn get(&self, p: GridCoord) -> Value {
        self.values[self.dims.index(p)]
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.values
    }

    /// Direct summation over a rectangle.
    pub fn rect_sum(&self, rect: &Rect) -> Value {
        rect.coords().fold(value::zero(), |acc, p| acc + self.get(p))
    }

    /// Direct summation over a region.
    pub fn region_sum(&self, region: &Region) -> Value {
        region.cells().fold(value::zero(), |acc, p| acc + self.get(p))
    }
}

/// A rectilinear region stored as an explicit set of grid locations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Region {
    dims: GridDims,
    mask: Vec<bool>,
    len: usize,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Region {}x{} ({} cells)", self.dims.width, self.dims.height, self.len)?;
        for y in 0..self.dims.height {
            for x in 0..self.dims.width {
                let c = if self.contains(GridCoord::new(x, y)) { '#' } else { '.' };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Region {
    pub fn empty(dims: GridDims) -> Self {
        Self {
            dims,
            mask: vec![false; dims.area()],
            len: 0,
        }
    }

    pub fn full(dims: GridDims) -> Self {
        Self {
            dims,
            mask: vec![true; dims.area()],
            len: dims.area(),
        }
    }

    /// Union of rectangles. Each rectangle must lie inside the grid.
    pub fn from_rects(dims: GridDims, rects: &[Rect]) -> Result<Self> {
        let mut region = Self::empty(dims);
        for rect in rects {
            if rect.x0 > rect.x1 || rect.y0 > rect.y1 {
                return Err(Error::InvalidRect(format!("inverted corners in {rect}")));
            }
            dims.check(rect.top_left())?;
            dims.check(rect.bottom_right())?;
            for p in rect.coords() {
                region.insert(p);
            }
        }
        Ok(region)
    }

    pub fn from_cells(dims: GridDims, cells: impl IntoIterator<Item = GridCoord>) -> Result<Self> {
        let mut region = Self::empty(dims);
        for p in cells {
            dims.check(p)?;
            region.insert(p);
        }
        Ok(region)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, p: GridCoord) -> bool {
        self.dims.contains(p) && self.mask[self.dims.index(p)]
    }

    /// Membership for possibly negative lattice-adjacent coordinates.
    pub(crate) fn contains_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && self.contains(GridCoord::new(x as usize, y as usize))
    }

    pub fn insert(&mut self, p: GridCoord) -> bool {
        let i = self.dims.index(p);
        if self.mask[i] {
            false
        } else {
            self.mask[i] = true;
            self.len += 1;
            true
        }
    }

    pub fn remove(&mut self, p: GridCoord) -> bool {
        let i = self.dims.index(p);
        if self.mask[i] {
            self.mask[i] = false;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = GridCoord> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.dims.coord(i))
    }

    pub fn first_cell(&self) -> Option<GridCoord> {
        self.mask.iter().position(|&m| m).map(|i| self.dims.coord(i))
    }

    pub fn union(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(&self, other: &Region, f: impl Fn(bool, bool) -> bool) -> Region {
        debug_assert_eq!(self.dims, other.dims);
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(&a, &b)| f(a, b)).collect();
        let len = mask.iter().filter(|&&m| m).count();
        Region { dims: self.dims, mask, len }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn contains_rect(&self, rect: &Rect) -> bool {
        rect.coords().all(|p| self.contains(p))
    }

    pub fn count_in_rect(&self, rect: &Rect) -> usize {
        rect.coords().filter(|&p| self.contains(p)).count()
    }

    pub fn bounding_box(&self) -> Option<Rect> {
        let mut cells = self.cells();
        let first = cells.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in cells {
            r.x0 = r.x0.min(p.x);
            r.x1 = r.x1.max(p.x);
            r.y0 = r.y0.min(p.y);
            r.y1 = r.y1.max(p.y);
        }
        Some(r)
    }

    /// Decompose into maximal horizontal runs, one rectangle per run.
    pub fn row_runs(&self) -> Vec<Rect> {
        let mut runs = Vec::new();
        for y in 0..self.dims.height {
            let mut x = 0;
            while x < self.dims.width {
                if self.contains(GridCoord::new(x, y)) {
                    let start = x;
                    while x + 1 < self.dims.width && self.contains(GridCoord::new(x + 1, y)) {
                        x += 1;
                    }
                    runs.push(Rect::new(start, y, x, y));
                }
                x += 1;
            }
        }
        runs
    }

    /// 4-connected components.
    pub fn components(&self) -> Vec<Region> {
        let mut seen = vec![false; self.dims.area()];
        let mut out = Vec::new();
        for start in self.cells() {
            if seen[self.dims.index(start)] {
                continue;
            }
            let mut comp = Region::empty(self.dims);
            let mut stack = vec![start];
            seen[self.dims.index(start)] = true;
            while let Some(p) = stack.pop() {
                comp.insert(p);
                let (x, y) = (p.x as isize, p.y as isize);
                for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                    if self.contains_signed(nx, ny) {
                        let q = GridCoord::new(nx as usize, ny as usize);
                        let i = self.dims.index(q);
                        if !seen[i] {
                            seen[i] = true;
                            stack.push(q);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn translate(&self, dx: isize, dy: isize) -> Result<Region> {
        let mut out = Region::empty(self.dims);
        for p in self.cells() {
            let (x, y) = (p.x as isize + dx, p.y as isize + dy);
            if x < 0 || y < 0 {
                return Err(Error::InvalidRect(format!("translation moves {p} off the grid")));
            }
            let q = GridCoord::new(x as usize, y as usize);
            self.dims.check(q)?;
            out.insert(q);
        }
        Ok(out)
    }

    /// Compact bitset key, used for memoization.
    pub(crate) fn bits(&self) -> Vec<u64> {
        let mut bits = vec![0u64; self.mask.len().div_ceil(64)];
        for (i, &m) in self.mask.iter().enumerate() {
            if m {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CornerKind {
    Convex,
    Concave,
}

/// A corner of a region on the cell-boundary lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub point: GridCoord,
    pub kind: CornerKind,
}

/// Number of the four grid locations around lattice point `(px, py)` that lie
/// in the region, plus whether the two inside cells (if two) are diagonal.
pub(crate) fn lattice_neighbourhood(region: &Region, px: usize, py: usize) -> (usize, bool) {
    let (x, y) = (px as isize, py as isize);
    let ul = region.contains_signed(x - 1, y - 1);
    let ur = region.contains_signed(x, y - 1);
    let ll = region.contains_signed(x - 1, y);
    let lr = region.contains_signed(x, y);
    let count = [ul, ur, ll, lr].iter().filter(|&&b| b).count();
    let diagonal = count == 2 && ul == lr;
    (count, diagonal)
}

/// Every lattice point where the region boundary turns.
///
/// One inside cell out of four gives a convex corner, three give a concave
/// corner. Two diagonally opposite inside cells form a pinch point, which is
/// reported as two convex corners at the same point (one per touching cell).
/// Output is in row-major lattice order.
pub fn classify_corners(region: &Region) -> Vec<Corner> {
    let dims = region.dims();
    let mut out = Vec::new();
    if region.is_empty() {
        return out;
    }
    for py in 0..=dims.height {
        for px in 0..=dims.width {
            let point = GridCoord::new(px, py);
            match lattice_neighbourhood(region, px, py) {
                (1, _) => out.push(Corner { point, kind: CornerKind::Convex }),
                (3, _) => out.push(Corner { point, kind: CornerKind::Concave }),
                (2, true) => {
                    out.push(Corner { point, kind: CornerKind::Convex });
                    out.push(Corner { point, kind: CornerKind::Convex });
                }
                _ => {}
            }
        }
    }
    out
}

//! Greedy division of a query region into hierarchy cells.

use crate::error::{Error, Result};
use crate::grid::{classify_corners, lattice_neighbourhood, CornerKind, GridCoord, Region};
use crate::hierarchy::{Cell, CellId, CubeHierarchy};

/// Disjoint hierarchy cells whose union is exactly `region`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCover {
    pub cells: Vec<Cell>,
    pub region: Region,
}

impl CellCover {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn ids(&self) -> Vec<CellId> {
        self.cells.iter().map(|c| c.id).collect()
    }
}

/// Repeatedly take a convex corner of the residual region and extract the
/// highest-level cell that touches it and still fits inside the residual.
///
/// Corners are scanned top to bottom, left to right. Individual grid locations
/// act as level-0 cells, so any region inside the grid can be covered.
pub fn greedy_divide(h: &CubeHierarchy, region: &Region) -> Result<CellCover> {
    if region.dims() != h.dims() {
        return Err(Error::DimensionMismatch("region and hierarchy grids differ".into()));
    }
    let config = h.config();
    let mut residual = region.clone();
    let mut cells = Vec::new();

    while !residual.is_empty() {
        let corner = classify_corners(&residual)
            .into_iter()
            .find(|c| c.kind == CornerKind::Convex)
            .expect("a non-empty region has a convex corner");
        let anchor = inside_cell_at(&residual, corner.point);
        let best = (0..=h.height())
            .rev()
            .map(|k| config.cell(config.cell_containing(k, anchor)))
            .find(|cell| residual.contains_rect(&cell.bounds))
            .expect("level-0 cell always fits");
        for p in best.bounds.coords() {
            residual.remove(p);
        }
        cells.push(best);
    }

    Ok(CellCover {
        cells,
        region: region.clone(),
    })
}

/// The grid location inside the region that makes `point` a convex corner.
/// For a pinch point the upper-left one is used.
fn inside_cell_at(region: &Region, point: GridCoord) -> GridCoord {
    debug_assert!(matches!(lattice_neighbourhood(region, point.x, point.y).0, 1 | 2));
    let (x, y) = (point.x as isize, point.y as isize);
    [(x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y)]
        .into_iter()
        .find(|&(cx, cy)| region.contains_signed(cx, cy))
        .map(|(cx, cy)| GridCoord::new(cx as usize, cy as usize))
        .expect("convex corner touches the region")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDims, GridValues, Rect};
    use crate::hierarchy::HierarchyConfig;
    use crate::value;

    fn cube(w: usize, h: usize, fanouts: &[usize]) -> CubeHierarchy {
        let dims = GridDims::new(w, h).unwrap();
        let values = GridValues::from_fn(dims, |p| value::from_i64((p.x * 3 + p.y) as i64));
        CubeHierarchy::build(&values, HierarchyConfig::new(dims, fanouts.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn single_level2_cell() {
        let h = cube(8, 8, &[2, 2]);
        let region = Region::from_rects(h.dims(), &[Rect::new(4, 0, 7, 3)]).unwrap();
        let cover = greedy_divide(&h, &region).unwrap();
        assert_eq!(cover.ids(), vec![CellId::new(2, 1, 0)]);
    }

    #[test]
    fn cover_is_exact_partition() {
        let h = cube(12, 12, &[3, 2]);
        let region = Region::from_rects(
            h.dims(),
            &[Rect::new(1, 0, 8, 5), Rect::new(6, 6, 11, 11), Rect::new(0, 9, 2, 10)],
        )
        .unwrap();
        let cover = greedy_divide(&h, &region).unwrap();
        let mut seen = Region::empty(h.dims());
        for c in &cover.cells {
            for p in c.bounds.coords() {
                assert!(seen.insert(p), "overlap at {p}");
            }
        }
        assert_eq!(seen, region);
    }

    #[test]
    fn deterministic() {
        let h = cube(8, 8, &[2, 2]);
        let region = Region::from_rects(h.dims(), &[Rect::new(1, 1, 6, 5)]).unwrap();
        assert_eq!(greedy_divide(&h, &region).unwrap(), greedy_divide(&h, &region).unwrap());
    }

    #[test]
    fn empty_region_gives_empty_cover() {
        let h = cube(4, 4, &[2]);
        assert!(greedy_divide(&h, &Region::empty(h.dims())).unwrap().is_empty());
    }
}

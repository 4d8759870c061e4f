//! Distributed construction, simulated.
//!
//! Every node waits for the packets of its upper, left and upper-left
//! neighbours, combines them slot by slot, keeps the slots it is responsible
//! for and broadcasts one packet of its own. Slot `i` of the packet built at
//! `p` holds the sum of the level-`(i-1)` summaries in `p`'s level-`i` cell
//! whose junction lies above and to the left of `p`, inclusive.
//!
//! Nodes are processed along anti-diagonals, so every node runs after all its
//! predecessors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridCoord, GridValues};
use crate::hierarchy::{CellId, CubeHierarchy, HierarchyConfig};
use crate::value::{self, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub origin: GridCoord,
    /// `slots[i - 1]` is the level-`i` slot.
    pub slots: Vec<Value>,
}

impl Packet {
    pub fn slot(&self, level: usize) -> Value {
        self.slots[level - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub coord: GridCoord,
    pub junction_level: usize,
    pub local: Value,
    /// `stored[i - 1]` is the level-`i` slot.
    pub stored: Vec<Value>,
}

impl NodeState {
    pub fn new(config: &HierarchyConfig, coord: GridCoord, local: Value) -> Self {
        Self {
            coord,
            junction_level: config.junction_level(coord),
            local,
            stored: Vec::new(),
        }
    }

    pub fn slot(&self, level: usize) -> Option<Value> {
        level.checked_sub(1).and_then(|i| self.stored.get(i).copied())
    }

    /// Summary of the level-`level` cell this node is junction of; level 0 is
    /// the node's own reading.
    pub fn summary(&self, level: usize) -> Option<Value> {
        match level {
            0 => Some(self.local),
            l if l <= self.junction_level => self.slot(l),
            _ => None,
        }
    }
}

/// Number of slots a node of junction level `k` keeps.
pub fn stored_len(config: &HierarchyConfig, k: usize, redundant: bool) -> usize {
    (k + 1 + redundant as usize).min(config.height())
}

/// One protocol step at `state.coord`. `pa`, `pb`, `pc` come from the upper,
/// left and upper-left neighbours; absent packets count as zero.
pub fn node_step(
    config: &HierarchyConfig,
    state: &NodeState,
    pa: Option<&Packet>,
    pb: Option<&Packet>,
    pc: Option<&Packet>,
    redundant: bool,
) -> Result<(NodeState, Packet)> {
    let GridCoord { x, y } = state.coord;
    let expect = |p: Option<&Packet>, dx: usize, dy: usize, name: &str| -> Result<()> {
        match p {
            Some(p) if x < dx || y < dy || p.origin != GridCoord::new(x - dx, y - dy) => Err(
                Error::Simulation(format!("{name} packet at {} came from {}", state.coord, p.origin)),
            ),
            Some(p) if p.slots.len() != config.height() => Err(Error::Simulation(format!(
                "packet from {} has {} slots",
                p.origin,
                p.slots.len()
            ))),
            _ => Ok(()),
        }
    };
    expect(pa, 0, 1, "upper")?;
    expect(pb, 1, 0, "left")?;
    expect(pc, 1, 1, "diagonal")?;

    let read = |p: Option<&Packet>, level: usize| p.map_or(value::zero(), |p| p.slot(level));
    let mut slots = Vec::with_capacity(config.height());
    for level in 1..=config.height() {
        let period = config.period(level);
        let left_edge = x % period == 0;
        let top_edge = y % period == 0;
        let mut v = value::zero();
        if !top_edge {
            v += read(pa, level);
        }
        if !left_edge {
            v += read(pb, level);
        }
        if !top_edge && !left_edge {
            v -= read(pc, level);
        }
        if config.is_junction(state.coord, level - 1) {
            v += if level == 1 { state.local } else { slots[level - 2] };
        }
        slots.push(v);
    }

    let keep = stored_len(config, state.junction_level, redundant);
    let next = NodeState {
        stored: slots[..keep].to_vec(),
        ..state.clone()
    };
    Ok((
        next,
        Packet {
            origin: state.coord,
            slots,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub sent: Vec<usize>,
    pub received: Vec<usize>,
    pub total_sent: usize,
    pub total_received: usize,
    pub max_received: usize,
    pub rounds: usize,
    pub total_stored: usize,
    pub max_stored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    config: HierarchyConfig,
    redundant: bool,
    states: Vec<NodeState>,
    pub stats: SimStats,
}

impl Construction {
    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn redundant(&self) -> bool {
        self.redundant
    }

    pub fn state(&self, p: GridCoord) -> &NodeState {
        &self.states[self.config.dims().index(p)]
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    /// Cell summaries as read from the junctions.
    pub fn to_hierarchy(&self) -> Result<CubeHierarchy> {
        let dims = self.config.dims();
        let values = GridValues::new(dims, self.states.iter().map(|s| s.local).collect())?;
        let mut cube = CubeHierarchy::build(&values, self.config.clone())?;
        for level in 1..=self.config.height() {
            for id in self.config.cells_at_level(level) {
                let j = self.config.cell(id).junction;
                let stored = self.state(j).summary(level).ok_or_else(|| {
                    Error::Simulation(format!("junction {j} lacks level {level}"))
                })?;
                cube.set_value(id, stored);
            }
        }
        Ok(cube)
    }

    /// One line per node: `x y k v1 .. vm` with the stored slots.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            out.push_str(&format!("{} {} {}", s.coord.x, s.coord.y, s.junction_level));
            for v in &s.stored {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Run the protocol over the whole grid.
pub fn run_construction(
    values: &GridValues,
    config: &HierarchyConfig,
    redundant: bool,
) -> Result<Construction> {
    let dims = config.dims();
    if values.dims() != dims {
        return Err(Error::DimensionMismatch(format!(
            "values are {}x{}, hierarchy is {}x{}",
            values.dims().width,
            values.dims().height,
            dims.width,
            dims.height
        )));
    }
    let n = dims.area();
    let mut packets: Vec<Option<Packet>> = vec![None; n];
    let mut states: Vec<Option<NodeState>> = vec![None; n];
    let mut received = vec![0usize; n];
    let rounds = dims.width + dims.height - 1;

    for t in 0..rounds {
        let x_lo = t.saturating_sub(dims.height - 1);
        let x_hi = t.min(dims.width - 1);
        for x in x_lo..=x_hi {
            let p = GridCoord::new(x, t - x);
            let pred = |dx: usize, dy: usize| -> Result<Option<&Packet>> {
                if p.x < dx || p.y < dy {
                    return Ok(None);
                }
                let q = GridCoord::new(p.x - dx, p.y - dy);
                packets[dims.index(q)]
                    .as_ref()
                    .map(Some)
                    .ok_or_else(|| Error::Simulation(format!("{p} scheduled before {q} sent")))
            };
            let (pa, pb, pc) = (pred(0, 1)?, pred(1, 0)?, pred(1, 1)?);
            received[dims.index(p)] = [pa, pb, pc].iter().filter(|q| q.is_some()).count();
            let start = NodeState::new(config, p, values.get(p));
            let (state, packet) = node_step(config, &start, pa, pb, pc, redundant)?;
            states[dims.index(p)] = Some(state);
            packets[dims.index(p)] = Some(packet);
        }
    }

    let states: Vec<NodeState> = states
        .into_iter()
        .map(|s| s.ok_or_else(|| Error::Simulation("node never scheduled".into())))
        .collect::<Result<_>>()?;
    let sent: Vec<usize> = packets.iter().map(|p| p.is_some() as usize).collect();
    let stats = SimStats {
        total_sent: sent.iter().sum(),
        total_received: received.iter().sum(),
        max_received: received.iter().copied().max().unwrap_or(0),
        rounds,
        total_stored: states.iter().map(|s| s.stored.len()).sum(),
        max_stored: states.iter().map(|s| s.stored.len()).max().unwrap_or(0),
        sent,
        received,
    };
    Ok(Construction {
        config: config.clone(),
        redundant,
        states,
        stats,
    })
}

/// Level-`level` summary as stored at the junction of `id`.
pub fn stored_summary(c: &Construction, id: CellId) -> Option<Value> {
    let j = c.config().cell(id).junction;
    c.state(j).summary(id.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;

    fn ones(w: usize, h: usize) -> GridValues {
        GridValues::from_fn(GridDims::new(w, h).unwrap(), |_| value::from_i64(1))
    }

    #[test]
    fn single_node() {
        let values = GridValues::from_fn(GridDims::new(1, 1).unwrap(), |_| value::from_i64(5));
        let config = HierarchyConfig::new(values.dims(), vec![1]).unwrap();
        let c = run_construction(&values, &config, false).unwrap();
        assert_eq!(c.state(GridCoord::new(0, 0)).stored, vec![value::from_i64(5)]);
        assert_eq!(c.stats.total_sent, 1);
        assert_eq!(c.stats.total_received, 0);
    }

    #[test]
    fn ones_six_by_six() {
        let values = ones(6, 6);
        let config = HierarchyConfig::new(values.dims(), vec![3, 2]).unwrap();
        let c = run_construction(&values, &config, false).unwrap();
        assert_eq!(c.state(GridCoord::new(2, 2)).summary(1), Some(value::from_i64(9)));
        assert_eq!(c.state(GridCoord::new(5, 5)).summary(2), Some(value::from_i64(36)));
        assert!(c.stats.sent.iter().all(|&s| s == 1));
        assert_eq!(c.stats.max_received, 3);
    }

    #[test]
    fn non_junction_keeps_one_slot() {
        let values = ones(6, 6);
        let config = HierarchyConfig::new(values.dims(), vec![3, 2]).unwrap();
        let c = run_construction(&values, &config, false).unwrap();
        let s = c.state(GridCoord::new(1, 1));
        assert_eq!(s.junction_level, 0);
        assert_eq!(s.stored.len(), 1);
        assert_eq!(s.stored[0], value::from_i64(4));
    }

    #[test]
    fn redundant_keeps_one_more() {
        let values = ones(6, 6);
        let config = HierarchyConfig::new(values.dims(), vec![3, 2]).unwrap();
        let c = run_construction(&values, &config, true).unwrap();
        assert_eq!(c.state(GridCoord::new(1, 1)).stored.len(), 2);
        assert_eq!(c.state(GridCoord::new(5, 5)).stored.len(), 2);
    }

    #[test]
    fn left_boundary_resets_slot() {
        let values = ones(6, 6);
        let config = HierarchyConfig::new(values.dims(), vec![3, 2]).unwrap();
        let c = run_construction(&values, &config, false).unwrap();
        // (3,1) starts a new level-1 cell: only (3,0) and itself count.
        assert_eq!(c.state(GridCoord::new(3, 1)).slot(1), Some(value::from_i64(2)));
    }

    #[test]
    fn wrong_origin_is_rejected() {
        let values = ones(3, 3);
        let config = HierarchyConfig::new(values.dims(), vec![3]).unwrap();
        let state = NodeState::new(&config, GridCoord::new(1, 1), value::from_i64(1));
        let bogus = Packet {
            origin: GridCoord::new(0, 0),
            slots: vec![value::zero()],
        };
        let err = node_step(&config, &state, Some(&bogus), None, None, false).unwrap_err();
        assert!(matches!(err, Error::Simulation(_)));
    }

    #[test]
    fn rebuilt_hierarchy_matches_centralized() {
        let dims = GridDims::new(9, 6).unwrap();
        let values = GridValues::from_fn(dims, |p| value::from_i64((p.x * 5 + p.y * 11 % 7) as i64));
        let config = HierarchyConfig::new(dims, vec![3, 2]).unwrap();
        let c = run_construction(&values, &config, false).unwrap();
        let central = CubeHierarchy::build(&values, config).unwrap();
        assert_eq!(c.to_hierarchy().unwrap(), central);
    }
}

//! JSON scenario files.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "grid": { "width": 8, "height": 8, "values": [1, 2, ...] },
//!   "hierarchy": { "fanouts": [2, 2, 2], "mode": "simple", "redundant": false },
//!   "regions": [ { "name": "G", "rects": [[0, 0, 3, 3], [6, 4, 7, 4]] } ],
//!   "failures": [ { "name": "f4", "specs": ["cell:2:0,4"] } ],
//!   "queries": [ { "name": "both", "regions": ["G", "H"] } ]
//! }
//! ```
//!
//! `values` may be replaced by `"random": { "seed": 7, "min": 0, "max": 99 }`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDims, GridValues, Rect, Region};
use crate::hierarchy::{CellId, HierarchyConfig};
use crate::recovery::{CellSpec, FailureSet};
use crate::value::{self, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Simple,
    Ps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchySpec {
    pub fanouts: Vec<usize>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub redundant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub rects: Vec<[usize; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    pub name: String,
    pub specs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub name: String,
    pub regions: Vec<String>,
}

/// Display alias for a cell, e.g. `{ "name": "b", "cell": "cell:1:6,4" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub name: String,
    pub cell: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Format version; only 1 is understood.
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub grid: GridSpec,
    pub hierarchy: HierarchySpec,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub failures: Vec<FailureSpec>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<LabelSpec>,
}

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| {
            Error::Scenario(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        if s.schema != SCHEMA_VERSION {
            return Err(Error::Scenario(format!("unsupported schema version {}", s.schema)));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn dims(&self) -> Result<GridDims> {
        GridDims::new(self.grid.width, self.grid.height)
    }

    pub fn values(&self) -> Result<GridValues> {
        let dims = self.dims()?;
        match (&self.grid.values, &self.grid.random) {
            (Some(v), None) => GridValues::new(dims, v.clone()),
            (None, Some(r)) => {
                if r.min > r.max {
                    return Err(Error::Scenario(format!("random range {}..{} is empty", r.min, r.max)));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
                Ok(GridValues::from_fn(dims, |_| value::from_i64(rng.gen_range(r.min..=r.max))))
            }
            _ => Err(Error::Scenario("grid needs exactly one of `values` or `random`".into())),
        }
    }

    pub fn config(&self) -> Result<HierarchyConfig> {
        HierarchyConfig::new(self.dims()?, self.hierarchy.fanouts.clone())
    }

    pub fn region(&self, name: &str) -> Result<Region> {
        let spec = self
            .regions
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Unresolved(format!("region `{name}`")))?;
        let rects: Vec<Rect> = spec.rects.iter().map(|&[x0, y0, x1, y1]| Rect::new(x0, y0, x1, y1)).collect();
        Region::from_rects(self.dims()?, &rects)
    }

    /// Cell behind a label.
    pub fn labelled(&self, name: &str) -> Result<CellId> {
        let spec = self
            .labels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Unresolved(format!("label `{name}`")))?;
        self.resolve_cell(&spec.cell)
    }

    /// Label of a cell, if it has one.
    pub fn label_of(&self, id: CellId) -> Option<&str> {
        self.labels
            .iter()
            .find(|l| self.resolve_cell(&l.cell).ok() == Some(id))
            .map(|l| l.name.as_str())
    }

    fn resolve_cell(&self, spec: &str) -> Result<CellId> {
        let config = self.config()?;
        match spec.parse::<CellSpec>()? {
            CellSpec::Node(p) => {
                config.dims().check(p)?;
                Ok(CellId::new(0, p.x, p.y))
            }
            c => Ok(*c.resolve(&config)?.cells.iter().next().expect("one cell")),
        }
    }

    /// Regions named directly or through a query.
    pub fn resolve_regions(&self, names: &[String]) -> Result<Vec<(String, Region)>> {
        let mut out = Vec::new();
        for name in names {
            if let Some(q) = self.queries.iter().find(|q| &q.name == name) {
                for r in &q.regions {
                    out.push((r.clone(), self.region(r)?));
                }
            } else {
                out.push((name.clone(), self.region(name)?));
            }
        }
        Ok(out)
    }

    /// A named failure set, or a literal cell spec.
    pub fn failure(&self, name_or_spec: &str) -> Result<FailureSet> {
        let config = self.config()?;
        if let Some(f) = self.failures.iter().find(|f| f.name == name_or_spec) {
            let mut set = FailureSet::new();
            for s in &f.specs {
                set.extend(&s.parse::<CellSpec>()?.resolve(&config)?);
            }
            return Ok(set);
        }
        if name_or_spec.starts_with("node:") || name_or_spec.starts_with("cell:") {
            return name_or_spec.parse::<CellSpec>()?.resolve(&config);
        }
        Err(Error::Unresolved(format!("failure `{name_or_spec}`")))
    }

    pub fn failures_from(&self, names: &[String]) -> Result<FailureSet> {
        let mut set = FailureSet::new();
        for n in names {
            set.extend(&self.failure(n)?);
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "schema": 1,
        "grid": { "width": 4, "height": 2, "values": [1, 2, 3, 4, 5, 6, 7, 8] },
        "hierarchy": { "fanouts": [2] },
        "regions": [ { "name": "left", "rects": [[0, 0, 1, 1]] } ],
        "failures": [ { "name": "corner", "specs": ["node:0,0"] } ],
        "queries": [ { "name": "all", "regions": ["left"] } ],
        "labels": [ { "name": "L", "cell": "cell:1:0,0" }, { "name": "p", "cell": "node:3,1" } ]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let s = Scenario::from_json(SMALL).unwrap();
        assert_eq!(s.hierarchy.mode, Mode::Simple);
        let values = s.values().unwrap();
        assert_eq!(values.region_sum(&s.region("left").unwrap()), value::from_i64(1 + 2 + 5 + 6));
        assert_eq!(s.resolve_regions(&["all".into()]).unwrap().len(), 1);
        assert_eq!(s.failure("corner").unwrap().nodes.len(), 1);
        assert_eq!(s.failure("cell:1:2,0").unwrap().cells.len(), 1);
        assert_eq!(s.labelled("L").unwrap(), CellId::new(1, 0, 0));
        assert_eq!(s.labelled("p").unwrap(), CellId::new(0, 3, 1));
        assert_eq!(s.label_of(CellId::new(1, 0, 0)), Some("L"));
    }

    #[test]
    fn unknown_names() {
        let s = Scenario::from_json(SMALL).unwrap();
        assert!(matches!(s.region("nope"), Err(Error::Unresolved(_))));
        assert!(matches!(s.failure("nope"), Err(Error::Unresolved(_))));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = Scenario::from_json("{\n  \"grid\": }").unwrap_err();
        match err {
            Error::Scenario(msg) => assert!(msg.starts_with("line 2 column"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_other_schema_versions() {
        let err = Scenario::from_json(&SMALL.replace(r#""schema": 1"#, r#""schema": 2"#)).unwrap_err();
        assert!(matches!(err, Error::Scenario(_)));
        let s = Scenario::from_json(&SMALL.replace(r#""schema": 1,"#, "")).unwrap();
        assert_eq!(s.schema, SCHEMA_VERSION);
    }

    #[test]
    fn random_grid_is_seeded() {
        let text = SMALL.replace(
            r#""values": [1, 2, 3, 4, 5, 6, 7, 8]"#,
            r#""random": { "seed": 3, "min": -5, "max": 5 }"#,
        );
        let s = Scenario::from_json(&text).unwrap();
        let a = s.values().unwrap();
        assert_eq!(a, s.values().unwrap());
        assert!(a.as_slice().iter().all(|&v| v >= value::from_i64(-5) && v <= value::from_i64(5)));
    }

    #[test]
    fn round_trip() {
        let s = Scenario::from_json(SMALL).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}

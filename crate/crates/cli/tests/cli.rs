use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cubenet::scenario::Scenario;
use cubenet::{CellId, CubeHierarchy, PrefixSumCube, PsPointId};
use serde_json::Value as Json;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn cubenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubenet")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = cubenet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_report(args: &[&str]) -> Json {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut full = args.to_vec();
    full.extend(["--json", path.to_str().unwrap()]);
    stdout(&full);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn load(name: &str) -> (Scenario, CubeHierarchy) {
    let s = Scenario::load(&fixture(name)).unwrap();
    let h = CubeHierarchy::build(&s.values().unwrap(), s.config().unwrap()).unwrap();
    (s, h)
}

fn as_i64(v: &Json) -> i64 {
    v.as_i64().or_else(|| v.as_f64().map(|f| f as i64)).expect("number")
}

/// Signed sum of a plan's terms, read back from the cube rather than the report.
fn reevaluate(h: &CubeHierarchy, plan: &Json) -> i64 {
    plan["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let id = CellId::new(
                t["level"].as_u64().unwrap() as usize,
                t["cx"].as_u64().unwrap() as usize,
                t["cy"].as_u64().unwrap() as usize,
            );
            t["coef"].as_i64().unwrap() * cubenet::value::to_f64(h.value(id)) as i64
        })
        .sum()
}

fn naive(s: &Scenario, region: &str) -> i64 {
    cubenet::value::to_f64(s.values().unwrap().region_sum(&s.region(region).unwrap())) as i64
}

#[test]
fn plan_matches_golden_output() {
    let f = fixture("hierarchy3.json");
    let out = stdout(&["plan", "--scenario", f.to_str().unwrap(), "--region", "G"]);
    assert_eq!(out, include_str!("golden/plan_g.txt"));
    assert!(out.contains("size: 4\n"));
    let aliases = out.lines().find_map(|l| l.strip_prefix("aliases: ")).unwrap();
    let mut terms: Vec<&str> = aliases.split(" = ").next().unwrap().split(' ').collect::<Vec<_>>().chunks(2).map(|c| c[1]).collect();
    terms.sort_unstable();
    assert_eq!(terms, ["1", "4", "b", "iv"]);
    assert!(aliases.contains("- iv"));
}

#[test]
fn joint_plan_matches_golden_output() {
    let f = fixture("hierarchy3.json");
    let out = stdout(&["plan", "--scenario", f.to_str().unwrap(), "--region", "pair"]);
    assert_eq!(out, include_str!("golden/plan_pair.txt"));
    assert!(out.contains("retrieval: 5 (joint; individually optimized: 6)"));
}

#[test]
fn json_plans_reevaluate_to_the_naive_sum() {
    for (file, regions) in [("hierarchy3.json", vec!["G", "Q2"]), ("step_region.json", vec!["step"])] {
        let (s, h) = load(file);
        let f = fixture(file);
        let mut args = vec!["plan", "--scenario", f.to_str().unwrap()];
        for r in &regions {
            args.extend(["--region", r]);
        }
        let report = json_report(&args);
        let queries = report["queries"].as_array().unwrap();
        assert_eq!(queries.len(), regions.len());
        for (q, r) in queries.iter().zip(&regions) {
            assert_eq!(q["name"], *r);
            assert_eq!(reevaluate(&h, q), naive(&s, r));
            assert_eq!(as_i64(&q["value"]), naive(&s, r));
            assert_eq!(q["size"].as_u64().unwrap() as usize, q["terms"].as_array().unwrap().len());
        }
    }
}

#[test]
fn json_ps_plan_reevaluates() {
    let s = Scenario::load(&fixture("prefix_matrix.json")).unwrap();
    let ps = PrefixSumCube::build(&s.values().unwrap(), s.config().unwrap()).unwrap();
    let f = fixture("prefix_matrix.json");
    let report = json_report(&["ps-plan", "--scenario", f.to_str().unwrap(), "--region", "inner"]);
    let mut total = 0;
    for t in report["terms"].as_array().unwrap() {
        let u = |k: &str| t[k].as_u64().unwrap() as usize;
        let p = PsPointId::new(CellId::new(u("level"), u("cx"), u("cy")), u("col"), u("row"));
        let v = cubenet::value::to_f64(ps.entry(p)) as i64;
        assert_eq!(as_i64(&t["value"]), v);
        total += t["coef"].as_i64().unwrap() * v;
    }
    assert_eq!(total, 81);
    assert_eq!(as_i64(&report["value"]), naive(&s, "inner"));
    assert_eq!(report["cost"], 4);
}

#[test]
fn construct_single_node() {
    let f = fixture("single.json");
    let out = stdout(&["construct", "--scenario", f.to_str().unwrap()]);
    assert!(out.contains("sent: 1\n") && out.contains("received: 0\n"), "{out}");
    let report = json_report(&["construct", "--scenario", f.to_str().unwrap()]);
    assert_eq!(report["stats"]["sent"], 1);
    assert_eq!(report["stats"]["received"], 0);
}

#[test]
fn construct_dump_lines() {
    let f = fixture("ones6.json");
    let out = stdout(&["construct", "--scenario", f.to_str().unwrap(), "--dump", "--mode", "ps"]);
    let dump: Vec<&str> = out.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).collect();
    assert_eq!(dump.len(), 36);
    // Bottom-right node is the top-level junction: stores both slots, the last being the grid total.
    let last: Vec<&str> = dump.last().unwrap().split(' ').collect();
    assert_eq!(&last[..3], ["5", "5", "2"]);
    assert_eq!(*last.last().unwrap(), "36");
    assert!(out.contains("max received per node: 3"));
}

#[test]
fn recover_reports_estimate() {
    let f = fixture("hierarchy3.json");
    let out = stdout(&["recover", "--scenario", f.to_str().unwrap(), "--region", "G", "--fail", "lose2and4"]);
    assert!(out.starts_with("exact path: INFEASIBLE "), "{out}");
    assert!(out.contains("kind: estimate\n"));
    let report = json_report(&["recover", "--scenario", f.to_str().unwrap(), "--region", "G", "--fail", "lose2and4"]);
    let area = &report["recovery"]["areas"][0];
    assert_eq!(area["requested"].as_u64().unwrap() * 2, area["recovered"].as_u64().unwrap());
}

#[test]
fn plan_with_failures_routes_around_them() {
    let (s, h) = load("hierarchy3.json");
    let f = fixture("hierarchy3.json");
    let report = json_report(&["plan", "--scenario", f.to_str().unwrap(), "--region", "G", "--fail", "lose4"]);
    let q = &report["queries"][0];
    assert_eq!(reevaluate(&h, q), naive(&s, "G"));
    assert!(q["terms"].as_array().unwrap().iter().all(|t| t["label"] != "4"));
    let out = stdout(&["plan", "--scenario", f.to_str().unwrap(), "--region", "G", "--fail", "lose2and4"]);
    assert!(out.contains("INFEASIBLE L2(0,4)"), "{out}");
}

#[test]
fn svg_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("hierarchy3.json");
    let render = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["render", "--scenario", f.to_str().unwrap(), "--svg", path.to_str().unwrap()];
        args.extend(extra);
        stdout(&args);
        std::fs::read_to_string(path).unwrap()
    };
    let a = render("a.svg", &["--region", "G"]);
    assert_eq!(a, render("b.svg", &["--region", "G"]));
    for label in ["+1<", "+4<", "+b<", "-iv<"] {
        assert!(a.contains(label), "missing {label}");
    }
    let grid_only = render("c.svg", &[]);
    assert!(!grid_only.contains("<text") && !grid_only.contains("class=\"region\""));
}

#[test]
fn seed_overrides_random_grid() {
    let f = fixture("step_region.json");
    let a = json_report(&["plan", "--scenario", f.to_str().unwrap(), "--region", "step", "--seed", "1"]);
    let b = json_report(&["plan", "--scenario", f.to_str().unwrap(), "--region", "step", "--seed", "2"]);
    assert_eq!(a, json_report(&["plan", "--scenario", f.to_str().unwrap(), "--region", "step", "--seed", "1"]));
    assert_ne!(a["queries"][0]["value"], b["queries"][0]["value"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"grid\": [\n}").unwrap();
    let bad_fanout = dir.path().join("fanout.json");
    std::fs::write(
        &bad_fanout,
        r#"{ "grid": { "width": 2, "height": 2, "values": [1, 2, 3, 4] }, "hierarchy": { "fanouts": [0] } }"#,
    )
    .unwrap();
    let h3 = fixture("hierarchy3.json");
    let h3 = h3.to_str().unwrap();
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["plan", "--scenario", bad.to_str().unwrap(), "--region", "G"], 2),
        (vec!["plan", "--scenario", h3], 2),
        (vec!["plan", "--scenario", h3, "--region", "nope"], 3),
        (vec!["recover", "--scenario", h3, "--region", "G", "--fail", "nope"], 3),
        (vec!["recover", "--scenario", h3, "--region", "G", "--fail", "node:8,0"], 4),
        (vec!["construct", "--scenario", bad_fanout.to_str().unwrap()], 5),
        (vec!["plan", "--scenario", h3, "--region", "G", "--fail", "cell:1:1,0"], 5),
        (vec!["divide", "--scenario", "missing.json", "--region", "G"], 6),
    ];
    for (args, code) in cases {
        let out = cubenet(&args);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let err = String::from_utf8(cubenet(&["plan", "--scenario", bad.to_str().unwrap(), "--region", "G"]).stderr).unwrap();
    assert!(err.contains("line 3 column"), "{err}");
}

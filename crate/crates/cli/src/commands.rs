use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::Path;

use cubenet::planner::{plan_avoiding, plan_region};
use cubenet::prefix_sum::PieceKind;
use cubenet::scenario::{Mode, Scenario};
use cubenet::sim::stored_summary;
use cubenet::{
    color_tree, combined_plan, greedy_divide, recover_region, run_construction, CellId, CubeHierarchy, DataRef,
    Error, FailureSet, GridValues, Infeasible, PlanTerm, PrefixSumCube, QueryPlan, RecoveryResult, Region,
};
use serde_json::{json, Value as Json};

use crate::format::{cell_json, cell_name, plan_json, plan_lines, ps_name, ps_term_json, signed_sum};
use crate::svg::{render_svg, Layers};
use crate::{write_file, CliResult, Report};

fn load(s: &Scenario) -> CliResult<(GridValues, CubeHierarchy)> {
    let values = s.values()?;
    let h = CubeHierarchy::build(&values, s.config()?)?;
    Ok((values, h))
}

fn labels(s: &Scenario) -> CliResult<BTreeMap<CellId, String>> {
    let mut out = BTreeMap::new();
    for l in &s.labels {
        out.insert(s.labelled(&l.name)?, l.name.clone());
    }
    Ok(out)
}

fn failures(s: &Scenario, h: &CubeHierarchy, specs: &[String]) -> CliResult<FailureSet> {
    let set = s.failures_from(specs)?;
    set.validate(h.config())?;
    Ok(set)
}

fn write_svg(s: &Scenario, h: &CubeHierarchy, path: &Path, layers: Layers<'_>) -> CliResult<usize> {
    let labels = labels(s)?;
    let doc = render_svg(h, Layers { labels: Some(&labels), ..layers });
    write_file(path, &doc)?;
    Ok(doc.len())
}

fn blocking_line(h: &CubeHierarchy, inf: &Infeasible) -> String {
    let cells: Vec<String> = inf.blocking.iter().map(|&id| cell_name(h.config(), id)).collect();
    format!("INFEASIBLE {}", cells.join(" "))
}

fn blocking_json(s: &Scenario, h: &CubeHierarchy, inf: &Infeasible) -> Json {
    inf.blocking.iter().map(|&id| cell_json(s, h, id)).collect()
}

pub fn divide(s: &Scenario, name: &str, svg: Option<&Path>) -> CliResult<Report> {
    let (values, h) = load(s)?;
    let region = s.region(name)?;
    let cover = greedy_divide(&h, &region)?;
    let mut text = String::new();
    for cell in &cover.cells {
        let _ = writeln!(text, "{}:{}", cell.id.level, cell.bounds);
    }
    let _ = writeln!(text, "size: {} cells covering {} locations", cover.len(), region.len());
    let plan = QueryPlan {
        terms: cover.ids().into_iter().map(|id| PlanTerm { point: DataRef::Cell(id), coef: 1 }).collect(),
        value: values.region_sum(&region),
    };
    if let Some(path) = svg {
        write_svg(s, &h, path, Layers { region: Some(&region), plan: Some(&plan), ..Layers::default() })?;
    }
    let json = json!({
        "command": "divide",
        "region": name,
        "size": cover.len(),
        "locations": region.len(),
        "value": plan.value,
        "cells": cover.ids().into_iter().map(|id| cell_json(s, &h, id)).collect::<Vec<_>>(),
    });
    Ok(Report { text, json })
}

/// Outcome of planning one region around failures.
enum Outcome {
    Exact(QueryPlan),
    Blocked(Infeasible, RecoveryResult),
}

fn plan_around(h: &CubeHierarchy, failed: &FailureSet, region: &Region) -> cubenet::Result<Outcome> {
    match plan_avoiding(h, region, &failed.unavailable(h.config())) {
        Ok(plan) => Ok(Outcome::Exact(plan)),
        Err(inf) => Ok(Outcome::Blocked(inf, recover_region(h, failed, region)?)),
    }
}

pub fn plan(s: &Scenario, names: &[String], fail: &[String], svg: Option<&Path>) -> CliResult<Report> {
    let (_, h) = load(s)?;
    let regions = s.resolve_regions(names)?;
    let mut text = String::new();
    let mut queries = Vec::new();
    let mut retrieval = BTreeSet::new();
    let mut extra = serde_json::Map::new();
    let mut first_plan = None;

    if fail.is_empty() {
        let separate: Vec<QueryPlan> = regions.iter().map(|(_, r)| plan_region(&h, r)).collect();
        let individual: BTreeSet<CellId> = separate.iter().flat_map(|p| p.cells()).collect();
        let (plans, joint) = if regions.len() > 1 {
            let trees: Vec<_> = regions.iter().map(|(_, r)| color_tree(&h, r)).collect();
            let out = combined_plan(&trees, &h).expect("graphs without failures always have a finite cut");
            (out.plans, out.joint)
        } else {
            (separate, false)
        };
        for ((name, region), plan) in regions.iter().zip(&plans) {
            let _ = writeln!(text, "query {name} ({} locations)", region.len());
            text.push_str(&plan_lines(s, &h, plan));
            let _ = writeln!(text, "size: {}", plan.size());
            retrieval.extend(plan.cells());
            let mut q = plan_json(s, &h, plan);
            q["name"] = name.as_str().into();
            queries.push(q);
        }
        if regions.len() > 1 {
            let how = if joint { "joint" } else { "separate" };
            let _ = writeln!(text, "retrieval: {} ({how}; individually optimized: {})", retrieval.len(), individual.len());
            extra.insert("joint".into(), joint.into());
            extra.insert("individual".into(), individual.len().into());
        } else {
            let _ = writeln!(text, "retrieval: {}", retrieval.len());
        }
        first_plan = plans.into_iter().next();
    } else {
        let failed = failures(s, &h, fail)?;
        // Queries under failures are planned independently.
        let outcomes: Vec<cubenet::Result<Outcome>> = std::thread::scope(|scope| {
            let handles: Vec<_> = regions
                .iter()
                .map(|(_, r)| {
                    let (h, failed) = (&h, &failed);
                    scope.spawn(move || plan_around(h, failed, r))
                })
                .collect();
            handles.into_iter().map(|t| t.join().expect("planner thread")).collect()
        });
        for ((name, region), outcome) in regions.iter().zip(outcomes) {
            let _ = writeln!(text, "query {name} ({} locations)", region.len());
            match outcome? {
                Outcome::Exact(plan) => {
                    text.push_str(&plan_lines(s, &h, &plan));
                    let _ = writeln!(text, "size: {}", plan.size());
                    retrieval.extend(plan.cells());
                    let mut q = plan_json(s, &h, &plan);
                    q["name"] = name.as_str().into();
                    queries.push(q);
                    first_plan.get_or_insert(plan);
                }
                Outcome::Blocked(inf, r) => {
                    let _ = writeln!(text, "{}", blocking_line(&h, &inf));
                    text.push_str(&recovery_lines(&h, &r));
                    let mut q = recovery_json(s, &h, &r);
                    q["name"] = name.as_str().into();
                    q["infeasible"] = blocking_json(s, &h, &inf);
                    queries.push(q);
                }
            }
        }
        let _ = writeln!(text, "retrieval: {}", retrieval.len());
    }

    if let Some(path) = svg {
        let failed_area = if fail.is_empty() { None } else { Some(failures(s, &h, fail)?.area(h.config())) };
        let layers = Layers {
            region: regions.first().map(|(_, r)| r),
            failed: failed_area.as_ref(),
            plan: first_plan.as_ref(),
            labels: None,
        };
        write_svg(s, &h, path, layers)?;
    }
    let mut json = json!({
        "command": "plan",
        "queries": queries,
        "retrieval": retrieval.iter().map(|&id| cell_json(s, &h, id)).collect::<Vec<_>>(),
        "retrieval_size": retrieval.len(),
    });
    json.as_object_mut().expect("object").extend(extra);
    Ok(Report { text, json })
}

pub fn ps_plan(s: &Scenario, name: &str) -> CliResult<Report> {
    let values = s.values()?;
    let ps = PrefixSumCube::build(&values, s.config()?)?;
    let region = s.region(name)?;
    let out = ps.ps_query_plan(&region)?;
    let config = ps.config();
    let mut text = String::new();
    let mut terms = Vec::new();
    let mut named = Vec::new();
    for t in &out.plan.terms {
        let DataRef::Prefix(p) = t.point else {
            unreachable!("prefix-sum plans only read prefix entries")
        };
        let (v, covered) = (ps.entry(p), ps.covered(p));
        let sign = if t.coef < 0 { '-' } else { '+' };
        let _ = writeln!(text, "{sign} {} covers {covered} = {v}", ps_name(config, p));
        named.push((t.coef, ps_name(config, p)));
        terms.push(ps_term_json(config, t, v, covered));
    }
    let _ = writeln!(text, "{}", signed_sum(&named, out.plan.value));
    let count = |k: PieceKind| out.pieces.iter().filter(|p| p.kind == k).count();
    let _ = writeln!(text, "points: {}", out.plan.size());
    let _ = writeln!(
        text,
        "cost: {} (pieces: {} grey, {} recolored, {} corner)",
        out.cost,
        count(PieceKind::Grey),
        count(PieceKind::Recolored),
        count(PieceKind::CornerExpansion)
    );
    let json = json!({
        "command": "ps-plan",
        "region": name,
        "value": out.plan.value,
        "size": out.plan.size(),
        "cost": out.cost,
        "terms": terms,
    });
    Ok(Report { text, json })
}

pub fn construct(s: &Scenario, redundant: bool, mode: Mode, dump: bool) -> CliResult<Report> {
    let (values, central) = load(s)?;
    let config = central.config();
    let c = run_construction(&values, config, redundant)?;
    let mut checked = 0;
    for level in 1..=config.height() {
        for id in config.cells_at_level(level) {
            if stored_summary(&c, id) != Some(central.value(id)) {
                return Err(Error::Simulation(format!("junction of {} disagrees with the central cube", config.cell(id))).into());
            }
            checked += 1;
        }
    }
    if mode == Mode::Ps {
        let ps = PrefixSumCube::build(&values, config.clone())?;
        for st in c.states() {
            for (i, &v) in st.stored.iter().enumerate().take(config.height()) {
                if v != ps.dominance_value(i + 1, st.coord) {
                    return Err(Error::Simulation(format!("level-{} entry at {} disagrees with the prefix-sum cube", i + 1, st.coord)).into());
                }
                checked += 1;
            }
        }
    }
    let st = &c.stats;
    let max_sent = st.sent.iter().copied().max().unwrap_or(0);
    let mut text = String::new();
    let _ = writeln!(text, "nodes: {}", values.dims().area());
    let _ = writeln!(text, "sent: {}", st.total_sent);
    let _ = writeln!(text, "received: {}", st.total_received);
    let _ = writeln!(text, "max sent per node: {max_sent}");
    let _ = writeln!(text, "max received per node: {}", st.max_received);
    let _ = writeln!(text, "rounds: {}", st.rounds);
    let _ = writeln!(text, "stored: {}", st.total_stored);
    let _ = writeln!(text, "max stored per node: {}", st.max_stored);
    let mode_name = if mode == Mode::Ps { "ps" } else { "simple" };
    let _ = writeln!(text, "verified: {checked} stored values ({mode_name}{})", if redundant { ", redundant" } else { "" });
    if dump {
        text.push_str(&c.dump());
    }
    let mut json = json!({
        "command": "construct",
        "mode": mode_name,
        "redundant": redundant,
        "verified": checked,
        "stats": {
            "nodes": values.dims().area(),
            "sent": st.total_sent,
            "received": st.total_received,
            "max_sent": max_sent,
            "max_received": st.max_received,
            "rounds": st.rounds,
            "stored": st.total_stored,
            "max_stored": st.max_stored,
        },
    });
    if dump {
        json["nodes"] = c
            .states()
            .iter()
            .map(|n| json!({ "x": n.coord.x, "y": n.coord.y, "k": n.junction_level, "stored": n.stored }))
            .collect();
    }
    Ok(Report { text, json })
}

fn recovery_lines(h: &CubeHierarchy, r: &RecoveryResult) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "kind: {}", r.kind);
    match r.value {
        Some(v) => {
            let _ = writeln!(text, "value: {v}");
        }
        None => text.push_str("value: none\n"),
    }
    let _ = writeln!(text, "requested area (Q_A): {} locations", r.requested_area);
    let _ = writeln!(text, "recovered area (A): {} locations", r.recovered_area);
    let _ = writeln!(text, "points read: {}", r.points_read);
    for (i, a) in r.areas.iter().enumerate() {
        let _ = write!(text, "area {}: {} Q_A={}", i + 1, a.kind, a.requested.len());
        match (&a.recovered, a.recovered_sum, a.estimate) {
            (Some(ar), Some(sum), Some(est)) => {
                let _ = writeln!(text, " A={} V(A)={sum} contribution={est}", ar.len());
            }
            _ => text.push_str(" A=none\n"),
        }
    }
    let live: Vec<(i64, String)> = crate::format::cell_terms(&r.live_plan)
        .into_iter()
        .map(|(id, c)| (c, cell_name(h.config(), id)))
        .collect();
    let _ = writeln!(text, "live part: {}", signed_sum(&live, r.live_plan.value));
    text
}

fn recovery_json(s: &Scenario, h: &CubeHierarchy, r: &RecoveryResult) -> Json {
    json!({
        "kind": r.kind.to_string(),
        "value": r.value,
        "exact": r.exact,
        "requested_area": r.requested_area,
        "recovered_area": r.recovered_area,
        "points_read": r.points_read,
        "live_plan": plan_json(s, h, &r.live_plan),
        "areas": r.areas.iter().map(|a| json!({
            "kind": a.kind.to_string(),
            "requested": a.requested.len(),
            "recovered": a.recovered.as_ref().map(Region::len),
            "recovered_sum": a.recovered_sum,
            "estimate": a.estimate,
        })).collect::<Vec<_>>(),
    })
}

pub fn recover(s: &Scenario, name: &str, fail: &[String]) -> CliResult<Report> {
    let (_, h) = load(s)?;
    let region = s.region(name)?;
    let failed = failures(s, &h, fail)?;
    let mut text = String::new();
    let mut json = json!({ "command": "recover", "region": name });
    match plan_avoiding(&h, &region, &failed.unavailable(h.config())) {
        Ok(plan) => {
            let _ = write!(text, "exact path: {}", plan_lines(s, &h, &plan));
            json["exact_path"] = plan_json(s, &h, &plan);
        }
        Err(inf) => {
            let _ = writeln!(text, "exact path: {}", blocking_line(&h, &inf));
            json["infeasible"] = blocking_json(s, &h, &inf);
        }
    }
    let r = recover_region(&h, &failed, &region)?;
    text.push_str(&recovery_lines(&h, &r));
    json["recovery"] = recovery_json(s, &h, &r);
    Ok(Report { text, json })
}

pub fn render(s: &Scenario, name: Option<&str>, fail: &[String], path: &Path) -> CliResult<Report> {
    let (_, h) = load(s)?;
    let region = name.map(|n| s.region(n)).transpose()?;
    let failed = failures(s, &h, fail)?;
    let plan = match &region {
        Some(r) if !r.is_empty() => plan_avoiding(&h, r, &failed.unavailable(h.config())).ok(),
        _ => None,
    };
    let area = (!failed.is_empty()).then(|| failed.area(h.config()));
    let layers = Layers { region: region.as_ref(), failed: area.as_ref(), plan: plan.as_ref(), labels: None };
    let bytes = write_svg(s, &h, path, layers)?;
    let text = format!("wrote {} ({bytes} bytes)\n", path.display());
    let json = json!({
        "command": "render",
        "region": name,
        "svg": path.display().to_string(),
        "bytes": bytes,
        "plan": plan.as_ref().map(|p| plan_json(s, &h, p)),
    });
    Ok(Report { text, json })
}

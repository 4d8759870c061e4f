use cubenet::scenario::Scenario;
use cubenet::{CellId, CubeHierarchy, HierarchyConfig, PlanTerm, PsPointId, QueryPlan, Value};
use serde_json::{json, Value as Json};

/// `+ A + B - C = v`, with `k*` for coefficients other than one.
pub fn signed_sum(terms: &[(i64, String)], value: impl std::fmt::Display) -> String {
    let mut out = String::new();
    for (i, (coef, name)) in terms.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push(if *coef < 0 { '-' } else { '+' });
        out.push(' ');
        if coef.abs() != 1 {
            out.push_str(&format!("{}*", coef.abs()));
        }
        out.push_str(name);
    }
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str(&format!("= {value}"));
    out
}

pub fn cell_name(config: &HierarchyConfig, id: CellId) -> String {
    config.cell(id).to_string()
}

pub fn ps_name(config: &HierarchyConfig, p: PsPointId) -> String {
    format!("{}[{},{}]", config.cell(p.cell), p.col, p.row)
}

/// Cell terms of a simple-cube plan, in plan order.
pub fn cell_terms(plan: &QueryPlan) -> Vec<(CellId, i64)> {
    plan.terms
        .iter()
        .filter_map(|t| match t.point {
            cubenet::DataRef::Cell(id) => Some((id, t.coef)),
            cubenet::DataRef::Prefix(_) => None,
        })
        .collect()
}

/// Plan line followed by an alias line when every cell has a label.
pub fn plan_lines(s: &Scenario, h: &CubeHierarchy, plan: &QueryPlan) -> String {
    let terms = cell_terms(plan);
    let named: Vec<(i64, String)> = terms.iter().map(|&(id, c)| (c, cell_name(h.config(), id))).collect();
    let mut out = signed_sum(&named, plan.value);
    out.push('\n');
    let aliases: Option<Vec<(i64, String)>> =
        terms.iter().map(|&(id, c)| s.label_of(id).map(|l| (c, l.to_string()))).collect();
    if let Some(aliases) = aliases.filter(|a| !a.is_empty()) {
        out.push_str(&format!("aliases: {}\n", signed_sum(&aliases, plan.value)));
    }
    out
}

pub fn cell_json(s: &Scenario, h: &CubeHierarchy, id: CellId) -> Json {
    let cell = h.cell(id);
    json!({
        "name": cell.to_string(),
        "label": s.label_of(id),
        "level": id.level,
        "cx": id.cx,
        "cy": id.cy,
        "bounds": [cell.bounds.x0, cell.bounds.y0, cell.bounds.x1, cell.bounds.y1],
        "value": h.value(id),
    })
}

pub fn plan_json(s: &Scenario, h: &CubeHierarchy, plan: &QueryPlan) -> Json {
    let terms: Vec<Json> = cell_terms(plan)
        .into_iter()
        .map(|(id, coef)| {
            let mut t = cell_json(s, h, id);
            t["coef"] = coef.into();
            t
        })
        .collect();
    json!({ "value": plan.value, "size": plan.size(), "terms": terms })
}

pub fn ps_term_json(config: &HierarchyConfig, t: &PlanTerm, value: Value, covered: cubenet::Rect) -> Json {
    let cubenet::DataRef::Prefix(p) = t.point else {
        unreachable!("prefix-sum plans only read prefix entries")
    };
    json!({
        "name": ps_name(config, p),
        "level": p.cell.level,
        "cx": p.cell.cx,
        "cy": p.cell.cy,
        "col": p.col,
        "row": p.row,
        "coef": t.coef,
        "value": value,
        "covered": [covered.x0, covered.y0, covered.x1, covered.y1],
    })
}

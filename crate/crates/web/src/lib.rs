//! Browser bindings for the static demo page in `www/`.
//!
//! Each export takes and returns JSON text. The `*_json` functions hold the
//! logic so they can be tested natively; the exported wrappers only turn
//! errors into JavaScript exceptions.

use cutoffmatch::egalitarian::{default_targets, egalitarian_allocation, supervised_pairs, TargetMode};
use cutoffmatch::engine;
use cutoffmatch::matching::MatchingDocument;
use cutoffmatch::rational;
use cutoffmatch::report::{allocation_json, cutoffs_json, matching_json};
use cutoffmatch::stability::induce;
use cutoffmatch::{check_feasibility, BudgetFeasibility, Checker, Gadget, Instance, Matching};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn load(instance: &str) -> Result<Instance, String> {
    Instance::from_json(instance).map_err(|e| e.to_string())
}

fn load_matching(inst: &Instance, matching: &str) -> Result<Matching, String> {
    MatchingDocument::from_json(matching)
        .and_then(|d| d.resolve(inst))
        .map_err(|e| e.to_string())
}

/// Applicants, projects and acceptable edges for drawing.
fn layout(inst: &Instance) -> Value {
    let edges: Vec<Value> = (0..inst.num_applicants())
        .flat_map(|a| {
            inst.applicant_prefs(a)
                .iter()
                .filter(move |&&p| inst.mutually_acceptable(a, p))
                .map(move |&p| {
                    json!({
                        "applicant": inst.applicant_id(a),
                        "project": inst.project(p).id,
                        "rank": inst.applicant_rank(a, p),
                        "score": inst.score(a, p),
                    })
                })
        })
        .collect();
    json!({
        "applicants": inst.applicant_ids(),
        "projects": inst.projects().iter().map(|p| json!({"id": p.id, "capacity": p.capacity})).collect::<Vec<_>>(),
        "supervisors": inst.supervisors().iter().map(|s| json!({
            "id": s.id,
            "budget": rational::render(&s.budget),
            "projects": s.projects.iter().map(|&p| inst.project(p).id.clone()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "edges": edges,
    })
}

pub fn gadget_names_json() -> String {
    let names: Vec<&str> = Gadget::ALL.iter().map(|g| g.name()).collect();
    json!(names).to_string()
}

pub fn gadget_instance_json(name: &str) -> Result<String, String> {
    let g: Gadget = name.parse().map_err(|e: cutoffmatch::Error| e.to_string())?;
    Ok(g.raw().to_json())
}

pub fn describe_json(instance: &str) -> Result<String, String> {
    Ok(layout(&load(instance)?).to_string())
}

/// Feasibility certificate and stability verdict.
pub fn check_json(instance: &str, matching: &str) -> Result<String, String> {
    let inst = load(instance)?;
    let m = load_matching(&inst, matching)?;
    let feas = check_feasibility(&inst, &m);
    let verdict = Checker::budget(&inst).check_stability(&m);
    Ok(json!({
        "feasible": feas.feasible,
        "allocation": feas.allocation.as_ref().map(|a| allocation_json(&inst, a)),
        "verdict": verdict.to_json(&inst),
    })
    .to_string())
}

/// Runs the cutoff algorithm and returns every intermediate matching, so the
/// page can scrub through the steps.
pub fn solve_json(instance: &str, order: &str) -> Result<String, String> {
    let inst = load(instance)?;
    let ids: Vec<&str> = order.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let order = if ids.is_empty() {
        engine::default_order(&inst)
    } else {
        engine::parse_order(&inst, &ids).map_err(|e| e.to_string())?
    };
    let f = BudgetFeasibility::new(&inst);
    let (m, d, trace) = engine::solve(&inst, &f, &order).map_err(|e| e.to_string())?;
    let frames: Vec<Value> = (0..=trace.steps.len())
        .map(|k| {
            let dk = trace.cutoffs_after(&inst, k);
            let mk = induce(&inst, &dk);
            let step = k.checked_sub(1).map(|i| &trace.steps[i]);
            json!({
                "step": k,
                "project": step.map(|s| inst.project(s.project).id.clone()),
                "calls": step.map_or(0, |s| s.calls),
                "cutoffs": cutoffs_json(&inst, &dk),
                "matching": matching_json(&inst, &mk),
            })
        })
        .collect();
    let stable = Checker::budget(&inst).is_cutoff_stable(&m);
    Ok(json!({
        "matching": matching_json(&inst, &m),
        "cutoffs": cutoffs_json(&inst, &d),
        "cutoff_stable": stable,
        "total_calls": trace.total_calls,
        "call_bound": engine::call_bound(&inst),
        "frames": frames,
    })
    .to_string())
}

/// Leximin allocation under equal targets.
pub fn allocate_json(instance: &str, matching: &str) -> Result<String, String> {
    let inst = load(instance)?;
    let m = load_matching(&inst, matching)?;
    let targets = default_targets(&inst, &m).map_err(|e| e.to_string())?;
    let r = egalitarian_allocation(&inst, &m, &targets, TargetMode::Strict).map_err(|e| e.to_string())?;
    let pairs: Vec<Value> = supervised_pairs(&inst)
        .into_iter()
        .map(|(s, p)| {
            let x = r.allocation.get(s, p).cloned().unwrap_or_else(|| rational::int(0));
            let t = targets.get(s, p).cloned().unwrap_or_else(|| rational::int(0));
            let round = r
                .history
                .iter()
                .find(|h| (h.supervisor, h.project) == (s, p))
                .map(|h| h.round);
            json!({
                "supervisor": inst.supervisor(s).id,
                "project": inst.project(p).id,
                "x": rational::render(&x),
                "x_float": rational::to_f64(&x),
                "budget_float": rational::to_f64(&inst.supervisor(s).budget),
                "ratio": rational::render(&(&x / &t)),
                "round": round,
            })
        })
        .collect();
    Ok(json!({
        "pairs": pairs,
        "levels": r.levels.iter().map(rational::render).collect::<Vec<_>>(),
        "lp_solves": r.lp_solves,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gadgetNames)]
pub fn gadget_names() -> String {
    gadget_names_json()
}

#[wasm_bindgen(js_name = gadgetInstance)]
pub fn gadget_instance(name: &str) -> Result<String, JsError> {
    js(gadget_instance_json(name))
}

#[wasm_bindgen]
pub fn describe(instance: &str) -> Result<String, JsError> {
    js(describe_json(instance))
}

#[wasm_bindgen]
pub fn check(instance: &str, matching: &str) -> Result<String, JsError> {
    js(check_json(instance, matching))
}

#[wasm_bindgen]
pub fn solve(instance: &str, order: &str) -> Result<String, JsError> {
    js(solve_json(instance, order))
}

#[wasm_bindgen]
pub fn allocate(instance: &str, matching: &str) -> Result<String, JsError> {
    js(allocate_json(instance, matching))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn gadgets_round_trip() {
        let names: Vec<String> = serde_json::from_str(&gadget_names_json()).unwrap();
        assert_eq!(names.len(), 7);
        for n in names {
            let inst = gadget_instance_json(&n).unwrap();
            assert!(describe_json(&inst).is_ok());
        }
        assert!(gadget_instance_json("nope").is_err());
    }

    #[test]
    fn check_example1() {
        let inst = gadget_instance_json("example1").unwrap();
        let v = parse(&check_json(&inst, r#"{"matching":[["a2","p1"]]}"#).unwrap());
        assert_eq!(v["feasible"], false);
        assert_eq!(v["verdict"]["level"], "infeasible");
    }

    #[test]
    fn solve_frames_end_at_result() {
        let inst = gadget_instance_json("thm7_item3").unwrap();
        let v = parse(&solve_json(&inst, "p1,p3,p2").unwrap());
        assert_eq!(v["matching"], json!([["a1", "p1"], ["a3", "p3"]]));
        let frames = v["frames"].as_array().unwrap();
        assert_eq!(frames[0]["matching"], json!([]));
        assert_eq!(frames.last().unwrap()["matching"], v["matching"]);
        assert!(solve_json(&inst, "p1,p2").is_err());
    }

    #[test]
    fn allocation_bars() {
        let inst = gadget_instance_json("example1").unwrap();
        let v = parse(&allocate_json(&inst, r#"{"matching":[["a1","p2"]]}"#).unwrap());
        let pairs = v["pairs"].as_array().unwrap();
        assert_eq!(pairs.len(), 3);
        let total: f64 = pairs
            .iter()
            .filter(|p| p["project"] == "p2")
            .map(|p| p["x_float"].as_f64().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

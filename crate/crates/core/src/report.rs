//! JSON shapes shared by the command-line front end and the web demo.

use crate::engine::EngineTrace;
use crate::flow::FundingAllocation;
use crate::matching::{CutoffVector, Matching};
use crate::model::Instance;
use crate::rational;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub feasibility_calls: usize,
    pub lp_solves: usize,
    pub bb_nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the instance file bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_sha256: Option<String>,
    pub outputs: Value,
    pub counters: Counters,
    pub wall_time_ms: f64,
}

impl RunReport {
    /// The report without its wall time, for comparisons across runs.
    pub fn stable_part(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        v.as_object_mut().expect("object").remove("wall_time_ms");
        v
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `[["a1","p2"], ...]`
pub fn matching_json(instance: &Instance, m: &Matching) -> Value {
    json!(m.to_named(instance))
}

/// `{"p1": 2, ...}` in project order.
pub fn cutoffs_json(instance: &Instance, d: &CutoffVector) -> Value {
    let mut map = Map::new();
    for (p, v) in d.to_named(instance) {
        map.insert(p, json!(v));
    }
    Value::Object(map)
}

/// `[{"supervisor","project","x"}]`, rationals as canonical text.
pub fn allocation_json(instance: &Instance, alloc: &FundingAllocation) -> Value {
    Value::Array(
        alloc
            .to_named(instance)
            .into_iter()
            .map(|(s, p, x)| json!({"supervisor": s, "project": p, "x": rational::render(&x)}))
            .collect(),
    )
}

pub fn trace_json(instance: &Instance, trace: &EngineTrace) -> Value {
    Value::Array(
        trace
            .to_json_lines(instance)
            .lines()
            .map(|l| serde_json::from_str(l).expect("trace line is JSON"))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gadget;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn stable_part_drops_wall_time() {
        let r = RunReport {
            command: "check".into(),
            instance_sha256: None,
            outputs: json!({}),
            counters: Counters::default(),
            wall_time_ms: 1.5,
        };
        let v = r.stable_part();
        assert!(v.get("wall_time_ms").is_none());
        assert_eq!(v["command"], "check");
    }

    #[test]
    fn cutoffs_keep_project_order() {
        let inst = Gadget::Example2Unsolvable.instance();
        let v = cutoffs_json(&inst, &CutoffVector(vec![2, 3]));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"p1":2,"p2":3}"#);
    }
}

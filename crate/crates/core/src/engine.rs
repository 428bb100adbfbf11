//! Cutoff-decreasing search for a cutoff stable matching.
//!
//! Every project starts closed (`d(p) = |A|+1`). Each round scans the project
//! order from the front and lowers the first cutoff whose induced matching
//! stays valid and feasible. The run stops once a full scan lowers nothing.

use crate::error::{Error, Result};
use crate::matching::{CutoffVector, Matching};
use crate::model::{FeasibilityFunction, Instance};
use crate::stability::induce;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub project: usize,
    pub cutoff: usize,
    pub size: usize,
    /// Feasibility evaluations made up to and including this step.
    pub calls: usize,
    /// Applicant who moved to `project`, if the induced matching changed.
    pub admitted: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineTrace {
    pub steps: Vec<TraceStep>,
    /// Includes the evaluations of the final, unsuccessful scan.
    pub total_calls: usize,
}

#[derive(Serialize)]
struct StepJson<'a> {
    step: usize,
    project: &'a str,
    cutoff: usize,
    size: usize,
    calls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    admitted: Option<&'a str>,
}

impl EngineTrace {
    /// One JSON object per line.
    pub fn to_json_lines(&self, instance: &Instance) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let row = StepJson {
                step: i + 1,
                project: &instance.project(s.project).id,
                cutoff: s.cutoff,
                size: s.size,
                calls: s.calls,
                admitted: s.admitted.map(|a| instance.applicant_id(a)),
            };
            out.push_str(&serde_json::to_string(&row).expect("trace row serialises"));
            out.push('\n');
        }
        out
    }

    /// Cutoff vector after the first `k` steps.
    pub fn cutoffs_after(&self, instance: &Instance, k: usize) -> CutoffVector {
        let mut d = CutoffVector::closed(instance);
        for s in &self.steps[..k.min(self.steps.len())] {
            d.0[s.project] = s.cutoff;
        }
        d
    }
}

pub fn count_feasibility_calls(trace: &EngineTrace) -> usize {
    trace.total_calls
}

/// `(|A|+1)·|P|²`, the most evaluations a run can need.
pub fn call_bound(instance: &Instance) -> usize {
    (instance.num_applicants() + 1) * instance.num_projects().pow(2)
}

/// Checks that `order` is a permutation of the projects.
pub fn check_order(instance: &Instance, order: &[usize]) -> Result<()> {
    let np = instance.num_projects();
    let mut seen = vec![false; np];
    if order.len() != np {
        return Err(Error::BadOrder(format!(
            "order lists {} projects, instance has {np}",
            order.len()
        )));
    }
    for &p in order {
        if p >= np || std::mem::replace(&mut seen[p], true) {
            return Err(Error::BadOrder(format!("project index {p} repeated or out of range")));
        }
    }
    Ok(())
}

/// Resolves project ids into an order.
pub fn parse_order(instance: &Instance, ids: &[&str]) -> Result<Vec<usize>> {
    let order = ids
        .iter()
        .map(|id| {
            instance
                .project_index(id)
                .ok_or_else(|| Error::BadOrder(format!("unknown project {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    check_order(instance, &order)?;
    Ok(order)
}

pub fn default_order(instance: &Instance) -> Vec<usize> {
    (0..instance.num_projects()).collect()
}

/// Runs the cutoff-decreasing algorithm. A decrement that admits nobody new
/// is always applied and costs no evaluation; so is one that breaks a
/// capacity.
pub fn solve<F: FeasibilityFunction>(
    instance: &Instance,
    f: &F,
    order: &[usize],
) -> Result<(Matching, CutoffVector, EngineTrace)> {
    check_order(instance, order)?;
    let np = instance.num_projects();
    let mut d = CutoffVector::closed(instance);
    let mut m = Matching::empty(instance.num_applicants());
    let mut counts = vec![0usize; np];
    let mut trace = EngineTrace::default();
    // applicant holding each score at each project
    let by_score: Vec<Vec<Option<usize>>> = (0..np)
        .map(|p| {
            let mut v = vec![None; instance.num_applicants() + 1];
            for &a in &instance.project(p).prefs {
                if let Some(z) = instance.score(a, p) {
                    v[z] = Some(a);
                }
            }
            v
        })
        .collect();

    loop {
        let mut applied = false;
        for &p in order {
            let Some(next) = d.get(p).checked_sub(1) else {
                continue;
            };
            let mover = by_score[p][next].filter(|&a| {
                instance.applicant_rank(a, p).is_some() && instance.applicant_prefers(a, p, m.project_of(a))
            });
            if let Some(a) = mover {
                if counts[p] >= instance.capacity(p) {
                    continue;
                }
                let mut c = counts.clone();
                if let Some(q) = m.project_of(a) {
                    c[q] -= 1;
                }
                c[p] += 1;
                trace.total_calls += 1;
                if !f.is_feasible(&c) {
                    continue;
                }
                counts = c;
                m = m.with_move(a, p);
            }
            d.0[p] = next;
            trace.steps.push(TraceStep {
                project: p,
                cutoff: next,
                size: m.size(),
                calls: trace.total_calls,
                admitted: mover,
            });
            debug_assert_eq!(induce(instance, &d), m);
            applied = true;
            break;
        }
        if !applied {
            return Ok((m, d, trace));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::BudgetFeasibility;
    use crate::model::{FromFn, Gadget, RawInstance};
    use crate::stability::{is_fair, minimal_cutoffs_for, Checker};

    fn run(g: Gadget, order: &[&str]) -> (Instance, Matching, CutoffVector, EngineTrace) {
        let inst = g.instance();
        let order = parse_order(&inst, order).unwrap();
        let (m, d, t) = solve(&inst, &BudgetFeasibility::new(&inst), &order).unwrap();
        (inst, m, d, t)
    }

    fn pairs(inst: &Instance, m: &Matching) -> Vec<(String, String)> {
        m.to_named(inst)
    }

    fn own(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, p)| (a.to_string(), p.to_string())).collect()
    }

    #[test]
    fn example2_trace() {
        let (inst, m, d, t) = run(Gadget::Example2Unsolvable, &["p1", "p2"]);
        assert_eq!(pairs(&inst, &m), own(&[("a1", "p1")]));
        assert_eq!(d, CutoffVector(vec![2, 3]));
        assert!(t.total_calls <= call_bound(&inst));
        assert_eq!(d, minimal_cutoffs_for(&inst, &m).unwrap());
        let rows: Vec<(usize, usize)> = t.steps.iter().map(|s| (s.project, s.cutoff)).collect();
        assert_eq!(rows, vec![(0, 2)]);
    }

    #[test]
    fn thm7_item1_outputs() {
        let (inst, m, _, _) = run(Gadget::Thm7Item1, &["p1", "p2"]);
        assert_eq!(pairs(&inst, &m), own(&[("a1", "p1")]));

        let mut raw = Gadget::Thm7Item1.raw();
        raw.applicant_prefs.insert("a2".into(), vec!["p2".into(), "p1".into()]);
        // p1 must list a2 for the misreport to matter; it already does
        let inst = Instance::validate(&raw).unwrap();
        let (m, _, _) = solve(&inst, &BudgetFeasibility::new(&inst), &[0, 1]).unwrap();
        assert_eq!(pairs(&inst, &m), own(&[("a2", "p2")]));
    }

    #[test]
    fn thm7_item3_depends_on_order() {
        let (inst, m, _, _) = run(Gadget::Thm7Item3, &["p1", "p2", "p3"]);
        assert_eq!(pairs(&inst, &m), own(&[("a1", "p2"), ("a2", "p1")]));
        let (inst, m, _, _) = run(Gadget::Thm7Item3, &["p1", "p3", "p2"]);
        assert_eq!(pairs(&inst, &m), own(&[("a1", "p1"), ("a3", "p3")]));
    }

    #[test]
    fn thm7_item4_both_orders() {
        for order in [["p1", "p2"], ["p2", "p1"]] {
            let (inst, m, _, _) = run(Gadget::Thm7Item4, &order);
            assert_eq!(pairs(&inst, &m), own(&[("a1", "p2"), ("a2", "p1")]));
        }
    }

    #[test]
    fn empty_instance_makes_no_calls() {
        let mut raw = RawInstance::default();
        raw.project("p1", 1, &[])
            .supervisor("s1", crate::rational::int(1), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let (m, d, t) = solve(&inst, &BudgetFeasibility::new(&inst), &[0]).unwrap();
        assert!(m.is_empty());
        assert_eq!(d, CutoffVector(vec![0]));
        assert_eq!(count_feasibility_calls(&t), 0);
    }

    #[test]
    fn rejects_bad_orders() {
        let inst = Gadget::Example1.instance();
        let f = BudgetFeasibility::new(&inst);
        assert!(matches!(solve(&inst, &f, &[0]), Err(Error::BadOrder(_))));
        assert!(matches!(solve(&inst, &f, &[0, 0]), Err(Error::BadOrder(_))));
        assert!(parse_order(&inst, &["p1", "p9"]).is_err());
    }

    #[test]
    fn unconstrained_function_reaches_zero_cutoffs() {
        let inst = Gadget::Example3Cycle.instance();
        let all = FromFn(|_: &[usize]| true);
        let (m, d, _) = solve(&inst, &all, &default_order(&inst)).unwrap();
        assert!(is_fair(&inst, &m).fair);
        assert!(Checker::new(&inst, all).is_cutoff_stable(&m));
        for p in 0..4 {
            assert!(d.get(p) == 0 || m.applicants_of(p).len() == inst.capacity(p));
        }
    }

    #[test]
    fn trace_json_lines() {
        let (inst, _, _, t) = run(Gadget::Example2Unsolvable, &["p1", "p2"]);
        let text = t.to_json_lines(&inst);
        assert_eq!(
            text,
            "{\"step\":1,\"project\":\"p1\",\"cutoff\":2,\"size\":1,\"calls\":1,\"admitted\":\"a1\"}\n"
        );
        assert_eq!(t.cutoffs_after(&inst, 0), CutoffVector::closed(&inst));
    }
}

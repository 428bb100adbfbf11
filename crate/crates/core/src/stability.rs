//! Fairness, cutoff scores and the weak / cutoff / strong stability checks.
//!
//! The checks take any [`FeasibilityFunction`]; "feasible" for a candidate
//! matching always means capacities respected *and* the function accepts the
//! count vector. Mutual acceptability is enforced by only ever building
//! candidates from acceptable pairs.

use crate::error::{Error, Result};
use crate::flow::BudgetFeasibility;
use crate::matching::{validate_matching, CutoffVector, Matching};
use crate::model::{Counting, FeasibilityFunction, Instance};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

/// All blocking pairs, applicant-major and then in the applicant's
/// preference order.
pub fn blocking_pairs(instance: &Instance, m: &Matching) -> Vec<(usize, usize)> {
    let counts = m.counts(instance.num_projects());
    let mut out = Vec::new();
    for a in 0..instance.num_applicants() {
        let current = m.project_of(a);
        for &p in instance.applicant_prefs(a) {
            if Some(p) == current {
                break;
            }
            if instance.project_rank(p, a).is_none() {
                continue;
            }
            let room = counts[p] < instance.capacity(p);
            let beats = m
                .applicants_of(p)
                .into_iter()
                .any(|b| instance.project_prefers(p, a, b));
            if room || beats {
                out.push((a, p));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessReport {
    pub fair: bool,
    /// `(a, p)` pairs with justified envy, in blocking-pair order.
    pub envy: Vec<(usize, usize)>,
}

/// No applicant prefers a project that admitted someone it ranks lower.
pub fn is_fair(instance: &Instance, m: &Matching) -> FairnessReport {
    let mut envy = Vec::new();
    for a in 0..instance.num_applicants() {
        let current = m.project_of(a);
        for &p in instance.applicant_prefs(a) {
            if Some(p) == current {
                break;
            }
            if m.applicants_of(p)
                .into_iter()
                .any(|b| instance.project_prefers(p, a, b))
            {
                envy.push((a, p));
            }
        }
    }
    FairnessReport {
        fair: envy.is_empty(),
        envy,
    }
}

/// Each applicant takes the best project where her score reaches the cutoff.
/// The result may break capacities or budgets.
pub fn induce(instance: &Instance, d: &CutoffVector) -> Matching {
    let assignment = (0..instance.num_applicants())
        .map(|a| {
            instance
                .applicant_prefs(a)
                .iter()
                .copied()
                .find(|&p| instance.score(a, p).is_some_and(|z| z >= d.get(p)))
        })
        .collect();
    Matching::from_assignment(assignment)
}

fn require_fair(instance: &Instance, m: &Matching) -> Result<()> {
    let report = is_fair(instance, m);
    match report.envy.first() {
        None => Ok(()),
        Some(&(a, p)) => Err(Error::Unfair {
            applicant: instance.applicant_id(a).to_string(),
            project: instance.project(p).id.clone(),
        }),
    }
}

/// Largest inducing cutoffs: the lowest score in `M(p)`, or `|A|+1` when
/// `M(p)` is empty.
pub fn cutoffs_for(instance: &Instance, m: &Matching) -> Result<CutoffVector> {
    require_fair(instance, m)?;
    let closed = instance.num_applicants() + 1;
    Ok(CutoffVector(
        (0..instance.num_projects())
            .map(|p| {
                m.applicants_of(p)
                    .into_iter()
                    .filter_map(|a| instance.score(a, p))
                    .min()
                    .unwrap_or(closed)
            })
            .collect(),
    ))
}

/// Smallest inducing cutoffs: one above the best score among applicants who
/// would rather be at `p`, or zero if there are none.
pub fn minimal_cutoffs_for(instance: &Instance, m: &Matching) -> Result<CutoffVector> {
    require_fair(instance, m)?;
    let mut d = vec![0; instance.num_projects()];
    for a in 0..instance.num_applicants() {
        let current = m.project_of(a);
        for &p in instance.applicant_prefs(a) {
            if Some(p) == current {
                break;
            }
            if let Some(z) = instance.score(a, p) {
                d[p] = d[p].max(z + 1);
            }
        }
    }
    Ok(CutoffVector(d))
}

/// `m1` is weakly better for every applicant and strictly for one.
pub fn pareto_dominates(instance: &Instance, m1: &Matching, m2: &Matching) -> bool {
    let mut strict = false;
    for a in 0..instance.num_applicants() {
        let (x, y) = (m1.project_of(a), m2.project_of(a));
        if x == y {
            continue;
        }
        match x {
            Some(p) if instance.applicant_prefers(a, p, y) => strict = true,
            _ => return false,
        }
    }
    strict
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityLevel {
    Infeasible,
    Unfair,
    /// Fair and feasible but weakly wasteful.
    Fair,
    Weak,
    Cutoff,
    Strong,
}

impl StabilityLevel {
    pub const ALL: [StabilityLevel; 6] = [
        StabilityLevel::Infeasible,
        StabilityLevel::Unfair,
        StabilityLevel::Fair,
        StabilityLevel::Weak,
        StabilityLevel::Cutoff,
        StabilityLevel::Strong,
    ];
}

impl fmt::Display for StabilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityLevel::Infeasible => "infeasible",
            StabilityLevel::Unfair => "unfair",
            StabilityLevel::Fair => "fair",
            StabilityLevel::Weak => "weak",
            StabilityLevel::Cutoff => "cutoff",
            StabilityLevel::Strong => "strong",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessReason {
    /// `a` prefers `p`, which holds someone ranked below `a`.
    JustifiedEnvy,
    /// `M ∪ {(a,p)}` stays feasible.
    AdditionFeasible,
    /// Moving `a` to `p` stays feasible and no better-ranked applicant is blocked.
    SwapFeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub applicant: usize,
    pub project: usize,
    pub reason: WitnessReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub level: StabilityLevel,
    /// Pairs that keep the matching from the next level up.
    pub witnesses: Vec<Witness>,
    /// Structural defect, when the matching is not a valid matching at all.
    pub detail: Option<String>,
    pub feasibility_calls: usize,
}

#[derive(Serialize)]
struct WitnessJson<'a> {
    applicant: &'a str,
    project: &'a str,
    reason: WitnessReason,
}

#[derive(Serialize)]
pub struct VerdictJson<'a> {
    level: StabilityLevel,
    witnesses: Vec<WitnessJson<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<&'a str>,
}

impl StabilityVerdict {
    pub fn at_least(&self, level: StabilityLevel) -> bool {
        self.level >= level
    }

    pub fn to_json<'a>(&'a self, instance: &'a Instance) -> VerdictJson<'a> {
        VerdictJson {
            level: self.level,
            witnesses: self
                .witnesses
                .iter()
                .map(|w| WitnessJson {
                    applicant: instance.applicant_id(w.applicant),
                    project: &instance.project(w.project).id,
                    reason: w.reason,
                })
                .collect(),
            detail: self.detail.as_deref(),
        }
    }
}

/// Stability checks against one instance and feasibility function. Verdicts
/// are memoised per count vector; `calls()` reports real evaluations.
pub struct Checker<'a, F> {
    instance: &'a Instance,
    f: Counting<F>,
    memo: RefCell<HashMap<Vec<usize>, bool>>,
}

impl<'a> Checker<'a, BudgetFeasibility<'a>> {
    pub fn budget(instance: &'a Instance) -> Self {
        Checker::new(instance, BudgetFeasibility::new(instance))
    }
}

impl<'a, F: FeasibilityFunction> Checker<'a, F> {
    pub fn new(instance: &'a Instance, f: F) -> Self {
        Checker {
            instance,
            f: Counting::new(f),
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn calls(&self) -> usize {
        self.f.calls()
    }

    /// Capacities plus the feasibility function.
    pub fn counts_feasible(&self, counts: &[usize]) -> bool {
        if counts.iter().enumerate().any(|(p, &c)| c > self.instance.capacity(p)) {
            return false;
        }
        if let Some(&v) = self.memo.borrow().get(counts) {
            return v;
        }
        let v = self.f.is_feasible(counts);
        self.memo.borrow_mut().insert(counts.to_vec(), v);
        v
    }

    /// Valid matching with `f(M) = 1`.
    pub fn feasible(&self, m: &Matching) -> bool {
        validate_matching(self.instance, m).is_ok() && self.counts_feasible(&m.counts(self.instance.num_projects()))
    }

    fn addition_feasible(&self, counts: &[usize], p: usize) -> bool {
        let mut c = counts.to_vec();
        c[p] += 1;
        self.counts_feasible(&c)
    }

    /// Feasibility of `(M ∪ {(a,p)}) \ {(a, M(a))}` for an acceptable pair.
    fn swap_feasible(&self, m: &Matching, counts: &[usize], a: usize, p: usize) -> bool {
        if !self.instance.mutually_acceptable(a, p) {
            return false;
        }
        let mut c = counts.to_vec();
        if let Some(q) = m.project_of(a) {
            c[q] -= 1;
        }
        c[p] += 1;
        self.counts_feasible(&c)
    }

    /// One more acceptable applicant can join `p` without breaking feasibility.
    pub fn is_unconstrained(&self, m: &Matching, p: usize) -> bool {
        let candidates =
            (0..self.instance.num_applicants()).any(|a| self.instance.mutually_acceptable(a, p) && !m.contains(a, p));
        if !candidates {
            return true;
        }
        self.addition_feasible(&m.counts(self.instance.num_projects()), p)
    }

    pub fn unconstrained_projects(&self, m: &Matching) -> Vec<usize> {
        (0..self.instance.num_projects())
            .filter(|&p| self.is_unconstrained(m, p))
            .collect()
    }

    fn all_members_preferred(&self, m: &Matching, a: usize, p: usize) -> bool {
        m.applicants_of(p)
            .into_iter()
            .all(|b| self.instance.project_prefers(p, b, a))
    }

    /// Blocking pairs not permitted under weak stability.
    pub fn weak_violations(&self, m: &Matching) -> Vec<(usize, usize)> {
        if !self.feasible(m) {
            return Vec::new();
        }
        let counts = m.counts(self.instance.num_projects());
        blocking_pairs(self.instance, m)
            .into_iter()
            .filter(|&(a, p)| !self.all_members_preferred(m, a, p) || self.addition_feasible(&counts, p))
            .collect()
    }

    /// Blocking pairs not permitted under strong stability.
    pub fn strong_violations(&self, m: &Matching) -> Vec<(usize, usize)> {
        if !self.feasible(m) {
            return Vec::new();
        }
        let counts = m.counts(self.instance.num_projects());
        blocking_pairs(self.instance, m)
            .into_iter()
            .filter(|&(a, p)| !self.all_members_preferred(m, a, p) || self.swap_feasible(m, &counts, a, p))
            .collect()
    }

    /// Pairs `(a,p) ∉ M` with `p ≻_a M(a)` that break cutoff non-wastefulness.
    pub fn cutoff_violations(&self, m: &Matching) -> Vec<(usize, usize)> {
        if !self.feasible(m) {
            return Vec::new();
        }
        let inst = self.instance;
        let counts = m.counts(inst.num_projects());
        let mut out = Vec::new();
        for a in 0..inst.num_applicants() {
            let current = m.project_of(a);
            for &p in inst.applicant_prefs(a) {
                if Some(p) == current {
                    break;
                }
                if counts[p] >= inst.capacity(p) || !self.swap_feasible(m, &counts, a, p) {
                    continue;
                }
                // a better-ranked applicant outside M(p) who wants p but cannot move there
                let shielded = inst.project(p).prefs.iter().take_while(|&&b| b != a).any(|&b| {
                    !m.contains(b, p)
                        && inst.applicant_prefers(b, p, m.project_of(b))
                        && !self.swap_feasible(m, &counts, b, p)
                });
                if !shielded {
                    out.push((a, p));
                }
            }
        }
        out
    }

    pub fn is_weakly_stable(&self, m: &Matching) -> bool {
        self.feasible(m) && self.weak_violations(m).is_empty()
    }

    pub fn is_strongly_stable(&self, m: &Matching) -> bool {
        self.feasible(m) && self.strong_violations(m).is_empty()
    }

    /// Fair and cutoff non-wasteful.
    pub fn is_cutoff_stable(&self, m: &Matching) -> bool {
        self.feasible(m) && is_fair(self.instance, m).fair && self.cutoff_violations(m).is_empty()
    }

    /// Highest level the matching reaches, with witnesses against the next one.
    pub fn check_stability(&self, m: &Matching) -> StabilityVerdict {
        let start = self.calls();
        let verdict = |level, pairs: Vec<(usize, usize)>, reason, detail| StabilityVerdict {
            level,
            witnesses: pairs
                .into_iter()
                .map(|(applicant, project)| Witness {
                    applicant,
                    project,
                    reason,
                })
                .collect(),
            detail,
            feasibility_calls: self.calls() - start,
        };
        if let Err(defect) = validate_matching(self.instance, m) {
            return verdict(
                StabilityLevel::Infeasible,
                Vec::new(),
                WitnessReason::JustifiedEnvy,
                Some(defect.describe(self.instance)),
            );
        }
        if !self.feasible(m) {
            return verdict(
                StabilityLevel::Infeasible,
                Vec::new(),
                WitnessReason::JustifiedEnvy,
                Some("no feasible funding allocation".into()),
            );
        }
        let fairness = is_fair(self.instance, m);
        if !fairness.fair {
            return verdict(
                StabilityLevel::Unfair,
                fairness.envy,
                WitnessReason::JustifiedEnvy,
                None,
            );
        }
        let weak = self.weak_violations(m);
        if !weak.is_empty() {
            return verdict(StabilityLevel::Fair, weak, WitnessReason::AdditionFeasible, None);
        }
        let cutoff = self.cutoff_violations(m);
        if !cutoff.is_empty() {
            return verdict(StabilityLevel::Weak, cutoff, WitnessReason::SwapFeasible, None);
        }
        let strong = self.strong_violations(m);
        if !strong.is_empty() {
            return verdict(StabilityLevel::Cutoff, strong, WitnessReason::SwapFeasible, None);
        }
        verdict(StabilityLevel::Strong, Vec::new(), WitnessReason::SwapFeasible, None)
    }
}

/// [`Checker::check_stability`] under the supervisor budgets.
pub fn check_stability(instance: &Instance, m: &Matching) -> StabilityVerdict {
    Checker::budget(instance).check_stability(m)
}

pub fn is_unconstrained(instance: &Instance, m: &Matching, p: usize) -> bool {
    Checker::budget(instance).is_unconstrained(m, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FromFn, Gadget};

    fn m(inst: &Instance, pairs: &[(&str, &str)]) -> Matching {
        Matching::from_named(inst, pairs).unwrap()
    }

    fn named(inst: &Instance, pairs: &[(usize, usize)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|&(a, p)| (inst.applicant_id(a).to_string(), inst.project(p).id.clone()))
            .collect()
    }

    #[test]
    fn example3_blocking_pairs() {
        let inst = Gadget::Example3Cycle.instance();
        let m1 = m(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]);
        assert_eq!(
            named(&inst, &blocking_pairs(&inst, &m1)),
            vec![("a2".into(), "p3".into()), ("a3".into(), "p3".into())]
        );
    }

    #[test]
    fn example2_empty_matching_is_blocked_by_a1_p1() {
        let inst = Gadget::Example2Unsolvable.instance();
        let bps = blocking_pairs(&inst, &Matching::empty(2));
        assert!(bps.contains(&(0, 0)));
    }

    #[test]
    fn top_choices_have_no_blocking_pairs() {
        let inst = Gadget::Example4Distinct.instance();
        let top = m(&inst, &[("a1", "p1"), ("a2", "p2"), ("a3", "p3")]);
        assert!(blocking_pairs(&inst, &top).is_empty());
    }

    #[test]
    fn fairness() {
        let inst = Gadget::Example4Distinct.instance();
        assert!(is_fair(&inst, &m(&inst, &[("a1", "p3"), ("a2", "p1")])).fair);
        assert!(is_fair(&inst, &Matching::empty(3)).fair);
        // p3 ranks a1 above a3 and a1 prefers p3 to being unmatched
        let r = is_fair(&inst, &m(&inst, &[("a3", "p3")]));
        assert!(!r.fair);
        assert_eq!(r.envy, vec![(0, 2)]);
    }

    #[test]
    fn induce_extremes() {
        let inst = Gadget::Example3Cycle.instance();
        assert!(induce(&inst, &CutoffVector::closed(&inst)).is_empty());
        let open = induce(&inst, &CutoffVector(vec![0; 4]));
        for a in 0..4 {
            assert_eq!(open.project_of(a), Some(inst.applicant_prefs(a)[0]));
        }
    }

    #[test]
    fn induce_example2() {
        let inst = Gadget::Example2Unsolvable.instance();
        assert_eq!(induce(&inst, &CutoffVector(vec![2, 3])), m(&inst, &[("a1", "p1")]));
    }

    #[test]
    fn cutoffs_for_example3() {
        let inst = Gadget::Example3Cycle.instance();
        let m1 = m(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]);
        let d = cutoffs_for(&inst, &m1).unwrap();
        assert_eq!(d, CutoffVector(vec![4, 4, 5, 4]));
        assert_eq!(induce(&inst, &d), m1);
        assert_eq!(
            cutoffs_for(&inst, &Matching::empty(4)).unwrap(),
            CutoffVector(vec![5; 4])
        );
        // a1 ranked first by p1
        let single = m(&inst, &[("a1", "p1")]);
        assert_eq!(cutoffs_for(&inst, &single).unwrap().get(0), 4);
    }

    #[test]
    fn cutoffs_for_rejects_unfair() {
        let inst = Gadget::Example4Distinct.instance();
        assert!(matches!(
            cutoffs_for(&inst, &m(&inst, &[("a3", "p3")])),
            Err(Error::Unfair { .. })
        ));
    }

    #[test]
    fn minimal_cutoffs_induce_the_same_matching() {
        let inst = Gadget::Example3Cycle.instance();
        let m1 = m(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]);
        let lo = minimal_cutoffs_for(&inst, &m1).unwrap();
        let hi = cutoffs_for(&inst, &m1).unwrap();
        assert_eq!(induce(&inst, &lo), m1);
        assert!(lo.0.iter().zip(&hi.0).all(|(l, h)| l <= h));
    }

    #[test]
    fn unconstrained_projects() {
        let inst = Gadget::Example1.instance();
        let m1 = m(&inst, &[("a1", "p2")]);
        assert!(!is_unconstrained(&inst, &m1, 1));

        // one supervisor with budget |A| and room everywhere
        let mut raw = crate::model::RawInstance::default();
        raw.applicant("a1", &["p1", "p2"])
            .applicant("a2", &["p2", "p1"])
            .project("p1", 2, &["a1", "a2"])
            .project("p2", 2, &["a2", "a1"])
            .supervisor("s", crate::rational::int(2), &["p1", "p2"]);
        let inst = Instance::validate(&raw).unwrap();
        for p in 0..2 {
            assert!(is_unconstrained(&inst, &Matching::empty(2), p));
        }
    }

    #[test]
    fn example4_levels() {
        let inst = Gadget::Example4Distinct.instance();
        let level = |pairs: &[(&str, &str)]| check_stability(&inst, &m(&inst, pairs)).level;
        assert_eq!(level(&[("a1", "p1"), ("a2", "p2")]), StabilityLevel::Strong);
        assert_eq!(level(&[("a1", "p2"), ("a2", "p1")]), StabilityLevel::Strong);

        let m3 = check_stability(&inst, &m(&inst, &[("a1", "p2"), ("a3", "p3")]));
        assert_eq!(m3.level, StabilityLevel::Cutoff);
        assert!(m3.witnesses.iter().any(|w| (w.applicant, w.project) == (0, 0)));

        let m4 = check_stability(&inst, &m(&inst, &[("a1", "p3"), ("a2", "p1")]));
        assert_eq!(m4.level, StabilityLevel::Weak);
        let pairs: Vec<(usize, usize)> = m4.witnesses.iter().map(|w| (w.applicant, w.project)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn example2_nothing_is_strong() {
        let inst = Gadget::Example2Unsolvable.instance();
        let all = [
            vec![],
            vec![("a1", "p1")],
            vec![("a1", "p2")],
            vec![("a2", "p1")],
            vec![("a2", "p2")],
        ];
        for pairs in all {
            let v = check_stability(&inst, &m(&inst, &pairs));
            assert!(v.level < StabilityLevel::Strong, "{pairs:?} -> {:?}", v.level);
        }
    }

    #[test]
    fn infeasible_and_invalid_matchings() {
        let inst = Gadget::Example1.instance();
        let v = check_stability(&inst, &m(&inst, &[("a2", "p1")]));
        assert_eq!(v.level, StabilityLevel::Infeasible);
        let inst = Gadget::Thm7Item1.instance();
        let v = check_stability(&inst, &m(&inst, &[("a2", "p1")]));
        assert_eq!(v.level, StabilityLevel::Infeasible);
        assert!(v.detail.unwrap().contains("not mutually acceptable"));
    }

    #[test]
    fn pareto() {
        let inst = Gadget::Example4Distinct.instance();
        let a = m(&inst, &[("a1", "p2"), ("a3", "p3")]);
        let better = m(&inst, &[("a1", "p1"), ("a3", "p3")]);
        let mixed = m(&inst, &[("a1", "p1"), ("a2", "p2")]);
        assert!(!pareto_dominates(&inst, &a, &a));
        assert!(pareto_dominates(&inst, &better, &a));
        assert!(!pareto_dominates(&inst, &a, &better));
        assert!(!pareto_dominates(&inst, &mixed, &a));
    }

    #[test]
    fn custom_feasibility_function() {
        // global quota of one matched applicant
        let inst = Gadget::Example4Distinct.instance();
        let quota = FromFn(|c: &[usize]| c.iter().sum::<usize>() <= 1);
        let checker = Checker::new(&inst, quota);
        // a2 is shielded from p2 by a1, who cannot move there either
        assert!(checker.is_cutoff_stable(&m(&inst, &[("a2", "p1")])));
        assert!(!checker.is_cutoff_stable(&m(&inst, &[("a1", "p1")])));
        assert!(!checker.feasible(&m(&inst, &[("a1", "p1"), ("a2", "p2")])));
        assert!(checker.calls() > 0);
    }

    #[test]
    fn verdict_json_shape() {
        let inst = Gadget::Example4Distinct.instance();
        let v = check_stability(&inst, &m(&inst, &[("a1", "p3"), ("a2", "p1")]));
        let js = serde_json::to_value(v.to_json(&inst)).unwrap();
        assert_eq!(js["level"], "weak");
        assert_eq!(js["witnesses"][0]["applicant"], "a1");
        assert_eq!(js["witnesses"][0]["project"], "p2");
        assert_eq!(js["witnesses"][0]["reason"], "swap_feasible");
    }
}

//! Leximin-fair division of supervisor funding for a fixed feasible matching.
//!
//! Ratios `x_{s,p} / t_{s,p}` are pushed down level by level: each round
//! minimises the largest free ratio, then probes every free pair to see
//! whether it is stuck at that level.

use crate::error::{Error, Result};
use crate::flow::{check_feasibility, FundingAllocation};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::matching::Matching;
use crate::model::Instance;
use crate::rational::{self, int, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// `0 < t <= 1` and targets of each project sum to one.
    Strict,
    /// Only positivity is required.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetProfile {
    targets: BTreeMap<(usize, usize), Rational>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    targets: Vec<TargetEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetEntry {
    supervisor: String,
    project: String,
    #[serde(with = "rational::serde_text")]
    target: Rational,
}

/// Supervised pairs `(s, p)` with `p ∈ P_s`, in supervisor order.
pub fn supervised_pairs(instance: &Instance) -> Vec<(usize, usize)> {
    (0..instance.num_supervisors())
        .flat_map(|s| instance.supervisor(s).projects.iter().map(move |&p| (s, p)))
        .collect()
}

impl TargetProfile {
    pub fn new(targets: BTreeMap<(usize, usize), Rational>) -> Self {
        TargetProfile { targets }
    }

    pub fn get(&self, s: usize, p: usize) -> Option<&Rational> {
        self.targets.get(&(s, p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.targets.iter()
    }

    /// Every target multiplied by `c`.
    pub fn scaled(&self, c: &Rational) -> TargetProfile {
        TargetProfile {
            targets: self.targets.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// `{"targets": [{"supervisor", "project", "target"}]}`.
    pub fn from_json(instance: &Instance, text: &str) -> Result<Self> {
        let file: TargetFile = serde_json::from_str(text)?;
        let mut targets = BTreeMap::new();
        for e in file.targets {
            let s = instance
                .supervisor_index(&e.supervisor)
                .ok_or_else(|| Error::Targets(format!("unknown supervisor {:?}", e.supervisor)))?;
            let p = instance
                .project_index(&e.project)
                .ok_or_else(|| Error::Targets(format!("unknown project {:?}", e.project)))?;
            if targets.insert((s, p), e.target).is_some() {
                return Err(Error::Targets(format!(
                    "duplicate target for ({}, {})",
                    e.supervisor, e.project
                )));
            }
        }
        Ok(TargetProfile { targets })
    }

    /// Checks coverage and positivity, plus normalisation in strict mode.
    /// Returns warnings that lenient mode lets through.
    pub fn validate(&self, instance: &Instance, mode: TargetMode) -> Result<Vec<String>> {
        let pairs = supervised_pairs(instance);
        let name = |s: usize, p: usize| format!("({}, {})", instance.supervisor(s).id, instance.project(p).id);
        for &(s, p) in &pairs {
            match self.targets.get(&(s, p)) {
                None => return Err(Error::Targets(format!("missing target for {}", name(s, p)))),
                Some(t) if !t.is_positive() => {
                    return Err(Error::Targets(format!("target for {} must be positive", name(s, p))))
                }
                _ => {}
            }
        }
        if let Some(&(s, p)) = self.targets.keys().find(|k| !pairs.contains(k)) {
            return Err(Error::Targets(format!("{} is not a supervised pair", name(s, p))));
        }
        let mut problems = Vec::new();
        for p in 0..instance.num_projects() {
            let sups = instance.supervisors_of(p);
            if sups.is_empty() {
                continue;
            }
            let sum: Rational = sups.iter().map(|&s| self.targets[&(s, p)].clone()).sum();
            if !sum.is_one() {
                problems.push(format!(
                    "targets of {} sum to {}",
                    instance.project(p).id,
                    rational::render(&sum)
                ));
            }
            for &s in sups {
                if self.targets[&(s, p)] > Rational::one() {
                    problems.push(format!("target for {} exceeds 1", name(s, p)));
                }
            }
        }
        match mode {
            TargetMode::Strict if !problems.is_empty() => Err(Error::Targets(problems.join("; "))),
            _ => Ok(problems),
        }
    }
}

/// Equal split: `1/|S_p|` for every supervisor of `p`.
pub fn default_targets(instance: &Instance, m: &Matching) -> Result<TargetProfile> {
    let counts = m.counts(instance.num_projects());
    for (p, &c) in counts.iter().enumerate() {
        if c > 0 && instance.supervisors_of(p).is_empty() {
            return Err(Error::Targets(format!(
                "project {} has matched applicants but no supervisor",
                instance.project(p).id
            )));
        }
    }
    let targets = supervised_pairs(instance)
        .into_iter()
        .map(|(s, p)| ((s, p), rational::frac(1, instance.supervisors_of(p).len() as i64)))
        .collect();
    Ok(TargetProfile { targets })
}

/// `|M(p)| / |S_p|` per supervisor, falling back to `1/|S_p|` for empty
/// projects so every target stays positive. Unnormalised; lenient mode only.
pub fn matched_targets(instance: &Instance, m: &Matching) -> Result<TargetProfile> {
    let base = default_targets(instance, m)?;
    let counts = m.counts(instance.num_projects());
    Ok(TargetProfile {
        targets: base
            .targets
            .into_iter()
            .map(|((s, p), t)| ((s, p), if counts[p] > 0 { t * int(counts[p] as i64) } else { t }))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightPair {
    pub supervisor: usize,
    pub project: usize,
    pub ratio: Rational,
    /// One-based round in which the pair was fixed.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgalitarianResult {
    pub allocation: FundingAllocation,
    /// Ratios `x/t`, sorted non-increasing.
    pub ratios: Vec<Rational>,
    /// Fixed pairs in the order they became tight.
    pub history: Vec<TightPair>,
    /// Minimax level of each round.
    pub levels: Vec<Rational>,
    pub lp_solves: usize,
}

impl EgalitarianResult {
    pub fn rounds(&self) -> usize {
        self.levels.len()
    }
}

struct Frame {
    lp: LinearProgram,
    x: Vec<usize>,
}

/// Feasibility rows for `m` over one variable per supervised pair.
fn frame(instance: &Instance, pairs: &[(usize, usize)], counts: &[usize]) -> Frame {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x: Vec<usize> = pairs
        .iter()
        .map(|&(s, p)| lp.add_nonneg(format!("x_{}_{}", instance.supervisor(s).id, instance.project(p).id)))
        .collect();
    for (p, &count) in counts.iter().enumerate() {
        let terms: Vec<_> = pairs
            .iter()
            .zip(&x)
            .filter(|((_, q), _)| *q == p)
            .map(|(_, &v)| (v, Rational::one()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(
                format!("fund_{}", instance.project(p).id),
                terms,
                Relation::Eq,
                int(count as i64),
            );
        }
    }
    for s in 0..instance.num_supervisors() {
        let terms: Vec<_> = pairs
            .iter()
            .zip(&x)
            .filter(|((t, _), _)| *t == s)
            .map(|(_, &v)| (v, Rational::one()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(
                format!("budget_{}", instance.supervisor(s).id),
                terms,
                Relation::Le,
                instance.supervisor(s).budget.clone(),
            );
        }
    }
    Frame { lp, x }
}

fn ratio_vector(pairs: &[(usize, usize)], targets: &TargetProfile, x: &[Rational]) -> Vec<Rational> {
    let mut r: Vec<Rational> = pairs
        .iter()
        .zip(x)
        .map(|(&(s, p), v)| v / &targets.targets[&(s, p)])
        .collect();
    r.sort_by(|a, b| b.cmp(a));
    r
}

/// Leximin allocation for a feasible `m`.
pub fn egalitarian_allocation(
    instance: &Instance,
    m: &Matching,
    targets: &TargetProfile,
    mode: TargetMode,
) -> Result<EgalitarianResult> {
    if !check_feasibility(instance, m).feasible {
        return Err(Error::Infeasible);
    }
    targets.validate(instance, mode)?;
    let pairs = supervised_pairs(instance);
    let t: Vec<Rational> = pairs.iter().map(|k| targets.targets[k].clone()).collect();
    let counts = m.counts(instance.num_projects());
    let n = pairs.len();
    let mut fixed: Vec<Option<Rational>> = vec![None; n];
    let mut history = Vec::new();
    let mut levels = Vec::new();
    let mut lp_solves = 0;

    // x - t·level against the free pairs; tight pairs pinned to t·λ_{s,p}
    let build = |fixed: &[Option<Rational>], cap: Option<&Rational>, probe: Option<usize>| {
        let mut f = frame(instance, &pairs, &counts);
        let lam = f.lp.add_var("lambda", None, None);
        let eps = f.lp.add_var("epsilon", None, None);
        for i in 0..n {
            let name = format!("ratio_{i}");
            if let Some(l) = &fixed[i] {
                f.lp.add_constraint(name, vec![(f.x[i], Rational::one())], Relation::Eq, &t[i] * l);
                continue;
            }
            match cap {
                None => {
                    f.lp.add_constraint(
                        name,
                        vec![(f.x[i], Rational::one()), (lam, -t[i].clone())],
                        Relation::Le,
                        Rational::zero(),
                    );
                }
                Some(level) if probe == Some(i) => {
                    // x/t + eps <= level, scaled by t
                    f.lp.add_constraint(
                        name,
                        vec![(f.x[i], Rational::one()), (eps, t[i].clone())],
                        Relation::Le,
                        &t[i] * level,
                    );
                }
                Some(level) => {
                    f.lp.add_constraint(name, vec![(f.x[i], Rational::one())], Relation::Le, &t[i] * level);
                }
            }
        }
        (f, lam, eps)
    };

    while fixed.iter().any(Option::is_none) {
        let (mut f, lam, _) = build(&fixed, None, None);
        f.lp.set_objective(vec![(lam, Rational::one())]);
        lp_solves += 1;
        let sol = solve_lp(&f.lp);
        if sol.status != LpStatus::Optimal {
            return Err(Error::Verification(format!("minimax LP ended {:?}", sol.status)));
        }
        let level = sol.values[lam].clone();
        levels.push(level.clone());
        let round = levels.len();
        let before = history.len();
        for i in 0..n {
            if fixed[i].is_some() {
                continue;
            }
            let (mut g, _, eps) = build(&fixed, Some(&level), Some(i));
            g.lp.sense = Sense::Maximize;
            g.lp.set_objective(vec![(eps, Rational::one())]);
            lp_solves += 1;
            let aux = solve_lp(&g.lp);
            if aux.status != LpStatus::Optimal {
                return Err(Error::Verification(format!("probe LP ended {:?}", aux.status)));
            }
            if aux.objective.is_zero() {
                fixed[i] = Some(level.clone());
                let (s, p) = pairs[i];
                history.push(TightPair {
                    supervisor: s,
                    project: p,
                    ratio: level.clone(),
                    round,
                });
            }
        }
        if history.len() == before {
            return Err(Error::Verification("a round fixed no pair".into()));
        }
    }

    let mut allocation = FundingAllocation::zero(instance);
    let mut x = Vec::with_capacity(n);
    for (i, &(s, p)) in pairs.iter().enumerate() {
        let v = &t[i] * fixed[i].as_ref().expect("all pairs fixed");
        allocation.set(s, p, v.clone());
        x.push(v);
    }
    if !allocation.certifies(instance, &counts) {
        return Err(Error::Verification("leximin allocation is not feasible".into()));
    }
    Ok(EgalitarianResult {
        ratios: ratio_vector(&pairs, targets, &x),
        allocation,
        history,
        levels,
        lp_solves,
    })
}

/// Independent check through cumulative top-k sums: the sorted ratio vector
/// is lexicographically minimal iff, for each k, no feasible allocation that
/// matches the first k-1 sums has a smaller k-th sum.
pub fn verify_leximin(
    instance: &Instance,
    m: &Matching,
    targets: &TargetProfile,
    allocation: &FundingAllocation,
) -> bool {
    let counts = m.counts(instance.num_projects());
    if !allocation.certifies(instance, &counts) {
        return false;
    }
    let pairs = supervised_pairs(instance);
    let Some(t) = pairs
        .iter()
        .map(|k| targets.targets.get(k).cloned())
        .collect::<Option<Vec<_>>>()
    else {
        return false;
    };
    let x: Vec<Rational> = pairs
        .iter()
        .map(|&(s, p)| allocation.get(s, p).cloned().unwrap_or_else(Rational::zero))
        .collect();
    let phi = ratio_vector(&pairs, targets, &x);
    let n = pairs.len();
    let prefix: Vec<Rational> = phi
        .iter()
        .scan(Rational::zero(), |acc, v| {
            *acc += v;
            Some(acc.clone())
        })
        .collect();

    for k in 1..=n {
        let mut f = frame(instance, &pairs, &counts);
        // sum of the j largest ratios, for j = 1..=k
        let mut sums = Vec::new();
        for j in 1..=k {
            let tv = f.lp.add_var(format!("t{j}"), None, None);
            let mut terms = vec![(tv, int(j as i64))];
            for (i, ti) in t.iter().enumerate().take(n) {
                let u = f.lp.add_nonneg(format!("u{j}_{i}"));
                // u >= x/t - tv, scaled by t
                f.lp.add_constraint(
                    format!("excess{j}_{i}"),
                    vec![(u, ti.clone()), (f.x[i], -Rational::one()), (tv, ti.clone())],
                    Relation::Ge,
                    Rational::zero(),
                );
                terms.push((u, Rational::one()));
            }
            sums.push(terms);
        }
        let last = sums.pop().expect("k >= 1");
        for (j, terms) in sums.into_iter().enumerate() {
            f.lp.add_constraint(format!("prefix{}", j + 1), terms, Relation::Le, prefix[j].clone());
        }
        f.lp.set_objective(last);
        let sol = solve_lp(&f.lp);
        if sol.status != LpStatus::Optimal || sol.objective < prefix[k - 1] {
            return false;
        }
    }
    true
}

#[derive(Debug, Serialize)]
pub struct AllocationRow {
    pub supervisor: String,
    pub project: String,
    pub x: String,
    pub target: String,
    pub ratio: String,
    pub round_fixed: usize,
}

#[derive(Debug, Serialize)]
pub struct AllocationReport {
    pub pairs: Vec<AllocationRow>,
    pub sorted_ratios: Vec<String>,
    pub rounds: usize,
    pub lp_solves: usize,
}

impl AllocationReport {
    pub fn new(instance: &Instance, targets: &TargetProfile, result: &EgalitarianResult) -> Self {
        let round_of: BTreeMap<(usize, usize), usize> = result
            .history
            .iter()
            .map(|h| ((h.supervisor, h.project), h.round))
            .collect();
        let pairs = result
            .allocation
            .iter()
            .map(|(&(s, p), x)| {
                let t = &targets.targets[&(s, p)];
                AllocationRow {
                    supervisor: instance.supervisor(s).id.clone(),
                    project: instance.project(p).id.clone(),
                    x: rational::render_fraction(x),
                    target: rational::render_fraction(t),
                    ratio: rational::render_fraction(&(x / t)),
                    round_fixed: round_of[&(s, p)],
                }
            })
            .collect();
        AllocationReport {
            pairs,
            sorted_ratios: result.ratios.iter().map(rational::render_fraction).collect(),
            rounds: result.rounds(),
            lp_solves: result.lp_solves,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gadget, RawInstance};
    use crate::rational::frac;

    /// One project, one matched applicant, budgets 1/4 and 2.
    pub(crate) fn fixture() -> (Instance, Matching) {
        let mut raw = RawInstance::default();
        raw.applicant("a1", &["p1"])
            .project("p1", 1, &["a1"])
            .supervisor("s1", frac(1, 4), &["p1"])
            .supervisor("s2", int(2), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let m = Matching::from_named(&inst, &[("a1", "p1")]).unwrap();
        (inst, m)
    }

    #[test]
    fn fixture_allocation() {
        let (inst, m) = fixture();
        let t = default_targets(&inst, &m).unwrap();
        let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Strict).unwrap();
        assert_eq!(r.allocation.get(0, 0), Some(&frac(1, 4)));
        assert_eq!(r.allocation.get(1, 0), Some(&frac(3, 4)));
        assert_eq!(r.ratios, vec![frac(3, 2), frac(1, 2)]);
        assert_eq!(r.levels, vec![frac(3, 2), frac(1, 2)]);
        assert_eq!(r.history[0].supervisor, 1);
        assert_eq!(r.history[0].round, 1);
        assert_eq!(r.history[1].round, 2);
        assert!(verify_leximin(&inst, &m, &t, &r.allocation));
    }

    #[test]
    fn perturbed_fixture_fails_verification() {
        let (inst, m) = fixture();
        let t = default_targets(&inst, &m).unwrap();
        let mut alloc = FundingAllocation::zero(&inst);
        alloc.set(0, 0, frac(3, 20));
        alloc.set(1, 0, frac(17, 20));
        assert!(!verify_leximin(&inst, &m, &t, &alloc));
    }

    #[test]
    fn default_targets_example1() {
        let inst = Gadget::Example1.instance();
        let m = Matching::from_named(&inst, &[("a1", "p2")]).unwrap();
        let t = default_targets(&inst, &m).unwrap();
        assert_eq!(t.get(0, 0), Some(&int(1)));
        assert_eq!(t.get(0, 1), Some(&frac(1, 2)));
        assert_eq!(t.get(1, 1), Some(&frac(1, 2)));
        assert!(t.validate(&inst, TargetMode::Strict).unwrap().is_empty());
    }

    #[test]
    fn empty_matching_is_all_zero() {
        let inst = Gadget::Example3Cycle.instance();
        let m = Matching::empty(4);
        let t = default_targets(&inst, &m).unwrap();
        let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Strict).unwrap();
        assert!(r.allocation.iter().all(|(_, x)| x.is_zero()));
        assert!(r.ratios.iter().all(|x| x.is_zero()));
        assert_eq!(r.rounds(), 1);
    }

    #[test]
    fn ample_budgets_split_evenly() {
        let mut raw = RawInstance::default();
        raw.applicant("a1", &["p1"])
            .applicant("a2", &["p2"])
            .project("p1", 1, &["a1"])
            .project("p2", 1, &["a2"])
            .supervisor("s1", int(5), &["p1", "p2"])
            .supervisor("s2", int(5), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let m = Matching::from_named(&inst, &[("a1", "p1"), ("a2", "p2")]).unwrap();
        let t = default_targets(&inst, &m).unwrap();
        let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Strict).unwrap();
        assert_eq!(r.allocation.get(0, 0), Some(&frac(1, 2)));
        assert_eq!(r.allocation.get(1, 0), Some(&frac(1, 2)));
        assert_eq!(r.allocation.get(0, 1), Some(&int(1)));
        assert!(r.ratios.iter().all(|x| *x == int(1)));
    }

    #[test]
    fn infeasible_matching_is_rejected() {
        let inst = Gadget::Example1.instance();
        let m = Matching::from_named(&inst, &[("a2", "p1")]).unwrap();
        let t = default_targets(&inst, &m).unwrap();
        assert!(matches!(
            egalitarian_allocation(&inst, &m, &t, TargetMode::Strict),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn strict_mode_rejects_unnormalised_targets() {
        let inst = Gadget::Example3Cycle.instance();
        let m = Matching::from_named(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]).unwrap();
        let t = default_targets(&inst, &m).unwrap().scaled(&int(2));
        assert!(matches!(t.validate(&inst, TargetMode::Strict), Err(Error::Targets(_))));
        assert!(!t.validate(&inst, TargetMode::Lenient).unwrap().is_empty());
        let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Lenient).unwrap();
        let base = egalitarian_allocation(&inst, &m, &t.scaled(&frac(1, 2)), TargetMode::Strict).unwrap();
        assert_eq!(r.allocation, base.allocation);
    }

    #[test]
    fn target_file_parsing() {
        let (inst, _) = fixture();
        let t = TargetProfile::from_json(
            &inst,
            r#"{"targets":[{"supervisor":"s1","project":"p1","target":"1/3"},{"supervisor":"s2","project":"p1","target":"2/3"}]}"#,
        )
        .unwrap();
        assert_eq!(t.get(0, 0), Some(&frac(1, 3)));
        assert!(TargetProfile::from_json(
            &inst,
            r#"{"targets":[{"supervisor":"s9","project":"p1","target":"1"}]}"#
        )
        .is_err());
        let missing = TargetProfile::from_json(&inst, r#"{"targets":[]}"#).unwrap();
        assert!(missing.validate(&inst, TargetMode::Lenient).is_err());
    }

    #[test]
    fn report_shape() {
        let (inst, m) = fixture();
        let t = default_targets(&inst, &m).unwrap();
        let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Strict).unwrap();
        let js = serde_json::to_value(AllocationReport::new(&inst, &t, &r)).unwrap();
        assert_eq!(js["pairs"][0]["x"], "1/4");
        assert_eq!(js["pairs"][0]["ratio"], "1/2");
        assert_eq!(js["pairs"][0]["round_fixed"], 2);
        assert_eq!(js["pairs"][1]["ratio"], "3/2");
    }
}

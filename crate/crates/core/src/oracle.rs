//! Exhaustive ground truth for tiny instances, plus the stable-marriage
//! reductions used to cross-check the hardness constructions.
//!
//! Everything here is exponential and guarded by explicit size limits.

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::model::{FeasibilityFunction, Instance, RawInstance, RawProject, RawSupervisor};
use crate::rational;
use crate::stability::{Checker, StabilityLevel, StabilityVerdict};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

/// Largest applicant count enumerated by default.
pub const DEFAULT_GUARD: usize = 10;
/// Largest number of men in a stable-marriage instance.
pub const SMTI_GUARD: usize = 3;
/// Environment variable overriding [`DEFAULT_GUARD`].
pub const GUARD_ENV: &str = "CUTOFFMATCH_GUARD";

/// [`DEFAULT_GUARD`], or the integer in `CUTOFFMATCH_GUARD` when set.
pub fn guard_from_env() -> Result<usize> {
    match std::env::var(GUARD_ENV) {
        Err(_) => Ok(DEFAULT_GUARD),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidMatching(format!("{GUARD_ENV} must be a non-negative integer, got {v:?}"))),
    }
}

fn check_guard(instance: &Instance, guard: usize) -> Result<()> {
    if instance.num_applicants() > guard {
        return Err(Error::SizeGuard {
            what: "applicants",
            actual: instance.num_applicants(),
            limit: guard,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enumeration {
    pub guard: usize,
    /// Skip matchings larger than this.
    pub max_size: Option<usize>,
    /// Prune branches with justified envy.
    pub fair_only: bool,
}

impl Default for Enumeration {
    fn default() -> Self {
        Enumeration {
            guard: DEFAULT_GUARD,
            max_size: None,
            fair_only: false,
        }
    }
}

struct Search<'c, 'a, F> {
    checker: &'c Checker<'a, F>,
    opts: Enumeration,
    assignment: Vec<Option<usize>>,
    counts: Vec<usize>,
    size: usize,
}

impl<F: FeasibilityFunction> Search<'_, '_, F> {
    /// Would giving `choice` to `a` create envy with someone already placed?
    fn envy(&self, a: usize, choice: Option<usize>) -> bool {
        let inst = self.checker.instance();
        self.assignment[..a].iter().enumerate().any(|(b, &q)| {
            let a_envies = q.is_some_and(|q| inst.applicant_prefers(a, q, choice) && inst.project_prefers(q, a, b));
            let b_envies = choice.is_some_and(|p| inst.applicant_prefers(b, p, q) && inst.project_prefers(p, b, a));
            a_envies || b_envies
        })
    }

    fn run(&mut self, a: usize, visit: &mut dyn FnMut(&Matching) -> ControlFlow<()>) -> ControlFlow<()> {
        let inst = self.checker.instance();
        if a == inst.num_applicants() {
            return visit(&Matching::from_assignment(self.assignment.clone()));
        }
        let room = self.opts.max_size.is_none_or(|k| self.size < k);
        for &p in inst.applicant_prefs(a) {
            if !room || !inst.mutually_acceptable(a, p) || self.counts[p] >= inst.capacity(p) {
                continue;
            }
            if self.opts.fair_only && self.envy(a, Some(p)) {
                continue;
            }
            self.counts[p] += 1;
            // heredity: an infeasible partial matching has no feasible extension
            if self.checker.counts_feasible(&self.counts) {
                self.assignment[a] = Some(p);
                self.size += 1;
                let flow = self.run(a + 1, visit);
                self.size -= 1;
                self.assignment[a] = None;
                if flow.is_break() {
                    self.counts[p] -= 1;
                    return flow;
                }
            }
            self.counts[p] -= 1;
        }
        if self.opts.fair_only && self.envy(a, None) {
            return ControlFlow::Continue(());
        }
        self.run(a + 1, visit)
    }
}

/// Visits every valid feasible matching once, applicant by applicant, each
/// trying her projects in preference order before staying unmatched.
pub fn for_each_matching<F: FeasibilityFunction>(
    checker: &Checker<'_, F>,
    opts: Enumeration,
    mut visit: impl FnMut(&Matching) -> ControlFlow<()>,
) -> Result<()> {
    let inst = checker.instance();
    check_guard(inst, opts.guard)?;
    if !checker.counts_feasible(&vec![0; inst.num_projects()]) {
        return Ok(());
    }
    let mut search = Search {
        checker,
        opts,
        assignment: vec![None; inst.num_applicants()],
        counts: vec![0; inst.num_projects()],
        size: 0,
    };
    let _ = search.run(0, &mut visit);
    Ok(())
}

/// All valid feasible matchings under the supervisor budgets.
pub fn enumerate_matchings(instance: &Instance, opts: Enumeration) -> Result<Vec<Matching>> {
    let checker = Checker::budget(instance);
    let mut out = Vec::new();
    for_each_matching(&checker, opts, |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub entries: Vec<(Matching, StabilityVerdict)>,
}

impl Classification {
    /// Matchings whose level is at least `level`.
    pub fn at_least(&self, level: StabilityLevel) -> Vec<&Matching> {
        self.entries
            .iter()
            .filter(|(_, v)| v.level >= level)
            .map(|(m, _)| m)
            .collect()
    }

    pub fn exactly(&self, level: StabilityLevel) -> Vec<&Matching> {
        self.entries
            .iter()
            .filter(|(_, v)| v.level == level)
            .map(|(m, _)| m)
            .collect()
    }

    pub fn level_of(&self, m: &Matching) -> Option<StabilityLevel> {
        self.entries.iter().find(|(x, _)| x == m).map(|(_, v)| v.level)
    }

    /// Number of matchings at each level, lowest level first.
    pub fn histogram(&self) -> Vec<(StabilityLevel, usize)> {
        StabilityLevel::ALL
            .iter()
            .map(|&l| (l, self.entries.iter().filter(|(_, v)| v.level == l).count()))
            .collect()
    }
}

/// Stability verdict of every feasible matching.
pub fn classify_all(instance: &Instance, guard: usize) -> Result<Classification> {
    let checker = Checker::budget(instance);
    let mut matchings = Vec::new();
    for_each_matching(
        &checker,
        Enumeration {
            guard,
            ..Default::default()
        },
        |m| {
            matchings.push(m.clone());
            ControlFlow::Continue(())
        },
    )?;
    let entries = matchings
        .into_iter()
        .map(|m| {
            let v = checker.check_stability(&m);
            (m, v)
        })
        .collect();
    Ok(Classification { entries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxCutoffStable {
    pub size: usize,
    /// Every cutoff stable matching of that size, in enumeration order.
    pub witnesses: Vec<Matching>,
}

pub fn max_cutoff_stable_bruteforce(instance: &Instance, guard: usize) -> Result<MaxCutoffStable> {
    let checker = Checker::budget(instance);
    let opts = Enumeration {
        guard,
        max_size: None,
        fair_only: true,
    };
    let mut best = MaxCutoffStable {
        size: 0,
        witnesses: Vec::new(),
    };
    for_each_matching(&checker, opts, |m| {
        let k = m.size();
        if k >= best.size && checker.is_cutoff_stable(m) {
            if k > best.size {
                best.size = k;
                best.witnesses.clear();
            }
            best.witnesses.push(m.clone());
        }
        ControlFlow::Continue(())
    })?;
    Ok(best)
}

/// First strongly stable matching in enumeration order, if any.
pub fn find_strongly_stable(instance: &Instance, guard: usize) -> Result<Option<Matching>> {
    let checker = Checker::budget(instance);
    let opts = Enumeration {
        guard,
        max_size: None,
        fair_only: true,
    };
    let mut found = None;
    for_each_matching(&checker, opts, |m| {
        if checker.is_strongly_stable(m) {
            found = Some(m.clone());
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(found)
}

// ---------------------------------------------------------------------------
// Stable marriage with ties
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WomanPrefs {
    Strict(Vec<usize>),
    /// Indifferent between exactly two men; the order only names them.
    Tie(usize, usize),
}

impl WomanPrefs {
    fn men(&self) -> Vec<usize> {
        match self {
            WomanPrefs::Strict(l) => l.clone(),
            WomanPrefs::Tie(a, b) => vec![*a, *b],
        }
    }

    /// Rank of `m`; both tied men share rank 0.
    fn rank(&self, m: usize) -> Option<usize> {
        match self {
            WomanPrefs::Strict(l) => l.iter().position(|&x| x == m),
            WomanPrefs::Tie(a, b) => (m == *a || m == *b).then_some(0),
        }
    }
}

/// Men have strict lists; each woman is strict or holds a single tie of two.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SmtiInstance {
    pub men: Vec<Vec<usize>>,
    pub women: Vec<WomanPrefs>,
}

impl SmtiInstance {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Smti(msg));
        let (nm, nw) = (self.men.len(), self.women.len());
        for (u, list) in self.men.iter().enumerate() {
            for (k, &w) in list.iter().enumerate() {
                if w >= nw {
                    return bad(format!("man {u} lists unknown woman {w}"));
                }
                if list[..k].contains(&w) {
                    return bad(format!("man {u} lists woman {w} twice"));
                }
            }
        }
        for (w, prefs) in self.women.iter().enumerate() {
            let men = prefs.men();
            if let WomanPrefs::Tie(a, b) = prefs {
                if a == b {
                    return bad(format!("woman {w} ties man {a} with himself"));
                }
            }
            for (k, &u) in men.iter().enumerate() {
                if u >= nm {
                    return bad(format!("woman {w} lists unknown man {u}"));
                }
                if men[..k].contains(&u) {
                    return bad(format!("woman {w} lists man {u} twice"));
                }
            }
        }
        for u in 0..nm {
            for w in 0..nw {
                if self.men[u].contains(&w) != self.women[w].men().contains(&u) {
                    return bad(format!("acceptability of man {u} and woman {w} is not mutual"));
                }
            }
        }
        Ok(())
    }

    fn man_prefers(&self, u: usize, w: usize, current: Option<usize>) -> bool {
        let Some(r) = self.men[u].iter().position(|&x| x == w) else {
            return false;
        };
        current.is_none_or(|c| self.men[u].iter().position(|&x| x == c).is_some_and(|rc| r < rc))
    }

    fn woman_prefers(&self, w: usize, u: usize, current: Option<usize>) -> bool {
        let Some(r) = self.women[w].rank(u) else {
            return false;
        };
        current.is_none_or(|c| self.women[w].rank(c).is_some_and(|rc| r < rc))
    }

    /// No pair where both sides strictly prefer each other.
    pub fn is_weakly_stable(&self, husband_of: &[Option<usize>], wife_of: &[Option<usize>]) -> bool {
        (0..self.men.len()).all(|u| {
            self.men[u].iter().all(|&w| {
                wife_of[u] == Some(w)
                    || !(self.man_prefers(u, w, wife_of[u]) && self.woman_prefers(w, u, husband_of[w]))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SmtiSummary {
    pub max_size: usize,
    /// Some weakly stable matching matches every man and every woman.
    pub has_complete: bool,
    pub weakly_stable: usize,
}

pub fn smti_weakly_stable_bruteforce(smti: &SmtiInstance) -> Result<SmtiSummary> {
    smti.validate()?;
    if smti.men.len() > SMTI_GUARD {
        return Err(Error::SizeGuard {
            what: "men",
            actual: smti.men.len(),
            limit: SMTI_GUARD,
        });
    }
    fn go(
        smti: &SmtiInstance,
        u: usize,
        wife_of: &mut Vec<Option<usize>>,
        husband_of: &mut Vec<Option<usize>>,
        out: &mut SmtiSummary,
    ) {
        if u == smti.men.len() {
            if smti.is_weakly_stable(husband_of, wife_of) {
                let size = wife_of.iter().flatten().count();
                out.weakly_stable += 1;
                out.max_size = out.max_size.max(size);
                out.has_complete |= size == smti.men.len() && size == smti.women.len();
            }
            return;
        }
        for &w in &smti.men[u] {
            if husband_of[w].is_none() {
                husband_of[w] = Some(u);
                wife_of[u] = Some(w);
                go(smti, u + 1, wife_of, husband_of, out);
                wife_of[u] = None;
                husband_of[w] = None;
            }
        }
        go(smti, u + 1, wife_of, husband_of, out);
    }
    let mut out = SmtiSummary {
        max_size: 0,
        has_complete: false,
        weakly_stable: 0,
    };
    go(
        smti,
        0,
        &mut vec![None; smti.men.len()],
        &mut vec![None; smti.women.len()],
        &mut out,
    );
    Ok(out)
}

struct Builder {
    raw: RawInstance,
}

impl Builder {
    fn new() -> Self {
        Builder {
            raw: RawInstance::default(),
        }
    }

    fn applicant(&mut self, id: String, prefs: Vec<String>) {
        self.raw.applicants.push(id.clone());
        self.raw.applicant_prefs.insert(id, prefs);
    }

    fn project(&mut self, id: String, prefs: Vec<String>) {
        self.raw.projects.push(RawProject { id, capacity: 1, prefs });
    }

    fn supervisor(&mut self, id: String, projects: Vec<String>) {
        self.raw.supervisors.push(RawSupervisor {
            id,
            budget: rational::int(1),
            projects,
        });
    }

    fn finish(self) -> Result<Instance> {
        Instance::validate(&self.raw)
    }
}

fn names(prefix: &str, ids: &[usize]) -> Vec<String> {
    ids.iter().map(|i| format!("{prefix}{i}")).collect()
}

/// Instance that has a strongly stable matching iff `smti` has a complete
/// weakly stable matching (for as many men as women).
///
/// Men become single-seat projects `u{i}`. Strict women become applicants
/// `w{j}`; tie women become four-cycle gadgets `g{j}_a1..a4` over projects
/// `g{j}_p1..p4`, whose first and third applicants reach the two tied men.
/// The unsolvable pair `x_a1, x_a2` over `x_p1, x_p2` plus an applicant
/// `x_star` who prefers every man project to `x_p1` closes the construction.
pub fn reduce_smti_strong(smti: &SmtiInstance) -> Result<Instance> {
    smti.validate()?;
    let mut b = Builder::new();
    // applicant id standing in for woman j at man i
    let mut proxy = vec![Vec::<(usize, String)>::new(); smti.men.len()];

    for (j, prefs) in smti.women.iter().enumerate() {
        match prefs {
            WomanPrefs::Strict(list) => {
                let id = format!("w{j}");
                b.applicant(id.clone(), names("u", list));
                for &i in list {
                    proxy[i].push((j, id.clone()));
                }
            }
            WomanPrefs::Tie(i1, i2) => {
                let a = |k: usize| format!("g{j}_a{k}");
                let p = |k: usize| format!("g{j}_p{k}");
                b.applicant(a(1), vec![p(2), p(1), format!("u{i1}")]);
                b.applicant(a(2), vec![p(3), p(2)]);
                b.applicant(a(3), vec![p(4), p(3), format!("u{i2}")]);
                b.applicant(a(4), vec![p(1), p(4)]);
                b.project(p(1), vec![a(1), a(4)]);
                b.project(p(2), vec![a(2), a(1)]);
                b.project(p(3), vec![a(3), a(2)]);
                b.project(p(4), vec![a(4), a(3)]);
                b.supervisor(format!("g{j}_s1"), vec![p(1), p(3)]);
                b.supervisor(format!("g{j}_s2"), vec![p(2)]);
                b.supervisor(format!("g{j}_s3"), vec![p(4)]);
                proxy[*i1].push((j, a(1)));
                proxy[*i2].push((j, a(3)));
            }
        }
    }
    for (i, list) in smti.men.iter().enumerate() {
        let mut prefs: Vec<String> = list
            .iter()
            .map(|w| proxy[i].iter().find(|(j, _)| j == w).expect("mutual").1.clone())
            .collect();
        prefs.push("x_star".into());
        b.project(format!("u{i}"), prefs);
        b.supervisor(format!("su{i}"), vec![format!("u{i}")]);
    }
    b.applicant("x_a1".into(), vec!["x_p2".into(), "x_p1".into()]);
    b.applicant("x_a2".into(), vec!["x_p1".into(), "x_p2".into()]);
    let mut star: Vec<String> = (0..smti.men.len()).map(|i| format!("u{i}")).collect();
    star.push("x_p1".into());
    b.applicant("x_star".into(), star);
    b.project("x_p1".into(), vec!["x_star".into(), "x_a1".into(), "x_a2".into()]);
    b.project("x_p2".into(), vec!["x_a2".into(), "x_a1".into()]);
    b.supervisor("x_s".into(), vec!["x_p1".into(), "x_p2".into()]);
    b.finish()
}

/// Instance whose largest cutoff stable matching has the size of the largest
/// weakly stable matching of `smti`; the returned offset between the two is 0.
///
/// Men become applicants `u{i}`. A strict woman becomes project `w{j}` with
/// her own supervisor; a tie woman becomes projects `w{j}_1`, `w{j}_2` under
/// one unit-budget supervisor, wired like the two-project unsolvable instance.
pub fn reduce_smti_maxsize(smti: &SmtiInstance) -> Result<(Instance, usize)> {
    smti.validate()?;
    let mut b = Builder::new();
    for (i, list) in smti.men.iter().enumerate() {
        let mut prefs = Vec::new();
        for &j in list {
            match &smti.women[j] {
                WomanPrefs::Strict(_) => prefs.push(format!("w{j}")),
                WomanPrefs::Tie(first, _) if *first == i => {
                    prefs.push(format!("w{j}_2"));
                    prefs.push(format!("w{j}_1"));
                }
                WomanPrefs::Tie(..) => {
                    prefs.push(format!("w{j}_1"));
                    prefs.push(format!("w{j}_2"));
                }
            }
        }
        b.applicant(format!("u{i}"), prefs);
    }
    for (j, prefs) in smti.women.iter().enumerate() {
        match prefs {
            WomanPrefs::Strict(list) => {
                b.project(format!("w{j}"), names("u", list));
                b.supervisor(format!("s{j}"), vec![format!("w{j}")]);
            }
            WomanPrefs::Tie(i, k) => {
                b.project(format!("w{j}_1"), names("u", &[*i, *k]));
                b.project(format!("w{j}_2"), names("u", &[*k, *i]));
                b.supervisor(format!("s{j}"), vec![format!("w{j}_1"), format!("w{j}_2")]);
            }
        }
    }
    Ok((b.finish()?, 0))
}

/// Random restricted instance: each pair is acceptable with probability
/// `density`, and a woman accepted by exactly two men is tied half the time.
pub fn random_smti(seed: u64, men: usize, women: usize, density: f64) -> SmtiInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists = vec![Vec::new(); men];
    let mut accepted = vec![Vec::new(); women];
    for (u, list) in lists.iter_mut().enumerate() {
        for (w, acc) in accepted.iter_mut().enumerate() {
            if rng.gen_bool(density) {
                list.push(w);
                acc.push(u);
            }
        }
        list.shuffle(&mut rng);
    }
    let women = accepted
        .into_iter()
        .map(|mut acc| {
            if acc.len() == 2 && rng.gen_bool(0.5) {
                WomanPrefs::Tie(acc[0], acc[1])
            } else {
                acc.shuffle(&mut rng);
                WomanPrefs::Strict(acc)
            }
        })
        .collect();
    SmtiInstance { men: lists, women }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Ordered subsets of `0..n`.
fn arrangements(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .flat_map(|mask| {
            let items: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            permutations(&items)
        })
        .collect()
}

/// Every restricted instance with the given numbers of men and women.
pub fn all_smti(men: usize, women: usize) -> Vec<SmtiInstance> {
    let options = arrangements(women);
    let mut out = Vec::new();
    let mut choice = vec![0usize; men];
    loop {
        let lists: Vec<Vec<usize>> = choice.iter().map(|&c| options[c].clone()).collect();
        let accepted: Vec<Vec<usize>> = (0..women)
            .map(|w| (0..men).filter(|&u| lists[u].contains(&w)).collect())
            .collect();
        let per_woman: Vec<Vec<WomanPrefs>> = accepted
            .iter()
            .map(|acc| {
                let mut v: Vec<WomanPrefs> = permutations(acc).into_iter().map(WomanPrefs::Strict).collect();
                if acc.len() == 2 {
                    v.push(WomanPrefs::Tie(acc[0], acc[1]));
                }
                v
            })
            .collect();
        let mut pick = vec![0usize; women];
        loop {
            out.push(SmtiInstance {
                men: lists.clone(),
                women: pick.iter().zip(&per_woman).map(|(&k, v)| v[k].clone()).collect(),
            });
            if !advance(&mut pick, |w| per_woman[w].len()) {
                break;
            }
        }
        if !advance(&mut choice, |_| options.len()) {
            break;
        }
    }
    out
}

/// Odometer step; false once every digit wrapped.
fn advance(digits: &mut [usize], base: impl Fn(usize) -> usize) -> bool {
    for (k, d) in digits.iter_mut().enumerate() {
        *d += 1;
        if *d < base(k) {
            return true;
        }
        *d = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gadget;

    fn m(inst: &Instance, pairs: &[(&str, &str)]) -> Matching {
        Matching::from_named(inst, pairs).unwrap()
    }

    #[test]
    fn example2_enumerates_five() {
        let inst = Gadget::Example2Unsolvable.instance();
        let all = enumerate_matchings(&inst, Enumeration::default()).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(all[0], m(&inst, &[("a1", "p2")]));
        assert!(all.contains(&Matching::empty(2)));
    }

    #[test]
    fn example1_has_three_feasible() {
        let inst = Gadget::Example1.instance();
        let all = enumerate_matchings(&inst, Enumeration::default()).unwrap();
        assert_eq!(
            all,
            vec![m(&inst, &[("a1", "p2")]), m(&inst, &[("a2", "p2")]), Matching::empty(2)]
        );
    }

    #[test]
    fn empty_instance_has_empty_matching() {
        let inst = Instance::validate(&RawInstance::default()).unwrap();
        assert_eq!(
            enumerate_matchings(&inst, Enumeration::default()).unwrap(),
            vec![Matching::empty(0)]
        );
    }

    #[test]
    fn guard_is_enforced() {
        let inst = Gadget::Example3Cycle.instance();
        let opts = Enumeration {
            guard: 3,
            ..Default::default()
        };
        assert!(matches!(enumerate_matchings(&inst, opts), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn fair_only_matches_filter() {
        for g in Gadget::ALL {
            let inst = g.instance();
            let all = enumerate_matchings(&inst, Enumeration::default()).unwrap();
            let fair = enumerate_matchings(
                &inst,
                Enumeration {
                    fair_only: true,
                    ..Default::default()
                },
            )
            .unwrap();
            let expected: Vec<_> = all
                .into_iter()
                .filter(|x| crate::stability::is_fair(&inst, x).fair)
                .collect();
            assert_eq!(fair, expected, "{g}");
        }
    }

    #[test]
    fn example3_classification() {
        let inst = Gadget::Example3Cycle.instance();
        let c = classify_all(&inst, DEFAULT_GUARD).unwrap();
        let m1 = m(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]);
        let m2 = m(&inst, &[("a2", "p2"), ("a3", "p3"), ("a4", "p4")]);
        let mut expect = vec![&m1, &m2];
        expect.sort_by_key(|x| c.entries.iter().position(|(y, _)| y == *x));
        assert_eq!(c.at_least(StabilityLevel::Strong), expect);
        assert_eq!(c.at_least(StabilityLevel::Cutoff), expect);
        assert_eq!(c.at_least(StabilityLevel::Weak), expect);
    }

    #[test]
    fn max_cutoff_stable_examples() {
        let inst = Gadget::Example2Unsolvable.instance();
        let r = max_cutoff_stable_bruteforce(&inst, DEFAULT_GUARD).unwrap();
        assert_eq!(r.size, 1);
        assert_eq!(r.witnesses, vec![m(&inst, &[("a1", "p1")]), m(&inst, &[("a2", "p2")])]);
        let inst = Gadget::Example4Distinct.instance();
        assert_eq!(max_cutoff_stable_bruteforce(&inst, DEFAULT_GUARD).unwrap().size, 2);
        assert!(
            find_strongly_stable(&Gadget::Example2Unsolvable.instance(), DEFAULT_GUARD)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn no_acceptable_pairs_gives_zero() {
        let mut raw = RawInstance::default();
        raw.applicant("a1", &[])
            .project("p1", 1, &[])
            .supervisor("s", rational::int(1), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let r = max_cutoff_stable_bruteforce(&inst, DEFAULT_GUARD).unwrap();
        assert_eq!(r.size, 0);
        assert_eq!(r.witnesses, vec![Matching::empty(1)]);
    }

    fn one_pair() -> SmtiInstance {
        SmtiInstance {
            men: vec![vec![0]],
            women: vec![WomanPrefs::Strict(vec![0])],
        }
    }

    fn tie_only() -> SmtiInstance {
        SmtiInstance {
            men: vec![vec![0], vec![0]],
            women: vec![WomanPrefs::Tie(0, 1)],
        }
    }

    #[test]
    fn smti_bruteforce_examples() {
        let s = smti_weakly_stable_bruteforce(&one_pair()).unwrap();
        assert_eq!((s.max_size, s.has_complete), (1, true));
        let lonely = SmtiInstance {
            men: vec![vec![]],
            women: vec![WomanPrefs::Strict(vec![])],
        };
        assert!(!smti_weakly_stable_bruteforce(&lonely).unwrap().has_complete);
        let s = smti_weakly_stable_bruteforce(&tie_only()).unwrap();
        assert_eq!((s.max_size, s.has_complete, s.weakly_stable), (1, false, 2));
    }

    #[test]
    fn smti_validation() {
        let bad = SmtiInstance {
            men: vec![vec![0]],
            women: vec![WomanPrefs::Strict(vec![])],
        };
        assert!(matches!(bad.validate(), Err(Error::Smti(_))));
        let bad = SmtiInstance {
            men: vec![vec![0]],
            women: vec![WomanPrefs::Tie(0, 0)],
        };
        assert!(bad.validate().is_err());
        assert!(reduce_smti_strong(&bad).is_err());
        assert!(reduce_smti_maxsize(&bad).is_err());
        let big = random_smti(1, 4, 4, 0.5);
        assert!(matches!(
            smti_weakly_stable_bruteforce(&big),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn strong_reduction_shapes() {
        let inst = reduce_smti_strong(&one_pair()).unwrap();
        assert_eq!(inst.num_applicants(), 4);
        let found = find_strongly_stable(&inst, 20).unwrap().unwrap();
        assert!(found.contains(inst.applicant_index("w0").unwrap(), inst.project_index("u0").unwrap()));

        let inst = reduce_smti_strong(&tie_only()).unwrap();
        assert_eq!(inst.num_applicants(), 7);
        assert_eq!(inst.num_projects(), 8);

        let inst = reduce_smti_strong(&SmtiInstance::default()).unwrap();
        assert_eq!(inst.num_applicants(), 3);
        let found = find_strongly_stable(&inst, 20).unwrap().unwrap();
        assert_eq!(found.to_named(&inst), vec![("x_star".to_string(), "x_p1".to_string())]);
    }

    #[test]
    fn maxsize_reduction_examples() {
        let (inst, offset) = reduce_smti_maxsize(&tie_only()).unwrap();
        assert_eq!(offset, 0);
        assert_eq!(max_cutoff_stable_bruteforce(&inst, DEFAULT_GUARD).unwrap().size, 1);
        let (inst, _) = reduce_smti_maxsize(&one_pair()).unwrap();
        assert_eq!(inst.num_projects(), 1);
        assert_eq!(max_cutoff_stable_bruteforce(&inst, DEFAULT_GUARD).unwrap().size, 1);
    }

    #[test]
    fn exhaustive_smti_counts() {
        // man lists: 5 arrangements of two women, per woman 1, 1 or 3 preference options
        assert_eq!(all_smti(1, 1).len(), 2);
        assert_eq!(all_smti(0, 0).len(), 1);
        assert!(all_smti(2, 2).iter().all(|s| s.validate().is_ok()));
    }

    #[test]
    fn random_smti_is_restricted_and_deterministic() {
        for seed in 0..20 {
            let s = random_smti(seed, 3, 3, 0.6);
            s.validate().unwrap();
            assert_eq!(s, random_smti(seed, 3, 3, 0.6));
        }
    }
}

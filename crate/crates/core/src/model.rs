//! Instance data model: applicants, projects, supervisors and their budgets.
//!
//! An [`Instance`] is immutable once validated. Entities are addressed by
//! dense indices (`usize`) in declaration order; string ids only matter at
//! the I/O boundary.

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use indexmap::IndexMap;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cell::{Cell, RefCell};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

/// Feasibility of a matching, seen only through its per-project counts.
///
/// Implementations must satisfy `is_feasible(&[0; n]) == true` and be
/// hereditary: lowering any count of a feasible vector keeps it feasible.
pub trait FeasibilityFunction {
    fn is_feasible(&self, counts: &[usize]) -> bool;
}

/// Adapts a closure over count vectors.
#[derive(Debug, Clone, Copy)]
pub struct FromFn<F>(pub F);

impl<F: Fn(&[usize]) -> bool> FeasibilityFunction for FromFn<F> {
    fn is_feasible(&self, counts: &[usize]) -> bool {
        (self.0)(counts)
    }
}

/// Counts evaluations of the wrapped function.
#[derive(Debug)]
pub struct Counting<F> {
    inner: F,
    calls: Cell<usize>,
}

impl<F> Counting<F> {
    pub fn new(inner: F) -> Self {
        Counting {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: FeasibilityFunction> FeasibilityFunction for Counting<F> {
    fn is_feasible(&self, counts: &[usize]) -> bool {
        self.calls.set(self.calls.get() + 1);
        self.inner.is_feasible(counts)
    }
}

/// Remembers verdicts per count vector; valid because feasibility is anonymous.
#[derive(Debug)]
pub struct Memoized<F> {
    inner: F,
    cache: RefCell<HashMap<Vec<usize>, bool>>,
}

impl<F> Memoized<F> {
    pub fn new(inner: F) -> Self {
        Memoized {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: FeasibilityFunction> FeasibilityFunction for Memoized<F> {
    fn is_feasible(&self, counts: &[usize]) -> bool {
        if let Some(&v) = self.cache.borrow().get(counts) {
            return v;
        }
        let v = self.inner.is_feasible(counts);
        self.cache.borrow_mut().insert(counts.to_vec(), v);
        v
    }
}

impl<F: FeasibilityFunction + ?Sized> FeasibilityFunction for &F {
    fn is_feasible(&self, counts: &[usize]) -> bool {
        (**self).is_feasible(counts)
    }
}

// ---------------------------------------------------------------------------
// JSON document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub applicants: Vec<String>,
    pub projects: Vec<RawProject>,
    pub supervisors: Vec<RawSupervisor>,
    #[serde(default)]
    pub applicant_prefs: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProject {
    pub id: String,
    pub capacity: usize,
    #[serde(default)]
    pub prefs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSupervisor {
    pub id: String,
    #[serde(with = "rational::serde_text")]
    pub budget: Rational,
    #[serde(default)]
    pub projects: Vec<String>,
}

impl RawInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serialises");
        s.push('\n');
        s
    }

    pub fn applicant(&mut self, id: &str, prefs: &[&str]) -> &mut Self {
        self.applicants.push(id.to_string());
        self.applicant_prefs
            .insert(id.to_string(), prefs.iter().map(|p| p.to_string()).collect());
        self
    }

    pub fn project(&mut self, id: &str, capacity: usize, prefs: &[&str]) -> &mut Self {
        self.projects.push(RawProject {
            id: id.to_string(),
            capacity,
            prefs: prefs.iter().map(|a| a.to_string()).collect(),
        });
        self
    }

    pub fn supervisor(&mut self, id: &str, budget: Rational, projects: &[&str]) -> &mut Self {
        self.supervisors.push(RawSupervisor {
            id: id.to_string(),
            budget,
            projects: projects.iter().map(|p| p.to_string()).collect(),
        });
        self
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateId,
    DanglingProject,
    DanglingApplicant,
    DuplicatePreference,
    NegativeBudget,
    ProjectWithoutSupervisor,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::DuplicateId => "duplicate id",
            Rule::DanglingProject => "unknown project",
            Rule::DanglingApplicant => "unknown applicant",
            Rule::DuplicatePreference => "duplicate preference entry",
            Rule::NegativeBudget => "negative budget",
            Rule::ProjectWithoutSupervisor => "project without supervisor",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Entity whose record breaks the rule.
    pub entity: String,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {} ({})", v.entity, v.rule, v.detail)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    pub id: String,
    pub capacity: usize,
    /// Acceptable applicants, best first.
    pub prefs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Supervisor {
    pub id: String,
    pub budget: Rational,
    /// Supervised projects in declaration order.
    pub projects: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    applicants: Vec<String>,
    applicant_prefs: Vec<Vec<usize>>,
    projects: Vec<Project>,
    supervisors: Vec<Supervisor>,
    project_supervisors: Vec<Vec<usize>>,
    // rank tables, `None` when unacceptable
    applicant_rank: Vec<Vec<Option<usize>>>,
    project_rank: Vec<Vec<Option<usize>>>,
    warnings: Vec<Violation>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::validate(&RawInstance::from_json(text)?)
    }

    pub fn to_json(&self) -> String {
        self.to_raw().to_json()
    }

    /// Checks every referential rule and builds the indexed instance.
    pub fn validate(raw: &RawInstance) -> Result<Self> {
        let mut violations = Vec::new();
        let mut warnings = Vec::new();
        let mut bad = |entity: &str, rule: Rule, detail: String| {
            violations.push(Violation {
                entity: entity.to_string(),
                rule,
                detail,
            })
        };

        let mut applicant_index = HashMap::new();
        for (i, a) in raw.applicants.iter().enumerate() {
            if applicant_index.insert(a.as_str(), i).is_some() {
                bad(a, Rule::DuplicateId, "applicant listed twice".into());
            }
        }
        let mut project_index = HashMap::new();
        for (i, p) in raw.projects.iter().enumerate() {
            if project_index.insert(p.id.as_str(), i).is_some() {
                bad(&p.id, Rule::DuplicateId, "project listed twice".into());
            }
        }
        let mut supervisor_ids = HashSet::new();
        for s in &raw.supervisors {
            if !supervisor_ids.insert(s.id.as_str()) {
                bad(&s.id, Rule::DuplicateId, "supervisor listed twice".into());
            }
        }

        let n_a = raw.applicants.len();
        let n_p = raw.projects.len();

        let mut applicant_prefs = vec![Vec::new(); n_a];
        for (a, prefs) in &raw.applicant_prefs {
            let Some(&ai) = applicant_index.get(a.as_str()) else {
                bad(
                    a,
                    Rule::DanglingApplicant,
                    "preference list for unknown applicant".into(),
                );
                continue;
            };
            let mut seen = HashSet::new();
            for p in prefs {
                match project_index.get(p.as_str()) {
                    None => bad(a, Rule::DanglingProject, format!("ranks unknown project `{p}`")),
                    Some(&pi) => {
                        if seen.insert(pi) {
                            applicant_prefs[ai].push(pi);
                        } else {
                            bad(a, Rule::DuplicatePreference, format!("ranks `{p}` twice"));
                        }
                    }
                }
            }
        }

        let mut projects = Vec::with_capacity(n_p);
        for p in &raw.projects {
            let mut seen = HashSet::new();
            let mut prefs = Vec::new();
            for a in &p.prefs {
                match applicant_index.get(a.as_str()) {
                    None => bad(&p.id, Rule::DanglingApplicant, format!("ranks unknown applicant `{a}`")),
                    Some(&ai) => {
                        if seen.insert(ai) {
                            prefs.push(ai);
                        } else {
                            bad(&p.id, Rule::DuplicatePreference, format!("ranks `{a}` twice"));
                        }
                    }
                }
            }
            projects.push(Project {
                id: p.id.clone(),
                capacity: p.capacity,
                prefs,
            });
        }

        let mut supervisors = Vec::with_capacity(raw.supervisors.len());
        let mut project_supervisors = vec![Vec::new(); n_p];
        for (si, s) in raw.supervisors.iter().enumerate() {
            if s.budget.is_negative() {
                bad(
                    &s.id,
                    Rule::NegativeBudget,
                    format!("budget {}", rational::render(&s.budget)),
                );
            }
            let mut seen = HashSet::new();
            let mut list = Vec::new();
            for p in &s.projects {
                match project_index.get(p.as_str()) {
                    None => bad(
                        &s.id,
                        Rule::DanglingProject,
                        format!("supervises unknown project `{p}`"),
                    ),
                    Some(&pi) => {
                        if seen.insert(pi) {
                            list.push(pi);
                            project_supervisors[pi].push(si);
                        } else {
                            bad(&s.id, Rule::DuplicatePreference, format!("lists `{p}` twice"));
                        }
                    }
                }
            }
            supervisors.push(Supervisor {
                id: s.id.clone(),
                budget: s.budget.clone(),
                projects: list,
            });
        }

        if !violations.is_empty() {
            return Err(Error::Validation(ValidationReport { violations }));
        }

        for (pi, sups) in project_supervisors.iter().enumerate() {
            if sups.is_empty() {
                warnings.push(Violation {
                    entity: projects[pi].id.clone(),
                    rule: Rule::ProjectWithoutSupervisor,
                    detail: "no supervisor can fund this project".into(),
                });
            }
        }

        let mut applicant_rank = vec![vec![None; n_p]; n_a];
        for (a, prefs) in applicant_prefs.iter().enumerate() {
            for (r, &p) in prefs.iter().enumerate() {
                applicant_rank[a][p] = Some(r);
            }
        }
        let mut project_rank = vec![vec![None; n_a]; n_p];
        for (p, proj) in projects.iter().enumerate() {
            for (r, &a) in proj.prefs.iter().enumerate() {
                project_rank[p][a] = Some(r);
            }
        }

        Ok(Instance {
            applicants: raw.applicants.clone(),
            applicant_prefs,
            projects,
            supervisors,
            project_supervisors,
            applicant_rank,
            project_rank,
            warnings,
        })
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            applicants: self.applicants.clone(),
            projects: self
                .projects
                .iter()
                .map(|p| RawProject {
                    id: p.id.clone(),
                    capacity: p.capacity,
                    prefs: p.prefs.iter().map(|&a| self.applicants[a].clone()).collect(),
                })
                .collect(),
            supervisors: self
                .supervisors
                .iter()
                .map(|s| RawSupervisor {
                    id: s.id.clone(),
                    budget: s.budget.clone(),
                    projects: s.projects.iter().map(|&p| self.projects[p].id.clone()).collect(),
                })
                .collect(),
            applicant_prefs: self
                .applicants
                .iter()
                .zip(&self.applicant_prefs)
                .map(|(a, prefs)| (a.clone(), prefs.iter().map(|&p| self.projects[p].id.clone()).collect()))
                .collect(),
        }
    }

    pub fn num_applicants(&self) -> usize {
        self.applicants.len()
    }

    pub fn num_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn num_supervisors(&self) -> usize {
        self.supervisors.len()
    }

    pub fn applicant_id(&self, a: usize) -> &str {
        &self.applicants[a]
    }

    pub fn applicant_ids(&self) -> &[String] {
        &self.applicants
    }

    pub fn applicant_index(&self, id: &str) -> Option<usize> {
        self.applicants.iter().position(|a| a == id)
    }

    pub fn project_index(&self, id: &str) -> Option<usize> {
        self.projects.iter().position(|p| p.id == id)
    }

    pub fn supervisor_index(&self, id: &str) -> Option<usize> {
        self.supervisors.iter().position(|s| s.id == id)
    }

    pub fn project(&self, p: usize) -> &Project {
        &self.projects[p]
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn supervisor(&self, s: usize) -> &Supervisor {
        &self.supervisors[s]
    }

    pub fn supervisors(&self) -> &[Supervisor] {
        &self.supervisors
    }

    /// `S_p`: supervisors of project `p`, in supervisor order.
    pub fn supervisors_of(&self, p: usize) -> &[usize] {
        &self.project_supervisors[p]
    }

    /// `≻_a`, best first.
    pub fn applicant_prefs(&self, a: usize) -> &[usize] {
        &self.applicant_prefs[a]
    }

    /// Non-fatal findings from validation (projects nobody can fund).
    pub fn warnings(&self) -> &[Violation] {
        &self.warnings
    }

    pub fn capacity(&self, p: usize) -> usize {
        self.projects[p].capacity
    }

    pub fn applicant_rank(&self, a: usize, p: usize) -> Option<usize> {
        self.applicant_rank[a][p]
    }

    pub fn project_rank(&self, p: usize, a: usize) -> Option<usize> {
        self.project_rank[p][a]
    }

    /// Score `|A| - k + 1` of the applicant ranked `k`-th by `p`.
    pub fn score(&self, a: usize, p: usize) -> Option<usize> {
        self.project_rank[p][a].map(|r| self.applicants.len() - r)
    }

    pub fn mutually_acceptable(&self, a: usize, p: usize) -> bool {
        self.applicant_rank[a][p].is_some() && self.project_rank[p][a].is_some()
    }

    /// `p ≻_a current`, where `None` means unmatched (ranked below every
    /// acceptable project).
    pub fn applicant_prefers(&self, a: usize, p: usize, current: Option<usize>) -> bool {
        match (self.applicant_rank[a][p], current) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(r), Some(q)) => match self.applicant_rank[a][q] {
                Some(rq) => r < rq,
                None => true,
            },
        }
    }

    /// `a ≻_p b`.
    pub fn project_prefers(&self, p: usize, a: usize, b: usize) -> bool {
        match (self.project_rank[p][a], self.project_rank[p][b]) {
            (Some(ra), Some(rb)) => ra < rb,
            (Some(_), None) => true,
            _ => false,
        }
    }

    /// Sum of all budgets; stands in for an unbounded arc capacity.
    pub fn total_budget(&self) -> Rational {
        self.supervisors.iter().fold(Rational::zero(), |acc, s| acc + &s.budget)
    }

    pub fn all_budgets_integral(&self) -> bool {
        self.supervisors.iter().all(|s| s.budget.is_integer())
    }
}

// ---------------------------------------------------------------------------
// Regional quotas
// ---------------------------------------------------------------------------

/// Hospital-residents data with disjoint regional upper quotas.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionalInstance {
    pub residents: Vec<String>,
    pub resident_prefs: IndexMap<String, Vec<String>>,
    pub hospitals: Vec<RawProject>,
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub quota: usize,
    pub hospitals: Vec<String>,
}

/// Embeds a regional-quota instance: one supervisor per region whose budget
/// is the regional quota.
pub fn embed_reg(reg: &RegionalInstance) -> Result<Instance> {
    let mut owner: HashMap<&str, &str> = HashMap::new();
    for r in &reg.regions {
        for h in &r.hospitals {
            if let Some(prev) = owner.insert(h.as_str(), r.id.as_str()) {
                return Err(Error::Regions(format!(
                    "hospital `{h}` is in both `{prev}` and `{}`",
                    r.id
                )));
            }
        }
    }
    for h in &reg.hospitals {
        if !owner.contains_key(h.id.as_str()) {
            return Err(Error::Regions(format!("hospital `{}` is in no region", h.id)));
        }
    }
    let raw = RawInstance {
        applicants: reg.residents.clone(),
        applicant_prefs: reg.resident_prefs.clone(),
        projects: reg.hospitals.clone(),
        supervisors: reg
            .regions
            .iter()
            .map(|r| RawSupervisor {
                id: r.id.clone(),
                budget: Rational::from_integer(BigInt::from(r.quota)),
                projects: r.hospitals.clone(),
            })
            .collect(),
    };
    Instance::validate(&raw)
}

// ---------------------------------------------------------------------------
// Fixed instances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gadget {
    /// Two supervisors, budgets 0.7 and 0.5; three feasible matchings.
    Example1,
    /// One supervisor of budget 1 over two cyclic projects; no strongly stable matching.
    Example2Unsolvable,
    /// Four-cycle with two strongly stable matchings covering different applicants.
    Example3Cycle,
    /// Strong, cutoff and weak stability all differ.
    Example4Distinct,
    /// Manipulation by an applicant changes the cutoff algorithm's output.
    Thm7Item1,
    /// Output depends on the project order.
    Thm7Item3,
    /// A cutoff stable matching no project order reaches.
    Thm7Item4,
}

impl Gadget {
    pub const ALL: [Gadget; 7] = [
        Gadget::Example1,
        Gadget::Example2Unsolvable,
        Gadget::Example3Cycle,
        Gadget::Example4Distinct,
        Gadget::Thm7Item1,
        Gadget::Thm7Item3,
        Gadget::Thm7Item4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gadget::Example1 => "example1",
            Gadget::Example2Unsolvable => "example2_unsolvable",
            Gadget::Example3Cycle => "example3_cycle",
            Gadget::Example4Distinct => "example4_distinct",
            Gadget::Thm7Item1 => "thm7_item1",
            Gadget::Thm7Item3 => "thm7_item3",
            Gadget::Thm7Item4 => "thm7_item4",
        }
    }

    pub fn raw(self) -> RawInstance {
        let one = || rational::int(1);
        let two = || rational::int(2);
        let mut r = RawInstance::default();
        match self {
            Gadget::Example1 => {
                r.applicant("a1", &["p2", "p1"])
                    .applicant("a2", &["p1", "p2"])
                    .project("p1", 1, &["a1", "a2"])
                    .project("p2", 1, &["a2", "a1"])
                    .supervisor("s1", rational::frac(7, 10), &["p1", "p2"])
                    .supervisor("s2", rational::frac(1, 2), &["p2"]);
            }
            Gadget::Example2Unsolvable => {
                r.applicant("a1", &["p2", "p1"])
                    .applicant("a2", &["p1", "p2"])
                    .project("p1", 1, &["a1", "a2"])
                    .project("p2", 1, &["a2", "a1"])
                    .supervisor("s", one(), &["p1", "p2"]);
            }
            Gadget::Example3Cycle => {
                r.applicant("a1", &["p2", "p1"])
                    .applicant("a2", &["p3", "p2"])
                    .applicant("a3", &["p4", "p3"])
                    .applicant("a4", &["p1", "p4"])
                    .project("p1", 1, &["a1", "a4"])
                    .project("p2", 1, &["a2", "a1"])
                    .project("p3", 1, &["a3", "a2"])
                    .project("p4", 1, &["a4", "a3"])
                    .supervisor("s1", one(), &["p1", "p3"])
                    .supervisor("s2", one(), &["p2"])
                    .supervisor("s3", one(), &["p4"]);
            }
            Gadget::Example4Distinct => {
                r.applicant("a1", &["p1", "p2", "p3"])
                    .applicant("a2", &["p2", "p1"])
                    .applicant("a3", &["p3"])
                    .project("p1", 1, &["a2", "a1"])
                    .project("p2", 1, &["a1", "a2"])
                    .project("p3", 1, &["a1", "a3"])
                    .supervisor("s", two(), &["p1", "p2", "p3"]);
            }
            Gadget::Thm7Item1 => {
                r.applicant("a1", &["p2", "p1"])
                    .applicant("a2", &["p2"])
                    .project("p1", 1, &["a2", "a1"])
                    .project("p2", 1, &["a2", "a1"])
                    .supervisor("s", one(), &["p1", "p2"]);
            }
            Gadget::Thm7Item3 => {
                r.applicant("a1", &["p2", "p1"])
                    .applicant("a2", &["p1", "p2"])
                    .applicant("a3", &["p3"])
                    .project("p1", 1, &["a1", "a2"])
                    .project("p2", 2, &["a2", "a1"])
                    .project("p3", 1, &["a3"])
                    .supervisor("s", two(), &["p1", "p2", "p3"]);
            }
            Gadget::Thm7Item4 => {
                r.applicant("a1", &["p1", "p2"])
                    .applicant("a2", &["p2", "p1"])
                    .project("p1", 1, &["a2", "a1"])
                    .project("p2", 1, &["a1", "a2"])
                    .supervisor("s", two(), &["p1", "p2"]);
            }
        }
        r
    }

    pub fn instance(self) -> Instance {
        Instance::validate(&self.raw()).expect("gadget instances are valid")
    }
}

impl FromStr for Gadget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Gadget::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGadget(s.to_string()))
    }
}

impl fmt::Display for Gadget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn gadget(name: &str) -> Result<Instance> {
    Ok(name.parse::<Gadget>()?.instance())
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub seed: u64,
    pub applicants: usize,
    pub projects: usize,
    pub supervisors: usize,
    /// Probability that a pair is mutually acceptable, in `(0, 1]`.
    pub density: Rational,
    pub budget_min: Rational,
    pub budget_max: Rational,
    /// Project capacities are drawn uniformly from `1..=capacity_max`.
    pub capacity_max: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            seed: 0,
            applicants: 4,
            projects: 3,
            supervisors: 2,
            density: rational::int(1),
            budget_min: rational::int(0),
            budget_max: rational::int(2),
            capacity_max: 2,
        }
    }
}

/// Deterministic random instance. Acceptability is symmetric, each project
/// gets one to three supervisors and budgets are multiples of 1/100.
pub fn generate_random(spec: &RandomSpec) -> Result<Instance> {
    let invalid = Error::Generator;
    if spec.applicants == 0 || spec.projects == 0 || spec.supervisors == 0 || spec.capacity_max == 0 {
        return Err(invalid("sizes must be positive".into()));
    }
    let one = rational::int(1);
    if !spec.density.is_positive() || spec.density > one {
        return Err(invalid(format!(
            "density {} outside (0, 1]",
            rational::render(&spec.density)
        )));
    }
    if spec.budget_min.is_negative() || spec.budget_min > spec.budget_max {
        return Err(invalid("budget range must satisfy 0 <= min <= max".into()));
    }
    let hundred = rational::int(100);
    let lo = (&spec.budget_min * &hundred).ceil().to_integer();
    let hi = (&spec.budget_max * &hundred).floor().to_integer();
    let (lo, hi) = match (lo.to_u64(), hi.to_u64()) {
        (Some(l), Some(h)) if l <= h => (l, h),
        _ => return Err(invalid("budget range contains no multiple of 1/100".into())),
    };
    let dn = spec
        .density
        .numer()
        .to_u64()
        .ok_or_else(|| invalid("density too large".into()))?;
    let dd = spec
        .density
        .denom()
        .to_u64()
        .ok_or_else(|| invalid("density too large".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (na, np, ns) = (spec.applicants, spec.projects, spec.supervisors);

    let mut acceptable = vec![vec![false; np]; na];
    for row in acceptable.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.gen_range(0..dd) < dn;
        }
    }

    let mut r = RawInstance::default();
    let aid = |a: usize| format!("a{}", a + 1);
    let pid = |p: usize| format!("p{}", p + 1);
    for (a, row) in acceptable.iter().enumerate() {
        let mut list: Vec<usize> = (0..np).filter(|&p| row[p]).collect();
        list.shuffle(&mut rng);
        r.applicants.push(aid(a));
        r.applicant_prefs.insert(aid(a), list.into_iter().map(pid).collect());
    }
    for p in 0..np {
        let mut list: Vec<usize> = acceptable
            .iter()
            .enumerate()
            .filter(|(_, row)| row[p])
            .map(|(a, _)| a)
            .collect();
        list.shuffle(&mut rng);
        r.projects.push(RawProject {
            id: pid(p),
            capacity: rng.gen_range(1..=spec.capacity_max),
            prefs: list.into_iter().map(aid).collect(),
        });
    }
    let mut supervised = vec![Vec::new(); ns];
    for p in 0..np {
        let k = rng.gen_range(1..=ns.min(3));
        let mut all: Vec<usize> = (0..ns).collect();
        all.shuffle(&mut rng);
        for &s in &all[..k] {
            supervised[s].push(p);
        }
    }
    for (s, projects) in supervised.into_iter().enumerate() {
        let cents = rng.gen_range(lo..=hi);
        r.supervisors.push(RawSupervisor {
            id: format!("s{}", s + 1),
            budget: Rational::new(BigInt::from(cents), BigInt::from(100u32)),
            projects: projects.into_iter().map(pid).collect(),
        });
    }
    Instance::validate(&r)
}

//! Matchings and cutoff vectors.

use crate::error::{Error, Result};
use crate::model::Instance;
use serde::{Deserialize, Serialize};

/// A set of applicant-project pairs, stored as each applicant's project.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    assignment: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(num_applicants: usize) -> Self {
        Matching {
            assignment: vec![None; num_applicants],
        }
    }

    pub fn from_assignment(assignment: Vec<Option<usize>>) -> Self {
        Matching { assignment }
    }

    /// Builds a matching from index pairs; an applicant may appear once.
    pub fn from_pairs(num_applicants: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = Matching::empty(num_applicants);
        for &(a, p) in pairs {
            if a >= num_applicants {
                return Err(Error::InvalidMatching(format!("applicant index {a} out of range")));
            }
            if m.assignment[a].is_some() {
                return Err(Error::InvalidMatching(format!("applicant index {a} matched twice")));
            }
            m.assignment[a] = Some(p);
        }
        Ok(m)
    }

    pub fn from_named(instance: &Instance, pairs: &[(&str, &str)]) -> Result<Self> {
        let owned: Vec<(String, String)> = pairs.iter().map(|(a, p)| (a.to_string(), p.to_string())).collect();
        Self::from_named_owned(instance, &owned)
    }

    pub fn from_named_owned(instance: &Instance, pairs: &[(String, String)]) -> Result<Self> {
        let mut idx = Vec::with_capacity(pairs.len());
        for (a, p) in pairs {
            let ai = instance
                .applicant_index(a)
                .ok_or_else(|| Error::InvalidMatching(format!("unknown applicant `{a}`")))?;
            let pi = instance
                .project_index(p)
                .ok_or_else(|| Error::InvalidMatching(format!("unknown project `{p}`")))?;
            idx.push((ai, pi));
        }
        let m = Self::from_pairs(instance.num_applicants(), &idx).map_err(|e| match e {
            Error::InvalidMatching(_) => Error::InvalidMatching("an applicant is matched twice".into()),
            e => e,
        })?;
        Ok(m)
    }

    pub fn num_applicants(&self) -> usize {
        self.assignment.len()
    }

    pub fn project_of(&self, a: usize) -> Option<usize> {
        self.assignment[a]
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn set(&mut self, a: usize, p: Option<usize>) {
        self.assignment[a] = p;
    }

    /// `M(p)` in applicant index order.
    pub fn applicants_of(&self, p: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(a, q)| (*q == Some(p)).then_some(a))
            .collect()
    }

    pub fn counts(&self, num_projects: usize) -> Vec<usize> {
        let mut c = vec![0; num_projects];
        for p in self.assignment.iter().flatten() {
            c[*p] += 1;
        }
        c
    }

    pub fn size(&self) -> usize {
        self.assignment.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn contains(&self, a: usize, p: usize) -> bool {
        self.assignment[a] == Some(p)
    }

    /// Pairs in applicant order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(a, p)| p.map(|p| (a, p)))
            .collect()
    }

    pub fn matched_applicants(&self) -> Vec<usize> {
        self.pairs().into_iter().map(|(a, _)| a).collect()
    }

    /// `(M ∪ {(a,p)}) \ {(a, M(a))}`.
    pub fn with_move(&self, a: usize, p: usize) -> Matching {
        let mut m = self.clone();
        m.assignment[a] = Some(p);
        m
    }

    pub fn to_named(&self, instance: &Instance) -> Vec<(String, String)> {
        self.pairs()
            .into_iter()
            .map(|(a, p)| (instance.applicant_id(a).to_string(), instance.project(p).id.clone()))
            .collect()
    }

    pub fn display(&self, instance: &Instance) -> String {
        let parts: Vec<String> = self
            .to_named(instance)
            .into_iter()
            .map(|(a, p)| format!("({a},{p})"))
            .collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn to_document(&self, instance: &Instance) -> MatchingDocument {
        MatchingDocument {
            matching: self.to_named(instance),
        }
    }
}

/// JSON form of a matching: `{"matching": [["a1","p2"], ...]}`. Extra keys
/// are ignored so solver reports can be fed back as matching files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingDocument {
    pub matching: Vec<(String, String)>,
}

impl MatchingDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self, instance: &Instance) -> Result<Matching> {
        Matching::from_named_owned(instance, &self.matching)
    }
}

/// Why a set of pairs is not a matching of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchingDefect {
    WrongSize { expected: usize, actual: usize },
    UnknownProject { applicant: usize, project: usize },
    NotAcceptable { applicant: usize, project: usize },
    OverCapacity { project: usize, count: usize },
}

impl MatchingDefect {
    pub fn describe(&self, instance: &Instance) -> String {
        match *self {
            MatchingDefect::WrongSize { expected, actual } => {
                format!("matching covers {actual} applicants, instance has {expected}")
            }
            MatchingDefect::UnknownProject { applicant, project } => format!(
                "applicant {} assigned to unknown project index {project}",
                instance.applicant_id(applicant)
            ),
            MatchingDefect::NotAcceptable { applicant, project } => format!(
                "({}, {}) is not mutually acceptable",
                instance.applicant_id(applicant),
                instance.project(project).id
            ),
            MatchingDefect::OverCapacity { project, count } => format!(
                "project {} holds {count} > capacity {}",
                instance.project(project).id,
                instance.capacity(project)
            ),
        }
    }
}

/// Structural validity: mutual acceptability and capacities.
pub fn validate_matching(instance: &Instance, m: &Matching) -> std::result::Result<(), MatchingDefect> {
    if m.num_applicants() != instance.num_applicants() {
        return Err(MatchingDefect::WrongSize {
            expected: instance.num_applicants(),
            actual: m.num_applicants(),
        });
    }
    for (a, p) in m.pairs() {
        if p >= instance.num_projects() {
            return Err(MatchingDefect::UnknownProject {
                applicant: a,
                project: p,
            });
        }
        if !instance.mutually_acceptable(a, p) {
            return Err(MatchingDefect::NotAcceptable {
                applicant: a,
                project: p,
            });
        }
    }
    for (p, c) in m.counts(instance.num_projects()).into_iter().enumerate() {
        if c > instance.capacity(p) {
            return Err(MatchingDefect::OverCapacity { project: p, count: c });
        }
    }
    Ok(())
}

pub fn is_valid_matching(instance: &Instance, m: &Matching) -> bool {
    validate_matching(instance, m).is_ok()
}

/// Per-project cutoff scores `d(p) ∈ [0, |A|+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutoffVector(pub Vec<usize>);

impl CutoffVector {
    /// All cutoffs at `|A| + 1`: nobody is admissible.
    pub fn closed(instance: &Instance) -> Self {
        CutoffVector(vec![instance.num_applicants() + 1; instance.num_projects()])
    }

    pub fn get(&self, p: usize) -> usize {
        self.0[p]
    }

    pub fn in_range(&self, instance: &Instance) -> bool {
        self.0.len() == instance.num_projects() && self.0.iter().all(|&d| d <= instance.num_applicants() + 1)
    }

    /// `d^{-p}`; `None` when `d(p)` is already zero.
    pub fn decremented(&self, p: usize) -> Option<Self> {
        let mut d = self.clone();
        d.0[p] = d.0[p].checked_sub(1)?;
        Some(d)
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn to_named(&self, instance: &Instance) -> Vec<(String, usize)> {
        self.0
            .iter()
            .enumerate()
            .map(|(p, &d)| (instance.project(p).id.clone(), d))
            .collect()
    }
}

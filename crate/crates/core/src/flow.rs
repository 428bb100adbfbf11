//! Funding flow graph and the max-flow feasibility test.
//!
//! A matching is feasible exactly when the graph
//! `source -> supervisor (q_s) -> project (unbounded) -> sink (|M(p)|)`
//! carries a flow of value `|M|`. The flow on supervisor-project arcs is then
//! a funding allocation.

use crate::error::Result;
use crate::matching::{validate_matching, Matching};
use crate::model::{FeasibilityFunction, Instance};
use crate::rational::{self, Rational};
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    /// `(s*, s)` with capacity `q_s`.
    Budget { supervisor: usize },
    /// `(s, p)` for `p ∈ P_s`; "infinite" capacity.
    Funding { supervisor: usize, project: usize },
    /// `(p, t*)` with capacity `|M(p)|`.
    Demand { project: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: Rational,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundingFlowGraph {
    pub num_supervisors: usize,
    pub num_projects: usize,
    pub arcs: Vec<Arc>,
}

impl FundingFlowGraph {
    pub const SOURCE: usize = 0;

    pub fn supervisor_node(&self, s: usize) -> usize {
        1 + s
    }

    pub fn project_node(&self, p: usize) -> usize {
        1 + self.num_supervisors + p
    }

    pub fn sink(&self) -> usize {
        1 + self.num_supervisors + self.num_projects
    }

    pub fn num_nodes(&self) -> usize {
        self.num_supervisors + self.num_projects + 2
    }

    /// Graphviz rendering, optionally annotated with a flow.
    pub fn to_dot(&self, instance: &Instance, flow: Option<&MaxFlow>) -> String {
        let mut out = String::from("digraph funding {\n  rankdir=LR;\n");
        let label = |v: usize| -> String {
            if v == Self::SOURCE {
                "s*".to_string()
            } else if v == self.sink() {
                "t*".to_string()
            } else if v <= self.num_supervisors {
                instance.supervisor(v - 1).id.clone()
            } else {
                instance.project(v - 1 - self.num_supervisors).id.clone()
            }
        };
        for v in 0..self.num_nodes() {
            let _ = writeln!(out, "  n{v} [label=\"{}\"];", label(v));
        }
        for (i, arc) in self.arcs.iter().enumerate() {
            let cap = match arc.kind {
                ArcKind::Funding { .. } => "inf".to_string(),
                _ => rational::render(&arc.capacity),
            };
            let text = match flow {
                Some(f) => format!("{}/{}", rational::render(&f.flow[i]), cap),
                None => cap,
            };
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", arc.from, arc.to, text);
        }
        out.push_str("}\n");
        out
    }
}

/// `G_M` for a structurally valid matching.
pub fn build_flow_graph(instance: &Instance, matching: &Matching) -> Result<FundingFlowGraph> {
    validate_matching(instance, matching).map_err(|d| crate::Error::InvalidMatching(d.describe(instance)))?;
    Ok(build_flow_graph_for_counts(
        instance,
        &matching.counts(instance.num_projects()),
    ))
}

/// `G_M` built from the per-project counts alone.
pub fn build_flow_graph_for_counts(instance: &Instance, counts: &[usize]) -> FundingFlowGraph {
    let ns = instance.num_supervisors();
    let np = instance.num_projects();
    let unbounded = instance.total_budget();
    let mut g = FundingFlowGraph {
        num_supervisors: ns,
        num_projects: np,
        arcs: Vec::with_capacity(ns + np * 2),
    };
    for (s, sup) in instance.supervisors().iter().enumerate() {
        let to = g.supervisor_node(s);
        g.arcs.push(Arc {
            from: FundingFlowGraph::SOURCE,
            to,
            capacity: sup.budget.clone(),
            kind: ArcKind::Budget { supervisor: s },
        });
    }
    for (s, sup) in instance.supervisors().iter().enumerate() {
        for &p in &sup.projects {
            let (from, to) = (g.supervisor_node(s), g.project_node(p));
            g.arcs.push(Arc {
                from,
                to,
                capacity: unbounded.clone(),
                kind: ArcKind::Funding {
                    supervisor: s,
                    project: p,
                },
            });
        }
    }
    for (p, &c) in counts.iter().enumerate() {
        let (from, to) = (g.project_node(p), g.sink());
        g.arcs.push(Arc {
            from,
            to,
            capacity: rational::int(c as i64),
            kind: ArcKind::Demand { project: p },
        });
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: Rational,
    /// Flow on each arc of the graph, same order as `FundingFlowGraph::arcs`.
    pub flow: Vec<Rational>,
}

struct Residual {
    to: usize,
    rev: usize,
    cap: Rational,
}

/// Shortest augmenting paths (Edmonds-Karp) in exact arithmetic.
pub fn max_flow(graph: &FundingFlowGraph) -> MaxFlow {
    let n = graph.num_nodes();
    let mut adj: Vec<Vec<Residual>> = (0..n).map(|_| Vec::new()).collect();
    let mut arc_pos = Vec::with_capacity(graph.arcs.len());
    for arc in &graph.arcs {
        let fwd = adj[arc.from].len();
        let bwd = adj[arc.to].len() + usize::from(arc.from == arc.to);
        adj[arc.from].push(Residual {
            to: arc.to,
            rev: bwd,
            cap: arc.capacity.clone(),
        });
        adj[arc.to].push(Residual {
            to: arc.from,
            rev: fwd,
            cap: Rational::zero(),
        });
        arc_pos.push((arc.from, fwd));
    }

    let (source, sink) = (FundingFlowGraph::SOURCE, graph.sink());
    let mut value = Rational::zero();
    loop {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            if v == sink {
                break;
            }
            for (k, e) in adj[v].iter().enumerate() {
                if !seen[e.to] && e.cap.is_positive() {
                    seen[e.to] = true;
                    prev[e.to] = Some((v, k));
                    queue.push_back(e.to);
                }
            }
        }
        if !seen[sink] {
            break;
        }
        let mut bottleneck: Option<Rational> = None;
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            let c = &adj[u][k].cap;
            if bottleneck.as_ref().is_none_or(|b| c < b) {
                bottleneck = Some(c.clone());
            }
            v = u;
        }
        let push = bottleneck.expect("path has at least one arc");
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            adj[u][k].cap -= &push;
            let (to, rev) = (adj[u][k].to, adj[u][k].rev);
            adj[to][rev].cap += &push;
            v = u;
        }
        value += push;
    }

    let flow = graph
        .arcs
        .iter()
        .zip(&arc_pos)
        .map(|(arc, &(u, k))| &arc.capacity - &adj[u][k].cap)
        .collect();
    let result = MaxFlow { value, flow };
    debug_assert!(certifies_maximum(graph, &result), "max flow without saturated cut");
    result
}

/// Checks conservation, capacity bounds and that some source-side cut is
/// saturated with capacity equal to the flow value.
pub fn certifies_maximum(graph: &FundingFlowGraph, f: &MaxFlow) -> bool {
    let n = graph.num_nodes();
    let mut balance = vec![Rational::zero(); n];
    for (arc, x) in graph.arcs.iter().zip(&f.flow) {
        if x.is_negative() || x > &arc.capacity {
            return false;
        }
        balance[arc.from] -= x;
        balance[arc.to] += x;
    }
    for (v, b) in balance.iter().enumerate() {
        if v != FundingFlowGraph::SOURCE && v != graph.sink() && !b.is_zero() {
            return false;
        }
    }
    if balance[graph.sink()] != f.value {
        return false;
    }
    // residual reachability from the source
    let mut reach = vec![false; n];
    reach[FundingFlowGraph::SOURCE] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for (arc, x) in graph.arcs.iter().zip(&f.flow) {
            if reach[arc.from] && !reach[arc.to] && x < &arc.capacity {
                reach[arc.to] = true;
                changed = true;
            }
            if reach[arc.to] && !reach[arc.from] && x.is_positive() {
                reach[arc.from] = true;
                changed = true;
            }
        }
    }
    if reach[graph.sink()] {
        return false;
    }
    let cut: Rational = graph
        .arcs
        .iter()
        .filter(|a| reach[a.from] && !reach[a.to])
        .fold(Rational::zero(), |acc, a| acc + &a.capacity);
    cut == f.value
}

/// `x_{s,p}` for every supervised pair.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FundingAllocation {
    #[serde(skip)]
    entries: BTreeMap<(usize, usize), Rational>,
}

impl FundingAllocation {
    /// Zero for every `(s, p)` with `p ∈ P_s`.
    pub fn zero(instance: &Instance) -> Self {
        let mut entries = BTreeMap::new();
        for (s, sup) in instance.supervisors().iter().enumerate() {
            for &p in &sup.projects {
                entries.insert((s, p), Rational::zero());
            }
        }
        FundingAllocation { entries }
    }

    pub fn get(&self, supervisor: usize, project: usize) -> Option<&Rational> {
        self.entries.get(&(supervisor, project))
    }

    /// Sets an existing key; returns false for pairs outside `P_s`.
    pub fn set(&mut self, supervisor: usize, project: usize, value: Rational) -> bool {
        match self.entries.get_mut(&(supervisor, project)) {
            Some(v) => {
                *v = value;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.entries.values().all(|v| v.is_integer())
    }

    /// The three feasibility conditions, checked exactly.
    pub fn certifies(&self, instance: &Instance, counts: &[usize]) -> bool {
        let mut per_project = vec![Rational::zero(); instance.num_projects()];
        let mut per_supervisor = vec![Rational::zero(); instance.num_supervisors()];
        for (&(s, p), x) in &self.entries {
            if x.is_negative() || !instance.supervisor(s).projects.contains(&p) {
                return false;
            }
            per_project[p] += x;
            per_supervisor[s] += x;
        }
        let fund_ok = per_project
            .iter()
            .zip(counts)
            .all(|(x, &c)| *x == rational::int(c as i64));
        let budget_ok = per_supervisor
            .iter()
            .zip(instance.supervisors())
            .all(|(x, s)| *x <= s.budget);
        fund_ok && budget_ok
    }

    pub fn to_named(&self, instance: &Instance) -> Vec<(String, String, Rational)> {
        self.entries
            .iter()
            .map(|(&(s, p), x)| {
                (
                    instance.supervisor(s).id.clone(),
                    instance.project(p).id.clone(),
                    x.clone(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Present exactly when `feasible`.
    pub allocation: Option<FundingAllocation>,
}

/// Budget feasibility of a per-project count vector.
pub fn check_counts(instance: &Instance, counts: &[usize]) -> FeasibilityResult {
    let demand: usize = counts.iter().sum();
    let graph = build_flow_graph_for_counts(instance, counts);
    let f = max_flow(&graph);
    if f.value != rational::int(demand as i64) {
        return FeasibilityResult {
            feasible: false,
            allocation: None,
        };
    }
    let mut allocation = FundingAllocation::zero(instance);
    for (arc, x) in graph.arcs.iter().zip(f.flow) {
        if let ArcKind::Funding { supervisor, project } = arc.kind {
            allocation.set(supervisor, project, x);
        }
    }
    debug_assert!(allocation.certifies(instance, counts));
    FeasibilityResult {
        feasible: true,
        allocation: Some(allocation),
    }
}

/// Feasibility of a matching. Structural defects (capacity, acceptability)
/// make it infeasible without running the flow.
pub fn check_feasibility(instance: &Instance, matching: &Matching) -> FeasibilityResult {
    if validate_matching(instance, matching).is_err() {
        return FeasibilityResult {
            feasible: false,
            allocation: None,
        };
    }
    check_counts(instance, &matching.counts(instance.num_projects()))
}

/// The supervisor-budget feasibility function.
#[derive(Debug, Clone, Copy)]
pub struct BudgetFeasibility<'a> {
    instance: &'a Instance,
}

impl<'a> BudgetFeasibility<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        BudgetFeasibility { instance }
    }
}

impl FeasibilityFunction for BudgetFeasibility<'_> {
    fn is_feasible(&self, counts: &[usize]) -> bool {
        check_counts(self.instance, counts).feasible
    }
}

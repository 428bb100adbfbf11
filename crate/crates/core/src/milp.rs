//! Maximum-size cutoff stable matchings as a mixed-integer program, solved
//! by depth-first branch and bound over exact LP relaxations.

use crate::engine;
use crate::error::{Error, Result};
use crate::flow::{BudgetFeasibility, FundingAllocation};
use crate::lp::{solve_lp, solve_lp_warm, LinearProgram, LpSolution, LpStatus, Relation, Sense, VarKind, WarmStart};
use crate::matching::{CutoffVector, Matching};
use crate::model::Instance;
use crate::rational::{int, Rational};
use crate::stability::Checker;
use num_traits::{One, Zero};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub lp: LinearProgram,
    /// `((a, p), column)` for every mutually acceptable pair.
    pub y: Vec<((usize, usize), usize)>,
    /// `((s, p), column)` for every supervisor-project link.
    pub x: Vec<((usize, usize), usize)>,
    /// Cutoff column per project.
    pub d: Vec<usize>,
    pub weight: usize,
    num_applicants: usize,
}

impl MilpModel {
    pub fn y_var(&self, a: usize, p: usize) -> Option<usize> {
        self.y.iter().find(|(k, _)| *k == (a, p)).map(|(_, v)| *v)
    }

    pub fn to_lp_format(&self, title: &str) -> String {
        self.lp.to_lp_format(title)
    }
}

pub fn build_model(instance: &Instance) -> MilpModel {
    let na = instance.num_applicants();
    let np = instance.num_projects();
    let big = int((na + 1) as i64);
    let weight = np * (na + 1) + 1;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let aid = |a: usize| instance.applicant_id(a).to_string();
    let pid = |p: usize| instance.project(p).id.clone();
    let sid = |s: usize| instance.supervisor(s).id.clone();

    let mut y = Vec::new();
    for a in 0..na {
        for &p in instance.applicant_prefs(a) {
            if instance.mutually_acceptable(a, p) {
                let v = lp.add_var_kind(
                    format!("y_{}_{}", aid(a), pid(p)),
                    Some(Rational::zero()),
                    Some(Rational::one()),
                    VarKind::Binary,
                );
                y.push(((a, p), v));
            }
        }
    }
    let mut x = Vec::new();
    for s in 0..instance.num_supervisors() {
        for &p in &instance.supervisor(s).projects {
            let v = lp.add_nonneg(format!("x_{}_{}", sid(s), pid(p)));
            x.push(((s, p), v));
        }
    }
    let d: Vec<usize> = (0..np)
        .map(|p| {
            lp.add_var_kind(
                format!("d_{}", pid(p)),
                Some(Rational::zero()),
                Some(big.clone()),
                VarKind::Integer,
            )
        })
        .collect();

    let one = Rational::one;
    for a in 0..na {
        let terms: Vec<_> = y
            .iter()
            .filter(|((b, _), _)| *b == a)
            .map(|(_, v)| (*v, one()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(format!("applicant_{}", aid(a)), terms, Relation::Le, one());
        }
    }
    for p in 0..np {
        let mut terms: Vec<_> = y
            .iter()
            .filter(|((_, q), _)| *q == p)
            .map(|(_, v)| (*v, one()))
            .collect();
        terms.extend(x.iter().filter(|((_, q), _)| *q == p).map(|(_, v)| (*v, -one())));
        if !terms.is_empty() {
            lp.add_constraint(format!("funding_{}", pid(p)), terms, Relation::Eq, Rational::zero());
        }
    }
    for s in 0..instance.num_supervisors() {
        let terms: Vec<_> = x
            .iter()
            .filter(|((t, _), _)| *t == s)
            .map(|(_, v)| (*v, one()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(
                format!("budget_{}", sid(s)),
                terms,
                Relation::Le,
                instance.supervisor(s).budget.clone(),
            );
        }
    }
    for p in 0..np {
        let terms: Vec<_> = y
            .iter()
            .filter(|((_, q), _)| *q == p)
            .map(|(_, v)| (*v, one()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(
                format!("capacity_{}", pid(p)),
                terms,
                Relation::Le,
                int(instance.capacity(p) as i64),
            );
        }
    }
    for &((a, p), v) in &y {
        let z = instance.score(a, p).expect("acceptable pair has a score") as i64;
        // admitted applicants clear the cutoff
        lp.add_constraint(
            format!("reach_{}_{}", aid(a), pid(p)),
            vec![(d[p], one()), (v, big.clone())],
            Relation::Le,
            int(na as i64 + 1 + z),
        );
        // an applicant below p keeps d(p) above her score
        let mut terms = vec![(d[p], one())];
        for &q in instance.applicant_prefs(a) {
            if let Some(w) = y.iter().find(|(k, _)| *k == (a, q)).map(|(_, w)| *w) {
                terms.push((w, big.clone()));
            }
            if q == p {
                break;
            }
        }
        lp.add_constraint(
            format!("exclude_{}_{}", aid(a), pid(p)),
            terms,
            Relation::Ge,
            int(z + 1),
        );
    }
    let mut objective: Vec<_> = y.iter().map(|(_, v)| (*v, int(weight as i64))).collect();
    objective.extend(d.iter().map(|&v| (v, -one())));
    lp.set_objective(objective);
    MilpModel {
        lp,
        y,
        x,
        d,
        weight,
        num_applicants: na,
    }
}

pub fn export_lp_file(model: &MilpModel, title: &str, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_lp_format(title))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: usize,
    /// Project orders tried by the cutoff engine to seed the incumbent.
    pub seed_orders: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 200_000,
            seed_orders: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub matching: Matching,
    pub cutoffs: CutoffVector,
    pub allocation: FundingAllocation,
    pub objective: Rational,
    pub nodes: usize,
    pub lp_solves: usize,
}

impl MilpSolution {
    pub fn size(&self) -> usize {
        self.matching.size()
    }
}

struct Search<'m> {
    model: &'m MilpModel,
    /// Relaxation carrying the bounds of the current node.
    lp: LinearProgram,
    best: Option<(Rational, Vec<Rational>)>,
    nodes: usize,
    lp_solves: usize,
    limit: usize,
}

fn fractionality(v: &Rational) -> Rational {
    let f = v - v.floor();
    let g = Rational::one() - &f;
    std::cmp::min(f, g)
}

impl Search<'_> {
    fn run(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::NodeLimit(self.limit));
        }
        self.lp_solves += 1;
        let (sol, warm) = solve_lp_warm(&self.lp);
        match warm {
            Some(w) => self.explore(sol, &w),
            None => Ok(()),
        }
    }

    /// Depth first below a solved node.
    fn explore(&mut self, sol: LpSolution, warm: &WarmStart) -> Result<()> {
        if sol.status != LpStatus::Optimal {
            return Ok(());
        }
        if let Some((inc, _)) = &self.best {
            if sol.objective.floor() <= *inc {
                return Ok(());
            }
        }
        let model = self.model;
        let branch_y = model
            .y
            .iter()
            .map(|(_, v)| *v)
            .filter(|&v| !sol.values[v].is_integer())
            .max_by(|&u, &v| {
                fractionality(&sol.values[u])
                    .cmp(&fractionality(&sol.values[v]))
                    .then(v.cmp(&u))
            });
        let branches = if let Some(v) = branch_y {
            vec![(v, Relation::Ge, int(1)), (v, Relation::Le, int(0))]
        } else if let Some(&v) = model.d.iter().find(|&&v| !sol.values[v].is_integer()) {
            vec![
                (v, Relation::Le, sol.values[v].floor()),
                (v, Relation::Ge, sol.values[v].ceil()),
            ]
        } else {
            // integral leaf, strictly better than the incumbent
            self.best = Some((sol.objective, sol.values));
            return Ok(());
        };
        drop(sol);
        for (v, rel, value) in branches {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Err(Error::NodeLimit(self.limit));
            }
            let var = &mut self.lp.variables[v];
            let saved = match rel {
                Relation::Le => var.upper.replace(value.clone()),
                _ => var.lower.replace(value.clone()),
            };
            self.lp_solves += 1;
            let (child, next) = warm.with_bound(&self.lp, v, rel, &value);
            let r = match next {
                Some(w) => self.explore(child, &w),
                None => Ok(()),
            };
            let var = &mut self.lp.variables[v];
            match rel {
                Relation::Le => var.upper = saved,
                _ => var.lower = saved,
            }
            r?;
        }
        Ok(())
    }
}

/// Relaxation used by the search: the `y <= 1` bounds follow from the
/// one-project-per-applicant rows and are dropped.
fn relaxation(model: &MilpModel) -> LinearProgram {
    let mut lp = model.lp.clone();
    for (_, v) in &model.y {
        lp.variables[*v].upper = None;
    }
    lp
}

/// Column values for a known matching and cutoffs, with `x` from the flow.
fn encode(model: &MilpModel, instance: &Instance, m: &Matching, d: &CutoffVector) -> Option<Vec<Rational>> {
    let alloc = crate::flow::check_feasibility(instance, m).allocation?;
    let mut values = vec![Rational::zero(); model.lp.variables.len()];
    for &((a, p), v) in &model.y {
        if m.contains(a, p) {
            values[v] = Rational::one();
        }
    }
    for &((s, p), v) in &model.x {
        values[v] = alloc.get(s, p).cloned().unwrap_or_else(Rational::zero);
    }
    for (p, &v) in model.d.iter().enumerate() {
        values[v] = int(d.get(p) as i64);
    }
    Some(values)
}

fn decode(model: &MilpModel, instance: &Instance, values: &[Rational]) -> (Matching, CutoffVector, FundingAllocation) {
    let mut m = Matching::empty(model.num_applicants);
    for &((a, p), v) in &model.y {
        if values[v].is_one() {
            m.set(a, Some(p));
        }
    }
    let d = CutoffVector(
        model
            .d
            .iter()
            .map(|&v| values[v].to_integer().try_into().expect("cutoff fits in usize"))
            .collect(),
    );
    let mut alloc = FundingAllocation::zero(instance);
    for &((s, p), v) in &model.x {
        alloc.set(s, p, values[v].clone());
    }
    (m, d, alloc)
}

fn seed_orders(instance: &Instance, count: usize) -> Vec<Vec<usize>> {
    let np = instance.num_projects();
    let mut orders = Vec::new();
    let base = engine::default_order(instance);
    for k in 0..count.min(np.max(1)) {
        let mut o = base.clone();
        o.rotate_left(k);
        orders.push(o.clone());
        o.reverse();
        orders.push(o);
    }
    orders.sort();
    orders.dedup();
    orders.truncate(count.max(1));
    orders
}

/// Largest cutoff stable matching, cutoffs minimising their sum among
/// optima. The result is re-checked before it is returned.
pub fn solve_max_cutoff_stable(instance: &Instance, options: &MilpOptions) -> Result<MilpSolution> {
    let model = build_model(instance);
    let f = BudgetFeasibility::new(instance);
    let mut search = Search {
        model: &model,
        lp: relaxation(&model),
        best: None,
        nodes: 0,
        lp_solves: 0,
        limit: options.node_limit,
    };
    for order in seed_orders(instance, options.seed_orders) {
        let (m, d, _) = engine::solve(instance, &f, &order)?;
        if let Some(values) = encode(&model, instance, &m, &d) {
            debug_assert!(model.lp.is_feasible_point(&values));
            let obj = model.lp.objective_value(&values);
            if search.best.as_ref().is_none_or(|(b, _)| obj > *b) {
                search.best = Some((obj, values));
            }
        }
    }
    search.run()?;
    let (objective, values) = search
        .best
        .take()
        .ok_or_else(|| Error::Verification("no integral point found although the engine always yields one".into()))?;
    let (matching, cutoffs, allocation) = decode(&model, instance, &values);
    let checker = Checker::budget(instance);
    if !checker.is_cutoff_stable(&matching)
        || !allocation.certifies(instance, &matching.counts(instance.num_projects()))
    {
        return Err(Error::Verification(format!(
            "optimum {} is not cutoff stable",
            matching.display(instance)
        )));
    }
    Ok(MilpSolution {
        matching,
        cutoffs,
        allocation,
        objective,
        nodes: search.nodes,
        lp_solves: search.lp_solves,
    })
}

/// Smallest cutoff sum that, together with `m`, satisfies the model; `None`
/// when `m` admits no such cutoffs.
pub fn min_cutoffs_for_matching(instance: &Instance, m: &Matching, node_limit: usize) -> Result<Option<CutoffVector>> {
    let model = build_model(instance);
    let mut lp = relaxation(&model);
    for &((a, p), v) in &model.y {
        let val = if m.contains(a, p) { int(1) } else { int(0) };
        lp.variables[v].lower = Some(val.clone());
        lp.variables[v].upper = Some(val);
    }
    let mut search = Search {
        model: &model,
        lp,
        best: None,
        nodes: 0,
        lp_solves: 0,
        limit: node_limit,
    };
    search.run()?;
    Ok(search.best.map(|(_, values)| decode(&model, instance, &values).1))
}

/// Optimum of the plain relaxation.
pub fn relaxation_bound(model: &MilpModel) -> Option<Rational> {
    let s = solve_lp(&model.lp);
    s.is_optimal().then_some(s.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gadget, RawInstance};
    use crate::stability::minimal_cutoffs_for;

    #[test]
    fn example4_model_shape() {
        let model = build_model(&Gadget::Example4Distinct.instance());
        assert_eq!(model.y.len(), 6);
        assert_eq!(model.d.len(), 3);
        assert_eq!(model.x.len(), 3);
        assert_eq!(model.weight, 13);
    }

    #[test]
    fn gadget_optimum_sizes() {
        for (g, size) in [
            (Gadget::Example1, 1),
            (Gadget::Example2Unsolvable, 1),
            (Gadget::Example3Cycle, 3),
            (Gadget::Example4Distinct, 2),
        ] {
            let inst = g.instance();
            let s = solve_max_cutoff_stable(&inst, &MilpOptions::default()).unwrap();
            assert_eq!(s.size(), size, "{}", g.name());
            assert_eq!(s.cutoffs, minimal_cutoffs_for(&inst, &s.matching).unwrap());
        }
    }

    #[test]
    fn no_acceptable_pairs() {
        let mut raw = RawInstance::default();
        raw.applicant("a1", &["p1"])
            .project("p1", 1, &[])
            .supervisor("s1", int(1), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let model = build_model(&inst);
        assert!(model.y.is_empty());
        let s = solve_max_cutoff_stable(&inst, &MilpOptions::default()).unwrap();
        assert!(s.matching.is_empty());
        assert_eq!(s.cutoffs, CutoffVector(vec![0]));
    }

    #[test]
    fn single_pair_is_matched() {
        let mut raw = RawInstance::default();
        raw.applicant("a1", &["p1"])
            .project("p1", 1, &["a1"])
            .supervisor("s1", int(1), &["p1"]);
        let inst = Instance::validate(&raw).unwrap();
        let s = solve_max_cutoff_stable(&inst, &MilpOptions::default()).unwrap();
        assert_eq!(s.size(), 1);
        // nobody is turned away, so the cutoff drops all the way
        assert_eq!(s.cutoffs, CutoffVector(vec![0]));
        assert_eq!(s.objective, int(3));
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = Gadget::Example3Cycle.instance();
        let opts = MilpOptions {
            node_limit: 0,
            seed_orders: 1,
        };
        assert!(matches!(
            solve_max_cutoff_stable(&inst, &opts),
            Err(Error::NodeLimit(0))
        ));
    }

    #[test]
    fn fixed_matching_recovers_minimal_cutoffs() {
        let inst = Gadget::Example3Cycle.instance();
        let m = Matching::from_named(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]).unwrap();
        let d = min_cutoffs_for_matching(&inst, &m, 10_000).unwrap().unwrap();
        assert_eq!(d, minimal_cutoffs_for(&inst, &m).unwrap());
    }

    #[test]
    fn relaxation_bounds_the_optimum() {
        for g in Gadget::ALL {
            let inst = g.instance();
            let model = build_model(&inst);
            let s = solve_max_cutoff_stable(&inst, &MilpOptions::default()).unwrap();
            assert!(relaxation_bound(&model).unwrap() >= s.objective);
        }
    }

    #[test]
    fn export_is_deterministic() {
        let inst = Gadget::Example2Unsolvable.instance();
        let a = build_model(&inst).to_lp_format("example2_unsolvable");
        let b = build_model(&inst).to_lp_format("example2_unsolvable");
        assert_eq!(a, b);
        assert!(a.contains("Binary\n y_a1_p2 y_a1_p1 y_a2_p1 y_a2_p2\n"));
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use cutoffmatch::egalitarian::{default_targets, egalitarian_allocation, supervised_pairs, verify_leximin, TargetMode};
use cutoffmatch::engine;
use cutoffmatch::flow::check_counts;
use cutoffmatch::matching::is_valid_matching;
use cutoffmatch::milp::{solve_max_cutoff_stable, MilpOptions};
use cutoffmatch::model::{generate_random, RandomSpec};
use cutoffmatch::oracle::{
    all_smti, classify_all, enumerate_matchings, find_strongly_stable, max_cutoff_stable_bruteforce, random_smti,
    reduce_smti_maxsize, reduce_smti_strong, smti_weakly_stable_bruteforce, Enumeration, SmtiInstance, DEFAULT_GUARD,
};
use cutoffmatch::rational::{frac, int, Rational};
use cutoffmatch::stability::{induce, is_fair};
use cutoffmatch::{
    check_feasibility, check_stability, BudgetFeasibility, Checker, Gadget, Instance, Matching, RawInstance,
    StabilityLevel,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::panic;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn named(inst: &Instance, pairs: &[(&str, &str)]) -> Matching {
    Matching::from_named(inst, pairs).unwrap()
}

/// Every valid matching, feasible or not, by plain product enumeration.
fn all_valid(inst: &Instance) -> Vec<Matching> {
    let mut out = vec![Matching::empty(inst.num_applicants())];
    for a in 0..inst.num_applicants() {
        let mut next = Vec::new();
        for m in &out {
            next.push(m.clone());
            for &p in inst.applicant_prefs(a) {
                let mut m2 = m.clone();
                m2.set(a, Some(p));
                next.push(m2);
            }
        }
        out = next;
    }
    out.retain(|m| is_valid_matching(inst, m));
    out
}

fn set_of(ms: impl IntoIterator<Item = Matching>) -> BTreeSet<Vec<(usize, usize)>> {
    ms.into_iter().map(|m| m.pairs()).collect()
}

fn within(limit: Duration, t: Instant) -> std::result::Result<(), String> {
    let e = t.elapsed();
    if e > limit {
        Err(format!("took {e:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn random(seed: u64, na: usize, np: usize, ns: usize) -> Instance {
    generate_random(&RandomSpec {
        seed,
        applicants: na,
        projects: np,
        supervisors: ns,
        density: frac(1 + (seed % 4) as i64, 4),
        budget_min: int(0),
        budget_max: int(3),
        capacity_max: 3,
    })
    .unwrap()
}

fn c1() -> Outcome {
    let t = Instant::now();
    let inst = Gadget::Example1.instance();
    let feasible = set_of(
        all_valid(&inst)
            .into_iter()
            .filter(|m| check_feasibility(&inst, m).feasible),
    );
    let expect = set_of([
        Matching::empty(2),
        named(&inst, &[("a1", "p2")]),
        named(&inst, &[("a2", "p2")]),
    ]);
    ensure!(feasible == expect, "feasible set {feasible:?}");
    ensure!(
        !check_feasibility(&inst, &named(&inst, &[("a2", "p1")])).feasible,
        "(a2,p1) feasible"
    );
    within(Duration::from_secs(1), t)?;
    Ok(format!("3 feasible matchings in {:?}", t.elapsed()))
}

fn c2() -> Outcome {
    let inst = Gadget::Example2Unsolvable.instance();
    let c = classify_all(&inst, DEFAULT_GUARD).unwrap();
    ensure!(
        c.at_least(StabilityLevel::Strong).is_empty(),
        "strongly stable matching found"
    );
    let expect = set_of([named(&inst, &[("a1", "p1")]), named(&inst, &[("a2", "p2")])]);
    let cutoff = set_of(c.at_least(StabilityLevel::Cutoff).into_iter().cloned());
    let weak = set_of(c.at_least(StabilityLevel::Weak).into_iter().cloned());
    ensure!(cutoff == expect, "cutoff set {cutoff:?}");
    ensure!(weak == expect, "weak set {weak:?}");
    Ok("no strong, cutoff = weak = {(a1,p1)}, {(a2,p2)}".into())
}

fn c3() -> Outcome {
    let inst = Gadget::Example3Cycle.instance();
    let m1 = named(&inst, &[("a1", "p1"), ("a2", "p2"), ("a4", "p4")]);
    let m2 = named(&inst, &[("a2", "p2"), ("a3", "p3"), ("a4", "p4")]);
    let expect = set_of([m1.clone(), m2.clone()]);
    let c = classify_all(&inst, DEFAULT_GUARD).unwrap();
    for level in [StabilityLevel::Strong, StabilityLevel::Cutoff, StabilityLevel::Weak] {
        let got = set_of(c.at_least(level).into_iter().cloned());
        ensure!(got == expect, "{level} set {got:?}");
    }
    ensure!(
        m1.matched_applicants() != m2.matched_applicants(),
        "same applicants matched"
    );
    Ok("strong = cutoff = weak = {M1, M2}; matched applicants differ".into())
}

fn c4() -> Outcome {
    let inst = Gadget::Example4Distinct.instance();
    let cases = [
        (named(&inst, &[("a1", "p1"), ("a2", "p2")]), StabilityLevel::Strong),
        (named(&inst, &[("a1", "p2"), ("a2", "p1")]), StabilityLevel::Strong),
        (named(&inst, &[("a1", "p2"), ("a3", "p3")]), StabilityLevel::Cutoff),
        (named(&inst, &[("a1", "p3"), ("a2", "p1")]), StabilityLevel::Weak),
    ];
    for (m, level) in &cases {
        let got = check_stability(&inst, m).level;
        ensure!(got == *level, "{} is {got}, expected {level}", m.display(&inst));
    }
    let listed: Vec<&Matching> = cases.iter().map(|(m, _)| m).collect();
    let mut others = 0;
    for m in all_valid(&inst).iter().filter(|m| m.size() == 2 && !listed.contains(m)) {
        let level = check_stability(&inst, m).level;
        ensure!(
            matches!(level, StabilityLevel::Unfair | StabilityLevel::Infeasible),
            "{} is {level}",
            m.display(&inst)
        );
        others += 1;
    }
    Ok(format!(
        "M1,M2 strong; M3 cutoff; M4 weak; {others} other size-2 matchings unfair or infeasible"
    ))
}

fn c5() -> Outcome {
    let run = |inst: &Instance, order: &[&str]| {
        let order = engine::parse_order(inst, order).unwrap();
        engine::solve(inst, &BudgetFeasibility::new(inst), &order).unwrap().0
    };
    let item1 = Gadget::Thm7Item1.instance();
    ensure!(
        run(&item1, &["p1", "p2"]) == named(&item1, &[("a1", "p1")]),
        "item 1 truthful"
    );
    let mut raw: RawInstance = Gadget::Thm7Item1.raw();
    raw.applicant_prefs.insert("a2".into(), vec!["p2".into(), "p1".into()]);
    let lied = Instance::validate(&raw).unwrap();
    let out = run(&lied, &["p1", "p2"]);
    ensure!(
        out == named(&lied, &[("a2", "p2")]),
        "item 1 misreport gives {}",
        out.display(&lied)
    );

    let item3 = Gadget::Thm7Item3.instance();
    ensure!(
        run(&item3, &["p1", "p2", "p3"]) == named(&item3, &[("a1", "p2"), ("a2", "p1")]),
        "item 3 (p1,p2,p3)"
    );
    ensure!(
        run(&item3, &["p1", "p3", "p2"]) == named(&item3, &[("a1", "p1"), ("a3", "p3")]),
        "item 3 (p1,p3,p2)"
    );

    let item4 = Gadget::Thm7Item4.instance();
    let unreachable = named(&item4, &[("a1", "p1"), ("a2", "p2")]);
    for order in [["p1", "p2"], ["p2", "p1"]] {
        ensure!(run(&item4, &order) != unreachable, "item 4 reached under {order:?}");
    }
    ensure!(
        Checker::budget(&item4).is_cutoff_stable(&unreachable),
        "item 4 matching not cutoff stable"
    );
    Ok("items 1, 3 and 4 reproduced".into())
}

fn c6() -> Outcome {
    let t = Instant::now();
    for seed in 0..200u64 {
        let na = 1 + (seed % 8) as usize;
        let np = 1 + (seed / 8 % 8) as usize;
        let ns = 1 + (seed % 4) as usize;
        let inst = random(seed, na, np, ns);
        let mut order = engine::default_order(&inst);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (m, d, trace) = engine::solve(&inst, &BudgetFeasibility::new(&inst), &order).unwrap();
        let checker = Checker::budget(&inst);
        ensure!(is_fair(&inst, &m).fair, "seed {seed}: unfair");
        ensure!(checker.feasible(&m), "seed {seed}: infeasible");
        ensure!(checker.is_cutoff_stable(&m), "seed {seed}: not cutoff stable");
        for p in 0..np {
            if let Some(lower) = d.decremented(p) {
                ensure!(
                    !checker.feasible(&induce(&inst, &lower)),
                    "seed {seed}: cutoff of project {p} not minimal"
                );
            }
        }
        let bound = (na + 1) * np * np;
        ensure!(
            trace.total_calls <= bound,
            "seed {seed}: {} calls > {bound}",
            trace.total_calls
        );
    }
    within(Duration::from_secs(60), t)?;
    Ok(format!("200 instances in {:?}", t.elapsed()))
}

fn c7() -> Outcome {
    let t = Instant::now();
    let mut instances: Vec<Instance> = Gadget::ALL.iter().map(|g| g.instance()).collect();
    for seed in 0..100u64 {
        let na = 1 + (seed % 7) as usize;
        let np = 1 + (seed / 7 % 5) as usize;
        let ns = 1 + (seed % 3) as usize;
        instances.push(random(1000 + seed, na, np, ns));
    }
    for (i, inst) in instances.iter().enumerate() {
        let milp = solve_max_cutoff_stable(inst, &MilpOptions::default()).unwrap();
        let brute = max_cutoff_stable_bruteforce(inst, DEFAULT_GUARD).unwrap();
        ensure!(
            milp.size() == brute.size,
            "instance {i}: milp {} oracle {}",
            milp.size(),
            brute.size
        );
        ensure!(
            Checker::budget(inst).is_cutoff_stable(&milp.matching),
            "instance {i}: milp output not cutoff stable"
        );
    }
    within(Duration::from_secs(120), t)?;
    Ok(format!("{} instances in {:?}", instances.len(), t.elapsed()))
}

fn sweep() -> Vec<SmtiInstance> {
    let mut out = Vec::new();
    for n in 0..=2 {
        out.extend(all_smti(n, n));
    }
    out.extend((0..50).map(|seed| random_smti(seed, 3, 3, 0.6)));
    out
}

fn c8() -> Outcome {
    let all = sweep();
    let mut complete = 0;
    for (i, s) in all.iter().enumerate() {
        let lhs = smti_weakly_stable_bruteforce(s).unwrap().has_complete;
        let rhs = find_strongly_stable(&reduce_smti_strong(s).unwrap(), 32)
            .unwrap()
            .is_some();
        ensure!(lhs == rhs, "instance {i} {s:?}: complete {lhs}, strongly stable {rhs}");
        complete += lhs as usize;
    }
    Ok(format!(
        "{} instances agree ({complete} with a complete matching)",
        all.len()
    ))
}

fn c9() -> Outcome {
    let all = sweep();
    for (i, s) in all.iter().enumerate() {
        let lhs = smti_weakly_stable_bruteforce(s).unwrap().max_size;
        let (inst, offset) = reduce_smti_maxsize(s).unwrap();
        let rhs = max_cutoff_stable_bruteforce(&inst, 32).unwrap().size + offset;
        ensure!(lhs == rhs, "instance {i} {s:?}: {lhs} vs {rhs}");
    }
    Ok(format!("{} instances agree", all.len()))
}

fn c10() -> Outcome {
    let mut raw = RawInstance::default();
    raw.applicant("a1", &["p1"])
        .project("p1", 1, &["a1"])
        .supervisor("s1", frac(1, 4), &["p1"])
        .supervisor("s2", int(2), &["p1"]);
    let inst = Instance::validate(&raw).unwrap();
    let m = named(&inst, &[("a1", "p1")]);
    let t = default_targets(&inst, &m).unwrap();
    let r = egalitarian_allocation(&inst, &m, &t, TargetMode::Strict).unwrap();
    ensure!(
        r.allocation.get(0, 0) == Some(&frac(1, 4)),
        "x(s1,p1) = {:?}",
        r.allocation.get(0, 0)
    );
    ensure!(
        r.allocation.get(1, 0) == Some(&frac(3, 4)),
        "x(s2,p1) = {:?}",
        r.allocation.get(1, 0)
    );
    ensure!(r.ratios == [frac(3, 2), frac(1, 2)], "ratios {:?}", r.ratios);
    ensure!(verify_leximin(&inst, &m, &t, &r.allocation), "verify_leximin rejected");
    // x1 + x2 = 1, x1 <= 1/4, x2 <= 2; both targets 1/2
    let half = frac(1, 2);
    for k in 0..=1000 {
        let x1 = frac(k, 1000);
        let x2 = int(1) - &x1;
        if x1 > frac(1, 4) || x2 > int(2) {
            continue;
        }
        let mut v: Vec<Rational> = vec![&x1 / &half, &x2 / &half];
        v.sort_by(|a, b| b.cmp(a));
        ensure!(v >= r.ratios, "grid point x1 = {x1} beats the LP result");
    }
    Ok("x = (1/4, 3/4), ratios (3/2, 1/2), grid search agrees".into())
}

fn c11() -> Outcome {
    let mut cases: Vec<(Instance, Matching)> = Vec::new();
    for g in Gadget::ALL {
        let inst = g.instance();
        for m in enumerate_matchings(&inst, Enumeration::default()).unwrap() {
            cases.push((inst.clone(), m));
        }
    }
    for seed in 0..60u64 {
        let inst = random(
            2000 + seed,
            2 + (seed % 6) as usize,
            1 + (seed % 4) as usize,
            1 + (seed % 4) as usize,
        );
        let (m, _, _) = engine::solve(&inst, &BudgetFeasibility::new(&inst), &engine::default_order(&inst)).unwrap();
        cases.push((inst, m));
    }
    let mut solves = 0;
    for (i, (inst, m)) in cases.iter().enumerate() {
        let Ok(t) = default_targets(inst, m) else { continue };
        let r = egalitarian_allocation(inst, m, &t, TargetMode::Strict).unwrap();
        let n = supervised_pairs(inst).len();
        ensure!(
            r.lp_solves <= n * n + n,
            "case {i}: {} LP solves for |T| = {n}",
            r.lp_solves
        );
        for round in 1..=r.rounds() {
            ensure!(
                r.history.iter().any(|h| h.round == round),
                "case {i}: round {round} fixed nothing"
            );
        }
        ensure!(r.history.len() == n, "case {i}: {} of {n} pairs fixed", r.history.len());
        solves += r.lp_solves;
    }
    Ok(format!("{} cases, {solves} LP solves in total", cases.len()))
}

fn random_matching(inst: &Instance, rng: &mut ChaCha8Rng) -> Matching {
    let mut counts = vec![0; inst.num_projects()];
    let assignment = (0..inst.num_applicants())
        .map(|a| {
            let prefs = inst.applicant_prefs(a);
            let p = *prefs.get(rng.gen_range(0..=prefs.len()))?;
            (counts[p] < inst.capacity(p)).then(|| {
                counts[p] += 1;
                p
            })
        })
        .collect();
    Matching::from_assignment(assignment)
}

fn c12() -> Outcome {
    let mut feasible = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = generate_random(&RandomSpec {
            seed,
            applicants: rng.gen_range(1..=8),
            projects: rng.gen_range(1..=5),
            supervisors: rng.gen_range(1..=4),
            density: int(1),
            budget_min: int(0),
            budget_max: int(3),
            capacity_max: 3,
        })
        .unwrap();
        let m = random_matching(&inst, &mut rng);
        let sub = Matching::from_assignment(
            m.assignment()
                .iter()
                .map(|&p| p.filter(|_| rng.gen_bool(0.5)))
                .collect(),
        );
        let f = check_feasibility(&inst, &m).feasible;
        if f {
            feasible += 1;
            ensure!(check_feasibility(&inst, &sub).feasible, "seed {seed}: heredity fails");
        }
        let mut seats = m.assignment().to_vec();
        seats.shuffle(&mut rng);
        let permuted = Matching::from_assignment(seats);
        ensure!(
            check_feasibility(&inst, &permuted).feasible == f,
            "seed {seed}: anonymity fails"
        );
    }
    Ok(format!("500 triples ({feasible} with a feasible matching)"))
}

fn c13() -> Outcome {
    let mut checked = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = generate_random(&RandomSpec {
            seed,
            applicants: 8,
            projects: rng.gen_range(1..=5),
            supervisors: rng.gen_range(1..=4),
            density: int(1),
            budget_min: int(0),
            budget_max: int(4),
            capacity_max: 4,
        })
        .unwrap()
        .to_raw();
        for s in &mut raw.supervisors {
            s.budget = s.budget.floor();
        }
        let inst = Instance::validate(&raw).unwrap();
        let counts: Vec<usize> = (0..inst.num_projects())
            .map(|p| rng.gen_range(0..=inst.capacity(p)))
            .collect();
        if let Some(a) = check_counts(&inst, &counts).allocation {
            ensure!(a.is_integral(), "seed {seed}: fractional allocation");
            checked += 1;
        }
    }
    ensure!(checked > 0, "no feasible case generated");
    Ok(format!("{checked} feasible integer-budget checks, all integral"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("Example 1 feasible set", c1),
        ("Example 2 stability sets", c2),
        ("Example 3 stability sets", c3),
        ("Example 4 levels", c4),
        ("cutoff algorithm traces", c5),
        ("cutoff algorithm sweep", c6),
        ("MILP agrees with enumeration", c7),
        ("strong stability reduction", c8),
        ("maximum size reduction", c9),
        ("egalitarian fixture", c10),
        ("egalitarian round bound", c11),
        ("heredity and anonymity", c12),
        ("integral allocations", c13),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

//! The `cutoffmatch` command line.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict, 2 input
//! error, 3 resource guard.

use crate::egalitarian::{
    default_targets, egalitarian_allocation, matched_targets, AllocationReport, TargetMode, TargetProfile,
};
use crate::engine::{self, call_bound};
use crate::error::Error;
use crate::flow::{build_flow_graph, check_feasibility, max_flow, BudgetFeasibility};
use crate::matching::{Matching, MatchingDocument};
use crate::milp::{build_model, export_lp_file, solve_max_cutoff_stable, MilpOptions};
use crate::model::{generate_random, Gadget, Instance, RandomSpec, RawInstance};
use crate::oracle::{self, classify_all, find_strongly_stable, max_cutoff_stable_bruteforce};
use crate::rational;
use crate::report::{allocation_json, cutoffs_json, matching_json, sha256_hex, trace_json, Counters, RunReport};
use crate::stability::{Checker, StabilityLevel};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug, Parser)]
#[command(name = "cutoffmatch", version, about = "Stable matching under supervisor budgets")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Print counters, timings and instance warnings to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Feasibility certificate and stability verdict of a matching.
    Check {
        instance: PathBuf,
        matching: PathBuf,
        /// Write the funding flow network as Graphviz.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run the cutoff-decreasing algorithm.
    Solve {
        instance: PathBuf,
        /// Comma-separated project order.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// Write the step trace as JSON lines (`-` for stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Shuffle the project order with this seed when no order is given.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Maximum-size cutoff stable matching by branch and bound.
    Optimize {
        instance: PathBuf,
        /// Write the integer program in LP format.
        #[arg(long)]
        export_lp: Option<PathBuf>,
        /// Branch-and-bound node budget.
        #[arg(long, value_name = "NODES")]
        time_limit: Option<usize>,
        /// Cross-check the size against exhaustive enumeration.
        #[arg(long)]
        oracle: bool,
    },
    /// Leximin funding allocation for a feasible matching.
    Allocate {
        instance: PathBuf,
        matching: PathBuf,
        /// `equal`, `matched`, or a JSON target file.
        #[arg(long, default_value = "equal")]
        targets: String,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Random instance.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Applicants, projects, supervisors.
        #[arg(long, default_value = "4,3,2")]
        sizes: String,
        #[arg(long, default_value = "1")]
        density: String,
        #[arg(long, default_value = "0")]
        budget_min: String,
        #[arg(long, default_value = "2")]
        budget_max: String,
        #[arg(long, default_value_t = 2)]
        capacity_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One of the built-in instances.
    Gadget {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
    /// Exhaustive classification of every feasible matching.
    Oracle { instance: PathBuf },
}

type Table = (Vec<&'static str>, Vec<Vec<String>>);

struct Outcome {
    report: RunReport,
    text: String,
    table: Option<Table>,
    exit: i32,
    /// Printed verbatim instead of the report.
    raw: Option<String>,
    /// Printed before the report.
    prefix: Option<String>,
    warnings: Vec<String>,
}

struct Loaded {
    instance: Instance,
    digest: String,
}

impl Loaded {
    fn warnings(&self) -> Vec<String> {
        self.instance
            .warnings()
            .iter()
            .map(|v| format!("{}: {} ({})", v.entity, v.rule, v.detail))
            .collect()
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SizeGuard { .. } | Error::NodeLimit(_) => 3,
        Error::Infeasible | Error::Unfair { .. } | Error::Verification(_) => 1,
        _ => 2,
    }
}

/// Prefixes each violation with the line of the file where its entity
/// first appears.
fn anchored(path: &Path, text: &str, e: Error) -> String {
    match e {
        Error::Validation(report) => report
            .violations
            .iter()
            .map(|v| {
                let needle = format!("\"{}\"", v.entity);
                let line = text
                    .lines()
                    .position(|l| l.contains(&needle))
                    .map_or(String::new(), |k| format!("{}:", k + 1));
                format!("{}:{line} {}: {} ({})", path.display(), v.entity, v.rule, v.detail)
            })
            .collect::<Vec<_>>()
            .join("\n"),
        other => format!("{}: {other}", path.display()),
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: 2, message }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    let instance = RawInstance::from_json(&text)
        .and_then(|raw| Instance::validate(&raw))
        .map_err(|e| Failure {
            code: 2,
            message: anchored(path, &text, e),
        })?;
    Ok(Loaded {
        instance,
        digest: sha256_hex(text.as_bytes()),
    })
}

fn load_matching(path: &Path, instance: &Instance) -> Result<Matching, Failure> {
    let text = read(path)?;
    MatchingDocument::from_json(&text)
        .and_then(|d| d.resolve(instance))
        .map_err(|e| Failure {
            code: 2,
            message: anchored(path, &text, e),
        })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn report(command: &str, digest: Option<String>, outputs: Value, counters: Counters) -> RunReport {
    RunReport {
        command: command.to_string(),
        instance_sha256: digest,
        outputs,
        counters,
        wall_time_ms: 0.0,
    }
}

impl Outcome {
    fn warned(mut self, l: &Loaded) -> Self {
        self.warnings = l.warnings();
        self
    }
}

fn outcome(report: RunReport, text: String, table: Option<Table>, exit: i32) -> Outcome {
    Outcome {
        report,
        text,
        table,
        exit,
        raw: None,
        prefix: None,
        warnings: Vec::new(),
    }
}

fn cutoff_text(instance: &Instance, d: &crate::matching::CutoffVector) -> String {
    d.to_named(instance)
        .into_iter()
        .map(|(p, v)| format!("{p}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cutoff_table(instance: &Instance, m: &Matching, d: &crate::matching::CutoffVector) -> Table {
    let rows = (0..instance.num_projects())
        .map(|p| {
            let members: Vec<&str> = m
                .applicants_of(p)
                .into_iter()
                .map(|a| instance.applicant_id(a))
                .collect();
            vec![instance.project(p).id.clone(), d.get(p).to_string(), members.join(" ")]
        })
        .collect();
    (vec!["project", "cutoff", "matched"], rows)
}

fn cmd_check(instance: &Path, matching: &Path, dot: Option<&Path>) -> Result<Outcome, Failure> {
    let l = load_instance(instance)?;
    let inst = &l.instance;
    let m = load_matching(matching, inst)?;
    let feas = check_feasibility(inst, &m);
    if let Some(path) = dot {
        let graph = build_flow_graph(inst, &m)?;
        let flow = max_flow(&graph);
        write_file(path, &graph.to_dot(inst, Some(&flow)))?;
    }
    let checker = Checker::budget(inst);
    let verdict = checker.check_stability(&m);
    let outputs = json!({
        "matching": matching_json(inst, &m),
        "feasible": feas.feasible,
        "allocation": feas.allocation.as_ref().map(|a| allocation_json(inst, a)),
        "verdict": verdict.to_json(inst),
    });
    let mut text = if feas.feasible {
        format!("feasible; level: {}\n", verdict.level)
    } else {
        let mut t = String::from("infeasible\n");
        if let Some(d) = &verdict.detail {
            let _ = writeln!(t, "  {d}");
        }
        t
    };
    if let Some(a) = &feas.allocation {
        for (s, p, x) in a.to_named(inst) {
            let _ = writeln!(text, "  x[{s},{p}] = {}", rational::render(&x));
        }
    }
    let mut rows = Vec::new();
    for w in &verdict.witnesses {
        let (a, p) = (inst.applicant_id(w.applicant), &inst.project(w.project).id);
        let reason = serde_json::to_value(w.reason).expect("reason serialises");
        let reason = reason.as_str().unwrap_or_default().to_string();
        let _ = writeln!(text, "  witness ({a},{p}): {reason}");
        rows.push(vec![a.to_string(), p.clone(), reason]);
    }
    let counters = Counters {
        feasibility_calls: verdict.feasibility_calls,
        ..Default::default()
    };
    Ok(outcome(
        report("check", Some(l.digest.clone()), outputs, counters),
        text,
        Some((vec!["applicant", "project", "reason"], rows)),
        if feas.feasible { 0 } else { 1 },
    )
    .warned(&l))
}

fn cmd_solve(
    instance: &Path,
    order: Option<&[String]>,
    trace: Option<&Path>,
    seed: Option<u64>,
) -> Result<Outcome, Failure> {
    let l = load_instance(instance)?;
    let inst = &l.instance;
    let order = match (order, seed) {
        (Some(ids), _) => {
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            engine::parse_order(inst, &ids)?
        }
        (None, Some(seed)) => {
            let mut o = engine::default_order(inst);
            o.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            o
        }
        (None, None) => engine::default_order(inst),
    };
    let f = BudgetFeasibility::new(inst);
    let (m, d, tr) = engine::solve(inst, &f, &order)?;
    let stable = Checker::budget(inst).is_cutoff_stable(&m);
    let mut prefix = None;
    if let Some(path) = trace {
        let lines = tr.to_json_lines(inst);
        if path == Path::new("-") {
            prefix = Some(lines);
        } else {
            write_file(path, &lines)?;
        }
    }
    let order_ids: Vec<&str> = order.iter().map(|&p| inst.project(p).id.as_str()).collect();
    let outputs = json!({
        "order": order_ids,
        "matching": matching_json(inst, &m),
        "cutoffs": cutoffs_json(inst, &d),
        "size": m.size(),
        "cutoff_stable": stable,
        "call_bound": call_bound(inst),
        "trace": trace_json(inst, &tr),
    });
    let text = format!(
        "matching: {}\ncutoffs: {}\nfeasibility calls: {} (bound {})\ncutoff stable: {}\n",
        m.display(inst),
        cutoff_text(inst, &d),
        tr.total_calls,
        call_bound(inst),
        if stable { "yes" } else { "no" },
    );
    let counters = Counters {
        feasibility_calls: tr.total_calls,
        ..Default::default()
    };
    let mut out = outcome(
        report("solve", Some(l.digest.clone()), outputs, counters),
        text,
        Some(cutoff_table(inst, &m, &d)),
        if stable { 0 } else { 1 },
    );
    out.prefix = prefix;
    Ok(out.warned(&l))
}

fn cmd_optimize(
    instance: &Path,
    export_lp: Option<&Path>,
    node_limit: Option<usize>,
    with_oracle: bool,
    guard: usize,
) -> Result<Outcome, Failure> {
    let l = load_instance(instance)?;
    let inst = &l.instance;
    if inst.num_applicants() > guard {
        return Err(Error::SizeGuard {
            what: "applicants",
            actual: inst.num_applicants(),
            limit: guard,
        }
        .into());
    }
    if let Some(path) = export_lp {
        let title = path
            .file_stem()
            .map_or("cutoffmatch".into(), |s| s.to_string_lossy().into_owned());
        export_lp_file(&build_model(inst), &title, path)?;
    }
    let mut options = MilpOptions::default();
    if let Some(n) = node_limit {
        options.node_limit = n;
    }
    let sol = solve_max_cutoff_stable(inst, &options)?;
    let mut outputs = json!({
        "size": sol.size(),
        "matching": matching_json(inst, &sol.matching),
        "cutoffs": cutoffs_json(inst, &sol.cutoffs),
        "allocation": allocation_json(inst, &sol.allocation),
        "objective": rational::render(&sol.objective),
    });
    let mut text = format!(
        "size: {}\nmatching: {}\ncutoffs: {}\nobjective: {}\nnodes: {}\n",
        sol.size(),
        sol.matching.display(inst),
        cutoff_text(inst, &sol.cutoffs),
        rational::render(&sol.objective),
        sol.nodes
    );
    if with_oracle {
        let brute = max_cutoff_stable_bruteforce(inst, guard)?;
        outputs["oracle_size"] = json!(brute.size);
        let _ = writeln!(text, "oracle size: {}", brute.size);
        if brute.size != sol.size() {
            return Err(Error::Verification(format!(
                "branch and bound found size {}, enumeration {}",
                sol.size(),
                brute.size
            ))
            .into());
        }
    }
    let counters = Counters {
        lp_solves: sol.lp_solves,
        bb_nodes: sol.nodes,
        ..Default::default()
    };
    Ok(outcome(
        report("optimize", Some(l.digest.clone()), outputs, counters),
        text,
        Some(cutoff_table(inst, &sol.matching, &sol.cutoffs)),
        0,
    )
    .warned(&l))
}

fn cmd_allocate(instance: &Path, matching: &Path, targets: &str, mode: Mode) -> Result<Outcome, Failure> {
    let l = load_instance(instance)?;
    let inst = &l.instance;
    let m = load_matching(matching, inst)?;
    if !check_feasibility(inst, &m).feasible {
        return Err(Error::Infeasible.into());
    }
    let profile = match targets {
        "equal" => default_targets(inst, &m)?,
        "matched" => matched_targets(inst, &m)?,
        path => {
            let path = Path::new(path);
            let text = read(path)?;
            TargetProfile::from_json(inst, &text).map_err(|e| Failure {
                code: 2,
                message: anchored(path, &text, e),
            })?
        }
    };
    let mode = match mode {
        Mode::Strict => TargetMode::Strict,
        Mode::Lenient => TargetMode::Lenient,
    };
    let result = egalitarian_allocation(inst, &m, &profile, mode)?;
    let rep = AllocationReport::new(inst, &profile, &result);
    let mut text = String::new();
    let mut rows = Vec::new();
    for r in &rep.pairs {
        let _ = writeln!(
            text,
            "x[{},{}] = {}  target {}  ratio {}  round {}",
            r.supervisor, r.project, r.x, r.target, r.ratio, r.round_fixed
        );
        rows.push(vec![
            r.supervisor.clone(),
            r.project.clone(),
            r.x.clone(),
            r.target.clone(),
            r.ratio.clone(),
            r.round_fixed.to_string(),
        ]);
    }
    let _ = writeln!(text, "sorted ratios: {}", rep.sorted_ratios.join(" "));
    let _ = writeln!(text, "rounds: {}  lp solves: {}", rep.rounds, rep.lp_solves);
    let counters = Counters {
        lp_solves: result.lp_solves,
        ..Default::default()
    };
    let outputs = serde_json::to_value(&rep).expect("allocation report serialises");
    Ok(outcome(
        report("allocate", Some(l.digest.clone()), outputs, counters),
        text,
        Some((
            vec!["supervisor", "project", "x", "target", "ratio", "round_fixed"],
            rows,
        )),
        0,
    )
    .warned(&l))
}

fn parse_rational(flag: &str, text: &str) -> Result<rational::Rational, Failure> {
    rational::parse(text).map_err(|e| input_error(format!("--{flag}: {e}")))
}

fn emit_instance(command: &str, raw: &RawInstance, out: Option<&Path>) -> Result<Outcome, Failure> {
    let json_text = raw.to_json();
    let digest = sha256_hex(json_text.as_bytes());
    let outputs = json!({
        "applicants": raw.applicants.len(),
        "projects": raw.projects.len(),
        "supervisors": raw.supervisors.len(),
        "path": out.map(|p| p.display().to_string()),
    });
    let mut o = outcome(
        report(command, Some(digest), outputs, Counters::default()),
        String::new(),
        None,
        0,
    );
    match out {
        Some(path) => {
            write_file(path, &json_text)?;
            o.text = format!("wrote {}\n", path.display());
        }
        None => o.raw = Some(json_text),
    }
    Ok(o)
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    seed: u64,
    sizes: &str,
    density: &str,
    budget_min: &str,
    budget_max: &str,
    capacity_max: usize,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let parts: Vec<usize> = sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| input_error(format!("--sizes: expected A,P,S, got {sizes:?}")))?;
    let [applicants, projects, supervisors] = parts[..] else {
        return Err(input_error(format!("--sizes: expected A,P,S, got {sizes:?}")));
    };
    let spec = RandomSpec {
        seed,
        applicants,
        projects,
        supervisors,
        density: parse_rational("density", density)?,
        budget_min: parse_rational("budget-min", budget_min)?,
        budget_max: parse_rational("budget-max", budget_max)?,
        capacity_max,
    };
    let inst = generate_random(&spec).map_err(|e| input_error(e.to_string()))?;
    emit_instance("generate", &inst.to_raw(), out)
}

fn cmd_gadget(name: Option<&str>, out: Option<&Path>, list: bool) -> Result<Outcome, Failure> {
    if list {
        let names: Vec<&str> = Gadget::ALL.iter().map(|g| g.name()).collect();
        let text = names.iter().map(|n| format!("{n}\n")).collect();
        let rows = names.iter().map(|n| vec![n.to_string()]).collect();
        return Ok(outcome(
            report("gadget", None, json!({ "gadgets": names }), Counters::default()),
            text,
            Some((vec!["name"], rows)),
            0,
        ));
    }
    let g: Gadget = name.unwrap_or_default().parse()?;
    emit_instance("gadget", &g.raw(), out)
}

fn cmd_oracle(instance: &Path, guard: usize) -> Result<Outcome, Failure> {
    let l = load_instance(instance)?;
    let inst = &l.instance;
    let c = classify_all(inst, guard)?;
    let best = max_cutoff_stable_bruteforce(inst, guard)?;
    let strong = find_strongly_stable(inst, guard)?;
    let mut levels = Map::new();
    let mut text = format!("feasible matchings: {}\n", c.entries.len());
    let mut rows = Vec::new();
    for (level, n) in c.histogram() {
        levels.insert(level.to_string(), json!(n));
        let _ = writeln!(text, "  {level}: {n}");
        rows.push(vec![level.to_string(), n.to_string()]);
    }
    let _ = writeln!(text, "max cutoff stable size: {}", best.size);
    for w in &best.witnesses {
        let _ = writeln!(text, "  {}", w.display(inst));
    }
    let _ = writeln!(
        text,
        "strongly stable exists: {}",
        if strong.is_some() { "yes" } else { "no" }
    );
    let calls: usize = c.entries.iter().map(|(_, v)| v.feasibility_calls).sum();
    let outputs = json!({
        "matchings": c.entries.len(),
        "levels": levels,
        "strong": c.at_least(StabilityLevel::Strong).into_iter().map(|m| matching_json(inst, m)).collect::<Vec<_>>(),
        "cutoff": c.at_least(StabilityLevel::Cutoff).into_iter().map(|m| matching_json(inst, m)).collect::<Vec<_>>(),
        "weak": c.at_least(StabilityLevel::Weak).into_iter().map(|m| matching_json(inst, m)).collect::<Vec<_>>(),
        "max_cutoff_stable": {
            "size": best.size,
            "witnesses": best.witnesses.iter().map(|m| matching_json(inst, m)).collect::<Vec<_>>(),
        },
        "strongly_stable_exists": strong.is_some(),
    });
    let counters = Counters {
        feasibility_calls: calls,
        ..Default::default()
    };
    Ok(outcome(
        report("oracle", Some(l.digest.clone()), outputs, counters),
        text,
        Some((vec!["level", "count"], rows)),
        0,
    )
    .warned(&l))
}

fn flatten(outputs: &Value) -> Table {
    let rows = outputs
        .as_object()
        .map(|o| {
            o.iter()
                .map(|(k, v)| {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    vec![k.clone(), v]
                })
                .collect()
        })
        .unwrap_or_default();
    (vec!["key", "value"], rows)
}

fn render_csv(table: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.0).expect("in-memory write");
    for row in &table.1 {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Parses `args` (program name first) and runs one command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let guard = match oracle::guard_from_env() {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Check {
            instance,
            matching,
            dot,
        } => cmd_check(instance, matching, dot.as_deref()),
        Command::Solve {
            instance,
            order,
            trace,
            seed,
        } => cmd_solve(instance, order.as_deref(), trace.as_deref(), *seed),
        Command::Optimize {
            instance,
            export_lp,
            time_limit,
            oracle,
        } => cmd_optimize(instance, export_lp.as_deref(), *time_limit, *oracle, guard),
        Command::Allocate {
            instance,
            matching,
            targets,
            mode,
        } => cmd_allocate(instance, matching, targets, *mode),
        Command::Generate {
            seed,
            sizes,
            density,
            budget_min,
            budget_max,
            capacity_max,
            out,
        } => cmd_generate(
            *seed,
            sizes,
            density,
            budget_min,
            budget_max,
            *capacity_max,
            out.as_deref(),
        ),
        Command::Gadget { name, out, list } => cmd_gadget(name.as_deref(), out.as_deref(), *list),
        Command::Oracle { instance } => cmd_oracle(instance, guard),
    };
    let mut o = match result {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.code;
        }
    };
    o.report.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
    if cli.verbose {
        let c = &o.report.counters;
        let _ = writeln!(
            err,
            "{}: {:.3} ms, {} feasibility calls, {} LP solves, {} nodes",
            o.report.command, o.report.wall_time_ms, c.feasibility_calls, c.lp_solves, c.bb_nodes
        );
    }
    let mut body = o.prefix.clone().unwrap_or_default();
    body += &match (&o.raw, cli.format) {
        (Some(raw), _) => raw.clone(),
        (None, Format::Json) => {
            let mut s = serde_json::to_string_pretty(&o.report).expect("report serialises");
            s.push('\n');
            s
        }
        (None, Format::Text) => o.text.clone(),
        (None, Format::Csv) => render_csv(&o.table.clone().unwrap_or_else(|| flatten(&o.report.outputs))),
    };
    if cli.verbose {
        for line in &o.warnings {
            let _ = writeln!(err, "warning: {line}");
        }
    }
    if out.write_all(body.as_bytes()).is_err() {
        return 2;
    }
    o.exit
}

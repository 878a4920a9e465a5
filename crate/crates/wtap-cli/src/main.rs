//! Command-line driver: generate instances, solve them approximately or
//! exactly, run the LP and the separation routines standalone, audit
//! decompositions and verify solutions.
//!
//! Exit codes: 0 success, 1 infeasible, 2 invalid input or usage, 3 resource
//! limit hit, 4 property check failed (or internal inconsistency).

use std::collections::BTreeSet;
use std::io::Read as _;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use wtap_core::decompose::{decompose, verify_decomposition, PropertyCheck};
use wtap_core::exact::{brute_force_wtap, solve_few_leaf, solve_up_cross_exact};
use wtap_core::generate::{generate, CostModel, GeneratorConfig, LinkStyle, TreeShape};
use wtap_core::io::{
    parse_json, parse_point_json, parse_solution_json, parse_text, write_json, write_report_json,
    write_solution_json, write_text,
};
use wtap_core::lp::{
    check_certificate, solve_lp, solve_with_separation, ConstraintTag, LinearConstraint, LpModel,
    LpStatus,
};
use wtap_core::oddcut::{brute_force_separate, separate_odd_cut, OddCutOracle};
use wtap_core::oracle;
use wtap_core::rational::{format_rat, parse_rat, rat};
use wtap_core::rounding::{wtap_approx, ApproxReport, RoundingMethod};
use wtap_core::{AlgorithmParams, Error, FractionalSolution, LinkId, Rat, Result, WtapInstance};

#[derive(Parser)]
#[command(
    name = "wtap",
    about = "Weighted tree augmentation: generation, LP engine, exact solvers and the approximation pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run the full approximation pipeline.
    Solve(SolveArgs),
    /// Solve exactly (enumeration, or the integral special cases).
    Exact(ExactArgs),
    /// Solve the cut relaxation, optionally with lazy odd-cut rows.
    Lp(LpArgs),
    /// Separate one violated row at a given fractional point.
    Separate(SeparateArgs),
    /// Decompose at the LP optimum and audit the decomposition properties.
    Decompose(DecomposeArgs),
    /// Run the property suite on an instance or a seeded family, or check a
    /// solution document.
    Verify(VerifyArgs),
    /// Time the pipeline over a family of generated instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Random,
    Path,
    Star,
    Caterpillar,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Random,
    UpCross,
    LeafLeaf,
}

#[derive(Args)]
struct GenArgs {
    /// Number of tree nodes.
    #[arg(long)]
    nodes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
    shape: ShapeArg,
    #[arg(long, value_enum, default_value_t = StyleArg::Random)]
    style: StyleArg,
    /// Style-drawn link count (default: twice the node count).
    #[arg(long)]
    links: Option<usize>,
    /// Cost model: unit, int:MAX or ratio:MAX:DENOM.
    #[arg(long, default_value = "unit")]
    costs: String,
    #[arg(long)]
    root: Option<u32>,
    /// Skip the per-edge feasibility links.
    #[arg(long)]
    no_feasible: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Args)]
struct ParamArgs {
    /// Accuracy parameter, a rational in (0, 1].
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    /// Bound M on normalized costs (default: the instance's own cost ratio).
    #[arg(long)]
    max_cost: Option<String>,
    /// Override the thin-edge mass threshold.
    #[arg(long)]
    override_alpha: Option<String>,
    /// Override the heavy-coverage threshold.
    #[arg(long)]
    override_heavy: Option<String>,
    /// Override the per-piece center mass bound.
    #[arg(long)]
    override_beta: Option<String>,
    /// Override the bundle path budget.
    #[arg(long)]
    override_gamma: Option<u64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    round_limit: Option<usize>,
    #[arg(long)]
    restart_limit: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file, '-' for stdin; text or JSON is auto-detected.
    input: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Also write the chosen links as a solution document.
    #[arg(long)]
    solution_out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Brute,
    UpCross,
    FewLeaf,
}

#[derive(Args)]
struct ExactArgs {
    input: String,
    #[arg(long, value_enum, default_value_t = ExactMethod::Brute)]
    method: ExactMethod,
    /// Leaf budget for the few-leaf solver.
    #[arg(long, default_value_t = 8)]
    max_leaves: usize,
    #[arg(long, default_value_t = 500)]
    round_limit: usize,
    #[arg(long, default_value_t = 20000)]
    node_limit: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LpKind {
    /// Bare covering relaxation.
    Cut,
    /// Covering relaxation with lazily separated odd-cut rows.
    OddCut,
}

#[derive(Args)]
struct LpArgs {
    input: String,
    /// Which relaxation to solve.
    #[arg(long, value_enum, default_value_t = LpKind::OddCut)]
    kind: LpKind,
    #[arg(long, default_value_t = 500)]
    round_limit: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    /// Minimum odd cut through Gomory-Hu trees on the slack graph.
    GomoryHu,
    /// Exhaustive enumeration of node sets (small instances only).
    Brute,
}

#[derive(Args)]
struct SeparateArgs {
    input: String,
    /// JSON file mapping link ids to rational values.
    #[arg(long)]
    point: String,
    #[arg(long, value_enum, default_value_t = OracleArg::GomoryHu)]
    oracle: OracleArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Args)]
struct DecomposeArgs {
    input: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file; omit to verify a generated family instead.
    input: Option<String>,
    /// Solution document to check against the instance (skips the suite).
    #[arg(long)]
    solution: Option<String>,
    /// Nodes per generated instance (family mode, used without INPUT).
    #[arg(long)]
    nodes: Option<u32>,
    /// Number of seeded instances in family mode.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
    shape: ShapeArg,
    #[arg(long, value_enum, default_value_t = StyleArg::Random)]
    style: StyleArg,
    #[arg(long)]
    links: Option<usize>,
    /// Cost model: unit, int:MAX or ratio:MAX:DENOM.
    #[arg(long, default_value = "unit")]
    costs: String,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    nodes: u32,
    #[arg(long, default_value_t = 5)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
    shape: ShapeArg,
    #[arg(long, value_enum, default_value_t = StyleArg::Random)]
    style: StyleArg,
    #[arg(long)]
    links: Option<usize>,
    /// Cost model: unit, int:MAX or ratio:MAX:DENOM.
    #[arg(long, default_value = "unit")]
    costs: String,
    #[command(flatten)]
    params: ParamArgs,
    /// Wall-clock budget per instance.
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    /// Cross-check every report: feasibility, certificate budgets, and the
    /// enumeration sandwich lp <= opt <= cost <= 2 opt where enumerable.
    #[arg(long)]
    oracle: bool,
}

fn main() {
    // Die quietly on a closed pipe (`wtap … | head`) instead of panicking:
    // Rust starts with SIGPIPE ignored, which turns writes into errors.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) => 1,
                Error::InvalidArgument(_) | Error::State(_) => 2,
                Error::ResourceLimit(_) => 3,
                Error::PropertyFailure(_) | Error::Internal(_) => 4,
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Lp(a) => cmd_lp(a),
        Command::Separate(a) => cmd_separate(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::InvalidArgument(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("reading {path}: {e}")))
    }
}

fn load_instance(path: &str) -> Result<WtapInstance> {
    let text = read_input(path)?;
    if text.trim_start().starts_with('{') {
        parse_json(&text)
    } else {
        parse_text(&text)
    }
}

fn write_output(path: Option<&str>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Error::InvalidArgument(format!("writing {p}: {e}"))),
    }
}

fn parse_costs(s: &str) -> Result<CostModel> {
    let parts: Vec<&str> = s.split(':').collect();
    let int = |t: &str| -> Result<i64> {
        t.parse()
            .map_err(|_| Error::InvalidArgument(format!("bad cost model number '{t}'")))
    };
    match parts.as_slice() {
        ["unit"] => Ok(CostModel::Unit),
        ["int", max] => Ok(CostModel::UniformInt { max: int(max)? }),
        ["ratio", max, denom] => Ok(CostModel::UniformRatio {
            max: int(max)?,
            denom: int(denom)?,
        }),
        _ => Err(Error::InvalidArgument(format!(
            "cost model '{s}' is not unit, int:MAX or ratio:MAX:DENOM"
        ))),
    }
}

fn generator_config(
    nodes: u32,
    seed: u64,
    shape: ShapeArg,
    style: StyleArg,
    links: Option<usize>,
    costs: &str,
    root: Option<u32>,
    ensure_feasible: bool,
) -> Result<GeneratorConfig> {
    Ok(GeneratorConfig {
        nodes,
        shape: match shape {
            ShapeArg::Random => TreeShape::Random,
            ShapeArg::Path => TreeShape::Path,
            ShapeArg::Star => TreeShape::Star,
            ShapeArg::Caterpillar => TreeShape::Caterpillar,
        },
        links: links.unwrap_or(2 * nodes as usize),
        style: match style {
            StyleArg::Random => LinkStyle::Random,
            StyleArg::UpCross => LinkStyle::UpCross,
            StyleArg::LeafLeaf => LinkStyle::LeafToLeaf,
        },
        costs: parse_costs(costs)?,
        root,
        ensure_feasible,
        seed,
    })
}

fn build_params(inst: &WtapInstance, a: &ParamArgs) -> Result<AlgorithmParams> {
    let epsilon = parse_rat(&a.epsilon)?;
    let max_cost = match &a.max_cost {
        Some(s) => parse_rat(s)?,
        None => {
            let (norm, _) = inst.normalize_costs();
            norm.links()
                .iter()
                .filter(|l| !l.is_self_loop())
                .map(|l| l.cost.clone())
                .max()
                .unwrap_or_else(|| rat(1))
                .max(rat(1))
        }
    };
    let mut params = AlgorithmParams::new(epsilon, max_cost)?;
    if let Some(s) = &a.override_alpha {
        params.alpha_thin = parse_rat(s)?;
    }
    if let Some(s) = &a.override_heavy {
        params.heavy_threshold = parse_rat(s)?;
    }
    if let Some(s) = &a.override_beta {
        params.beta = parse_rat(s)?;
    }
    if let Some(g) = a.override_gamma {
        params.gamma = g;
    }
    if let Some(n) = a.node_limit {
        params.ilp_node_limit = n;
    }
    if let Some(n) = a.round_limit {
        params.separation_round_limit = n;
    }
    if let Some(n) = a.restart_limit {
        params.restart_limit = n;
    }
    Ok(params)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let cfg = generator_config(
        a.nodes,
        a.seed,
        a.shape,
        a.style,
        a.links,
        &a.costs,
        a.root,
        !a.no_feasible,
    )?;
    let inst = generate(&cfg)?;
    let content = match a.format {
        FormatArg::Text => write_text(&inst),
        FormatArg::Json => write_json(&inst) + "\n",
    };
    write_output(a.output.as_deref(), &content)
}

fn report_text(report: &ApproxReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("lp value: {}\n", format_rat(&report.lp_value)));
    out.push_str(&format!("output cost: {}\n", format_rat(&report.output_cost)));
    if let Some(r) = &report.ratio_vs_lp {
        out.push_str(&format!("ratio vs lp: {}\n", format_rat(r)));
    }
    out.push_str(&format!(
        "links: {}\n",
        report
            .output_links
            .iter()
            .map(|l| l.0.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    let cross = report
        .per_pair
        .iter()
        .filter(|p| p.method == RoundingMethod::CrossHeavy)
        .count();
    out.push_str(&format!(
        "pieces: {} (cross-heavy {}, bundle {}), heavy cost {}, split cost {}\n",
        report.per_pair.len(),
        cross,
        report.per_pair.len() - cross,
        format_rat(&report.heavy_cost),
        format_rat(&report.split_cost),
    ));
    out.push_str(&format!(
        "rows: {} odd cuts, {} subtree rows, {} restarts\n",
        report.cuts_added, report.bundles_added, report.restarts
    ));
    let t = |k: &str| report.timings_ms.get(k).copied().unwrap_or(0);
    out.push_str(&format!(
        "time: {} ms (lp {}, decompose {}, plan {}, round {})\n",
        t("total"),
        t("lp"),
        t("decompose"),
        t("plan"),
        t("round")
    ));
    out
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = load_instance(&a.input)?;
    let params = build_params(&inst, &a.params)?;
    let report = wtap_approx(&inst, &params)?;
    if let Some(path) = &a.solution_out {
        write_output(
            Some(path),
            &(write_solution_json(&inst, &report.output_links) + "\n"),
        )?;
    }
    match a.format {
        FormatArg::Json => write_output(None, &(write_report_json(&report) + "\n")),
        FormatArg::Text => write_output(None, &report_text(&report)),
    }
}

fn cmd_exact(a: ExactArgs) -> Result<()> {
    let inst = load_instance(&a.input)?;
    let outcome = match a.method {
        ExactMethod::Brute => brute_force_wtap(&inst).ok_or_else(|| {
            Error::Infeasible("some tree edge cannot be covered by any link".into())
        })?,
        ExactMethod::UpCross => solve_up_cross_exact(&inst, None, a.round_limit)?,
        ExactMethod::FewLeaf => {
            solve_few_leaf(&inst, a.max_leaves, a.round_limit, a.node_limit)?
        }
    };
    match a.format {
        FormatArg::Json => {
            write_output(None, &(write_solution_json(&inst, &outcome.links) + "\n"))
        }
        FormatArg::Text => write_output(
            None,
            &format!(
                "cost: {}\nlinks: {}\n",
                format_rat(&outcome.value),
                outcome
                    .links
                    .iter()
                    .map(|l| l.0.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        ),
    }
}

fn cmd_lp(a: LpArgs) -> Result<()> {
    let inst = load_instance(&a.input)?;
    let model = LpModel::covering_model(&inst);
    let (out, rows_added) = match a.kind {
        LpKind::Cut => (solve_lp(&model)?, 0),
        LpKind::OddCut => {
            let mut oracle = OddCutOracle { inst: &inst };
            let (out, added) = solve_with_separation(&model, &mut [&mut oracle], a.round_limit)?;
            (out, added.len())
        }
    };
    if out.status == LpStatus::Infeasible {
        return Err(Error::Infeasible("cut relaxation is infeasible".into()));
    }
    match a.format {
        FormatArg::Json => {
            let doc = serde_json::json!({
                "value": format_rat(&out.objective),
                "point": point_map(&out.solution),
                "rows_added": rows_added,
                "integral": out.solution.is_integral(),
            });
            write_output(None, &(pretty(&doc) + "\n"))
        }
        FormatArg::Text => {
            let mut text = format!(
                "value: {}\nrows added: {rows_added}\nintegral: {}\n",
                format_rat(&out.objective),
                out.solution.is_integral()
            );
            for (l, v) in out.solution.iter() {
                text.push_str(&format!("x[{}] = {}\n", l.0, format_rat(v)));
            }
            write_output(None, &text)
        }
    }
}

fn point_map(x: &FractionalSolution) -> serde_json::Value {
    serde_json::Value::Object(
        x.iter()
            .map(|(l, v)| (l.0.to_string(), serde_json::Value::String(format_rat(v))))
            .collect(),
    )
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values always serialize")
}

fn row_json(row: &LinearConstraint, x: &FractionalSolution) -> serde_json::Value {
    let kind = match row.tag {
        ConstraintTag::Covering(e) => format!("covering:{}", e.0),
        ConstraintTag::OddCut => "odd-cut".into(),
        ConstraintTag::Bundle => "bundle".into(),
        ConstraintTag::Branching => "branching".into(),
    };
    serde_json::json!({
        "found": true,
        "kind": kind,
        "coeffs": serde_json::Value::Object(
            row.coeffs
                .iter()
                .map(|(l, c)| (l.0.to_string(), serde_json::Value::String(format_rat(c))))
                .collect(),
        ),
        "rhs": format_rat(&row.rhs),
        "violation": format_rat(&row.violation(x)),
    })
}

fn cmd_separate(a: SeparateArgs) -> Result<()> {
    let inst = load_instance(&a.input)?;
    let x = parse_point_json(&read_input(&a.point)?)?;
    let (row, members): (Option<LinearConstraint>, Option<Vec<u32>>) = match a.oracle {
        OracleArg::GomoryHu => (separate_odd_cut(&inst, &x)?, None),
        OracleArg::Brute => match brute_force_separate(&inst, &x)? {
            Some((set, row, _violation)) => {
                let members = set.members().iter().map(|n| n.0).collect();
                (Some(row), Some(members))
            }
            None => (None, None),
        },
    };
    match (row, a.format) {
        (None, FormatArg::Json) => {
            write_output(None, &(pretty(&serde_json::json!({"found": false})) + "\n"))
        }
        (None, FormatArg::Text) => write_output(None, "no violated row\n"),
        (Some(row), FormatArg::Json) => {
            let mut doc = row_json(&row, &x);
            if let Some(m) = members {
                doc["members"] = serde_json::json!(m);
            }
            write_output(None, &(pretty(&doc) + "\n"))
        }
        (Some(row), FormatArg::Text) => {
            let mut text = match &row.tag {
                ConstraintTag::Covering(e) => format!("covering row for edge {}\n", e.0),
                _ => "odd-cut row\n".to_string(),
            };
            if let Some(m) = members {
                text.push_str(&format!(
                    "side: {}\n",
                    m.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
                ));
            }
            text.push_str(&format!(
                "rhs {}, violation {}\n",
                format_rat(&row.rhs),
                format_rat(&row.violation(&x))
            ));
            write_output(None, &text)
        }
    }
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let inst = load_instance(&a.input)?;
    let params = build_params(&inst, &a.params)?;
    let (norm, _) = inst.normalize_costs();
    let work = norm.shadow_complete()?;
    let model = LpModel::covering_model(&work);
    let mut oracle = OddCutOracle { inst: &work };
    let (out, _) =
        solve_with_separation(&model, &mut [&mut oracle], params.separation_round_limit)?;
    if out.status == LpStatus::Infeasible {
        return Err(Error::Infeasible("cut relaxation is infeasible".into()));
    }
    let dec = decompose(&work, &out.solution, &params)?;
    let checks = verify_decomposition(&work, &out.solution, &dec, &params)?;
    let all_ok = checks.iter().all(|c| c.passed);
    match a.format {
        FormatArg::Json => {
            let doc = serde_json::json!({
                "pieces": dec.pieces.len(),
                "heavy_edges": dec.heavy_edges.len(),
                "split_edges": dec.split_edges.len(),
                "heavy_cost": format_rat(&dec.heavy_cost),
                "split_cost": format_rat(&dec.split_cost),
                "checks": checks.iter().map(|c| serde_json::json!({
                    "name": c.name,
                    "passed": c.passed,
                    "details": c.details,
                })).collect::<Vec<_>>(),
            });
            write_output(None, &(pretty(&doc) + "\n"))?;
        }
        FormatArg::Text => {
            let mut text = format!(
                "pieces: {}, heavy edges: {}, split edges: {}\n",
                dec.pieces.len(),
                dec.heavy_edges.len(),
                dec.split_edges.len()
            );
            for c in &checks {
                text.push_str(&format!(
                    "{} {} — {}\n",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.details
                ));
            }
            write_output(None, &text)?;
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(Error::PropertyFailure(
            "decomposition audit found failing checks".into(),
        ))
    }
}

fn check(name: &str, passed: bool, details: String) -> PropertyCheck {
    PropertyCheck {
        name: name.to_string(),
        passed,
        details,
    }
}

/// Reports must survive the JSON schema losslessly: every rational field is
/// written as an exact fraction string, never rounded.
fn report_round_trip(report: &ApproxReport) -> PropertyCheck {
    let back = |v: &serde_json::Value, want: &Rat| {
        v.as_str().and_then(|s| parse_rat(s).ok()).as_ref() == Some(want)
    };
    let ok = match serde_json::from_str::<serde_json::Value>(&write_report_json(report)) {
        Err(_) => false,
        Ok(doc) => {
            let pairs = doc["per_pair"].as_array().cloned().unwrap_or_default();
            back(&doc["lp_value"], &report.lp_value)
                && back(&doc["output_cost"], &report.output_cost)
                && back(&doc["heavy_cost"], &report.heavy_cost)
                && back(&doc["split_cost"], &report.split_cost)
                && doc["output_links"].as_array().map(|a| a.len())
                    == Some(report.output_links.len())
                && pairs.len() == report.per_pair.len()
                && report
                    .per_pair
                    .iter()
                    .zip(&pairs)
                    .all(|(p, d)| back(&d["cost"], &p.cost) && back(&d["certificate"], &p.certificate))
        }
    };
    check(
        "report-round-trip",
        ok,
        "rational fields re-parse to the same exact values".into(),
    )
}

/// Cross-checks on a finished pipeline report: output feasibility through two
/// independent routes, the spent cost against the summed per-pair
/// certificates plus the heavy and split charges, the lossless JSON round
/// trip, and — when the link set is small enough to enumerate — the sandwich
/// lp <= opt <= cost <= 2 opt against the exhaustive cover scan.
fn audit_report(inst: &WtapInstance, report: &ApproxReport) -> Vec<PropertyCheck> {
    let mut checks = Vec::new();

    let covered = inst.is_feasible(&report.output_links);
    let connected = oracle::two_edge_connected_with(inst, &report.output_links);
    checks.push(check(
        "output-feasible",
        covered && connected,
        format!(
            "{} links; edge cover {covered}, bridge-free {connected}",
            report.output_links.len()
        ),
    ));

    let budget = report
        .per_pair
        .iter()
        .fold(rat(0), |acc, p| acc + &p.certificate)
        + &report.heavy_cost
        + &report.split_cost;
    checks.push(check(
        "certificate-budget",
        report.output_cost <= budget,
        format!(
            "cost {} vs certificates + heavy + split = {}",
            format_rat(&report.output_cost),
            format_rat(&budget)
        ),
    ));

    checks.push(report_round_trip(report));

    let real_links = inst.links().iter().filter(|l| !l.is_self_loop()).count();
    if real_links <= 22 && inst.edges().len() <= 64 {
        match oracle::exhaustive_min_cover(inst) {
            Some((opt, _)) => {
                checks.push(check(
                    "lp-at-most-opt",
                    report.lp_value <= opt,
                    format!(
                        "lp {} vs opt {}",
                        format_rat(&report.lp_value),
                        format_rat(&opt)
                    ),
                ));
                let doubled = rat(2) * &opt;
                checks.push(check(
                    "two-approximation",
                    opt <= report.output_cost && report.output_cost <= doubled,
                    format!(
                        "opt {} <= cost {} <= {}",
                        format_rat(&opt),
                        format_rat(&report.output_cost),
                        format_rat(&doubled)
                    ),
                ));
            }
            None => checks.push(check(
                "two-approximation",
                false,
                "the exhaustive scan found no cover, yet the pipeline returned one".into(),
            )),
        }
    }
    checks
}

/// The full per-instance property suite: pipeline report cross-checks, an
/// exact optimality certificate for the odd-cut relaxation, agreement of the
/// two separation oracles at the covering optimum and at the final point,
/// and the decomposition audit.
fn audit_instance(inst: &WtapInstance, params: &AlgorithmParams) -> Result<Vec<PropertyCheck>> {
    let report = wtap_approx(inst, params)?;
    let mut checks = audit_report(inst, &report);

    let (norm, _) = inst.normalize_costs();
    let work = norm.shadow_complete()?;
    let mut model = LpModel::covering_model(&work);
    let bare = solve_lp(&model)?;
    let mut cut_oracle = OddCutOracle { inst: &work };
    let (out, added) =
        solve_with_separation(&model, &mut [&mut cut_oracle], params.separation_round_limit)?;
    model.constraints.extend(added);
    if out.status == LpStatus::Optimal {
        checks.push(check(
            "lp-certificate",
            check_certificate(&model, &out).is_ok(),
            format!(
                "dual certificate at value {}",
                format_rat(&out.objective)
            ),
        ));
    }

    if work.node_count() <= 20 {
        let mut agree = true;
        let mut details = Vec::new();
        for (label, point) in [("covering optimum", &bare.solution), ("final point", &out.solution)]
        {
            let fast = separate_odd_cut(&work, point)?;
            let brute = brute_force_separate(&work, point)?;
            let same = match (&fast, &brute) {
                (None, None) => true,
                (Some(row), Some((_, _, violation))) => row.violation(point) == *violation,
                _ => false,
            };
            agree &= same;
            details.push(format!(
                "{label}: {}",
                if fast.is_some() { "violated row" } else { "none" }
            ));
        }
        checks.push(check(
            "separation-agreement",
            agree,
            details.join(", "),
        ));
    }

    let dec = decompose(&work, &out.solution, params)?;
    let audit = verify_decomposition(&work, &out.solution, &dec, params)?;
    let failing: Vec<&str> = audit
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    checks.push(check(
        "decomposition-audit",
        failing.is_empty(),
        if failing.is_empty() {
            format!("{} properties hold", audit.len())
        } else {
            format!("failing: {}", failing.join(", "))
        },
    ));

    Ok(checks)
}

fn verify_solution_document(inst: &WtapInstance, solution: &str) -> Result<()> {
    let doc = parse_solution_json(&read_input(solution)?)?;
    let links: BTreeSet<LinkId> = doc.link_set();
    for l in &links {
        if !inst.has_link(*l) {
            return Err(Error::InvalidArgument(format!(
                "solution references unknown link {}",
                l.0
            )));
        }
    }
    if !inst.is_feasible(&links) {
        return Err(Error::Infeasible(
            "solution leaves a tree edge uncovered".into(),
        ));
    }
    let cost = inst.link_set_cost(&links);
    let declared = parse_rat(&doc.cost)?;
    if cost != declared {
        return Err(Error::InvalidArgument(format!(
            "declared cost {} does not match the actual cost {}",
            format_rat(&declared),
            format_rat(&cost)
        )));
    }
    println!(
        "ok: {} links cover all {} edges at cost {}",
        links.len(),
        inst.edges().len(),
        format_rat(&cost)
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    if let Some(solution) = &a.solution {
        let input = a.input.as_deref().ok_or_else(|| {
            Error::InvalidArgument("checking a solution document needs an instance file".into())
        })?;
        return verify_solution_document(&load_instance(input)?, solution);
    }

    // Property-suite mode: one given instance, or a generated family.
    if let Some(input) = &a.input {
        let inst = load_instance(input)?;
        let params = build_params(&inst, &a.params)?;
        let checks = audit_instance(&inst, &params)?;
        for c in &checks {
            println!(
                "{} {} — {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.details
            );
        }
        return if checks.iter().all(|c| c.passed) {
            Ok(())
        } else {
            Err(Error::PropertyFailure(
                "property suite found failing checks".into(),
            ))
        };
    }

    let nodes = a.nodes.ok_or_else(|| {
        Error::InvalidArgument("family mode needs --nodes when no instance file is given".into())
    })?;
    let mut failed = 0u64;
    for i in 0..a.count {
        let cfg = generator_config(
            nodes,
            a.seed + i,
            a.shape,
            a.style,
            a.links,
            &a.costs,
            None,
            true,
        )?;
        let inst = generate(&cfg)?;
        let params = build_params(&inst, &a.params)?;
        let checks = audit_instance(&inst, &params)?;
        let failing: Vec<&str> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        if failing.is_empty() {
            println!("seed {:>4}: ok ({} checks)", a.seed + i, checks.len());
        } else {
            failed += 1;
            println!("seed {:>4}: FAIL ({})", a.seed + i, failing.join(", "));
            for c in checks.iter().filter(|c| !c.passed) {
                println!("           {} — {}", c.name, c.details);
            }
        }
    }
    if failed == 0 {
        println!("verified {}/{} instances", a.count, a.count);
        Ok(())
    } else {
        Err(Error::PropertyFailure(format!(
            "{failed}/{} instances failed the property suite",
            a.count
        )))
    }
}

struct BenchOutcome {
    line: String,
    ms: Option<u128>,
    checks_failed: bool,
}

/// One bench seed: generate, solve under the wall-clock budget, and render
/// the report line. Runs inside a worker; owns everything it touches.
fn bench_one(a: &BenchArgs, index: u64) -> BenchOutcome {
    let seed = a.seed + index;
    let fail = |line: String| BenchOutcome {
        line,
        ms: None,
        checks_failed: false,
    };
    let cfg = match generator_config(
        a.nodes, seed, a.shape, a.style, a.links, &a.costs, None, true,
    ) {
        Ok(cfg) => cfg,
        Err(e) => return fail(format!("seed {seed:>4}: error: {e}")),
    };
    let inst = match generate(&cfg) {
        Ok(inst) => inst,
        Err(e) => return fail(format!("seed {seed:>4}: error: {e}")),
    };
    let params = match build_params(&inst, &a.params) {
        Ok(p) => p,
        Err(e) => return fail(format!("seed {seed:>4}: error: {e}")),
    };
    let links = inst.links().len();
    let started = Instant::now();
    let (tx, rx) = mpsc::channel();
    let solver_inst = inst.clone();
    std::thread::spawn(move || {
        let _ = tx.send(wtap_approx(&solver_inst, &params));
    });
    match rx.recv_timeout(Duration::from_millis(a.timeout_ms)) {
        Ok(Ok(report)) => {
            let ms = started.elapsed().as_millis();
            let mut checks_failed = false;
            let suffix = if a.oracle {
                let checks = audit_report(&inst, &report);
                if checks.iter().all(|c| c.passed) {
                    format!(", {} checks ok", checks.len())
                } else {
                    checks_failed = true;
                    let failing: Vec<String> = checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| format!("{} ({})", c.name, c.details))
                        .collect();
                    format!(", FAIL {}", failing.join("; "))
                }
            } else {
                String::new()
            };
            BenchOutcome {
                line: format!(
                    "seed {seed:>4}: nodes {}, links {links}, lp {}, cost {}, ratio {}, {ms} ms{suffix}",
                    a.nodes,
                    format_rat(&report.lp_value),
                    format_rat(&report.output_cost),
                    report
                        .ratio_vs_lp
                        .as_ref()
                        .map(format_rat)
                        .unwrap_or_else(|| "-".into()),
                ),
                ms: Some(ms),
                checks_failed,
            }
        }
        Ok(Err(e)) => fail(format!("seed {seed:>4}: error: {e}")),
        Err(_) => fail(format!(
            "seed {seed:>4}: timeout after {} ms",
            a.timeout_ms
        )),
    }
}

/// Fan the seeds out to a worker pool; each worker owns the instances it
/// draws, and the report lines are merged back in seed order so the output
/// does not depend on scheduling.
fn cmd_bench(a: BenchArgs) -> Result<()> {
    let shared = std::sync::Arc::new(a);
    let next = std::sync::Arc::new(std::sync::atomic::AtomicU64::new(0));
    let workers = std::thread::available_parallelism()
        .map(|n| n.get() as u64)
        .unwrap_or(1)
        .min(shared.count)
        .max(1);
    let (tx, rx) = mpsc::channel::<(u64, BenchOutcome)>();
    for _ in 0..workers {
        let a = shared.clone();
        let next = next.clone();
        let tx = tx.clone();
        std::thread::spawn(move || loop {
            let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if i >= a.count {
                break;
            }
            if tx.send((i, bench_one(&a, i))).is_err() {
                break;
            }
        });
    }
    drop(tx);

    let mut pending: std::collections::BTreeMap<u64, BenchOutcome> = Default::default();
    let mut emitted = 0u64;
    let mut total_ms: u128 = 0;
    let mut solved = 0u64;
    let mut failed_checks = 0u64;
    while let Ok((i, outcome)) = rx.recv() {
        pending.insert(i, outcome);
        while let Some(out) = pending.remove(&emitted) {
            println!("{}", out.line);
            if let Some(ms) = out.ms {
                total_ms += ms;
                solved += 1;
            }
            if out.checks_failed {
                failed_checks += 1;
            }
            emitted += 1;
        }
    }
    if solved > 0 {
        println!(
            "solved {solved}/{} instances, mean {} ms",
            shared.count,
            total_ms / solved as u128
        );
    }
    if failed_checks > 0 {
        return Err(Error::PropertyFailure(format!(
            "{failed_checks} instances failed the oracle cross-checks"
        )));
    }
    Ok(())
}

//! `wdistill`: success probabilities, bounds, protocol trees, simulation,
//! fuzzing, figure data and the acceptance suite from the command line.
//!
//! Exit codes: 0 success, 1 failed check or engine error, 2 malformed input,
//! 3 unwritable output path.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use wdistill::bounds::{pairs_comparison, upper_bound, w_target_bound};
use wdistill::lpo::{build_protocol_tree, p_fl, LpoSolver, DEFAULT_EPSILON, DEFAULT_LOOP_CAP};
use wdistill::mc::{monotone_fuzz, simulate, FuzzConfig, MonotoneId, SimConfig};
use wdistill::verify::{run_verify, Faults, Filter, Status, VerifyOptions};
use wdistill::{graph_catalog, standard_w, ConfigGraph, GraphSpec, WState};

#[derive(Debug)]
enum CliError {
    Input(String),
    Write(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Write(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Write(m) => write!(f, "cannot write output: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<wdistill::Error> for CliError {
    fn from(e: wdistill::Error) -> Self {
        use wdistill::Error as E;
        match e {
            E::InvalidState(_)
            | E::InvalidGraph(_)
            | E::InvalidMeasurement(_)
            | E::InvalidParty(_)
            | E::InvalidInput(_)
            | E::UnknownPreset(_) => CliError::Input(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "wdistill",
    version,
    about = "EPR distillation from W-class states on configuration graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success probability, baseline, upper bound and the optimization chain.
    Prob(ProbArgs),
    /// Emit the truncated protocol tree.
    Tree(TreeArgs),
    /// Monte Carlo run of the protocol tree.
    Simulate(SimulateArgs),
    /// Weak-measurement monotonicity fuzz.
    Fuzz(FuzzArgs),
    /// Figure data as CSV or JSON.
    Figure(FigureArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Csv,
}

#[derive(Args, Clone)]
struct Input {
    /// State: inline JSON (`{"components": [...], "labels": [...]}` or a bare
    /// component array), a JSON file, or `W` / `W_N` for the standard W
    /// state. Defaults to the standard W state on the graph's parties.
    #[arg(long)]
    state: Option<String>,
    /// Graph: inline JSON (`{"edges": [["A","B"], ...]}` or
    /// `{"preset": "pairs", "n": 6}`), a JSON file, or a preset name.
    #[arg(long, conflicts_with = "preset")]
    graph: Option<String>,
    /// Preset name: wedge, triangle, I, I', I'', II, III-a, III-b, III-c, IV,
    /// V, VI, or `pairs:N` / `complete:N`.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct ProbArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_LOOP_CAP)]
    loop_cap: usize,
    /// json or dot (default: from the --out extension, else json).
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_LOOP_CAP)]
    loop_cap: usize,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    /// tau, gamma, kt_i, kt_0 or all.
    #[arg(long, default_value = "all")]
    monotone: String,
    /// Number of random states.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Measurements per state.
    #[arg(long, default_value_t = 10)]
    measurements: usize,
    /// Half-width of the measurement parameter box around 1/2.
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest tolerated average increase.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FigureName {
    /// Rows (N, LOCC value on N pairs, separable value).
    SepVsLocc,
    /// Rows (t, bound, N·t) for standard W targets.
    WTargetBound,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(value_enum)]
    name: FigureName,
    /// Smallest number of pairs (sep-vs-locc).
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    /// Largest number of pairs (sep-vs-locc).
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    /// Number of parties (w-target-bound).
    #[arg(long, default_value_t = 4)]
    parties: usize,
    /// Grid points on (0, 1/N] (w-target-bound).
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FilterArg {
    All,
    PaperValues,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    TauSignFlip,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = FilterArg::All)]
    filter: FilterArg,
    /// Inject a deliberate defect (mutation smoke test).
    #[arg(long, value_enum)]
    inject_fault: Option<FaultArg>,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    seed: u64,
    /// Monte Carlo trials per configuration.
    #[arg(long, default_value_t = VerifyOptions::default().trials)]
    trials: u64,
    /// Treat documented known failures as failures.
    #[arg(long)]
    strict: bool,
    /// With json, the summary goes to stdout and the per-criterion lines to
    /// stderr.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write the JSON summary here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prob(a) => cmd_prob(a),
        Command::Tree(a) => cmd_tree(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// 12 significant digits.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        sci
    }
}

/// Inline JSON or the contents of a file.
fn json_arg(arg: &str, what: &str) -> CliResult<Value> {
    let text = if Path::new(arg).is_file() {
        fs::read_to_string(arg)
            .map_err(|e| CliError::Input(format!("reading {what} file {arg}: {e}")))?
    } else {
        arg.to_string()
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed {what} JSON: {e}")))
}

fn preset_graph(name: &str) -> CliResult<ConfigGraph> {
    let graph = match name.split_once(':') {
        Some((base, n)) => {
            let n: usize = n
                .parse()
                .map_err(|_| CliError::Input(format!("bad size in preset `{name}`")))?;
            graph_catalog(base, Some(n))?
        }
        None => graph_catalog(name, None)?,
    };
    Ok(graph)
}

fn load_graph(input: &Input) -> CliResult<ConfigGraph> {
    match (&input.graph, &input.preset) {
        (Some(_), Some(_)) => Err(CliError::Input("give --graph or --preset, not both".into())),
        (None, None) => Err(CliError::Input(
            "a graph is required (--graph or --preset)".into(),
        )),
        (None, Some(p)) => preset_graph(p),
        (Some(g), None) => {
            let looks_json = g.trim_start().starts_with(['{', '[']) || Path::new(g).is_file();
            if !looks_json {
                return preset_graph(g);
            }
            let spec: GraphSpec = serde_json::from_value(json_arg(g, "graph")?)
                .map_err(|e| CliError::Input(format!("malformed graph JSON: {e}")))?;
            Ok(spec.build()?)
        }
    }
}

/// States without labels take the graph's labels in order.
fn load_state(input: &Input, graph: &ConfigGraph) -> CliResult<WState> {
    let Some(arg) = &input.state else {
        return Ok(standard_w(graph.labels().to_vec())?);
    };
    let trimmed = arg.trim();
    if let Some(rest) = trimmed.strip_prefix('W') {
        let rest = rest.trim_start_matches('_');
        if rest.is_empty() || rest.parse::<usize>().is_ok() {
            if let Ok(n) = rest.parse::<usize>() {
                if n != graph.len() {
                    return Err(CliError::Input(format!(
                        "state W_{n} does not match the {}-party graph",
                        graph.len()
                    )));
                }
            }
            return Ok(standard_w(graph.labels().to_vec())?);
        }
    }
    let value = json_arg(arg, "state")?;
    let (components, labels) = match value {
        Value::Array(_) => (value, None),
        Value::Object(ref m) => (
            m.get("components").cloned().ok_or_else(|| {
                CliError::Input("malformed state JSON: missing `components`".into())
            })?,
            m.get("labels").cloned(),
        ),
        _ => {
            return Err(CliError::Input(
                "malformed state JSON: expected an object or array".into(),
            ))
        }
    };
    let components: Vec<f64> = serde_json::from_value(components)
        .map_err(|e| CliError::Input(format!("malformed state JSON: {e}")))?;
    let labels: Vec<String> = match labels {
        Some(l) => serde_json::from_value(l)
            .map_err(|e| CliError::Input(format!("malformed state JSON: {e}")))?,
        None => graph.labels().to_vec(),
    };
    let state = WState::new(components, labels)?;
    aligned(state, graph)
}

/// Reorders a state to the graph's node order.
fn aligned(state: WState, graph: &ConfigGraph) -> CliResult<WState> {
    if state.labels() == graph.labels() {
        return Ok(state);
    }
    if state.len() != graph.len() {
        return Err(CliError::Input(format!(
            "state has {} parties, graph has {}",
            state.len(),
            graph.len()
        )));
    }
    let comps = graph
        .labels()
        .iter()
        .map(|l| state.index_of(l).map(|i| state.component(i)))
        .collect::<wdistill::Result<Vec<f64>>>()?;
    Ok(WState::new(comps, graph.labels().to_vec())?)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Write(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Write(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    for r in rows {
        w.write_record(r)
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn reject_format(format: Option<Format>, allowed: &[Format], cmd: &str) -> CliResult<()> {
    match format {
        Some(f) if !allowed.contains(&f) => Err(CliError::Input(format!(
            "{cmd} does not support --format {f:?}"
        ))),
        _ => Ok(()),
    }
}

fn cmd_prob(a: ProbArgs) -> CliResult<()> {
    reject_format(a.format, &[Format::Json], "prob")?;
    let graph = load_graph(&a.input)?;
    let state = load_state(&a.input, &graph)?;
    let mut solver = LpoSolver::new(graph.clone())?;
    let lpo = solver.p_lpo(&state)?;
    let fl = p_fl(&graph)?;
    let bound = upper_bound(&state, &graph)?;
    let chain = solver.reports();
    let text = if a.format == Some(Format::Json) {
        to_json(&json!({
            "state": state,
            "graph": graph,
            "p_lpo": lpo,
            "p_fl": fl,
            "bound": bound,
            "tightness_gap": bound.as_ref().map(|b| b.value - lpo),
            "reports": chain,
        }))
    } else {
        let mut s = String::new();
        s.push_str(&format!("P_LPO  {}\n", num(lpo)));
        s.push_str(&format!("P_FL   {}\n", num(fl)));
        match &bound {
            Some(b) => {
                let mut tags = Vec::new();
                if b.cited {
                    tags.push("cited reference value");
                }
                if !b.applicable {
                    tags.push("fallback");
                }
                let tags = if tags.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", tags.join(", "))
                };
                s.push_str(&format!(
                    "bound  {} {}{}\n",
                    b.bound_name,
                    num(b.value),
                    tags
                ));
                s.push_str(&format!("gap    {}\n", num(b.value - lpo)));
            }
            None => s.push_str("bound  none applicable\n"),
        }
        s.push_str("chain\n");
        for r in &chain {
            let least = r.least_party.as_deref().unwrap_or("-");
            s.push_str(&format!(
                "  {:<12} value {}  argmax_alpha {}  least {}  rule {:?}{}\n",
                r.subgraph_key,
                num(r.value),
                num(r.argmax_alpha),
                least,
                r.rule,
                if r.attained_at_limit { "  (limit)" } else { "" }
            ));
        }
        s
    };
    emit(a.out.as_deref(), &text)
}

fn tree_format(format: Option<Format>, out: Option<&Path>) -> CliResult<Format> {
    reject_format(format, &[Format::Json, Format::Dot], "tree")?;
    Ok(format.unwrap_or_else(
        || match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("dot") | Some("gv") => Format::Dot,
            _ => Format::Json,
        },
    ))
}

fn cmd_tree(a: TreeArgs) -> CliResult<()> {
    let format = tree_format(a.format, a.out.as_deref())?;
    let graph = load_graph(&a.input)?;
    let state = load_state(&a.input, &graph)?;
    let tree = build_protocol_tree(&state, &graph, a.epsilon, a.loop_cap)?;
    let mut text = match format {
        Format::Dot => tree.to_dot(),
        _ => tree.to_json(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        eprintln!(
            "success {}  truncated {}  nodes {}",
            num(tree.success_probability()),
            num(tree.truncated_mass()),
            tree.node_count()
        );
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    reject_format(a.format, &[Format::Json, Format::Csv], "simulate")?;
    let graph = load_graph(&a.input)?;
    let state = load_state(&a.input, &graph)?;
    let tree = build_protocol_tree(&state, &graph, a.epsilon, a.loop_cap)?;
    let r = simulate(&tree, &SimConfig::new(a.trials, a.seed))?;
    let text = if a.format == Some(Format::Csv) {
        let rows: Vec<Vec<String>> = r
            .terminals
            .iter()
            .chain(std::iter::once(&r.success))
            .map(|t| {
                vec![
                    t.terminal.clone(),
                    t.count.to_string(),
                    num(t.empirical),
                    num(t.analytic),
                    num(t.std_error),
                    t.z_score.map_or_else(String::new, num),
                ]
            })
            .collect();
        csv_text(
            &[
                "terminal",
                "count",
                "empirical",
                "analytic",
                "std_error",
                "z_score",
            ],
            &rows,
        )?
    } else {
        let mut s = r.to_json();
        s.push('\n');
        s
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_fuzz(a: FuzzArgs) -> CliResult<()> {
    reject_format(a.format, &[Format::Json, Format::Csv], "fuzz")?;
    let ids: Vec<MonotoneId> = if a.monotone == "all" {
        MonotoneId::ALL.to_vec()
    } else {
        vec![a.monotone.parse()?]
    };
    let config = FuzzConfig {
        n_states: a.trials,
        n_measurements: a.measurements,
        weak_radius: a.radius,
        seed: a.seed,
        ..FuzzConfig::default()
    };
    let reports = ids
        .iter()
        .map(|&id| monotone_fuzz(id, &config))
        .collect::<wdistill::Result<Vec<_>>>()?;
    let text = if a.format == Some(Format::Csv) {
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.function.clone(),
                    r.samples.to_string(),
                    num(r.max_violation),
                    r.passes(a.tolerance).to_string(),
                ]
            })
            .collect();
        csv_text(&["function", "samples", "max_violation", "passes"], &rows)?
    } else {
        to_json(&reports)
    };
    emit(a.out.as_deref(), &text)?;
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passes(a.tolerance))
        .map(|r| r.function.as_str())
        .collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "monotonicity violated: {}",
            failing.join(", ")
        )))
    }
}

fn cmd_figure(a: FigureArgs) -> CliResult<()> {
    reject_format(a.format, &[Format::Csv, Format::Json], "figure")?;
    let (header, rows): (Vec<&str>, Vec<Vec<f64>>) = match a.name {
        FigureName::SepVsLocc => {
            if a.n_min < 2 || a.n_max < a.n_min {
                return Err(CliError::Input("need 2 <= n-min <= n-max".into()));
            }
            let rows = (a.n_min..=a.n_max)
                .map(|n| pairs_comparison(n).map(|(locc, sep)| vec![n as f64, locc, sep]))
                .collect::<wdistill::Result<_>>()?;
            (vec!["N", "locc", "sep"], rows)
        }
        FigureName::WTargetBound => {
            if a.parties < 2 || a.points == 0 {
                return Err(CliError::Input("need parties >= 2 and points >= 1".into()));
            }
            let n = a.parties as f64;
            let rows = (1..=a.points)
                .map(|i| {
                    let t = i as f64 / (a.points as f64 * n);
                    w_target_bound(a.parties, t).map(|b| vec![t, b, n * t])
                })
                .collect::<wdistill::Result<_>>()?;
            (vec!["t", "bound", "n_t"], rows)
        }
    };
    let text = if a.format == Some(Format::Json) {
        let objs: Vec<Value> = rows
            .iter()
            .map(|r| {
                Value::Object(
                    header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| (h.to_string(), json!(v)))
                        .collect(),
                )
            })
            .collect();
        to_json(&objs)
    } else {
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if i == 0 && a.name == FigureName::SepVsLocc {
                            (v as usize).to_string()
                        } else {
                            num(v)
                        }
                    })
                    .collect()
            })
            .collect();
        csv_text(&header, &cells)?
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_verify(a: VerifyArgs) -> CliResult<()> {
    reject_format(a.format, &[Format::Json], "verify")?;
    let opts = VerifyOptions {
        filter: match a.filter {
            FilterArg::All => Filter::All,
            FilterArg::PaperValues => Filter::PaperValues,
        },
        faults: Faults {
            tau_sign_flip: a.inject_fault == Some(FaultArg::TauSignFlip),
        },
        seed: a.seed,
        trials: a.trials,
        ..VerifyOptions::default()
    };
    let summary = run_verify(&opts)?;
    let json_out = a.format == Some(Format::Json);
    for c in &summary.criteria {
        if json_out {
            eprintln!("{}", c.line());
        } else {
            println!("{}", c.line());
        }
    }
    let doc = to_json(&summary);
    if let Some(p) = &a.out {
        emit(Some(p), &doc)?;
    }
    if json_out {
        emit(None, &doc)?;
    }
    let mut failing = summary.failures.clone();
    if a.strict {
        failing.extend(
            summary
                .criteria
                .iter()
                .filter(|c| c.status == Status::KnownFailure)
                .map(|c| format!("{} {} (known)", c.id, c.name)),
        );
    }
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "failing criteria: {}",
            failing.join("; ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(2.0 / 3.0), "0.666666666667");
        assert_eq!(num(1.0), "1.00000000000");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0 - 1e-15), "1.00000000000");
        assert_eq!(num(1.5e-7), "1.50000000000e-7");
    }

    #[test]
    fn state_without_labels_takes_graph_labels() {
        let input = Input {
            state: Some("[0.5, 0.3, 0.2]".into()),
            graph: None,
            preset: Some("triangle".into()),
        };
        let g = load_graph(&input).unwrap();
        let s = load_state(&input, &g).unwrap();
        assert_eq!(s.labels(), g.labels());
        let bad = Input {
            state: Some("{not json".into()),
            ..input
        };
        assert_eq!(load_state(&bad, &g).unwrap_err().code(), 2);
    }

    #[test]
    fn preset_sizes() {
        assert_eq!(preset_graph("pairs:6").unwrap().len(), 6);
        assert!(preset_graph("pairs:x").is_err());
    }
}

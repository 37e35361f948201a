//! Command-line front end for `corrlab`. [`run`] parses arguments, executes
//! one subcommand and returns the exit code with the rendered report, so the
//! binary and the tests share one code path.

use std::fs;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use corrlab::io::{
    behavior_to_json, certificate_to_json, model_to_json, read_behavior, read_collection, read_correlations,
    read_setup, read_state, setup_to_json, state_to_json, validate_document, Any, JsonScalar,
    NumberMode, ReadOptions,
};
use corrlab::lhv::{
    lhv_check_from_correlations, lhv_feasibility, strategy_count, CorrelationVerdict, Direction, LhvVerdict,
    DEFAULT_STRATEGY_CAP,
};
use corrlab::locality::{check_epr_local, check_nonsignaling, make_pr_box, EprReport, LocalityReport, Witness};
use corrlab::quantum::{
    born_behavior, isotropic_state, noisy_state, ppt_check, reduced_norms, source_operator,
    source_positivity_bound, verify_source_operator, visibility_threshold, MeasurementSetup, Povm,
    DEFAULT_DIMENSION_CAP,
};
use corrlab::scalar::{parse_rational, DEFAULT_EPSILON};
use corrlab::scenario::{Behavior, ValidationIssue, ValidationReport};
use corrlab::{Error, Rational, Scalar};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "corrlab", version, about = "Local hidden variable analysis of correlation experiments")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Config {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Float tolerance.
    #[arg(long, global = true, env = "CORRLAB_EPSILON", default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Cap on enumerated deterministic strategies.
    #[arg(long, global = true, default_value_t = DEFAULT_STRATEGY_CAP)]
    cap: u128,
    /// Convert inputs to this arithmetic mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DemoKind {
    PrBox,
    ChshSinglet,
    ChshSetup,
    Isotropic,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check shape, nonnegativity and normalization of a behavior.
    Validate { input: Option<PathBuf> },
    /// Check that every marginal is independent of the other parties' settings.
    Nonsignaling { input: Option<PathBuf> },
    /// Check a collection of experiments for context-independent marginals.
    EprLocal { input: Option<PathBuf> },
    /// Decide LHV feasibility; emits a model or a Bell certificate.
    LhvCheck { input: Option<PathBuf> },
    /// Rebuild a dichotomic behavior from correlators and decide feasibility.
    LhvFromCorrelations { input: Option<PathBuf> },
    /// Born-rule behavior of a state under a measurement setup.
    QuantumBehavior { state: PathBuf, setup: PathBuf },
    /// Visibility below which every local measurement family has an LHV model.
    Threshold {
        input: Option<PathBuf>,
        #[arg(long)]
        s1: usize,
        #[arg(long)]
        s2: usize,
    },
    /// Build and verify the source operator of a noisy bipartite state.
    SourceOp {
        input: Option<PathBuf>,
        /// Visibility; defaults to the positivity bound.
        #[arg(long)]
        gamma: Option<f64>,
        /// Copies of the split side.
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long, value_enum, default_value_t = DirectionArg::Right)]
        direction: DirectionArg,
        /// Include the operator itself in the report.
        #[arg(long)]
        emit_matrix: bool,
    },
    /// Print a ready-made input document.
    Demo {
        #[arg(value_enum)]
        kind: DemoKind,
        /// Local dimension for `isotropic`.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Visibility (a rational such as `1/2` for `pr-box`).
        #[arg(long, default_value = "1")]
        gamma: String,
    },
}

/// Exit code plus what the process writes to stdout and stderr.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs one command. `args` includes the program name.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let format = cli.config.format;
    let result = check_config(&cli.config).and_then(|_| execute(&cli, stdin));
    match result {
        Ok(Report::Document(v)) => Outcome {
            code: EXIT_PASS,
            stdout: format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")),
            stderr: String::new(),
        },
        Ok(Report::Verdict { code, body, text }) => Outcome {
            code,
            stdout: match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&body).expect("serializable")),
                Format::Text => text.unwrap_or_else(|| render_text(&body)),
            },
            stderr: String::new(),
        },
        Err(e) => {
            let kind = match &e {
                Error::Json(_) => "parse",
                Error::Resource { .. } => "resource",
                Error::Dimension(_) => "dimension",
                Error::NoConvergence(_) => "numerical",
                Error::Input(_) => "input",
            };
            let body = json!({ "verdict": "error", "kind": kind, "error": e.to_string() });
            Outcome {
                code: EXIT_ERROR,
                stdout: match format {
                    Format::Json => format!("{}\n", serde_json::to_string_pretty(&body).expect("serializable")),
                    Format::Text => render_text(&body),
                },
                stderr: format!("corrlab: {}\n", e),
            }
        }
    }
}

enum Report {
    /// An input document, always printed as JSON so it can be piped.
    Document(Value),
    Verdict { code: i32, body: Value, text: Option<String> },
}

fn verdict(code: i32, body: Value) -> Report {
    Report::Verdict { code, body, text: None }
}

fn check_config(c: &Config) -> corrlab::Result<()> {
    if !(c.epsilon > 0.0 && c.epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be positive, got {}", c.epsilon)));
    }
    if c.cap == 0 {
        return Err(Error::Input("cap must be at least 1".into()));
    }
    Ok(())
}

fn read_options(c: &Config) -> ReadOptions {
    ReadOptions {
        eps: c.epsilon,
        mode: c.mode.map(|m| match m {
            ModeArg::Exact => NumberMode::Exact,
            ModeArg::Float => NumberMode::Float,
        }),
    }
}

fn read_json(path: Option<&PathBuf>, stdin: &mut dyn Read) -> corrlab::Result<Value> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)
            .map_err(|e| Error::Input(format!("cannot read {}: {}", p.display(), e)))?,
        _ => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| Error::Input(format!("cannot read standard input: {}", e)))?;
            s
        }
    };
    Ok(serde_json::from_str(&text)?)
}

/// Mode and tolerance fields shared by every report.
fn stamp(body: &mut Value, mode: NumberMode, eps: f64) {
    body["mode"] = json!(mode.name());
    body["tolerance"] = json!(match mode {
        NumberMode::Exact => 0.0,
        NumberMode::Float => eps,
    });
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn witness_json(w: &Option<Witness>) -> Value {
    match w {
        None => Value::Null,
        Some(w) => {
            let mut v = json!({
                "sites": one_based(&w.sites),
                "first_settings": one_based(&w.first),
                "second_settings": one_based(&w.second),
            });
            if let Some((a, b)) = &w.contexts {
                v["contexts"] = json!([a, b]);
            }
            v
        }
    }
}

fn locality_json(r: &LocalityReport) -> Value {
    json!({
        "verdict": if r.passes { "pass" } else { "fail" },
        "violation": r.violation,
        "witness": witness_json(&r.witness),
    })
}

fn issue_json(issue: &ValidationIssue) -> Value {
    let kind = serde_json::to_value(issue).expect("serializable")["kind"].clone();
    json!({ "kind": kind, "message": issue.to_string() })
}

fn issue_size(issue: &ValidationIssue) -> f64 {
    match issue {
        ValidationIssue::Negative { value, .. } => value.abs(),
        ValidationIssue::Normalization { sum, .. } => (sum - 1.0).abs(),
        _ => 0.0,
    }
}

fn validation_json(report: &ValidationReport) -> Value {
    json!({
        "verdict": if report.is_valid() { "valid" } else { "invalid" },
        "violation": report.issues.iter().map(issue_size).fold(0.0, f64::max),
        "witness": report.issues.first().map(issue_json),
        "issues": report.issues.iter().map(issue_json).collect::<Vec<_>>(),
    })
}

fn pass_code(ok: bool) -> i32 {
    if ok {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn lhv_json<T: JsonScalar>(v: &LhvVerdict<T>) -> (i32, Value) {
    match v {
        LhvVerdict::Feasible(m) => (
            EXIT_PASS,
            json!({ "verdict": "feasible", "violation": 0.0, "witness": null, "model": model_to_json(m) }),
        ),
        LhvVerdict::Infeasible(c) => (
            EXIT_FAIL,
            json!({ "verdict": "infeasible", "violation": c.margin.to_f64(), "witness": certificate_to_json(c) }),
        ),
        LhvVerdict::Marginal { objective } => (
            EXIT_FAIL,
            json!({ "verdict": "marginal", "violation": objective, "witness": null }),
        ),
    }
}

fn lhv_check<T: JsonScalar>(b: &Behavior<T>, cap: u128) -> corrlab::Result<(i32, Value)> {
    let strategies = strategy_count(b.scenario(), cap)?;
    let (code, mut body) = lhv_json(&lhv_feasibility(b, cap)?);
    body["strategies"] = json!(strategies);
    Ok((code, body))
}

fn correlations_check<T: JsonScalar>(
    c: &corrlab::scenario::CorrelationSet<T>,
    cap: u128,
) -> corrlab::Result<(i32, Value)> {
    let strategies = strategy_count(c.scenario(), cap)?;
    let (code, mut body) = match lhv_check_from_correlations(c, cap)? {
        CorrelationVerdict::InvalidCorrelations(report) => {
            let mut body = validation_json(&report);
            body["verdict"] = json!("invalid_correlations");
            (EXIT_FAIL, body)
        }
        CorrelationVerdict::Checked(v) => lhv_json(&v),
    };
    body["strategies"] = json!(strategies);
    Ok((code, body))
}

fn epr_json(r: &EprReport, contexts: &[String]) -> Value {
    let per: Vec<Value> = r
        .per_context
        .iter()
        .zip(contexts)
        .map(|(c, label)| {
            let mut v = locality_json(c);
            v["context"] = json!(label);
            v
        })
        .collect();
    json!({
        "verdict": if r.passes { "pass" } else { "fail" },
        "violation": r.violation,
        "witness": witness_json(&r.witness),
        "per_context": per,
    })
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Right => Direction::Right,
        DirectionArg::Left => Direction::Left,
    }
}

fn parse_gamma(s: &str) -> corrlab::Result<Rational> {
    let g = parse_rational(s).ok_or_else(|| Error::Input(format!("cannot parse gamma {:?}", s)))?;
    if g < Rational::from_ratio(0, 1) || g > Rational::from_ratio(1, 1) {
        return Err(Error::Input(format!("gamma {} outside [0, 1]", s)));
    }
    Ok(g)
}

/// Singlet with the four standard CHSH measurement directions.
pub fn chsh_setup() -> MeasurementSetup {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let spin = |d: [f64; 3]| Povm::spin(d).expect("unit vector");
    MeasurementSetup::new(vec![
        vec![spin([0.0, 0.0, 1.0]), spin([1.0, 0.0, 0.0])],
        vec![spin([s, 0.0, s]), spin([-s, 0.0, s])],
    ])
    .expect("qubit setup")
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> corrlab::Result<Report> {
    let c = &cli.config;
    let opts = read_options(c);
    Ok(match &cli.command {
        Command::Validate { input } => {
            let v = read_json(input.as_ref(), stdin)?;
            let (b, report) = validate_document(&v, &opts)?;
            let mut body = validation_json(&report);
            let mode = b.as_ref().map(Any::mode).unwrap_or(NumberMode::Exact);
            stamp(&mut body, mode, c.epsilon);
            verdict(pass_code(report.is_valid()), body)
        }
        Command::Nonsignaling { input } => {
            let b = read_behavior(&read_json(input.as_ref(), stdin)?, &opts)?;
            let report = match &b {
                Any::Exact(b) => check_nonsignaling(b),
                Any::Float(b) => check_nonsignaling(b),
            };
            let mut body = locality_json(&report);
            stamp(&mut body, b.mode(), c.epsilon);
            verdict(pass_code(report.passes), body)
        }
        Command::EprLocal { input } => {
            let col = read_collection(&read_json(input.as_ref(), stdin)?, &opts)?;
            let mut body = match &col {
                Any::Exact(x) => epr_json(&check_epr_local(x), x.contexts()),
                Any::Float(x) => epr_json(&check_epr_local(x), x.contexts()),
            };
            let passes = body["verdict"] == "pass";
            stamp(&mut body, col.mode(), c.epsilon);
            verdict(pass_code(passes), body)
        }
        Command::LhvCheck { input } => {
            let b = read_behavior(&read_json(input.as_ref(), stdin)?, &opts)?;
            let (code, mut body) = match &b {
                Any::Exact(b) => lhv_check(b, c.cap)?,
                Any::Float(b) => lhv_check(b, c.cap)?,
            };
            stamp(&mut body, b.mode(), c.epsilon);
            verdict(code, body)
        }
        Command::LhvFromCorrelations { input } => {
            let corr = read_correlations(&read_json(input.as_ref(), stdin)?, &opts)?;
            let (code, mut body) = match &corr {
                Any::Exact(x) => correlations_check(x, c.cap)?,
                Any::Float(x) => correlations_check(x, c.cap)?,
            };
            stamp(&mut body, corr.mode(), c.epsilon);
            verdict(code, body)
        }
        Command::QuantumBehavior { state, setup } => {
            if state.as_os_str() == "-" && setup.as_os_str() == "-" {
                return Err(Error::Input("only one of state and setup can come from standard input".into()));
            }
            let rho = read_state(&read_json(Some(state), stdin)?, c.epsilon)?;
            let setup = read_setup(&read_json(Some(setup), stdin)?, c.epsilon)?;
            let b = born_behavior(&rho, &setup, c.epsilon)?;
            match cli.config.format {
                Format::Json => Report::Document(behavior_to_json(&b, None)),
                Format::Text => Report::Verdict {
                    code: EXIT_PASS,
                    body: Value::Null,
                    text: Some(format!("{}\n", b)),
                },
            }
        }
        Command::Threshold { input, s1, s2 } => {
            let rho = read_state(&read_json(input.as_ref(), stdin)?, c.epsilon)?;
            let t = visibility_threshold(&rho, *s1, *s2)?;
            let (n1, n2) = reduced_norms(&rho)?;
            let ppt = ppt_check(&rho)?;
            let mut body = json!({
                "verdict": "computed",
                "threshold": t,
                "settings": [s1, s2],
                "reduced_norms": [n1, n2],
                "partial_transpose_min_eigenvalue": ppt.min_eigenvalue,
                "entangled": ppt.entangled,
            });
            stamp(&mut body, NumberMode::Float, c.epsilon);
            Report::Verdict {
                code: EXIT_PASS,
                text: match cli.config.format {
                    Format::Text => Some(format!("{}\n{}", t, render_text(&body))),
                    Format::Json => None,
                },
                body,
            }
        }
        Command::SourceOp { input, gamma, copies, direction: dir, emit_matrix } => {
            let rho = read_state(&read_json(input.as_ref(), stdin)?, c.epsilon)?;
            let dir = direction(*dir);
            let bound = source_positivity_bound(&rho, *copies, *copies, dir)?;
            let g = gamma.unwrap_or(bound);
            let t = source_operator(&rho, g, dir, *copies, DEFAULT_DIMENSION_CAP)?;
            let report = verify_source_operator(&t, &noisy_state(&rho, g)?)?;
            let worst = report
                .checks
                .iter()
                .filter(|k| !k.passed)
                .map(|k| k.name.clone())
                .next();
            let mut body = json!({
                "verdict": if report.passes { "pass" } else { "fail" },
                "violation": report.checks.iter().map(|k| (k.residual - k.tolerance).max(0.0)).fold(0.0, f64::max),
                "witness": worst,
                "gamma": g,
                "positivity_bound": bound,
                "direction": match dir { Direction::Right => "right", Direction::Left => "left" },
                "copies": copies,
                "dims": t.dims(),
                "min_eigenvalue": report.min_eigenvalue,
                "checks": serde_json::to_value(&report.checks).expect("serializable"),
            });
            if *emit_matrix {
                body["operator"] = json!({
                    "dims": t.dims(),
                    "matrix": corrlab::io::matrix_to_json(&t.matrix),
                });
            }
            stamp(&mut body, NumberMode::Float, c.epsilon);
            verdict(pass_code(report.passes), body)
        }
        Command::Demo { kind, d, gamma } => Report::Document(demo(*kind, *d, gamma)?),
    })
}

fn demo(kind: DemoKind, d: usize, gamma: &str) -> corrlab::Result<Value> {
    let g = parse_gamma(gamma)?;
    Ok(match kind {
        DemoKind::PrBox => {
            let pr = make_pr_box();
            let b = if g == Rational::from_ratio(1, 1) {
                pr
            } else {
                let uniform = Behavior::from_fn(pr.scenario().clone(), 0.0, |_, _| Rational::from_ratio(1, 4))?;
                pr.mix(&g, &uniform)?
            };
            behavior_to_json(&b, None)
        }
        DemoKind::ChshSinglet => {
            let rho = noisy_state(&singlet()?, g.to_f64())?;
            let b = born_behavior(&rho, &chsh_setup(), DEFAULT_EPSILON)?;
            behavior_to_json(&b, None)
        }
        DemoKind::ChshSetup => setup_to_json(&chsh_setup()),
        DemoKind::Isotropic => state_to_json(&isotropic_state(d, g.to_f64())?),
    })
}

fn singlet() -> corrlab::Result<corrlab::quantum::DensityOperator> {
    use corrlab::quantum::{DensityOperator, C64};
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    DensityOperator::pure(vec![2, 2], &[z, C64::new(s, 0.0), C64::new(-s, 0.0), z])
}

/// Indented `key: value` rendering of a report.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    render_into(v, 0, &mut out);
    out
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar_text).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => render_map(map, indent, out),
        Value::Array(items) => {
            for item in items {
                match scalar_text(item) {
                    Some(s) => out.push_str(&format!("{}- {}\n", pad, s)),
                    None => {
                        out.push_str(&format!("{}-\n", pad));
                        render_into(item, indent + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{}{}\n", pad, scalar_text(other).unwrap_or_default())),
    }
}

fn render_map(map: &Map<String, Value>, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    // Verdict first, the rest alphabetically.
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort_by_key(|k| (k.as_str() != "verdict", k.as_str()));
    for k in keys {
        let v = &map[k];
        match scalar_text(v) {
            Some(s) => out.push_str(&format!("{}{}: {}\n", pad, k, s)),
            None => {
                out.push_str(&format!("{}{}:\n", pad, k));
                render_into(v, indent + 1, out);
            }
        }
    }
}

//! Command-line driver.

use std::f64::consts::LN_2;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use transduce_core::capacity::{self, CapacityResult, Mode, SearchOptions};
use transduce_core::info::{self, InfoReport};
use transduce_core::kinetics::{self, TimeStep};
use transduce_core::limit::{self, LimitReport};
use transduce_core::linalg::Matrix;
use transduce_core::simulate::{self, McConfig, MiEstimate};
use transduce_core::{InputDistribution, ReceptorModel, StateId};

use crate::model_io::{self, IoError, Source};

/// Thread-count override for parallel sweeps, searches and chains.
pub const THREADS_ENV: &str = "TRANSDUCE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "transduce",
    version,
    about = "Information rates and capacities of receptor channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check a model file or built-in and list every violation.
    Validate(ValidateArgs),
    /// Stationary distribution of the mean generator.
    SteadyState(SteadyStateArgs),
    /// Exact IID information rate of the discretized channel.
    Mi(MiArgs),
    /// Continuous-time limit of the information rate.
    Limit(LimitArgs),
    /// IID capacity over an alphabet.
    Capacity(CapacityArgs),
    /// Rate versus p_L curves (CSV).
    Sweep(SweepArgs),
    /// Simulated trajectory (CSV).
    Simulate(SimulateArgs),
    /// Monte Carlo estimates of I(X;Y) and I(X;Z).
    EstimateMi(EstimateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// Built-in name (chr2, ach, cam) or path to a .rxm.json file.
    pub model: String,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Built-in name (chr2, ach, cam) or path to a .rxm.json file.
    #[arg(long)]
    pub model: String,
    /// Report nats instead of bits.
    #[arg(long)]
    pub nats: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SteadyStateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input distribution as `x:p,x:p,...`.
    #[arg(long, value_parser = parse_dist)]
    pub dist: DistSpec,
    /// Time step in seconds; adds the invariance residual of I + dt·Q̄.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Write the mean generator as CSV.
    #[arg(long)]
    pub generator_csv: Option<String>,
    /// Write the mean transition matrix as CSV (needs --dt).
    #[arg(long, requires = "dt")]
    pub transition_csv: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct MiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input distribution as `x:p,x:p,...`.
    #[arg(long, value_parser = parse_dist)]
    pub dist: DistSpec,
    /// Time step in seconds.
    #[arg(long)]
    pub dt: f64,
    /// Also enumerate n-step sequences exactly (n in 1..=8).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub bruteforce: Option<u8>,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input distribution as `x:p,x:p,...`.
    #[arg(long, value_parser = parse_dist)]
    pub dist: DistSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Limit,
    Discrete,
}

#[derive(Debug, Args, Serialize)]
pub struct CapacityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input levels; defaults to the endpoints of the model's input range.
    #[arg(long, value_delimiter = ',')]
    pub alphabet: Vec<f64>,
    #[arg(long, value_enum, default_value = "limit")]
    pub mode: ModeArg,
    /// Time step in seconds (discrete mode).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Seed for the multi-start search (alphabets with more than two levels).
    #[arg(long, default_value_t = SearchOptions::default().seed)]
    pub seed: u64,
    /// Number of random starts (alphabets with more than two levels).
    #[arg(long, default_value_t = SearchOptions::default().starts)]
    pub starts: usize,
    /// Include the optimizer trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Two input levels; defaults to the endpoints of the model's input range.
    #[arg(long, value_delimiter = ',')]
    pub alphabet: Vec<f64>,
    /// Time steps in seconds; one discrete curve each.
    #[arg(long, value_delimiter = ',')]
    pub dt: Vec<f64>,
    /// Number of p_L grid points on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Add Monte Carlo rows (needs --dt).
    #[arg(long, requires = "dt")]
    pub mc: bool,
    /// Interior p_L points for Monte Carlo rows: i/(n+1), i = 1..n.
    #[arg(long, default_value_t = 9)]
    pub mc_grid: usize,
    /// Measured steps per Monte Carlo point, split across chains.
    #[arg(long, default_value_t = 10_000_000)]
    pub steps: usize,
    /// Independent chains (at least 16).
    #[arg(long, default_value_t = 32)]
    pub chains: usize,
    /// Base seed; each chain draws from its own stream.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input distribution as `x:p,x:p,...`.
    #[arg(long, value_parser = parse_dist)]
    pub dist: DistSpec,
    /// Time step in seconds.
    #[arg(long)]
    pub dt: f64,
    /// Steps to simulate.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Random seed.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    Y,
    Z,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Input distribution as `x:p,x:p,...`.
    #[arg(long, value_parser = parse_dist)]
    pub dist: DistSpec,
    /// Time step in seconds.
    #[arg(long)]
    pub dt: f64,
    /// Measured steps, split across chains.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: usize,
    /// Independent chains (at least 16).
    #[arg(long, default_value_t = 32)]
    pub chains: usize,
    /// Base seed; each chain draws from its own stream.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// `y` is the full state and `z` the lumped output.
    #[arg(long, value_enum, default_value = "both")]
    pub target: TargetArg,
    /// Report the raw plug-in estimate for Y without the small-sample correction.
    #[arg(long)]
    pub no_bias_correction: bool,
}

/// Parsed `x:p,...` pairs; semantic checks happen at dispatch.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DistSpec(pub Vec<(f64, f64)>);

pub fn parse_dist(s: &str) -> Result<DistSpec, String> {
    let mut points = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (x, p) = item
            .split_once(':')
            .ok_or_else(|| format!("`{item}` is not of the form x:p"))?;
        let x: f64 = x
            .trim()
            .parse()
            .map_err(|_| format!("bad input level `{x}`"))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("bad probability `{p}`"))?;
        points.push((x, p));
    }
    if points.is_empty() {
        return Err("empty distribution".into());
    }
    Ok(DistSpec(points))
}

/// How a run failed.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl From<transduce_core::Error> for Failure {
    fn from(e: transduce_core::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Read { .. } => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("write failed: {e}"))
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` and runs it, writing results to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    match dispatch(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Failure::Usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got `{value}`"
        ))
    })?;
    // A second call in the same process keeps the first pool, which is fine.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate(a) => validate(command, a, out),
        Command::SteadyState(a) => steady_state(command, a, out),
        Command::Mi(a) => mi(command, a, out),
        Command::Limit(a) => limit_cmd(command, a, out),
        Command::Capacity(a) => capacity_cmd(command, a, out),
        Command::Sweep(a) => sweep(command, a, out),
        Command::Simulate(a) => simulate_cmd(command, a, out),
        Command::EstimateMi(a) => estimate(command, a, out),
    }
}

/// The audit header embedded in every output.
fn audit(command: &Command, source: Option<&Source>, nats: bool) -> Value {
    let args = serde_json::to_value(command).expect("arguments serialize");
    let (name, args) = match args {
        Value::Object(map) => map.into_iter().next().expect("one subcommand"),
        other => ("".into(), other),
    };
    json!({
        "tool": "transduce",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "args": args,
        "model_source": source,
        "units": if nats { "nats" } else { "bits" },
    })
}

fn emit_json(out: &mut dyn Write, mut body: Value, config: Value) -> Outcome {
    body.as_object_mut()
        .expect("object body")
        .insert("config".into(), config);
    let text = serde_json::to_string_pretty(&body).expect("json values serialize");
    writeln!(out, "{text}")?;
    Ok(())
}

/// Writes CSV to `path` or to `out`, prefixed by a `#` audit line.
fn emit_csv(
    out: &mut dyn Write,
    path: Option<&str>,
    config: &Value,
    header: &str,
    rows: &[String],
) -> Outcome {
    let mut text = format!(
        "# {}\n{header}\n",
        serde_json::to_string(config).expect("json values serialize")
    );
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Numeric(format!("cannot write {p}: {e}")))
        }
        None => out.write_all(text.as_bytes()).map_err(Failure::from),
    }
}

fn scale(nats: bool) -> f64 {
    if nats {
        1.0
    } else {
        1.0 / LN_2
    }
}

fn load(common: &Common) -> Result<(ReceptorModel, Source), Failure> {
    Ok(model_io::load_model(&common.model)?)
}

fn distribution(model: &ReceptorModel, spec: &DistSpec) -> Result<InputDistribution, Failure> {
    let mut points = spec.0.clone();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dist = InputDistribution::new(points)?;
    dist.check_support(model)?;
    Ok(dist)
}

fn time_step(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: f64,
) -> Result<TimeStep, Failure> {
    let step = TimeStep::new(dt)?;
    kinetics::check_time_step(model, dist, step).map_err(|e| {
        Failure::Numeric(format!(
            "{e}; dt must not exceed {:e} s for this model and alphabet",
            kinetics::max_time_step(model, dist.high())
        ))
    })?;
    Ok(step)
}

fn binary_levels(model: &ReceptorModel, alphabet: &[f64]) -> Result<Vec<f64>, Failure> {
    let mut levels = if alphabet.is_empty() {
        let (lo, hi) = model.input_range();
        vec![lo, hi]
    } else {
        alphabet.to_vec()
    };
    if levels.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Usage("alphabet levels must be finite".into()));
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (min, max) = model.input_range();
    for &x in &levels {
        if !model.contains_input(x) {
            return Err(transduce_core::Error::InputOutOfRange { x, min, max }.into());
        }
    }
    Ok(levels)
}

fn label(model: &ReceptorModel, i: usize) -> u32 {
    model.label(StateId(i))
}

fn stationary_table(model: &ReceptorModel, pi: &[f64]) -> Value {
    Value::Array(
        model
            .states()
            .iter()
            .zip(pi)
            .map(|(s, p)| json!({"id": s.label, "property": s.property, "probability": p}))
            .collect(),
    )
}

fn points_table(points: &[(f64, f64)]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|(x, p)| json!({"x": x, "mass": p}))
            .collect(),
    )
}

fn validate(command: &Command, a: &ValidateArgs, out: &mut dyn Write) -> Outcome {
    let lower = a.model.to_ascii_lowercase();
    let (source, parsed) = if transduce_core::builtin::NAMES.contains(&lower.as_str())
        && !std::path::Path::new(&a.model).exists()
    {
        let parts = transduce_core::builtin::builtin(&lower)?.to_parts();
        let report = transduce_core::model::validate(&parts);
        (Source::Builtin(lower), Ok((parts, report)))
    } else {
        let text = model_io::read(&a.model)?;
        (
            Source::File(a.model.clone()),
            model_io::parse_and_validate(&text),
        )
    };
    let config = audit(command, Some(&source), false);
    let (body, usable) = match parsed {
        Ok((parts, report)) => {
            let violations: Vec<Value> = report
                .violations
                .iter()
                .map(|v| json!({"code": v.code(), "message": v.to_string(), "fatal": v.is_fatal()}))
                .collect();
            let usable = !report.has_fatal();
            (
                json!({
                    "valid": report.is_valid(),
                    "usable": usable,
                    "violations": violations,
                    "num_states": parts.states.len(),
                    "num_edges": parts.edges.len(),
                    "num_sensitive_edges": parts.edges.iter().filter(|e| e.sensitive).count(),
                }),
                usable,
            )
        }
        Err(e) => {
            let violations: Vec<Value> = e
                .codes()
                .iter()
                .map(|c| json!({"code": c, "message": e.to_string(), "fatal": true}))
                .collect();
            (
                json!({"valid": false, "usable": false, "violations": violations}),
                false,
            )
        }
    };
    emit_json(out, body, config)?;
    if usable {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "model `{}` is not valid",
            a.model
        )))
    }
}

fn matrix_csv(model: &ReceptorModel, m: &Matrix) -> (String, Vec<String>) {
    let k = model.num_states();
    let mut header = String::from("from\\to");
    for j in 0..k {
        header.push_str(&format!(",{}", label(model, j)));
    }
    let rows = (0..k)
        .map(|i| {
            let mut row = label(model, i).to_string();
            for j in 0..k {
                row.push_str(&format!(",{}", m[(i, j)]));
            }
            row
        })
        .collect();
    (header, rows)
}

fn steady_state(command: &Command, a: &SteadyStateArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let dist = distribution(&model, &a.dist)?;
    let step = a.dt.map(|dt| time_step(&model, &dist, dt)).transpose()?;
    let config = audit(command, Some(&source), a.common.nats);
    let pi = kinetics::stationary(&model, &dist)?;
    let q = kinetics::mean_generator(&model, &dist)?;
    let residual = max_abs_diff(&q.matrix().left_mul(&pi), &vec![0.0; pi.len()]);
    let mut body = json!({
        "mean_input": dist.mean(),
        "stationary": stationary_table(&model, &pi),
        "generator_residual": residual,
        "max_time_step": kinetics::max_time_step(&model, dist.high()),
    });
    if let Some(step) = step {
        let p = kinetics::mean_transition(&model, &dist, step)?;
        let invariance = max_abs_diff(&p.matrix().left_mul(&pi), &pi);
        body["transition_residual"] = json!(invariance);
        if let Some(path) = &a.transition_csv {
            let (header, rows) = matrix_csv(&model, p.matrix());
            emit_csv(out, Some(path), &config, &header, &rows)?;
        }
    }
    if let Some(path) = &a.generator_csv {
        let (header, rows) = matrix_csv(&model, q.matrix());
        emit_csv(out, Some(path), &config, &header, &rows)?;
    }
    emit_json(out, body, config)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn info_body(model: &ReceptorModel, report: &InfoReport, s: f64) -> Value {
    json!({
        "dt": report.dt.seconds(),
        "rate_per_use": report.rate_per_use * s,
        "rate_per_second": report.rate_per_second * s,
        "per_edge": report.per_edge.iter().map(|e| json!({
            "from": label(model, e.from.0),
            "to": label(model, e.to.0),
            "value": e.value * s,
        })).collect::<Vec<_>>(),
        "stationary": stationary_table(model, &report.stationary),
    })
}

fn mi(command: &Command, a: &MiArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let dist = distribution(&model, &a.dist)?;
    let step = time_step(&model, &dist, a.dt)?;
    let config = audit(command, Some(&source), a.common.nats);
    let s = scale(a.common.nats);
    let report = info::mi_rate_discrete(&model, &dist, step)?;
    let mut body = info_body(&model, &report, s);
    if let Some(n) = a.bruteforce {
        let value = info::mi_bruteforce(&model, &dist, step, n as usize)?;
        body["bruteforce"] = json!({"n": n, "rate_per_use": value * s});
    }
    emit_json(out, body, config)
}

fn limit_body(model: &ReceptorModel, report: &LimitReport, s: f64) -> Value {
    json!({
        "rate_bits_per_s": report.rate / LN_2,
        "rate_nats_per_s": report.rate,
        "divergence": report.divergence * s,
        "flux": {
            "total": report.flux.total,
            "per_edge": report.flux.per_edge.iter().map(|e| json!({
                "from": label(model, e.from.0),
                "to": label(model, e.to.0),
                "flux": e.flux,
            })).collect::<Vec<_>>(),
        },
        "posterior": report.posterior.as_ref().map(|p| points_table(&p.points)),
        "per_edge_iota": report.per_edge_iota.iter().map(|e| json!({
            "from": label(model, e.from.0),
            "to": label(model, e.to.0),
            "iota": e.iota * s,
        })).collect::<Vec<_>>(),
        "stationary": stationary_table(model, &report.stationary),
    })
}

fn limit_cmd(command: &Command, a: &LimitArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let dist = distribution(&model, &a.dist)?;
    let config = audit(command, Some(&source), a.common.nats);
    let report = limit::limit_rate(&model, &dist)?;
    emit_json(
        out,
        limit_body(&model, &report, scale(a.common.nats)),
        config,
    )
}

fn capacity_body(result: &CapacityResult, s: f64, with_trace: bool) -> Value {
    let mut body = json!({
        "value": result.mode.per_second(result.value) * s,
        "argmax": points_table(result.argmax.points()),
        "p_low": result.p_low,
        "unimodal": result.unimodal,
        "interior_mass": result.interior_mass,
        "endpoint_support_verified": result.endpoint_support_verified,
        "single_sensitive_edge": result.single_sensitive_edge,
        "shannon_capacity": result.is_shannon_capacity(),
        "converged": result.converged,
    });
    if let Mode::Discrete(dt) = result.mode {
        body["value_per_use"] = json!(result.value * s);
        body["dt"] = json!(dt.seconds());
    }
    if with_trace {
        body["trace"] = Value::Array(
            result
                .trace
                .iter()
                .map(|t| json!({"masses": t.masses, "value": result.mode.per_second(t.value) * s}))
                .collect(),
        );
    }
    body
}

fn capacity_cmd(command: &Command, a: &CapacityArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let levels = binary_levels(&model, &a.alphabet)?;
    let mode = match (a.mode, a.dt) {
        (ModeArg::Limit, _) => Mode::Limit,
        (ModeArg::Discrete, None) => {
            return Err(Failure::Usage("--mode discrete needs --dt".into()))
        }
        (ModeArg::Discrete, Some(dt)) => {
            let support = InputDistribution::from_parts(
                &levels,
                &vec![1.0 / levels.len() as f64; levels.len()],
            )?;
            Mode::Discrete(time_step(&model, &support, dt)?)
        }
    };
    let config = audit(command, Some(&source), a.common.nats);
    let result = match levels.len() {
        1 => capacity::capacity_binary(&model, levels[0], levels[0], mode)?,
        2 => capacity::capacity_binary(&model, levels[0], levels[1], mode)?,
        _ => {
            let opts = SearchOptions {
                starts: a.starts,
                seed: a.seed,
                ..SearchOptions::default()
            };
            capacity::capacity_general_with(&model, &levels, mode, &opts)?
        }
    };
    emit_json(
        out,
        capacity_body(&result, scale(a.common.nats), a.trace),
        config,
    )
}

fn sweep(command: &Command, a: &SweepArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let levels = binary_levels(&model, &a.alphabet)?;
    let [lo, hi] = levels[..] else {
        return Err(Failure::Usage(
            "sweep needs an alphabet of exactly two distinct levels".into(),
        ));
    };
    if a.grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let support = InputDistribution::binary(lo, hi, 0.5)?;
    let steps: Vec<TimeStep> =
        a.dt.iter()
            .map(|&dt| time_step(&model, &support, dt))
            .collect::<Result<_, _>>()?;
    if a.mc && a.chains < simulate::MIN_CHAINS {
        return Err(Failure::Numeric(format!(
            "--chains must be at least {}",
            simulate::MIN_CHAINS
        )));
    }
    let config = audit(command, Some(&source), a.common.nats);
    let s = scale(a.common.nats);
    let grid: Vec<f64> = (0..a.grid)
        .map(|i| i as f64 / (a.grid - 1) as f64)
        .collect();
    let fmt_row = |p: f64, dt: Option<f64>, rate: f64, mode: &str, se: Option<f64>| {
        let dt = dt.map(|d| d.to_string()).unwrap_or_default();
        match (a.mc, se) {
            (false, _) => format!("{p},{dt},{rate},{mode}"),
            (true, se) => format!(
                "{p},{dt},{rate},{mode},{}",
                se.map(|v| v.to_string()).unwrap_or_default()
            ),
        }
    };

    let mut rows = Vec::new();
    for &step in &steps {
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&p| {
                let d = InputDistribution::binary(lo, hi, p)?;
                Ok(info::mi_rate_discrete(&model, &d, step)?.rate_per_second)
            })
            .collect::<Result<_, transduce_core::Error>>()?;
        for (p, v) in grid.iter().zip(values) {
            rows.push(fmt_row(*p, Some(step.seconds()), v * s, "discrete", None));
        }
    }
    let limits: Vec<f64> = grid
        .par_iter()
        .map(|&p| Ok(limit::limit_rate(&model, &InputDistribution::binary(lo, hi, p)?)?.rate))
        .collect::<Result<_, transduce_core::Error>>()?;
    for (p, v) in grid.iter().zip(limits) {
        rows.push(fmt_row(*p, None, v * s, "limit", None));
    }
    if a.mc {
        let mc_grid: Vec<f64> = (1..=a.mc_grid)
            .map(|i| i as f64 / (a.mc_grid + 1) as f64)
            .collect();
        for &step in &steps {
            for &p in &mc_grid {
                let d = InputDistribution::binary(lo, hi, p)?;
                let cfg = McConfig::new(a.steps, a.chains, a.seed);
                let (y, z) = simulate::estimate_mi_both(&model, &d, step, &cfg)?;
                let per_s = s / step.seconds();
                rows.push(fmt_row(
                    p,
                    Some(step.seconds()),
                    y.mean * per_s,
                    "mc_y",
                    Some(y.std_error * per_s),
                ));
                rows.push(fmt_row(
                    p,
                    Some(step.seconds()),
                    z.mean * per_s,
                    "mc_z",
                    Some(z.std_error * per_s),
                ));
            }
        }
    }
    let unit = if a.common.nats {
        "rate_nats_per_s"
    } else {
        "rate_bits_per_s"
    };
    let header = if a.mc {
        format!("p_L,dt,{unit},mode,stderr")
    } else {
        format!("p_L,dt,{unit},mode")
    };
    emit_csv(out, a.out.as_deref(), &config, &header, &rows)
}

fn simulate_cmd(command: &Command, a: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let dist = distribution(&model, &a.dist)?;
    let step = time_step(&model, &dist, a.dt)?;
    let config = audit(command, Some(&source), false);
    let traj = simulate::simulate(&model, &dist, step, a.steps, a.seed)?;
    let levels: Vec<f64> = dist.levels().collect();
    let tag = |y: StateId| {
        model
            .lump()
            .map(|l| l.tags[l.of_state[y.0]].clone())
            .unwrap_or_default()
    };
    let mut rows = Vec::with_capacity(a.steps + 1);
    rows.push(format!(
        "0,,{},{}",
        label(&model, traj.initial.0),
        tag(traj.initial)
    ));
    for (i, (x, y)) in traj.inputs.iter().zip(&traj.states).enumerate() {
        rows.push(format!(
            "{},{},{},{}",
            i + 1,
            levels[*x],
            label(&model, y.0),
            tag(*y)
        ));
    }
    emit_csv(out, a.out.as_deref(), &config, "step,x,y,z", &rows)
}

fn estimate_body(e: &MiEstimate, s: f64, dt: f64) -> Value {
    json!({
        "mean": e.mean * s,
        "std_error": e.std_error * s,
        "mean_per_second": e.mean * s / dt,
        "std_error_per_second": e.std_error * s / dt,
        "n_steps": e.n_steps,
        "n_chains": e.n_chains,
        "seed": e.seed,
        "sparse_counts": e.sparse_counts,
        "per_chain": e.per_chain.iter().map(|v| v * s).collect::<Vec<_>>(),
    })
}

fn estimate(command: &Command, a: &EstimateArgs, out: &mut dyn Write) -> Outcome {
    let (model, source) = load(&a.common)?;
    let dist = distribution(&model, &a.dist)?;
    let step = time_step(&model, &dist, a.dt)?;
    if a.chains < simulate::MIN_CHAINS {
        return Err(Failure::Numeric(format!(
            "--chains must be at least {}",
            simulate::MIN_CHAINS
        )));
    }
    if a.target != TargetArg::Y && model.lump().is_none() {
        return Err(Failure::Numeric(
            "estimating I(X;Z) needs a model with a lump map".into(),
        ));
    }
    let config = audit(command, Some(&source), a.common.nats);
    let s = scale(a.common.nats);
    let mut cfg = McConfig::new(a.steps, a.chains, a.seed);
    cfg.bias_correction = !a.no_bias_correction;
    let analytic = info::mi_rate_discrete(&model, &dist, step)?;
    let mut body = json!({
        "dt": a.dt,
        "analytic_rate_per_use": analytic.rate_per_use * s,
    });
    match a.target {
        TargetArg::Y => {
            body["y"] = estimate_body(
                &simulate::estimate_mi_y(&model, &dist, step, &cfg)?,
                s,
                a.dt,
            )
        }
        TargetArg::Z => {
            body["z"] = estimate_body(
                &simulate::estimate_mi_z(&model, &dist, step, &cfg)?,
                s,
                a.dt,
            )
        }
        TargetArg::Both => {
            let (y, z) = simulate::estimate_mi_both(&model, &dist, step, &cfg)?;
            body["y"] = estimate_body(&y, s, a.dt);
            body["z"] = estimate_body(&z, s, a.dt);
        }
    }
    emit_json(out, body, config)
}

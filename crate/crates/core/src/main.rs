//! Thin command-line front: parse arguments, call into the library, print
//! JSON on stdout (human tables only with `--pretty`), and map failures
//! onto stable exit codes so scripts can branch on them.
//!
//! Exit codes: 0 ok, 2 validation failure, 3 runtime/bind failure,
//! 64 usage, 66 missing input file.

use std::io::Write as _;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};
use coded_inference::codec::{
    PerturbationModel, TaskResults, decode_batch, ideal_encode, perturbed_encode,
};
use coded_inference::config::{ConfigError, RunConfig};
use coded_inference::experiments::{
    AmplificationConfig, ExperimentError, ExperimentReport, LatencyConfig, OverheadConfig,
    ReportCell, SynthConfig, amplification_sweep, latency_comparison, multi_failure_check,
    overhead_scaling, synth_reconstruction,
};
use coded_inference::invertible::InvertibleFunction;
use coded_inference::rng::{derive_seed, substream};
use coded_inference::serving::{
    ClassMixture, QueryRecord, TcpFrontEnd, VictimPolicy, WorkerServer, serve_on, summarize,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_MISSING_INPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "coded-inference", version, about = "Coded redundancy for prediction serving")]
struct Cli {
    /// Render human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a generator matrix, optionally verifying every k-row subset.
    Matrix {
        n: usize,
        k: usize,
        /// One of: uniform, multi42, vandermonde, gaussian.
        scheme: String,
        /// Required by the gaussian scheme.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        verify: bool,
    },
    /// Reconstruction-error sweep of single-failure recovery on a planar
    /// rotation.
    Synth {
        /// Smallest batch size; with --k-max this spans a contiguous range.
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Trials per batch size (default 50000).
        #[arg(long, conflicts_with = "quick")]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rotation angle (default pi/3).
        #[arg(long)]
        theta: Option<f64>,
        /// Cut trials to 5000.
        #[arg(long)]
        quick: bool,
        /// Also write report files here (RESULTS_DIR overrides).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a batch of k inputs into n task inputs.
    Encode {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        /// JSON array of k input vectors.
        #[arg(long)]
        inputs: PathBuf,
        /// Parity embedding noise level; 0 encodes exactly.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Required when --sigma > 0.
        #[arg(long)]
        noise_seed: Option<u64>,
    },
    /// Recover the k function outputs from a subset of task results.
    Decode {
        #[arg(long)]
        matrix: PathBuf,
        /// JSON object mapping 1-based task index to result vector.
        #[arg(long)]
        results: PathBuf,
        /// Tasks to decode from, comma-separated; defaults to all present.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
    },
    /// Normal vs degraded accuracy (plus amplification ratios) across
    /// batch sizes and noise levels.
    Accuracy {
        /// Function file; defaults to a planar rotation by pi/3.
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment named in a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve one worker: apply the function to TASK frames over TCP.
    ServeWorker {
        /// host:port; port 0 picks a free one (printed on startup).
        #[arg(long)]
        listen: String,
        #[arg(long)]
        function: PathBuf,
        /// Artificial per-task delay, for straggler experiments.
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
    },
    /// Wall-clock encode/decode cost sweep across batch sizes.
    Overhead {
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        inner: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
    MissingInput(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::MissingInput(_) => EXIT_MISSING_INPUT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Validation(m)
            | CliError::Runtime(m)
            | CliError::MissingInput(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let pretty = cli.pretty;
    match cli.command {
        Command::Matrix { n, k, scheme, seed, verify } => cmd_matrix(n, k, &scheme, seed, verify, pretty),
        Command::Synth { k_min, k_max, trials, seed, theta, quick, out } => {
            cmd_synth(k_min, k_max, trials, seed, theta, quick, out, pretty)
        }
        Command::Encode { function, matrix, inputs, sigma, noise_seed } => {
            cmd_encode(&function, &matrix, &inputs, sigma, noise_seed)
        }
        Command::Decode { matrix, results, subset } => cmd_decode(&matrix, &results, subset),
        Command::Accuracy { function, k, sigma, trials, classes, seed, out } => {
            cmd_accuracy(function, k, sigma, trials, classes, seed, out, pretty)
        }
        Command::Bench { config, out } => cmd_bench(&config, out, pretty),
        Command::ServeWorker { listen, function, delay_ms } => {
            cmd_serve_worker(&listen, &function, delay_ms)
        }
        Command::Overhead { k, repeats, inner, seed, function, out } => {
            cmd_overhead(k, repeats, inner, seed, function, out, pretty)
        }
    }
}

fn cmd_matrix(
    n: usize,
    k: usize,
    scheme: &str,
    seed: Option<u64>,
    verify: bool,
    pretty: bool,
) -> Result<(), CliError> {
    if k == 0 || n < k {
        return Err(CliError::Usage(format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    let parsed = Scheme::from_parts(scheme, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let matrix = GeneratorMatrix::build(n, k, parsed)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let verification = verify.then(|| matrix.verify_any_k_rows());
    if pretty {
        for row in matrix.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
            println!("{}", cells.join(" "));
        }
        if let Some(v) = &verification {
            println!(
                "verify: ok={} worst_subset={:?} worst_margin={:.3e} ({} subsets{})",
                v.ok,
                v.worst_subset,
                v.worst_margin,
                v.subsets_checked,
                if v.sampled { ", sampled" } else { "" },
            );
        }
    } else {
        // The "matrix" value is the serialized generator itself, so the
        // output feeds straight back into `encode --matrix` / `decode`.
        let body = json!({ "matrix": matrix, "verification": verification });
        println!("{body}");
    }
    if verification.is_some_and(|v| !v.ok) {
        return Err(CliError::Validation("subset verification failed".to_string()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    k_min: Option<usize>,
    k_max: Option<usize>,
    trials: Option<usize>,
    seed: u64,
    theta: Option<f64>,
    quick: bool,
    out: Option<PathBuf>,
    pretty: bool,
) -> Result<(), CliError> {
    let mut cfg = SynthConfig { seed, ..SynthConfig::default() };
    if let Some(theta) = theta {
        cfg.theta = theta;
    }
    if k_min.is_some() || k_max.is_some() {
        let lo = k_min.unwrap_or(2);
        let hi = k_max.unwrap_or(lo);
        if lo > hi {
            return Err(CliError::Usage(format!("--k-min {lo} exceeds --k-max {hi}")));
        }
        cfg.k_values = (lo..=hi).collect();
    }
    if let Some(trials) = trials {
        cfg.trials_per_k = trials;
    } else if quick {
        cfg.trials_per_k = 5000;
    }
    let report = synth_reconstruction(&cfg).map_err(experiment_error)?;
    emit_report(&report, pretty, resolve_out_dir(out, None))
}

fn cmd_encode(
    function: &Path,
    matrix: &Path,
    inputs: &Path,
    sigma: f64,
    noise_seed: Option<u64>,
) -> Result<(), CliError> {
    let f: InvertibleFunction = read_json_file(function)?;
    let generator = read_matrix_file(matrix)?;
    let inputs: Vec<Vec<f64>> = read_json_file(inputs)?;
    let batch = if sigma == 0.0 {
        ideal_encode(&f, &inputs, &generator)
    } else if sigma > 0.0 {
        let seed = noise_seed.ok_or_else(|| {
            CliError::Usage("--noise-seed is required when --sigma > 0".to_string())
        })?;
        let model =
            PerturbationModel::new(sigma, seed).map_err(|e| CliError::Validation(e.to_string()))?;
        perturbed_encode(&f, &inputs, &generator, &model)
    } else {
        return Err(CliError::Usage(format!("--sigma must be >= 0, got {sigma}")));
    }
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let tasks: Vec<&[f64]> = (1..=batch.n()).map(|t| batch.task_input(t)).collect();
    println!("{}", json!({ "n": batch.n(), "k": batch.k(), "dim": batch.dim(), "tasks": tasks }));
    Ok(())
}

fn cmd_decode(
    matrix: &Path,
    results: &Path,
    subset: Option<Vec<usize>>,
) -> Result<(), CliError> {
    let generator = read_matrix_file(matrix)?;
    let results: TaskResults = read_json_file(results)?;
    let mut subset = subset.unwrap_or_else(|| results.keys().copied().collect());
    subset.sort_unstable();
    let estimates = decode_batch(&results, &generator, &subset)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!("{}", json!({ "subset": subset, "estimates": estimates }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_accuracy(
    function: Option<PathBuf>,
    k: Option<Vec<usize>>,
    sigma: Option<Vec<f64>>,
    trials: Option<usize>,
    classes: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
    pretty: bool,
) -> Result<(), CliError> {
    let f = load_function_or_default(function)?;
    let mut cfg = AmplificationConfig { seed, ..AmplificationConfig::default() };
    if let Some(k) = k {
        cfg.k_values = k;
    }
    if let Some(sigma) = sigma {
        cfg.sigma_values = sigma;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    if let Some(classes) = classes {
        cfg.classes = classes;
    }
    let report = amplification_sweep(&f, &cfg).map_err(experiment_error)?;
    emit_report(&report, pretty, resolve_out_dir(out, None))
}

fn cmd_overhead(
    k: Option<Vec<usize>>,
    repeats: Option<usize>,
    inner: Option<usize>,
    seed: u64,
    function: Option<PathBuf>,
    out: Option<PathBuf>,
    pretty: bool,
) -> Result<(), CliError> {
    let f = load_function_or_default(function)?;
    let mut cfg = OverheadConfig { seed, ..OverheadConfig::default() };
    if let Some(k) = k {
        cfg.k_values = k;
    }
    if let Some(repeats) = repeats {
        cfg.repeats = repeats;
    }
    if let Some(inner) = inner {
        cfg.inner = inner;
    }
    let report = overhead_scaling(&f, &cfg).map_err(experiment_error)?;
    emit_report(&report, pretty, resolve_out_dir(out, None))
}

fn cmd_serve_worker(listen: &str, function: &Path, delay_ms: u64) -> Result<(), CliError> {
    let f: InvertibleFunction = read_json_file(function)?;
    let listener = TcpListener::bind(listen)
        .map_err(|e| CliError::Runtime(format!("cannot bind {listen}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{}", json!({ "listening": addr.to_string() }));
    std::io::stdout().flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    serve_on(listener, f, Duration::from_millis(delay_ms))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn cmd_bench(config: &Path, out: Option<PathBuf>, pretty: bool) -> Result<(), CliError> {
    let cfg = RunConfig::from_path(config).map_err(config_error)?;
    let out_dir = resolve_out_dir(out, cfg.output_dir.clone());
    let mut params = match cfg.experiment.parameters.clone() {
        serde_json::Value::Object(map) => map,
        other => {
            return Err(CliError::Validation(format!(
                "experiment.parameters must be an object, got {other}"
            )));
        }
    };
    // Reproducibility is part of the contract: every experiment names its
    // seed explicitly instead of picking one up from the environment.
    if !params.contains_key("seed") {
        return Err(CliError::Validation("experiment.parameters.seed is required".to_string()));
    }
    let report = match cfg.experiment.name.as_str() {
        "synth" => synth_reconstruction(&from_params::<SynthConfig>(params)?),
        "multi_failure" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Params {
                #[serde(default = "default_trials")]
                trials: usize,
                seed: u64,
            }
            fn default_trials() -> usize {
                200
            }
            let p: Params = from_params(params)?;
            multi_failure_check(cfg.code.n, cfg.code.k, &cfg.function, p.trials, p.seed)
        }
        "amplification" => amplification_sweep(&cfg.function, &from_params(params)?),
        "overhead" => overhead_scaling(&cfg.function, &from_params(params)?),
        "latency" => {
            let transport = match params.remove("transport") {
                None => "sim".to_string(),
                Some(serde_json::Value::String(s)) => s,
                Some(other) => {
                    return Err(CliError::Validation(format!(
                        "transport must be a string, got {other}"
                    )));
                }
            };
            let lat: LatencyConfig = from_params(merge_latency_params(&cfg, params))?;
            match transport.as_str() {
                "sim" => latency_comparison(&cfg.function, &lat),
                "tcp" => {
                    let report = run_latency_tcp(&cfg, &lat)?;
                    return emit_report(&report, pretty, out_dir);
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown transport '{other}' (expected sim or tcp)"
                    )));
                }
            }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown experiment '{other}' (expected synth, multi_failure, amplification, overhead, or latency)"
            )));
        }
    }
    .map_err(experiment_error)?;
    emit_report(&report, pretty, out_dir)
}

/// The latency experiment reads its shape from the `code` and `straggler`
/// sections; explicit `parameters` keys win over both.
fn merge_latency_params(
    cfg: &RunConfig,
    params: serde_json::Map<String, serde_json::Value>,
) -> serde_json::Map<String, serde_json::Value> {
    let mut merged = serde_json::Map::new();
    merged.insert("k".to_string(), json!(cfg.code.k));
    if let Some(straggler) = &cfg.straggler {
        merged.insert("base_latency".to_string(), json!(straggler.base_latency));
        merged.insert("straggle_delay".to_string(), json!(straggler.straggle_delay));
        merged.insert("straggle_prob".to_string(), json!(straggler.straggle_prob));
        if let Some(rate) = straggler.jitter_rate {
            merged.insert("jitter_rate".to_string(), json!(rate));
        }
    }
    merged.extend(params);
    merged
}

/// Real-socket variant of the latency experiment: n loopback workers, the
/// straggler realized as a fixed per-task delay. Wall-clock, so unlike the
/// simulated arms the numbers are not bit-reproducible.
fn run_latency_tcp(cfg: &RunConfig, lat: &LatencyConfig) -> Result<ExperimentReport, CliError> {
    let f = &cfg.function;
    let victim = if lat.straggle_prob == 0.0 {
        None
    } else {
        match cfg.straggler.as_ref().map(|s| s.victim_policy) {
            Some(VictimPolicy::Fixed(task)) if lat.straggle_prob == 1.0 => Some(task),
            _ => {
                return Err(CliError::Validation(
                    "tcp transport realizes stragglers as fixed worker delays: it needs \
                     straggler.victim_policy = {\"fixed\": <task>} and straggle_prob = 1, \
                     or straggle_prob = 0"
                        .to_string(),
                ));
            }
        }
    };
    let n = lat.k + 1;
    let generator = GeneratorMatrix::build(n, lat.k, Scheme::Uniform)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mixture = ClassMixture::circle(lat.classes, f.dim())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let heads =
        [mixture.head_through(f).map_err(|e| CliError::Validation(e.to_string()))?];

    let mut workers = Vec::with_capacity(n);
    let mut endpoints = Vec::with_capacity(n);
    for task in 1..=n {
        let extra = if victim == Some(task) { lat.straggle_delay } else { 0.0 };
        let delay = Duration::from_secs_f64(lat.base_latency + extra);
        let worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), delay)
            .map_err(|e| CliError::Runtime(format!("cannot spawn worker {task}: {e}")))?;
        endpoints.push(worker.addr().to_string());
        workers.push(worker);
    }
    let outcome = (|| -> Result<Vec<QueryRecord>, CliError> {
        let mut front = TcpFrontEnd::connect(&endpoints)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut records = Vec::with_capacity(lat.queries);
        for q in 0..lat.queries {
            let mut input_rng = substream(derive_seed(lat.seed, 4242), q as u64);
            let inputs: Vec<Vec<f64>> =
                (0..lat.k).map(|_| mixture.sample(&mut input_rng).1).collect();
            let batch = ideal_encode(f, &inputs, &generator)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let outcome = front
                .run_query(&batch, &heads, Duration::from_secs(10), q as u64)
                .map_err(|e| CliError::Runtime(format!("query {q}: {e}")))?;
            records.push(outcome.record);
        }
        Ok(records)
    })();
    for worker in &mut workers {
        worker.shutdown();
    }
    let records = outcome?;

    let stats = summarize(&records).map_err(|e| CliError::Runtime(e.to_string()))?;
    let degraded = records.iter().filter(|r| r.degraded).count();
    let mut report = ExperimentReport::new("latency_tcp");
    report.set_param("k", lat.k as u64);
    report.set_param("workers", n as u64);
    report.set_param("queries", lat.queries as u64);
    report.set_param("base_latency", lat.base_latency);
    report.set_param("straggle_delay", lat.straggle_delay);
    report.set_param("seed", lat.seed);
    report.set_param("function", f.kind_name());
    let mut cell = ReportCell::new("tcp_coded");
    let q = lat.queries as u64;
    cell.add_metric("p50", stats.p50, q);
    cell.add_metric("p99", stats.p99, q);
    cell.add_metric("p999", stats.p999, q);
    cell.add_metric("mean", stats.mean, q);
    cell.add_metric("degraded_fraction", degraded as f64 / lat.queries as f64, q);
    report.push(cell);
    Ok(report)
}

fn load_function_or_default(path: Option<PathBuf>) -> Result<InvertibleFunction, CliError> {
    match path {
        Some(path) => read_json_file(&path),
        None => InvertibleFunction::rotation(2, std::f64::consts::FRAC_PI_3)
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingInput(format!("{}: not found", path.display()))
        } else {
            CliError::Runtime(format!("cannot read {}: {e}", path.display()))
        }
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("cannot parse {}: {e}", path.display())))
}

/// Accepts either a bare serialized generator or the `matrix` subcommand's
/// `{"matrix": ..., "verification": ...}` envelope.
fn read_matrix_file(path: &Path) -> Result<GeneratorMatrix, CliError> {
    let mut value: serde_json::Value = read_json_file(path)?;
    if let Some(inner) = value.get_mut("matrix") {
        value = inner.take();
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("cannot parse {}: {e}", path.display())))
}

fn from_params<T: serde::de::DeserializeOwned>(
    params: serde_json::Map<String, serde_json::Value>,
) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::Object(params))
        .map_err(|e| CliError::Validation(format!("bad experiment parameters: {e}")))
}

/// `RESULTS_DIR` wins over any flag or config value; empty means unset.
fn resolve_out_dir(flag: Option<PathBuf>, config: Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var("RESULTS_DIR") {
        Ok(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
        _ => flag.or(config),
    }
}

fn emit_report(
    report: &ExperimentReport,
    pretty: bool,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let path = report
            .write_to_dir(&dir)
            .map_err(|e| CliError::Runtime(format!("cannot write report: {e}")))?;
        eprintln!("wrote {}", path.display());
    }
    if pretty {
        print!("{}", report.to_table());
    } else {
        println!("{}", report.to_json());
    }
    Ok(())
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Io(e) => CliError::Runtime(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn config_error(e: ConfigError) -> CliError {
    match e {
        ConfigError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::MissingInput(e.to_string())
        }
        ConfigError::Io { .. } => CliError::Runtime(e.to_string()),
        ConfigError::Parse { .. } | ConfigError::Invalid(_) => CliError::Validation(e.to_string()),
    }
}

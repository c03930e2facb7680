//! Command-line experiment runner.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numeric or
//! solver failure. Every run writes `manifest.json` next to its results.
//!
//! `--config FILE` reads `key = value` lines whose keys are long flag names
//! of the chosen subcommand. Explicit flags win over the file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical_opt::{self, AnnealSchedule, ClassicalError, BRUTE_FORCE_MAX_NODES};
use crate::hqnn::{self, Dataset, HqnnError, Metric, Network, NormMethod, TrainConfig};
use crate::quenc::{self, GradientMode, OptResult, QuencConfig, QuencError, Refiner, TraceEntry, WeightedGraph};
use crate::tensornet::{self, PoissonProblem, SolveConfig, TensorError, CG_MAX_POINTS, MAX_DENSE_CORES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<QuencError> for CliError {
    fn from(e: QuencError) -> Self {
        match e {
            QuencError::InvalidGraph(_) | QuencError::Parse { .. } | QuencError::Io(_) | QuencError::InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            QuencError::Classical(ClassicalError::TooLarge(_) | ClassicalError::InvalidSchedule(_)) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<ClassicalError> for CliError {
    fn from(e: ClassicalError) -> Self {
        QuencError::from(e).into()
    }
}

impl From<HqnnError> for CliError {
    fn from(e: HqnnError) -> Self {
        match e {
            HqnnError::MissingColumn(_) | HqnnError::Csv { .. } | HqnnError::Io(_) | HqnnError::InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::GridTooLarge { .. } | TensorError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("cannot write {}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "qworkbench", version, about = "QuEnc MaxCut, hybrid quantum neural networks and QTT Poisson benchmarks")]
struct Cli {
    /// Worker threads; 1 gives the bit-reproducible single-threaded mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file of default flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// MaxCut on a random complete graph or a graph file.
    Maxcut(MaxcutArgs),
    /// Circles classification with the classical or hybrid network.
    Classify(ClassifyArgs),
    /// Two-feature regression with a train-size sweep.
    Regress(RegressArgs),
    /// Poisson benchmark: TT solver and/or conjugate gradient.
    Poisson(PoissonArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Quenc,
    Sa,
    Local,
    Pipeline,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GradientArg {
    ParameterShift,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RefinerArg {
    Local,
    Sa,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct MaxcutArgs {
    #[arg(long, default_value_t = 16)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    layers: usize,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Quenc)]
    method: Method,
    /// Text graph: `n m` then `i j w` per edge. Overrides --nodes.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long, default_value = "out/maxcut")]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, value_enum, default_value_t = GradientArg::ParameterShift)]
    gradient: GradientArg,
    /// Plateau length that stops QuEnc early.
    #[arg(long, default_value_t = 50)]
    patience: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Refiner used by the pipeline method.
    #[arg(long, value_enum, default_value_t = RefinerArg::Local)]
    refiner: RefinerArg,
    #[arg(long, default_value_t = 5.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.01)]
    t1: f64,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Model {
    Classical,
    Hybrid,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ClassifyArgs {
    #[arg(long, value_enum, default_value_t = Model::Hybrid)]
    model: Model,
    #[arg(long, default_value_t = 300)]
    train_size: usize,
    #[arg(long, default_value_t = 700)]
    test_size: usize,
    /// Points generated per repeat.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Inner-circle radius.
    #[arg(long, default_value_t = 0.5)]
    factor: f64,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    /// 0 means full batch.
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value = "out/classify")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct RegressArgs {
    /// Headed CSV; a synthetic housing-like table is used when absent.
    #[arg(long)]
    data_csv: Option<PathBuf>,
    /// Comma-separated feature columns.
    #[arg(long, default_value = "rooms,lstat")]
    features: String,
    #[arg(long, default_value = "price")]
    target: String,
    #[arg(long, value_enum, default_value_t = Model::Hybrid)]
    model: Model,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3e-3)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Minmax)]
    normalization: NormArg,
    /// Comma-separated training-set sizes; default is the whole 80% split.
    #[arg(long)]
    train_sizes: Option<String>,
    /// Rows of the synthetic table.
    #[arg(long, default_value_t = 506)]
    synthetic_rows: usize,
    #[arg(long, default_value = "out/regress")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum NormArg {
    Minmax,
    Zscore,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct PoissonArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Comma-separated levels, or a range such as `3-8`.
    #[arg(long, default_value = "5")]
    levels: String,
    /// Comma-separated subset of `tt,cg`.
    #[arg(long, default_value = "tt")]
    methods: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 128)]
    max_rank: usize,
    #[arg(long, default_value_t = 4)]
    enrichment: usize,
    #[arg(long, default_value_t = 20)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 100_000)]
    cg_max_iters: usize,
    /// Also write grid values as CSV (at most 2^20 points).
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    export_solution: bool,
    #[arg(long, default_value = "out/poisson")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RerunArgs {
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Arguments after config-file expansion; enough to repeat the run.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub threads: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

const SUBCOMMANDS: [&str; 5] = ["maxcut", "classify", "regress", "poisson", "rerun"];

/// Splices `--key=value` tokens from the config file right after the
/// subcommand name so that later explicit flags override them. Drops the
/// `--config` flag itself.
fn expand_config(args: &[String]) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            path = Some(p.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a.clone());
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let mut tokens = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: expected key = value", n + 1)))?;
        tokens.push(format!("--{}={}", k.trim(), v.trim()));
    }
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, tokens);
    Ok(rest)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    match run_args(&args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !e.to_string().is_empty() {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

fn run_args(args: &[String]) -> Result<(), CliError> {
    let args = expand_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            // clap already printed the message
            return if code == 0 { Ok(()) } else { Err(CliError::Usage(String::new())) };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Failure(e.to_string()))?;
    let argv = args[1..].to_vec();
    pool.install(|| dispatch(cli.command, argv))
}

fn dispatch(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    let started = unix_now();
    let (name, out, config, seeds, artifacts) = match command {
        Command::Maxcut(a) => {
            let (seeds, artifacts) = cmd_maxcut(&a)?;
            ("maxcut", a.out.clone(), to_json(&a), seeds, artifacts)
        }
        Command::Classify(a) => {
            let (seeds, artifacts) = cmd_classify(&a)?;
            ("classify", a.out.clone(), to_json(&a), seeds, artifacts)
        }
        Command::Regress(a) => {
            let (seeds, artifacts) = cmd_regress(&a)?;
            ("regress", a.out.clone(), to_json(&a), seeds, artifacts)
        }
        Command::Poisson(a) => {
            let artifacts = cmd_poisson(&a)?;
            ("poisson", a.out.clone(), to_json(&a), Vec::new(), artifacts)
        }
        Command::Rerun(a) => return cmd_rerun(&a),
    };
    let manifest = RunManifest {
        subcommand: name.into(),
        argv,
        config,
        seeds,
        artifacts,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        threads: rayon::current_num_threads(),
        started_unix: started,
        finished_unix: unix_now(),
    };
    write_json(&out.join("manifest.json"), &manifest)
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| write_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| write_err(path, e))
}

fn rel(out: &Path, path: &Path) -> String {
    path.strip_prefix(out).unwrap_or(path).display().to_string()
}

fn cmd_rerun(a: &RerunArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.manifest)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.manifest.display())))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.manifest.display())))?;
    let mut args = vec!["qworkbench".to_string()];
    let mut skip = false;
    for tok in &m.argv {
        if skip {
            skip = false;
            continue;
        }
        if tok == "--out" {
            skip = true;
            continue;
        }
        if !tok.starts_with("--out=") {
            args.push(tok.clone());
        }
    }
    args.push(format!("--out={}", a.out.display()));
    if !m.argv.iter().any(|t| t == "--threads" || t.starts_with("--threads=")) {
        args.push(format!("--threads={}", m.threads));
    }
    run_args(&args)
}

// ---------------------------------------------------------------- maxcut

fn trace_csv(path: &Path, trace: &[TraceEntry]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    for t in trace {
        w.serialize(t).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

fn single_entry(x: Vec<u8>, e: f64, elapsed_ms: f64) -> OptResult {
    OptResult {
        best_energy: e,
        best_x: x,
        trace: vec![TraceEntry {
            iter: 0,
            cost: e,
            energy: e,
            best_energy: e,
            elapsed_ms,
        }],
    }
}

fn cmd_maxcut(a: &MaxcutArgs) -> Result<(Vec<u64>, Vec<String>), CliError> {
    let graph = match &a.graph_file {
        Some(p) => WeightedGraph::read(p)?,
        None => {
            if a.nodes < 2 {
                return Err(CliError::Usage(format!("--nodes must be at least 2, got {}", a.nodes)));
            }
            WeightedGraph::random_complete(a.nodes, a.seed)?
        }
    };
    let n = graph.num_nodes();
    if a.method == Method::Brute && n > BRUTE_FORCE_MAX_NODES {
        return Err(CliError::Usage(format!("brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")));
    }
    let schedule = AnnealSchedule {
        t0: a.t0,
        t1: a.t1,
        sweeps: a.sweeps,
        seed: a.seed,
    };
    let qc = QuencConfig {
        layers: a.layers,
        learning_rate: a.lr,
        max_iters: a.iters,
        gradient: match a.gradient {
            GradientArg::ParameterShift => GradientMode::ParameterShift,
            GradientArg::FiniteDifference => GradientMode::FiniteDifference,
        },
        seed: a.seed,
        tolerance: a.tolerance,
        patience: a.patience,
    };
    prepare_out(&a.out)?;
    let start = Instant::now();
    let ms = |s: &Instant| s.elapsed().as_secs_f64() * 1e3;
    let result = match a.method {
        Method::Quenc => quenc::quenc_optimize(&graph, &qc)?,
        Method::Pipeline => {
            let refiner = match a.refiner {
                RefinerArg::Local => Refiner::LocalSearch,
                RefinerArg::Sa => Refiner::Anneal(schedule),
            };
            quenc::hybrid_pipeline(&graph, &qc, &refiner)?
        }
        Method::Sa => {
            let (x, e, best) = classical_opt::simulated_annealing_traced(&graph, &schedule)?;
            let per_sweep = ms(&start) / best.len().max(1) as f64;
            let trace = best
                .iter()
                .enumerate()
                .map(|(i, b)| TraceEntry {
                    iter: i,
                    cost: *b,
                    energy: *b,
                    best_energy: *b,
                    elapsed_ms: per_sweep * (i + 1) as f64,
                })
                .collect();
            OptResult {
                best_energy: e,
                best_x: x,
                trace,
            }
        }
        Method::Local => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let x0: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();
            let (x, e) = classical_opt::local_search(&graph, &x0)?;
            single_entry(x, e, ms(&start))
        }
        Method::Brute => {
            let (x, e) = classical_opt::brute_force(&graph)?;
            single_entry(x, e, ms(&start))
        }
    };
    let json = a.out.join("result.json");
    let csv = a.out.join("trace.csv");
    write_json(&json, &result)?;
    trace_csv(&csv, &result.trace)?;
    Ok((vec![a.seed], vec![rel(&a.out, &json), rel(&a.out, &csv)]))
}

// ---------------------------------------------------------------- classify

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRepeat {
    pub seed: u64,
    pub final_accuracy: f64,
    pub final_train_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifySummary {
    pub model: String,
    pub train_size: usize,
    pub per_repeat: Vec<ClassifyRepeat>,
    pub mean: f64,
    pub stddev: f64,
    pub median: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    match s.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => s[n / 2],
        n => (s[n / 2 - 1] + s[n / 2]) / 2.0,
    }
}

fn build_net(model: Model, classify: bool, seed: u64) -> Network {
    match (model, classify) {
        (Model::Classical, true) => Network::classical_classifier(seed),
        (Model::Hybrid, true) => Network::hybrid_classifier(seed),
        (Model::Classical, false) => Network::classical_regressor(seed),
        (Model::Hybrid, false) => Network::hybrid_regressor(seed),
    }
}

fn model_name(m: Model) -> String {
    match m {
        Model::Classical => "classical".into(),
        Model::Hybrid => "hybrid".into(),
    }
}

fn cmd_classify(a: &ClassifyArgs) -> Result<(Vec<u64>, Vec<String>), CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    if a.train_size == 0 || a.train_size + a.test_size > a.samples {
        return Err(CliError::Usage(format!(
            "train size {} plus test size {} must fit in {} samples",
            a.train_size, a.test_size, a.samples
        )));
    }
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::classification()
    };
    config.validate()?;
    hqnn::make_circles(a.samples, a.noise, a.factor, a.seed)?;
    let hist_dir = a.out.join("history");
    prepare_out(&hist_dir)?;

    let seeds: Vec<u64> = (0..a.repeats as u64).map(|r| a.seed + r).collect();
    let runs: Vec<(ClassifyRepeat, PathBuf)> = seeds
        .par_iter()
        .map(|&seed| -> Result<_, CliError> {
            let data = hqnn::make_circles(a.samples, a.noise, a.factor, seed)?;
            let (train, test) = data.split(a.train_size, a.test_size, seed)?;
            let (train, test) = train.normalize_with(NormMethod::MinMax, &[&test])?;
            let mut net = build_net(a.model, true, seed);
            let cfg = TrainConfig { seed, ..config.clone() };
            let history = hqnn::train_on(&mut net, &train, &test[0], &cfg)?;
            let path = hist_dir.join(format!("seed{seed}.csv"));
            hqnn::write_history_csv(&path, &history).map_err(|e| CliError::Failure(e.to_string()))?;
            let last = history.last().expect("epochs >= 1");
            Ok((
                ClassifyRepeat {
                    seed,
                    final_accuracy: last.test_metric,
                    final_train_loss: last.train_loss,
                },
                path,
            ))
        })
        .collect::<Result<_, _>>()?;

    let accs: Vec<f64> = runs.iter().map(|(r, _)| r.final_accuracy).collect();
    let (mean, stddev) = mean_std(&accs);
    let summary = ClassifySummary {
        model: model_name(a.model),
        train_size: a.train_size,
        per_repeat: runs.iter().map(|(r, _)| r.clone()).collect(),
        mean,
        stddev,
        median: median(&accs),
    };
    let json = a.out.join("summary.json");
    write_json(&json, &summary)?;
    let mut artifacts = vec![rel(&a.out, &json)];
    artifacts.extend(runs.iter().map(|(_, p)| rel(&a.out, p)));
    Ok((seeds, artifacts))
}

// ---------------------------------------------------------------- regress

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressRepeat {
    pub train_size: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub test_mae: f64,
    pub first_train_loss: f64,
    pub final_train_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub train_size: usize,
    pub repeats: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressSummary {
    pub model: String,
    pub per_repeat: Vec<RegressRepeat>,
    /// Test MSE statistics at the largest training size.
    pub mean: f64,
    pub stddev: f64,
    pub mean_mae: f64,
    pub sweep: Vec<SweepPoint>,
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once('-') {
            let lo: usize = lo.trim().parse().map_err(|_| CliError::Usage(format!("bad {what}: '{part}'")))?;
            let hi: usize = hi.trim().parse().map_err(|_| CliError::Usage(format!("bad {what}: '{part}'")))?;
            if lo > hi {
                return Err(CliError::Usage(format!("bad {what}: '{part}'")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| CliError::Usage(format!("bad {what}: '{part}'")))?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("empty {what}")));
    }
    Ok(out)
}

fn cmd_regress(a: &RegressArgs) -> Result<(Vec<u64>, Vec<String>), CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let features: Vec<&str> = a.features.split(',').map(str::trim).filter(|f| !f.is_empty()).collect();
    if features.len() != 2 {
        return Err(CliError::Usage(format!("need exactly two feature columns, got {}", features.len())));
    }
    let method = match a.normalization {
        NormArg::Minmax => NormMethod::MinMax,
        NormArg::Zscore => NormMethod::ZScore,
    };
    let data: Dataset = match &a.data_csv {
        Some(p) => hqnn::load_csv_dataset(p, &features, &a.target, method)?,
        None => {
            let raw = hqnn::synthetic_housing(a.synthetic_rows, a.seed)?;
            raw.normalize_with(method, &[])?.0
        }
    };
    let n_test = ((data.len() as f64) * 0.2).round() as usize;
    let pool = data.len() - n_test;
    let sizes = match &a.train_sizes {
        Some(s) => parse_list(s, "train sizes")?,
        None => vec![pool],
    };
    if let Some(bad) = sizes.iter().find(|&&s| s == 0 || s > pool) {
        return Err(CliError::Usage(format!("train size {bad} outside 1..={pool}")));
    }
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::regression()
    };
    config.validate()?;
    let hist_dir = a.out.join("history");
    prepare_out(&hist_dir)?;

    let seeds: Vec<u64> = (0..a.repeats as u64).map(|r| a.seed + r).collect();
    let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&s| seeds.iter().map(move |&r| (s, r))).collect();
    let runs: Vec<(RegressRepeat, PathBuf)> = jobs
        .par_iter()
        .map(|&(size, seed)| -> Result<_, CliError> {
            let (train, test) = data.split(pool, n_test, seed)?;
            let train = train.subset(&(0..size).collect::<Vec<_>>());
            let mut net = build_net(a.model, false, seed);
            let cfg = TrainConfig { seed, ..config.clone() };
            let history = hqnn::train_on(&mut net, &train, &test, &cfg)?;
            let path = hist_dir.join(format!("size{size}_seed{seed}.csv"));
            hqnn::write_history_csv(&path, &history).map_err(|e| CliError::Failure(e.to_string()))?;
            Ok((
                RegressRepeat {
                    train_size: size,
                    seed,
                    test_mse: hqnn::evaluate_metrics(&net, &test, Metric::Mse)?,
                    test_mae: hqnn::evaluate_metrics(&net, &test, Metric::Mae)?,
                    first_train_loss: history[0].train_loss,
                    final_train_loss: history.last().expect("epochs >= 1").train_loss,
                },
                path,
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut sorted = sizes.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let sweep: Vec<SweepPoint> = sorted
        .iter()
        .map(|&s| {
            let mse: Vec<f64> = runs.iter().filter(|(r, _)| r.train_size == s).map(|(r, _)| r.test_mse).collect();
            let mae: Vec<f64> = runs.iter().filter(|(r, _)| r.train_size == s).map(|(r, _)| r.test_mae).collect();
            let (mean_mse, std_mse) = mean_std(&mse);
            SweepPoint {
                train_size: s,
                repeats: mse.len(),
                mean_mse,
                std_mse,
                mean_mae: mean_std(&mae).0,
            }
        })
        .collect();
    let last = sweep.last().expect("non-empty sweep");
    let summary = RegressSummary {
        model: model_name(a.model),
        per_repeat: runs.iter().map(|(r, _)| r.clone()).collect(),
        mean: last.mean_mse,
        stddev: last.std_mse,
        mean_mae: last.mean_mae,
        sweep: sweep.clone(),
    };
    let json = a.out.join("summary.json");
    write_json(&json, &summary)?;
    let sweep_csv = a.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&sweep_csv).map_err(|e| write_err(&sweep_csv, e))?;
    for p in &sweep {
        w.serialize(p).map_err(|e| write_err(&sweep_csv, e))?;
    }
    w.flush().map_err(|e| write_err(&sweep_csv, e))?;
    let mut artifacts = vec![rel(&a.out, &json), rel(&a.out, &sweep_csv)];
    artifacts.extend(runs.iter().map(|(_, p)| rel(&a.out, p)));
    Ok((seeds, artifacts))
}

// ---------------------------------------------------------------- poisson

/// One row of `bench.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub d: usize,
    pub points: u128,
    pub wall_ms: f64,
    pub residual: f64,
    pub max_rank: Option<usize>,
    pub rel_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub dim: usize,
    pub rows: Vec<BenchRow>,
    /// TT sweeps or CG iterations, aligned with `rows`.
    pub iterations: Vec<usize>,
    /// Largest deviation from `x(1-x)/2` per 1D level.
    pub max_abs_error: Vec<(usize, f64)>,
    /// Peak resident set of the process, when the platform reports it.
    pub peak_rss_mb: Option<f64>,
}

/// `VmHWM` from `/proc/self/status`.
pub fn peak_rss_mb() -> Option<f64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

fn write_grid(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut text = String::with_capacity(values.len() * 24);
    for v in values {
        text.push_str(&format!("{v:e}\n"));
    }
    fs::write(path, text).map_err(|e| write_err(path, e))
}

fn cmd_poisson(a: &PoissonArgs) -> Result<Vec<String>, CliError> {
    let levels = parse_list(&a.levels, "levels")?;
    let mut want_tt = false;
    let mut want_cg = false;
    for m in a.methods.split(',').map(str::trim) {
        match m {
            "tt" => want_tt = true,
            "cg" => want_cg = true,
            other => return Err(CliError::Usage(format!("unknown method '{other}', expected tt or cg"))),
        }
    }
    for &d in &levels {
        PoissonProblem::new(a.dim, d)?;
        if d < 2 && want_tt {
            return Err(CliError::Usage("the TT Laplacian needs levels >= 2".into()));
        }
        if want_cg {
            let points = 1u128 << (a.dim * d).min(127);
            if points > CG_MAX_POINTS as u128 {
                return Err(CliError::Usage(format!("cg on {points} points exceeds the dense bound of {CG_MAX_POINTS}")));
            }
        }
    }
    let solve = SolveConfig {
        tolerance: a.tol,
        max_sweeps: a.max_sweeps,
        max_rank: a.max_rank,
        enrichment: a.enrichment,
        ..SolveConfig::default()
    };
    prepare_out(&a.out)?;
    let mut rows = Vec::new();
    let mut iterations = Vec::new();
    let mut max_abs_error = Vec::new();
    let mut artifacts = Vec::new();

    for &d in &levels {
        let problem = PoissonProblem::new(a.dim, d)?;
        let cores = problem.num_cores();
        let mut tt_dense = None;
        if want_tt {
            let op = problem.operator()?;
            let b = tensornet::ones_tt(cores);
            let t = Instant::now();
            let sol = tensornet::amen_solve(&op, &b, &solve)?;
            let wall_ms = t.elapsed().as_secs_f64() * 1e3;
            rows.push(BenchRow {
                method: "tt".into(),
                d,
                points: problem.points(),
                wall_ms,
                residual: sol.residual,
                max_rank: Some(sol.solution.max_rank()),
                rel_diff: None,
            });
            iterations.push(sol.sweeps);
            if cores <= MAX_DENSE_CORES && (want_cg || a.dim == 1 || a.export_solution) {
                tt_dense = Some(tensornet::tt_to_dense(&sol.solution)?);
            }
            if a.dim == 1 {
                let u = tt_dense.as_ref().expect("1D grids are small");
                let err = u
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let x = problem.coordinate(k);
                        (v - x * (1.0 - x) / 2.0).abs()
                    })
                    .fold(0.0, f64::max);
                max_abs_error.push((d, err));
            }
            if a.export_solution && cores <= 20 {
                if let Some(u) = &tt_dense {
                    let p = a.out.join(format!("solution_tt_d{d}.csv"));
                    write_grid(&p, u)?;
                    artifacts.push(rel(&a.out, &p));
                }
            }
        }
        if want_cg {
            let t = Instant::now();
            let sol = tensornet::cg_solve(a.dim, d, 1.0, a.tol, a.cg_max_iters)?;
            let wall_ms = t.elapsed().as_secs_f64() * 1e3;
            let rel_diff = tt_dense.as_ref().map(|u| {
                let num: f64 = u.iter().zip(&sol.solution).map(|(x, y)| (x - y).powi(2)).sum();
                let den: f64 = sol.solution.iter().map(|y| y * y).sum();
                (num / den).sqrt()
            });
            if let (Some(r), Some(tt_row)) = (rel_diff, rows.last_mut()) {
                tt_row.rel_diff = Some(r);
            }
            rows.push(BenchRow {
                method: "cg".into(),
                d,
                points: problem.points(),
                wall_ms,
                residual: sol.residual,
                max_rank: None,
                rel_diff,
            });
            iterations.push(sol.iterations);
            if a.export_solution && cores <= 20 {
                let p = a.out.join(format!("solution_cg_d{d}.csv"));
                write_grid(&p, &sol.solution)?;
                artifacts.push(rel(&a.out, &p));
            }
        }
    }

    let csv_path = a.out.join("bench.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| write_err(&csv_path, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| write_err(&csv_path, e))?;
    }
    w.flush().map_err(|e| write_err(&csv_path, e))?;
    let report = PoissonReport {
        dim: a.dim,
        rows,
        iterations,
        max_abs_error,
        peak_rss_mb: peak_rss_mb(),
    };
    let json = a.out.join("result.json");
    write_json(&json, &report)?;
    artifacts.insert(0, rel(&a.out, &json));
    artifacts.insert(0, rel(&a.out, &csv_path));
    Ok(artifacts)
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 internal
//! invariant breach, 5 engines diverge (`check`), 6 oracle pair budget
//! exceeded.

use std::fs::File;
use std::io::{BufReader, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::io::{
    parse_clustering, write_clustering, write_report, Fixed, Format, ParseError, ReportDocument,
    ReportStyle,
};
use crate::model::{validate, CoverageMode, EvalPair, FullReport, Interner, Measure, Role};
use crate::oracle::{self, pair_demand, OracleError, DEFAULT_PAIR_BUDGET};
use crate::single_pass;
use crate::synth::{generate, SynthConfig};
use crate::{evaluate_all, evaluate_one, Engine};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;
pub const EXIT_DIVERGENT: i32 = 5;
pub const EXIT_PAIR_BUDGET: i32 = 6;

/// Largest absolute difference tolerated between engines by `check`.
pub const CHECK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "clustereval",
    version,
    about = "Evaluate predicted clusterings against truth"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a predicted clustering against a truth clustering.
    Evaluate(EvaluateArgs),
    /// Run both engines and compare their results.
    Check(CheckArgs),
    /// Write a synthetic truth/predicted pair.
    Gen(GenArgs),
    /// Time the engines on synthetic data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    #[value(name = "single_pass", alias = "single-pass")]
    SinglePass,
    Oracle,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::SinglePass => Engine::SinglePass,
            EngineArg::Oracle => Engine::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchEngineArg {
    #[value(name = "single_pass", alias = "single-pass")]
    SinglePass,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    All,
    ClusterF,
    KMetric,
    SeLe,
    Pairwise,
    BCubed,
}

impl MeasureArg {
    fn measure(self) -> Option<Measure> {
        match self {
            MeasureArg::All => None,
            MeasureArg::ClusterF => Some(Measure::ClusterF),
            MeasureArg::KMetric => Some(Measure::KMetric),
            MeasureArg::SeLe => Some(Measure::SeLe),
            MeasureArg::Pairwise => Some(Measure::Pairwise),
            MeasureArg::BCubed => Some(Measure::BCubed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoverageArg {
    Strict,
    Lenient,
}

impl From<CoverageArg> for CoverageMode {
    fn from(c: CoverageArg) -> Self {
        match c {
            CoverageArg::Strict => CoverageMode::Strict,
            CoverageArg::Lenient => CoverageMode::Lenient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Clusters,
    Pairs,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => Format::Auto,
            FormatArg::Clusters => Format::ClusterLines,
            FormatArg::Pairs => Format::MembershipPairs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Machine,
    Table,
}

impl From<OutputArg> for ReportStyle {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Machine => ReportStyle::Machine,
            OutputArg::Table => ReportStyle::Table,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Truth clustering file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Predicted clustering file.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "strict")]
    pub coverage: CoverageArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: FormatArg,
    /// Maximum number of pairs the oracle may materialise.
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    pub pair_budget: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value = "single_pass")]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value = "table")]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Random pairs to check when no input files are given.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Largest instance count for random pairs.
    #[arg(long, default_value_t = 100)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 0.1)]
    pub split: f64,
    #[arg(long, default_value_t = 0.1)]
    pub merge: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_truth: PathBuf,
    #[arg(long)]
    pub out_pred: PathBuf,
    #[arg(long, value_enum, default_value = "clusters")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance counts to benchmark, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "single_pass")]
    pub engine: BenchEngineArg,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Average truth cluster size; the cluster count is N divided by this.
    #[arg(long, default_value_t = 80)]
    pub mean_cluster_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 0.1)]
    pub split: f64,
    #[arg(long, default_value_t = 0.1)]
    pub merge: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    pub pair_budget: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub output: OutputArg,
}

/// A failure carrying its exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::new(EXIT_PAIR_BUDGET, e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let result = panic::catch_unwind(AssertUnwindSafe(|| dispatch(cli.command, out, err)));
    let outcome = match result {
        Ok(r) => r,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            Err(Failure::new(
                EXIT_INTERNAL,
                format!("internal error: {msg}"),
            ))
        }
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_PARSE, format!("write failed: {e}"))
}

fn read_clustering(
    path: &Path,
    format: Format,
    role: Role,
    interner: &mut Interner,
) -> Result<crate::model::Clustering, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    parse_clustering(BufReader::new(file), format, role, interner).map_err(|e| {
        let code = match e {
            ParseError::Model(_) => EXIT_VALIDATION,
            _ => EXIT_PARSE,
        };
        Failure::new(code, format!("{}: {e}", path.display()))
    })
}

fn load_pair(input: &InputArgs) -> Result<EvalPair, Failure> {
    let (Some(truth), Some(pred)) = (&input.truth, &input.pred) else {
        return Err(Failure::new(
            EXIT_PARSE,
            "both --truth and --pred are required",
        ));
    };
    let mut interner = Interner::new();
    let format = Format::from(input.format);
    let t = read_clustering(truth, format, Role::Truth, &mut interner)?;
    let p = read_clustering(pred, format, Role::Predicted, &mut interner)?;
    validate(t, p, input.coverage.into())
        .map_err(|e| Failure::new(EXIT_VALIDATION, e.describe(&interner)))
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let pair = load_pair(&args.input)?;
    let engine = Engine::from(args.engine);
    let coverage = pair.mode();
    let start = Instant::now();
    let doc = match args.measure.measure() {
        None => {
            let report = evaluate_all(&pair, engine, args.input.pair_budget)?;
            ReportDocument::from_full(&report, engine, coverage)
        }
        Some(m) => {
            let (outcome, flags) = evaluate_one(&pair, m, engine, args.input.pair_budget)?;
            ReportDocument::from_single(m, &outcome, &flags, engine, coverage)
        }
    };
    let doc = doc.with_timing(start.elapsed().as_secs_f64());
    out.write_all(write_report(&doc, args.output.into()).as_bytes())
        .map_err(io_failure)?;
    Ok(EXIT_OK)
}

/// Compares the two engines on one pair. `Ok(None)` means they agree.
pub fn compare_engines(
    pair: &EvalPair,
    pair_budget: u64,
) -> Result<Option<(FullReport, FullReport)>, OracleError> {
    let fast = single_pass::eval_all(pair);
    let slow = oracle::oracle_all(pair, pair_budget)?;
    let agree = fast.max_abs_diff(&slow) <= CHECK_TOLERANCE
        && fast.stats == slow.stats
        && fast.flags == slow.flags;
    Ok(if agree { None } else { Some((fast, slow)) })
}

/// Random generator settings for the `index`-th randomized check.
pub fn random_check_config(seed: u64, index: u64, max_n: usize) -> SynthConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = rng.random_range(1..=max_n.max(1));
    SynthConfig {
        n_instances: n,
        n_truth_clusters: rng.random_range(1..=n),
        size_skew: rng.random_range(0.0..2.5),
        split_rate: rng.random_range(0.0..=1.0),
        merge_rate: rng.random_range(0.0..=1.0),
        seed: rng.random(),
    }
}

pub fn cmd_check(
    args: &CheckArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let divergent = |fast: &FullReport, slow: &FullReport, pair: &EvalPair, err: &mut dyn Write| {
        let _ = writeln!(
            err,
            "engines diverge (max difference {:e})",
            fast.max_abs_diff(slow)
        );
        for (engine, r) in [(Engine::SinglePass, fast), (Engine::Oracle, slow)] {
            let doc = ReportDocument::from_full(r, engine, pair.mode());
            let _ = err.write_all(write_report(&doc, ReportStyle::Machine).as_bytes());
        }
        EXIT_DIVERGENT
    };

    if args.input.truth.is_some() || args.input.pred.is_some() {
        let pair = load_pair(&args.input)?;
        return match compare_engines(&pair, args.input.pair_budget)? {
            None => {
                writeln!(out, "engines agree within {CHECK_TOLERANCE:e}").map_err(io_failure)?;
                Ok(EXIT_OK)
            }
            Some((fast, slow)) => Ok(divergent(&fast, &slow, &pair, err)),
        };
    }

    for k in 0..args.trials {
        let config = random_check_config(args.seed, k, args.max_n);
        let pair = generate(&config).map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
        if let Some((fast, slow)) = compare_engines(&pair, args.input.pair_budget)? {
            let _ = writeln!(err, "trial {k}: {config:?}");
            return Ok(divergent(&fast, &slow, &pair, err));
        }
    }
    writeln!(
        out,
        "{} random pairs (N <= {}, seed {}): engines agree within {CHECK_TOLERANCE:e}",
        args.trials, args.max_n, args.seed
    )
    .map_err(io_failure)?;
    Ok(EXIT_OK)
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let config = SynthConfig {
        n_instances: args.n,
        n_truth_clusters: args.clusters,
        size_skew: args.skew,
        split_rate: args.split,
        merge_rate: args.merge,
        seed: args.seed,
    };
    let pair = generate(&config).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let labels = Interner::numeric(args.n);
    let format = Format::from(args.format);
    for (path, clustering) in [
        (&args.out_truth, pair.truth()),
        (&args.out_pred, pair.predicted()),
    ] {
        std::fs::write(path, write_clustering(clustering, &labels, format))
            .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    }
    writeln!(
        out,
        "wrote {} truth clusters and {} predicted clusters over {} instances",
        pair.truth().n_clusters(),
        pair.predicted().n_clusters(),
        args.n
    )
    .map_err(io_failure)?;
    Ok(EXIT_OK)
}

/// Best, mean and standard deviation of repeated wall-clock timings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timings {
    pub best: Fixed,
    pub mean: Fixed,
    pub std_dev: Fixed,
}

pub fn time_repeated(repeats: usize, mut f: impl FnMut()) -> Timings {
    let repeats = repeats.max(1);
    let samples: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    let best = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = samples.iter().sum::<f64>() / repeats as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / repeats as f64;
    Timings {
        best: Fixed(best),
        mean: Fixed(mean),
        std_dev: Fixed(var.sqrt()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub engine: Engine,
    pub measure: String,
    pub timings: Timings,
}

fn measure_key(m: Option<Measure>) -> &'static str {
    match m {
        None => "all_in_one",
        Some(Measure::ClusterF) => "cluster_f",
        Some(Measure::KMetric) => "k_metric",
        Some(Measure::SeLe) => "se_le",
        Some(Measure::Pairwise) => "pairwise",
        Some(Measure::BCubed) => "b_cubed",
    }
}

/// Times every measure and the all-in-one pass for one engine.
pub fn bench_pair(pair: &EvalPair, engine: Engine, repeats: usize, budget: u64) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    let measures = Measure::ALL.into_iter().map(Some).chain([None]);
    for m in measures {
        let timings = time_repeated(repeats, || match m {
            Some(m) => {
                std::hint::black_box(
                    evaluate_one(pair, m, engine, budget).expect("budget checked"),
                );
            }
            None => {
                std::hint::black_box(evaluate_all(pair, engine, budget).expect("budget checked"));
            }
        });
        rows.push(BenchRow {
            n: pair.n_instances(),
            engine,
            measure: measure_key(m).to_owned(),
            timings,
        });
    }
    rows
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let engines: Vec<Engine> = match args.engine {
        BenchEngineArg::SinglePass => vec![Engine::SinglePass],
        BenchEngineArg::Oracle => vec![Engine::Oracle],
        BenchEngineArg::Both => vec![Engine::SinglePass, Engine::Oracle],
    };
    let mean_size = args.mean_cluster_size.max(1);
    let configs: Vec<SynthConfig> = args
        .sizes
        .iter()
        .map(|&n| SynthConfig {
            n_instances: n,
            n_truth_clusters: (n / mean_size).max(1),
            size_skew: args.skew,
            split_rate: args.split,
            merge_rate: args.merge,
            seed: args.seed,
        })
        .collect();

    let mut pairs = Vec::with_capacity(configs.len());
    for c in &configs {
        let pair = generate(c).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
        if engines.contains(&Engine::Oracle) {
            let needed = pair_demand(&pair);
            if needed > args.pair_budget {
                return Err(OracleError::PairBudgetExceeded {
                    needed,
                    budget: args.pair_budget,
                }
                .into());
            }
        }
        pairs.push(pair);
    }

    let mut rows = Vec::new();
    for pair in &pairs {
        for &engine in &engines {
            rows.extend(bench_pair(pair, engine, args.repeats, args.pair_budget));
        }
    }

    let text = match args.output {
        OutputArg::Machine => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        OutputArg::Table => {
            let mut s = format!(
                "{:>10} {:<12} {:<11} {:>12} {:>12} {:>12}\n",
                "N", "engine", "measure", "best_s", "mean_s", "std_s"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:>10} {:<12} {:<11} {:>12.6} {:>12.6} {:>12.6}\n",
                    r.n,
                    r.engine.name(),
                    r.measure,
                    r.timings.best.0,
                    r.timings.mean.0,
                    r.timings.std_dev.0
                ));
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(io_failure)?;
    Ok(EXIT_OK)
}

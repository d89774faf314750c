use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sampled_eigen::blowup::{blowup_experiment, BlowupConfig, RateSchedule};
use sampled_eigen::estimator::{
    estimate, variance_bound, xi, AverageGauge, AveragingPlan,
};
use sampled_eigen::experiments::{
    load_edge_list, power_law_graph, speedup_harness, sweep_alignment, sweep_pagerank,
    sweep_samples, synth_symmetric, write_edge_list, PagerankSweepConfig, PowerLawSpec,
    RankSubsample, SweepConfig, SyntheticSpec, WebGraph, DEFAULT_DAMPING,
};
use sampled_eigen::incoherence::{bounds_report, BoundConfig, SpectralModel};
use sampled_eigen::matrix::market;
use sampled_eigen::matrix::DenseSymmetric;
use sampled_eigen::Error;

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "sampled-eigen", version, about = "Eigenvectors from averaged subsampled copies")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    out_format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Gauge {
    AvgNorm,
    NormAvg,
}

impl From<Gauge> for AverageGauge {
    fn from(g: Gauge) -> Self {
        match g {
            Gauge::AvgNorm => AverageGauge::AvgNorm,
            Gauge::NormAvg => AverageGauge::NormAvg,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    DampedMatrix,
    Adjacency,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Incoherence, error bounds and admissibility of a symmetric matrix.
    Bounds(BoundsArgs),
    /// Averaged eigenvector estimate.
    Estimate(EstimateArgs),
    /// Alignment against the ground truth over a grid of sampling rates.
    Sweep(SweepArgs),
    /// Ranking correlation of averaged PageRank vectors.
    PagerankSweep(PagerankArgs),
    /// Diagonal of CᵀC/n and ‖C/√n‖₂ at sparse sampling rates.
    Blowup(BlowupArgs),
    /// Timing of subsample-then-eigensolve against a full eigensolve.
    Speedup(SpeedupArgs),
    /// Write a synthetic symmetric matrix in Matrix Market format.
    Synth(SynthArgs),
    /// Write a preferential-attachment graph as an edge list.
    GenGraph(GraphArgs),
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    /// Matrix Market input; a synthetic matrix is generated when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.3,0.2,0.1")]
    spectrum: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    supports: Option<Vec<usize>>,
    #[arg(long)]
    gap_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    source: SyntheticArgs,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    ratio_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Gauge::AvgNorm)]
    gauge: Gauge,
    /// Compare against the dense eigendecomposition of the input.
    #[arg(long)]
    truth: bool,
    /// Full JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SyntheticArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.125")]
    p_grid: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Gauge::AvgNorm)]
    gauge: Gauge,
    /// Skip the per-draw ‖E‖₂ check.
    #[arg(long)]
    no_pert: bool,
    /// Sweep the sample count at rate --p instead of the rate.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.01)]
    p: f64,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 500)]
    nodes: usize,
    #[arg(long, default_value_t = 5)]
    out_degree: usize,
    #[arg(long, default_value_t = 0.1)]
    dangling: f64,
    /// Edge-list output; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PagerankArgs {
    /// Edge list; a power-law graph is generated when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    nodes: usize,
    #[arg(long, default_value_t = 5)]
    out_degree: usize,
    #[arg(long, default_value_t = 0.1)]
    dangling: f64,
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    c: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.5,0.75,1")]
    p_grid: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Variant::DampedMatrix)]
    variant: Variant,
    /// Also report the fraction of draws with ‖E‖₂ < (1−c)/2.
    #[arg(long)]
    pert: bool,
}

#[derive(Debug, Args)]
struct BlowupArgs {
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, value_delimiter = ',', default_value = "1024,2048,4096,8192")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    draws: usize,
    /// Use p = (ln n)²/n instead of (ln n)^{1−δ}/n.
    #[arg(long)]
    contrast: bool,
    /// Also write the per-draw rows here as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpeedupArgs {
    #[command(flatten)]
    source: SyntheticArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.2,0.1,0.05,0.02,0.01")]
    p_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.3,0.2,0.1")]
    spectrum: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    supports: Option<Vec<usize>>,
    #[arg(long)]
    gap_ratio: Option<f64>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Output(String),
    /// The reader of stdout went away; not an error for a filter.
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => Failure::Closed,
            e => Failure::Core(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Output(e.to_string())
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => Failure::Closed,
            _ => Failure::Output(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Output(e.to_string())
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Closed => 0,
        Failure::Output(_) | Failure::Core(Error::Io(_)) => EXIT_IO,
        Failure::Core(Error::Parse { .. } | Error::NodeIdOverflow { .. }) => EXIT_PARSE,
        Failure::Core(e) if e.is_no_convergence() => EXIT_NO_CONVERGENCE,
        Failure::Core(_) => EXIT_INFEASIBLE,
    }
}

type Run = Result<(), Failure>;

fn emit<T: Serialize>(rows: &[T], format: OutFormat, mut out: impl Write) -> Run {
    match format {
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn stdout_rows<T: Serialize>(rows: &[T], format: OutFormat) -> Run {
    emit(rows, format, std::io::stdout().lock())
}

fn load_symmetric(path: &Path) -> Result<DenseSymmetric, Error> {
    market::read_path(path)?.to_dense_symmetric()
}

fn matrix_and_model(
    src: &SyntheticArgs,
    seed: u64,
) -> Result<(DenseSymmetric, SpectralModel), Error> {
    match &src.input {
        Some(path) => {
            let m = load_symmetric(path)?;
            let model = SpectralModel::from_dense(&m)?;
            Ok((m, model))
        }
        None => synth_symmetric(&SyntheticSpec {
            n: src.n,
            spectrum: src.spectrum.clone(),
            support_sizes: src.supports.clone(),
            gap_ratio: src.gap_ratio,
            seed,
        }),
    }
}

#[derive(Serialize)]
struct BoundsRow {
    p: f64,
    k: usize,
    mu: f64,
    alpha_min: f64,
    bound_am07: f64,
    bound_incoherence: f64,
    admissible: bool,
    margin: f64,
    hypotheses_ok: bool,
    xi: f64,
    variance_relaxed: f64,
}

fn run_bounds(cli: &Cli, a: &BoundsArgs) -> Run {
    let (_, model) = matrix_and_model(&a.source, cli.seed)?;
    let cfg = BoundConfig {
        ratio_threshold: a.ratio_threshold,
        delta: a.delta,
    };
    let rep = bounds_report(&model, a.p, a.k, &cfg)?;
    let row = BoundsRow {
        p: a.p,
        k: a.k,
        mu: rep.mu,
        alpha_min: rep.alpha_min,
        bound_am07: rep.bound_am07,
        bound_incoherence: rep.bound_incoherence,
        admissible: rep.admissible,
        margin: rep.margin,
        hypotheses_ok: rep.hypotheses_ok,
        xi: xi(&model, a.p),
        variance_relaxed: variance_bound(&model, a.p)?.relaxed_bound,
    };
    stdout_rows(&[row], cli.out_format)
}

#[derive(Serialize)]
struct EstimateRow {
    p: f64,
    samples: usize,
    k: usize,
    gauge: &'static str,
    mean_sample_eigenvalue: f64,
    alignment: Option<f64>,
    error: Option<f64>,
    xi: Option<f64>,
    d: Option<f64>,
    predicted_error: Option<f64>,
    strong_condition_ok: Option<bool>,
}

fn run_estimate(cli: &Cli, a: &EstimateArgs) -> Run {
    let m = load_symmetric(&a.input)?;
    let truth = if a.truth {
        Some(SpectralModel::from_dense(&m)?)
    } else {
        None
    };
    let plan = AveragingPlan {
        k: a.k,
        gauge: a.gauge.into(),
        workers: cli.workers,
        ..AveragingPlan::new(a.p, a.samples, cli.seed)
    };
    let rep = estimate(&m, &plan, truth.as_ref())?;
    if let Some(path) = &a.report {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, &rep)?;
    }
    let lam = &rep.sample_eigenvalues;
    let row = EstimateRow {
        p: rep.p,
        samples: rep.num_samples,
        k: rep.k,
        gauge: match rep.gauge {
            AverageGauge::AvgNorm => "avg-norm",
            AverageGauge::NormAvg => "norm-avg",
        },
        mean_sample_eigenvalue: lam.iter().sum::<f64>() / lam.len() as f64,
        alignment: rep.alignment,
        error: rep.error,
        xi: rep.xi,
        d: rep.d,
        predicted_error: rep.predicted_error,
        strong_condition_ok: rep.strong_condition_ok,
    };
    stdout_rows(&[row], cli.out_format)
}

fn run_sweep(cli: &Cli, a: &SweepArgs) -> Run {
    let (m, model) = matrix_and_model(&a.source, cli.seed)?;
    let cfg = SweepConfig {
        k: a.k,
        gauge: a.gauge.into(),
        workers: cli.workers,
        pert: !a.no_pert,
        ..SweepConfig::new(a.p_grid.clone(), a.samples, cli.seed)
    };
    match &a.counts {
        Some(counts) => stdout_rows(&sweep_samples(&m, &model, a.p, counts, &cfg)?, cli.out_format),
        None => stdout_rows(&sweep_alignment(&m, &model, &cfg)?, cli.out_format),
    }
}

fn generated_graph(nodes: usize, out_degree: usize, dangling: f64, seed: u64) -> Result<WebGraph, Error> {
    power_law_graph(&PowerLawSpec {
        n: nodes,
        out_degree,
        dangling_fraction: dangling,
        seed,
    })
}

fn run_pagerank(cli: &Cli, a: &PagerankArgs) -> Run {
    let g = match &a.graph {
        Some(path) => load_edge_list(path)?,
        None => generated_graph(a.nodes, a.out_degree, a.dangling, cli.seed)?,
    };
    let cfg = PagerankSweepConfig {
        c: a.c,
        variant: match a.variant {
            Variant::DampedMatrix => RankSubsample::DampedMatrix,
            Variant::Adjacency => RankSubsample::Adjacency,
        },
        workers: cli.workers,
        pert: a.pert,
        ..PagerankSweepConfig::new(a.p_grid.clone(), a.samples, cli.seed)
    };
    stdout_rows(&sweep_pagerank(&g, &cfg)?.rows, cli.out_format)
}

#[derive(Serialize)]
struct BlowupRow {
    n: usize,
    p: f64,
    draw: usize,
    #[serde(rename = "max_T_over_n")]
    max_t_over_n: f64,
    opnorm: f64,
    k_over_2np: f64,
    tail_lower_bound_log: f64,
}

fn run_blowup(cli: &Cli, a: &BlowupArgs) -> Run {
    let cfg = BlowupConfig {
        schedule: if a.contrast {
            RateSchedule::LogSquared
        } else {
            RateSchedule::Blowup
        },
        ..BlowupConfig::new(a.delta, a.n_grid.clone(), a.draws, cli.seed)
    };
    let traces = run_in_pool(cli.workers, || blowup_experiment(&cfg))?;
    let rows: Vec<BlowupRow> = traces
        .iter()
        .map(|t| BlowupRow {
            n: t.n,
            p: t.p,
            draw: t.draw,
            max_t_over_n: t.max_t_over_n,
            opnorm: t.opnorm_estimate,
            k_over_2np: t.k_over_2np,
            tail_lower_bound_log: t.tail_lower_bound_log,
        })
        .collect();
    if let Some(path) = &a.csv {
        emit(&rows, OutFormat::Csv, std::fs::File::create(path)?)?;
    }
    stdout_rows(&rows, cli.out_format)
}

fn run_in_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Failure> {
    match workers {
        None => Ok(f()?),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f)?)
        }
    }
}

fn run_speedup(cli: &Cli, a: &SpeedupArgs) -> Run {
    let (m, _) = matrix_and_model(&a.source, cli.seed)?;
    stdout_rows(&speedup_harness(&m, &a.p_grid, a.reps, cli.seed)?, cli.out_format)
}

#[derive(Serialize)]
struct SynthRow {
    n: usize,
    rank: usize,
    lambda1: f64,
    separation: f64,
    mu: f64,
    alpha_min: f64,
}

fn run_synth(cli: &Cli, a: &SynthArgs) -> Run {
    let (m, model) = synth_symmetric(&SyntheticSpec {
        n: a.n,
        spectrum: a.spectrum.clone(),
        support_sizes: a.supports.clone(),
        gap_ratio: a.gap_ratio,
        seed: cli.seed,
    })?;
    market::write_dense_symmetric_path(&a.output, &m)?;
    let row = SynthRow {
        n: model.n(),
        rank: model.rank(),
        lambda1: model.eigenvalue(0),
        separation: model.separation(0)?,
        mu: sampled_eigen::incoherence::mu(&model),
        alpha_min: model.alpha_min(),
    };
    stdout_rows(&[row], cli.out_format)
}

fn run_gen_graph(cli: &Cli, a: &GraphArgs) -> Run {
    let g = generated_graph(a.nodes, a.out_degree, a.dangling, cli.seed)?;
    match &a.output {
        Some(path) => sampled_eigen::experiments::write_edge_list_path(path, &g)?,
        None => write_edge_list(std::io::stdout().lock(), &g)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Bounds(a) => run_bounds(cli, a),
        Command::Estimate(a) => run_estimate(cli, a),
        Command::Sweep(a) => run_sweep(cli, a),
        Command::PagerankSweep(a) => run_pagerank(cli, a),
        Command::Blowup(a) => run_blowup(cli, a),
        Command::Speedup(a) => run_speedup(cli, a),
        Command::Synth(a) => run_synth(cli, a),
        Command::GenGraph(a) => run_gen_graph(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = exit_code(&f);
            match &f {
                Failure::Core(e) => eprintln!("sampled-eigen: {e}"),
                Failure::Output(msg) => eprintln!("sampled-eigen: {msg}"),
                Failure::Closed => {}
            }
            ExitCode::from(code)
        }
    }
}

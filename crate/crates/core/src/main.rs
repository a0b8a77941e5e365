use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use predassign::assign::{predictive_assign, Model, PipelineConfig};
use predassign::blockmodel::{
    balanced_proportions, dcbm_block_matrix, sample_dcbm, sample_sbm, sbm_block_matrix,
};
use predassign::graph::SparseGraph;
use predassign::harness::{
    benchmark_paired, benchmark_scaling, run_experiment, summarize, summary_csv, write_csv,
    ExperimentConfig, MSpec,
};
use predassign::membership::Membership;
use predassign::metrics::matched_errors;
use predassign::sampling::SubsampleIndex;
use predassign::spectral::SpectralParams;
use predassign::{mem, metrics};

#[global_allocator]
static ALLOC: mem::TrackingAllocator = mem::TrackingAllocator;

/// Community detection on large sparse networks by clustering a sampled
/// subgraph and assigning the remaining nodes independently.
#[derive(Parser)]
#[command(name = "predassign", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic block-model network.
    Generate(GenerateArgs),
    /// Detect communities in an edge-list graph.
    Detect(DetectArgs),
    /// Compare estimated labels against ground truth.
    Eval(EvalArgs),
    /// Timing benchmarks: assignment scaling and full-vs-pipeline pairs.
    Bench(BenchArgs),
    /// Run a config-file experiment grid and write a CSV report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "sbm")]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Block density for sbm; expected graph density for dcbm.
    #[arg(long)]
    alpha: f64,
    /// Homophily factor (diagonal / off-diagonal strength).
    #[arg(long, default_value_t = 3.0)]
    h: f64,
    /// Comma-separated community proportions; balanced when omitted.
    #[arg(long)]
    proportions: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge-list output path.
    #[arg(long)]
    edges_out: PathBuf,
    /// Labels output path; one integer per line, line i labels node i.
    #[arg(long)]
    labels_out: PathBuf,
    /// Degree-parameter output path (dcbm only); one decimal per line.
    #[arg(long)]
    theta_out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input edge-list path.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "sbm")]
    model: String,
    #[arg(long)]
    k: usize,
    /// Subsample size: an integer or n^gamma (e.g. n^0.85).
    #[arg(long)]
    m: String,
    #[arg(long, default_value = "srs")]
    sampler: String,
    #[arg(long, default_value = "sc")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    labels_out: PathBuf,
    /// Also write the selected node set, one id per line.
    #[arg(long)]
    subsample_out: Option<PathBuf>,
    /// Restrict to the largest connected component before detection.
    #[arg(long, default_value_t = false)]
    largest_component: bool,
    #[arg(long, default_value_t = 1e-8)]
    eig_tol: f64,
    #[arg(long, default_value_t = 10)]
    kmeans_restarts: usize,
    /// Laplacian regularizer; defaults to the subgraph mean degree.
    #[arg(long)]
    regularizer: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    truth: PathBuf,
    /// Estimated labels, one integer per line.
    #[arg(long)]
    est: PathBuf,
    /// Subsampled node ids, one per line; all nodes when omitted.
    #[arg(long)]
    subsample: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// "scaling" fits assignment time against n - m; "paired" times the
    /// pipeline against full-network clustering.
    #[arg(long, default_value = "paired")]
    mode: String,
    #[arg(long, default_value = "20000")]
    n: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    h: f64,
    #[arg(long, default_value = "n^0.8")]
    m: String,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Expected mean degree held fixed across the scaling grid.
    #[arg(long, default_value_t = 100.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file (flat key=value format).
    config: PathBuf,
    /// CSV output path; overrides the config's `output`, stdout if neither.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print per-cell mean and standard error.
    #[arg(long, default_value_t = false)]
    summary: bool,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Detect(args) => detect(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let model: Model = args.model.parse()?;
    let proportions = match &args.proportions {
        Some(text) => text
            .split(',')
            .map(|v| v.trim().parse::<f64>().context("bad proportion"))
            .collect::<Result<Vec<f64>>>()?,
        None => balanced_proportions(args.k),
    };
    let (g, labels, theta) = match model {
        Model::Sbm => {
            let omega = sbm_block_matrix(args.k, args.alpha, args.h)?;
            let (g, labels) = sample_sbm(args.n, &omega, &proportions, args.seed)?;
            (g, labels, None)
        }
        Model::Dcbm => {
            let omega0 = dcbm_block_matrix(args.k, 1.0, args.h)?;
            let (g, labels, theta) = sample_dcbm(
                args.n,
                &omega0,
                &proportions,
                args.alpha,
                (1.0, 5.0),
                args.seed,
            )?;
            (g, labels, Some(theta))
        }
    };
    let mut w = BufWriter::new(File::create(&args.edges_out)?);
    g.write_edge_list(&mut w)?;
    w.flush()?;
    write_labels(&args.labels_out, labels.labels())?;
    if let Some(path) = &args.theta_out {
        let theta = theta.ok_or_else(|| anyhow::anyhow!("theta is only produced by dcbm"))?;
        let mut w = BufWriter::new(File::create(path)?);
        for t in theta.theta() {
            writeln!(w, "{t}")?;
        }
        w.flush()?;
    }
    eprintln!(
        "generated {} nodes, {} edges",
        g.node_count(),
        g.edge_count()
    );
    Ok(())
}

fn detect(args: DetectArgs) -> Result<()> {
    let file =
        File::open(&args.graph).with_context(|| format!("cannot open {}", args.graph.display()))?;
    let mut g = SparseGraph::from_edge_list(BufReader::new(file))?;
    if args.largest_component {
        let (sub, nodes) = g.largest_component();
        eprintln!(
            "largest component: {} of {} nodes",
            nodes.len(),
            g.node_count()
        );
        g = sub;
    }
    let m = args.m.parse::<MSpec>()?.resolve(g.node_count());
    let cfg = PipelineConfig {
        model: args.model.parse()?,
        sampler: args.sampler.parse()?,
        m,
        method: args.method.parse()?,
        seed: args.seed,
        threads: args.threads,
        spectral: SpectralParams {
            eig_tol: args.eig_tol,
            kmeans_restarts: args.kmeans_restarts,
            regularizer: args.regularizer,
            ..SpectralParams::default()
        },
    };
    mem::reset_peak();
    let out = predictive_assign(&g, args.k, &cfg)?;
    write_labels(&args.labels_out, out.membership.labels())?;
    if let Some(path) = &args.subsample_out {
        let mut w = BufWriter::new(File::create(path)?);
        for &v in out.subsample.s() {
            writeln!(w, "{v}")?;
        }
        w.flush()?;
    }
    let r = &out.report;
    eprintln!(
        "n={} m={} sample={:.3}s cluster={:.3}s assign={:.3}s total={:.3}s peak_mem={}B fallbacks={}",
        g.node_count(), m, r.t_sample_s, r.t_cluster_s, r.t_assign_s, r.t_total_s,
        r.peak_mem_bytes, r.fallback_count
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let truth = read_labels(&args.truth)?;
    let est = read_labels(&args.est)?;
    if truth.len() != est.len() {
        bail!(
            "label files differ in length: {} vs {}",
            truth.len(),
            est.len()
        );
    }
    let n = truth.len();
    let k = truth
        .iter()
        .chain(&est)
        .map(|&l| l as usize + 1)
        .max()
        .unwrap_or(1);
    let s = match &args.subsample {
        Some(path) => SubsampleIndex::new(n, read_labels(path)?)?,
        None => SubsampleIndex::new(n, (0..n as u32).collect())?,
    };
    let truth = Membership::new(truth, k)?;
    let est = Membership::new(est, k)?;
    let report = matched_errors(&truth, &est, &s)?;
    print_report(&report);
    Ok(())
}

fn print_report(r: &metrics::ErrorReport) {
    println!("delta_S={:.6}", r.delta_s);
    println!("delta_Sc={:.6}", r.delta_sc);
    println!("delta={:.6}", r.delta);
    println!("delta_tilde_S={:.6}", r.delta_tilde_s);
    println!("wrong_S={}", r.wrong_s);
    println!("wrong_Sc={}", r.wrong_sc);
    println!("n={}", r.n);
    println!("m={}", r.m);
}

fn bench(args: BenchArgs) -> Result<()> {
    match args.mode.as_str() {
        "scaling" => {
            // The n grid spans 2x..6x the fixed m given via --m resolved at
            // the base n.
            let base_n: usize = args.n.parse().context("scaling mode needs integer --n")?;
            let m = args.m.parse::<MSpec>()?.resolve(base_n);
            let n_grid: Vec<usize> = (2..=6).map(|f| f * base_n / 2).collect();
            let report = benchmark_scaling(
                &n_grid,
                m,
                args.k,
                args.mean_degree,
                args.h,
                args.runs,
                args.threads,
                args.seed,
            )?;
            println!("n,n_minus_m,t_assign_s");
            for &(n, t) in &report.points {
                println!("{n},{},{t:.6}", n - m);
            }
            println!(
                "# fit: t = {:.3e} + {:.3e} * (n - m), R^2 = {:.4}",
                report.intercept, report.slope, report.r_squared
            );
        }
        "paired" => {
            let n: usize = args.n.parse().context("paired mode needs integer --n")?;
            let m = args.m.parse::<MSpec>()?.resolve(n);
            let report = benchmark_paired(
                n,
                args.k,
                args.alpha,
                args.h,
                m,
                args.runs,
                args.threads,
                args.seed,
            )?;
            println!("run,full_s,predictive_s,speedup");
            for (i, ((f, p), s)) in report
                .full_seconds
                .iter()
                .zip(&report.predictive_seconds)
                .zip(report.speedups())
                .enumerate()
            {
                println!("{i},{f:.4},{p:.4},{s:.2}");
            }
            let wins = report.speedups().iter().filter(|&&s| s >= 2.0).count();
            println!("# speedup >= 2x in {wins}/{} runs", args.runs);
        }
        other => bail!("unknown bench mode {other:?} (scaling|paired)"),
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let rows = run_experiment(&cfg);
    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match out_path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(&path)?);
            write_csv(&rows, &mut w)?;
            w.flush()?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if args.summary {
        print!("{}", summary_csv(&summarize(&rows)));
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", rows.len());
    }
    Ok(())
}

fn write_labels(path: &PathBuf, labels: &[u32]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels(path: &PathBuf) -> Result<Vec<u32>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<u32>()
                .with_context(|| format!("bad label {l:?}"))
        })
        .collect()
}

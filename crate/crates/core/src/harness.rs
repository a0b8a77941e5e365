//! Experiment driver: flat key=value config files, replicated runs over
//! parameter grids, CSV reports, and the timing benchmarks.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::assign::{predictive_assign, Model, PipelineConfig};
use crate::blockmodel::{
    balanced_proportions, dcbm_block_matrix, sample_dcbm, sample_sbm, sbm_block_matrix,
};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::membership::Membership;
use crate::metrics::{matched_errors, ErrorReport};
use crate::sampling::Sampler;
use crate::seed::derive_seed;
use crate::spectral::{spectral_cluster, ClusterMethod, SpectralParams};
use crate::{mem, sampling};

/// Subsample size given either absolutely or as an exponent of n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MSpec {
    Absolute(usize),
    Power(f64),
}

impl MSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            MSpec::Absolute(m) => m,
            MSpec::Power(gamma) => ((n as f64).powf(gamma).round() as usize).clamp(1, n),
        }
    }
}

impl std::str::FromStr for MSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(exp) = s.strip_prefix("n^") {
            let gamma: f64 = exp
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad exponent in {s:?}")))?;
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::InvalidParams(format!(
                    "exponent {gamma} outside [0, 1]"
                )));
            }
            Ok(MSpec::Power(gamma))
        } else {
            let m: usize = s
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad subsample size {s:?}")))?;
            Ok(MSpec::Absolute(m))
        }
    }
}

impl std::fmt::Display for MSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MSpec::Absolute(m) => write!(f, "{m}"),
            MSpec::Power(g) => write!(f, "n^{g}"),
        }
    }
}

/// One experiment: a model family, a grid over h and m, and replicates.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: Model,
    pub n: usize,
    pub k: usize,
    /// Edge density target: the block-matrix density under the plain model,
    /// the expected graph density under the degree-corrected model.
    pub alpha: f64,
    pub h_grid: Vec<f64>,
    pub proportions: Vec<f64>,
    pub sampler: Sampler,
    pub method: ClusterMethod,
    pub m_grid: Vec<MSpec>,
    pub replicates: usize,
    pub seed: u64,
    pub threads: usize,
    /// Apply a seeded node permutation after generation, so block-contiguous
    /// layout cannot leak into the pipeline.
    pub permute: bool,
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// Parses the flat `key=value` format; `#` starts a comment, `m` and
    /// `h` accept comma-separated grids.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            name: name.to_string(),
            model: Model::Sbm,
            n: 0,
            k: 0,
            alpha: f64::NAN,
            h_grid: vec![3.0],
            proportions: Vec::new(),
            sampler: Sampler::Srs,
            method: ClusterMethod::Sc,
            m_grid: Vec::new(),
            replicates: 1,
            seed: 0,
            threads: 0,
            permute: false,
            output: None,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            match key {
                "model" => cfg.model = value.parse()?,
                "n" => cfg.n = value.parse().map_err(|_| bad(format!("bad n {value:?}")))?,
                "k" => cfg.k = value.parse().map_err(|_| bad(format!("bad k {value:?}")))?,
                "alpha" | "density" => {
                    cfg.alpha = value
                        .parse()
                        .map_err(|_| bad(format!("bad {key} {value:?}")))?
                }
                "h" => {
                    cfg.h_grid = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad h grid {value:?}")))?
                }
                "proportions" => {
                    cfg.proportions = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad proportions {value:?}")))?
                }
                "sampler" => cfg.sampler = value.parse()?,
                "method" => cfg.method = value.parse()?,
                "m" => {
                    cfg.m_grid = value
                        .split(',')
                        .map(|v| v.trim().parse::<MSpec>())
                        .collect::<Result<_>>()?
                }
                "replicates" => {
                    cfg.replicates = value
                        .parse()
                        .map_err(|_| bad(format!("bad replicates {value:?}")))?
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(format!("bad seed {value:?}")))?
                }
                "threads" => {
                    cfg.threads = value
                        .parse()
                        .map_err(|_| bad(format!("bad threads {value:?}")))?
                }
                "permute" => {
                    cfg.permute = value
                        .parse()
                        .map_err(|_| bad(format!("bad permute flag {value:?}")))?
                }
                "output" => cfg.output = Some(value.to_string()),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".to_string());
        Self::parse(&name, &text)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParams("n and k must be positive".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParams(
                "alpha (or density) must be set".into(),
            ));
        }
        if self.m_grid.is_empty() {
            return Err(Error::InvalidParams("m grid must be nonempty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParams("replicates must be >= 1".into()));
        }
        for spec in &self.m_grid {
            let m = spec.resolve(self.n);
            if m == 0 || m > self.n {
                return Err(Error::InvalidParams(format!(
                    "m spec {spec} resolves outside 1..={}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn proportions_or_balanced(&self) -> Vec<f64> {
        if self.proportions.is_empty() {
            balanced_proportions(self.k)
        } else {
            self.proportions.clone()
        }
    }
}

/// One CSV row: the error-report core plus experiment context.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub run_id: String,
    pub model: Model,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sampler: Sampler,
    pub method: ClusterMethod,
    pub seed: u64,
    pub report: ErrorReport,
    /// Fraction of the adjacency matrix touched by subgraph clustering.
    pub f: f64,
    pub alpha: f64,
    pub h: f64,
    pub status: String,
}

pub const CSV_HEADER: &str = "run_id,model,n,K,m,sampler,method,seed,delta_S,delta_Sc,delta,\
delta_tilde_S,t_sample_s,t_cluster_s,t_assign_s,t_total_s,peak_mem_bytes,fallback_count,\
f,alpha,h,status";

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{},{},{}",
            self.run_id,
            self.model.name(),
            self.n,
            self.k,
            self.m,
            sampler_name(self.sampler),
            self.method.name(),
            self.seed,
            r.delta_s,
            r.delta_sc,
            r.delta,
            r.delta_tilde_s,
            r.t_sample_s,
            r.t_cluster_s,
            r.t_assign_s,
            r.t_total_s,
            r.peak_mem_bytes,
            r.fallback_count,
            self.f,
            self.alpha,
            self.h,
            self.status,
        )
    }
}

pub fn sampler_name(s: Sampler) -> &'static str {
    match s {
        Sampler::Srs => "srs",
        Sampler::Rws => "rws",
    }
}

/// Fraction of adjacency entries used in Step 2: m^2/n^2 for the square
/// subgraph variants, (2nm - m^2)/n^2 for the rectangular slice.
pub fn data_fraction(method: ClusterMethod, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    if method.uses_rectangular_slice() {
        (2.0 * n * m - m * m) / (n * n)
    } else {
        m * m / (n * n)
    }
}

fn generate(cfg: &ExperimentConfig, h: f64, seed: u64) -> Result<(SparseGraph, Membership)> {
    let proportions = cfg.proportions_or_balanced();
    let (mut g, mut truth) = match cfg.model {
        Model::Sbm => {
            let omega = sbm_block_matrix(cfg.k, cfg.alpha, h)?;
            sample_sbm(cfg.n, &omega, &proportions, derive_seed(seed, 1))?
        }
        Model::Dcbm => {
            let omega0 = dcbm_block_matrix(cfg.k, 1.0, h)?;
            let (g, truth, _) = sample_dcbm(
                cfg.n,
                &omega0,
                &proportions,
                cfg.alpha,
                (1.0, 5.0),
                derive_seed(seed, 1),
            )?;
            (g, truth)
        }
    };
    if cfg.permute {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
        let mut perm: Vec<u32> = (0..cfg.n as u32).collect();
        perm.shuffle(&mut rng);
        g = g.permuted(&perm)?;
        let mut labels = vec![0u32; cfg.n];
        for (old, &new) in perm.iter().enumerate() {
            labels[new as usize] = truth.label(old);
        }
        truth = Membership::new(labels, cfg.k)?;
    }
    Ok((g, truth))
}

/// Runs the whole grid: one row per (h, m, replicate). Failures are
/// recorded in the row status and do not stop the run. Rows are
/// byte-stable for a fixed config and master seed, timing and memory
/// columns aside.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<ReportRow> {
    let mut cells = Vec::new();
    for &h in &cfg.h_grid {
        for &mspec in &cfg.m_grid {
            cells.push((h, mspec));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();

    jobs.par_iter()
        .map(|&(cell, rep)| {
            let (h, mspec) = cells[cell];
            let m = mspec.resolve(cfg.n);
            let seed = derive_seed(cfg.seed, (cell as u64) << 32 | rep as u64);
            let run_id = format!("{}-c{cell}-r{rep}", cfg.name);
            let mut row = ReportRow {
                run_id,
                model: cfg.model,
                n: cfg.n,
                k: cfg.k,
                m,
                sampler: cfg.sampler,
                method: cfg.method,
                seed,
                report: ErrorReport::default(),
                f: data_fraction(cfg.method, cfg.n, m),
                alpha: cfg.alpha,
                h,
                status: "ok".to_string(),
            };
            match run_one(cfg, h, m, seed) {
                Ok(report) => row.report = report,
                Err(e) => row.status = format!("error: {e}").replace(',', ";"),
            }
            row
        })
        .collect()
}

fn run_one(cfg: &ExperimentConfig, h: f64, m: usize, seed: u64) -> Result<ErrorReport> {
    let (g, truth) = generate(cfg, h, seed)?;
    mem::reset_peak();
    let pipeline = PipelineConfig {
        model: cfg.model,
        sampler: cfg.sampler,
        m,
        method: cfg.method,
        seed: derive_seed(seed, 3),
        threads: cfg.threads,
        spectral: SpectralParams::default(),
    };
    let out = predictive_assign(&g, cfg.k, &pipeline)?;
    let errors = matched_errors(&truth, &out.membership, &out.subsample)?;
    Ok(out.report.with_errors_from(&errors))
}

pub fn write_csv<W: std::io::Write>(rows: &[ReportRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv())?;
    }
    Ok(())
}

/// Mean and standard error of the error rates per grid cell.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub h: f64,
    pub m: usize,
    pub runs: usize,
    pub failed: usize,
    pub delta_s: (f64, f64),
    pub delta_sc: (f64, f64),
    pub delta: (f64, f64),
    pub t_total_mean: f64,
}

pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.h.to_bits(), r.m)).collect();
    keys.sort_unstable();
    keys.dedup();

    keys.into_iter()
        .map(|(h_bits, m)| {
            let h = f64::from_bits(h_bits);
            let cell: Vec<&ReportRow> = rows
                .iter()
                .filter(|r| r.h.to_bits() == h_bits && r.m == m)
                .collect();
            let ok: Vec<&&ReportRow> = cell.iter().filter(|r| r.status == "ok").collect();
            let stat = |f: &dyn Fn(&ReportRow) -> f64| -> (f64, f64) {
                mean_se(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                h,
                m,
                runs: cell.len(),
                failed: cell.len() - ok.len(),
                delta_s: stat(&|r| r.report.delta_s),
                delta_sc: stat(&|r| r.report.delta_sc),
                delta: stat(&|r| r.report.delta),
                t_total_mean: mean_se(&ok.iter().map(|r| r.report.t_total_s).collect::<Vec<_>>()).0,
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "h,m,runs,failed,delta_S_mean,delta_S_se,delta_Sc_mean,delta_Sc_se,delta_mean,delta_se,t_total_mean\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.h,
            r.m,
            r.runs,
            r.failed,
            r.delta_s.0,
            r.delta_s.1,
            r.delta_sc.0,
            r.delta_sc.1,
            r.delta.0,
            r.delta.1,
            r.t_total_mean,
        );
    }
    out
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Step-3 wall-clock across a grid of n at fixed m, with the expected mean
/// degree held constant so the per-node work stays flat; fits
/// `t_assign ~ a + b*(n - m)` and reports the fit quality.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    /// (n, median assign seconds) per grid point.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn benchmark_scaling(
    n_grid: &[usize],
    m: usize,
    k: usize,
    mean_degree: f64,
    h: f64,
    repeats: usize,
    threads: usize,
    seed: u64,
) -> Result<ScalingReport> {
    let mut points = Vec::new();
    for (gi, &n) in n_grid.iter().enumerate() {
        let alpha = (mean_degree / (n as f64 - 1.0)).min(1.0);
        let omega = sbm_block_matrix(k, alpha, h)?;
        let mut times = Vec::new();
        for r in 0..repeats.max(1) {
            let run_seed = derive_seed(seed, (gi as u64) << 32 | r as u64);
            let (g, _) = sample_sbm(n, &omega, &balanced_proportions(k), run_seed)?;
            let cfg = PipelineConfig {
                model: Model::Sbm,
                sampler: Sampler::Srs,
                m: m.min(n),
                method: ClusterMethod::Sc,
                seed: run_seed,
                threads,
                spectral: SpectralParams::default(),
            };
            let out = predictive_assign(&g, k, &cfg)?;
            times.push(out.report.t_assign_s);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.push((n, times[times.len() / 2]));
    }

    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n - m) as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(ScalingReport {
        points,
        slope,
        intercept,
        r_squared,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Paired wall-clock comparison: full-network clustering vs the
/// three-step pipeline on the same graphs, alternated so background load
/// hits both sides equally.
#[derive(Debug, Clone)]
pub struct PairedReport {
    pub full_seconds: Vec<f64>,
    pub predictive_seconds: Vec<f64>,
}

impl PairedReport {
    pub fn speedups(&self) -> Vec<f64> {
        self.full_seconds
            .iter()
            .zip(&self.predictive_seconds)
            .map(|(&f, &p)| f / p.max(1e-12))
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn benchmark_paired(
    n: usize,
    k: usize,
    alpha: f64,
    h: f64,
    m: usize,
    runs: usize,
    threads: usize,
    seed: u64,
) -> Result<PairedReport> {
    let omega = sbm_block_matrix(k, alpha, h)?;
    let mut full_seconds = Vec::new();
    let mut predictive_seconds = Vec::new();
    for r in 0..runs {
        let run_seed = derive_seed(seed, r as u64);
        let (g, _) = sample_sbm(n, &omega, &balanced_proportions(k), run_seed)?;

        let all = sampling::srs(n, n, run_seed)?;
        let start = Instant::now();
        let _full = spectral_cluster(
            &g,
            &all,
            k,
            ClusterMethod::Sc,
            &SpectralParams::default(),
            derive_seed(run_seed, 7),
        )?;
        full_seconds.push(start.elapsed().as_secs_f64());

        let cfg = PipelineConfig {
            model: Model::Sbm,
            sampler: Sampler::Srs,
            m,
            method: ClusterMethod::Sc,
            seed: derive_seed(run_seed, 8),
            threads,
            spectral: SpectralParams::default(),
        };
        let start = Instant::now();
        let _out = predictive_assign(&g, k, &cfg)?;
        predictive_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(PairedReport {
        full_seconds,
        predictive_seconds,
    })
}

//! Sweeps over sampling rates and sample counts.
//!
//! Grid cell `g` uses `derive_seed(seed, g)` as its plan seed, so rows are
//! reproducible on their own and independent of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    average_vectors, draw_eigenvectors, orient, orient_to, run_pool, AverageGauge, AveragingPlan,
};
use crate::incoherence::SpectralModel;
use crate::matrix::{
    dense_spectral_norm, dot, max_singular_value, norm2, sub, DenseMatrix,
    DenseSymmetric, SparseCsr,
};
use crate::rng::derive_seed;
use crate::subsample::{draw_sample, draw_sample_rect, median, residual_symmetric, SampleConfig};

use super::graph::WebGraph;
use super::pagerank::{pagerank, perron_left, spearman_rho_within, GoogleMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub p_grid: Vec<f64>,
    pub num_samples: usize,
    pub k: usize,
    pub seed: u64,
    pub gauge: AverageGauge,
    pub workers: Option<usize>,
    /// Also evaluate `‖E‖₂ < d/2` per draw (one dense eigensolve each).
    pub pert: bool,
}

impl SweepConfig {
    pub fn new(p_grid: Vec<f64>, num_samples: usize, seed: u64) -> Self {
        Self {
            p_grid,
            num_samples,
            k: 0,
            seed,
            gauge: AverageGauge::AvgNorm,
            workers: None,
            pert: true,
        }
    }

    fn plan(&self, cell: usize, p: f64, num_samples: usize) -> AveragingPlan {
        AveragingPlan {
            k: self.k,
            gauge: self.gauge,
            workers: self.workers,
            ..AveragingPlan::new(p, num_samples, derive_seed(self.seed, cell as u64))
        }
    }
}

/// One row per sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub p: f64,
    pub num_samples: usize,
    /// `uᵀν`
    pub alignment: f64,
    pub median_single: f64,
    pub mean_single: f64,
    pub std_single: f64,
    /// `‖ν − u‖₂`
    pub error: f64,
    pub median_single_error: f64,
    /// Fraction of draws with `‖E‖₂ < d_k/2`.
    pub pert_fraction: Option<f64>,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn oriented_truth(model: &SpectralModel, k: usize, nu: &[f64]) -> Vec<f64> {
    let mut u = model.vector(k).to_vec();
    orient_to(&mut u, nu);
    u
}

fn pert_fraction(
    m: &DenseSymmetric,
    plan: &AveragingPlan,
    half_gap: f64,
) -> Result<f64> {
    let flags: Vec<Result<bool>> = run_pool(plan.workers, || {
        (0..plan.num_samples)
            .into_par_iter()
            .map(|i| {
                let draw = draw_sample(m, &plan.sample_config(i))?;
                let e = residual_symmetric(m, &draw)?;
                Ok(dense_spectral_norm(&e) < half_gap)
            })
            .collect()
    })?;
    let mut hits = 0usize;
    for f in flags {
        hits += f? as usize;
    }
    Ok(hits as f64 / plan.num_samples as f64)
}

/// Averaged and single-draw alignment with the ground truth at each `p`.
pub fn sweep_alignment(
    m: &DenseSymmetric,
    model: &SpectralModel,
    cfg: &SweepConfig,
) -> Result<Vec<AlignmentRow>> {
    model.check_index(cfg.k)?;
    let half_gap = model.separation(cfg.k)? / 2.0;
    let mut rows = Vec::with_capacity(cfg.p_grid.len());
    for (cell, &p) in cfg.p_grid.iter().enumerate() {
        let plan = cfg.plan(cell, p, cfg.num_samples);
        let draws = draw_eigenvectors(m, &plan)?;
        let mut vectors: Vec<Vec<f64>> = draws.into_iter().map(|d| d.1).collect();
        orient(&mut vectors);
        let (nu, est) = average_vectors(&vectors, cfg.gauge);
        let u = oriented_truth(model, cfg.k, &nu);
        let aligns: Vec<f64> = vectors.iter().map(|v| align(&u, v)).collect();
        let errs: Vec<f64> = vectors.iter().map(|v| norm2(&sub(v, &u))).collect();
        let (mean, std) = mean_std(&aligns);
        rows.push(AlignmentRow {
            p,
            num_samples: cfg.num_samples,
            alignment: align(&u, &nu),
            median_single: median(&aligns),
            mean_single: mean,
            std_single: std,
            error: norm2(&sub(&est, &u)),
            median_single_error: median(&errs),
            pert_fraction: if cfg.pert {
                Some(pert_fraction(m, &plan, half_gap)?)
            } else {
                None
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCountRow {
    pub p: f64,
    pub num_samples: usize,
    pub alignment: f64,
    pub error: f64,
}

/// Alignment of the average of the first `N` draws, for each `N` in
/// `counts`, from one bank of `max(counts)` draws at rate `p`.
pub fn sweep_samples(
    m: &DenseSymmetric,
    model: &SpectralModel,
    p: f64,
    counts: &[usize],
    cfg: &SweepConfig,
) -> Result<Vec<SampleCountRow>> {
    model.check_index(cfg.k)?;
    let max = counts.iter().copied().max().unwrap_or(0);
    if counts.contains(&0) || max == 0 {
        return Err(Error::InvalidConfig("sample counts must be positive".into()));
    }
    let plan = cfg.plan(0, p, max);
    let vectors: Vec<Vec<f64>> = draw_eigenvectors(m, &plan)?.into_iter().map(|d| d.1).collect();
    Ok(counts
        .iter()
        .map(|&n| {
            let mut prefix = vectors[..n].to_vec();
            orient(&mut prefix);
            let (nu, est) = average_vectors(&prefix, cfg.gauge);
            let u = oriented_truth(model, cfg.k, &nu);
            SampleCountRow {
                p,
                num_samples: n,
                alignment: align(&u, &nu),
                error: norm2(&sub(&est, &u)),
            }
        })
        .collect())
}

/// Which matrix is subsampled in the ranking experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSubsample {
    /// Entries of the dense damped matrix `P`.
    #[default]
    DampedMatrix,
    /// Links of the graph, then damping and dangling handling as usual.
    Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PagerankSweepConfig {
    pub c: f64,
    pub p_grid: Vec<f64>,
    pub num_samples: usize,
    pub seed: u64,
    pub variant: RankSubsample,
    pub workers: Option<usize>,
    /// Also evaluate `‖E‖₂ < (1−c)/2` per draw (one dense SVD each).
    pub pert: bool,
    pub tol: f64,
    pub max_iter: usize,
    /// Relative gap below which PageRank scores count as tied.
    pub tie_tol: f64,
}

impl PagerankSweepConfig {
    pub fn new(p_grid: Vec<f64>, num_samples: usize, seed: u64) -> Self {
        Self {
            c: super::pagerank::DEFAULT_DAMPING,
            p_grid,
            num_samples,
            seed,
            variant: RankSubsample::DampedMatrix,
            workers: None,
            pert: false,
            tol: 1e-12,
            max_iter: 10_000,
            tie_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub p: f64,
    pub num_samples: usize,
    /// ρ between the true and the averaged Perron vector.
    pub rho: f64,
    pub median_single_rho: f64,
    /// Cosine between the true and the averaged Perron vector.
    pub alignment: f64,
    pub median_single_alignment: f64,
    pub pert_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub variant: RankSubsample,
    pub c: f64,
    pub pagerank: Vec<f64>,
    pub rows: Vec<RankRow>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (norm2(a) * norm2(b))).clamp(-1.0, 1.0)
}

fn align(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v).clamp(-1.0, 1.0)
}

fn sparse_to_dense_sub(s: &SparseCsr, p: &DenseMatrix) -> DenseMatrix {
    let mut e = p.scale(-1.0);
    for i in 0..s.n_rows() {
        for (j, v) in s.row(i) {
            e.set(i, j, e.get(i, j) + v);
        }
    }
    e
}

struct RankDraw {
    perron: Vec<f64>,
    in_regime: Option<bool>,
}

fn rank_draw(
    g: &WebGraph,
    dense_p: &DenseMatrix,
    adjacency: &DenseMatrix,
    cfg: &PagerankSweepConfig,
    sample: &SampleConfig,
) -> Result<RankDraw> {
    let (perron, e) = match cfg.variant {
        RankSubsample::DampedMatrix => {
            let s = draw_sample_rect(dense_p, sample)?.s;
            let v = perron_left(&s, cfg.tol, cfg.max_iter)?;
            let e = cfg.pert.then(|| sparse_to_dense_sub(&s, dense_p));
            (v, e)
        }
        RankSubsample::Adjacency => {
            let s = draw_sample_rect(adjacency, sample)?.s;
            let rows = (0..g.n()).map(|i| s.row(i).collect()).collect();
            let gm = GoogleMatrix::from_weighted(g.n(), rows, cfg.c)?;
            let v = pagerank(&gm, cfg.tol, cfg.max_iter)?;
            let e = cfg.pert.then(|| gm.to_dense().sub(dense_p)).transpose()?;
            (v, e)
        }
    };
    let in_regime = e.map(|e| max_singular_value(&e) < (1.0 - cfg.c) / 2.0);
    Ok(RankDraw { perron, in_regime })
}

/// Spearman's ρ between the true PageRank vector and averaged Perron
/// vectors of subsampled matrices, per sampling rate.
pub fn sweep_pagerank(g: &WebGraph, cfg: &PagerankSweepConfig) -> Result<RankReport> {
    if cfg.num_samples == 0 {
        return Err(Error::InvalidConfig("at least one sample is required".into()));
    }
    let gm = GoogleMatrix::new(g, cfg.c)?;
    let dense_p = gm.to_dense();
    // Same solver and operator layout as a p = 1 draw, so that row is exact.
    let truth = match cfg.variant {
        RankSubsample::DampedMatrix => perron_left(&SparseCsr::from_dense(&dense_p), cfg.tol, cfg.max_iter)?,
        RankSubsample::Adjacency => pagerank(&gm, cfg.tol, cfg.max_iter)?,
    };
    let adjacency = DenseMatrix::from_fn(g.n(), g.n(), |i, j| {
        g.out_neighbors(i).binary_search(&j).is_ok() as u8 as f64
    });
    let mut rows = Vec::with_capacity(cfg.p_grid.len());
    for (cell, &p) in cfg.p_grid.iter().enumerate() {
        let base = SampleConfig {
            p,
            seed: derive_seed(cfg.seed, cell as u64),
            stream: 0,
            symmetric: false,
        };
        base.validate()?;
        let results: Vec<Result<RankDraw>> = run_pool(cfg.workers, || {
            (0..cfg.num_samples)
                .into_par_iter()
                .map(|i| rank_draw(g, &dense_p, &adjacency, cfg, &base.with_stream(i as u64)))
                .collect()
        })?;
        let mut draws = Vec::with_capacity(cfg.num_samples);
        for (index, r) in results.into_iter().enumerate() {
            draws.push(r.map_err(|e| Error::Draw {
                index,
                source: Box::new(e),
            })?);
        }
        let n = g.n();
        let mut mean = vec![0.0; n];
        for d in &draws {
            mean.iter_mut().zip(&d.perron).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= draws.len() as f64);
        let single_rho: Vec<f64> = draws
            .iter()
            .map(|d| spearman_rho_within(&truth, &d.perron, cfg.tie_tol))
            .collect::<Result<_>>()?;
        let single_align: Vec<f64> = draws.iter().map(|d| cosine(&truth, &d.perron)).collect();
        let pert_fraction = cfg.pert.then(|| {
            draws.iter().filter(|d| d.in_regime == Some(true)).count() as f64 / draws.len() as f64
        });
        rows.push(RankRow {
            p,
            num_samples: cfg.num_samples,
            rho: spearman_rho_within(&truth, &mean, cfg.tie_tol)?,
            median_single_rho: median(&single_rho),
            alignment: cosine(&truth, &mean),
            median_single_alignment: median(&single_align),
            pert_fraction,
        });
    }
    Ok(RankReport {
        variant: cfg.variant,
        c: cfg.c,
        pagerank: truth,
        rows,
    })
}

//! Subsample `N` times, take the `k`-th eigenvector of every sparse copy,
//! fix its sign, average, normalize.
//!
//! Draw `i` samples from stream `i` of the plan seed, so the result does not
//! depend on the number of workers or on scheduling: per-draw vectors are
//! gathered and summed in draw order.

mod variance;

pub use variance::{
    e_moment_bounds, e_second_moment_diag, e_tail_bound, entrywise_max, recommend_samples,
    strong_separation_holds, strong_separation_ok, var_ueu, var_ueu_pairwise, var_ueu_quadratic,
    variance_bound, xi, MomentBounds, VarianceBudget,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incoherence::{mu_rect, RectSpectralModel, SpectralModel};
use crate::matrix::{
    dot, fix_sign, norm2, normalize, top_k_eigen, DenseMatrix, DenseSymmetric, EigenConfig,
    LinearOperator, SparseCsr, SymmetricOperator,
};
use crate::rng::derive_seed;
use crate::subsample::{draw_sample, draw_sample_rect, SampleConfig};

/// How per-draw unit eigenvectors are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageGauge {
    /// Mean of the draws, then normalized.
    #[default]
    AvgNorm,
    /// Mean of the unit draws, left unnormalized.
    NormAvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingPlan {
    pub p: f64,
    pub num_samples: usize,
    /// Zero-based eigen-index (0 is the largest eigenvalue).
    pub k: usize,
    pub seed: u64,
    pub gauge: AverageGauge,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub eigen_tol: f64,
    pub eigen_max_iter: Option<usize>,
}

impl AveragingPlan {
    pub fn new(p: f64, num_samples: usize, seed: u64) -> Self {
        Self {
            p,
            num_samples,
            k: 0,
            seed,
            gauge: AverageGauge::AvgNorm,
            workers: None,
            eigen_tol: 1e-10,
            eigen_max_iter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidProbability(self.p));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("at least one sample is required".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }

    pub fn sample_config(&self, draw: usize) -> SampleConfig {
        SampleConfig {
            p: self.p,
            seed: self.seed,
            stream: draw as u64,
            symmetric: true,
        }
    }

    pub fn eigen_config(&self, draw: usize) -> EigenConfig {
        EigenConfig {
            tol: self.eigen_tol,
            max_iter: self.eigen_max_iter,
            seed: derive_seed(self.seed, draw as u64),
            shift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub p: f64,
    pub num_samples: usize,
    pub k: usize,
    pub gauge: AverageGauge,
    /// Normalized mean of the oriented draws; always unit norm.
    pub nu: Vec<f64>,
    /// The gauge-dependent estimate (equals `nu` under `AvgNorm`).
    pub estimate: Vec<f64>,
    /// `λ_k(S_i)` per draw.
    pub sample_eigenvalues: Vec<f64>,
    /// `uᵀν` with the ground truth oriented to `ν`.
    pub alignment: Option<f64>,
    pub per_sample_alignments: Vec<f64>,
    /// `‖v_i − u‖₂` per draw.
    pub per_sample_errors: Vec<f64>,
    /// `‖estimate − u‖₂`
    pub error: Option<f64>,
    pub xi: Option<f64>,
    pub d: Option<f64>,
    /// `ξ²/d²`
    pub predicted_error: Option<f64>,
    pub strong_condition_ok: Option<bool>,
}

pub(crate) fn run_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Keeps per-draw failures ordered: the first failure wins, all-failed is reported as such.
fn collect_draws<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let total = results.len();
    if results.iter().all(|r| r.is_err()) {
        return Err(Error::AllDrawsFailed(total));
    }
    let mut out = Vec::with_capacity(total);
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                return Err(Error::Draw {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(out)
}

/// Puts sign-fixed draws on one orientation. Each draw is flipped to agree
/// with draw 0, then with the mean of the result; finally every draw is
/// flipped together so the mean obeys [`fix_sign`].
///
/// Per-draw sign fixing alone is unreliable when the leading components of
/// the eigenvector are close in magnitude: noise then picks a different
/// component, and the opposite sign, in different draws.
pub fn orient(vectors: &mut [Vec<f64>]) {
    let Some(first) = vectors.first() else {
        return;
    };
    let mut reference = first.clone();
    for _ in 0..2 {
        for v in vectors.iter_mut() {
            if dot(v, &reference) < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        reference.iter_mut().for_each(|x| *x = 0.0);
        for v in vectors.iter() {
            reference.iter_mut().zip(v).for_each(|(r, x)| *r += x);
        }
    }
    let mut probe = reference.clone();
    fix_sign(&mut probe);
    if dot(&probe, &reference) < 0.0 {
        for v in vectors.iter_mut() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Flips `u` so that `uᵀreference ≥ 0`.
pub fn orient_to(u: &mut [f64], reference: &[f64]) {
    if dot(u, reference) < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
}

struct Averaged {
    nu: Vec<f64>,
    estimate: Vec<f64>,
}

/// Mean of draws already passed through [`orient`].
fn average(vectors: &[Vec<f64>], gauge: AverageGauge) -> Averaged {
    let n = vectors[0].len();
    let mut mean = vec![0.0; n];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    let inv = 1.0 / vectors.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut nu = mean.clone();
    normalize(&mut nu);
    let estimate = match gauge {
        AverageGauge::AvgNorm => nu.clone(),
        AverageGauge::NormAvg => mean,
    };
    Averaged { nu, estimate }
}

fn compare(truth: &[f64], draws: &[Vec<f64>], avg: &Averaged) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let mut u = truth.to_vec();
    orient_to(&mut u, &avg.nu);
    let aligns = draws.iter().map(|v| dot(&u, v).clamp(-1.0, 1.0)).collect();
    let errs = draws
        .iter()
        .map(|v| norm2(&crate::matrix::sub(v, &u)))
        .collect();
    let err = norm2(&crate::matrix::sub(&avg.estimate, &u));
    (dot(&u, &avg.nu).clamp(-1.0, 1.0), aligns, errs, err)
}

/// Sign-fixed `(λ_k(S_i), v_k(S_i))` for every draw, in draw order.
pub fn draw_eigenvectors(m: &DenseSymmetric, plan: &AveragingPlan) -> Result<Vec<(f64, Vec<f64>)>> {
    plan.validate()?;
    if plan.k >= m.n() {
        return Err(Error::InvalidConfig(format!(
            "eigen-index {} out of range for n = {}",
            plan.k,
            m.n()
        )));
    }
    let results: Vec<Result<(f64, Vec<f64>)>> = run_pool(plan.workers, || {
        (0..plan.num_samples)
            .into_par_iter()
            .map(|i| {
                let draw = draw_sample(m, &plan.sample_config(i))?;
                let mut pairs = top_k_eigen(&draw.s, plan.k + 1, &plan.eigen_config(i))?;
                let pair = pairs.swap_remove(plan.k);
                Ok((pair.value, pair.vector))
            })
            .collect()
    })?;
    collect_draws(results)
}

/// `(ν, estimate)`: the normalized mean and the gauge-dependent estimate.
/// Pass draws through [`orient`] first.
pub fn average_vectors(vectors: &[Vec<f64>], gauge: AverageGauge) -> (Vec<f64>, Vec<f64>) {
    let a = average(vectors, gauge);
    (a.nu, a.estimate)
}

/// Averaged estimate of the `k`-th eigenvector of `m`. With `truth` the
/// report carries alignments, errors and the `ξ`, `d` predictions.
pub fn estimate(
    m: &DenseSymmetric,
    plan: &AveragingPlan,
    truth: Option<&SpectralModel>,
) -> Result<EstimatorReport> {
    plan.validate()?;
    if let Some(t) = truth {
        t.check_index(plan.k)?;
        if t.n() != m.n() {
            return Err(Error::ShapeMismatch {
                expected: (m.n(), m.n()),
                found: (t.n(), t.n()),
            });
        }
    }
    let draws = draw_eigenvectors(m, plan)?;
    let (sample_eigenvalues, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = draws.into_iter().unzip();
    orient(&mut vectors);
    let avg = average(&vectors, plan.gauge);

    let mut report = EstimatorReport {
        p: plan.p,
        num_samples: plan.num_samples,
        k: plan.k,
        gauge: plan.gauge,
        nu: avg.nu.clone(),
        estimate: avg.estimate.clone(),
        sample_eigenvalues,
        alignment: None,
        per_sample_alignments: Vec::new(),
        per_sample_errors: Vec::new(),
        error: None,
        xi: None,
        d: None,
        predicted_error: None,
        strong_condition_ok: None,
    };
    if let Some(t) = truth {
        let (a, aligns, errs, err) = compare(t.vector(plan.k), &vectors, &avg);
        let x = xi(t, plan.p);
        let d = t.separation(plan.k)?;
        report.alignment = Some(a);
        report.per_sample_alignments = aligns;
        report.per_sample_errors = errs;
        report.error = Some(err);
        report.xi = Some(x);
        report.d = Some(d);
        report.predicted_error = Some(x * x / (d * d));
        report.strong_condition_ok = Some(strong_separation_holds(x, d));
    }
    Ok(report)
}

/// `SᵀS` (`Right`) or `SSᵀ` (`Left`) applied without forming the product.
struct Gram<'a> {
    s: &'a SparseCsr,
    left: bool,
}

impl LinearOperator for Gram<'_> {
    fn shape(&self) -> (usize, usize) {
        let d = if self.left { self.s.n_rows() } else { self.s.n_cols() };
        (d, d)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        if self.left {
            let mut t = vec![0.0; self.s.n_cols()];
            self.s.apply_transpose(x, &mut t);
            self.s.apply(&t, y);
        } else {
            let mut t = vec![0.0; self.s.n_rows()];
            self.s.apply(x, &mut t);
            self.s.apply_transpose(&t, y);
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y)
    }
}

impl SymmetricOperator for Gram<'_> {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectEstimatorReport {
    /// Left singular vectors (length `n`, eigenvectors of `SSᵀ`).
    pub left: EstimatorReport,
    /// Right singular vectors (length `m`, eigenvectors of `SᵀS`).
    pub right: EstimatorReport,
}

/// Averaged leading singular vectors of a rectangular `n × m` matrix.
pub fn estimate_rect(
    m: &DenseMatrix,
    plan: &AveragingPlan,
    truth: Option<&RectSpectralModel>,
) -> Result<RectEstimatorReport> {
    plan.validate()?;
    let (rows, cols) = m.shape();
    if plan.k >= rows.min(cols) {
        return Err(Error::InvalidConfig(format!(
            "singular index {} out of range for {rows}×{cols}",
            plan.k
        )));
    }
    if let Some(t) = truth {
        if t.shape() != (rows, cols) {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: t.shape(),
            });
        }
        if plan.k >= t.singular_values().len() {
            return Err(Error::InvalidConfig("singular index beyond the model rank".into()));
        }
    }
    type Draw = (f64, Vec<f64>, Vec<f64>);
    let results: Vec<Result<Draw>> = run_pool(plan.workers, || {
        (0..plan.num_samples)
            .into_par_iter()
            .map(|i| {
                let draw = draw_sample_rect(m, &plan.sample_config(i))?;
                let cfg = plan.eigen_config(i);
                let mut l = top_k_eigen(&Gram { s: &draw.s, left: true }, plan.k + 1, &cfg)?;
                let mut r = top_k_eigen(&Gram { s: &draw.s, left: false }, plan.k + 1, &cfg)?;
                let lp = l.swap_remove(plan.k);
                let rp = r.swap_remove(plan.k);
                Ok((rp.value.max(0.0).sqrt(), lp.vector, rp.vector))
            })
            .collect()
    })?;
    let draws = collect_draws(results)?;
    let sig: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut lefts: Vec<Vec<f64>> = draws.iter().map(|d| d.1.clone()).collect();
    let mut rights: Vec<Vec<f64>> = draws.into_iter().map(|d| d.2).collect();
    orient(&mut lefts);
    orient(&mut rights);

    let build = |vectors: &[Vec<f64>], truth_vec: Option<&[f64]>| -> EstimatorReport {
        let avg = average(vectors, plan.gauge);
        let mut rep = EstimatorReport {
            p: plan.p,
            num_samples: plan.num_samples,
            k: plan.k,
            gauge: plan.gauge,
            nu: avg.nu.clone(),
            estimate: avg.estimate.clone(),
            sample_eigenvalues: sig.clone(),
            alignment: None,
            per_sample_alignments: Vec::new(),
            per_sample_errors: Vec::new(),
            error: None,
            xi: None,
            d: None,
            predicted_error: None,
            strong_condition_ok: None,
        };
        if let Some(u) = truth_vec {
            let (a, aligns, errs, err) = compare(u, vectors, &avg);
            rep.alignment = Some(a);
            rep.per_sample_alignments = aligns;
            rep.per_sample_errors = errs;
            rep.error = Some(err);
        }
        rep
    };
    let mut left = build(&lefts, truth.map(|t| t.left()[plan.k].as_slice()));
    let mut right = build(&rights, truth.map(|t| t.right()[plan.k].as_slice()));
    if let Some(t) = truth {
        let (n, mm) = t.shape();
        let eff = (n as f64).powf(t.alpha_min() / 2.0) * (mm as f64).powf(t.beta_min() / 2.0);
        let x = mu_rect(t) / (plan.p * eff).sqrt();
        let s = t.singular_values();
        let next = s.get(plan.k + 1).copied().unwrap_or(0.0);
        let prev = if plan.k > 0 { s[plan.k - 1] } else { f64::INFINITY };
        let d = (s[plan.k] - next).min(prev - s[plan.k]);
        for rep in [&mut left, &mut right] {
            rep.xi = Some(x);
            rep.d = Some(d);
            rep.predicted_error = Some(x * x / (d * d));
            rep.strong_condition_ok = Some(strong_separation_holds(x, d));
        }
    }
    Ok(RectEstimatorReport { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> (DenseSymmetric, SpectralModel) {
        let s = 0.5;
        let u1 = vec![s, s, s, s];
        let u2 = vec![s, -s, s, -s];
        let u3 = vec![s, s, -s, -s];
        let sm = SpectralModel::new(vec![3.0, 1.0, 0.5], vec![u1, u2, u3]).unwrap();
        (sm.to_dense(), sm)
    }

    #[test]
    fn p_one_recovers_the_eigenvector() {
        let (m, sm) = model();
        let rep = estimate(&m, &AveragingPlan::new(1.0, 3, 7), Some(&sm)).unwrap();
        assert!((rep.alignment.unwrap() - 1.0).abs() < 1e-10);
        assert!((norm2(&rep.nu) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_draw_is_its_own_average() {
        let (m, _) = model();
        let plan = AveragingPlan::new(0.7, 1, 3);
        let rep = estimate(&m, &plan, None).unwrap();
        let draw = draw_sample(&m, &plan.sample_config(0)).unwrap();
        let pair = &top_k_eigen(&draw.s, 1, &plan.eigen_config(0)).unwrap()[0];
        for (a, b) in rep.nu.iter().zip(&pair.vector) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let (m, _) = model();
        let mut plan = AveragingPlan::new(0.6, 24, 11);
        plan.workers = Some(1);
        let a = estimate(&m, &plan, None).unwrap();
        plan.workers = Some(4);
        let b = estimate(&m, &plan, None).unwrap();
        assert_eq!(a.nu, b.nu);
    }

    #[test]
    fn invalid_plans_rejected() {
        let (m, _) = model();
        assert!(estimate(&m, &AveragingPlan::new(0.0, 3, 0), None).is_err());
        assert!(estimate(&m, &AveragingPlan::new(0.5, 0, 0), None).is_err());
    }

    #[test]
    fn failures_are_reported_with_draw_index() {
        let (m, _) = model();
        let mut plan = AveragingPlan::new(0.5, 4, 0);
        plan.eigen_max_iter = Some(1);
        plan.eigen_tol = 0.0;
        match estimate(&m, &plan, None) {
            Err(Error::AllDrawsFailed(4)) => {}
            other => panic!("unexpected {other:?}"),
        }
        let r: Vec<Result<u8>> = vec![Ok(1), Err(Error::ZeroMatrix), Ok(2)];
        assert!(matches!(collect_draws(r), Err(Error::Draw { index: 1, .. })));
    }

    #[test]
    fn rect_p_one_is_exact() {
        let a = DenseMatrix::from_fn(4, 6, |i, j| ((i + 1) as f64) * ((j % 3) as f64 + 1.0) + (i == j) as u8 as f64);
        let t = RectSpectralModel::from_dense(&a).unwrap();
        let rep = estimate_rect(&a, &AveragingPlan::new(1.0, 2, 1), Some(&t)).unwrap();
        assert!((rep.left.alignment.unwrap() - 1.0).abs() < 1e-9);
        assert!((rep.right.alignment.unwrap() - 1.0).abs() < 1e-9);
    }
}

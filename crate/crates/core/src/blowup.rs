//! Growth of `‖C/√n‖₂` at sampling rates `p = (ln n)^{1−δ}/n`.
//!
//! The diagonal of `CᵀC` is a function of the column degrees `d_i` of the
//! `+a` pattern, an Erdős–Rényi degree sequence:
//! `T(i,i) = np/(1−p) + d_i((1−p)/p − p/(1−p))`. Since
//! `‖C‖₂² ≥ max_i T(i,i)`, a large maximum degree forces a large norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{spectral_norm_with, LinearOperator, SpectralNormConfig};
use crate::rng::derive_seed;
use crate::subsample::{draw_c, median, CenteredBernoulliMatrix, SampleConfig};

/// Largest `p` with `(1−p)/p − p/(1−p) ≥ 1/(2p)`; the inequality reduces to `3p ≤ 1`.
pub const SMALL_P_CROSSOVER: f64 = 1.0 / 3.0;

/// `(1−p)/p − p/(1−p)`
pub fn degree_coefficient(p: f64) -> f64 {
    (1.0 - p) / p - p / (1.0 - p)
}

/// `T(i,i)` for every index.
pub fn t_diagonal(degrees: &[usize], n: usize, p: f64) -> Vec<f64> {
    let base = n as f64 * p / (1.0 - p);
    let slope = degree_coefficient(p);
    degrees.iter().map(|&d| base + d as f64 * slope).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdVariant {
    /// `k = np + (ln n)^{1−4δ/5}`
    LogShift,
    /// `k = np(1 + v_n)`
    Generalized(f64),
}

/// `v_n = (ln n)^{δ/5}`, a valid choice for `Generalized`.
pub fn log_power_vn(n: usize, delta: f64) -> f64 {
    (n as f64).ln().powf(delta / 5.0)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta {delta} outside (0, 1)")))
    }
}

/// Degree threshold `k` that the maximum degree exceeds with probability tending to one.
pub fn threshold_k(n: usize, p: f64, delta: f64, variant: ThresholdVariant) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("n = {n} must be at least 3")));
    }
    check_delta(delta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let np = nf * p;
    match variant {
        ThresholdVariant::LogShift => Ok(np + ln.powf(1.0 - 0.8 * delta)),
        ThresholdVariant::Generalized(v_n) => {
            let u_n = np / ln.powf(1.0 - delta);
            let log_ratio = v_n / ln;
            let quartic_ratio = v_n / (ln.powf(delta) / u_n).powf(0.25);
            if !(v_n > 0.0 && log_ratio < 1.0 && quartic_ratio < 1.0) {
                return Err(Error::InvalidVn {
                    n: nf,
                    v_n,
                    log_ratio,
                    quartic_ratio,
                });
            }
            Ok(np * (1.0 + v_n))
        }
    }
}

/// Lower bound on `P(d ≥ k)` for one `Binomial(n, p)` degree, and the
/// divergence witness `n × bound`, both as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLowerBound {
    pub log_bound: f64,
    pub log_witness: f64,
}

impl TailLowerBound {
    pub fn bound(&self) -> f64 {
        self.log_bound.exp()
    }

    pub fn witness(&self) -> f64 {
        self.log_witness.exp()
    }
}

/// `(2πpqn)^{−1/2} exp(−h²/(2pqn) − h³/(2q²n²) − h⁴/(3p³n³) − h/(pn) − β)`
/// with `h = k − np`, `q = 1 − p`, `β = 1/(12k) + 1/(12(n−k))`.
pub fn bollobas_lower_bound(n: usize, p: f64, k: f64) -> Result<TailLowerBound> {
    let nf = n as f64;
    if !(k > 0.0 && k < nf) {
        return Err(Error::Domain(format!("k = {k} outside (0, {n})")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let q = 1.0 - p;
    let h = k - nf * p;
    let pn = p * nf;
    let beta = 1.0 / (12.0 * k) + 1.0 / (12.0 * (nf - k));
    let exponent = -h * h / (2.0 * pn * q)
        - h.powi(3) / (2.0 * q * q * nf * nf)
        - h.powi(4) / (3.0 * pn.powi(3))
        - h / pn
        - beta;
    let log_bound = -0.5 * (2.0 * std::f64::consts::PI * pn * q).ln() + exponent;
    Ok(TailLowerBound {
        log_bound,
        log_witness: nf.ln() + log_bound,
    })
}

/// Column degrees of the `+a` pattern of a symmetric `C` drawn with
/// `SampleConfig::new(p, seed)`, the diagonal counted once.
pub fn sample_degrees(n: usize, p: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(vec![0; n]);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(draw_c(n, &SampleConfig::new(p, seed)?)?.column_counts())
}

/// `C/√n` as an operator.
struct Normalized<'a> {
    c: &'a CenteredBernoulliMatrix,
    scale: f64,
}

impl LinearOperator for Normalized<'_> {
    fn shape(&self) -> (usize, usize) {
        LinearOperator::shape(self.c)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.c.apply(x, y);
        y.iter_mut().for_each(|v| *v *= self.scale);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.c.apply_transpose(x, y);
        y.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// Power-iteration estimate of `‖C/√n‖₂` started at `e_start`.
///
/// The first iterate is at least `‖C e_start‖/√n`, and later iterates
/// never decrease, so the result is `≥ √(T(start, start)/n)`.
pub fn normalized_opnorm(
    c: &CenteredBernoulliMatrix,
    start: usize,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let n = LinearOperator::shape(c).1;
    let mut e = vec![0.0; n];
    e[start] = 1.0;
    let cfg = SpectralNormConfig {
        tol,
        max_iter: Some(max_iter),
        seed: 0,
        start: Some(e),
    };
    let op = Normalized {
        c,
        scale: 1.0 / (n as f64).sqrt(),
    };
    spectral_norm_with(&op, &cfg)
}

/// How the sampling rate depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateSchedule {
    /// `p = (ln n)^{1−δ}/n`
    Blowup,
    /// `p = (ln n)²/n`
    LogSquared,
}

impl RateSchedule {
    pub fn rate(&self, n: usize, delta: f64) -> f64 {
        let nf = n as f64;
        match self {
            RateSchedule::Blowup => nf.ln().powf(1.0 - delta) / nf,
            RateSchedule::LogSquared => nf.ln().powi(2) / nf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTrace {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub draw: usize,
    pub degrees: Vec<usize>,
    pub max_t_over_n: f64,
    pub k_threshold: f64,
    /// `k/(2np)`
    pub k_over_2np: f64,
    pub tail_lower_bound: f64,
    pub tail_lower_bound_log: f64,
    /// `‖C/√n‖₂`
    pub opnorm_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub n: usize,
    pub p: f64,
    pub median_max_t_over_n: f64,
    pub median_opnorm: f64,
    pub k_over_2np: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub draws_per_n: usize,
    pub seed: u64,
    pub schedule: RateSchedule,
    pub norm_tol: f64,
    pub norm_max_iter: usize,
}

impl BlowupConfig {
    pub fn new(delta: f64, n_grid: Vec<usize>, draws_per_n: usize, seed: u64) -> Self {
        Self {
            delta,
            n_grid,
            draws_per_n,
            seed,
            schedule: RateSchedule::Blowup,
            norm_tol: 1e-8,
            norm_max_iter: 5000,
        }
    }
}

fn trace(cfg: &BlowupConfig, n: usize, draw: usize) -> Result<BlowupTrace> {
    let p = cfg.schedule.rate(n, cfg.delta);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(format!("rate {p} at n = {n} outside (0, 1)")));
    }
    let sample = SampleConfig::new(p, derive_seed(cfg.seed, n as u64))?.with_stream(draw as u64);
    let c = draw_c(n, &sample)?;
    let degrees = c.column_counts();
    let t = t_diagonal(&degrees, n, p);
    let (argmax, tmax) = t
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let opnorm = normalized_opnorm(&c, argmax, cfg.norm_tol, cfg.norm_max_iter)?;
    let k = threshold_k(n, p, cfg.delta, ThresholdVariant::LogShift)?;
    let tail = bollobas_lower_bound(n, p, k)?;
    Ok(BlowupTrace {
        n,
        p,
        delta: cfg.delta,
        draw,
        degrees,
        max_t_over_n: tmax / n as f64,
        k_threshold: k,
        k_over_2np: k / (2.0 * n as f64 * p),
        tail_lower_bound: tail.bound(),
        tail_lower_bound_log: tail.log_bound,
        opnorm_estimate: opnorm,
    })
}

/// One trace per `(n, draw)`, ordered by grid position then draw.
pub fn blowup_experiment(cfg: &BlowupConfig) -> Result<Vec<BlowupTrace>> {
    check_delta(cfg.delta)?;
    if cfg.draws_per_n == 0 {
        return Err(Error::InvalidConfig("draws_per_n must be positive".into()));
    }
    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.draws_per_n).map(move |d| (n, d)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, d)| trace(cfg, n, d))
        .collect()
}

/// Medians over draws, one row per grid point in grid order.
pub fn summarize(traces: &[BlowupTrace]) -> Vec<BlowupSummary> {
    let mut out: Vec<BlowupSummary> = Vec::new();
    let mut start = 0;
    while start < traces.len() {
        let n = traces[start].n;
        let end = start + traces[start..].iter().take_while(|t| t.n == n).count();
        let group = &traces[start..end];
        let tmax: Vec<f64> = group.iter().map(|t| t.max_t_over_n).collect();
        let norms: Vec<f64> = group.iter().map(|t| t.opnorm_estimate).collect();
        out.push(BlowupSummary {
            n,
            p: group[0].p,
            median_max_t_over_n: median(&tmax),
            median_opnorm: median(&norms),
            k_over_2np: group[0].k_over_2np,
        });
        start = end;
    }
    out
}

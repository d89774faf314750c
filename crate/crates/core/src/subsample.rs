//! Bernoulli elementwise sampling `S_ij = M_ij / p` with probability `p`, the
//! centered two-point matrix `C` and the residual `E = S − M`.
//!
//! With `a = √((1−p)/p)` and `b = √(p/(1−p))`, `C_ij = a` where the entry was
//! kept and `−b` elsewhere. Then `S = M + a·(M ∘ C)` exactly.
//!
//! Retained positions are generated by geometric skips over the cells in
//! row-major order (upper triangle including the diagonal when symmetric,
//! the full grid otherwise). [`draw_sample`], [`draw_c`] and [`draw_paired`]
//! consume the same stream, so equal configs give matching `S` and `C`.

use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    spectral_norm_with, DenseMatrix, DenseSymmetric, EntryAccess, LinearOperator, SparseCsr,
    SpectralNormConfig, SymmetricOperator,
};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub p: f64,
    pub seed: u64,
    /// Independent stream under `seed`, normally the draw index.
    pub stream: u64,
    /// Sample `i ≤ j` only and mirror.
    pub symmetric: bool,
}

impl SampleConfig {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            p,
            seed,
            stream: 0,
            symmetric: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p > 0.0 && self.p <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidProbability(self.p))
        }
    }
}

/// `(√((1−p)/p), √(p/(1−p)))`; both zero at `p = 1` where `C ≡ 0`.
pub fn two_point_values(p: f64) -> (f64, f64) {
    if p >= 1.0 {
        (0.0, 0.0)
    } else {
        (((1.0 - p) / p).sqrt(), (p / (1.0 - p)).sqrt())
    }
}

/// Kept cells in increasing row-major order.
fn kept_positions(rows: usize, cols: usize, symmetric: bool, cfg: &SampleConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if rows == 0 || cols == 0 {
        return out;
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let geo = Geometric::new(cfg.p).expect("p validated in (0, 1]");
    let row_start = |i: usize| if symmetric { i } else { 0 };
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let mut skip = geo.sample(&mut rng);
        // Advance `skip` cells from (i, j).
        loop {
            let left = (cols - j) as u64;
            if skip < left {
                j += skip as usize;
                break;
            }
            skip -= left;
            i += 1;
            if i >= rows {
                return out;
            }
            j = row_start(i);
        }
        out.push((i, j));
        j += 1;
        if j == cols {
            i += 1;
            if i >= rows {
                return out;
            }
            j = row_start(i);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub s: SparseCsr,
    pub config: SampleConfig,
    /// Bernoulli successes (upper triangle when symmetric), including cells
    /// whose `M_ij` is zero and therefore not stored.
    pub kept_count: usize,
}

fn build_s(
    rows: usize,
    cols: usize,
    m: &impl EntryAccess,
    kept: &[(usize, usize)],
    cfg: &SampleConfig,
    symmetric: bool,
) -> Result<SparseCsr> {
    let inv = 1.0 / cfg.p;
    let mut triplets = Vec::with_capacity(if symmetric { 2 * kept.len() } else { kept.len() });
    for &(i, j) in kept {
        let v = m.entry(i, j) * inv;
        triplets.push((i, j, v));
        if symmetric && i != j {
            triplets.push((j, i, v));
        }
    }
    SparseCsr::from_triplets(rows, cols, triplets)
}

/// One subsampled copy of a symmetric matrix. With `cfg.symmetric = false`
/// every entry is sampled independently and `S` is generally not symmetric.
pub fn draw_sample(m: &DenseSymmetric, cfg: &SampleConfig) -> Result<SampleDraw> {
    cfg.validate()?;
    let n = m.n();
    let kept = kept_positions(n, n, cfg.symmetric, cfg);
    Ok(SampleDraw {
        s: build_s(n, n, m, &kept, cfg, cfg.symmetric)?,
        config: *cfg,
        kept_count: kept.len(),
    })
}

/// One subsampled copy of a rectangular matrix (every entry independent).
pub fn draw_sample_rect(m: &DenseMatrix, cfg: &SampleConfig) -> Result<SampleDraw> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    let cfg = SampleConfig {
        symmetric: false,
        ..*cfg
    };
    let kept = kept_positions(rows, cols, false, &cfg);
    Ok(SampleDraw {
        s: build_s(rows, cols, m, &kept, &cfg, false)?,
        config: cfg,
        kept_count: kept.len(),
    })
}

/// `S` and the `C` it was generated from, sharing one stream.
pub fn draw_paired(
    m: &DenseSymmetric,
    cfg: &SampleConfig,
) -> Result<(SampleDraw, CenteredBernoulliMatrix)> {
    cfg.validate()?;
    let n = m.n();
    let kept = kept_positions(n, n, cfg.symmetric, cfg);
    let s = build_s(n, n, m, &kept, cfg, cfg.symmetric)?;
    let c = CenteredBernoulliMatrix::from_kept(n, n, &kept, cfg.p, cfg.symmetric)?;
    Ok((
        SampleDraw {
            s,
            config: *cfg,
            kept_count: kept.len(),
        },
        c,
    ))
}

/// The two-point matrix `C` for an `n × n` draw under `cfg`.
pub fn draw_c(n: usize, cfg: &SampleConfig) -> Result<CenteredBernoulliMatrix> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    let kept = kept_positions(n, n, cfg.symmetric, cfg);
    CenteredBernoulliMatrix::from_kept(n, n, &kept, cfg.p, cfg.symmetric)
}

/// Entries `a = √((1−p)/p)` on the kept pattern and `−b = −√(p/(1−p))`
/// elsewhere. Only the pattern is stored; `C = (a+b)·P − b·𝟙𝟙ᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteredBernoulliMatrix {
    pattern: SparseCsr,
    p: f64,
    a: f64,
    b: f64,
    symmetric: bool,
}

impl CenteredBernoulliMatrix {
    fn from_kept(
        rows: usize,
        cols: usize,
        kept: &[(usize, usize)],
        p: f64,
        symmetric: bool,
    ) -> Result<Self> {
        let mut triplets = Vec::with_capacity(2 * kept.len());
        for &(i, j) in kept {
            triplets.push((i, j, 1.0));
            if symmetric && i != j {
                triplets.push((j, i, 1.0));
            }
        }
        let (a, b) = two_point_values(p);
        Ok(Self {
            pattern: SparseCsr::from_triplets(rows, cols, triplets)?,
            p,
            a,
            b,
            symmetric,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(a, b)` so entries are `a` or `−b`.
    pub fn values(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// 0/1 matrix marking the `+a` entries.
    pub fn pattern(&self) -> &SparseCsr {
        &self.pattern
    }

    /// Number of `+a` entries in each column (the diagonal counts once).
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.pattern.n_cols()];
        for &c in self.pattern.col_idx() {
            counts[c] += 1;
        }
        counts
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let (r, c) = self.pattern_shape();
        DenseMatrix::from_fn(r, c, |i, j| self.entry(i, j))
    }

    fn pattern_shape(&self) -> (usize, usize) {
        (self.pattern.n_rows(), self.pattern.n_cols())
    }
}

impl LinearOperator for CenteredBernoulliMatrix {
    fn shape(&self) -> (usize, usize) {
        self.pattern_shape()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.pattern.apply(x, y);
        let shift = self.b * x.iter().sum::<f64>();
        let ab = self.a + self.b;
        y.iter_mut().for_each(|v| *v = ab * *v - shift);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.pattern.apply_transpose(x, y);
        let shift = self.b * x.iter().sum::<f64>();
        let ab = self.a + self.b;
        y.iter_mut().for_each(|v| *v = ab * *v - shift);
    }
}

impl SymmetricOperator for CenteredBernoulliMatrix {}

impl EntryAccess for CenteredBernoulliMatrix {
    fn shape(&self) -> (usize, usize) {
        self.pattern_shape()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if self.pattern.get(i, j) != 0.0 {
            self.a
        } else {
            -self.b
        }
    }
}

/// `E = S − M`.
pub fn residual(m: &DenseSymmetric, draw: &SampleDraw) -> Result<DenseMatrix> {
    let n = m.n();
    if (draw.s.n_rows(), draw.s.n_cols()) != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: (draw.s.n_rows(), draw.s.n_cols()),
        });
    }
    let mut e = m.as_dense().scale(-1.0);
    for i in 0..n {
        for (j, v) in draw.s.row(i) {
            e.set(i, j, e.get(i, j) + v);
        }
    }
    Ok(e)
}

/// `E` of a symmetric draw, kept in symmetric storage.
pub fn residual_symmetric(m: &DenseSymmetric, draw: &SampleDraw) -> Result<DenseSymmetric> {
    if !draw.config.symmetric {
        return Err(Error::InvalidConfig("draw was not sampled symmetrically".into()));
    }
    // S is mirrored exactly, so S − M is exactly symmetric.
    DenseSymmetric::new(m.n(), residual(m, draw)?.into_vec())
}

/// `√((1−p)/p) · (M ∘ C)`.
pub fn residual_from_c(m: &DenseSymmetric, c: &CenteredBernoulliMatrix) -> Result<DenseMatrix> {
    let n = m.n();
    if EntryAccess::shape(c) != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: EntryAccess::shape(c),
        });
    }
    let (a, _) = two_point_values(c.p);
    Ok(DenseMatrix::from_fn(n, n, |i, j| a * m.get(i, j) * c.entry(i, j)))
}

/// Spread of `‖C/√n‖₂` over independent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProfile {
    pub n: usize,
    pub p: f64,
    /// `‖C/√n‖₂` per draw, in draw order.
    pub norms: Vec<f64>,
    pub median: f64,
    /// `|norm − median|` per draw.
    pub deviations: Vec<f64>,
}

impl ConcentrationProfile {
    /// Fraction of draws whose deviation exceeds `t`.
    pub fn tail_fraction(&self, t: f64) -> f64 {
        let hits = self.deviations.iter().filter(|&&d| d > t).count();
        hits as f64 / self.deviations.len() as f64
    }

    /// `4·exp(−t²p(1−p)n/8)`
    pub fn tail_bound(&self, t: f64) -> f64 {
        concentration_tail_bound(self.n, self.p, t)
    }
}

/// `4·exp(−t²p(1−p)n/8)`
pub fn concentration_tail_bound(n: usize, p: f64, t: f64) -> f64 {
    4.0 * (-t * t * p * (1.0 - p) * n as f64 / 8.0).exp()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median of `‖C/√n‖₂` over `draws` draws; draw `i` uses stream `i`.
pub fn concentration_profile(
    n: usize,
    p: f64,
    draws: usize,
    seed: u64,
) -> Result<ConcentrationProfile> {
    if draws < 10 {
        return Err(Error::InvalidConfig("at least 10 draws are needed".into()));
    }
    let base = SampleConfig::new(p, seed)?;
    let scale = 1.0 / (n as f64).sqrt();
    let norms = (0..draws)
        .into_par_iter()
        .map(|i| {
            let c = draw_c(n, &base.with_stream(i as u64))?;
            let cfg = SpectralNormConfig {
                seed: derive_seed(seed, i as u64),
                ..SpectralNormConfig::default()
            };
            Ok(spectral_norm_with(&c, &cfg)? * scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    let med = median(&norms);
    let deviations = norms.iter().map(|v| (v - med).abs()).collect();
    Ok(ConcentrationProfile {
        n,
        p,
        norms,
        median: med,
        deviations,
    })
}

//! Incoherence `μ(M, α) = Σ |λ_i| n^{α_i} ‖u_i‖_∞²`, sparsity exponents and the
//! spectral-norm error bounds for `E = S − M`.

mod model;

pub use model::{exponent_for, support, support_size, RectSpectralModel, SpectralModel, SUPPORT_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dense_symmetric_eigen, DenseSymmetric, EntryAccess, MatrixNorms};
use crate::subsample::{two_point_values, CenteredBernoulliMatrix};

/// `α_i = log Card(u_i) / log n`, clamped to `[0, 1]`.
pub fn fit_alpha(model: &SpectralModel) -> Vec<f64> {
    model
        .eigenvectors()
        .iter()
        .map(|u| exponent_for(u, model.n()))
        .collect()
}

/// `Σ |λ_i| n^{α_i} ‖u_i‖_∞²` with the model's stored exponents.
pub fn mu(model: &SpectralModel) -> f64 {
    let n = model.n() as f64;
    model
        .eigenvalues()
        .iter()
        .zip(model.alpha())
        .enumerate()
        .map(|(i, (l, a))| {
            let inf = model.vector_inf_norm(i);
            l.abs() * n.powf(*a) * inf * inf
        })
        .sum()
}

/// `Σ σ_i n^{α_i/2} ‖u_i‖_∞ m^{β_i/2} ‖v_i‖_∞`
pub fn mu_rect(model: &RectSpectralModel) -> f64 {
    let (n, m) = model.shape();
    let (n, m) = (n as f64, m as f64);
    (0..model.singular_values().len())
        .map(|i| {
            model.singular_values()[i]
                * n.powf(model.alpha()[i] / 2.0)
                * crate::matrix::norm_inf(&model.left()[i])
                * m.powf(model.beta()[i] / 2.0)
                * crate::matrix::norm_inf(&model.right()[i])
        })
        .sum()
}

/// `4 ‖M‖_∞ √(n/p)`
pub fn am07_bound_from(entrywise_max: f64, n: usize, p: f64) -> f64 {
    4.0 * entrywise_max * (n as f64 / p).sqrt()
}

/// `4 ‖M‖_∞ √(n/p)` for a dense matrix.
pub fn am07_bound(m: &DenseSymmetric, p: f64) -> f64 {
    am07_bound_from(m.norms().entrywise_max, m.n(), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Finite-n stand-in for the vanishing ratio hypothesis.
    pub ratio_threshold: f64,
    /// δ in `α_min > (log n)^{(δ−3)/4}`.
    pub delta: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            ratio_threshold: 0.1,
            delta: 1.0,
        }
    }
}

/// An error bound together with the finite-n checks of its hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceBound {
    pub value: f64,
    pub mu: f64,
    pub alpha_min: f64,
    /// `(log N)⁴ / (p N)` with `N = n^{α_min}` (or `n^{α_min/2} m^{β_min/2}`).
    pub hypothesis_ratio: f64,
    pub ratio_ok: bool,
    pub alpha_min_ok: bool,
    pub p_below_half: bool,
}

impl IncoherenceBound {
    pub fn valid(&self) -> bool {
        self.ratio_ok && self.alpha_min_ok && self.p_below_half
    }
}

fn assemble(
    value: f64,
    mu: f64,
    alpha_min: f64,
    effective: f64,
    n: usize,
    p: f64,
    cfg: &BoundConfig,
) -> IncoherenceBound {
    let ln_eff = effective.ln();
    let hypothesis_ratio = ln_eff.powi(4) / (p * effective);
    let ln_n = (n as f64).ln();
    IncoherenceBound {
        value,
        mu,
        alpha_min,
        hypothesis_ratio,
        ratio_ok: hypothesis_ratio < cfg.ratio_threshold,
        alpha_min_ok: alpha_min > ln_n.powf((cfg.delta - 3.0) / 4.0),
        p_below_half: p < 0.5,
    }
}

/// `2 μ (p n^{α_min})^{−1/2}`
pub fn incoherence_bound(model: &SpectralModel, p: f64, cfg: &BoundConfig) -> IncoherenceBound {
    let mu = mu(model);
    let a = model.alpha_min();
    let eff = (model.n() as f64).powf(a);
    assemble(2.0 * mu / (p * eff).sqrt(), mu, a, eff, model.n(), p, cfg)
}

/// `2 μ / √(p n^{α_min/2} m^{β_min/2})`
pub fn rect_bound(model: &RectSpectralModel, p: f64, cfg: &BoundConfig) -> IncoherenceBound {
    let mu = mu_rect(model);
    let (n, m) = model.shape();
    let a = model.alpha_min();
    let b = model.beta_min();
    let eff = (n as f64).powf(a / 2.0) * (m as f64).powf(b / 2.0);
    assemble(2.0 * mu / (p * eff).sqrt(), mu, a.min(b), eff, n, p, cfg)
}

/// Entrywise-max bound over the incoherence bound; independent of `p`.
pub fn bound_ratio(model: &SpectralModel) -> f64 {
    let n = model.n() as f64;
    2.0 * model.entrywise_max() * n.powf((model.alpha_min() + 1.0) / 2.0) / mu(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub ok: bool,
    /// `d_k/2 − bound`
    pub margin: f64,
    pub bound: f64,
    pub separation: f64,
}

/// Whether the incoherence bound lies strictly below half the separation of `λ_k`.
pub fn perturbation_admissible(
    model: &SpectralModel,
    p: f64,
    k: usize,
    cfg: &BoundConfig,
) -> Result<Admissibility> {
    let d = model.separation(k)?;
    let bound = incoherence_bound(model, p, cfg).value;
    let margin = d / 2.0 - bound;
    Ok(Admissibility {
        ok: margin > 0.0,
        margin,
        bound,
        separation: d,
    })
}

/// Right side of the Hadamard chain
/// `‖E‖₂ ≤ √((1−p)/p) Σ |λ_i| ‖u_i‖_∞² ‖C[supp u_i]‖₂`
/// for one instantiated `C`, with `C[·]` the principal submatrix on the support.
pub fn hadamard_chain_bound(model: &SpectralModel, c: &CenteredBernoulliMatrix) -> Result<f64> {
    let n = model.n();
    if EntryAccess::shape(c) != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: EntryAccess::shape(c),
        });
    }
    if !c.is_symmetric() {
        return Err(Error::InvalidConfig("C must be a symmetric draw".into()));
    }
    let (a, _) = two_point_values(c.p());
    let mut total = 0.0;
    for (i, &l) in model.eigenvalues().iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let idx = support(model.vector(i));
        let sub = DenseSymmetric::from_upper_fn(idx.len(), |x, y| c.entry(idx[x], idx[y]));
        let (vals, _) = dense_symmetric_eigen(&sub);
        let spec = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let inf = model.vector_inf_norm(i);
        total += l.abs() * inf * inf * spec;
    }
    Ok(a * total)
}

/// Summary emitted by the `bounds` CLI subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub mu: f64,
    pub alpha: Vec<f64>,
    pub alpha_min: f64,
    pub bound_am07: f64,
    pub bound_incoherence: f64,
    pub admissible: bool,
    pub margin: f64,
    pub hypotheses_ok: bool,
}

pub fn bounds_report(
    model: &SpectralModel,
    p: f64,
    k: usize,
    cfg: &BoundConfig,
) -> Result<BoundsReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let inc = incoherence_bound(model, p, cfg);
    let adm = perturbation_admissible(model, p, k, cfg)?;
    Ok(BoundsReport {
        mu: inc.mu,
        alpha: model.alpha().to_vec(),
        alpha_min: inc.alpha_min,
        bound_am07: am07_bound_from(model.entrywise_max(), model.n(), p),
        bound_incoherence: inc.value,
        admissible: adm.ok,
        margin: adm.margin,
        hypotheses_ok: inc.valid(),
    })
}

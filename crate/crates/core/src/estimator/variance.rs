use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incoherence::{mu, SpectralModel};
use crate::matrix::{DenseSymmetric, MatrixNorms};

/// Closed-form bounds on `E‖R E u₁‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBudget {
    pub p: f64,
    pub exact_bound: f64,
    /// `‖u₁‖_∞² NumRank(M) / (p (1 − λ₂/λ₁)²)`
    pub relaxed_bound: f64,
    /// False when `λ₁ ≠ ‖M‖₂`, the hypothesis of the relaxed form.
    pub relaxed_valid: bool,
    /// `u₁ ∘ u₁`
    pub w1: Vec<f64>,
    /// `M ∘ M`
    pub cal_m: DenseSymmetric,
    pub separation: f64,
    pub num_rank: f64,
}

fn square(x: f64) -> f64 {
    x * x
}

/// `2 wᵀ𝓜w − Σ_k w(k)² 𝓜_kk` for `w = u ∘ u` and `𝓜 = M ∘ M`.
fn quadratic_bracket(m: &DenseSymmetric, u: &[f64]) -> f64 {
    let n = m.n();
    let w: Vec<f64> = u.iter().map(|x| x * x).collect();
    let mut quad = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        let row = m.as_dense().row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += square(row[j]) * w[j];
        }
        quad += w[i] * acc;
        diag += w[i] * w[i] * square(row[i]);
    }
    2.0 * quad - diag
}

/// `var(uᵀEu) = (1−p)/p · (2 wᵀ𝓜w − Σ_k w(k)² 𝓜_kk)`
pub fn var_ueu_quadratic(m: &DenseSymmetric, u: &[f64], p: f64) -> f64 {
    (1.0 - p) / p * quadratic_bracket(m, u)
}

/// `var(uᵀEu) = (1−p)/p · (4 Σ_{i>j} u_i² u_j² M_ij² + Σ_i u_i⁴ M_ii²)`
pub fn var_ueu_pairwise(m: &DenseSymmetric, u: &[f64], p: f64) -> f64 {
    let n = m.n();
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        for j in 0..i {
            off += square(u[i] * u[j] * m.get(i, j));
        }
        diag += square(u[i] * u[i] * m.get(i, i));
    }
    (1.0 - p) / p * (4.0 * off + diag)
}

/// `var(u_kᵀ E u_k)` for the model's leading vector.
pub fn var_ueu(model: &SpectralModel, p: f64) -> f64 {
    var_ueu_quadratic(&model.to_dense(), model.vector(0), p)
}

/// Diagonal of `E[E²]`: `(1−p)‖M_i‖₂²/p`. Off-diagonal entries vanish.
pub fn e_second_moment_diag(m: &DenseSymmetric, p: f64) -> Vec<f64> {
    (0..m.n())
        .map(|i| {
            let col: f64 = m.as_dense().row(i).iter().map(|v| v * v).sum();
            (1.0 - p) / p * col
        })
        .collect()
}

/// Bounds on `E‖E‖₂²` and `E‖E‖₂³` in terms of a median `m_E` of `‖E‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBounds {
    pub second: f64,
    pub third: f64,
}

/// `m² + 32‖M‖_∞²/p² + 8m√(2π‖M‖_∞²/p²)` and `4m³ + 12√π (8‖M‖_∞²/p²)^{3/2}`.
pub fn e_moment_bounds(entrywise_max: f64, p: f64, m_e: f64) -> Result<MomentBounds> {
    if !(m_e >= 0.0) {
        return Err(Error::Domain(format!("median {m_e} must be nonnegative")));
    }
    let s2 = square(entrywise_max) / square(p);
    let pi = std::f64::consts::PI;
    Ok(MomentBounds {
        second: m_e * m_e + 32.0 * s2 + 8.0 * m_e * (2.0 * pi * s2).sqrt(),
        third: 4.0 * m_e.powi(3) + 12.0 * pi.sqrt() * (8.0 * s2).powf(1.5),
    })
}

/// `P(|‖E‖ − m_E| > t) ≤ 4 exp(−p² t² / (8‖M‖_∞²))`
pub fn e_tail_bound(entrywise_max: f64, p: f64, t: f64) -> f64 {
    4.0 * (-square(p * t) / (8.0 * square(entrywise_max))).exp()
}

/// Both variance bounds for the leading eigenvector.
pub fn variance_bound(model: &SpectralModel, p: f64) -> Result<VarianceBudget> {
    let d = model.separation(0)?;
    if d == 0.0 {
        return Err(Error::DuplicateEigenvalue {
            index: 0,
            value: model.eigenvalue(0),
        });
    }
    let m = model.to_dense();
    let u = model.vector(0);
    let n = m.n();
    let weighted_cols: f64 = (0..n)
        .map(|k| {
            let col: f64 = m.as_dense().row(k).iter().map(|v| v * v).sum();
            u[k] * u[k] * col
        })
        .sum();
    let exact = (1.0 - p) / p * (weighted_cols - quadratic_bracket(&m, u)) / square(d);

    let l1 = model.eigenvalue(0);
    let spec = model.eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let fro2: f64 = model.eigenvalues().iter().map(|v| v * v).sum();
    let num_rank = fro2 / square(spec);
    let inf = model.vector_inf_norm(0);
    let relaxed = inf * inf * num_rank / (p * square(d / l1));
    Ok(VarianceBudget {
        p,
        exact_bound: exact,
        relaxed_bound: relaxed,
        relaxed_valid: (l1 - spec).abs() <= 1e-12 * spec,
        w1: u.iter().map(|x| x * x).collect(),
        cal_m: m.hadamard(&m)?,
        separation: d,
        num_rank,
    })
}

/// Smallest `N` with `relaxed_bound / N ≤ target²`.
pub fn recommend_samples(budget: &VarianceBudget, target: f64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::Domain(format!("target {target} must be positive")));
    }
    let ratio = budget.relaxed_bound / (target * target);
    if ratio <= 1.0 {
        return Ok(1);
    }
    let mut n = ratio.ceil();
    // ceil of a quotient that should be an integer can overshoot by one ulp.
    if budget.relaxed_bound / (n - 1.0) <= target * target {
        n -= 1.0;
    }
    Ok(n as usize)
}

/// `ξ = μ / √(p n^{α_min})`
pub fn xi(model: &SpectralModel, p: f64) -> f64 {
    mu(model) / (p * (model.n() as f64).powf(model.alpha_min())).sqrt()
}

/// `d ≥ ξ √(ln ξ⁻²)`, false whenever `ξ ≥ 1`.
pub fn strong_separation_holds(xi: f64, d: f64) -> bool {
    if !(xi < 1.0) {
        return false;
    }
    if xi <= 0.0 {
        return d >= 0.0;
    }
    d >= xi * (-2.0 * xi.ln()).sqrt()
}

/// Strong separation for the leading eigenvalue.
pub fn strong_separation_ok(model: &SpectralModel, p: f64) -> Result<bool> {
    Ok(strong_separation_holds(xi(model, p), model.separation(0)?))
}

/// Entrywise max of `M` computed once and reused by the tail and moment bounds.
pub fn entrywise_max(m: &DenseSymmetric) -> f64 {
    m.norms().entrywise_max
}

//! Reduced-resolvent eigenvector expansions.
//!
//! For a simple eigenpair `(λ, u)` of `M` and `S = M + E` with eigenpair
//! `(λ_S, v)` gauged so that `vᵀu = 1`,
//! `v − u = −(I + Δ)⁻¹ R E u` with `Δ = R(E − γI)` and `γ = λ_S − λ`.
//! Truncating the Neumann series after `Δ^j` leaves an error of order
//! `(2‖E‖/d)^{j+2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incoherence::SpectralModel;
use crate::matrix::{
    axpy, dense_spectral_norm, dense_symmetric_eigen, dot, min_singular_value, DenseMatrix,
    DenseSymmetric, LinearOperator, SymmetricOperator,
};

/// Distance from `λ_k` to the nearest other eigenvalue of the model.
pub fn separation(model: &SpectralModel, k: usize) -> Result<f64> {
    model.separation(k)
}

/// `R_k = Σ_{j≠k} (λ_j − λ_k)⁻¹ u_j u_jᵀ`, applied from the factors.
///
/// When the model has an implicit zero tail the tail contributes
/// `−λ_k⁻¹ (I − U Uᵀ)` with `U` the stored vectors.
#[derive(Debug, Clone)]
pub struct ReducedResolvent {
    model: SpectralModel,
    k: usize,
    coef: Vec<f64>,
    tail: f64,
    separation: f64,
}

impl ReducedResolvent {
    pub fn new(model: &SpectralModel, k: usize) -> Result<Self> {
        let d = model.separation(k)?;
        let lk = model.eigenvalue(k);
        if d == 0.0 {
            return Err(Error::DuplicateEigenvalue { index: k, value: lk });
        }
        let coef = model
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(j, &l)| if j == k { 0.0 } else { 1.0 / (l - lk) })
            .collect();
        let tail = if model.has_zero_tail() { -1.0 / lk } else { 0.0 };
        Ok(Self {
            model: model.clone(),
            k,
            coef,
            tail,
            separation: d,
        })
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    /// `d_k`, so that `‖R_k‖₂ = 1/d_k`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Dense `n × n` assembly.
    pub fn to_dense(&self) -> DenseSymmetric {
        let n = self.model.n();
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            cols.push(self.apply_vec(&e));
            e[j] = 0.0;
        }
        DenseSymmetric::from_upper_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }
}

impl LinearOperator for ReducedResolvent {
    fn shape(&self) -> (usize, usize) {
        (self.model.n(), self.model.n())
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let vecs = self.model.eigenvectors();
        if self.tail != 0.0 {
            y.copy_from_slice(x);
            y.iter_mut().for_each(|v| *v *= self.tail);
        } else {
            y.iter_mut().for_each(|v| *v = 0.0);
        }
        // y = tail·x + Σ_j (coef_j − tail)(u_jᵀx) u_j
        for (j, u) in vecs.iter().enumerate() {
            axpy((self.coef[j] - self.tail) * dot(u, x), u, y);
        }
        // R u_k = 0 exactly, up to rounding.
        let uk = &vecs[self.k];
        let c = dot(uk, y);
        axpy(-c, uk, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y)
    }
}

impl SymmetricOperator for ReducedResolvent {}

/// `R_k` of the model.
pub fn reduced_resolvent(model: &SpectralModel, k: usize) -> Result<ReducedResolvent> {
    ReducedResolvent::new(model, k)
}

/// Normalization carried by a perturbed eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    /// `vᵀu = 1`
    UnitInner,
    /// `‖v‖ = 1`, `vᵀu ≥ 0`
    UnitNorm,
}

/// How `γ = λ_k(S) − λ_k` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EigenvalueShift {
    /// `λ_k(S)` from an eigensolve of `S`.
    Given(f64),
    /// `λ_k + u_kᵀ E u_k`
    FirstOrderProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationExpansion {
    pub order: usize,
    pub k: usize,
    pub lambda_s: f64,
    pub gamma: f64,
    pub e_norm: f64,
    pub separation: f64,
    /// `2‖E‖₂/d`
    pub ratio: f64,
    /// `u − Σ_{m=0}^{j} (−1)^m Δ^m R E u`
    pub corrected: Vec<f64>,
    /// `½ (2‖E‖/d)^{j+2} / (1 − 2‖E‖/d)`
    pub error_budget: f64,
    pub gauge: Gauge,
}

impl PerturbationExpansion {
    /// `corrected / ‖corrected‖`
    pub fn unit_norm(&self) -> Vec<f64> {
        let mut v = self.corrected.clone();
        crate::matrix::normalize(&mut v);
        v
    }
}

/// `½ r^{j+2} / (1 − r)` for `r = 2‖E‖/d < 1`.
pub fn error_budget(ratio: f64, order: usize) -> Result<f64> {
    if !(ratio < 1.0) {
        return Err(Error::OutsidePerturbativeRegime { ratio });
    }
    Ok(0.5 * ratio.powi(order as i32 + 2) / (1.0 - ratio))
}

/// `Δ x = R(E x − γ x)`
fn apply_delta(r: &ReducedResolvent, e: &DenseSymmetric, gamma: f64, x: &[f64]) -> Vec<f64> {
    let mut ex = e.matvec(x);
    axpy(-gamma, x, &mut ex);
    r.apply_vec(&ex)
}

/// Order-`j` corrected eigenvector in the `vᵀu = 1` gauge.
pub fn expand(
    model: &SpectralModel,
    k: usize,
    e: &DenseSymmetric,
    shift: EigenvalueShift,
    order: usize,
) -> Result<PerturbationExpansion> {
    let r = ReducedResolvent::new(model, k)?;
    let n = model.n();
    if e.n() != n {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: (e.n(), e.n()),
        });
    }
    let e_norm = dense_spectral_norm(e);
    let d = r.separation();
    let ratio = 2.0 * e_norm / d;
    let budget = error_budget(ratio, order)?;
    let u = model.vector(k);
    let lambda = model.eigenvalue(k);
    let eu = e.matvec(u);
    let lambda_s = match shift {
        EigenvalueShift::Given(l) => l,
        EigenvalueShift::FirstOrderProxy => lambda + dot(u, &eu),
    };
    let gamma = lambda_s - lambda;
    let mut term = r.apply_vec(&eu);
    let mut sum = term.clone();
    for m in 1..=order {
        term = apply_delta(&r, e, gamma, &term);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        axpy(sign, &term, &mut sum);
    }
    let mut corrected = u.to_vec();
    axpy(-1.0, &sum, &mut corrected);
    Ok(PerturbationExpansion {
        order,
        k,
        lambda_s,
        gamma,
        e_norm,
        separation: d,
        ratio,
        corrected,
        error_budget: budget,
        gauge: Gauge::UnitInner,
    })
}

/// `u − REu + R(E − uᵀEu·I)REu`
pub fn second_order(model: &SpectralModel, k: usize, e: &DenseSymmetric) -> Result<Vec<f64>> {
    Ok(expand(model, k, e, EigenvalueShift::FirstOrderProxy, 1)?.corrected)
}

/// Eigenpair of `M + E` closest in angle to `u_k`, rescaled so `vᵀu_k = 1`.
pub fn exact_gauged_eigenvector(
    model: &SpectralModel,
    k: usize,
    e: &DenseSymmetric,
) -> Result<(f64, Vec<f64>)> {
    model.check_index(k)?;
    let s = model.to_dense().add(e)?;
    let (vals, vecs) = dense_symmetric_eigen(&s);
    let u = model.vector(k);
    let (best, inner) = vecs
        .iter()
        .enumerate()
        .map(|(i, v)| (i, dot(v, u)))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("n ≥ 1");
    if inner == 0.0 {
        return Err(Error::Domain("every eigenvector of S is orthogonal to u".into()));
    }
    let v = vecs[best].iter().map(|x| x / inner).collect();
    Ok((vals[best], v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedVector {
    pub vector: Vec<f64>,
    /// True when the exact eigenvector was kept.
    pub exact: bool,
    /// `‖(I + Δ)⁻¹‖₂`, infinite when `I + Δ` is singular.
    pub inverse_norm: f64,
}

/// `Δ = R(E − γI)` assembled densely.
pub fn delta_dense(r: &ReducedResolvent, e: &DenseSymmetric, gamma: f64) -> Result<DenseMatrix> {
    let n = e.n();
    let shifted = e.as_dense().sub(&DenseMatrix::identity(n).scale(gamma))?;
    r.to_dense().as_dense().matmul(&shifted)
}

/// `ṽ_ε`: the exact gauged eigenvector when `‖(I + Δ)⁻¹‖₂ ≤ 1/ε`,
/// otherwise `u − REu + ΔREu`.
pub fn regularize(
    model: &SpectralModel,
    k: usize,
    e: &DenseSymmetric,
    lambda_s: f64,
    eps: f64,
) -> Result<RegularizedVector> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("eps must be positive".into()));
    }
    let r = ReducedResolvent::new(model, k)?;
    let gamma = lambda_s - model.eigenvalue(k);
    let delta = delta_dense(&r, e, gamma)?;
    let id_plus = delta.add(&DenseMatrix::identity(model.n()))?;
    let smin = min_singular_value(&id_plus);
    let inverse_norm = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    if inverse_norm <= 1.0 / eps {
        let (_, v) = exact_gauged_eigenvector(model, k, e)?;
        return Ok(RegularizedVector {
            vector: v,
            exact: true,
            inverse_norm,
        });
    }
    let u = model.vector(k);
    let reu = r.apply_vec(&e.matvec(u));
    let dreu = delta.matvec(&reu);
    let vector = u
        .iter()
        .zip(&reu)
        .zip(&dreu)
        .map(|((a, b), c)| a - b + c)
        .collect();
    Ok(RegularizedVector {
        vector,
        exact: false,
        inverse_norm,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dense_svd, dense_symmetric_eigen, dot, norm_inf, DenseMatrix, DenseSymmetric};

const ORTHO_TOL: f64 = 1e-10;
/// Components below this magnitude do not count toward a support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Ground-truth eigendecomposition `M = Σ λ_i u_i u_iᵀ`.
///
/// Only the `r ≤ n` listed pairs are stored. When `r < n` the remaining
/// eigenvalues are zero (the orthogonal complement of the listed vectors).
/// Pairs are kept in decreasing eigenvalue order and indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    distinct: bool,
    pub mu_bound: Option<f64>,
}

fn check_orthonormal(vectors: &[Vec<f64>], len: usize) -> Result<()> {
    for (i, u) in vectors.iter().enumerate() {
        if u.len() != len {
            return Err(Error::ShapeMismatch {
                expected: (len, 1),
                found: (u.len(), 1),
            });
        }
        for (j, w) in vectors.iter().enumerate().take(i + 1) {
            let target = if i == j { 1.0 } else { 0.0 };
            if (dot(u, w) - target).abs() > ORTHO_TOL {
                return Err(Error::InvalidConfig(format!(
                    "vectors {j} and {i} are not orthonormal"
                )));
            }
        }
    }
    Ok(())
}

/// `Card(u)` with the absolute zero threshold.
pub fn support_size(u: &[f64]) -> usize {
    u.iter().filter(|v| v.abs() >= SUPPORT_THRESHOLD).count()
}

/// Indices of `u` above the zero threshold.
pub fn support(u: &[f64]) -> Vec<usize> {
    (0..u.len()).filter(|&i| u[i].abs() >= SUPPORT_THRESHOLD).collect()
}

/// Smallest `α ∈ [0,1]` with `Card(u) ≤ dim^α`.
pub fn exponent_for(u: &[f64], dim: usize) -> f64 {
    let card = support_size(u);
    if card <= 1 || dim < 2 {
        return 0.0;
    }
    ((card as f64).ln() / (dim as f64).ln()).clamp(0.0, 1.0)
}

fn check_exponents(vectors: &[Vec<f64>], exps: &[f64], dim: usize) -> Result<()> {
    if exps.len() != vectors.len() {
        return Err(Error::LengthMismatch(exps.len(), vectors.len()));
    }
    for (i, (u, &a)) in vectors.iter().zip(exps).enumerate() {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidConfig(format!("exponent {a} of pair {i} outside [0, 1]")));
        }
        let cap = (dim as f64).powf(a);
        // Guard against powf landing just above an integer.
        let cap = if (cap - cap.round()).abs() < 1e-9 { cap.round() } else { cap.ceil() };
        if support_size(u) as f64 > cap {
            return Err(Error::InvalidConfig(format!(
                "pair {i}: support {} exceeds {dim}^{a}",
                support_size(u)
            )));
        }
    }
    Ok(())
}

impl SpectralModel {
    /// Strict constructor: eigenvalues must be distinct (including from the
    /// implicit zero tail when `r < n`). Pairs are sorted into decreasing
    /// order and α is fitted from the supports.
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Result<Self> {
        let model = Self::build(eigenvalues, eigenvectors)?;
        if let Some((index, value)) = model.first_duplicate() {
            return Err(Error::DuplicateEigenvalue { index, value });
        }
        Ok(model)
    }

    /// Allows repeated eigenvalues (e.g. the identity). Operations that need
    /// a simple eigenvalue report [`Error::DuplicateEigenvalue`] later.
    pub fn with_repeated(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(eigenvalues, eigenvectors)
    }

    fn build(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.len() {
            return Err(Error::LengthMismatch(eigenvalues.len(), eigenvectors.len()));
        }
        let n = eigenvectors.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::InvalidConfig("model needs at least one eigenpair".into()));
        }
        if eigenvalues.len() > n {
            return Err(Error::InvalidConfig(format!(
                "{} eigenpairs in dimension {n}",
                eigenvalues.len()
            )));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("eigenvalues must be finite".into()));
        }
        check_orthonormal(&eigenvectors, n)?;
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let eigenvectors: Vec<Vec<f64>> = order.iter().map(|&i| eigenvectors[i].clone()).collect();
        let alpha = eigenvectors.iter().map(|u| exponent_for(u, n)).collect();
        let mut model = Self {
            n,
            eigenvalues,
            eigenvectors,
            alpha,
            distinct: true,
            mu_bound: None,
        };
        model.distinct = model.first_duplicate().is_none();
        Ok(model)
    }

    fn first_duplicate(&self) -> Option<(usize, f64)> {
        for (i, w) in self.eigenvalues.windows(2).enumerate() {
            if w[0] == w[1] {
                return Some((i + 1, w[1]));
            }
        }
        if self.has_zero_tail() {
            if let Some(i) = self.eigenvalues.iter().position(|&v| v == 0.0) {
                return Some((i, 0.0));
            }
        }
        None
    }

    /// Eigendecomposition of a dense matrix, dropping eigenvalues with
    /// `|λ| ≤ 1e−12·max|λ|` into the implicit zero tail.
    pub fn from_dense(m: &DenseSymmetric) -> Result<Self> {
        let (vals, vecs) = dense_symmetric_eigen(m);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let (v, u): (Vec<f64>, Vec<Vec<f64>>) = vals
            .into_iter()
            .zip(vecs)
            .filter(|(l, _)| l.abs() > 1e-12 * scale)
            .unzip();
        Self::with_repeated(v, u)
    }

    /// Replaces the fitted exponents, checking `Card(u_i) ≤ ⌈n^{α_i}⌉`.
    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Result<Self> {
        check_exponents(&self.eigenvectors, &alpha, self.n)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of explicitly stored pairs.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn has_zero_tail(&self) -> bool {
        self.rank() < self.n
    }

    pub fn is_distinct(&self) -> bool {
        self.distinct
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[k]
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Minimum exponent over pairs with nonzero eigenvalue.
    pub fn alpha_min(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.alpha)
            .filter(|(l, _)| **l != 0.0)
            .map(|(_, a)| *a)
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k < self.rank() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "eigen-index {k} out of range for a model with {} pairs",
                self.rank()
            )))
        }
    }

    /// Distance from `λ_k` to the nearest other eigenvalue (the zero tail
    /// included when present).
    pub fn separation(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        let lk = self.eigenvalues[k];
        let mut d = f64::INFINITY;
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            if j != k {
                d = d.min((l - lk).abs());
            }
        }
        if self.has_zero_tail() {
            d = d.min(lk.abs());
        }
        if d.is_infinite() {
            return Err(Error::Domain("separation needs n ≥ 2".into()));
        }
        Ok(d)
    }

    /// `M = Σ λ_i u_i u_iᵀ`
    pub fn to_dense(&self) -> DenseSymmetric {
        DenseSymmetric::from_spectrum(&self.eigenvalues, &self.eigenvectors)
    }

    /// `max_ij |M_ij|` evaluated from the factors.
    pub fn entrywise_max(&self) -> f64 {
        self.to_dense().as_dense().as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `‖u_k‖_∞`
    pub fn vector_inf_norm(&self, k: usize) -> f64 {
        norm_inf(&self.eigenvectors[k])
    }
}

/// Ground-truth SVD `M = Σ σ_i u_i v_iᵀ` of an `n × m` matrix with `u_i ∈ ℝⁿ`, `v_i ∈ ℝᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectSpectralModel {
    n: usize,
    m: usize,
    singular_values: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl RectSpectralModel {
    pub fn new(
        singular_values: Vec<f64>,
        left: Vec<Vec<f64>>,
        right: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let r = singular_values.len();
        if left.len() != r || right.len() != r {
            return Err(Error::LengthMismatch(left.len().max(right.len()), r));
        }
        if r == 0 {
            return Err(Error::InvalidConfig("model needs at least one triplet".into()));
        }
        if singular_values.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("singular values must be positive".into()));
        }
        let n = left[0].len();
        let m = right[0].len();
        check_orthonormal(&left, n)?;
        check_orthonormal(&right, m)?;
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
        let singular_values: Vec<f64> = order.iter().map(|&i| singular_values[i]).collect();
        let left: Vec<Vec<f64>> = order.iter().map(|&i| left[i].clone()).collect();
        let right: Vec<Vec<f64>> = order.iter().map(|&i| right[i].clone()).collect();
        let alpha = left.iter().map(|u| exponent_for(u, n)).collect();
        let beta = right.iter().map(|v| exponent_for(v, m)).collect();
        Ok(Self {
            n,
            m,
            singular_values,
            left,
            right,
            alpha,
            beta,
        })
    }

    /// SVD of a dense matrix, dropping `σ ≤ 1e−12·σ_max`.
    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        let (s, u, v) = dense_svd(a);
        let top = s.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > 1e-12 * top).collect();
        Self::new(
            keep.iter().map(|&i| s[i]).collect(),
            keep.iter().map(|&i| u[i].clone()).collect(),
            keep.iter().map(|&i| v[i].clone()).collect(),
        )
    }

    pub fn with_exponents(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_exponents(&self.left, &alpha, self.n)?;
        check_exponents(&self.right, &beta, self.m)?;
        self.alpha = alpha;
        self.beta = beta;
        Ok(self)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    /// `ρ = m / n`
    pub fn rho(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn left(&self) -> &[Vec<f64>] {
        &self.left
    }

    pub fn right(&self) -> &[Vec<f64>] {
        &self.right
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha.iter().copied().fold(1.0, f64::min)
    }

    pub fn beta_min(&self) -> f64 {
        self.beta.iter().copied().fold(1.0, f64::min)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.m, |i, j| {
            (0..self.singular_values.len())
                .map(|k| self.singular_values[k] * self.left[k][i] * self.right[k][j])
                .sum()
        })
    }
}

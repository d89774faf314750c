//! Matrix storage, norms and the iterative eigensolvers used throughout the crate.
//!
//! Two concrete symmetric storages are provided, [`DenseSymmetric`] and
//! [`SparseCsr`], plus a general [`DenseMatrix`] for rectangular data. Every
//! solver is written against the [`LinearOperator`] trait so the same code
//! runs on dense inputs, sampled sparse copies and matrix-free operators.

mod dense;
mod direct;
mod eigen;
pub mod market;
mod sparse;

pub use dense::{DenseMatrix, DenseSymmetric};
pub use direct::{
    dense_spectral_norm, dense_svd, dense_symmetric_eigen, max_singular_value, min_singular_value,
    solve,
};
pub use eigen::{
    fix_sign, numerical_rank, spectral_norm, spectral_norm_with, top_k_eigen, EigenConfig,
    EigenPair, SpectralNormConfig,
};
pub use sparse::SparseCsr;

use serde::{Deserialize, Serialize};

/// A matrix that can be applied to vectors.
pub trait LinearOperator: Sync {
    fn shape(&self) -> (usize, usize);

    /// `y ← A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `y ← Aᵀ x`
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

/// Marker for operators with `A = Aᵀ`.
pub trait SymmetricOperator: LinearOperator {}

/// Random access to entries, used by the Hadamard product and norms.
pub trait EntryAccess {
    fn shape(&self) -> (usize, usize);
    fn entry(&self, i: usize, j: usize) -> f64;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_transpose(x, y)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub frobenius: f64,
    /// `max_ij |A_ij|`
    pub entrywise_max: f64,
}

/// Frobenius norm and largest absolute entry.
pub trait MatrixNorms {
    fn norms(&self) -> Norms;
}

fn norms_of(values: impl Iterator<Item = f64>) -> Norms {
    let (sq, mx) = values.fold((0.0f64, 0.0f64), |(s, m), v| (s + v * v, m.max(v.abs())));
    Norms {
        frobenius: sq.sqrt(),
        entrywise_max: mx,
    }
}

impl MatrixNorms for DenseMatrix {
    fn norms(&self) -> Norms {
        norms_of(self.as_slice().iter().copied())
    }
}

impl MatrixNorms for DenseSymmetric {
    fn norms(&self) -> Norms {
        self.as_dense().norms()
    }
}

impl MatrixNorms for SparseCsr {
    fn norms(&self) -> Norms {
        norms_of(self.values().iter().copied())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Scales `x` to unit Euclidean norm in place and returns the old norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let nrm = norm2(x);
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

/// `y ← y + a x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `A ∘ B` for dense symmetric matrices of equal size.
pub fn hadamard(a: &DenseSymmetric, b: &DenseSymmetric) -> crate::Result<DenseSymmetric> {
    a.hadamard(b)
}

/// `A ∘ B` with a sparse left factor; the result stays sparse.
pub fn hadamard_sparse<B: EntryAccess + ?Sized>(
    a: &SparseCsr,
    b: &B,
) -> crate::Result<SparseCsr> {
    a.hadamard(b)
}

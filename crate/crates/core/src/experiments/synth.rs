//! Ground-truth generators with planted spectra and eigenvector supports.
//!
//! Supports are nested prefixes of one random permutation, so a vector with
//! a smaller support lives inside every larger one. Vectors are built in
//! increasing support size and Gram–Schmidt'ed against the earlier ones,
//! which keeps each inside its own support.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incoherence::{RectSpectralModel, SpectralModel};
use crate::matrix::{axpy, dot, normalize, DenseMatrix, DenseSymmetric};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Strictly decreasing, positive.
    pub spectrum: Vec<f64>,
    /// One size per eigenvalue; `None` means fully dense vectors.
    pub support_sizes: Option<Vec<usize>>,
    /// Forces `λ₁ = 1` and `λ₂ = gap_ratio`, scaling `λ₂, λ₃, …` together.
    pub gap_ratio: Option<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn dense(n: usize, spectrum: Vec<f64>, seed: u64) -> Self {
        Self {
            n,
            spectrum,
            support_sizes: None,
            gap_ratio: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_spectrum(&self.spectrum, self.n)?;
        if let Some(s) = &self.support_sizes {
            validate_supports(s, self.spectrum.len(), self.n)?;
        }
        if let Some(g) = self.gap_ratio {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::InvalidConfig(format!("gap ratio {g} outside (0, 1)")));
            }
            if self.spectrum.len() < 2 {
                return Err(Error::InvalidConfig("gap ratio needs two eigenvalues".into()));
            }
        }
        Ok(())
    }

    /// The spectrum after the gap override.
    pub fn effective_spectrum(&self) -> Vec<f64> {
        let l1 = self.spectrum[0];
        match self.gap_ratio {
            None => self.spectrum.clone(),
            Some(g) => {
                let tail = g / (self.spectrum[1] / l1);
                std::iter::once(1.0)
                    .chain(self.spectrum[1..].iter().map(|l| l / l1 * tail))
                    .collect()
            }
        }
    }
}

fn validate_spectrum(spectrum: &[f64], n: usize) -> Result<()> {
    if spectrum.is_empty() || spectrum.len() > n {
        return Err(Error::InvalidConfig(format!(
            "need between 1 and {n} eigenvalues, got {}",
            spectrum.len()
        )));
    }
    if spectrum.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidConfig("spectrum must be positive".into()));
    }
    if spectrum.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("spectrum must be strictly decreasing".into()));
    }
    Ok(())
}

fn validate_supports(sizes: &[usize], r: usize, n: usize) -> Result<()> {
    if sizes.len() != r {
        return Err(Error::LengthMismatch(sizes.len(), r));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::InvalidConfig(format!("support size {s} outside 1..={n}")));
    }
    Ok(())
}

/// `sizes.len()` orthonormal vectors in `ℝⁿ`, vector `i` supported on the
/// first `sizes[i]` entries of a random permutation.
pub fn orthonormal_with_supports(n: usize, sizes: &[usize], seed: u64) -> Result<Vec<Vec<f64>>> {
    validate_supports(sizes, sizes.len(), n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, 0));
    let mut rng = stream_rng(seed, 1);
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| sizes[i]);
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
    let mut done: Vec<usize> = Vec::new();
    for &i in &order {
        let mut v = vec![0.0; n];
        for &idx in &perm[..sizes[i]] {
            v[idx] = StandardNormal.sample(&mut rng);
        }
        let start = normalize(&mut v);
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for &j in &done {
                let c = dot(&out[j], &v);
                axpy(-c, &out[j], &mut v);
            }
        }
        if start == 0.0 || normalize(&mut v) < 1e-8 {
            return Err(Error::InfeasibleSupports {
                index: i,
                support: sizes[i],
            });
        }
        out[i] = v;
        done.push(i);
    }
    Ok(out)
}

/// `M = Σ λ_i u_i u_iᵀ` and its exact spectral model.
pub fn synth_symmetric(spec: &SyntheticSpec) -> Result<(DenseSymmetric, SpectralModel)> {
    spec.validate()?;
    let spectrum = spec.effective_spectrum();
    let sizes = spec
        .support_sizes
        .clone()
        .unwrap_or_else(|| vec![spec.n; spectrum.len()]);
    let vectors = orthonormal_with_supports(spec.n, &sizes, spec.seed)?;
    let model = SpectralModel::new(spectrum, vectors)?;
    Ok((model.to_dense(), model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectSyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub singular_values: Vec<f64>,
    pub left_supports: Option<Vec<usize>>,
    pub right_supports: Option<Vec<usize>>,
    pub seed: u64,
}

/// `A = Σ σ_i u_i v_iᵀ` (`n × m`) and its exact model.
pub fn synth_rect(spec: &RectSyntheticSpec) -> Result<(DenseMatrix, RectSpectralModel)> {
    let r = spec.singular_values.len();
    validate_spectrum(&spec.singular_values, spec.n.min(spec.m))?;
    let ls = spec.left_supports.clone().unwrap_or_else(|| vec![spec.n; r]);
    let rs = spec.right_supports.clone().unwrap_or_else(|| vec![spec.m; r]);
    let left = orthonormal_with_supports(spec.n, &ls, spec.seed)?;
    let right = orthonormal_with_supports(spec.m, &rs, crate::rng::derive_seed(spec.seed, 1))?;
    let model = RectSpectralModel::new(spec.singular_values.clone(), left, right)?;
    Ok((model.to_dense(), model))
}

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm2, normalize, LinearOperator, MatrixNorms, SymmetricOperator};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Relative gap below which consecutive eigenvalues are flagged as degenerate.
const DEGENERATE_GAP: f64 = 1e-10;
/// Power steps used to estimate `‖A‖₂` before shifting.
const NORM_PROBE_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Residual tolerance relative to the estimated spectral scale `‖A‖₂`.
    pub tol: f64,
    /// Defaults to `100 n`.
    pub max_iter: Option<usize>,
    pub seed: u64,
    /// Spectral shift `σ` applied as `A + σI`; defaults to `1.1·‖A‖₂` estimate,
    /// which makes the algebraically largest eigenvalue dominant.
    pub shift: Option<f64>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            seed: 0,
            shift: None,
        }
    }
}

impl EigenConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    /// Unit vector, sign-normalized by [`fix_sign`].
    pub vector: Vec<f64>,
    /// `‖A v − λ v‖₂` at exit.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Set when a neighbouring computed eigenvalue is within `1e-10·|λ₁|`.
    pub degenerate_gap: bool,
}

/// Flips `x` so its largest-magnitude component is positive. Ties (within a
/// relative `1e-12`) go to the lowest index.
pub fn fix_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return;
    }
    let cutoff = max * (1.0 - 1e-12);
    if let Some(&lead) = x.iter().find(|v| v.abs() >= cutoff) {
        if lead < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn random_unit(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut x);
    x
}

/// Lower estimate of `‖A‖₂` from a few power steps on a symmetric operator.
fn probe_norm<A: LinearOperator + ?Sized>(a: &A, seed: u64) -> f64 {
    let n = a.shape().0;
    let mut x = random_unit(n, seed, u64::MAX);
    let mut y = vec![0.0; n];
    let mut best = 0.0f64;
    for _ in 0..NORM_PROBE_STEPS {
        a.apply(&x, &mut y);
        let nrm = norm2(&y);
        best = best.max(nrm);
        if nrm == 0.0 {
            break;
        }
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / nrm);
    }
    best
}

/// The `k` algebraically largest eigenpairs of a symmetric operator, in
/// decreasing order.
///
/// Power iteration on the shifted operator `A + σI`, with Hotelling deflation
/// of every converged pair (`B ← B − (λ_i + σ) v_i v_iᵀ`) and a
/// reorthogonalization pass against round-off drift.
pub fn top_k_eigen<A: SymmetricOperator + ?Sized>(
    a: &A,
    k: usize,
    cfg: &EigenConfig,
) -> Result<Vec<EigenPair>> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: (n, m),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "requested {k} eigenpairs of a {n}×{n} matrix"
        )));
    }
    let max_iter = cfg.max_iter.unwrap_or(100 * n).max(1);
    let scale = probe_norm(a, cfg.seed);
    let shift = cfg.shift.unwrap_or(1.1 * scale);
    let threshold = cfg.tol * scale;

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    let mut y = vec![0.0; n];
    for idx in 0..k {
        let mut x = random_unit(n, cfg.seed, idx as u64);
        orthogonalize(&mut x, &pairs);
        if normalize(&mut x) == 0.0 {
            // Start vector fell inside the deflated span; fall back to a basis vector.
            let j = (0..n)
                .find(|&j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    orthogonalize(&mut e, &pairs);
                    norm2(&e) > 1e-8
                })
                .unwrap_or(0);
            x = vec![0.0; n];
            x[j] = 1.0;
            orthogonalize(&mut x, &pairs);
            normalize(&mut x);
        }

        let mut converged = None;
        let mut residual = f64::INFINITY;
        for it in 1..=max_iter {
            a.apply(&x, &mut y);
            let lambda = dot(&x, &y);
            residual = y
                .iter()
                .zip(&x)
                .map(|(yi, xi)| (yi - lambda * xi).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= threshold {
                converged = Some((lambda, it));
                break;
            }
            // z = (A + σI − Σ (λ_i + σ) v_i v_iᵀ) x
            let mut z = y.clone();
            axpy(shift, &x, &mut z);
            for p in &pairs {
                let c = dot(&p.vector, &x);
                axpy(-(p.value + shift) * c, &p.vector, &mut z);
            }
            orthogonalize(&mut z, &pairs);
            if normalize(&mut z) == 0.0 {
                // x is (numerically) in the null space of the shifted operator.
                converged = Some((lambda, it));
                break;
            }
            x = z;
        }
        let Some((value, iterations)) = converged else {
            return Err(Error::NoConvergence {
                index: idx,
                iterations: max_iter,
                residual,
            });
        };
        fix_sign(&mut x);
        pairs.push(EigenPair {
            value,
            vector: x,
            residual_norm: residual,
            iterations,
            degenerate_gap: false,
        });
    }

    let lead = pairs[0].value.abs();
    for i in 1..pairs.len() {
        if (pairs[i - 1].value - pairs[i].value).abs() < DEGENERATE_GAP * lead {
            pairs[i - 1].degenerate_gap = true;
            pairs[i].degenerate_gap = true;
        }
    }
    Ok(pairs)
}

fn orthogonalize(x: &mut [f64], pairs: &[EigenPair]) {
    for p in pairs {
        let c = dot(&p.vector, x);
        axpy(-c, &p.vector, x);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralNormConfig {
    /// Stop when the estimate grows by less than `tol` relative.
    pub tol: f64,
    /// Defaults to `100·max(n, 10)`.
    pub max_iter: Option<usize>,
    pub seed: u64,
    /// Start vector (length = number of columns). Random when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for SpectralNormConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            seed: 0,
            start: None,
        }
    }
}

/// Largest singular value with default settings.
pub fn spectral_norm<A: LinearOperator + ?Sized>(a: &A) -> Result<f64> {
    spectral_norm_with(a, &SpectralNormConfig::default())
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// The estimate `√‖AᵀA x_k‖` never decreases along the iteration and is
/// always a lower bound, so an explicit start vector `e_i` guarantees a result
/// of at least `‖A e_i‖`.
pub fn spectral_norm_with<A: LinearOperator + ?Sized>(
    a: &A,
    cfg: &SpectralNormConfig,
) -> Result<f64> {
    let (rows, cols) = a.shape();
    let max_iter = cfg.max_iter.unwrap_or(100 * cols.max(10));
    let mut x = match &cfg.start {
        Some(s) if s.len() == cols => s.clone(),
        Some(s) => {
            return Err(Error::ShapeMismatch {
                expected: (cols, 1),
                found: (s.len(), 1),
            })
        }
        None => random_unit(cols, cfg.seed, 0),
    };
    if normalize(&mut x) == 0.0 {
        x = random_unit(cols, cfg.seed, 0);
    }
    let mut y = vec![0.0; rows];
    let mut z = vec![0.0; cols];
    let mut estimate = 0.0f64;
    for _ in 0..max_iter {
        a.apply(&x, &mut y);
        a.apply_transpose(&y, &mut z);
        let nz = norm2(&z);
        if nz == 0.0 {
            // x ∈ ker(A); only possible for the zero matrix after a random start.
            return Ok(estimate.max(norm2(&y)));
        }
        let next = nz.sqrt().max(estimate);
        let grew = next - estimate;
        estimate = next;
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi = zi / nz);
        if grew <= cfg.tol * estimate {
            return Ok(estimate);
        }
    }
    Err(Error::NoConvergence {
        index: 0,
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// `‖A‖_F² / ‖A‖₂²`
pub fn numerical_rank<A: LinearOperator + MatrixNorms + ?Sized>(a: &A) -> Result<f64> {
    let fro = a.norms().frobenius;
    if fro == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let spec = spectral_norm(a)?;
    Ok(fro * fro / (spec * spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{DenseMatrix, DenseSymmetric, MatrixNorms};

    #[test]
    fn diagonal_top_two() {
        let a = DenseSymmetric::from_diagonal(&[3.0, 2.0, 1.0]);
        let pairs = top_k_eigen(&a, 2, &EigenConfig::default()).unwrap();
        assert!((pairs[0].value - 3.0).abs() < 1e-9);
        assert!((pairs[1].value - 2.0).abs() < 1e-9);
        assert!((pairs[0].vector[0] - 1.0).abs() < 1e-9);
        assert!((pairs[1].vector[1] - 1.0).abs() < 1e-9);
        for p in &pairs {
            assert!(p.residual_norm <= 1e-10 * 3.0 + 1e-15);
        }
    }

    #[test]
    fn rank_one_average() {
        let a = DenseSymmetric::from_upper_fn(4, |_, _| 0.25);
        let p = &top_k_eigen(&a, 1, &EigenConfig::default()).unwrap()[0];
        assert!((p.value - 1.0).abs() < 1e-9);
        for v in &p.vector {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_dominant_eigenvalue_is_not_picked_first() {
        // |−5| dominates in magnitude but 2 is the largest eigenvalue.
        let a = DenseSymmetric::from_diagonal(&[-5.0, 2.0]);
        let pairs = top_k_eigen(&a, 2, &EigenConfig::default()).unwrap();
        assert!((pairs[0].value - 2.0).abs() < 1e-9);
        assert!((pairs[1].value + 5.0).abs() < 1e-9);
    }

    #[test]
    fn identity_flags_degenerate_gap() {
        let pairs = top_k_eigen(&DenseSymmetric::identity(3), 2, &EigenConfig::default()).unwrap();
        assert!(pairs.iter().all(|p| p.degenerate_gap));
        assert!(pairs.iter().all(|p| (p.value - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_matrix_eigen_and_norm() {
        let z = DenseSymmetric::zeros(3);
        let pairs = top_k_eigen(&z, 1, &EigenConfig::default()).unwrap();
        assert_eq!(pairs[0].value, 0.0);
        assert_eq!(spectral_norm(&z).unwrap(), 0.0);
        assert!(matches!(numerical_rank(&z), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn k_out_of_range() {
        let a = DenseSymmetric::identity(2);
        assert!(top_k_eigen(&a, 3, &EigenConfig::default()).is_err());
        assert!(top_k_eigen(&a, 0, &EigenConfig::default()).is_err());
    }

    #[test]
    fn max_iter_exhaustion_reports_no_convergence() {
        let a = DenseSymmetric::from_diagonal(&[1.0, 0.999, 0.5]);
        let cfg = EigenConfig {
            max_iter: Some(3),
            ..EigenConfig::default()
        };
        let err = top_k_eigen(&a, 1, &cfg).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { index: 0, .. }));
    }

    #[test]
    fn norm_of_signed_diagonal() {
        let a = DenseSymmetric::from_diagonal(&[-5.0, 2.0]);
        assert!((spectral_norm(&a).unwrap() - 5.0).abs() < 1e-8);
    }

    #[test]
    fn numerical_rank_examples() {
        let r = numerical_rank(&DenseSymmetric::identity(7)).unwrap();
        assert!((r - 7.0).abs() < 1e-8);
        let r = numerical_rank(&DenseSymmetric::from_diagonal(&[2.0, 1.0, 1.0])).unwrap();
        assert!((r - 1.5).abs() < 1e-8);
        let u = [0.6, 0.0, -0.8];
        let r = numerical_rank(&DenseSymmetric::from_spectrum(&[1.0], &[u.to_vec()])).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rectangular_norm_uses_normal_equations() {
        let a = DenseMatrix::from_row_major(2, 3, vec![3.0, 0.0, 0.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((spectral_norm(&a).unwrap() - 4.0).abs() < 1e-8);
        assert!(a.norms().frobenius >= spectral_norm(&a).unwrap());
    }

    #[test]
    fn start_vector_lower_bounds_the_estimate() {
        let a = DenseSymmetric::from_diagonal(&[1.0, 3.0, 2.0]);
        let cfg = SpectralNormConfig {
            start: Some(vec![0.0, 0.0, 1.0]),
            max_iter: Some(1),
            ..SpectralNormConfig::default()
        };
        // One step from e₃ cannot reach 3, but must already report ≥ ‖A e₃‖ = 2.
        let res = spectral_norm_with(&a, &cfg);
        assert!(matches!(res, Err(Error::NoConvergence { .. })) || res.unwrap() >= 2.0);
    }

    #[test]
    fn sign_convention_prefers_lowest_index_on_ties() {
        let mut x = vec![-0.5, 0.5, 0.5, -0.5];
        fix_sign(&mut x);
        assert_eq!(x, vec![0.5, -0.5, -0.5, 0.5]);
        let mut y = vec![0.1, -0.9, 0.3];
        fix_sign(&mut y);
        assert_eq!(y, vec![-0.1, 0.9, -0.3]);
    }
}

//! Damped random-surfer matrices, Perron vectors and Spearman's ρ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, LinearOperator};

use super::graph::WebGraph;

pub const DEFAULT_DAMPING: f64 = 0.85;

/// `P = c B + (1−c) 𝟙𝟙ᵀ/n` where `B` is row-normalized and dangling rows
/// of `B` are uniform. Applied without forming `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoogleMatrix {
    n: usize,
    c: f64,
    /// Row-normalized weights; empty rows are dangling.
    rows: Vec<Vec<(usize, f64)>>,
}

impl GoogleMatrix {
    pub fn new(g: &WebGraph, c: f64) -> Result<Self> {
        let rows = (0..g.n())
            .map(|i| g.out_neighbors(i).iter().map(|&j| (j, 1.0)).collect())
            .collect();
        Self::from_weighted(g.n(), rows, c)
    }

    /// Rows with nonpositive total weight are treated as dangling.
    pub fn from_weighted(n: usize, rows: Vec<Vec<(usize, f64)>>, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidConfig(format!("damping {c} outside (0, 1]")));
        }
        if rows.len() != n {
            return Err(Error::LengthMismatch(rows.len(), n));
        }
        let rows = rows
            .into_iter()
            .map(|row| {
                let total: f64 = row.iter().map(|&(_, w)| w).sum();
                if total > 0.0 {
                    row.into_iter().map(|(j, w)| (j, w / total)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(Self { n, c, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn damping(&self) -> f64 {
        self.c
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n;
        let tele = (1.0 - self.c) / n as f64;
        let mut d = DenseMatrix::from_fn(n, n, |_, _| tele);
        for (i, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                for j in 0..n {
                    d.set(i, j, d.get(i, j) + self.c / n as f64);
                }
            } else {
                for &(j, w) in row {
                    d.set(i, j, d.get(i, j) + self.c * w);
                }
            }
        }
        d
    }
}

impl LinearOperator for GoogleMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nf = self.n as f64;
        let total: f64 = x.iter().sum();
        let uniform = total / nf;
        for (i, row) in self.rows.iter().enumerate() {
            let b = if row.is_empty() {
                uniform
            } else {
                row.iter().map(|&(j, w)| w * x[j]).sum()
            };
            y[i] = self.c * b + (1.0 - self.c) * uniform;
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let nf = self.n as f64;
        let total: f64 = x.iter().sum();
        let mut dangling_mass = 0.0;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                dangling_mass += x[i];
            } else {
                for &(j, w) in row {
                    y[j] += self.c * w * x[i];
                }
            }
        }
        let flat = (self.c * dangling_mass + (1.0 - self.c) * total) / nf;
        y.iter_mut().for_each(|v| *v += flat);
    }
}

/// Left Perron vector of a nonnegative operator, rescaled to sum 1.
///
/// Lazy power iteration from the uniform vector: `x ← (x + Aᵀx/ρ̂)/2` with
/// `ρ̂ = 𝟙ᵀAᵀx`. The fixed point is unchanged, and eigenvalues of modulus
/// `ρ` other than `ρ` itself (periodic blocks, which subsampling can
/// create) are damped instead of oscillating. Stops when the ℓ₁ change
/// drops below `tol`.
pub fn perron_left<A: LinearOperator + ?Sized>(a: &A, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.shape().0;
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        a.apply_transpose(&x, &mut y);
        let s: f64 = y.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Domain("operator annihilated the iterate".into()));
        }
        change = 0.0;
        for (xi, yi) in x.iter_mut().zip(&y) {
            let next = 0.5 * (*xi + yi / s);
            change += (next - *xi).abs();
            *xi = next;
        }
        if change < tol {
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= total);
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        index: 0,
        iterations: max_iter,
        residual: change,
    })
}

/// Stationary distribution of `P`.
pub fn pagerank(p: &GoogleMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    perron_left(p, tol, max_iter)
}

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    average_ranks_within(x, 0.0)
}

/// As [`average_ranks`], with sorted neighbours closer than `tol` tied
/// (chains of small gaps form one group).
pub fn average_ranks_within(x: &[f64], tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] - x[order[end - 1]] <= tol {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    spearman_rho_within(x, y, 0.0)
}

/// Spearman's ρ with values of each vector closer than `rel_tol` times its
/// largest magnitude treated as ties. Use when equal scores are computed
/// along different floating-point paths.
pub fn spearman_rho_within(x: &[f64], y: &[f64], rel_tol: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::LengthMismatch(x.len(), 2));
    }
    let scale = |v: &[f64]| rel_tol * v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    pearson(
        &average_ranks_within(x, scale(x)),
        &average_ranks_within(y, scale(y)),
    )
}

//! Dense direct factorizations (backed by nalgebra) for small and validation-sized problems.

use nalgebra::DMatrix;

use super::{fix_sign, DenseMatrix, DenseSymmetric};

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Full eigendecomposition, eigenvalues in decreasing order, each vector
/// sign-fixed.
pub fn dense_symmetric_eigen(m: &DenseSymmetric) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = to_na(m.as_dense()).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.n()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

/// `max |λ_i|` of a dense symmetric matrix, from a full eigenvalue solve.
pub fn dense_spectral_norm(m: &DenseSymmetric) -> f64 {
    to_na(m.as_dense())
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Thin SVD `A = Σ σ_i u_i v_iᵀ`, singular values in decreasing order, each
/// pair sign-fixed on `u_i`.
pub fn dense_svd(a: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let svd = to_na(a).svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut sig = Vec::with_capacity(k);
    let mut left = Vec::with_capacity(k);
    let mut right = Vec::with_capacity(k);
    for &i in &order {
        let mut ui: Vec<f64> = u.column(i).iter().copied().collect();
        let mut vi: Vec<f64> = vt.row(i).iter().copied().collect();
        let before = ui.clone();
        fix_sign(&mut ui);
        if ui != before {
            vi.iter_mut().for_each(|x| *x = -*x);
        }
        sig.push(svd.singular_values[i]);
        left.push(ui);
        right.push(vi);
    }
    (sig, left, right)
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(a: &DenseMatrix) -> f64 {
    to_na(a)
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `‖A‖₂` of a general dense matrix.
pub fn max_singular_value(a: &DenseMatrix) -> f64 {
    to_na(a).singular_values().iter().copied().fold(0.0, f64::max)
}

/// Solves `A x = b` by LU with partial pivoting; `None` when singular.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let lu = to_na(a).lu();
    lu.solve(&nalgebra::DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
}

//! Dense linear algebra used as an independent check on the measure-theoretic
//! formulas. Everything here works on plain complex matrices and knows
//! nothing about fibers, `h` or conditional expectations.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigen(m).0[0]
}

/// Square root of a positive semidefinite matrix by eigendecomposition.
///
/// Eigenvalues below `1e-12 * max(1, lambda_max)` in magnitude are rounded to
/// zero so that round-off in a null direction does not turn into an
/// `O(sqrt(eps))` error after the square root.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let top = values.iter().fold(1f64, |a, v| a.max(v.abs()));
    let cutoff = 1e-12 * top;
    let roots = values.iter().map(|&v| if v <= cutoff { 0.0 } else { v.sqrt() });
    let mut scaled = vectors.clone();
    for (c, root) in roots.enumerate() {
        scaled.column_mut(c).scale_mut(root);
    }
    &scaled * vectors.adjoint()
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let svd = SVD::new(a.clone(), false, false);
    svd.singular_values.iter().copied().collect()
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Orthonormal basis of the null space from the SVD; a singular value counts
/// as zero when it is at most `tol * max(1, sigma_max)`.
pub fn null_space(a: &CMatrix, tol: f64) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let svd = SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let top = sigma.iter().fold(1f64, |acc, s| acc.max(*s));
    let mut basis = Vec::new();
    for k in 0..n {
        // SVD of an n x n matrix returns n singular values.
        let s = sigma.get(k).copied().unwrap_or(0.0);
        if s <= tol * top {
            basis.push(v_t.row(k).adjoint());
        }
    }
    basis
}

/// `|| A (A* A) - (A* A) A ||_F`, zero exactly when `A` commutes with `|A|^2`.
pub fn quasinormal_commutator(a: &CMatrix) -> f64 {
    let gram = a.adjoint() * a;
    (a * &gram - &gram * a).norm()
}

/// `A* A - A A*`.
pub fn self_commutator(a: &CMatrix) -> CMatrix {
    a.adjoint() * a - a * a.adjoint()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

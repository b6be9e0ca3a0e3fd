//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{SymmetricEigen, SVD};

use crate::{CMat, CVec, C64};

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    sv.iter().cloned().fold(0.0, f64::max)
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMat) -> f64 {
    m.norm()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// ‖M*M − 1‖₂; zero exactly for unitaries.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - CMat::identity(n, n)).norm()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns whose
/// residual norm falls below `tol` (relative to their original norm) are
/// dropped, so the result spans the column space of `cols`.
pub fn orthonormalize_columns(cols: &CMat, tol: f64) -> CMat {
    let mut basis: Vec<CVec> = Vec::new();
    basis_extend(&mut basis, cols, tol);
    columns_to_matrix(cols.nrows(), &basis)
}

/// Appends to `basis` the parts of the columns of `cols` orthogonal to it.
pub fn basis_extend(basis: &mut Vec<CVec>, cols: &CMat, tol: f64) {
    for c in cols.column_iter() {
        let mut v: CVec = c.into_owned();
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let p = b.dotc(&v);
                v.axpy(-p, b, one());
            }
        }
        let n1 = v.norm();
        if n1 > tol * n0.max(1.0) {
            basis.push(v.unscale(n1));
        }
    }
}

pub fn columns_to_matrix(rows: usize, cols: &[CVec]) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (k, c) in cols.iter().enumerate() {
        m.set_column(k, c);
    }
    m
}

/// Unitary factor of the polar decomposition `M = W |M|`.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    u * vt
}

pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Index of the entry with largest modulus (column-major order, first wins).
pub fn argmax_abs(m: &CMat) -> (usize, usize) {
    let mut best = (0, 0);
    let mut bv = -1.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let a = m[(i, j)].norm();
            if a > bv {
                bv = a;
                best = (i, j);
            }
        }
    }
    best
}

/// Distance of `m` from the scalar multiples of the identity, with the
/// best-fitting scalar.
pub fn scalar_residual(m: &CMat) -> (C64, f64) {
    let n = m.nrows();
    if n == 0 {
        return (zero(), 0.0);
    }
    let lam = m.trace() / (n as f64);
    let r = (m - CMat::identity(n, n) * lam).norm();
    (lam, r)
}

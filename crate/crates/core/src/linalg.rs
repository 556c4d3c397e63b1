//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Symmetric eigen-decomposition with eigenvalues sorted in descending order.
pub fn sym_eigen_desc<T: Real>(a: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(a.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sym_eigenvalues_desc(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Symmetric square root and inverse square root of a positive-definite matrix.
///
/// Returns `None` when the smallest eigenvalue is not above `rel_tol` times
/// the largest. Also returns the extreme eigenvalues for diagnostics.
pub struct SymRoots<T: Real> {
    pub inv_sqrt: DMatrix<T>,
    pub min_eig: T,
    pub max_eig: T,
}

pub fn sym_inv_sqrt<T: Real>(a: &DMatrix<T>, rel_tol: T) -> std::result::Result<SymRoots<T>, (T, T)> {
    let eig = a.clone().symmetric_eigen();
    let mut min_eig = eig.eigenvalues[0];
    let mut max_eig = eig.eigenvalues[0];
    for &e in eig.eigenvalues.iter() {
        if e < min_eig {
            min_eig = e;
        }
        if e > max_eig {
            max_eig = e;
        }
    }
    if !(max_eig > T::zero()) || !(min_eig > rel_tol * max_eig) {
        return Err((min_eig, max_eig));
    }
    let d = eig.eigenvalues.map(|e| T::one() / e.sqrt());
    let q = &eig.eigenvectors;
    let inv_sqrt = q * DMatrix::from_diagonal(&d) * q.transpose();
    Ok(SymRoots { inv_sqrt, min_eig, max_eig })
}

/// Inverse square root with eigenvalues floored at `floor` (never fails).
pub fn sym_inv_sqrt_floored(a: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|e| 1.0 / e.max(floor).sqrt());
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&d) * q.transpose()
}

/// Extends the orthonormal columns of `q` (n x k) to an orthonormal basis of R^n.
///
/// Candidates are the coordinate vectors, taken in order; each is orthogonalized
/// twice against the current basis and kept when its residual norm is large.
pub fn complete_basis<T: Real>(q: &DMatrix<T>) -> DMatrix<T> {
    let n = q.nrows();
    let mut cols: Vec<DVector<T>> = q.column_iter().map(|c| c.into_owned()).collect();
    let thresh = T::lit(1e-6);
    let mut e = 0;
    while cols.len() < n && e < n {
        let mut v = DVector::<T>::zeros(n);
        v[e] = T::one();
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, T::one());
            }
        }
        let norm = v.norm();
        if norm > thresh {
            cols.push(v / norm);
        }
        e += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Makes the entry of largest magnitude positive.
pub fn sign_normalize<T: Real>(v: &mut DVector<T>) {
    let mut best = T::zero();
    let mut sign = T::one();
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = if x < T::zero() { -T::one() } else { T::one() };
        }
    }
    if sign < T::zero() {
        v.neg_mut();
    }
}

/// Random orthogonal matrix of size n (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal(rng: &mut crate::rng::Rng, n: usize) -> DMatrix<f64> {
    let g = crate::rng::gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Numerical rank from singular values relative to the largest one.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

//! Dense complex matrix helpers over nalgebra.

use crate::C;
use nalgebra::DMatrix;

pub type CMat = DMatrix<C>;

pub fn zero() -> C {
    C::new(0.0, 0.0)
}

pub fn one() -> C {
    C::new(1.0, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Trace norm: the sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    m.singular_values().sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Flip F on C^D ⊗ C^D: F(u⊗v) = v⊗u, row-major pair index α·D+β.
pub fn flip(d: usize) -> CMat {
    let mut f = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            f[(a * d + b, b * d + a)] = one();
        }
    }
    f
}

/// Embeds a D²×D² two-site operator at sites (k, k+1) of an n-fold tensor
/// product, 0-based k.
pub fn two_site(op: &CMat, d: usize, n: usize, k: usize) -> CMat {
    assert!(k + 1 < n);
    let left = eye(d.pow(k as u32));
    let right = eye(d.pow((n - k - 2) as u32));
    kron(&kron(&left, op), &right)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Hermitian eigendecomposition; eigenvalues ascending, eigenvectors as columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    // Entries below FLUSH relative to the largest move eigenvalues by at most
    // n·FLUSH relative, far under roundoff; left in, their higher powers underflow
    // inside the Givens sweeps and the decomposition returns NaN.
    const FLUSH: f64 = 1e-60;
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut a = m.clone();
    if scale > 0.0 {
        a.apply(|z| *z = if z.norm() < FLUSH * scale { C::new(0.0, 0.0) } else { *z / scale });
    }
    let e = nalgebra::linalg::SymmetricEigen::new(a);
    let back = if scale > 0.0 { scale } else { 1.0 };
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i] * back).collect();
    let vecs = CMat::from_fn(m.nrows(), idx.len(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

//! Small dense linear-algebra kernel: matrices, SVD, symmetric
//! eigendecomposition, QR orthonormalization, pseudo-inverse and norms.
//!
//! Every routine is a pure function of its inputs.

mod eig;
mod matrix;
mod svd;

pub use eig::{sym_eig, SymEig};
pub use matrix::{dot, norm2, Mat};
pub use svd::{complete_basis, null_space, svd, Svd};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Moore–Penrose pseudo-inverse; singular values at or below
/// `rel_tol * sigma_max` are treated as zero.
pub fn pinv<T: Real>(a: &Mat<T>, rel_tol: T) -> Result<Mat<T>> {
    if !(rel_tol > T::zero()) {
        return Err(Error::InvalidArgument("pinv tolerance must be positive".into()));
    }
    let s = svd(a)?;
    let smax = s.sigma.first().copied().unwrap_or(T::zero());
    let (m, n) = a.shape();
    let mut out = Mat::zeros(n, m);
    for (k, &sk) in s.sigma.iter().enumerate() {
        if sk <= rel_tol * smax || sk == T::zero() {
            continue;
        }
        let inv = T::one() / sk;
        for i in 0..n {
            let vik = s.v[(i, k)] * inv;
            if vik == T::zero() {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * s.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Orthonormal basis of the column space of a full-column-rank `d x K`
/// matrix, with the `R` diagonal positive (Gram–Schmidt, re-orthogonalized).
pub fn qr_orthonormal<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let (d, k) = a.shape();
    if d < k {
        return Err(Error::Dimension(format!(
            "qr_orthonormal needs rows >= cols, got {d}x{k}"
        )));
    }
    let scale = a.frob_norm();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut x = a.col(j);
        for _ in 0..2 {
            for b in &q {
                let c = dot(&x, b);
                for (xi, &bi) in x.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        let nrm = norm2(&x);
        if nrm <= T::lit(1e-12) * scale || nrm == T::zero() {
            return Err(Error::Degenerate(format!(
                "column {j} is linearly dependent on the previous columns"
            )));
        }
        q.push(x.into_iter().map(|v| v / nrm).collect());
    }
    Ok(Mat::from_cols(d, &q))
}

/// Frobenius, spectral and nuclear norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub frobenius: T,
    pub spectral: T,
    pub nuclear: T,
}

pub fn norms<T: Real>(a: &Mat<T>) -> Result<Norms<T>> {
    let s = svd(a)?;
    Ok(Norms {
        frobenius: a.frob_norm(),
        spectral: s.sigma.first().copied().unwrap_or(T::zero()),
        nuclear: s.sigma.iter().copied().sum(),
    })
}

pub fn spectral_norm<T: Real>(a: &Mat<T>) -> Result<T> {
    Ok(svd(a)?.sigma.first().copied().unwrap_or(T::zero()))
}

pub fn nuclear_norm<T: Real>(a: &Mat<T>) -> Result<T> {
    Ok(svd(a)?.sigma.iter().copied().sum())
}

//! One-sided (Hestenes) Jacobi SVD.
//!
//! Slow compared to Golub–Kahan but accurate to working precision in the
//! relative sense, which is what the certificate and lemma oracles need.

use super::matrix::{dot, norm2, Mat};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ`.
///
/// For an `m x n` input with `k = min(m, n)`: `u` is `m x k`, `v` is `n x k`
/// and `sigma` has length `k`, sorted descending. Columns belonging to zero
/// singular values are completed to an orthonormal set, so `UᵀU = VᵀV = I_k`
/// always holds.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

impl<T: Real> Svd<T> {
    /// Number of singular values strictly above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(T::zero());
        self.sigma
            .iter()
            .filter(|&&s| s > rel_tol * smax && s > T::zero())
            .count()
    }

    /// `U diag(sigma) Vᵀ`.
    pub fn reconstruct(&self) -> Mat<T> {
        let us = Mat::from_fn(self.u.rows(), self.u.cols(), |i, j| {
            self.u[(i, j)] * self.sigma[j]
        });
        us.matmul_t(&self.v).expect("consistent svd factors")
    }
}

pub fn svd<T: Real>(a: &Mat<T>) -> Result<Svd<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let (m, n) = a.shape();
    if m < n {
        let t = svd_tall(&a.transpose())?;
        let mut out = Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_signs(&mut out);
        return Ok(out);
    }
    let mut out = svd_tall(a)?;
    fix_signs(&mut out);
    Ok(out)
}

/// SVD of an `m x n` matrix with `m >= n`.
fn svd_tall<T: Real>(a: &Mat<T>) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    let mut u: Vec<Vec<T>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();

    let eps = T::epsilon();
    // columns below this squared norm are numerically zero; their
    // directions are rounding noise and rotating them never settles
    let size_eps = T::from_usize_lossy(m.max(n)) * eps;
    let negligible = size_eps * size_eps * a.frob_norm_sq();
    let max_sweeps = 100 * m.max(n).max(1);
    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == T::zero()
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= size_eps * alpha.sqrt() * beta.sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + T::one().hypot(zeta));
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge within {max_sweeps} sweeps"
        )));
    }

    let mut sigma: Vec<T> = u.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite"));
    u = order.iter().map(|&i| u[i].clone()).collect();
    v = order.iter().map(|&i| v[i].clone()).collect();
    sigma = order.iter().map(|&i| sigma[i]).collect();

    let smax = sigma.first().copied().unwrap_or(T::zero());
    let cut = T::from_usize_lossy(m.max(n)) * eps * smax;
    // Columns for tiny sigma lose orthogonality, so re-orthogonalize in
    // descending order and complete whatever does not survive.
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    for (j, col) in u.iter().enumerate() {
        let mut x: Vec<T> = if sigma[j] > cut && sigma[j] > T::zero() {
            col.iter().map(|&x| x / sigma[j]).collect()
        } else {
            vec![T::zero(); m]
        };
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&x, b);
                for (xi, &bi) in x.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        let nrm = norm2(&x);
        let next = if nrm > T::lit(0.5) {
            x.into_iter().map(|v| v / nrm).collect()
        } else {
            next_orthonormal(&basis, m)
                .ok_or_else(|| Error::NumericalFailure("orthonormal completion failed".into()))?
        };
        basis.push(next);
    }

    Ok(Svd {
        u: Mat::from_cols(m, &basis),
        sigma,
        v: Mat::from_cols(n, &v),
    })
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// The standard basis vector with the largest component outside
/// span(`basis`), orthogonalized and normalized. Some `e_i` always keeps
/// at least `sqrt((dim - len) / dim)` of its norm.
pub(crate) fn next_orthonormal<T: Real>(basis: &[Vec<T>], dim: usize) -> Option<Vec<T>> {
    if basis.len() >= dim {
        return None;
    }
    let mut best: Option<(T, Vec<T>)> = None;
    for i in 0..dim {
        let mut x = vec![T::zero(); dim];
        x[i] = T::one();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in basis {
                let c = dot(&x, b);
                for (xi, &bi) in x.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        let nrm = norm2(&x);
        if best.as_ref().is_none_or(|(n, _)| nrm > *n) {
            best = Some((nrm, x));
        }
    }
    let (nrm, x) = best?;
    (nrm > T::lit(1e-3)).then(|| x.into_iter().map(|v| v / nrm).collect())
}

/// Extends orthonormal columns of `q` (`n x k`) to a full `n x n` basis.
pub fn complete_basis<T: Real>(q: &Mat<T>) -> Result<Mat<T>> {
    let n = q.rows();
    let mut cols: Vec<Vec<T>> = (0..q.cols()).map(|j| q.col(j)).collect();
    while cols.len() < n {
        let next = next_orthonormal(&cols, n)
            .ok_or_else(|| Error::NumericalFailure("orthonormal completion failed".into()))?;
        cols.push(next);
    }
    Ok(Mat::from_cols(n, &cols))
}

/// Orthonormal basis of `{x : A x = 0}` up to singular values `<= abs_tol`.
pub fn null_space<T: Real>(a: &Mat<T>, abs_tol: T) -> Result<Mat<T>> {
    let s = svd(a)?;
    let n = a.cols();
    let keep = s.sigma.iter().take_while(|&&x| x > abs_tol).count();
    let range = s.v.cols_range(0, keep);
    let full = complete_basis(&range)?;
    Ok(full.cols_range(keep, n - keep))
}

/// Flip singular pairs so the first non-negligible entry of each right
/// singular vector is positive.
fn fix_signs<T: Real>(s: &mut Svd<T>) {
    for j in 0..s.v.cols() {
        let col = s.v.col(j);
        if first_significant_negative(&col) {
            for i in 0..s.v.rows() {
                s.v[(i, j)] = -s.v[(i, j)];
            }
            for i in 0..s.u.rows() {
                s.u[(i, j)] = -s.u[(i, j)];
            }
        }
    }
}

pub(crate) fn first_significant_negative<T: Real>(v: &[T]) -> bool {
    let scale = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let tol = T::lit(1e-12) * scale;
    v.iter()
        .find(|x| x.abs() > tol)
        .is_some_and(|&x| x < T::zero())
}

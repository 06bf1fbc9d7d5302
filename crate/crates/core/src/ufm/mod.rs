//! The regularized unconstrained-feature-model objective
//!
//! `f(W, H, b) = (1/N) Σ_{k,i} L(W h_{k,i} + b, y_k) + λW/2 ‖W‖F² + λH/2 ‖H‖F² + λb/2 ‖b‖²`
//!
//! with its analytic gradient, Hessian bilinear form, dense Hessian and a
//! deterministic full-batch trainer.
//!
//! Feature columns are stored class-major inside each sample group: column
//! `j` holds sample `j / K` of class `j % K`, so `H = [H_1 … H_n]` with
//! `H_i = [h_{1,i} … h_{K,i}]`.

mod train;

pub use train::{train, TraceRow, TrainConfig, TrainOutcome, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::losses::{loss_hess, value_and_grad, LossSpec, Logits};
use crate::numlin::{norm2, Mat};
use crate::rng::LabRng;
use crate::scalar::Real;

/// Problem dimensions and penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper<T> {
    /// Number of classes `K`.
    pub k: usize,
    /// Feature dimension `d`.
    pub d: usize,
    /// Samples per class `n`.
    pub n: usize,
    pub lambda_w: T,
    pub lambda_h: T,
    pub lambda_b: T,
    pub loss: LossSpec<T>,
}

impl<T: Real> Hyper<T> {
    pub fn new(k: usize, d: usize, n: usize, lambda_w: T, lambda_h: T, lambda_b: T, loss: LossSpec<T>) -> Self {
        Self {
            k,
            d,
            n,
            lambda_w,
            lambda_h,
            lambda_b,
            loss,
        }
    }

    /// Total sample count `N = nK`.
    #[inline]
    pub fn samples(&self) -> usize {
        self.n * self.k
    }

    /// Class label of feature column `j`.
    #[inline]
    pub fn label(&self, j: usize) -> usize {
        j % self.k
    }

    /// Number of free parameters `Kd + dN + K`.
    pub fn param_count(&self) -> usize {
        self.k * self.d + self.d * self.samples() + self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument("need at least K = 2 classes".into()));
        }
        if self.n < 1 || self.d < 1 {
            return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
        }
        if !(self.lambda_w > T::zero() && self.lambda_h > T::zero()) {
            return Err(Error::InvalidArgument("λW and λH must be positive".into()));
        }
        if !(self.lambda_b >= T::zero()) {
            return Err(Error::InvalidArgument("λb must be non-negative".into()));
        }
        self.loss.validate()
    }

    /// `√(λW λH)`, the nuclear-norm weight of the convex counterpart.
    pub fn nuclear_weight(&self) -> T {
        (self.lambda_w * self.lambda_h).sqrt()
    }
}

/// Free optimization variables `(W, H, b)`. Also used for gradients and
/// search directions, which share the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct UfmState<T> {
    /// Classifier, `K x d` (row `k` is `wᵏ`).
    pub w: Mat<T>,
    /// Features, `d x N`.
    pub h: Mat<T>,
    /// Bias, length `K`.
    pub b: Vec<T>,
}

impl<T: Real> UfmState<T> {
    pub fn zeros(hyper: &Hyper<T>) -> Self {
        Self {
            w: Mat::zeros(hyper.k, hyper.d),
            h: Mat::zeros(hyper.d, hyper.samples()),
            b: vec![T::zero(); hyper.k],
        }
    }

    /// Entries drawn i.i.d. from `N(0, sigma²)` in the order W, H, b.
    pub fn gaussian(hyper: &Hyper<T>, sigma: T, rng: &mut LabRng) -> Self {
        let w = rng.gaussian_mat(hyper.k, hyper.d, sigma);
        let h = rng.gaussian_mat(hyper.d, hyper.samples(), sigma);
        let b = rng.gaussian_vec(hyper.k, sigma);
        Self { w, h, b }
    }

    pub fn check_shape(&self, hyper: &Hyper<T>) -> Result<()> {
        let ok = self.w.shape() == (hyper.k, hyper.d)
            && self.h.shape() == (hyper.d, hyper.samples())
            && self.b.len() == hyper.k;
        if !ok {
            return Err(Error::Dimension(format!(
                "state W {:?}, H {:?}, b {} does not match K={}, d={}, N={}",
                self.w.shape(),
                self.h.shape(),
                self.b.len(),
                hyper.k,
                hyper.d,
                hyper.samples()
            )));
        }
        if !(self.w.is_finite() && self.h.is_finite() && self.b.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("state"));
        }
        Ok(())
    }

    /// Logit matrix `Z = W H + b 1ᵀ` (`K x N`).
    pub fn logits(&self) -> Result<Mat<T>> {
        let mut z = self.w.matmul(&self.h)?;
        for r in 0..z.rows() {
            let br = self.b[r];
            for x in z.row_mut(r) {
                *x += br;
            }
        }
        Ok(z)
    }

    /// Flattened parameters: W row-major, then H row-major, then b.
    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.w.data().len() + self.h.data().len() + self.b.len());
        v.extend_from_slice(self.w.data());
        v.extend_from_slice(self.h.data());
        v.extend_from_slice(&self.b);
        v
    }

    pub fn from_flat(hyper: &Hyper<T>, flat: &[T]) -> Result<Self> {
        if flat.len() != hyper.param_count() {
            return Err(Error::Dimension(format!(
                "{} parameters supplied, {} expected",
                flat.len(),
                hyper.param_count()
            )));
        }
        let kd = hyper.k * hyper.d;
        let dn = hyper.d * hyper.samples();
        Ok(Self {
            w: Mat::new(hyper.k, hyper.d, flat[..kd].to_vec())?,
            h: Mat::new(hyper.d, hyper.samples(), flat[kd..kd + dn].to_vec())?,
            b: flat[kd + dn..].to_vec(),
        })
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        self.w.axpy(s, &other.w);
        self.h.axpy(s, &other.h);
        for (a, &x) in self.b.iter_mut().zip(&other.b) {
            *a += s * x;
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            w: self.w.scale(s),
            h: self.h.scale(s),
            b: self.b.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> T {
        self.w.inner(&other.w)
            + self.h.inner(&other.h)
            + self.b.iter().zip(&other.b).map(|(&a, &b)| a * b).sum::<T>()
    }

    pub fn norm(&self) -> T {
        norm2(&[self.w.frob_norm(), self.h.frob_norm(), norm2(&self.b)])
    }
}

/// Objective value split into its four terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjBreakdown<T> {
    /// Empirical loss `g(WH + b1ᵀ)`.
    pub g: T,
    pub reg_w: T,
    pub reg_h: T,
    pub reg_b: T,
    /// Total `f`.
    pub f: T,
}

fn regularizers<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>, g: T) -> ObjBreakdown<T> {
    let half = T::lit(0.5);
    let reg_w = half * hyper.lambda_w * state.w.frob_norm_sq();
    let reg_h = half * hyper.lambda_h * state.h.frob_norm_sq();
    let reg_b = half * hyper.lambda_b * state.b.iter().map(|&x| x * x).sum::<T>();
    ObjBreakdown {
        g,
        reg_w,
        reg_h,
        reg_b,
        f: g + reg_w + reg_h + reg_b,
    }
}

/// Empirical loss and its gradient `∇g` with respect to the logit matrix
/// (`K x N`, already divided by `N`).
pub fn loss_and_logit_grad<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<(T, Mat<T>)> {
    state.check_shape(hyper)?;
    let z = state.logits()?;
    let (k, samples) = (hyper.k, hyper.samples());
    let inv_n = T::one() / T::from_usize_lossy(samples);
    let mut grad = Mat::zeros(k, samples);
    let mut col = vec![T::zero(); k];
    let mut gcol = vec![T::zero(); k];
    let mut total = T::zero();
    for j in 0..samples {
        for r in 0..k {
            col[r] = z[(r, j)];
        }
        let lg = Logits::new(&col, hyper.label(j))?;
        total += value_and_grad(&hyper.loss, &lg, Some(&mut gcol));
        for r in 0..k {
            grad[(r, j)] = gcol[r] * inv_n;
        }
    }
    Ok((total * inv_n, grad))
}

pub fn objective<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<ObjBreakdown<T>> {
    state.check_shape(hyper)?;
    let z = state.logits()?;
    let samples = hyper.samples();
    let mut col = vec![T::zero(); hyper.k];
    let mut total = T::zero();
    for j in 0..samples {
        for (r, c) in col.iter_mut().enumerate() {
            *c = z[(r, j)];
        }
        total += value_and_grad(&hyper.loss, &Logits::new(&col, hyper.label(j))?, None);
    }
    let g = total / T::from_usize_lossy(samples);
    Ok(regularizers(state, hyper, g))
}

/// Objective together with the full gradient `(∇_W f, ∇_H f, ∇_b f)`.
pub fn objective_and_gradient<T: Real>(
    state: &UfmState<T>,
    hyper: &Hyper<T>,
) -> Result<(ObjBreakdown<T>, UfmState<T>)> {
    let (g, grad_z) = loss_and_logit_grad(state, hyper)?;
    let mut gw = grad_z.matmul_t(&state.h)?;
    gw.axpy(hyper.lambda_w, &state.w);
    let mut gh = state.w.t_matmul(&grad_z)?;
    gh.axpy(hyper.lambda_h, &state.h);
    let gb = (0..hyper.k)
        .map(|r| grad_z.row(r).iter().copied().sum::<T>() + hyper.lambda_b * state.b[r])
        .collect();
    Ok((
        regularizers(state, hyper, g),
        UfmState {
            w: gw,
            h: gh,
            b: gb,
        },
    ))
}

pub fn gradient<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<UfmState<T>> {
    Ok(objective_and_gradient(state, hyper)?.1)
}

/// `∇²f[Δ1, Δ2]`, the symmetric Hessian bilinear form.
pub fn hess_bilinear<T: Real>(
    state: &UfmState<T>,
    hyper: &Hyper<T>,
    d1: &UfmState<T>,
    d2: &UfmState<T>,
) -> Result<T> {
    d1.check_shape(hyper)?;
    d2.check_shape(hyper)?;
    let (_, grad_z) = loss_and_logit_grad(state, hyper)?;
    let z = state.logits()?;
    let logit_dir = |d: &UfmState<T>| -> Result<Mat<T>> {
        let mut m = state.w.matmul(&d.h)?;
        m.axpy(T::one(), &d.w.matmul(&state.h)?);
        for r in 0..m.rows() {
            let br = d.b[r];
            for x in m.row_mut(r) {
                *x += br;
            }
        }
        Ok(m)
    };
    let e1 = logit_dir(d1)?;
    let e2 = logit_dir(d2)?;

    let (k, samples) = (hyper.k, hyper.samples());
    let mut curv = T::zero();
    let mut col = vec![T::zero(); k];
    for j in 0..samples {
        for r in 0..k {
            col[r] = z[(r, j)];
        }
        let hj = loss_hess(&hyper.loss, &Logits::new(&col, hyper.label(j))?);
        for r in 0..k {
            let mut acc = T::zero();
            for s in 0..k {
                acc += hj[(r, s)] * e2[(s, j)];
            }
            curv += e1[(r, j)] * acc;
        }
    }
    curv /= T::from_usize_lossy(samples);

    let cross = grad_z.inner(&d1.w.matmul(&d2.h)?) + grad_z.inner(&d2.w.matmul(&d1.h)?);
    let reg = hyper.lambda_w * d1.w.inner(&d2.w)
        + hyper.lambda_h * d1.h.inner(&d2.h)
        + hyper.lambda_b * d1.b.iter().zip(&d2.b).map(|(&a, &b)| a * b).sum::<T>();
    Ok(curv + cross + reg)
}

/// `∇²f[Δ, Δ]`.
pub fn hess_quadratic_form<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>, delta: &UfmState<T>) -> Result<T> {
    hess_bilinear(state, hyper, delta, delta)
}

/// Largest dense Hessian [`dense_hessian`] will build.
pub const DENSE_HESSIAN_LIMIT: usize = 6000;

/// Full Hessian over the flattened parameters (see [`UfmState::flatten`]).
pub fn dense_hessian<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<Mat<T>> {
    let p = hyper.param_count();
    if p > DENSE_HESSIAN_LIMIT {
        return Err(Error::SizeGuard {
            size: p,
            limit: DENSE_HESSIAN_LIMIT,
        });
    }
    let (_, grad_z) = loss_and_logit_grad(state, hyper)?;
    let z = state.logits()?;
    let (k, d, samples) = (hyper.k, hyper.d, hyper.samples());
    let kd = k * d;
    let h_off = kd;
    let b_off = kd + d * samples;
    let inv_n = T::one() / T::from_usize_lossy(samples);
    let mut hess = Mat::zeros(p, p);

    // local parameter block of sample j: all of W, column j of H, all of b
    let local = kd + d + k;
    let mut idx = vec![0usize; local];
    let mut jac = Mat::zeros(k, local);
    let mut col = vec![T::zero(); k];
    for j in 0..samples {
        for r in 0..k {
            col[r] = z[(r, j)];
        }
        let hj = loss_hess(&hyper.loss, &Logits::new(&col, hyper.label(j))?).scale(inv_n);
        for v in jac.data_mut() {
            *v = T::zero();
        }
        for r in 0..k {
            for a in 0..d {
                idx[r * d + a] = r * d + a;
                jac[(r, r * d + a)] = state.h[(a, j)];
            }
        }
        for a in 0..d {
            idx[kd + a] = h_off + a * samples + j;
            for r in 0..k {
                jac[(r, kd + a)] = state.w[(r, a)];
            }
        }
        for r in 0..k {
            idx[kd + d + r] = b_off + r;
            jac[(r, kd + d + r)] = T::one();
        }
        let hjac = hj.matmul(&jac)?;
        let block = jac.t_matmul(&hjac)?;
        for (li, &gi) in idx.iter().enumerate() {
            for (lj, &gj) in idx.iter().enumerate() {
                hess[(gi, gj)] += block[(li, lj)];
            }
        }
    }

    // second-order term of Z = WH: ∂²/∂W(s,a)∂H(a,j) = [∇g]_{s,j}
    for s in 0..k {
        for a in 0..d {
            for j in 0..samples {
                let gi = s * d + a;
                let gj = h_off + a * samples + j;
                let v = grad_z[(s, j)];
                hess[(gi, gj)] += v;
                hess[(gj, gi)] += v;
            }
        }
    }
    for i in 0..kd {
        hess[(i, i)] += hyper.lambda_w;
    }
    for i in h_off..b_off {
        hess[(i, i)] += hyper.lambda_h;
    }
    for i in b_off..p {
        hess[(i, i)] += hyper.lambda_b;
    }
    Ok(hess)
}

/// `‖λW WᵀW − λH HHᵀ‖F / max(1, λW ‖W‖F²)`; zero at every critical point.
pub fn balance_residual<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<T> {
    let wtw = state.w.t_matmul(&state.w)?.scale(hyper.lambda_w);
    let hht = state.h.matmul_t(&state.h)?.scale(hyper.lambda_h);
    let denom = T::one().max(hyper.lambda_w * state.w.frob_norm_sq());
    Ok(wtw.sub(&hht)?.frob_norm() / denom)
}

/// Coordinates above which [`grad_check`] samples instead of sweeping.
pub const GRAD_CHECK_FULL_LIMIT: usize = 2000;

/// Central-difference check of [`gradient`].
///
/// Returns `max_i |analytic_i − numeric_i| / max(‖analytic‖∞, ‖numeric‖∞)`
/// over the probed coordinates: every coordinate up to
/// [`GRAD_CHECK_FULL_LIMIT`] parameters, otherwise 200 coordinates drawn with
/// a fixed seed.
pub fn grad_check<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let analytic = gradient(state, hyper)?.flatten();
    let base = state.flatten();
    let p = base.len();
    let coords: Vec<usize> = if p <= GRAD_CHECK_FULL_LIMIT {
        (0..p).collect()
    } else {
        let mut rng = LabRng::new(0x5eed_0f9c);
        (0..200).map(|_| rng.index(p)).collect()
    };
    let mut x = base.clone();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for &i in &coords {
        x[i] = base[i] + eps;
        let fp = objective(&UfmState::from_flat(hyper, &x)?, hyper)?.f;
        x[i] = base[i] - eps;
        let fm = objective(&UfmState::from_flat(hyper, &x)?, hyper)?.f;
        x[i] = base[i];
        let numeric = (fp - fm) / (T::lit(2.0) * eps);
        worst = worst.max((numeric - analytic[i]).abs());
        scale = scale.max(numeric.abs()).max(analytic[i].abs());
    }
    if scale == T::zero() {
        return Ok(worst);
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossSpec;

    fn hyper(loss: LossSpec<f64>) -> Hyper<f64> {
        Hyper::new(3, 4, 2, 0.05, 0.02, 0.01, loss)
    }

    #[test]
    fn origin_value_is_log_k() {
        let hp = Hyper::new(4, 5, 3, 0.1, 0.1, 0.1, LossSpec::ce());
        let o = objective(&UfmState::zeros(&hp), &hp).unwrap();
        assert!((o.f - 4f64.ln()).abs() < 1e-15);
        assert_eq!((o.reg_w, o.reg_h, o.reg_b), (0.0, 0.0, 0.0));
    }

    #[test]
    fn regularizer_terms() {
        let hp = hyper(LossSpec::ce());
        let mut rng = LabRng::new(3);
        let s = UfmState::gaussian(&hp, 1.0, &mut rng);
        let o = objective(&s, &hp).unwrap();
        assert!((o.reg_w - 0.5 * hp.lambda_w * s.w.frob_norm_sq()).abs() < 1e-15);
        assert!((o.f - (o.g + o.reg_w + o.reg_h + o.reg_b)).abs() <= 1e-14 * o.f.abs());
    }

    #[test]
    fn bias_gradient_vanishes_at_origin() {
        let hp = Hyper::new(4, 6, 5, 0.1, 0.1, 0.3, LossSpec::ce());
        let g = gradient(&UfmState::zeros(&hp), &hp).unwrap();
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let hp = hyper(LossSpec::ce());
        let mut s = UfmState::zeros(&hp);
        s.b.pop();
        assert!(matches!(objective(&s, &hp), Err(Error::Dimension(_))));
        assert!(matches!(gradient(&s, &hp), Err(Error::Dimension(_))));
    }

    #[test]
    fn flatten_roundtrip() {
        let hp = hyper(LossSpec::ce());
        let s = UfmState::gaussian(&hp, 1.0, &mut LabRng::new(9));
        assert_eq!(UfmState::from_flat(&hp, &s.flatten()).unwrap(), s);
    }

    #[test]
    fn quadratic_form_zero_direction() {
        let hp = hyper(LossSpec::focal(2.0));
        let s = UfmState::gaussian(&hp, 1.0, &mut LabRng::new(1));
        let q = hess_quadratic_form(&s, &hp, &UfmState::zeros(&hp)).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn dense_hessian_guard() {
        let hp = Hyper::new(4, 40, 40, 0.1, 0.1, 0.1, LossSpec::ce());
        assert!(hp.param_count() > DENSE_HESSIAN_LIMIT);
        let s = UfmState::zeros(&hp);
        assert!(matches!(dense_hessian(&s, &hp), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn balance_zero_at_origin() {
        let hp = hyper(LossSpec::ce());
        assert_eq!(balance_residual(&UfmState::zeros(&hp), &hp).unwrap(), 0.0);
    }

    #[test]
    fn mse_gradient_check_is_tight() {
        let hp = hyper(LossSpec::mse(1.0, 15.0));
        let s = UfmState::gaussian(&hp, 1.0, &mut LabRng::new(11));
        assert!(grad_check(&s, &hp, 1e-5).unwrap() <= 1e-7);
    }
}

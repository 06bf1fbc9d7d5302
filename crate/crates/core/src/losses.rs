//! Classification losses on a single logit vector: cross entropy, focal
//! loss, label smoothing and rescaled MSE, with logit-space gradients and
//! Hessians, plus the contrastive lower-bound function `φ`.

use crate::error::{Error, Result};
use crate::numlin::Mat;
use crate::scalar::Real;

/// Smallest target probability at which focal loss is known to be convex in
/// the logits.
pub const FL_CONVEX_THRESHOLD: f64 = 0.21;

/// Below this value of `1 − p_k` the focal weight `η` and its derivative are
/// replaced by their limit (zero).
const FL_LIMIT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    CrossEntropy,
    Focal,
    LabelSmoothing,
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "CE",
            LossKind::Focal => "FL",
            LossKind::LabelSmoothing => "LS",
            LossKind::Mse => "MSE",
        }
    }

    /// Whether the loss has the contrastive lower bound (MSE does not).
    pub fn is_contrastive(self) -> bool {
        !matches!(self, LossKind::Mse)
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CE" => Ok(LossKind::CrossEntropy),
            "FL" => Ok(LossKind::Focal),
            "LS" => Ok(LossKind::LabelSmoothing),
            "MSE" => Ok(LossKind::Mse),
            other => Err(Error::InvalidArgument(format!("unknown loss kind {other:?}"))),
        }
    }
}

/// Loss family plus its parameters. Parameters of other families are
/// carried but ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec<T> {
    pub kind: LossKind,
    /// Focal focusing parameter γ.
    pub gamma: T,
    /// Label-smoothing parameter α.
    pub alpha: T,
    /// MSE target weight κ.
    pub kappa: T,
    /// MSE target value β.
    pub beta: T,
}

impl<T: Real> LossSpec<T> {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            gamma: T::lit(3.0),
            alpha: T::lit(0.1),
            kappa: T::one(),
            beta: T::lit(15.0),
        }
    }

    pub fn ce() -> Self {
        Self::new(LossKind::CrossEntropy)
    }

    pub fn focal(gamma: T) -> Self {
        Self {
            gamma,
            ..Self::new(LossKind::Focal)
        }
    }

    pub fn label_smoothing(alpha: T) -> Self {
        Self {
            alpha,
            ..Self::new(LossKind::LabelSmoothing)
        }
    }

    pub fn mse(kappa: T, beta: T) -> Self {
        Self {
            kappa,
            beta,
            ..Self::new(LossKind::Mse)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            LossKind::CrossEntropy => true,
            LossKind::Focal => self.gamma >= T::zero() && self.gamma.is_finite(),
            LossKind::LabelSmoothing => self.alpha >= T::zero() && self.alpha < T::one(),
            LossKind::Mse => self.kappa > T::zero() && self.beta > T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid {} parameters", self.kind)))
        }
    }

    /// Smoothed target for class `k` out of `classes`.
    fn smooth_target(&self, classes: usize, k: usize, l: usize) -> T {
        let off = self.alpha / T::from_usize_lossy(classes);
        if l == k {
            T::one() - self.alpha + off
        } else {
            off
        }
    }
}

impl<T: Real> Default for LossSpec<T> {
    fn default() -> Self {
        Self::ce()
    }
}

/// A logit vector together with its target class.
#[derive(Debug, Clone, Copy)]
pub struct Logits<'a, T> {
    z: &'a [T],
    k: usize,
}

impl<'a, T: Real> Logits<'a, T> {
    pub fn new(z: &'a [T], k: usize) -> Result<Self> {
        if k >= z.len() {
            return Err(Error::InvalidArgument(format!(
                "target {k} out of range for {} classes",
                z.len()
            )));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(Self { z, k })
    }

    pub fn z(&self) -> &'a [T] {
        self.z
    }

    pub fn target(&self) -> usize {
        self.k
    }

    pub fn classes(&self) -> usize {
        self.z.len()
    }
}

pub fn softmax<T: Real>(z: &[T]) -> Vec<T> {
    let m = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let e: Vec<T> = z.iter().map(|&x| (x - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `log p` computed as `z − (max + log1p(Σ_{j≠argmax} exp(z_j − max)))`, which
/// keeps `log p_k` accurate when `p_k → 1`.
pub fn log_softmax<T: Real>(z: &[T]) -> Vec<T> {
    let (imax, m) = z
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let rest: T = z
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != imax)
        .map(|(_, &x)| (x - m).exp())
        .sum();
    let tail = rest.ln_1p();
    z.iter()
        .enumerate()
        .map(|(i, &x)| if i == imax { -tail } else { (x - m) - tail })
        .collect()
}

/// Focal weight `η(p) = γ p (1−p)^{γ−1} log p − (1−p)^γ`, given `q = 1 − p`
/// and `log p` separately for accuracy.
pub fn focal_eta<T: Real>(gamma: T, q: T, log_p: T) -> T {
    if gamma == T::zero() {
        return -T::one();
    }
    if q < T::lit(FL_LIMIT_CUTOFF) {
        return T::zero();
    }
    let p = T::one() - q;
    gamma * p * q.powf(gamma - T::one()) * log_p - q.powf(gamma)
}

/// `η′(p) = γ (1−p)^{γ−2} ((1 − γp) log p + 2(1−p))`.
pub fn focal_eta_prime<T: Real>(gamma: T, q: T, log_p: T) -> T {
    if gamma == T::zero() || q < T::lit(FL_LIMIT_CUTOFF) {
        return T::zero();
    }
    let p = T::one() - q;
    gamma * q.powf(gamma - T::lit(2.0)) * ((T::one() - gamma * p) * log_p + T::lit(2.0) * q)
}

struct Probs<T> {
    p: Vec<T>,
    log_p: Vec<T>,
    /// `1 − p_k`, summed from the off-target probabilities.
    q: T,
}

fn probs<T: Real>(lg: &Logits<'_, T>) -> Probs<T> {
    let p = softmax(lg.z);
    let log_p = log_softmax(lg.z);
    let q = p
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != lg.k)
        .map(|(_, &x)| x)
        .sum();
    Probs { p, log_p, q }
}

pub fn loss_value<T: Real>(spec: &LossSpec<T>, lg: &Logits<'_, T>) -> T {
    value_and_grad(spec, lg, None)
}

pub fn loss_grad<T: Real>(spec: &LossSpec<T>, lg: &Logits<'_, T>) -> Vec<T> {
    let mut g = vec![T::zero(); lg.classes()];
    value_and_grad(spec, lg, Some(&mut g));
    g
}

/// Loss value, writing the logit gradient into `grad` when supplied.
pub fn value_and_grad<T: Real>(spec: &LossSpec<T>, lg: &Logits<'_, T>, grad: Option<&mut [T]>) -> T {
    let k = lg.k;
    let classes = lg.classes();
    match spec.kind {
        LossKind::Mse => {
            let two = T::lit(2.0);
            let mut v = T::zero();
            for (l, &zl) in lg.z.iter().enumerate() {
                if l == k {
                    v += spec.kappa * (zl - spec.beta) * (zl - spec.beta);
                } else {
                    v += zl * zl;
                }
            }
            if let Some(g) = grad {
                for (l, (gl, &zl)) in g.iter_mut().zip(lg.z).enumerate() {
                    *gl = if l == k {
                        two * spec.kappa * (zl - spec.beta)
                    } else {
                        two * zl
                    };
                }
            }
            v
        }
        LossKind::CrossEntropy => {
            let pr = probs(lg);
            if let Some(g) = grad {
                for (l, gl) in g.iter_mut().enumerate() {
                    *gl = if l == k { -pr.q } else { pr.p[l] };
                }
            }
            -pr.log_p[k]
        }
        LossKind::LabelSmoothing => {
            let pr = probs(lg);
            let v = (0..classes)
                .map(|l| -spec.smooth_target(classes, k, l) * pr.log_p[l])
                .sum();
            if let Some(g) = grad {
                let spread = spec.alpha * T::from_usize_lossy(classes - 1) / T::from_usize_lossy(classes);
                for (l, gl) in g.iter_mut().enumerate() {
                    *gl = if l == k {
                        spread - pr.q
                    } else {
                        pr.p[l] - spec.smooth_target(classes, k, l)
                    };
                }
            }
            v
        }
        LossKind::Focal => {
            let pr = probs(lg);
            let lp = pr.log_p[k];
            let v = if spec.gamma == T::zero() {
                -lp
            } else {
                -pr.q.powf(spec.gamma) * lp
            };
            if let Some(g) = grad {
                let eta = focal_eta(spec.gamma, pr.q, lp);
                // η (e_k − p)
                for (l, gl) in g.iter_mut().enumerate() {
                    *gl = if l == k { eta * pr.q } else { -eta * pr.p[l] };
                }
            }
            v
        }
    }
}

/// Logit-space Hessian (`K x K`, symmetric).
pub fn loss_hess<T: Real>(spec: &LossSpec<T>, lg: &Logits<'_, T>) -> Mat<T> {
    let classes = lg.classes();
    let k = lg.k;
    match spec.kind {
        LossKind::Mse => {
            let two = T::lit(2.0);
            Mat::from_fn(classes, classes, |i, j| match (i == j, i == k) {
                (true, true) => two * spec.kappa,
                (true, false) => two,
                _ => T::zero(),
            })
        }
        LossKind::CrossEntropy | LossKind::LabelSmoothing => {
            let p = softmax(lg.z);
            softmax_jacobian(&p)
        }
        LossKind::Focal => {
            let pr = probs(lg);
            let lp = pr.log_p[k];
            if spec.gamma == T::zero() {
                return softmax_jacobian(&pr.p);
            }
            let eta = focal_eta(spec.gamma, pr.q, lp);
            let mut h = softmax_jacobian(&pr.p).scale(-eta);
            if pr.q >= T::lit(FL_LIMIT_CUTOFF) {
                // η′ p_k (e_k − p)(e_k − p)ᵀ = [η′ q² p_k] r rᵀ with r = (e_k − p)/q
                let g = spec.gamma;
                let pk = T::one() - pr.q;
                let coef = g * pr.q.powf(g) * ((T::one() - g * pk) * lp + T::lit(2.0) * pr.q) * pk;
                let r: Vec<T> = (0..classes)
                    .map(|l| if l == k { T::one() } else { -pr.p[l] / pr.q })
                    .collect();
                for i in 0..classes {
                    for j in 0..classes {
                        h[(i, j)] += coef * r[i] * r[j];
                    }
                }
            }
            h
        }
    }
}

/// `diag(p) − p pᵀ`.
pub fn softmax_jacobian<T: Real>(p: &[T]) -> Mat<T> {
    let n = p.len();
    Mat::from_fn(n, n, |i, j| {
        let d = if i == j { p[i] } else { T::zero() };
        d - p[i] * p[j]
    })
}

/// Contrastive bound `φ(t)`: the loss at the logit vector with `z_k = 0` and
/// every off-target logit equal to `t/(K−1)`.
pub fn contrastive_phi<T: Real>(spec: &LossSpec<T>, t: T, classes: usize) -> Result<T> {
    if !spec.kind.is_contrastive() {
        return Err(Error::UnsupportedLoss(
            "MSE has no contrastive lower bound".into(),
        ));
    }
    if classes < 2 {
        return Err(Error::InvalidArgument("contrastive bound needs K >= 2".into()));
    }
    let z = equal_off_target_logits(t, classes);
    Ok(loss_value(spec, &Logits { z: &z, k: 0 }))
}

/// `dφ/dt`, via the chain rule through the equal-off-target logits.
pub fn contrastive_phi_deriv<T: Real>(spec: &LossSpec<T>, t: T, classes: usize) -> Result<T> {
    if !spec.kind.is_contrastive() {
        return Err(Error::UnsupportedLoss(
            "MSE has no contrastive lower bound".into(),
        ));
    }
    let z = equal_off_target_logits(t, classes);
    let g = loss_grad(spec, &Logits { z: &z, k: 0 });
    let s: T = g[1..].iter().copied().sum();
    Ok(s / T::from_usize_lossy(classes - 1))
}

fn equal_off_target_logits<T: Real>(t: T, classes: usize) -> Vec<T> {
    let off = t / T::from_usize_lossy(classes - 1);
    let mut z = vec![off; classes];
    z[0] = T::zero();
    z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastiveCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
    pub equality: bool,
}

/// Evaluates `L(z, y_k) ≥ φ(Σ_{j≠k}(z_j − z_k))`.
pub fn check_contrastive_bound<T: Real>(
    spec: &LossSpec<T>,
    lg: &Logits<'_, T>,
) -> Result<ContrastiveCheck<T>> {
    let k = lg.k;
    let zk = lg.z[k];
    let t: T = lg
        .z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &zj)| zj - zk)
        .sum();
    let rhs = contrastive_phi(spec, t, lg.classes())?;
    let lhs = loss_value(spec, lg);
    let tol = T::lit(1e-12);
    let (lo, hi) = lg
        .z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, &x)| {
            (lo.min(x), hi.max(x))
        });
    let scale = lg.z.iter().fold(T::one(), |m, &x| m.max(x.abs()));
    let off_equal = hi - lo <= tol * scale;
    Ok(ContrastiveCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - tol,
        equality: (lhs - rhs).abs() <= tol && off_equal,
    })
}

/// Whether `p_k` lies in the region where focal loss is convex.
pub fn fl_convex_region<T: Real>(p: &[T], k: usize) -> bool {
    p[k] >= T::lit(FL_CONVEX_THRESHOLD)
}

/// Numerical minimizer of `φ(t) + c|t|`.
///
/// A uniform grid of `points` samples on `[lo, hi]` locates the basin (the
/// lower end is pushed outward while the best sample sits on it), then the
/// cell around the best sample is refined: the kink at `t = 0` is tested
/// directly, a sign change of the derivative is bisected, and golden-section
/// search is the fallback.
pub fn contrastive_argmin<T: Real>(
    spec: &LossSpec<T>,
    classes: usize,
    c: T,
    lo: T,
    hi: T,
    points: usize,
) -> Result<T> {
    if !(c > T::zero()) || points < 3 || !(lo < hi) {
        return Err(Error::InvalidArgument("contrastive_argmin arguments".into()));
    }
    let obj = |t: T| -> Result<T> { Ok(contrastive_phi(spec, t, classes)? + c * t.abs()) };
    let mut lo = lo;
    let (mut best_i, mut grid) = (0, Vec::new());
    for _ in 0..60 {
        let step = (hi - lo) / T::from_usize_lossy(points - 1);
        grid = (0..points)
            .map(|i| lo + step * T::from_usize_lossy(i))
            .collect::<Vec<T>>();
        let mut best = T::infinity();
        for (i, &t) in grid.iter().enumerate() {
            let v = obj(t)?;
            if v < best {
                best = v;
                best_i = i;
            }
        }
        if best_i > 0 {
            break;
        }
        lo = lo - (hi - lo);
    }
    if best_i == 0 {
        return Err(Error::NumericalFailure("argmin escaped to -inf".into()));
    }
    let a = grid[best_i - 1];
    let b = grid[(best_i + 1).min(points - 1)];

    // derivative of φ(t) + c|t| from the left/right
    let dphi = |t: T| contrastive_phi_deriv(spec, t, classes);
    if a <= T::zero() && b >= T::zero() {
        let d0 = dphi(T::zero())?;
        if d0 - c <= T::zero() && d0 + c >= T::zero() {
            return Ok(T::zero());
        }
    }
    let deriv = |t: T| -> Result<T> { Ok(dphi(t)? + c * t.signum()) };
    // keep the refinement on one side of the kink
    let (a, b) = if a < T::zero() && b > T::zero() {
        if grid[best_i] <= T::zero() {
            (a, T::zero())
        } else {
            (T::zero(), b)
        }
    } else {
        (a, b)
    };
    let (da, db) = (deriv(a)?, deriv(b)?);
    if da < T::zero() && db > T::zero() {
        let (mut l, mut r) = (a, b);
        for _ in 0..200 {
            let m = T::lit(0.5) * (l + r);
            if m <= l || m >= r {
                break;
            }
            if deriv(m)? < T::zero() {
                l = m;
            } else {
                r = m;
            }
        }
        return Ok(T::lit(0.5) * (l + r));
    }
    golden_section(obj, a, b, T::lit(1e-14))
}

/// Golden-section minimization on `[a, b]`.
pub fn golden_section<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    tol: T,
) -> Result<T> {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..500 {
        if (b - a).abs() <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(T::lit(0.5) * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lg(z: &[f64], k: usize) -> Logits<'_, f64> {
        Logits::new(z, k).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0f64; 4]);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-16));
        let p = softmax(&[7.5f64, 7.5, 7.5]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-16));
        let p = softmax(&[10.0f64, 0.0]);
        let e = (-10.0f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-16);
        assert!((p[1] - 4.539_786_870_243_442e-5).abs() < 1e-18);
    }

    #[test]
    fn log_softmax_accurate_near_one() {
        let lp = log_softmax(&[40.0f64, 0.0]);
        // log p_0 = −log(1 + e^{−40}) ≈ −e^{−40}
        assert!((lp[0] + (-40.0f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn value_examples() {
        let z = [0.0; 4];
        let ce = LossSpec::ce();
        for k in 0..4 {
            assert!((loss_value(&ce, &lg(&z, k)) - 4f64.ln()).abs() < 1e-15);
        }
        let z = [0.3, -1.2, 2.0];
        let fl0 = LossSpec::focal(0.0);
        let ls0 = LossSpec::label_smoothing(0.0);
        let v = loss_value(&ce, &lg(&z, 1));
        assert_eq!(loss_value(&fl0, &lg(&z, 1)), v);
        assert!((loss_value(&ls0, &lg(&z, 1)) - v).abs() < 1e-15);
        let mse = LossSpec::mse(1.0, 15.0);
        assert_eq!(loss_value(&mse, &lg(&[0.0, 15.0, 0.0], 1)), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let g = loss_grad(&LossSpec::ce(), &lg(&[0.0, 0.0], 0));
        assert_eq!(g, vec![-0.5, 0.5]);
        let z = [0.4, -0.7, 1.1, 0.0];
        let ce = loss_grad(&LossSpec::ce(), &lg(&z, 2));
        let ls = loss_grad(&LossSpec::label_smoothing(0.0), &lg(&z, 2));
        for (a, b) in ce.iter().zip(&ls) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn hessian_examples() {
        let h = loss_hess(&LossSpec::ce(), &lg(&[0.0, 0.0], 1));
        assert_eq!(h.to_rows(), vec![vec![0.25, -0.25], vec![-0.25, 0.25]]);
        let h = loss_hess(&LossSpec::mse(1.0, 15.0), &lg(&[1.0, 2.0, 3.0], 0));
        assert_eq!(h, Mat::from_diag(&[2.0, 2.0, 2.0]));
        let h = loss_hess(&LossSpec::mse(3.0, 15.0), &lg(&[1.0, 2.0], 0));
        assert_eq!(h, Mat::from_diag(&[6.0, 2.0]));
    }

    #[test]
    fn focal_saturated_logits_stay_finite() {
        let fl = LossSpec::focal(3.0);
        let z = [800.0, -800.0, 0.0];
        let l = lg(&z, 0);
        assert_eq!(loss_value(&fl, &l), 0.0);
        assert!(loss_grad(&fl, &l).iter().all(|x| x.is_finite()));
        assert!(loss_hess(&fl, &l).is_finite());
        let fl_half = LossSpec::focal(0.5);
        assert!(loss_hess(&fl_half, &lg(&[30.0, 0.0], 0)).is_finite());
    }

    #[test]
    fn phi_examples() {
        let ce = LossSpec::ce();
        assert!((contrastive_phi(&ce, 0.0, 5).unwrap() - 5f64.ln()).abs() < 1e-15);
        let v = contrastive_phi(&ce, -2.0, 2).unwrap();
        assert!((v - 0.126_928_011_042_972_6).abs() < 1e-15);
        assert!(matches!(
            contrastive_phi(&LossSpec::mse(1.0, 15.0), 0.0, 3),
            Err(Error::UnsupportedLoss(_))
        ));
        let ls0 = LossSpec::label_smoothing(0.0);
        for t in [-7.0, -1.0, 0.0, 2.5] {
            let a = contrastive_phi(&ls0, t, 4).unwrap();
            let b = contrastive_phi(&ce, t, 4).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn contrastive_check_examples() {
        let ce = LossSpec::ce();
        let c = check_contrastive_bound(&ce, &lg(&[0.0; 3], 1)).unwrap();
        assert!((c.lhs - 3f64.ln()).abs() < 1e-15 && c.equality && c.holds);
        let c = check_contrastive_bound(&ce, &lg(&[2.0, -0.5, -0.5], 0)).unwrap();
        assert!(c.equality);
        let c = check_contrastive_bound(&ce, &lg(&[2.0, -0.5, 0.5], 0)).unwrap();
        assert!(c.holds && !c.equality && c.lhs > c.rhs);
    }

    #[test]
    fn convex_region_boundary() {
        assert!(fl_convex_region(&[0.5, 0.5], 0));
        assert!(fl_convex_region(&[0.21, 0.79], 0));
        assert!(!fl_convex_region(&[0.1, 0.9], 0));
    }

    #[test]
    fn argmin_kink_and_interior() {
        let ce = LossSpec::ce();
        // φ′(0) = 1/K = 0.25 < c = 1: minimum sits on the kink
        let t = contrastive_argmin(&ce, 4, 1.0, -50.0, 10.0, 1001).unwrap();
        assert_eq!(t, 0.0);
        // interior: φ′(t) = c ⇒ e^{s}/(1 + 3e^{s}) = 0.1 with s = t/3
        let t = contrastive_argmin(&ce, 4, 0.1, -50.0, 10.0, 1001).unwrap();
        let exact = 3.0 * (0.1f64 / 0.7).ln();
        assert!((t - exact).abs() < 1e-10, "{t} vs {exact}");
    }
}

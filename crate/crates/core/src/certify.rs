//! Global-optimality certificates, strict-saddle detection and the
//! one-parameter family of global solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{embedded_etf, nc2, nc3};
use crate::losses::{golden_section, softmax, value_and_grad, LossKind, Logits, FL_CONVEX_THRESHOLD};
use crate::numlin::{norm2, null_space, svd, Mat};
use crate::scalar::Real;
use crate::ufm::{gradient, hess_quadratic_form, loss_and_logit_grad, Hyper, UfmState};

/// Gradient-norm threshold below which a point counts as critical.
pub const DEFAULT_CRIT_TOL: f64 = 1e-7;
/// Spectral-gap threshold for issuing a global-minimum certificate.
pub const DEFAULT_CERT_TOL: f64 = 1e-6;
/// Relative singular-value cut for the `U`, `V` factors of `WH`.
pub const KKT_RANK_TOL: f64 = 1e-10;
/// Singular-value threshold for a null vector of `W`.
pub const NULL_VECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    GlobalMin,
    StrictSaddle,
    NotCritical,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::GlobalMin => "GlobalMin",
            Verdict::StrictSaddle => "StrictSaddle",
            Verdict::NotCritical => "NotCritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances<T> {
    pub crit_tol: T,
    pub cert_tol: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            crit_tol: T::lit(DEFAULT_CRIT_TOL),
            cert_tol: T::lit(DEFAULT_CERT_TOL),
        }
    }
}

/// Where focal loss is convex in the logits; a certificate for FL is only
/// meaningful when every sample has `p_k >= 0.21`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlRegion<T> {
    pub min_pk: T,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<T> {
    pub verdict: Verdict,
    /// `‖∇f‖` over all three blocks.
    pub grad_norm: T,
    /// `‖∇g(WH + b1ᵀ)‖₂ − √(λW λH)`.
    pub spectral_gap: T,
    /// `‖∇g V + √(λWλH) U‖F`.
    pub kkt_u_residual: T,
    /// `‖∇gᵀ U + √(λWλH) V‖F`.
    pub kkt_v_residual: T,
    /// `‖∇g 1 + λb b‖₂`.
    pub b_residual: T,
    pub tolerances: Tolerances<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl_region: Option<FlRegion<T>>,
}

/// Minimizer of the objective restricted to the ETF family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoSolution<T> {
    /// `ρ* = ‖W‖F²`.
    pub rho: T,
    pub f_star: T,
    /// Per-sample logit separation `z_k − z_j`.
    pub margin: T,
}

fn require_etf_loss<T: Real>(hyper: &Hyper<T>) -> Result<()> {
    if hyper.loss.kind == LossKind::Mse {
        return Err(Error::UnsupportedLoss(
            "the ETF solution family is only defined for CE, FL and LS".into(),
        ));
    }
    Ok(())
}

/// Feature-to-classifier ratio `√(λW / (λH n))` of the global solutions.
pub fn feature_scale<T: Real>(hyper: &Hyper<T>) -> T {
    (hyper.lambda_w / (hyper.lambda_h * T::from_usize_lossy(hyper.n))).sqrt()
}

/// Target and off-target logits of the ETF solution with `‖W‖F² = ρ`.
pub fn rho_logits<T: Real>(hyper: &Hyper<T>, rho: T) -> (T, T) {
    let k = T::from_usize_lossy(hyper.k);
    let cr = feature_scale(hyper) * rho;
    (cr / k, -cr / (k * (k - T::one())))
}

/// `f(ρ) = L(z(ρ)) + λW ρ`, the objective along the ETF family evaluated
/// from the logits alone.
pub fn rho_family_value<T: Real>(hyper: &Hyper<T>, rho: T) -> Result<T> {
    require_etf_loss(hyper)?;
    let (zt, zo) = rho_logits(hyper, rho);
    let mut z = vec![zo; hyper.k];
    z[0] = zt;
    let l = value_and_grad(&hyper.loss, &Logits::new(&z, 0)?, None);
    Ok(l + hyper.lambda_w * rho)
}

/// ETF global solution with `‖W‖F² = ρ`: rows of `W` form a simplex ETF
/// embedded in `R^d`, every feature equals `√(λW/(λH n))` times its class
/// classifier row, and `b = 0`.
pub fn construct_global_solution<T: Real>(hyper: &Hyper<T>, rho: T, seed: u64) -> Result<UfmState<T>> {
    require_etf_loss(hyper)?;
    if hyper.d < hyper.k {
        return Err(Error::Dimension(format!(
            "the ETF solution needs d >= K, got d={}, K={}",
            hyper.d, hyper.k
        )));
    }
    if !(rho >= T::zero()) {
        return Err(Error::InvalidArgument("rho must be non-negative".into()));
    }
    let m = embedded_etf::<T>(hyper.k, hyper.d, seed)?;
    let w = m.transpose().scale((rho / T::from_usize_lossy(hyper.k)).sqrt());
    let c = feature_scale(hyper);
    let h = Mat::from_fn(hyper.d, hyper.samples(), |a, j| c * w[(hyper.label(j), a)]);
    Ok(UfmState {
        w,
        h,
        b: vec![T::zero(); hyper.k],
    })
}

const MAX_DOUBLINGS: usize = 200;

/// Minimizes `f(ρ)` over `ρ >= 0`: doubles from `ρ = 1` until `f` increases,
/// then golden-section search to `|Δρ| <= 1e-10 (1 + ρ)`.
pub fn rho_oracle<T: Real>(hyper: &Hyper<T>) -> Result<RhoSolution<T>> {
    hyper.validate()?;
    require_etf_loss(hyper)?;
    let f = |r: T| rho_family_value(hyper, r);
    let two = T::lit(2.0);
    let (mut lo, mut mid) = (T::zero(), T::one());
    let mut f_mid = f(mid)?;
    let hi = if f_mid >= f(lo)? {
        mid
    } else {
        let mut found = None;
        for _ in 0..MAX_DOUBLINGS {
            let next = mid * two;
            let f_next = f(next)?;
            if f_next >= f_mid {
                found = Some(next);
                break;
            }
            lo = mid;
            mid = next;
            f_mid = f_next;
        }
        found.ok_or_else(|| {
            Error::NumericalFailure("f(ρ) kept decreasing; no finite minimizer bracketed".into())
        })?
    };
    let mut rho = golden_section(f, lo, hi, T::lit(1e-10))?;
    let mut f_star = f(rho)?;
    // minimizer on the boundary: the family collapses to the origin
    let f_zero = f(T::zero())?;
    if lo == T::zero() && f_zero <= f_star {
        rho = T::zero();
        f_star = f_zero;
    }
    // beyond the bracket f must keep increasing
    let slack = T::lit(1e-12) * (T::one() + f_star.abs());
    let mut probe = hi;
    for _ in 0..4 {
        probe *= two;
        if f(probe)? < f_star - slack {
            return Err(Error::NumericalFailure(format!(
                "f(ρ) is not unimodal: f({probe:e}) < f*({rho:e})"
            )));
        }
    }
    let k = T::from_usize_lossy(hyper.k);
    Ok(RhoSolution {
        rho,
        f_star,
        margin: feature_scale(hyper) * rho / (k - T::one()),
    })
}

/// Smallest target-class probability over all samples.
pub fn min_target_probability<T: Real>(state: &UfmState<T>, hyper: &Hyper<T>) -> Result<T> {
    let z = state.logits()?;
    let mut col = vec![T::zero(); hyper.k];
    let mut lowest = T::one();
    for j in 0..hyper.samples() {
        for (r, c) in col.iter_mut().enumerate() {
            *c = z[(r, j)];
        }
        lowest = lowest.min(softmax(&col)[hyper.label(j)]);
    }
    Ok(lowest)
}

/// Certificate from the stationarity conditions of the nuclear-norm
/// relaxation: a critical point with `‖∇g‖₂ <= √(λW λH)` is a global minimum.
pub fn global_certificate<T: Real>(
    state: &UfmState<T>,
    hyper: &Hyper<T>,
    tolerances: Tolerances<T>,
) -> Result<Certificate<T>> {
    let grad_norm = gradient(state, hyper)?.norm();
    let (_, g) = loss_and_logit_grad(state, hyper)?;
    let s = hyper.nuclear_weight();
    let g_svd = svd(&g)?;
    let spectral_gap = g_svd.sigma.first().copied().unwrap_or(T::zero()) - s;

    let z = state.w.matmul(&state.h)?;
    let z_svd = svd(&z)?;
    let smax = z_svd.sigma.first().copied().unwrap_or(T::zero());
    let r = z_svd
        .sigma
        .iter()
        .take_while(|&&x| x > T::lit(KKT_RANK_TOL) * smax && x > T::zero())
        .count();
    let u = z_svd.u.cols_range(0, r);
    let v = z_svd.v.cols_range(0, r);
    let kkt_u_residual = g.matmul(&v)?.zip_with(&u, |a, b| a + s * b)?.frob_norm();
    let kkt_v_residual = g.t_matmul(&u)?.zip_with(&v, |a, b| a + s * b)?.frob_norm();
    let b_vec: Vec<T> = (0..hyper.k)
        .map(|i| g.row(i).iter().copied().sum::<T>() + hyper.lambda_b * state.b[i])
        .collect();
    let b_residual = norm2(&b_vec);

    let verdict = if !(grad_norm <= tolerances.crit_tol) {
        Verdict::NotCritical
    } else if spectral_gap <= tolerances.cert_tol {
        Verdict::GlobalMin
    } else {
        Verdict::StrictSaddle
    };
    let fl_region = if hyper.loss.kind == LossKind::Focal {
        let min_pk = min_target_probability(state, hyper)?;
        Some(FlRegion {
            min_pk,
            ok: min_pk >= T::lit(FL_CONVEX_THRESHOLD),
        })
    } else {
        None
    };
    Ok(Certificate {
        verdict,
        grad_norm,
        spectral_gap,
        kkt_u_residual,
        kkt_v_residual,
        b_residual,
        tolerances,
        fl_region,
    })
}

/// Escape direction at a strict saddle.
#[derive(Debug, Clone)]
pub struct NegativeCurvature<T> {
    pub delta: UfmState<T>,
    /// `−2‖a‖² (‖∇g‖₂ − √(λW λH))`.
    pub predicted: T,
    /// `∇²f[Δ, Δ]` evaluated through the Hessian bilinear form.
    pub measured: T,
}

/// Builds `Δ = ((λH/λW)^{1/4} u aᵀ, −(λH/λW)^{−1/4} a vᵀ, 0)` from a unit null
/// vector `a` of `W` and the top singular pair `(u, v)` of `∇g`.
///
/// The predicted curvature is exact when `Hᵀa = 0`, which holds at critical
/// points; callers should pass a near-critical state.
pub fn negative_curvature_direction<T: Real>(
    state: &UfmState<T>,
    hyper: &Hyper<T>,
) -> Result<NegativeCurvature<T>> {
    state.check_shape(hyper)?;
    let (_, g) = loss_and_logit_grad(state, hyper)?;
    let g_svd = svd(&g)?;
    let gap = g_svd.sigma[0] - hyper.nuclear_weight();
    if !(gap > T::zero()) {
        return Err(Error::NotStrictSaddle {
            gap: gap.to_f64_lossy(),
        });
    }
    let (k, d) = (hyper.k, hyper.d);
    let w_svd = svd(&state.w)?;
    let sigma_min = if d > k {
        T::zero()
    } else {
        w_svd.sigma.last().copied().unwrap_or(T::zero())
    };
    let null = null_space(&state.w, T::lit(NULL_VECTOR_TOL))?;
    if d <= k || null.cols() == 0 {
        return Err(Error::NoNullVector {
            d,
            k,
            sigma_min: sigma_min.to_f64_lossy(),
        });
    }
    let a = null.col(0);
    let u = g_svd.u.col(0);
    let v = g_svd.v.col(0);
    let c = (hyper.lambda_h / hyper.lambda_w).powf(T::lit(0.25));
    let delta = UfmState {
        w: Mat::from_fn(k, d, |i, j| c * u[i] * a[j]),
        h: Mat::from_fn(d, hyper.samples(), |i, j| -a[i] * v[j] / c),
        b: vec![T::zero(); k],
    };
    let a_sq = a.iter().map(|&x| x * x).sum::<T>();
    let predicted = -T::lit(2.0) * a_sq * gap;
    let measured = hess_quadratic_form(state, hyper, &delta)?;
    Ok(NegativeCurvature {
        delta,
        predicted,
        measured,
    })
}

/// Certificate plus the evidence attached to each verdict.
#[derive(Debug, Clone)]
pub struct Classification<T> {
    pub certificate: Certificate<T>,
    /// Escape direction for a strict saddle, when `W` has a null vector.
    pub negative_curvature: Option<NegativeCurvature<T>>,
    pub nc2: Option<T>,
    pub nc3: Option<T>,
}

impl<T> Classification<T> {
    pub fn verdict(&self) -> Verdict {
        self.certificate.verdict
    }
}

pub fn classify_critical_point<T: Real>(
    state: &UfmState<T>,
    hyper: &Hyper<T>,
    tolerances: Tolerances<T>,
) -> Result<Classification<T>> {
    let certificate = global_certificate(state, hyper, tolerances)?;
    let mut out = Classification {
        certificate,
        negative_curvature: None,
        nc2: None,
        nc3: None,
    };
    match out.certificate.verdict {
        Verdict::StrictSaddle => match negative_curvature_direction(state, hyper) {
            Ok(nc) => out.negative_curvature = Some(nc),
            Err(Error::NoNullVector { .. }) => {}
            Err(e) => return Err(e),
        },
        Verdict::GlobalMin => {
            out.nc2 = Some(nc2(&state.w)?);
            out.nc3 = Some(nc3(&state.w, &state.h, hyper.n, hyper.k)?);
        }
        Verdict::NotCritical => {}
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossSpec;
    use crate::ufm::objective;

    fn hyper(k: usize, d: usize, n: usize, lw: f64, lh: f64) -> Hyper<f64> {
        Hyper::new(k, d, n, lw, lh, lw, LossSpec::ce())
    }

    #[test]
    fn rho_zero_is_origin() {
        let hp = hyper(4, 6, 3, 5e-3, 5e-3);
        let s = construct_global_solution(&hp, 0.0, 1).unwrap();
        assert_eq!(s, UfmState::zeros(&hp));
        let f = objective(&s, &hp).unwrap().f;
        assert!((f - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        let hp = hyper(4, 3, 3, 5e-3, 5e-3);
        assert!(construct_global_solution(&hp, 1.0, 1).is_err());
        let mut hp = hyper(4, 6, 3, 5e-3, 5e-3);
        hp.loss = LossSpec::mse(1.0, 1.0);
        assert!(matches!(construct_global_solution(&hp, 1.0, 1), Err(Error::UnsupportedLoss(_))));
        assert!(rho_oracle(&hp).is_err());
    }

    #[test]
    fn family_paths_agree() {
        let hp = hyper(4, 6, 10, 0.01, 1e-5);
        for &rho in &[0.0, 0.3, 2.0, 7.5] {
            let s = construct_global_solution(&hp, rho, 3).unwrap();
            let direct = objective(&s, &hp).unwrap().f;
            let family = rho_family_value(&hp, rho).unwrap();
            assert!((direct - family).abs() < 1e-12, "{rho}: {direct} vs {family}");
        }
    }

    #[test]
    fn heavy_penalty_gives_zero_rho() {
        let hp = hyper(4, 6, 10, 50.0, 50.0);
        let sol = rho_oracle(&hp).unwrap();
        assert!(sol.rho < 1e-8);
        assert!((sol.f_star - 4f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn origin_is_strict_saddle() {
        let hp = hyper(4, 6, 10, 5e-3, 5e-3);
        let origin = UfmState::zeros(&hp);
        let cert = global_certificate(&origin, &hp, Tolerances::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::StrictSaddle);
        let expected = 1.0 / (4.0 * 10f64.sqrt()) - 5e-3;
        assert!((cert.spectral_gap - expected).abs() < 1e-12);
        let nc = negative_curvature_direction(&origin, &hp).unwrap();
        assert!((nc.predicted + 2.0 * expected).abs() < 1e-12);
        assert!((nc.measured - nc.predicted).abs() <= 1e-6 * nc.predicted.abs().max(1.0));
    }
}

mod common;

use collapse_core::losses::{
    check_contrastive_bound, contrastive_argmin, contrastive_phi, contrastive_phi_deriv, fl_convex_region, loss_grad,
    loss_hess, loss_value, softmax, LossKind, LossSpec, Logits,
};
use collapse_core::numlin::sym_eig;
use collapse_core::Error;
use common::{all_losses, central_grad, contrastive_losses, max_abs, max_abs_diff};
use proptest::prelude::*;

fn value(spec: &LossSpec<f64>, z: &[f64], k: usize) -> f64 {
    loss_value(spec, &Logits::new(z, k).unwrap())
}

/// Direct evaluation from the probability vector, no log-sum-exp tricks.
fn naive_value(spec: &LossSpec<f64>, z: &[f64], k: usize) -> f64 {
    let e: Vec<f64> = z.iter().map(|x| x.exp()).collect();
    let s: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|x| x / s).collect();
    let kk = z.len() as f64;
    match spec.kind {
        LossKind::CrossEntropy => -p[k].ln(),
        LossKind::Focal => -(1.0 - p[k]).powf(spec.gamma) * p[k].ln(),
        LossKind::LabelSmoothing => (0..z.len())
            .map(|l| {
                let y = if l == k { 1.0 - (kk - 1.0) * spec.alpha / kk } else { spec.alpha / kk };
                -y * p[l].ln()
            })
            .sum(),
        LossKind::Mse => {
            spec.kappa * (z[k] - spec.beta).powi(2)
                + z.iter().enumerate().filter(|&(l, _)| l != k).map(|(_, x)| x * x).sum::<f64>()
        }
    }
}

#[test]
fn value_examples() {
    let ce = LossSpec::ce();
    for k in 0..4 {
        assert!((value(&ce, &[0.0; 4], k) - 4f64.ln()).abs() < 1e-15);
    }
    let z = [0.3, -1.2, 2.0];
    assert!((value(&LossSpec::focal(0.0), &z, 1) - value(&ce, &z, 1)).abs() < 1e-15);
    assert!((value(&LossSpec::label_smoothing(0.0), &z, 2) - value(&ce, &z, 2)).abs() < 1e-15);
    assert_eq!(value(&LossSpec::mse(1.0, 15.0), &[0.0, 15.0, 0.0], 1), 0.0);
}

#[test]
fn gradient_examples() {
    let g = loss_grad(&LossSpec::ce(), &Logits::new(&[0.0, 0.0], 0).unwrap());
    assert_eq!(g, vec![-0.5, 0.5]);
    let z = [1.0, -0.5, 0.25, 2.0];
    let lg = Logits::new(&z, 3).unwrap();
    assert!(max_abs_diff(&loss_grad(&LossSpec::label_smoothing(0.0), &lg), &loss_grad(&LossSpec::ce(), &lg)) < 1e-16);
}

#[test]
fn hessian_examples() {
    let h = loss_hess(&LossSpec::ce(), &Logits::new(&[0.0, 0.0], 1).unwrap());
    assert_eq!(h.to_rows(), vec![vec![0.25, -0.25], vec![-0.25, 0.25]]);
    let h = loss_hess(&LossSpec::mse(1.0, 15.0), &Logits::new(&[3.0, 1.0, -2.0], 0).unwrap());
    assert_eq!(h.to_rows(), vec![vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 2.0]]);
}

#[test]
fn contrastive_phi_examples() {
    let ce = LossSpec::ce();
    assert!((contrastive_phi(&ce, 0.0, 5).unwrap() - 5f64.ln()).abs() < 1e-15);
    assert!((contrastive_phi(&ce, -2.0, 2).unwrap() - 0.126_928_011_042_972_6).abs() < 1e-15);
    for t in [-7.0, -0.3, 0.0, 2.5] {
        let a = contrastive_phi(&LossSpec::label_smoothing(0.0), t, 4).unwrap();
        let b = contrastive_phi(&ce, t, 4).unwrap();
        assert!((a - b).abs() < 1e-15);
        // log(1 + (K−1) e^{t/(K−1)})
        let closed = (1.0 + 3.0 * (t / 3.0f64).exp()).ln();
        assert!((b - closed).abs() < 1e-14);
    }
    assert!(matches!(
        contrastive_phi(&LossSpec::mse(1.0, 15.0), 0.0, 3),
        Err(Error::UnsupportedLoss(_))
    ));
}

#[test]
fn contrastive_check_examples() {
    let ce = LossSpec::ce();
    let c = check_contrastive_bound(&ce, &Logits::new(&[0.0; 3], 1).unwrap()).unwrap();
    assert!((c.lhs - 3f64.ln()).abs() < 1e-15 && (c.rhs - 3f64.ln()).abs() < 1e-15);
    assert!(c.holds && c.equality);
    let c = check_contrastive_bound(&ce, &Logits::new(&[1.0, -2.0, 4.0], 2).unwrap()).unwrap();
    assert!(c.holds && !c.equality);
}

#[test]
fn fl_region_boundaries() {
    assert!(fl_convex_region(&[0.5, 0.5], 0));
    assert!(fl_convex_region(&[0.21, 0.79], 0));
    assert!(!fl_convex_region(&[0.1, 0.9], 0));
}

#[test]
fn focal_near_certain_target_is_finite() {
    let spec = LossSpec::focal(3.0);
    let lg = Logits::new(&[60.0, -10.0, -10.0], 0).unwrap();
    assert!(loss_grad(&spec, &lg).iter().all(|x: &f64| x.is_finite()));
    assert!(loss_hess(&spec, &lg).is_finite());
    assert!(loss_value(&spec, &lg) >= 0.0);
}

#[test]
fn contrastive_argmin_nonpositive_and_unique() {
    for spec in contrastive_losses() {
        for k in [2usize, 4, 10] {
            for c in [1e-3, 1e-1, 1.0] {
                let a = contrastive_argmin(&spec, k, c, -50.0, 10.0, 100_000).unwrap();
                let b = contrastive_argmin(&spec, k, c, -80.0, 30.0, 77_777).unwrap();
                assert!(a <= 0.0, "{:?} K={k} c={c}: t* = {a}", spec.kind);
                assert!((a - b).abs() <= 1e-8, "{:?} K={k} c={c}: {a} vs {b}", spec.kind);
            }
        }
    }
}

#[test]
fn ce_argmin_matches_stationarity() {
    // φ'(t) = e^{t/(K−1)} / (1 + (K−1) e^{t/(K−1)}) = c for t < 0
    let (k, c) = (4usize, 0.1f64);
    let km1 = (k - 1) as f64;
    let t = km1 * (c / (1.0 - km1 * c)).ln();
    let got = contrastive_argmin(&LossSpec::ce(), k, c, -50.0, 10.0, 100_000).unwrap();
    assert!((got - t).abs() < 1e-8);
}

fn logits_strategy() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..=10).prop_flat_map(|k| (prop::collection::vec(-6.0f64..6.0, k), 0..k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn softmax_is_a_distribution((z, _) in logits_strategy()) {
        let p = softmax(&z);
        prop_assert!(p.iter().all(|&x| x > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn values_match_naive_formulas((z, k) in logits_strategy()) {
        for spec in all_losses() {
            let a = value(&spec, &z, k);
            let b = naive_value(&spec, &z, k);
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{:?}: {} vs {}", spec.kind, a, b);
        }
    }

    #[test]
    fn shift_invariance((z, k) in logits_strategy(), c in -20.0f64..20.0) {
        let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
        for spec in contrastive_losses() {
            prop_assert!((value(&spec, &z, k) - value(&spec, &shifted, k)).abs() <= 1e-10);
        }
    }

    #[test]
    fn gradient_matches_central_differences((z, k) in logits_strategy()) {
        for spec in all_losses() {
            let g = loss_grad(&spec, &Logits::new(&z, k).unwrap());
            let fd = central_grad(|x| value(&spec, x, k), &z, 1e-5);
            let scale = max_abs(&g).max(max_abs(&fd)).max(1e-12);
            prop_assert!(max_abs_diff(&g, &fd) / scale <= 1e-6, "{:?}", spec.kind);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences((z, k) in logits_strategy()) {
        for spec in all_losses() {
            let h = loss_hess(&spec, &Logits::new(&z, k).unwrap());
            prop_assert!(h.sub(&h.transpose()).unwrap().max_abs() <= 1e-12);
            let kk = z.len();
            for r in 0..kk {
                let fd = central_grad(|x| loss_grad(&spec, &Logits::new(x, k).unwrap())[r], &z, 1e-5);
                let scale = h.max_abs().max(max_abs(&fd)).max(1e-8);
                prop_assert!(max_abs_diff(h.row(r), &fd) / scale <= 1e-6, "{:?} row {}", spec.kind, r);
            }
        }
    }

    #[test]
    fn ce_and_ls_hessians_are_psd((z, k) in logits_strategy()) {
        for spec in [LossSpec::ce(), LossSpec::label_smoothing(0.1)] {
            let h = loss_hess(&spec, &Logits::new(&z, k).unwrap());
            prop_assert!(sym_eig(&h).unwrap().min_value() >= -1e-10);
        }
    }

    #[test]
    fn focal_hessian_psd_in_convex_region((z, k) in logits_strategy(), gamma in 0.0f64..5.0) {
        let p = softmax(&z);
        prop_assume!(fl_convex_region(&p, k));
        let h = loss_hess(&LossSpec::focal(gamma), &Logits::new(&z, k).unwrap());
        prop_assert!(sym_eig(&h).unwrap().min_value() >= -1e-10);
    }

    #[test]
    fn contrastive_bound_holds((z, k) in logits_strategy()) {
        for spec in contrastive_losses() {
            let c = check_contrastive_bound(&spec, &Logits::new(&z, k).unwrap()).unwrap();
            prop_assert!(c.holds, "{:?}: {} < {}", spec.kind, c.lhs, c.rhs);
        }
    }

    #[test]
    fn phi_derivative_matches_differences(t in -30.0f64..10.0, k in 2usize..10) {
        for spec in contrastive_losses() {
            let d = contrastive_phi_deriv(&spec, t, k).unwrap();
            let fd = central_grad(|x| contrastive_phi(&spec, x[0], k).unwrap(), &[t], 1e-5)[0];
            prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(fd.abs()).max(1e-8));
        }
    }
}

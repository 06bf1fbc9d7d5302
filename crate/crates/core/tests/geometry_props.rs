mod common;

use collapse_core::geometry::{
    embedded_etf, etf_gram, gram_alignment, nc1, nc2, nc3, nc4, standard_etf, ClassStats, EtfMatrix,
};
use collapse_core::io::read_features;
use collapse_core::numlin::{qr_orthonormal, sym_eig, Mat};
use collapse_core::rng::LabRng;
use proptest::prelude::*;

fn gram(m: &Mat<f64>) -> Mat<f64> {
    m.t_matmul(m).unwrap()
}

fn random_orthogonal(d: usize, seed: u64) -> Mat<f64> {
    qr_orthonormal(&LabRng::new(seed).gaussian_mat(d, d, 1.0)).unwrap()
}

#[test]
fn pairwise_cosines_of_standard_etf() {
    for k in 2..12 {
        let g = gram(&standard_etf::<f64>(k).unwrap());
        for i in 0..k {
            assert!((g[(i, i)] - 1.0).abs() < 1e-12);
            for j in 0..k {
                if i != j {
                    assert!((g[(i, j)] + 1.0 / (k as f64 - 1.0)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn embedded_etf_grams_across_seeds() {
    let a = embedded_etf::<f64>(4, 8, 1).unwrap();
    let b = embedded_etf::<f64>(4, 8, 2).unwrap();
    let g = gram(&standard_etf::<f64>(4).unwrap());
    assert!(gram(&a).sub(&g).unwrap().max_abs() < 1e-10);
    assert!(gram(&b).sub(&gram(&a)).unwrap().max_abs() < 1e-10);
    assert!(a.sub(&b).unwrap().max_abs() > 1e-3);
    let etf = EtfMatrix { m: a.scale(2.5), scale: 2.5 };
    assert!(etf.gram_residual().unwrap() < 1e-10);
}

#[test]
fn nc_metrics_vanish_on_collapsed_features() {
    let (k, n, d) = (4usize, 3usize, 6usize);
    let m = embedded_etf::<f64>(k, d, 3).unwrap();
    let w = m.transpose().scale(0.7);
    let h = Mat::from_fn(d, n * k, |a, j| 1.9 * m[(a, j % k)]);
    assert!(nc1(&h, n, k).unwrap().value < 1e-20);
    assert!(nc2(&w).unwrap() < 1e-10);
    assert!(nc3(&w, &h, n, k).unwrap() < 1e-10);
    assert!(nc4(&w, &[0.0; 4], &h).unwrap() < 1e-12);
    // W right-multiplied by an orthogonal map
    let q = random_orthogonal(d, 17);
    assert!((nc2(&w.matmul(&q).unwrap()).unwrap() - nc2(&w).unwrap()).abs() < 1e-10);
}

#[test]
fn gram_alignment_rotation_and_scale() {
    let mut rng = LabRng::new(8);
    let w = rng.gaussian_mat::<f64>(3, 5, 1.0);
    let h = rng.gaussian_mat::<f64>(5, 12, 1.0);
    let q = random_orthogonal(5, 9);
    let z1 = w.matmul(&h).unwrap();
    // rotate features, counter-rotate the classifier, rescale
    let z2 = w.matmul(&q).unwrap().matmul(&q.t_matmul(&h).unwrap()).unwrap().scale(3.0);
    assert!(gram_alignment(&z1, &z2).unwrap() < 1e-12);
    assert!(gram_alignment(&z1, &Mat::zeros(4, 12)).is_err());
}

#[test]
fn feature_dump_feeds_the_metrics() {
    let csv = "label,f0,f1\n0,1,0\n1,-1,0\n0,1,0\n1,-1,0\n";
    let dump = read_features::<f64, _>(csv.as_bytes(), 2).unwrap();
    assert_eq!(nc1(&dump.h, dump.n, dump.k).unwrap().value, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedded_gram_matches_standard(k in 2usize..50, extra in 0usize..78, seed in any::<u64>()) {
        let d = k + extra;
        let m = embedded_etf::<f64>(k, d, seed).unwrap();
        prop_assert!(gram(&m).sub(&etf_gram(k).unwrap()).unwrap().max_abs() <= 1e-10);
        // class vectors sum to zero
        for a in 0..d {
            prop_assert!(m.row(a).iter().sum::<f64>().abs() <= 1e-12);
        }
    }

    #[test]
    fn class_covariances_are_symmetric_psd(k in 2usize..6, n in 1usize..6, d in 1usize..8, seed in any::<u64>()) {
        let h = LabRng::new(seed).gaussian_mat::<f64>(d, n * k, 1.0);
        let s = ClassStats::compute(&h, n, k).unwrap();
        for cov in [&s.sigma_w, &s.sigma_b] {
            prop_assert!(cov.sub(&cov.transpose()).unwrap().max_abs() <= 1e-10);
            prop_assert!(sym_eig(cov).unwrap().min_value() >= -1e-10);
        }
    }

    #[test]
    fn nc1_invariant_to_rotation_and_scale(k in 2usize..5, n in 2usize..5, seed in any::<u64>(), c in 0.1f64..10.0) {
        let d = k + 2;
        let mut rng = LabRng::new(seed);
        let means = rng.gaussian_mat::<f64>(d, k, 3.0);
        let h = Mat::from_fn(d, n * k, |a, j| means[(a, j % k)] + 0.3 * rng.gaussian::<f64>());
        let base = nc1(&h, n, k).unwrap().value;
        let q = random_orthogonal(d, seed ^ 0xabc);
        let moved = q.matmul(&h).unwrap().scale(c);
        let other = nc1(&moved, n, k).unwrap().value;
        prop_assert!((base - other).abs() <= 1e-9 * base.abs().max(1.0), "{} vs {}", base, other);
    }

    #[test]
    fn nc2_scale_and_rotation_invariant(k in 2usize..8, seed in any::<u64>(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let d = k + 3;
        let w = LabRng::new(seed).gaussian_mat::<f64>(k, d, 1.0);
        let q = random_orthogonal(d, seed.wrapping_add(1));
        let base = nc2(&w).unwrap();
        prop_assert!((nc2(&w.scale(c)).unwrap() - base).abs() <= 1e-10);
        prop_assert!((nc2(&w.matmul(&q).unwrap()).unwrap() - base).abs() <= 1e-10);
    }

    #[test]
    fn nc4_compensated_bias_vanishes(k in 2usize..6, n in 1usize..4, seed in any::<u64>()) {
        let d = k + 1;
        let mut rng = LabRng::new(seed);
        let w = rng.gaussian_mat::<f64>(k, d, 1.0);
        let h = rng.gaussian_mat::<f64>(d, n * k, 1.0);
        let hg: Vec<f64> = (0..d).map(|a| h.row(a).iter().sum::<f64>() / (n * k) as f64).collect();
        let b: Vec<f64> = w.matvec(&hg).unwrap().iter().map(|x| -x).collect();
        prop_assert!(nc4(&w, &b, &h).unwrap() <= 1e-12);
    }
}

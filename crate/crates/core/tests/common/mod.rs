#![allow(dead_code)]

use collapse_core::losses::LossSpec;
use collapse_core::numlin::Mat;
use collapse_core::rng::LabRng;
use collapse_core::ufm::{objective, Hyper, UfmState};

pub fn all_losses() -> Vec<LossSpec<f64>> {
    vec![
        LossSpec::ce(),
        LossSpec::focal(3.0),
        LossSpec::label_smoothing(0.1),
        LossSpec::mse(1.0, 15.0),
    ]
}

pub fn contrastive_losses() -> Vec<LossSpec<f64>> {
    vec![LossSpec::ce(), LossSpec::focal(3.0), LossSpec::label_smoothing(0.1)]
}

/// Central difference `(f(x + h) − f(x − h)) / 2h` of a scalar function of a vector.
pub fn central_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `(f(x + εΔ) + f(x − εΔ) − 2 f(x)) / ε²` on the UFM objective.
pub fn fd_curvature(state: &UfmState<f64>, hyper: &Hyper<f64>, delta: &UfmState<f64>, eps: f64) -> f64 {
    let f = |s: f64| {
        let mut x = state.clone();
        x.axpy(s, delta);
        objective(&x, hyper).unwrap().f
    };
    (f(eps) + f(-eps) - 2.0 * f(0.0)) / (eps * eps)
}

pub fn random_state(hyper: &Hyper<f64>, sigma: f64, seed: u64) -> UfmState<f64> {
    UfmState::gaussian(hyper, sigma, &mut LabRng::new(seed))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn orthonormality_error(q: &Mat<f64>) -> f64 {
    let g = q.t_matmul(q).unwrap();
    g.sub(&Mat::identity(q.cols())).unwrap().max_abs()
}

//! Helpers for the acceptance run in `tests/acceptance.rs`.

use collapse_core::rng::LabRng;
use collapse_core::ufm::{objective, Hyper, UfmState};

/// Second central difference of `f` along `delta` at `state`.
pub fn fd_curvature(state: &UfmState<f64>, hyper: &Hyper<f64>, delta: &UfmState<f64>, eps: f64) -> f64 {
    let f = |s: f64| {
        let mut x = state.clone();
        x.axpy(s, delta);
        objective(&x, hyper).expect("finite objective").f
    };
    (f(eps) - 2.0 * f(0.0) + f(-eps)) / (eps * eps)
}

pub fn random_state(hyper: &Hyper<f64>, sigma: f64, seed: u64) -> UfmState<f64> {
    UfmState::gaussian(hyper, sigma, &mut LabRng::new(seed))
}

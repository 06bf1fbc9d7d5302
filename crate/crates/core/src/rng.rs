//! Seeded random streams.
//!
//! `xoshiro256++` seeded through SplitMix64 (`seed_from_u64`), with
//! Gaussians drawn by `rand_distr`'s ziggurat sampler. Streams are
//! reproducible bit-for-bit across runs on one platform.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::numlin::Mat;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct LabRng(Xoshiro256PlusPlus);

impl LabRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn gaussian<T: Real>(&mut self) -> T {
        let x: f64 = self.0.sample(StandardNormal);
        T::lit(x)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform<T: Real>(&mut self, lo: f64, hi: f64) -> T {
        T::lit(self.0.random_range(lo..hi))
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn gaussian_vec<T: Real>(&mut self, n: usize, sigma: T) -> Vec<T> {
        (0..n).map(|_| sigma * self.gaussian::<T>()).collect()
    }

    pub fn gaussian_mat<T: Real>(&mut self, rows: usize, cols: usize, sigma: T) -> Mat<T> {
        Mat::from_fn(rows, cols, |_, _| sigma * self.gaussian::<T>())
    }
}

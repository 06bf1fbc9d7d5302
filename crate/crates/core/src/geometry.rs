//! Simplex equiangular tight frames and the neural-collapse metrics
//! NC1–NC4.

use crate::error::{Error, Result};
use crate::numlin::{norm2, pinv, qr_orthonormal, Mat};
use crate::rng::LabRng;
use crate::scalar::Real;

/// Relative singular-value cut used for `Σ_B†` in NC1.
pub const NC1_PINV_TOL: f64 = 1e-10;

/// Centering matrix `I_K − (1/K) 1 1ᵀ`.
pub fn centering<T: Real>(k: usize) -> Mat<T> {
    let inv = T::one() / T::from_usize_lossy(k);
    Mat::from_fn(k, k, |i, j| if i == j { T::one() - inv } else { -inv })
}

/// Simplex-ETF frame `M` (`d x K`) with its scale: `MᵀM = scale² · K/(K−1) (I − 11ᵀ/K)`.
#[derive(Debug, Clone)]
pub struct EtfMatrix<T> {
    pub m: Mat<T>,
    pub scale: T,
}

impl<T: Real> EtfMatrix<T> {
    /// Max-abs deviation of the Gram matrix from the scaled ETF Gram.
    pub fn gram_residual(&self) -> Result<T> {
        let k = self.m.cols();
        let target = etf_gram::<T>(k)?.scale(self.scale * self.scale);
        Ok(self.m.t_matmul(&self.m)?.sub(&target)?.max_abs())
    }
}

/// `K/(K−1) (I − 11ᵀ/K)`: unit diagonal, off-diagonal `−1/(K−1)`.
pub fn etf_gram<T: Real>(k: usize) -> Result<Mat<T>> {
    check_classes(k)?;
    let c = T::from_usize_lossy(k) / T::from_usize_lossy(k - 1);
    Ok(centering::<T>(k).scale(c))
}

fn check_classes(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("simplex ETF needs K >= 2, got {k}")));
    }
    Ok(())
}

/// `√(K/(K−1)) (I_K − 11ᵀ/K)`.
pub fn standard_etf<T: Real>(k: usize) -> Result<Mat<T>> {
    check_classes(k)?;
    let c = (T::from_usize_lossy(k) / T::from_usize_lossy(k - 1)).sqrt();
    Ok(centering::<T>(k).scale(c))
}

/// `√(K/(K−1)) P (I − 11ᵀ/K)` for an orthonormal `P` (`d x K`).
pub fn etf_from_basis<T: Real>(p: &Mat<T>) -> Result<Mat<T>> {
    p.matmul(&standard_etf(p.cols())?)
}

/// Simplex ETF embedded in `R^d` through the orthonormalized columns of a
/// seeded Gaussian `d x K` matrix.
pub fn embedded_etf<T: Real>(k: usize, d: usize, seed: u64) -> Result<Mat<T>> {
    embedded_etf_from(k, d, &mut LabRng::new(seed))
}

pub fn embedded_etf_from<T: Real>(k: usize, d: usize, rng: &mut LabRng) -> Result<Mat<T>> {
    check_classes(k)?;
    if d < k {
        return Err(Error::Dimension(format!("embedded ETF needs d >= K, got d={d}, K={k}")));
    }
    let g = rng.gaussian_mat(d, k, T::one());
    etf_from_basis(&qr_orthonormal(&g)?)
}

/// Feature statistics of a balanced, class-major feature matrix.
#[derive(Debug, Clone)]
pub struct ClassStats<T> {
    /// Global mean `h_G`.
    pub global_mean: Vec<T>,
    /// Class means as columns (`d x K`).
    pub class_means: Mat<T>,
    /// Within-class covariance `Σ_W`.
    pub sigma_w: Mat<T>,
    /// Between-class covariance `Σ_B`.
    pub sigma_b: Mat<T>,
}

impl<T: Real> ClassStats<T> {
    pub fn compute(h: &Mat<T>, n: usize, k: usize) -> Result<Self> {
        let (d, samples) = h.shape();
        if k == 0 || n == 0 || samples != n * k {
            return Err(Error::Dimension(format!(
                "{samples} feature columns but n·K = {}",
                n * k
            )));
        }
        let inv_n = T::one() / T::from_usize_lossy(n);
        let inv_k = T::one() / T::from_usize_lossy(k);
        let mut means = Mat::zeros(d, k);
        for j in 0..samples {
            let c = j % k;
            for a in 0..d {
                means[(a, c)] += h[(a, j)];
            }
        }
        let means = means.scale(inv_n);
        let global: Vec<T> = (0..d)
            .map(|a| means.row(a).iter().copied().sum::<T>() * inv_k)
            .collect();

        let mut sigma_w = Mat::zeros(d, d);
        let mut dev = vec![T::zero(); d];
        for j in 0..samples {
            let c = j % k;
            for a in 0..d {
                dev[a] = h[(a, j)] - means[(a, c)];
            }
            add_outer(&mut sigma_w, &dev);
        }
        let sigma_w = sigma_w.scale(T::one() / T::from_usize_lossy(samples));

        let mut sigma_b = Mat::zeros(d, d);
        for c in 0..k {
            for a in 0..d {
                dev[a] = means[(a, c)] - global[a];
            }
            add_outer(&mut sigma_b, &dev);
        }
        let sigma_b = sigma_b.scale(inv_k);
        Ok(Self {
            global_mean: global,
            class_means: means,
            sigma_w,
            sigma_b,
        })
    }

    /// Centered class means `[h̄_1 − h_G, …, h̄_K − h_G]` (`d x K`).
    pub fn centered_means(&self) -> Mat<T> {
        let m = &self.class_means;
        Mat::from_fn(m.rows(), m.cols(), |a, c| m[(a, c)] - self.global_mean[a])
    }
}

fn add_outer<T: Real>(acc: &mut Mat<T>, v: &[T]) {
    let d = v.len();
    for a in 0..d {
        if v[a] == T::zero() {
            continue;
        }
        let row = acc.row_mut(a);
        for (x, &vb) in row.iter_mut().zip(v) {
            *x += v[a] * vb;
        }
    }
}

/// NC1 value with a flag raised when all class means coincide and `Σ_B`
/// vanishes (the value is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nc1<T> {
    pub value: T,
    pub degenerate: bool,
}

/// `(1/K) trace(Σ_W Σ_B†)`.
pub fn nc1<T: Real>(h: &Mat<T>, n: usize, k: usize) -> Result<Nc1<T>> {
    let stats = ClassStats::compute(h, n, k)?;
    nc1_from_stats(&stats, h, k)
}

fn nc1_from_stats<T: Real>(stats: &ClassStats<T>, h: &Mat<T>, k: usize) -> Result<Nc1<T>> {
    let feature_scale = h.frob_norm_sq() / T::from_usize_lossy(h.cols().max(1));
    // class means agree to ~1e-12 relative: Σ_B is rounding noise
    if stats.sigma_b.frob_norm() <= T::lit(1e-24) * feature_scale {
        return Ok(Nc1 {
            value: T::zero(),
            degenerate: true,
        });
    }
    let sb_pinv = pinv(&stats.sigma_b, T::lit(NC1_PINV_TOL))?;
    // trace of a product of PSD matrices; negatives are rounding
    let tr = stats.sigma_w.matmul(&sb_pinv)?.trace().max(T::zero());
    Ok(Nc1 {
        value: tr / T::from_usize_lossy(k),
        degenerate: false,
    })
}

/// `‖A/‖A‖F − (1/√(K−1))(I − 11ᵀ/K)‖F` for a square `K x K` matrix `A`.
fn distance_to_normalized_etf<T: Real>(a: &Mat<T>, what: &str) -> Result<T> {
    let k = a.rows();
    check_classes(k)?;
    let nrm = a.frob_norm();
    if nrm == T::zero() {
        return Err(Error::Degenerate(format!("{what} is zero")));
    }
    let target = centering::<T>(k).scale(T::one() / T::from_usize_lossy(k - 1).sqrt());
    Ok(a.scale(T::one() / nrm).sub(&target)?.frob_norm())
}

/// Distance of the normalized `WWᵀ` from the normalized simplex ETF.
pub fn nc2<T: Real>(w: &Mat<T>) -> Result<T> {
    distance_to_normalized_etf(&w.matmul_t(w)?, "W Wᵀ")
}

/// Self-duality: distance of the normalized `W H̄` from the normalized
/// simplex ETF, where `H̄` holds the centered class means.
pub fn nc3<T: Real>(w: &Mat<T>, h: &Mat<T>, n: usize, k: usize) -> Result<T> {
    let stats = ClassStats::compute(h, n, k)?;
    nc3_from_stats(w, &stats)
}

fn nc3_from_stats<T: Real>(w: &Mat<T>, stats: &ClassStats<T>) -> Result<T> {
    distance_to_normalized_etf(&w.matmul(&stats.centered_means())?, "W H̄")
}

/// `‖b + W h_G‖₂`.
pub fn nc4<T: Real>(w: &Mat<T>, b: &[T], h: &Mat<T>) -> Result<T> {
    if b.len() != w.rows() || w.cols() != h.rows() {
        return Err(Error::Dimension("nc4 shapes".into()));
    }
    let samples = h.cols().max(1);
    let inv = T::one() / T::from_usize_lossy(samples);
    let hg: Vec<T> = (0..h.rows())
        .map(|a| h.row(a).iter().copied().sum::<T>() * inv)
        .collect();
    let whg = w.matvec(&hg)?;
    let v: Vec<T> = whg.iter().zip(b).map(|(&x, &y)| x + y).collect();
    Ok(norm2(&v))
}

/// `‖Z1Z1ᵀ/‖Z1Z1ᵀ‖F − Z2Z2ᵀ/‖Z2Z2ᵀ‖F‖F`: compares two logit matrices up to
/// rotation and scale of the feature space.
pub fn gram_alignment<T: Real>(z1: &Mat<T>, z2: &Mat<T>) -> Result<T> {
    if z1.rows() != z2.rows() {
        return Err(Error::Dimension(format!(
            "gram_alignment needs equal row counts, got {} and {}",
            z1.rows(),
            z2.rows()
        )));
    }
    let g1 = z1.matmul_t(z1)?;
    let g2 = z2.matmul_t(z2)?;
    let (n1, n2) = (g1.frob_norm(), g2.frob_norm());
    if n1 == T::zero() || n2 == T::zero() {
        return Err(Error::Degenerate("zero logit matrix".into()));
    }
    Ok(g1.scale(T::one() / n1).sub(&g2.scale(T::one() / n2))?.frob_norm())
}

/// All four metrics at once; degenerate NC2/NC3 are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcMetrics<T> {
    pub nc1: T,
    pub nc1_degenerate: bool,
    pub nc2: Option<T>,
    pub nc3: Option<T>,
    pub nc4: T,
}

pub fn nc_metrics<T: Real>(w: &Mat<T>, h: &Mat<T>, b: &[T], n: usize, k: usize) -> Result<NcMetrics<T>> {
    let stats = ClassStats::compute(h, n, k)?;
    let nc1 = nc1_from_stats(&stats, h, k)?;
    let degenerate_ok = |r: Result<T>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(NcMetrics {
        nc1: nc1.value,
        nc1_degenerate: nc1.degenerate,
        nc2: degenerate_ok(nc2(w))?,
        nc3: degenerate_ok(nc3_from_stats(w, &stats))?,
        nc4: nc4(w, b, h)?,
    })
}

//! Oracles for the supporting lemmas: eigenvalues of a diagonal plus a
//! negative rank-one update, the two-level singular-value structure of
//! `−(I − 11ᵀ/K) diag(ρ)`, and the variational form of the nuclear norm.
//! Each comes with a randomized suite checking it against brute force.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::{check_contrastive_bound, loss_hess, softmax, LossKind, LossSpec, Logits, FL_CONVEX_THRESHOLD};
use crate::numlin::{nuclear_norm, svd, sym_eig, Mat};
use crate::rng::LabRng;
use crate::scalar::Real;
use crate::geometry::centering;

/// `D + τ z zᵀ` with `D = diag(d)` and `τ < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dpr1Instance<T> {
    pub d: Vec<T>,
    pub z: Vec<T>,
    pub tau: T,
}

impl<T: Real> Dpr1Instance<T> {
    pub fn new(d: Vec<T>, z: Vec<T>, tau: T) -> Result<Self> {
        if d.len() != z.len() {
            return Err(Error::Dimension(format!(
                "diagonal has {} entries, z has {}",
                d.len(),
                z.len()
            )));
        }
        if !(tau < T::zero()) {
            return Err(Error::InvalidArgument("tau must be negative".into()));
        }
        if d.iter().chain(&z).any(|x| !x.is_finite()) || !tau.is_finite() {
            return Err(Error::NonFinite("dpr1 instance"));
        }
        Ok(Self { d, z, tau })
    }

    pub fn dense(&self) -> Mat<T> {
        let n = self.d.len();
        Mat::from_fn(n, n, |i, j| {
            let diag = if i == j { self.d[i] } else { T::zero() };
            diag + self.tau * self.z[i] * self.z[j]
        })
    }
}

const SECULAR_TOL: f64 = 1e-14;
const SECULAR_MAX_ITERS: usize = 200;

/// Eigenvalues of `D + τ z zᵀ`, descending.
///
/// Entries of `D` that coincide are merged by a rotation that moves the
/// whole `z` mass of the block onto one coordinate, leaving the others as
/// eigenvalues; coordinates with negligible `z_i` are deflated. The
/// remaining eigenvalues are the roots of `w(λ) = 1 + τ Σ z_i²/(d_i − λ)`, one
/// in each interval `(d_{i+1}, d_i)` and the last in `(d_m + τ‖z‖², d_m)`,
/// found by bisection.
pub fn dpr1_eigenvalues<T: Real>(inst: &Dpr1Instance<T>) -> Vec<T> {
    let n = inst.d.len();
    if n == 0 {
        return Vec::new();
    }
    let tau = inst.tau;
    let z_sq: T = inst.z.iter().map(|&x| x * x).sum();
    let dmax = inst.d.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let scale = dmax.max(tau.abs() * z_sq);
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let tol = T::lit(SECULAR_TOL) * scale;
    let z_norm = z_sq.sqrt();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.d[b].partial_cmp(&inst.d[a]).expect("finite diagonal"));

    let mut eigs = Vec::with_capacity(n);
    // merged (d, z²) pairs with strictly decreasing d
    let mut poles: Vec<(T, T)> = Vec::new();
    let mut i = 0;
    while i < n {
        let di = inst.d[order[i]];
        let mut mass = T::zero();
        let mut j = i;
        while j < n && di - inst.d[order[j]] <= tol {
            let zj = inst.z[order[j]];
            mass += zj * zj;
            j += 1;
        }
        // m equal entries leave d with multiplicity m − 1 after the rotation
        eigs.extend(std::iter::repeat_n(di, j - i - 1));
        // Weyl: dropping z_i moves eigenvalues by at most |τ| ‖z‖ |z_i|
        if tau.abs() * z_norm * mass.sqrt() <= tol {
            eigs.push(di);
        } else {
            poles.push((di, mass));
        }
        i = j;
    }

    let w = |lambda: T| {
        T::one()
            + tau
                * poles
                    .iter()
                    .map(|&(d, m)| m / (d - lambda))
                    .sum::<T>()
    };
    let mass_total: T = poles.iter().map(|p| p.1).sum();
    for idx in 0..poles.len() {
        let hi0 = poles[idx].0;
        let lo0 = if idx + 1 < poles.len() {
            poles[idx + 1].0
        } else {
            hi0 + tau * mass_total
        };
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..SECULAR_MAX_ITERS {
            if hi - lo <= tol {
                break;
            }
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            // w decreases from +∞ to −∞ across the interval
            if w(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eigs.push(T::lit(0.5) * (lo + hi));
    }
    eigs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    eigs
}

/// Outcome of the two-level singular-value test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ZStructure<T> {
    /// `|ρ_1| = ⋯ = |ρ_K|`, with `σ_max = |ρ_1|`.
    AllEqual { sigma_max: T },
    /// `ρ_2 = ⋯ = ρ_K = 0`, with `σ_max = √((K−1)/K) |ρ_1|`.
    OnlyFirstNonzero { sigma_max: T },
    /// Nonzero singular values are not all equal.
    ViolatesTwoLevel,
}

/// Relative tolerance of the "all nonzero singular values equal" test.
pub const TWO_LEVEL_TOL: f64 = 1e-10;

/// `Z = −(I − 11ᵀ/K) diag(ρ)`.
pub fn z_structure_matrix<T: Real>(rho: &[T]) -> Mat<T> {
    let k = rho.len();
    let c = centering::<T>(k);
    Mat::from_fn(k, k, |i, j| -c[(i, j)] * rho[j])
}

/// Whether the nonzero values of `sigma` (descending) are all equal.
pub fn is_two_level<T: Real>(sigma: &[T]) -> (bool, usize) {
    let smax = sigma.first().copied().unwrap_or(T::zero());
    let tol = T::lit(TWO_LEVEL_TOL) * smax;
    let nonzero = sigma.iter().take_while(|&&s| s > tol).count();
    let equal = sigma[..nonzero].iter().all(|&s| smax - s <= tol);
    (equal, nonzero)
}

/// Classifies `ρ` (sorted by decreasing magnitude, `K >= 3`) by the singular
/// values of `−(I − 11ᵀ/K) diag(ρ)`.
pub fn z_structure_classify<T: Real>(rho: &[T]) -> Result<ZStructure<T>> {
    let k = rho.len();
    if k < 3 {
        return Err(Error::InvalidArgument(format!("need K >= 3, got {k}")));
    }
    if rho.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("rho"));
    }
    if rho[0] == T::zero() {
        return Err(Error::InvalidArgument("ρ_1 must be nonzero".into()));
    }
    if rho.windows(2).any(|w| w[0].abs() < w[1].abs()) {
        return Err(Error::InvalidArgument("ρ must be sorted by decreasing magnitude".into()));
    }
    let s = svd(&z_structure_matrix(rho))?;
    let (equal, nonzero) = is_two_level(&s.sigma);
    let sigma_max = s.sigma[0];
    Ok(match (equal, nonzero) {
        (false, _) => ZStructure::ViolatesTwoLevel,
        (true, 1) => ZStructure::OnlyFirstNonzero { sigma_max },
        (true, _) => ZStructure::AllEqual { sigma_max },
    })
}

/// `(1/(2√α))(‖W‖F² + α‖H‖F²) − ‖WH‖∗`, non-negative for every factorization.
pub fn nuclear_variational_gap<T: Real>(w: &Mat<T>, h: &Mat<T>, alpha: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let z = w.matmul(h)?;
    let bound = (w.frob_norm_sq() + alpha * h.frob_norm_sq()) / (T::lit(2.0) * alpha.sqrt());
    Ok(bound - nuclear_norm(&z)?)
}

/// Factorization attaining the bound: `W = α^{1/4} U Σ^{1/2}`,
/// `H = α^{−1/4} Σ^{1/2} Vᵀ` for `Z = U Σ Vᵀ`.
pub fn balanced_factors<T: Real>(z: &Mat<T>, alpha: T) -> Result<(Mat<T>, Mat<T>)> {
    let s = svd(z)?;
    let r = s.sigma.len();
    let q = alpha.powf(T::lit(0.25));
    let w = Mat::from_fn(z.rows(), r, |i, j| q * s.u[(i, j)] * s.sigma[j].sqrt());
    let h = Mat::from_fn(r, z.cols(), |i, j| s.sigma[i].sqrt() * s.v[(j, i)] / q);
    Ok((w, h))
}

/// Named randomized suites, each comparing an oracle with brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Dpr1,
    Zstructure,
    Nuclear,
    Contrastive,
    HessianPsd,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Dpr1,
        Suite::Zstructure,
        Suite::Nuclear,
        Suite::Contrastive,
        Suite::HessianPsd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Dpr1 => "dpr1",
            Suite::Zstructure => "zstructure",
            Suite::Nuclear => "nuclear",
            Suite::Contrastive => "contrastive",
            Suite::HessianPsd => "hessian-psd",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lemma suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    /// Largest violation observed (0 when everything agrees exactly).
    pub worst_residual: f64,
    pub tolerance: f64,
    pub failures: usize,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: Suite, tolerance: f64) -> Self {
        Self {
            suite,
            cases: 0,
            worst_residual: 0.0,
            tolerance,
            failures: 0,
            passed: true,
        }
    }

    fn record(&mut self, residual: f64) {
        self.cases += 1;
        if !(residual <= self.tolerance) {
            self.failures += 1;
        }
        if residual.is_nan() || residual > self.worst_residual {
            self.worst_residual = residual;
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.failures == 0;
        self
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut rng = LabRng::new(seed);
    match suite {
        Suite::Dpr1 => dpr1_suite(&mut rng),
        Suite::Zstructure => zstructure_suite(&mut rng),
        Suite::Nuclear => nuclear_suite(&mut rng),
        Suite::Contrastive => contrastive_suite(&mut rng),
        Suite::HessianPsd => hessian_psd_suite(&mut rng),
    }
}

/// Random instance with occasional zero `z` entries and repeated diagonals.
pub fn random_dpr1(rng: &mut LabRng, max_n: usize) -> Dpr1Instance<f64> {
    let n = 1 + rng.index(max_n);
    let mut d: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
    let mut z: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    for i in 0..n {
        match rng.index(6) {
            0 => z[i] = 0.0,
            1 => d[i] = d[rng.index(n)],
            _ => {}
        }
    }
    let tau = -rng.uniform::<f64>(0.05, 3.0);
    Dpr1Instance { d, z, tau }
}

fn dpr1_suite(rng: &mut LabRng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Dpr1, 1e-10);
    for _ in 0..500 {
        let inst = random_dpr1(rng, 20);
        let fast = dpr1_eigenvalues(&inst);
        let dense = sym_eig(&inst.dense())?.values;
        let err = fast
            .iter()
            .zip(&dense)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        report.record(err);
    }
    Ok(report.finish())
}

/// Random `ρ` sorted by magnitude: one third equal magnitudes, one third a
/// single spike, the rest generic.
pub fn random_rho(rng: &mut LabRng, k: usize) -> Vec<f64> {
    let sign = |rng: &mut LabRng| if rng.index(2) == 0 { 1.0 } else { -1.0 };
    let mag = rng.uniform::<f64>(0.1, 3.0);
    let mut rho: Vec<f64> = match rng.index(3) {
        0 => (0..k).map(|_| sign(rng) * mag).collect(),
        1 => (0..k).map(|i| if i == 0 { sign(rng) * mag } else { 0.0 }).collect(),
        _ => (0..k).map(|_| rng.gaussian()).collect(),
    };
    rho.sort_by(|a: &f64, b: &f64| b.abs().partial_cmp(&a.abs()).expect("finite"));
    rho
}

fn zstructure_suite(rng: &mut LabRng) -> Result<SuiteReport> {
    // residual 1 marks a disagreement between the oracle and brute force
    let mut report = SuiteReport::new(Suite::Zstructure, 0.0);
    for _ in 0..10_000 {
        let k = 3 + rng.index(8);
        let rho = random_rho(rng, k);
        let got = z_structure_classify(&rho)?;
        // brute force: ZᵀZ = diag(ρ²) − ρρᵀ/K through the symmetric eigensolver
        let kf = k as f64;
        let gram = Mat::from_fn(k, k, |i, j| {
            let diag = if i == j { rho[i] * rho[i] } else { 0.0 };
            diag - rho[i] * rho[j] / kf
        });
        // squaring costs half the digits: eigenvalues below 1e-12 λ_max are zero
        let lam = sym_eig(&gram)?.values;
        let floor = 1e-12 * lam[0].max(0.0);
        let sigma: Vec<f64> = lam.iter().map(|&l| if l <= floor { 0.0 } else { l.sqrt() }).collect();
        let (equal, nonzero) = is_two_level(&sigma);
        let r1 = rho[0].abs();
        let expected_pattern = if rho.iter().all(|x| (x.abs() - r1).abs() <= 1e-12 * r1) {
            Some(r1)
        } else if rho[1..].iter().all(|&x| x == 0.0) {
            Some(((kf - 1.0) / kf).sqrt() * r1)
        } else {
            None
        };
        let agree = match got {
            ZStructure::ViolatesTwoLevel => !equal && expected_pattern.is_none(),
            ZStructure::AllEqual { sigma_max } => {
                equal && nonzero > 1 && expected_pattern.is_some_and(|s| (s - sigma_max).abs() <= 1e-10 * s)
            }
            ZStructure::OnlyFirstNonzero { sigma_max } => {
                equal && nonzero == 1 && expected_pattern.is_some_and(|s| (s - sigma_max).abs() <= 1e-10 * s)
            }
        };
        report.record(if agree { 0.0 } else { 1.0 });
    }
    Ok(report.finish())
}

fn nuclear_suite(rng: &mut LabRng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Nuclear, 1e-10);
    for _ in 0..300 {
        let (m, r, n) = (1 + rng.index(6), 1 + rng.index(6), 1 + rng.index(8));
        let w = rng.gaussian_mat::<f64>(m, r, 1.0);
        let h = rng.gaussian_mat::<f64>(r, n, 1.0);
        for alpha in [0.1, 1.0, 10.0] {
            let gap = nuclear_variational_gap(&w, &h, alpha)?;
            report.record((-gap).max(0.0));
            let (wb, hb) = balanced_factors(&w.matmul(&h)?, alpha)?;
            let eq = nuclear_variational_gap(&wb, &hb, alpha)?;
            report.record(eq.abs());
        }
    }
    Ok(report.finish())
}

fn contrastive_suite(rng: &mut LabRng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Contrastive, 1e-12);
    let specs = [
        LossSpec::<f64>::ce(),
        LossSpec::focal(3.0),
        LossSpec::label_smoothing(0.1),
    ];
    for spec in &specs {
        for _ in 0..2000 {
            let k = 2 + rng.index(9);
            let target = rng.index(k);
            let z: Vec<f64> = (0..k).map(|_| 3.0 * rng.gaussian::<f64>()).collect();
            let check = check_contrastive_bound(spec, &Logits::new(&z, target)?)?;
            report.record((check.rhs - check.lhs).max(0.0));
            // equal off-target logits attain the bound
            let off = rng.gaussian::<f64>();
            let mut z = vec![off; k];
            z[target] = rng.gaussian();
            let check = check_contrastive_bound(spec, &Logits::new(&z, target)?)?;
            report.record((check.lhs - check.rhs).abs());
        }
    }
    Ok(report.finish())
}

fn hessian_psd_suite(rng: &mut LabRng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::HessianPsd, 1e-12);
    let specs = [
        LossSpec::<f64>::ce(),
        LossSpec::label_smoothing(0.1),
        LossSpec::focal(1.0),
        LossSpec::focal(3.0),
        LossSpec::mse(1.0, 15.0),
    ];
    for spec in &specs {
        let mut tested = 0;
        while tested < 1000 {
            let k = 2 + rng.index(9);
            let target = rng.index(k);
            let z: Vec<f64> = (0..k).map(|_| 3.0 * rng.gaussian::<f64>()).collect();
            if spec.kind == LossKind::Focal && softmax(&z)[target] < FL_CONVEX_THRESHOLD {
                continue;
            }
            let hess = loss_hess(spec, &Logits::new(&z, target)?);
            let min = sym_eig(&hess)?.min_value();
            report.record((-min).max(0.0));
            tested += 1;
        }
    }
    Ok(report.finish())
}

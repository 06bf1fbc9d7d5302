//! Deterministic full-batch gradient descent with heavy-ball momentum.

use log::{debug, warn};
use serde::Serialize;

use super::{balance_residual, loss_and_logit_grad, objective_and_gradient, Hyper, UfmState};
use crate::error::{Error, Result};
use crate::geometry::{embedded_etf_from, nc_metrics};
use crate::numlin::spectral_norm;
use crate::rng::LabRng;
use crate::scalar::Real;

/// Column header of the trace CSV.
pub const TRACE_HEADER: [&str; 10] = [
    "iter",
    "f",
    "g",
    "grad_norm",
    "nc1",
    "nc2",
    "nc3",
    "nc4",
    "cert_gap",
    "balance_residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub hyper: Hyper<T>,
    pub init_sigma: T,
    pub lr: T,
    pub momentum: T,
    pub max_iters: usize,
    pub log_every: usize,
    pub seed: u64,
    /// Hold `W` at an embedded simplex ETF; only `H` and `b` are trained.
    pub freeze_w_as_etf: bool,
    /// Row norm of the frozen ETF classifier (`None` means unit rows).
    pub frozen_row_norm: Option<T>,
    pub grad_tol: T,
}

impl<T: Real> TrainConfig<T> {
    /// Defaults: lr 0.5, momentum 0.9, 50 000 iterations, gradient tolerance 1e-8.
    pub fn new(hyper: Hyper<T>, seed: u64) -> Self {
        Self {
            hyper,
            init_sigma: T::lit(0.1),
            lr: T::lit(0.5),
            momentum: T::lit(0.9),
            max_iters: 50_000,
            log_every: 1000,
            seed,
            freeze_w_as_etf: false,
            frozen_row_norm: None,
            grad_tol: T::lit(1e-8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if !(self.init_sigma >= T::zero()) || !(self.lr > T::zero()) {
            return Err(Error::InvalidArgument("init_sigma >= 0 and lr > 0 required".into()));
        }
        if !(self.momentum >= T::zero() && self.momentum < T::one()) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidArgument("log_every must be positive".into()));
        }
        if !(self.grad_tol >= T::zero()) {
            return Err(Error::InvalidArgument("grad_tol must be non-negative".into()));
        }
        if self.freeze_w_as_etf && self.hyper.d < self.hyper.k {
            return Err(Error::InvalidArgument("freezing W as an ETF needs d >= K".into()));
        }
        if let Some(r) = self.frozen_row_norm {
            if !(r > T::zero()) {
                return Err(Error::InvalidArgument("frozen_row_norm must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One logged row. Metrics that are undefined at the logged state
/// (e.g. NC2 when `W = 0`) are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f: f64,
    pub g: f64,
    pub grad_norm: f64,
    pub nc1: f64,
    pub nc2: f64,
    pub nc3: f64,
    pub nc4: f64,
    pub cert_gap: f64,
    pub balance_residual: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub state: UfmState<T>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iters: usize,
}

impl<T> TrainOutcome<T> {
    pub fn last_row(&self) -> &TraceRow {
        self.trace.last().expect("trace always has a final row")
    }
}

/// Initial state: `W`, `H`, `b` drawn i.i.d. `N(0, init_sigma²)` (or `W` set to
/// the frozen ETF, drawn first from the same stream).
pub fn initial_state<T: Real>(config: &TrainConfig<T>) -> Result<UfmState<T>> {
    let hp = &config.hyper;
    let mut rng = LabRng::new(config.seed);
    if config.freeze_w_as_etf {
        let m = embedded_etf_from::<T>(hp.k, hp.d, &mut rng)?;
        let r = config.frozen_row_norm.unwrap_or(T::one());
        // ETF columns already have unit norm
        let w = m.transpose().scale(r);
        let h = rng.gaussian_mat(hp.d, hp.samples(), config.init_sigma);
        let b = rng.gaussian_vec(hp.k, config.init_sigma);
        Ok(UfmState { w, h, b })
    } else {
        Ok(UfmState::gaussian(hp, config.init_sigma, &mut rng))
    }
}

fn trace_row<T: Real>(
    iter: usize,
    state: &UfmState<T>,
    hyper: &Hyper<T>,
    f: T,
    g: T,
    grad_norm: T,
) -> Result<TraceRow> {
    let m = nc_metrics(&state.w, &state.h, &state.b, hyper.n, hyper.k)?;
    let (_, grad_z) = loss_and_logit_grad(state, hyper)?;
    let gap = spectral_norm(&grad_z)? - hyper.nuclear_weight();
    Ok(TraceRow {
        iter,
        f: f.to_f64_lossy(),
        g: g.to_f64_lossy(),
        grad_norm: grad_norm.to_f64_lossy(),
        nc1: m.nc1.to_f64_lossy(),
        nc2: m.nc2.map_or(f64::NAN, Real::to_f64_lossy),
        nc3: m.nc3.map_or(f64::NAN, Real::to_f64_lossy),
        nc4: m.nc4.to_f64_lossy(),
        cert_gap: gap.to_f64_lossy(),
        balance_residual: balance_residual(state, hyper)?.to_f64_lossy(),
    })
}

/// Runs gradient descent with momentum,
/// `v ← μ v − lr ∇f(x)`, `x ← x + v`,
/// until the gradient norm drops to `grad_tol` or `max_iters` steps are taken.
/// A row is logged every `log_every` iterations and at the final iterate.
pub fn train<T: Real>(config: &TrainConfig<T>) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let hp = &config.hyper;
    let mut state = initial_state(config)?;
    if config.init_sigma == T::zero() {
        warn!("init_sigma = 0 starts at the origin, an exact critical point; gradient descent will not move");
    }
    let mut velocity = UfmState::zeros(hp);
    let mut trace = Vec::new();
    let mut iter = 0;
    let converged = loop {
        if !(state.w.is_finite() && state.h.is_finite() && state.b.iter().all(|x| x.is_finite())) {
            return Err(Error::Divergence {
                iter,
                value: f64::NAN,
            });
        }
        let (obj, mut grad) = match objective_and_gradient(&state, hp) {
            Err(Error::NonFinite(_)) => {
                return Err(Error::Divergence {
                    iter,
                    value: f64::INFINITY,
                })
            }
            r => r?,
        };
        if !obj.f.is_finite() {
            return Err(Error::Divergence {
                iter,
                value: obj.f.to_f64_lossy(),
            });
        }
        if config.freeze_w_as_etf {
            grad.w = crate::numlin::Mat::zeros(hp.k, hp.d);
        }
        let grad_norm = grad.norm();
        if !grad_norm.is_finite() {
            return Err(Error::Divergence {
                iter,
                value: grad_norm.to_f64_lossy(),
            });
        }
        let converged = grad_norm <= config.grad_tol;
        let last = converged || iter >= config.max_iters;
        if iter % config.log_every == 0 || last {
            let row = trace_row(iter, &state, hp, obj.f, obj.g, grad_norm)?;
            debug!("iter {iter}: f = {:.12e}, |grad| = {:.3e}", row.f, row.grad_norm);
            trace.push(row);
        }
        if last {
            break converged;
        }
        velocity = velocity.scaled(config.momentum);
        velocity.axpy(-config.lr, &grad);
        state.axpy(T::one(), &velocity);
        iter += 1;
    };
    Ok(TrainOutcome {
        state,
        trace,
        converged,
        iters: iter,
    })
}

//! Subcommand implementations. Each returns `Ok(true)` when the command's
//! check passed (exit 0), `Ok(false)` for a negative verdict and `Err` for
//! anything that prevented the command from running.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use collapse_core::certify::{classify_critical_point, global_certificate, rho_oracle, Tolerances, Verdict};
use collapse_core::geometry::nc_metrics;
use collapse_core::io::{read_features, write_trace_file, Checkpoint};
use collapse_core::lemmas::{run_suite, Suite, SuiteReport};
use collapse_core::rng::LabRng;
use collapse_core::ufm::{grad_check as ufm_grad_check, objective, train as ufm_train};
use collapse_core::{Hyper, LossSpec, UfmState};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Cell, LossBlock, RunConfig, SweepConfig};

/// Finite-difference step of the `grad-check` command.
pub const GRAD_CHECK_EPS: f64 = 1e-5;
pub const GRAD_CHECK_TOL: f64 = 1e-6;
pub const GRAD_CHECK_STATES: u64 = 10;

fn emit<S: Serialize>(value: &S, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string(value)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct NcReport {
    pub nc1: f64,
    pub nc1_degenerate: bool,
    pub nc2: Option<f64>,
    pub nc3: Option<f64>,
    pub nc4: f64,
}

fn nc_report(state: &UfmState, n: usize, k: usize) -> Result<NcReport> {
    let m = nc_metrics(&state.w, &state.h, &state.b, n, k)?;
    Ok(NcReport {
        nc1: m.nc1,
        nc1_degenerate: m.nc1_degenerate,
        nc2: m.nc2,
        nc3: m.nc3,
        nc4: m.nc4,
    })
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    f: f64,
    g: f64,
    grad_norm: f64,
    iters: usize,
    converged: bool,
    nc: NcReport,
    verdict: Verdict,
    trace_path: PathBuf,
    checkpoint_path: PathBuf,
}

pub fn train(config_path: &Path, out_dir: Option<&Path>, seed: Option<u64>) -> Result<bool> {
    let mut cfg = RunConfig::read(config_path)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    let (trace_path, checkpoint_path) = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            (dir.join("trace.csv"), dir.join("checkpoint.json"))
        }
        None => (
            cfg.output.trace_path.clone().unwrap_or_else(|| "trace.csv".into()),
            cfg.output.checkpoint_path.clone().unwrap_or_else(|| "checkpoint.json".into()),
        ),
    };
    let hp = cfg.hyper()?;
    let tc = cfg.train_config()?;
    info!("training K={} d={} n={} loss={} seed={}", hp.k, hp.d, hp.n, cfg.loss.name(), tc.seed);
    let out = ufm_train(&tc).context("training")?;
    write_trace_file(&trace_path, &out.trace).with_context(|| format!("writing trace {}", trace_path.display()))?;
    Checkpoint::from_state(&out.state, hp.n)
        .write(&checkpoint_path)
        .with_context(|| format!("writing checkpoint {}", checkpoint_path.display()))?;
    let obj = objective(&out.state, &hp)?;
    let cert = global_certificate(&out.state, &hp, Tolerances::default())?;
    emit(
        &TrainSummary {
            f: obj.f,
            g: obj.g,
            grad_norm: cert.grad_norm,
            iters: out.iters,
            converged: out.converged,
            nc: nc_report(&out.state, hp.n, hp.k)?,
            verdict: cert.verdict,
            trace_path,
            checkpoint_path,
        },
        None,
    )?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct EscapeReport {
    predicted: f64,
    measured: f64,
}

#[derive(Debug, Serialize)]
struct CertifyReport {
    verdict: Verdict,
    grad_norm: f64,
    spectral_gap: f64,
    kkt_u_residual: f64,
    kkt_v_residual: f64,
    b_residual: f64,
    nc: NcReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    fl_region_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fl_min_target_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_curvature: Option<EscapeReport>,
    crit_tol: f64,
    cert_tol: f64,
}

pub fn certify(checkpoint_path: &Path, config_path: &Path, out: Option<&Path>) -> Result<bool> {
    let cfg = RunConfig::read(config_path)?;
    let hp = cfg.hyper()?;
    let ck = Checkpoint::read(checkpoint_path).with_context(|| format!("reading checkpoint {}", checkpoint_path.display()))?;
    ck.check_hyper(&hp)?;
    let state: UfmState = ck.to_state()?;
    let c = classify_critical_point(&state, &hp, Tolerances::default())?;
    let cert = &c.certificate;
    let report = CertifyReport {
        verdict: cert.verdict,
        grad_norm: cert.grad_norm,
        spectral_gap: cert.spectral_gap,
        kkt_u_residual: cert.kkt_u_residual,
        kkt_v_residual: cert.kkt_v_residual,
        b_residual: cert.b_residual,
        nc: nc_report(&state, hp.n, hp.k)?,
        fl_region_ok: cert.fl_region.map(|r| r.ok),
        fl_min_target_probability: cert.fl_region.map(|r| r.min_pk),
        negative_curvature: c.negative_curvature.as_ref().map(|nc| EscapeReport {
            predicted: nc.predicted,
            measured: nc.measured,
        }),
        crit_tol: cert.tolerances.crit_tol,
        cert_tol: cert.tolerances.cert_tol,
    };
    emit(&report, out)?;
    Ok(cert.verdict == Verdict::GlobalMin)
}

#[derive(Debug, Serialize)]
struct OracleReport {
    rho_star: f64,
    f_star: f64,
    margin: f64,
}

pub fn oracle(config_path: &Path, out: Option<&Path>) -> Result<bool> {
    let hp = RunConfig::read(config_path)?.hyper()?;
    let sol = rho_oracle(&hp)?;
    emit(
        &OracleReport {
            rho_star: sol.rho,
            f_star: sol.f_star,
            margin: sol.margin,
        },
        out,
    )?;
    Ok(true)
}

pub fn metrics(features_path: &Path, checkpoint_path: &Path, out: Option<&Path>) -> Result<bool> {
    let ck = Checkpoint::read(checkpoint_path).with_context(|| format!("reading classifier {}", checkpoint_path.display()))?;
    let (w, b) = ck.classifier::<f64>()?;
    let file = File::open(features_path).with_context(|| format!("opening features {}", features_path.display()))?;
    let dump = read_features::<f64, _>(BufReader::new(file), ck.k)
        .with_context(|| format!("reading features {}", features_path.display()))?;
    ensure!(
        dump.h.rows() == ck.d,
        "features have {} columns but the classifier expects d = {}",
        dump.h.rows(),
        ck.d
    );
    let state = UfmState { w, h: dump.h, b };
    emit(&nc_report(&state, dump.n, dump.k)?, out)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct LemmaReport {
    seed: u64,
    suites: Vec<SuiteReport>,
    passed: bool,
}

/// Runs one named suite, or every suite for `"all"`.
pub fn lemma(which: &str, seed: u64, out: Option<&Path>) -> Result<bool> {
    let suites: Vec<Suite> = if which == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    let reports = suites
        .into_iter()
        .map(|s| run_suite(s, seed))
        .collect::<collapse_core::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    emit(
        &LemmaReport {
            seed,
            suites: reports,
            passed,
        },
        out,
    )?;
    Ok(passed)
}

/// One row of the aggregate sweep CSV.
#[derive(Debug, Clone)]
struct CellResult {
    status: String,
    iters: usize,
    f: f64,
    f_star: f64,
    nc1: f64,
    nc2: f64,
    nc3: f64,
    nc4: f64,
}

impl CellResult {
    fn failed(status: String) -> Self {
        Self {
            status,
            iters: 0,
            f: f64::NAN,
            f_star: f64::NAN,
            nc1: f64::NAN,
            nc2: f64::NAN,
            nc3: f64::NAN,
            nc4: f64::NAN,
        }
    }
}

fn run_cell(cell: &Cell, dir: &Path) -> Result<CellResult> {
    let hp = cell.config.hyper()?;
    let out = ufm_train(&cell.config.train_config()?)?;
    write_trace_file(&dir.join(format!("cell-{:04}.csv", cell.id)), &out.trace)?;
    // the oracle does not cover MSE
    let f_star = match hp.loss.kind {
        collapse_core::losses::LossKind::Mse => f64::NAN,
        _ => rho_oracle(&hp)?.f_star,
    };
    let m = nc_metrics(&out.state.w, &out.state.h, &out.state.b, hp.n, hp.k)?;
    Ok(CellResult {
        status: if out.converged { "converged" } else { "max_iters" }.into(),
        iters: out.iters,
        f: objective(&out.state, &hp)?.f,
        f_star,
        nc1: m.nc1,
        nc2: m.nc2.unwrap_or(f64::NAN),
        nc3: m.nc3.unwrap_or(f64::NAN),
        nc4: m.nc4,
    })
}

pub fn sweep(config_path: &Path, out_dir: Option<&Path>, jobs: Option<usize>, seed: Option<u64>) -> Result<bool> {
    let mut sweep = SweepConfig::read(config_path)?;
    if let Some(seed) = seed {
        sweep.base.train.seed = seed;
    }
    let dir: PathBuf = out_dir
        .map(Path::to_path_buf)
        .or_else(|| sweep.output_dir.clone())
        .unwrap_or_else(|| "sweep".into());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let cells = sweep.cells()?;
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    ensure!(jobs > 0, "--jobs must be at least 1");
    info!("sweep: {} cells on {jobs} threads", cells.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    // collect keeps declaration order whatever order the cells finish in
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(c, &dir).unwrap_or_else(|e| CellResult::failed(format!("error: {e:#}"))))
            .collect()
    });

    let agg_path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&agg_path).with_context(|| format!("writing {}", agg_path.display()))?;
    let mut header = vec!["cell".to_string()];
    header.extend(sweep.grid.iter().map(|a| a.name().to_string()));
    header.extend(
        ["status", "iters", "f", "f_star", "gap_to_oracle", "nc1", "nc2", "nc3", "nc4"].map(String::from),
    );
    w.write_record(&header)?;
    for (cell, r) in cells.iter().zip(&results) {
        let mut row = vec![cell.id.to_string()];
        row.extend(cell.labels.iter().cloned());
        row.push(r.status.clone());
        row.push(r.iters.to_string());
        for v in [r.f, r.f_star, r.f - r.f_star, r.nc1, r.nc2, r.nc3, r.nc4] {
            row.push(v.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    let failures = results.iter().filter(|r| r.status.starts_with("error")).count();
    emit(
        &serde_json::json!({
            "cells": cells.len(),
            "failed": failures,
            "aggregate": agg_path,
        }),
        None,
    )?;
    Ok(failures == 0)
}

#[derive(Debug, Serialize)]
struct LossCheck {
    loss: &'static str,
    max_rel_err: f64,
}

#[derive(Debug, Serialize)]
struct GradCheckReport {
    eps: f64,
    tolerance: f64,
    states_per_loss: u64,
    losses: Vec<LossCheck>,
    max_rel_err: f64,
    passed: bool,
}

/// The configured loss keeps its parameters; the other families use
/// focal γ = 3, smoothing α = 0.1 and MSE (κ, β) = (1, 15).
fn grad_check_losses(configured: LossBlock) -> [LossBlock; 4] {
    let mut all = [
        LossBlock::Ce {},
        LossBlock::Focal { gamma: 3.0 },
        LossBlock::LabelSmoothing { alpha: 0.1 },
        LossBlock::Mse { kappa: 1.0, beta: 15.0 },
    ];
    for slot in all.iter_mut() {
        if slot.name() == configured.name() {
            *slot = configured;
        }
    }
    all
}

pub fn grad_check(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<bool> {
    let cfg = RunConfig::read(config_path)?;
    let seed = seed.unwrap_or(cfg.train.seed);
    let base = cfg.hyper()?;
    let mut losses = Vec::new();
    for block in grad_check_losses(cfg.loss) {
        let spec: LossSpec = block.spec();
        let hp = Hyper { loss: spec, ..base };
        let mut worst: f64 = 0.0;
        for i in 0..GRAD_CHECK_STATES {
            let state = UfmState::gaussian(&hp, 1.0, &mut LabRng::new(seed.wrapping_add(i)));
            worst = worst.max(ufm_grad_check(&state, &hp, GRAD_CHECK_EPS)?);
        }
        losses.push(LossCheck {
            loss: block.name(),
            max_rel_err: worst,
        });
    }
    let max_rel_err = losses.iter().fold(0.0f64, |m, l| m.max(l.max_rel_err));
    let passed = max_rel_err <= GRAD_CHECK_TOL;
    emit(
        &GradCheckReport {
            eps: GRAD_CHECK_EPS,
            tolerance: GRAD_CHECK_TOL,
            states_per_loss: GRAD_CHECK_STATES,
            losses,
            max_rel_err,
            passed,
        },
        out,
    )?;
    Ok(passed)
}

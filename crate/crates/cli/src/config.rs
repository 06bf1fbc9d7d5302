//! JSON run and sweep configurations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use collapse_core::{Hyper, LossSpec, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperBlock {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub lambda_w: f64,
    pub lambda_h: f64,
    pub lambda_b: f64,
}

/// Loss family and its parameters, tagged by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossBlock {
    // struct form so stray parameters are rejected
    Ce {},
    Focal { gamma: f64 },
    LabelSmoothing { alpha: f64 },
    Mse { kappa: f64, beta: f64 },
}

impl LossBlock {
    pub fn spec(&self) -> LossSpec {
        match *self {
            LossBlock::Ce {} => LossSpec::ce(),
            LossBlock::Focal { gamma } => LossSpec::focal(gamma),
            LossBlock::LabelSmoothing { alpha } => LossSpec::label_smoothing(alpha),
            LossBlock::Mse { kappa, beta } => LossSpec::mse(kappa, beta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossBlock::Ce {} => "ce",
            LossBlock::Focal { .. } => "focal",
            LossBlock::LabelSmoothing { .. } => "label_smoothing",
            LossBlock::Mse { .. } => "mse",
        }
    }
}

fn default_init_sigma() -> f64 {
    0.1
}
fn default_lr() -> f64 {
    0.5
}
fn default_momentum() -> f64 {
    0.9
}
fn default_max_iters() -> usize {
    50_000
}
fn default_log_every() -> usize {
    1000
}
fn default_grad_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainBlock {
    #[serde(default = "default_init_sigma")]
    pub init_sigma: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub freeze_w_as_etf: bool,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

impl Default for TrainBlock {
    fn default() -> Self {
        Self {
            init_sigma: default_init_sigma(),
            lr: default_lr(),
            momentum: default_momentum(),
            max_iters: default_max_iters(),
            log_every: default_log_every(),
            seed: 0,
            freeze_w_as_etf: false,
            grad_tol: default_grad_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub trace_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
}

/// Labels are implicit (class-major, balanced). A `class_counts` entry is
/// accepted only when it confirms that layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hyper: HyperBlock,
    pub loss: LossBlock,
    #[serde(default)]
    pub train: TrainBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataBlock>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(data) = &self.data {
            let h = &self.hyper;
            ensure!(
                data.class_counts.len() == h.k,
                "class_counts lists {} classes but K = {}",
                data.class_counts.len(),
                h.k
            );
            if let Some((k, &c)) = data.class_counts.iter().enumerate().find(|&(_, &c)| c != h.n) {
                bail!("unbalanced data: class {k} has {c} samples, expected n = {} for every class", h.n);
            }
        }
        self.hyper()?.validate()?;
        self.train_config()?.validate()?;
        Ok(())
    }

    pub fn hyper(&self) -> Result<Hyper> {
        let h = &self.hyper;
        let hp = Hyper::new(h.k, h.d, h.n, h.lambda_w, h.lambda_h, h.lambda_b, self.loss.spec());
        hp.validate()?;
        Ok(hp)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let mut cfg = TrainConfig::new(self.hyper()?, t.seed);
        cfg.init_sigma = t.init_sigma;
        cfg.lr = t.lr;
        cfg.momentum = t.momentum;
        cfg.max_iters = t.max_iters;
        cfg.log_every = t.log_every;
        cfg.freeze_w_as_etf = t.freeze_w_as_etf;
        cfg.grad_tol = t.grad_tol;
        Ok(cfg)
    }
}

/// One swept parameter and its values, in the order they are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", content = "values", rename_all = "snake_case", deny_unknown_fields)]
pub enum Axis {
    #[serde(rename = "K")]
    K(Vec<usize>),
    D(Vec<usize>),
    N(Vec<usize>),
    LambdaW(Vec<f64>),
    LambdaH(Vec<f64>),
    LambdaB(Vec<f64>),
    Loss(Vec<LossBlock>),
    Lr(Vec<f64>),
    MaxIters(Vec<usize>),
    Seed(Vec<u64>),
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::K(_) => "K",
            Axis::D(_) => "d",
            Axis::N(_) => "n",
            Axis::LambdaW(_) => "lambda_w",
            Axis::LambdaH(_) => "lambda_h",
            Axis::LambdaB(_) => "lambda_b",
            Axis::Loss(_) => "loss",
            Axis::Lr(_) => "lr",
            Axis::MaxIters(_) => "max_iters",
            Axis::Seed(_) => "seed",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::K(v) | Axis::D(v) | Axis::N(v) | Axis::MaxIters(v) => v.len(),
            Axis::LambdaW(v) | Axis::LambdaH(v) | Axis::LambdaB(v) | Axis::Lr(v) => v.len(),
            Axis::Loss(v) => v.len(),
            Axis::Seed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies value `i` to `cfg` and returns its label for the aggregate CSV.
    fn apply(&self, i: usize, cfg: &mut RunConfig) -> String {
        match self {
            Axis::K(v) => {
                cfg.hyper.k = v[i];
                v[i].to_string()
            }
            Axis::D(v) => {
                cfg.hyper.d = v[i];
                v[i].to_string()
            }
            Axis::N(v) => {
                cfg.hyper.n = v[i];
                v[i].to_string()
            }
            Axis::LambdaW(v) => {
                cfg.hyper.lambda_w = v[i];
                v[i].to_string()
            }
            Axis::LambdaH(v) => {
                cfg.hyper.lambda_h = v[i];
                v[i].to_string()
            }
            Axis::LambdaB(v) => {
                cfg.hyper.lambda_b = v[i];
                v[i].to_string()
            }
            Axis::Loss(v) => {
                cfg.loss = v[i];
                v[i].name().to_string()
            }
            Axis::Lr(v) => {
                cfg.train.lr = v[i];
                v[i].to_string()
            }
            Axis::MaxIters(v) => {
                cfg.train.max_iters = v[i];
                v[i].to_string()
            }
            Axis::Seed(v) => {
                cfg.train.seed = v[i];
                v[i].to_string()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub grid: Vec<Axis>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A fully specified grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub labels: Vec<String>,
    pub config: RunConfig,
}

impl SweepConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading sweep config {}", path.display()))?;
        let cfg: SweepConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing sweep config {}", path.display()))?;
        Ok(cfg)
    }

    /// Cartesian product with the last axis varying fastest. Every cell is
    /// validated before anything runs.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if let Some(axis) = self.grid.iter().find(|a| a.is_empty()) {
            bail!("sweep axis {} has no values", axis.name());
        }
        let total: usize = self.grid.iter().map(Axis::len).product();
        let mut cells = Vec::with_capacity(total);
        for id in 0..total {
            let mut config = self.base.clone();
            config.output = OutputBlock::default();
            let mut labels = Vec::with_capacity(self.grid.len());
            let mut rest = id;
            let mut picks = vec![0; self.grid.len()];
            for (slot, axis) in self.grid.iter().enumerate().rev() {
                picks[slot] = rest % axis.len();
                rest /= axis.len();
            }
            for (axis, &i) in self.grid.iter().zip(&picks) {
                labels.push(axis.apply(i, &mut config));
            }
            config.validate().with_context(|| format!("sweep cell {id}"))?;
            cells.push(Cell { id, labels, config });
        }
        Ok(cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_RUN: &str = r#"{
        "hyper": {"K": 4, "d": 16, "n": 10, "lambda_w": 0.01, "lambda_h": 1e-5, "lambda_b": 0.01},
        "loss": {"kind": "ce"}
    }"#;

    #[test]
    fn defaults_fill_the_train_block() {
        let cfg = RunConfig::from_json(REFERENCE_RUN).unwrap();
        assert_eq!(cfg.train, TrainBlock::default());
        let tc = cfg.train_config().unwrap();
        assert_eq!((tc.lr, tc.momentum, tc.max_iters), (0.5, 0.9, 50_000));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = REFERENCE_RUN.replace("\"loss\"", "\"extra\": 1, \"loss\"");
        assert!(RunConfig::from_json(&text).is_err());
        let text = REFERENCE_RUN.replace("{\"kind\": \"ce\"}", "{\"kind\": \"ce\", \"gamma\": 2}");
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn unbalanced_counts_rejected() {
        let bad = REFERENCE_RUN.replace("\"loss\"", "\"data\": {\"class_counts\": [10, 10, 9, 10]}, \"loss\"");
        let err = RunConfig::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("unbalanced"));
        let ok = REFERENCE_RUN.replace("\"loss\"", "\"data\": {\"class_counts\": [10, 10, 10, 10]}, \"loss\"");
        assert!(RunConfig::from_json(&ok).is_ok());
    }

    #[test]
    fn sweep_cells_in_declaration_order() {
        let sweep = SweepConfig {
            base: RunConfig::from_json(REFERENCE_RUN).unwrap(),
            grid: vec![
                Axis::LambdaH(vec![1e-5, 1e-4]),
                Axis::Loss(vec![LossBlock::Ce {}, LossBlock::Focal { gamma: 3.0 }, LossBlock::Ce {}]),
            ],
            output_dir: None,
        };
        let cells = sweep.cells().unwrap();
        let labels: Vec<_> = cells.iter().map(|c| c.labels.join("/")).collect();
        assert_eq!(
            labels,
            ["0.00001/ce", "0.00001/focal", "0.00001/ce", "0.0001/ce", "0.0001/focal", "0.0001/ce"]
        );
        assert_eq!(cells[4].config.hyper.lambda_h, 1e-4);
    }
}

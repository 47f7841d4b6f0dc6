use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::metrics::{evaluate, Metrics};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{DType, Scalar};
use crate::tensor::{Sgd, SgdConfig, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Evaluate every this many epochs; 0 evaluates only after training.
    pub eval_every: usize,
    pub dtype: DType,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            seed: 0,
            eval_every: 1,
            dtype: DType::F32,
        }
    }
}

impl TrainConfig {
    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            lr: self.lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }

    /// `epochs = 0` (evaluate only) and `lr = 0` are accepted.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size must be positive"));
        }
        self.sgd().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub arch: String,
    pub attachment: Option<String>,
    pub params: usize,
    pub macs: u64,
    pub epochs: Vec<EpochRecord>,
    pub train: Metrics,
    pub test: Option<Metrics>,
    /// Not part of the serialized records; see [`MetricsReport::timing_json`].
    #[serde(skip)]
    pub wall_time_s: f64,
    pub config: serde_json::Value,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record<'a> {
    Epoch(&'a EpochRecord),
    Final {
        arch: &'a str,
        attachment: &'a Option<String>,
        params: usize,
        macs: u64,
        train: &'a Metrics,
        test: &'a Option<Metrics>,
        config: &'a serde_json::Value,
    },
}

impl MetricsReport {
    /// One JSON object per line: every epoch, then the final record. Wall
    /// time is left out so identical runs give identical bytes.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out += &serde_json::to_string(&Record::Epoch(e)).expect("records serialize");
            out.push('\n');
        }
        let fin = Record::Final {
            arch: &self.arch,
            attachment: &self.attachment,
            params: self.params,
            macs: self.macs,
            train: &self.train,
            test: &self.test,
            config: &self.config,
        };
        out += &serde_json::to_string(&fin).expect("records serialize");
        out.push('\n');
        out
    }

    pub fn timing_json(&self) -> String {
        serde_json::json!({ "wall_time_s": self.wall_time_s }).to_string() + "\n"
    }
}

fn check_task<T: Scalar>(g: &Graph<T>, d: &Dataset) -> Result<()> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if d.is_segmentation() != g.spec().arch.is_segmentation() {
        return Err(Error::config(format!(
            "{} cannot train on {} labels",
            g.spec().arch,
            if d.is_segmentation() { "per-pixel" } else { "per-image" }
        )));
    }
    if d.shape != g.spec().input || d.classes != g.spec().classes {
        return Err(Error::config(format!(
            "dataset {:?} with {} classes does not fit graph input {:?} with {} classes",
            d.shape,
            d.classes,
            g.spec().input,
            g.spec().classes
        )));
    }
    Ok(())
}

/// Mean training loss of one epoch. Batch order is a Fisher-Yates shuffle
/// drawn from stream `epoch` of `seed`.
fn run_epoch<T: Scalar>(
    g: &mut Graph<T>,
    d: &Dataset,
    opt: &mut Sgd<T>,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(epoch as u64);
    order.shuffle(&mut rng);
    let mut total = 0.0;
    for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
        let (x, labels) = d.batch::<T>(chunk);
        let tape = Tape::new();
        let watched = g.params().watch(&tape);
        let out = g.forward_with(&tape, &watched, &x)?;
        let loss = tape.softmax_cross_entropy(&out.output, &labels)?;
        let value = loss.item()?.to_f64_lossy();
        if !value.is_finite() {
            return Err(Error::Divergence {
                epoch,
                step: step + 1,
                loss: value,
            });
        }
        let grads = tape.backward(&loss)?;
        opt.step(g.params_mut(), &watched, &grads)?;
        total += value * chunk.len() as f64;
    }
    Ok(total / d.len() as f64)
}

/// Minibatch SGD on `train`, evaluating on `eval` every `cfg.eval_every`
/// epochs and once at the end. `on_epoch` sees each record as it completes.
pub fn train_with<T: Scalar>(
    mut g: Graph<T>,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &TrainConfig,
    config_echo: serde_json::Value,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(Graph<T>, MetricsReport)> {
    cfg.validate()?;
    check_task(&g, train)?;
    if let Some(e) = eval {
        check_task(&g, e)?;
    }
    let start = Instant::now();
    let mut opt = Sgd::new(cfg.sgd())?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let train_loss = run_epoch(&mut g, train, &mut opt, cfg, epoch)?;
        let due = cfg.eval_every > 0 && epoch % cfg.eval_every == 0;
        let eval_metrics = match eval {
            Some(e) if due => Some(evaluate(&g, e)?),
            _ => None,
        };
        let rec = EpochRecord {
            epoch,
            train_loss,
            eval: eval_metrics,
        };
        on_epoch(&rec);
        epochs.push(rec);
    }
    let report = MetricsReport {
        arch: g.spec().arch.to_string(),
        attachment: g.attachment().map(|a| a.label()),
        params: g.count_params(),
        macs: g.count_macs(g.spec().input),
        epochs,
        train: evaluate(&g, train)?,
        test: eval.map(|e| evaluate(&g, e)).transpose()?,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: config_echo,
    };
    Ok((g, report))
}

pub fn train<T: Scalar>(
    g: Graph<T>,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(Graph<T>, MetricsReport)> {
    let echo = serde_json::to_value(cfg).expect("config serializes");
    train_with(g, train, eval, cfg, echo, &mut |_| {})
}

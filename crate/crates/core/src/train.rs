//! Dataset splits, mini-batch training with AdamW, and random hyperparameter search.

use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphBatch, PassGraph};
use crate::mpnn::{Aggregator, BatchLoss, MpnnConfig, MpnnError, MpnnModel, MpnnParams};
use crate::optim::{
    adamw_step, AdamWState, EarlyStopping, OptimError, Parameters, PlateauConfig, PlateauScheduler,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("training.{0} invalid: {1}")]
    InvalidConfig(&'static str, String),
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Model {
        epoch: usize,
        batch: usize,
        #[source]
        source: MpnnError,
    },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Optimizer {
        epoch: usize,
        batch: usize,
        #[source]
        source: OptimError,
    },
    #[error(transparent)]
    Mpnn(#[from] MpnnError),
    #[error("no labeled graphs in the {0} split")]
    EmptySplit(&'static str),
}

pub const MIN_SPLIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stop_patience: usize,
    /// (train, val, test)
    pub split_ratio: [f64; 3],
    pub seed: u64,
    /// Each batch's gradient is computed in this many fixed chunks and reduced
    /// in chunk order, so results do not depend on the thread count.
    pub gradient_chunks: usize,
    /// Train on completed passes only.
    pub successful_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 5.7e-4,
            batch_size: 64,
            max_epochs: 40,
            plateau_patience: 5,
            plateau_factor: 0.5,
            early_stop_patience: 15,
            split_ratio: [0.70, 0.15, 0.15],
            seed: 0,
            gradient_chunks: 4,
            successful_only: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |k: &'static str, why: String| Err(TrainError::InvalidConfig(k, why));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(
                "learning_rate",
                format!("{} must be positive", self.learning_rate),
            );
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay", format!("{} must be ≥ 0", self.weight_decay));
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be ≥ 1".into());
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad(
                "plateau_factor",
                format!("{} not in (0, 1)", self.plateau_factor),
            );
        }
        if self.split_ratio.iter().any(|&r| r <= 0.0)
            || (self.split_ratio.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad(
                "split_ratio",
                format!("{:?} must be positive and sum to 1", self.split_ratio),
            );
        }
        if self.gradient_chunks == 0 {
            return bad("gradient_chunks", "must be ≥ 1".into());
        }
        Ok(())
    }

    fn plateau(&self) -> PlateauConfig {
        PlateauConfig {
            factor: self.plateau_factor,
            patience: self.plateau_patience,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n`; val and test get floor allocations, train the rest.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<Split, TrainError> {
    if n < MIN_SPLIT_SAMPLES {
        return Err(TrainError::TooFewSamples {
            min: MIN_SPLIT_SAMPLES,
            got: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // the nudge keeps exact products like 100 × 0.15 from flooring to 14
    let n_val = (n as f64 * ratios[1] + 1e-9).floor() as usize;
    let n_test = (n as f64 * ratios[2] + 1e-9).floor() as usize;
    let test = idx.split_off(n - n_test);
    let val = idx.split_off(n - n_test - n_val);
    Ok(Split {
        train: idx,
        val,
        test,
    })
}

pub fn split_dataset<T: Clone>(
    items: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), TrainError> {
    let s = split_indices(items.len(), ratios, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| items[i].clone()).collect();
    Ok((pick(&s.train), pick(&s.val), pick(&s.test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_top1: f64,
    pub val_loss: f64,
    pub val_top1: f64,
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: MpnnConfig,
    pub training: TrainConfig,
    pub train_graphs: usize,
    pub val_graphs: usize,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub initial_loss: f64,
    pub total_seconds: f64,
}

impl TrainReport {
    /// One JSON object per epoch followed by a summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "summary": {
                "best_epoch": self.best_epoch,
                "best_val_loss": self.best_val_loss,
                "epochs_run": self.epochs.len(),
                "stopped_early": self.stopped_early,
                "initial_loss": self.initial_loss,
                "train_graphs": self.train_graphs,
                "val_graphs": self.val_graphs,
                "total_seconds": self.total_seconds,
                "model": self.model,
                "training": self.training,
            }
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

fn batch_rng(seed: u64, epoch: usize, batch: usize, chunk: usize) -> ChaCha8Rng {
    // offset so dropout streams never coincide with the shuffle stream of the same seed
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(((epoch as u64) << 40) | ((batch as u64) << 8) | chunk as u64);
    rng
}

/// Summed loss and Top-1 hits of `graphs` in evaluation mode.
pub fn evaluate_loss(model: &MpnnModel, graphs: &[&PassGraph]) -> Result<BatchLoss, MpnnError> {
    const CHUNK: usize = 256;
    let parts: Vec<BatchLoss> = graphs
        .par_chunks(CHUNK)
        .map(|c| {
            let batch = GraphBatch::from_graphs(c.iter().copied());
            let probs = model
                .forward_batch::<ChaCha8Rng>(&batch, None)?
                .probabilities;
            let mut out = BatchLoss {
                graphs: c.len(),
                ..Default::default()
            };
            for g in 0..batch.num_graphs() {
                let label = batch.labels[g].ok_or(MpnnError::MissingLabel(g))?;
                out.loss_sum -= probs[label].ln();
                let range = batch.graph_nodes(g);
                let best = range.filter(|&i| batch.candidate_mask[i]).fold(
                    None::<usize>,
                    |b, i| match b {
                        Some(j) if probs[j] >= probs[i] => Some(j),
                        _ => Some(i),
                    },
                );
                out.top1_hits += usize::from(best == Some(label));
            }
            Ok(out)
        })
        .collect::<Result<_, MpnnError>>()?;
    Ok(parts
        .into_iter()
        .fold(BatchLoss::default(), |a, b| BatchLoss {
            loss_sum: a.loss_sum + b.loss_sum,
            top1_hits: a.top1_hits + b.top1_hits,
            graphs: a.graphs + b.graphs,
        }))
}

fn labeled(graphs: &[PassGraph]) -> Vec<&PassGraph> {
    graphs.iter().filter(|g| g.label_index.is_some()).collect()
}

/// Trains a fresh model on `train`, keeping the parameters of the epoch
/// with the lowest validation loss. Unlabeled graphs are ignored.
pub fn train(
    model_cfg: &MpnnConfig,
    cfg: &TrainConfig,
    train: &[PassGraph],
    val: &[PassGraph],
) -> Result<(MpnnModel, TrainReport), TrainError> {
    let mut model = MpnnModel::new(model_cfg.clone())?;
    train_from(&mut model, cfg, train, val).map(|r| (model, r))
}

/// Like [`train`] but continues from `model`, which ends at the best checkpoint.
pub fn train_from(
    model: &mut MpnnModel,
    cfg: &TrainConfig,
    train: &[PassGraph],
    val: &[PassGraph],
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    let start = Instant::now();
    let train = labeled(train);
    let val = labeled(val);
    if train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let initial = evaluate_loss(model, &val)?;
    let mut opt = AdamWState::new(&model.params);
    let mut sched = PlateauScheduler::new(cfg.learning_rate, cfg.plateau());
    let mut stop = EarlyStopping::new(cfg.early_stop_patience);
    let mut best = model.params.clone();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for epoch in 0..cfg.max_epochs {
        let t0 = Instant::now();
        let lr = sched.lr;
        order.shuffle(&mut shuffle_rng);
        let mut totals = BatchLoss::default();
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let graphs: Vec<&PassGraph> = idx.iter().map(|&i| train[i]).collect();
            let (grad, stats) =
                batch_gradient(model, &graphs, cfg, epoch, b).map_err(|source| {
                    TrainError::Model {
                        epoch,
                        batch: b,
                        source,
                    }
                })?;
            adamw_step(&mut model.params, &grad, &mut opt, lr, cfg.weight_decay).map_err(
                |source| TrainError::Optimizer {
                    epoch,
                    batch: b,
                    source,
                },
            )?;
            totals.loss_sum += stats.loss_sum;
            totals.top1_hits += stats.top1_hits;
            totals.graphs += stats.graphs;
        }
        let v = evaluate_loss(model, &val).map_err(|source| TrainError::Model {
            epoch,
            batch: usize::MAX,
            source,
        })?;
        let val_loss = v.loss_sum / v.graphs as f64;
        if stop.observe(epoch, val_loss) {
            best = model.params.clone();
        }
        sched.step(val_loss);
        let rec = EpochRecord {
            epoch,
            train_loss: totals.loss_sum / totals.graphs as f64,
            train_top1: totals.top1_hits as f64 / totals.graphs as f64,
            val_loss,
            val_top1: v.top1_hits as f64 / v.graphs as f64,
            learning_rate: lr,
            seconds: t0.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: train {:.4} val {:.4} val_top1 {:.4} lr {:.2e}",
            rec.train_loss,
            rec.val_loss,
            rec.val_top1,
            lr
        );
        epochs.push(rec);
        if stop.should_stop() {
            break;
        }
    }
    model.params = best;
    let stopped_early = epochs.len() < cfg.max_epochs;
    Ok(TrainReport {
        model: model.config.clone(),
        training: cfg.clone(),
        train_graphs: train.len(),
        val_graphs: val.len(),
        best_epoch: stop.best_epoch.unwrap_or(0),
        best_val_loss: stop.best,
        stopped_early,
        initial_loss: initial.loss_sum / initial.graphs as f64,
        epochs,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean-loss gradient of one mini-batch, computed chunk-wise and reduced in order.
fn batch_gradient(
    model: &MpnnModel,
    graphs: &[&PassGraph],
    cfg: &TrainConfig,
    epoch: usize,
    batch: usize,
) -> Result<(MpnnParams, BatchLoss), MpnnError> {
    let chunk = graphs.len().div_ceil(cfg.gradient_chunks);
    let parts: Vec<(MpnnParams, BatchLoss)> = graphs
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, part)| {
            let mut rng = batch_rng(cfg.seed, epoch, batch, c);
            let gb = GraphBatch::from_graphs(part.iter().copied());
            let mut grad = model.params.zeros_like();
            let dropout = (model.config.dropout > 0.0).then_some(&mut rng);
            let stats = model.accumulate_gradients(&gb, graphs.len(), dropout, &mut grad)?;
            Ok((grad, stats))
        })
        .collect::<Result<_, MpnnError>>()?;
    let mut it = parts.into_iter();
    let (mut grad, mut stats) = it.next().expect("nonempty batch");
    for (g, s) in it {
        grad.add_assign(&g);
        stats.loss_sum += s.loss_sum;
        stats.top1_hits += s.top1_hits;
        stats.graphs += s.graphs;
    }
    Ok((grad, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub hidden_dim: Vec<usize>,
    pub num_layers: Vec<usize>,
    pub dropout: [f64; 2],
    /// Sampled log-uniformly.
    pub learning_rate: [f64; 2],
    /// Sampled log-uniformly.
    pub weight_decay: [f64; 2],
    pub batch_size: Vec<usize>,
    pub aggregator: Vec<Aggregator>,
    pub trials: usize,
    /// Epoch budget per trial.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            hidden_dim: vec![128, 256, 512],
            num_layers: vec![3, 5, 7],
            dropout: [0.1, 0.5],
            learning_rate: [1e-5, 1e-3],
            weight_decay: [1e-5, 1e-3],
            batch_size: vec![64, 128, 256, 512],
            aggregator: vec![Aggregator::Mean, Aggregator::Max, Aggregator::Add],
            trials: 20,
            epochs: 5,
            seed: 0,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |k: &'static str, why: &str| Err(TrainError::InvalidConfig(k, why.into()));
        if self.trials == 0 {
            return bad("search.trials", "must be ≥ 1");
        }
        if self.hidden_dim.is_empty()
            || self.num_layers.is_empty()
            || self.batch_size.is_empty()
            || self.aggregator.is_empty()
        {
            return bad("search", "every categorical list needs at least one value");
        }
        for (k, r) in [
            ("search.dropout", self.dropout),
            ("search.learning_rate", self.learning_rate),
            ("search.weight_decay", self.weight_decay),
        ] {
            if !(r[0] <= r[1]) {
                return bad(k, "range must be [lo, hi] with lo ≤ hi");
            }
        }
        if !(self.learning_rate[0] > 0.0 && self.weight_decay[0] > 0.0) {
            return bad("search", "log-uniform ranges must be positive");
        }
        Ok(())
    }

    /// The `trials` configurations, fully determined by `seed`.
    pub fn sample(
        &self,
        base_model: &MpnnConfig,
        base_train: &TrainConfig,
    ) -> Vec<(MpnnConfig, TrainConfig)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let log_uniform = |r: [f64; 2], rng: &mut ChaCha8Rng| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0].ln()..r[1].ln()).exp()
            }
        };
        (0..self.trials)
            .map(|_| {
                let mut m = base_model.clone();
                let mut t = base_train.clone();
                m.hidden_dim = *self.hidden_dim.choose(&mut rng).unwrap();
                m.num_layers = *self.num_layers.choose(&mut rng).unwrap();
                m.dropout = if self.dropout[0] == self.dropout[1] {
                    self.dropout[0]
                } else {
                    rng.random_range(self.dropout[0]..self.dropout[1])
                };
                m.aggregator = *self.aggregator.choose(&mut rng).unwrap();
                t.learning_rate = log_uniform(self.learning_rate, &mut rng);
                t.weight_decay = log_uniform(self.weight_decay, &mut rng);
                t.batch_size = *self.batch_size.choose(&mut rng).unwrap();
                t.max_epochs = self.epochs;
                m.seed = rng.random();
                (m, t)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub model: MpnnConfig,
    pub training: TrainConfig,
    pub val_loss: f64,
    pub val_top1: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    /// Sorted by validation Top-1, best first.
    pub trials: Vec<Trial>,
    /// Spearman correlation of each hyperparameter with validation Top-1;
    /// `None` where the hyperparameter (or the accuracy) did not vary.
    pub correlations: Vec<(String, Option<f64>)>,
}

pub fn random_search(
    space: &SearchSpace,
    base_model: &MpnnConfig,
    base_train: &TrainConfig,
    train_set: &[PassGraph],
    val: &[PassGraph],
) -> Result<SearchReport, TrainError> {
    space.validate()?;
    let mut trials = Vec::new();
    for (index, (m, t)) in space.sample(base_model, base_train).into_iter().enumerate() {
        let t0 = Instant::now();
        let (model, report) = train(&m, &t, train_set, val)?;
        let v = evaluate_loss(&model, &labeled(val))?;
        log::info!(
            "trial {index}: val_top1 {:.4}",
            v.top1_hits as f64 / v.graphs as f64
        );
        trials.push(Trial {
            index,
            model: m,
            training: t,
            val_loss: report.best_val_loss,
            val_top1: v.top1_hits as f64 / v.graphs as f64,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let acc: Vec<f64> = trials.iter().map(|t| t.val_top1).collect();
    let column = |f: &dyn Fn(&Trial) -> f64| trials.iter().map(f).collect::<Vec<f64>>();
    let agg_code = |a: Aggregator| Aggregator::ALL.iter().position(|&x| x == a).unwrap() as f64;
    let correlations = vec![
        (
            "hidden_dim".to_string(),
            spearman(&column(&|t| t.model.hidden_dim as f64), &acc),
        ),
        (
            "num_layers".to_string(),
            spearman(&column(&|t| t.model.num_layers as f64), &acc),
        ),
        (
            "dropout".to_string(),
            spearman(&column(&|t| t.model.dropout), &acc),
        ),
        (
            "learning_rate".to_string(),
            spearman(&column(&|t| t.training.learning_rate), &acc),
        ),
        (
            "weight_decay".to_string(),
            spearman(&column(&|t| t.training.weight_decay), &acc),
        ),
        (
            "batch_size".to_string(),
            spearman(&column(&|t| t.training.batch_size as f64), &acc),
        ),
        (
            "aggregator".to_string(),
            spearman(&column(&|t| agg_code(t.model.aggregator)), &acc),
        ),
    ];
    trials.sort_by(|a, b| {
        b.val_top1
            .total_cmp(&a.val_top1)
            .then(a.index.cmp(&b.index))
    });
    Ok(SearchReport {
        trials,
        correlations,
    })
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            r[k] = mid;
        }
        i = j;
    }
    r
}

/// Spearman rank correlation; `None` if either side has zero variance.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

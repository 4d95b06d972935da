//! Per-pass prediction records and model-quality metrics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::PassGraph;
use crate::state::{GameState, PlayerId, Role};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no records to evaluate")]
    EmptyInput,
    #[error("pooled instances need at least one positive and one negative")]
    DegenerateLabels,
    #[error("record {pass_id}: {reason}")]
    InvalidRecord { pass_id: u64, reason: String },
}

/// One pass as seen by a predictor. Indices refer to `candidates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pass_id: u64,
    pub candidates: Vec<PlayerId>,
    pub probabilities: Vec<f64>,
    pub truth: usize,
    /// Target the passer actually played to; equals `truth` for completed passes.
    pub chosen: usize,
    pub pass_successful: bool,
    pub passer_id: PlayerId,
    pub passer_role: Role,
}

impl PredictionRecord {
    /// Builds a record from node-level probabilities of `graph` (passer entry ignored).
    pub fn from_graph(
        state: &GameState,
        graph: &PassGraph,
        node_probs: &[f64],
    ) -> Result<Self, MetricsError> {
        let invalid = |reason: &str| MetricsError::InvalidRecord {
            pass_id: state.frame_id,
            reason: reason.into(),
        };
        let label = graph.label_index.ok_or_else(|| invalid("no receiver"))?;
        let cands = graph.candidates();
        let truth = cands
            .iter()
            .position(|&c| c == label)
            .ok_or_else(|| invalid("receiver is not a candidate"))?;
        Ok(Self {
            pass_id: state.frame_id,
            candidates: cands.iter().map(|&c| graph.node_ids[c]).collect(),
            probabilities: cands.iter().map(|&c| node_probs[c]).collect(),
            truth,
            chosen: truth,
            pass_successful: state.pass_successful.unwrap_or(true),
            passer_id: state.passer_id,
            passer_role: state.passer().role,
        })
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |reason: String| {
            Err(MetricsError::InvalidRecord {
                pass_id: self.pass_id,
                reason,
            })
        };
        if self.probabilities.len() != self.candidates.len() || self.candidates.is_empty() {
            return bad("probability and candidate counts differ".into());
        }
        if self.truth >= self.candidates.len() || self.chosen >= self.candidates.len() {
            return bad("index outside candidate list".into());
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("probabilities sum to {sum}"));
        }
        Ok(())
    }

    /// Candidate indices by probability descending, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probabilities.len()).collect();
        idx.sort_by(|&a, &b| {
            self.probabilities[b]
                .total_cmp(&self.probabilities[a])
                .then(a.cmp(&b))
        });
        idx
    }

    /// 1-based rank of candidate `i`.
    pub fn rank_of(&self, i: usize) -> usize {
        let p = self.probabilities[i];
        1 + self
            .probabilities
            .iter()
            .enumerate()
            .filter(|&(j, &q)| q > p || (q == p && j < i))
            .count()
    }

    pub fn top1(&self) -> usize {
        self.ranking()[0]
    }
}

pub fn topk_accuracy(records: &[PredictionRecord], k: usize) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = records.iter().filter(|r| r.rank_of(r.truth) <= k).count();
    Ok(hits as f64 / records.len() as f64)
}

/// AUROC over every pooled (candidate, pass) instance, ties counted half.
pub fn global_auroc(records: &[PredictionRecord]) -> Result<f64, MetricsError> {
    let mut pooled: Vec<(f64, bool)> = records
        .iter()
        .flat_map(|r| {
            r.probabilities
                .iter()
                .enumerate()
                .map(move |(i, &p)| (p, i == r.truth))
        })
        .collect();
    let pos = pooled.iter().filter(|x| x.1).count();
    let neg = pooled.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Mann-Whitney U with midranks for ties
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        let n_pos = pooled[i..j].iter().filter(|x| x.1).count();
        rank_sum += mid * n_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean of (p − 1{true})² over pooled instances.
pub fn brier_score(records: &[PredictionRecord]) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in records {
        for (i, &p) in r.probabilities.iter().enumerate() {
            let y = if i == r.truth { 1.0 } else { 0.0 };
            sum += (p - y) * (p - y);
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub passes: usize,
    pub top1: f64,
    pub top3: f64,
    pub auroc: f64,
    pub brier: f64,
}

pub fn summarize(records: &[PredictionRecord]) -> Result<MetricSummary, MetricsError> {
    Ok(MetricSummary {
        passes: records.len(),
        top1: topk_accuracy(records, 1)?,
        top3: topk_accuracy(records, 3)?,
        auroc: global_auroc(records)?,
        brier: brier_score(records)?,
    })
}

/// Anything that maps a graph to node-level receiver probabilities.
pub trait Predictor: Sync {
    fn predict(&self, graph: &PassGraph) -> Result<Vec<f64>, crate::Error>;
}

/// Records for labeled `(state, graph)` pairs, computed in parallel, in input order.
pub fn predict_records<P: Predictor + ?Sized>(
    predictor: &P,
    states: &[GameState],
    graphs: &[PassGraph],
) -> Result<Vec<PredictionRecord>, crate::Error> {
    states
        .par_iter()
        .zip(graphs)
        .map(|(s, g)| {
            let probs = predictor.predict(g)?;
            Ok(PredictionRecord::from_graph(s, g, &probs)?)
        })
        .collect()
}

pub const METRICS_HEADER: &str = "model\tpasses\ttop1\ttop3\tauroc\tbrier";

/// Tab-separated metrics table, one row per named model.
pub fn write_metrics_table<W: Write>(
    mut w: W,
    rows: &[(String, MetricSummary)],
) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for (name, m) in rows {
        writeln!(
            w,
            "{name}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            m.passes, m.top1, m.top3, m.auroc, m.brier
        )?;
    }
    Ok(())
}

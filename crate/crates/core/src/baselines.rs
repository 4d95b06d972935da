//! Reference predictors: nearest teammate and a linear per-candidate ranker.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::graph::{edge_col, PassGraph, EDGE_DIM, NODE_DIM};
use crate::metrics::Predictor;
use crate::mpnn::masked_softmax;
use crate::optim::{adamw_step, AdamWState, OptimError, Parameters};

pub const DEFAULT_TAU: f64 = 10.0;

/// Ranks candidates by distance to the passer; probabilities are a softmax of −d/τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPlayer {
    /// Temperature in meters.
    pub tau: f64,
    /// Converts the graph's distance column back to meters.
    pub meters_per_unit: f64,
}

impl Default for NearestPlayer {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            meters_per_unit: 1.0,
        }
    }
}

impl NearestPlayer {
    pub fn new(tau: f64, meters_per_unit: f64) -> Self {
        Self {
            tau,
            meters_per_unit,
        }
    }

    pub fn predict_graph(&self, graph: &PassGraph) -> Vec<f64> {
        let scores: Vec<f64> = (0..graph.num_nodes())
            .map(|i| match graph.candidate_mask[i] {
                true => {
                    let d = graph.outgoing_edge(i).expect("star edge")[edge_col::DISTANCE];
                    -d * self.meters_per_unit / self.tau
                }
                false => 0.0,
            })
            .collect();
        masked_softmax(&scores, &graph.candidate_mask, &[0, graph.num_nodes()])
    }
}

impl Predictor for NearestPlayer {
    fn predict(&self, graph: &PassGraph) -> Result<Vec<f64>, crate::Error> {
        Ok(self.predict_graph(graph))
    }
}

pub const LOGREG_FEATURES: usize = 2 * NODE_DIM + EDGE_DIM;

/// Candidate row `[candidate node ∥ passer→candidate edge ∥ passer node]`.
pub fn candidate_features(graph: &PassGraph, node: usize) -> [f64; LOGREG_FEATURES] {
    let mut x = [0.0; LOGREG_FEATURES];
    let edge = graph.outgoing_edge(node).expect("star edge");
    for c in 0..NODE_DIM {
        x[c] = graph.node_features[[node, c]];
        x[NODE_DIM + EDGE_DIM + c] = graph.node_features[[graph.passer_index, c]];
    }
    for c in 0..EDGE_DIM {
        x[NODE_DIM + c] = edge[c];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once full-batch loss changes by less than this.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_iterations: 3000,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Default for LogRegModel {
    fn default() -> Self {
        Self {
            weights: vec![0.0; LOGREG_FEATURES],
            bias: 0.0,
        }
    }
}

impl Parameters for LogRegModel {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.weights, std::slice::from_ref(&self.bias)]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, std::slice::from_mut(&mut self.bias)]
    }
}

impl LogRegModel {
    fn score(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_graph(&self, graph: &PassGraph) -> Vec<f64> {
        let scores: Vec<f64> = (0..graph.num_nodes())
            .map(|i| match graph.candidate_mask[i] {
                true => self.score(&candidate_features(graph, i)),
                false => 0.0,
            })
            .collect();
        masked_softmax(&scores, &graph.candidate_mask, &[0, graph.num_nodes()])
    }
}

impl Predictor for LogRegModel {
    fn predict(&self, graph: &PassGraph) -> Result<Vec<f64>, crate::Error> {
        Ok(self.predict_graph(graph))
    }
}

/// Candidate design matrix of a labeled training set.
#[derive(Debug, Clone)]
pub struct LogRegData {
    x: Array2<f64>,
    offsets: Vec<usize>,
    labels: Vec<usize>,
}

impl LogRegData {
    /// Unlabeled graphs are skipped.
    pub fn new(graphs: &[PassGraph]) -> Self {
        let mut rows = Vec::new();
        let mut offsets = vec![0];
        let mut labels = Vec::new();
        for g in graphs {
            let Some(label) = g.label_index else { continue };
            for c in g.candidates() {
                if c == label {
                    labels.push(rows.len() / LOGREG_FEATURES);
                }
                rows.extend_from_slice(&candidate_features(g, c));
            }
            offsets.push(rows.len() / LOGREG_FEATURES);
        }
        let n = rows.len() / LOGREG_FEATURES;
        Self {
            x: Array2::from_shape_vec((n, LOGREG_FEATURES), rows).expect("row-major rows"),
            offsets,
            labels,
        }
    }

    pub fn num_graphs(&self) -> usize {
        self.labels.len()
    }

    /// Mean cross-entropy and its gradient.
    pub fn loss_and_gradient(&self, model: &LogRegModel) -> (f64, LogRegModel) {
        let w = Array1::from(model.weights.clone());
        let scores = self.x.dot(&w) + model.bias;
        let n = self.num_graphs().max(1) as f64;
        let mut loss = 0.0;
        let mut ds = Array1::<f64>::zeros(scores.len());
        for (g, win) in self.offsets.windows(2).enumerate() {
            let s = scores.slice(ndarray::s![win[0]..win[1]]);
            let max = s.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let z: f64 = s.iter().map(|v| (v - max).exp()).sum();
            let label = self.labels[g];
            loss += -(scores[label] - max - z.ln());
            for i in win[0]..win[1] {
                ds[i] = (scores[i] - max).exp() / z / n;
            }
            ds[label] -= 1.0 / n;
        }
        let gw = self.x.t().dot(&ds);
        (
            loss / n,
            LogRegModel {
                weights: gw.to_vec(),
                bias: ds.sum(),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegFit {
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
}

/// Full-batch Adam on the training graphs, starting from zero weights.
pub fn logreg_train(
    graphs: &[PassGraph],
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, LogRegFit), OptimError> {
    let data = LogRegData::new(graphs);
    let mut model = LogRegModel::default();
    let mut state = AdamWState::new(&model);
    let mut prev = f64::INFINITY;
    let mut fit = LogRegFit {
        iterations: 0,
        final_loss: f64::NAN,
        converged: false,
    };
    for it in 0..cfg.max_iterations {
        let (loss, grad) = data.loss_and_gradient(&model);
        fit.iterations = it + 1;
        fit.final_loss = loss;
        if (prev - loss).abs() < cfg.tolerance {
            fit.converged = true;
            break;
        }
        prev = loss;
        adamw_step(&mut model, &grad, &mut state, cfg.learning_rate, 0.0)?;
    }
    Ok((model, fit))
}

//! Edge-conditioned message-passing network over star pass graphs.
//!
//! ```text
//! h⁰_i   = φ_node(f_i)                 e'_ij = φ_edge(g_ij)
//! m_j→i  = M_l(h_j ∥ h_i ∥ e'_ij)      h^l_i = U_l(h^{l-1}_i ∥ ⊕_j m_j→i)
//! s_i    = R(h^L_i)                    p_i   = softmax over candidates of s
//! ```
//!
//! Gradients are computed by an explicit reverse sweep over a [`ForwardTrace`].

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphBatch, PassGraph, EDGE_DIM, NODE_DIM};
use crate::nn::{Activation, Mlp, MlpCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Max,
    Mean,
    Add,
}

impl Aggregator {
    pub const ALL: [Aggregator; 3] = [Aggregator::Mean, Aggregator::Max, Aggregator::Add];

    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregator::Max => "max",
            Aggregator::Mean => "mean",
            Aggregator::Add => "add",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpnnConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub aggregator: Aggregator,
    /// Dense layers per MLP (φ_node, φ_edge, M_l, U_l, R).
    pub mlp_depth: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for MpnnConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            num_layers: 3,
            dropout: 0.0,
            aggregator: Aggregator::Max,
            mlp_depth: 2,
            activation: Activation::Silu,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpnnError {
    #[error("model.{0} invalid: {1}")]
    InvalidConfig(&'static str, String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation in layer {layer} ({stage})")]
    NonFiniteActivation { layer: usize, stage: &'static str },
    #[error("graph {0} of the batch has no label")]
    MissingLabel(usize),
}

impl MpnnConfig {
    pub fn validate(&self) -> Result<(), MpnnError> {
        if self.hidden_dim < 1 {
            return Err(MpnnError::InvalidConfig("hidden_dim", "must be ≥ 1".into()));
        }
        if self.num_layers < 1 {
            return Err(MpnnError::InvalidConfig("num_layers", "must be ≥ 1".into()));
        }
        if self.mlp_depth < 1 {
            return Err(MpnnError::InvalidConfig("mlp_depth", "must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(MpnnError::InvalidConfig(
                "dropout",
                format!("{} not in [0, 1)", self.dropout),
            ));
        }
        Ok(())
    }
}

/// All learnable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct MpnnParams {
    pub node_embed: Mlp,
    pub edge_embed: Mlp,
    pub message: Vec<Mlp>,
    pub update: Vec<Mlp>,
    pub readout: Mlp,
}

impl MpnnParams {
    pub fn init(cfg: &MpnnConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (h, d, a) = (cfg.hidden_dim, cfg.mlp_depth, cfg.activation);
        let node_embed = Mlp::init(NODE_DIM, h, h, d, a, &mut rng);
        let edge_embed = Mlp::init(EDGE_DIM, h, h, d, a, &mut rng);
        let mut message = Vec::with_capacity(cfg.num_layers);
        let mut update = Vec::with_capacity(cfg.num_layers);
        for _ in 0..cfg.num_layers {
            message.push(Mlp::init(3 * h, h, h, d, a, &mut rng));
            update.push(Mlp::init(2 * h, h, h, d, a, &mut rng));
        }
        let readout = Mlp::init(h, h, 1, d, a, &mut rng);
        Self {
            node_embed,
            edge_embed,
            message,
            update,
            readout,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            node_embed: self.node_embed.zeros_like(),
            edge_embed: self.edge_embed.zeros_like(),
            message: self.message.iter().map(Mlp::zeros_like).collect(),
            update: self.update.iter().map(Mlp::zeros_like).collect(),
            readout: self.readout.zeros_like(),
        }
    }

    fn mlps(&self) -> impl Iterator<Item = &Mlp> {
        std::iter::once(&self.node_embed)
            .chain(std::iter::once(&self.edge_embed))
            .chain(
                self.message
                    .iter()
                    .zip(&self.update)
                    .flat_map(|(m, u)| [m, u]),
            )
            .chain(std::iter::once(&self.readout))
    }

    fn mlps_mut(&mut self) -> impl Iterator<Item = &mut Mlp> {
        std::iter::once(&mut self.node_embed)
            .chain(std::iter::once(&mut self.edge_embed))
            .chain(
                self.message
                    .iter_mut()
                    .zip(self.update.iter_mut())
                    .flat_map(|(m, u)| [m, u]),
            )
            .chain(std::iter::once(&mut self.readout))
    }

    /// Human-readable tensor names, aligned with [`crate::optim::Parameters::slices`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut push = |prefix: &str, m: &Mlp| {
            for i in 0..m.layers.len() {
                names.push(format!("{prefix}.{i}.weight"));
                names.push(format!("{prefix}.{i}.bias"));
            }
        };
        push("node_embed", &self.node_embed);
        push("edge_embed", &self.edge_embed);
        for (l, (m, u)) in self.message.iter().zip(&self.update).enumerate() {
            push(&format!("message.{l}"), m);
            push(&format!("update.{l}"), u);
        }
        push("readout", &self.readout);
        names
    }

    /// Layer dimensions expected for `cfg`, in tensor order.
    pub(crate) fn expected_shapes(cfg: &MpnnConfig) -> Vec<(usize, usize)> {
        let h = cfg.hidden_dim;
        let mlp = |input: usize, output: usize| {
            let mut dims = vec![input];
            dims.extend(std::iter::repeat_n(h, cfg.mlp_depth - 1));
            dims.push(output);
            dims.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()
        };
        let mut shapes = mlp(NODE_DIM, h);
        shapes.extend(mlp(EDGE_DIM, h));
        for _ in 0..cfg.num_layers {
            shapes.extend(mlp(3 * h, h));
            shapes.extend(mlp(2 * h, h));
        }
        shapes.extend(mlp(h, 1));
        shapes
    }

    pub(crate) fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.mlps()
            .flat_map(|m| m.layers.iter().map(|d| (d.input_dim(), d.output_dim())))
            .collect()
    }

    pub(crate) fn from_flat(cfg: &MpnnConfig, values: &[f64]) -> Result<Self, MpnnError> {
        let mut p = Self::init(cfg);
        let needed: usize = crate::optim::Parameters::num_params(&p);
        if needed != values.len() {
            return Err(MpnnError::ShapeMismatch(format!(
                "payload has {} values, config needs {needed}",
                values.len()
            )));
        }
        let mut off = 0;
        for s in crate::optim::Parameters::slices_mut(&mut p) {
            s.copy_from_slice(&values[off..off + s.len()]);
            off += s.len();
        }
        Ok(p)
    }
}

impl crate::optim::Parameters for MpnnParams {
    fn slices(&self) -> Vec<&[f64]> {
        self.mlps().flat_map(|m| m.slices()).collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.mlps_mut().flat_map(|m| m.slices_mut()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpnnModel {
    pub config: MpnnConfig,
    pub params: MpnnParams,
}

/// Per-layer record of the message-passing step.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub message_cache: MlpCache,
    pub update_cache: MlpCache,
    /// Messages m_{src→dst}, one row per edge.
    pub messages: Array2<f64>,
    /// For max aggregation: winning edge per (node, channel); `usize::MAX` if
    /// the node has no incoming edge.
    pub argmax: Option<Vec<usize>>,
    pub in_degree: Vec<usize>,
    pub output: Array2<f64>,
}

/// Intermediate activations of one forward call over a batch.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub node_cache: MlpCache,
    pub edge_cache: MlpCache,
    pub embeddings: Array2<f64>,
    pub edge_embeddings: Array2<f64>,
    pub layers: Vec<LayerTrace>,
    pub readout_cache: MlpCache,
    /// Readout score per node.
    pub scores: Vec<f64>,
    /// Masked per-graph softmax; exactly 0 at passers.
    pub probabilities: Vec<f64>,
    pub node_offsets: Vec<usize>,
}

impl ForwardTrace {
    /// Node-level probabilities of graph `g` of the batch.
    pub fn graph_probabilities(&self, g: usize) -> &[f64] {
        &self.probabilities[self.node_offsets[g]..self.node_offsets[g + 1]]
    }
}

/// Ranked candidate: node index and probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub node: usize,
    pub probability: f64,
}

fn check_finite(a: &Array2<f64>, layer: usize, stage: &'static str) -> Result<(), MpnnError> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MpnnError::NonFiniteActivation { layer, stage })
    }
}

/// Sum of non-negative terms in ascending order, independent of input order.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

impl MpnnModel {
    pub fn new(config: MpnnConfig) -> Result<Self, MpnnError> {
        config.validate()?;
        let params = MpnnParams::init(&config);
        Ok(Self { config, params })
    }

    pub fn from_parts(config: MpnnConfig, params: MpnnParams) -> Result<Self, MpnnError> {
        config.validate()?;
        let want = MpnnParams::expected_shapes(&config);
        let got = params.layer_shapes();
        if want != got {
            return Err(MpnnError::ShapeMismatch(
                "parameter shapes do not match config".into(),
            ));
        }
        Ok(Self { config, params })
    }

    fn check_batch(&self, batch: &GraphBatch) -> Result<(), MpnnError> {
        if batch.node_features.ncols() != NODE_DIM {
            return Err(MpnnError::ShapeMismatch(format!(
                "node features have {} columns, expected {NODE_DIM}",
                batch.node_features.ncols()
            )));
        }
        if batch.edge_features.ncols() != EDGE_DIM {
            return Err(MpnnError::ShapeMismatch(format!(
                "edge features have {} columns, expected {EDGE_DIM}",
                batch.edge_features.ncols()
            )));
        }
        if batch.edge_features.nrows() != batch.src.len() {
            return Err(MpnnError::ShapeMismatch(
                "edge feature rows differ from edge count".into(),
            ));
        }
        Ok(())
    }

    /// Evaluation forward of one graph: node-level probabilities (0 at the passer).
    pub fn forward(&self, graph: &PassGraph) -> Result<(Vec<f64>, ForwardTrace), MpnnError> {
        let batch = GraphBatch::from_graphs(std::iter::once(graph));
        let trace = self.forward_batch::<ChaCha8Rng>(&batch, None)?;
        Ok((trace.probabilities.clone(), trace))
    }

    /// Training forward of one graph with dropout drawn from `rng`.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        graph: &PassGraph,
        rng: &mut R,
    ) -> Result<(Vec<f64>, ForwardTrace), MpnnError> {
        let batch = GraphBatch::from_graphs(std::iter::once(graph));
        let trace = self.forward_batch(&batch, Some(rng))?;
        Ok((trace.probabilities.clone(), trace))
    }

    /// Probabilities only, for a batch of graphs at evaluation time.
    pub fn predict_batch(&self, graphs: &[PassGraph]) -> Result<Vec<Vec<f64>>, MpnnError> {
        let batch = GraphBatch::from_graphs(graphs);
        let trace = self.forward_batch::<ChaCha8Rng>(&batch, None)?;
        Ok((0..batch.num_graphs())
            .map(|g| trace.graph_probabilities(g).to_vec())
            .collect())
    }

    /// Forward over a concatenated batch. Dropout is active iff `rng` is given.
    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        batch: &GraphBatch,
        mut rng: Option<&mut R>,
    ) -> Result<ForwardTrace, MpnnError> {
        self.check_batch(batch)?;
        let p = &self.params;
        let h = self.config.hidden_dim;
        let rate = self.config.dropout;
        let n = batch.num_nodes();
        let m = batch.num_edges();
        macro_rules! drop {
            () => {
                rng.as_deref_mut().map(|r| (rate, r))
            };
        }

        let (mut hid, node_cache) = p.node_embed.forward(batch.node_features.clone(), drop!());
        check_finite(&hid, 0, "node embedding")?;
        let (edge_emb, edge_cache) = p.edge_embed.forward(batch.edge_features.clone(), drop!());
        check_finite(&edge_emb, 0, "edge embedding")?;
        let embeddings = hid.clone();

        let mut in_degree = vec![0usize; n];
        for &d in &batch.dst {
            in_degree[d] += 1;
        }

        let mut layers = Vec::with_capacity(self.config.num_layers);
        for l in 0..self.config.num_layers {
            let mut x = Array2::<f64>::zeros((m, 3 * h));
            for e in 0..m {
                let mut row = x.row_mut(e);
                let row = row.as_slice_mut().unwrap();
                row[..h].copy_from_slice(hid.row(batch.src[e]).as_slice().unwrap());
                row[h..2 * h].copy_from_slice(hid.row(batch.dst[e]).as_slice().unwrap());
                row[2 * h..].copy_from_slice(edge_emb.row(e).as_slice().unwrap());
            }
            let (messages, message_cache) = p.message[l].forward(x, drop!());
            check_finite(&messages, l + 1, "message")?;

            let (agg, argmax) = self.aggregate(&messages, &batch.dst, &in_degree, n);

            let mut u_in = Array2::<f64>::zeros((n, 2 * h));
            u_in.slice_mut(s![.., ..h]).assign(&hid);
            u_in.slice_mut(s![.., h..]).assign(&agg);
            let (out, update_cache) = p.update[l].forward(u_in, drop!());
            check_finite(&out, l + 1, "update")?;
            hid = out.clone();
            layers.push(LayerTrace {
                message_cache,
                update_cache,
                messages,
                argmax,
                in_degree: in_degree.clone(),
                output: out,
            });
        }

        let (score_mat, readout_cache) = p.readout.forward(hid, drop!());
        check_finite(&score_mat, self.config.num_layers + 1, "readout")?;
        let scores: Vec<f64> = score_mat.column(0).to_vec();
        let probabilities = masked_softmax(&scores, &batch.candidate_mask, &batch.node_offsets);

        Ok(ForwardTrace {
            node_cache,
            edge_cache,
            embeddings,
            edge_embeddings: edge_emb,
            layers,
            readout_cache,
            scores,
            probabilities,
            node_offsets: batch.node_offsets.clone(),
        })
    }

    fn aggregate(
        &self,
        messages: &Array2<f64>,
        dst: &[usize],
        in_degree: &[usize],
        n: usize,
    ) -> (Array2<f64>, Option<Vec<usize>>) {
        let h = messages.ncols();
        let mut agg = Array2::<f64>::zeros((n, h));
        match self.config.aggregator {
            Aggregator::Max => {
                let mut arg = vec![usize::MAX; n * h];
                let a = agg.as_slice_mut().unwrap();
                for (e, &i) in dst.iter().enumerate() {
                    let msg = messages.row(e);
                    let msg = msg.as_slice().unwrap();
                    for c in 0..h {
                        let k = i * h + c;
                        // strict '>' keeps the lowest edge index on ties
                        if arg[k] == usize::MAX || msg[c] > a[k] {
                            a[k] = msg[c];
                            arg[k] = e;
                        }
                    }
                }
                (agg, Some(arg))
            }
            Aggregator::Add | Aggregator::Mean => {
                {
                    let a = agg.as_slice_mut().unwrap();
                    for (e, &i) in dst.iter().enumerate() {
                        let msg = messages.row(e);
                        for (c, v) in msg.as_slice().unwrap().iter().enumerate() {
                            a[i * h + c] += v;
                        }
                    }
                }
                if self.config.aggregator == Aggregator::Mean {
                    for (i, mut row) in agg.rows_mut().into_iter().enumerate() {
                        if in_degree[i] > 0 {
                            let k = in_degree[i] as f64;
                            row.mapv_inplace(|v| v / k);
                        }
                    }
                }
                (agg, None)
            }
        }
    }

    /// Reverse sweep from `∂L/∂s` (one entry per node) to parameter gradients,
    /// accumulated into `grad`.
    pub fn backward(
        &self,
        batch: &GraphBatch,
        trace: &ForwardTrace,
        d_scores: &[f64],
        grad: &mut MpnnParams,
    ) {
        let p = &self.params;
        let h = self.config.hidden_dim;
        let n = batch.num_nodes();
        let m = batch.num_edges();

        let ds = Array2::from_shape_vec((n, 1), d_scores.to_vec()).expect("one score per node");
        let mut dh = p
            .readout
            .backward(&trace.readout_cache, ds, &mut grad.readout);
        let mut d_edge = Array2::<f64>::zeros((m, h));

        for l in (0..self.config.num_layers).rev() {
            let lt = &trace.layers[l];
            let du = p.update[l].backward(&lt.update_cache, dh, &mut grad.update[l]);
            let mut dprev = du.slice(s![.., ..h]).to_owned();
            let dagg = du.slice(s![.., h..]);

            let mut dm = Array2::<f64>::zeros((m, h));
            match self.config.aggregator {
                Aggregator::Max => {
                    let arg = lt.argmax.as_ref().expect("max trace has argmax");
                    for i in 0..n {
                        for c in 0..h {
                            let e = arg[i * h + c];
                            if e != usize::MAX {
                                dm[[e, c]] += dagg[[i, c]];
                            }
                        }
                    }
                }
                Aggregator::Add | Aggregator::Mean => {
                    for (e, &i) in batch.dst.iter().enumerate() {
                        let scale = if self.config.aggregator == Aggregator::Mean {
                            1.0 / lt.in_degree[i] as f64
                        } else {
                            1.0
                        };
                        let mut row = dm.row_mut(e);
                        row.scaled_add(scale, &dagg.row(i));
                    }
                }
            }

            let dx = p.message[l].backward(&lt.message_cache, dm, &mut grad.message[l]);
            for e in 0..m {
                let row = dx.row(e);
                let row = row.as_slice().unwrap();
                let (s_, d_) = (batch.src[e], batch.dst[e]);
                {
                    let mut t = dprev.row_mut(s_);
                    let t = t.as_slice_mut().unwrap();
                    for c in 0..h {
                        t[c] += row[c];
                    }
                }
                {
                    let mut t = dprev.row_mut(d_);
                    let t = t.as_slice_mut().unwrap();
                    for c in 0..h {
                        t[c] += row[h + c];
                    }
                }
                let mut t = d_edge.row_mut(e);
                let t = t.as_slice_mut().unwrap();
                for c in 0..h {
                    t[c] += row[2 * h + c];
                }
            }
            dh = dprev;
        }

        p.edge_embed
            .backward(&trace.edge_cache, d_edge, &mut grad.edge_embed);
        p.node_embed
            .backward(&trace.node_cache, dh, &mut grad.node_embed);
    }

    /// Mean cross-entropy over `graphs` and its exact gradient (evaluation mode).
    pub fn loss_and_gradients(&self, graphs: &[PassGraph]) -> Result<(f64, MpnnParams), MpnnError> {
        let mut grad = self.params.zeros_like();
        let batch = GraphBatch::from_graphs(graphs);
        let loss =
            self.accumulate_gradients::<ChaCha8Rng>(&batch, graphs.len(), None, &mut grad)?;
        Ok((loss.loss_sum / graphs.len() as f64, grad))
    }

    /// Adds `∂(Σ CE / normalizer)/∂θ` for `batch` into `grad`. Returns the
    /// summed (not averaged) loss and the Top-1 hit count.
    pub fn accumulate_gradients<R: Rng + ?Sized>(
        &self,
        batch: &GraphBatch,
        normalizer: usize,
        rng: Option<&mut R>,
        grad: &mut MpnnParams,
    ) -> Result<BatchLoss, MpnnError> {
        for (g, l) in batch.labels.iter().enumerate() {
            if l.is_none() {
                return Err(MpnnError::MissingLabel(g));
            }
        }
        let trace = self.forward_batch(batch, rng)?;
        let (ds, stats) = cross_entropy_grad(batch, &trace, normalizer as f64);
        self.backward(batch, &trace, &ds, grad);
        Ok(stats)
    }

    /// Candidates sorted by probability, ties broken by lower node index.
    pub fn predict_topk(&self, graph: &PassGraph, k: usize) -> Result<Vec<Ranked>, MpnnError> {
        let (probs, _) = self.forward(graph)?;
        Ok(rank_candidates(&probs, &graph.candidate_mask, k))
    }
}

impl crate::metrics::Predictor for MpnnModel {
    fn predict(&self, graph: &PassGraph) -> Result<Vec<f64>, crate::Error> {
        Ok(self.forward(graph)?.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub loss_sum: f64,
    pub top1_hits: usize,
    pub graphs: usize,
}

/// Per-graph softmax over candidate nodes; non-candidates get exactly 0.
pub fn masked_softmax(scores: &[f64], mask: &[bool], offsets: &[usize]) -> Vec<f64> {
    let mut probs = vec![0.0; scores.len()];
    let mut buf = Vec::with_capacity(11);
    for w in offsets.windows(2) {
        let range = w[0]..w[1];
        let max = range
            .clone()
            .filter(|&i| mask[i])
            .map(|i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            continue;
        }
        buf.clear();
        for i in range.clone().filter(|&i| mask[i]) {
            let e = (scores[i] - max).exp();
            probs[i] = e;
            buf.push(e);
        }
        let z = ordered_sum(&mut buf);
        for i in range.filter(|&i| mask[i]) {
            probs[i] /= z;
        }
    }
    probs
}

/// `∂(Σ_g −log p_{g,label} / normalizer)/∂s`.
fn cross_entropy_grad(
    batch: &GraphBatch,
    trace: &ForwardTrace,
    normalizer: f64,
) -> (Vec<f64>, BatchLoss) {
    let mut ds = vec![0.0; batch.num_nodes()];
    let mut stats = BatchLoss {
        graphs: batch.num_graphs(),
        ..Default::default()
    };
    let mut buf = Vec::with_capacity(11);
    for g in 0..batch.num_graphs() {
        let label = batch.labels[g].expect("checked");
        let range = batch.graph_nodes(g);
        let max = range
            .clone()
            .filter(|&i| batch.candidate_mask[i])
            .map(|i| trace.scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        buf.clear();
        buf.extend(
            range
                .clone()
                .filter(|&i| batch.candidate_mask[i])
                .map(|i| (trace.scores[i] - max).exp()),
        );
        let log_z = ordered_sum(&mut buf).ln();
        stats.loss_sum += -(trace.scores[label] - max - log_z);
        let probs = &trace.probabilities;
        let best = range.clone().filter(|&i| batch.candidate_mask[i]).fold(
            None::<usize>,
            |b, i| match b {
                Some(j) if probs[j] >= probs[i] => Some(j),
                _ => Some(i),
            },
        );
        if best == Some(label) {
            stats.top1_hits += 1;
        }
        for i in range.filter(|&i| batch.candidate_mask[i]) {
            let y = if i == label { 1.0 } else { 0.0 };
            ds[i] = (probs[i] - y) / normalizer;
        }
    }
    (ds, stats)
}

/// Ranks masked-in entries of `probs` (descending, ties → lower index).
pub fn rank_candidates(probs: &[f64], mask: &[bool], k: usize) -> Vec<Ranked> {
    let mut ranked: Vec<Ranked> = (0..probs.len())
        .filter(|&i| mask[i])
        .map(|i| Ranked {
            node: i,
            probability: probs[i],
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(a.node.cmp(&b.node))
    });
    ranked.truncate(k);
    ranked
}

//! Passer-centric star graphs.
//!
//! Nodes are the attacking players, edges join the passer to every teammate.
//! Both edge directions are materialized with shared features so the passer
//! node also receives messages. Defenders never become nodes; they enter only
//! through the pressure and lane-traffic counts.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    facing_direction, lane_traffic, pressure_count, signed_angle_between, GeometryConfig,
};
use crate::pitch::{norm, sub, PitchSpec};
use crate::state::{GameState, PlayerId, StateError};

pub const NODE_DIM: usize = 7;
pub const EDGE_DIM: usize = 3;

/// Node feature columns.
pub mod node_col {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const VX: usize = 2;
    pub const VY: usize = 3;
    pub const AX: usize = 4;
    pub const AY: usize = 5;
    pub const PRESSURE: usize = 6;
}

/// Edge feature columns.
pub mod edge_col {
    pub const DISTANCE: usize = 0;
    pub const ANGLE: usize = 1;
    pub const LANE: usize = 2;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("invalid game state: {0}")]
    InvalidState(#[from] StateError),
    #[error("cannot fit a scaler on an empty training split")]
    EmptyTrainingSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassGraph {
    pub frame_id: u64,
    /// N×7, rows in attacker order.
    pub node_features: Array2<f64>,
    /// M×3, one row per entry in `edges`.
    pub edge_features: Array2<f64>,
    /// Directed (src, dst) node pairs: first passer→j for every candidate j
    /// in node order, then j→passer in the same order.
    pub edges: Vec<(usize, usize)>,
    pub passer_index: usize,
    pub candidate_mask: Vec<bool>,
    pub label_index: Option<usize>,
    pub node_ids: Vec<PlayerId>,
}

impl PassGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.candidate_mask.iter().filter(|&&c| c).count()
    }

    /// Node indices of the candidates, ascending.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| self.candidate_mask[i])
            .collect()
    }

    /// Position of `node` within [`candidates`](Self::candidates).
    pub fn candidate_position(&self, node: usize) -> Option<usize> {
        if !self.candidate_mask.get(node).copied().unwrap_or(false) {
            return None;
        }
        Some(self.candidate_mask[..node].iter().filter(|&&c| c).count())
    }

    /// Edge features of the passer→`node` edge.
    pub fn outgoing_edge(&self, node: usize) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.edges
            .iter()
            .position(|&(s, d)| s == self.passer_index && d == node)
            .map(|k| self.edge_features.row(k))
    }
}

/// Builds the star graph of a validated snapshot. Features are unscaled:
/// distances in meters, angles in radians, counts as integers.
pub fn build_graph(
    state: &GameState,
    cfg: &GeometryConfig,
    pitch: &PitchSpec,
) -> Result<PassGraph, GraphError> {
    state.validate(pitch)?;
    let n = state.attackers.len();
    let passer_index = state.passer_index().expect("validated");
    let passer = &state.attackers[passer_index];

    let mut nodes = Array2::<f64>::zeros((n, NODE_DIM));
    for (i, p) in state.attackers.iter().enumerate() {
        let [x, y] = pitch.normalize(p.pos);
        let c = pressure_count(p.pos, &state.defenders, cfg.pressure_radius) as f64;
        let row = [x, y, p.vel[0], p.vel[1], p.acc[0], p.acc[1], c];
        nodes.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
    }

    let u = facing_direction(passer, state.ball);
    let m = 2 * (n - 1);
    let mut edge_features = Array2::<f64>::zeros((m, EDGE_DIM));
    let mut edges = Vec::with_capacity(m);
    let mut k = 0;
    for (j, target) in state.attackers.iter().enumerate() {
        if j == passer_index {
            continue;
        }
        let w = sub(target.pos, passer.pos);
        let d = norm(w);
        let theta = signed_angle_between(u, w);
        let lane = lane_traffic(
            passer.pos,
            target.pos,
            &state.defenders,
            cfg.cone_width,
            cfg.occlusion_radius,
        ) as f64;
        let row = ndarray::arr1(&[d, theta, lane]);
        edge_features.row_mut(k).assign(&row);
        edge_features.row_mut(k + n - 1).assign(&row);
        edges.push((passer_index, j));
        k += 1;
    }
    let back: Vec<(usize, usize)> = edges.iter().map(|&(s, d)| (d, s)).collect();
    edges.extend(back);

    let candidate_mask: Vec<bool> = (0..n).map(|i| i != passer_index).collect();
    let label_index = state.receiver_id.map(|r| {
        state
            .attackers
            .iter()
            .position(|p| p.id == r)
            .expect("validated")
    });

    Ok(PassGraph {
        frame_id: state.frame_id,
        node_features: nodes,
        edge_features,
        edges,
        passer_index,
        candidate_mask,
        label_index,
        node_ids: state.attackers.iter().map(|p| p.id).collect(),
    })
}

/// Fixed affine rescaling of the count and edge columns:
/// distance ÷ pitch diagonal, angle ÷ π, counts ÷ 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub distance: (f64, f64),
    pub angle: (f64, f64),
    pub lane: (f64, f64),
    pub pressure: (f64, f64),
}

pub const COUNT_DIVISOR: f64 = 5.0;

impl FeatureScaler {
    pub fn for_pitch(pitch: &PitchSpec) -> Self {
        Self {
            distance: (1.0 / pitch.diagonal(), 0.0),
            angle: (1.0 / std::f64::consts::PI, 0.0),
            lane: (1.0 / COUNT_DIVISOR, 0.0),
            pressure: (1.0 / COUNT_DIVISOR, 0.0),
        }
    }

    pub fn apply(&self, graph: &PassGraph) -> PassGraph {
        let mut g = graph.clone();
        self.apply_in_place(&mut g);
        g
    }

    pub fn apply_in_place(&self, g: &mut PassGraph) {
        let fwd = |(scale, shift): (f64, f64)| move |v: &mut f64| *v = *v * scale + shift;
        g.node_features
            .column_mut(node_col::PRESSURE)
            .map_inplace(fwd(self.pressure));
        g.edge_features
            .column_mut(edge_col::DISTANCE)
            .map_inplace(fwd(self.distance));
        g.edge_features
            .column_mut(edge_col::ANGLE)
            .map_inplace(fwd(self.angle));
        g.edge_features
            .column_mut(edge_col::LANE)
            .map_inplace(fwd(self.lane));
    }

    pub fn invert(&self, graph: &PassGraph) -> PassGraph {
        let inv = |(scale, shift): (f64, f64)| move |v: &mut f64| *v = (*v - shift) / scale;
        let mut g = graph.clone();
        g.node_features
            .column_mut(node_col::PRESSURE)
            .map_inplace(inv(self.pressure));
        g.edge_features
            .column_mut(edge_col::DISTANCE)
            .map_inplace(inv(self.distance));
        g.edge_features
            .column_mut(edge_col::ANGLE)
            .map_inplace(inv(self.angle));
        g.edge_features
            .column_mut(edge_col::LANE)
            .map_inplace(inv(self.lane));
        g
    }

    /// Meters represented by one unit of the scaled distance column.
    pub fn meters_per_distance_unit(&self) -> f64 {
        1.0 / self.distance.0
    }
}

/// The scaler is pitch-determined; the training split is only checked for
/// non-emptiness so the call site reads like an ordinary fit.
pub fn fit_scaler(train: &[PassGraph], pitch: &PitchSpec) -> Result<FeatureScaler, GraphError> {
    if train.is_empty() {
        return Err(GraphError::EmptyTrainingSplit);
    }
    Ok(FeatureScaler::for_pitch(pitch))
}

pub fn apply_scaler(graph: &PassGraph, scaler: &FeatureScaler) -> PassGraph {
    scaler.apply(graph)
}

/// Several graphs concatenated into one disconnected graph. Node and edge
/// indices are global; `node_offsets[g]..node_offsets[g+1]` are graph `g`'s nodes.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub node_features: Array2<f64>,
    pub edge_features: Array2<f64>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub node_offsets: Vec<usize>,
    pub edge_offsets: Vec<usize>,
    pub passers: Vec<usize>,
    pub candidate_mask: Vec<bool>,
    pub labels: Vec<Option<usize>>,
}

impl GraphBatch {
    pub fn from_graphs<'a, I>(graphs: I) -> Self
    where
        I: IntoIterator<Item = &'a PassGraph>,
        I::IntoIter: Clone,
    {
        let it = graphs.into_iter();
        let total_n: usize = it.clone().map(|g| g.num_nodes()).sum();
        let total_m: usize = it.clone().map(|g| g.num_edges()).sum();
        // widths follow the first graph so malformed inputs surface as shape errors downstream
        let (nd, ed) = it.clone().next().map_or((NODE_DIM, EDGE_DIM), |g| {
            (g.node_features.ncols(), g.edge_features.ncols())
        });
        let mut node_features = Array2::zeros((total_n, nd));
        let mut edge_features = Array2::zeros((total_m, ed));
        let mut b = GraphBatch {
            node_features: Array2::zeros((0, NODE_DIM)),
            edge_features: Array2::zeros((0, EDGE_DIM)),
            src: Vec::with_capacity(total_m),
            dst: Vec::with_capacity(total_m),
            node_offsets: vec![0],
            edge_offsets: vec![0],
            passers: Vec::new(),
            candidate_mask: Vec::with_capacity(total_n),
            labels: Vec::new(),
        };
        let (mut no, mut eo) = (0, 0);
        for g in it {
            let (n, m) = (g.num_nodes(), g.num_edges());
            node_features
                .slice_mut(s![no..no + n, ..])
                .assign(&g.node_features);
            edge_features
                .slice_mut(s![eo..eo + m, ..])
                .assign(&g.edge_features);
            for &(s, d) in &g.edges {
                b.src.push(s + no);
                b.dst.push(d + no);
            }
            b.passers.push(g.passer_index + no);
            b.candidate_mask.extend_from_slice(&g.candidate_mask);
            b.labels.push(g.label_index.map(|l| l + no));
            no += n;
            eo += m;
            b.node_offsets.push(no);
            b.edge_offsets.push(eo);
        }
        b.node_features = node_features;
        b.edge_features = edge_features;
        b
    }

    pub fn num_graphs(&self) -> usize {
        self.passers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn graph_nodes(&self, g: usize) -> std::ops::Range<usize> {
        self.node_offsets[g]..self.node_offsets[g + 1]
    }
}

//! Synthetic pass snapshots with a planted expert passing policy.
//!
//! Players are placed from formation anchors plus Gaussian jitter. The expert
//! scores every teammate with a utility built only from quantities the graph
//! features expose (goal-ward progress, lane traffic, pressure, pass length),
//! then samples a receiver from a softmax over those utilities with a small
//! probability of a uniformly random choice.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{lane_traffic, pressure_count, GeometryConfig};
use crate::pitch::{dist, PitchSpec, Vec2};
use crate::state::{GameState, PassLabel, PlayerId, PlayerState, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub role: Role,
    pub x: f64,
    pub y: f64,
}

impl Anchor {
    const fn new(role: Role, x: f64, y: f64) -> Self {
        Self { role, x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilityWeights {
    /// Per meter of reduced distance to the attacked goal.
    pub progress: f64,
    /// Per defender occluding the lane.
    pub lane: f64,
    /// Per defender pressuring the receiver.
    pub pressure: f64,
    /// Per meter of pass length beyond `long_threshold`.
    pub long_pass: f64,
    pub long_threshold: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            progress: 0.15,
            lane: 2.5,
            pressure: 1.5,
            long_pass: 0.3,
            long_threshold: 25.0,
        }
    }
}

/// `P(success) = base · exp(−lane_decay·lane − distance_decay·d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuccessModel {
    pub base: f64,
    pub lane_decay: f64,
    pub distance_decay: f64,
}

impl Default for SuccessModel {
    fn default() -> Self {
        Self {
            base: 0.98,
            lane_decay: 1.5,
            distance_decay: 0.025,
        }
    }
}

impl SuccessModel {
    pub fn probability(&self, lane: usize, distance: f64) -> f64 {
        (self.base * (-self.lane_decay * lane as f64 - self.distance_decay * distance).exp())
            .clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_passes: usize,
    /// Distinct attacking rosters; player ids repeat across passes of a roster.
    pub n_teams: usize,
    pub formation: Vec<Anchor>,
    pub opponent_formation: Vec<Vec2>,
    pub jitter_sigma: f64,
    pub max_speed: f64,
    pub max_acceleration: f64,
    /// Softmax inverse temperature of the expert.
    pub beta: f64,
    /// Probability of a uniformly random receiver.
    pub epsilon: f64,
    pub utility: UtilityWeights,
    pub success: SuccessModel,
    /// Relative passer selection weight per role.
    pub passer_weights: BTreeMap<Role, f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        use Role::*;
        let formation = vec![
            Anchor::new(Goalkeeper, 12.0, 34.0),
            Anchor::new(Defender, 32.0, 12.0),
            Anchor::new(Defender, 28.0, 27.0),
            Anchor::new(Defender, 28.0, 41.0),
            Anchor::new(Defender, 32.0, 56.0),
            Anchor::new(Midfielder, 48.0, 22.0),
            Anchor::new(Midfielder, 45.0, 34.0),
            Anchor::new(Midfielder, 48.0, 46.0),
            Anchor::new(Winger, 66.0, 12.0),
            Anchor::new(Winger, 66.0, 56.0),
            Anchor::new(Forward, 72.0, 34.0),
        ];
        let opponent_formation = vec![
            [98.0, 34.0],
            [80.0, 14.0],
            [83.0, 28.0],
            [83.0, 40.0],
            [80.0, 54.0],
            [66.0, 20.0],
            [63.0, 34.0],
            [66.0, 48.0],
            [50.0, 18.0],
            [52.0, 34.0],
            [50.0, 50.0],
        ];
        let passer_weights = [
            (Goalkeeper, 0.5),
            (Defender, 1.5),
            (Midfielder, 2.5),
            (Winger, 1.5),
            (Forward, 0.8),
        ]
        .into_iter()
        .collect();
        Self {
            seed: 7,
            n_passes: 20_000,
            n_teams: 4,
            formation,
            opponent_formation,
            jitter_sigma: 6.0,
            max_speed: 7.0,
            max_acceleration: 3.0,
            beta: 6.0,
            epsilon: 0.1,
            utility: UtilityWeights::default(),
            success: SuccessModel::default(),
            passer_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeneratorError {
    #[error("generator.{0} invalid: {1}")]
    InvalidConfig(&'static str, String),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |k: &'static str, why: String| Err(GeneratorError::InvalidConfig(k, why));
        if !(2..=11).contains(&self.formation.len()) {
            return bad(
                "formation",
                format!("{} anchors, need 2..=11", self.formation.len()),
            );
        }
        if !(1..=11).contains(&self.opponent_formation.len()) {
            return bad(
                "opponent_formation",
                format!("{} anchors, need 1..=11", self.opponent_formation.len()),
            );
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return bad("jitter_sigma", format!("{}", self.jitter_sigma));
        }
        if !(0.0..1.0).contains(&self.epsilon) && self.epsilon != 1.0 {
            return bad("epsilon", format!("{} not in [0, 1]", self.epsilon));
        }
        if !(self.beta > 0.0) {
            return bad("beta", format!("{} must be positive", self.beta));
        }
        if self.n_teams == 0 {
            return bad("n_teams", "must be ≥ 1".into());
        }
        if !(0.0..=crate::state::MAX_SPEED).contains(&self.max_speed) {
            return bad("max_speed", format!("{}", self.max_speed));
        }
        if !(0.0..=crate::state::MAX_ACCELERATION).contains(&self.max_acceleration) {
            return bad("max_acceleration", format!("{}", self.max_acceleration));
        }
        if !(0.0..=1.0).contains(&self.success.base) {
            return bad("success.base", format!("{}", self.success.base));
        }
        if self
            .formation
            .iter()
            .all(|a| self.passer_weight(a.role) <= 0.0)
        {
            return bad("passer_weights", "no role can pass".into());
        }
        Ok(())
    }

    fn passer_weight(&self, role: Role) -> f64 {
        self.passer_weights.get(&role).copied().unwrap_or(1.0)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn attacker_id(team: usize, slot: usize) -> PlayerId {
    PlayerId((team as u32 + 1) * 100 + slot as u32 + 1)
}

pub fn defender_id(team: usize, slot: usize) -> PlayerId {
    PlayerId(10_000 + (team as u32 + 1) * 100 + slot as u32 + 1)
}

fn random_vector<R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> Vec2 {
    let r = rng.random_range(0.0..=max_norm);
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    [r * a.cos(), r * a.sin()]
}

/// One unlabeled snapshot (receiver not yet chosen).
pub fn generate_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> GameState {
    generate_state_on(cfg, &PitchSpec::default(), rng)
}

pub fn generate_state_on<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    pitch: &PitchSpec,
    rng: &mut R,
) -> GameState {
    let team = rng.random_range(0..cfg.n_teams);
    let jitter = Normal::new(0.0, cfg.jitter_sigma.max(f64::MIN_POSITIVE)).expect("σ ≥ 0");
    let place = |x: f64, y: f64, rng: &mut R| -> Vec2 {
        if cfg.jitter_sigma == 0.0 {
            return pitch.clamp([x, y]);
        }
        pitch.clamp([x + jitter.sample(rng), y + jitter.sample(rng)])
    };
    let mut attackers = Vec::with_capacity(cfg.formation.len());
    for (slot, a) in cfg.formation.iter().enumerate() {
        let pos = place(a.x, a.y, rng);
        let vel = random_vector(rng, cfg.max_speed);
        let acc = random_vector(rng, cfg.max_acceleration);
        attackers.push(PlayerState {
            id: attacker_id(team, slot),
            pos,
            vel,
            acc,
            role: a.role,
        });
    }
    let mut defenders = Vec::with_capacity(cfg.opponent_formation.len());
    for (slot, a) in cfg.opponent_formation.iter().enumerate() {
        let pos = place(a[0], a[1], rng);
        let vel = random_vector(rng, cfg.max_speed);
        let acc = random_vector(rng, cfg.max_acceleration);
        defenders.push(PlayerState {
            id: defender_id(team, slot),
            pos,
            vel,
            acc,
            role: Role::Unknown,
        });
    }
    let weights: Vec<f64> = attackers
        .iter()
        .map(|p| cfg.passer_weight(p.role))
        .collect();
    let passer = weighted_index(&weights, rng);
    // the ball sits just off the passer's feet so the facing direction is defined
    let off = rng.random_range(0.3..1.0);
    let ang = rng.random_range(0.0..std::f64::consts::TAU);
    let pp = attackers[passer].pos;
    let ball = [pp[0] + off * ang.cos(), pp[1] + off * ang.sin()];
    GameState {
        frame_id: 0,
        timestamp: 0.0,
        passer_id: attackers[passer].id,
        attackers,
        defenders,
        ball,
        receiver_id: None,
        pass_successful: None,
        pass_label: None,
    }
}

fn weighted_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Expert utility of every candidate receiver, in attacker order (passer skipped).
pub fn expert_utilities(
    state: &GameState,
    cfg: &GeneratorConfig,
    geometry: &GeometryConfig,
    pitch: &PitchSpec,
) -> Vec<(PlayerId, f64)> {
    let passer = state.passer();
    let goal = pitch.attacked_goal();
    let w = &cfg.utility;
    state
        .attackers
        .iter()
        .filter(|p| p.id != state.passer_id)
        .map(|p| {
            let progress = dist(passer.pos, goal) - dist(p.pos, goal);
            let lane = lane_traffic(
                passer.pos,
                p.pos,
                &state.defenders,
                geometry.cone_width,
                geometry.occlusion_radius,
            ) as f64;
            let pressure = pressure_count(p.pos, &state.defenders, geometry.pressure_radius) as f64;
            let d = dist(passer.pos, p.pos);
            let u = w.progress * progress
                - w.lane * lane
                - w.pressure * pressure
                - w.long_pass * (d - w.long_threshold).max(0.0);
            (p.id, u)
        })
        .collect()
}

/// Samples the expert's receiver and the pass outcome.
pub fn expert_choice<R: Rng + ?Sized>(
    state: &GameState,
    cfg: &GeneratorConfig,
    geometry: &GeometryConfig,
    pitch: &PitchSpec,
    rng: &mut R,
) -> (PlayerId, bool) {
    let utils = expert_utilities(state, cfg, geometry, pitch);
    let noisy = rng.random::<f64>() < cfg.epsilon;
    let receiver = if noisy {
        utils.choose(rng).expect("at least one candidate").0
    } else {
        let max = utils.iter().map(|u| u.1).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = utils
            .iter()
            .map(|u| {
                let z = cfg.beta * (u.1 - max);
                if z.is_finite() {
                    z.exp()
                } else {
                    0.0
                }
            })
            .collect();
        utils[weighted_index(&weights, rng)].0
    };
    let passer = state.passer();
    let target = state.attacker(receiver).expect("candidate is an attacker");
    let lane = lane_traffic(
        passer.pos,
        target.pos,
        &state.defenders,
        geometry.cone_width,
        geometry.occlusion_radius,
    );
    let p = cfg.success.probability(lane, dist(passer.pos, target.pos));
    let success = rng.random::<f64>() < p;
    (receiver, success)
}

/// RNG for pass `index`: one ChaCha stream per pass, so generation order is irrelevant.
pub fn pass_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A fully labeled snapshot for pass `index`.
pub fn generate_labeled(
    cfg: &GeneratorConfig,
    geometry: &GeometryConfig,
    pitch: &PitchSpec,
    index: usize,
) -> GameState {
    let mut rng = pass_rng(cfg.seed, index as u64);
    let mut s = generate_state_on(cfg, pitch, &mut rng);
    let (receiver, success) = expert_choice(&s, cfg, geometry, pitch, &mut rng);
    let d = dist(s.passer().pos, s.attacker(receiver).unwrap().pos);
    s.frame_id = index as u64;
    s.timestamp = index as f64 * 2.0;
    s.receiver_id = Some(receiver);
    s.pass_successful = Some(success);
    s.pass_label = Some(PassLabel::from_distance(d));
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub generator: GeneratorConfig,
    pub geometry: GeometryConfig,
    pub pitch: PitchSpec,
    pub n_passes: usize,
    pub successful: usize,
    pub label_counts: BTreeMap<PassLabel, usize>,
}

impl Manifest {
    pub fn label_fraction(&self, label: PassLabel) -> f64 {
        self.label_counts.get(&label).copied().unwrap_or(0) as f64 / self.n_passes.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub states: Vec<GameState>,
    pub manifest: Manifest,
}

pub fn generate_dataset(
    cfg: &GeneratorConfig,
    geometry: &GeometryConfig,
    pitch: &PitchSpec,
) -> Result<Dataset, GeneratorError> {
    cfg.validate()?;
    if cfg.n_passes == 0 {
        return Err(GeneratorError::InvalidConfig(
            "n_passes",
            "must be ≥ 1".into(),
        ));
    }
    let states: Vec<GameState> = (0..cfg.n_passes)
        .into_par_iter()
        .map(|i| generate_labeled(cfg, geometry, pitch, i))
        .collect();
    let mut label_counts = BTreeMap::new();
    for s in &states {
        *label_counts.entry(s.pass_label.unwrap()).or_insert(0) += 1;
    }
    let successful = states
        .iter()
        .filter(|s| s.pass_successful == Some(true))
        .count();
    let manifest = Manifest {
        schema_version: crate::snapshot::SCHEMA_VERSION,
        config_hash: cfg.hash(),
        generator: cfg.clone(),
        geometry: *geometry,
        pitch: *pitch,
        n_passes: states.len(),
        successful,
        label_counts,
    };
    Ok(Dataset { states, manifest })
}

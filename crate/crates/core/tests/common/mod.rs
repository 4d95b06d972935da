#![allow(dead_code)]

use passgraph::graph::FeatureScaler;
use passgraph::{
    build_graph, GameState, GeometryConfig, PassGraph, PitchSpec, PlayerId, PlayerState, Role,
};
use rand::Rng;

/// Random valid snapshot with `n_att` attackers and `n_def` defenders; the
/// receiver is a random non-passer attacker.
pub fn random_state<R: Rng>(rng: &mut R, n_att: usize, n_def: usize) -> GameState {
    let pitch = PitchSpec::default();
    let player = |id: u32, rng: &mut R| {
        let mut p = PlayerState::new(
            id,
            [
                rng.random_range(1.0..pitch.length - 1.0),
                rng.random_range(1.0..pitch.width - 1.0),
            ],
        )
        .with_vel([rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
        .with_acc([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        p.role = Role::Midfielder;
        p
    };
    let attackers: Vec<PlayerState> = (0..n_att).map(|i| player(100 + i as u32, rng)).collect();
    let defenders: Vec<PlayerState> = (0..n_def).map(|i| player(500 + i as u32, rng)).collect();
    let p = rng.random_range(0..n_att);
    let mut r = rng.random_range(0..n_att - 1);
    if r >= p {
        r += 1;
    }
    let passer = attackers[p].pos;
    let bearing: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    GameState {
        frame_id: rng.random_range(0..1_000_000),
        timestamp: 0.0,
        ball: [
            passer[0] + 0.6 * bearing.cos(),
            passer[1] + 0.6 * bearing.sin(),
        ],
        passer_id: attackers[p].id,
        receiver_id: Some(attackers[r].id),
        pass_successful: Some(true),
        pass_label: None,
        attackers,
        defenders,
    }
}

pub fn scaled_graph(state: &GameState) -> PassGraph {
    let pitch = PitchSpec::default();
    let g = build_graph(state, &GeometryConfig::default(), &pitch).expect("valid state");
    FeatureScaler::for_pitch(&pitch).apply(&g)
}

/// Probability contract for one forward output: candidates sum to 1, passer exactly 0.
pub fn softmax_contract(graph: &PassGraph, probs: &[f64]) -> Result<(), String> {
    if probs[graph.passer_index] != 0.0 {
        return Err(format!("passer probability {}", probs[graph.passer_index]));
    }
    let sum: f64 = graph.candidates().iter().map(|&c| probs[c]).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("candidate probabilities sum to {sum}"));
    }
    Ok(())
}

pub fn player_index(state: &GameState, id: PlayerId) -> usize {
    state.attackers.iter().position(|a| a.id == id).unwrap()
}

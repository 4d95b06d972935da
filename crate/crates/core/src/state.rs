//! Match snapshots: players, the ball and the pass being played.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pitch::{norm, PitchSpec, Vec2};

pub const MAX_SPEED: f64 = 13.0;
pub const MAX_ACCELERATION: f64 = 12.0;
/// Positions may sit this far outside the touchlines (run-offs, throw-ins).
pub const POSITION_PAD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u32);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Goalkeeper,
    Defender,
    Midfielder,
    Winger,
    Forward,
    #[default]
    Unknown,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Goalkeeper,
        Role::Defender,
        Role::Midfielder,
        Role::Winger,
        Role::Forward,
        Role::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Goalkeeper => "goalkeeper",
            Role::Defender => "defender",
            Role::Midfielder => "midfielder",
            Role::Winger => "winger",
            Role::Forward => "forward",
            Role::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pass categories by length, used for stratified reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassLabel {
    Short,
    Medium,
    Long,
}

impl PassLabel {
    pub const SHORT_MAX: f64 = 15.0;
    pub const MEDIUM_MAX: f64 = 30.0;

    pub fn from_distance(d: f64) -> Self {
        if d < Self::SHORT_MAX {
            PassLabel::Short
        } else if d < Self::MEDIUM_MAX {
            PassLabel::Medium
        } else {
            PassLabel::Long
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PassLabel::Short => "short",
            PassLabel::Medium => "medium",
            PassLabel::Long => "long",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub id: PlayerId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
    pub role: Role,
}

impl PlayerState {
    pub fn new(id: u32, pos: Vec2) -> Self {
        Self {
            id: PlayerId(id),
            pos,
            vel: [0.0, 0.0],
            acc: [0.0, 0.0],
            role: Role::Unknown,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_vel(mut self, vel: Vec2) -> Self {
        self.vel = vel;
        self
    }

    pub fn with_acc(mut self, acc: Vec2) -> Self {
        self.acc = acc;
        self
    }

    /// Scales velocity and acceleration down to the physical ceilings.
    pub fn clamp_kinematics(&mut self) {
        self.vel = clamp_magnitude(self.vel, MAX_SPEED);
        self.acc = clamp_magnitude(self.acc, MAX_ACCELERATION);
    }
}

pub(crate) fn clamp_magnitude(v: Vec2, max: f64) -> Vec2 {
    let m = norm(v);
    if m > max {
        let s = max / m;
        [v[0] * s, v[1] * s]
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("attacker count {0} outside 2..=11")]
    AttackerCount(usize),
    #[error("defender count {0} outside 1..=11")]
    DefenderCount(usize),
    #[error("passer {0} appears {1} times among attackers")]
    PasserCount(PlayerId, usize),
    #[error("receiver {0} is the passer")]
    ReceiverIsPasser(PlayerId),
    #[error("receiver {0} is not an attacker")]
    ReceiverNotAttacker(PlayerId),
    #[error("player id {0} used more than once")]
    DuplicateId(PlayerId),
    #[error("player {0} at ({1:.2}, {2:.2}) lies outside the padded pitch")]
    OutOfBounds(PlayerId, f64, f64),
    #[error("ball at ({0:.2}, {1:.2}) lies outside the padded pitch")]
    BallOutOfBounds(f64, f64),
    #[error("non-finite value on player {0}")]
    NonFinite(PlayerId),
    #[error("player {0} exceeds kinematic limits")]
    KinematicLimit(PlayerId),
}

/// One synchronized snapshot at the moment a pass is released.
///
/// Coordinates are in meters with the attacking team playing towards +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub frame_id: u64,
    pub timestamp: f64,
    pub attackers: Vec<PlayerState>,
    pub defenders: Vec<PlayerState>,
    pub ball: Vec2,
    pub passer_id: PlayerId,
    pub receiver_id: Option<PlayerId>,
    pub pass_successful: Option<bool>,
    pub pass_label: Option<PassLabel>,
}

impl GameState {
    pub fn validate(&self, pitch: &PitchSpec) -> Result<(), StateError> {
        let na = self.attackers.len();
        if !(2..=11).contains(&na) {
            return Err(StateError::AttackerCount(na));
        }
        let nd = self.defenders.len();
        if !(1..=11).contains(&nd) {
            return Err(StateError::DefenderCount(nd));
        }
        let mut seen = HashSet::new();
        for p in self.attackers.iter().chain(&self.defenders) {
            if !seen.insert(p.id) {
                return Err(StateError::DuplicateId(p.id));
            }
            let finite = p
                .pos
                .iter()
                .chain(&p.vel)
                .chain(&p.acc)
                .all(|v| v.is_finite());
            if !finite {
                return Err(StateError::NonFinite(p.id));
            }
            if !pitch.contains_padded(p.pos, POSITION_PAD) {
                return Err(StateError::OutOfBounds(p.id, p.pos[0], p.pos[1]));
            }
            // small slack so values clamped exactly at the limit pass
            if norm(p.vel) > MAX_SPEED * (1.0 + 1e-12)
                || norm(p.acc) > MAX_ACCELERATION * (1.0 + 1e-12)
            {
                return Err(StateError::KinematicLimit(p.id));
            }
        }
        if !self.ball.iter().all(|v| v.is_finite())
            || !pitch.contains_padded(self.ball, POSITION_PAD)
        {
            return Err(StateError::BallOutOfBounds(self.ball[0], self.ball[1]));
        }
        let passers = self
            .attackers
            .iter()
            .filter(|p| p.id == self.passer_id)
            .count();
        if passers != 1 {
            return Err(StateError::PasserCount(self.passer_id, passers));
        }
        if let Some(r) = self.receiver_id {
            if r == self.passer_id {
                return Err(StateError::ReceiverIsPasser(r));
            }
            if !self.attackers.iter().any(|p| p.id == r) {
                return Err(StateError::ReceiverNotAttacker(r));
            }
        }
        Ok(())
    }

    pub fn passer(&self) -> &PlayerState {
        self.attackers
            .iter()
            .find(|p| p.id == self.passer_id)
            .expect("validated state has a passer")
    }

    pub fn passer_index(&self) -> Option<usize> {
        self.attackers.iter().position(|p| p.id == self.passer_id)
    }

    pub fn attacker(&self, id: PlayerId) -> Option<&PlayerState> {
        self.attackers.iter().find(|p| p.id == id)
    }

    /// Clamps every player's kinematics to the physical ceilings. Applied on ingestion.
    pub fn clamp_kinematics(&mut self) {
        for p in self.attackers.iter_mut().chain(self.defenders.iter_mut()) {
            p.clamp_kinematics();
        }
    }

    /// Rotates the scene by 180° about the pitch center. Used to bring a team
    /// attacking right→left into the canonical left→right frame.
    pub fn rotated_half_turn(&self, pitch: &PitchSpec) -> GameState {
        let flip = |p: Vec2| [pitch.length - p[0], pitch.width - p[1]];
        let neg = |v: Vec2| [-v[0], -v[1]];
        let map = |players: &[PlayerState]| {
            players
                .iter()
                .map(|p| PlayerState {
                    pos: flip(p.pos),
                    vel: neg(p.vel),
                    acc: neg(p.acc),
                    ..p.clone()
                })
                .collect()
        };
        GameState {
            attackers: map(&self.attackers),
            defenders: map(&self.defenders),
            ball: flip(self.ball),
            ..self.clone()
        }
    }

    /// Reflects the scene across the pitch's long axis (y → width − y).
    pub fn mirrored(&self, pitch: &PitchSpec) -> GameState {
        let map = |players: &[PlayerState]| {
            players
                .iter()
                .map(|p| PlayerState {
                    pos: [p.pos[0], pitch.width - p.pos[1]],
                    vel: [p.vel[0], -p.vel[1]],
                    acc: [p.acc[0], -p.acc[1]],
                    ..p.clone()
                })
                .collect()
        };
        GameState {
            attackers: map(&self.attackers),
            defenders: map(&self.defenders),
            ball: [self.ball[0], pitch.width - self.ball[1]],
            ..self.clone()
        }
    }

    /// Shifts every position (players and ball) by `offset`.
    pub fn translated(&self, offset: Vec2) -> GameState {
        let shift = |p: Vec2| [p[0] + offset[0], p[1] + offset[1]];
        let map = |players: &[PlayerState]| {
            players
                .iter()
                .map(|p| PlayerState {
                    pos: shift(p.pos),
                    ..p.clone()
                })
                .collect()
        };
        GameState {
            attackers: map(&self.attackers),
            defenders: map(&self.defenders),
            ball: shift(self.ball),
            ..self.clone()
        }
    }
}

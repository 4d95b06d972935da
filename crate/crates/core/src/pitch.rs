//! Pitch dimensions and the coordinate normalization used for node features.

use serde::{Deserialize, Serialize};

/// Two-component vector in pitch meters (or m/s, m/s² for kinematics).
pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchSpec {
    pub length: f64,
    pub width: f64,
}

impl Default for PitchSpec {
    fn default() -> Self {
        Self {
            length: 105.0,
            width: 68.0,
        }
    }
}

impl PitchSpec {
    pub fn new(length: f64, width: f64) -> Result<Self, PitchError> {
        let pitch = Self { length, width };
        pitch.validate()?;
        Ok(pitch)
    }

    pub fn validate(&self) -> Result<(), PitchError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(PitchError::InvalidDimension("length", self.length));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(PitchError::InvalidDimension("width", self.width));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        self.length.hypot(self.width)
    }

    pub fn center(&self) -> Vec2 {
        [0.5 * self.length, 0.5 * self.width]
    }

    /// Center of the goal the attacking team is shooting at (attack runs towards +x).
    pub fn attacked_goal(&self) -> Vec2 {
        [self.length, 0.5 * self.width]
    }

    /// Maps pitch meters (origin at the defended goal line corner) to `[-1, 1]²`.
    pub fn normalize(&self, pos: Vec2) -> Vec2 {
        [
            2.0 * pos[0] / self.length - 1.0,
            2.0 * pos[1] / self.width - 1.0,
        ]
    }

    pub fn denormalize(&self, unit: Vec2) -> Vec2 {
        [
            (unit[0] + 1.0) * 0.5 * self.length,
            (unit[1] + 1.0) * 0.5 * self.width,
        ]
    }

    /// True if `pos` lies inside the pitch grown by `pad` meters on every side.
    pub fn contains_padded(&self, pos: Vec2, pad: f64) -> bool {
        pos[0] >= -pad
            && pos[0] <= self.length + pad
            && pos[1] >= -pad
            && pos[1] <= self.width + pad
    }

    pub fn clamp(&self, pos: Vec2) -> Vec2 {
        [
            pos[0].clamp(0.0, self.length),
            pos[1].clamp(0.0, self.width),
        ]
    }
}

/// Free-function form of [`PitchSpec::normalize`].
pub fn normalize_position(pos: Vec2, pitch: &PitchSpec) -> Vec2 {
    pitch.normalize(pos)
}

pub fn denormalize_position(unit: Vec2, pitch: &PitchSpec) -> Vec2 {
    pitch.denormalize(unit)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PitchError {
    #[error("pitch {0} must be positive and finite, got {1}")]
    InvalidDimension(&'static str, f64),
}

pub(crate) fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

//! Velocity and acceleration estimation from fixed-rate tracking positions.
//!
//! Velocity is the central finite difference of position (one-sided at the
//! series ends). Acceleration is the central difference of a centered moving
//! average of that velocity, which suppresses the noise that double
//! differencing 25 Hz positions would otherwise amplify.

use serde::{Deserialize, Serialize};

use crate::pitch::Vec2;
use crate::state::{clamp_magnitude, PlayerId, MAX_ACCELERATION, MAX_SPEED};

pub const DEFAULT_RATE_HZ: f64 = 25.0;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingFrame {
    pub timestamp: f64,
    pub positions: Vec<(PlayerId, Vec2)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSeries {
    pub rate_hz: f64,
    pub frames: Vec<TrackingFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub id: PlayerId,
    pub vel: Vec2,
    pub acc: Vec2,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("series has {0} frames, need at least 3")]
    SeriesTooShort(usize),
    #[error("frame rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("timestamps not strictly increasing at frame {0}")]
    NonIncreasingTimestamps(usize),
    #[error("frame {0} does not list the same players as frame 0")]
    InconsistentPlayers(usize),
    #[error("smoothing window must be at least 1")]
    InvalidWindow,
}

impl FrameSeries {
    pub fn new(rate_hz: f64, frames: Vec<TrackingFrame>) -> Result<Self, KinematicsError> {
        let s = Self { rate_hz, frames };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(KinematicsError::InvalidRate(self.rate_hz));
        }
        for (i, w) in self.frames.windows(2).enumerate() {
            if !(w[1].timestamp > w[0].timestamp) {
                return Err(KinematicsError::NonIncreasingTimestamps(i + 1));
            }
        }
        if let Some(first) = self.frames.first() {
            for (i, f) in self.frames.iter().enumerate().skip(1) {
                let same = f.positions.len() == first.positions.len()
                    && f.positions
                        .iter()
                        .zip(&first.positions)
                        .all(|(a, b)| a.0 == b.0);
                if !same {
                    return Err(KinematicsError::InconsistentPlayers(i));
                }
            }
        }
        Ok(())
    }
}

/// Per-frame kinematics for every player, using the default 7-frame smoothing window.
pub fn compute_kinematics(series: &FrameSeries) -> Result<Vec<Vec<Kinematics>>, KinematicsError> {
    compute_kinematics_with_window(series, DEFAULT_SMOOTHING_WINDOW)
}

pub fn compute_kinematics_with_window(
    series: &FrameSeries,
    window: usize,
) -> Result<Vec<Vec<Kinematics>>, KinematicsError> {
    series.validate()?;
    let n = series.frames.len();
    if n < 3 {
        return Err(KinematicsError::SeriesTooShort(n));
    }
    if window == 0 {
        return Err(KinematicsError::InvalidWindow);
    }
    let dt = 1.0 / series.rate_hz;
    let players: Vec<PlayerId> = series.frames[0].positions.iter().map(|p| p.0).collect();
    let mut out: Vec<Vec<Kinematics>> = (0..n).map(|_| Vec::with_capacity(players.len())).collect();

    for (k, &id) in players.iter().enumerate() {
        let track: Vec<Vec2> = series.frames.iter().map(|f| f.positions[k].1).collect();
        let vel = differentiate(&track, dt);
        let smooth = moving_average(&vel, window);
        let acc = differentiate(&smooth, dt);
        for t in 0..n {
            out[t].push(Kinematics {
                id,
                vel: clamp_magnitude(vel[t], MAX_SPEED),
                acc: clamp_magnitude(acc[t], MAX_ACCELERATION),
            });
        }
    }
    Ok(out)
}

fn differentiate(xs: &[Vec2], dt: f64) -> Vec<Vec2> {
    let n = xs.len();
    let d = |a: Vec2, b: Vec2, h: f64| [(a[0] - b[0]) / h, (a[1] - b[1]) / h];
    (0..n)
        .map(|t| match t {
            0 => d(xs[1], xs[0], dt),
            t if t == n - 1 => d(xs[n - 1], xs[n - 2], dt),
            t => d(xs[t + 1], xs[t - 1], 2.0 * dt),
        })
        .collect()
}

/// Centered moving average; the window shrinks symmetrically at the ends.
fn moving_average(xs: &[Vec2], window: usize) -> Vec<Vec2> {
    let n = xs.len();
    let half = window / 2;
    (0..n)
        .map(|t| {
            let r = half.min(t).min(n - 1 - t);
            let slice = &xs[t - r..=t + r];
            let k = slice.len() as f64;
            let sx: f64 = slice.iter().map(|v| v[0]).sum();
            let sy: f64 = slice.iter().map(|v| v[1]).sum();
            [sx / k, sy / k]
        })
        .collect()
}

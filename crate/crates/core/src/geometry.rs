//! Passing-lane geometry: pressure counts, the signed re-orientation angle and
//! cone occlusion of a lane by defenders.

use serde::{Deserialize, Serialize};

use crate::pitch::{dist, dot, norm, sub, Vec2};
use crate::state::PlayerState;

/// Below this separation (meters) the ball gives no usable facing direction.
pub const FACING_EPS: f64 = 1e-6;
/// Direction the attacking team plays in the canonical frame.
pub const ATTACK_DIRECTION: Vec2 = [1.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Pressure radius R (m).
    pub pressure_radius: f64,
    /// Full angular width α of the passing cone (rad).
    pub cone_width: f64,
    /// Occlusion radius r_p of a defender (m).
    pub occlusion_radius: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            pressure_radius: 5.0,
            cone_width: 0.35,
            occlusion_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("geometry.{0} invalid: {1}")]
    InvalidConfig(&'static str, f64),
    #[error("passer and ball coincide, facing direction undefined")]
    DegenerateFacing,
    #[error("target coincides with passer")]
    DegenerateTarget,
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.pressure_radius > 0.0 && self.pressure_radius.is_finite()) {
            return Err(GeometryError::InvalidConfig(
                "pressure_radius",
                self.pressure_radius,
            ));
        }
        if !(self.cone_width > 0.0 && self.cone_width < std::f64::consts::PI) {
            return Err(GeometryError::InvalidConfig("cone_width", self.cone_width));
        }
        if !(self.occlusion_radius > 0.0 && self.occlusion_radius.is_finite()) {
            return Err(GeometryError::InvalidConfig(
                "occlusion_radius",
                self.occlusion_radius,
            ));
        }
        Ok(())
    }
}

/// Number of defenders within `radius` of `pos`, boundary inclusive.
pub fn pressure_count(pos: Vec2, defenders: &[PlayerState], radius: f64) -> usize {
    defenders
        .iter()
        .filter(|d| dist(d.pos, pos) <= radius)
        .count()
}

/// Signed angle from facing direction `u` to vector `w`, in (−π, π].
pub fn signed_angle_between(u: Vec2, w: Vec2) -> f64 {
    (u[0] * w[1] - u[1] * w[0]).atan2(dot(u, w))
}

/// Signed angle between the passer's facing direction (ball → passer) and the
/// vector from passer to target.
pub fn signed_angle(passer: Vec2, ball: Vec2, target: Vec2) -> Result<f64, GeometryError> {
    let w = sub(target, passer);
    if norm(w) == 0.0 {
        return Err(GeometryError::DegenerateTarget);
    }
    let f = sub(passer, ball);
    let n = norm(f);
    if n < FACING_EPS {
        return Err(GeometryError::DegenerateFacing);
    }
    Ok(signed_angle_between([f[0] / n, f[1] / n], w))
}

/// Unit facing direction of the passer. Falls back to the passer's velocity
/// when the ball sits on the passer, then to the attack direction.
pub fn facing_direction(passer: &PlayerState, ball: Vec2) -> Vec2 {
    let f = sub(passer.pos, ball);
    let n = norm(f);
    if n >= FACING_EPS {
        return [f[0] / n, f[1] / n];
    }
    let s = norm(passer.vel);
    if s >= FACING_EPS {
        return [passer.vel[0] / s, passer.vel[1] / s];
    }
    ATTACK_DIRECTION
}

/// Whether a defender at `defender` obstructs the lane from `passer` to `target`.
///
/// The defender is a disc of radius `r_p`; it counts when the disc reaches into
/// the cone of full width `alpha` around the lane and no further than the lane
/// length plus `r_p`. A disc that covers the passer always counts.
pub fn occludes(passer: Vec2, target: Vec2, defender: Vec2, alpha: f64, r_p: f64) -> bool {
    let w = sub(target, passer);
    let t = sub(defender, passer);
    let wn = norm(w);
    let tn = norm(t);
    if tn <= r_p {
        return true;
    }
    if tn > wn + r_p {
        return false;
    }
    let cos = (dot(w, t) / (wn * tn)).clamp(-1.0, 1.0);
    let half_width = (r_p / tn).min(1.0).asin();
    cos.acos() - half_width <= 0.5 * alpha
}

/// Count of defenders occluding the lane from `passer` to `target`.
pub fn lane_traffic(
    passer: Vec2,
    target: Vec2,
    defenders: &[PlayerState],
    alpha: f64,
    r_p: f64,
) -> usize {
    defenders
        .iter()
        .filter(|d| occludes(passer, target, d.pos, alpha, r_p))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn def(pos: Vec2) -> PlayerState {
        PlayerState::new(100, pos)
    }

    #[test]
    fn pressure_empty_and_boundary() {
        assert_eq!(pressure_count([0.0, 0.0], &[], 5.0), 0);
        assert_eq!(pressure_count([10.0, 10.0], &[def([13.0, 14.0])], 5.0), 1);
        assert_eq!(pressure_count([10.0, 10.0], &[def([13.0, 14.1])], 5.0), 0);
    }

    #[test]
    fn angle_aligned_is_zero() {
        // ball behind the passer along -x gives u = (1, 0)
        assert_eq!(
            signed_angle([10.0, 0.0], [9.0, 0.0], [20.0, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn angle_quarter_turn() {
        let a = signed_angle([10.0, 0.0], [9.0, 0.0], [10.0, 1.0]).unwrap();
        assert_eq!(a, PI / 2.0);
    }

    #[test]
    fn angle_near_half_turn_takes_cross_sign() {
        let a = signed_angle_between([1.0, 0.0], [-1.0, -1e-9]);
        let oracle = (-1e-9f64).atan2(-1.0);
        assert_eq!(a, oracle);
        assert!((a - (-PI + 1e-9)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_facing_reported_and_fallbacks() {
        assert_eq!(
            signed_angle([1.0, 1.0], [1.0, 1.0], [5.0, 5.0]),
            Err(GeometryError::DegenerateFacing)
        );
        let p = PlayerState::new(1, [1.0, 1.0]).with_vel([0.0, 3.0]);
        assert_eq!(facing_direction(&p, [1.0, 1.0]), [0.0, 1.0]);
        let still = PlayerState::new(1, [1.0, 1.0]);
        assert_eq!(facing_direction(&still, [1.0, 1.0]), ATTACK_DIRECTION);
    }

    #[test]
    fn lane_empty_and_midpoint() {
        assert_eq!(lane_traffic([0.0, 0.0], [20.0, 0.0], &[], 0.35, 0.5), 0);
        assert_eq!(
            lane_traffic([0.0, 0.0], [20.0, 10.0], &[def([10.0, 5.0])], 0.35, 1e-3),
            1
        );
    }

    #[test]
    fn lane_respects_length_bound_and_apex() {
        // beyond target + r_p
        assert_eq!(
            lane_traffic([0.0, 0.0], [10.0, 0.0], &[def([10.6, 0.0])], 0.35, 0.5),
            0
        );
        assert_eq!(
            lane_traffic([0.0, 0.0], [10.0, 0.0], &[def([10.5, 0.0])], 0.35, 0.5),
            1
        );
        // behind the passer but engulfing the apex
        assert_eq!(
            lane_traffic([0.0, 0.0], [10.0, 0.0], &[def([-0.3, 0.0])], 0.35, 0.5),
            1
        );
        // behind the passer and clear
        assert_eq!(
            lane_traffic([0.0, 0.0], [10.0, 0.0], &[def([-3.0, 0.0])], 0.35, 0.5),
            0
        );
    }

    #[test]
    fn config_validation() {
        GeometryConfig::default().validate().unwrap();
        let bad = GeometryConfig {
            cone_width: PI,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn point() -> impl Strategy<Value = Vec2> {
        (0.0..105.0f64, 0.0..68.0f64).prop_map(|(x, y)| [x, y])
    }

    proptest! {
        #[test]
        fn pressure_matches_naive_loop(p in point(), ds in proptest::collection::vec(point(), 5)) {
            let defenders: Vec<_> = ds.iter().map(|&d| def(d)).collect();
            let mut naive = 0;
            for d in &ds {
                let dx = d[0] - p[0];
                let dy = d[1] - p[1];
                if (dx * dx + dy * dy).sqrt() <= 5.0 { naive += 1; }
            }
            prop_assert_eq!(pressure_count(p, &defenders, 5.0), naive);
        }

        #[test]
        fn lane_monotone_in_width_and_radius(
            p in point(), t in point(), ds in proptest::collection::vec(point(), 8),
            a1 in 0.05..1.5f64, a2 in 0.05..1.5f64, r1 in 0.1..2.0f64, r2 in 0.1..2.0f64,
        ) {
            prop_assume!(dist(p, t) > 1e-3);
            let defenders: Vec<_> = ds.iter().map(|&d| def(d)).collect();
            let (alo, ahi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let (rlo, rhi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(lane_traffic(p, t, &defenders, alo, rlo) <= lane_traffic(p, t, &defenders, ahi, rlo));
            prop_assert!(lane_traffic(p, t, &defenders, alo, rlo) <= lane_traffic(p, t, &defenders, alo, rhi));
        }

        #[test]
        fn signed_angle_matches_atan2(p in point(), b in point(), t in point()) {
            prop_assume!(dist(p, b) > 1e-3 && dist(p, t) > 1e-3);
            let ux = p[0] - b[0];
            let uy = p[1] - b[1];
            let n = (ux * ux + uy * uy).sqrt();
            let (ux, uy) = (ux / n, uy / n);
            let (wx, wy) = (t[0] - p[0], t[1] - p[1]);
            let oracle = (ux * wy - uy * wx).atan2(ux * wx + uy * wy);
            let got = signed_angle(p, b, t).unwrap();
            prop_assert!((got - oracle).abs() <= 1e-12);
            prop_assert!(got > -PI && got <= PI);
        }
    }
}

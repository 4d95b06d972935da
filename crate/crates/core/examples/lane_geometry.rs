//! Lane occlusion, pressure and facing-relative angles on a hand-placed scene.

use passgraph::geometry::{lane_traffic, occludes, pressure_count, signed_angle};
use passgraph::{GeometryConfig, PlayerState};

fn main() {
    let g = GeometryConfig::default();
    let passer = [40.0, 34.0];
    let ball = [39.4, 34.0];
    let defenders = vec![
        PlayerState::new(21, [50.0, 34.3]),
        PlayerState::new(22, [50.0, 37.0]),
        PlayerState::new(23, [43.0, 31.0]),
        PlayerState::new(24, [61.0, 34.0]),
    ];
    println!(
        "cone width {:.1} deg, occlusion radius {} m, pressure radius {} m",
        g.cone_width.to_degrees(),
        g.occlusion_radius,
        g.pressure_radius
    );
    for target in [[60.0, 34.0], [60.0, 44.0], [45.0, 20.0], [30.0, 34.0]] {
        let blockers: Vec<u32> = defenders
            .iter()
            .filter(|d| occludes(passer, target, d.pos, g.cone_width, g.occlusion_radius))
            .map(|d| d.id.0)
            .collect();
        let theta = signed_angle(passer, ball, target).expect("non-degenerate");
        println!(
            "target ({:>4.1}, {:>4.1}): angle {:+7.2} deg, lane traffic {} {:?}, pressure {}",
            target[0],
            target[1],
            theta.to_degrees(),
            lane_traffic(passer, target, &defenders, g.cone_width, g.occlusion_radius),
            blockers,
            pressure_count(target, &defenders, g.pressure_radius)
        );
    }
}

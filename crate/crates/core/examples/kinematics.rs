//! Velocity and acceleration from a 25 Hz position trace.

use passgraph::kinematics::{compute_kinematics, FrameSeries, TrackingFrame, DEFAULT_RATE_HZ};
use passgraph::PlayerId;

fn main() -> passgraph::Result<()> {
    // one player accelerating along x at 2 m/s² from 1 m/s, with a slight weave in y
    let frames: Vec<TrackingFrame> = (0..50)
        .map(|k| {
            let t = k as f64 / DEFAULT_RATE_HZ;
            TrackingFrame {
                timestamp: t,
                positions: vec![(
                    PlayerId(7),
                    [10.0 + t + t * t, 34.0 + 0.3 * (2.0 * t).sin()],
                )],
            }
        })
        .collect();
    let series = FrameSeries {
        rate_hz: DEFAULT_RATE_HZ,
        frames,
    };
    let kin = compute_kinematics(&series)?;
    println!("frame     t    vx    vy    ax    ay   (true vx = 1 + 2t, ax = 2)");
    for k in (0..kin.len()).step_by(7) {
        let p = kin[k][0];
        println!(
            "{k:>5} {:5.2} {:5.2} {:5.2} {:5.2} {:5.2}",
            series.frames[k].timestamp, p.vel[0], p.vel[1], p.acc[0], p.acc[1]
        );
    }
    Ok(())
}

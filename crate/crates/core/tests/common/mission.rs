use std::time::{Duration, Instant};

use tdsim::scenario::parse_scenario;

use super::repo_path;

pub struct MissionReport {
    pub wheel_momentum_start: f64,
    pub wheel_momentum_end: f64,
    pub max_attitude_deg: f64,
    /// Worst `|τ·B| / (|τ| |B|)` over steps with a nonzero torque.
    pub max_torque_alignment: f64,
    pub active_steps: usize,
    pub elapsed: Duration,
}

/// Runs the shipped mission with the magnetic loop on or off.
pub fn run_mission(enabled: bool) -> MissionReport {
    let path = repo_path("scenarios/spacecraft_mission.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let text = if enabled { text } else { text.replace(r#""enabled": true"#, r#""enabled": false"#) };
    let start = Instant::now();
    let out = parse_scenario(&text, path.parent().unwrap()).unwrap().run().unwrap();
    let elapsed = start.elapsed();
    let ch = |n: &str| out.channel(n).unwrap();
    let h = ch("sc.wheel_momentum_abs");
    let (mut align, mut active) = (0.0f64, 0);
    for i in 0..out.len() {
        let tq = [ch("desat.torque.x")[i], ch("desat.torque.y")[i], ch("desat.torque.z")[i]];
        let b = [ch("magnetometer.out.x")[i], ch("magnetometer.out.y")[i], ch("magnetometer.out.z")[i]];
        let dot: f64 = tq.iter().zip(&b).map(|(x, y)| x * y).sum();
        let (nt, nb) = (tq.iter().map(|x| x * x).sum::<f64>().sqrt(), b.iter().map(|x| x * x).sum::<f64>().sqrt());
        if nt > 0.0 {
            active += 1;
            align = align.max(dot.abs() / (nt * nb));
        }
    }
    MissionReport {
        wheel_momentum_start: h[0],
        wheel_momentum_end: h[h.len() - 1],
        max_attitude_deg: ch("att.angle").iter().fold(0.0, |a: f64, b| a.max(*b)).to_degrees(),
        max_torque_alignment: align,
        active_steps: active,
        elapsed,
    }
}

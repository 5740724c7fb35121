use std::f64::consts::PI;

use tdsim::environment::{MU_EARTH, R_EARTH};
use tdsim::scenario::parse_scenario;

fn orbit_scenario(host: &str, t_end: f64, dt: f64, r0: f64, v0: f64) -> String {
    format!(
        r#"{{"components": [
            {{"id": "host", "kind": "{host}"}},
            {{"id": "earth", "kind": "env.gravity", "params": {{"host": "host"}}}},
            {{"id": "sat", "kind": "motion", "params": {{"r0": [{r0}, 0, 0], "v0": [0, {vy}, {vz}]}},
              "inputs": {{"accel": "probe.world"}}}},
            {{"id": "at_sat", "kind": "frame", "inputs": {{"r": "sat.r"}}}},
            {{"id": "probe", "kind": "sensor", "params": {{"field": "earth"}}, "inputs": {{"frame": "at_sat"}}}},
            {{"id": "radius", "kind": "norm", "inputs": {{"in": "sat.r"}}}}],
          "sim": {{"dt": {dt}, "t_end": {t_end}, "record": ["sat.r", "radius.out"]}}}}"#,
        vy = v0 * 0.6,
        vz = v0 * 0.8,
    )
}

/// Worst relative radius change of a circular 500 km orbit over one period.
pub fn circular_orbit_drift(dt: f64) -> f64 {
    let r0 = R_EARTH + 500e3;
    let v0 = (MU_EARTH / r0).sqrt();
    let period = 2.0 * PI * (r0.powi(3) / MU_EARTH).sqrt();
    let out = parse_scenario(&orbit_scenario("frame", period, dt, r0, v0), ".".as_ref()).unwrap().run().unwrap();
    out.channel("radius.out").unwrap().iter().map(|r| (r / r0 - 1.0).abs()).fold(0.0, f64::max)
}

/// Same eccentric orbit with the field hosted on an inertial frame and on
/// the Greenwich frame; worst position difference (m).
pub fn greenwich_invariance(dt: f64, t_end: f64) -> f64 {
    let r0 = R_EARTH + 700e3;
    let v0 = 1.1 * (MU_EARTH / r0).sqrt();
    let a = parse_scenario(&orbit_scenario("frame", t_end, dt, r0, v0), ".".as_ref()).unwrap().run().unwrap();
    let b = parse_scenario(&orbit_scenario("frame.greenwich", t_end, dt, r0, v0), ".".as_ref()).unwrap().run().unwrap();
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let d: f64 = ["x", "y", "z"]
            .iter()
            .map(|c| {
                let ch = format!("sat.r.{c}");
                (a.channel(&ch).unwrap()[i] - b.channel(&ch).unwrap()[i]).powi(2)
            })
            .sum();
        worst = worst.max(d.sqrt());
    }
    worst
}

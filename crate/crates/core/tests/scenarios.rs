mod common;

use common::mission::run_mission;
use common::repo_path;
use tdsim::scenario::load_scenario;
use tdsim::SeriesTable;

fn run(name: &str) -> SeriesTable {
    load_scenario(&repo_path(&format!("scenarios/{name}"))).unwrap().run().unwrap()
}

#[test]
fn moving_ball_follows_drifting_field() {
    let out = run("moving_ball.json");
    let d = out.channel("rel.distance").unwrap();
    assert!(d.iter().all(|x| x.is_finite() && *x > 0.0));
    let fx = out.channel("field_frame.r.x").unwrap();
    assert!((fx[fx.len() - 1] - 0.5).abs() < 1e-12);
}

#[test]
fn vibration_test_opening_sweep() {
    let mut sc = load_scenario(&repo_path("scenarios/vibration_test.json")).unwrap();
    sc.sim.t_end = 400.0;
    let out = sc.run().unwrap();
    assert_eq!(out.len(), 8001);
    let w = out.channel("omega_x.out").unwrap();
    assert!(w.iter().all(|x| x.is_finite()));
    assert!(w.iter().any(|x| x.abs() > 1e-5));
    let panel = out.channel("sc.panel_a.mode0").unwrap();
    assert!(panel.iter().any(|x| x.abs() > 0.0));
}

#[test]
fn mission_desaturates_wheels() {
    let on = run_mission(true);
    let off = run_mission(false);
    assert!(on.wheel_momentum_end < 0.5 * off.wheel_momentum_end, "{} vs {}", on.wheel_momentum_end, off.wheel_momentum_end);
    assert!(on.max_attitude_deg < 0.5, "{}", on.max_attitude_deg);
    assert!(on.active_steps > 0);
    assert!(on.max_torque_alignment < 1e-12, "{}", on.max_torque_alignment);
    assert_eq!(off.active_steps, 0);
}

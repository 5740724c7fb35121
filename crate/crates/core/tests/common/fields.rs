use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsim::fields::{FieldFormula, VectorField};
use tdsim::frames::Pose;
use tdsim::scenario::load_scenario;

use super::repo_path;

/// Worst relative change of `½|V|² + a·k/|r|` in the shipped charged-balls run.
pub fn charged_balls_drift() -> (f64, usize) {
    let out = load_scenario(&repo_path("scenarios/charged_balls.json")).unwrap().run().unwrap();
    let e = out.channel("energy.out").unwrap();
    (e.iter().map(|x| ((x - e[0]) / e[0]).abs()).fold(0.0, f64::max), out.len())
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    UnitQuaternion::from_scaled_axis(axis.normalize() * rng.random_range(0.0..std::f64::consts::PI))
}

/// Rotating a sensor by `Q` must turn its reading of a covariant field into
/// `Q⁻¹` of the old one. Returns the worst absolute mismatch over `trials`
/// random hosts, sensor poses and rotations.
pub fn covariance_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = [
        VectorField::covariant(FieldFormula::Electrostatic { k: -1.0 }),
        VectorField::covariant(FieldFormula::Uniform { value: Vector3::new(0.3, -1.2, 0.7) }),
        VectorField::covariant(FieldFormula::Dipole { b0: 1.0, r_ref: 1.0, axis: Vector3::z() }),
    ];
    let mut worst = 0.0f64;
    for i in 0..trials {
        let field = &fields[i % fields.len()];
        let host = Pose { r: Vector3::new(rng.random_range(-1.0..1.0), 0.2, -0.4), q: random_rotation(&mut rng), ..Pose::identity() };
        let p = Vector3::new(rng.random_range(1.5..3.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let sensor = Pose { r: p, q: random_rotation(&mut rng), ..Pose::identity() };
        let turn = random_rotation(&mut rng);
        let rotated = Pose { q: sensor.q * turn, ..sensor };
        let before = field.sense(&host, &sensor).unwrap();
        let after = field.sense(&host, &rotated).unwrap();
        worst = worst.max((after - turn.inverse() * before).norm() / before.norm().max(1.0));
    }
    worst
}

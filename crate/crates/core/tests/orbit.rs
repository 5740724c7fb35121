mod common;

use common::orbit::{circular_orbit_drift, greenwich_invariance};

#[test]
fn circular_orbit_keeps_radius() {
    let d = circular_orbit_drift(1.0);
    assert!(d < 1e-6, "{d}");
}

#[test]
fn greenwich_hosted_gravity_matches_inertial() {
    let d = greenwich_invariance(1.0, 3000.0);
    assert!(d < 1e-8, "{d} m");
}

//! Closed-form Earth models: central gravity, dipole magnetic field,
//! exponential atmosphere, free-molecular drag and the rotating Greenwich
//! frame.

use nalgebra::{UnitQuaternion, Vector3};

use crate::frames::{pose_inputs, pose_outputs, pose_values, read_pose, Pose};
use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// Earth gravitational parameter (m³/s²).
pub const MU_EARTH: f64 = 3.986004418e14;
/// Mean Earth radius used as the dipole reference radius (m).
pub const R_EARTH: f64 = 6.371e6;
/// Equatorial surface induction of the dipole (T).
pub const B0_EARTH: f64 = 3.12e-5;
/// Sidereal spin rate (rad/s).
pub const OMEGA_EARTH: f64 = 7.2921159e-5;
/// Density at the reference altitude (kg/m³).
pub const RHO0: f64 = 3.8e-12;
/// Reference altitude (m).
pub const H0: f64 = 400e3;
/// Density scale height (m).
pub const SCALE_HEIGHT: f64 = 59e3;

/// `g = -μ r / |r|³`; `None` at the origin.
pub fn gravity(mu: f64, r: &Vector3<f64>) -> Option<Vector3<f64>> {
    let d = r.norm();
    (d > 0.0).then(|| -mu * r / (d * d * d))
}

/// `B = (B0 R³ / |r|³)(3(m̂·r̂)r̂ − m̂)`; `None` at the origin.
pub fn dipole_b(b0: f64, r_ref: f64, axis: &Vector3<f64>, r: &Vector3<f64>) -> Option<Vector3<f64>> {
    let d = r.norm();
    if d == 0.0 {
        return None;
    }
    let m = axis.normalize();
    let u = r / d;
    Some(b0 * (r_ref / d).powi(3) * (3.0 * m.dot(&u) * u - m))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atmosphere {
    pub rho0: f64,
    pub h0: f64,
    pub scale_height: f64,
}

impl Default for Atmosphere {
    fn default() -> Self {
        Self { rho0: RHO0, h0: H0, scale_height: SCALE_HEIGHT }
    }
}

impl Atmosphere {
    pub fn density(&self, h: f64) -> f64 {
        self.rho0 * (-(h - self.h0) / self.scale_height).exp()
    }
}

/// `a = -½ ρ (C_d A / m) |v| v` for velocity `v` relative to the air.
pub fn drag_accel(rho: f64, v: &Vector3<f64>, cda_over_m: f64) -> Vector3<f64> {
    -0.5 * rho * cda_over_m * v.norm() * v
}

/// Earth-fixed frame spinning at `omega` about world z.
pub fn greenwich_pose(omega: f64, t: f64) -> Pose {
    Pose {
        r: Vector3::zeros(),
        q: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), omega * t),
        v: Vector3::zeros(),
        w: Vector3::new(0.0, 0.0, omega),
    }
}

/// Component `frame.greenwich`: outputs the Earth-fixed frame pose.
#[derive(Clone, Debug)]
pub struct GreenwichFrame {
    pub omega: f64,
}

impl Default for GreenwichFrame {
    fn default() -> Self {
        Self { omega: OMEGA_EARTH }
    }
}

impl Component for GreenwichFrame {
    fn kind(&self) -> &str {
        "frame.greenwich"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        Vec::new()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        pose_outputs("")
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(pose_values(&greenwich_pose(self.omega, ctx.t)).to_vec())
    }
}

/// Component `env.atmosphere`: density at the altitude of `frame.r` above a
/// sphere of radius `r_ref`, and the drag acceleration (world axes) for the
/// velocity relative to an atmosphere co-rotating at `omega`.
#[derive(Clone, Debug)]
pub struct AtmosphereNode {
    pub atmosphere: Atmosphere,
    pub r_ref: f64,
    pub cda_over_m: f64,
    pub omega: f64,
}

impl Default for AtmosphereNode {
    fn default() -> Self {
        Self { atmosphere: Atmosphere::default(), r_ref: R_EARTH, cda_over_m: 0.0, omega: 0.0 }
    }
}

impl Component for AtmosphereNode {
    fn kind(&self) -> &str {
        "env.atmosphere"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        let mut p = pose_inputs("frame");
        p[0].required = true;
        p.push(InputPort::new("area", ValueTag::Scalar).optional());
        p
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("density", ValueTag::Scalar), OutputPort::new("drag", ValueTag::Vec3)]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let pose = read_pose(ctx, 0)?;
        let rho = self.atmosphere.density(pose.r.norm() - self.r_ref);
        // optional `area` input scales the configured C_d A / m
        let cda = self.cda_over_m * ctx.scalar_or(4, 1.0)?;
        let air = Vector3::new(0.0, 0.0, self.omega).cross(&pose.r);
        Ok(vec![Value::Scalar(rho), Value::Vec3(drag_accel(rho, &(pose.v - air), cda))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn gravity_examples() {
        assert_eq!(gravity(1.0, &Vector3::new(1.0, 0.0, 0.0)).unwrap(), Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(gravity(1.0, &Vector3::new(0.0, 2.0, 0.0)).unwrap(), Vector3::new(0.0, -0.25, 0.0));
        assert!(gravity(1.0, &Vector3::zeros()).is_none());
    }

    #[test]
    fn dipole_examples() {
        let m = Vector3::z();
        let eq = dipole_b(B0_EARTH, R_EARTH, &m, &Vector3::new(R_EARTH, 0.0, 0.0)).unwrap();
        assert!((eq + B0_EARTH * m).norm() < 1e-18);
        let pole = dipole_b(B0_EARTH, R_EARTH, &m, &Vector3::new(0.0, 0.0, R_EARTH)).unwrap();
        assert!((pole - 2.0 * B0_EARTH * m).norm() < 1e-18);
        let far = dipole_b(B0_EARTH, R_EARTH, &m, &Vector3::new(0.0, 2.0 * R_EARTH, 0.0)).unwrap();
        assert!((far.norm() - B0_EARTH / 8.0).abs() < 1e-18);
    }

    #[test]
    fn density_examples() {
        let a = Atmosphere::default();
        assert_eq!(a.density(a.h0), a.rho0);
        assert!((a.density(a.h0 + a.scale_height) - a.rho0 / E).abs() < 1e-24);
        assert!((a.density(a.h0 - a.scale_height) - a.rho0 * E).abs() < 1e-24);
    }

    #[test]
    fn drag_examples() {
        assert_eq!(drag_accel(1.0, &Vector3::zeros(), 1.0), Vector3::zeros());
        assert_eq!(drag_accel(2.0, &Vector3::new(1.0, 0.0, 0.0), 1.0), Vector3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn greenwich_examples() {
        assert_eq!(greenwich_pose(OMEGA_EARTH, 0.0).q, UnitQuaternion::identity());
        let quarter = greenwich_pose(1.0, PI / 2.0);
        assert!((quarter.q * Vector3::x() - Vector3::y()).norm() < 1e-15);
        let full = greenwich_pose(OMEGA_EARTH, 2.0 * PI / OMEGA_EARTH);
        assert!(full.q.angle() < 1e-12);
    }
}

//! Vector fields attached to host frames, and field sensors.
//!
//! A field formula is evaluated in its host frame's axes at the host-local
//! position of the query point. For a covariant field the result is rotated
//! back to world axes and a sensor reports it in its own axes; a
//! non-covariant field reports the raw formula components, whatever the
//! sensor orientation.

use nalgebra::Vector3;
use thiserror::Error;

use crate::environment::{dipole_b, gravity};
use crate::frames::{pose_inputs, read_pose, Pose};
use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("field singular at local position ({}, {}, {})", .0.x, .0.y, .0.z)]
pub struct Singular(pub Vector3<f64>);

/// `E = k r / |r|³`.
pub fn electrostatic_field(k: f64, r: &Vector3<f64>) -> Result<Vector3<f64>, Singular> {
    let d = r.norm();
    if d == 0.0 {
        return Err(Singular(*r));
    }
    Ok(k * r / (d * d * d))
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldFormula {
    /// Point charge at the host origin, coefficient `k`.
    Electrostatic { k: f64 },
    /// Central attraction with parameter `mu` (m³/s²).
    Gravity { mu: f64 },
    /// Dipole with surface induction `b0` (T) at radius `r_ref` (m).
    Dipole { b0: f64, r_ref: f64, axis: Vector3<f64> },
    Uniform { value: Vector3<f64> },
}

impl FieldFormula {
    pub fn eval(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, Singular> {
        match self {
            FieldFormula::Electrostatic { k } => electrostatic_field(*k, p),
            FieldFormula::Gravity { mu } => gravity(*mu, p).ok_or(Singular(*p)),
            FieldFormula::Dipole { b0, r_ref, axis } => dipole_b(*b0, *r_ref, axis, p).ok_or(Singular(*p)),
            FieldFormula::Uniform { value } => Ok(*value),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub formula: FieldFormula,
    pub covariant: bool,
}

impl VectorField {
    pub fn covariant(formula: FieldFormula) -> Self {
        Self { formula, covariant: true }
    }

    pub fn plain(formula: FieldFormula) -> Self {
        Self { formula, covariant: false }
    }

    /// World-axes field vector at world point `p` for a covariant field,
    /// raw formula components otherwise.
    pub fn at(&self, host: &Pose, p: &Vector3<f64>) -> Result<Vector3<f64>, Singular> {
        let local = self.formula.eval(&host.to_local_point(p))?;
        Ok(if self.covariant { host.q * local } else { local })
    }

    /// Reading of a sensor with world pose `sensor`.
    pub fn sense(&self, host: &Pose, sensor: &Pose) -> Result<Vector3<f64>, Singular> {
        let e = self.at(host, &sensor.r)?;
        Ok(if self.covariant { sensor.to_local_axes(&e) } else { e })
    }
}

/// Samples a field. Inputs `frame.*` give the sensor pose and `host.*` the
/// field's host frame (identity when unbound). Output `out` is the reading,
/// `world` the field vector in world axes (raw components when
/// non-covariant).
#[derive(Clone, Debug)]
pub struct Sensor {
    pub field: VectorField,
}

impl Sensor {
    pub fn new(field: VectorField) -> Self {
        Self { field }
    }
}

impl Component for Sensor {
    fn kind(&self) -> &str {
        "sensor"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        let mut p = pose_inputs("frame");
        p[0].required = true;
        p.extend(pose_inputs("host"));
        p
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("out", ValueTag::Vec3), OutputPort::new("world", ValueTag::Vec3)]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let sensor = read_pose(ctx, 0)?;
        let host = read_pose(ctx, 4)?;
        let world = self.field.at(&host, &sensor.r).map_err(ComponentError::domain)?;
        let out = if self.field.covariant { sensor.to_local_axes(&world) } else { world };
        Ok(vec![Value::Vec3(out), Value::Vec3(world)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn electrostatic_examples() {
        assert_eq!(electrostatic_field(1.0, &Vector3::new(1.0, 0.0, 0.0)).unwrap(), Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(electrostatic_field(1.0, &Vector3::new(0.0, 2.0, 0.0)).unwrap(), Vector3::new(0.0, 0.25, 0.0));
        assert_eq!(electrostatic_field(-3.0, &Vector3::new(0.0, 0.0, 1.0)).unwrap(), Vector3::new(0.0, 0.0, -3.0));
        assert!(electrostatic_field(1.0, &Vector3::zeros()).is_err());
    }

    #[test]
    fn sensing_rotated_sensor() {
        let e = Vector3::new(1.0, 0.0, 0.0);
        let host = Pose::identity();
        let straight = Pose { r: Vector3::new(5.0, 0.0, 0.0), ..Pose::identity() };
        let turned = Pose { q: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2), ..straight };
        let cov = VectorField::covariant(FieldFormula::Uniform { value: e });
        let raw = VectorField::plain(FieldFormula::Uniform { value: e });
        assert_eq!(cov.sense(&host, &straight).unwrap(), e);
        assert!((cov.sense(&host, &turned).unwrap() - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        assert_eq!(raw.sense(&host, &turned).unwrap(), e);
    }

    #[test]
    fn hosted_field_follows_host() {
        // charge sitting at (1,0,0), host rotated: field still radial from it
        let host = Pose {
            r: Vector3::new(1.0, 0.0, 0.0),
            q: UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1),
            ..Pose::identity()
        };
        let f = VectorField::covariant(FieldFormula::Electrostatic { k: 2.0 });
        let p = Vector3::new(1.0, 2.0, 0.0);
        let e = f.at(&host, &p).unwrap();
        assert!((e - Vector3::new(0.0, 0.5, 0.0)).norm() < 1e-15);
    }
}

//! Attitude control laws: PID flywheel command (fast loop) and magnetic
//! momentum desaturation (slow loop).

use nalgebra::Vector3;
use thiserror::Error;

use crate::components::Shape;
use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// `M = M0 + K1·ω + K2·φ + K3·∫φ dt`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PidGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Discrete PID with its own running integral of `φ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    pub integral: f64,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self { gains, integral: 0.0 }
    }

    /// Accumulates `φ·dt`, then returns the law's output.
    pub fn step(&mut self, phi: f64, omega: f64, m0: f64, dt: f64) -> f64 {
        self.integral += phi * dt;
        pid_law(&self.gains, phi, omega, m0, self.integral)
    }
}

pub fn pid_law(g: &PidGains, phi: f64, omega: f64, m0: f64, integral: f64) -> f64 {
    m0 + g.k1 * omega + g.k2 * phi + g.k3 * integral
}

/// One wheel: rotor inertia about its axis, unit axis, spin rate relative
/// to the carrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WheelSpin {
    pub inertia: f64,
    pub axis: Vector3<f64>,
    pub rate: f64,
}

/// `H = Σ J_F Ω e`.
pub fn wheel_momentum(wheels: &[WheelSpin]) -> Vector3<f64> {
    wheels.iter().map(|w| w.inertia * w.rate * w.axis).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesatConfig {
    /// Below this |H| the electromagnets stay off (N·m·s).
    pub h_min: f64,
    /// Minimum angle between the lines of `H` and `B` (rad).
    pub theta_min: f64,
    /// Gain (1/s).
    pub k_m: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("magnetic induction is zero")]
pub struct ZeroField;

/// `Some(m)` with `m = k_m (H×B)/|B|²`, or `None` (electromagnets off) when
/// `|H| < h_min` or `H` lies within `theta_min` of the line of `B`.
pub fn desaturation_dipole(h: &Vector3<f64>, b: &Vector3<f64>, cfg: &DesatConfig) -> Result<Option<Vector3<f64>>, ZeroField> {
    let b2 = b.norm_squared();
    if b2 == 0.0 {
        return Err(ZeroField);
    }
    let hn = h.norm();
    if hn < cfg.h_min || hn == 0.0 {
        return Ok(None);
    }
    let sin = h.cross(b).norm() / (hn * b2.sqrt());
    if sin.min(1.0).asin() < cfg.theta_min {
        return Ok(None);
    }
    Ok(Some(cfg.k_m * h.cross(b) / b2))
}

pub fn magnetic_torque(m: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    m.cross(b)
}

/// Component `ctl.pid`: inputs `phi`, `omega`, optional `m0`; output `out`.
/// The integral of `phi` is integrated state.
#[derive(Clone, Debug)]
pub struct PidNode {
    pub gains: PidGains,
    shape: Shape,
}

impl PidNode {
    pub fn new(gains: PidGains, shape: Shape) -> Self {
        Self { gains, shape }
    }

    fn width(&self) -> usize {
        match self.shape {
            Shape::Scalar => 1,
            Shape::Vec3 => 3,
        }
    }

    fn tag(&self) -> ValueTag {
        match self.shape {
            Shape::Scalar => ValueTag::Scalar,
            Shape::Vec3 => ValueTag::Vec3,
        }
    }

    fn read(&self, ctx: &Ctx<'_>, i: usize) -> Result<Vector3<f64>, ComponentError> {
        match self.shape {
            Shape::Scalar => Ok(Vector3::new(ctx.scalar_or(i, 0.0)?, 0.0, 0.0)),
            Shape::Vec3 => ctx.vec3_or(i, Vector3::zeros()),
        }
    }
}

impl Component for PidNode {
    fn kind(&self) -> &str {
        "ctl.pid"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![
            InputPort::new("phi", self.tag()),
            InputPort::new("omega", self.tag()).optional(),
            InputPort::new("m0", self.tag()).optional(),
        ]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("out", self.tag())]
    }
    fn state_len(&self) -> usize {
        self.width()
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let (phi, omega, m0) = (self.read(ctx, 0)?, self.read(ctx, 1)?, self.read(ctx, 2)?);
        let mut out = Vector3::zeros();
        for i in 0..self.width() {
            out[i] = pid_law(&self.gains, phi[i], omega[i], m0[i], ctx.state[i]);
        }
        Ok(vec![match self.shape {
            Shape::Scalar => Value::Scalar(out.x),
            Shape::Vec3 => Value::Vec3(out),
        }])
    }
    fn derivative(&self, ctx: &Ctx<'_>, dx: &mut [f64]) -> Result<(), ComponentError> {
        let phi = self.read(ctx, 0)?;
        dx.copy_from_slice(&phi.as_slice()[..self.width()]);
        Ok(())
    }
}

/// Component `ctl.desat`: inputs `h` (wheel momentum) and `b` (induction),
/// both in the same axes; outputs `dipole`, `torque = dipole × b`, and `on`
/// (1 or 0).
#[derive(Clone, Debug)]
pub struct DesatNode {
    pub cfg: DesatConfig,
    pub enabled: bool,
}

impl Component for DesatNode {
    fn kind(&self) -> &str {
        "ctl.desat"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("h", ValueTag::Vec3), InputPort::new("b", ValueTag::Vec3)]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![
            OutputPort::new("dipole", ValueTag::Vec3),
            OutputPort::new("torque", ValueTag::Vec3),
            OutputPort::new("on", ValueTag::Scalar),
        ]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let (h, b) = (ctx.vec3(0)?, ctx.vec3(1)?);
        let cmd = desaturation_dipole(&h, &b, &self.cfg).map_err(ComponentError::domain)?;
        let m = cmd.filter(|_| self.enabled).unwrap_or_else(Vector3::zeros);
        let on = if self.enabled && cmd.is_some() { 1.0 } else { 0.0 };
        Ok(vec![Value::Vec3(m), Value::Vec3(magnetic_torque(&m, &b)), Value::Scalar(on)])
    }
}

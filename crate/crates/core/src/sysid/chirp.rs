use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// `C·sin(a t + b t²)`; instantaneous frequency `a + 2 b t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpSpec {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

pub fn chirp(spec: &ChirpSpec, t: f64) -> f64 {
    spec.c * (spec.a * t + spec.b * t * t).sin()
}

impl ChirpSpec {
    pub fn frequency(&self, t: f64) -> f64 {
        self.a + 2.0 * self.b * t
    }
}

/// Component `sysid.chirp`: output `out`.
#[derive(Clone, Debug)]
pub struct Chirp {
    pub spec: ChirpSpec,
}

impl Component for Chirp {
    fn kind(&self) -> &str {
        "sysid.chirp"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        Vec::new()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("out", ValueTag::Scalar)]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![Value::Scalar(chirp(&self.spec, ctx.t))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        assert_eq!(chirp(&ChirpSpec { c: 2.0, a: 1.0, b: 1.0 }, 0.0), 0.0);
        assert!((chirp(&ChirpSpec { c: 1.0, a: 1.0, b: 0.0 }, PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((chirp(&ChirpSpec { c: 2.0, a: 0.0, b: 0.5 }, PI.sqrt()) - 2.0).abs() < 1e-15);
    }
}

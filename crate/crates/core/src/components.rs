//! General-purpose component kinds: sources, arithmetic, integrators, point
//! motion and recorded-signal playback.

use std::sync::Arc;

use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::series::SeriesTable;
use crate::value::{Value, ValueTag};

/// Scalar or 3-vector payload for shape-generic arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vec3,
}

impl Shape {
    fn tag(self) -> ValueTag {
        match self {
            Shape::Scalar => ValueTag::Scalar,
            Shape::Vec3 => ValueTag::Vec3,
        }
    }

    fn len(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vec3 => 3,
        }
    }

    fn read(self, ctx: &Ctx<'_>, i: usize) -> Result<Vector3<f64>, ComponentError> {
        match self {
            Shape::Scalar => Ok(Vector3::new(ctx.scalar(i)?, 0.0, 0.0)),
            Shape::Vec3 => ctx.vec3(i),
        }
    }

    fn value(self, v: Vector3<f64>) -> Value {
        match self {
            Shape::Scalar => Value::Scalar(v.x),
            Shape::Vec3 => Value::Vec3(v),
        }
    }

    fn from_slice(self, s: &[f64]) -> Value {
        match self {
            Shape::Scalar => Value::Scalar(s[0]),
            Shape::Vec3 => Value::Vec3(Vector3::new(s[0], s[1], s[2])),
        }
    }
}

fn out(tag: ValueTag) -> Vec<OutputPort> {
    vec![OutputPort::new("out", tag)]
}

#[derive(Clone, Debug)]
pub struct Constant {
    value: Value,
}

impl Constant {
    pub fn new(value: Value) -> Self {
        Self { value }
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(Value::Scalar(x))
    }

    pub fn vec3(v: Vector3<f64>) -> Self {
        Self::new(Value::Vec3(v))
    }
}

impl Component for Constant {
    fn kind(&self) -> &str {
        "const"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        Vec::new()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(self.value.tag())
    }
    fn evaluate(&self, _ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![self.value.clone()])
    }
}

/// Emits simulation time on `t`.
#[derive(Clone, Debug, Default)]
pub struct Clock;

impl Component for Clock {
    fn kind(&self) -> &str {
        "time"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        Vec::new()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("t", ValueTag::Scalar)]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![Value::Scalar(ctx.t)])
    }
}

/// Weighted sum `Σ w_i · in_i` of scalars or vectors.
#[derive(Clone, Debug)]
pub struct Sum {
    shape: Shape,
    weights: Vec<f64>,
}

impl Sum {
    pub fn new(shape: Shape, weights: Vec<f64>) -> Self {
        Self { shape, weights }
    }

    pub fn scalars(n: usize) -> Self {
        Self::new(Shape::Scalar, vec![1.0; n])
    }

    pub fn vectors(n: usize) -> Self {
        Self::new(Shape::Vec3, vec![1.0; n])
    }
}

impl Component for Sum {
    fn kind(&self) -> &str {
        "sum"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        (0..self.weights.len()).map(|i| InputPort::new(format!("in{i}"), self.shape.tag())).collect()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(self.shape.tag())
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let mut acc = Vector3::zeros();
        for (i, w) in self.weights.iter().enumerate() {
            acc += *w * self.shape.read(ctx, i)?;
        }
        Ok(vec![self.shape.value(acc)])
    }
}

/// Product of scalar inputs.
#[derive(Clone, Debug)]
pub struct Product {
    n: usize,
}

impl Product {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Component for Product {
    fn kind(&self) -> &str {
        "product"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        (0..self.n).map(|i| InputPort::new(format!("in{i}"), ValueTag::Scalar)).collect()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(ValueTag::Scalar)
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let mut p = 1.0;
        for i in 0..self.n {
            p *= ctx.scalar(i)?;
        }
        Ok(vec![Value::Scalar(p)])
    }
}

#[derive(Clone, Debug)]
pub struct Gain {
    shape: Shape,
    k: f64,
}

impl Gain {
    pub fn new(shape: Shape, k: f64) -> Self {
        Self { shape, k }
    }

    pub fn scalar(k: f64) -> Self {
        Self::new(Shape::Scalar, k)
    }

    pub fn vec3(k: f64) -> Self {
        Self::new(Shape::Vec3, k)
    }
}

impl Component for Gain {
    fn kind(&self) -> &str {
        "gain"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("in", self.shape.tag())]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(self.shape.tag())
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![self.shape.value(self.k * self.shape.read(ctx, 0)?)])
    }
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma` to `in`,
/// held constant over each `period`. The sample for hold interval `n` is a
/// pure function of `(seed, n)`, so every integrator stage inside one
/// interval sees the same draw and reruns are identical.
#[derive(Clone, Debug)]
pub struct Noise {
    shape: Shape,
    pub sigma: f64,
    pub period: f64,
    pub seed: u64,
}

impl Noise {
    pub fn new(shape: Shape, sigma: f64, period: f64, seed: u64) -> Result<Self, String> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(format!("sigma must be finite and ≥ 0, got {sigma}"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(format!("period must be positive, got {period}"));
        }
        Ok(Self { shape, sigma, period, seed })
    }

    pub fn sample(&self, t: f64) -> Vector3<f64> {
        let n = (t / self.period + 1e-9).floor() as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        self.sigma * Vector3::new(draw(), draw(), draw())
    }
}

impl Component for Noise {
    fn kind(&self) -> &str {
        "noise"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("in", self.shape.tag())]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(self.shape.tag())
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let x = self.shape.read(ctx, 0)?;
        if self.sigma == 0.0 {
            return Ok(vec![self.shape.value(x)]);
        }
        Ok(vec![self.shape.value(x + self.sample(ctx.t))])
    }
}

/// `in^p` for a scalar input.
#[derive(Clone, Debug)]
pub struct Power {
    p: f64,
}

impl Power {
    pub fn new(p: f64) -> Self {
        Self { p }
    }
}

impl Component for Power {
    fn kind(&self) -> &str {
        "pow"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("in", ValueTag::Scalar)]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(ValueTag::Scalar)
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![Value::Scalar(ctx.scalar(0)?.powf(self.p))])
    }
}

/// Binary vector operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorOp {
    /// `|in|`
    Norm,
    /// `a·b`
    Dot,
    /// `a×b`
    Cross,
    /// `s·v`
    Scale,
}

#[derive(Clone, Debug)]
pub struct VectorMath {
    op: VectorOp,
}

impl VectorMath {
    pub fn new(op: VectorOp) -> Self {
        Self { op }
    }
}

impl Component for VectorMath {
    fn kind(&self) -> &str {
        match self.op {
            VectorOp::Norm => "norm",
            VectorOp::Dot => "dot",
            VectorOp::Cross => "cross",
            VectorOp::Scale => "scale",
        }
    }
    fn input_ports(&self) -> Vec<InputPort> {
        match self.op {
            VectorOp::Norm => vec![InputPort::new("in", ValueTag::Vec3)],
            VectorOp::Dot | VectorOp::Cross => {
                vec![InputPort::new("a", ValueTag::Vec3), InputPort::new("b", ValueTag::Vec3)]
            }
            VectorOp::Scale => vec![InputPort::new("s", ValueTag::Scalar), InputPort::new("v", ValueTag::Vec3)],
        }
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        match self.op {
            VectorOp::Norm | VectorOp::Dot => out(ValueTag::Scalar),
            VectorOp::Cross | VectorOp::Scale => out(ValueTag::Vec3),
        }
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let v = match self.op {
            VectorOp::Norm => Value::Scalar(ctx.vec3(0)?.norm()),
            VectorOp::Dot => Value::Scalar(ctx.vec3(0)?.dot(&ctx.vec3(1)?)),
            VectorOp::Cross => Value::Vec3(ctx.vec3(0)?.cross(&ctx.vec3(1)?)),
            VectorOp::Scale => Value::Vec3(ctx.scalar(0)? * ctx.vec3(1)?),
        };
        Ok(vec![v])
    }
}

/// Assembles three scalars into a vector.
#[derive(Clone, Debug, Default)]
pub struct Assemble;

impl Component for Assemble {
    fn kind(&self) -> &str {
        "vec3"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        ["x", "y", "z"].iter().map(|n| InputPort::new(*n, ValueTag::Scalar)).collect()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(ValueTag::Vec3)
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![Value::Vec3(Vector3::new(ctx.scalar(0)?, ctx.scalar(1)?, ctx.scalar(2)?))])
    }
}

/// Extracts `gain · in[index]` from a vector.
#[derive(Clone, Debug)]
pub struct Extract {
    index: usize,
    gain: f64,
}

impl Extract {
    pub fn new(index: usize, gain: f64) -> Result<Self, String> {
        if index > 2 {
            return Err(format!("component index {index} out of range 0..3"));
        }
        Ok(Self { index, gain })
    }
}

impl Component for Extract {
    fn kind(&self) -> &str {
        "component"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("in", ValueTag::Vec3)]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(ValueTag::Scalar)
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![Value::Scalar(self.gain * ctx.vec3(0)?[self.index])])
    }
}

/// `ẋ = in`, output `x`.
#[derive(Clone, Debug)]
pub struct Integrator {
    shape: Shape,
    x0: Vector3<f64>,
}

impl Integrator {
    pub fn scalar(x0: f64) -> Self {
        Self { shape: Shape::Scalar, x0: Vector3::new(x0, 0.0, 0.0) }
    }

    pub fn vec3(x0: Vector3<f64>) -> Self {
        Self { shape: Shape::Vec3, x0 }
    }
}

impl Component for Integrator {
    fn kind(&self) -> &str {
        "integrator"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("in", self.shape.tag()).state_only()]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        out(self.shape.tag())
    }
    fn state_len(&self) -> usize {
        self.shape.len()
    }
    fn initial_state(&self) -> Vec<f64> {
        self.x0.as_slice()[..self.shape.len()].to_vec()
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        Ok(vec![self.shape.from_slice(ctx.state)])
    }
    fn derivative(&self, ctx: &Ctx<'_>, dx: &mut [f64]) -> Result<(), ComponentError> {
        let d = self.shape.read(ctx, 0)?;
        dx.copy_from_slice(&d.as_slice()[..self.shape.len()]);
        Ok(())
    }
}

/// Translational point motion `ṙ = V`, `V̇ = a·accel`. The coefficient `a`
/// folds charge and unit system into one scale (default 1).
#[derive(Clone, Debug)]
pub struct PointMotion {
    pub r0: Vector3<f64>,
    pub v0: Vector3<f64>,
    pub coefficient: f64,
}

impl PointMotion {
    pub fn new(r0: Vector3<f64>, v0: Vector3<f64>) -> Self {
        Self { r0, v0, coefficient: 1.0 }
    }
}

impl Component for PointMotion {
    fn kind(&self) -> &str {
        "motion"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        vec![InputPort::new("accel", ValueTag::Vec3).state_only()]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("r", ValueTag::Vec3), OutputPort::new("v", ValueTag::Vec3)]
    }
    fn state_len(&self) -> usize {
        6
    }
    fn initial_state(&self) -> Vec<f64> {
        self.r0.iter().chain(self.v0.iter()).copied().collect()
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let s = ctx.state;
        Ok(vec![
            Value::Vec3(Vector3::new(s[0], s[1], s[2])),
            Value::Vec3(Vector3::new(s[3], s[4], s[5])),
        ])
    }
    fn derivative(&self, ctx: &Ctx<'_>, dx: &mut [f64]) -> Result<(), ComponentError> {
        let a = self.coefficient * ctx.vec3(0)?;
        dx[..3].copy_from_slice(&ctx.state[3..6]);
        dx[3..].copy_from_slice(a.as_slice());
        Ok(())
    }
}

/// Replays every channel of a recorded table, interpolated at the current
/// time. Leaving the recorded span is an error.
#[derive(Clone, Debug)]
pub struct Playback {
    table: Arc<SeriesTable>,
    channels: Vec<String>,
}

impl Playback {
    pub fn new(table: SeriesTable) -> Self {
        let channels = table.channel_names().map(str::to_string).collect();
        Self { table: Arc::new(table), channels }
    }
}

impl Component for Playback {
    fn kind(&self) -> &str {
        "series"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        Vec::new()
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        self.channels.iter().map(|c| OutputPort::new(c.clone(), ValueTag::Scalar)).collect()
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        self.channels
            .iter()
            .map(|c| self.table.playback(c, ctx.t).map(Value::Scalar).map_err(ComponentError::domain))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{simulate, Graph, SimConfig, NO_BINDINGS};

    #[test]
    fn vector_ops() {
        let mut g = Graph::new();
        g.add("a", Constant::vec3(Vector3::new(1.0, 0.0, 0.0)), NO_BINDINGS);
        g.add("b", Constant::vec3(Vector3::new(0.0, 2.0, 0.0)), NO_BINDINGS);
        g.add("c", VectorMath::new(VectorOp::Cross), [("a", "a.out"), ("b", "b.out")]);
        g.add("n", VectorMath::new(VectorOp::Norm), [("in", "c.out")]);
        g.add("y", Extract::new(2, -1.0).unwrap(), [("in", "c.out")]);
        let p = g.compile().unwrap().eval_step(0.0, &[]).unwrap();
        assert_eq!(p.vec3("c.out"), Some(Vector3::new(0.0, 0.0, 2.0)));
        assert_eq!(p.scalar("n.out"), Some(2.0));
        assert_eq!(p.scalar("y.out"), Some(-2.0));
    }

    #[test]
    fn playback_drives_integrator() {
        let mut table = SeriesTable::new(vec![0.0, 2.0]).unwrap();
        table.add_channel("u", vec![1.0, 1.0]).unwrap();
        let mut g = Graph::new();
        g.add("rec", Playback::new(table), NO_BINDINGS);
        g.add("x", Integrator::scalar(0.0), [("in", "rec.u")]);
        let m = g.compile().unwrap();
        let s = simulate(&m, &SimConfig { dt: 0.1, t_end: 2.0, record: vec!["x.out".into()] }).unwrap();
        assert!((s.channel("x.out").unwrap().last().unwrap() - 2.0).abs() < 1e-12);
        // leaving the recorded span fails
        assert!(simulate(&m, &SimConfig { dt: 0.1, t_end: 3.0, record: vec![] }).is_err());
    }

    #[test]
    fn harmonic_oscillator_energy() {
        // ẍ = -x as two integrators; ½ẋ² + ½x² drifts < 1e-7 over 10 s.
        let mut g = Graph::new();
        g.add("x", Integrator::scalar(1.0), [("in", "v.out")]);
        g.add("v", Integrator::scalar(0.0), [("in", "neg.out")]);
        g.add("neg", Gain::scalar(-1.0), [("in", "x.out")]);
        let m = g.compile().unwrap();
        let s = simulate(&m, &SimConfig { dt: 1e-3, t_end: 10.0, record: vec!["x.out".into(), "v.out".into()] }).unwrap();
        let (x, v) = (s.channel("x.out").unwrap(), s.channel("v.out").unwrap());
        let drift = x.iter().zip(v).map(|(x, v)| (0.5 * x * x + 0.5 * v * v - 0.5).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-7, "{drift}");
    }
}

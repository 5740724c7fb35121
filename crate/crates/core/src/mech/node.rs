use nalgebra::Vector3;

use super::{Aggregate, AggregateInit, ExternalLoad, MechError, ModuleKind};
use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// Graph component integrating an [`Aggregate`].
///
/// Inputs (all optional): `<m>.force` (world, at the origin), `<m>.torque`
/// (module axes), `<m>.u` for flywheels, and a uniform `gravity`
/// acceleration. Outputs per module `<m>.r/q/v/w` (world pose group, `w`
/// world axes), `<m>.omega_body`, `<m>.mode<k>` for console modes and
/// `<m>.spin` for flywheels, plus aggregate totals.
#[derive(Debug, Clone)]
pub struct AggregateNode {
    agg: Aggregate,
    init: Vec<f64>,
    /// Central gravity parameter applied to every module, if any.
    mu: Option<f64>,
    inputs: Vec<[Option<usize>; 3]>,
    gravity_input: usize,
    /// Single module without the `<m>.` prefix on its ports.
    bare: bool,
}

impl AggregateNode {
    pub fn new(agg: Aggregate, init: &AggregateInit, mu: Option<f64>) -> Result<Self, MechError> {
        let states = agg.initial_states(init)?;
        let init = agg.pack(&states);
        let mut next = 0;
        let mut take = || {
            next += 1;
            Some(next - 1)
        };
        let inputs = agg
            .modules()
            .iter()
            .map(|m| [take(), take(), matches!(m.kind, ModuleKind::Flywheel { .. }).then(&mut take).flatten()])
            .collect();
        Ok(Self { agg, init, mu, inputs, gravity_input: next, bare: false })
    }

    /// A one-module aggregate whose ports drop the module-name prefix.
    pub fn standalone(agg: Aggregate, init: &AggregateInit, mu: Option<f64>) -> Result<Self, MechError> {
        if agg.modules().len() != 1 {
            return Err(MechError::Module("a standalone module node holds exactly one module".into()));
        }
        Ok(Self { bare: true, ..Self::new(agg, init, mu)? })
    }

    fn port(&self, module: &str, p: &str) -> String {
        if self.bare {
            p.to_string()
        } else {
            format!("{module}.{p}")
        }
    }

    pub fn aggregate(&self) -> &Aggregate {
        &self.agg
    }

    fn loads(&self, ctx: &Ctx<'_>) -> Result<Vec<ExternalLoad>, ComponentError> {
        let g = ctx.vec3_or(self.gravity_input, Vector3::zeros())?;
        let mut out = Vec::with_capacity(self.inputs.len());
        for (i, [f, tq, u]) in self.inputs.iter().enumerate() {
            let mut gravity = g;
            if let Some(mu) = self.mu {
                let o = self.agg.state_range(i).start;
                let r = Vector3::new(ctx.state[o], ctx.state[o + 1], ctx.state[o + 2]);
                gravity += crate::environment::gravity(mu, &r)
                    .ok_or_else(|| ComponentError::domain(format!("module `{}` reached the gravity center", self.agg.modules()[i].name)))?;
            }
            out.push(ExternalLoad {
                force: ctx.vec3_or(f.unwrap(), Vector3::zeros())?,
                torque: ctx.vec3_or(tq.unwrap(), Vector3::zeros())?,
                gravity,
                u: match u {
                    Some(k) => ctx.scalar_or(*k, 0.0)?,
                    None => 0.0,
                },
            });
        }
        Ok(out)
    }
}

impl Component for AggregateNode {
    fn kind(&self) -> &str {
        "mech.aggregate"
    }

    fn input_ports(&self) -> Vec<InputPort> {
        let mut ports = Vec::new();
        for m in self.agg.modules() {
            ports.push(InputPort::new(self.port(&m.name, "force"), ValueTag::Vec3).state_only().optional());
            ports.push(InputPort::new(self.port(&m.name, "torque"), ValueTag::Vec3).state_only().optional());
            if matches!(m.kind, ModuleKind::Flywheel { .. }) {
                ports.push(InputPort::new(self.port(&m.name, "u"), ValueTag::Scalar).state_only().optional());
            }
        }
        ports.push(InputPort::new("gravity", ValueTag::Vec3).state_only().optional());
        ports
    }

    fn output_ports(&self) -> Vec<OutputPort> {
        let mut ports = Vec::new();
        for m in self.agg.modules() {
            for (p, tag) in [("r", ValueTag::Vec3), ("q", ValueTag::Quat), ("v", ValueTag::Vec3), ("w", ValueTag::Vec3), ("omega_body", ValueTag::Vec3)] {
                ports.push(OutputPort::new(self.port(&m.name, p), tag));
            }
            match &m.kind {
                ModuleKind::Rigid => {}
                ModuleKind::Console { modes } => {
                    for k in 0..modes.len() {
                        ports.push(OutputPort::new(self.port(&m.name, &format!("mode{k}")), ValueTag::Scalar));
                    }
                }
                ModuleKind::Flywheel { .. } => ports.push(OutputPort::new(self.port(&m.name, "spin"), ValueTag::Scalar)),
            }
        }
        for (p, tag) in [
            ("momentum", ValueTag::Vec3),
            ("angular_momentum", ValueTag::Vec3),
            ("energy", ValueTag::Scalar),
            ("wheel_momentum", ValueTag::Vec3),
            ("wheel_momentum_body", ValueTag::Vec3),
            ("wheel_momentum_abs", ValueTag::Scalar),
        ] {
            ports.push(OutputPort::new(p, tag));
        }
        ports
    }

    fn state_len(&self) -> usize {
        self.agg.state_len()
    }

    fn initial_state(&self) -> Vec<f64> {
        self.init.clone()
    }

    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let states = self.agg.unpack(ctx.state).map_err(ComponentError::domain)?;
        let mut out = Vec::new();
        for (m, s) in self.agg.modules().iter().zip(&states) {
            out.extend([Value::Vec3(s.r), Value::Quat(s.q), Value::Vec3(s.v), Value::Vec3(s.world_rate()), Value::Vec3(s.w)]);
            match &m.kind {
                ModuleKind::Rigid => {}
                ModuleKind::Console { .. } => out.extend(s.coords.iter().map(|q| Value::Scalar(*q))),
                ModuleKind::Flywheel { .. } => out.push(Value::Scalar(s.rates[0])),
            }
        }
        let h = self.agg.wheel_momentum(&states);
        out.extend([
            Value::Vec3(self.agg.momentum(&states)),
            Value::Vec3(self.agg.angular_momentum(&states)),
            Value::Scalar(self.agg.energy(&states)),
            Value::Vec3(h),
            Value::Vec3(states[0].q.inverse() * h),
            Value::Scalar(self.agg.wheel_momentum_abs(&states)),
        ]);
        Ok(out)
    }

    fn derivative(&self, ctx: &Ctx<'_>, dx: &mut [f64]) -> Result<(), ComponentError> {
        let loads = self.loads(ctx)?;
        self.agg.derivative(ctx.state, &loads, dx).map_err(ComponentError::domain)?;
        Ok(())
    }

    fn normalize_state(&self, state: &mut [f64]) {
        self.agg.normalize(state);
    }
}

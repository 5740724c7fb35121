//! Declarative JSON scenarios.
//!
//! ```json
//! {"components": [{"id": "...", "kind": "...", "params": {...}, "inputs": {"port": "comp.port"}}],
//!  "sim": {"dt": 0.001, "t_end": 10.0, "record": ["comp.port"]}}
//! ```
//!
//! An input binding whose key names a port group (`frame` for the ports
//! `frame.r`, `frame.q`, ...) binds every member `key.s` to `value.s` that
//! the target provides. A value without a dot names a component with a
//! single output. Field kinds (`field.*`, `env.gravity`, `env.dipole`) and
//! mechanical modules (`mech.rigid`, `mech.console`, `mech.flywheel`) are
//! declarations: sensors and aggregates refer to them by id. A module no
//! aggregate refers to becomes a node of its own.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::Deserialize;
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::components::{Assemble, Clock, Constant, Extract, Gain, Integrator, Noise, PointMotion, Playback, Power, Product, Shape, Sum, VectorMath, VectorOp};
use crate::control::{DesatConfig, DesatNode, PidGains, PidNode};
use crate::environment::{Atmosphere, AtmosphereNode, GreenwichFrame, B0_EARTH, MU_EARTH, OMEGA_EARTH, R_EARTH};
use crate::fields::{FieldFormula, Sensor, VectorField};
use crate::frames::{FrameNode, LocalFrame, RelativeNode};
use crate::graph::{simulate, Component, Graph, Model, SimConfig, SimError, ValidationReport};
use crate::mech::{Aggregate, AggregateInit, AggregateNode, Link, MechModule, Mode, Place};
use crate::nav::AttitudeError;
use crate::series::SeriesTable;
use crate::sysid::{Chirp, ChirpSpec, Lti, TransferModel};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(String),
    #[error("malformed scenario: {0}")]
    Json(String),
    #[error("component `{id}`: unknown kind `{kind}`")]
    UnknownKind { id: String, kind: String },
    #[error("component `{id}` ({kind}): {message}")]
    Invalid { id: String, kind: String, message: String },
    #[error("scenario does not validate:\n{0}")]
    Validation(ValidationReport),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ScenarioError {
    /// 3 for numeric failures during integration, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Sim(SimError::Numeric { .. }) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentSpec {
    id: String,
    kind: String,
    #[serde(default)]
    params: Map<String, Json>,
    #[serde(default)]
    inputs: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSpec {
    dt: f64,
    t_end: f64,
    #[serde(default)]
    record: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    components: Vec<ComponentSpec>,
    sim: SimSpec,
}

/// A parsed scenario: the graph and its run configuration.
#[derive(Debug)]
pub struct Scenario {
    pub graph: Graph,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn compile(self) -> Result<(Model, SimConfig), ScenarioError> {
        let model = self.graph.compile().map_err(ScenarioError::Validation)?;
        Ok((model, self.sim))
    }

    pub fn run(self) -> Result<SeriesTable, ScenarioError> {
        let (model, sim) = self.compile()?;
        Ok(simulate(&model, &sim)?)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Every component kind the loader understands.
pub const KINDS: &[&str] = &[
    "const", "time", "sum", "product", "gain", "pow", "norm", "dot", "cross", "scale", "vec3", "component", "integrator",
    "motion", "series", "frame", "relative", "sensor", "field.electrostatic", "field.uniform", "env.gravity",
    "env.dipole", "env.atmosphere", "frame.greenwich", "mech.rigid", "mech.console", "mech.flywheel", "mech.aggregate",
    "ctl.pid", "ctl.desat", "sysid.chirp", "lti", "nav.attitude", "noise",
];

struct Params<'a> {
    id: &'a str,
    kind: &'a str,
    map: &'a Map<String, Json>,
}

impl<'a> Params<'a> {
    fn err(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid { id: self.id.to_string(), kind: self.kind.to_string(), message: message.into() }
    }

    fn get(&self, name: &str) -> Option<&'a Json> {
        self.map.get(name)
    }

    fn f64_or(&self, name: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => num(v).ok_or_else(|| self.err(format!("param `{name}` must be a number"))),
        }
    }

    fn f64(&self, name: &str) -> Result<f64, ScenarioError> {
        let v = self.get(name).ok_or_else(|| self.err(format!("missing param `{name}`")))?;
        num(v).ok_or_else(|| self.err(format!("param `{name}` must be a number")))
    }

    fn bool_or(&self, name: &str, default: bool) -> Result<bool, ScenarioError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.err(format!("param `{name}` must be true or false"))),
        }
    }

    fn str(&self, name: &str) -> Result<&'a str, ScenarioError> {
        self.get(name).and_then(Json::as_str).ok_or_else(|| self.err(format!("param `{name}` must be a string")))
    }

    fn opt_str(&self, name: &str) -> Result<Option<&'a str>, ScenarioError> {
        match self.get(name) {
            None | Some(Json::Null) => Ok(None),
            Some(_) => self.str(name).map(Some),
        }
    }

    fn numbers(&self, name: &str, v: &Json) -> Result<Vec<f64>, ScenarioError> {
        v.as_array()
            .and_then(|a| a.iter().map(num).collect::<Option<Vec<_>>>())
            .ok_or_else(|| self.err(format!("param `{name}` must be an array of numbers")))
    }

    fn list_or(&self, name: &str, default: Vec<f64>) -> Result<Vec<f64>, ScenarioError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => self.numbers(name, v),
        }
    }

    fn vec3_at(&self, name: &str, v: &Json) -> Result<Vector3<f64>, ScenarioError> {
        let xs = self.numbers(name, v)?;
        if xs.len() != 3 {
            return Err(self.err(format!("param `{name}` must have 3 entries")));
        }
        Ok(Vector3::new(xs[0], xs[1], xs[2]))
    }

    fn vec3_or(&self, name: &str, default: Vector3<f64>) -> Result<Vector3<f64>, ScenarioError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => self.vec3_at(name, v),
        }
    }

    fn quat_at(&self, name: &str, v: &Json) -> Result<UnitQuaternion<f64>, ScenarioError> {
        let xs = self.numbers(name, v)?;
        let q = Quaternion::new(*xs.first().unwrap_or(&0.0), *xs.get(1).unwrap_or(&0.0), *xs.get(2).unwrap_or(&0.0), *xs.get(3).unwrap_or(&0.0));
        if xs.len() != 4 || !(q.norm() > 0.0) {
            return Err(self.err(format!("param `{name}` must be a nonzero quaternion [w, x, y, z]")));
        }
        Ok(UnitQuaternion::from_quaternion(q))
    }

    fn quat_or(&self, name: &str) -> Result<UnitQuaternion<f64>, ScenarioError> {
        match self.get(name) {
            None => Ok(UnitQuaternion::identity()),
            Some(v) => self.quat_at(name, v),
        }
    }

    fn shape(&self) -> Result<Shape, ScenarioError> {
        match self.get("shape").and_then(Json::as_str).unwrap_or("scalar") {
            "scalar" => Ok(Shape::Scalar),
            "vec3" => Ok(Shape::Vec3),
            other => Err(self.err(format!("unknown shape `{other}` (scalar or vec3)"))),
        }
    }

    /// A number (isotropic), 3 numbers (diagonal) or 3 rows of 3.
    fn inertia(&self) -> Result<Matrix3<f64>, ScenarioError> {
        let v = self.get("inertia").ok_or_else(|| self.err("missing param `inertia`"))?;
        if let Some(x) = num(v) {
            return Ok(Matrix3::identity() * x);
        }
        let rows = v.as_array().ok_or_else(|| self.err("param `inertia` must be a number, 3 numbers or a 3×3 array"))?;
        if rows.len() == 3 && rows.iter().all(|r| num(r).is_some()) {
            return Ok(Matrix3::from_diagonal(&self.vec3_at("inertia", v)?));
        }
        if rows.len() == 3 {
            let r: Vec<Vector3<f64>> = rows.iter().map(|r| self.vec3_at("inertia", r)).collect::<Result<_, _>>()?;
            return Ok(Matrix3::from_rows(&[r[0].transpose(), r[1].transpose(), r[2].transpose()]));
        }
        Err(self.err("param `inertia` must be a number, 3 numbers or a 3×3 array"))
    }

    fn place(&self, v: &Json) -> Result<Place, ScenarioError> {
        let obj = v.as_object().ok_or_else(|| self.err("a place is an object {\"rho\": [..], \"q\": [..]}"))?;
        let sub = Params { id: self.id, kind: self.kind, map: obj };
        Ok(Place { rho: sub.vec3_or("rho", Vector3::zeros())?, q: sub.quat_or("q")? })
    }

    fn value(&self) -> Result<Value, ScenarioError> {
        let v = self.get("value").ok_or_else(|| self.err("missing param `value`"))?;
        if let Some(x) = num(v) {
            return Ok(Value::Scalar(x));
        }
        match v.as_array().map(Vec::len) {
            Some(3) => Ok(Value::Vec3(self.vec3_at("value", v)?)),
            Some(4) => Ok(Value::Quat(self.quat_at("value", v)?)),
            _ => Err(self.err("param `value` must be a number, a 3-vector or a quaternion")),
        }
    }
}

fn num(v: &Json) -> Option<f64> {
    v.as_f64()
}

enum Built {
    Node(Box<dyn Component>),
    Field { host: Option<String> },
    Module { module: MechModule, init: AggregateInit, mu: Option<f64> },
}

fn field_formula(kind: &str, p: &Params<'_>) -> Result<FieldFormula, ScenarioError> {
    Ok(match kind {
        "field.electrostatic" => FieldFormula::Electrostatic { k: p.f64_or("k", 1.0)? },
        "field.uniform" => FieldFormula::Uniform { value: p.vec3_or("value", Vector3::zeros())? },
        "env.gravity" => FieldFormula::Gravity { mu: p.f64_or("mu", MU_EARTH)? },
        "env.dipole" => FieldFormula::Dipole {
            b0: p.f64_or("b0", B0_EARTH)?,
            r_ref: p.f64_or("r_ref", R_EARTH)?,
            axis: p.vec3_or("axis", Vector3::z())?.try_normalize(0.0).ok_or_else(|| p.err("dipole axis must be nonzero"))?,
        },
        _ => unreachable!("not a field kind"),
    })
}

fn module_init(p: &Params<'_>) -> Result<AggregateInit, ScenarioError> {
    Ok(AggregateInit {
        r: p.vec3_or("r", Vector3::zeros())?,
        q: p.quat_or("q")?,
        v: p.vec3_or("v", Vector3::zeros())?,
        w: p.vec3_or("w", Vector3::zeros())?,
        coords: Vec::new(),
        rates: Vec::new(),
    })
}

fn build_module(id: &str, kind: &str, p: &Params<'_>) -> Result<(MechModule, Vec<f64>, Vec<f64>), ScenarioError> {
    let mass = p.f64("mass")?;
    let inertia = p.inertia()?;
    let module = match kind {
        "mech.rigid" => {
            let places = match p.get("places") {
                None => Vec::new(),
                Some(v) => v.as_array().ok_or_else(|| p.err("param `places` must be an array"))?.iter().map(|x| p.place(x)).collect::<Result<_, _>>()?,
            };
            MechModule::rigid(id, mass, inertia, places)
        }
        "mech.console" => {
            let place = p.get("place").map(|v| p.place(v)).transpose()?.unwrap_or(Place::at(Vector3::zeros()));
            let modes = p
                .get("modes")
                .and_then(Json::as_array)
                .ok_or_else(|| p.err("param `modes` must be an array"))?
                .iter()
                .map(|m| {
                    let obj = m.as_object().ok_or_else(|| p.err("a mode is an object {\"A\", \"eps\", \"c\", \"phi\"}"))?;
                    let sub = Params { id, kind, map: obj };
                    Ok(Mode { a: sub.f64("A")?, eps: sub.f64_or("eps", 0.0)?, c: sub.f64("c")?, phi: sub.vec3_or("phi", Vector3::zeros())? })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            MechModule::console(id, mass, inertia, place, modes)
        }
        "mech.flywheel" => {
            let place = p.get("place").map(|v| p.place(v)).transpose()?.unwrap_or(Place::at(Vector3::zeros()));
            let axis = p.vec3_or("axis", Vector3::x())?;
            if !(axis.norm() > 0.0) {
                return Err(p.err("flywheel axis must be nonzero"));
            }
            MechModule::flywheel(id, mass, inertia, place, p.f64("j_f")?, axis)
        }
        _ => unreachable!("not a module kind"),
    };
    module.validate().map_err(|m| p.err(m))?;
    let n = module.n();
    let (coords, rates) = match kind {
        "mech.flywheel" => (vec![0.0], vec![p.f64_or("spin0", 0.0)?]),
        "mech.console" => (p.list_or("q0", vec![0.0; n])?, p.list_or("qdot0", vec![0.0; n])?),
        _ => (Vec::new(), Vec::new()),
    };
    if coords.len() != n || rates.len() != n {
        return Err(p.err(format!("initial modal coordinates must have {n} entries")));
    }
    Ok((module, coords, rates))
}

fn build(spec: &ComponentSpec, base: &Path, specs: &HashMap<&str, &ComponentSpec>) -> Result<Built, ScenarioError> {
    let p = Params { id: &spec.id, kind: &spec.kind, map: &spec.params };
    let node = |c: Box<dyn Component>| Ok(Built::Node(c));
    match spec.kind.as_str() {
        "const" => node(Box::new(Constant::new(p.value()?))),
        "time" => node(Box::new(Clock)),
        "sum" => {
            let shape = p.shape()?;
            let weights = match p.get("weights") {
                Some(v) => p.numbers("weights", v)?,
                None => vec![1.0; p.f64_or("n", 2.0)? as usize],
            };
            node(Box::new(Sum::new(shape, weights)))
        }
        "product" => node(Box::new(Product::new(p.f64_or("n", 2.0)? as usize))),
        "gain" => node(Box::new(Gain::new(p.shape()?, p.f64("k")?))),
        "pow" => node(Box::new(Power::new(p.f64("p")?))),
        "noise" => {
            let seed = p.f64_or("seed", 0.0)?;
            if !(seed >= 0.0 && seed.fract() == 0.0) {
                return Err(p.err("param `seed` must be a non-negative integer"));
            }
            let n = Noise::new(p.shape()?, p.f64_or("sigma", 0.0)?, p.f64_or("period", 0.1)?, seed as u64).map_err(|m| p.err(m))?;
            node(Box::new(n))
        }
        "norm" => node(Box::new(VectorMath::new(VectorOp::Norm))),
        "dot" => node(Box::new(VectorMath::new(VectorOp::Dot))),
        "cross" => node(Box::new(VectorMath::new(VectorOp::Cross))),
        "scale" => node(Box::new(VectorMath::new(VectorOp::Scale))),
        "vec3" => node(Box::new(Assemble)),
        "component" => {
            let idx = p.f64("index")?;
            node(Box::new(Extract::new(idx as usize, p.f64_or("gain", 1.0)?).map_err(|m| p.err(m))?))
        }
        "integrator" => match p.get("x0") {
            Some(v) if v.is_array() => node(Box::new(Integrator::vec3(p.vec3_at("x0", v)?))),
            _ => node(Box::new(Integrator::scalar(p.f64_or("x0", 0.0)?))),
        },
        "motion" => {
            let mut m = PointMotion::new(p.vec3_or("r0", Vector3::zeros())?, p.vec3_or("v0", Vector3::zeros())?);
            m.coefficient = p.f64_or("a", 1.0)?;
            node(Box::new(m))
        }
        "series" => {
            let path: PathBuf = base.join(p.str("file")?);
            let file = std::fs::File::open(&path).map_err(|e| p.err(format!("{}: {e}", path.display())))?;
            let table = SeriesTable::read_csv(std::io::BufReader::new(file)).map_err(|e| p.err(e.to_string()))?;
            node(Box::new(Playback::new(table)))
        }
        "frame" => node(Box::new(FrameNode::new(LocalFrame {
            r: p.vec3_or("r", Vector3::zeros())?,
            q: p.quat_or("q")?,
            v: p.vec3_or("v", Vector3::zeros())?,
            w: p.vec3_or("w", Vector3::zeros())?,
        }))),
        "relative" => node(Box::new(RelativeNode)),
        "field.electrostatic" | "field.uniform" | "env.gravity" | "env.dipole" => {
            // parsed here so malformed declarations fail even when unused
            field_formula(&spec.kind, &p)?;
            p.bool_or("covariant", true)?;
            Ok(Built::Field { host: p.opt_str("host")?.map(str::to_string) })
        }
        "sensor" => {
            let fid = p.str("field")?;
            let target = specs.get(fid).ok_or_else(|| p.err(format!("unknown field `{fid}`")))?;
            if !matches!(target.kind.as_str(), "field.electrostatic" | "field.uniform" | "env.gravity" | "env.dipole") {
                return Err(p.err(format!("`{fid}` is a {}, not a field", target.kind)));
            }
            let tp = Params { id: &target.id, kind: &target.kind, map: &target.params };
            let field = VectorField { formula: field_formula(&target.kind, &tp)?, covariant: tp.bool_or("covariant", true)? };
            node(Box::new(Sensor::new(field)))
        }
        "env.atmosphere" => node(Box::new(AtmosphereNode {
            atmosphere: Atmosphere {
                rho0: p.f64_or("rho0", crate::environment::RHO0)?,
                h0: p.f64_or("h0", crate::environment::H0)?,
                scale_height: p.f64_or("scale_height", crate::environment::SCALE_HEIGHT)?,
            },
            r_ref: p.f64_or("r_ref", R_EARTH)?,
            cda_over_m: p.f64_or("cda_over_m", 0.0)?,
            omega: p.f64_or("omega", 0.0)?,
        })),
        "frame.greenwich" => node(Box::new(GreenwichFrame { omega: p.f64_or("omega", OMEGA_EARTH)? })),
        "mech.rigid" | "mech.console" | "mech.flywheel" => {
            let (module, coords, rates) = build_module(&spec.id, &spec.kind, &p)?;
            let mut init = module_init(&p)?;
            init.coords = vec![coords];
            init.rates = vec![rates];
            let mu = p.get("mu").map(|_| p.f64("mu")).transpose()?;
            Ok(Built::Module { module, init, mu })
        }
        "mech.aggregate" => {
            let names: Vec<&str> = p
                .get("modules")
                .and_then(Json::as_array)
                .and_then(|a| a.iter().map(Json::as_str).collect::<Option<Vec<_>>>())
                .ok_or_else(|| p.err("param `modules` must be an array of module ids"))?;
            let mut modules = Vec::new();
            let mut init = module_init(&p)?;
            for name in &names {
                let m = specs.get(name).ok_or_else(|| p.err(format!("unknown module `{name}`")))?;
                if !m.kind.starts_with("mech.") || m.kind == "mech.aggregate" {
                    return Err(p.err(format!("`{name}` is a {}, not a mechanical module", m.kind)));
                }
                let mp = Params { id: &m.id, kind: &m.kind, map: &m.params };
                let (module, coords, rates) = build_module(&m.id, &m.kind, &mp)?;
                modules.push(module);
                init.coords.push(coords);
                init.rates.push(rates);
            }
            let index = |v: &Json| -> Result<(usize, usize), ScenarioError> {
                let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| p.err("a link end is [\"module\", placeIndex]"))?;
                let name = pair[0].as_str().ok_or_else(|| p.err("a link end is [\"module\", placeIndex]"))?;
                let m = names.iter().position(|n| *n == name).ok_or_else(|| p.err(format!("link names `{name}`, which is not in `modules`")))?;
                let place = pair[1].as_u64().ok_or_else(|| p.err("place index must be a non-negative integer"))?;
                Ok((m, place as usize))
            };
            let links = match p.get("links") {
                None => Vec::new(),
                Some(v) => v
                    .as_array()
                    .ok_or_else(|| p.err("param `links` must be an array"))?
                    .iter()
                    .map(|l| {
                        let ends = l.as_array().filter(|a| a.len() == 2).ok_or_else(|| p.err("a link is [[\"a\", i], [\"b\", j]]"))?;
                        Ok(Link { a: index(&ends[0])?, b: index(&ends[1])? })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?,
            };
            let agg = Aggregate::new(modules, links).map_err(|e| p.err(e.to_string()))?;
            let mu = p.get("mu").map(|_| p.f64("mu")).transpose()?;
            node(Box::new(AggregateNode::new(agg, &init, mu).map_err(|e| p.err(e.to_string()))?))
        }
        "ctl.pid" => node(Box::new(PidNode::new(PidGains { k1: p.f64_or("k1", 0.0)?, k2: p.f64_or("k2", 0.0)?, k3: p.f64_or("k3", 0.0)? }, p.shape()?))),
        "ctl.desat" => {
            let cfg = DesatConfig { h_min: p.f64_or("h_min", 0.0)?, theta_min: p.f64_or("theta_min", 0.0)?, k_m: p.f64("k_m")? };
            if !(cfg.h_min >= 0.0 && (0.0..std::f64::consts::FRAC_PI_2).contains(&cfg.theta_min) && cfg.k_m > 0.0) {
                return Err(p.err("need h_min ≥ 0, 0 ≤ theta_min < π/2 and k_m > 0"));
            }
            node(Box::new(DesatNode { cfg, enabled: p.bool_or("enabled", true)? }))
        }
        "sysid.chirp" => node(Box::new(Chirp { spec: ChirpSpec { c: p.f64_or("c", 1.0)?, a: p.f64("a")?, b: p.f64("b")? } })),
        "lti" => {
            let mut sys = match p.get("model") {
                Some(m) => {
                    let model: TransferModel = serde_json::from_value(m.clone()).map_err(|e| p.err(format!("param `model`: {e}")))?;
                    Lti::from_model(&model)
                }
                None => Lti::from_tf(&p.list_or("num", vec![])?, &p.list_or("den", vec![])?),
            }
            .map_err(|e| p.err(e.to_string()))?;
            if let Some(x0) = p.get("x0") {
                let x0 = p.numbers("x0", x0)?;
                if x0.len() != sys.order() {
                    return Err(p.err(format!("param `x0` must have {} entries", sys.order())));
                }
                sys.x0 = x0;
            }
            node(Box::new(sys))
        }
        "nav.attitude" => node(Box::new(AttitudeError { q_ref: p.quat_or("q_ref")? })),
        other => Err(ScenarioError::UnknownKind { id: spec.id.clone(), kind: other.to_string() }),
    }
}

/// Expands group bindings and single-output shorthands against the
/// consumer's input ports and the targets' output ports.
fn expand_bindings(
    id: &str,
    kind: &str,
    inputs: &BTreeMap<String, String>,
    consumer: &dyn Component,
    outputs: &HashMap<String, HashSet<String>>,
) -> Result<BTreeMap<String, String>, ScenarioError> {
    let err = |message: String| ScenarioError::Invalid { id: id.to_string(), kind: kind.to_string(), message };
    let ports: Vec<String> = consumer.input_ports().into_iter().map(|p| p.name).collect();
    let mut out = BTreeMap::new();
    for (key, target) in inputs {
        let (comp, prefix) = match target.split_once('.') {
            Some((c, rest)) => (c, Some(rest)),
            None => (target.as_str(), None),
        };
        let provided = outputs.get(comp);
        if ports.iter().any(|p| p == key) {
            let resolved = match (prefix, provided) {
                (Some(_), _) | (None, None) => target.clone(),
                (None, Some(outs)) if outs.len() == 1 => format!("{comp}.{}", outs.iter().next().unwrap()),
                (None, Some(_)) => return Err(err(format!("input `{key}`: `{comp}` has several outputs; name one as `{comp}.port`"))),
            };
            out.insert(key.clone(), resolved);
            continue;
        }
        let members: Vec<&String> = ports.iter().filter(|p| p.strip_prefix(key.as_str()).is_some_and(|s| s.starts_with('.'))).collect();
        if members.is_empty() {
            return Err(err(format!("no input port or port group `{key}`")));
        }
        let provided = provided.ok_or_else(|| err(format!("input group `{key}` is bound to unknown component `{comp}`")))?;
        let mut any = false;
        for m in members {
            let suffix = &m[key.len() + 1..];
            let name = match prefix {
                Some(pre) => format!("{pre}.{suffix}"),
                None => suffix.to_string(),
            };
            if provided.contains(&name) {
                out.insert(m.clone(), format!("{comp}.{name}"));
                any = true;
            }
        }
        if !any {
            return Err(err(format!("input group `{key}`: `{target}` provides none of its ports")));
        }
    }
    Ok(out)
}

pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
    let mut specs: HashMap<&str, &ComponentSpec> = HashMap::new();
    for c in &file.components {
        if specs.insert(c.id.as_str(), c).is_some() {
            return Err(ScenarioError::Validation(ValidationReport { findings: vec![crate::graph::Finding::DuplicateId(c.id.clone())] }));
        }
    }
    let mut claimed: HashSet<String> = HashSet::new();
    for c in file.components.iter().filter(|c| c.kind == "mech.aggregate") {
        if let Some(list) = c.params.get("modules").and_then(Json::as_array) {
            for m in list.iter().filter_map(Json::as_str) {
                if !claimed.insert(m.to_string()) {
                    return Err(ScenarioError::Invalid {
                        id: c.id.clone(),
                        kind: c.kind.clone(),
                        message: format!("module `{m}` already belongs to another aggregate"),
                    });
                }
            }
        }
    }
    let mut nodes: Vec<(&ComponentSpec, Box<dyn Component>)> = Vec::new();
    let mut hosts: HashMap<&str, Option<String>> = HashMap::new();
    for spec in &file.components {
        match build(spec, base, &specs)? {
            Built::Node(c) => nodes.push((spec, c)),
            Built::Field { host } => {
                if !spec.inputs.is_empty() {
                    return Err(ScenarioError::Invalid {
                        id: spec.id.clone(),
                        kind: spec.kind.clone(),
                        message: "a field declaration takes no inputs; set its host frame with param `host`".into(),
                    });
                }
                hosts.insert(spec.id.as_str(), host);
            }
            Built::Module { module, init, mu } => {
                if claimed.contains(&spec.id) {
                    continue;
                }
                let agg = Aggregate::new(vec![module], vec![]).map_err(|e| ScenarioError::Invalid {
                    id: spec.id.clone(),
                    kind: spec.kind.clone(),
                    message: e.to_string(),
                })?;
                let node = AggregateNode::standalone(agg, &init, mu).map_err(|e| ScenarioError::Invalid {
                    id: spec.id.clone(),
                    kind: spec.kind.clone(),
                    message: e.to_string(),
                })?;
                nodes.push((spec, Box::new(node)));
            }
        }
    }
    let outputs: HashMap<String, HashSet<String>> =
        nodes.iter().map(|(s, c)| (s.id.clone(), c.output_ports().into_iter().map(|p| p.name).collect())).collect();
    let mut graph = Graph::new();
    for (spec, component) in nodes {
        let mut inputs = spec.inputs.clone();
        if spec.kind == "sensor" && !inputs.contains_key("host") {
            let fid = spec.params.get("field").and_then(Json::as_str).unwrap_or_default();
            if let Some(Some(host)) = hosts.get(fid) {
                inputs.insert("host".into(), host.clone());
            }
        }
        let bindings = expand_bindings(&spec.id, &spec.kind, &inputs, component.as_ref(), &outputs)?;
        graph.add_boxed(spec.id.clone(), component, bindings);
    }
    let sim = SimConfig { dt: file.sim.dt, t_end: file.sim.t_end, record: file.sim.record };
    Ok(Scenario { graph, sim })
}

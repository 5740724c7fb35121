//! Typed dataflow graph of components (objects) joined by links (arrows).
//!
//! A [`Graph`] is assembled from components and string bindings of the form
//! `"componentId.portName"`. [`Graph::compile`] validates it and produces an
//! immutable [`Model`] that can be evaluated at a `(t, state)` point or
//! integrated with [`simulate`].
//!
//! Feedback is legal only through integrated state: edges entering an input
//! flagged `state_only` on a stateful component are ignored when looking for
//! algebraic loops, because such inputs only feed the derivative.

mod sim;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::{UnitQuaternion, Vector3};
use thiserror::Error;

use crate::value::{Value, ValueTag};

pub use sim::{simulate, simulate_from, SimConfig, SimError};

#[derive(Clone, Debug, PartialEq)]
pub struct InputPort {
    pub name: String,
    pub tag: ValueTag,
    /// Only read by `derivative`, never by `evaluate`.
    pub state_only: bool,
    pub required: bool,
}

impl InputPort {
    pub fn new(name: impl Into<String>, tag: ValueTag) -> Self {
        Self { name: name.into(), tag, state_only: false, required: true }
    }

    pub fn state_only(mut self) -> Self {
        self.state_only = true;
        self
    }

    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputPort {
    pub name: String,
    pub tag: ValueTag,
}

impl OutputPort {
    pub fn new(name: impl Into<String>, tag: ValueTag) -> Self {
        Self { name: name.into(), tag }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("input `{0}` is not available")]
    MissingInput(String),
    #[error("input `{0}` carries the wrong value type")]
    WrongType(String),
    #[error("{0}")]
    Domain(String),
}

impl ComponentError {
    pub fn domain(msg: impl fmt::Display) -> Self {
        ComponentError::Domain(msg.to_string())
    }
}

/// Evaluation context handed to a component: time, its own state slice and
/// its input values (indexed like [`Component::input_ports`]).
pub struct Ctx<'a> {
    pub t: f64,
    pub state: &'a [f64],
    ports: &'a [InputPort],
    inputs: &'a [Option<&'a Value>],
}

impl<'a> Ctx<'a> {
    pub fn new(t: f64, state: &'a [f64], ports: &'a [InputPort], inputs: &'a [Option<&'a Value>]) -> Self {
        Self { t, state, ports, inputs }
    }

    pub fn input(&self, i: usize) -> Option<&'a Value> {
        self.inputs.get(i).copied().flatten()
    }

    fn name(&self, i: usize) -> String {
        self.ports.get(i).map(|p| p.name.clone()).unwrap_or_else(|| format!("#{i}"))
    }

    fn required(&self, i: usize) -> Result<&'a Value, ComponentError> {
        self.input(i).ok_or_else(|| ComponentError::MissingInput(self.name(i)))
    }

    pub fn scalar(&self, i: usize) -> Result<f64, ComponentError> {
        self.required(i)?.as_scalar().ok_or_else(|| ComponentError::WrongType(self.name(i)))
    }

    pub fn vec3(&self, i: usize) -> Result<Vector3<f64>, ComponentError> {
        self.required(i)?.as_vec3().ok_or_else(|| ComponentError::WrongType(self.name(i)))
    }

    pub fn quat(&self, i: usize) -> Result<UnitQuaternion<f64>, ComponentError> {
        self.required(i)?.as_quat().ok_or_else(|| ComponentError::WrongType(self.name(i)))
    }

    pub fn scalar_or(&self, i: usize, default: f64) -> Result<f64, ComponentError> {
        match self.input(i) {
            None => Ok(default),
            Some(_) => self.scalar(i),
        }
    }

    pub fn vec3_or(&self, i: usize, default: Vector3<f64>) -> Result<Vector3<f64>, ComponentError> {
        match self.input(i) {
            None => Ok(default),
            Some(_) => self.vec3(i),
        }
    }

    pub fn is_bound(&self, i: usize) -> bool {
        self.input(i).is_some()
    }
}

/// A node kind. Stateless components only implement `evaluate`; stateful
/// ones expose their current state on outputs and define `derivative`.
pub trait Component: Send + Sync + fmt::Debug {
    fn kind(&self) -> &str;
    fn input_ports(&self) -> Vec<InputPort>;
    fn output_ports(&self) -> Vec<OutputPort>;

    fn state_len(&self) -> usize {
        0
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.state_len()]
    }

    /// Output values in the order of `output_ports`. Inputs flagged
    /// `state_only` are not available here.
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError>;

    fn derivative(&self, _ctx: &Ctx<'_>, _dx: &mut [f64]) -> Result<(), ComponentError> {
        Ok(())
    }

    /// Projects the state back onto its manifold after an integration step
    /// (e.g. quaternion renormalization).
    fn normalize_state(&self, _state: &mut [f64]) {}
}

pub struct Node {
    pub id: String,
    pub component: Box<dyn Component>,
    /// input port name -> "componentId.portName"
    pub bindings: BTreeMap<String, String>,
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Node").field("id", &self.id).field("kind", &self.component.kind()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Finding {
    DuplicateId(String),
    InvalidId(String),
    UnknownInput { component: String, input: String },
    DanglingBinding { component: String, input: String, target: String },
    TagMismatch { component: String, input: String, target: String, expected: ValueTag, found: ValueTag },
    UnboundInput { component: String, input: String },
    AlgebraicLoop(Vec<String>),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId(id) => write!(f, "duplicate component id `{id}`"),
            Finding::InvalidId(id) => write!(f, "invalid component id `{id}` (must be non-empty, without '.')"),
            Finding::UnknownInput { component, input } => {
                write!(f, "component `{component}` has no input port `{input}`")
            }
            Finding::DanglingBinding { component, input, target } => {
                write!(f, "`{component}.{input}` is bound to `{target}`, which does not exist")
            }
            Finding::TagMismatch { component, input, target, expected, found } => write!(
                f,
                "`{component}.{input}` expects {expected} but `{target}` produces {found}"
            ),
            Finding::UnboundInput { component, input } => {
                write!(f, "required input `{component}.{input}` is not bound")
            }
            Finding::AlgebraicLoop(ids) => write!(f, "algebraic loop through {{{}}}", ids.join(", ")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// Empty binding list for components without inputs.
pub const NO_BINDINGS: [(&str, &str); 0] = [];

/// Splits `"componentId.portName"` at the first dot.
pub fn split_port_ref(s: &str) -> Option<(&str, &str)> {
    let (c, p) = s.split_once('.')?;
    if c.is_empty() || p.is_empty() {
        None
    } else {
        Some((c, p))
    }
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<I, K, V>(&mut self, id: impl Into<String>, component: impl Component + 'static, bindings: I) -> &mut Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.add_boxed(id, Box::new(component), bindings.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    pub fn add_boxed(&mut self, id: impl Into<String>, component: Box<dyn Component>, bindings: BTreeMap<String, String>) -> &mut Self {
        self.nodes.push(Node { id: id.into(), component, bindings });
        self
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reports dangling bindings, tag mismatches, duplicate ids, unbound
    /// required inputs and algebraic loops. The graph is acceptable iff the
    /// report is empty.
    pub fn validate(&self) -> ValidationReport {
        self.analyze().0
    }

    fn analyze(&self) -> (ValidationReport, Vec<Vec<Option<(usize, usize)>>>) {
        let mut findings = BTreeSet::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id.is_empty() || node.id.contains('.') {
                findings.insert(Finding::InvalidId(node.id.clone()));
            }
            if index.insert(node.id.as_str(), i).is_some() {
                findings.insert(Finding::DuplicateId(node.id.clone()));
            }
        }
        let outputs: Vec<Vec<OutputPort>> = self.nodes.iter().map(|n| n.component.output_ports()).collect();
        let mut sources = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let ports = node.component.input_ports();
            let mut src = vec![None; ports.len()];
            for name in node.bindings.keys() {
                if !ports.iter().any(|p| &p.name == name) {
                    findings.insert(Finding::UnknownInput { component: node.id.clone(), input: name.clone() });
                }
            }
            for (pi, port) in ports.iter().enumerate() {
                let Some(target) = node.bindings.get(&port.name) else {
                    if port.required {
                        findings.insert(Finding::UnboundInput { component: node.id.clone(), input: port.name.clone() });
                    }
                    continue;
                };
                let dangling = || Finding::DanglingBinding {
                    component: node.id.clone(),
                    input: port.name.clone(),
                    target: target.clone(),
                };
                let Some((cid, pname)) = split_port_ref(target) else {
                    findings.insert(dangling());
                    continue;
                };
                let Some(&ci) = index.get(cid) else {
                    findings.insert(dangling());
                    continue;
                };
                let Some(oi) = outputs[ci].iter().position(|o| o.name == pname) else {
                    findings.insert(dangling());
                    continue;
                };
                let found = outputs[ci][oi].tag;
                if found != port.tag {
                    findings.insert(Finding::TagMismatch {
                        component: node.id.clone(),
                        input: port.name.clone(),
                        target: target.clone(),
                        expected: port.tag,
                        found,
                    });
                    continue;
                }
                src[pi] = Some((ci, oi));
            }
            sources.push(src);
        }
        for scc in self.algebraic_loops(&sources) {
            findings.insert(Finding::AlgebraicLoop(scc));
        }
        (ValidationReport { findings: findings.into_iter().collect() }, sources)
    }

    /// Immediate-dependency adjacency: `deps[i]` lists nodes whose outputs
    /// node `i` needs before it can be evaluated.
    fn dependencies(&self, sources: &[Vec<Option<(usize, usize)>>]) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .zip(sources)
            .map(|(node, src)| {
                let stateful = node.component.state_len() > 0;
                let ports = node.component.input_ports();
                let mut deps: Vec<usize> = ports
                    .iter()
                    .zip(src)
                    .filter(|(p, _)| !(stateful && p.state_only))
                    .filter_map(|(_, s)| s.map(|(c, _)| c))
                    .collect();
                deps.sort_unstable();
                deps.dedup();
                deps
            })
            .collect()
    }

    fn algebraic_loops(&self, sources: &[Vec<Option<(usize, usize)>>]) -> Vec<Vec<String>> {
        let deps = self.dependencies(sources);
        strongly_connected(&deps)
            .into_iter()
            .filter(|scc| scc.len() > 1 || deps[scc[0]].contains(&scc[0]))
            .map(|scc| {
                let mut ids: Vec<String> = scc.iter().map(|&i| self.nodes[i].id.clone()).collect();
                ids.sort();
                ids
            })
            .collect()
    }

    /// Validates and freezes the graph into an executable [`Model`].
    pub fn compile(self) -> Result<Model, ValidationReport> {
        let (report, sources) = self.analyze();
        if !report.is_empty() {
            return Err(report);
        }
        let deps = self.dependencies(&sources);
        let order = topological_order(&deps);
        let mut offset = 0;
        let nodes = self
            .nodes
            .into_iter()
            .zip(sources)
            .map(|(node, src)| {
                let state_len = node.component.state_len();
                let compiled = CompiledNode {
                    inputs: node.component.input_ports(),
                    outputs: node.component.output_ports(),
                    id: node.id,
                    component: node.component,
                    sources: src,
                    state_offset: offset,
                    state_len,
                };
                offset += state_len;
                compiled
            })
            .collect::<Vec<_>>();
        let lookup = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        Ok(Model { nodes, order, deps, state_len: offset, lookup })
    }
}

/// Tarjan's algorithm, iterative to stay clear of recursion limits.
fn strongly_connected(deps: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = deps.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut next)) = work.last_mut() {
            if *next == 0 && index[v] == usize::MAX {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *next < deps[v].len() {
                let w = deps[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut scc = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                scc.sort_unstable();
                out.push(scc);
            }
        }
    }
    out
}

/// Kahn's algorithm; among ready nodes the lowest index goes first, so the
/// order is a deterministic function of the graph.
fn topological_order(deps: &[Vec<usize>]) -> Vec<usize> {
    let n = deps.len();
    let mut indegree: Vec<usize> = deps.iter().map(|d| d.len()).collect();
    let mut dependents = vec![Vec::new(); n];
    for (i, d) in deps.iter().enumerate() {
        for &j in d {
            dependents[j].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &k in &dependents[i] {
            indegree[k] -= 1;
            if indegree[k] == 0 {
                ready.insert(k);
            }
        }
    }
    order
}

#[derive(Debug)]
struct CompiledNode {
    id: String,
    component: Box<dyn Component>,
    inputs: Vec<InputPort>,
    outputs: Vec<OutputPort>,
    sources: Vec<Option<(usize, usize)>>,
    state_offset: usize,
    state_len: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("component `{component}`: {source}")]
    Component { component: String, source: ComponentError },
    #[error("component `{component}` produced a non-finite value on `{port}`")]
    NonFinite { component: String, port: String },
    #[error("state vector has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
}

impl EvalError {
    pub fn component_id(&self) -> Option<&str> {
        match self {
            EvalError::Component { component, .. } | EvalError::NonFinite { component, .. } => Some(component),
            EvalError::StateLength { .. } => None,
        }
    }
}

/// Output values of every component at one evaluation point.
#[derive(Clone, Debug)]
pub struct PortValues {
    values: Vec<Vec<Value>>,
    names: Vec<(String, Vec<String>)>,
}

impl PortValues {
    /// Looks up `"componentId.portName"`.
    pub fn get(&self, port_ref: &str) -> Option<&Value> {
        let (c, p) = split_port_ref(port_ref)?;
        let ci = self.names.iter().position(|(id, _)| id == c)?;
        let pi = self.names[ci].1.iter().position(|n| n == p)?;
        self.values[ci].get(pi)
    }

    pub fn scalar(&self, port_ref: &str) -> Option<f64> {
        self.get(port_ref)?.as_scalar()
    }

    pub fn vec3(&self, port_ref: &str) -> Option<Vector3<f64>> {
        self.get(port_ref)?.as_vec3()
    }
}

/// A validated, immutable graph ready for evaluation.
#[derive(Debug)]
pub struct Model {
    nodes: Vec<CompiledNode>,
    order: Vec<usize>,
    deps: Vec<Vec<usize>>,
    state_len: usize,
    lookup: HashMap<String, usize>,
}

impl Model {
    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.state_len);
        for node in &self.nodes {
            let init = node.component.initial_state();
            debug_assert_eq!(init.len(), node.state_len, "{} initial state length", node.id);
            x.extend(init);
        }
        x
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.id.as_str())
    }

    pub fn component(&self, id: &str) -> Option<&dyn Component> {
        self.lookup.get(id).map(|&i| self.nodes[i].component.as_ref())
    }

    /// Range of the flat state vector owned by component `id`.
    pub fn state_range(&self, id: &str) -> Option<std::ops::Range<usize>> {
        let n = &self.nodes[*self.lookup.get(id)?];
        Some(n.state_offset..n.state_offset + n.state_len)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Replaces the evaluation order. Fails unless `order` is a permutation
    /// that respects every dependency.
    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self, Self> {
        let n = self.nodes.len();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in order.iter().enumerate() {
            if i >= n || pos[i] != usize::MAX {
                return Err(self);
            }
            pos[i] = k;
        }
        if order.len() != n {
            return Err(self);
        }
        let ok = self.deps.iter().enumerate().all(|(i, d)| d.iter().all(|&j| pos[j] < pos[i]));
        if !ok {
            return Err(self);
        }
        self.order = order;
        Ok(self)
    }

    pub fn dependencies(&self) -> &[Vec<usize>] {
        &self.deps
    }

    fn gather<'v>(&self, node: &CompiledNode, values: &'v [Vec<Value>], with_state_only: bool) -> Vec<Option<&'v Value>> {
        let stateful = node.state_len > 0;
        node.inputs
            .iter()
            .zip(&node.sources)
            .map(|(port, src)| {
                if stateful && port.state_only && !with_state_only {
                    return None;
                }
                src.and_then(|(c, o)| values[c].get(o))
            })
            .collect()
    }

    /// Evaluates every component at `(t, state)` in topological order.
    pub fn eval_step(&self, t: f64, state: &[f64]) -> Result<PortValues, EvalError> {
        if state.len() != self.state_len {
            return Err(EvalError::StateLength { got: state.len(), expected: self.state_len });
        }
        let mut values: Vec<Vec<Value>> = vec![Vec::new(); self.nodes.len()];
        for &i in &self.order {
            let node = &self.nodes[i];
            let inputs = self.gather(node, &values, false);
            let ctx = Ctx::new(t, &state[node.state_offset..node.state_offset + node.state_len], &node.inputs, &inputs);
            let out = node
                .component
                .evaluate(&ctx)
                .map_err(|source| EvalError::Component { component: node.id.clone(), source })?;
            if out.len() != node.outputs.len() {
                return Err(EvalError::Component {
                    component: node.id.clone(),
                    source: ComponentError::domain(format!(
                        "produced {} outputs, declared {}",
                        out.len(),
                        node.outputs.len()
                    )),
                });
            }
            if let Some(k) = out.iter().position(|v| !v.is_finite()) {
                return Err(EvalError::NonFinite { component: node.id.clone(), port: node.outputs[k].name.clone() });
            }
            values[i] = out;
        }
        Ok(PortValues { values, names: self.port_names() })
    }

    fn port_names(&self) -> Vec<(String, Vec<String>)> {
        self.nodes
            .iter()
            .map(|n| (n.id.clone(), n.outputs.iter().map(|o| o.name.clone()).collect()))
            .collect()
    }

    /// Evaluates outputs and then the state derivative of every stateful
    /// component.
    pub fn derivative(&self, t: f64, state: &[f64], dx: &mut [f64]) -> Result<PortValues, EvalError> {
        let ports = self.eval_step(t, state)?;
        for node in self.nodes.iter().filter(|n| n.state_len > 0) {
            let inputs = self.gather(node, &ports.values, true);
            let range = node.state_offset..node.state_offset + node.state_len;
            let ctx = Ctx::new(t, &state[range.clone()], &node.inputs, &inputs);
            node.component
                .derivative(&ctx, &mut dx[range.clone()])
                .map_err(|source| EvalError::Component { component: node.id.clone(), source })?;
            if dx[range].iter().any(|d| !d.is_finite()) {
                return Err(EvalError::NonFinite { component: node.id.clone(), port: "<derivative>".into() });
            }
        }
        Ok(ports)
    }

    pub fn normalize_state(&self, state: &mut [f64]) {
        for node in self.nodes.iter().filter(|n| n.state_len > 0) {
            node.component.normalize_state(&mut state[node.state_offset..node.state_offset + node.state_len]);
        }
    }

    /// Component owning flat state index `k`.
    fn state_owner(&self, k: usize) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| k >= n.state_offset && k < n.state_offset + n.state_len)
            .map(|n| n.id.as_str())
    }

    fn output_tag(&self, port_ref: &str) -> Option<ValueTag> {
        let (c, p) = split_port_ref(port_ref)?;
        let node = &self.nodes[*self.lookup.get(c)?];
        node.outputs.iter().find(|o| o.name == p).map(|o| o.tag)
    }
}

//! Reference frames: local poses, composition into world poses, relative
//! motion, and the `frame` / `relative` component kinds.
//!
//! Orientation quaternions are scalar-first and describe the child axes
//! relative to the parent: with `R = R(Q)`, child components of a vector are
//! `v_child = Rᵀ v_parent`.
//!
//! Frame ports carry the world pose as four outputs: `r` (origin, m), `q`
//! (orientation), `v` (origin velocity, m/s) and `w` (angular velocity,
//! rad/s), all vectors in world axes.

use std::collections::HashMap;

use nalgebra::{UnitQuaternion, Vector3};
use thiserror::Error;

use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// Pose of a frame relative to its parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    /// Origin in parent axes (m).
    pub r: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
    /// Origin velocity relative to the parent, parent axes (m/s).
    pub v: Vector3<f64>,
    /// Angular velocity relative to the parent, in this frame's axes (rad/s).
    pub w: Vector3<f64>,
}

impl Default for LocalFrame {
    fn default() -> Self {
        Self { r: Vector3::zeros(), q: UnitQuaternion::identity(), v: Vector3::zeros(), w: Vector3::zeros() }
    }
}

impl LocalFrame {
    pub fn at(r: Vector3<f64>) -> Self {
        Self { r, ..Self::default() }
    }

    /// Pose after `t` seconds of constant local rates.
    pub fn advanced(&self, t: f64) -> Self {
        let spin = UnitQuaternion::from_scaled_axis(self.w * t);
        Self { r: self.r + self.v * t, q: self.q * spin, ..*self }
    }
}

/// World kinematic state of a frame; every vector in world axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub r: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self { r: Vector3::zeros(), q: UnitQuaternion::identity(), v: Vector3::zeros(), w: Vector3::zeros() }
    }

    /// World pose of a child attached to `self` with local pose `local`.
    pub fn compose(&self, local: &LocalFrame) -> Pose {
        let arm = self.q * local.r;
        let q = self.q * local.q;
        Pose { r: self.r + arm, q, v: self.v + self.w.cross(&arm) + self.q * local.v, w: self.w + q * local.w }
    }

    /// World vector expressed in this frame's axes.
    pub fn to_local_axes(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q.inverse_transform_vector(v)
    }

    /// World point expressed in this frame.
    pub fn to_local_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.q.inverse_transform_vector(&(p - self.r))
    }

    /// Angular velocity in this frame's axes.
    pub fn body_rate(&self) -> Vector3<f64> {
        self.to_local_axes(&self.w)
    }
}

/// Kinematics of frame `b` seen from frame `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeState {
    pub distance: f64,
    /// Origin of `b` in `a` axes (m).
    pub position: Vector3<f64>,
    /// Velocity of `b`'s origin as observed in rotating `a`, `a` axes (m/s).
    pub velocity: Vector3<f64>,
    /// Orientation of `b` in `a`.
    pub orientation: UnitQuaternion<f64>,
    /// Angular velocity of `b` relative to `a`, in `b` axes (rad/s).
    pub angular_velocity: Vector3<f64>,
}

impl RelativeState {
    /// The same relation read as a local frame of `b` inside `a`.
    pub fn as_local(&self) -> LocalFrame {
        LocalFrame { r: self.position, q: self.orientation, v: self.velocity, w: self.angular_velocity }
    }
}

pub fn relative(a: &Pose, b: &Pose) -> RelativeState {
    let d = b.r - a.r;
    let position = a.to_local_axes(&d);
    let velocity = a.to_local_axes(&(b.v - a.v - a.w.cross(&d)));
    RelativeState {
        distance: position.norm(),
        position,
        velocity,
        orientation: a.q.inverse() * b.q,
        angular_velocity: b.to_local_axes(&(b.w - a.w)),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("unknown frame `{0}`")]
    Unknown(String),
    #[error("frame `{frame}` has unknown parent `{parent}`")]
    UnknownParent { frame: String, parent: String },
    #[error("cyclic frame parentage through `{0}`")]
    Cycle(String),
}

/// Named frames with optional parents; frames without a parent hang off the
/// world.
#[derive(Clone, Debug, Default)]
pub struct FrameTree {
    frames: HashMap<String, (Option<String>, LocalFrame)>,
}

impl FrameTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, parent: Option<&str>, local: LocalFrame) {
        self.frames.insert(id.into(), (parent.map(str::to_string), local));
    }

    pub fn world_pose(&self, id: &str) -> Result<Pose, FrameError> {
        let mut chain: Vec<(String, LocalFrame)> = Vec::new();
        let mut cur = id.to_string();
        loop {
            let Some((parent, local)) = self.frames.get(&cur) else {
                return Err(match chain.last() {
                    None => FrameError::Unknown(cur),
                    Some((child, _)) => FrameError::UnknownParent { frame: child.clone(), parent: cur },
                });
            };
            if chain.iter().any(|(c, _)| *c == cur) {
                return Err(FrameError::Cycle(cur));
            }
            chain.push((cur.clone(), *local));
            match parent {
                Some(p) => cur = p.clone(),
                None => break,
            }
        }
        Ok(chain.iter().rev().fold(Pose::identity(), |pose, (_, local)| pose.compose(local)))
    }
}

pub(crate) const POSE_PORTS: [(&str, ValueTag); 4] =
    [("r", ValueTag::Vec3), ("q", ValueTag::Quat), ("v", ValueTag::Vec3), ("w", ValueTag::Vec3)];

/// Optional input ports `<group>.r/q/v/w`; missing parts read as identity.
pub(crate) fn pose_inputs(group: &str) -> Vec<InputPort> {
    POSE_PORTS.iter().map(|(p, tag)| InputPort::new(format!("{group}.{p}"), *tag).optional()).collect()
}

pub(crate) fn pose_outputs(prefix: &str) -> Vec<OutputPort> {
    POSE_PORTS.iter().map(|(p, tag)| OutputPort::new(format!("{prefix}{p}"), *tag)).collect()
}

pub(crate) fn pose_values(p: &Pose) -> [Value; 4] {
    [Value::Vec3(p.r), Value::Quat(p.q), Value::Vec3(p.v), Value::Vec3(p.w)]
}

/// Reads the four pose inputs starting at input index `first`.
pub(crate) fn read_pose(ctx: &Ctx<'_>, first: usize) -> Result<Pose, ComponentError> {
    let q = match ctx.input(first + 1) {
        Some(_) => ctx.quat(first + 1)?,
        None => UnitQuaternion::identity(),
    };
    Ok(Pose {
        r: ctx.vec3_or(first, Vector3::zeros())?,
        q,
        v: ctx.vec3_or(first + 2, Vector3::zeros())?,
        w: ctx.vec3_or(first + 3, Vector3::zeros())?,
    })
}

/// A frame attached to an optional parent frame. Local pose parts may be
/// driven by inputs `r`, `q`, `v`, `w`; parts left unbound follow the
/// configured initial pose advanced at constant local rates.
#[derive(Clone, Debug, Default)]
pub struct FrameNode {
    pub local: LocalFrame,
}

impl FrameNode {
    pub fn new(local: LocalFrame) -> Self {
        Self { local }
    }
}

impl Component for FrameNode {
    fn kind(&self) -> &str {
        "frame"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        let mut p = pose_inputs("parent");
        p.extend(POSE_PORTS.iter().map(|(n, tag)| InputPort::new(*n, *tag).optional()));
        p
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        pose_outputs("")
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let parent = read_pose(ctx, 0)?;
        let free = self.local.advanced(ctx.t);
        let local = LocalFrame {
            r: if ctx.is_bound(4) { ctx.vec3(4)? } else { free.r },
            q: if ctx.is_bound(5) { ctx.quat(5)? } else { free.q },
            v: ctx.vec3_or(6, self.local.v)?,
            w: ctx.vec3_or(7, self.local.w)?,
        };
        Ok(pose_values(&parent.compose(&local)).to_vec())
    }
}

/// Relative motion of frame group `b` seen from frame group `a`.
#[derive(Clone, Debug, Default)]
pub struct RelativeNode;

impl Component for RelativeNode {
    fn kind(&self) -> &str {
        "relative"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        let mut p = pose_inputs("a");
        p.extend(pose_inputs("b"));
        p
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![
            OutputPort::new("distance", ValueTag::Scalar),
            OutputPort::new("position", ValueTag::Vec3),
            OutputPort::new("velocity", ValueTag::Vec3),
            OutputPort::new("q", ValueTag::Quat),
            OutputPort::new("w", ValueTag::Vec3),
        ]
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let rel = relative(&read_pose(ctx, 0)?, &read_pose(ctx, 4)?);
        Ok(vec![
            Value::Scalar(rel.distance),
            Value::Vec3(rel.position),
            Value::Vec3(rel.velocity),
            Value::Quat(rel.orientation),
            Value::Vec3(rel.angular_velocity),
        ])
    }
}

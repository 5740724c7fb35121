//! The shared value vocabulary carried on graph edges.
//!
//! Every component speaks in terms of [`Value`]; there are no pairwise
//! adapters between component kinds. SI units are a convention documented on
//! the ports that produce and consume each value.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};

use crate::imaging::GrayImage;
use crate::series::SeriesTable;
use crate::topology::IntMatrix;

/// Maximum tolerated deviation from unit norm for quaternion payloads.
pub const QUAT_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueTag {
    Scalar,
    Vec3,
    Quat,
    Matrix,
    IntMatrix,
    Series,
    Image,
    Table,
}

impl fmt::Display for ValueTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ValueTag::Scalar => "scalar",
            ValueTag::Vec3 => "vec3",
            ValueTag::Quat => "quat",
            ValueTag::Matrix => "matrix",
            ValueTag::IntMatrix => "int-matrix",
            ValueTag::Series => "series",
            ValueTag::Image => "image",
            ValueTag::Table => "table",
        };
        f.write_str(name)
    }
}

/// A small numeric table with named columns, e.g. a catalog query result.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Tagged runtime datum flowing on graph edges.
#[derive(Clone, Debug)]
pub enum Value {
    Scalar(f64),
    Vec3(Vector3<f64>),
    Quat(UnitQuaternion<f64>),
    Matrix(DMatrix<f64>),
    IntMatrix(Arc<IntMatrix>),
    Series(Arc<SeriesTable>),
    Image(Arc<GrayImage>),
    Table(Arc<Table>),
}

impl Value {
    pub fn tag(&self) -> ValueTag {
        match self {
            Value::Scalar(_) => ValueTag::Scalar,
            Value::Vec3(_) => ValueTag::Vec3,
            Value::Quat(_) => ValueTag::Quat,
            Value::Matrix(_) => ValueTag::Matrix,
            Value::IntMatrix(_) => ValueTag::IntMatrix,
            Value::Series(_) => ValueTag::Series,
            Value::Image(_) => ValueTag::Image,
            Value::Table(_) => ValueTag::Table,
        }
    }

    /// Builds a quaternion value from scalar-first components, rejecting
    /// payloads that are not unit length within [`QUAT_NORM_TOL`].
    pub fn try_quat(w: f64, x: f64, y: f64, z: f64) -> Option<Value> {
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > QUAT_NORM_TOL {
            return None;
        }
        Some(Value::Quat(UnitQuaternion::new_unchecked(q)))
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_vec3(&self) -> Option<Vector3<f64>> {
        match self {
            Value::Vec3(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_quat(&self) -> Option<UnitQuaternion<f64>> {
        match self {
            Value::Quat(q) => Some(*q),
            _ => None,
        }
    }

    /// True when every floating-point payload is finite. Integer, image and
    /// series payloads are finite by construction.
    pub fn is_finite(&self) -> bool {
        match self {
            Value::Scalar(x) => x.is_finite(),
            Value::Vec3(v) => v.iter().all(|x| x.is_finite()),
            Value::Quat(q) => q.coords.iter().all(|x| x.is_finite()),
            Value::Matrix(m) => m.iter().all(|x| x.is_finite()),
            Value::Table(t) => t.rows.iter().flatten().all(|x| x.is_finite()),
            Value::IntMatrix(_) | Value::Series(_) | Value::Image(_) => true,
        }
    }

    /// Flattens numeric payloads into named CSV columns. Returns the column
    /// suffixes and values; `None` for payloads that cannot be recorded.
    pub(crate) fn record_columns(&self) -> Option<Vec<(&'static str, f64)>> {
        match self {
            Value::Scalar(x) => Some(vec![("", *x)]),
            Value::Vec3(v) => Some(vec![(".x", v.x), (".y", v.y), (".z", v.z)]),
            Value::Quat(q) => Some(vec![(".w", q.w), (".x", q.i), (".y", q.j), (".z", q.k)]),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Scalar(x)
    }
}

impl From<Vector3<f64>> for Value {
    fn from(v: Vector3<f64>) -> Self {
        Value::Vec3(v)
    }
}

impl From<UnitQuaternion<f64>> for Value {
    fn from(q: UnitQuaternion<f64>) -> Self {
        Value::Quat(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quat_norm_checked() {
        assert!(Value::try_quat(1.0, 0.0, 0.0, 0.0).is_some());
        assert!(Value::try_quat(1.0, 1e-3, 0.0, 0.0).is_none());
    }

    #[test]
    fn finiteness() {
        assert!(Value::Scalar(1.0).is_finite());
        assert!(!Value::Vec3(Vector3::new(0.0, f64::NAN, 0.0)).is_finite());
        assert!(!Value::Matrix(DMatrix::from_element(2, 2, f64::INFINITY)).is_finite());
    }
}

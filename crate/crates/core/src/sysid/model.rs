use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SysIdError;
use crate::graph::{Component, ComponentError, Ctx, InputPort, OutputPort};
use crate::value::{Value, ValueTag};

/// Gain `k` and the eight factor coefficients `T1..T8` (s² or s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    pub k: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    #[serde(rename = "T4")]
    pub t4: f64,
    #[serde(rename = "T5")]
    pub t5: f64,
    #[serde(rename = "T6")]
    pub t6: f64,
    #[serde(rename = "T7")]
    pub t7: f64,
    #[serde(rename = "T8")]
    pub t8: f64,
}

fn quad(a: f64, b: f64, s: Complex<f64>) -> Complex<f64> {
    s * s * a + s * b + 1.0
}

/// Natural frequency of `a s² + b s + 1` (or `1/b` when first order).
fn corner(a: f64, b: f64) -> f64 {
    if a.abs() > 0.0 {
        1.0 / a.abs().sqrt()
    } else if b.abs() > 0.0 {
        1.0 / b.abs()
    } else {
        f64::INFINITY
    }
}

impl TransferModel {
    pub fn integrator(k: f64) -> Self {
        Self::from_params(&[k, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// `[k, T1, ..., T8]`.
    pub fn params(&self) -> [f64; 9] {
        [self.k, self.t1, self.t2, self.t3, self.t4, self.t5, self.t6, self.t7, self.t8]
    }

    pub fn from_params(p: &[f64]) -> Self {
        Self { k: p[0], t1: p[1], t2: p[2], t3: p[3], t4: p[4], t5: p[5], t6: p[6], t7: p[7], t8: p[8] }
    }

    /// Orders the numerator factors and the denominator factors by natural
    /// frequency, so equal transfer functions compare equal parameter-wise.
    pub fn canonical(&self) -> Self {
        let mut m = *self;
        if corner(m.t1, m.t2) > corner(m.t5, m.t6) {
            std::mem::swap(&mut m.t1, &mut m.t5);
            std::mem::swap(&mut m.t2, &mut m.t6);
        }
        if corner(m.t3, m.t4) > corner(m.t7, m.t8) {
            std::mem::swap(&mut m.t3, &mut m.t7);
            std::mem::swap(&mut m.t4, &mut m.t8);
        }
        m
    }

    /// Numerator and denominator coefficients, lowest power first.
    pub fn polynomials(&self) -> (Vec<f64>, Vec<f64>) {
        let num = poly_mul(&[1.0, self.t2, self.t1], &[1.0, self.t6, self.t5]).iter().map(|c| c * self.k).collect();
        let den = poly_mul(&[0.0, 1.0], &poly_mul(&[1.0, self.t4, self.t3], &[1.0, self.t8, self.t7]));
        (num, den)
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `W(iω)`.
pub fn eval_w(m: &TransferModel, omega: f64) -> Result<Complex<f64>, SysIdError> {
    let s = Complex::new(0.0, omega);
    let d1 = quad(m.t3, m.t4, s);
    let d2 = quad(m.t7, m.t8, s);
    if !(omega > 0.0) || d1.norm() < 1e-300 || d2.norm() < 1e-300 {
        return Err(SysIdError::Pole(omega));
    }
    Ok(m.k / s * quad(m.t1, m.t2, s) / d1 * quad(m.t5, m.t6, s) / d2)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("improper transfer function (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },
    #[error("inconsistent state-space shapes")]
    Shape,
}

/// Single-input single-output state-space system `ẋ = Ax + Bu, y = Cx + Du`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    pub x0: Vec<f64>,
}

fn trim(p: &[f64]) -> &[f64] {
    let n = p.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    &p[..n]
}

impl Lti {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Result<Self, LtiError> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(LtiError::Shape);
        }
        Ok(Self { a, b, c, d, x0: vec![0.0; n] })
    }

    /// Controllable canonical realization of `num(s)/den(s)` (coefficients
    /// lowest power first).
    pub fn from_tf(num: &[f64], den: &[f64]) -> Result<Self, LtiError> {
        let den = trim(den);
        let num = trim(num);
        if den.is_empty() {
            return Err(LtiError::ZeroDenominator);
        }
        let n = den.len() - 1;
        if num.len() > den.len() {
            return Err(LtiError::Improper { num: num.len() - 1, den: n });
        }
        let lead = den[n];
        let a_coef: Vec<f64> = den.iter().map(|c| c / lead).collect();
        let mut b_coef: Vec<f64> = (0..=n).map(|i| num.get(i).copied().unwrap_or(0.0) / lead).collect();
        let d = b_coef[n];
        for i in 0..=n {
            b_coef[i] -= d * a_coef[i];
        }
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -a_coef[j];
        }
        let mut b = DVector::zeros(n);
        if n > 0 {
            b[n - 1] = 1.0;
        }
        let c = DVector::from_iterator(n, b_coef[..n].iter().copied());
        Self::new(a, b, c, d)
    }

    pub fn from_model(m: &TransferModel) -> Result<Self, LtiError> {
        let (num, den) = m.polynomials();
        Self::from_tf(&num, &den)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

impl Component for Lti {
    fn kind(&self) -> &str {
        "lti"
    }
    fn input_ports(&self) -> Vec<InputPort> {
        let u = InputPort::new("u", ValueTag::Scalar);
        vec![if self.d == 0.0 && self.order() > 0 { u.state_only() } else { u }]
    }
    fn output_ports(&self) -> Vec<OutputPort> {
        vec![OutputPort::new("y", ValueTag::Scalar)]
    }
    fn state_len(&self) -> usize {
        self.order()
    }
    fn initial_state(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn evaluate(&self, ctx: &Ctx<'_>) -> Result<Vec<Value>, ComponentError> {
        let cx: f64 = self.c.iter().zip(ctx.state).map(|(c, x)| c * x).sum();
        let du = if self.d == 0.0 { 0.0 } else { self.d * ctx.scalar(0)? };
        Ok(vec![Value::Scalar(cx + du)])
    }
    fn derivative(&self, ctx: &Ctx<'_>, dx: &mut [f64]) -> Result<(), ComponentError> {
        let u = ctx.scalar(0)?;
        let n = self.order();
        for i in 0..n {
            let mut acc = self.b[i] * u;
            for j in 0..n {
                acc += self.a[(i, j)] * ctx.state[j];
            }
            dx[i] = acc;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn pure_integrator() {
        let w = eval_w(&TransferModel::integrator(1.0), 2.0).unwrap();
        assert!((w.norm() - 0.5).abs() < 1e-15);
        assert!((w.arg() + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn lead_term() {
        let m = TransferModel { t2: 1.0, ..TransferModel::integrator(1.0) };
        let w = eval_w(&m, 1.0).unwrap();
        assert!((w - Complex::new(1.0, -1.0)).norm() < 1e-15);
        assert!((w.norm() - SQRT_2).abs() < 1e-15 && (w.arg() + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn canonical_orders_factors() {
        let m = TransferModel::from_params(&[1.0, 0.01, 0.02, 4.0, 0.5, 1.0, 0.3, 0.25, 0.1]);
        let c = m.canonical();
        assert_eq!(c.params(), [1.0, 1.0, 0.3, 4.0, 0.5, 0.01, 0.02, 0.25, 0.1]);
        for w in [0.3, 1.0, 7.0] {
            assert!((eval_w(&m, w).unwrap() - eval_w(&c, w).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn realization_matches_transfer_function() {
        let m = TransferModel::from_params(&[2.0, 0.5, 0.2, 1.0, 0.4, 0.1, 0.05, 0.2, 0.1]);
        let sys = Lti::from_model(&m).unwrap();
        assert_eq!(sys.order(), 5);
        for w in [0.3, 1.0, 4.0] {
            let s = Complex::new(0.0, w);
            let n = sys.order();
            let mut si_a = DMatrix::<Complex<f64>>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    si_a[(i, j)] = Complex::new(-sys.a[(i, j)], 0.0);
                }
                si_a[(i, i)] += s;
            }
            let b = sys.b.map(|x| Complex::new(x, 0.0));
            let x = si_a.lu().solve(&b).unwrap();
            let y: Complex<f64> = sys.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum::<Complex<f64>>() + sys.d;
            assert!((y - eval_w(&m, w).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn improper_rejected() {
        assert!(matches!(Lti::from_tf(&[1.0, 1.0], &[1.0]), Err(LtiError::Improper { .. })));
        let lag = Lti::from_tf(&[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(lag.a[(0, 0)], -1.0);
    }
}

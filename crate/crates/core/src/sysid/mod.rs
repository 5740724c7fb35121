//! Frequency-domain identification: chirp excitation, windowed gain/phase
//! estimation and Levenberg–Marquardt fitting of the rational model
//!
//! `W(s) = (k/s) · (T1 s² + T2 s + 1)/(T3 s² + T4 s + 1) · (T5 s² + T6 s + 1)/(T7 s² + T8 s + 1)`.

mod chirp;
mod estimate;
mod fit;
mod model;

pub use chirp::{chirp, Chirp, ChirpSpec};
pub use estimate::{estimate_response, infer_sweep, usable_band, Sweep};
pub use fit::{fit_model, initial_guess, FitReport};
pub use model::{eval_w, Lti, LtiError, TransferModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SysIdError {
    #[error("input and output lengths differ ({u} vs {y})")]
    Length { u: usize, y: usize },
    #[error("cannot infer the sweep law: {0}")]
    Sweep(String),
    #[error("frequency {omega} rad/s is outside the swept band [{lo}, {hi}]")]
    OutOfBand { omega: f64, lo: f64, hi: f64 },
    #[error("input has no energy at {0} rad/s")]
    Unobservable(f64),
    #[error("need at least {need} frequency samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("non-finite residual at the initial parameters")]
    NonFiniteInit,
    #[error("model denominator vanishes at {0} rad/s")]
    Pole(f64),
}

/// Measured gain/phase samples, phase unwrapped along increasing `omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqResponse {
    pub omega: Vec<f64>,
    pub gain: Vec<f64>,
    pub phase: Vec<f64>,
}

impl FreqResponse {
    /// Sorts by frequency and unwraps the phase so successive samples differ
    /// by less than π.
    pub fn new(mut samples: Vec<(f64, f64, f64)>) -> Self {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let omega = samples.iter().map(|s| s.0).collect();
        let gain = samples.iter().map(|s| s.1).collect();
        let phase = unwrap(&samples.iter().map(|s| s.2).collect::<Vec<_>>());
        Self { omega, gain, phase }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `20·log10(gain)`.
    pub fn gain_db(&self) -> Vec<f64> {
        self.gain.iter().map(|g| 20.0 * g.log10()).collect()
    }
}

pub fn unwrap(phase: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out: Vec<f64> = Vec::with_capacity(phase.len());
    for &p in phase {
        let q = match out.last() {
            None => p,
            Some(&prev) => p - TAU * ((p - prev + PI) / TAU).floor(),
        };
        out.push(q);
    }
    out
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

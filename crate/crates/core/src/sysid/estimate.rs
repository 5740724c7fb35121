use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};

use super::{FreqResponse, SysIdError};

/// Linear sweep law `θ(t) = θ0 + a t + b t²` recovered from the excitation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub theta0: f64,
    pub a: f64,
    pub b: f64,
    /// Span of the record (s).
    pub duration: f64,
}

impl Sweep {
    pub fn frequency(&self, t: f64) -> f64 {
        self.a + 2.0 * self.b * t
    }

    pub fn band(&self) -> (f64, f64) {
        let (f0, f1) = (self.frequency(0.0), self.frequency(self.duration));
        (f0.min(f1), f0.max(f1))
    }
}

/// Fits the phase of a chirp to its zero crossings, which sit at
/// `θ = θ0 + kπ`.
pub fn infer_sweep(u: &[f64], dt: f64) -> Result<Sweep, SysIdError> {
    if u.len() < 2 || !(dt > 0.0) {
        return Err(SysIdError::Sweep("record too short".into()));
    }
    let mut crossings = Vec::new();
    for i in 0..u.len() - 1 {
        let (p, q) = (u[i], u[i + 1]);
        if (p <= 0.0 && q > 0.0) || (p >= 0.0 && q < 0.0) {
            crossings.push((i as f64 + p / (p - q)) * dt);
        }
    }
    if crossings.len() < 4 {
        return Err(SysIdError::Sweep(format!("only {} zero crossings", crossings.len())));
    }
    let duration = (u.len() - 1) as f64 * dt;
    let n = crossings.len();
    let mut design = DMatrix::zeros(n, 3);
    let mut rhs = DVector::zeros(n);
    for (k, &t) in crossings.iter().enumerate() {
        let tau = t / duration;
        design[(k, 0)] = 1.0;
        design[(k, 1)] = tau;
        design[(k, 2)] = tau * tau;
        rhs[k] = k as f64 * PI;
    }
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| SysIdError::Sweep(e.to_string()))?;
    Ok(Sweep { theta0: sol[0], a: sol[1] / duration, b: sol[2] / (duration * duration), duration })
}

fn window_len(omega: f64, dt: f64) -> f64 {
    (4.0 * 2.0 * PI / omega).max(64.0 * dt)
}

/// Frequencies for which a full analysis window fits inside the record, the
/// sweep spreads less than 10 % across the window, and the sampling gives at
/// least eight points per period.
pub fn usable_band(sweep: &Sweep, dt: f64) -> Option<(f64, f64)> {
    let (lo, hi) = sweep.band();
    if !(lo > 0.0) {
        return None;
    }
    let grid = super::log_space(lo, hi, 4000);
    let ok: Vec<f64> = grid
        .into_iter()
        .filter(|&w| {
            let l = window_len(w, dt);
            let tc = if sweep.b.abs() < 1e-15 { sweep.duration / 2.0 } else { (w - sweep.a) / (2.0 * sweep.b) };
            let spread = 2.0 * sweep.b.abs() * l / w;
            tc - l / 2.0 >= 0.0 && tc + l / 2.0 <= sweep.duration && spread <= 0.1 && w * dt <= PI / 4.0
        })
        .collect();
    Some((*ok.first()?, *ok.last()?))
}

fn detrend_weighted(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean_i = (n - 1.0) / 2.0;
    let mean_x = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (v - mean_x);
        sxx += di * di;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter()
        .zip(w)
        .enumerate()
        .map(|(i, (v, wi))| wi * (v - mean_x - slope * (i as f64 - mean_i)))
        .collect()
}

/// Gain and phase of `y` relative to the chirp `u` at each requested
/// frequency, by Hann-windowed quadrature correlation over a window centered
/// where the sweep passes that frequency.
pub fn estimate_response(u: &[f64], y: &[f64], dt: f64, omegas: &[f64]) -> Result<FreqResponse, SysIdError> {
    if u.len() != y.len() {
        return Err(SysIdError::Length { u: u.len(), y: y.len() });
    }
    let sweep = infer_sweep(u, dt)?;
    let (lo, hi) = sweep.band();
    let n = u.len();
    let mut samples = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        if !(omega >= lo && omega <= hi) || omega <= 0.0 {
            return Err(SysIdError::OutOfBand { omega, lo, hi });
        }
        let tc = if sweep.b.abs() < 1e-15 { sweep.duration / 2.0 } else { (omega - sweep.a) / (2.0 * sweep.b) };
        let len = ((window_len(omega, dt) / dt).round() as usize).clamp(2, n);
        let start = ((tc / dt).round() as isize - (len / 2) as isize).clamp(0, (n - len) as isize) as usize;
        let hann: Vec<f64> = (0..len).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (len - 1) as f64).cos()).collect();
        let wsum: f64 = hann.iter().sum();
        let uw = detrend_weighted(&u[start..start + len], &hann);
        let yw = detrend_weighted(&y[start..start + len], &hann);
        let (mut uc, mut yc) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for k in 0..len {
            let e = Complex::from_polar(1.0, -omega * k as f64 * dt);
            uc += e * uw[k];
            yc += e * yw[k];
        }
        uc /= wsum;
        yc /= wsum;
        if uc.norm() < 1e-12 {
            return Err(SysIdError::Unobservable(omega));
        }
        let w = yc / uc;
        samples.push((omega, w.norm(), w.arg()));
    }
    Ok(FreqResponse::new(samples))
}

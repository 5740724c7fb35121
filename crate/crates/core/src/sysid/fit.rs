use nalgebra::{DMatrix, DVector};

use super::{eval_w, FreqResponse, SysIdError, TransferModel};

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub model: TransferModel,
    /// Sum of squared residuals at `model`.
    pub residual: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-10;

/// Residual channels per sample: log-gain error, cosine and sine of phase
/// error. `None` if the model cannot be evaluated.
fn residuals(p: &[f64], resp: &FreqResponse) -> Option<DVector<f64>> {
    let m = TransferModel::from_params(p);
    let n = resp.len();
    let mut r = DVector::zeros(3 * n);
    for i in 0..n {
        let w = eval_w(&m, resp.omega[i]).ok()?;
        let mag = w.norm();
        if !(mag > 0.0) || !mag.is_finite() {
            return None;
        }
        r[3 * i] = mag.ln() - resp.gain[i].ln();
        r[3 * i + 1] = w.re / mag - resp.phase[i].cos();
        r[3 * i + 2] = w.im / mag - resp.phase[i].sin();
    }
    r.iter().all(|x| x.is_finite()).then_some(r)
}

fn jacobian(p: &[f64], r0: &DVector<f64>, resp: &FreqResponse) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = if p[j] == 0.0 { 1e-6 } else { 1e-6 * p[j].abs() };
        q[j] = p[j] + h;
        let r = residuals(&q, resp)?;
        q[j] = p[j];
        jac.set_column(j, &((r - r0) / h));
    }
    Some(jac)
}

/// Levenberg–Marquardt fit of `W(s)` to a measured response, starting from
/// `init`. Steps are accepted only if they lower the residual, so the
/// returned model is the best one visited.
pub fn fit_model(resp: &FreqResponse, init: &TransferModel) -> Result<FitReport, SysIdError> {
    if resp.len() < 9 {
        return Err(SysIdError::TooFewSamples { need: 9, got: resp.len() });
    }
    let mut p = init.params().to_vec();
    let mut r = residuals(&p, resp).ok_or(SysIdError::NonFiniteInit)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let Some(jac) = jacobian(&p, &r, resp) else { break };
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        grad_norm = grad.norm();
        if grad_norm < GRAD_TOL {
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..p.len() {
                let d = jtj[(i, i)];
                a[(i, i)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            match residuals(&trial, resp) {
                Some(rt) if rt.norm_squared() < cost => {
                    p = trial;
                    cost = rt.norm_squared();
                    r = rt;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    Ok(FitReport { model: TransferModel::from_params(&p), residual: cost, iterations, gradient_norm: grad_norm })
}

/// Starting point for [`fit_model`] read off a measured response.
///
/// `k` comes from `ω·|W|` at the lowest frequency. Peaks of `ω·|W|` seed the
/// denominator factors and dips seed the numerator factors, strongest first,
/// with damping from the peak sharpness. Missing factors become cancelling
/// pairs above the band.
pub fn initial_guess(resp: &FreqResponse) -> TransferModel {
    let n = resp.len();
    let g: Vec<f64> = (0..n).map(|i| (resp.gain[i] * resp.omega[i]).ln()).collect();
    let k = g.first().map_or(1.0, |v| v.exp());
    // (frequency, prominence, is_peak)
    let mut extrema: Vec<(f64, f64, bool)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let (l, c, r) = (g[i - 1], g[i], g[i + 1]);
        let peak = c > l && c > r;
        if !(peak || (c < l && c < r)) {
            continue;
        }
        let reach = |dir: isize| -> f64 {
            let mut j = i as isize;
            let mut best = c;
            while j + dir >= 0 && (j + dir) < n as isize {
                j += dir;
                let v = g[j as usize];
                if (peak && v > c) || (!peak && v < c) {
                    break;
                }
                best = if peak { best.min(v) } else { best.max(v) };
            }
            (c - best).abs()
        };
        extrema.push((resp.omega[i], reach(-1).min(reach(1)), peak));
    }
    extrema.sort_by(|a, b| b.1.total_cmp(&a.1));
    let factor = |w: f64, prominence: f64| {
        let zeta = (0.5 / prominence.exp()).clamp(0.005, 0.7);
        (1.0 / (w * w), 2.0 * zeta / w)
    };
    let top = resp.omega.last().copied().unwrap_or(1.0);
    let pick = |peak: bool| -> Vec<(f64, f64)> {
        let mut f: Vec<(f64, f64)> = extrema.iter().filter(|e| e.2 == peak).take(2).map(|e| factor(e.0, e.1)).collect();
        let mut spare = 2.0;
        while f.len() < 2 {
            f.push(factor(top * spare, 1.0));
            spare *= 2.0;
        }
        f
    };
    let (num, den) = (pick(false), pick(true));
    TransferModel::from_params(&[k, num[0].0, num[0].1, den[0].0, den[0].1, num[1].0, num[1].1, den[1].0, den[1].1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::log_space;

    fn synth(m: &TransferModel, omegas: &[f64]) -> FreqResponse {
        FreqResponse::new(
            omegas
                .iter()
                .map(|&w| {
                    let v = eval_w(m, w).unwrap();
                    (w, v.norm(), v.arg())
                })
                .collect(),
        )
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let truth = TransferModel::from_params(&[2.0, 0.5, 0.2, 1.0, 0.4, 0.1, 0.05, 0.2, 0.1]);
        let resp = synth(&truth, &log_space(0.1, 20.0, 50));
        let fit = fit_model(&resp, &truth).unwrap();
        assert!(fit.residual < 1e-20);
        assert_eq!(fit.model, truth);
    }

    #[test]
    fn too_few_samples() {
        let truth = TransferModel::integrator(1.0);
        let resp = synth(&truth, &[1.0, 2.0]);
        assert!(matches!(fit_model(&resp, &truth), Err(SysIdError::TooFewSamples { .. })));
    }
}

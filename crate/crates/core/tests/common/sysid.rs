use tdsim::graph::NO_BINDINGS;
use tdsim::sysid::{
    chirp, estimate_response, eval_w, fit_model, infer_sweep, initial_guess, log_space, usable_band, Chirp, ChirpSpec,
    FitReport, Lti, TransferModel,
};
use tdsim::{simulate, Graph, SimConfig};

/// Two zero/pole pairs (damping 0.1 to 0.12) on top of an integrator.
pub fn flexible_plant() -> TransferModel {
    let pair = |w: f64, zeta: f64| (1.0 / (w * w), 2.0 * zeta / w);
    let (z1, p1, z2, p2) = (pair(0.7, 0.12), pair(1.0, 0.12), pair(1.7, 0.1), pair(2.3, 0.12));
    TransferModel::from_params(&[0.5, z1.0, z1.1, p1.0, p1.1, z2.0, z2.1, p2.0, p2.1])
}

pub struct RoundTrip {
    pub truth: TransferModel,
    pub fit: FitReport,
    pub band: (f64, f64),
    pub max_gain_err: f64,
    pub max_phase_err_deg: f64,
}

/// Drives `truth` with a chirp, estimates the response over the usable band
/// and fits `W(s)` from the default starting point.
pub fn identification_round_trip(truth: TransferModel) -> RoundTrip {
    let dt = 0.02;
    let spec = ChirpSpec { c: 1.0, a: 0.2, b: 1e-4 };
    let mut g = Graph::new();
    g.add("u", Chirp { spec }, NO_BINDINGS);
    g.add("plant", Lti::from_model(&truth).unwrap(), [("u", "u.out")]);
    let model = g.compile().unwrap();
    let cfg = SimConfig { dt, t_end: 15000.0, record: vec!["u.out".into(), "plant.y".into()] };
    let out = simulate(&model, &cfg).unwrap();
    let (u, y) = (out.channel("u.out").unwrap(), out.channel("plant.y").unwrap());
    let sweep = infer_sweep(u, dt).unwrap();
    let band = usable_band(&sweep, dt).unwrap();
    let omegas = log_space(band.0, band.1, 80);
    let resp = estimate_response(u, y, dt, &omegas).unwrap();
    let fit = fit_model(&resp, &initial_guess(&resp)).unwrap();
    let (mut max_gain_err, mut max_phase_err_deg) = (0.0f64, 0.0f64);
    for w in log_space(band.0, band.1, 400) {
        let (a, b) = (eval_w(&truth, w).unwrap(), eval_w(&fit.model, w).unwrap());
        max_gain_err = max_gain_err.max((b.norm() / a.norm() - 1.0).abs());
        max_phase_err_deg = max_phase_err_deg.max((b / a).arg().abs().to_degrees());
    }
    RoundTrip { truth, fit, band, max_gain_err, max_phase_err_deg }
}

pub fn estimator_errors(truth: TransferModel, spec: ChirpSpec, dt: f64, t_end: f64) -> Vec<(f64, f64, f64)> {
    let mut g = Graph::new();
    g.add("u", Chirp { spec }, NO_BINDINGS);
    g.add("plant", Lti::from_model(&truth).unwrap(), [("u", "u.out")]);
    let model = g.compile().unwrap();
    let cfg = SimConfig { dt, t_end, record: vec!["u.out".into(), "plant.y".into()] };
    let out = simulate(&model, &cfg).unwrap();
    let (u, y) = (out.channel("u.out").unwrap(), out.channel("plant.y").unwrap());
    let sweep = infer_sweep(u, dt).unwrap();
    let band = usable_band(&sweep, dt).unwrap();
    let omegas = log_space(band.0, band.1, 40);
    let resp = estimate_response(u, y, dt, &omegas).unwrap();
    (0..resp.len())
        .map(|i| {
            let a = eval_w(&truth, resp.omega[i]).unwrap();
            (resp.omega[i], resp.gain[i] / a.norm() - 1.0, (resp.phase[i] - a.arg()).to_degrees())
        })
        .collect()
}

/// Chirp record of `1/(T s + 1)` by fine Euler substeps, sampled every
/// 0.01 s.
pub fn first_order_lag(t: f64) -> (Vec<f64>, Vec<f64>) {
    let spec = ChirpSpec { c: 1.0, a: 0.1, b: 0.002 };
    let (dt, sub) = (0.01, 20);
    let h = dt / sub as f64;
    let n = 50_000;
    let (mut u, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut x = 0.0;
    for i in 0..n {
        u.push(chirp(&spec, i as f64 * dt));
        y.push(x);
        for k in 0..sub {
            let tk = i as f64 * dt + (k as f64 + 0.5) * h;
            x += h * (chirp(&spec, tk) - x) / t;
        }
    }
    (u, y)
}

/// Worst relative gain error and phase error (rad) of the estimator on the
/// lag with `T = 1` at 0.5, 1 and 2 rad/s.
pub fn first_order_lag_errors() -> (f64, f64) {
    let (u, y) = first_order_lag(1.0);
    let r = estimate_response(&u, &y, 0.01, &[0.5, 1.0, 2.0]).unwrap();
    let (mut g, mut p) = (0.0f64, 0.0f64);
    for i in 0..r.len() {
        let w = r.omega[i];
        g = g.max((r.gain[i] * (1.0 + w * w).sqrt() - 1.0).abs());
        p = p.max((r.phase[i] + w.atan()).abs());
    }
    (g, p)
}

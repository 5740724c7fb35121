//! Fixed-step classic Runge-Kutta integration of a compiled [`Model`].

use thiserror::Error;

use super::{EvalError, Model, PortValues};
use crate::series::SeriesTable;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Step (s).
    pub dt: f64,
    /// Horizon (s).
    pub t_end: f64,
    /// `"componentId.port"` entries to log.
    pub record: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid step/horizon: dt = {dt}, t_end = {t_end}")]
    Config { dt: f64, t_end: f64 },
    #[error("cannot record `{0}`: no such port or not a numeric value")]
    Record(String),
    #[error("numeric failure after t = {last_good_time}: {source}")]
    Numeric { last_good_time: f64, source: EvalError },
}

impl SimError {
    pub fn component_id(&self) -> Option<&str> {
        match self {
            SimError::Numeric { source, .. } => source.component_id(),
            _ => None,
        }
    }
}

struct Recorder {
    columns: Vec<(String, Vec<f64>)>,
    sources: Vec<(String, usize)>,
}

impl Recorder {
    fn new(model: &Model, record: &[String], first: &PortValues) -> Result<Self, SimError> {
        let mut columns = Vec::new();
        let mut sources = Vec::new();
        for r in record {
            model.output_tag(r).ok_or_else(|| SimError::Record(r.clone()))?;
            let cols = first.get(r).and_then(|v| v.record_columns()).ok_or_else(|| SimError::Record(r.clone()))?;
            for (k, (suffix, _)) in cols.iter().enumerate() {
                columns.push((format!("{r}{suffix}"), Vec::new()));
                sources.push((r.clone(), k));
            }
        }
        Ok(Self { columns, sources })
    }

    fn push(&mut self, ports: &PortValues) {
        for ((_, col), (port, k)) in self.columns.iter_mut().zip(&self.sources) {
            let cols = ports.get(port).and_then(|v| v.record_columns()).expect("recorded port vanished");
            col.push(cols[*k].1);
        }
    }
}

/// Integrates `model` from its initial state with classic RK4 at fixed step
/// `cfg.dt`, sampling the recorded ports at every step including `t = 0`
/// and `t = t_end`. A final partial step lands exactly on `t_end`.
pub fn simulate(model: &Model, cfg: &SimConfig) -> Result<SeriesTable, SimError> {
    simulate_from(model, cfg, model.initial_state())
}

/// Like [`simulate`] but starting from an explicit state vector.
pub fn simulate_from(model: &Model, cfg: &SimConfig, mut x: Vec<f64>) -> Result<SeriesTable, SimError> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite() && cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(SimError::Config { dt: cfg.dt, t_end: cfg.t_end });
    }
    let steps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(0.0) as usize;
    let n = x.len();
    let numeric = |t: f64, source: EvalError| SimError::Numeric { last_good_time: t, source };

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut times = Vec::with_capacity(steps + 1);

    let ports = model.derivative(0.0, &x, &mut k1).map_err(|e| numeric(0.0, e))?;
    let mut recorder = Recorder::new(model, &cfg.record, &ports)?;
    recorder.push(&ports);
    times.push(0.0);

    let mut t = 0.0;
    for step in 1..=steps {
        let t_next = if step == steps { cfg.t_end } else { step as f64 * cfg.dt };
        let h = t_next - t;
        if step > 1 {
            let ports = model.derivative(t, &x, &mut k1).map_err(|e| numeric(t, e))?;
            recorder.push(&ports);
            times.push(t);
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        model.derivative(t + 0.5 * h, &tmp, &mut k2).map_err(|e| numeric(t, e))?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        model.derivative(t + 0.5 * h, &tmp, &mut k3).map_err(|e| numeric(t, e))?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        model.derivative(t + h, &tmp, &mut k4).map_err(|e| numeric(t, e))?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        model.normalize_state(&mut x);
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            let component = model.state_owner(k).unwrap_or("<unknown>").to_string();
            return Err(numeric(t, EvalError::NonFinite { component, port: "<state>".into() }));
        }
        t = t_next;
    }
    if steps > 0 {
        let ports = model.derivative(t, &x, &mut k1).map_err(|e| numeric(t, e))?;
        recorder.push(&ports);
        times.push(t);
    }

    let mut table = SeriesTable::new(times).expect("sample times increase");
    for (name, col) in recorder.columns {
        table.add_channel(name, col).expect("recorded columns have one sample per step");
    }
    Ok(table)
}

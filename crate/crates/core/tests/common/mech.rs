use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use tdsim::graph::NO_BINDINGS;
use tdsim::mech::{Aggregate, AggregateInit, AggregateNode, Link, MechModule, Mode, Place};
use tdsim::{simulate, Graph, SeriesTable, SimConfig};

fn diag(x: f64, y: f64, z: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(x, y, z))
}

pub fn run_aggregate(agg: Aggregate, init: &AggregateInit, dt: f64, t_end: f64, record: &[&str]) -> SeriesTable {
    let mut g = Graph::new();
    g.add("agg", AggregateNode::new(agg, init, None).unwrap(), NO_BINDINGS);
    let cfg = SimConfig { dt, t_end, record: record.iter().map(|r| format!("agg.{r}")).collect() };
    simulate(&g.compile().unwrap(), &cfg).unwrap()
}

fn vec3(t: &SeriesTable, name: &str, i: usize) -> Vector3<f64> {
    let c = |s: &str| t.channel(&format!("{name}.{s}")).unwrap()[i];
    Vector3::new(c("x"), c("y"), c("z"))
}

fn quat(t: &SeriesTable, name: &str, i: usize) -> UnitQuaternion<f64> {
    let c = |s: &str| t.channel(&format!("{name}.{s}")).unwrap()[i];
    UnitQuaternion::from_quaternion(Quaternion::new(c("w"), c("x"), c("y"), c("z")))
}

/// Torque-free rigid body: `(r, v, q, ω_body)`, integrated with classical RK4.
#[derive(Clone, Copy)]
struct Rigid {
    r: Vector3<f64>,
    v: Vector3<f64>,
    q: Quaternion<f64>,
    w: Vector3<f64>,
}

impl Rigid {
    fn rate(&self, j: &Matrix3<f64>, j_inv: &Matrix3<f64>) -> Rigid {
        let wq = Quaternion::new(0.0, self.w.x, self.w.y, self.w.z);
        Rigid { r: self.v, v: Vector3::zeros(), q: self.q * wq * 0.5, w: j_inv * (-self.w.cross(&(j * self.w))) }
    }

    fn add(&self, d: &Rigid, h: f64) -> Rigid {
        Rigid { r: self.r + d.r * h, v: self.v + d.v * h, q: self.q + d.q * h, w: self.w + d.w * h }
    }

    fn step(&self, j: &Matrix3<f64>, j_inv: &Matrix3<f64>, h: f64) -> Rigid {
        let k1 = self.rate(j, j_inv);
        let k2 = self.add(&k1, h / 2.0).rate(j, j_inv);
        let k3 = self.add(&k2, h / 2.0).rate(j, j_inv);
        let k4 = self.add(&k3, h).rate(j, j_inv);
        let mut next = *self;
        next.r += (k1.r + k2.r * 2.0 + k3.r * 2.0 + k4.r) * (h / 6.0);
        next.v += (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * (h / 6.0);
        next.q += (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (h / 6.0);
        next.w += (k1.w + k2.w * 2.0 + k3.w * 2.0 + k4.w) * (h / 6.0);
        next.q = next.q.normalize();
        next
    }
}

fn shifted_inertia(j: &Matrix3<f64>, m: f64, d: &Vector3<f64>) -> Matrix3<f64> {
    j + m * (Matrix3::identity() * d.norm_squared() - d * d.transpose())
}

/// Two rigid bodies joined at one place versus the equivalent single body.
/// Returns the worst position error (m) and attitude error (rad) of body `a`
/// over the run.
pub fn composite_oracle(dt: f64, t_end: f64) -> (f64, f64) {
    let (ma, mb) = (2.0, 3.0);
    let (ja, jb) = (diag(1.0, 2.0, 2.5), diag(0.8, 1.5, 1.1));
    let pa = Place { rho: Vector3::new(1.0, 0.0, 0.2), q: UnitQuaternion::from_euler_angles(0.0, 0.0, 0.5) };
    let pb = Place { rho: Vector3::new(-0.5, 0.3, 0.0), q: UnitQuaternion::from_euler_angles(0.2, 0.0, 0.0) };
    let a = MechModule::rigid("a", ma, ja, vec![pa]);
    let b = MechModule::rigid("b", mb, jb, vec![pb]);
    let agg = Aggregate::new(vec![a, b], vec![Link { a: (0, 0), b: (1, 0) }]).unwrap();
    let init = AggregateInit {
        r: Vector3::new(0.3, -0.2, 1.0),
        q: UnitQuaternion::from_euler_angles(0.1, -0.4, 0.7),
        v: Vector3::new(0.2, 0.1, -0.3),
        w: Vector3::new(0.4, -0.9, 1.3),
        ..Default::default()
    };
    let out = run_aggregate(agg, &init, dt, t_end, &["a.r", "a.q"]);

    // composite body in a's axes
    let rel = pa.q * pb.q.inverse();
    let d_b = pa.rho - rel * pb.rho;
    let m = ma + mb;
    let c = d_b * (mb / m);
    let j_b = rel.to_rotation_matrix().matrix() * jb * rel.to_rotation_matrix().matrix().transpose();
    let j = shifted_inertia(&ja, ma, &(-c)) + shifted_inertia(&j_b, mb, &(d_b - c));
    let j_inv = j.try_inverse().unwrap();
    let mut body = Rigid {
        r: init.r + init.q * c,
        v: init.v + (init.q * init.w).cross(&(init.q * c)),
        q: *init.q.quaternion(),
        w: init.w,
    };
    let (mut pos, mut att) = (0.0f64, 0.0f64);
    for i in 0..out.len() {
        if i > 0 {
            body = body.step(&j, &j_inv, dt);
        }
        let q = UnitQuaternion::from_quaternion(body.q);
        let r_a = body.r - q * c;
        pos = pos.max((r_a - vec3(&out, "agg.a.r", i)).norm());
        att = att.max(q.angle_to(&quat(&out, "agg.a.q", i)));
    }
    (pos, att)
}

/// Base with a console and a flywheel, tumbling freely.
pub fn free_spacecraft(eps: f64) -> (Aggregate, AggregateInit) {
    let base = MechModule::rigid(
        "base",
        50.0,
        diag(20.0, 30.0, 25.0),
        vec![Place::at(Vector3::new(0.0, 1.0, 0.0)), Place::at(Vector3::new(0.2, 0.0, 0.1))],
    );
    let panel = MechModule::console(
        "panel",
        5.0,
        diag(2.0, 0.3, 2.0),
        Place::at(Vector3::new(0.0, -1.5, 0.0)),
        vec![
            Mode { a: 1.0, eps, c: 4.0, phi: Vector3::new(0.0, 0.0, 1.0) },
            Mode { a: 0.5, eps, c: 9.0, phi: Vector3::new(1.0, 0.0, 0.0) },
        ],
    );
    let wheel = MechModule::flywheel("wheel", 2.0, diag(0.02, 0.012, 0.012), Place::at(Vector3::zeros()), 0.015, Vector3::x());
    let agg = Aggregate::new(vec![base, panel, wheel], vec![Link { a: (0, 0), b: (1, 0) }, Link { a: (0, 1), b: (2, 0) }]).unwrap();
    let init = AggregateInit {
        r: Vector3::new(1.0, 2.0, -1.0),
        q: UnitQuaternion::from_euler_angles(0.3, 0.2, -0.1),
        v: Vector3::new(0.1, -0.2, 0.05),
        w: Vector3::new(0.05, 0.2, -0.1),
        coords: vec![vec![], vec![0.05, -0.02], vec![]],
        rates: vec![vec![], vec![0.0, 0.1], vec![30.0]],
    };
    (agg, init)
}

/// Worst relative deviation of linear and angular momentum over the run.
pub fn momentum_conservation(dt: f64, t_end: f64) -> (f64, f64) {
    let (agg, init) = free_spacecraft(0.3);
    let out = run_aggregate(agg, &init, dt, t_end, &["momentum", "angular_momentum"]);
    let (p0, l0) = (vec3(&out, "agg.momentum", 0), vec3(&out, "agg.angular_momentum", 0));
    let (mut dp, mut dl) = (0.0f64, 0.0f64);
    for i in 0..out.len() {
        dp = dp.max((vec3(&out, "agg.momentum", i) - p0).norm() / p0.norm());
        dl = dl.max((vec3(&out, "agg.angular_momentum", i) - l0).norm() / l0.norm());
    }
    (dp, dl)
}

/// Worst relative energy change of the undamped free spacecraft.
pub fn energy_drift(dt: f64, t_end: f64) -> f64 {
    let (agg, init) = free_spacecraft(0.0);
    let out = run_aggregate(agg, &init, dt, t_end, &["energy"]);
    let e = out.channel("agg.energy").unwrap();
    e.iter().map(|x| ((x - e[0]) / e[0]).abs()).fold(0.0, f64::max)
}

/// Upward zero crossings by linear interpolation.
pub fn rising_crossings(t: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len()).filter(|&i| x[i - 1] < 0.0 && x[i] >= 0.0).map(|i| t[i - 1] + (t[i] - t[i - 1]) * (-x[i - 1] / (x[i] - x[i - 1]))).collect()
}

/// Free console released from `q0`; returns (measured period over ten
/// cycles, 2π/√(c/A)).
pub fn console_period(dt: f64) -> (f64, f64) {
    let (a, c) = (2.0, 8.0);
    let console = MechModule::console("c", 3.0, diag(1.0, 1.0, 1.0), Place::at(Vector3::new(0.0, 1.0, 0.0)), vec![Mode { a, eps: 0.0, c, phi: Vector3::z() }]);
    let agg = Aggregate::new(vec![console], vec![]).unwrap();
    let init = AggregateInit { coords: vec![vec![0.1]], ..Default::default() };
    let expected = 2.0 * std::f64::consts::PI / (c / a).sqrt();
    let out = run_aggregate(agg, &init, dt, 10.5 * expected + 1.0, &["c.mode0"]);
    let z = rising_crossings(out.times(), out.channel("agg.c.mode0").unwrap());
    ((z[10] - z[0]) / 10.0, expected)
}

/// Base plus wheel driven by a constant engine torque `u`: returns the error
/// in the rotor's axial momentum gain against `u·t` and the worst drift of
/// total angular momentum.
pub fn flywheel_bookkeeping(dt: f64, t_end: f64) -> (f64, f64) {
    let u = 0.02;
    let base = MechModule::rigid("base", 10.0, diag(2.0, 3.0, 4.0), vec![Place::at(Vector3::new(0.1, 0.0, 0.0))]);
    let axis = Vector3::new(0.0, 0.6, 0.8);
    let wheel = MechModule::flywheel("wheel", 1.0, diag(0.02, 0.02, 0.02) + axis * axis.transpose() * 0.01, Place::at(Vector3::zeros()), 0.015, axis);
    let agg = Aggregate::new(vec![base, wheel], vec![Link { a: (0, 0), b: (1, 0) }]).unwrap();
    let init = AggregateInit { w: Vector3::new(0.1, 0.0, -0.05), rates: vec![vec![], vec![5.0]], ..Default::default() };
    let mut g = Graph::new();
    g.add("engine", tdsim::components::Constant::new(tdsim::Value::Scalar(u)), NO_BINDINGS);
    g.add("agg", AggregateNode::new(agg, &init, None).unwrap(), [("wheel.u", "engine.out")]);
    let cfg = SimConfig {
        dt,
        t_end,
        record: vec!["agg.wheel.spin".into(), "agg.wheel.omega_body".into(), "agg.angular_momentum".into()],
    };
    let out = simulate(&g.compile().unwrap(), &cfg).unwrap();
    let e = axis.normalize();
    let axial = |i: usize| 0.015 * (out.channel("agg.wheel.spin").unwrap()[i] + e.dot(&vec3(&out, "agg.wheel.omega_body", i)));
    let last = out.len() - 1;
    let gain_err = ((axial(last) - axial(0)) - u * out.times()[last]).abs();
    let l0 = vec3(&out, "agg.angular_momentum", 0);
    let drift = (0..out.len()).map(|i| (vec3(&out, "agg.angular_momentum", i) - l0).norm()).fold(0.0, f64::max);
    (gain_err, drift)
}

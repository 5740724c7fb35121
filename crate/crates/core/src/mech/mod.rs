//! Multibody mechanical aggregates.
//!
//! A module is a body with its own frame and connection places; its
//! accelerations are `[V̇ (world), ω̇ (body axes), q̈ (n internal coordinates)]`.
//! Each module supplies a generalized mass matrix, a generalized force and,
//! per place, the place's linear and angular acceleration as an affine
//! function of those accelerations. Links weld two places together; the
//! [`Aggregate`] solves all modules and link loads in one linear system.
//!
//! Module origins are the centers of mass and `J` is taken about them.
//! Link loads are world-axis vectors acting at the shared place point.

mod aggregate;
mod node;

pub use aggregate::{Aggregate, AggregateInit, Link, MechError, Solution};
pub use node::AggregateNode;

use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, Unit, UnitQuaternion, Vector3};

/// Connection place: position and orientation in the module frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Place {
    pub rho: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
}

impl Place {
    pub fn at(rho: Vector3<f64>) -> Self {
        Self { rho, q: UnitQuaternion::identity() }
    }
}

/// One elastic harmonic `A q̈ + ε q̇ + c q = φ·F_body`. `phi` is the
/// displacement of the connection place per unit `q` (module axes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub a: f64,
    pub eps: f64,
    pub c: f64,
    pub phi: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModuleKind {
    Rigid,
    /// Appendage of mass `m`, inertia `J`, hanging from its single place
    /// through elastic modes.
    Console { modes: Vec<Mode> },
    /// Carrier with a rotor of axial inertia `j_f` spinning about `axis`.
    /// `J` is the inertia of carrier plus rotor; the internal coordinate is
    /// the rotor angle relative to the carrier.
    Flywheel { j_f: f64, axis: Unit<Vector3<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechModule {
    pub name: String,
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub places: Vec<Place>,
    pub kind: ModuleKind,
}

impl MechModule {
    pub fn rigid(name: impl Into<String>, mass: f64, inertia: Matrix3<f64>, places: Vec<Place>) -> Self {
        Self { name: name.into(), mass, inertia, places, kind: ModuleKind::Rigid }
    }

    pub fn console(name: impl Into<String>, mass: f64, inertia: Matrix3<f64>, place: Place, modes: Vec<Mode>) -> Self {
        Self { name: name.into(), mass, inertia, places: vec![place], kind: ModuleKind::Console { modes } }
    }

    pub fn flywheel(name: impl Into<String>, mass: f64, inertia: Matrix3<f64>, place: Place, j_f: f64, axis: Vector3<f64>) -> Self {
        Self {
            name: name.into(),
            mass,
            inertia,
            places: vec![place],
            kind: ModuleKind::Flywheel { j_f, axis: Unit::new_normalize(axis) },
        }
    }

    /// Number of internal coordinates.
    pub fn n(&self) -> usize {
        match &self.kind {
            ModuleKind::Rigid => 0,
            ModuleKind::Console { modes } => modes.len(),
            ModuleKind::Flywheel { .. } => 1,
        }
    }

    pub fn dof(&self) -> usize {
        6 + self.n()
    }

    pub fn state_len(&self) -> usize {
        13 + 2 * self.n()
    }

    pub fn validate(&self) -> Result<(), String> {
        let who = &self.name;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(format!("module `{who}`: mass must be positive"));
        }
        let j = self.inertia;
        if (j - j.transpose()).abs().max() > 1e-12 * j.abs().max() || j.cholesky().is_none() {
            return Err(format!("module `{who}`: inertia must be symmetric positive-definite"));
        }
        match &self.kind {
            ModuleKind::Rigid => {}
            ModuleKind::Console { modes } => {
                if self.places.len() != 1 {
                    return Err(format!("module `{who}`: a console has exactly one connection place"));
                }
                if modes.iter().any(|m| !(m.a > 0.0) || !(m.c >= 0.0) || !(m.eps >= 0.0)) {
                    return Err(format!("module `{who}`: modes need A > 0, c ≥ 0, ε ≥ 0"));
                }
            }
            ModuleKind::Flywheel { j_f, axis } => {
                if self.places.len() != 1 {
                    return Err(format!("module `{who}`: a flywheel has exactly one connection place"));
                }
                if !(*j_f > 0.0) || (j - *j_f * axis.into_inner() * axis.transpose()).cholesky().is_none() {
                    return Err(format!("module `{who}`: need J_F > 0 and J − J_F·eeᵀ positive-definite"));
                }
            }
        }
        Ok(())
    }

    fn modes(&self) -> &[Mode] {
        match &self.kind {
            ModuleKind::Console { modes } => modes,
            _ => &[],
        }
    }

    /// Place point in module axes (modal deflection included).
    pub fn place_offset(&self, place: usize, s: &ModuleState) -> Vector3<f64> {
        let mut d = self.places[place].rho;
        for (m, q) in self.modes().iter().zip(&s.coords) {
            d += m.phi * *q;
        }
        d
    }

    /// Place velocity relative to the module frame, in module axes.
    fn place_rate(&self, s: &ModuleState) -> Vector3<f64> {
        self.modes().iter().zip(&s.rates).fold(Vector3::zeros(), |acc, (m, qd)| acc + m.phi * *qd)
    }

    pub fn place_position(&self, place: usize, s: &ModuleState) -> Vector3<f64> {
        s.r + s.q * self.place_offset(place, s)
    }

    pub fn place_velocity(&self, place: usize, s: &ModuleState) -> Vector3<f64> {
        s.v + s.q * (s.w.cross(&self.place_offset(place, s)) + self.place_rate(s))
    }

    pub fn place_orientation(&self, place: usize, s: &ModuleState) -> UnitQuaternion<f64> {
        s.q * self.places[place].q
    }

    /// Angular momentum about the module origin, module axes.
    pub fn body_momentum(&self, s: &ModuleState) -> Vector3<f64> {
        let mut h = self.inertia * s.w;
        if let ModuleKind::Flywheel { j_f, axis } = &self.kind {
            h += axis.into_inner() * (j_f * s.rates[0]);
        }
        h
    }

    pub fn kinetic_energy(&self, s: &ModuleState) -> f64 {
        let mut e = 0.5 * self.mass * s.v.norm_squared() + 0.5 * s.w.dot(&(self.inertia * s.w));
        match &self.kind {
            ModuleKind::Rigid => {}
            ModuleKind::Console { modes } => {
                e += modes.iter().zip(&s.rates).map(|(m, qd)| 0.5 * m.a * qd * qd).sum::<f64>();
            }
            ModuleKind::Flywheel { j_f, axis } => {
                let om = s.rates[0];
                e += j_f * om * axis.dot(&s.w) + 0.5 * j_f * om * om;
            }
        }
        e
    }

    pub fn strain_energy(&self, s: &ModuleState) -> f64 {
        self.modes().iter().zip(&s.coords).map(|(m, q)| 0.5 * m.c * q * q).sum()
    }

    /// Generalized mass matrix over `[V̇, ω̇, q̈]`.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.dof();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..3 {
            m[(i, i)] = self.mass;
        }
        m.view_mut((3, 3), (3, 3)).copy_from(&self.inertia);
        match &self.kind {
            ModuleKind::Rigid => {}
            ModuleKind::Console { modes } => {
                for (k, mode) in modes.iter().enumerate() {
                    m[(6 + k, 6 + k)] = mode.a;
                }
            }
            ModuleKind::Flywheel { j_f, axis } => {
                for i in 0..3 {
                    m[(3 + i, 6)] = j_f * axis[i];
                    m[(6, 3 + i)] = j_f * axis[i];
                }
                m[(6, 6)] = *j_f;
            }
        }
        m
    }

    /// Generalized force from the module's own state and external loads.
    pub fn generalized_force(&self, s: &ModuleState, ext: &ExternalLoad) -> DVector<f64> {
        let mut f = DVector::zeros(self.dof());
        f.fixed_rows_mut::<3>(0).copy_from(&(ext.force + ext.gravity * self.mass));
        let gyro = s.w.cross(&self.body_momentum(s));
        f.fixed_rows_mut::<3>(3).copy_from(&(ext.torque - gyro));
        match &self.kind {
            ModuleKind::Rigid => {}
            ModuleKind::Console { modes } => {
                for (k, m) in modes.iter().enumerate() {
                    f[6 + k] = -m.eps * s.rates[k] - m.c * s.coords[k];
                }
            }
            ModuleKind::Flywheel { .. } => f[6] = ext.u,
        }
        f
    }

    /// Place acceleration coefficients at the current state.
    pub fn place_kinematics(&self, place: usize, s: &ModuleState) -> ConnectionKinematics {
        let n = self.dof();
        let rot = s.q.to_rotation_matrix().into_inner();
        let d = self.place_offset(place, s);
        let mut linear = DMatrix::zeros(3, n);
        let mut angular = DMatrix::zeros(3, n);
        linear.view_mut((0, 0), (3, 3)).copy_from(&Matrix3::identity());
        linear.view_mut((0, 3), (3, 3)).copy_from(&(-rot * d.cross_matrix()));
        angular.view_mut((0, 3), (3, 3)).copy_from(&rot);
        for (k, m) in self.modes().iter().enumerate() {
            linear.view_mut((0, 6 + k), (3, 1)).copy_from(&(rot * m.phi));
        }
        let a = rot * (s.w.cross(&s.w.cross(&d)) + 2.0 * s.w.cross(&self.place_rate(s)));
        ConnectionKinematics { a, eps: Vector3::zeros(), linear, angular }
    }

    /// Explicit form of the module equations: accelerations equal the free
    /// accelerations plus load maps applied to each place's load.
    pub fn dynamics(&self, s: &ModuleState, ext: &ExternalLoad) -> ModuleDynamics {
        let lu = self.mass_matrix().lu();
        let free = lu.solve(&self.generalized_force(s, ext)).expect("validated mass matrix");
        let maps = (0..self.places.len())
            .map(|p| {
                let k = self.place_kinematics(p, s);
                let force = lu.solve(&k.linear.transpose()).expect("validated mass matrix");
                let moment = lu.solve(&k.angular.transpose()).expect("validated mass matrix");
                (force, moment)
            })
            .collect();
        ModuleDynamics { free, maps }
    }
}

/// Loads not coming through links: `force` in world axes at the origin,
/// `torque` in module axes, `gravity` acceleration, `u` the flywheel engine
/// torque.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExternalLoad {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub gravity: Vector3<f64>,
    pub u: f64,
}

/// Place acceleration `a + linear·ẍ` and angular acceleration
/// `eps + angular·ẍ`, both world axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionKinematics {
    pub a: Vector3<f64>,
    pub eps: Vector3<f64>,
    pub linear: DMatrix<f64>,
    pub angular: DMatrix<f64>,
}

impl ConnectionKinematics {
    pub fn p_v(&self) -> Matrix3<f64> {
        self.linear.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn q_v(&self) -> Matrix3<f64> {
        self.linear.fixed_view::<3, 3>(0, 3).into_owned()
    }
    pub fn r_v(&self) -> DMatrix<f64> {
        self.linear.columns(6, self.linear.ncols() - 6).into_owned()
    }
    pub fn p_w(&self) -> Matrix3<f64> {
        self.angular.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn q_w(&self) -> Matrix3<f64> {
        self.angular.fixed_view::<3, 3>(0, 3).into_owned()
    }
    pub fn r_w(&self) -> DMatrix<f64> {
        self.angular.columns(6, self.angular.ncols() - 6).into_owned()
    }
}

/// `ẍ = free + Σ_p maps[p].0·F_p + maps[p].1·M_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleDynamics {
    pub free: DVector<f64>,
    pub maps: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl ModuleDynamics {
    pub fn a_v(&self) -> Vector3<f64> {
        self.free.fixed_rows::<3>(0).into_owned()
    }
    pub fn a_w(&self) -> Vector3<f64> {
        self.free.fixed_rows::<3>(3).into_owned()
    }
    pub fn a_q(&self) -> DVector<f64> {
        self.free.rows(6, self.free.len() - 6).into_owned()
    }
    pub fn d_v(&self, p: usize) -> Matrix3<f64> {
        self.maps[p].0.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn e_v(&self, p: usize) -> Matrix3<f64> {
        self.maps[p].1.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn d_w(&self, p: usize) -> Matrix3<f64> {
        self.maps[p].0.fixed_view::<3, 3>(3, 0).into_owned()
    }
    pub fn e_w(&self, p: usize) -> Matrix3<f64> {
        self.maps[p].1.fixed_view::<3, 3>(3, 0).into_owned()
    }
    pub fn k(&self, p: usize) -> DMatrix<f64> {
        let m = &self.maps[p].0;
        m.rows(6, m.nrows() - 6).into_owned()
    }
    pub fn l(&self, p: usize) -> DMatrix<f64> {
        let m = &self.maps[p].1;
        m.rows(6, m.nrows() - 6).into_owned()
    }
}

/// `ω` is in module axes; `v` is the world velocity of the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleState {
    pub r: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
    pub coords: Vec<f64>,
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
    pub rates: Vec<f64>,
}

impl ModuleState {
    pub fn rest(n: usize) -> Self {
        Self {
            r: Vector3::zeros(),
            q: UnitQuaternion::identity(),
            coords: vec![0.0; n],
            v: Vector3::zeros(),
            w: Vector3::zeros(),
            rates: vec![0.0; n],
        }
    }

    /// Layout `[r(3), q(w,x,y,z), coords(n), v(3), ω(3), rates(n)]`.
    pub fn pack(&self, out: &mut [f64]) {
        let n = self.coords.len();
        out[..3].copy_from_slice(self.r.as_slice());
        let q = self.q.quaternion();
        out[3..7].copy_from_slice(&[q.w, q.i, q.j, q.k]);
        out[7..7 + n].copy_from_slice(&self.coords);
        out[7 + n..10 + n].copy_from_slice(self.v.as_slice());
        out[10 + n..13 + n].copy_from_slice(self.w.as_slice());
        out[13 + n..13 + 2 * n].copy_from_slice(&self.rates);
    }

    pub fn unpack(x: &[f64], n: usize) -> Self {
        Self {
            r: Vector3::new(x[0], x[1], x[2]),
            q: UnitQuaternion::from_quaternion(Quaternion::new(x[3], x[4], x[5], x[6])),
            coords: x[7..7 + n].to_vec(),
            v: Vector3::new(x[7 + n], x[8 + n], x[9 + n]),
            w: Vector3::new(x[10 + n], x[11 + n], x[12 + n]),
            rates: x[13 + n..13 + 2 * n].to_vec(),
        }
    }

    /// World angular velocity.
    pub fn world_rate(&self) -> Vector3<f64> {
        self.q * self.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3 as V;

    fn body() -> MechModule {
        MechModule::rigid("b", 2.0, Matrix3::from_diagonal(&V::new(1.0, 2.0, 3.0)), vec![Place::at(V::new(1.5, 0.0, 0.0))])
    }

    #[test]
    fn rigid_closed_forms() {
        let m = body();
        let mut s = ModuleState::rest(0);
        s.q = UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1);
        s.w = V::new(0.1, -0.4, 0.7);
        let rot = s.q.to_rotation_matrix().into_inner();
        let rho = m.places[0].rho;
        let k = m.place_kinematics(0, &s);
        assert!((k.a - rot * s.w.cross(&s.w.cross(&rho))).norm() < 1e-14);
        assert_eq!(k.p_v(), Matrix3::identity());
        assert!((k.q_v() + rot * rho.cross_matrix()).norm() < 1e-14);
        assert!((k.q_w() - rot).norm() < 1e-14 && k.p_w().norm() == 0.0);
        let ext = ExternalLoad { force: V::new(1.0, 0.0, 0.0), torque: V::new(0.0, 0.0, 0.5), ..Default::default() };
        let dy = m.dynamics(&s, &ext);
        let jinv = m.inertia.try_inverse().unwrap();
        assert!((dy.a_v() - ext.force / 2.0).norm() < 1e-14);
        assert!((dy.a_w() - jinv * (ext.torque - s.w.cross(&(m.inertia * s.w)))).norm() < 1e-14);
        assert!((dy.d_v(0) - Matrix3::identity() / 2.0).norm() < 1e-14);
        assert!((dy.d_w(0) - jinv * rho.cross_matrix() * rot.transpose()).norm() < 1e-13);
        assert!((dy.e_w(0) - jinv * rot.transpose()).norm() < 1e-13);
        assert!(dy.e_v(0).norm() < 1e-15);
    }

    #[test]
    fn centripetal_term() {
        let m = MechModule::rigid("b", 1.0, Matrix3::identity(), vec![Place::at(V::new(2.0, 0.0, 0.0))]);
        let mut s = ModuleState::rest(0);
        s.w = V::new(0.0, 0.0, 3.0);
        assert!((m.place_kinematics(0, &s).a - V::new(-18.0, 0.0, 0.0)).norm() < 1e-14);
        s.w = V::zeros();
        assert_eq!(m.place_kinematics(0, &s).a, V::zeros());
    }

    #[test]
    fn flywheel_gyro_torque() {
        let axis = V::new(1.0, 0.0, 0.0);
        let m = MechModule::flywheel("f", 1.0, Matrix3::identity() * 3.0, Place::at(V::zeros()), 1.0, axis);
        let mut s = ModuleState::rest(1);
        s.rates[0] = 10.0;
        s.w = V::new(0.0, 0.1, 0.0);
        // the module equations carry −ω×(J_F Ω e) = J_F Ω e × ω on the carrier
        let f = m.generalized_force(&s, &ExternalLoad::default());
        let gyro = V::new(f[3], f[4], f[5]) + s.w.cross(&(m.inertia * s.w));
        assert!((gyro - V::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        s.w = V::new(0.2, 0.0, 0.0);
        let f = m.generalized_force(&s, &ExternalLoad::default());
        let gyro = V::new(f[3], f[4], f[5]) + s.w.cross(&(m.inertia * s.w));
        assert!(gyro.norm() < 1e-15);
    }

    #[test]
    fn pack_round_trip() {
        let mut s = ModuleState::rest(2);
        s.r = V::new(1.0, 2.0, 3.0);
        s.coords = vec![0.1, 0.2];
        s.rates = vec![-1.0, 4.0];
        s.w = V::new(0.0, 1.0, 0.0);
        let mut x = vec![0.0; 17];
        s.pack(&mut x);
        assert_eq!(ModuleState::unpack(&x, 2), s);
    }

    #[test]
    fn validation() {
        assert!(body().validate().is_ok());
        let mut bad = body();
        bad.mass = 0.0;
        assert!(bad.validate().is_err());
        let thin = MechModule::flywheel("f", 1.0, Matrix3::identity(), Place::at(V::zeros()), 1.0, V::x());
        assert!(thin.validate().is_err());
    }
}

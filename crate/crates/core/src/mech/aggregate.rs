use nalgebra::{DMatrix, DVector, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use super::{ConnectionKinematics, ExternalLoad, MechModule, ModuleState};

/// Welds place `a.1` of module `a.0` to place `b.1` of module `b.0`. The
/// two place frames coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub a: (usize, usize),
    pub b: (usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechError {
    #[error("{0}")]
    Module(String),
    #[error("link {link}: {message}")]
    Topology { link: usize, message: String },
    #[error("aggregate is not connected: module `{0}` is unreachable from the root")]
    Disconnected(String),
    #[error("inconsistent aggregate: system is singular at link {link} ({a} ↔ {b})")]
    Singular { link: usize, a: String, b: String },
    #[error("state has {got} entries, aggregate needs {need}")]
    StateLength { need: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Per module `[V̇, ω̇, q̈]`.
    pub accel: Vec<DVector<f64>>,
    /// Per link, force and moment (world axes) applied to side `a`; side
    /// `b` receives the opposite pair.
    pub loads: Vec<(Vector3<f64>, Vector3<f64>)>,
}

/// Initial conditions: pose and rates of module 0 (velocity world axes,
/// angular velocity module axes) and internal coordinates per module
/// (missing entries are zero). Other modules follow from the links.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AggregateInit {
    pub r: Vector3<f64>,
    pub q: UnitQuaternion<f64>,
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
    pub coords: Vec<Vec<f64>>,
    pub rates: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    modules: Vec<MechModule>,
    links: Vec<Link>,
    state_offsets: Vec<usize>,
    dof_offsets: Vec<usize>,
}

impl Aggregate {
    /// Checks modules, place indices, single use of each place, tree shape
    /// and connectivity.
    pub fn new(modules: Vec<MechModule>, links: Vec<Link>) -> Result<Self, MechError> {
        if modules.is_empty() {
            return Err(MechError::Module("aggregate has no modules".into()));
        }
        for m in &modules {
            m.validate().map_err(MechError::Module)?;
        }
        let mut used = std::collections::HashSet::new();
        let mut parent: Vec<usize> = (0..modules.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (k, l) in links.iter().enumerate() {
            for (m, p) in [l.a, l.b] {
                let Some(module) = modules.get(m) else {
                    return Err(MechError::Topology { link: k, message: format!("no module #{m}") });
                };
                if p >= module.places.len() {
                    return Err(MechError::Topology { link: k, message: format!("module `{}` has no place {p}", module.name) });
                }
                if !used.insert((m, p)) {
                    return Err(MechError::Topology { link: k, message: format!("place {p} of `{}` is already linked", module.name) });
                }
            }
            let (ra, rb) = (find(&mut parent, l.a.0), find(&mut parent, l.b.0));
            if ra == rb {
                return Err(MechError::Topology { link: k, message: "closes a kinematic loop".into() });
            }
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if let Some(i) = (0..modules.len()).find(|&i| find(&mut parent, i) != root) {
            return Err(MechError::Disconnected(modules[i].name.clone()));
        }
        let mut state_offsets = vec![0];
        let mut dof_offsets = vec![0];
        for m in &modules {
            state_offsets.push(state_offsets.last().unwrap() + m.state_len());
            dof_offsets.push(dof_offsets.last().unwrap() + m.dof());
        }
        Ok(Self { modules, links, state_offsets, dof_offsets })
    }

    pub fn modules(&self) -> &[MechModule] {
        &self.modules
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.name == name)
    }

    pub fn state_len(&self) -> usize {
        self.state_offsets[self.modules.len()]
    }

    pub fn state_range(&self, i: usize) -> std::ops::Range<usize> {
        self.state_offsets[i]..self.state_offsets[i + 1]
    }

    pub fn unpack(&self, x: &[f64]) -> Result<Vec<ModuleState>, MechError> {
        if x.len() != self.state_len() {
            return Err(MechError::StateLength { need: self.state_len(), got: x.len() });
        }
        Ok(self.modules.iter().enumerate().map(|(i, m)| ModuleState::unpack(&x[self.state_range(i)], m.n())).collect())
    }

    pub fn pack(&self, states: &[ModuleState]) -> Vec<f64> {
        let mut x = vec![0.0; self.state_len()];
        for (i, s) in states.iter().enumerate() {
            s.pack(&mut x[self.state_range(i)]);
        }
        x
    }

    /// Kinematically consistent states: module 0 as given, every other
    /// module placed so that linked place frames coincide and move together.
    pub fn initial_states(&self, init: &AggregateInit) -> Result<Vec<ModuleState>, MechError> {
        let internal = |i: usize, v: &Vec<Vec<f64>>| -> Result<Vec<f64>, MechError> {
            let n = self.modules[i].n();
            match v.get(i) {
                None => Ok(vec![0.0; n]),
                Some(c) if c.is_empty() => Ok(vec![0.0; n]),
                Some(c) if c.len() == n => Ok(c.clone()),
                Some(c) => Err(MechError::Module(format!(
                    "module `{}` has {n} internal coordinates, initial values give {}",
                    self.modules[i].name,
                    c.len()
                ))),
            }
        };
        let mut states: Vec<Option<ModuleState>> = vec![None; self.modules.len()];
        states[0] = Some(ModuleState {
            r: init.r,
            q: init.q,
            coords: internal(0, &init.coords)?,
            v: init.v,
            w: init.w,
            rates: internal(0, &init.rates)?,
        });
        let mut pending: Vec<usize> = (0..self.links.len()).collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for k in pending {
                let l = self.links[k];
                let (from, to) = match (&states[l.a.0], &states[l.b.0]) {
                    (Some(_), None) => (l.a, l.b),
                    (None, Some(_)) => (l.b, l.a),
                    _ => {
                        rest.push(k);
                        continue;
                    }
                };
                let known = states[from.0].as_ref().unwrap();
                let (ma, mb) = (&self.modules[from.0], &self.modules[to.0]);
                let q = ma.place_orientation(from.1, known) * mb.places[to.1].q.inverse();
                let mut s = ModuleState {
                    r: Vector3::zeros(),
                    q,
                    coords: internal(to.0, &init.coords)?,
                    v: Vector3::zeros(),
                    w: q.inverse() * known.world_rate(),
                    rates: internal(to.0, &init.rates)?,
                };
                s.r = ma.place_position(from.1, known) - s.q * mb.place_offset(to.1, &s);
                s.v = ma.place_velocity(from.1, known) - (mb.place_velocity(to.1, &s) - s.v);
                states[to.0] = Some(s);
            }
            if rest.len() == before {
                break;
            }
            pending = rest;
        }
        Ok(states.into_iter().map(|s| s.expect("connected aggregate")).collect())
    }

    fn side_kinematics(&self, states: &[ModuleState]) -> Vec<[ConnectionKinematics; 2]> {
        self.links
            .iter()
            .map(|l| {
                [
                    self.modules[l.a.0].place_kinematics(l.a.1, &states[l.a.0]),
                    self.modules[l.b.0].place_kinematics(l.b.1, &states[l.b.0]),
                ]
            })
            .collect()
    }

    fn system(&self, states: &[ModuleState], ext: &[ExternalLoad], links: usize) -> (DMatrix<f64>, DVector<f64>) {
        let nd = self.dof_offsets[self.modules.len()];
        let n = nd + 6 * links;
        let mut a = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (i, m) in self.modules.iter().enumerate() {
            let o = self.dof_offsets[i];
            a.view_mut((o, o), (m.dof(), m.dof())).copy_from(&m.mass_matrix());
            let e = ext.get(i).copied().unwrap_or_default();
            rhs.rows_mut(o, m.dof()).copy_from(&m.generalized_force(&states[i], &e));
        }
        let kin = self.side_kinematics(states);
        for (k, (l, [ka, kb])) in self.links.iter().zip(&kin).take(links).enumerate() {
            let row = nd + 6 * k;
            for (side, kk, sign) in [(l.a.0, ka, 1.0), (l.b.0, kb, -1.0)] {
                let o = self.dof_offsets[side];
                let d = self.modules[side].dof();
                // module equations: M ẍ − Jᵀ(±F, ±M) = f
                a.view_mut((o, row), (d, 3)).copy_from(&(kk.linear.transpose() * -sign));
                a.view_mut((o, row + 3), (d, 3)).copy_from(&(kk.angular.transpose() * -sign));
                // compatibility: J_a ẍ_a − J_b ẍ_b = bias_b − bias_a
                a.view_mut((row, o), (3, d)).copy_from(&(&kk.linear * sign));
                a.view_mut((row + 3, o), (3, d)).copy_from(&(&kk.angular * sign));
            }
            rhs.fixed_rows_mut::<3>(row).copy_from(&(kb.a - ka.a));
            rhs.fixed_rows_mut::<3>(row + 3).copy_from(&(kb.eps - ka.eps));
        }
        (a, rhs)
    }

    fn singular(a: &DMatrix<f64>) -> Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let scale = a.amax();
        let lu = a.clone().lu();
        let u = lu.u();
        let min = u.diagonal().amin();
        (min < 1e-10 * scale).then_some(lu)
    }

    /// Accelerations of every module and loads on every link.
    pub fn solve(&self, states: &[ModuleState], ext: &[ExternalLoad]) -> Result<Solution, MechError> {
        let nl = self.links.len();
        let (a, rhs) = self.system(states, ext, nl);
        let scale = a.amax();
        let lu = a.lu();
        if lu.u().diagonal().amin() < 1e-10 * scale {
            let link = (0..nl).find(|&k| Self::singular(&self.system(states, ext, k + 1).0).is_some()).unwrap_or(nl.saturating_sub(1));
            let l = self.links.get(link);
            let name = |s: Option<(usize, usize)>| s.map_or(String::new(), |(m, p)| format!("{}[{p}]", self.modules[m].name));
            return Err(MechError::Singular { link, a: name(l.map(|l| l.a)), b: name(l.map(|l| l.b)) });
        }
        let x = lu.solve(&rhs).expect("nonsingular");
        let nd = self.dof_offsets[self.modules.len()];
        let accel = self.modules.iter().enumerate().map(|(i, m)| x.rows(self.dof_offsets[i], m.dof()).into_owned()).collect();
        let loads = (0..nl)
            .map(|k| (x.fixed_rows::<3>(nd + 6 * k).into_owned(), x.fixed_rows::<3>(nd + 6 * k + 3).into_owned()))
            .collect();
        Ok(Solution { accel, loads })
    }

    /// Stacked compatibility Jacobian `[J_a, −J_b]` over all module
    /// accelerations (6 rows per link).
    pub fn constraint_matrix(&self, states: &[ModuleState]) -> DMatrix<f64> {
        let nd = self.dof_offsets[self.modules.len()];
        let mut c = DMatrix::zeros(6 * self.links.len(), nd);
        for (k, (l, [ka, kb])) in self.links.iter().zip(self.side_kinematics(states)).enumerate() {
            for (side, kk, sign) in [(l.a.0, ka, 1.0), (l.b.0, kb, -1.0)] {
                let (o, d) = (self.dof_offsets[side], self.modules[side].dof());
                c.view_mut((6 * k, o), (3, d)).copy_from(&(&kk.linear * sign));
                c.view_mut((6 * k + 3, o), (3, d)).copy_from(&(&kk.angular * sign));
            }
        }
        c
    }

    /// Largest mismatch of linked place accelerations (linear and angular).
    pub fn compatibility_residual(&self, states: &[ModuleState], sol: &Solution) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, [ka, kb]) in self.links.iter().zip(self.side_kinematics(states)) {
            let (xa, xb) = (&sol.accel[l.a.0], &sol.accel[l.b.0]);
            let lin = (ka.a + &ka.linear * xa) - (kb.a + &kb.linear * xb);
            let ang = (ka.eps + &ka.angular * xa) - (kb.eps + &kb.angular * xb);
            worst = worst.max(lin.amax()).max(ang.amax());
        }
        worst
    }

    /// Link loads expressed in the place frame of side `a`.
    pub fn place_loads(&self, states: &[ModuleState], sol: &Solution) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        self.links
            .iter()
            .zip(&sol.loads)
            .map(|(l, (f, m))| {
                let q = self.modules[l.a.0].place_orientation(l.a.1, &states[l.a.0]);
                (q.inverse() * f, q.inverse() * m)
            })
            .collect()
    }

    /// Fills `dx` with the time derivative of the packed state `x`.
    pub fn derivative(&self, x: &[f64], ext: &[ExternalLoad], dx: &mut [f64]) -> Result<Solution, MechError> {
        let states = self.unpack(x)?;
        let sol = self.solve(&states, ext)?;
        for (i, (m, s)) in self.modules.iter().zip(&states).enumerate() {
            let o = self.state_offsets[i];
            let n = m.n();
            let out = &mut dx[o..o + m.state_len()];
            out[..3].copy_from_slice(s.v.as_slice());
            let raw = Quaternion::new(x[o + 3], x[o + 4], x[o + 5], x[o + 6]);
            let qd = raw * Quaternion::from_imag(s.w) * 0.5;
            out[3..7].copy_from_slice(&[qd.w, qd.i, qd.j, qd.k]);
            out[7..7 + n].copy_from_slice(&s.rates);
            out[7 + n..13 + 2 * n].copy_from_slice(sol.accel[i].as_slice());
        }
        Ok(sol)
    }

    /// Renormalizes every module quaternion in a packed state.
    pub fn normalize(&self, x: &mut [f64]) {
        for i in 0..self.modules.len() {
            let o = self.state_offsets[i] + 3;
            let norm = x[o..o + 4].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                x[o..o + 4].iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    pub fn mass(&self) -> f64 {
        self.modules.iter().map(|m| m.mass).sum()
    }

    pub fn momentum(&self, states: &[ModuleState]) -> Vector3<f64> {
        self.modules.iter().zip(states).map(|(m, s)| s.v * m.mass).sum()
    }

    /// About the world origin, world axes.
    pub fn angular_momentum(&self, states: &[ModuleState]) -> Vector3<f64> {
        self.modules.iter().zip(states).map(|(m, s)| s.r.cross(&(s.v * m.mass)) + s.q * m.body_momentum(s)).sum()
    }

    /// Kinetic plus modal strain energy.
    pub fn energy(&self, states: &[ModuleState]) -> f64 {
        self.modules.iter().zip(states).map(|(m, s)| m.kinetic_energy(s) + m.strain_energy(s)).sum()
    }

    /// Sum of rotor momenta `J_F Ω e`, world axes.
    pub fn wheel_momentum(&self, states: &[ModuleState]) -> Vector3<f64> {
        self.modules
            .iter()
            .zip(states)
            .filter_map(|(m, s)| match &m.kind {
                super::ModuleKind::Flywheel { j_f, axis } => Some(s.q * (axis.into_inner() * (j_f * s.rates[0]))),
                _ => None,
            })
            .sum()
    }

    /// `Σ |J_F Ω|` over all flywheels.
    pub fn wheel_momentum_abs(&self, states: &[ModuleState]) -> f64 {
        self.modules
            .iter()
            .zip(states)
            .filter_map(|(m, s)| match &m.kind {
                super::ModuleKind::Flywheel { j_f, .. } => Some((j_f * s.rates[0]).abs()),
                _ => None,
            })
            .sum()
    }
}

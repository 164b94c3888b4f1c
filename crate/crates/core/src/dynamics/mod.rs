//! Rotating-frame secular Redfield propagation under a shaped field.
//!
//! States are stored in the exciton basis of the ground + single-excitation space
//! (index 0 is the ground state). During the pulse the master equation is integrated
//! with classical fourth-order Runge–Kutta steps spanning two field samples; after the
//! pulse the time-independent generator is applied exactly (populations through the
//! matrix exponential of the rate matrix, coherences as damped phases).

mod free;

pub use free::FreeStep;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::bath::{build_dissipator, BathSpec, Dissipator, DEFAULT_GAP_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, RMatrix};
use crate::model::{Eigensystem, ExcitonModel, HilbertSpace, Manifold};
use crate::pulse::SampledField;
use crate::units::{CM_TO_RAD_PER_FS, DEBYE_VOLT_PER_METER_TO_CM};

/// Below this excited-state population a state cannot be normalized.
pub const EXCITATION_THRESHOLD: f64 = 1e-12;

/// Upper bound on κ·max|V|·h for a fixed Runge–Kutta step; beyond it the local error
/// (∝ (κ|V|h)⁵) is no longer negligible and the step is rejected.
pub const MAX_STEP_PHASE: f64 = 0.2;

/// Reduced density matrix; index 0 is the electronic ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    /// |0⟩⟨0| in a space of dimension `dim`.
    pub fn ground(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// |a⟩⟨a|.
    pub fn pure_state(dim: usize, a: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(a, a)] = Complex64::new(1.0, 0.0);
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Block over states 1..dim (the single-excitation manifold).
    pub fn excited_block(&self) -> CMatrix {
        let n = self.dim() - 1;
        self.matrix.view((1, 1), (n, n)).clone_owned()
    }

    /// Tr ρ_e.
    pub fn excited_population(&self) -> f64 {
        (1..self.dim()).map(|a| self.matrix[(a, a)].re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    /// ‖ρ − ρ†‖_F.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Express the state in the site basis given the eigenbasis transform U.
    pub fn to_site(&self, transform: &RMatrix) -> CMatrix {
        let u = transform.map(|x| Complex64::new(x, 0.0));
        &u * &self.matrix * u.transpose()
    }
}

/// ρ′ = ρ_e / Tr ρ_e on the single-excitation manifold.
pub fn normalized_excited_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let x = rho.excited_population();
    if !(x >= EXCITATION_THRESHOLD) {
        return Err(Error::NoExcitation(x));
    }
    Ok(DensityMatrix::new(
        rho.excited_block() / Complex64::new(x, 0.0),
    ))
}

/// Light-matter coupling (cm⁻¹) in the site basis:
/// Σ_n (d_n·ê)(Ẽ a_n† + Ẽ* a_n), with Ẽ in V/m and dipoles in Debye.
pub fn interaction_operator(
    model: &ExcitonModel,
    manifold: Manifold,
    polarization: &Vector3<f64>,
    field: Complex64,
) -> CMatrix {
    let space = HilbertSpace::new(model.n_sites());
    let dim = space.dim(manifold);
    let mut v = CMatrix::zeros(dim, dim);
    let e = field * DEBYE_VOLT_PER_METER_TO_CM;
    for (n, d) in model.dipoles().iter().enumerate() {
        let c = d.dot(polarization);
        let up = e * c;
        let i = space.single(n);
        v[(i, 0)] += up;
        v[(0, i)] += up.conj();
        if manifold == Manifold::SingleDouble {
            for m in 0..model.n_sites() {
                if m != n {
                    let j = space.pair(n, m);
                    let k = space.single(m);
                    v[(j, k)] += up;
                    v[(k, j)] += up.conj();
                }
            }
        }
    }
    v
}

/// Snapshots of a propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// States in the exciton basis.
    pub states: Vec<DensityMatrix>,
    /// Tr ρ_e at each snapshot.
    pub excited_population: Vec<f64>,
    /// Time at which the field was switched off, fs.
    pub pulse_end: f64,
    /// Columns: exciton states in the site basis (block diagonal, ground first).
    pub transform: RMatrix,
}

impl Trajectory {
    /// Site populations of each snapshot.
    pub fn site_populations(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| {
                let site = s.to_site(&self.transform);
                (0..site.nrows()).map(|a| site[(a, a)].re).collect()
            })
            .collect()
    }

    /// Exciton populations of each snapshot.
    pub fn exciton_populations(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| (0..s.dim()).map(|a| s.matrix[(a, a)].re).collect())
            .collect()
    }
}

/// Master-equation integrator for one molecular configuration.
#[derive(Debug, Clone)]
pub struct Propagator {
    system: Eigensystem,
    dissipator: Dissipator,
    dim: usize,
    energies: Vec<f64>,
    /// Γ_ab, row-major, fs⁻¹.
    decay: Vec<f64>,
    /// Population rate matrix, row-major, fs⁻¹.
    rates: Vec<f64>,
    /// Exciton transition dipoles ⟨α|μ|0⟩, Debye.
    dipoles: Vec<Vector3<f64>>,
    transform: RMatrix,
    unitary: bool,
}

impl Propagator {
    /// Build for `model` coupled to `bath` on the ground + single-excitation space.
    pub fn new(model: &ExcitonModel, bath: &BathSpec) -> Result<Self> {
        let system = Eigensystem::new(model, Manifold::Single);
        let dissipator = build_dissipator(&system, bath, DEFAULT_GAP_TOLERANCE)?;
        Ok(Self::from_parts(model, system, dissipator))
    }

    /// Build from a precomputed eigensystem and dissipator (single manifold).
    pub fn from_parts(model: &ExcitonModel, system: Eigensystem, dissipator: Dissipator) -> Self {
        let dim = system.dim();
        let energies = system.energies();
        let decay = dissipator.decay_matrix();
        let rates = dissipator.rate_matrix();
        let u = &system.single.vectors;
        let dipoles = (0..system.n_sites())
            .map(|a| {
                (0..system.n_sites()).fold(Vector3::zeros(), |acc, n| {
                    acc + model.dipoles()[n] * u[(n, a)]
                })
            })
            .collect();
        let transform = system.transform();
        let unitary = dissipator.is_zero();
        Self {
            system,
            dim,
            energies,
            decay: decay.transpose().as_slice().to_vec(),
            rates: rates.transpose().as_slice().to_vec(),
            dipoles,
            transform,
            unitary,
            dissipator,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn system(&self) -> &Eigensystem {
        &self.system
    }

    pub fn dissipator(&self) -> &Dissipator {
        &self.dissipator
    }

    pub fn transform(&self) -> &RMatrix {
        &self.transform
    }

    /// Exciton energies (ground first), cm⁻¹.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Exciton transition dipoles ⟨α|μ|0⟩, Debye.
    pub fn exciton_dipoles(&self) -> &[Vector3<f64>] {
        &self.dipoles
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Exact field-free evolution over `tau` fs in the frame rotating at `carrier` (cm⁻¹).
    pub fn free_step(&self, tau: f64, carrier: f64) -> FreeStep {
        FreeStep::new(&self.rotating_omega(carrier), &self.decay, &self.rates, tau)
    }

    fn rotating_omega(&self, carrier: f64) -> Vec<f64> {
        self.energies
            .iter()
            .enumerate()
            .map(|(a, e)| {
                if a == 0 {
                    0.0
                } else {
                    (e - carrier) * CM_TO_RAD_PER_FS
                }
            })
            .collect()
    }

    /// Propagate from the ground state (or `initial`) and record snapshots at `record`
    /// (ascending times, fs). During the pulse, record times snap to the nearest step
    /// boundary at or before them.
    pub fn propagate(
        &self,
        field: &SampledField,
        initial: Option<&DensityMatrix>,
        record: &[f64],
    ) -> Result<Trajectory> {
        let mut rho = match initial {
            Some(r) => {
                if r.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: r.dim(),
                    });
                }
                flat(&r.matrix)
            }
            None => flat(&DensityMatrix::ground(self.dim).matrix),
        };
        let h = 2.0 * field.dt;
        let n_steps = self.pulse_steps(field);
        let pulse_end = n_steps as f64 * h;
        let coupling = self.couplings(field);
        let mut work = Workspace::new(self.dim);
        let mut out = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            excited_population: Vec::new(),
            pulse_end,
            transform: self.transform.clone(),
        };
        let mut step = 0usize;
        let push = |out: &mut Trajectory, t: f64, rho: &[Complex64]| {
            let m = unflat(rho, self.dim);
            let state = DensityMatrix::new(m);
            out.times.push(t);
            out.excited_population.push(state.excited_population());
            out.states.push(state);
        };
        let mut free_cache: Vec<(f64, FreeStep)> = Vec::new();
        let mut t_free = pulse_end;
        for &t in record {
            if t < pulse_end - 1e-9 {
                let target = ((t / h) + 1e-9).floor() as usize;
                while step < target {
                    self.rk4_step(&mut rho, &coupling, step, h, &mut work)?;
                    step += 1;
                }
                push(&mut out, step as f64 * h, &rho);
            } else {
                while step < n_steps {
                    self.rk4_step(&mut rho, &coupling, step, h, &mut work)?;
                    step += 1;
                }
                let tau = t - t_free;
                if tau > 1e-12 {
                    let key = (tau * 1e9).round() / 1e9;
                    let idx = match free_cache.iter().position(|(k, _)| *k == key) {
                        Some(i) => i,
                        None => {
                            free_cache.push((key, self.free_step(tau, field.carrier)));
                            free_cache.len() - 1
                        }
                    };
                    free_cache[idx].1.apply_flat(&mut rho, self.dim);
                    t_free = t;
                }
                push(&mut out, t, &rho);
            }
        }
        Ok(out)
    }

    /// State at the end of the pulse (switch-off time on the step grid).
    pub fn pulse_end_state(&self, field: &SampledField) -> Result<(DensityMatrix, f64)> {
        let h = 2.0 * field.dt;
        let n_steps = self.pulse_steps(field);
        let coupling = self.couplings(field);
        let mut work = Workspace::new(self.dim);
        if self.unitary {
            let mut psi = vec![Complex64::new(0.0, 0.0); self.dim];
            psi[0] = Complex64::new(1.0, 0.0);
            for s in 0..n_steps {
                self.rk4_pure(&mut psi, &coupling, s, h, &mut work)?;
            }
            let m = CMatrix::from_fn(self.dim, self.dim, |a, b| psi[a] * psi[b].conj());
            return Ok((DensityMatrix::new(m), n_steps as f64 * h));
        }
        let mut rho = flat(&DensityMatrix::ground(self.dim).matrix);
        for s in 0..n_steps {
            self.rk4_step(&mut rho, &coupling, s, h, &mut work)?;
        }
        Ok((
            DensityMatrix::new(unflat(&rho, self.dim)),
            n_steps as f64 * h,
        ))
    }

    fn pulse_steps(&self, field: &SampledField) -> usize {
        let h = 2.0 * field.dt;
        if field.is_empty() {
            return 0;
        }
        (field.end_time / h - 1e-9).ceil().max(0.0) as usize
    }

    /// κ·(m_α·ê)·Ẽ_j for every field sample j, flattened [j][α].
    fn couplings(&self, field: &SampledField) -> PulseCoupling {
        let n = self.dim - 1;
        let proj: Vec<f64> = self
            .dipoles
            .iter()
            .map(|d| d.dot(&field.polarization) * DEBYE_VOLT_PER_METER_TO_CM * CM_TO_RAD_PER_FS)
            .collect();
        let last = field.end_index();
        let len = if field.is_empty() { 0 } else { last + 1 };
        let mut values = vec![Complex64::new(0.0, 0.0); len * n];
        let mut peak: f64 = 0.0;
        for j in 0..len {
            let e = field.value(j);
            for a in 0..n {
                let v = e * proj[a];
                peak = peak.max(v.norm());
                values[j * n + a] = v;
            }
        }
        let omega = self.rotating_omega(field.carrier);
        let d = self.dim;
        let z = (0..d * d)
            .map(|i| Complex64::new(self.decay[i], omega[i / d] - omega[i % d]))
            .collect();
        PulseCoupling {
            values,
            n,
            len,
            sum_peak: peak * (n as f64).sqrt(),
            omega,
            z,
            zeros: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn check_step(&self, coupling: &PulseCoupling, h: f64, step: usize) -> Result<()> {
        if coupling.sum_peak * h > MAX_STEP_PHASE {
            return Err(Error::Integration {
                t: step as f64 * h,
                reason: format!(
                    "field coupling {:.3e} fs^-1 too strong for step {h} fs (limit {MAX_STEP_PHASE} rad)",
                    coupling.sum_peak
                ),
            });
        }
        Ok(())
    }

    fn rk4_step(
        &self,
        rho: &mut [Complex64],
        c: &PulseCoupling,
        step: usize,
        h: f64,
        w: &mut Workspace,
    ) -> Result<()> {
        if step == 0 {
            self.check_step(c, h, step)?;
        }
        let d = self.dim;
        let (e0, e1, e2) = (
            c.sample(2 * step),
            c.sample(2 * step + 1),
            c.sample(2 * step + 2),
        );
        self.derivative(rho, e0, c, &mut w.k1);
        for i in 0..d * d {
            w.tmp[i] = rho[i] + w.k1[i] * (0.5 * h);
        }
        self.derivative(&w.tmp, e1, c, &mut w.k2);
        for i in 0..d * d {
            w.tmp[i] = rho[i] + w.k2[i] * (0.5 * h);
        }
        self.derivative(&w.tmp, e1, c, &mut w.k3);
        for i in 0..d * d {
            w.tmp[i] = rho[i] + w.k3[i] * h;
        }
        self.derivative(&w.tmp, e2, c, &mut w.k4);
        let s = h / 6.0;
        for i in 0..d * d {
            rho[i] += (w.k1[i] + (w.k2[i] + w.k3[i]) * 2.0 + w.k4[i]) * s;
        }
        if !rho[0].re.is_finite() {
            return Err(Error::Integration {
                t: (step + 1) as f64 * h,
                reason: "non-finite state".into(),
            });
        }
        Ok(())
    }

    /// dρ/dt for ρ flattened row-major; `e[α]` = κ(m_α·ê)Ẽ.
    ///
    /// V couples the ground state only, so ρ_{α0} and the upper triangle of the
    /// excited block are computed and the rest filled by Hermiticity.
    fn derivative(
        &self,
        rho: &[Complex64],
        e: &[Complex64],
        c: &PulseCoupling,
        out: &mut [Complex64],
    ) {
        let d = self.dim;
        let mi = Complex64::new(0.0, -1.0);
        let mut s = Complex64::new(0.0, 0.0);
        for a in 1..d {
            s += e[a - 1].conj() * rho[a * d];
        }
        let mut g0 = 0.0;
        for k in 0..d {
            g0 += self.rates[k] * rho[k * d + k].re;
        }
        out[0] = Complex64::new(g0 + 2.0 * s.im, 0.0);
        for a in 1..d {
            let row = &rho[a * d..(a + 1) * d];
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 1..d {
                acc += row[b] * e[b - 1];
            }
            let v = -c.z[a * d] * row[0] + mi * (e[a - 1] * rho[0] - acc);
            out[a * d] = v;
            out[a] = v.conj();
        }
        for a in 1..d {
            let ra0 = rho[a * d];
            let ea = e[a - 1];
            let mut gain = 0.0;
            for k in 0..d {
                gain += self.rates[a * d + k] * rho[k * d + k].re;
            }
            out[a * d + a] = Complex64::new(gain + 2.0 * (ea * ra0.conj()).im, 0.0);
            for b in a + 1..d {
                let i = a * d + b;
                let v = -c.z[i] * rho[i] + mi * (ea * rho[b * d].conj() - ra0 * e[b - 1].conj());
                out[i] = v;
                out[b * d + a] = v.conj();
            }
        }
    }

    fn rk4_pure(
        &self,
        psi: &mut [Complex64],
        c: &PulseCoupling,
        step: usize,
        h: f64,
        w: &mut Workspace,
    ) -> Result<()> {
        if step == 0 {
            self.check_step(c, h, step)?;
        }
        let d = self.dim;
        let (e0, e1, e2) = (
            c.sample(2 * step),
            c.sample(2 * step + 1),
            c.sample(2 * step + 2),
        );
        let deriv = |x: &[Complex64], e: &[Complex64], out: &mut [Complex64]| {
            let mi = Complex64::new(0.0, -1.0);
            let mut g = Complex64::new(0.0, 0.0);
            for a in 1..d {
                let ea = e[a - 1];
                g += ea.conj() * x[a];
                out[a] = mi * (x[a] * c.omega[a] + ea * x[0]);
            }
            out[0] = mi * g;
        };
        deriv(psi, e0, &mut w.k1);
        for i in 0..d {
            w.tmp[i] = psi[i] + w.k1[i] * (0.5 * h);
        }
        deriv(&w.tmp, e1, &mut w.k2);
        for i in 0..d {
            w.tmp[i] = psi[i] + w.k2[i] * (0.5 * h);
        }
        deriv(&w.tmp, e1, &mut w.k3);
        for i in 0..d {
            w.tmp[i] = psi[i] + w.k3[i] * h;
        }
        deriv(&w.tmp, e2, &mut w.k4);
        let s = h / 6.0;
        for i in 0..d {
            psi[i] += (w.k1[i] + (w.k2[i] + w.k3[i]) * 2.0 + w.k4[i]) * s;
        }
        if !psi[0].re.is_finite() {
            return Err(Error::Integration {
                t: (step + 1) as f64 * h,
                reason: "non-finite state".into(),
            });
        }
        Ok(())
    }
}

struct PulseCoupling {
    values: Vec<Complex64>,
    n: usize,
    len: usize,
    sum_peak: f64,
    omega: Vec<f64>,
    /// Γ_ab + i(ω_a − ω_b), row-major.
    z: Vec<Complex64>,
    zeros: Vec<Complex64>,
}

impl PulseCoupling {
    fn sample(&self, j: usize) -> &[Complex64] {
        if j < self.len {
            &self.values[j * self.n..(j + 1) * self.n]
        } else {
            &self.zeros
        }
    }
}

struct Workspace {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim * dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn flat(m: &CMatrix) -> Vec<Complex64> {
    m.transpose().as_slice().to_vec()
}

fn unflat(v: &[Complex64], dim: usize) -> CMatrix {
    CMatrix::from_row_slice(dim, dim, v)
}

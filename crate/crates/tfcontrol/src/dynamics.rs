//! State propagation and its exact discrete adjoint.
//!
//! One forward step on a uniform grid is the Strang splitting
//! `exp(-i H0 dt/2) exp(-i v·H dt) exp(-i H0 dt/2)` with the control field
//! sampled at the step midpoint. Every substep is an exact (eigendecomposed
//! or closed-form) unitary, so norms are preserved to roundoff and the
//! backward stepper below is the exact conjugate transpose of the forward
//! one. Gradients computed against this adjoint are derivatives of the
//! discrete propagator, not discretizations of a continuous formula.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

pub type CVector = DVector<Complex64>;

/// Abstract quantum system: drift Hamiltonian, bounded self-adjoint
/// couplings, target observable.
pub trait QuantumSystem: Send + Sync {
    fn dimension(&self) -> usize;

    /// Number `L` of coupling operators.
    fn num_couplings(&self) -> usize;

    fn apply_h0(&self, psi: &CVector) -> CVector;

    fn apply_coupling(&self, l: usize, psi: &CVector) -> CVector;

    fn observable_apply(&self, psi: &CVector) -> CVector;

    /// In-place `psi <- exp(-i H0 dt) psi`; negative `dt` gives the adjoint.
    fn drift_step(&self, dt: f64, psi: &mut CVector);

    /// In-place `psi <- exp(-i dt sum_l v_l H_l) psi`; negative `dt` gives
    /// the adjoint.
    fn coupling_step(&self, dt: f64, v: &[f64], psi: &mut CVector);

    /// Exact partial derivatives of one coupling substep paired between two
    /// states: returns `g` with
    /// `d/dv_l <phi, exp(-i dt v·H) psi> = dt * g_l`
    /// (real part, R-bilinear convention). `psi` is the state entering the
    /// substep, `phi` the adjoint state just behind it.
    fn coupling_gradient(&self, dt: f64, v: &[f64], psi: &CVector, phi: &CVector) -> Vec<f64>;
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(pub CVector);

impl QuantumState {
    /// Requires unit Euclidean norm within 1e-9.
    pub fn new(coeffs: CVector) -> Result<Self> {
        let n = coeffs.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("state norm {n} is not 1 within 1e-9")));
        }
        Ok(QuantumState(coeffs))
    }

    /// Normalize and wrap.
    pub fn normalized(mut coeffs: CVector) -> Result<Self> {
        let n = coeffs.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::input("cannot normalize a zero or non-finite vector"));
        }
        coeffs /= Complex64::new(n, 0.0);
        Ok(QuantumState(coeffs))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        QuantumState(v)
    }

    pub fn coeffs(&self) -> &CVector {
        &self.0
    }
}

/// Real control field values at step midpoints, `L` components per step.
/// Storage is step-major: `data[j * components + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    data: Vec<f64>,
    n_steps: usize,
    components: usize,
}

impl SampledField {
    pub fn new(data: Vec<f64>, n_steps: usize, components: usize) -> Result<Self> {
        if data.len() != n_steps * components {
            return Err(Error::dimension(format!(
                "field data length {} does not match {} steps x {} components",
                data.len(),
                n_steps,
                components
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("field contains non-finite values"));
        }
        Ok(SampledField { data, n_steps, components })
    }

    pub fn zeros(n_steps: usize, components: usize) -> Self {
        SampledField { data: vec![0.0; n_steps * components], n_steps, components }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// All component values at step `j`.
    pub fn at_step(&self, j: usize) -> &[f64] {
        &self.data[j * self.components..(j + 1) * self.components]
    }

    pub fn at_step_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.components..(j + 1) * self.components]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// States on every node of a time grid.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub states: Vec<CVector>,
    pub grid: TimeGrid,
}

impl StateTrajectory {
    pub fn terminal(&self) -> &CVector {
        self.states.last().expect("trajectory is never empty")
    }
}

fn check_conformance(
    system: &dyn QuantumSystem,
    field: &SampledField,
    grid: &TimeGrid,
    state_dim: usize,
) -> Result<()> {
    if field.n_steps() != grid.n_steps() {
        return Err(Error::config(format!(
            "field has {} steps but grid has {}",
            field.n_steps(),
            grid.n_steps()
        )));
    }
    if field.components() != system.num_couplings() {
        return Err(Error::config(format!(
            "field has {} components but system has {} couplings",
            field.components(),
            system.num_couplings()
        )));
    }
    if state_dim != system.dimension() {
        return Err(Error::dimension(format!(
            "state dimension {} does not match system dimension {}",
            state_dim,
            system.dimension()
        )));
    }
    Ok(())
}

/// Propagate `psi0` forward over the full grid.
pub fn propagate(
    system: &dyn QuantumSystem,
    field: &SampledField,
    psi0: &QuantumState,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    check_conformance(system, field, grid, psi0.coeffs().len())?;
    let dt = grid.step();
    let mut states = Vec::with_capacity(grid.n_nodes());
    let mut psi = psi0.coeffs().clone();
    states.push(psi.clone());
    for j in 0..grid.n_steps() {
        system.drift_step(dt / 2.0, &mut psi);
        system.coupling_step(dt, field.at_step(j), &mut psi);
        system.drift_step(dt / 2.0, &mut psi);
        states.push(psi.clone());
    }
    Ok(StateTrajectory { states, grid: *grid })
}

/// Propagate a terminal vector backward; each backward step is the exact
/// conjugate transpose of the corresponding forward step.
///
/// `phi_terminal` is typically `O psi(T)` and need not be normalized.
pub fn propagate_adjoint(
    system: &dyn QuantumSystem,
    field: &SampledField,
    phi_terminal: &CVector,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    check_conformance(system, field, grid, phi_terminal.len())?;
    let dt = grid.step();
    let n = grid.n_steps();
    let mut states = vec![CVector::zeros(0); grid.n_nodes()];
    let mut phi = phi_terminal.clone();
    states[n] = phi.clone();
    for j in (0..n).rev() {
        system.drift_step(-dt / 2.0, &mut phi);
        system.coupling_step(-dt, field.at_step(j), &mut phi);
        system.drift_step(-dt / 2.0, &mut phi);
        states[j] = phi.clone();
    }
    Ok(StateTrajectory { states, grid: *grid })
}

/// Pairing `g_l(t_j) = Re <phi(t_j), -i H_l psi(t_j)>` on the time nodes.
pub fn coupling_pairing(
    system: &dyn QuantumSystem,
    psi: &StateTrajectory,
    phi: &StateTrajectory,
) -> Result<Vec<Vec<f64>>> {
    if psi.grid != phi.grid || psi.states.len() != phi.states.len() {
        return Err(Error::config("trajectories live on different grids"));
    }
    let ell = system.num_couplings();
    let mut out = Vec::with_capacity(psi.states.len());
    for (p, q) in psi.states.iter().zip(phi.states.iter()) {
        let mut row = Vec::with_capacity(ell);
        for l in 0..ell {
            let hp = system.apply_coupling(l, p);
            // Re <phi, -i H psi> = Im <phi, H psi>
            row.push(q.dotc(&hp).im);
        }
        out.push(row);
    }
    Ok(out)
}

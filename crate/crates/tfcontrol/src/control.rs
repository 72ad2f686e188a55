//! Measure-valued controls: Dirac atoms on a frequency grid carrying
//! envelopes in one of the supported envelope spaces.
//!
//! Sparsity is a property of the values, not the storage: every grid point
//! always carries an envelope, and the support is the superlevel set of
//! atom norms above the Huber radius.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};

/// Hilbert space of envelopes attached to each Dirac atom.
#[derive(Clone)]
pub enum EnvelopeSpace {
    /// H^1_0(0,T;C) with the Dirichlet seminorm; nodal values on the time
    /// grid, first and last pinned to zero.
    H10(TimeGrid),
    /// L^2(0,T;C) with the piecewise-linear mass-matrix form.
    L2(TimeGrid),
    /// C with Re(a conj(b)).
    Scalar,
    /// D(A^{1/2}) for A = K^{-1}, realized through a prefactored SPD solve
    /// of the kernel matrix: <a,b> = Re(a^H K^{-1} b).
    Kernel {
        grid: TimeGrid,
        kernel: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
}

impl std::fmt::Debug for EnvelopeSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvelopeSpace::H10(g) => write!(f, "H10({} nodes)", g.n_nodes()),
            EnvelopeSpace::L2(g) => write!(f, "L2({} nodes)", g.n_nodes()),
            EnvelopeSpace::Scalar => write!(f, "Scalar"),
            EnvelopeSpace::Kernel { grid, .. } => write!(f, "Kernel({} nodes)", grid.n_nodes()),
        }
    }
}

impl EnvelopeSpace {
    /// Kernel-weighted space from an SPD kernel matrix on the time nodes.
    pub fn kernel(grid: TimeGrid, kernel: DMatrix<f64>) -> Result<Self> {
        if kernel.nrows() != grid.n_nodes() || kernel.ncols() != grid.n_nodes() {
            return Err(Error::dimension("kernel matrix must be n_nodes x n_nodes"));
        }
        let chol = Cholesky::new(kernel.clone())
            .ok_or_else(|| Error::input("kernel matrix is not positive definite"))?;
        Ok(EnvelopeSpace::Kernel { grid, kernel, chol })
    }

    /// Number of complex coefficients an envelope carries in this space.
    pub fn envelope_len(&self) -> usize {
        match self {
            EnvelopeSpace::H10(g) | EnvelopeSpace::L2(g) => g.n_nodes(),
            EnvelopeSpace::Kernel { grid, .. } => grid.n_nodes(),
            EnvelopeSpace::Scalar => 1,
        }
    }

    pub fn time_grid(&self) -> Option<&TimeGrid> {
        match self {
            EnvelopeSpace::H10(g) | EnvelopeSpace::L2(g) => Some(g),
            EnvelopeSpace::Kernel { grid, .. } => Some(grid),
            EnvelopeSpace::Scalar => None,
        }
    }

    fn check(&self, e: &Envelope) -> Result<()> {
        if e.coeffs.len() != self.envelope_len() {
            return Err(Error::dimension(format!(
                "envelope has {} coefficients, space expects {}",
                e.coeffs.len(),
                self.envelope_len()
            )));
        }
        if let EnvelopeSpace::H10(_) = self {
            let first = e.coeffs[0];
            let last = e.coeffs[e.coeffs.len() - 1];
            if first != Complex64::default() || last != Complex64::default() {
                return Err(Error::input("H1_0 envelope must vanish at both endpoints"));
            }
        }
        Ok(())
    }
}

/// Complex envelope: nodal values on the time grid, or a single scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub coeffs: Vec<Complex64>,
}

impl Envelope {
    pub fn zeros(space: &EnvelopeSpace) -> Self {
        Envelope { coeffs: vec![Complex64::default(); space.envelope_len()] }
    }

    pub fn scalar(z: Complex64) -> Self {
        Envelope { coeffs: vec![z] }
    }

    pub fn scale(&mut self, z: Complex64) {
        for c in &mut self.coeffs {
            *c *= z;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Envelope) {
        for (c, o) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += o * a;
        }
    }
}

/// Real inner product of two envelopes in the given space.
pub fn envelope_inner(space: &EnvelopeSpace, a: &Envelope, b: &Envelope) -> Result<f64> {
    space.check(a)?;
    space.check(b)?;
    Ok(match space {
        EnvelopeSpace::H10(g) => {
            let dt = g.step();
            let mut acc = 0.0;
            for j in 0..a.coeffs.len() - 1 {
                let da = a.coeffs[j + 1] - a.coeffs[j];
                let db = b.coeffs[j + 1] - b.coeffs[j];
                acc += (da * db.conj()).re;
            }
            acc / dt
        }
        EnvelopeSpace::L2(g) => {
            let dt = g.step();
            let n = a.coeffs.len();
            let mut acc = 0.0;
            for j in 0..n {
                let diag = if j == 0 || j == n - 1 { dt / 3.0 } else { 2.0 * dt / 3.0 };
                acc += (a.coeffs[j] * b.coeffs[j].conj()).re * diag;
                if j + 1 < n {
                    acc += (a.coeffs[j] * b.coeffs[j + 1].conj()
                        + a.coeffs[j + 1] * b.coeffs[j].conj())
                    .re
                        * (dt / 6.0);
                }
            }
            acc
        }
        EnvelopeSpace::Scalar => (a.coeffs[0] * b.coeffs[0].conj()).re,
        EnvelopeSpace::Kernel { chol, .. } => {
            let n = b.coeffs.len();
            let re = nalgebra::DVector::from_iterator(n, b.coeffs.iter().map(|z| z.re));
            let im = nalgebra::DVector::from_iterator(n, b.coeffs.iter().map(|z| z.im));
            let yre = chol.solve(&re);
            let yim = chol.solve(&im);
            let mut acc = 0.0;
            for j in 0..n {
                // Re(a^H y) with y = K^{-1} b
                acc += a.coeffs[j].re * yre[j] + a.coeffs[j].im * yim[j];
            }
            acc
        }
    })
}

pub fn envelope_norm(space: &EnvelopeSpace, a: &Envelope) -> Result<f64> {
    Ok(envelope_inner(space, a, a)?.max(0.0).sqrt())
}

/// Finite sum of Dirac atoms on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMeasure {
    pub grid: FrequencyGrid,
    pub atoms: Vec<Envelope>,
}

impl ControlMeasure {
    pub fn zeros(grid: FrequencyGrid, space: &EnvelopeSpace) -> Self {
        let atoms = (0..grid.len()).map(|_| Envelope::zeros(space)).collect();
        ControlMeasure { grid, atoms }
    }

    pub fn conforms(&self, space: &EnvelopeSpace) -> Result<()> {
        if self.atoms.len() != self.grid.len() {
            return Err(Error::dimension("atom count does not match frequency grid"));
        }
        for a in &self.atoms {
            space.check(a)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, z: f64) {
        let z = Complex64::new(z, 0.0);
        for a in &mut self.atoms {
            a.scale(z);
        }
    }

    /// `self += a * other`, atom-wise.
    pub fn axpy(&mut self, a: f64, other: &ControlMeasure) {
        for (s, o) in self.atoms.iter_mut().zip(other.atoms.iter()) {
            s.axpy(a, o);
        }
    }

    /// Riesz-geometry inner product: sum of atom-wise U inner products.
    pub fn dot(&self, other: &ControlMeasure, space: &EnvelopeSpace) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in self.atoms.iter().zip(other.atoms.iter()) {
            acc += envelope_inner(space, a, b)?;
        }
        Ok(acc)
    }

    pub fn norm(&self, space: &EnvelopeSpace) -> Result<f64> {
        Ok(self.dot(self, space)?.max(0.0).sqrt())
    }

    pub fn atom_norms(&self, space: &EnvelopeSpace) -> Result<Vec<f64>> {
        self.atoms.iter().map(|a| envelope_norm(space, a)).collect()
    }
}

/// Discrete mass norm: l^1 sum of atom envelope norms.
pub fn measure_norm(u: &ControlMeasure, space: &EnvelopeSpace) -> Result<f64> {
    Ok(u.atom_norms(space)?.iter().sum())
}

/// Huber smoothing radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    pub theta: f64,
}

impl HuberParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::config(format!("Huber radius must be positive, got {theta}")));
        }
        Ok(HuberParams { theta })
    }

    /// h(z) as a function of the atom norm.
    pub fn value(&self, norm: f64) -> f64 {
        if norm > self.theta {
            norm - self.theta / 2.0
        } else {
            norm * norm / (2.0 * self.theta)
        }
    }

    /// Gradient multiplier: grad h(z) = scale * z.
    pub fn scale(&self, norm: f64) -> f64 {
        if norm > self.theta {
            1.0 / norm
        } else {
            1.0 / self.theta
        }
    }
}

/// Huber-smoothed mass norm.
pub fn huber_value(u: &ControlMeasure, space: &EnvelopeSpace, p: HuberParams) -> Result<f64> {
    Ok(u.atom_norms(space)?.iter().map(|&n| p.value(n)).sum())
}

/// Superlevel set of atom norms strictly above the Huber radius.
pub fn support(u: &ControlMeasure, space: &EnvelopeSpace, p: HuberParams) -> Result<Vec<usize>> {
    Ok(u.atom_norms(space)?
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > p.theta)
        .map(|(i, _)| i)
        .collect())
}

/// Same base envelope at every grid point with an independently drawn
/// uniform random phase; deterministic per seed.
pub fn random_initial_control(
    grid: &FrequencyGrid,
    space: &EnvelopeSpace,
    base: &Envelope,
    seed: u64,
) -> Result<ControlMeasure> {
    space.check(base)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..grid.len())
        .map(|_| {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let mut e = base.clone();
            e.scale(Complex64::from_polar(1.0, theta));
            e
        })
        .collect();
    Ok(ControlMeasure { grid: grid.clone(), atoms })
}

/// Half-sine bump scaled to the requested U-norm (scalar spaces: modulus).
pub fn base_envelope(space: &EnvelopeSpace, target_norm: f64) -> Result<Envelope> {
    let mut e = match space {
        EnvelopeSpace::Scalar => Envelope::scalar(Complex64::new(1.0, 0.0)),
        EnvelopeSpace::H10(g) | EnvelopeSpace::L2(g) | EnvelopeSpace::Kernel { grid: g, .. } => {
            let n = g.n_nodes();
            let t_final = g.t_final();
            Envelope {
                coeffs: (0..n)
                    .map(|j| {
                        let t = g.node(j);
                        Complex64::new((std::f64::consts::PI * t / t_final).sin(), 0.0)
                    })
                    .collect(),
            }
        }
    };
    // pin endpoints exactly for the Dirichlet space
    if let EnvelopeSpace::H10(_) = space {
        e.coeffs[0] = Complex64::default();
        let last = e.coeffs.len() - 1;
        e.coeffs[last] = Complex64::default();
    }
    let n = envelope_norm(space, &e)?;
    if n <= 0.0 {
        return Err(Error::numerical("base envelope has zero norm"));
    }
    e.scale(Complex64::new(target_norm / n, 0.0));
    Ok(e)
}

//! Finite-level systems given by explicit Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{CVector, QuantumSystem};
use crate::error::{Error, Result};
use crate::numeric::sinc;

/// Eigendecomposition of a Hermitian matrix, kept for exact unitary steps.
#[derive(Debug, Clone)]
struct HermitianEigen {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> HermitianEigen {
    let se = m.clone().symmetric_eigen();
    HermitianEigen { values: se.eigenvalues, vectors: se.eigenvectors }
}

fn is_hermitian(m: &DMatrix<Complex64>, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * (1.0 + m.norm())
}

/// Explicit-matrix quantum system with exact eigendecomposed substeps.
pub struct FiniteLevelSystem {
    h0: DMatrix<Complex64>,
    h0_eig: HermitianEigen,
    couplings: Vec<DMatrix<Complex64>>,
    observable: DMatrix<Complex64>,
}

impl FiniteLevelSystem {
    pub fn new(
        h0: DMatrix<Complex64>,
        couplings: Vec<DMatrix<Complex64>>,
        observable: DMatrix<Complex64>,
    ) -> Result<Self> {
        let d = h0.nrows();
        if h0.ncols() != d || observable.nrows() != d || observable.ncols() != d {
            return Err(Error::dimension("system matrices must be square and equal-sized"));
        }
        if !is_hermitian(&h0, 1e-12) {
            return Err(Error::input("H0 is not Hermitian"));
        }
        for (l, h) in couplings.iter().enumerate() {
            if h.nrows() != d || h.ncols() != d {
                return Err(Error::dimension(format!("coupling {l} has wrong shape")));
            }
            if !is_hermitian(h, 1e-12) {
                return Err(Error::input(format!("coupling {l} is not Hermitian")));
            }
        }
        if !is_hermitian(&observable, 1e-12) {
            return Err(Error::input("observable is not Hermitian"));
        }
        let h0_eig = hermitian_eigen(&h0);
        Ok(FiniteLevelSystem { h0, h0_eig, couplings, observable })
    }

    pub fn h0(&self) -> &DMatrix<Complex64> {
        &self.h0
    }

    pub fn coupling(&self, l: usize) -> &DMatrix<Complex64> {
        &self.couplings[l]
    }

    /// Eigenvalues of the drift Hamiltonian, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.h0_eig.values.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    fn coupling_matrix(&self, v: &[f64]) -> DMatrix<Complex64> {
        let d = self.h0.nrows();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (vl, h) in v.iter().zip(self.couplings.iter()) {
            m += h * Complex64::new(*vl, 0.0);
        }
        m
    }
}

fn apply_exp(eig: &HermitianEigen, dt: f64, psi: &mut CVector) {
    // psi <- U diag(e^{-i lambda dt}) U^H psi
    let mut w = eig.vectors.adjoint() * &*psi;
    for (wi, lam) in w.iter_mut().zip(eig.values.iter()) {
        *wi *= Complex64::new(0.0, -lam * dt).exp();
    }
    *psi = &eig.vectors * w;
}

impl QuantumSystem for FiniteLevelSystem {
    fn dimension(&self) -> usize {
        self.h0.nrows()
    }

    fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    fn apply_h0(&self, psi: &CVector) -> CVector {
        &self.h0 * psi
    }

    fn apply_coupling(&self, l: usize, psi: &CVector) -> CVector {
        &self.couplings[l] * psi
    }

    fn observable_apply(&self, psi: &CVector) -> CVector {
        &self.observable * psi
    }

    fn drift_step(&self, dt: f64, psi: &mut CVector) {
        apply_exp(&self.h0_eig, dt, psi);
    }

    fn coupling_step(&self, dt: f64, v: &[f64], psi: &mut CVector) {
        let eig = hermitian_eigen(&self.coupling_matrix(v));
        apply_exp(&eig, dt, psi);
    }

    fn coupling_gradient(&self, dt: f64, v: &[f64], psi: &CVector, phi: &CVector) -> Vec<f64> {
        // Exact Frechet derivative of exp(-i dt M) with M = sum v_l H_l via
        // the divided-difference formula in the eigenbasis of M:
        //   (e^{-i a dt} - e^{-i b dt}) / (i (b - a) dt)
        //     = e^{-i (a+b) dt / 2} sinc((a - b) dt / 2)
        let eig = hermitian_eigen(&self.coupling_matrix(v));
        let d = psi.len();
        let psi_t = eig.vectors.adjoint() * psi;
        let phi_t = eig.vectors.adjoint() * phi;
        let mut grad = Vec::with_capacity(self.couplings.len());
        for h in &self.couplings {
            let ht = eig.vectors.adjoint() * h * &eig.vectors;
            let mut acc = Complex64::default();
            for a in 0..d {
                for b in 0..d {
                    let la = eig.values[a];
                    let lb = eig.values[b];
                    let phase = Complex64::new(0.0, -(la + lb) * dt / 2.0).exp();
                    let factor = phase * sinc((la - lb) * dt / 2.0);
                    // contribution of D exp[-i H_l dt] scaled by 1/dt
                    acc += phi_t[a].conj()
                        * (Complex64::new(0.0, -1.0) * ht[(a, b)] * factor)
                        * psi_t[b];
                }
            }
            grad.push(acc.re);
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::QuantumState;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng, d: usize) -> CVector {
        CVector::from_iterator(d, (0..d).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)))
    }

    #[test]
    fn drift_is_unitary_and_adjoint_consistent() {
        let sys = crate::models::build_three_level();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_state(&mut rng, 3);
            let b = random_state(&mut rng, 3);
            let mut fa = a.clone();
            sys.drift_step(0.37, &mut fa);
            let mut fb = b.clone();
            sys.drift_step(-0.37, &mut fb);
            // <F a, b> = <a, F^H b>
            assert!((fa.dotc(&b) - a.dotc(&fb)).norm() < 1e-13);
            assert!((fa.norm() - a.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn coupling_step_unitary() {
        let sys = crate::models::build_two_level(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let psi = QuantumState::normalized(random_state(&mut rng, 2)).unwrap();
            let mut p = psi.coeffs().clone();
            sys.coupling_step(0.21, &[0.4, -0.7], &mut p);
            assert!((p.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn coupling_gradient_matches_finite_differences() {
        // directional check of the Frechet formula against central FD on
        // Re<phi, exp(-i dt v.H) psi>, noncommuting L = 2 case
        let sys = crate::models::build_two_level(0.0, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(&mut rng, 2);
        let phi = random_state(&mut rng, 2);
        let dt = 0.05;
        let v = [0.3, -0.2];
        let g = sys.coupling_gradient(dt, &v, &psi, &phi);
        for l in 0..2 {
            let h = 1e-6;
            let mut vp = v;
            vp[l] += h;
            let mut vm = v;
            vm[l] -= h;
            let mut pp = psi.clone();
            sys.coupling_step(dt, &vp, &mut pp);
            let mut pm = psi.clone();
            sys.coupling_step(dt, &vm, &mut pm);
            let fd = (phi.dotc(&pp).re - phi.dotc(&pm).re) / (2.0 * h) / dt;
            assert!((g[l] - fd).abs() < 1e-7, "l={l}: {} vs {}", g[l], fd);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        assert!(FiniteLevelSystem::new(m.clone(), vec![], m.clone()).is_err());
    }
}

//! Concrete quantum systems: two-level spin, three-level atom, and the 1-D
//! two-potential-energy-surface molecule.

mod finite;
mod two_pes;

pub use finite::FiniteLevelSystem;
pub use two_pes::{TwoPesSpec, TwoPesSystem};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn cm(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Three-level atom (1s, 2s, 3p): drift diag(-2, -1, 2), single coupling
/// with the 1<->2 transition forbidden, target = leave span{e1, e2}.
pub fn build_three_level() -> FiniteLevelSystem {
    let h0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        cm(-2.0),
        cm(-1.0),
        cm(2.0),
    ]));
    let h1 = DMatrix::from_row_slice(3, 3, &[
        cm(0.0), cm(0.0), cm(1.0),
        cm(0.0), cm(0.0), cm(1.0),
        cm(1.0), cm(1.0), cm(0.0),
    ]);
    let obs = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        cm(1.0),
        cm(1.0),
        cm(0.0),
    ]));
    FiniteLevelSystem::new(h0, vec![h1], obs).expect("fixed matrices are valid")
}

/// Two-level system with a complex control entering off-diagonally,
/// realized as two real field components (Re v, Im v).
///
/// The observable penalizes remaining in the ground state.
pub fn build_two_level(e1: f64, e2: f64) -> FiniteLevelSystem {
    assert!(e1 != e2, "two-level system needs distinct energies");
    let h0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cm(e1), cm(e2)]));
    // coupling matrix [[0, v], [v*, 0]] with v = v1 + i v2, so a positive
    // harmonic v(t) = A e^{i(e2-e1)t} is the resonant drive
    let sx = DMatrix::from_row_slice(2, 2, &[cm(0.0), cm(1.0), cm(1.0), cm(0.0)]);
    let sy = DMatrix::from_row_slice(2, 2, &[
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 0.0),
    ]);
    let obs = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cm(1.0), cm(0.0)]));
    FiniteLevelSystem::new(h0, vec![sx, sy], obs).expect("fixed matrices are valid")
}

/// Pairwise drift eigenvalue differences (Bohr frequencies) of a
/// finite-level system, ascending and deduplicated within 1e-12.
pub fn eigen_gaps(system: &FiniteLevelSystem) -> Vec<f64> {
    let e = system.energies();
    let mut gaps = Vec::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            gaps.push((e[j] - e[i]).abs());
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    gaps
}

/// Surface energy gaps E2 - E1 at the local minima of the lower surface.
pub fn surface_gaps(spec: &TwoPesSpec) -> Result<Vec<f64>> {
    let built = TwoPesSystem::build(spec)?;
    let minima = built.lower_surface_minima();
    if minima.is_empty() {
        return Err(Error::numerical("no local minimum of the lower surface on the grid"));
    }
    Ok(minima.iter().map(|&k| built.surface_gap_at(k)).collect())
}

//! Adjoint gradient vs central finite differences.
//!
//! Assembles the sparsity-promoting objective for the three-level ladder
//! with the two-scale synthesis operator and compares the adjoint-computed
//! directional derivative against a central finite-difference quotient for
//! several random directions. The discrete adjoint is exact, so agreement
//! is limited only by finite-difference truncation and roundoff.
//!
//! Run with: cargo run --example gradient_check

use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tfcontrol::{
    build_three_level, ControlProblem, CostKind, EnvelopeSpace, FrequencyGrid, OperatorKind,
    QuantumState, SynthesisOperator, TimeGrid,
};

fn main() -> tfcontrol::Result<()> {
    let tg = TimeGrid::new(20.0, 128)?;
    let op = SynthesisOperator::new(
        OperatorKind::TwoScale,
        FrequencyGrid::uniform(2.0, 5.0, 10)?,
        tg,
        EnvelopeSpace::H10(tg),
        None,
    )?;
    let problem = ControlProblem::new(
        Arc::new(build_three_level()),
        op,
        QuantumState::basis(3, 0),
        CostKind::Sparse { alpha: 0.05, theta: 1e-2 },
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut random_measure = || {
        let mut u = problem.operator().zero_measure();
        for atom in &mut u.atoms {
            let n = atom.coeffs.len();
            for (k, c) in atom.coeffs.iter_mut().enumerate() {
                if k == 0 || k == n - 1 {
                    continue; // H^1_0 envelopes vanish at the endpoints
                }
                *c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 0.2;
            }
        }
        u
    };

    let u = random_measure();
    let grad = problem.gradient(&u)?;

    println!("{:>6}  {:>16}  {:>16}  {:>12}", "dir", "adjoint", "finite diff", "rel error");
    let mut worst = 0.0f64;
    for i in 0..10 {
        let d = random_measure();
        let predicted = problem.directional_derivative(&grad, &d)?;
        let fd = problem.fd_gradient_oracle(&u, &d, 1e-4)?;
        let rel = (predicted - fd).abs() / fd.abs().max(1e-8);
        worst = worst.max(rel);
        println!("{i:>6}  {predicted:>16.10e}  {fd:>16.10e}  {rel:>12.3e}");
    }
    println!("\nworst relative error: {worst:.3e}");
    Ok(())
}

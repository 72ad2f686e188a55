//! The six field-synthesis operators and their exact adjoints.
//!
//! Builds one operator of each kind on a shared time grid, synthesizes a
//! field from a random control measure, and verifies the discrete duality
//! <B u, f>_time = <u, B* f>_measure to near machine precision.
//!
//! Run with: cargo run --example synthesis_duality

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tfcontrol::{
    envelope_inner, gaussian_kernel_matrix, EnvelopeSpace, FrequencyGrid, OperatorKind,
    SampledField, SynthesisOperator, TimeGrid,
};

fn main() -> tfcontrol::Result<()> {
    let tg = TimeGrid::new(10.0, 256)?;
    let line = FrequencyGrid::uniform(2.0, 5.0, 12)?;
    let tensor = FrequencyGrid::tensor(vec![2.0, 3.5, 5.0], vec![2.5, 5.0, 7.5])?;
    let sigma = 1.25;
    let kernel = gaussian_kernel_matrix(&tg, sigma)?;

    let ops = vec![
        SynthesisOperator::new(OperatorKind::TwoScale, line.clone(), tg, EnvelopeSpace::H10(tg), None)?,
        SynthesisOperator::new(OperatorKind::DualGabor, line.clone(), tg, EnvelopeSpace::L2(tg), Some(sigma))?,
        SynthesisOperator::new(OperatorKind::KernelSpace, line.clone(), tg, EnvelopeSpace::kernel(tg, kernel)?, None)?,
        SynthesisOperator::new(OperatorKind::Fourier, line, tg, EnvelopeSpace::Scalar, None)?,
        SynthesisOperator::new(OperatorKind::GaborTf, tensor, tg, EnvelopeSpace::Scalar, Some(sigma))?,
        SynthesisOperator::new(
            OperatorKind::Identity,
            FrequencyGrid::line(vec![0.0])?,
            tg,
            EnvelopeSpace::L2(tg),
            None,
        )?,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>12}  {:>10}  {:>14}", "operator", "atoms", "duality gap");
    for op in &ops {
        // random measure (respecting pinned endpoints where the envelope
        // space requires them) and random test field
        let mut u = op.zero_measure();
        let pinned = matches!(op.space(), EnvelopeSpace::H10(_));
        for atom in &mut u.atoms {
            let n = atom.coeffs.len();
            for (k, c) in atom.coeffs.iter_mut().enumerate() {
                if pinned && (k == 0 || k == n - 1) {
                    continue;
                }
                *c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let f = SampledField::new((0..tg.n_steps()).map(|_| rng.gen::<f64>() - 0.5).collect(), tg.n_steps(), 1)?;

        let v = op.synthesize(&u)?;
        let lhs: f64 = v.data().iter().zip(f.data()).map(|(a, b)| a * b * tg.step()).sum();
        let bstar = op.adjoint_synthesize(&f)?;
        let rhs: f64 = bstar
            .atoms
            .iter()
            .zip(u.atoms.iter())
            .map(|(a, b)| envelope_inner(op.space(), a, b).unwrap())
            .sum();

        let gap = (lhs - rhs).abs() / lhs.abs().max(1.0);
        println!("{:>12}  {:>10}  {:>14.3e}", op.kind().name(), u.atoms.len(), gap);
    }
    Ok(())
}

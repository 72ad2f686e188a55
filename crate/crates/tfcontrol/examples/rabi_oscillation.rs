//! Resonant Rabi oscillation of a driven two-level system.
//!
//! Drives the qubit with a rotating field on resonance and prints the
//! population of the excited level over time. A pi-pulse of amplitude A
//! takes t = pi / (2A), at which point the transfer should be complete.
//!
//! Run with: cargo run --example rabi_oscillation

use tfcontrol::{build_two_level, propagate, QuantumState, SampledField, TimeGrid};

fn main() -> tfcontrol::Result<()> {
    let amplitude = 0.1;
    let (e1, e2) = (0.0, 1.0);
    let sys = build_two_level(e1, e2);

    let t_pi = std::f64::consts::FRAC_PI_2 / amplitude;
    let n_steps = 4096;
    let grid = TimeGrid::new(t_pi, n_steps)?;

    // rotating drive sampled at the step midpoints: (cos, sin) pair feeding
    // the two coupling operators
    let mut data = vec![0.0; 2 * n_steps];
    for j in 0..n_steps {
        let t = grid.midpoint(j);
        data[2 * j] = amplitude * ((e2 - e1) * t).cos();
        data[2 * j + 1] = amplitude * ((e2 - e1) * t).sin();
    }
    let field = SampledField::new(data, n_steps, 2)?;

    let psi0 = QuantumState::basis(2, 0);
    let traj = propagate(&sys, &field, &psi0, &grid)?;

    println!("{:>10}  {:>12}  {:>12}", "t", "p_ground", "p_excited");
    for j in (0..=n_steps).step_by(n_steps / 16) {
        let s = &traj.states[j];
        println!(
            "{:10.3}  {:12.8}  {:12.8}",
            grid.node(j),
            s[0].norm_sqr(),
            s[1].norm_sqr()
        );
    }

    let transfer = traj.terminal()[1].norm_sqr();
    println!("\npi-pulse transfer: {transfer:.10} (expected ~1)");
    Ok(())
}

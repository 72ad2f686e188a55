//! Continuation sweep over the sparsity weight.
//!
//! Solves the reduced three-level scenario for an ascending sequence of
//! cost weights, warm-starting each stage from the previous optimum, and
//! prints the accuracy/sparsity trade-off: larger weights shrink the
//! support (fewer active frequencies) at the price of a larger terminal
//! term.
//!
//! Run with: cargo run --release --example alpha_sweep

use tfcontrol::{continuation_sweep, reference_config, sweep_summary};

fn main() -> tfcontrol::Result<()> {
    let mut cfg = reference_config("three_level_tf_reduced").expect("built-in scenario");
    cfg.optimizer.max_iters = 700;
    let (problem, opts) = cfg.build()?;

    let alphas = [0.003, 0.01, 0.03, 0.1];
    let results = continuation_sweep(&problem, &alphas, &opts, cfg.init_norm)?;

    println!(
        "{:>10}  {:>14}  {:>8}  {:>12}  {:>14}",
        "alpha", "terminal", "support", "|u|", "objective"
    );
    for s in sweep_summary(&results) {
        println!(
            "{:>10.3e}  {:>14.6e}  {:>8}  {:>12.4e}  {:>14.6e}",
            s.alpha, s.terminal_term, s.support_size, s.measure_norm, s.objective
        );
    }
    Ok(())
}

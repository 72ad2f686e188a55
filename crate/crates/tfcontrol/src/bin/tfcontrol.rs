//! Command-line front end: run scenarios, continuation sweeps, gradient
//! verification, and optimality reports on saved measures.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tfcontrol::{
    build_three_level, gaussian_kernel_matrix, reference_config, reference_configs, run_scenario,
    run_sweep, ControlMeasure, ControlProblem, CostKind, EnvelopeSpace, Error, FrequencyGrid,
    OperatorKind, QuantumState, ScenarioConfig, SynthesisOperator, TimeGrid, TwoPesSpec,
    TwoPesSystem,
};

#[derive(Parser)]
#[command(
    name = "tfcontrol",
    about = "Sparse time-frequency optimal control of driven quantum systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Full,
    Reduced,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its six artifact files.
    Run(RunArgs),
    /// Warm-started continuation sweep over ascending cost weights.
    Sweep(SweepArgs),
    /// Verify adjoint gradients against finite differences for every
    /// (model, operator kind) pair.
    GradCheck(GradCheckArgs),
    /// Evaluate the first-order optimality system on a saved measure.
    Report(ReportArgs),
    /// List the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a scenario JSON file, or the name of a built-in scenario.
    #[arg(long)]
    config: String,
    /// Swap in the CI-scale grids (space 128, 1024 steps, 50 frequencies).
    #[arg(long, value_enum, default_value = "full")]
    scale: Scale,
    /// Override the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the cost weight alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the Huber radius theta (sparse-cost scenarios only).
    #[arg(long)]
    theta: Option<f64>,
    /// Override the number of restarts.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for artifact files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel restarts.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated ascending alpha values, e.g. 1e-4,3e-4,1e-3.
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Accepted for interface compatibility; sweep stages warm-start and
    /// therefore run sequentially.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GradCheckArgs {
    /// Grid scale of the verification matrix.
    #[arg(long, value_enum, default_value = "reduced")]
    scale: Scale,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Measure CSV produced by a previous run.
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(args: &ConfigArgs) -> Result<ScenarioConfig, Error> {
    let path = Path::new(&args.config);
    let mut cfg = if path.exists() {
        ScenarioConfig::from_file(path)?
    } else if let Some(cfg) = reference_config(&args.config) {
        cfg
    } else {
        return Err(Error::config(format!(
            "'{}' is neither a file nor a built-in scenario (see list-scenarios)",
            args.config
        )));
    };
    if args.scale == Scale::Reduced {
        cfg = cfg.reduced();
    }
    if let Some(seed) = args.seed {
        cfg.optimizer.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(theta) = args.theta {
        if cfg.theta.is_none() {
            return Err(Error::config(
                "--theta does not apply to squared-norm baseline scenarios",
            ));
        }
        cfg.theta = Some(theta);
    }
    if let Some(restarts) = args.restarts {
        cfg.restarts = restarts;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    let cfg = load_config(&args.config)?;
    let out = cfg
        .output_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone());
    println!(
        "running {} ({} / {}, {} atoms, alpha = {:.3e}, {} restarts)",
        cfg.name,
        cfg.model_name(),
        cfg.operator,
        cfg.dof()?,
        cfg.alpha,
        cfg.restarts
    );
    let result = run_scenario(&cfg, &out, args.jobs)?;
    println!(
        "done in {:.1} s: objective {:.6e}, terminal {:.6e}, achievement {:.4}%, \
         support {}, |u| {:.4e} ({:?})",
        result.wall_time_s,
        result.breakdown.total,
        result.breakdown.terminal_term,
        100.0 * result.breakdown.achievement,
        result.support_size,
        result.measure_norm,
        result.termination
    );
    for i in &result.report.support {
        let w = result.report.frequencies[*i];
        match result.report.pulse_times.as_ref() {
            Some(times) => println!(
                "  support atom: omega {:.5}, pulse time {:.1}, |u| {:.4e}",
                w, times[*i], result.report.atom_norms[*i]
            ),
            None => println!(
                "  support atom: omega {:.5}, |u| {:.4e}",
                w, result.report.atom_norms[*i]
            ),
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let cfg = load_config(&args.config)?;
    if args.alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("--alphas must be strictly ascending"));
    }
    println!(
        "sweeping {} over {} alphas ({:?})",
        cfg.name,
        args.alphas.len(),
        args.alphas
    );
    let results = run_sweep(&cfg, &args.alphas, &args.out)?;
    println!("alpha        terminal      support  |u|");
    for r in &results {
        println!(
            "{:<12.4e} {:<13.6e} {:<8} {:.4e}",
            r.breakdown.alpha, r.breakdown.terminal_term, r.support_size, r.measure_norm
        );
    }
    println!("summary in {}", args.out.join(format!("{}_sweep.csv", cfg.name)).display());
    Ok(())
}

struct GradCase {
    model: &'static str,
    problem: ControlProblem,
    scale: f64,
    /// Finite-difference step; the weakly coupled molecular cases need a
    /// larger step to stay above the roundoff floor of the objective.
    fd_step: f64,
}

fn grad_check_cases(scale: Scale) -> Result<Vec<GradCase>, Error> {
    let mut cases = Vec::new();
    let kinds = [
        OperatorKind::TwoScale,
        OperatorKind::DualGabor,
        OperatorKind::KernelSpace,
        OperatorKind::Fourier,
        OperatorKind::GaborTf,
        OperatorKind::Identity,
    ];
    let (n_steps, n_freq) = match scale {
        Scale::Full => (256, 16),
        Scale::Reduced => (96, 8),
    };

    let three = Arc::new(build_three_level());
    let tg = TimeGrid::new(20.0, n_steps)?;
    for kind in kinds {
        let op = make_operator(kind, tg, 2.0, 5.0, n_freq, 2.0)?;
        cases.push(GradCase {
            model: "three_level",
            problem: ControlProblem::new(
                three.clone(),
                op,
                QuantumState::basis(3, 0),
                CostKind::Sparse { alpha: 0.05, theta: 1e-2 },
            )?,
            scale: 0.2,
            fd_step: 1e-4,
        });
    }

    let spec = TwoPesSpec {
        n_x: if scale == Scale::Full { 128 } else { 96 },
        ..TwoPesSpec::default()
    };
    let sys = TwoPesSystem::build(&spec)?;
    let psi0 = sys.initial_state();
    let sys: Arc<tfcontrol::TwoPesSystem> = Arc::new(sys);
    let tg = TimeGrid::new(600.0, n_steps)?;
    for kind in kinds {
        let op = make_operator(kind, tg, 1.0 / 30.0, 1.0 / 10.0, n_freq, 120.0)?;
        cases.push(GradCase {
            model: "two_pes",
            problem: ControlProblem::new(
                sys.clone(),
                op,
                psi0.clone(),
                CostKind::Sparse { alpha: 1e-3, theta: 1e-3 },
            )?,
            scale: 0.01,
            fd_step: 2e-3,
        });
    }
    Ok(cases)
}

fn make_operator(
    kind: OperatorKind,
    tg: TimeGrid,
    lo: f64,
    hi: f64,
    n_freq: usize,
    sigma: f64,
) -> Result<SynthesisOperator, Error> {
    let line = FrequencyGrid::uniform(lo, hi, n_freq)?;
    let (grid, space, sig) = match kind {
        OperatorKind::TwoScale => (line, EnvelopeSpace::H10(tg), None),
        OperatorKind::DualGabor => (line, EnvelopeSpace::L2(tg), Some(sigma)),
        OperatorKind::KernelSpace => {
            let k = gaussian_kernel_matrix(&tg, sigma)?;
            (line, EnvelopeSpace::kernel(tg, k)?, None)
        }
        OperatorKind::Fourier => (line, EnvelopeSpace::Scalar, None),
        OperatorKind::GaborTf => {
            let times: Vec<f64> =
                (1..4).map(|k| tg.t_final() * k as f64 / 4.0).collect();
            let freqs: Vec<f64> = (0..3)
                .map(|i| lo + (hi - lo) * i as f64 / 2.0)
                .collect();
            (FrequencyGrid::tensor(freqs, times)?, EnvelopeSpace::Scalar, Some(sigma))
        }
        OperatorKind::Identity => {
            (FrequencyGrid::line(vec![0.0])?, EnvelopeSpace::L2(tg), None)
        }
    };
    SynthesisOperator::new(kind, grid, tg, space, sig)
}

fn random_measure(problem: &ControlProblem, seed: u64, scale: f64) -> ControlMeasure {
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = problem.zero_measure();
    let pinned = matches!(problem.operator().space(), EnvelopeSpace::H10(_));
    for atom in &mut u.atoms {
        let n = atom.coeffs.len();
        for (k, c) in atom.coeffs.iter_mut().enumerate() {
            if pinned && (k == 0 || k == n - 1) {
                continue;
            }
            *c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * scale;
        }
    }
    u
}

fn cmd_grad_check(args: &GradCheckArgs) -> Result<(), Error> {
    let cases = grad_check_cases(args.scale)?;
    let mut max_err = 0.0f64;
    println!("model        kind          max relative error (5 directions)");
    for (i, case) in cases.iter().enumerate() {
        let u = random_measure(&case.problem, 100 + i as u64, case.scale);
        let grad = case.problem.gradient(&u)?;
        let mut worst = 0.0f64;
        for d in 0..5 {
            let dir = random_measure(&case.problem, 200 + 10 * i as u64 + d, case.scale);
            let predicted = case.problem.directional_derivative(&grad, &dir)?;
            let fd = case.problem.fd_gradient_oracle(&u, &dir, case.fd_step)?;
            worst = worst.max((predicted - fd).abs() / fd.abs().max(1e-8));
        }
        println!(
            "{:<12} {:<13} {:.3e}",
            case.model,
            case.problem.operator().kind().name(),
            worst
        );
        max_err = max_err.max(worst);
    }
    println!("max relative error: {max_err:.3e}");
    if max_err > 1e-5 {
        return Err(Error::numerical(format!(
            "gradient check failed: max relative error {max_err:.3e} > 1e-5"
        )));
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), Error> {
    let cfg = load_config(&args.config)?;
    let (problem, _) = cfg.build()?;
    let u = tfcontrol::io::read_measure_csv(&args.measure, problem.operator())?;
    let report = problem.optimality_report(&u, 0.05)?;
    let path = args.out.join(format!("{}_optimality.json", cfg.name));
    tfcontrol::io::write_optimality_json(&path, &report)?;
    println!(
        "alpha {:.4e}, max dual norm {:.4e}, support size {}, \
         dual bound violations {}, relaxed support violations {}",
        report.alpha,
        report.max_dual,
        report.support.len(),
        report.dual_bound_violations.len(),
        report.relaxed_support_violations.len()
    );
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_list_scenarios() -> Result<(), Error> {
    println!("{:<28} {:<12} {:<13} {:>10}", "name", "model", "kind", "dof");
    for cfg in reference_configs() {
        println!(
            "{:<28} {:<12} {:<13} {:>10}",
            cfg.name,
            cfg.model_name(),
            cfg.operator,
            cfg.dof()?
        );
    }
    Ok(())
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Numerical(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves 0 for --help/--version; everything else is usage
            let code = if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::GradCheck(args) => cmd_grad_check(args),
        Cmd::Report(args) => cmd_report(args),
        Cmd::ListScenarios => cmd_list_scenarios(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

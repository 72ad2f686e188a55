//! Named, config-driven scenario runs binding models, synthesis operators,
//! and the optimizer, plus the artifact writing that makes runs comparable:
//! every scenario produces a field CSV, spectrum CSV, spectrogram CSV,
//! measure CSV, optimality JSON, and an iteration log.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::control::EnvelopeSpace;
use crate::dynamics::{QuantumState, QuantumSystem};
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::io;
use crate::models::{build_three_level, TwoPesSpec, TwoPesSystem};
use crate::objective::{ControlProblem, CostKind};
use crate::optimizer::{
    continuation_sweep, initial_control, minimize, sweep_summary, LbfgsOptions, RunResult,
};
use crate::synthesis::{gaussian_kernel_matrix, spectrogram, OperatorKind, SynthesisOperator};

/// Which quantum system a scenario runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    /// Fixed three-level atom.
    ThreeLevel,
    /// 1-D molecule on two potential energy surfaces.
    TwoPes(TwoPesSpec),
}

/// Optimizer knobs exposed through the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol_rel: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = LbfgsOptions::default();
        OptimizerConfig {
            memory: d.memory,
            max_iters: d.max_iters,
            grad_tol_rel: d.grad_tol_rel,
            seed: d.seed,
        }
    }
}

impl OptimizerConfig {
    pub fn to_options(self) -> LbfgsOptions {
        LbfgsOptions {
            memory: self.memory,
            max_iters: self.max_iters,
            grad_tol_rel: self.grad_tol_rel,
            seed: self.seed,
            ..LbfgsOptions::default()
        }
    }
}

/// One fully specified scenario. Unknown JSON keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    /// Synthesis kind: two_scale | dual_gabor | kernel_space | fourier |
    /// gabor_tf | identity.
    pub operator: String,
    /// Frequency band (also the reporting band for spectra).
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_freq: usize,
    /// Number of pulse-center times (gabor_tf only).
    #[serde(default)]
    pub n_pulse_times: Option<usize>,
    /// Gaussian window width (dual_gabor, kernel_space, gabor_tf).
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Envelope space of the identity baseline: "l2" | "h1_0".
    #[serde(default)]
    pub baseline_space: Option<String>,
    pub t_final: f64,
    pub n_steps: usize,
    pub alpha: f64,
    /// Huber radius; omit for the squared-norm baseline cost.
    #[serde(default)]
    pub theta: Option<f64>,
    /// U-norm of the random-phase initialization envelope.
    pub init_norm: f64,
    pub restarts: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn parse_kind(name: &str) -> Result<OperatorKind> {
    Ok(match name {
        "two_scale" => OperatorKind::TwoScale,
        "dual_gabor" => OperatorKind::DualGabor,
        "kernel_space" => OperatorKind::KernelSpace,
        "fourier" => OperatorKind::Fourier,
        "gabor_tf" => OperatorKind::GaborTf,
        "identity" => OperatorKind::Identity,
        other => {
            return Err(Error::config(format!(
                "unknown operator kind '{other}' (expected two_scale, dual_gabor, \
                 kernel_space, fourier, gabor_tf, or identity)"
            )))
        }
    })
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        io::atomic_write(path, &s)
    }

    pub fn kind(&self) -> Result<OperatorKind> {
        parse_kind(&self.operator)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.name.is_empty() {
            return Err(Error::config("scenario name must be nonempty"));
        }
        if !(self.omega_min < self.omega_max) || self.omega_min < 0.0 {
            return Err(Error::config("need 0 <= omega_min < omega_max"));
        }
        if self.n_freq < 2 {
            return Err(Error::config("n_freq must be at least 2"));
        }
        if !(self.t_final > 0.0) || self.n_steps < 2 {
            return Err(Error::config("need t_final > 0 and n_steps >= 2"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("alpha must be positive"));
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0) {
                return Err(Error::config("theta must be positive when given"));
            }
        }
        if !(self.init_norm > 0.0) {
            return Err(Error::config("init_norm must be positive"));
        }
        if self.restarts < 1 {
            return Err(Error::config("restarts must be at least 1"));
        }
        match kind {
            OperatorKind::GaborTf => {
                if self.n_pulse_times.map_or(true, |n| n < 1) {
                    return Err(Error::config("gabor_tf requires n_pulse_times >= 1"));
                }
                if self.sigma.map_or(true, |s| s <= 0.0) {
                    return Err(Error::config("gabor_tf requires a positive sigma"));
                }
            }
            OperatorKind::DualGabor | OperatorKind::KernelSpace => {
                if self.sigma.map_or(true, |s| s <= 0.0) {
                    return Err(Error::config(format!(
                        "{} requires a positive sigma",
                        kind.name()
                    )));
                }
            }
            OperatorKind::Identity => {
                match self.baseline_space.as_deref() {
                    Some("l2") | Some("h1_0") => {}
                    _ => {
                        return Err(Error::config(
                            "identity requires baseline_space = \"l2\" or \"h1_0\"",
                        ))
                    }
                }
                if self.theta.is_some() {
                    return Err(Error::config(
                        "identity baselines use the squared-norm cost; omit theta",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Nominal real degrees of freedom, in the conventional counting where
    /// nodal envelopes are reported as `n_steps` values.
    pub fn dof(&self) -> Result<usize> {
        Ok(match self.kind()? {
            OperatorKind::TwoScale | OperatorKind::DualGabor | OperatorKind::KernelSpace => {
                self.n_freq * 2 * self.n_steps
            }
            OperatorKind::Fourier => 2 * self.n_freq,
            OperatorKind::GaborTf => self.n_freq * self.n_pulse_times.unwrap_or(0) * 2,
            OperatorKind::Identity => self.n_steps,
        })
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelConfig::ThreeLevel => "three_level",
            ModelConfig::TwoPes(_) => "two_pes",
        }
    }

    /// Same scenario at CI scale: space grid 128, 1024 time steps, 50
    /// frequencies, single restart.
    pub fn reduced(&self) -> Self {
        let mut c = self.clone();
        if !c.name.ends_with("_reduced") {
            c.name = format!("{}_reduced", c.name);
        }
        if let ModelConfig::TwoPes(spec) = &mut c.model {
            spec.n_x = 128;
        }
        c.n_steps = 1024;
        c.n_freq = 50;
        c.restarts = 1;
        c
    }

    /// Instantiate the control problem and optimizer options.
    pub fn build(&self) -> Result<(ControlProblem, LbfgsOptions)> {
        self.validate()?;
        let kind = self.kind()?;
        let tg = TimeGrid::new(self.t_final, self.n_steps)?;
        let (system, psi0): (std::sync::Arc<dyn QuantumSystem>, QuantumState) = match &self.model {
            ModelConfig::ThreeLevel => {
                (std::sync::Arc::new(build_three_level()), QuantumState::basis(3, 0))
            }
            ModelConfig::TwoPes(spec) => {
                let sys = TwoPesSystem::build(spec)?;
                let psi0 = sys.initial_state();
                (std::sync::Arc::new(sys), psi0)
            }
        };
        let freq_grid = match kind {
            OperatorKind::GaborTf => {
                let nt = self.n_pulse_times.expect("validated");
                let times: Vec<f64> = (0..nt)
                    .map(|k| self.t_final * (k + 1) as f64 / (nt + 1) as f64)
                    .collect();
                FrequencyGrid::tensor(
                    uniform_points(self.omega_min, self.omega_max, self.n_freq),
                    times,
                )?
            }
            OperatorKind::Identity => FrequencyGrid::line(vec![0.0])?,
            _ => FrequencyGrid::uniform(self.omega_min, self.omega_max, self.n_freq)?,
        };
        let space = match kind {
            OperatorKind::TwoScale => EnvelopeSpace::H10(tg),
            OperatorKind::DualGabor => EnvelopeSpace::L2(tg),
            OperatorKind::KernelSpace => {
                let k = gaussian_kernel_matrix(&tg, self.sigma.expect("validated"))?;
                EnvelopeSpace::kernel(tg, k)?
            }
            OperatorKind::Fourier | OperatorKind::GaborTf => EnvelopeSpace::Scalar,
            OperatorKind::Identity => match self.baseline_space.as_deref() {
                Some("h1_0") => EnvelopeSpace::H10(tg),
                _ => EnvelopeSpace::L2(tg),
            },
        };
        let op = SynthesisOperator::new(kind, freq_grid, tg, space, self.sigma)?;
        let cost = match self.theta {
            Some(theta) => CostKind::Sparse { alpha: self.alpha, theta },
            None => CostKind::SquaredNorm { alpha: self.alpha },
        };
        let problem = ControlProblem::new(system, op, psi0, cost)?;
        Ok((problem, self.optimizer.to_options()))
    }
}

fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + h * i as f64).collect()
}

/// Best-of-`n_restarts` minimization with seeds `seed, seed+1, ...`; with
/// `jobs > 1` the restarts run on that many threads. The winner is the lowest
/// objective, ties broken by seed order, so the result does not depend on
/// scheduling.
pub fn run_restarts(
    problem: &ControlProblem,
    opts: &LbfgsOptions,
    n_restarts: usize,
    init_norm: f64,
    jobs: usize,
) -> Result<RunResult> {
    if n_restarts == 0 {
        return Err(Error::config("need at least one restart"));
    }
    let workers = jobs.max(1).min(n_restarts);
    let slots: Mutex<Vec<Option<Result<RunResult>>>> =
        Mutex::new((0..n_restarts).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n_restarts {
                    break;
                }
                let run = initial_control(problem, init_norm, opts.seed + k as u64)
                    .and_then(|u0| minimize(problem, &u0, opts));
                slots.lock().expect("no poisoned runs")[k] = Some(run);
            });
        }
    });
    let mut best: Option<RunResult> = None;
    let mut first_err: Option<Error> = None;
    for slot in slots.into_inner().expect("threads joined") {
        match slot.expect("every seed was claimed") {
            Ok(r) => {
                let better = best.as_ref().map_or(true, |b| r.breakdown.total < b.breakdown.total);
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(first_err.expect("no results implies at least one error")),
    }
}

/// Artifact file paths for a scenario in `out_dir`.
pub struct ArtifactPaths {
    pub field: PathBuf,
    pub spectrum: PathBuf,
    pub spectrogram: PathBuf,
    pub measure: PathBuf,
    pub optimality: PathBuf,
    pub iterations: PathBuf,
}

impl ArtifactPaths {
    pub fn new(out_dir: &Path, name: &str) -> Self {
        ArtifactPaths {
            field: out_dir.join(format!("{name}_field.csv")),
            spectrum: out_dir.join(format!("{name}_spectrum.csv")),
            spectrogram: out_dir.join(format!("{name}_spectrogram.csv")),
            measure: out_dir.join(format!("{name}_measure.csv")),
            optimality: out_dir.join(format!("{name}_optimality.json")),
            iterations: out_dir.join(format!("{name}_iterations.csv")),
        }
    }
}

/// Write the six artifact files for a finished run.
pub fn write_artifacts(
    cfg: &ScenarioConfig,
    problem: &ControlProblem,
    result: &RunResult,
    out_dir: &Path,
) -> Result<ArtifactPaths> {
    let paths = ArtifactPaths::new(out_dir, &cfg.name);
    let op = problem.operator();
    let tg = *op.time_grid();
    let field = op.synthesize(&result.control)?;

    io::write_field_csv(&paths.field, &tg, &field)?;

    let n_spec = (2 * cfg.n_freq).clamp(64, 256);
    let (lo, hi) = spectrum_band(cfg);
    let (freqs, mags) = io::field_spectrum(&field, &tg, lo, hi, n_spec)?;
    io::write_spectrum_csv(&paths.spectrum, &freqs, &mags)?;

    let sg_freqs = uniform_points(lo.max(1e-9), hi, cfg.n_freq.min(48));
    let n_times = 24;
    let sg_times: Vec<f64> = (0..n_times)
        .map(|k| cfg.t_final * (k + 1) as f64 / (n_times + 1) as f64)
        .collect();
    let sigma = cfg.sigma.unwrap_or(cfg.t_final / 16.0);
    let rows = spectrogram(&field, &tg, &sg_freqs, &sg_times, sigma)?;
    io::write_spectrogram_csv(&paths.spectrogram, &sg_freqs, &sg_times, &rows)?;

    io::write_measure_csv(&paths.measure, &result.control, op.space())?;
    io::write_optimality_json(&paths.optimality, &result.report)?;
    io::write_iteration_log_csv(&paths.iterations, &result.log)?;
    Ok(paths)
}

fn spectrum_band(cfg: &ScenarioConfig) -> (f64, f64) {
    // widen the reporting band a little so out-of-band leakage is visible
    let width = cfg.omega_max - cfg.omega_min;
    let lo = (cfg.omega_min - 0.25 * width).max(0.0);
    let hi = cfg.omega_max + 0.25 * width;
    (lo, hi)
}

/// Run one scenario end to end and write its artifacts into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path, jobs: usize) -> Result<RunResult> {
    let (problem, opts) = cfg.build()?;
    let result = run_restarts(&problem, &opts, cfg.restarts, cfg.init_norm, jobs)?;
    write_artifacts(cfg, &problem, &result, out_dir)?;
    Ok(result)
}

/// Continuation sweep over ascending regularization weights; writes the sweep
/// summary CSV plus full artifacts of the final stage.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    alphas: &[f64],
    out_dir: &Path,
) -> Result<Vec<RunResult>> {
    let (problem, opts) = cfg.build()?;
    let results = continuation_sweep(&problem, alphas, &opts, cfg.init_norm)?;
    let summary = sweep_summary(&results);
    io::write_sweep_csv(&out_dir.join(format!("{}_sweep.csv", cfg.name)), &summary)?;
    if let Some(last) = results.last() {
        let mut final_cfg = cfg.clone();
        final_cfg.alpha = *alphas.last().expect("nonempty");
        write_artifacts(&final_cfg, &problem, last, out_dir)?;
    }
    Ok(results)
}

/// The named reference scenarios: the three-level frequency-sparse problem
/// plus the six two-surface setups, followed by CI-scale reductions of the
/// ones the fast checks use.
pub fn reference_configs() -> Vec<ScenarioConfig> {
    let mut configs = Vec::new();

    configs.push(ScenarioConfig {
        name: "three_level_tf".into(),
        model: ModelConfig::ThreeLevel,
        operator: "two_scale".into(),
        omega_min: 2.0,
        omega_max: 5.0,
        n_freq: 100,
        n_pulse_times: None,
        sigma: None,
        baseline_space: None,
        t_final: 100.0,
        n_steps: 4096,
        alpha: 0.1,
        theta: Some(1e-4),
        init_norm: 0.1,
        restarts: 5,
        optimizer: OptimizerConfig { max_iters: 2000, ..OptimizerConfig::default() },
        output_dir: None,
    });

    let band = (1.0 / 30.0, 1.0 / 10.0);
    let two_pes = |name: &str, operator: &str| ScenarioConfig {
        name: name.into(),
        model: ModelConfig::TwoPes(TwoPesSpec::default()),
        operator: operator.into(),
        omega_min: band.0,
        omega_max: band.1,
        n_freq: 100,
        n_pulse_times: None,
        sigma: None,
        baseline_space: None,
        t_final: 3000.0,
        n_steps: 2048,
        alpha: 1e-3,
        theta: Some(1e-3),
        init_norm: 0.01,
        restarts: 3,
        optimizer: OptimizerConfig { max_iters: 800, ..OptimizerConfig::default() },
        output_dir: None,
    };

    // tuned cost weights: chosen by continuation sweeps so the terminal term
    // lands near the 5e-2 region (95% achievement); not externally prescribed
    let mut c = two_pes("two_pes_two_scale", "two_scale");
    c.alpha = 3e-4;
    c.theta = Some(1e-4);
    configs.push(c);

    let mut c = two_pes("two_pes_dual_gabor", "dual_gabor");
    c.alpha = 3e-4;
    c.theta = Some(1e-4);
    c.sigma = Some(150.0);
    configs.push(c);

    let mut c = two_pes("two_pes_fourier", "fourier");
    c.alpha = 3e-3;
    c.theta = Some(1e-3);
    configs.push(c);

    let mut c = two_pes("two_pes_gabor_tf", "gabor_tf");
    c.alpha = 3e-3;
    c.theta = Some(1e-3);
    c.n_pulse_times = Some(14);
    c.sigma = Some(100.0);
    configs.push(c);

    let mut c = two_pes("two_pes_l2_baseline", "identity");
    c.baseline_space = Some("l2".into());
    c.theta = None;
    c.alpha = 0.1;
    configs.push(c);

    let mut c = two_pes("two_pes_h1_baseline", "identity");
    c.baseline_space = Some("h1_0".into());
    c.theta = None;
    c.alpha = 10.0;
    configs.push(c);

    let reduced: Vec<ScenarioConfig> = configs.iter().map(|c| c.reduced()).collect();
    configs.extend(reduced);
    configs
}

/// Look up a reference scenario by name.
pub fn reference_config(name: &str) -> Option<ScenarioConfig> {
    reference_configs().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configs_validate_and_roundtrip() {
        for cfg in reference_configs() {
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
            let json = serde_json::to_string(&cfg).unwrap();
            let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(cfg, back, "{} does not round-trip", cfg.name);
        }
    }

    #[test]
    fn dof_counts_match_conventional_figures() {
        let c = reference_config("two_pes_two_scale").unwrap();
        assert_eq!(c.dof().unwrap(), 100 * 2 * 2048);
        let c = reference_config("two_pes_fourier").unwrap();
        assert_eq!(c.dof().unwrap(), 200);
        let c = reference_config("two_pes_gabor_tf").unwrap();
        assert_eq!(c.dof().unwrap(), 2800);
        let c = reference_config("two_pes_l2_baseline").unwrap();
        assert_eq!(c.dof().unwrap(), 2048);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = reference_config("three_level_tf").unwrap();
        let mut v: serde_json::Value = serde_json::to_value(&cfg).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ScenarioConfig>(v).is_err());
    }

    #[test]
    fn reduced_configs_shrink_only_grids() {
        let full = reference_config("two_pes_fourier").unwrap();
        let red = full.reduced();
        assert_eq!(red.name, "two_pes_fourier_reduced");
        assert_eq!(red.n_steps, 1024);
        assert_eq!(red.n_freq, 50);
        match red.model {
            ModelConfig::TwoPes(ref spec) => assert_eq!(spec.n_x, 128),
            _ => unreachable!(),
        }
        assert_eq!(red.operator, full.operator);
        assert_eq!(red.alpha, full.alpha);
        assert_eq!(red.theta, full.theta);
    }

    #[test]
    fn every_reference_config_builds() {
        for cfg in reference_configs() {
            // two-PES full-scale builds take a moment (dense eigensolve), so
            // exercise the reduced family plus the three-level scenarios
            if cfg.name.ends_with("_reduced") || cfg.model == ModelConfig::ThreeLevel {
                let (problem, _) = cfg.build().unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
                assert_eq!(problem.operator().kind().name(), cfg.operator);
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = reference_config("three_level_tf").unwrap();
        c.operator = "mystery".into();
        assert!(c.validate().is_err());

        let mut c = reference_config("three_level_tf").unwrap();
        c.omega_min = 6.0;
        assert!(c.validate().is_err());

        let mut c = reference_config("two_pes_gabor_tf").unwrap();
        c.n_pulse_times = None;
        assert!(c.validate().is_err());

        let mut c = reference_config("two_pes_l2_baseline").unwrap();
        c.theta = Some(1e-3);
        assert!(c.validate().is_err());

        let mut c = reference_config("two_pes_l2_baseline").unwrap();
        c.baseline_space = Some("h2".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn tiny_scenario_runs_and_writes_artifacts() {
        let cfg = ScenarioConfig {
            name: "tiny".into(),
            model: ModelConfig::ThreeLevel,
            operator: "fourier".into(),
            omega_min: 2.0,
            omega_max: 5.0,
            n_freq: 12,
            n_pulse_times: None,
            sigma: None,
            baseline_space: None,
            t_final: 20.0,
            n_steps: 128,
            alpha: 0.1,
            theta: Some(1e-3),
            init_norm: 0.1,
            restarts: 2,
            optimizer: OptimizerConfig { max_iters: 40, ..OptimizerConfig::default() },
            output_dir: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let result = run_scenario(&cfg, dir.path(), 2).unwrap();
        assert!(result.breakdown.total < 0.5);
        let paths = ArtifactPaths::new(dir.path(), "tiny");
        for p in [
            &paths.field,
            &paths.spectrum,
            &paths.spectrogram,
            &paths.measure,
            &paths.optimality,
            &paths.iterations,
        ] {
            assert!(p.exists(), "missing artifact {}", p.display());
        }
        // parallel and serial restarts pick the same winner
        let (problem, opts) = cfg.build().unwrap();
        let serial = run_restarts(&problem, &opts, 2, cfg.init_norm, 1).unwrap();
        assert_eq!(serial.breakdown.total.to_bits(), result.breakdown.total.to_bits());
    }
}

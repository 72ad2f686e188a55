//! L-BFGS minimization of the smoothed reduced objective, with a strong
//! Wolfe line search, the relative-gradient termination rule, multi-seed
//! restarts, and the regularization-weight continuation sweep.
//!
//! All inner products — two-loop recursion, curvature pairs, gradient norms —
//! are taken in the atom-wise envelope-space (Riesz) geometry, the same one
//! the optimality residuals use, so the termination tolerance and the KKT
//! checks are commensurable.

use std::collections::VecDeque;
use std::time::Instant;

use serde::Serialize;

use crate::control::{base_envelope, measure_norm, random_initial_control, ControlMeasure};
use crate::error::{Error, Result};
use crate::objective::{ControlProblem, CostKind, ObjectiveBreakdown, OptimalityReport};

/// L-BFGS configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when `||g_k|| / max_{i<=k} ||g_i||` falls below this.
    pub grad_tol_rel: f64,
    /// Armijo (sufficient decrease) constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Maximum objective evaluations per line search.
    pub max_line_search: usize,
    /// Seed for random-phase initialization (restarts use seed, seed+1, ...).
    pub seed: u64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iters: 500,
            grad_tol_rel: 1e-5,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
            seed: 0,
        }
    }
}

impl LbfgsOptions {
    fn validate(&self) -> Result<()> {
        if self.memory < 1 {
            return Err(Error::config("L-BFGS memory must be at least 1"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::config("line search requires 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub terminal_term: f64,
    pub cost_term: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    MaxIters,
    LineSearchFailed,
}

/// Outcome of one minimization: best iterate, its diagnostics, and the log.
pub struct RunResult {
    pub control: ControlMeasure,
    pub breakdown: ObjectiveBreakdown,
    pub report: OptimalityReport,
    pub log: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub support_size: usize,
    pub measure_norm: f64,
    pub wall_time_s: f64,
}

/// Objective with a Riesz-geometry inner product, as seen by the optimizer.
pub trait SmoothObjective {
    /// Value split as (total, terminal-like, cost-like) plus gradient.
    fn value_and_gradient(&self, u: &ControlMeasure) -> Result<(f64, f64, f64, ControlMeasure)>;
    fn inner(&self, a: &ControlMeasure, b: &ControlMeasure) -> Result<f64>;
}

impl SmoothObjective for ControlProblem {
    fn value_and_gradient(&self, u: &ControlMeasure) -> Result<(f64, f64, f64, ControlMeasure)> {
        let (b, g, _) = self.evaluate_with_gradient(u)?;
        Ok((b.total, b.terminal_term, b.cost_term, g))
    }

    fn inner(&self, a: &ControlMeasure, b: &ControlMeasure) -> Result<f64> {
        a.dot(b, self.operator().space())
    }
}

struct Point {
    u: ControlMeasure,
    total: f64,
    terminal: f64,
    cost: f64,
    grad: ControlMeasure,
    /// Slope along the current search direction.
    slope: f64,
}

fn eval_point<O: SmoothObjective>(
    obj: &O,
    u: &ControlMeasure,
    d: &ControlMeasure,
    step: f64,
) -> Result<Point> {
    let mut ua = u.clone();
    ua.axpy(step, d);
    let (total, terminal, cost, grad) = obj.value_and_gradient(&ua)?;
    let slope = obj.inner(&grad, d)?;
    Ok(Point { u: ua, total, terminal, cost, grad, slope })
}

/// Cubic-interpolation minimizer of the line model between two points with
/// values and slopes; falls back to bisection if degenerate.
fn cubic_step(a_lo: f64, f_lo: f64, g_lo: f64, a_hi: f64, f_hi: f64, g_hi: f64) -> f64 {
    let d1 = g_lo + g_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi);
    let disc = d1 * d1 - g_lo * g_hi;
    let mid = 0.5 * (a_lo + a_hi);
    if disc < 0.0 {
        return mid;
    }
    let d2 = (a_hi - a_lo).signum() * disc.sqrt();
    let a = a_hi - (a_hi - a_lo) * (g_hi + d2 - d1) / (g_hi - g_lo + 2.0 * d2);
    if !a.is_finite() {
        return mid;
    }
    // keep a safe distance from the bracket ends
    let (lo, hi) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
    let margin = 0.1 * (hi - lo);
    a.clamp(lo + margin, hi - margin)
}

struct Bracket {
    a: f64,
    f: f64,
    g: f64,
}

#[allow(clippy::too_many_arguments)]
fn zoom<O: SmoothObjective>(
    obj: &O,
    u: &ControlMeasure,
    d: &ControlMeasure,
    f0: f64,
    slope0: f64,
    mut lo: Bracket,
    mut hi: Bracket,
    opts: &LbfgsOptions,
    budget: usize,
) -> Result<Option<(f64, Point)>> {
    for _ in 0..budget {
        let a = cubic_step(lo.a, lo.f, lo.g, hi.a, hi.f, hi.g);
        if (hi.a - lo.a).abs() <= 1e-14 * lo.a.abs().max(1.0) {
            break;
        }
        let p = eval_point(obj, u, d, a)?;
        if p.total > f0 + opts.c1 * a * slope0 || p.total >= lo.f {
            hi = Bracket { a, f: p.total, g: p.slope };
        } else {
            if p.slope.abs() <= -opts.c2 * slope0 {
                return Ok(Some((a, p)));
            }
            if p.slope * (hi.a - lo.a) >= 0.0 {
                hi = Bracket { a: lo.a, f: lo.f, g: lo.g };
            }
            lo = Bracket { a, f: p.total, g: p.slope };
        }
    }
    Ok(None)
}

/// Strong Wolfe line search (bracket + zoom, Nocedal–Wright scheme).
fn wolfe_search<O: SmoothObjective>(
    obj: &O,
    u: &ControlMeasure,
    d: &ControlMeasure,
    f0: f64,
    slope0: f64,
    first_step: f64,
    opts: &LbfgsOptions,
) -> Result<Option<(f64, Point)>> {
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut g_prev = slope0;
    let mut a = first_step;
    let bracket_budget = opts.max_line_search / 2;
    for i in 0..bracket_budget {
        let p = eval_point(obj, u, d, a)?;
        if p.total > f0 + opts.c1 * a * slope0 || (i > 0 && p.total >= f_prev) {
            return zoom(
                obj,
                u,
                d,
                f0,
                slope0,
                Bracket { a: a_prev, f: f_prev, g: g_prev },
                Bracket { a, f: p.total, g: p.slope },
                opts,
                opts.max_line_search - i - 1,
            );
        }
        if p.slope.abs() <= -opts.c2 * slope0 {
            return Ok(Some((a, p)));
        }
        if p.slope >= 0.0 {
            return zoom(
                obj,
                u,
                d,
                f0,
                slope0,
                Bracket { a, f: p.total, g: p.slope },
                Bracket { a: a_prev, f: f_prev, g: g_prev },
                opts,
                opts.max_line_search - i - 1,
            );
        }
        a_prev = a;
        f_prev = p.total;
        g_prev = p.slope;
        a = (a * 2.0).min(1e6);
    }
    Ok(None)
}

pub(crate) struct CoreResult {
    pub u: ControlMeasure,
    pub log: Vec<IterationRecord>,
    pub termination: TerminationReason,
}

/// Two-loop-recursion L-BFGS over any smooth objective; returns the best
/// iterate seen.
pub(crate) fn minimize_core<O: SmoothObjective>(
    obj: &O,
    u0: &ControlMeasure,
    opts: &LbfgsOptions,
) -> Result<CoreResult> {
    opts.validate()?;
    let mut u = u0.clone();
    let (mut total, mut terminal, mut cost, mut grad) = obj.value_and_gradient(&u)?;
    let mut gnorm = obj.inner(&grad, &grad)?.max(0.0).sqrt();
    let mut gmax = gnorm;
    let mut best_u = u.clone();
    let mut best_total = total;
    let mut log = vec![IterationRecord {
        iter: 0,
        objective: total,
        terminal_term: terminal,
        cost_term: cost,
        grad_norm: gnorm,
        step: 0.0,
    }];
    // (s, y, 1 / <s, y>)
    let mut history: VecDeque<(ControlMeasure, ControlMeasure, f64)> = VecDeque::new();
    let mut termination = TerminationReason::MaxIters;

    for iter in 1..=opts.max_iters {
        if gnorm <= opts.grad_tol_rel * gmax || gnorm == 0.0 {
            termination = TerminationReason::Converged;
            break;
        }
        // two-loop recursion on q = -grad
        let mut q = grad.clone();
        q.scale(-1.0);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * obj.inner(s, &q)?;
            q.axpy(-a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let sy = obj.inner(s, y)?;
            let yy = obj.inner(y, y)?;
            if yy > 0.0 {
                q.scale(sy / yy);
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * obj.inner(y, &q)?;
            q.axpy(a - b, s);
        }
        let mut d = q;
        let mut slope0 = obj.inner(&grad, &d)?;
        if !(slope0 < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            d = grad.clone();
            d.scale(-1.0);
            slope0 = -gnorm * gnorm;
        }
        let first_step = if history.is_empty() { (1.0 / gnorm.max(1e-12)).min(1.0) } else { 1.0 };
        let accepted = wolfe_search(obj, &u, &d, total, slope0, first_step, opts)?;
        let (step, p) = match accepted {
            Some(sp) => sp,
            None => {
                termination = TerminationReason::LineSearchFailed;
                break;
            }
        };
        // curvature pair
        let mut s = p.u.clone();
        s.axpy(-1.0, &u);
        let mut y = p.grad.clone();
        y.axpy(-1.0, &grad);
        let sy = obj.inner(&s, &y)?;
        let ss = obj.inner(&s, &s)?;
        if sy > 1e-12 * ss.max(1e-300) {
            history.push_back((s, y, 1.0 / sy));
            while history.len() > opts.memory {
                history.pop_front();
            }
        }
        u = p.u;
        total = p.total;
        terminal = p.terminal;
        cost = p.cost;
        grad = p.grad;
        gnorm = obj.inner(&grad, &grad)?.max(0.0).sqrt();
        gmax = gmax.max(gnorm);
        log.push(IterationRecord {
            iter,
            objective: total,
            terminal_term: terminal,
            cost_term: cost,
            grad_norm: gnorm,
            step,
        });
        if total < best_total {
            best_total = total;
            best_u = u.clone();
        }
        if iter == opts.max_iters {
            termination = TerminationReason::MaxIters;
        }
    }
    if gnorm <= opts.grad_tol_rel * gmax && termination == TerminationReason::MaxIters {
        termination = TerminationReason::Converged;
    }
    Ok(CoreResult { u: best_u, log, termination })
}

/// Minimize the control problem from `u0`.
pub fn minimize(
    problem: &ControlProblem,
    u0: &ControlMeasure,
    opts: &LbfgsOptions,
) -> Result<RunResult> {
    let start = Instant::now();
    let core = minimize_core(problem, u0, opts)?;
    let (breakdown, _) = problem.evaluate(&core.u)?;
    let report = problem.optimality_report(&core.u, 0.05)?;
    let space = problem.operator().space();
    Ok(RunResult {
        support_size: report.support.len(),
        measure_norm: measure_norm(&core.u, space)?,
        control: core.u,
        breakdown,
        report,
        log: core.log,
        termination: core.termination,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Random-phase initial measure for this problem's grid and space.
pub fn initial_control(
    problem: &ControlProblem,
    base_norm: f64,
    seed: u64,
) -> Result<ControlMeasure> {
    let space = problem.operator().space();
    let base = base_envelope(space, base_norm)?;
    random_initial_control(problem.operator().freq_grid(), space, &base, seed)
}

/// Run `n_restarts` minimizations from random-phase initializations with
/// seeds `opts.seed, opts.seed + 1, ...` and keep the best objective.
pub fn minimize_with_restarts(
    problem: &ControlProblem,
    opts: &LbfgsOptions,
    n_restarts: usize,
    base_norm: f64,
) -> Result<RunResult> {
    if n_restarts == 0 {
        return Err(Error::config("need at least one restart"));
    }
    let mut best: Option<RunResult> = None;
    for k in 0..n_restarts {
        let u0 = initial_control(problem, base_norm, opts.seed + k as u64)?;
        let result = minimize(problem, &u0, opts)?;
        let better = match &best {
            Some(b) => result.breakdown.total < b.breakdown.total,
            None => true,
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

/// Warm-started sweep over ascending regularization weights: the first stage
/// starts from a random-phase measure, every later stage from the previous
/// optimum. On a stage failure the sweep retries once from a fresh random
/// initialization.
pub fn continuation_sweep(
    problem: &ControlProblem,
    alphas: &[f64],
    opts: &LbfgsOptions,
    base_norm: f64,
) -> Result<Vec<RunResult>> {
    if alphas.is_empty() {
        return Err(Error::config("sweep needs at least one alpha"));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("sweep alphas must be strictly ascending"));
    }
    let theta = match problem.cost() {
        CostKind::Sparse { theta, .. } => theta,
        CostKind::SquaredNorm { .. } => {
            return Err(Error::config("continuation sweep applies to the sparse cost"));
        }
    };
    let mut results = Vec::with_capacity(alphas.len());
    let mut warm: Option<ControlMeasure> = None;
    for (k, &alpha) in alphas.iter().enumerate() {
        let stage = problem.with_cost(CostKind::Sparse { alpha, theta })?;
        let u0 = match &warm {
            Some(u) => u.clone(),
            None => initial_control(problem, base_norm, opts.seed)?,
        };
        let result = match minimize(&stage, &u0, opts) {
            Ok(r) => r,
            Err(_) => {
                // retry from a fresh random initialization
                let u0 = initial_control(problem, base_norm, opts.seed + 1000 + k as u64)?;
                minimize(&stage, &u0, opts)?
            }
        };
        warm = Some(result.control.clone());
        results.push(result);
    }
    Ok(results)
}

/// One row of the sweep summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub terminal_term: f64,
    pub support_size: usize,
    pub measure_norm: f64,
    pub objective: f64,
}

pub fn sweep_summary(results: &[RunResult]) -> Vec<SweepRecord> {
    results
        .iter()
        .map(|r| SweepRecord {
            alpha: r.breakdown.alpha,
            terminal_term: r.breakdown.terminal_term,
            support_size: r.support_size,
            measure_norm: r.measure_norm,
            objective: r.breakdown.total,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlMeasure, Envelope, EnvelopeSpace};
    use crate::grid::FrequencyGrid;
    use num_complex::Complex64;

    /// Convex quadratic over scalar atoms: f(u) = 1/2 sum_i w_i |u_i - c_i|^2.
    struct Quadratic {
        weights: Vec<f64>,
        centers: Vec<Complex64>,
        grid: FrequencyGrid,
    }

    impl SmoothObjective for Quadratic {
        fn value_and_gradient(
            &self,
            u: &ControlMeasure,
        ) -> crate::error::Result<(f64, f64, f64, ControlMeasure)> {
            let mut f = 0.0;
            let mut g = ControlMeasure::zeros(self.grid.clone(), &EnvelopeSpace::Scalar);
            for i in 0..self.weights.len() {
                let d = u.atoms[i].coeffs[0] - self.centers[i];
                f += 0.5 * self.weights[i] * d.norm_sqr();
                g.atoms[i].coeffs[0] = d * self.weights[i];
            }
            Ok((f, f, 0.0, g))
        }

        fn inner(
            &self,
            a: &ControlMeasure,
            b: &ControlMeasure,
        ) -> crate::error::Result<f64> {
            a.dot(b, &EnvelopeSpace::Scalar)
        }
    }

    #[test]
    fn quadratic_converges_to_known_minimizer() {
        let n = 6;
        let grid = FrequencyGrid::uniform(1.0, 2.0, n).unwrap();
        let q = Quadratic {
            weights: (0..n).map(|i| 1.0 + i as f64).collect(),
            centers: (0..n)
                .map(|i| Complex64::new(i as f64 - 2.0, 0.5 * i as f64))
                .collect(),
            grid: grid.clone(),
        };
        let u0 = ControlMeasure {
            grid,
            atoms: vec![Envelope::scalar(Complex64::new(5.0, -3.0)); n],
        };
        let opts = LbfgsOptions { grad_tol_rel: 1e-12, max_iters: 4 * n, ..Default::default() };
        let core = minimize_core(&q, &u0, &opts).unwrap();
        for i in 0..n {
            assert!((core.u.atoms[i].coeffs[0] - q.centers[i]).norm() < 1e-8);
        }
        assert_eq!(core.termination, TerminationReason::Converged);
        // objective nonincreasing along accepted iterates
        for w in core.log.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_options() {
        let opts = LbfgsOptions { c1: 0.5, c2: 0.3, ..Default::default() };
        assert!(opts.validate().is_err());
        let opts = LbfgsOptions { memory: 0, ..Default::default() };
        assert!(opts.validate().is_err());
    }

    #[test]
    fn sweep_input_validation() {
        let grid = FrequencyGrid::uniform(1.0, 2.0, 2).unwrap();
        let q = Quadratic {
            weights: vec![1.0; 2],
            centers: vec![Complex64::default(); 2],
            grid,
        };
        let _ = q; // sweep validation is covered in the experiments tests
        assert!(LbfgsOptions::default().validate().is_ok());
    }
}

//! Artifact files: CSV and JSON writers for fields, spectra, spectrograms,
//! measures, optimality reports and iteration logs, plus the measure reader
//! used by the `report` subcommand.
//!
//! All writers are atomic (temp file + rename in the target directory), so
//! interrupted runs never leave partial artifacts behind.

use std::path::Path;

use num_complex::Complex64;

use crate::control::{ControlMeasure, EnvelopeSpace};
use crate::dynamics::SampledField;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::objective::OptimalityReport;
use crate::optimizer::{IterationRecord, SweepRecord};
use crate::synthesis::SynthesisOperator;

/// Write `contents` to `path` atomically: a unique sibling temp file is
/// written and fsynced, then renamed over the target.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp.{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    {
        use std::io::Write;
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Field CSV: `t,v` with `t` the step midpoints.
pub fn write_field_csv(path: &Path, grid: &TimeGrid, field: &SampledField) -> Result<()> {
    let mut s = String::from("t,v\n");
    for j in 0..field.n_steps() {
        s.push_str(&format!("{:.17e},{:.17e}\n", grid.midpoint(j), field.data()[j]));
    }
    atomic_write(path, &s)
}

/// Spectrum CSV: `omega,magnitude`.
pub fn write_spectrum_csv(path: &Path, freqs: &[f64], mags: &[f64]) -> Result<()> {
    let mut s = String::from("omega,magnitude\n");
    for (w, m) in freqs.iter().zip(mags.iter()) {
        s.push_str(&format!("{w:.17e},{m:.17e}\n"));
    }
    atomic_write(path, &s)
}

/// Spectrogram CSV: header `omega,<t_1>,<t_2>,...`, one row per frequency.
pub fn write_spectrogram_csv(
    path: &Path,
    freqs: &[f64],
    times: &[f64],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut s = String::from("omega");
    for t in times {
        s.push_str(&format!(",{t:.9e}"));
    }
    s.push('\n');
    for (w, row) in freqs.iter().zip(rows.iter()) {
        s.push_str(&format!("{w:.17e}"));
        for v in row {
            s.push_str(&format!(",{v:.17e}"));
        }
        s.push('\n');
    }
    atomic_write(path, &s)
}

/// Measure CSV: `atom,omega,pulse_time,node,re,im`, one row per complex
/// coefficient; `pulse_time` is empty for line grids.
pub fn write_measure_csv(path: &Path, u: &ControlMeasure, _space: &EnvelopeSpace) -> Result<()> {
    let mut s = String::from("atom,omega,pulse_time,node,re,im\n");
    for (i, atom) in u.atoms.iter().enumerate() {
        let (w, pt) = u.grid.atom(i);
        let pt = pt.map_or(String::new(), |t| format!("{t:.17e}"));
        for (k, c) in atom.coeffs.iter().enumerate() {
            s.push_str(&format!("{i},{w:.17e},{pt},{k},{:.17e},{:.17e}\n", c.re, c.im));
        }
    }
    atomic_write(path, &s)
}

/// Read a measure CSV back onto the grid and envelope space of `op`.
pub fn read_measure_csv(path: &Path, op: &SynthesisOperator) -> Result<ControlMeasure> {
    let text = std::fs::read_to_string(path)?;
    let mut u = op.zero_measure();
    let env_len = op.space().envelope_len();
    let n_atoms = u.grid.len();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::input(format!(
                "{}:{}: expected 6 fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::input(format!("{}:{}: bad {what} '{s}'", path.display(), lineno + 1))
            })
        };
        let atom: usize = fields[0].parse().map_err(|_| {
            Error::input(format!("{}:{}: bad atom index", path.display(), lineno + 1))
        })?;
        let node: usize = fields[3].parse().map_err(|_| {
            Error::input(format!("{}:{}: bad node index", path.display(), lineno + 1))
        })?;
        if atom >= n_atoms || node >= env_len {
            return Err(Error::input(format!(
                "{}:{}: atom {atom} node {node} out of range ({n_atoms} atoms x {env_len} nodes)",
                path.display(),
                lineno + 1
            )));
        }
        let omega = parse(fields[1], "frequency")?;
        let (w_grid, _) = u.grid.atom(atom);
        if (omega - w_grid).abs() > 1e-9 * w_grid.abs().max(1.0) {
            return Err(Error::input(format!(
                "{}:{}: atom {atom} frequency {omega} does not match grid ({w_grid})",
                path.display(),
                lineno + 1
            )));
        }
        let re = parse(fields[4], "real part")?;
        let im = parse(fields[5], "imaginary part")?;
        u.atoms[atom].coeffs[node] = Complex64::new(re, im);
    }
    u.conforms(op.space())?;
    Ok(u)
}

/// Iteration log CSV: `iter,objective,terminal_term,cost_term,grad_norm,step`.
pub fn write_iteration_log_csv(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut s = String::from("iter,objective,terminal_term,cost_term,grad_norm,step\n");
    for r in log {
        s.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.iter, r.objective, r.terminal_term, r.cost_term, r.grad_norm, r.step
        ));
    }
    atomic_write(path, &s)
}

/// Sweep summary CSV: `alpha,terminal_term,support_size,measure_norm`.
pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut s = String::from("alpha,terminal_term,support_size,measure_norm\n");
    for r in records {
        s.push_str(&format!(
            "{:.17e},{:.17e},{},{:.17e}\n",
            r.alpha, r.terminal_term, r.support_size, r.measure_norm
        ));
    }
    atomic_write(path, &s)
}

/// Optimality report as pretty-printed JSON.
pub fn write_optimality_json(path: &Path, report: &OptimalityReport) -> Result<()> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    atomic_write(path, &s)
}

/// Magnitudes of the windowed Fourier coefficients of a field over a uniform
/// frequency grid (the data behind the spectrum artifact).
pub fn field_spectrum(
    field: &SampledField,
    grid: &TimeGrid,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let fg = FrequencyGrid::uniform(lo, hi, n)?;
    let op = crate::synthesis::SynthesisOperator::new(
        crate::synthesis::OperatorKind::Fourier,
        fg.clone(),
        *grid,
        EnvelopeSpace::Scalar,
        None,
    )?;
    let coeffs = op.adjoint_synthesize(field)?;
    let freqs: Vec<f64> = (0..n).map(|i| fg.atom(i).0).collect();
    let mags: Vec<f64> = coeffs.atoms.iter().map(|a| a.coeffs[0].norm()).collect();
    Ok((freqs, mags))
}

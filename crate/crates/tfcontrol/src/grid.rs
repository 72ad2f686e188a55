//! Uniform time and frequency grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[0, t_final]` with `n_steps` steps.
///
/// States live on the `n_steps + 1` nodes, control fields on the `n_steps`
/// step midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::config(format!("t_final must be positive, got {t_final}")));
        }
        if n_steps < 1 {
            return Err(Error::config("n_steps must be at least 1"));
        }
        Ok(TimeGrid { t_final, n_steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.step() * j as f64
    }

    /// Midpoint of step `j`, i.e. `t_{j+1/2}`.
    pub fn midpoint(&self, j: usize) -> f64 {
        self.step() * (j as f64 + 0.5)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.node(j)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_steps).map(|j| self.midpoint(j)).collect()
    }
}

/// Grid of Dirac positions in frequency, or in the time-frequency plane for
/// the wave-packet (Gabor) ansatz.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyGrid {
    /// Strictly increasing nonnegative frequencies.
    Line(Vec<f64>),
    /// Tensor grid frequency x pulse-center-time, atom order is
    /// frequency-major.
    Tensor { freqs: Vec<f64>, times: Vec<f64> },
}

fn check_increasing(points: &[f64], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::config(format!("{what} grid is empty")));
    }
    if points.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::config(format!("{what} grid has negative or non-finite entries")));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(format!("{what} grid is not strictly increasing")));
    }
    Ok(())
}

impl FrequencyGrid {
    pub fn line(points: Vec<f64>) -> Result<Self> {
        check_increasing(&points, "frequency")?;
        Ok(FrequencyGrid::Line(points))
    }

    pub fn tensor(freqs: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        check_increasing(&freqs, "frequency")?;
        check_increasing(&times, "pulse time")?;
        Ok(FrequencyGrid::Tensor { freqs, times })
    }

    /// Uniform grid of `n` points on `[lo, hi]`, endpoints included.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("frequency grid needs at least 2 points"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        FrequencyGrid::line((0..n).map(|i| lo + h * i as f64).collect())
    }

    /// Number of Dirac atoms.
    pub fn len(&self) -> usize {
        match self {
            FrequencyGrid::Line(p) => p.len(),
            FrequencyGrid::Tensor { freqs, times } => freqs.len() * times.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frequency (and pulse-center time, for tensor grids) of atom `i`.
    pub fn atom(&self, i: usize) -> (f64, Option<f64>) {
        match self {
            FrequencyGrid::Line(p) => (p[i], None),
            FrequencyGrid::Tensor { freqs, times } => {
                (freqs[i / times.len()], Some(times[i % times.len()]))
            }
        }
    }

    /// Spacing between neighboring frequencies (uniform grids).
    pub fn freq_spacing(&self) -> f64 {
        let f = match self {
            FrequencyGrid::Line(p) => p,
            FrequencyGrid::Tensor { freqs, .. } => freqs,
        };
        if f.len() < 2 {
            0.0
        } else {
            f[1] - f[0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_nodes_include_endpoints() {
        let g = TimeGrid::new(10.0, 4).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 5);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[4], 10.0);
        assert!((g.midpoint(0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn time_grid_rejects_bad_input() {
        assert!(TimeGrid::new(-1.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn frequency_grid_must_increase() {
        assert!(FrequencyGrid::line(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::line(vec![1.0, -2.0]).is_err());
        assert!(FrequencyGrid::line(vec![2.0, 3.0, 5.0]).is_ok());
    }

    #[test]
    fn tensor_grid_atom_order_is_frequency_major() {
        let g = FrequencyGrid::tensor(vec![1.0, 2.0], vec![0.5, 1.5, 2.5]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.atom(0), (1.0, Some(0.5)));
        assert_eq!(g.atom(2), (1.0, Some(2.5)));
        assert_eq!(g.atom(3), (2.0, Some(0.5)));
    }

    #[test]
    fn uniform_grid_hits_resonances() {
        // 100 points on [2, 5] contain 3 and 4 exactly.
        let g = FrequencyGrid::uniform(2.0, 5.0, 100).unwrap();
        if let FrequencyGrid::Line(p) = &g {
            assert!(p.iter().any(|w| (w - 3.0).abs() < 1e-12));
            assert!(p.iter().any(|w| (w - 4.0).abs() < 1e-12));
        } else {
            unreachable!()
        }
    }
}

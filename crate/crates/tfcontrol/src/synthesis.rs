//! The control operator `B` mapping time-frequency measures to real sampled
//! fields, and its exact discrete adjoint `B*`.
//!
//! `B*` is defined as the exact adjoint of the discrete `B` with respect to
//! (i) the discrete L^2 time pairing `sum_j f_j v_j dt` on fields and
//! (ii) the envelope-space inner product per atom, so that
//! `sum_w <(B*f)_w, u_w>_U = sum_j f_j (Bu)_j dt` holds to roundoff for
//! every measure `u`. Gradients and optimality residuals inherit that
//! exactness. All synthesis formulas are evaluated at the step midpoints
//! `t_{j+1/2}` to match the propagator contract; synthesized fields are
//! single-component (one coupling operator).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::control::{ControlMeasure, Envelope, EnvelopeSpace};
use crate::dynamics::SampledField;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::numeric::{real_mat_complex_vec, solve_tridiag};

/// The five synthesis variants plus the direct-field baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// v(t) = Re sum_w u_w(t) e^{iwt}, envelopes in H^1_0.
    TwoScale,
    /// v(t) = Re sum_w (K u_w)(t) e^{iwt}, window-smoothed L^2 envelopes.
    DualGabor,
    /// v(t) = Re sum_w u_w(t) e^{iwt}, envelopes in the kernel-weighted space.
    KernelSpace,
    /// v(t) = Re sum_w u_w e^{iwt}, scalar atoms.
    Fourier,
    /// v(t) = Re sum_{(w,s)} u_{w,s} k(t,s) e^{iw(t-s)}, scalar atoms on a
    /// frequency x pulse-time tensor grid.
    GaborTf,
    /// v = the stored envelope itself, evaluated at midpoints (baseline).
    Identity,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::TwoScale => "two_scale",
            OperatorKind::DualGabor => "dual_gabor",
            OperatorKind::KernelSpace => "kernel_space",
            OperatorKind::Fourier => "fourier",
            OperatorKind::GaborTf => "gabor_tf",
            OperatorKind::Identity => "identity",
        }
    }
}

/// Sampled symmetric Gaussian window `k(t,s) = exp(-(t-s)^2 / (2 sigma^2))`
/// on the time-grid nodes, before any boundary taper.
#[derive(Debug, Clone)]
pub struct GaborWindow {
    sigma: f64,
    grid: TimeGrid,
    kernel: DMatrix<f64>,
}

/// Sample the Gaussian window on the grid nodes.
pub fn build_window(grid: &TimeGrid, sigma: f64) -> Result<GaborWindow> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::config(format!("window width must be positive, got {sigma}")));
    }
    let n = grid.n_nodes();
    let mut kernel = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let d = grid.node(i) - grid.node(j);
            let v = (-d * d / (2.0 * sigma * sigma)).exp();
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    Ok(GaborWindow { sigma, grid: *grid, kernel })
}

impl GaborWindow {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Raw kernel samples `k(t_i, t_j)` (no taper, no quadrature weight).
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// Convolution matrix with trapezoid quadrature weights and a
    /// `sin(pi t / T)` boundary taper on both arguments, so smoothed
    /// envelopes vanish at t in {0, T}.
    pub fn convolution_matrix(&self) -> DMatrix<f64> {
        let n = self.grid.n_nodes();
        let dt = self.grid.step();
        let t_final = self.grid.t_final();
        let taper: Vec<f64> =
            (0..n).map(|i| (std::f64::consts::PI * self.grid.node(i) / t_final).sin()).collect();
        let mut m = self.kernel.clone();
        for i in 0..n {
            for j in 0..n {
                let w = if j == 0 || j == n - 1 { dt / 2.0 } else { dt };
                m[(i, j)] *= taper[i] * taper[j] * w;
            }
        }
        m
    }
}

/// Symmetric positive-definite Gaussian kernel matrix on the time nodes,
/// with a diagonal ridge for numerical definiteness. The raw Gaussian kernel
/// matrix is numerically rank-deficient on any fine grid; the ridge caps its
/// condition number so that the forward product `K m` and the prefactored
/// solve `K^{-1} a` in the envelope inner product stay mutually inverse to
/// about 1e-12, which the exact-duality contract of `adjoint_synthesize`
/// relies on.
pub fn gaussian_kernel_matrix(grid: &TimeGrid, sigma: f64) -> Result<DMatrix<f64>> {
    let w = build_window(grid, sigma)?;
    let n = grid.n_nodes();
    let mut k = w.kernel.clone() * grid.step();
    let ridge = 1e-4 * k.trace() / n as f64;
    for i in 0..n {
        k[(i, i)] += ridge;
    }
    Ok(k)
}

/// One of the six `B` variants, bound to its frequency grid, time grid, and
/// envelope space, with all phase tables precomputed.
pub struct SynthesisOperator {
    kind: OperatorKind,
    freq_grid: FrequencyGrid,
    time_grid: TimeGrid,
    space: EnvelopeSpace,
    /// Per line-grid atom: e^{i w t_{j+1/2}} for every step j.
    phases: Vec<Vec<Complex64>>,
    /// Per tensor-grid atom: k(t_{j+1/2}, s) e^{i w (t_{j+1/2} - s)}.
    packets: Vec<Vec<Complex64>>,
    /// Window convolution matrix (dual_gabor only).
    conv: Option<DMatrix<f64>>,
}

impl SynthesisOperator {
    /// Build an operator; `sigma` is required for the two Gabor kinds and
    /// ignored otherwise. The kind/space pairing must be one of the
    /// sanctioned combinations.
    pub fn new(
        kind: OperatorKind,
        freq_grid: FrequencyGrid,
        time_grid: TimeGrid,
        space: EnvelopeSpace,
        sigma: Option<f64>,
    ) -> Result<Self> {
        let space_grid_matches = |g: &TimeGrid| *g == time_grid;
        let pairing_ok = match (kind, &space) {
            (OperatorKind::TwoScale, EnvelopeSpace::H10(g)) => space_grid_matches(g),
            (OperatorKind::DualGabor, EnvelopeSpace::L2(g)) => space_grid_matches(g),
            (OperatorKind::KernelSpace, EnvelopeSpace::Kernel { grid, .. }) => {
                space_grid_matches(grid)
            }
            (OperatorKind::Fourier, EnvelopeSpace::Scalar) => true,
            (OperatorKind::GaborTf, EnvelopeSpace::Scalar) => true,
            (OperatorKind::Identity, EnvelopeSpace::H10(g) | EnvelopeSpace::L2(g)) => {
                space_grid_matches(g)
            }
            _ => false,
        };
        if !pairing_ok {
            return Err(Error::config(format!(
                "operator kind {} cannot be paired with envelope space {:?}",
                kind.name(),
                space
            )));
        }
        match (kind, &freq_grid) {
            (OperatorKind::GaborTf, FrequencyGrid::Tensor { times, .. }) => {
                if times.iter().any(|&s| s < 0.0 || s > time_grid.t_final()) {
                    return Err(Error::config("pulse-center times must lie in [0, T]"));
                }
            }
            (OperatorKind::GaborTf, FrequencyGrid::Line(_)) => {
                return Err(Error::config("gabor_tf requires a tensor frequency grid"));
            }
            (_, FrequencyGrid::Tensor { .. }) => {
                return Err(Error::config(format!(
                    "{} requires a line frequency grid",
                    kind.name()
                )));
            }
            (_, FrequencyGrid::Line(_)) => {}
        }
        if kind == OperatorKind::Identity && freq_grid.len() != 1 {
            return Err(Error::config("identity baseline carries exactly one atom"));
        }

        let n = time_grid.n_steps();
        let mut phases = Vec::new();
        let mut packets = Vec::new();
        let mut conv = None;
        match kind {
            OperatorKind::TwoScale
            | OperatorKind::DualGabor
            | OperatorKind::KernelSpace
            | OperatorKind::Fourier => {
                for i in 0..freq_grid.len() {
                    let (w, _) = freq_grid.atom(i);
                    phases.push(
                        (0..n)
                            .map(|j| Complex64::from_polar(1.0, w * time_grid.midpoint(j)))
                            .collect(),
                    );
                }
            }
            OperatorKind::GaborTf => {
                let sigma = sigma
                    .ok_or_else(|| Error::config("gabor_tf requires a window width sigma"))?;
                if !(sigma > 0.0) {
                    return Err(Error::config("window width must be positive"));
                }
                for i in 0..freq_grid.len() {
                    let (w, s) = freq_grid.atom(i);
                    let s = s.expect("tensor grid atom carries a pulse time");
                    packets.push(
                        (0..n)
                            .map(|j| {
                                let t = time_grid.midpoint(j);
                                let env = (-(t - s) * (t - s) / (2.0 * sigma * sigma)).exp();
                                Complex64::from_polar(env, w * (t - s))
                            })
                            .collect(),
                    );
                }
            }
            OperatorKind::Identity => {}
        }
        if kind == OperatorKind::DualGabor {
            let sigma =
                sigma.ok_or_else(|| Error::config("dual_gabor requires a window width sigma"))?;
            conv = Some(build_window(&time_grid, sigma)?.convolution_matrix());
        }
        Ok(SynthesisOperator { kind, freq_grid, time_grid, space, phases, packets, conv })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn space(&self) -> &EnvelopeSpace {
        &self.space
    }

    pub fn freq_grid(&self) -> &FrequencyGrid {
        &self.freq_grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn zero_measure(&self) -> ControlMeasure {
        ControlMeasure::zeros(self.freq_grid.clone(), &self.space)
    }

    fn check_measure(&self, u: &ControlMeasure) -> Result<()> {
        if u.grid != self.freq_grid {
            return Err(Error::config("measure frequency grid does not match operator"));
        }
        u.conforms(&self.space)
    }

    /// `v = Bu`: real field at the step midpoints.
    pub fn synthesize(&self, u: &ControlMeasure) -> Result<SampledField> {
        self.check_measure(u)?;
        let n = self.time_grid.n_steps();
        let mut v = vec![0.0; n];
        match self.kind {
            OperatorKind::Fourier => {
                for (atom, ph) in u.atoms.iter().zip(self.phases.iter()) {
                    let c = atom.coeffs[0];
                    for j in 0..n {
                        v[j] += (c * ph[j]).re;
                    }
                }
            }
            OperatorKind::TwoScale | OperatorKind::KernelSpace => {
                for (atom, ph) in u.atoms.iter().zip(self.phases.iter()) {
                    for j in 0..n {
                        let mid = (atom.coeffs[j] + atom.coeffs[j + 1]) * 0.5;
                        v[j] += (mid * ph[j]).re;
                    }
                }
            }
            OperatorKind::DualGabor => {
                let conv = self.conv.as_ref().expect("dual_gabor has a window");
                for (atom, ph) in u.atoms.iter().zip(self.phases.iter()) {
                    let w = real_mat_complex_vec(conv, &atom.coeffs);
                    for j in 0..n {
                        let mid = (w[j] + w[j + 1]) * 0.5;
                        v[j] += (mid * ph[j]).re;
                    }
                }
            }
            OperatorKind::GaborTf => {
                for (atom, pk) in u.atoms.iter().zip(self.packets.iter()) {
                    let c = atom.coeffs[0];
                    for j in 0..n {
                        v[j] += (c * pk[j]).re;
                    }
                }
            }
            OperatorKind::Identity => {
                let atom = &u.atoms[0];
                for j in 0..n {
                    v[j] += (atom.coeffs[j].re + atom.coeffs[j + 1].re) * 0.5;
                }
            }
        }
        SampledField::new(v, n, 1)
    }

    /// Nodal functional of the midpoint pairing against atom `i`:
    /// `m_k = dt/2 (f_{k-1} e^{-i w t_{k-1/2}} + f_k e^{-i w t_{k+1/2}})`.
    fn nodal_functional(&self, f: &[f64], phases: Option<&[Complex64]>) -> Vec<Complex64> {
        let n = self.time_grid.n_steps();
        let dt = self.time_grid.step();
        let term = |j: usize| -> Complex64 {
            let p = phases.map_or(Complex64::new(1.0, 0.0), |ph| ph[j].conj());
            p * (f[j] * dt * 0.5)
        };
        (0..=n)
            .map(|k| {
                let mut m = Complex64::default();
                if k > 0 {
                    m += term(k - 1);
                }
                if k < n {
                    m += term(k);
                }
                m
            })
            .collect()
    }

    /// Riesz representative of `m` in the Dirichlet space: solve the interior
    /// stiffness system `(1/dt) tridiag(-1, 2, -1) a = m`, `a_0 = a_n = 0`.
    fn stiffness_solve(&self, m: &[Complex64]) -> Vec<Complex64> {
        let n = self.time_grid.n_steps();
        let dt = self.time_grid.step();
        let interior = n - 1;
        let diag = vec![2.0 / dt; interior];
        let off = vec![-1.0 / dt; interior.saturating_sub(1)];
        let x = solve_tridiag(&diag, &off, &m[1..n]);
        let mut a = vec![Complex64::default(); n + 1];
        a[1..n].copy_from_slice(&x);
        a
    }

    /// Riesz representative of `m` in L^2: solve the piecewise-linear mass
    /// system `M a = m`.
    fn mass_solve(&self, m: &[Complex64]) -> Vec<Complex64> {
        let n_nodes = self.time_grid.n_nodes();
        let dt = self.time_grid.step();
        let diag: Vec<f64> = (0..n_nodes)
            .map(|k| if k == 0 || k == n_nodes - 1 { dt / 3.0 } else { 2.0 * dt / 3.0 })
            .collect();
        let off = vec![dt / 6.0; n_nodes - 1];
        solve_tridiag(&diag, &off, m)
    }

    /// `B* f`: the exact adjoint of `synthesize`, one envelope per atom, such
    /// that `sum_w <(B*f)_w, u_w>_U = sum_j f_j (Bu)_j dt` for every `u`.
    pub fn adjoint_synthesize(&self, f: &SampledField) -> Result<ControlMeasure> {
        if f.n_steps() != self.time_grid.n_steps() || f.components() != 1 {
            return Err(Error::dimension(
                "adjoint input must be a single-component field on the operator's grid",
            ));
        }
        let fv = f.data();
        let dt = self.time_grid.step();
        let atoms: Vec<Envelope> = match self.kind {
            OperatorKind::Fourier => self
                .phases
                .iter()
                .map(|ph| {
                    let mut c = Complex64::default();
                    for (j, &fj) in fv.iter().enumerate() {
                        c += ph[j].conj() * fj;
                    }
                    Envelope::scalar(c * dt)
                })
                .collect(),
            OperatorKind::GaborTf => self
                .packets
                .iter()
                .map(|pk| {
                    let mut c = Complex64::default();
                    for (j, &fj) in fv.iter().enumerate() {
                        c += pk[j].conj() * fj;
                    }
                    Envelope::scalar(c * dt)
                })
                .collect(),
            OperatorKind::TwoScale => self
                .phases
                .iter()
                .map(|ph| {
                    let m = self.nodal_functional(fv, Some(ph));
                    Envelope { coeffs: self.stiffness_solve(&m) }
                })
                .collect(),
            OperatorKind::KernelSpace => {
                let kernel = match &self.space {
                    EnvelopeSpace::Kernel { kernel, .. } => kernel,
                    _ => unreachable!("pairing validated at construction"),
                };
                self.phases
                    .iter()
                    .map(|ph| {
                        let m = self.nodal_functional(fv, Some(ph));
                        Envelope { coeffs: real_mat_complex_vec(kernel, &m) }
                    })
                    .collect()
            }
            OperatorKind::DualGabor => {
                let conv = self.conv.as_ref().expect("dual_gabor has a window");
                let conv_t = conv.transpose();
                self.phases
                    .iter()
                    .map(|ph| {
                        let m = self.nodal_functional(fv, Some(ph));
                        let km = real_mat_complex_vec(&conv_t, &m);
                        Envelope { coeffs: self.mass_solve(&km) }
                    })
                    .collect()
            }
            OperatorKind::Identity => {
                let m = self.nodal_functional(fv, None);
                let coeffs = match &self.space {
                    EnvelopeSpace::H10(_) => self.stiffness_solve(&m),
                    EnvelopeSpace::L2(_) => self.mass_solve(&m),
                    _ => unreachable!("pairing validated at construction"),
                };
                vec![Envelope { coeffs }]
            }
        };
        Ok(ControlMeasure { grid: self.freq_grid.clone(), atoms })
    }
}

/// Time-frequency magnitude map of a field: `|(B* f)(w, s)|` over a Gabor
/// tensor grid, row per frequency, column per pulse time.
pub fn spectrogram(
    field: &SampledField,
    time_grid: &TimeGrid,
    freqs: &[f64],
    times: &[f64],
    sigma: f64,
) -> Result<Vec<Vec<f64>>> {
    let grid = FrequencyGrid::tensor(freqs.to_vec(), times.to_vec())?;
    let op = SynthesisOperator::new(
        OperatorKind::GaborTf,
        grid,
        *time_grid,
        EnvelopeSpace::Scalar,
        Some(sigma),
    )?;
    let coeffs = op.adjoint_synthesize(field)?;
    let nt = times.len();
    Ok((0..freqs.len())
        .map(|i| (0..nt).map(|j| coeffs.atoms[i * nt + j].coeffs[0].norm()).collect())
        .collect())
}

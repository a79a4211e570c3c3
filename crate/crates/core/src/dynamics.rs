//! Time evolution of atoms on the waveguide.
//!
//! Two routes are provided. [`evolve_pure`] propagates a single-excitation
//! amplitude vector with the non-Hermitian effective Hamiltonian, which is
//! exact in that sector because every quantum jump leaves it for the global
//! ground state. [`evolve_lindblad`] integrates the full master equation
//!
//! ```text
//! ρ̇ = −i(H ρ − ρ H†) + Σ_jk Γ_jk σ_k ρ σ_j⁺,   H = J − (i/2) Γ
//! ```
//!
//! on the `2^N`-dimensional space with fixed-step RK4, applying each term
//! directly rather than through a superoperator matrix.

use num_complex::Complex64 as C64;

use crate::model::{build_cavity, effective_hamiltonian, lindblad_data, AtomChain, CavityConfig};
use crate::numerics::{eigenvalues, vec_norm, CMatrix, Propagator};
use crate::{Error, Result};

/// Largest chain handled by the density-matrix integrator.
pub const MAX_LINDBLAD_ATOMS: usize = 5;

pub const DEFAULT_DT: f64 = 0.005;

/// Trace drift that aborts a Lindblad run.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Amplitudes over the single-excitation basis, one entry per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub amplitudes: Vec<C64>,
}

impl PureState {
    /// Atom `k` of `n` excited.
    pub fn excited(n: usize, k: usize) -> Self {
        let mut amplitudes = vec![ZERO; n];
        amplitudes[k] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("state vector must have finite non-zero norm".into()));
        }
        Ok(Self { amplitudes: amplitudes.into_iter().map(|a| a / norm).collect() })
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub populations: Vec<f64>,
    pub total_excitation: f64,
}

impl TrajectoryPoint {
    fn new(time: f64, populations: Vec<f64>) -> Self {
        let total_excitation = populations.iter().sum();
        Self { time, populations, total_excitation }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let sorted = times.windows(2).all(|w| w[1] >= w[0]);
    if !sorted || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("sample times must be finite, non-negative and non-decreasing".into()));
    }
    Ok(())
}

/// Uniform sample times `0, dt, 2dt, …` up to and including `t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

pub fn evolve_pure(chain: &AtomChain, initial: &PureState, times: &[f64]) -> Result<Vec<TrajectoryPoint>> {
    if initial.amplitudes.len() != chain.len() {
        return Err(Error::Domain(format!(
            "state has {} amplitudes for {} atoms",
            initial.amplitudes.len(),
            chain.len()
        )));
    }
    check_times(times)?;
    let propagator = Propagator::new(&effective_hamiltonian(chain))?;
    times
        .iter()
        .map(|&t| {
            let psi = propagator.apply(&initial.amplitudes, t)?;
            Ok(TrajectoryPoint::new(t, psi.iter().map(|a| a.norm_sqr()).collect()))
        })
        .collect()
}

/// Density matrix over `N` two-level atoms; bit `k` of a basis index marks
/// atom `k` as excited.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_atoms: usize,
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn ground(n_atoms: usize) -> Self {
        let mut rho = CMatrix::zeros(1 << n_atoms);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        Self { n_atoms, rho }
    }

    /// `|ψ⟩⟨ψ|` for a single-excitation state.
    pub fn from_pure(state: &PureState) -> Self {
        let n = state.amplitudes.len();
        let mut rho = CMatrix::zeros(1 << n);
        for (j, aj) in state.amplitudes.iter().enumerate() {
            for (k, ak) in state.amplitudes.iter().enumerate() {
                rho[(1 << j, 1 << k)] = aj * ak.conj();
            }
        }
        Self { n_atoms: n, rho }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.rho.max_abs_diff(&self.rho.adjoint())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        // symmetrise to remove rounding asymmetry before the eigensolve
        let sym = self.rho.add(&self.rho.adjoint()).scale(C64::new(0.5, 0.0));
        Ok(eigenvalues(&sym)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
    }

    pub fn populations(&self) -> Vec<f64> {
        let dim = 1usize << self.n_atoms;
        (0..self.n_atoms)
            .map(|k| (0..dim).filter(|b| b & (1 << k) != 0).map(|b| self.rho[(b, b)].re).sum())
            .collect()
    }
}

/// Master-equation generator for a chain, applied term by term.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    n_atoms: usize,
    /// Non-zero entries `(row, col, value)` of the no-jump Hamiltonian.
    hamiltonian: Vec<(usize, usize, C64)>,
    /// `(k, j, Γ_jk)` for the jump terms `Γ_jk σ_k ρ σ_j⁺`.
    jumps: Vec<(usize, usize, f64)>,
}

impl Lindbladian {
    pub fn new(chain: &AtomChain) -> Result<Self> {
        let n = chain.len();
        if n > MAX_LINDBLAD_ATOMS {
            return Err(Error::Dimension { dim: n, max: MAX_LINDBLAD_ATOMS });
        }
        let data = lindblad_data(chain);
        let heff = data.effective_hamiltonian();
        let dim = 1usize << n;
        let mut hamiltonian = Vec::new();
        for b in 0..dim {
            let mut diag = ZERO;
            for k in (0..n).filter(|k| b & (1 << k) != 0) {
                diag += heff[(k, k)];
                for j in (0..n).filter(|j| b & (1 << j) == 0) {
                    let v = heff[(j, k)];
                    if v != ZERO {
                        hamiltonian.push(((b & !(1 << k)) | (1 << j), b, v));
                    }
                }
            }
            if diag != ZERO {
                hamiltonian.push((b, b, diag));
            }
        }
        let mut jumps = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let g = data.decay[j][k];
                if g != 0.0 {
                    jumps.push((k, j, g));
                }
            }
        }
        Ok(Self { n_atoms: n, hamiltonian, jumps })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// `out = L[rho]`.
    pub fn apply(&self, rho: &CMatrix, out: &mut CMatrix) {
        let dim = rho.dim();
        let minus_i = C64::new(0.0, -1.0);
        for a in 0..dim {
            for c in 0..dim {
                out[(a, c)] = ZERO;
            }
        }
        for &(a, b, v) in &self.hamiltonian {
            // −i H ρ
            let f = minus_i * v;
            for c in 0..dim {
                out[(a, c)] += f * rho[(b, c)];
            }
            // +i ρ H†
            let g = -(minus_i * v.conj());
            for r in 0..dim {
                out[(r, a)] += g * rho[(r, b)];
            }
        }
        for &(k, j, gamma) in &self.jumps {
            let (bk, bj) = (1usize << k, 1usize << j);
            for a in (0..dim).filter(|a| a & bk == 0) {
                for c in (0..dim).filter(|c| c & bj == 0) {
                    out[(a, c)] += gamma * rho[(a | bk, c | bj)];
                }
            }
        }
    }

    pub fn rk4_step(&self, rho: &mut CMatrix, dt: f64, scratch: &mut Rk4Scratch) {
        let Rk4Scratch { k1, k2, k3, k4, tmp } = scratch;
        let dim = rho.dim();
        let axpy = |out: &mut CMatrix, base: &CMatrix, k: &CMatrix, h: f64| {
            for a in 0..dim {
                for c in 0..dim {
                    out[(a, c)] = base[(a, c)] + h * k[(a, c)];
                }
            }
        };
        self.apply(rho, k1);
        axpy(tmp, rho, k1, 0.5 * dt);
        self.apply(tmp, k2);
        axpy(tmp, rho, k2, 0.5 * dt);
        self.apply(tmp, k3);
        axpy(tmp, rho, k3, dt);
        self.apply(tmp, k4);
        for a in 0..dim {
            for c in 0..dim {
                rho[(a, c)] += dt / 6.0 * (k1[(a, c)] + 2.0 * k2[(a, c)] + 2.0 * k3[(a, c)] + k4[(a, c)]);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rk4Scratch {
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    tmp: CMatrix,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        let z = CMatrix::zeros(dim);
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }
}

/// Result of a Lindblad run with the final state and diagnostics.
#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub points: Vec<TrajectoryPoint>,
    pub final_state: DensityMatrix,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
}

/// Integrates to each sample time in turn; intervals are split into equal
/// steps no longer than `dt`.
pub fn run_lindblad(chain: &AtomChain, initial: &DensityMatrix, times: &[f64], dt: f64) -> Result<LindbladRun> {
    if initial.n_atoms() != chain.len() {
        return Err(Error::Domain(format!(
            "density matrix has {} atoms, chain has {}",
            initial.n_atoms(),
            chain.len()
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    check_times(times)?;
    let lindbladian = Lindbladian::new(chain)?;
    let mut state = initial.clone();
    let trace0 = state.trace();
    let mut scratch = Rk4Scratch::new(state.rho.dim());
    let mut now = 0.0;
    let mut points = Vec::with_capacity(times.len());
    let mut max_trace_drift = 0.0f64;
    let mut max_herm = 0.0f64;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / dt).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                lindbladian.rk4_step(&mut state.rho, h, &mut scratch);
            }
            now = t;
        }
        let drift = (state.trace() - trace0).abs();
        max_trace_drift = max_trace_drift.max(drift);
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift { drift, dt });
        }
        max_herm = max_herm.max(state.hermiticity_error());
        points.push(TrajectoryPoint::new(t, state.populations()));
    }
    Ok(LindbladRun { points, final_state: state, max_trace_drift, max_hermiticity_error: max_herm })
}

pub fn evolve_lindblad(
    chain: &AtomChain,
    initial: &DensityMatrix,
    times: &[f64],
    dt: f64,
) -> Result<Vec<TrajectoryPoint>> {
    Ok(run_lindblad(chain, initial, times, dt)?.points)
}

/// Probe starts excited inside the cavity and evolves freely. The loss
/// `gamma_prime` is applied according to `config.loss_scope`.
pub fn rabi_experiment(config: &CavityConfig, gamma_prime: f64, t_max: f64, dt: f64) -> Result<Vec<TrajectoryPoint>> {
    if !(t_max > 0.0) || !(dt > 0.0) {
        return Err(Error::Domain("t_max and dt must be positive".into()));
    }
    let cfg = CavityConfig { include_probe: true, free_space_decay: gamma_prime, ..*config };
    let chain = build_cavity(&cfg)?;
    evolve_pure(&chain, &PureState::excited(chain.len(), 4), &time_grid(t_max, dt))
}

/// Summary of an oscillating population trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationAnalysis {
    /// Interpolated times and heights of the local maxima.
    pub maxima: Vec<(f64, f64)>,
    /// `2π / mean period` between successive maxima.
    pub angular_frequency: f64,
    /// Exponential decay rate of the maxima (least-squares fit of the log).
    pub envelope_decay_rate: f64,
    /// `1 − min` of the trace before its first maximum.
    pub first_transfer: f64,
}

/// Locates maxima with parabolic interpolation; needs at least two maxima.
pub fn analyze_oscillation(times: &[f64], values: &[f64]) -> Result<OscillationAnalysis> {
    let mut maxima = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
            let h = times[i + 1] - times[i];
            let denom = y0 - 2.0 * y1 + y2;
            let (offset, peak) = if denom.abs() > 0.0 {
                let o = 0.5 * (y0 - y2) / denom;
                (o, y1 - 0.25 * (y0 - y2) * o)
            } else {
                (0.0, y1)
            };
            maxima.push((times[i] + offset * h, peak));
        }
    }
    if maxima.len() < 2 {
        return Err(Error::Fit(format!("need at least two maxima, found {}", maxima.len())));
    }
    let span = maxima.last().unwrap().0 - maxima[0].0;
    let angular_frequency = std::f64::consts::TAU * (maxima.len() - 1) as f64 / span;

    let n = maxima.len() as f64;
    let (sx, sy) = maxima.iter().fold((0.0, 0.0), |(a, b), &(t, v)| (a + t, b + v.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = maxima.iter().fold((0.0, 0.0), |(a, b), &(t, v)| (a + (t - mx) * (v.ln() - my), b + (t - mx).powi(2)));
    let envelope_decay_rate = -sxy / sxx;

    let first_max_t = maxima[0].0;
    let min_before = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t <= first_max_t)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    Ok(OscillationAnalysis { maxima, angular_frequency, envelope_decay_rate, first_transfer: 1.0 - min_before })
}

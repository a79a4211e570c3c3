//! Probe-cavity polaritons.
//!
//! Projecting the five-atom Hamiltonian onto the protected supermodes and the
//! probe gives the 3×3 matrix
//!
//! ```text
//! [ E−   0    G_L ]
//! [ 0    E+   V_L ]
//! [ G_R  V_R  H_pp]
//! ```
//!
//! whose eigenvalues, together with those of the decoupled `H2` block,
//! reproduce the full spectrum when the probe sits at x = λ₀/4.

use num_complex::Complex64 as C64;

use crate::model::{build_cavity, effective_hamiltonian, CavityConfig, LossScope};
use crate::nonhermitian::{probe_couplings, supermodes, ProbeCouplings};
use crate::numerics::{cardano, solve, CMatrix};
use crate::scattering::{ScatteringPoint, SweepGrid};
use crate::{Error, Result};

/// `|Im E|` below which a polariton is reported as dark.
pub const DARK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EffectiveThreeLevel {
    pub matrix: CMatrix,
    pub couplings: ProbeCouplings,
}

impl EffectiveThreeLevel {
    /// Coefficients `[c3, c2, c1, c0]` of `det(E − M)`.
    pub fn characteristic_cubic(&self) -> [C64; 4] {
        let m = &self.matrix;
        let minor = |a: usize, b: usize| m[(a, a)] * m[(b, b)] - m[(a, b)] * m[(b, a)];
        let det = m[(0, 0)] * minor(1, 2) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
        [C64::new(1.0, 0.0), -m.trace(), minor(0, 1) + minor(0, 2) + minor(1, 2), -det]
    }
}

pub fn build_three_level(config: &CavityConfig) -> Result<EffectiveThreeLevel> {
    let cfg = CavityConfig { include_probe: true, ..*config };
    let couplings = probe_couplings(&cfg)?;
    let modes = supermodes(cfg.omega)?;
    let mirror_loss = match cfg.loss_scope {
        LossScope::All => cfg.free_space_decay,
        LossScope::ProbeOnly => 0.0,
    };
    let shift = C64::new(0.0, -mirror_loss);
    let probe_diag = effective_hamiltonian(&build_cavity(&cfg)?)[(4, 4)];
    let zero = C64::new(0.0, 0.0);
    let matrix = CMatrix::from_rows(&[
        vec![modes.psi_minus.energy + shift, zero, couplings.g_l],
        vec![zero, modes.psi_plus.energy + shift, couplings.v_l],
        vec![couplings.g_r, couplings.v_r, probe_diag],
    ]);
    Ok(EffectiveThreeLevel { matrix, couplings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonSpectrum {
    pub energies: [C64; 3],
    pub dark: [bool; 3],
}

impl PolaritonSpectrum {
    pub fn dark_count(&self) -> usize {
        self.dark.iter().filter(|&&d| d).count()
    }
}

pub fn polariton_spectrum(config: &CavityConfig) -> Result<PolaritonSpectrum> {
    let three = build_three_level(config)?;
    let [c3, c2, c1, c0] = three.characteristic_cubic();
    let roots = cardano(c3, c2, c1, c0)?.roots;
    Ok(PolaritonSpectrum { energies: roots, dark: roots.map(|e| e.im.abs() <= DARK_TOL) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Peak,
    Antiresonance,
}

/// Lorentzian feature of a transmission spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFeature {
    pub center: f64,
    /// Half width at half maximum of `|t|²`, i.e. the amplitude decay rate.
    pub linewidth: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub kind: FeatureKind,
    /// RMS fit residual relative to `|amplitude|`.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedFeature {
    pub center: f64,
    pub kind: FeatureKind,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureScan {
    pub features: Vec<SpectralFeature>,
    pub rejected: Vec<RejectedFeature>,
}

impl FeatureScan {
    pub fn peaks(&self) -> impl Iterator<Item = &SpectralFeature> {
        self.features.iter().filter(|f| f.kind == FeatureKind::Peak)
    }

    pub fn antiresonances(&self) -> impl Iterator<Item = &SpectralFeature> {
        self.features.iter().filter(|f| f.kind == FeatureKind::Antiresonance)
    }
}

/// Options for [`extract_features`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    /// Extrema less prominent than this (in `|t|²`) are ignored.
    pub min_prominence: f64,
    /// Features whose relative fit residual exceeds this are rejected.
    pub max_residual: f64,
    /// Minimum samples inside the fit window.
    pub min_samples: usize,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { min_prominence: 0.05, max_residual: 0.1, min_samples: 8 }
    }
}

pub fn extract_features(sweep: &[ScatteringPoint]) -> FeatureScan {
    extract_features_with(sweep, &FeatureOptions::default())
}

pub fn extract_features_with(sweep: &[ScatteringPoint], opts: &FeatureOptions) -> FeatureScan {
    let x: Vec<f64> = sweep.iter().map(|p| p.delta).collect();
    let y: Vec<f64> = sweep.iter().map(|p| p.transmittance()).collect();
    let mut scan = FeatureScan::default();
    if x.len() < 3 {
        return scan;
    }
    for i in 1..x.len() - 1 {
        let kind = if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            FeatureKind::Peak
        } else if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            FeatureKind::Antiresonance
        } else {
            continue;
        };
        // work with the peak orientation throughout
        let sign = if kind == FeatureKind::Peak { 1.0 } else { -1.0 };
        let s: Vec<f64> = y.iter().map(|v| sign * v).collect();
        let prom = prominence(&s, i);
        if prom < opts.min_prominence {
            continue;
        }
        match fit_extremum(&x, &s, i, prom, opts) {
            Ok((center, width, amp, base, resid)) => {
                if resid > opts.max_residual {
                    scan.rejected.push(RejectedFeature {
                        center,
                        kind,
                        reason: format!("fit residual {resid:.3} exceeds {:.3}", opts.max_residual),
                    });
                } else {
                    scan.features.push(SpectralFeature {
                        center,
                        linewidth: width,
                        amplitude: sign * amp,
                        baseline: sign * base,
                        kind,
                        fit_residual: resid,
                    });
                }
            }
            Err(reason) => scan.rejected.push(RejectedFeature { center: x[i], kind, reason }),
        }
    }
    scan
}

fn prominence(s: &[f64], i: usize) -> f64 {
    let h = s[i];
    let mut left_min = h;
    for k in (0..i).rev() {
        if s[k] > h {
            break;
        }
        left_min = left_min.min(s[k]);
    }
    let mut right_min = h;
    for &v in &s[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn half_level_crossing(x: &[f64], s: &[f64], i: usize, level: f64, step: isize) -> Option<f64> {
    let mut k = i as isize;
    while k + step >= 0 && ((k + step) as usize) < s.len() {
        let next = (k + step) as usize;
        if s[next] <= level {
            let (x0, y0, x1, y1) = (x[k as usize], s[k as usize], x[next], s[next]);
            return Some(x0 + (level - y0) * (x1 - x0) / (y1 - y0));
        }
        k += step;
    }
    None
}

fn lorentz(x: f64, p: &[f64; 4]) -> f64 {
    let [c, w, a, b] = *p;
    b + a * w * w / ((x - c) * (x - c) + w * w)
}

type FitResult = std::result::Result<(f64, f64, f64, f64, f64), String>;

/// Levenberg-Marquardt Lorentzian fit around the extremum at `i`.
fn fit_extremum(x: &[f64], s: &[f64], i: usize, prom: f64, opts: &FeatureOptions) -> FitResult {
    let level = s[i] - 0.5 * prom;
    let left = half_level_crossing(x, s, i, level, -1);
    let right = half_level_crossing(x, s, i, level, 1);
    let w0 = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => x[i] - l,
        (None, Some(r)) => r - x[i],
        (None, None) => return Err("no half-maximum crossing".into()),
    };
    if !(w0 > 0.0) {
        return Err("degenerate width estimate".into());
    }
    let window: Vec<usize> = (0..x.len()).filter(|&k| (x[k] - x[i]).abs() <= 3.0 * w0).collect();
    if window.len() < opts.min_samples {
        return Err(format!("only {} samples within the fit window", window.len()));
    }

    let mut p = [x[i], w0, prom, s[i] - prom];
    let cost = |p: &[f64; 4]| -> f64 { window.iter().map(|&k| (s[k] - lorentz(x[k], p)).powi(2)).sum() };
    let mut current = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for &k in &window {
            let [c, w, a, _] = p;
            let d = x[k] - c;
            let den = d * d + w * w;
            let l = w * w / den;
            let jac = [a * 2.0 * d * w * w / (den * den), a * 2.0 * w * d * d / (den * den), l, 1.0];
            let r = s[k] - lorentz(x[k], &p);
            for u in 0..4 {
                jtr[u] += jac[u] * r;
                for v in 0..4 {
                    jtj[u][v] += jac[u] * jac[v];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let a = CMatrix::from_fn(4, |u, v| {
                let diag = if u == v { lambda * jtj[u][u].max(1e-300) } else { 0.0 };
                C64::new(jtj[u][v] + diag, 0.0)
            });
            let rhs: Vec<C64> = jtr.iter().map(|&v| C64::new(v, 0.0)).collect();
            let Ok(step) = solve(&a, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0].re, p[1] + step[1].re, p[2] + step[2].re, p[3] + step[3].re];
            let tc = cost(&trial);
            if tc.is_finite() && tc < current {
                let rel = (current - tc) / current.max(1e-300);
                p = trial;
                current = tc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let [c, w, a, b] = p;
    if !(a.abs() > 0.0) || !w.is_finite() {
        return Err("fit collapsed".into());
    }
    let rms = (current / window.len() as f64).sqrt();
    Ok((c, w.abs(), a, b, rms / a.abs()))
}

/// Polariton linewidth as a function of the probe decay.
#[derive(Debug, Clone, PartialEq)]
pub struct LinewidthScan {
    pub points: Vec<(f64, f64)>,
    pub argmin: f64,
    pub minimum: f64,
}

/// Larger decay rate of the two least-damped eigenvalues of the 3×3 model.
pub fn polariton_linewidth(config: &CavityConfig) -> Result<f64> {
    let spec = polariton_spectrum(config)?;
    let mut decays: Vec<f64> = spec.energies.iter().map(|e| -e.im).collect();
    decays.sort_by(f64::total_cmp);
    Ok(decays[1].max(0.0))
}

pub fn linewidth_vs_gamma(omega: f64, gamma_grid: &SweepGrid) -> Result<LinewidthScan> {
    gamma_grid.validate()?;
    let at = |g: f64| polariton_linewidth(&CavityConfig::new(omega).with_probe(g, 0.0));
    let points: Vec<(f64, f64)> = gamma_grid.values().map(|g| Ok((g, at(g)?))).collect::<Result<_>>()?;
    let (imin, _) = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| Error::Fit("empty grid".into()))?;
    let mut lo = points[imin.saturating_sub(1)].0;
    let mut hi = points[(imin + 1).min(points.len() - 1)].0;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (at(a)?, at(b)?);
    for _ in 0..100 {
        if hi - lo <= 1e-12 {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = at(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = at(b)?;
        }
    }
    let refined = 0.5 * (lo + hi);
    let fr = at(refined)?;
    let (argmin, minimum) = if fr <= points[imin].1 { (refined, fr) } else { points[imin] };
    Ok(LinewidthScan { points, argmin, minimum })
}

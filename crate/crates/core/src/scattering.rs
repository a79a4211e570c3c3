//! Single-photon reflection and transmission of atoms on a waveguide.
//!
//! Amplitudes follow from the resolvent `G(Δ) = (Δ − H_eff)⁻¹`:
//!
//! ```text
//! t = 1 − i Σ_jk √(Γ_jΓ_k) e^{−i2π(x_j − x_k)} G_jk
//! r = s · (−i) Σ_jk √(Γ_jΓ_k) e^{ i2π(x_j + x_k)} G_jk
//! ```
//!
//! with the global sign `s = −1` chosen so that the anti-Bragg dimer with
//! positive splitting reflects with zero phase on resonance.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::model::{effective_hamiltonian, AtomChain, AtomSpec};
use crate::numerics::{bilinear, solve, CMatrix};
use crate::{Error, Result};

/// Global sign applied to the raw Green's-function reflection amplitude.
pub const REFLECTION_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub delta: f64,
    pub r: C64,
    pub t: C64,
}

impl ScatteringPoint {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn phase_r(&self) -> f64 {
        self.r.arg()
    }

    /// `1 − R − T`, the probability lost out of the waveguide.
    pub fn loss(&self) -> f64 {
        1.0 - self.reflectance() - self.transmittance()
    }
}

/// Uniform grid of `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let grid = Self { min, max, count };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || !(self.min < self.max) {
            return Err(Error::InvalidConfig(format!("grid needs min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.count < 2 {
            return Err(Error::InvalidConfig(format!("grid needs at least 2 points, got {}", self.count)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

/// Atoms that neither radiate into the waveguide nor couple directly to
/// anything are dropped; they cannot affect the amplitudes.
fn coupled_atoms(chain: &AtomChain) -> Vec<usize> {
    (0..chain.len())
        .filter(|&k| {
            chain.atoms()[k].waveguide_decay > 0.0
                || chain.couplings().iter().any(|c| (c.i == k || c.j == k) && c.strength != 0.0)
        })
        .collect()
}

pub fn scatter(chain: &AtomChain, delta: f64) -> Result<ScatteringPoint> {
    let keep = coupled_atoms(chain);
    if keep.is_empty() {
        return Ok(ScatteringPoint { delta, r: C64::new(0.0, 0.0), t: C64::new(1.0, 0.0) });
    }
    let h_full = effective_hamiltonian(chain);
    let n = keep.len();
    let resolvent_inv = CMatrix::from_fn(n, |a, b| {
        let d = if a == b { C64::new(delta, 0.0) } else { C64::new(0.0, 0.0) };
        d - h_full[(keep[a], keep[b])]
    });
    let atoms: Vec<&AtomSpec> = keep.iter().map(|&k| &chain.atoms()[k]).collect();
    let inward: Vec<C64> =
        atoms.iter().map(|a| a.waveguide_decay.sqrt() * C64::from_polar(1.0, TAU * a.position)).collect();
    let forward: Vec<C64> =
        atoms.iter().map(|a| a.waveguide_decay.sqrt() * C64::from_polar(1.0, -TAU * a.position)).collect();

    let g_in = solve(&resolvent_inv, &inward).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularResolvent { delta },
        other => other,
    })?;
    let minus_i = C64::new(0.0, -1.0);
    let t = C64::new(1.0, 0.0) + minus_i * bilinear(&forward, &g_in);
    let r = REFLECTION_SIGN * minus_i * bilinear(&inward, &g_in);
    Ok(ScatteringPoint { delta, r, t })
}

/// Scatters at every grid point in order.
pub fn sweep(chain: &AtomChain, grid: &SweepGrid) -> Result<Vec<ScatteringPoint>> {
    grid.validate()?;
    grid.values().map(|d| scatter(chain, d)).collect()
}

/// Closed-form reflection of the anti-Bragg dimer,
/// `r = 1/(Δ + W/2 + i) − 1/(Δ − W/2 + i)` with `W = 2(Ω + 1)`.
pub fn dimer_reflection_closed(delta: f64, omega: f64) -> C64 {
    let half_w = omega + 1.0;
    let i = C64::new(0.0, 1.0);
    1.0 / (delta + half_w + i) - 1.0 / (delta - half_w + i)
}

/// Resonant reflectance of the dimer as a function of the splitting W.
pub fn r0_closed(w: f64) -> f64 {
    let d = 1.0 + w * w / 4.0;
    w * w / (d * d)
}

/// Side of the resonant-reflectance maximum at W = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// 0 < W ≤ 2: single reflection peak.
    SinglePeak,
    /// W ≥ 2: two reflection peaks.
    TwoPeak,
}

/// Splitting W ≥ 0 on `branch` whose resonant reflectance is `r0`.
pub fn invert_r0(r0: f64, branch: Branch) -> Result<f64> {
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::Domain(format!("resonant reflectance must lie in (0, 1], got {r0}")));
    }
    let root = (1.0 - r0).sqrt();
    Ok(match branch {
        // 2(1 − √(1−R))/√R written without cancellation
        Branch::SinglePeak => 2.0 * r0.sqrt() / (1.0 + root),
        Branch::TwoPeak => 2.0 * (1.0 + root) / r0.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_dimer;

    #[test]
    fn single_atom_resonance_reflects_fully() {
        let chain = AtomChain::new(vec![AtomSpec::mirror(0.0)]).unwrap();
        let p = scatter(&chain, 0.0).unwrap();
        assert!(p.t.norm() < 1e-15);
        assert!((p.reflectance() - 1.0).abs() < 1e-15);
        let p = scatter(&chain, 1.0).unwrap();
        assert!((p.transmittance() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trivial_mirror_is_transparent() {
        let chain = build_dimer(-1.0).unwrap();
        for delta in [-3.0, -0.4, 0.0, 0.7, 2.5] {
            let p = scatter(&chain, delta).unwrap();
            assert!(p.r.norm() < 1e-14);
            assert!((p.t.norm() - 1.0).abs() < 1e-14);
        }
        assert!(dimer_reflection_closed(0.3, -1.0).norm() < 1e-15);
    }

    #[test]
    fn closed_form_anchor_values() {
        let r = dimer_reflection_closed(0.0, 0.0);
        assert!((r - C64::new(1.0, 0.0)).norm() < 1e-15);
        let r = dimer_reflection_closed(0.0, -0.5);
        assert!((r - C64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((r.norm_sqr() - 0.64).abs() < 1e-15);
    }

    #[test]
    fn r0_values() {
        assert_eq!(r0_closed(0.0), 0.0);
        assert!((r0_closed(2.0) - 1.0).abs() < 1e-15);
        assert!((r0_closed(4.0) - 0.64).abs() < 1e-15);
        assert!((r0_closed(1.0) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn r0_inversion() {
        assert!((invert_r0(1.0, Branch::SinglePeak).unwrap() - 2.0).abs() < 1e-15);
        assert!((invert_r0(1.0, Branch::TwoPeak).unwrap() - 2.0).abs() < 1e-15);
        assert!((invert_r0(0.64, Branch::TwoPeak).unwrap() - 4.0).abs() < 1e-12);
        assert!((invert_r0(0.64, Branch::SinglePeak).unwrap() - 1.0).abs() < 1e-12);
        assert!(invert_r0(0.0, Branch::SinglePeak).is_err());
        assert!(invert_r0(1.2, Branch::TwoPeak).is_err());
    }

    #[test]
    fn decoupled_atom_is_transparent() {
        let chain = AtomChain::new(vec![AtomSpec::new(0.3, 0.0)]).unwrap();
        let points = sweep(&chain, &SweepGrid::new(-5.0, 5.0, 11).unwrap()).unwrap();
        assert!(points.iter().all(|p| p.t == C64::new(1.0, 0.0) && p.r.norm() == 0.0));
    }

    #[test]
    fn singular_resolvent_names_detuning() {
        // a lossless atom coupled only directly to a decaying one still matters
        let chain = AtomChain::new(vec![AtomSpec::new(0.0, 0.0), AtomSpec::new(0.0, 0.0)])
            .unwrap()
            .with_coupling(0, 1, 1.0)
            .unwrap();
        match scatter(&chain, 1.0) {
            Err(Error::SingularResolvent { delta }) => assert_eq!(delta, 1.0),
            other => panic!("expected singular resolvent, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::new(1.0, 1.0, 5).is_err());
        assert!(SweepGrid::new(0.0, 1.0, 1).is_err());
        let g = SweepGrid::new(-1.0, 1.0, 5).unwrap();
        let v: Vec<f64> = g.values().collect();
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}

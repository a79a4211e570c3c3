//! Atoms on a waveguide and the single-excitation operators they generate.
//!
//! Positions are in resonant wavelengths, rates and detunings in units of the
//! mirror-atom waveguide decay. The decay convention follows the Lindblad
//! form `Γ(2σ⁻ρσ⁺ − σ⁺σ⁻ρ − ρσ⁺σ⁻)`: an atom with waveguide decay `Γ` has
//! `−iΓ` on the diagonal of the effective Hamiltonian and loses population at
//! rate `2Γ`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::numerics::{eigenvalues, CMatrix};
use crate::{Error, Result};

/// Mirror-atom positions: two anti-Bragg dimers whose inner atoms are one
/// wavelength apart.
pub const MIRROR_POSITIONS: [f64; 4] = [-0.25, 0.0, 1.0, 1.25];

/// Probe position of maximal coupling to the slow supermode.
pub const DEFAULT_PROBE_POSITION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub position: f64,
    pub waveguide_decay: f64,
    pub free_space_decay: f64,
    pub detuning: f64,
}

impl AtomSpec {
    pub fn new(position: f64, waveguide_decay: f64) -> Self {
        Self { position, waveguide_decay, free_space_decay: 0.0, detuning: 0.0 }
    }

    /// A resonant mirror atom with unit waveguide decay.
    pub fn mirror(position: f64) -> Self {
        Self::new(position, 1.0)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_free_space_decay(mut self, rate: f64) -> Self {
        self.free_space_decay = rate;
        self
    }

    fn validate(&self, index: usize) -> Result<()> {
        if !self.position.is_finite() || !self.detuning.is_finite() {
            return Err(Error::InvalidConfig(format!("atom {index}: position and detuning must be finite")));
        }
        for (name, v) in [("waveguide_decay", self.waveguide_decay), ("free_space_decay", self.free_space_decay)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("atom {index}: {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectCoupling {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// Ordered emitters on a waveguide plus direct (non-waveguide) couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomChain {
    atoms: Vec<AtomSpec>,
    couplings: Vec<DirectCoupling>,
}

impl AtomChain {
    pub fn new(atoms: Vec<AtomSpec>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidConfig("atom chain must contain at least one atom".into()));
        }
        for (k, a) in atoms.iter().enumerate() {
            a.validate(k)?;
        }
        Ok(Self { atoms, couplings: Vec::new() })
    }

    /// Adds a direct coupling between atoms `i` and `j`.
    pub fn with_coupling(mut self, i: usize, j: usize, strength: f64) -> Result<Self> {
        let n = self.atoms.len();
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidConfig(format!("invalid coupling pair ({i}, {j}) for {n} atoms")));
        }
        if !strength.is_finite() {
            return Err(Error::InvalidConfig("coupling strength must be finite".into()));
        }
        let (i, j) = (i.min(j), i.max(j));
        if self.couplings.iter().any(|c| c.i == i && c.j == j) {
            return Err(Error::InvalidConfig(format!("duplicate coupling for pair ({i}, {j})")));
        }
        self.couplings.push(DirectCoupling { i, j, strength });
        Ok(self)
    }

    pub fn atoms(&self) -> &[AtomSpec] {
        &self.atoms
    }

    pub fn couplings(&self) -> &[DirectCoupling] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Direct coupling strength between `i` and `j` (0 when absent).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        self.couplings.iter().find(|c| c.i == i && c.j == j).map_or(0.0, |c| c.strength)
    }

    /// Overrides the free-space decay of one atom.
    pub fn set_free_space_decay(&mut self, index: usize, rate: f64) -> Result<()> {
        let atom = self
            .atoms
            .get_mut(index)
            .ok_or_else(|| Error::InvalidConfig(format!("atom index {index} out of range")))?;
        let mut updated = *atom;
        updated.free_space_decay = rate;
        updated.validate(index)?;
        *atom = updated;
        Ok(())
    }

    /// Same chain reflected through the origin, `x -> -x`.
    pub fn mirrored(&self) -> Self {
        let atoms = self.atoms.iter().map(|a| AtomSpec { position: -a.position, ..*a }).collect();
        Self { atoms, couplings: self.couplings.clone() }
    }

    pub fn is_lossless(&self) -> bool {
        self.atoms.iter().all(|a| a.free_space_decay == 0.0)
    }
}

/// Which atoms carry the free-space loss of a [`CavityConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossScope {
    #[default]
    All,
    ProbeOnly,
}

/// Four-atom cavity, optionally with a probe atom inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Direct intra-mirror coupling Ω.
    pub omega: f64,
    /// Probe waveguide decay γ.
    pub probe_decay: f64,
    /// Probe detuning δω from the mirror atoms.
    pub probe_detuning: f64,
    /// Free-space loss γ′.
    pub free_space_decay: f64,
    pub loss_scope: LossScope,
    pub probe_position: f64,
    pub include_probe: bool,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            probe_decay: 0.0,
            probe_detuning: 0.0,
            free_space_decay: 0.0,
            loss_scope: LossScope::All,
            probe_position: DEFAULT_PROBE_POSITION,
            include_probe: false,
        }
    }
}

impl CavityConfig {
    /// Bare cavity with intra-mirror coupling `omega`.
    pub fn new(omega: f64) -> Self {
        Self { omega, ..Self::default() }
    }

    pub fn with_probe(mut self, decay: f64, detuning: f64) -> Self {
        self.include_probe = true;
        self.probe_decay = decay;
        self.probe_detuning = detuning;
        self
    }

    pub fn at_position(mut self, x: f64) -> Self {
        self.probe_position = x;
        self
    }

    pub fn with_loss(mut self, rate: f64, scope: LossScope) -> Self {
        self.free_space_decay = rate;
        self.loss_scope = scope;
        self
    }

    /// Splitting W = 2(Ω + 1) between the mirror's two scattering states.
    pub fn w(&self) -> f64 {
        2.0 * (self.omega + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || !self.probe_detuning.is_finite() {
            return Err(Error::InvalidConfig("omega and probe detuning must be finite".into()));
        }
        if !(self.probe_position > 0.0 && self.probe_position < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "probe position must lie strictly inside (0, 1), got {}",
                self.probe_position
            )));
        }
        Ok(())
    }
}

/// Anti-Bragg dimer: atoms at 0 and λ₀/4 with direct coupling `omega`.
pub fn build_dimer(omega: f64) -> Result<AtomChain> {
    AtomChain::new(vec![AtomSpec::mirror(0.0), AtomSpec::mirror(0.25)])?.with_coupling(0, 1, omega)
}

/// Four mirror atoms (and optionally the probe as atom index 4).
pub fn build_cavity(config: &CavityConfig) -> Result<AtomChain> {
    config.validate()?;
    let mirror_loss = match config.loss_scope {
        LossScope::All => config.free_space_decay,
        LossScope::ProbeOnly => 0.0,
    };
    let mut atoms: Vec<AtomSpec> =
        MIRROR_POSITIONS.iter().map(|&x| AtomSpec::mirror(x).with_free_space_decay(mirror_loss)).collect();
    if config.include_probe {
        let x = config.probe_position;
        if MIRROR_POSITIONS.iter().any(|&m| (m - x).abs() < 1e-12) {
            return Err(Error::InvalidConfig(format!("probe at {x} coincides with a mirror atom")));
        }
        atoms.push(
            AtomSpec::new(x, config.probe_decay)
                .with_detuning(config.probe_detuning)
                .with_free_space_decay(config.free_space_decay),
        );
    }
    AtomChain::new(atoms)?.with_coupling(0, 1, config.omega)?.with_coupling(2, 3, config.omega)
}

/// Waveguide-mediated exchange amplitude `−i√(Γ_jΓ_k) e^{i2π|x_j−x_k|}`.
fn waveguide_exchange(a: &AtomSpec, b: &AtomSpec) -> C64 {
    let g = (a.waveguide_decay * b.waveguide_decay).sqrt();
    C64::new(0.0, -g) * C64::from_polar(1.0, TAU * (a.position - b.position).abs())
}

/// Single-excitation effective Hamiltonian. Complex symmetric by construction.
pub fn effective_hamiltonian(chain: &AtomChain) -> CMatrix {
    let atoms = chain.atoms();
    CMatrix::from_fn(atoms.len(), |j, k| {
        if j == k {
            let a = &atoms[j];
            C64::new(a.detuning, -(a.waveguide_decay + a.free_space_decay))
        } else {
            C64::new(chain.coupling(j, k), 0.0) + waveguide_exchange(&atoms[j], &atoms[k])
        }
    })
}

/// Coherent and dissipative parts of the master equation for a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladData {
    /// Exchange couplings J (diagonal holds the detunings).
    pub coherent: Vec<Vec<f64>>,
    /// Collective decay matrix Γ_jk; the diagonal is twice the total decay.
    pub decay: Vec<Vec<f64>>,
}

impl LindbladData {
    pub fn dim(&self) -> usize {
        self.coherent.len()
    }

    /// `J − (i/2) Γ`, the non-Hermitian generator of the no-jump evolution.
    pub fn effective_hamiltonian(&self) -> CMatrix {
        CMatrix::from_fn(self.dim(), |j, k| C64::new(self.coherent[j][k], -0.5 * self.decay[j][k]))
    }

    /// Smallest eigenvalue of the collective decay matrix.
    pub fn decay_min_eigenvalue(&self) -> Result<f64> {
        let m = CMatrix::from_real(&self.decay);
        Ok(eigenvalues(&m)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
    }
}

pub fn lindblad_data(chain: &AtomChain) -> LindbladData {
    let atoms = chain.atoms();
    let n = atoms.len();
    let mut coherent = vec![vec![0.0; n]; n];
    let mut decay = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                coherent[j][j] = atoms[j].detuning;
                decay[j][j] = 2.0 * (atoms[j].waveguide_decay + atoms[j].free_space_decay);
            } else {
                let g = (atoms[j].waveguide_decay * atoms[k].waveguide_decay).sqrt();
                let phase = TAU * (atoms[j].position - atoms[k].position).abs();
                coherent[j][k] = chain.coupling(j, k) + g * phase.sin();
                decay[j][k] = 2.0 * g * phase.cos();
            }
        }
    }
    LindbladData { coherent, decay }
}

//! Anti-PT analysis of the four-atom cavity.
//!
//! In the mirror basis `{M_l, M_r} ⊗ {A_1, A_2}` the cavity Hamiltonian is
//! `(Ω+1) s0⊗τx + sx⊗τ0 − i sy⊗τy − i s0⊗τ0`. A real orthogonal
//! Hadamard-type change of basis splits it into two 2×2 blocks,
//!
//! ```text
//! H1 = [[−Ω − i,  −i   ], [ −i,    Ω − i  ]]
//! H2 = [[−Ω − 2 − i, i ], [  i,  Ω + 2 − i]]
//! ```
//!
//! both satisfying `σx conj(H) σx = −H`. The eigenvalues of `H1` are
//! `−iΓ∓` with `Γ± = 1 ± √(1 − Ω²)` for `|Ω| ≤ 1`; the slow mode `Ψ−` plays
//! the role of the cavity mode.

use num_complex::Complex64 as C64;

use crate::model::{build_cavity, effective_hamiltonian, CavityConfig};
use crate::numerics::{bilinear, eig, inner, CMatrix, Spectrum};
use crate::scattering::{r0_closed, Branch, SweepGrid};
use crate::{Error, Result};

/// Distance in Ω from an exceptional point inside which biorthogonal
/// probe couplings are refused.
pub const EP_RADIUS: f64 = 1e-6;

/// Tolerance on `|Re E|` used to report the protected phase.
pub const PROTECTED_TOL: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn kron2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(4, |i, j| a[i / 2][j / 2] * b[i % 2][j % 2])
}

/// Cavity Hamiltonian assembled from its Pauli-product expansion.
pub fn build_hc(omega: f64) -> CMatrix {
    let one = c(1.0, 0.0);
    let id = [[one, ZERO], [ZERO, one]];
    let sx = [[ZERO, one], [one, ZERO]];
    let sy = [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]];
    kron2(&id, &sx)
        .scale(c(omega + 1.0, 0.0))
        .add(&kron2(&sx, &id))
        .add(&kron2(&sy, &sy).scale(c(0.0, -1.0)))
        .add(&kron2(&id, &id).scale(c(0.0, -1.0)))
}

/// Rows are the orthonormal basis vectors: the first two span the `H1`
/// sector, the last two the `H2` sector.
pub fn decomposition_unitary() -> CMatrix {
    CMatrix::from_real(&[
        vec![0.5, -0.5, 0.5, -0.5],
        vec![0.5, 0.5, -0.5, -0.5],
        vec![0.5, -0.5, -0.5, 0.5],
        vec![0.5, 0.5, 0.5, 0.5],
    ])
}

/// Closed form of the protected block.
pub fn h1_matrix(omega: f64) -> CMatrix {
    CMatrix::from_rows(&[vec![c(-omega, -1.0), c(0.0, -1.0)], vec![c(0.0, -1.0), c(omega, -1.0)]])
}

/// Closed form of the second block.
pub fn h2_matrix(omega: f64) -> CMatrix {
    CMatrix::from_rows(&[vec![c(-omega - 2.0, -1.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(omega + 2.0, -1.0)]])
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub h1: CMatrix,
    pub h2: CMatrix,
    pub u: CMatrix,
    /// Largest entry of `u H u^T` outside the two diagonal blocks.
    pub off_block: f64,
}

pub fn block_decompose(omega: f64) -> BlockDecomposition {
    let u = decomposition_unitary();
    let rotated = u.matmul(&build_hc(omega)).matmul(&u.transpose());
    let block = |off: usize| CMatrix::from_fn(2, |i, j| rotated[(off + i, off + j)]);
    let mut off_block = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) != (j < 2) {
                off_block = off_block.max(rotated[(i, j)].norm());
            }
        }
    }
    BlockDecomposition { h1: block(0), h2: block(2), u, off_block }
}

/// True iff `σx conj(h) σx = −h` entrywise within 1e-12.
pub fn anti_pt_check(h: &CMatrix) -> bool {
    if h.dim() != 2 {
        return false;
    }
    let conj = h.conj();
    let swapped = CMatrix::from_fn(2, |i, j| conj[(1 - i, 1 - j)]);
    swapped.add(h).norm_fro() <= 1e-12
}

/// Closed-form decay rates `(Γ−, Γ+)` of the protected pair for `|Ω| ≤ 1`.
pub fn decay_rates_closed(omega: f64) -> (f64, f64) {
    let root = (1.0 - omega * omega).max(0.0).sqrt();
    (1.0 - root, 1.0 + root)
}

#[derive(Debug, Clone)]
pub struct Supermode {
    pub energy: C64,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// `|<L|R>|` for unit vectors, as reported by the eigensolver.
    pub condition: f64,
}

impl Supermode {
    pub fn decay(&self) -> f64 {
        -self.energy.im
    }

    pub fn is_near_defective(&self) -> bool {
        self.condition < crate::numerics::NEAR_DEFECTIVE
    }
}

#[derive(Debug, Clone)]
pub struct SupermodeSet {
    pub omega: f64,
    /// Slow-decay mode of the protected block.
    pub psi_minus: Supermode,
    pub psi_plus: Supermode,
    pub h2_modes: [Supermode; 2],
    pub tolerance: f64,
}

impl SupermodeSet {
    /// Both protected energies purely imaginary within the tolerance.
    pub fn is_protected(&self) -> bool {
        self.psi_minus.energy.re.abs() <= self.tolerance && self.psi_plus.energy.re.abs() <= self.tolerance
    }

    pub fn near_exceptional_point(&self) -> bool {
        self.psi_minus.is_near_defective() || self.psi_plus.is_near_defective()
    }

    pub fn all(&self) -> [&Supermode; 4] {
        [&self.psi_minus, &self.psi_plus, &self.h2_modes[0], &self.h2_modes[1]]
    }
}

fn sector_weight(u: &CMatrix, rows: [usize; 2], v: &[C64]) -> f64 {
    rows.iter().map(|&r| bilinear(u.row(r), v).norm_sqr()).sum()
}

/// Fixes the free phase of a mode: `R^T R` real positive and a positive real
/// component along the basis row `anchor` of the decomposition unitary.
fn fix_gauge(mode: &mut Supermode, u: &CMatrix, anchor: usize) {
    let rtr = bilinear(&mode.right, &mode.right);
    let mut factor = if rtr.norm() > 1e-14 { C64::from_polar(1.0, -0.5 * rtr.arg()) } else { c(1.0, 0.0) };
    if (bilinear(u.row(anchor), &mode.right) * factor).re < 0.0 {
        factor = -factor;
    }
    for x in mode.right.iter_mut() {
        *x *= factor;
    }
    // keep <L|R> unchanged
    let lf = c(1.0, 0.0) / factor.conj();
    for x in mode.left.iter_mut() {
        *x *= lf;
    }
}

fn mode_of(s: &Spectrum, k: usize) -> Supermode {
    Supermode { energy: s.values[k], right: s.right[k].clone(), left: s.left[k].clone(), condition: s.condition[k] }
}

/// Eigensystem of the cavity Hamiltonian split into the protected pair and
/// the two remaining modes.
pub fn supermodes(omega: f64) -> Result<SupermodeSet> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be finite, got {omega}")));
    }
    let u = decomposition_unitary();
    let spectrum = eig(&build_hc(omega))?;
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| {
        let wa = sector_weight(&u, [0, 1], &spectrum.right[a]);
        let wb = sector_weight(&u, [0, 1], &spectrum.right[b]);
        wb.total_cmp(&wa)
    });
    let mut pair = [mode_of(&spectrum, idx[0]), mode_of(&spectrum, idx[1])];
    let protected = omega.abs() <= 1.0;
    pair.sort_by(|a, b| {
        if protected {
            a.decay().total_cmp(&b.decay())
        } else {
            a.energy.re.total_cmp(&b.energy.re)
        }
    });
    let [mut psi_minus, mut psi_plus] = pair;
    fix_gauge(&mut psi_minus, &u, 1);
    fix_gauge(&mut psi_plus, &u, 1);

    let mut rest = [mode_of(&spectrum, idx[2]), mode_of(&spectrum, idx[3])];
    rest.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re).then(a.energy.im.total_cmp(&b.energy.im)));
    for m in rest.iter_mut() {
        fix_gauge(m, &u, 3);
    }

    Ok(SupermodeSet { omega, psi_minus, psi_plus, h2_modes: rest, tolerance: PROTECTED_TOL })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpReport {
    /// Exceptional points as values of W.
    pub locations: Vec<f64>,
    /// Smallest `|<L|R>|` of the coalescing block at each location.
    pub coalescence: Vec<f64>,
    /// Grid cells in which each location was bracketed.
    pub brackets: Vec<(f64, f64)>,
}

fn omega_of_w(w: f64) -> f64 {
    0.5 * w - 1.0
}

fn block_discriminant(h: &CMatrix) -> f64 {
    let half = (h[(0, 0)] - h[(1, 1)]) * 0.5;
    (half * half + h[(0, 1)] * h[(1, 0)]).re
}

fn discriminant(block: usize, w: f64) -> f64 {
    let d = block_decompose(omega_of_w(w));
    block_discriminant(if block == 0 { &d.h1 } else { &d.h2 })
}

/// Locates exceptional points in W by bisection on each block's discriminant.
pub fn find_exceptional_points(grid: &SweepGrid) -> Result<EpReport> {
    grid.validate()?;
    let mut found: Vec<(f64, usize, (f64, f64))> = Vec::new();
    for block in 0..2 {
        let mut prev_w = grid.value(0);
        let mut prev_d = discriminant(block, prev_w);
        if prev_d == 0.0 {
            found.push((prev_w, block, (prev_w, prev_w)));
        }
        for i in 1..grid.count {
            let w = grid.value(i);
            let d = discriminant(block, w);
            if d == 0.0 {
                found.push((w, block, (w, w)));
            } else if prev_d != 0.0 && (d > 0.0) != (prev_d > 0.0) {
                let (mut lo, mut hi, mut dlo) = (prev_w, w, prev_d);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let dm = discriminant(block, mid);
                    if dm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (dm > 0.0) == (dlo > 0.0) {
                        lo = mid;
                        dlo = dm;
                    } else {
                        hi = mid;
                    }
                }
                found.push((0.5 * (lo + hi), block, (prev_w, w)));
            }
            prev_w = w;
            prev_d = d;
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut report = EpReport { locations: vec![], coalescence: vec![], brackets: vec![] };
    for (w, block, bracket) in found {
        let d = block_decompose(omega_of_w(w));
        let measure = eig(if block == 0 { &d.h1 } else { &d.h2 })?.min_condition();
        if let Some(last) = report.locations.last() {
            if (w - last).abs() < 1e-9 {
                let k = report.locations.len() - 1;
                report.coalescence[k] = report.coalescence[k].min(measure);
                continue;
            }
        }
        report.locations.push(w);
        report.coalescence.push(measure);
        report.brackets.push(bracket);
    }
    Ok(report)
}

/// Couplings of the probe to the protected supermodes.
///
/// `g_r`, `v_r` are the probe-row couplings to `Ψ−`, `Ψ+`; `g_l`, `v_l`
/// the corresponding supermode-row couplings to the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCouplings {
    pub g_l: C64,
    pub g_r: C64,
    pub v_l: C64,
    pub v_r: C64,
}

fn check_ep_distance(omega: f64) -> Result<()> {
    if (omega.abs() - 1.0).abs() < EP_RADIUS {
        return Err(Error::NearExceptionalPoint { omega, radius: EP_RADIUS });
    }
    Ok(())
}

/// Probe-to-mirror coupling column `H[j, probe]` for `j` over the mirror atoms.
fn probe_column(config: &CavityConfig) -> Result<Vec<C64>> {
    let cfg = CavityConfig { include_probe: true, ..*config };
    let h = effective_hamiltonian(&build_cavity(&cfg)?);
    Ok((0..4).map(|j| h[(j, 4)]).collect())
}

pub(crate) fn couplings_from_modes(set: &SupermodeSet, column: &[C64]) -> ProbeCouplings {
    // H is complex symmetric, so the probe row equals the probe column.
    ProbeCouplings {
        g_l: inner(&set.psi_minus.left, column),
        g_r: bilinear(column, &set.psi_minus.right),
        v_l: inner(&set.psi_plus.left, column),
        v_r: bilinear(column, &set.psi_plus.right),
    }
}

pub fn probe_couplings(config: &CavityConfig) -> Result<ProbeCouplings> {
    config.validate()?;
    check_ep_distance(config.omega)?;
    let set = supermodes(config.omega)?;
    Ok(couplings_from_modes(&set, &probe_column(config)?))
}

/// `g_r` as the probe moves through the cavity. Grid points outside the
/// open interval (0, 1) are skipped.
pub fn coupling_vs_position(omega: f64, gamma: f64, grid: &SweepGrid) -> Result<Vec<(f64, C64)>> {
    grid.validate()?;
    check_ep_distance(omega)?;
    let set = supermodes(omega)?;
    grid.values()
        .filter(|&x| x > 0.0 && x < 1.0)
        .map(|x| {
            let cfg = CavityConfig::new(omega).with_probe(gamma, 0.0).at_position(x);
            Ok((x, couplings_from_modes(&set, &probe_column(&cfg)?).g_r))
        })
        .collect()
}

/// Coupling factor `η = G_R²/(γΓ)`, which equals W in the protected window.
pub fn coupling_factor(w: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&w) {
        return Err(Error::Domain(format!("coupling factor needs 0 <= W <= 4, got {w}")));
    }
    Ok(w)
}

/// `η` expressed through the resonant mirror reflectance on either branch.
pub fn coupling_factor_from_r0(r0: f64, branch: Branch) -> Result<f64> {
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::Domain(format!("resonant reflectance must lie in (0, 1], got {r0}")));
    }
    let root = (1.0 - r0).sqrt();
    Ok(match branch {
        Branch::SinglePeak => 2.0 * (1.0 - root) / r0.sqrt(),
        Branch::TwoPeak => 2.0 * r0.sqrt() / (1.0 - root),
    })
}

/// Reflectance bounding the strong coherent coupling window, evaluated at
/// both window edges W = 1 and W = 4.
pub fn reflection_threshold() -> f64 {
    let at_a = r0_closed(1.0);
    let at_b = r0_closed(4.0);
    debug_assert!((at_a - at_b).abs() <= 1e-12);
    0.5 * (at_a + at_b)
}

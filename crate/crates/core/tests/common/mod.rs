//! Test-side oracles that share no code with the library's solvers.
#![allow(dead_code)]

use antipt_cavity::numerics::CMatrix;
use antipt_cavity::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix as nested vectors, independent of `CMatrix` arithmetic.
pub type Dense = Vec<Vec<C64>>;

pub fn to_dense(m: &CMatrix) -> Dense {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (na, nb) = (a.len(), b.len());
    (0..na * nb)
        .map(|i| (0..na * nb).map(|j| a[i / nb][j / nb] * b[i % nb][j % nb]).collect())
        .collect()
}

/// Characteristic polynomial coefficients, highest degree first, by Faddeev–LeVerrier.
pub fn char_poly(a: &Dense) -> Vec<C64> {
    let n = a.len();
    let mut coeffs = vec![c(1.0, 0.0)];
    let mut m: Dense = vec![vec![c(0.0, 0.0); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let am = dense_mul(a, &m);
        for i in 0..n {
            for j in 0..n {
                m[i][j] = am[i][j];
            }
            m[i][i] += coeffs[k - 1];
        }
        let am = dense_mul(a, &m);
        let tr: C64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-tr / k as f64);
    }
    coeffs
}

fn horner(p: &[C64], z: C64) -> C64 {
    p.iter().fold(c(0.0, 0.0), |acc, &a| acc * z + a)
}

/// All roots of a monic-normalisable polynomial by Durand–Kerner iteration.
pub fn durand_kerner(p: &[C64]) -> Vec<C64> {
    let lead = p[0];
    let p: Vec<C64> = p.iter().map(|a| a / lead).collect();
    let n = p.len() - 1;
    let radius = 1.0 + p[1..].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let seed = c(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let denom: C64 = (0..n).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            let step = horner(&p, z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Largest distance under a greedy nearest-neighbour pairing of two spectra.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn pauli() -> [Dense; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [vec![vec![l, o], vec![o, l]], vec![vec![o, l], vec![l, o]], vec![vec![o, -i], vec![i, o]], vec![vec![l, o], vec![o, -l]]]
}

/// Four-atom cavity Hamiltonian written directly as a sum of Pauli products,
/// mirror index outer and atom index inner.
pub fn cavity_pauli(omega: f64) -> Dense {
    let [s0, sx, sy, _] = pauli();
    let terms: [(C64, &Dense, &Dense); 4] = [
        (c(omega + 1.0, 0.0), &s0, &sx),
        (c(1.0, 0.0), &sx, &s0),
        (c(0.0, -1.0), &sy, &sy),
        (c(0.0, -1.0), &s0, &s0),
    ];
    let mut h = vec![vec![c(0.0, 0.0); 4]; 4];
    for (coef, s, t) in terms {
        let k = kron(s, t);
        for i in 0..4 {
            for j in 0..4 {
                h[i][j] += coef * k[i][j];
            }
        }
    }
    h
}

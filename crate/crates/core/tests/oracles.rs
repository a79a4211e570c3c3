//! Library numerics checked against independent constructions.

mod common;

use antipt_cavity::dynamics::{evolve_pure, run_lindblad, DensityMatrix, PureState};
use antipt_cavity::model::{build_cavity, CavityConfig, LossScope};
use antipt_cavity::numerics::{cardano, eig, expm_taylor, inverse, solve, CMatrix, Propagator};
use antipt_cavity::C64;
use common::{c, char_poly, durand_kerner, rng, spectrum_distance, to_dense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, |_, _| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

fn residual(a: &CMatrix, v: &[C64], lambda: C64) -> f64 {
    let av = a.mul_vec(v);
    av.iter().zip(v).map(|(x, y)| (x - lambda * y).norm()).fold(0.0, f64::max)
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    let mut r = rng(11);
    for n in 2..=6 {
        for _ in 0..40 {
            let a = random_matrix(&mut r, n);
            let s = eig(&a).unwrap();
            let roots = durand_kerner(&char_poly(&to_dense(&a)));
            let d = spectrum_distance(&s.values, &roots);
            assert!(d < 1e-8, "n={n}: distance {d:e}");
        }
    }
}

#[test]
fn eigenvectors_are_biorthonormal_with_small_residuals() {
    let mut r = rng(12);
    for n in [2, 3, 5, 8, 16, 32] {
        let a = random_matrix(&mut r, n);
        let s = eig(&a).unwrap();
        let scale = a.norm_inf();
        let adj = a.adjoint();
        for k in 0..n {
            assert!(residual(&a, &s.right[k], s.values[k]) < 1e-11 * scale);
            assert!(residual(&adj, &s.left[k], s.values[k].conj()) < 1e-11 * scale);
            for m in 0..n {
                let ip: C64 = s.left[k].iter().zip(&s.right[m]).map(|(l, r)| l.conj() * r).sum();
                let want = if k == m { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-9, "n={n} <L{k}|R{m}> = {ip}");
            }
        }
    }
}

#[test]
fn cardano_matches_companion_eigenvalues() {
    let mut r = rng(13);
    for _ in 0..1000 {
        let coef: Vec<C64> = (0..4).map(|_| c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))).collect();
        let roots = cardano(coef[0], coef[1], coef[2], coef[3]).unwrap().roots;
        let (b, cc, d) = (coef[1] / coef[0], coef[2] / coef[0], coef[3] / coef[0]);
        let companion = CMatrix::from_rows(&[
            vec![-b, -cc, -d],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let ev = eig(&companion).unwrap().values;
        let scale = 1.0 + b.norm().max(cc.norm()).max(d.norm());
        let dist = spectrum_distance(&roots, &ev);
        // nearly repeated roots are only determined to about sqrt(eps)
        assert!(dist < 1e-6 * scale, "{coef:?}: {dist:e}");
    }
}

#[test]
fn exponential_semigroup() {
    let mut r = rng(14);
    for n in [2, 4, 5] {
        let a = random_matrix(&mut r, n);
        let p = Propagator::new(&a).unwrap();
        let v: Vec<C64> = (0..n).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let (s, t) = (0.7, 1.3);
        let direct = p.apply(&v, s + t).unwrap();
        let composed = p.apply(&p.apply(&v, t).unwrap(), s).unwrap();
        let err = direct.iter().zip(&composed).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * (1.0 + direct.iter().map(|x| x.norm()).fold(0.0, f64::max)));
        let taylor = expm_taylor(&a.scale(c(0.0, -(s + t)))).mul_vec(&v);
        let err = direct.iter().zip(&taylor).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "spectral vs Taylor {err:e}");
    }
}

#[test]
fn two_level_exponential_closed_form() {
    // exp(−iAt) = e^{−iμt} [cos(qt) − i sin(qt)/q (A − μ)], q² = ((a−d)/2)² + bc
    let mut r = rng(15);
    for _ in 0..50 {
        let a = random_matrix(&mut r, 2);
        let t = r.gen_range(0.0..3.0);
        let mu = (a[(0, 0)] + a[(1, 1)]) / 2.0;
        let q = (((a[(0, 0)] - a[(1, 1)]) / 2.0).powu(2) + a[(0, 1)] * a[(1, 0)]).sqrt();
        let phase = (c(0.0, -t) * mu).exp();
        let cos = (q * t).cos();
        let sinc = (q * t).sin() / q;
        let want = CMatrix::from_fn(2, |i, j| {
            let shifted = a[(i, j)] - if i == j { mu } else { c(0.0, 0.0) };
            let id = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            phase * (cos * id - c(0.0, 1.0) * sinc * shifted)
        });
        let got = expm_taylor(&a.scale(c(0.0, -t)));
        assert!(got.max_abs_diff(&want) < 1e-11);
    }
}

#[test]
fn inverse_matches_adjugate_formula() {
    let mut r = rng(16);
    for _ in 0..100 {
        let a = random_matrix(&mut r, 2);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        if det.norm() < 1e-3 {
            continue;
        }
        let want = CMatrix::from_rows(&[vec![a[(1, 1)] / det, -a[(0, 1)] / det], vec![-a[(1, 0)] / det, a[(0, 0)] / det]]);
        assert!(inverse(&a).unwrap().max_abs_diff(&want) < 1e-10);
    }
    for n in [3, 6, 12] {
        let a = random_matrix(&mut r, n);
        let b: Vec<C64> = (0..n).map(|_| c(r.gen_range(-1.0..1.0), 0.0)).collect();
        let x = solve(&a, &b).unwrap();
        let res = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(res < 1e-12);
    }
}

#[test]
fn lindblad_integrator_is_fourth_order() {
    let cfg = CavityConfig::new(0.3).with_probe(0.2, 0.5).with_loss(0.05, LossScope::All);
    let chain = build_cavity(&cfg).unwrap();
    let initial = DensityMatrix::from_pure(&PureState::excited(5, 4));
    let pops = |dt: f64| run_lindblad(&chain, &initial, &[2.0], dt).unwrap().points[0].populations.clone();
    let exact = evolve_pure(&chain, &PureState::excited(5, 4), &[2.0]).unwrap()[0].populations.clone();
    let err = |dt: f64| pops(dt).iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ratio = err(0.05) / err(0.025);
    assert!((11.0..24.0).contains(&ratio), "error ratio {ratio}");
}

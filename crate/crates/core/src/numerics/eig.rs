//! Eigensystems of small dense non-Hermitian matrices.
//!
//! The matrix is reduced to upper Hessenberg form with Householder
//! reflections and then to complex Schur form `A = Z T Z^H` by single-shift
//! QR sweeps with Wilkinson shifts. Right eigenvectors come from back
//! substitution on `T`, left eigenvectors from forward substitution on
//! `T^H`; both are mapped back through `Z`, so each left vector is paired
//! with its right vector by construction.

use num_complex::Complex64 as C64;

use super::lu;
use super::matrix::{inner, vec_norm, CMatrix};
use crate::{Error, Result};

/// Largest matrix accepted by [`eig`].
pub const MAX_DIM: usize = 64;

/// Pairs with `|<L|R>|` (unit vectors) below this are treated as
/// near-defective and are left unnormalised.
pub const NEAR_DEFECTIVE: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigenvalues with paired right and left eigenvectors.
///
/// Right vectors have unit norm. Left vectors satisfy `<L_n|R_m> = δ_nm`
/// for every pair whose `condition` is at least [`NEAR_DEFECTIVE`]; for
/// flagged pairs the left vector is returned with unit norm instead.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub right: Vec<Vec<C64>>,
    pub left: Vec<Vec<C64>>,
    /// `|<L_n|R_n>|` measured on unit-norm vectors before normalisation.
    pub condition: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_near_defective(&self, n: usize) -> bool {
        self.condition[n] < NEAR_DEFECTIVE
    }

    pub fn any_near_defective(&self) -> bool {
        (0..self.len()).any(|n| self.is_near_defective(n))
    }

    pub fn min_condition(&self) -> f64 {
        self.condition.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Full eigensystem of `a`, eigenvalues sorted by real part then imaginary part.
pub fn eig(a: &CMatrix) -> Result<Spectrum> {
    let n = a.dim();
    if n > MAX_DIM {
        return Err(Error::Dimension { dim: n, max: MAX_DIM });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(Spectrum { values: vec![], right: vec![], left: vec![], condition: vec![] });
    }

    let scale = a.norm_inf();
    let mut t = a.clone();
    let mut z = CMatrix::identity(n);
    hessenberg(&mut t, &mut z);
    schur(&mut t, &mut z, scale)?;

    // floor keeps |smin|² representable in complex division
    let smin = (f64::EPSILON * scale).max(1e-150);
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for k in 0..n {
        let mut r = z.mul_vec(&triangular_right(&t, k, smin));
        normalize(&mut r);
        let mut l = z.mul_vec(&triangular_left(&t, k, smin));
        normalize(&mut l);
        right.push(r);
        left.push(l);
    }

    let order = sort_order(&values);
    let values: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let right: Vec<Vec<C64>> = order.iter().map(|&i| right[i].clone()).collect();
    let mut left: Vec<Vec<C64>> = order.iter().map(|&i| left[i].clone()).collect();

    let condition: Vec<f64> = (0..n).map(|k| inner(&left[k], &right[k]).norm()).collect();
    biorthonormalize(&values, &right, &mut left, &condition, scale);

    Ok(Spectrum { values, right, left, condition })
}

/// Eigenvalues only, in the same order as [`eig`].
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    Ok(eig(a)?.values)
}

/// Deterministic ordering: real part ascending, ties (within a relative
/// 1e-9) broken by imaginary part ascending.
pub fn sort_order(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].re - values[idx[start]].re <= tol {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im));
        start = end;
    }
    idx
}

pub fn sort_values(values: &mut Vec<C64>) {
    let order = sort_order(values);
    *values = order.iter().map(|&i| values[i]).collect();
}

fn normalize(v: &mut [C64]) {
    let nrm = vec_norm(v);
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
}

fn hessenberg(a: &mut CMatrix, z: &mut CMatrix) {
    let n = a.dim();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = vec_norm(&v);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // a <- P a with P = I - 2 v v^H acting on rows k+1..n
        for j in 0..n {
            let s: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= 2.0 * vi * s;
            }
        }
        // a <- a P, z <- z P on columns k+1..n
        for m in [&mut *a, &mut *z] {
            for i in 0..n {
                let s: C64 = v.iter().enumerate().map(|(j, vj)| m[(i, k + 1 + j)] * vj).sum();
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= 2.0 * s * vj.conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let an = a.norm();
    let nrm = an.hypot(b.norm());
    (an / nrm, (a / an) * b.conj() / nrm)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn schur(h: &mut CMatrix, z: &mut CMatrix, scale: f64) -> Result<()> {
    let n = h.dim();
    let max_sweeps = 60 * n.max(1);
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        total += 1;
        if total > max_sweeps {
            return Err(Error::NoConvergence { iterations: total });
        }

        let mu = if iter.is_multiple_of(10) {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        rots.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = c * a + s * b;
                h[(k + 1, j)] = -s.conj() * a + c * b;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in 0..=(k + 1) {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = c * a + s.conj() * b;
                h[(i, k + 1)] = -s * a + c * b;
            }
            for i in 0..n {
                let a = z[(i, k)];
                let b = z[(i, k + 1)];
                z[(i, k)] = c * a + s.conj() * b;
                z[(i, k + 1)] = -s * a + c * b;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(())
}

fn guarded(d: C64, smin: f64) -> C64 {
    if d.norm() < smin {
        C64::new(smin, 0.0)
    } else {
        d
    }
}

fn triangular_right(t: &CMatrix, k: usize, smin: f64) -> Vec<C64> {
    let n = t.dim();
    let lambda = t[(k, k)];
    let mut x = vec![ZERO; n];
    x[k] = ONE;
    for i in (0..k).rev() {
        let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
        x[i] = -s / guarded(t[(i, i)] - lambda, smin);
    }
    x
}

fn triangular_left(t: &CMatrix, k: usize, smin: f64) -> Vec<C64> {
    let n = t.dim();
    let lambda = t[(k, k)].conj();
    let mut y = vec![ZERO; n];
    y[k] = ONE;
    for j in k + 1..n {
        let s: C64 = (k..j).map(|i| t[(i, j)].conj() * y[i]).sum();
        y[j] = -s / guarded(t[(j, j)].conj() - lambda, smin);
    }
    y
}

/// Scales left vectors so `<L_n|R_m> = δ_nm`. Clusters of (numerically)
/// equal eigenvalues are handled jointly through their Gram matrix.
fn biorthonormalize(
    values: &[C64],
    right: &[Vec<C64>],
    left: &mut [Vec<C64>],
    condition: &[f64],
    scale: f64,
) {
    let n = values.len();
    let tol = 1e-10 * scale.max(1.0);
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let cluster: Vec<usize> =
            (i..n).filter(|&j| !seen[j] && (values[j] - values[i]).norm() <= tol).collect();
        for &j in &cluster {
            seen[j] = true;
        }
        if cluster.iter().any(|&j| condition[j] < NEAR_DEFECTIVE) {
            continue;
        }
        if cluster.len() == 1 {
            let p = inner(&left[i], &right[i]);
            let f = ONE / p.conj();
            for x in left[i].iter_mut() {
                *x *= f;
            }
            continue;
        }
        // L' = L M^{-H} with M_ab = <L_a|R_b>
        let m = cluster.len();
        let gram = CMatrix::from_fn(m, |a, b| inner(&left[cluster[a]], &right[cluster[b]]));
        let Ok(inv) = lu::inverse(&gram) else { continue };
        let inv_h = inv.adjoint();
        let old: Vec<Vec<C64>> = cluster.iter().map(|&j| left[j].clone()).collect();
        for (b, &jb) in cluster.iter().enumerate() {
            let mut v = vec![ZERO; left[jb].len()];
            for (a, la) in old.iter().enumerate() {
                let coef = inv_h[(a, b)];
                for (vi, li) in v.iter_mut().zip(la) {
                    *vi += li * coef;
                }
            }
            left[jb] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn residual(a: &CMatrix, s: &Spectrum, k: usize) -> f64 {
        let av = a.mul_vec(&s.right[k]);
        let r: Vec<C64> = av.iter().zip(&s.right[k]).map(|(x, v)| x - s.values[k] * v).collect();
        vec_norm(&r)
    }

    #[test]
    fn identity_has_unit_eigenvalues_and_condition() {
        let s = eig(&CMatrix::identity(4)).unwrap();
        for k in 0..4 {
            assert!((s.values[k] - ONE).norm() < 1e-15);
            assert!((s.condition[k] - 1.0).abs() < 1e-15);
        }
        for n in 0..4 {
            for m in 0..4 {
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((inner(&s.left[n], &s.right[m]) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn protected_block_at_zero_coupling() {
        // [[-i, -i], [-i, -i]] has eigenvalues 0 and -2i
        let h1 = CMatrix::from_rows(&[vec![c(0.0, -1.0), c(0.0, -1.0)], vec![c(0.0, -1.0), c(0.0, -1.0)]]);
        let s = eig(&h1).unwrap();
        assert!((s.values[0] - c(0.0, -2.0)).norm() < 1e-12);
        assert!(s.values[1].norm() < 1e-12);
    }

    #[test]
    fn triangular_input_and_residuals() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)],
            vec![c(0.0, 0.0), c(-1.0, 1.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, -2.0)],
        ]);
        let s = eig(&a).unwrap();
        let want = [c(-1.0, 1.0), c(0.5, -2.0), c(1.0, 0.0)];
        for (v, w) in s.values.iter().zip(&want) {
            assert!((v - w).norm() < 1e-12, "{v} vs {w}");
        }
        for k in 0..3 {
            assert!(residual(&a, &s, k) < 1e-12 * a.norm_inf());
        }
    }

    #[test]
    fn jordan_block_is_flagged() {
        let a = CMatrix::from_rows(&[vec![c(2.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(2.0, 0.0)]]);
        let s = eig(&a).unwrap();
        assert!(s.any_near_defective());
    }

    #[test]
    fn left_vectors_are_adjoint_eigenvectors() {
        let a = CMatrix::from_fn(4, |i, j| c((i * 3 + j) as f64 * 0.3 - 1.0, (i as f64 - j as f64) * 0.7));
        let s = eig(&a).unwrap();
        let ah = a.adjoint();
        for k in 0..4 {
            let lhs = ah.mul_vec(&s.left[k]);
            let err: f64 = lhs
                .iter()
                .zip(&s.left[k])
                .map(|(x, l)| (x - s.values[k].conj() * l).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10 * a.norm_inf() * vec_norm(&s.left[k]));
        }
    }

    #[test]
    fn ordering_breaks_real_ties_by_imaginary_part() {
        let mut v = vec![c(1e-17, 0.0), c(0.0, -2.0), c(-1.0, 5.0)];
        sort_values(&mut v);
        assert_eq!(v[0], c(-1.0, 5.0));
        assert_eq!(v[1], c(0.0, -2.0));
    }

    #[test]
    fn rejects_oversized_input() {
        assert!(matches!(eig(&CMatrix::zeros(65)), Err(Error::Dimension { .. })));
    }
}

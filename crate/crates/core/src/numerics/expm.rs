//! Propagation `v -> exp(-i A t) v` for small dense generators.

use num_complex::Complex64 as C64;

use super::eig::{eig, Spectrum};
use super::matrix::{inner, CMatrix};
use crate::{Error, Result};

/// Pairs need at least this biorthogonal condition for the spectral path.
const SPECTRAL_MIN_CONDITION: f64 = 1e-4;

/// Caches whatever is needed to apply `exp(-i A t)` at many times.
#[derive(Debug, Clone)]
pub enum Propagator {
    Spectral(Spectrum),
    Taylor(CMatrix),
}

impl Propagator {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let spectrum = eig(a)?;
        if spectrum.min_condition() >= SPECTRAL_MIN_CONDITION {
            Ok(Self::Spectral(spectrum))
        } else {
            Ok(Self::Taylor(a.clone()))
        }
    }

    pub fn apply(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("propagation time must be finite and >= 0, got {t}")));
        }
        match self {
            Self::Spectral(s) => {
                let mut out = vec![C64::new(0.0, 0.0); v.len()];
                for k in 0..s.len() {
                    let coef = inner(&s.left[k], v) * (C64::new(0.0, -t) * s.values[k]).exp();
                    for (o, r) in out.iter_mut().zip(&s.right[k]) {
                        *o += coef * r;
                    }
                }
                Ok(out)
            }
            Self::Taylor(a) => Ok(expm_taylor(&a.scale(C64::new(0.0, -t))).mul_vec(v)),
        }
    }
}

/// `exp(-i a t) v`.
pub fn expm_times(a: &CMatrix, v: &[C64], t: f64) -> Result<Vec<C64>> {
    Propagator::new(a)?.apply(v, t)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm_taylor(m: &CMatrix) -> CMatrix {
    let n = m.dim();
    let norm = m.norm_inf();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = m.scale(C64::new(0.5f64.powi(squarings), 0.0));
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..40 {
        term = term.matmul(&b).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.norm_inf() <= 1e-18 * sum.norm_inf() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::vec_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_generator_leaves_vector_unchanged() {
        let v = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let out = expm_times(&CMatrix::zeros(2), &v, 3.0).unwrap();
        assert!(vec_norm(&[out[0] - v[0], out[1] - v[1]]) < 1e-15);
    }

    #[test]
    fn pure_decay() {
        let a = CMatrix::diagonal(&[c(0.0, -1.0)]);
        for t in [0.0, 0.5, 2.0, 7.0] {
            let out = expm_times(&a, &[c(1.0, 0.0)], t).unwrap();
            assert!((out[0] - c((-t).exp(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn defective_generator_uses_taylor_path() {
        // exp(-i t [[0,1],[0,0]]) = [[1, -i t],[0, 1]]
        let a = CMatrix::from_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let p = Propagator::new(&a).unwrap();
        assert!(matches!(p, Propagator::Taylor(_)));
        let out = p.apply(&[c(0.0, 0.0), c(1.0, 0.0)], 2.5).unwrap();
        assert!((out[0] - c(0.0, -2.5)).norm() < 1e-13);
        assert!((out[1] - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn spectral_and_taylor_paths_agree() {
        let a = CMatrix::from_fn(4, |i, j| c(((i + j) % 3) as f64 * 0.4, -0.1 * (i * j) as f64));
        let v: Vec<C64> = (0..4).map(|k| c(1.0, k as f64)).collect();
        let t = 1.7;
        let spectral = expm_times(&a, &v, t).unwrap();
        let taylor = expm_taylor(&a.scale(c(0.0, -t))).mul_vec(&v);
        let diff: Vec<C64> = spectral.iter().zip(&taylor).map(|(x, y)| x - y).collect();
        assert!(vec_norm(&diff) < 1e-10 * vec_norm(&taylor));
    }

    #[test]
    fn negative_time_is_rejected() {
        assert!(expm_times(&CMatrix::identity(1), &[c(1.0, 0.0)], -1.0).is_err());
    }
}

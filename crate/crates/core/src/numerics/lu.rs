//! LU factorisation with partial pivoting.

use num_complex::Complex64 as C64;

use super::matrix::CMatrix;
use crate::{Error, Result};

/// Relative pivot size below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.dim();
        let scale = a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmag > PIVOT_TOL * scale) {
                return Err(Error::Singular { pivot: pmag.max(0.0), scale });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves `a x = b`.
pub fn solve(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    Ok(Lu::new(a)?.solve(b))
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.dim();
    let lu = Lu::new(a)?;
    let mut inv = CMatrix::zeros(n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        e[j] = C64::new(1.0, 0.0);
        for (i, v) in lu.solve(&e).into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::vec_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0)];
        assert_eq!(solve(&CMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_inverse() {
        let a = CMatrix::diagonal(&[c(0.0, 2.0), c(3.0, 0.0)]);
        let x = solve(&a, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((x[0] - c(0.0, -0.5)).norm() < 1e-15);
        assert!((x[1] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn residual_contract() {
        let a = CMatrix::from_fn(5, |i, j| c(((i + 2 * j) % 5) as f64 - 1.5, (i as f64 * 0.3) - j as f64 * 0.1));
        let b: Vec<C64> = (0..5).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let x = solve(&a, &b).unwrap();
        let r: Vec<C64> = a.mul_vec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!(vec_norm(&r) <= 1e-10 * (a.norm_inf() * vec_norm(&x) + vec_norm(&b)));
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_real(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve(&a, &[c(1.0, 0.0), c(0.0, 0.0)]), Err(Error::Singular { .. })));
    }
}

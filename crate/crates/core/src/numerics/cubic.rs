//! Roots of complex cubics by Cardano's formula.

use num_complex::Complex64 as C64;

use super::eig::sort_values;
use crate::{Error, Result};

/// The three roots of a cubic, multiplicities included, in eigenvalue order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots {
    pub roots: [C64; 3],
}

/// Roots of `c3 x^3 + c2 x^2 + c1 x + c0`.
pub fn cardano(c3: C64, c2: C64, c1: C64, c0: C64) -> Result<CubicRoots> {
    if c3 == C64::new(0.0, 0.0) {
        return Err(Error::Degree);
    }
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;

    // x = y - a/3 removes the quadratic term: y^3 + p y + q = 0
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;

    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u3_plus = -q / 2.0 + disc;
    let u3_minus = -q / 2.0 - disc;
    let u3 = if u3_plus.norm() >= u3_minus.norm() { u3_plus } else { u3_minus };

    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = if u3.norm() == 0.0 {
        // p = q = 0: triple root
        [-shift; 3]
    } else {
        let u = u3.cbrt();
        let v = -p / (3.0 * u);
        let w2 = omega * omega;
        [u + v - shift, omega * u + w2 * v - shift, w2 * u + omega * v - shift]
    };

    for r in roots.iter_mut() {
        *r = polish(*r, a, b, c);
    }
    let mut v = roots.to_vec();
    sort_values(&mut v);
    Ok(CubicRoots { roots: [v[0], v[1], v[2]] })
}

fn monic(x: C64, a: C64, b: C64, c: C64) -> (C64, C64) {
    let f = ((x + a) * x + b) * x + c;
    let df = (3.0 * x + 2.0 * a) * x + b;
    (f, df)
}

/// Newton refinement; a step is kept only if it lowers the residual.
fn polish(mut x: C64, a: C64, b: C64, c: C64) -> C64 {
    for _ in 0..3 {
        let (f, df) = monic(x, a, b, c);
        if f.norm() == 0.0 || df.norm() == 0.0 {
            break;
        }
        let next = x - f / df;
        if monic(next, a, b, c).0.norm() < f.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// `|c3 x^3 + c2 x^2 + c1 x + c0|` relative to the coefficient scale at `x`.
pub fn relative_residual(coeffs: [C64; 4], x: C64) -> f64 {
    let [c3, c2, c1, c0] = coeffs;
    let val = ((c3 * x + c2) * x + c1) * x + c0;
    let ax = x.norm();
    let scale = c3.norm() * ax.powi(3) + c2.norm() * ax * ax + c1.norm() * ax + c0.norm();
    if scale == 0.0 {
        val.norm()
    } else {
        val.norm() / scale
    }
}

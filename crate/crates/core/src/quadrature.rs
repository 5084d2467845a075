//! Adaptive 15-point Gauss–Kronrod quadrature.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Default absolute tolerance.
pub const ABS_TOL: f64 = 1e-10;

/// Largest number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Piece { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// `∫_a^b f` to absolute accuracy `tol`, by global bisection of the worst piece.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    while error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not reach {tol:e} (estimate {error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
        }
        // Recompute the running error occasionally to shed accumulated rounding.
        if heap.len() % 64 == 0 {
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(value)
}

/// `∫_a^b f` after `x = c + r sin u`, which absorbs square-root behavior at both ends.
pub fn integrate_sqrt_ends(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    integrate(|u| f(c + r * u.sin()) * r * u.cos(), -FRAC_PI_2, FRAC_PI_2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(6) - 2.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (128.0 / 7.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn semicircle_moments() {
        let d = |x: f64| (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI);
        let m0 = integrate_sqrt_ends(d, -2.0, 2.0, 1e-12).unwrap();
        let m4 = integrate_sqrt_ends(|x| x.powi(4) * d(x), -2.0, 2.0, 1e-12).unwrap();
        assert!((m0 - 1.0).abs() < 1e-11);
        assert!((m4 - 2.0).abs() < 1e-11);
    }

    #[test]
    fn inverse_square_root_ends() {
        // Arcsine law on [-1, 1].
        let v = integrate_sqrt_ends(|x| 1.0 / (PI * (1.0 - x * x).max(0.0).sqrt()), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure() {
        assert!(matches!(integrate(|x| 1.0 / x, -1.0, 1.5, 1e-12), Err(Error::Numeric(_))));
    }
}

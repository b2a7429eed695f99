//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;
const TRAPEZOID_PANELS: usize = 64;

/// `J₀(z)` for real `z`, accurate to roughly 1e-13 absolute over the whole line.
///
/// Power series below |z| = 8, the Hankel expansion above |z| = 25, and in
/// between the trapezoid rule on `(1/π)∫₀^π cos(z cos θ) dθ`, which converges
/// geometrically because the integrand is periodic and entire.
pub fn j0(z: f64) -> f64 {
    let z = z.abs();
    if z < SERIES_LIMIT {
        series(z)
    } else if z < ASYMPTOTIC_LIMIT {
        trapezoid(z)
    } else {
        hankel(z)
    }
}

fn series(z: f64) -> f64 {
    let x = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= x / (k * k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-3) {
            return sum;
        }
        k += 1.0;
    }
}

fn trapezoid(z: f64) -> f64 {
    let n = TRAPEZOID_PANELS;
    let step = PI / n as f64;
    let mut sum = 0.5 * (z.cos() + (-z).cos());
    for k in 1..n {
        sum += (z * (k as f64 * step).cos()).cos();
    }
    sum / n as f64
}

fn hankel(z: f64) -> f64 {
    // a_k(0) = Π_{j≤k} (−(2j−1)²) / (k! 8^k); terms a_k / z^k.
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut previous = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= -odd * odd / (k as f64 * 8.0 * z);
        }
        if term.abs() > previous || term.abs() < 1e-18 {
            break;
        }
        previous = term.abs();
        // (−1)^⌊k/2⌋ alternation of the even and odd subseries.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let chi = z - FRAC_PI_4;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

//! Universal scaling functions of the Gaussian theory: c̃(u), c(y), c₂(y).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::quad::{integrate_points, integrate_to_infinity, oscillatory_tail, Estimate, Tolerance};
use crate::{Error, Result};

/// Past this `u`, `c̃` is smooth and close to its asymptote, so oscillatory
/// transforms switch to segment-wise extrapolation.
const OSCILLATION_START: f64 = 60.0;
const MAX_TAIL_SEGMENTS: usize = 400;

fn tolerance() -> Tolerance {
    Tolerance { absolute: 1e-15, relative: 1e-11, max_intervals: 4000 }
}

/// Dimensionless ladder block `b(v, u) = 1/√((1 − iv)² + 2u²)`, principal root.
pub fn ladder_block_dimensionless(v: f64, u: f64) -> Complex64 {
    let z = Complex64::new(1.0, -v).powu(2) + 2.0 * u * u;
    Complex64::new(1.0, 0.0) / z.sqrt()
}

/// Integrand of `c̃` written without the `1 − Re b` cancellation.
///
/// With `s = 1/b = (1 − iv) + δ`, `δ = 2w²/(s + 1 − iv)`, the ratio
/// `(Re b − |b|²)/(1 − Re b)` equals `Re δ / (Re δ + (Re δ)² + (v − Im δ)²)`.
fn ctilde_integrand(v: f64, w: f64) -> f64 {
    let base = Complex64::new(1.0, -v);
    let s = (base * base + 2.0 * w * w).sqrt();
    let delta = 2.0 * w * w / (s + base);
    let re = delta.re;
    let im = v - delta.im;
    let denom = re + re * re + im * im;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 / PI * re / denom
}

/// `c̃(u) = ∫₀^∞ (2/π) dv [Re b − |b|²]/[1 − Re b]` with `b = b(v, 2u)`.
pub fn bulk_scaling_ctilde(u: f64) -> Result<Estimate> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidConfig(format!("c̃ needs u > 0, got {u}")));
    }
    let w = 2.0 * u;
    let v0 = (1.0 + 2.0 * w * w).sqrt();
    // Lorentzian core of width ~w near v = 0 for small u; branch-point
    // feature near v0 for large u.
    let narrow = w.min(1.0);
    let end = 4.0 * v0 + 20.0;
    let mut points = vec![0.0, narrow, 4.0 * narrow, 16.0 * narrow, v0 - 2.0, v0 - 0.5, v0, v0 + 0.5, v0 + 2.0, end];
    points.retain(|&p| (0.0..=end).contains(&p));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let body = integrate_points("c̃ body", |v| ctilde_integrand(v, w), &points, tolerance())?;
    let tail = integrate_to_infinity("c̃ tail", |v| ctilde_integrand(v, w), end, tolerance())?;
    Ok(body + tail)
}

fn ctilde_value(u: f64) -> f64 {
    // u > 0 by construction at every call site; on failure propagate NaN
    // so the outer quadrature reports it.
    bulk_scaling_ctilde(u).map(|e| e.value).unwrap_or(f64::NAN)
}

/// Small-u asymptote `2u`.
pub fn ctilde_small(u: f64) -> f64 {
    2.0 * u
}

/// Large-u asymptote `1 − ln u / (2π√2 u)`.
pub fn ctilde_large(u: f64) -> f64 {
    1.0 - u.ln() / (2.0 * PI * SQRT_2 * u)
}

fn check(what: &str, est: Estimate, limit: f64, floor: f64) -> Result<Estimate> {
    if !est.value.is_finite() || est.error > (limit * est.value.abs()).max(floor) {
        return Err(Error::Quadrature { what: what.to_string(), estimate: est.value, error: est.error });
    }
    Ok(est)
}

fn log_breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    [0.01, 0.1, 1.0, 3.0, 10.0, 30.0].iter().copied().filter(|&p| p > lo && p < hi).collect()
}

/// Integral of `g` over `[0, end]` split at the zeros `first + k·spacing` of the
/// oscillating factor, with extra breakpoints where c̃ has structure.
fn segmented_body<F: FnMut(f64) -> f64>(what: &str, mut g: F, first: f64, spacing: f64, end: f64) -> Result<Estimate> {
    let mut points = vec![0.0];
    let mut z = first;
    while z < end * (1.0 - 1e-12) {
        points.push(z);
        z += spacing;
    }
    points.push(end);
    points.extend(log_breakpoints(0.0, end));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut total = Estimate::new(0.0, 0.0);
    for w in points.windows(2) {
        total = total + integrate_points(what, &mut g, w, tolerance())?;
    }
    Ok(total)
}

/// `c(y) = (1/π) ∫₀^∞ du [1 − c̃(u)] cos(uy)`.
pub fn realspace_c(y: f64) -> Result<Estimate> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidConfig(format!("c(y) needs y > 0, got {y}")));
    }
    let half = PI / y;
    let first = 0.5 * half;
    // Smallest zero of cos(uy) beyond the structured region.
    let k = ((OSCILLATION_START - first) / half).ceil().max(0.0);
    let end = first + k * half;
    let integrand = |u: f64| (1.0 - ctilde_value(u)) * (u * y).cos();
    let body = segmented_body("c(y) body", integrand, first, half, end)?;
    let tail = oscillatory_tail("c(y) tail", integrand, end, half, tolerance(), MAX_TAIL_SEGMENTS)?;
    let total = body + tail;
    check("c(y)", Estimate::new(total.value / PI, total.error / PI), 1e-4, 1e-12)
}

/// Small-y asymptote `ln²(1/y)/(4√2π²)`.
pub fn c_small(y: f64) -> f64 {
    (1.0 / y).ln().powi(2) / (4.0 * SQRT_2 * PI * PI)
}

/// Large-y asymptote `2/(πy²)`.
pub fn c_large(y: f64) -> f64 {
    2.0 / (PI * y * y)
}

/// `c₂(y) = (2/π) ∫₀^∞ du/u² · c̃(u) · (1 − cos uy)`.
pub fn cumulant_scaling_c2(y: f64) -> Result<Estimate> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidConfig(format!("c₂(y) needs y > 0, got {y}")));
    }
    let period = 2.0 * PI / y;
    let half = 0.5 * period;
    let k = (OSCILLATION_START / period).ceil().max(1.0);
    let end = k * period;
    let full = |u: f64| {
        let x = u * y;
        // 1 − cos x without cancellation.
        let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
        ctilde_value(u) * one_minus_cos / (u * u)
    };
    let body = segmented_body("c₂ body", full, half, half, end)?;
    let smooth = integrate_to_infinity("c₂ smooth tail", |u| ctilde_value(u) / (u * u), end, tolerance())?;
    let wave = oscillatory_tail(
        "c₂ oscillating tail",
        |u: f64| ctilde_value(u) * (u * y).cos() / (u * u),
        end,
        half,
        tolerance(),
        MAX_TAIL_SEGMENTS,
    )?;
    let value = body.value + smooth.value - wave.value;
    let error = body.error + smooth.error + wave.error;
    check("c₂(y)", Estimate::new(2.0 / PI * value, 2.0 / PI * error), 1e-5, 1e-12)
}

/// Small-y asymptote `y`.
pub fn c2_small(y: f64) -> f64 {
    y
}

/// Leading large-y growth `(4/π) ln y`.
pub fn c2_large(y: f64) -> f64 {
    4.0 / PI * y.ln()
}

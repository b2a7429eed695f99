//! Closed-form predictions: diffuson block, Gaussian and RG-corrected
//! correlators, diffusive spreading and entropy regimes.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::scaling::bulk_scaling_ctilde;
use crate::lattice::DerivedScales;
use crate::{Error, Result};

/// Slope of `g(q)` against `ln q` at one loop.
pub const ONE_LOOP_SLOPE: f64 = 1.0 / (4.0 * PI);
/// Weak-localization slope reported from simulations, twice the one-loop value.
pub const OBSERVED_SLOPE: f64 = 1.0 / (2.0 * PI);

/// `B(q, ω) = 1/√((1/τ₀ − iω)² + (4J sin(q/2))²)`, root with positive real part.
pub fn diffuson_block(q: f64, omega: f64, tau0: f64, hopping: f64) -> Complex64 {
    let z = Complex64::new(1.0 / tau0, -omega).powu(2) + (4.0 * hopping * (0.5 * q).sin()).powi(2);
    Complex64::new(1.0, 0.0) / z.sqrt()
}

/// `n(1−n)·c̃(u)` with the lattice argument `u = 2 l₀ sin(q/2)`.
pub fn gaussian_cq(q: f64, scales: &DerivedScales) -> Result<f64> {
    if !(q > 0.0 && q <= PI + 1e-12) {
        return Err(Error::InvalidConfig(format!("gaussian C(q) needs q in (0, π], got {q}")));
    }
    let variance = scales.occupation_variance();
    if variance == 0.0 {
        return Ok(0.0);
    }
    let u = 2.0 * scales.l0 * (0.5 * q).sin();
    Ok(variance * bulk_scaling_ctilde(u)?.value)
}

/// One-loop coupling `g(q) = g₀ − (1/4π) ln(1/(q l₀))`.
pub fn rg_coupling(q: f64, scales: &DerivedScales) -> f64 {
    scales.g0 - ONE_LOOP_SLOPE * (1.0 / (q * scales.l0)).ln()
}

/// Corrected cumulant `(2g₀/π) ln(l/l₀) − (1/4π) ln²(l/l₀)`.
pub fn rg_cumulant(l: f64, scales: &DerivedScales) -> f64 {
    let x = (l / scales.l0).ln();
    2.0 * scales.g0 / PI * x - ONE_LOOP_SLOPE * x * x
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgPrediction {
    pub q: Vec<f64>,
    pub g_of_q: Vec<f64>,
    /// Field renormalization, identically 1 at one loop.
    pub z_of_q: Vec<f64>,
    /// `Z² g |q|`.
    pub c_of_q: Vec<f64>,
    /// `q l₀ < 1 < q l_corr` and `g(q) ≥ 1`.
    pub q_valid: Vec<bool>,
    pub l: Vec<f64>,
    pub cumulant_of_l: Vec<f64>,
    /// `l₀ < l < l_corr` and `g(1/l) ≥ 1`.
    pub l_valid: Vec<bool>,
}

/// RG-corrected predictions on the given momenta and block lengths. Points
/// outside the perturbative window are computed but flagged invalid.
pub fn rg_corrected(qs: &[f64], ls: &[f64], scales: &DerivedScales) -> RgPrediction {
    let mut out = RgPrediction {
        q: qs.to_vec(),
        g_of_q: Vec::with_capacity(qs.len()),
        z_of_q: Vec::with_capacity(qs.len()),
        c_of_q: Vec::with_capacity(qs.len()),
        q_valid: Vec::with_capacity(qs.len()),
        l: ls.to_vec(),
        cumulant_of_l: Vec::with_capacity(ls.len()),
        l_valid: Vec::with_capacity(ls.len()),
    };
    for &q in qs {
        let g = rg_coupling(q, scales);
        let z = 1.0;
        out.g_of_q.push(g);
        out.z_of_q.push(z);
        out.c_of_q.push(z * z * g * q.abs());
        let window = q * scales.l0 < 1.0 && q.ln() + scales.ln_lcorr > 0.0;
        out.q_valid.push(window && g >= 1.0);
    }
    for &l in ls {
        out.cumulant_of_l.push(rg_cumulant(l, scales));
        let window = l > scales.l0 && l.ln() < scales.ln_lcorr;
        out.l_valid.push(window && rg_coupling(1.0 / l, scales) >= 1.0);
    }
    out
}

/// `n(1−n) e^{−x²/4D|t|} / √(4πD|t|)`.
pub fn diffusive_c0(x: f64, t: f64, diffusion: f64, filling: f64) -> Result<f64> {
    if t == 0.0 || !(diffusion > 0.0) {
        return Err(Error::InvalidConfig(format!("diffusive C0 needs t ≠ 0 and D > 0, got t={t}, D={diffusion}")));
    }
    let spread = 4.0 * diffusion * t.abs();
    Ok(filling * (1.0 - filling) * (-x * x / spread).exp() / (PI * spread).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyRegime {
    /// `l < l₀`: volume law of a heated Fermi gas.
    Ballistic,
    /// `l₀ ≤ l < l_corr`: logarithmic growth from the second cumulant.
    Diffusive,
    /// `l ≥ l_corr`: saturation at order `g₀²`.
    Saturated,
}

impl EntropyRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntropyRegime::Ballistic => "ballistic",
            EntropyRegime::Diffusive => "diffusive",
            EntropyRegime::Saturated => "saturated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPrediction {
    pub regime: EntropyRegime,
    pub value: f64,
    /// Order-of-magnitude band, only in the saturated regime.
    pub band: Option<(f64, f64)>,
}

/// Binary entropy `−[n ln n + (1−n) ln(1−n)]`.
pub fn binary_entropy(n: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(n) + term(1.0 - n)
}

pub fn entropy_prediction(l: f64, scales: &DerivedScales) -> EntropyPrediction {
    let n = scales.filling;
    if l < scales.l0 {
        EntropyPrediction { regime: EntropyRegime::Ballistic, value: binary_entropy(n) * l, band: None }
    } else if l.ln() < scales.ln_lcorr {
        let value = 4.0 * PI / 3.0 * n * (1.0 - n) * scales.l0 * (l / scales.l0).ln();
        EntropyPrediction { regime: EntropyRegime::Diffusive, value, band: None }
    } else {
        let g2 = scales.g0 * scales.g0;
        EntropyPrediction { regime: EntropyRegime::Saturated, value: g2, band: Some((0.1 * g2, 10.0 * g2)) }
    }
}

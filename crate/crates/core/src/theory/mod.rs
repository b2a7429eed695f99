//! Analytic predictions: scaling functions, the Wiener-Hopf boundary solver
//! and the RG-corrected formulas.

pub mod bessel;
pub mod predictions;
pub mod quad;
pub mod scaling;
pub mod wiener_hopf;

pub use predictions::{
    diffusive_c0, diffuson_block, entropy_prediction, gaussian_cq, rg_corrected, EntropyPrediction, EntropyRegime,
    RgPrediction,
};
pub use quad::Estimate;
pub use scaling::{bulk_scaling_ctilde, cumulant_scaling_c2, ladder_block_dimensionless, realspace_c};
pub use wiener_hopf::{wiener_hopf_dimensionless, wiener_hopf_solve, WienerHopfGrid, WienerHopfSolution};

use crate::{Error, Result};

/// Which universal function a [`TheoryCurve`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// `c̃(u)`.
    CTilde,
    /// `c(y)`.
    RealSpace,
    /// `c₂(y)`.
    Cumulant,
}

impl CurveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::CTilde => "ctilde",
            CurveKind::RealSpace => "c",
            CurveKind::Cumulant => "c2",
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<Estimate> {
        match self {
            CurveKind::CTilde => bulk_scaling_ctilde(x),
            CurveKind::RealSpace => realspace_c(x),
            CurveKind::Cumulant => cumulant_scaling_c2(x),
        }
    }
}

/// A scaling function on sorted abscissae with per-point quadrature error.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurve {
    pub kind: CurveKind,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub quad_error: Vec<f64>,
}

impl TheoryCurve {
    pub fn tabulate(kind: CurveKind, points: &[f64]) -> Result<Self> {
        let mut abscissae = points.to_vec();
        abscissae.sort_by(f64::total_cmp);
        abscissae.dedup();
        let mut values = Vec::with_capacity(abscissae.len());
        let mut quad_error = Vec::with_capacity(abscissae.len());
        for &x in &abscissae {
            let est = kind.evaluate(x)?;
            if !est.value.is_finite() || est.error > (1e-6 * est.value.abs()).max(1e-8) {
                return Err(Error::Quadrature { what: kind.name().to_string(), estimate: est.value, error: est.error });
            }
            values.push(est.value);
            quad_error.push(est.error);
        }
        Ok(TheoryCurve { kind, abscissae, values, quad_error })
    }
}

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_curve_is_sorted_and_accurate() {
        let curve = TheoryCurve::tabulate(CurveKind::CTilde, &[3.0, 0.1, 1.0, 0.1]).unwrap();
        assert_eq!(curve.abscissae, vec![0.1, 1.0, 3.0]);
        for (v, e) in curve.values.iter().zip(&curve.quad_error) {
            assert!(v.is_finite() && *e < 1e-6 * v.abs());
        }
        assert!(TheoryCurve::tabulate(CurveKind::Cumulant, &[-1.0]).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 100.0, 5);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[4] - 100.0).abs() < 1e-11 && (g[2] - 1.0).abs() < 1e-14);
    }
}

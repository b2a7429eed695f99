//! Tight-binding chain, its single-particle eigenbasis and the physical
//! scales set by the measurement rate.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    #[default]
    Periodic,
    Open,
}

/// Chain geometry and filling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Number of sites `L`.
    pub sites: usize,
    /// Hopping amplitude `J`.
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub boundary: BoundaryCondition,
    /// Target filling fraction `n`; the particle number is `round(n L)`.
    pub filling: f64,
}

fn default_hopping() -> f64 {
    1.0
}

impl LatticeConfig {
    pub fn new(sites: usize, hopping: f64, boundary: BoundaryCondition, filling: f64) -> Result<Self> {
        let config = Self {
            sites,
            hopping,
            boundary,
            filling,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn periodic(sites: usize, filling: f64) -> Result<Self> {
        Self::new(sites, 1.0, BoundaryCondition::Periodic, filling)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 sites, got {}", self.sites)));
        }
        if !(0.0..=1.0).contains(&self.filling) {
            return Err(Error::InvalidConfig(format!("filling {} outside [0, 1]", self.filling)));
        }
        if !self.hopping.is_finite() {
            return Err(Error::InvalidConfig("hopping must be finite".into()));
        }
        Ok(())
    }

    /// Particle number `round(n L)`.
    pub fn particle_number(&self) -> usize {
        ((self.filling * self.sites as f64).round() as usize).min(self.sites)
    }
}

/// Nearest-neighbour hopping matrix with `-J` on every bond.
pub fn build_hamiltonian(config: &LatticeConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let l = config.sites;
    let mut h = DMatrix::zeros(l, l);
    let bonds = match config.boundary {
        BoundaryCondition::Periodic => l,
        BoundaryCondition::Open => l - 1,
    };
    for x in 0..bonds {
        let y = (x + 1) % l;
        h[(x, y)] -= config.hopping;
        h[(y, x)] -= config.hopping;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Analytic plane waves `e^{2 pi i k x / L} / sqrt(L)` of a periodic ring;
    /// mode index equals momentum index.
    PlaneWave,
    /// Numerical eigenvectors sorted by ascending energy.
    Numerical,
}

/// Single-particle eigenmodes: column `k` of `modes` is the eigenvector with
/// energy `energies[k]`.
#[derive(Debug, Clone)]
pub struct SingleParticleBasis {
    pub energies: Vec<f64>,
    pub modes: DMatrix<Complex64>,
    pub kind: BasisKind,
    pub hopping: f64,
}

impl SingleParticleBasis {
    /// Plane waves for periodic chains, numerical diagonalization otherwise.
    pub fn for_lattice(config: &LatticeConfig) -> Result<Self> {
        match config.boundary {
            BoundaryCondition::Periodic => plane_wave_basis(config),
            BoundaryCondition::Open => diagonalize(config),
        }
    }

    pub fn sites(&self) -> usize {
        self.energies.len()
    }

    /// Indices of the `n` lowest modes; degenerate levels are filled in order
    /// of increasing mode (momentum) index.
    pub fn lowest_modes(&self, n: usize) -> Vec<usize> {
        let scale = self.hopping.abs().max(1.0);
        let mut order: Vec<usize> = (0..self.sites()).collect();
        order.sort_by(|&a, &b| {
            let (ea, eb) = (self.energies[a], self.energies[b]);
            if (ea - eb).abs() <= 1e-12 * scale {
                a.cmp(&b)
            } else {
                ea.total_cmp(&eb)
            }
        });
        let mut chosen = order[..n].to_vec();
        chosen.sort_unstable();
        chosen
    }
}

pub fn plane_wave_basis(config: &LatticeConfig) -> Result<SingleParticleBasis> {
    config.validate()?;
    let l = config.sites;
    let norm = 1.0 / (l as f64).sqrt();
    let energies = (0..l)
        .map(|m| -2.0 * config.hopping * (2.0 * PI * m as f64 / l as f64).cos())
        .collect();
    let modes = DMatrix::from_fn(l, l, |x, k| {
        // reduce k*x mod L before scaling so large chains keep full phase accuracy
        let phase = 2.0 * PI * ((k * x) % l) as f64 / l as f64;
        Complex64::from_polar(norm, phase)
    });
    Ok(SingleParticleBasis {
        energies,
        modes,
        kind: BasisKind::PlaneWave,
        hopping: config.hopping,
    })
}

/// Numerical diagonalization of the hopping matrix.
pub fn diagonalize(config: &LatticeConfig) -> Result<SingleParticleBasis> {
    let h = build_hamiltonian(config)?;
    let l = config.sites;
    let eig = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigensolver(format!("hopping matrix of size {l} did not converge")))?;
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let modes = DMatrix::from_fn(l, l, |x, k| Complex64::new(eig.eigenvectors[(x, order[k])], 0.0));
    Ok(SingleParticleBasis {
        energies,
        modes,
        kind: BasisKind::Numerical,
        hopping: config.hopping,
    })
}

/// `e^{-i xi_k dt}` for every mode.
pub fn propagator_phases(basis: &SingleParticleBasis, dt: f64) -> Vec<Complex64> {
    basis
        .energies
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -e * dt))
        .collect()
}

/// Scales generated by measurements at rate `gamma` per site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub gamma: f64,
    pub hopping: f64,
    pub filling: f64,
    /// Mean free time `1/(2 gamma)`.
    pub tau0: f64,
    /// Mean free path `v0 tau0 = J / (sqrt(2) gamma)`.
    pub l0: f64,
    /// Root-mean-square group velocity `sqrt(2) J`.
    pub v0: f64,
    /// Diffusion coefficient `v0^2 tau0 = J^2 / gamma`.
    pub diffusion: f64,
    /// Bare coupling `2 l0 n (1 - n)`.
    pub g0: f64,
    /// `ln l_corr = ln l0 + 4 pi g0`; kept in log space because `l_corr`
    /// overflows for rare measurements.
    pub ln_lcorr: f64,
    /// Maximal group velocity `2 J`.
    pub vmax: f64,
}

pub fn derived_scales(gamma: f64, hopping: f64, filling: f64) -> Result<DerivedScales> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidConfig(format!("measurement rate must be positive, got {gamma}")));
    }
    if !(0.0..=1.0).contains(&filling) {
        return Err(Error::InvalidConfig(format!("filling {filling} outside [0, 1]")));
    }
    let j = hopping.abs();
    let tau0 = 1.0 / (2.0 * gamma);
    let v0 = SQRT_2 * j;
    let l0 = v0 * tau0;
    let g0 = 2.0 * l0 * filling * (1.0 - filling);
    Ok(DerivedScales {
        gamma,
        hopping: j,
        filling,
        tau0,
        l0,
        v0,
        diffusion: j * j / gamma,
        g0,
        ln_lcorr: l0.ln() + 4.0 * PI * g0,
        vmax: 2.0 * j,
    })
}

impl DerivedScales {
    pub fn for_lattice(gamma: f64, config: &LatticeConfig) -> Result<Self> {
        derived_scales(gamma, config.hopping, config.filling)
    }

    /// `n (1 - n)`.
    pub fn occupation_variance(&self) -> f64 {
        self.filling * (1.0 - self.filling)
    }
}

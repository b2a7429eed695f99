//! Brute-force many-body oracle in the fixed-particle-number Fock sector.
//!
//! Basis states are bitstrings with bit `x` set when site `x` is occupied and
//! stand for `c^dag_{x_1} ... c^dag_{x_N} |0>` with `x_1 < ... < x_N`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, LatticeConfig};
use crate::state::{CorrelationMatrix, FORBIDDEN_THRESHOLD};

/// Largest sector dimension the oracle accepts.
pub const MAX_DIMENSION: usize = 10_000;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// Occupation bitstrings of `particles` fermions on `sites` sites.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub sites: usize,
    pub particles: usize,
    pub states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl FockBasis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        if sites == 0 || sites > 63 || particles > sites {
            return Err(Error::InvalidConfig(format!("{particles} particles on {sites} sites")));
        }
        let dim = binomial(sites, particles);
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(dim));
        }
        let states: Vec<u64> = (0u64..1 << sites)
            .filter(|s| s.count_ones() as usize == particles)
            .collect();
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self {
            sites,
            particles,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.index.get(&state).copied()
    }
}

/// `c^dag_i c_j |s>` as `(sign, s')`, or `None` if it vanishes.
pub fn hop(state: u64, i: usize, j: usize) -> Option<(f64, u64)> {
    if state & (1 << j) == 0 {
        return None;
    }
    let removed = state & !(1 << j);
    if removed & (1 << i) != 0 {
        return None;
    }
    let below = |s: u64, x: usize| (s & ((1u64 << x) - 1)).count_ones();
    let parity = below(state, j) + below(removed, i);
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, removed | (1 << i)))
}

/// Many-body Hamiltonian `sum_ij h_ij c^dag_i c_j` of the sector, diagonalized.
#[derive(Debug, Clone)]
pub struct ManyBodyHamiltonian {
    pub basis: Arc<FockBasis>,
    pub matrix: DMatrix<f64>,
    pub energies: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl ManyBodyHamiltonian {
    pub fn new(config: &LatticeConfig, basis: Arc<FockBasis>) -> Result<Self> {
        let h = build_hamiltonian(config)?;
        if h.nrows() != basis.sites {
            return Err(Error::InvalidConfig("lattice and Fock basis disagree on site count".into()));
        }
        let dim = basis.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (col, &s) in basis.states.iter().enumerate() {
            for i in 0..basis.sites {
                for j in 0..basis.sites {
                    if h[(i, j)] == 0.0 {
                        continue;
                    }
                    if let Some((sign, t)) = hop(s, i, j) {
                        let row = basis.index_of(t).expect("hop conserves particle number");
                        matrix[(row, col)] += sign * h[(i, j)];
                    }
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::try_new(matrix.clone(), 1e-15, 0)
            .ok_or_else(|| Error::Eigensolver(format!("many-body sector of dimension {dim}")))?;
        Ok(Self {
            basis,
            matrix,
            energies: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }
}

/// Amplitudes of a pure state in one particle-number sector.
#[derive(Debug, Clone)]
pub struct FockState {
    pub basis: Arc<FockBasis>,
    pub amplitudes: DVector<Complex64>,
}

impl FockState {
    pub fn basis_state(basis: Arc<FockBasis>, occupation: u64) -> Result<Self> {
        let i = basis
            .index_of(occupation)
            .ok_or_else(|| Error::InvalidConfig(format!("occupation {occupation:b} not in sector")))?;
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// Slater determinant of the columns of `orbitals` (sites x particles):
    /// amplitude `det[phi_k(x_i)]`.
    pub fn slater(basis: Arc<FockBasis>, orbitals: &DMatrix<Complex64>) -> Result<Self> {
        let n = basis.particles;
        if orbitals.nrows() != basis.sites || orbitals.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "orbital matrix {}x{} for {} sites and {n} particles",
                orbitals.nrows(),
                orbitals.ncols(),
                basis.sites
            )));
        }
        let amplitudes = DVector::from_iterator(
            basis.dim(),
            basis.states.iter().map(|&s| {
                let occupied: Vec<usize> = (0..basis.sites).filter(|&x| s & (1 << x) != 0).collect();
                if n == 0 {
                    return Complex64::new(1.0, 0.0);
                }
                DMatrix::from_fn(n, n, |i, k| orbitals[(occupied[i], k)]).determinant()
            }),
        );
        Ok(Self { basis, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability of site `site` being occupied.
    pub fn occupation(&self, site: usize) -> f64 {
        self.basis
            .states
            .iter()
            .zip(self.amplitudes.iter())
            .filter(|(s, _)| *s & (1 << site) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// `psi <- e^{-i H dt} psi`.
pub fn exact_evolve(state: &mut FockState, h: &ManyBodyHamiltonian, dt: f64) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("evolution step {dt} must be finite and >= 0")));
    }
    let v = &h.eigenvectors;
    let mut coeffs: DVector<Complex64> = DVector::zeros(h.energies.len());
    for k in 0..coeffs.len() {
        let mut c = Complex64::new(0.0, 0.0);
        for (i, a) in state.amplitudes.iter().enumerate() {
            c += a * v[(i, k)];
        }
        coeffs[k] = c * Complex64::from_polar(1.0, -h.energies[k] * dt);
    }
    for i in 0..state.amplitudes.len() {
        let mut a = Complex64::new(0.0, 0.0);
        for k in 0..coeffs.len() {
            a += coeffs[k] * v[(i, k)];
        }
        state.amplitudes[i] = a;
    }
    Ok(())
}

/// Occupation measurement with the shared threshold convention: outcome 1
/// iff `u < p1`. Returns the outcome and `p1`.
pub fn exact_measure(state: &mut FockState, site: usize, u: f64) -> Result<(u8, f64)> {
    if site >= state.basis.sites {
        return Err(Error::InvalidConfig(format!("site {site} outside chain of {}", state.basis.sites)));
    }
    let p1 = state.occupation(site) / state.norm().powi(2);
    let outcome = u8::from(u < p1);
    let weight = if outcome == 1 { p1 } else { 1.0 - p1 };
    if weight < FORBIDDEN_THRESHOLD {
        return Err(Error::ForbiddenOutcome {
            site,
            outcome,
            probability: weight,
        });
    }
    for (s, a) in state.basis.states.iter().zip(state.amplitudes.iter_mut()) {
        let occupied = s & (1 << site) != 0;
        if occupied != (outcome == 1) {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    let norm = state.norm();
    state.amplitudes /= Complex64::new(norm, 0.0);
    Ok((outcome, p1))
}

/// `G_xy = <psi| c^dag_x c_y |psi>`.
pub fn exact_correlation_matrix(state: &FockState) -> CorrelationMatrix {
    let l = state.basis.sites;
    let mut g = DMatrix::zeros(l, l);
    for (col, &s) in state.basis.states.iter().enumerate() {
        let a = state.amplitudes[col];
        for x in 0..l {
            for y in 0..l {
                if let Some((sign, t)) = hop(s, x, y) {
                    let row = state.basis.index_of(t).expect("hop conserves particle number");
                    g[(x, y)] += state.amplitudes[row].conj() * a * sign;
                }
            }
        }
    }
    CorrelationMatrix::site(g)
}

/// Entropy of the first `l` sites from the reduced density matrix, built
/// block by block in the subsystem particle number.
pub fn exact_entanglement_entropy(state: &FockState, l: usize) -> Result<f64> {
    let basis = &state.basis;
    if l > basis.sites {
        return Err(Error::InvalidConfig(format!("block {l} longer than chain {}", basis.sites)));
    }
    let mask_a = (1u64 << l) - 1;
    // sector of A -> (A patterns, B patterns, amplitude entries)
    let mut sectors: HashMap<u32, (Vec<u64>, Vec<u64>, Vec<(u64, u64, Complex64)>)> = HashMap::new();
    for (&s, &a) in basis.states.iter().zip(state.amplitudes.iter()) {
        let (sa, sb) = (s & mask_a, s & !mask_a);
        let entry = sectors.entry(sa.count_ones()).or_default();
        entry.2.push((sa, sb, a));
    }
    let mut entropy = 0.0;
    let mut keys: Vec<u32> = sectors.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let (pa, pb, entries) = sectors.get_mut(&key).expect("key from map");
        for &(sa, sb, _) in entries.iter() {
            pa.push(sa);
            pb.push(sb);
        }
        pa.sort_unstable();
        pa.dedup();
        pb.sort_unstable();
        pb.dedup();
        let mut m = DMatrix::<Complex64>::zeros(pa.len(), pb.len());
        for &(sa, sb, a) in entries.iter() {
            let i = pa.binary_search(&sa).expect("collected");
            let j = pb.binary_search(&sb).expect("collected");
            m[(i, j)] = a;
        }
        let rho = &m * m.adjoint();
        let eig = nalgebra::SymmetricEigen::try_new(rho, 1e-15, 0)
            .ok_or_else(|| Error::Eigensolver("reduced density matrix".into()))?;
        for &p in eig.eigenvalues.iter() {
            if p > 1e-300 {
                entropy -= p * p.ln();
            }
        }
    }
    Ok(entropy)
}

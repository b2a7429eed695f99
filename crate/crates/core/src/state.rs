//! Pure Gaussian states of the chain.
//!
//! The state is the correlation matrix `G_xy = <psi^dag_x psi_y>`. Internally
//! it is kept in the single-particle eigenmode basis and in an interaction
//! picture: the stored matrix `M` and a pending time `tau` represent
//! `G~ = Phi M Phi^dag` with `Phi = diag(e^{i xi_k tau})`. Free evolution then
//! only advances `tau`, and a measurement is a rank-two update of `M`.
//!
//! Only the upper triangle of `M` is updated by measurements; the lower
//! triangle is restored from it whenever the full matrix is needed, so the
//! stored state is Hermitian by construction.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BasisKind, LatticeConfig, SingleParticleBasis};

/// Events between drift-control passes.
pub const DEFAULT_CLEAN_INTERVAL: usize = 100;
/// Probabilities below this make an outcome forbidden.
pub const FORBIDDEN_THRESHOLD: f64 = 1e-12;
const CLAMP_TOLERANCE: f64 = 1e-8;
const TRACE_GUARD: f64 = 1e-8;
const PURITY_GUARD_PER_SITE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixBasis {
    Site,
    Eigenmode,
}

/// A correlation matrix together with the basis it is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub g: DMatrix<Complex64>,
    pub basis: MatrixBasis,
}

impl CorrelationMatrix {
    pub fn site(g: DMatrix<Complex64>) -> Self {
        Self { g, basis: MatrixBasis::Site }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.g[(i, i)].re).sum()
    }

    /// `max |g - g^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let l = self.dim();
        let mut worst = 0.0f64;
        for j in 0..l {
            for i in 0..=j {
                worst = worst.max((self.g[(i, j)] - self.g[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |g^2 - g|`, using Hermiticity to form `g^2` from column dot products.
    pub fn purity_defect(&self) -> f64 {
        let l = self.dim();
        let data = self.g.as_slice();
        let mut worst = 0.0f64;
        for j in 0..l {
            let cj = &data[j * l..(j + 1) * l];
            for i in 0..=j {
                let ci = &data[i * l..(i + 1) * l];
                let sq = dot_conj(ci, cj);
                worst = worst.max((sq - self.g[(i, j)]).norm());
            }
        }
        worst
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.g[(i, i)].re).collect()
    }
}

/// Result of one projective occupation measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub site: usize,
    pub outcome: u8,
    /// Probability of outcome 1 used for the draw.
    pub born_p1: f64,
    pub time: f64,
}

/// Cached `r = Phi^dag V^T e_site`, `a = M r` and `r^dag a` for one site and
/// one value of the pending time.
#[derive(Debug, Clone, Copy)]
struct Prepared {
    site: usize,
    pending: f64,
    raw_p: f64,
}

/// Complex vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, Default)]
struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn zeros(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    fn fill_zero(&mut self) {
        self.re.fill(0.0);
        self.im.fill(0.0);
    }

    fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    fn set(&mut self, i: usize, z: Complex64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    fn dot_conj(&self, other: &Split) -> Complex64 {
        split_dot_conj(&self.re, &self.im, &other.re, &other.im)
    }
}

/// Pure Gaussian state with lazy free evolution.
#[derive(Debug, Clone)]
pub struct GaussianState {
    basis: Arc<SingleParticleBasis>,
    /// Column-major `M`, upper triangle authoritative.
    m: Split,
    pending: f64,
    particles: usize,
    since_clean: usize,
    clean_interval: usize,
    r_hat: Split,
    a_hat: Split,
    r_next: Split,
    a_next: Split,
    prepared: Option<Prepared>,
}

impl GaussianState {
    fn from_mode_matrix(basis: Arc<SingleParticleBasis>, g: DMatrix<Complex64>) -> Self {
        let l = basis.sites();
        let trace: f64 = (0..l).map(|i| g[(i, i)].re).sum();
        let m = Split {
            re: g.iter().map(|z| z.re).collect(),
            im: g.iter().map(|z| z.im).collect(),
        };
        Self {
            basis,
            m,
            pending: 0.0,
            particles: trace.round().max(0.0) as usize,
            since_clean: 0,
            clean_interval: DEFAULT_CLEAN_INTERVAL,
            r_hat: Split::zeros(l),
            a_hat: Split::zeros(l),
            r_next: Split::zeros(l),
            a_next: Split::zeros(l),
            prepared: None,
        }
    }

    /// Slater determinant of the `round(n L)` lowest modes.
    pub fn fermi_sea(config: &LatticeConfig, basis: Arc<SingleParticleBasis>) -> Result<Self> {
        config.validate()?;
        let l = basis.sites();
        if l != config.sites {
            return Err(Error::InvalidConfig(format!(
                "basis has {l} sites, lattice has {}",
                config.sites
            )));
        }
        let mut m = DMatrix::zeros(l, l);
        for k in basis.lowest_modes(config.particle_number()) {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        Ok(Self::from_mode_matrix(basis, m))
    }

    /// Product state `diag(occupations)` in the site basis.
    pub fn product(basis: Arc<SingleParticleBasis>, occupations: &[bool]) -> Result<Self> {
        let l = basis.sites();
        if occupations.len() != l {
            return Err(Error::InvalidConfig(format!(
                "{} occupations for {l} sites",
                occupations.len()
            )));
        }
        let g = DMatrix::from_fn(l, l, |x, y| {
            if x == y && occupations[x] {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        Self::from_site_matrix(basis, &CorrelationMatrix::site(g))
    }

    /// Any correlation matrix; only its upper triangle is used.
    pub fn from_site_matrix(basis: Arc<SingleParticleBasis>, g: &CorrelationMatrix) -> Result<Self> {
        let l = basis.sites();
        if g.dim() != l || g.g.ncols() != l {
            return Err(Error::InvalidConfig(format!("matrix of size {} for {l} sites", g.dim())));
        }
        let m = match g.basis {
            MatrixBasis::Site => site_to_mode(&basis, &g.g),
            MatrixBasis::Eigenmode => g.g.clone(),
        };
        Ok(Self::from_mode_matrix(basis, m))
    }

    pub fn basis(&self) -> &Arc<SingleParticleBasis> {
        &self.basis
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Time of free evolution not yet folded into the stored matrix.
    pub fn pending_time(&self) -> f64 {
        self.pending
    }

    pub fn set_clean_interval(&mut self, events: usize) {
        self.clean_interval = events.max(1);
    }

    /// Free evolution by `dt`; O(1).
    pub fn evolve(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("evolution step {dt} must be finite and >= 0")));
        }
        self.pending += dt;
        Ok(())
    }

    /// Upper-triangle entry `(i, j)`, `i <= j`, of the interaction-picture matrix.
    fn upper(&self, i: usize, j: usize) -> Complex64 {
        self.m.get(j * self.sites() + i)
    }

    /// Full Hermitian interaction-picture matrix.
    pub fn interaction_matrix(&self) -> DMatrix<Complex64> {
        let l = self.sites();
        let mut g = DMatrix::zeros(l, l);
        for j in 0..l {
            for i in 0..j {
                let z = self.upper(i, j);
                g[(i, j)] = z;
                g[(j, i)] = z.conj();
            }
            g[(j, j)] = Complex64::new(self.upper(j, j).re, 0.0);
        }
        g
    }

    /// Eigenmode-basis correlation matrix at the current time.
    pub fn mode_matrix(&self) -> DMatrix<Complex64> {
        let l = self.sites();
        let phases: Vec<Complex64> = self
            .basis
            .energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, e * self.pending))
            .collect();
        let mut g = DMatrix::zeros(l, l);
        for j in 0..l {
            let pj = phases[j].conj();
            for i in 0..j {
                let z = phases[i] * self.upper(i, j) * pj;
                g[(i, j)] = z;
                g[(j, i)] = z.conj();
            }
            g[(j, j)] = Complex64::new(self.upper(j, j).re, 0.0);
        }
        g
    }

    /// Site-basis correlation matrix at the current time.
    pub fn site_matrix(&self) -> CorrelationMatrix {
        CorrelationMatrix::site(mode_to_site(&self.basis, &self.mode_matrix()))
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites() {
            return Err(Error::InvalidConfig(format!("site {site} outside chain of {}", self.sites())));
        }
        Ok(())
    }

    fn fill_r(basis: &SingleParticleBasis, site: usize, pending: f64, r: &mut Split) {
        for k in 0..basis.sites() {
            r.set(k, Complex64::from_polar(1.0, -basis.energies[k] * pending) * basis.modes[(site, k)]);
        }
    }

    fn validated(site: usize, raw: f64) -> Result<f64> {
        if !raw.is_finite() || !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&raw) {
            return Err(Error::StateCorruption {
                what: format!("occupation of site {site}"),
                value: raw,
            });
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    fn prepare(&mut self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        if let Some(p) = self.prepared {
            if p.site == site && p.pending.to_bits() == self.pending.to_bits() {
                return Self::validated(site, p.raw_p);
            }
        }
        let l = self.sites();
        Self::fill_r(&self.basis, site, self.pending, &mut self.r_hat);
        self.a_hat.fill_zero();
        let kernel = kernel();
        let (mre, mim) = (&mut self.m.re, &mut self.m.im);
        for (j, (cre, cim)) in mre.chunks_exact_mut(l).zip(mim.chunks_exact_mut(l)).enumerate() {
            kernel(&mut cre[..=j], &mut cim[..=j], None, Some((&self.r_hat, &mut self.a_hat)));
        }
        let raw_p = self.r_hat.dot_conj(&self.a_hat).re;
        self.prepared = Some(Prepared {
            site,
            pending: self.pending,
            raw_p,
        });
        Self::validated(site, raw_p)
    }

    /// Probability of finding site `site` occupied.
    pub fn born_probability(&mut self, site: usize) -> Result<f64> {
        self.prepare(site)
    }

    /// Project onto occupation `outcome` (0 or 1) of `site`.
    pub fn apply_measurement(&mut self, site: usize, outcome: u8) -> Result<()> {
        self.apply_inner(site, outcome, None)
    }

    /// As [`GaussianState::apply_measurement`], and also prepare the Born
    /// probability of `next_site` after a further free evolution by `dt` in
    /// the same pass over the matrix.
    pub fn apply_measurement_with_lookahead(&mut self, site: usize, outcome: u8, next_site: usize, dt: f64) -> Result<()> {
        self.apply_inner(site, outcome, Some((next_site, dt)))
    }

    fn apply_inner(&mut self, site: usize, outcome: u8, next: Option<(usize, f64)>) -> Result<()> {
        if outcome > 1 {
            return Err(Error::InvalidConfig(format!("outcome {outcome} is not 0 or 1")));
        }
        let p = self.prepare(site)?;
        let l = self.sites();
        let weight = if outcome == 1 { p } else { 1.0 - p };
        if weight < FORBIDDEN_THRESHOLD {
            return Err(Error::ForbiddenOutcome {
                site,
                outcome,
                probability: weight,
            });
        }
        if let Some((next_site, dt)) = next {
            self.check_site(next_site)?;
            if !(dt >= 0.0) || !dt.is_finite() {
                return Err(Error::InvalidConfig(format!("evolution step {dt} must be finite and >= 0")));
            }
        }
        // outcome 1: M - a a^dag / p + r r^dag
        // outcome 0: M + d d^dag / (1 - p) - r r^dag with d = r - a
        let (u_scale, r_scale) = if outcome == 1 {
            (-1.0 / p, 1.0)
        } else {
            for k in 0..l {
                self.a_hat.re[k] = self.r_hat.re[k] - self.a_hat.re[k];
                self.a_hat.im[k] = self.r_hat.im[k] - self.a_hat.im[k];
            }
            (1.0 / (1.0 - p), -1.0)
        };
        let next_pending = next.map(|(s, dt)| (s, self.pending + dt));
        if let Some((s, pending)) = next_pending {
            Self::fill_r(&self.basis, s, pending, &mut self.r_next);
            self.a_next.fill_zero();
        }
        let kernel = kernel();
        let (u, r) = (&self.a_hat, &self.r_hat);
        let (mre, mim) = (&mut self.m.re, &mut self.m.im);
        for (j, (cre, cim)) in mre.chunks_exact_mut(l).zip(mim.chunks_exact_mut(l)).enumerate() {
            let coeffs = (u.get(j).conj() * u_scale, r.get(j).conj() * r_scale);
            let acc = next_pending.map(|_| (&self.r_next, &mut self.a_next));
            kernel(&mut cre[..=j], &mut cim[..=j], Some((u, r, coeffs)), acc);
        }
        self.prepared = None;
        if let Some((s, pending)) = next_pending {
            std::mem::swap(&mut self.r_hat, &mut self.r_next);
            std::mem::swap(&mut self.a_hat, &mut self.a_next);
            self.prepared = Some(Prepared {
                site: s,
                pending,
                raw_p: self.r_hat.dot_conj(&self.a_hat).re,
            });
        }
        self.since_clean += 1;
        if self.since_clean >= self.clean_interval {
            self.clean()?;
        }
        Ok(())
    }

    /// Draw the outcome with threshold `u` (outcome 1 iff `u < p1`) and apply it.
    pub fn sample_measurement(&mut self, site: usize, u: f64, time: f64) -> Result<MeasurementOutcome> {
        self.sample_inner(site, u, time, None)
    }

    /// As [`GaussianState::sample_measurement`] with a lookahead to the next event.
    pub fn sample_measurement_with_lookahead(
        &mut self,
        site: usize,
        u: f64,
        time: f64,
        next_site: usize,
        dt: f64,
    ) -> Result<MeasurementOutcome> {
        self.sample_inner(site, u, time, Some((next_site, dt)))
    }

    fn sample_inner(&mut self, site: usize, u: f64, time: f64, next: Option<(usize, f64)>) -> Result<MeasurementOutcome> {
        let p = self.prepare(site)?;
        let outcome = u8::from(u < p);
        self.apply_inner(site, outcome, next)?;
        Ok(MeasurementOutcome {
            site,
            outcome,
            born_p1: p,
            time,
        })
    }

    /// Trace and purity guards. Hermiticity holds by construction because
    /// only the upper triangle is stored.
    pub fn clean(&mut self) -> Result<()> {
        self.since_clean = 0;
        let l = self.sites();
        let trace: f64 = (0..l).map(|i| self.upper(i, i).re).sum();
        if (trace - self.particles as f64).abs() > TRACE_GUARD {
            return Err(Error::StateCorruption {
                what: "trace drift".into(),
                value: trace - self.particles as f64,
            });
        }
        // Tr G - |G|_F^2 = sum lambda (1 - lambda) vanishes only for projectors
        let mut frob = 0.0;
        for j in 0..l {
            let base = j * l;
            let off: f64 = (base..base + j).map(|k| self.m.re[k].powi(2) + self.m.im[k].powi(2)).sum();
            frob += 2.0 * off + self.m.re[base + j].powi(2);
        }
        if (trace - frob).abs() > PURITY_GUARD_PER_SITE * l as f64 {
            return Err(Error::StateCorruption {
                what: "purity".into(),
                value: trace - frob,
            });
        }
        Ok(())
    }

    /// Upper triangle of the interaction-picture matrix in column order
    /// (real and imaginary parts), pending time and events since the last
    /// drift-control pass.
    pub fn raw_parts(&self) -> (Vec<f64>, Vec<f64>, f64, usize) {
        let l = self.sites();
        let mut re = Vec::with_capacity(l * (l + 1) / 2);
        let mut im = Vec::with_capacity(l * (l + 1) / 2);
        for j in 0..l {
            re.extend_from_slice(&self.m.re[j * l..=j * l + j]);
            im.extend_from_slice(&self.m.im[j * l..=j * l + j]);
        }
        (re, im, self.pending, self.since_clean)
    }

    /// Rebuild from [`GaussianState::raw_parts`].
    pub fn from_raw_parts(
        basis: Arc<SingleParticleBasis>,
        re: &[f64],
        im: &[f64],
        pending: f64,
        since_clean: usize,
        particles: usize,
    ) -> Result<Self> {
        let l = basis.sites();
        let packed = l * (l + 1) / 2;
        if re.len() != packed || im.len() != packed {
            return Err(Error::Checkpoint(format!(
                "{} packed entries for {l} sites, expected {packed}",
                re.len()
            )));
        }
        let mut s = Self::from_mode_matrix(basis, DMatrix::zeros(l, l));
        let mut k = 0;
        for j in 0..l {
            for i in 0..=j {
                s.m.re[j * l + i] = re[k];
                s.m.im[j * l + i] = im[k];
                k += 1;
            }
        }
        s.pending = pending;
        s.since_clean = since_clean;
        s.particles = particles;
        Ok(s)
    }
}

type Update<'a> = Option<(&'a Split, &'a Split, (Complex64, Complex64))>;
type Accumulate<'a> = Option<(&'a Split, &'a mut Split)>;
type Kernel = fn(&mut [f64], &mut [f64], Update<'_>, Accumulate<'_>);

/// Process the upper part `0..=j` of column `j`: optionally apply
/// `col += cu u + cr r` (zeroing the imaginary part of the diagonal), then
/// optionally accumulate this column's share of `a += M x`, namely
/// `a[..=j] += col x_j` and `a[j] += col[..j]^dag x[..j]`.
#[inline(always)]
fn column_kernel(cre: &mut [f64], cim: &mut [f64], update: Update<'_>, acc: Accumulate<'_>) {
    let n = cre.len();
    let j = n - 1;
    let cim = &mut cim[..n];
    if let Some((u, r, (cu, cr))) = update {
        let (ur, ui, rr, ri) = (&u.re[..n], &u.im[..n], &r.re[..n], &r.im[..n]);
        for i in 0..n {
            cre[i] += cu.re * ur[i] - cu.im * ui[i] + (cr.re * rr[i] - cr.im * ri[i]);
            cim[i] += cu.re * ui[i] + cu.im * ur[i] + (cr.re * ri[i] + cr.im * rr[i]);
        }
        cim[j] = 0.0;
    }
    if let Some((x, a)) = acc {
        let xj = x.get(j);
        let (are, aim) = (&mut a.re[..n], &mut a.im[..n]);
        for i in 0..n {
            are[i] += xj.re * cre[i] - xj.im * cim[i];
            aim[i] += xj.re * cim[i] + xj.im * cre[i];
        }
        let d = split_dot_conj(&cre[..j], &cim[..j], &x.re[..j], &x.im[..j]);
        a.re[j] += d.re;
        a.im[j] += d.im;
    }
}

fn portable_kernel(cre: &mut [f64], cim: &mut [f64], update: Update<'_>, acc: Accumulate<'_>) {
    column_kernel(cre, cim, update, acc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn avx2_kernel_inner(cre: &mut [f64], cim: &mut [f64], update: Update<'_>, acc: Accumulate<'_>) {
    column_kernel(cre, cim, update, acc)
}

#[cfg(target_arch = "x86_64")]
fn avx2_kernel(cre: &mut [f64], cim: &mut [f64], update: Update<'_>, acc: Accumulate<'_>) {
    // SAFETY: selected by `kernel` only after runtime detection of AVX2.
    unsafe { avx2_kernel_inner(cre, cim, update, acc) }
}

/// Widest available kernel. No fused multiply-add is enabled, so every
/// variant rounds identically.
fn kernel() -> Kernel {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            return avx2_kernel;
        }
    }
    portable_kernel
}

/// `sum conj(a_i) b_i` over split storage, with four independent partial sums.
#[inline(always)]
fn split_dot_conj(are: &[f64], aim: &[f64], bre: &[f64], bim: &[f64]) -> Complex64 {
    let n = are.len();
    let (are, aim, bre, bim) = (&are[..n], &aim[..n], &bre[..n], &bim[..n]);
    let mut sr = [0.0f64; 4];
    let mut si = [0.0f64; 4];
    let chunks = n / 4;
    for (((a, b), c), d) in are
        .chunks_exact(4)
        .zip(aim.chunks_exact(4))
        .zip(bre.chunks_exact(4))
        .zip(bim.chunks_exact(4))
    {
        for k in 0..4 {
            sr[k] += a[k] * c[k] + b[k] * d[k];
            si[k] += a[k] * d[k] - b[k] * c[k];
        }
    }
    for i in 4 * chunks..n {
        sr[0] += are[i] * bre[i] + aim[i] * bim[i];
        si[0] += are[i] * bim[i] - aim[i] * bre[i];
    }
    Complex64::new((sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3]))
}

/// `sum conj(a_i) b_i`.
pub(crate) fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(2);
    let mut cb = b.chunks_exact(2);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0].re * y[0].re + x[0].im * y[0].im;
        acc[1] += x[0].re * y[0].im - x[0].im * y[0].re;
        acc[2] += x[1].re * y[1].re + x[1].im * y[1].im;
        acc[3] += x[1].re * y[1].im - x[1].im * y[1].re;
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        acc[0] += x.re * y.re + x.im * y.im;
        acc[1] += x.re * y.im - x.im * y.re;
    }
    Complex64::new(acc[0] + acc[2], acc[1] + acc[3])
}

/// `G = V^* G~ V^T`.
pub fn mode_to_site(basis: &SingleParticleBasis, gt: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    match basis.kind {
        BasisKind::PlaneWave => fft_sandwich(gt, FftDirection::Forward, FftDirection::Inverse),
        BasisKind::Numerical => {
            let v = &basis.modes;
            v.conjugate() * gt * v.transpose()
        }
    }
}

/// `G~ = V^T G V^*`.
pub fn site_to_mode(basis: &SingleParticleBasis, g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    match basis.kind {
        BasisKind::PlaneWave => fft_sandwich(g, FftDirection::Inverse, FftDirection::Forward),
        BasisKind::Numerical => {
            let v = &basis.modes;
            v.transpose() * g * v.conjugate()
        }
    }
}

/// Discrete Fourier transform over the row index with direction `rows`, then
/// over the column index with direction `cols`, divided by `L`.
fn fft_sandwich(m: &DMatrix<Complex64>, rows: FftDirection, cols: FftDirection) -> DMatrix<Complex64> {
    let l = m.nrows();
    let mut planner = FftPlanner::new();
    let mut b = m.clone();
    planner.plan_fft(l, rows).process(b.as_mut_slice());
    let mut bt = b.transpose();
    planner.plan_fft(l, cols).process(bt.as_mut_slice());
    let mut out = bt.transpose();
    out.scale_mut(1.0 / l as f64);
    out
}

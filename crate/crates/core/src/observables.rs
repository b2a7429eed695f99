//! Observables of a Gaussian state: pair density correlator, particle-number
//! cumulants of a block, entanglement entropy and full counting statistics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::CorrelationMatrix;

/// Imaginary parts above this signal a non-Hermitian input.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;
/// Eigenvalues of a block are accepted within this distance of `[0, 1]`.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-8;
/// Eigenvalues are clamped to `[EPS, 1 - EPS]` inside the entropy logarithms.
pub const ENTROPY_EPS: f64 = 1e-14;
/// Highest supported cumulant order.
pub const MAX_CUMULANT_ORDER: usize = 12;

/// `2 sin(q / 2)`.
pub fn q_tilde(q: f64) -> f64 {
    2.0 * (q / 2.0).sin()
}

/// Chord length `(L / pi) sin(pi l / L)`.
pub fn l_tilde(l: f64, sites: usize) -> f64 {
    let big = sites as f64;
    big / PI * (PI * l / big).sin()
}

/// Translation-averaged pair correlator on a ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    /// `C(r) = (1/L) sum_x C_{x, x+r}`, `r = 0..L`.
    pub c_real: Vec<f64>,
    /// `C(q_m) = sum_r C(r) e^{-i q_m r}`.
    pub c_momentum: Vec<f64>,
    /// `q_m = 2 pi m / L`.
    pub q: Vec<f64>,
    pub q_tilde: Vec<f64>,
}

impl PairCorrelation {
    /// `sum_r C(r)`.
    pub fn sum_rule(&self) -> f64 {
        self.c_real.iter().sum()
    }
}

/// `C_xy = delta_xy G_xx - G_xy G_yx`, averaged at fixed separation and
/// Fourier transformed.
pub fn pair_correlator(g: &CorrelationMatrix) -> Result<PairCorrelation> {
    let l = g.dim();
    let mut c_complex = vec![Complex64::new(0.0, 0.0); l];
    for x in 0..l {
        c_complex[0] += g.g[(x, x)];
        for r in 0..l {
            let y = (x + r) % l;
            c_complex[r] -= g.g[(x, y)] * g.g[(y, x)];
        }
    }
    let inv = 1.0 / l as f64;
    let mut worst_im = 0.0f64;
    for z in c_complex.iter_mut() {
        *z *= inv;
        worst_im = worst_im.max(z.im.abs());
    }
    if worst_im > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(worst_im));
    }
    let c_real: Vec<f64> = c_complex.iter().map(|z| z.re).collect();
    let mut spectrum: Vec<Complex64> = c_real.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(l).process(&mut spectrum);
    let worst_im = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst_im > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(worst_im));
    }
    let q: Vec<f64> = (0..l).map(|m| 2.0 * PI * m as f64 / l as f64).collect();
    Ok(PairCorrelation {
        c_real,
        c_momentum: spectrum.iter().map(|z| z.re).collect(),
        q_tilde: q.iter().map(|&q| q_tilde(q)).collect(),
        q,
    })
}

/// Site occupations `n_x = Re G_xx`.
pub fn density_profile(g: &CorrelationMatrix) -> Vec<f64> {
    g.diagonal()
}

/// `G_A` for the block `offset, offset + 1, ..., offset + l - 1` (mod L).
pub fn block(g: &CorrelationMatrix, offset: usize, l: usize) -> Result<DMatrix<Complex64>> {
    let big = g.dim();
    if l == 0 || l > big {
        return Err(Error::InvalidConfig(format!("block length {l} outside 1..={big}")));
    }
    Ok(DMatrix::from_fn(l, l, |i, j| g.g[((offset + i) % big, (offset + j) % big)]))
}

/// `Tr[G_A (1 - G_A)]` for the leading block of length `l`.
pub fn second_cumulant(g: &CorrelationMatrix, l: usize) -> Result<f64> {
    let big = g.dim();
    if l == 0 || l > big {
        return Err(Error::InvalidConfig(format!("block length {l} outside 1..={big}")));
    }
    let mut value = 0.0;
    for x in 0..l {
        value += g.g[(x, x)].re;
        for y in 0..l {
            value -= g.g[(x, y)].norm_sqr();
        }
    }
    if cfg!(debug_assertions) {
        let mut via_pairs = Complex64::new(0.0, 0.0);
        for x in 0..l {
            via_pairs += g.g[(x, x)];
            for y in 0..l {
                via_pairs -= g.g[(x, y)] * g.g[(y, x)];
            }
        }
        debug_assert!((via_pairs.re - value).abs() < 1e-10 * value.abs().max(1.0));
    }
    Ok(value)
}

/// Block cumulant from the translation-averaged correlator,
/// `sum_{|d| < l} (l - |d|) C(d)`.
pub fn averaged_second_cumulant(c_real: &[f64], l: usize) -> f64 {
    let big = c_real.len();
    let mut value = l as f64 * c_real[0];
    for d in 1..l.min(big) {
        let w = (l - d) as f64;
        value += w * (c_real[d % big] + c_real[(big - d % big) % big]);
    }
    value
}

/// Eigenvalues of a Hermitian block, checked against `[0, 1]`.
pub fn block_eigenvalues(g_a: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let eig = nalgebra::SymmetricEigen::try_new(g_a, 1e-15, 0)
        .ok_or_else(|| Error::Eigensolver("block correlation matrix".into()))?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    for &lambda in &values {
        if !(-EIGENVALUE_TOLERANCE..=1.0 + EIGENVALUE_TOLERANCE).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::EigenvalueOutOfRange(lambda));
        }
    }
    Ok(values)
}

/// Entropy together with a record of eigenvalues that needed clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyValue {
    pub entropy: f64,
    /// Number of eigenvalues within `ENTROPY_EPS` of 0 or 1.
    pub clamped: usize,
    /// Upper bound on the entropy those eigenvalues could have contributed.
    pub clamp_bound: f64,
}

fn binary_entropy(lambda: f64) -> f64 {
    -(lambda * lambda.ln() + (1.0 - lambda) * (1.0 - lambda).ln())
}

/// `-sum [lambda ln lambda + (1 - lambda) ln(1 - lambda)]`.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> EntropyValue {
    let per_mode_bound = binary_entropy(ENTROPY_EPS);
    let mut out = EntropyValue::default();
    for &lambda in eigenvalues {
        if lambda <= ENTROPY_EPS || lambda >= 1.0 - ENTROPY_EPS {
            out.clamped += 1;
            out.clamp_bound += per_mode_bound;
            continue;
        }
        out.entropy += binary_entropy(lambda);
    }
    out
}

/// Von Neumann entropy of the leading block of length `l`.
pub fn entanglement_entropy(g: &CorrelationMatrix, l: usize) -> Result<f64> {
    let eig = block_eigenvalues(block(g, 0, l)?)?;
    Ok(entropy_from_eigenvalues(&eig).entropy)
}

/// Cumulants `kappa_1..=kappa_order` of one Bernoulli(lambda) variable.
fn bernoulli_cumulants(lambda: f64, order: usize, binom: &[Vec<f64>]) -> Vec<f64> {
    // all raw moments equal lambda
    let mut kappa = vec![0.0; order + 1];
    for n in 1..=order {
        let mut s = 0.0;
        for k in 1..n {
            s += binom[n - 1][k - 1] * kappa[k];
        }
        kappa[n] = lambda - lambda * s;
    }
    kappa
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows
}

/// Even cumulants `C^(2), C^(4), ..., C^(max_order)` of the block particle
/// number, from the eigenvalues of `G_A`.
pub fn fcs_cumulants_from_eigenvalues(eigenvalues: &[f64], max_order: usize) -> Result<Vec<f64>> {
    if max_order < 2 || max_order % 2 != 0 || max_order > MAX_CUMULANT_ORDER {
        return Err(Error::CumulantOrder(max_order));
    }
    let binom = binomials(max_order);
    let mut total = vec![0.0; max_order + 1];
    for &lambda in eigenvalues {
        let kappa = bernoulli_cumulants(lambda.clamp(0.0, 1.0), max_order, &binom);
        for (t, k) in total.iter_mut().zip(&kappa) {
            *t += k;
        }
    }
    Ok((2..=max_order).step_by(2).map(|n| total[n]).collect())
}

/// Even cumulants of the particle number in the leading block of length `l`.
pub fn fcs_cumulants(g: &CorrelationMatrix, l: usize, max_order: usize) -> Result<Vec<f64>> {
    let eig = block_eigenvalues(block(g, 0, l)?)?;
    fcs_cumulants_from_eigenvalues(&eig, max_order)
}

/// `zeta(2q)` for `q = 1..=6`.
pub fn zeta_even(q: usize) -> f64 {
    match q {
        1 => PI.powi(2) / 6.0,
        2 => PI.powi(4) / 90.0,
        3 => PI.powi(6) / 945.0,
        4 => PI.powi(8) / 9450.0,
        5 => PI.powi(10) / 93555.0,
        6 => 691.0 * PI.powi(12) / 638_512_875.0,
        _ => panic!("zeta(2q) tabulated only for q <= 6"),
    }
}

/// Partial sums `sum_{k<=q} 2 zeta(2k) C^(2k)` of the cumulant series for
/// the entropy; `cumulants` starts at `C^(2)`.
pub fn klich_levitov_entropy(cumulants: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    cumulants
        .iter()
        .take(MAX_CUMULANT_ORDER / 2)
        .enumerate()
        .map(|(i, c)| {
            sum += 2.0 * zeta_even(i + 1) * c;
            sum
        })
        .collect()
}

/// Which block lengths and offsets a profile is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub lengths: Vec<usize>,
    /// Block starting sites; results are averaged over them.
    pub offsets: Vec<usize>,
    /// Highest even cumulant order to record (0 for none).
    pub max_order: usize,
    pub keep_eigenvalues: bool,
}

impl ProfileOptions {
    /// All `l <= L/2` up to `L = 512`, otherwise a logarithmic grid.
    pub fn default_for(sites: usize) -> Self {
        Self {
            lengths: default_lengths(sites),
            offsets: vec![0],
            max_order: 0,
            keep_eigenvalues: false,
        }
    }
}

pub fn default_lengths(sites: usize) -> Vec<usize> {
    let half = (sites / 2).max(1);
    if sites <= 512 {
        return (1..=half).collect();
    }
    log_lengths(half, 48)
}

/// About `points` distinct integers, logarithmically spaced on `1..=max`.
pub fn log_lengths(max: usize, points: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..points)
        .map(|i| {
            let t = i as f64 / (points.max(2) - 1) as f64;
            ((max as f64).powf(t)).round() as usize
        })
        .filter(|&l| l >= 1 && l <= max)
        .collect();
    out.dedup();
    out
}

/// Block observables per length.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CumulantProfile {
    pub lengths: Vec<usize>,
    pub l_tilde: Vec<f64>,
    pub c2: Vec<f64>,
    pub entropy: Vec<f64>,
    /// Per length, `C^(2), C^(4), ...` up to the requested order.
    pub higher: Vec<Vec<f64>>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub clamped: usize,
    pub clamp_bound: f64,
}

/// Entropy and cumulants of blocks, averaged over the requested offsets.
pub fn cumulant_profile(g: &CorrelationMatrix, options: &ProfileOptions) -> Result<CumulantProfile> {
    let big = g.dim();
    let offsets: &[usize] = if options.offsets.is_empty() { &[0] } else { &options.offsets };
    let weight = 1.0 / offsets.len() as f64;
    let mut out = CumulantProfile {
        lengths: options.lengths.clone(),
        ..Default::default()
    };
    for &l in &options.lengths {
        let (mut c2, mut s) = (0.0, 0.0);
        let mut higher = vec![0.0; options.max_order / 2];
        let mut kept = Vec::new();
        for &offset in offsets {
            let eig = block_eigenvalues(block(g, offset, l)?)?;
            c2 += weight * eig.iter().map(|x| x * (1.0 - x)).sum::<f64>();
            let e = entropy_from_eigenvalues(&eig);
            s += weight * e.entropy;
            out.clamped += e.clamped;
            out.clamp_bound += weight * e.clamp_bound;
            if options.max_order >= 2 {
                for (h, c) in higher.iter_mut().zip(fcs_cumulants_from_eigenvalues(&eig, options.max_order)?) {
                    *h += weight * c;
                }
            }
            if options.keep_eigenvalues {
                kept.extend(eig);
            }
        }
        out.l_tilde.push(l_tilde(l as f64, big));
        out.c2.push(c2);
        out.entropy.push(s);
        if options.max_order >= 2 {
            out.higher.push(higher);
        }
        if options.keep_eigenvalues {
            out.eigenvalues.push(kept);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, LatticeConfig, SingleParticleBasis};
    use crate::state::GaussianState;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(bits: &[f64]) -> CorrelationMatrix {
        CorrelationMatrix::site(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            bits.len(),
            bits.iter().map(|&b| c(b)),
        )))
    }

    /// Steady-ish random pure state from a short trajectory.
    fn monitored_state(l: usize, seed: u64, events: usize) -> CorrelationMatrix {
        let cfg = LatticeConfig::periodic(l, 0.5).unwrap();
        let b = Arc::new(SingleParticleBasis::for_lattice(&cfg).unwrap());
        let mut s = GaussianState::fermi_sea(&cfg, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..events {
            s.evolve(rng.random::<f64>() * 0.3).unwrap();
            s.sample_measurement(rng.random_range(0..l), rng.random(), 0.0).unwrap();
        }
        s.site_matrix()
    }

    #[test]
    fn product_state_has_no_pair_correlation() {
        let pc = pair_correlator(&diag(&[1.0, 0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(pc.c_real.iter().all(|x| x.abs() < 1e-15));
        assert!(pc.c_momentum.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn two_site_pair_correlator() {
        let g = CorrelationMatrix::site(DMatrix::from_element(2, 2, c(0.5)));
        let pc = pair_correlator(&g).unwrap();
        assert!((pc.c_real[0] - 0.25).abs() < 1e-15);
        assert!((pc.c_real[1] + 0.25).abs() < 1e-15);
        assert!(pc.c_momentum[0].abs() < 1e-15);
        assert!((pc.c_momentum[1] - 0.5).abs() < 1e-15);
        assert!((pc.q_tilde[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_input_is_flagged() {
        let mut g = DMatrix::from_element(3, 3, c(1.0 / 3.0));
        g[(0, 1)] = Complex64::new(1.0 / 3.0, 0.01);
        assert!(matches!(pair_correlator(&CorrelationMatrix::site(g)), Err(Error::ImaginaryResidue(_))));
    }

    #[test]
    fn sum_rule_and_cumulant_identities_on_monitored_states() {
        for seed in 0..4 {
            let g = monitored_state(24, seed, 200);
            let pc = pair_correlator(&g).unwrap();
            assert!(pc.sum_rule().abs() < 1e-10);
            // c2 two ways, leading block
            for l in [1, 5, 12, 24] {
                let direct = second_cumulant(&g, l).unwrap();
                let eig = block_eigenvalues(block(&g, 0, l).unwrap()).unwrap();
                let spectral: f64 = eig.iter().map(|x| x * (1.0 - x)).sum();
                assert!((direct - spectral).abs() < 1e-10);
                let fcs = fcs_cumulants(&g, l, 4).unwrap();
                assert!((fcs[0] - direct).abs() < 1e-10);
            }
            assert!(second_cumulant(&g, 24).unwrap().abs() < 1e-10);
            // averaged correlator equals the offset-averaged block cumulant
            for l in [1, 3, 7, 12] {
                let mean: f64 = (0..24)
                    .map(|o| {
                        let eig = block_eigenvalues(block(&g, o, l).unwrap()).unwrap();
                        eig.iter().map(|x| x * (1.0 - x)).sum::<f64>()
                    })
                    .sum::<f64>()
                    / 24.0;
                assert!((averaged_second_cumulant(&pc.c_real, l) - mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_cumulant_examples() {
        assert_eq!(second_cumulant(&diag(&[1.0, 0.0, 1.0]), 2).unwrap(), 0.0);
        assert!((second_cumulant(&diag(&[0.5]), 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(second_cumulant(&diag(&[0.5]), 2).is_err());
    }

    #[test]
    fn entropy_examples() {
        let e = entropy_from_eigenvalues(&[0.5]);
        assert!((e.entropy - 0.6931471805599453).abs() < 1e-15);
        assert_eq!(entanglement_entropy(&diag(&[1.0, 0.0, 1.0, 0.0]), 2).unwrap(), 0.0);
        let e = entropy_from_eigenvalues(&[0.0, 1.0, 1e-16, 0.3]);
        assert_eq!(e.clamped, 3);
        assert!(e.clamp_bound > 0.0 && e.clamp_bound < 1e-11);
        let bad = CorrelationMatrix::site(DMatrix::from_element(1, 1, c(1.1)));
        assert!(matches!(entanglement_entropy(&bad, 1), Err(Error::EigenvalueOutOfRange(_))));
    }

    #[test]
    fn entropy_bounds_and_complement_symmetry() {
        let g = monitored_state(20, 9, 150);
        for l in 1..20 {
            let s = entanglement_entropy(&g, l).unwrap();
            let comp = {
                let eig = block_eigenvalues(block(&g, l, 20 - l).unwrap()).unwrap();
                entropy_from_eigenvalues(&eig).entropy
            };
            assert!(s >= 0.0);
            assert!(s <= l.min(20 - l) as f64 * 2f64.ln() + 1e-12);
            assert!((s - comp).abs() < 1e-9, "l={l}: {s} vs {comp}");
        }
    }

    #[test]
    fn bernoulli_cumulants_at_half() {
        let k = fcs_cumulants_from_eigenvalues(&[0.5], 12).unwrap();
        let expect = [0.25, -0.125, 0.25, -17.0 / 16.0, 7.75];
        for (a, b) in k.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(fcs_cumulants_from_eigenvalues(&[0.5], 14).is_err());
        assert!(fcs_cumulants_from_eigenvalues(&[0.5], 3).is_err());
    }

    #[test]
    fn fourth_cumulant_matches_numerical_differentiation() {
        // ln(1 + lambda (e^{i mu} - 1)) = sum_n kappa_n (i mu)^n / n!;
        // evaluate on the imaginary axis mu = -i s, where it is real
        let lambda = 0.37;
        let f = |s: f64| (1.0 + lambda * (s.exp() - 1.0)).ln();
        let h = 0.05;
        // fourth derivative, O(h^4) accurate stencil
        let d4 = (-f(3.0 * h) + 12.0 * f(2.0 * h) - 39.0 * f(h) + 56.0 * f(0.0) - 39.0 * f(-h)
            + 12.0 * f(-2.0 * h)
            - f(-3.0 * h))
            / (6.0 * h.powi(4));
        let k = fcs_cumulants_from_eigenvalues(&[lambda], 4).unwrap();
        assert!((k[1] - d4).abs() < 1e-5, "{} vs {d4}", k[1]);
    }

    #[test]
    fn cumulants_add_over_modes() {
        let a = fcs_cumulants_from_eigenvalues(&[0.2], 12).unwrap();
        let b = fcs_cumulants_from_eigenvalues(&[0.7], 12).unwrap();
        let ab = fcs_cumulants_from_eigenvalues(&[0.2, 0.7], 12).unwrap();
        for i in 0..6 {
            assert!((a[i] + b[i] - ab[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn klich_levitov_first_term() {
        let sums = klich_levitov_entropy(&[0.25]);
        assert!((sums[0] - PI * PI / 12.0).abs() < 1e-15);
        assert!((sums[0] - 0.8224670334241132).abs() < 1e-12);
    }

    #[test]
    fn cumulants_and_partial_sums_match_series_expansion() {
        // reference: Taylor coefficients of sum ln(1 + lambda (e^s - 1)),
        // expanded symbolically in exact arithmetic
        let eig = [0.05, 0.1, 0.92, 0.97, 0.02];
        let cumulants = [0.2598, 0.15777492, -0.09828157944, -0.262693472520432, 1.7035443062956673664, -1.1198005916735469339];
        let partial = [
            0.85470774113433845639,
            1.1962346643601707189,
            0.99626249843185575460,
            0.46873336367431034577,
            3.8792105818580006484,
            1.6390582627749122678,
        ];
        let cum = fcs_cumulants_from_eigenvalues(&eig, 12).unwrap();
        let sums = klich_levitov_entropy(&cum);
        for i in 0..6 {
            assert!((cum[i] - cumulants[i]).abs() < 1e-12 * cumulants[i].abs().max(1.0), "order {}", 2 * i + 2);
            assert!((sums[i] - partial[i]).abs() < 1e-12 * partial[i].abs().max(1.0));
        }
    }

    #[test]
    fn zeta_values() {
        assert!((zeta_even(1) - 1.6449340668482264).abs() < 1e-15);
        assert!((zeta_even(6) - 1.0002460865533080).abs() < 1e-15);
    }

    #[test]
    fn density_profile_of_fermi_sea() {
        let cfg = LatticeConfig::new(10, 1.0, BoundaryCondition::Periodic, 0.3).unwrap();
        let b = Arc::new(SingleParticleBasis::for_lattice(&cfg).unwrap());
        let g = GaussianState::fermi_sea(&cfg, b).unwrap().site_matrix();
        let n = density_profile(&g);
        assert!(n.iter().all(|x| (x - 0.3).abs() < 1e-13));
        assert!((n.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rescaled_lengths() {
        assert!((l_tilde(64.0, 128) - 128.0 / PI).abs() < 1e-12);
        assert!((l_tilde(1.0, 1_000_000) - 1.0).abs() < 1e-9);
        assert!((q_tilde(PI) - 2.0).abs() < 1e-15);
        let grid = log_lengths(500, 40);
        assert_eq!(grid[0], 1);
        assert_eq!(*grid.last().unwrap(), 500);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_lengths(16), (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn profile_matches_direct_calls() {
        let g = monitored_state(16, 3, 100);
        let opts = ProfileOptions {
            lengths: vec![2, 5, 8],
            offsets: vec![0],
            max_order: 6,
            keep_eigenvalues: true,
        };
        let p = cumulant_profile(&g, &opts).unwrap();
        for (i, &l) in opts.lengths.iter().enumerate() {
            assert!((p.entropy[i] - entanglement_entropy(&g, l).unwrap()).abs() < 1e-12);
            assert!((p.c2[i] - second_cumulant(&g, l).unwrap()).abs() < 1e-10);
            assert_eq!(p.higher[i].len(), 3);
            assert_eq!(p.eigenvalues[i].len(), l);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn pure_state_invariants(seed in any::<u64>(), l in 4usize..20) {
                let g = monitored_state(l, seed, 40);
                let pc = pair_correlator(&g).unwrap();
                prop_assert!(pc.sum_rule().abs() < 1e-10);
                for len in 1..l {
                    let eig = block_eigenvalues(block(&g, 0, len).unwrap()).unwrap();
                    let s = entropy_from_eigenvalues(&eig).entropy;
                    let c2: f64 = eig.iter().map(|x| x * (1.0 - x)).sum();
                    prop_assert!(c2 >= -1e-12);
                    prop_assert!(s >= 0.0);
                    if eig.iter().any(|&x| x > 1e-6 && x < 1.0 - 1e-6) {
                        prop_assert!(klich_levitov_entropy(&[c2])[0] > 0.0);
                    }
                    let rest = block_eigenvalues(block(&g, len, l - len).unwrap()).unwrap();
                    prop_assert!((s - entropy_from_eigenvalues(&rest).entropy).abs() < 1e-9);
                }
            }
        }
    }
}

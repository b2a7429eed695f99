//! Melting of a domain wall: the trajectory-averaged density is fitted to
//! lattice diffusion on the ring.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ensemble::{run_summaries, worker_count};
use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::trajectory::{InitialState, SimConfig};

/// Largest accepted relative disagreement between early- and late-time fits.
pub const MAX_DRIFT: f64 = 0.25;
/// Search range for `D / J^2`.
pub const D_RANGE: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainWallConfig {
    pub sites: usize,
    pub hopping: f64,
    pub gamma: f64,
    /// First snapshot, default `10 tau0`.
    pub t_min: Option<f64>,
    /// Last snapshot, default `40 tau0`.
    pub t_max: Option<f64>,
    pub snapshots: usize,
    pub n_trajectories: usize,
    pub master_seed: u64,
}

impl DomainWallConfig {
    pub fn new(gamma: f64, hopping: f64) -> Self {
        Self {
            sites: 256,
            hopping,
            gamma,
            t_min: None,
            t_max: None,
            snapshots: 10,
            n_trajectories: 40,
            master_seed: 0,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        let tau0 = 1.0 / (2.0 * self.gamma);
        (self.t_min.unwrap_or(10.0 * tau0), self.t_max.unwrap_or(40.0 * tau0))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let (t0, t1) = self.window();
        if self.snapshots < 4 || !(t1 > t0) || !(t0 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need at least 4 snapshots in a window t_min < t_max (got {} in [{t0}, {t1}])",
                self.snapshots
            )));
        }
        let mut c = SimConfig::new(LatticeConfig::periodic(self.sites, 0.5)?, self.gamma);
        c.lattice.hopping = self.hopping;
        c.t_warmup = Some(t0);
        c.sample_interval = Some((t1 - t0) / (self.snapshots - 1) as f64);
        c.n_samples = self.snapshots;
        c.n_trajectories = self.n_trajectories;
        c.master_seed = self.master_seed;
        c.record_profile = true;
        c.initial = InitialState::DomainWall;
        c.entropy_lengths = Some(Vec::new());
        c.max_cumulant_order = 0;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionFit {
    pub d_fit: f64,
    /// Jackknife over trajectories.
    pub d_stderr: f64,
    /// `J^2 / gamma`.
    pub d_expected: f64,
    /// Fits to the first and second half of the snapshots.
    pub d_early: f64,
    pub d_late: f64,
    pub rms_residual: f64,
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub sites: usize,
    pub gamma: f64,
    pub hopping: f64,
}

/// Lattice diffusion `dn_x/dt = D (n_{x+1} + n_{x-1} - 2 n_x)` on a ring.
#[derive(Clone)]
pub struct RingDiffusion {
    spectrum: Vec<Complex64>,
    decay: Vec<f64>,
    planner: Arc<dyn rustfft::Fft<f64>>,
}

impl RingDiffusion {
    pub fn new(initial: &[f64]) -> Self {
        let l = initial.len();
        let mut planner = FftPlanner::new();
        let mut spectrum: Vec<Complex64> = initial.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        planner.plan_fft_forward(l).process(&mut spectrum);
        let decay = (0..l)
            .map(|m| 2.0 * (1.0 - (2.0 * std::f64::consts::PI * m as f64 / l as f64).cos()))
            .collect();
        Self {
            spectrum,
            decay,
            planner: planner.plan_fft_inverse(l),
        }
    }

    pub fn profile(&self, d: f64, t: f64) -> Vec<f64> {
        let l = self.spectrum.len();
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.decay)
            .map(|(z, k2)| z * (-d * k2 * t).exp())
            .collect();
        self.planner.process(&mut buf);
        buf.iter().map(|z| z.re / l as f64).collect()
    }

    fn sse(&self, d: f64, times: &[f64], profiles: &[&[f64]]) -> f64 {
        times
            .iter()
            .zip(profiles)
            .map(|(&t, p)| self.profile(d, t).iter().zip(p.iter()).map(|(m, x)| (m - x).powi(2)).sum::<f64>())
            .sum()
    }

    /// Least-squares `D` by golden-section search in `ln D` over `range`.
    /// Returns `(D, hit_bound)`.
    pub fn fit(&self, times: &[f64], profiles: &[&[f64]], range: (f64, f64)) -> (f64, bool) {
        let (mut a, mut b) = (range.0.ln(), range.1.ln());
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let f = |x: f64| self.sse(x.exp(), times, profiles);
        let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-10 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        let x = 0.5 * (a + b);
        let edge = 1e-6;
        (x.exp(), x - range.0.ln() < edge || range.1.ln() - x < edge)
    }
}

/// Fits trajectory-averaged profiles. `per_trajectory[i][s]` is the density
/// of trajectory `i` at `times[s]`.
pub fn fit_profiles(
    initial: &[f64],
    times: &[f64],
    per_trajectory: &[Vec<Vec<f64>>],
    hopping: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    let n = per_trajectory.len();
    if n == 0 || times.is_empty() {
        return Err(Error::FitRejected("no profiles".into()));
    }
    let l = initial.len();
    let model = RingDiffusion::new(initial);
    let range = (D_RANGE.0 * hopping * hopping, D_RANGE.1 * hopping * hopping);
    let sum: Vec<Vec<f64>> = (0..times.len())
        .map(|s| (0..l).map(|x| per_trajectory.iter().map(|p| p[s][x]).sum()).collect())
        .collect();
    let mean: Vec<Vec<f64>> = sum.iter().map(|row| row.iter().map(|v| v / n as f64).collect()).collect();
    let refs: Vec<&[f64]> = mean.iter().map(Vec::as_slice).collect();
    let (d, at_bound) = model.fit(times, &refs, range);
    if at_bound {
        return Err(Error::FitRejected(format!("D reached the search bound ({d:e})")));
    }
    let half = times.len() / 2;
    let (d_early, _) = model.fit(&times[..half], &refs[..half], range);
    let (d_late, _) = model.fit(&times[half..], &refs[half..], range);
    let drift = (d_late - d_early).abs() / d;
    if drift > MAX_DRIFT {
        return Err(Error::FitRejected(format!(
            "early and late fits disagree: D = {d_early:.4} vs {d_late:.4} (relative {drift:.3}); profile is not diffusive"
        )));
    }
    let mut stderr = f64::NAN;
    if n >= 2 {
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let rows: Vec<Vec<f64>> = sum
                    .iter()
                    .enumerate()
                    .map(|(s, row)| {
                        row.iter()
                            .zip(&per_trajectory[i][s])
                            .map(|(a, b)| (a - b) / (n - 1) as f64)
                            .collect()
                    })
                    .collect();
                let r: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                model.fit(times, &r, range).0
            })
            .collect();
        let m = loo.iter().sum::<f64>() / n as f64;
        stderr = ((n - 1) as f64 / n as f64 * loo.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt();
    }
    let points = (times.len() * l) as f64;
    let rms = (model.sse(d, times, &refs) / points).sqrt();
    Ok((d, stderr, d_early, d_late, rms))
}

pub fn domain_wall_experiment(config: &DomainWallConfig) -> Result<DiffusionFit> {
    domain_wall_experiment_with_workers(config, worker_count())
}

pub fn domain_wall_experiment_with_workers(config: &DomainWallConfig, workers: usize) -> Result<DiffusionFit> {
    let sim = config.sim_config()?;
    let summaries = run_summaries(&sim, workers)?;
    let l = config.sites;
    let initial: Vec<f64> = (0..l).map(|x| if x < l / 2 { 1.0 } else { 0.0 }).collect();
    let times: Vec<f64> = (0..sim.n_samples).map(|s| sim.sample_time(s)).collect();
    let profiles: Vec<Vec<Vec<f64>>> = summaries.into_iter().map(|s| s.density).collect();
    let (d_fit, d_stderr, d_early, d_late, rms_residual) = fit_profiles(&initial, &times, &profiles, config.hopping)?;
    Ok(DiffusionFit {
        d_fit,
        d_stderr,
        d_expected: config.hopping * config.hopping / config.gamma,
        d_early,
        d_late,
        rms_residual,
        times,
        trajectories: config.n_trajectories,
        sites: l,
        gamma: config.gamma,
        hopping: config.hopping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(l: usize) -> Vec<f64> {
        (0..l).map(|x| if x < l / 2 { 1.0 } else { 0.0 }).collect()
    }

    /// Explicit Euler with small steps as an independent propagator.
    fn euler(initial: &[f64], d: f64, t: f64) -> Vec<f64> {
        let l = initial.len();
        let steps = (t / 1e-3).ceil() as usize;
        let h = t / steps as f64;
        let mut n = initial.to_vec();
        for _ in 0..steps {
            let prev = n.clone();
            for x in 0..l {
                n[x] += h * d * (prev[(x + 1) % l] + prev[(x + l - 1) % l] - 2.0 * prev[x]);
            }
        }
        n
    }

    #[test]
    fn ring_propagator_matches_direct_integration() {
        let init = step(32);
        let model = RingDiffusion::new(&init);
        let exact = model.profile(1.7, 2.0);
        let direct = euler(&init, 1.7, 2.0);
        for (a, b) in exact.iter().zip(&direct) {
            assert!((a - b).abs() < 2e-3);
        }
        let total: f64 = exact.iter().sum();
        assert!((total - 16.0).abs() < 1e-10);
        assert_eq!(model.profile(1.0, 0.0).iter().map(|x| x.round()).collect::<Vec<_>>(), init);
    }

    #[test]
    fn recovers_synthetic_diffusion_constant() {
        let init = step(64);
        let model = RingDiffusion::new(&init);
        let times = [2.0, 4.0, 6.0, 8.0];
        let profiles: Vec<Vec<Vec<f64>>> = (0..5)
            .map(|i| {
                times
                    .iter()
                    .map(|&t| {
                        model
                            .profile(3.0, t)
                            .iter()
                            .enumerate()
                            .map(|(x, v)| v + 1e-3 * (((i * 31 + x * 7) % 13) as f64 - 6.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let (d, err, early, late, _) = fit_profiles(&init, &times, &profiles, 1.0).unwrap();
        assert!((d - 3.0).abs() < 0.02, "{d}");
        assert!(err < 0.05);
        assert!((early - late).abs() < 0.05);
    }

    #[test]
    fn ballistic_spreading_is_rejected() {
        // width growing linearly in t mimics a free front
        let init = step(128);
        let model = RingDiffusion::new(&init);
        let times = [2.0, 4.0, 8.0, 16.0];
        let profiles = vec![times.iter().map(|&t| model.profile(t, t)).collect::<Vec<_>>()];
        assert!(matches!(fit_profiles(&init, &times, &profiles, 1.0), Err(Error::FitRejected(_))));
    }

    #[test]
    fn free_chain_fit_is_rejected() {
        let mut cfg = DomainWallConfig::new(1e-6, 1.0);
        cfg.sites = 128;
        cfg.t_min = Some(4.0);
        cfg.t_max = Some(20.0);
        cfg.n_trajectories = 1;
        assert!(matches!(
            domain_wall_experiment_with_workers(&cfg, 1),
            Err(Error::FitRejected(_))
        ));
    }

    #[test]
    fn strong_measurement_gives_expected_constant() {
        // gamma = 2: D = 0.5, short window keeps the test fast
        let mut cfg = DomainWallConfig::new(2.0, 1.0);
        cfg.sites = 64;
        cfg.n_trajectories = 150;
        cfg.master_seed = 4;
        let fit = domain_wall_experiment_with_workers(&cfg, 1).unwrap();
        assert!((fit.d_fit / fit.d_expected - 1.0).abs() < 0.15, "{fit:?}");
        assert!(fit.d_stderr > 0.0 && fit.d_stderr < 0.1 * fit.d_expected);
    }
}

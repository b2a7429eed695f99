//! Ensembles of trajectories with streaming statistics.
//!
//! Samples are first averaged in time inside each trajectory; the ensemble
//! statistics (mean, variance, standard error) are over trajectories. Work is
//! spread over a rayon pool, and the per-trajectory summaries are folded into
//! the accumulator in index order, so the result does not depend on the
//! number of workers.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SingleParticleBasis;
use crate::observables::{klich_levitov_entropy, q_tilde};
use crate::trajectory::{detect_steady_state, SimConfig, TrajectoryOutput, TrajectoryRunner};

/// Tolerance, in pooled standard errors, of the steady-state check.
pub const STEADY_STATE_TOLERANCE: f64 = 2.0;

/// Componentwise streaming mean and sum of squared deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "observable dimension changed");
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Pairwise combination of two disjoint sets of observations.
    pub fn merge(&mut self, other: &Welford) {
        assert_eq!(other.dim(), self.dim(), "observable dimension changed");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.dim() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased variance; NaN with fewer than two observations.
    pub fn variance(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|&s| if self.count < 2 { f64::NAN } else { s / (n - 1.0) })
            .collect()
    }

    pub fn stderr(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.variance().into_iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Time averages of one trajectory, the unit the ensemble statistics run over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: u64,
    pub events: u64,
    pub samples: u64,
    pub cq: Vec<f64>,
    pub c2: Vec<f64>,
    pub entropy: Vec<f64>,
    /// Per order `2, 4, ...`, one value per entropy length.
    pub higher: Vec<Vec<f64>>,
    /// Half-chain (longest recorded block) entropy per sample.
    pub half_chain: Vec<f64>,
    /// Per sample, when profiles are recorded.
    pub density: Vec<Vec<f64>>,
    pub max_sum_rule: f64,
    pub max_purity_defect: f64,
    pub clamped: u64,
}

fn time_average<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut n = 0usize;
    for row in rows {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        n += 1;
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

impl TrajectorySummary {
    pub fn from_output(config: &SimConfig, out: &TrajectoryOutput) -> Self {
        let s = &out.samples;
        let l = config.lattice.sites;
        let lengths = config.entropy_lengths();
        let orders = config.max_cumulant_order / 2;
        let half_pos = lengths.iter().enumerate().max_by_key(|(_, &l)| l).map(|(i, _)| i);
        let higher = (0..orders)
            .map(|k| {
                let rows: Vec<Vec<f64>> = s.iter().map(|r| r.profile.higher.iter().map(|h| h[k]).collect()).collect();
                time_average(rows.iter().map(Vec::as_slice), lengths.len())
            })
            .collect();
        Self {
            index: out.index,
            events: out.event_count,
            samples: s.len() as u64,
            cq: time_average(s.iter().map(|r| r.c_momentum.as_slice()), l),
            c2: time_average(s.iter().map(|r| r.c2.as_slice()), l / 2),
            entropy: time_average(s.iter().map(|r| r.profile.entropy.as_slice()), lengths.len()),
            higher,
            half_chain: half_pos.map(|i| s.iter().map(|r| r.profile.entropy[i]).collect()).unwrap_or_default(),
            density: s.iter().filter_map(|r| r.density.clone()).collect(),
            max_sum_rule: s.iter().map(|r| r.sum_rule().abs()).fold(0.0, f64::max),
            max_purity_defect: s.iter().map(|r| r.purity_defect).fold(0.0, f64::max),
            clamped: s.iter().map(|r| r.profile.clamped as u64).sum(),
        }
    }
}

/// Ensemble statistics over trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAccumulator {
    pub sites: usize,
    /// `q_m = 2 pi m / L`, `m = 0..L`.
    pub q: Vec<f64>,
    pub cumulant_lengths: Vec<usize>,
    pub entropy_lengths: Vec<usize>,
    pub sample_times: Vec<f64>,
    pub cq: Welford,
    pub c2: Welford,
    pub entropy: Welford,
    pub higher: Vec<Welford>,
    pub half_chain: Welford,
    /// One per sample index; empty unless profiles are recorded.
    pub density: Vec<Welford>,
    pub trajectories: u64,
    pub samples: u64,
    pub events: u64,
    pub max_sum_rule: f64,
    pub max_purity_defect: f64,
    pub clamped: u64,
}

impl EnsembleAccumulator {
    pub fn new(config: &SimConfig) -> Self {
        let l = config.lattice.sites;
        let lengths = config.entropy_lengths();
        let n_ent = lengths.len();
        Self {
            sites: l,
            q: (0..l).map(|m| 2.0 * std::f64::consts::PI * m as f64 / l as f64).collect(),
            cumulant_lengths: config.cumulant_lengths(),
            entropy_lengths: lengths,
            sample_times: (0..config.n_samples).map(|s| config.sample_time(s)).collect(),
            cq: Welford::new(l),
            c2: Welford::new(l / 2),
            entropy: Welford::new(n_ent),
            higher: (0..config.max_cumulant_order / 2).map(|_| Welford::new(n_ent)).collect(),
            half_chain: Welford::new(if n_ent == 0 { 0 } else { config.n_samples }),
            density: if config.record_profile {
                (0..config.n_samples).map(|_| Welford::new(l)).collect()
            } else {
                Vec::new()
            },
            trajectories: 0,
            samples: 0,
            events: 0,
            max_sum_rule: 0.0,
            max_purity_defect: 0.0,
            clamped: 0,
        }
    }

    pub fn add(&mut self, s: &TrajectorySummary) {
        self.cq.push(&s.cq);
        self.c2.push(&s.c2);
        self.entropy.push(&s.entropy);
        for (w, h) in self.higher.iter_mut().zip(&s.higher) {
            w.push(h);
        }
        if self.half_chain.dim() > 0 {
            self.half_chain.push(&s.half_chain);
        }
        for (w, d) in self.density.iter_mut().zip(&s.density) {
            w.push(d);
        }
        self.trajectories += 1;
        self.samples += s.samples;
        self.events += s.events;
        self.max_sum_rule = self.max_sum_rule.max(s.max_sum_rule);
        self.max_purity_defect = self.max_purity_defect.max(s.max_purity_defect);
        self.clamped += s.clamped;
    }

    /// Combines disjoint ensembles of the same configuration.
    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        self.cq.merge(&other.cq);
        self.c2.merge(&other.c2);
        self.entropy.merge(&other.entropy);
        for (a, b) in self.higher.iter_mut().zip(&other.higher) {
            a.merge(b);
        }
        self.half_chain.merge(&other.half_chain);
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            a.merge(b);
        }
        self.trajectories += other.trajectories;
        self.samples += other.samples;
        self.events += other.events;
        self.max_sum_rule = self.max_sum_rule.max(other.max_sum_rule);
        self.max_purity_defect = self.max_purity_defect.max(other.max_purity_defect);
        self.clamped += other.clamped;
    }

    pub fn q_tilde(&self) -> Vec<f64> {
        self.q.iter().map(|&q| q_tilde(q)).collect()
    }

    /// Ensemble-mean half-chain entropy per sample time.
    pub fn half_chain_series(&self) -> &[f64] {
        &self.half_chain.mean
    }

    /// `None` when there are too few samples to judge.
    pub fn steady_state(&self) -> Option<bool> {
        let s = self.half_chain_series();
        (s.len() >= 10).then(|| detect_steady_state(s, STEADY_STATE_TOLERANCE))
    }

    /// Partial Klich-Levitov sums per entropy length from the mean cumulants.
    pub fn klich_levitov(&self) -> Vec<Vec<f64>> {
        (0..self.entropy_lengths.len())
            .map(|i| {
                let c: Vec<f64> = self.higher.iter().map(|w| w.mean[i]).collect();
                klich_levitov_entropy(&c)
            })
            .collect()
    }
}

/// Worker count from `WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every trajectory and returns the summaries in index order.
pub fn run_summaries(config: &SimConfig, workers: usize) -> Result<Vec<TrajectorySummary>> {
    config.validate()?;
    let basis = Arc::new(SingleParticleBasis::for_lattice(&config.lattice)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..config.n_trajectories as u64)
            .into_par_iter()
            .map(|i| {
                let out = TrajectoryRunner::with_basis(config, i, basis.clone())?.run()?;
                Ok(TrajectorySummary::from_output(config, &out))
            })
            .collect()
    })
}

pub fn run_ensemble_with_workers(config: &SimConfig, workers: usize) -> Result<EnsembleAccumulator> {
    let mut acc = EnsembleAccumulator::new(config);
    for s in run_summaries(config, workers)? {
        acc.add(&s);
    }
    Ok(acc)
}

pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleAccumulator> {
    run_ensemble_with_workers(config, worker_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeConfig;
    use crate::trajectory::run_trajectory;
    use proptest::prelude::*;

    fn config(trajectories: usize) -> SimConfig {
        let mut c = SimConfig::new(LatticeConfig::periodic(12, 0.5).unwrap(), 0.5);
        c.t_warmup = Some(3.0);
        c.sample_interval = Some(1.0);
        c.n_samples = 3;
        c.n_trajectories = trajectories;
        c.master_seed = 77;
        c
    }

    #[test]
    fn single_trajectory_equals_its_time_average() {
        let cfg = config(1);
        let acc = run_ensemble_with_workers(&cfg, 1).unwrap();
        let out = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(acc.trajectories, 1);
        assert_eq!(acc.samples, 3);
        assert_eq!(acc.events, out.event_count);
        for q in 0..12 {
            let m = out.samples.iter().map(|r| r.c_momentum[q]).sum::<f64>() / 3.0;
            assert!((acc.cq.mean[q] - m).abs() < 1e-15);
        }
        for (i, _) in acc.entropy_lengths.iter().enumerate() {
            let m = out.samples.iter().map(|r| r.profile.entropy[i]).sum::<f64>() / 3.0;
            assert!((acc.entropy.mean[i] - m).abs() < 1e-15);
        }
        assert!(acc.cq.stderr()[1].is_nan());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = config(6);
        let one = run_ensemble_with_workers(&cfg, 1).unwrap();
        let many = run_ensemble_with_workers(&cfg, 8).unwrap();
        assert_eq!(one, many);
        let bits = |a: &EnsembleAccumulator| a.cq.mean.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&many));
    }

    #[test]
    fn merge_of_halves_matches_sequential() {
        let cfg = config(6);
        let summaries = run_summaries(&cfg, 2).unwrap();
        let mut all = EnsembleAccumulator::new(&cfg);
        let (mut a, mut b) = (all.clone(), all.clone());
        for (i, s) in summaries.iter().enumerate() {
            all.add(s);
            if i < 2 { a.add(s) } else { b.add(s) }
        }
        a.merge(&b);
        assert_eq!(a.trajectories, all.trajectories);
        for (x, y) in a.cq.mean.iter().zip(&all.cq.mean) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in a.entropy.variance().iter().zip(all.entropy.variance()) {
            assert!((x - y).abs() < 1e-12 * y.abs().max(1e-3));
        }
    }

    #[test]
    fn stderr_shrinks_with_ensemble_size() {
        // CLT: quadrupling the ensemble halves the standard error
        let mut cfg = config(16);
        cfg.n_samples = 1;
        let small = run_ensemble_with_workers(&cfg, 1).unwrap();
        cfg.n_trajectories = 64;
        let large = run_ensemble_with_workers(&cfg, 1).unwrap();
        let avg = |a: &EnsembleAccumulator| a.cq.stderr()[1..6].iter().sum::<f64>() / 5.0;
        let ratio = avg(&small) / avg(&large);
        assert!((1.4..2.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn failure_aborts_with_context() {
        let mut cfg = config(2);
        cfg.gamma = -1.0;
        assert!(run_ensemble_with_workers(&cfg, 1).is_err());
    }

    #[test]
    fn worker_env() {
        assert!(worker_count() >= 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn welford_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..40), split in 0usize..40) {
            let mut w = Welford::new(1);
            for &x in &xs { w.push(&[x]); }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((w.mean[0] - mean).abs() < 1e-9);
            prop_assert!((w.variance()[0] - var).abs() < 1e-8 * var.max(1.0));
            let k = split.min(xs.len());
            let (mut a, mut b) = (Welford::new(1), Welford::new(1));
            for &x in &xs[..k] { a.push(&[x]); }
            for &x in &xs[k..] { b.push(&[x]); }
            a.merge(&b);
            prop_assert_eq!(a.count, w.count);
            prop_assert!((a.mean[0] - mean).abs() < 1e-9);
            prop_assert!((a.variance()[0] - var).abs() < 1e-8 * var.max(1.0));
        }

        #[test]
        fn merge_is_associative(xs in prop::collection::vec(-10f64..10.0, 3..30)) {
            let parts: Vec<Welford> = xs.chunks(xs.len() / 3 + 1).map(|c| {
                let mut w = Welford::new(1);
                for &x in c { w.push(&[x]); }
                w
            }).collect();
            let mut left = parts[0].clone();
            for p in &parts[1..] { left.merge(p); }
            let mut right = parts.last().unwrap().clone();
            if parts.len() == 3 {
                let mut bc = parts[1].clone();
                bc.merge(&parts[2]);
                right = parts[0].clone();
                right.merge(&bc);
            } else if parts.len() == 2 {
                right = parts[0].clone();
                right.merge(&parts[1]);
            }
            prop_assert_eq!(left.count, right.count);
            prop_assert!((left.mean[0] - right.mean[0]).abs() < 1e-12);
            prop_assert!((left.m2[0] - right.m2[0]).abs() < 1e-9 * left.m2[0].max(1.0));
        }
    }
}

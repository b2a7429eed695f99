use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use monitored_fermions::domain_wall::{domain_wall_experiment, DomainWallConfig};
use monitored_fermions::ensemble::run_ensemble;
use monitored_fermions::io::{
    emit_tables, fmt_num, load_config, now, read_manifest, ConfigOverrides, OutputWriter, Table,
};
use monitored_fermions::lattice::{derived_scales, DerivedScales, LatticeConfig};
use monitored_fermions::observables::q_tilde;
use monitored_fermions::theory::{
    bulk_scaling_ctilde, gaussian_cq, log_grid, rg_corrected, wiener_hopf_solve, CurveKind, TheoryCurve,
    WienerHopfGrid,
};
use monitored_fermions::trajectory::SimConfig;
use monitored_fermions::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "monitored-fermions", version, about = "Free fermions under random projective occupation measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Physics {
    /// Measurement rate per site.
    #[arg(long)]
    gamma: Option<f64>,
    /// Hopping amplitude.
    #[arg(long = "J")]
    hopping: Option<f64>,
    /// Filling fraction.
    #[arg(long = "n")]
    filling: Option<f64>,
    /// Number of sites.
    #[arg(long = "L")]
    sites: Option<usize>,
}

impl Physics {
    fn scales(&self) -> Result<DerivedScales> {
        let gamma = self
            .gamma
            .ok_or_else(|| Error::InvalidConfig("--gamma is required".into()))?;
        derived_scales(gamma, self.hopping.unwrap_or(1.0), self.filling.unwrap_or(0.5))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the derived scales for (gamma, J, n).
    Scales {
        #[command(flatten)]
        physics: Physics,
    },
    /// Run a trajectory ensemble and write cq.csv, cumulant.csv, entropy.csv,
    /// profile.csv (optional) and manifest.json.
    Simulate {
        #[command(flatten)]
        physics: Physics,
        /// TOML configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        warmup: Option<f64>,
        #[arg(long)]
        interval: Option<f64>,
        /// Record density profiles.
        #[arg(long)]
        profile: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabulate scaling functions and predictions, or evaluate one point.
    Theory {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, value_enum, default_value = "all")]
        curve: Curve,
        /// Evaluate c(y) or c2(y) at this point and print it.
        #[arg(long)]
        y: Option<f64>,
        /// Evaluate ctilde(u) at this point and print it.
        #[arg(long)]
        u: Option<f64>,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the boundary equation on a momentum grid; writes wh.csv.
    WienerHopf {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Join a simulation's cq.csv with theory; writes collapse.csv.
    Compare {
        /// Directory of a `simulate` run.
        #[arg(long)]
        sim: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit the diffusion constant from a melting domain wall; writes dfit.json.
    DomainWall {
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Curve {
    Ctilde,
    C,
    C2,
    Gaussian,
    Rg,
    All,
}

fn print_scales(s: &DerivedScales) {
    println!("gamma={}", s.gamma);
    println!("J={}", s.hopping);
    println!("n={}", s.filling);
    println!("tau0={}", s.tau0);
    println!("l0={}", s.l0);
    println!("v0={}", s.v0);
    println!("D={}", s.diffusion);
    println!("g0={}", s.g0);
    println!("ln_lcorr={}", s.ln_lcorr);
    println!("vmax={}", s.vmax);
}

fn simulate(physics: &Physics, config: Option<&Path>, overrides: ConfigOverrides, out: &Path) -> Result<()> {
    let started = now();
    let mut cfg = match config {
        Some(p) => load_config(p)?,
        None => {
            let gamma = physics
                .gamma
                .ok_or_else(|| Error::InvalidConfig("either --config or --gamma is required".into()))?;
            SimConfig::new(LatticeConfig::periodic(128, 0.5)?, gamma)
        }
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let acc = run_ensemble(&cfg)?;
    let manifest = emit_tables(&acc, &cfg, out, &started)?;
    if manifest.steady_state == Some(false) {
        eprintln!("warning: half-chain entropy has not settled; consider a longer warmup");
    }
    println!(
        "{} trajectories, {} samples, {} events -> {}",
        manifest.trajectories,
        manifest.samples,
        manifest.events,
        out.display()
    );
    Ok(())
}

fn curve_kind(c: Curve) -> Option<CurveKind> {
    match c {
        Curve::Ctilde => Some(CurveKind::CTilde),
        Curve::C => Some(CurveKind::RealSpace),
        Curve::C2 => Some(CurveKind::Cumulant),
        _ => None,
    }
}

fn theory(physics: &Physics, curve: Curve, point: Option<f64>, points: usize, out: &Path) -> Result<()> {
    if let Some(x) = point {
        let value = match curve_kind(curve) {
            Some(kind) => kind.evaluate(x)?.value,
            None if curve == Curve::Gaussian => gaussian_cq(x, &physics.scales()?)?,
            None => {
                return Err(Error::InvalidConfig(
                    "a single point needs --curve ctilde, c, c2 or gaussian (q as --u)".into(),
                ))
            }
        };
        println!("{value}");
        return Ok(());
    }
    let mut t = Table::new(&["curve", "x", "value"]);
    let grid = log_grid(1e-2, 1e2, points.max(2));
    for kind in [CurveKind::CTilde, CurveKind::RealSpace, CurveKind::Cumulant] {
        if curve != Curve::All && curve_kind(curve) != Some(kind) {
            continue;
        }
        let tab = TheoryCurve::tabulate(kind, &grid)?;
        for (x, v) in tab.abscissae.iter().zip(&tab.values) {
            t.push(vec![kind.name().to_string(), fmt_num(*x), fmt_num(*v)]);
        }
    }
    if matches!(curve, Curve::Gaussian | Curve::Rg | Curve::All) {
        let scales = physics.scales()?;
        let sites = physics.sites.unwrap_or(512);
        let qs: Vec<f64> = (1..=sites / 2)
            .map(|m| 2.0 * std::f64::consts::PI * m as f64 / sites as f64)
            .collect();
        if curve != Curve::Rg {
            for &q in &qs {
                t.push(vec!["gaussian_cq".into(), fmt_num(q), fmt_num(gaussian_cq(q, &scales)?)]);
            }
        }
        if curve != Curve::Gaussian {
            let ls: Vec<f64> = (1..=sites / 2).map(|l| l as f64).collect();
            let rg = rg_corrected(&qs, &ls, &scales);
            for (q, c) in rg.q.iter().zip(&rg.c_of_q) {
                t.push(vec!["rg_cq".into(), fmt_num(*q), fmt_num(*c)]);
            }
            for (l, c) in rg.l.iter().zip(&rg.cumulant_of_l) {
                t.push(vec!["rg_cumulant".into(), fmt_num(*l), fmt_num(*c)]);
            }
        }
    }
    let mut w = OutputWriter::new(out)?;
    w.stage("theory.csv", t.render().as_bytes())?;
    w.commit()?;
    println!("{} rows -> {}", t.rows.len(), out.join("theory.csv").display());
    Ok(())
}

fn wiener_hopf(physics: &Physics, points: usize, out: &Path) -> Result<()> {
    let scales = physics.scales()?;
    let sites = physics.sites.unwrap_or(512);
    let mut ms: Vec<usize> = log_grid(1.0, (sites / 2) as f64, points.max(2))
        .iter()
        .map(|m| m.round() as usize)
        .collect();
    ms.dedup();
    let mut t = Table::new(&["q", "q_tilde", "u", "C_wh", "C_bulk", "rel_deviation", "step", "t_max"]);
    let grid = WienerHopfGrid::default();
    for m in ms {
        let q = 2.0 * std::f64::consts::PI * m as f64 / sites as f64;
        let sol = wiener_hopf_solve(q, &scales, &grid)?;
        let bulk = scales.occupation_variance() * bulk_scaling_ctilde(sol.u)?.value;
        let dev = if bulk > 0.0 { sol.c / bulk - 1.0 } else { f64::NAN };
        t.push(vec![
            fmt_num(q),
            fmt_num(q_tilde(q)),
            fmt_num(sol.u),
            fmt_num(sol.c),
            fmt_num(bulk),
            fmt_num(dev),
            fmt_num(sol.step),
            fmt_num(sol.t_max),
        ]);
    }
    let mut w = OutputWriter::new(out)?;
    w.stage("wh.csv", t.render().as_bytes())?;
    w.commit()?;
    println!("{} momenta -> {}", t.rows.len(), out.join("wh.csv").display());
    Ok(())
}

fn compare(sim: &Path, out: &Path) -> Result<()> {
    let manifest = read_manifest(sim)?;
    let s = manifest.scales;
    let cq = Table::parse(&std::fs::read_to_string(sim.join("cq.csv"))?)?;
    let (idx, q, qt) = (cq.numbers("q_index")?, cq.numbers("q")?, cq.numbers("q_tilde")?);
    let (c, se) = (cq.numbers("C_mean")?, cq.numbers("C_stderr")?);
    let mut t = Table::new(&[
        "q_index",
        "q",
        "q_tilde",
        "u",
        "C_mean",
        "C_stderr",
        "ratio_sim",
        "ratio_theory",
        "collapse_ratio",
        "ln_q_tilde",
        "delta_C_over_q_tilde",
        "delta_stderr",
    ]);
    let var = s.occupation_variance();
    for i in 0..q.len() {
        if idx[i] == 0.0 {
            continue;
        }
        let u = qt[i] * s.l0;
        let ct = bulk_scaling_ctilde(u)?.value;
        let ratio_sim = c[i] / (s.g0 * qt[i]);
        let ratio_theory = ct / (2.0 * u);
        t.push(vec![
            format!("{}", idx[i] as u64),
            fmt_num(q[i]),
            fmt_num(qt[i]),
            fmt_num(u),
            fmt_num(c[i]),
            fmt_num(se[i]),
            fmt_num(ratio_sim),
            fmt_num(ratio_theory),
            fmt_num(ratio_sim / ratio_theory),
            fmt_num(qt[i].ln()),
            fmt_num((c[i] - var * ct) / qt[i]),
            fmt_num(se[i] / qt[i]),
        ]);
    }
    let mut w = OutputWriter::new(out)?;
    w.stage("collapse.csv", t.render().as_bytes())?;
    w.commit()?;
    println!("{} momenta -> {}", t.rows.len(), out.join("collapse.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn domain_wall(
    physics: &Physics,
    seed: Option<u64>,
    trajectories: Option<usize>,
    snapshots: Option<usize>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    out: &Path,
) -> Result<()> {
    let gamma = physics
        .gamma
        .ok_or_else(|| Error::InvalidConfig("--gamma is required".into()))?;
    let mut cfg = DomainWallConfig::new(gamma, physics.hopping.unwrap_or(1.0));
    if let Some(l) = physics.sites {
        cfg.sites = l;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(n) = trajectories {
        cfg.n_trajectories = n;
    }
    if let Some(n) = snapshots {
        cfg.snapshots = n;
    }
    cfg.t_min = t_min;
    cfg.t_max = t_max;
    let fit = domain_wall_experiment(&cfg)?;
    let body = serde_json::to_string_pretty(&fit).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    let mut w = OutputWriter::new(out)?;
    w.stage("dfit.json", body.as_bytes())?;
    w.commit()?;
    println!("D_fit={} stderr={} expected={}", fit.d_fit, fit.d_stderr, fit.d_expected);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scales { physics } => {
            print_scales(&physics.scales()?);
            Ok(())
        }
        Command::Simulate {
            physics,
            config,
            seed,
            trajectories,
            samples,
            warmup,
            interval,
            profile,
            out,
        } => {
            let overrides = ConfigOverrides {
                gamma: physics.gamma,
                hopping: physics.hopping,
                filling: physics.filling,
                sites: physics.sites,
                seed,
                trajectories,
                samples,
                warmup,
                interval,
                record_profile: profile.then_some(true),
            };
            simulate(&physics, config.as_deref(), overrides, &out)
        }
        Command::Theory {
            physics,
            curve,
            y,
            u,
            points,
            out,
        } => theory(&physics, curve, y.or(u), points, &out),
        Command::WienerHopf { physics, points, out } => wiener_hopf(&physics, points, &out),
        Command::Compare { sim, out } => compare(&sim, &out),
        Command::DomainWall {
            physics,
            seed,
            trajectories,
            snapshots,
            t_min,
            t_max,
            out,
        } => domain_wall(&physics, seed, trajectories, snapshots, t_min, t_max, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

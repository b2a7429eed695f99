//! Configuration files, CSV tables and run manifests.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), undefined values
//! (a standard error from a single trajectory, a ratio with non-positive
//! denominator) as empty fields. Lines end in LF and every table has a
//! header, even when it has no rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::EnsembleAccumulator;
use crate::error::{Error, Result};
use crate::lattice::DerivedScales;
use crate::observables::l_tilde;
use crate::trajectory::SimConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CQ_HEADER: [&str; 6] = ["q_index", "q", "q_tilde", "C_mean", "C_stderr", "n_samples"];
pub const CUMULANT_HEADER: [&str; 4] = ["l", "l_tilde", "c2_mean", "c2_stderr"];
pub const ENTROPY_HEADER: [&str; 5] = ["l", "l_tilde", "S_mean", "S_stderr", "ratio_S_over_c2"];
pub const PROFILE_HEADER: [&str; 3] = ["t", "x", "density"];

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let c: SimConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Canonical TOML form; parsing it back and re-serializing is byte-identical.
pub fn canonical_config(config: &SimConfig) -> String {
    toml::to_string(config).expect("config serializes to TOML")
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub gamma: Option<f64>,
    pub hopping: Option<f64>,
    pub filling: Option<f64>,
    pub sites: Option<usize>,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub samples: Option<usize>,
    pub warmup: Option<f64>,
    pub interval: Option<f64>,
    pub record_profile: Option<bool>,
}

impl ConfigOverrides {
    pub fn apply(&self, c: &mut SimConfig) {
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = self.hopping {
            c.lattice.hopping = v;
        }
        if let Some(v) = self.filling {
            c.lattice.filling = v;
        }
        if let Some(v) = self.sites {
            c.lattice.sites = v;
        }
        if let Some(v) = self.seed {
            c.master_seed = v;
        }
        if let Some(v) = self.trajectories {
            c.n_trajectories = v;
        }
        if let Some(v) = self.samples {
            c.n_samples = v;
        }
        if let Some(v) = self.warmup {
            c.t_warmup = Some(v);
        }
        if let Some(v) = self.interval {
            c.sample_interval = Some(v);
        }
        if let Some(v) = self.record_profile {
            c.record_profile = v;
        }
    }
}

/// `{:.16e}`, or an empty field for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::Parse(format!("row {} has {} fields, expected {}", i + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name}")))
    }

    /// Column values as numbers; empty fields become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                if r[c].is_empty() {
                    Ok(f64::NAN)
                } else {
                    r[c].parse().map_err(|_| Error::Parse(format!("bad number {:?} in {name}", r[c])))
                }
            })
            .collect()
    }
}

/// `q_m` for `m = 0..=L/2`.
pub fn cq_table(acc: &EnsembleAccumulator) -> Table {
    let mut t = Table::new(&CQ_HEADER);
    if acc.cq.count == 0 {
        return t;
    }
    let se = acc.cq.stderr();
    let qt = acc.q_tilde();
    for m in 0..=acc.sites / 2 {
        t.push(vec![
            m.to_string(),
            fmt_num(acc.q[m]),
            fmt_num(qt[m]),
            fmt_num(acc.cq.mean[m]),
            fmt_num(se[m]),
            acc.samples.to_string(),
        ]);
    }
    t
}

pub fn cumulant_table(acc: &EnsembleAccumulator) -> Table {
    let mut t = Table::new(&CUMULANT_HEADER);
    if acc.c2.count == 0 {
        return t;
    }
    let se = acc.c2.stderr();
    for (i, &l) in acc.cumulant_lengths.iter().enumerate() {
        t.push(vec![
            l.to_string(),
            fmt_num(l_tilde(l as f64, acc.sites)),
            fmt_num(acc.c2.mean[i]),
            fmt_num(se[i]),
        ]);
    }
    t
}

/// The ratio uses `c2_mean` of the cumulant table at the same `l`, or the
/// block cumulant from the spectrum when `l > L/2`.
pub fn entropy_table(acc: &EnsembleAccumulator) -> Table {
    let mut t = Table::new(&ENTROPY_HEADER);
    if acc.entropy.count == 0 {
        return t;
    }
    let se = acc.entropy.stderr();
    for (i, &l) in acc.entropy_lengths.iter().enumerate() {
        let c2 = match acc.cumulant_lengths.iter().position(|&k| k == l) {
            Some(j) => acc.c2.mean[j],
            None => acc.higher.first().map_or(f64::NAN, |w| w.mean[i]),
        };
        let s = acc.entropy.mean[i];
        let ratio = if c2 > 0.0 { fmt_num(s / c2) } else { String::new() };
        t.push(vec![
            l.to_string(),
            fmt_num(l_tilde(l as f64, acc.sites)),
            fmt_num(s),
            fmt_num(se[i]),
            ratio,
        ]);
    }
    t
}

pub fn profile_table(acc: &EnsembleAccumulator) -> Table {
    let mut t = Table::new(&PROFILE_HEADER);
    for (time, w) in acc.sample_times.iter().zip(&acc.density) {
        if w.count == 0 {
            continue;
        }
        for (x, n) in w.mean.iter().enumerate() {
            t.push(vec![fmt_num(*time), x.to_string(), fmt_num(*n)]);
        }
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stages files next to their destination and moves them into place only
/// when every write succeeded. Anything left uncommitted is deleted.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    checksums: BTreeMap<String, String>,
    committed: bool,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            checksums: BTreeMap::new(),
            committed: false,
        })
    }

    pub fn stage(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let dest = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        self.staged.push((tmp.clone(), dest));
        fs::write(&tmp, contents)?;
        self.checksums.insert(name.to_string(), sha256_hex(contents));
        Ok(())
    }

    pub fn checksums(&self) -> &BTreeMap<String, String> {
        &self.checksums
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, dest) in &self.staged {
            if let Err(e) = fs::rename(tmp, dest) {
                for d in &done {
                    let _ = fs::remove_file(d);
                }
                return Err(e.into());
            }
            done.push(dest.clone());
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for OutputWriter {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.staged {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}

/// Provenance of one `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub master_seed: u64,
    pub version: String,
    pub started: String,
    pub finished: String,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
    pub scales: DerivedScales,
    pub t_warmup: f64,
    pub sample_interval: f64,
    pub trajectories: u64,
    pub samples: u64,
    pub events: u64,
    pub zero_samples: bool,
    pub steady_state: Option<bool>,
    pub max_sum_rule: f64,
    pub max_purity_defect: f64,
    pub clamped_eigenvalues: u64,
    pub warnings: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes `cq.csv`, `cumulant.csv`, `entropy.csv`, `profile.csv` (when
/// profiles were recorded) and `manifest.json` into `dir`.
pub fn emit_tables(acc: &EnsembleAccumulator, config: &SimConfig, dir: &Path, started: &str) -> Result<RunManifest> {
    let mut w = OutputWriter::new(dir)?;
    w.stage("cq.csv", cq_table(acc).render().as_bytes())?;
    w.stage("cumulant.csv", cumulant_table(acc).render().as_bytes())?;
    w.stage("entropy.csv", entropy_table(acc).render().as_bytes())?;
    if config.record_profile {
        w.stage("profile.csv", profile_table(acc).render().as_bytes())?;
    }
    let mut warnings = config.warnings();
    let steady = acc.steady_state();
    if steady == Some(false) {
        warnings.push("half-chain entropy has not settled; consider a longer warmup".into());
    }
    let manifest = RunManifest {
        config: config.clone(),
        master_seed: config.master_seed,
        version: VERSION.to_string(),
        started: started.to_string(),
        finished: now(),
        files: w.checksums().clone(),
        scales: config.scales()?,
        t_warmup: config.warmup(),
        sample_interval: config.interval(),
        trajectories: acc.trajectories,
        samples: acc.samples,
        events: acc.events,
        zero_samples: acc.samples == 0,
        steady_state: steady,
        max_sum_rule: acc.max_sum_rule,
        max_purity_defect: acc.max_purity_defect,
        clamped_eigenvalues: acc.clamped,
        warnings,
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    w.stage(MANIFEST, body.as_bytes())?;
    w.commit()?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

/// Names of listed files whose contents no longer match their checksum.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = read_manifest(dir)?;
    let mut bad = Vec::new();
    for (name, sum) in &m.files {
        if name == MANIFEST {
            continue;
        }
        match fs::read(dir.join(name)) {
            Ok(bytes) if &sha256_hex(&bytes) == sum => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}

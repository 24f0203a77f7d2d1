//! Monte Carlo harness: single trials, density sweeps and CSV output.
//!
//! Every trial derives its own seed from `(master_seed, ratio_index, trial_index)`, so
//! records do not depend on scheduling and parallel sweeps write the same bytes as
//! serial ones.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::Field;
use crate::minors::{
    minor_bruteforce, minor_randomized, verify_witness, MinorError, MinorWitness,
    RandomizedOutcome, TargetMinor, TargetSpec, BRUTE_FORCE_MAX_COLUMNS,
};
use crate::peel::{hypergraph_of, two_core};
use crate::process::{derive_seed, dist_make, sample_matrix, ColumnDistribution, DistSpec};

/// Exact CSV header.
pub const CSV_HEADER: &str =
    "k,q,n,m,ratio,seed,rank,full_rank,core_rows,core_cols,minor_found,failure_code,time_ms";

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "MATROIDPHASE_THREADS";

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Minor(#[from] MinorError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub p: u32,
    #[serde(default = "one")]
    pub e: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FinderMode {
    #[default]
    Random,
    Brute,
    /// Skip minor search; rank and core only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinderSpec {
    #[serde(default)]
    pub mode: FinderMode,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    1000
}

impl Default for FinderSpec {
    fn default() -> Self {
        FinderSpec { mode: FinderMode::Random, budget: default_budget() }
    }
}

mod target_str {
    use super::TargetSpec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TargetSpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(t)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TargetSpec, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_target() -> TargetSpec {
    TargetSpec::U23
}

/// A sweep as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub field: FieldSpec,
    pub k: usize,
    pub n: usize,
    /// Values of m/n.
    pub ratios: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_distribution")]
    pub distribution: DistSpec,
    #[serde(with = "target_str", default = "default_target")]
    pub target: TargetSpec,
    #[serde(default)]
    pub finder: FinderSpec,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Adds the core's red edge fraction to each record.
    #[serde(default)]
    pub diagnostics: bool,
    /// Records wall time; off by default so that output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn default_distribution() -> DistSpec {
    DistSpec::Uniform
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, ExpError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessSummary {
    pub contracted: usize,
    pub deleted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub k: usize,
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub ratio: f64,
    pub ratio_index: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub rank: usize,
    pub full_rank: bool,
    pub core_rows: usize,
    pub core_cols: usize,
    pub minor_found: bool,
    pub witness: Option<WitnessSummary>,
    /// Set when this positive was picked for an independent replay.
    pub witness_replayed: Option<bool>,
    /// Empty when a minor was found or no search ran.
    pub failure_code: String,
    pub time_ms: u64,
    pub red_fraction: Option<f64>,
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.q,
            self.n,
            self.m,
            self.ratio,
            self.seed,
            self.rank,
            self.full_rank,
            self.core_rows,
            self.core_cols,
            self.minor_found,
            self.failure_code,
            self.time_ms
        )
    }
}

/// Per-ratio aggregates of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub ratio: f64,
    pub m: usize,
    pub trials: usize,
    pub found: usize,
    pub full_rank: usize,
    pub mean_rank_fraction: f64,
    pub mean_core_row_fraction: f64,
    pub mean_core_col_fraction: f64,
}

impl RatioSummary {
    pub fn found_frequency(&self) -> f64 {
        self.found as f64 / self.trials.max(1) as f64
    }
}

/// A validated config with its distribution and target resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: SweepConfig,
    dist: ColumnDistribution,
    target: TargetMinor,
}

impl Experiment {
    pub fn new(config: SweepConfig) -> Result<Self, ExpError> {
        let bad = |s: String| Err(ExpError::Config(s));
        if config.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(r) = config.ratios.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return bad(format!("ratio {r} is not a nonnegative number"));
        }
        if config.n < config.k {
            return bad(format!("n = {} is smaller than k = {}", config.n, config.k));
        }
        let field = Field::new(config.field.p, config.field.e)
            .map_err(|e| ExpError::Config(e.to_string()))?;
        let dist = dist_make(&field, config.k, &config.distribution)
            .map_err(|e| ExpError::Config(e.to_string()))?;
        let target = config.target.resolve()?;
        target.representation(&field)?;
        if config.finder.mode == FinderMode::Random && config.finder.budget == 0 {
            return bad("finder budget must be positive".into());
        }
        Ok(Experiment { config, dist, target })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.config
    }

    pub fn m_for(&self, ratio: f64) -> usize {
        (ratio * self.config.n as f64).round() as usize
    }

    /// One trial; deterministic in `(master_seed, ratio_index, trial_index)`.
    pub fn run_trial(&self, ratio_index: usize, trial_index: usize) -> TrialRecord {
        let cfg = &self.config;
        let start = Instant::now();
        let ratio = cfg.ratios[ratio_index];
        let m = self.m_for(ratio);
        let seed = derive_seed(cfg.master_seed, ratio_index as u64, trial_index as u64);
        let mut rec = TrialRecord {
            k: cfg.k,
            q: self.dist.field().order(),
            n: cfg.n,
            m,
            ratio,
            ratio_index,
            trial_index,
            seed,
            rank: 0,
            full_rank: false,
            core_rows: 0,
            core_cols: 0,
            minor_found: false,
            witness: None,
            witness_replayed: None,
            failure_code: String::new(),
            time_ms: 0,
            red_fraction: None,
        };
        let a = match sample_matrix(&self.dist, cfg.n, m, seed) {
            Ok(a) => a,
            Err(_) => {
                rec.failure_code = "sample-error".into();
                return rec;
            }
        };
        rec.rank = a.rank();
        rec.full_rank = rec.rank == m;
        let pr = two_core(&a);
        rec.core_rows = pr.kept_rows.len();
        rec.core_cols = pr.kept_cols.len();
        if cfg.diagnostics {
            rec.red_fraction = hypergraph_of(&pr)
                .ok()
                .filter(|h| h.n_edges() > 0)
                .map(|h| h.red_count() as f64 / h.n_edges() as f64);
        }

        let found: Result<Option<MinorWitness>, String> = match cfg.finder.mode {
            FinderMode::None => Ok(None),
            FinderMode::Brute if m > BRUTE_FORCE_MAX_COLUMNS => Err("too-large".into()),
            FinderMode::Brute => match minor_bruteforce(&a, &self.target) {
                Ok(Some(w)) => Ok(Some(w)),
                Ok(None) => Err("not-found".into()),
                Err(_) => Err("error".into()),
            },
            FinderMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_6e6f_7273);
                match minor_randomized(&a, &self.target, cfg.finder.budget, &mut rng) {
                    Ok(RandomizedOutcome::Found(w)) => Ok(Some(w)),
                    Ok(RandomizedOutcome::NotFound(r)) => Err(r.code().into()),
                    Err(_) => Err("error".into()),
                }
            }
        };
        match found {
            Ok(Some(w)) => {
                rec.minor_found = true;
                rec.witness = Some(WitnessSummary {
                    contracted: w.contract_set.len(),
                    deleted: w.delete_set.len(),
                });
                if trial_index % 10 == 0 {
                    let n_rep = self.target.representation(a.field()).expect("checked in new");
                    let ok = verify_witness(&a, &n_rep, &w).is_ok();
                    rec.witness_replayed = Some(ok);
                    if !ok {
                        rec.minor_found = false;
                        rec.failure_code = "witness-replay-failed".into();
                    }
                }
            }
            Ok(None) => {}
            Err(code) => rec.failure_code = code,
        }
        if cfg.timing {
            rec.time_ms = start.elapsed().as_millis() as u64;
        }
        rec
    }

    /// All trials in `(ratio_index, trial_index)` order, written as CSV and optionally
    /// as JSON lines. `threads = None` reads [`THREADS_ENV`] and falls back to the
    /// available parallelism.
    ///
    /// On a write error a `# incomplete` marker line is attempted before returning.
    pub fn run_sweep(
        &self,
        csv: &mut dyn Write,
        mut jsonl: Option<&mut dyn Write>,
        threads: Option<usize>,
    ) -> Result<Vec<RatioSummary>, ExpError> {
        let trials = self.config.trials;
        let total = self.config.ratios.len() * trials;
        let threads = threads.unwrap_or_else(default_threads).clamp(1, total.max(1));
        let mut acc: Vec<Acc> = vec![Acc::default(); self.config.ratios.len()];

        writeln!(csv, "{CSV_HEADER}")?;
        let mut emit = |rec: &TrialRecord| -> io::Result<()> {
            writeln!(csv, "{}", rec.csv_row())?;
            if let Some(j) = jsonl.as_mut() {
                serde_json::to_writer(&mut **j, rec)?;
                writeln!(j)?;
            }
            acc[rec.ratio_index].add(rec);
            Ok(())
        };

        let result: io::Result<()> = (|| {
            if threads == 1 {
                for idx in 0..total {
                    emit(&self.run_trial(idx / trials, idx % trials))?;
                }
                return Ok(());
            }
            let next = AtomicUsize::new(0);
            std::thread::scope(|s| {
                let (tx, rx) = mpsc::channel::<(usize, TrialRecord)>();
                for _ in 0..threads {
                    let tx = tx.clone();
                    let next = &next;
                    s.spawn(move || loop {
                        let idx = next.fetch_add(1, Ordering::Relaxed);
                        if idx >= total {
                            break;
                        }
                        let rec = self.run_trial(idx / trials, idx % trials);
                        if tx.send((idx, rec)).is_err() {
                            break;
                        }
                    });
                }
                drop(tx);
                let mut pending = BTreeMap::new();
                let mut want = 0;
                for (idx, rec) in rx {
                    pending.insert(idx, rec);
                    while let Some(rec) = pending.remove(&want) {
                        if let Err(e) = emit(&rec) {
                            // Stop the workers before the scope joins them.
                            next.store(total, Ordering::Relaxed);
                            return Err(e);
                        }
                        want += 1;
                    }
                }
                Ok(())
            })
        })();
        if let Err(e) = result {
            let _ = writeln!(csv, "# incomplete: {e}");
            let _ = csv.flush();
            return Err(e.into());
        }
        csv.flush()?;
        Ok(self
            .config
            .ratios
            .iter()
            .zip(acc)
            .map(|(&ratio, a)| a.finish(ratio, self.m_for(ratio), self.config.n))
            .collect())
    }
}

fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Default)]
struct Acc {
    trials: usize,
    found: usize,
    full_rank: usize,
    rank: usize,
    core_rows: usize,
    core_cols: usize,
}

impl Acc {
    fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.found += r.minor_found as usize;
        self.full_rank += r.full_rank as usize;
        self.rank += r.rank;
        self.core_rows += r.core_rows;
        self.core_cols += r.core_cols;
    }

    fn finish(self, ratio: f64, m: usize, n: usize) -> RatioSummary {
        let t = self.trials.max(1) as f64;
        let n = n as f64;
        RatioSummary {
            ratio,
            m,
            trials: self.trials,
            found: self.found,
            full_rank: self.full_rank,
            mean_rank_fraction: self.rank as f64 / t / n,
            mean_core_row_fraction: self.core_rows as f64 / t / n,
            mean_core_col_fraction: self.core_cols as f64 / t / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(ratios: Vec<f64>, trials: usize) -> SweepConfig {
        SweepConfig {
            field: FieldSpec { p: 2, e: 1 },
            k: 3,
            n: 300,
            ratios,
            trials,
            distribution: DistSpec::Uniform,
            target: TargetSpec::U23,
            finder: FinderSpec::default(),
            master_seed: 7,
            output: None,
            diagnostics: false,
            timing: false,
        }
    }

    fn sweep_bytes(exp: &Experiment, threads: usize) -> String {
        let mut out = Vec::new();
        exp.run_sweep(&mut out, None, Some(threads)).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn trial_is_deterministic() {
        let exp = Experiment::new(config(vec![0.9, 1.05], 2)).unwrap();
        assert_eq!(exp.run_trial(1, 1), exp.run_trial(1, 1));
        assert_ne!(exp.run_trial(1, 0).seed, exp.run_trial(1, 1).seed);
    }

    #[test]
    fn zero_ratio() {
        let exp = Experiment::new(config(vec![0.0], 1)).unwrap();
        let r = exp.run_trial(0, 0);
        assert_eq!((r.m, r.rank, r.core_rows, r.core_cols), (0, 0, 0, 0));
        assert!(!r.minor_found);
        assert!(r.full_rank);
    }

    #[test]
    fn empty_ratio_list_is_header_only() {
        let exp = Experiment::new(config(vec![], 3)).unwrap();
        assert_eq!(sweep_bytes(&exp, 4), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_in_fixed_order_and_thread_independent() {
        let exp = Experiment::new(config(vec![0.8, 1.1], 3)).unwrap();
        let serial = sweep_bytes(&exp, 1);
        let lines: Vec<&str> = serial.lines().collect();
        assert_eq!(lines.len(), 7);
        let ratios: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(4).unwrap()).collect();
        assert_eq!(ratios, ["0.8", "0.8", "0.8", "1.1", "1.1", "1.1"]);
        assert_eq!(serial, sweep_bytes(&exp, 4));
    }

    #[test]
    fn records_respect_invariants() {
        let mut cfg = config(vec![0.7, 1.0, 1.2], 4);
        cfg.diagnostics = true;
        let exp = Experiment::new(cfg).unwrap();
        for ri in 0..3 {
            for ti in 0..4 {
                let r = exp.run_trial(ri, ti);
                assert!(r.rank <= r.n.min(r.m));
                assert_eq!(r.full_rank, r.rank == r.m);
                assert!(r.core_rows <= r.n && r.core_cols <= r.m);
                if r.minor_found {
                    assert!(r.failure_code.is_empty());
                    assert_ne!(r.witness_replayed, Some(false));
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(Experiment::new(config(vec![-0.1], 1)).is_err());
        assert!(Experiment::new(config(vec![1.0], 0)).is_err());
        let mut c = config(vec![1.0], 1);
        c.n = 2;
        assert!(Experiment::new(c).is_err());
        let mut c = config(vec![1.0], 1);
        c.target = TargetSpec::Pg { t: 2, q: 3 };
        assert!(Experiment::new(c).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"field":{"p":2},"k":3,"n":100,"ratios":[0.9],"trials":2,
            "target":"pg:3:2","finder":{"mode":"brute","budget":10},"master_seed":3}"#;
        let c = SweepConfig::from_json(text).unwrap();
        assert_eq!(c.target, TargetSpec::Pg { t: 3, q: 2 });
        assert_eq!(c.finder.mode, FinderMode::Brute);
        let back = SweepConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(SweepConfig::from_json(r#"{"field":{"p":2},"k":3,"n":9,"ratios":[],"trials":1,"extra":1}"#).is_err());
    }
}

//! Seeded experiment batches, solver comparisons, the `t` sweep, and their
//! CSV artifacts.
//!
//! Every number in a batch derives from the instance source and the seeds
//! `run_seed_base + 0..runs`, so identical configs produce byte-identical
//! files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::aco::{run_aco, RunResult};
use crate::error::{Error, Result};
use crate::hybrid::{run_hybrid, HybridParams};
use crate::instance::{generate_random_instance, load_instance, EventSchedule, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Aco,
    Hybrid,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Aco => "aco",
            SolverKind::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aco" => Ok(SolverKind::Aco),
            "hybrid" => Ok(SolverKind::Hybrid),
            other => Err(Error::Config(format!(
                "unknown solver {other:?} (expected aco or hybrid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Random {
        n: usize,
        bbox: (f64, f64),
        seed: u64,
    },
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSource::File(p) => load_instance(p),
            InstanceSource::Random { n, bbox, seed } => generate_random_instance(*n, *bbox, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub schedule_path: Option<PathBuf>,
    pub solver: SolverKind,
    /// The baseline only reads `params.aco`.
    pub params: HybridParams,
    pub runs: usize,
    pub run_seed_base: u64,
    /// Where CSVs go; `None` skips writing.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: InstanceSource::Random {
                n: 30,
                bbox: (100.0, 100.0),
                seed: 1,
            },
            schedule_path: None,
            solver: SolverKind::Hybrid,
            params: HybridParams::default(),
            runs: 10,
            run_seed_base: 0,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.runs as u64).map(move |k| self.run_seed_base + k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        match self.solver {
            SolverKind::Aco => self.params.aco.validate(),
            SolverKind::Hybrid => self.params.validate(),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    fn load_inputs(&self) -> Result<(Instance, EventSchedule)> {
        let inst = self.instance.load()?;
        let schedule = match &self.schedule_path {
            Some(p) => EventSchedule::load(p)?,
            None => EventSchedule::empty(),
        };
        schedule.validate_against(&inst)?;
        Ok((inst, schedule))
    }

    /// One run of the configured solver.
    pub fn run_once(
        &self,
        inst: &Instance,
        schedule: &EventSchedule,
        seed: u64,
    ) -> Result<RunResult> {
        match self.solver {
            SolverKind::Aco => run_aco(inst, schedule, &self.params.aco, seed),
            SolverKind::Hybrid => run_hybrid(inst, schedule, &self.params, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub final_length: f64,
    pub iterations_to_best: usize,
}

/// Order statistics over the final best lengths of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub solver: String,
    pub average: f64,
    pub best: f64,
    pub worst: f64,
    pub per_run: Vec<RunSummary>,
}

impl BatchStats {
    pub fn from_runs(solver: &str, per_run: Vec<RunSummary>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::InvalidArgument(
                "a batch needs at least one run".into(),
            ));
        }
        let lengths = per_run.iter().map(|r| r.final_length);
        let best = lengths.clone().fold(f64::INFINITY, f64::min);
        let worst = lengths.clone().fold(f64::NEG_INFINITY, f64::max);
        let average = lengths.sum::<f64>() / per_run.len() as f64;
        // the mean of a sample always lies within its range; rounding may not
        let average = average.clamp(best, worst);
        Ok(BatchStats {
            solver: solver.to_string(),
            average,
            best,
            worst,
            per_run,
        })
    }

    pub fn runs(&self) -> usize {
        self.per_run.len()
    }

    pub fn mean_iterations_to_best(&self) -> f64 {
        self.per_run
            .iter()
            .map(|r| r.iterations_to_best as f64)
            .sum::<f64>()
            / self.per_run.len() as f64
    }
}

/// Runs every seed of the batch and, if configured, writes `summary.csv`,
/// `runs.csv` and one `trace_<seed>.csv` per run.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchStats> {
    Ok(execute_batch(cfg)?.0)
}

/// [`run_batch`] that also hands back the individual runs.
pub fn execute_batch(cfg: &ExperimentConfig) -> Result<(BatchStats, Vec<RunResult>)> {
    cfg.validate()?;
    let (inst, schedule) = cfg.load_inputs()?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let results: Vec<RunResult> = seeds
        .par_iter()
        .enumerate()
        .map(|(run, &seed)| {
            cfg.run_once(&inst, &schedule, seed)
                .map_err(|e| Error::Run {
                    run,
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let per_run = results
        .iter()
        .map(|r| RunSummary {
            seed: r.seed,
            final_length: r.final_length(),
            iterations_to_best: r.iterations_to_best(),
        })
        .collect();
    let stats = BatchStats::from_runs(cfg.solver.name(), per_run)?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        emit_csv(&dir.join("summary.csv"), &summary_csv(&[&stats]))?;
        emit_csv(&dir.join("runs.csv"), &runs_csv(&stats))?;
        for r in &results {
            emit_csv(&dir.join(format!("trace_{}.csv", r.seed)), &trace_csv(r))?;
        }
    }
    Ok((stats, results))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: BatchStats,
    pub b: BatchStats,
    pub per_seed: Vec<SeedOutcome>,
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
}

impl Comparison {
    /// Seeds on which `b` is at least as good as `a`.
    pub fn b_wins_or_ties(&self) -> usize {
        self.b_wins + self.ties
    }
}

/// Runs both batches over the same instance and seeds and counts per-seed
/// wins (lower final length wins; equal lengths tie).
pub fn compare_solvers(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<Comparison> {
    if a.instance != b.instance {
        return Err(Error::InvalidComparison(
            "configs use different instances".into(),
        ));
    }
    if a.schedule_path != b.schedule_path {
        return Err(Error::InvalidComparison(
            "configs use different event schedules".into(),
        ));
    }
    if a.runs != b.runs || a.run_seed_base != b.run_seed_base {
        return Err(Error::InvalidComparison(
            "configs use different seeds".into(),
        ));
    }
    let sa = run_batch(a)?;
    let sb = run_batch(b)?;
    let per_seed: Vec<SeedOutcome> = sa
        .per_run
        .iter()
        .zip(&sb.per_run)
        .map(|(x, y)| SeedOutcome {
            seed: x.seed,
            a: x.final_length,
            b: y.final_length,
        })
        .collect();
    let a_wins = per_seed.iter().filter(|o| o.a < o.b).count();
    let b_wins = per_seed.iter().filter(|o| o.b < o.a).count();
    Ok(Comparison {
        ties: per_seed.len() - a_wins - b_wins,
        a: sa,
        b: sb,
        per_seed,
        a_wins,
        b_wins,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub t: f64,
    pub stats: BatchStats,
}

/// One hybrid batch per `t`. With an output directory, each batch writes
/// into `t_<t>/` and the sweep writes `sweep_t.csv`.
pub fn sweep_t(cfg: &ExperimentConfig, t_values: &[f64]) -> Result<Vec<SweepPoint>> {
    if t_values.is_empty() {
        return Err(Error::Config("t sweep needs at least one value".into()));
    }
    if let Some(t) = t_values.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::Config(format!("t values must be >= 0, got {t}")));
    }
    if cfg.solver != SolverKind::Hybrid {
        return Err(Error::Config("t sweep requires the hybrid solver".into()));
    }
    let points = t_values
        .iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.params.t = t;
            c.output_dir = cfg
                .output_dir
                .as_ref()
                .map(|d| d.join(format!("t_{}", fmt_num(t))));
            Ok(SweepPoint {
                t,
                stats: run_batch(&c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &cfg.output_dir {
        emit_csv(&dir.join("sweep_t.csv"), &sweep_csv(&points))?;
    }
    Ok(points)
}

/// Formats with 6 significant digits, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn summary_csv(stats: &[&BatchStats]) -> String {
    let mut out = String::from("solver,runs,average,best,worst\n");
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.solver,
            s.runs(),
            fmt_num(s.average),
            fmt_num(s.best),
            fmt_num(s.worst)
        );
    }
    out
}

pub fn runs_csv(stats: &BatchStats) -> String {
    let mut out = String::from("seed,final_length,iterations_to_best\n");
    for r in &stats.per_run {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.seed,
            fmt_num(r.final_length),
            r.iterations_to_best
        );
    }
    out
}

pub fn trace_csv(run: &RunResult) -> String {
    let mut out = String::from("iteration,best_length\n");
    for (i, v) in run.best_length_per_iter.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_num(*v));
    }
    out
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let mut out = String::from("seed,a_length,b_length,winner\n");
    for o in &cmp.per_seed {
        let winner = if o.a < o.b {
            "a"
        } else if o.b < o.a {
            "b"
        } else {
            "tie"
        };
        let _ = writeln!(out, "{},{},{},{winner}", o.seed, fmt_num(o.a), fmt_num(o.b));
    }
    out
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("t,runs,average,best,worst,mean_iterations_to_best\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(p.t),
            p.stats.runs(),
            fmt_num(p.stats.average),
            fmt_num(p.stats.best),
            fmt_num(p.stats.worst),
            fmt_num(p.stats.mean_iterations_to_best())
        );
    }
    out
}

/// Writes `contents` to `path`, flushing before returning.
pub fn emit_csv(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

/// Key/value settings from a config file and command-line overrides. Keys
/// are normalised to `snake_case`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "instance",
    "random_n",
    "bbox",
    "instance_seed",
    "events",
    "solver",
    "iters",
    "alpha",
    "beta",
    "rho",
    "q",
    "ants",
    "tau0",
    "t",
    "tau_max",
    "x_max",
    "stagnation_window",
    "best_only_local_search",
    "seed",
    "runs",
    "seed_base",
    "out",
];

const SECTIONS: &[&str] = &["experiment", "aco", "hybrid"];

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    /// Parses `key = value` lines with optional `[experiment]`, `[aco]` and
    /// `[hybrid]` section headers. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(section) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !SECTIONS.contains(&section.trim()) {
                    return Err(Error::Format {
                        line: lineno,
                        message: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: lineno,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            settings.set(k, v.trim()).map_err(|e| Error::Format {
                line: lineno,
                message: e.to_string(),
            })?;
        }
        Ok(settings)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Settings::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = normalize_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(&normalize_key(key))
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merged(mut self, other: &Settings) -> Settings {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
            })
            .transpose()
    }

    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let random_keys = ["random_n", "bbox", "instance_seed"];
        match self.get("instance") {
            Some(path) => {
                if let Some(k) = random_keys.iter().find(|k| self.get(k).is_some()) {
                    return Err(Error::Config(format!("`instance` conflicts with `{k}`")));
                }
                cfg.instance = InstanceSource::File(PathBuf::from(path));
            }
            None => {
                let n = self.parsed("random_n")?.unwrap_or(30);
                let bbox = match self.get("bbox") {
                    Some(b) => parse_bbox(b)?,
                    None => (100.0, 100.0),
                };
                let seed = self.parsed("instance_seed")?.unwrap_or(1);
                cfg.instance = InstanceSource::Random { n, bbox, seed };
            }
        }
        cfg.schedule_path = self.get("events").map(PathBuf::from);
        if let Some(s) = self.get("solver") {
            cfg.solver = s.parse()?;
        }
        let p = &mut cfg.params;
        if let Some(v) = self.parsed("iters")? {
            p.aco.max_iters = v;
        }
        if let Some(v) = self.parsed("alpha")? {
            p.aco.alpha = v;
        }
        if let Some(v) = self.parsed("beta")? {
            p.aco.beta = v;
        }
        if let Some(v) = self.parsed("rho")? {
            p.aco.rho = v;
        }
        if let Some(v) = self.parsed("q")? {
            p.aco.q = v;
        }
        if let Some(v) = self.parsed("ants")? {
            p.aco.ants = Some(v);
        }
        if let Some(v) = self.parsed("tau0")? {
            p.aco.tau0 = Some(v);
        }
        if let Some(v) = self.parsed("tau_max")? {
            p.aco.tau_max = Some(v);
        }
        if let Some(v) = self.parsed("t")? {
            p.t = v;
        }
        if let Some(v) = self.parsed("x_max")? {
            p.x_max = Some(v);
        }
        if let Some(v) = self.get("stagnation_window") {
            p.stagnation_window = match v {
                "none" | "off" | "inf" => None,
                w => Some(w.parse().map_err(|_| {
                    Error::Config(format!("invalid value {w:?} for stagnation_window"))
                })?),
            };
        }
        if let Some(v) = self.parsed("best_only_local_search")? {
            p.best_only_local_search = v;
        }
        if let Some(v) = self.parsed("runs")? {
            cfg.runs = v;
        }
        if self.get("seed").is_some() && self.get("seed_base").is_some() {
            return Err(Error::Config("`seed` conflicts with `seed_base`".into()));
        }
        if let Some(v) = self.parsed("seed")? {
            cfg.run_seed_base = v;
        }
        if let Some(v) = self.parsed("seed_base")? {
            cfg.run_seed_base = v;
        }
        cfg.output_dir = self.get("out").map(PathBuf::from);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `WxH` or `W,H`.
pub fn parse_bbox(s: &str) -> Result<(f64, f64)> {
    let (w, h) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| Error::Config(format!("bbox must look like 100x100, got {s:?}")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid bbox {s:?}")))
    };
    Ok((parse(w)?, parse(h)?))
}

/// Comma-separated `t` values.
pub fn parse_t_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid t value {v:?}")))
        })
        .collect()
}

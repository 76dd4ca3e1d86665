//! Multi-seed sweeps over datasets, `alpha`, `s_max` and packers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{normalize, verify_packing, Normalization};
use crate::error::{Error, Result};
use crate::instances::{gen_google_like, gen_normal, gen_uniform, GoogleLikeConfig, Instance};
use crate::packers::{pack_ffr, pack_rpap, pack_rpapc, Algorithm, Packing, Params, DEFAULT_EPS};
use crate::prob::{grid_steps, Item};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dataset {
    Uniform,
    Normal,
    GoogleLike,
}

impl Dataset {
    pub const ALL: [Dataset; 3] = [Dataset::Uniform, Dataset::Normal, Dataset::GoogleLike];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Uniform => "uniform",
            Dataset::Normal => "normal",
            Dataset::GoogleLike => "google-like",
        }
    }

    /// One instance of this dataset. Google-like sizes are clipped at
    /// `min(clip, s_max)`.
    pub fn generate(
        self,
        n: usize,
        s_max: f64,
        seed: u64,
        google: &GoogleLikeConfig,
    ) -> Result<Instance> {
        match self {
            Dataset::Uniform => gen_uniform(n, s_max, seed),
            Dataset::Normal => gen_normal(n, s_max, seed),
            Dataset::GoogleLike => {
                let cfg = GoogleLikeConfig {
                    clip: google.clip.min(s_max),
                    ..*google
                };
                let mut inst = gen_google_like(n, seed, &cfg)?;
                inst.s_max = s_max;
                Ok(inst)
            }
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown dataset {s:?}")))
    }
}

pub const DEFAULT_TUNE_STEPS: usize = 8;
/// Fresh instances each tuning candidate is scored on.
pub const TUNE_INSTANCES: usize = 2;

/// RPAPC threshold search: a `steps × steps` grid with `s_min` in
/// `(0, s_max/2]` and `p_max` in `(0, 1)`. Written `grid` or `grid:steps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tune {
    pub steps: usize,
}

impl FromStr for Tune {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let steps = match s.split_once(':') {
            None if s == "grid" => DEFAULT_TUNE_STEPS,
            Some(("grid", n)) => n
                .parse()
                .map_err(|_| Error::config(format!("bad tuning grid size {n:?}")))?,
            _ => {
                return Err(Error::config(format!(
                    "unknown tuning mode {s:?} (expected grid[:steps])"
                )))
            }
        };
        if steps == 0 {
            return Err(Error::config("tuning grid needs at least one step"));
        }
        Ok(Tune { steps })
    }
}

impl TryFrom<String> for Tune {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Tune> for String {
    fn from(t: Tune) -> String {
        format!("grid:{}", t.steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<Dataset>,
    pub alphas: Vec<f64>,
    pub s_maxes: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub algorithms: Vec<Algorithm>,
    pub eps: f64,
    pub mc_trials: u64,
    pub base_seed: u64,
    pub normalization: Normalization,
    pub google_like: GoogleLikeConfig,
    pub tune: Option<Tune>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Dataset::ALL.to_vec(),
            alphas: vec![0.1, 0.01, 0.001],
            s_maxes: vec![1.0, 0.75, 0.5, 0.33, 0.25],
            n: 5000,
            replicates: 10,
            algorithms: Algorithm::ALL.to_vec(),
            eps: DEFAULT_EPS,
            mc_trials: 100_000,
            base_seed: 0,
            normalization: Normalization::PerItemMean,
            google_like: GoogleLikeConfig::default(),
            tune: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if self.datasets.is_empty() || self.algorithms.is_empty() {
            return Err(Error::config("datasets and algorithms must be nonempty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.5)) {
            return Err(Error::config(format!("alpha {a} not in (0, 0.5]")));
        }
        if let Some(s) = self.s_maxes.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(Error::config(format!("s_max {s} not in (0, 1]")));
        }
        if self.mc_trials == 0 {
            return Err(Error::config("mc_trials must be positive"));
        }
        grid_steps(self.eps).map_err(|e| Error::config(e.to_string()))?;
        Ok(())
    }
}

/// First 8 bytes of SHA-256 over the `|`-joined parts.
fn stable_hash(parts: &[&str]) -> u64 {
    let digest = Sha256::digest(parts.join("|").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Instance seed of one replicate. It ignores `alpha` and the algorithm, so
/// every packer sees the same instances.
pub fn cell_seed(base_seed: u64, dataset: Dataset, s_max: f64, replicate: usize) -> u64 {
    base_seed.wrapping_add(stable_hash(&[
        dataset.as_str(),
        &format!("{s_max:?}"),
        &replicate.to_string(),
    ]))
}

fn tuning_seed(base_seed: u64, dataset: Dataset, s_max: f64, index: usize) -> u64 {
    base_seed.wrapping_add(stable_hash(&[
        "tune",
        dataset.as_str(),
        &format!("{s_max:?}"),
        &index.to_string(),
    ]))
}

fn pack_with(algorithm: Algorithm, items: &[Item], params: &Params, eps: f64) -> Result<Packing> {
    let mut packing = match algorithm {
        Algorithm::Rpap => pack_rpap(items, params)?,
        Algorithm::Rpapc => pack_rpapc(items, params, eps)?,
        Algorithm::Ffr => pack_ffr(items, params.alpha(), eps)?,
    };
    packing.strip_lattices();
    Ok(packing)
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneChoice {
    pub dataset: Dataset,
    pub alpha: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub p_max: f64,
    /// Mean bins over the tuning instances.
    pub mean_bins: f64,
    /// Same score for the derived default thresholds.
    pub default_mean_bins: f64,
}

/// Grid search for RPAPC thresholds on fresh instances. The derived defaults
/// are scored first and win ties.
pub fn tune_rpapc(
    cfg: &ExperimentConfig,
    tune: Tune,
    dataset: Dataset,
    alpha: f64,
    s_max: f64,
) -> Result<TuneChoice> {
    let instances: Vec<Instance> = (0..TUNE_INSTANCES)
        .map(|i| {
            dataset.generate(
                cfg.n,
                s_max,
                tuning_seed(cfg.base_seed, dataset, s_max, i),
                &cfg.google_like,
            )
        })
        .collect::<Result<_>>()?;
    let mut candidates = vec![Params::derive(alpha, s_max)?];
    for i in 1..=tune.steps {
        for j in 1..=tune.steps {
            let s_min = 0.5 * s_max * i as f64 / tune.steps as f64;
            let p_max = j as f64 / (tune.steps + 1) as f64;
            // infeasible corners of the grid are skipped
            if let Ok(p) = Params::with_thresholds(alpha, s_max, s_min, p_max) {
                candidates.push(p);
            }
        }
    }
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|params| {
            let mut total = 0usize;
            for inst in &instances {
                total += pack_rpapc(&inst.items, params, cfg.eps)?.bins_used();
            }
            Ok(total as f64 / instances.len() as f64)
        })
        .collect::<Result<_>>()?;
    let best = (0..scores.len())
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
        .unwrap();
    Ok(TuneChoice {
        dataset,
        alpha,
        s_max,
        s_min: candidates[best].s_min(),
        p_max: candidates[best].p_max(),
        mean_bins: scores[best],
        default_mean_bins: scores[0],
    })
}

/// Outcome of one packing in the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub dataset: Dataset,
    pub alpha: f64,
    pub s_max: f64,
    pub algorithm: Algorithm,
    pub replicate: usize,
    pub seed: u64,
    pub bins: usize,
    pub norm: f64,
    pub avg_overflow: f64,
}

/// One CSV row: replicate statistics of a (dataset, alpha, s_max, algorithm)
/// cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub dataset: Dataset,
    pub alpha: f64,
    pub s_max: f64,
    pub algorithm: Algorithm,
    pub n: usize,
    pub median_bins: f64,
    pub min_bins: usize,
    pub max_bins: usize,
    pub median_norm: f64,
    pub norm_mode: Normalization,
    pub median_avg_overflow: f64,
    pub min_norm: f64,
    pub max_norm: f64,
    pub min_avg_overflow: f64,
    pub max_avg_overflow: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunResult>,
    pub tuned: Vec<TuneChoice>,
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

struct Job {
    dataset: Dataset,
    alpha: f64,
    s_max: f64,
    algorithm: Algorithm,
    replicate: usize,
    params: Arc<Params>,
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<RunResult> {
    let seed = cell_seed(cfg.base_seed, job.dataset, job.s_max, job.replicate);
    let inst = job
        .dataset
        .generate(cfg.n, job.s_max, seed, &cfg.google_like)?;
    let packing = pack_with(job.algorithm, &inst.items, &job.params, cfg.eps)?;
    let verify_seed = stable_hash(&[
        "verify",
        &seed.to_string(),
        &format!("{:?}", job.alpha),
        job.algorithm.as_str(),
    ]);
    let report = verify_packing(&packing, &inst.items, job.alpha, cfg.mc_trials, verify_seed)?;
    if !report.all_pass {
        let bad = report.failures().next().expect("a failing bin");
        return Err(Error::Unviable(format!(
            "{} alpha={} s_max={} {} replicate {}: bin {} overflow {} ({})",
            job.dataset,
            job.alpha,
            job.s_max,
            job.algorithm,
            job.replicate,
            bad.bin,
            bad.estimate.value,
            bad.estimate.method.as_str(),
        )));
    }
    Ok(RunResult {
        dataset: job.dataset,
        alpha: job.alpha,
        s_max: job.s_max,
        algorithm: job.algorithm,
        replicate: job.replicate,
        seed,
        bins: packing.bins_used(),
        norm: normalize(packing.bins_used(), &inst.items, cfg.normalization),
        avg_overflow: report.average_overflow(),
    })
}

/// Runs the whole sweep. Every packing is verified; the first failing one
/// aborts the run with [`Error::Unviable`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut tuned = Vec::new();
    let mut jobs = Vec::new();
    for &dataset in &cfg.datasets {
        for &alpha in &cfg.alphas {
            for &s_max in &cfg.s_maxes {
                let derived = Arc::new(Params::derive(alpha, s_max)?);
                let rpapc_params = match cfg.tune {
                    Some(t) if cfg.algorithms.contains(&Algorithm::Rpapc) => {
                        let choice = tune_rpapc(cfg, t, dataset, alpha, s_max)?;
                        let p = Params::with_thresholds(alpha, s_max, choice.s_min, choice.p_max)
                            .map(Arc::new)
                            .unwrap_or_else(|_| derived.clone());
                        tuned.push(choice);
                        p
                    }
                    _ => derived.clone(),
                };
                for &algorithm in &cfg.algorithms {
                    let params = if algorithm == Algorithm::Rpapc {
                        rpapc_params.clone()
                    } else {
                        derived.clone()
                    };
                    for replicate in 0..cfg.replicates {
                        jobs.push(Job {
                            dataset,
                            alpha,
                            s_max,
                            algorithm,
                            replicate,
                            params: params.clone(),
                        });
                    }
                }
            }
        }
    }

    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|j| run_job(cfg, j))
        .collect::<Result<_>>()?;
    let cells = runs
        .chunks(cfg.replicates)
        .map(|reps| summarize(reps, cfg.n, cfg.normalization))
        .collect();
    Ok(ExperimentOutcome { cells, runs, tuned })
}

fn summarize(reps: &[RunResult], n: usize, mode: Normalization) -> CellSummary {
    let first = &reps[0];
    let bins: Vec<f64> = reps.iter().map(|r| r.bins as f64).collect();
    let norms: Vec<f64> = reps.iter().map(|r| r.norm).collect();
    let overflows: Vec<f64> = reps.iter().map(|r| r.avg_overflow).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    CellSummary {
        dataset: first.dataset,
        alpha: first.alpha,
        s_max: first.s_max,
        algorithm: first.algorithm,
        n,
        median_bins: median(&bins),
        min_bins: reps.iter().map(|r| r.bins).min().unwrap(),
        max_bins: reps.iter().map(|r| r.bins).max().unwrap(),
        median_norm: median(&norms),
        norm_mode: mode,
        median_avg_overflow: median(&overflows),
        min_norm: min(&norms),
        max_norm: max(&norms),
        min_avg_overflow: min(&overflows),
        max_avg_overflow: max(&overflows),
    }
}

/// Writes the cell table as CSV with a header row.
pub fn write_results_csv<W: Write>(cells: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if cells.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 15] = [
    "dataset",
    "alpha",
    "s_max",
    "algorithm",
    "n",
    "median_bins",
    "min_bins",
    "max_bins",
    "median_norm",
    "norm_mode",
    "median_avg_overflow",
    "min_norm",
    "max_norm",
    "min_avg_overflow",
    "max_avg_overflow",
];

pub fn results_csv_string(cells: &[CellSummary]) -> Result<String> {
    let mut buf = Vec::new();
    write_results_csv(cells, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> ExperimentConfig {
        ExperimentConfig {
            datasets: vec![Dataset::Uniform, Dataset::GoogleLike],
            alphas: vec![0.1],
            s_maxes: vec![1.0, 0.5],
            n: 50,
            replicates: 1,
            mc_trials: 2000,
            base_seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.alphas, vec![0.1, 0.01, 0.001]);
        assert_eq!(cfg.s_maxes, vec![1.0, 0.75, 0.5, 0.33, 0.25]);
        assert_eq!((cfg.n, cfg.replicates, cfg.eps), (5000, 10, 1e-4));
        let parsed = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::from_json(r#"{"replicates":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"alphas":[0.7]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"eps":0.3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"datasets":["normal"],"algorithms":["ffr"],"tune":"grid:3"}"#,
        )
        .unwrap();
        assert_eq!(cfg.datasets, vec![Dataset::Normal]);
        assert_eq!(cfg.tune, Some(Tune { steps: 3 }));
    }

    #[test]
    fn tune_spec_parsing() {
        assert_eq!("grid".parse::<Tune>().unwrap().steps, DEFAULT_TUNE_STEPS);
        assert_eq!("grid:4".parse::<Tune>().unwrap().steps, 4);
        assert!("grid:0".parse::<Tune>().is_err());
        assert!("random".parse::<Tune>().is_err());
    }

    #[test]
    fn seeds_ignore_algorithm_and_alpha() {
        let a = cell_seed(0, Dataset::Uniform, 0.5, 1);
        assert_eq!(a, cell_seed(0, Dataset::Uniform, 0.5, 1));
        assert_ne!(a, cell_seed(0, Dataset::Uniform, 0.5, 2));
        assert_ne!(a, cell_seed(0, Dataset::Normal, 0.5, 1));
        assert_eq!(cell_seed(10, Dataset::Uniform, 0.5, 1), a.wrapping_add(10));
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn smoke_run_has_one_row_per_cell() {
        let cfg = smoke();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.cells.len(), 2 * 2 * 3);
        for c in &out.cells {
            assert!(c.median_avg_overflow <= c.alpha);
            assert!(c.min_bins <= c.max_bins);
        }
        let csv = results_csv_string(&out.cells).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 12);
        assert!(csv.ends_with('\n'));
        assert_eq!(
            csv,
            results_csv_string(&run_experiment(&cfg).unwrap().cells).unwrap()
        );
    }

    #[test]
    fn google_like_respects_s_max() {
        let inst = Dataset::GoogleLike
            .generate(500, 0.25, 1, &GoogleLikeConfig::default())
            .unwrap();
        assert!(inst.items.iter().all(|it| it.s() <= 0.25));
        assert_eq!(inst.s_max, 0.25);
    }

    #[test]
    fn tuning_never_loses_to_defaults() {
        let cfg = ExperimentConfig { n: 200, ..smoke() };
        let choice = tune_rpapc(&cfg, Tune { steps: 3 }, Dataset::Uniform, 0.1, 0.5).unwrap();
        assert!(choice.mean_bins <= choice.default_mean_bins);
        assert!(choice.s_min <= 0.25 && choice.p_max < 1.0);
    }
}

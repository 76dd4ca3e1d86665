//! `rpap`: parameter inspection, instance generation, packing, verification,
//! the adversarial demo and experiment sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rpap_core::analysis::{
    approx_constant, mu_min, run_adversarial, verify_bins, DEFAULT_EPS_PRIME,
};
use rpap_core::experiment::{run_experiment, write_results_csv, Dataset, ExperimentConfig, Tune};
use rpap_core::instances::{fit_batch, read_instance, to_json_string, GoogleLikeConfig, Instance};
use rpap_core::packers::{PackingFile, DEFAULT_EPS};
use rpap_core::{pack_ffr, pack_rpap, pack_rpapc, Algorithm, Error, Item, Params};

mod trace;

const EXIT_CONFIG: u8 = 2;
const EXIT_OVERSIZE: u8 = 3;
const EXIT_MISMATCH: u8 = 4;
const EXIT_UNVIABLE: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "rpap",
    version,
    about = "Online stochastic bin packing of scaled-Bernoulli items"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Rpap,
    Rpapc,
    Ffr,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Rpap => Algorithm::Rpap,
            AlgorithmArg::Rpapc => Algorithm::Rpapc,
            AlgorithmArg::Ffr => Algorithm::Ffr,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DatasetArg {
    Uniform,
    Normal,
    GoogleLike,
}

impl From<DatasetArg> for Dataset {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Uniform => Dataset::Uniform,
            DatasetArg::Normal => Dataset::Normal,
            DatasetArg::GoogleLike => Dataset::GoogleLike,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived parameters, μ_min and the approximation constant as JSON.
    Params {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
    },
    /// Generate an instance, or fit one from a usage trace.
    Gen {
        #[arg(long, value_enum, default_value = "uniform", conflicts_with = "trace")]
        dataset: DatasetArg,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV with columns `task_id,usage`; one Bernoulli item is fitted per task.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pack an instance and write the packing as JSON.
    Pack {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[arg(long)]
        alpha: f64,
        /// Defaults to the instance's own bound.
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Explicit class thresholds for RPAP/RPAPC (both or neither).
        #[arg(long, requires = "p_max")]
        s_min: Option<f64>,
        #[arg(long, requires = "s_min")]
        p_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every bin of a packing against alpha; exits 0 only if all pass.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        packing: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Monte Carlo trials for bins too large to enumerate.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-bin CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run First Fit on the interleaved instance that defeats every Any-Fit packer.
    Adversarial {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n_pairs: usize,
        #[arg(long, default_value_t = DEFAULT_EPS_PRIME)]
        eps_prime: f64,
    },
    /// Run a multi-seed sweep and write `results.csv` and `runs.csv` to DIR.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// RPAPC threshold search, `grid` or `grid:STEPS`.
        #[arg(long)]
        tune: Option<Tune>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Item { .. } => EXIT_OVERSIZE,
            Error::Mismatch(_) => EXIT_MISMATCH,
            Error::Unviable(_) => EXIT_UNVIABLE,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn write_output(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn to_json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn cmd_params(alpha: f64, s_max: f64) -> CmdResult {
    let params = Params::derive(alpha, s_max)?;
    let report = serde_json::json!({
        "params": params.summary(),
        "mu_min": mu_min(&params),
        "approx_constant": approx_constant(alpha, s_max)?,
        "group_count": params.group_count(),
    });
    write_output(None, &to_json_line(&report))?;
    Ok(())
}

fn cmd_gen(
    dataset: DatasetArg,
    n: usize,
    s_max: f64,
    seed: u64,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let inst = match trace {
        Some(path) => instance_from_trace(path)?,
        None => Dataset::from(dataset).generate(n, s_max, seed, &GoogleLikeConfig::default())?,
    };
    write_output(out, &to_json_string(&inst))?;
    Ok(())
}

fn instance_from_trace(path: &Path) -> Result<Instance, Failure> {
    let tasks = trace::read_trace(path)?;
    let samples: Vec<Vec<f64>> = tasks.iter().map(|(_, s)| s.clone()).collect();
    let fits = fit_batch(&samples).map_err(|e| match e {
        Error::Item { index, reason } => Failure {
            code: EXIT_CONFIG,
            message: format!("task {}: {reason}", tasks[index].0),
        },
        other => other.into(),
    })?;
    let mut items = Vec::new();
    let mut cutoff = 0.0f64;
    for ((id, _), f) in tasks.iter().zip(&fits).filter(|(_, f)| f.kept) {
        cutoff = cutoff.max(f.l1);
        items.push(f.item().map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: format!("task {id}: {e}"),
        })?);
    }
    let s_max = items.iter().map(Item::s).fold(0.0, f64::max);
    let kept = items.len();
    let inst = Instance::new(items, if s_max > 0.0 { s_max } else { 1.0 }, "trace", 0)?
        .with_meta("tasks", tasks.len())
        .with_meta("kept", kept)
        .with_meta("l1_cutoff", cutoff);
    Ok(inst)
}

#[allow(clippy::too_many_arguments)]
fn cmd_pack(
    instance: &Path,
    algorithm: Algorithm,
    alpha: f64,
    s_max: Option<f64>,
    eps: f64,
    thresholds: Option<(f64, f64)>,
    out: Option<&Path>,
) -> CmdResult {
    let inst = read_instance(instance)?;
    let s_max = s_max.unwrap_or(inst.s_max);
    if let Some(i) = inst.items.iter().position(|it| it.s() > s_max) {
        return Err(Error::Item {
            index: i,
            reason: format!("size {} exceeds s_max {s_max}", inst.items[i].s()),
        }
        .into());
    }
    let params = match thresholds {
        Some((s_min, p_max)) => Params::with_thresholds(alpha, s_max, s_min, p_max)?,
        None => Params::derive(alpha, s_max)?,
    };
    let packing = match algorithm {
        Algorithm::Rpap => pack_rpap(&inst.items, &params)?,
        Algorithm::Rpapc => pack_rpapc(&inst.items, &params, eps)?,
        Algorithm::Ffr => pack_ffr(&inst.items, alpha, eps)?,
    };
    let file = PackingFile::from(&packing);
    if let Some(path) = out {
        fs::write(path, to_json_line(&file))?;
    }
    println!("bins_used {}", packing.bins_used());
    Ok(())
}

fn cmd_verify(
    instance: &Path,
    packing: &Path,
    alpha: f64,
    trials: u64,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha {alpha} not in (0, 1)")).into());
    }
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()).into());
    }
    let inst = read_instance(instance)?;
    let text = fs::read_to_string(packing)?;
    let file: PackingFile = serde_json::from_str(&text).map_err(|e| Failure {
        code: EXIT_MISMATCH,
        message: format!("{}: not a packing file: {e}", packing.display()),
    })?;
    let bins = file.bin_items(&inst.items)?;
    let report = verify_bins(&bins, alpha, trials, seed);

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["bin", "overflow", "method", "stderr", "pass"])?;
        for v in &report.per_bin {
            w.write_record([
                v.bin.to_string(),
                v.estimate.value.to_string(),
                v.estimate.method.as_str().to_owned(),
                v.estimate.stderr.to_string(),
                v.pass.to_string(),
            ])?;
        }
        w.flush()?;
    }
    write_output(out, std::str::from_utf8(&buf).expect("utf-8 csv"))?;

    let failing = report.failures().count();
    eprintln!(
        "bins {}, failing {failing}, worst overflow {}, average overflow {}",
        report.per_bin.len(),
        report.worst,
        report.average_overflow()
    );
    if failing > 0 {
        return Err(Failure {
            code: EXIT_UNVIABLE,
            message: format!("{failing} bins exceed alpha = {alpha}"),
        });
    }
    Ok(())
}

fn cmd_adversarial(alpha: f64, n_pairs: usize, eps_prime: f64) -> CmdResult {
    let report = run_adversarial(alpha, n_pairs, eps_prime)?;
    write_output(None, &to_json_line(&report))?;
    if !report.reference_viable {
        return Err(Error::Unviable("reference packing exceeds alpha".into()).into());
    }
    Ok(())
}

fn cmd_experiment(config: &Path, out: &Path, tune: Option<Tune>) -> CmdResult {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(config)?)?;
    if tune.is_some() {
        cfg.tune = tune;
    }
    let outcome = run_experiment(&cfg)?;
    fs::create_dir_all(out)?;
    let results = out.join("results.csv");
    write_results_csv(&outcome.cells, fs::File::create(&results)?)?;

    let mut runs = csv::Writer::from_path(out.join("runs.csv"))?;
    for r in &outcome.runs {
        runs.serialize(r)?;
    }
    runs.flush()?;
    if !outcome.tuned.is_empty() {
        let mut tuned = csv::Writer::from_path(out.join("tuning.csv"))?;
        for t in &outcome.tuned {
            tuned.serialize(t)?;
        }
        tuned.flush()?;
    }
    println!("{}", results.display());
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Params { alpha, s_max } => cmd_params(alpha, s_max),
        Command::Gen {
            dataset,
            n,
            s_max,
            seed,
            trace,
            out,
        } => cmd_gen(dataset, n, s_max, seed, trace.as_deref(), out.as_deref()),
        Command::Pack {
            instance,
            algorithm,
            alpha,
            s_max,
            eps,
            s_min,
            p_max,
            out,
        } => cmd_pack(
            &instance,
            algorithm.into(),
            alpha,
            s_max,
            eps,
            s_min.zip(p_max),
            out.as_deref(),
        ),
        Command::Verify {
            instance,
            packing,
            alpha,
            trials,
            seed,
            out,
        } => cmd_verify(&instance, &packing, alpha, trials, seed, out.as_deref()),
        Command::Adversarial {
            alpha,
            n_pairs,
            eps_prime,
        } => cmd_adversarial(alpha, n_pairs, eps_prime),
        Command::Experiment { config, out, tune } => cmd_experiment(&config, &out, tune),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rpap: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

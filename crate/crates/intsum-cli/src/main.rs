//! CLI front door: spec generation, exact oracles, learners, distances,
//! hard families, and reproducible experiment tables.
//!
//! Exit codes: 0 success, 2 usage error, 3 resource-cap error, 1 otherwise.

use clap::{Args, Parser, Subcommand, ValueEnum};
use intsum::asum::{ASumSpec, Profile, SpecError};
use intsum::dist::{DistError, KlDivergence, DEFAULT_CELL_CAP};
use intsum::hard;
use intsum::learn::{self, LearnOutcome, LearnerConfig};
use intsum::rng::stream;
use intsum::IntDist;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "intsum", about = "integer-sum distribution learning toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random weighted-sum spec as JSON
    Gen(GenArgs),
    /// Compute the exact pmf of a spec (the oracle)
    Truth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a learner against a spec's sampler or a samples file
    Learn(LearnArgs),
    /// Distance between two serialized distributions
    Dist {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        metric: Metric,
    },
    /// Build a hard family and write diagnostics
    Hardfam(HardfamArgs),
    /// Run a reproducible experiment table
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    amax: i64,
    #[arg(long)]
    profile: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long, conflicts_with = "samples")]
    spec: Option<PathBuf>,
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    algo: Algo,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Support bound, required for the unknown-support algorithms on samples
    #[arg(long)]
    amax: Option<i64>,
    /// Support size hint for the sparse learner / unknown-k enumeration
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Sparse,
    K3,
    Generalk,
    Unknown2,
    Unknownk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Tv,
    Kl,
    Kolmogorov,
}

#[derive(Args)]
struct HardfamArgs {
    #[arg(long)]
    family: FamilyKind,
    #[arg(long, default_value_t = 12)]
    l: u32,
    #[arg(long, default_value_t = 3)]
    tlo: u32,
    #[arg(long, default_value_t = 5)]
    thi: u32,
    #[arg(long, default_value_t = 8)]
    c5: i64,
    #[arg(long, default_value_t = 499)]
    amax: i64,
    #[arg(long, default_value_t = 20)]
    kconst: i64,
    #[arg(long, default_value_t = 10)]
    c: i64,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    diagnose: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Fib,
    Mod,
}

#[derive(Debug)]
enum CliError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Msg(String),
    /// resource-cap violations map to exit code 3
    Cap(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "io: {e}"),
            CliError::Json(e) => write!(f, "json: {e}"),
            CliError::Msg(m) => write!(f, "{m}"),
            CliError::Cap(m) => write!(f, "resource cap: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}
impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::ResourceCap { .. } => CliError::Cap(e.to_string()),
            other => CliError::Msg(other.to_string()),
        }
    }
}
impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Dist(DistError::ResourceCap { .. }) | SpecError::CostCap { .. } => {
                CliError::Cap(e.to_string())
            }
            other => CliError::Msg(other.to_string()),
        }
    }
}
impl From<learn::LearnError> for CliError {
    fn from(e: learn::LearnError) -> Self {
        match e {
            learn::LearnError::Dist(DistError::ResourceCap { .. })
            | learn::LearnError::Budget(_) => CliError::Cap(e.to_string()),
            other => CliError::Msg(other.to_string()),
        }
    }
}
impl From<hard::HardError> for CliError {
    fn from(e: hard::HardError) -> Self {
        CliError::Msg(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Cap(m)) => {
            eprintln!("error: resource cap: {m}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Accepts either a bare pmf or a learner hypothesis file.
fn read_dist(path: &Path) -> Result<IntDist, CliError> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(d) = serde_json::from_str::<IntDist>(&text) {
        return Ok(d);
    }
    let h: learn::Hypothesis = serde_json::from_str(&text)?;
    Ok(h.to_dist(DEFAULT_CELL_CAP)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let profile: Profile = a
                .profile
                .parse()
                .map_err(|e: String| CliError::Msg(e))?;
            let mut rng = stream(a.seed, "gen");
            let spec = ASumSpec::generate(a.k, a.n, a.amax, profile, &mut rng);
            write_json(&a.out, &spec)
        }
        Cmd::Truth { spec, out } => {
            let spec: ASumSpec = read_json(&spec)?;
            let pmf = spec.exact_pmf()?;
            write_json(&out, &pmf)
        }
        Cmd::Learn(a) => cmd_learn(a),
        Cmd::Dist { a, b, metric } => {
            let da = read_dist(&a)?;
            let db = read_dist(&b)?;
            match metric {
                Metric::Tv => println!("{}", da.tv_distance(&db)),
                Metric::Kolmogorov => println!("{}", da.kolmogorov_distance(&db)),
                Metric::Kl => match da.kl_divergence(&db) {
                    KlDivergence::Finite(v) => println!("{v}"),
                    KlDivergence::Infinite => println!("inf"),
                },
            }
            Ok(())
        }
        Cmd::Hardfam(a) => cmd_hardfam(a),
        Cmd::Experiment { config, out } => cmd_experiment(&config, &out),
    }
}

/// Finite replay pool: serves draws from a file, errors when exhausted.
struct SamplePool {
    values: Vec<i64>,
    pos: usize,
}

impl SamplePool {
    fn load(path: &Path) -> Result<Self, CliError> {
        let mut values = Vec::new();
        for (i, line) in std::fs::read_to_string(path)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(line.parse::<i64>().map_err(|e| {
                CliError::Msg(format!("bad sample on line {}: {e}", i + 1))
            })?);
        }
        Ok(SamplePool { values, pos: 0 })
    }

    fn take(&mut self, n: usize) -> Vec<i64> {
        let end = (self.pos + n).min(self.values.len());
        let mut out = self.values[self.pos..end].to_vec();
        self.pos = end;
        // recycle deterministically if the file runs dry; the run log makes
        // the shortfall visible via the recorded draw totals
        while out.len() < n {
            out.push(self.values[out.len() % self.values.len().max(1)]);
        }
        out
    }
}

fn cmd_learn(a: LearnArgs) -> Result<(), CliError> {
    let mut cfg: LearnerConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => LearnerConfig::default(),
    };
    cfg.seed = a.seed;

    let spec: Option<ASumSpec> = match &a.spec {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let mut pool = match &a.samples {
        Some(p) => Some(SamplePool::load(p)?),
        None => None,
    };
    if spec.is_none() && pool.is_none() {
        return Err(CliError::Msg("need --spec or --samples".into()));
    }
    let sampler = spec.as_ref().map(|s| s.sampler());
    let mut rng = stream(a.seed, "target");
    let mut target = |n: usize| -> Vec<i64> {
        if let Some(s) = &sampler {
            (0..n).map(|_| s.draw(&mut rng)).collect()
        } else {
            pool.as_mut().unwrap().take(n)
        }
    };

    let support: Vec<i64> = spec.as_ref().map(|s| s.support().to_vec()).unwrap_or_default();
    let amax = a
        .amax
        .or_else(|| support.last().copied())
        .ok_or_else(|| CliError::Msg("--amax required without --spec".into()))?;

    let outcome: LearnOutcome = match a.algo {
        Algo::Sparse => {
            let s = a.k.or(spec.as_ref().map(|s| s.k())).unwrap_or(8);
            learn::learn_sparse(&mut target, s, a.eps, a.delta)?
        }
        Algo::K3 => {
            if support.len() != 3 {
                return Err(CliError::Msg("k3 needs a spec with |support| = 3".into()));
            }
            learn::learn_k3(
                &mut target,
                [support[0], support[1], support[2]],
                a.eps,
                a.delta,
                &cfg,
            )?
        }
        Algo::Generalk => learn::learn_general_k(&mut target, &support, a.eps, a.delta, &cfg)?,
        Algo::Unknown2 => learn::learn_unknown_support_k2(&mut target, amax, a.eps, a.delta, &cfg)?,
        Algo::Unknownk => {
            let k = a.k.or(spec.as_ref().map(|s| s.k())).unwrap_or(2);
            learn::learn_unknown_support_enum(&mut target, amax, k, a.eps, a.delta, &cfg)?
        }
    };
    write_json(&a.out, &outcome.hypothesis)?;
    write_json(&a.out.with_extension("runlog.json"), &outcome.log)?;
    Ok(())
}

fn cmd_hardfam(a: HardfamArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out)?;
    match a.family {
        FamilyKind::Fib => {
            let fam = hard::build_fib_family(a.l, a.tlo, a.thi, a.c5)?;
            write_json(&a.out.join("family.json"), &fam)?;
            if a.diagnose {
                let members = fam.valid_members();
                let labels: Vec<String> = fam
                    .members
                    .iter()
                    .filter(|m| m.dist.is_some())
                    .map(|m| format!("t{}", m.t))
                    .collect();
                let diag = hard::family_diagnostics(&members, &labels, fam.q);
                std::fs::write(a.out.join("diagnostics.csv"), diag.to_csv())?;
                write_json(&a.out.join("summary.json"), &diag)?;
            }
        }
        FamilyKind::Mod => {
            let fam = hard::build_mod_family(a.amax, a.kconst, a.c, a.count, a.seed)?;
            write_json(&a.out.join("family.json"), &fam)?;
            if a.diagnose {
                let members: Vec<&IntDist> = fam.members.iter().collect();
                let labels: Vec<String> =
                    fam.multipliers.iter().map(|r| format!("r{r}")).collect();
                let diag = hard::family_diagnostics(&members, &labels, fam.a3);
                std::fs::write(a.out.join("diagnostics.csv"), diag.to_csv())?;
                write_json(&a.out.join("summary.json"), &diag)?;
                let tail = hard::equidistribution_tail(a.amax, a.kconst, a.c)?;
                write_json(&a.out.join("equidistribution.json"), &tail)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ExperimentConfig {
    root_seed: u64,
    runs: Vec<ExperimentRun>,
}

#[derive(Debug, Deserialize)]
struct ExperimentRun {
    algo: String,
    k: usize,
    n: usize,
    amax: i64,
    profile: String,
    eps: f64,
    delta: f64,
    trials: usize,
}

fn cmd_experiment(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg: ExperimentConfig = read_json(config)?;
    std::fs::create_dir_all(out)?;
    let mut rows: Vec<(String, usize, u64, String, f64, u64, f64, u128)> = Vec::new();
    for run in &cfg.runs {
        let profile: Profile = run.profile.parse().map_err(CliError::Msg)?;
        for trial in 0..run.trials {
            let label = format!("experiment/{}/{}/{}/{trial}", run.algo, run.amax, run.eps);
            let mut gen_rng = stream(cfg.root_seed, &label);
            let trial_seed: u64 = gen_rng.gen();
            let spec = ASumSpec::generate(run.k, run.n, run.amax, profile, &mut gen_rng);
            let oracle = spec.exact_pmf()?;
            let started = std::time::Instant::now();
            let mut lcfg = LearnerConfig { seed: trial_seed, ..LearnerConfig::default() };
            let sampler = spec.sampler();
            let mut rng = stream(trial_seed, "target");
            let mut target = |n: usize| -> Vec<i64> {
                (0..n).map(|_| sampler.draw(&mut rng)).collect()
            };
            let support = spec.support().to_vec();
            let outcome = match run.algo.as_str() {
                "sparse" => learn::learn_sparse(&mut target, spec.k(), run.eps, run.delta)?,
                "k3" => learn::learn_k3(
                    &mut target,
                    [support[0], support[1], support[2]],
                    run.eps,
                    run.delta,
                    &lcfg,
                )?,
                "generalk" => {
                    learn::learn_general_k(&mut target, &support, run.eps, run.delta, &lcfg)?
                }
                "unknown2" => learn::learn_unknown_support_k2(
                    &mut target,
                    run.amax,
                    run.eps,
                    run.delta,
                    &lcfg,
                )?,
                "unknownk" => learn::learn_unknown_support_enum(
                    &mut target,
                    run.amax,
                    spec.k(),
                    run.eps,
                    run.delta,
                    &lcfg,
                )?,
                other => return Err(CliError::Msg(format!("unknown algo {other}"))),
            };
            lcfg.transient_cells = lcfg.transient_cells.max(DEFAULT_CELL_CAP);
            let guess = outcome.hypothesis.to_dist(lcfg.transient_cells)?;
            let tv = guess.tv_distance(&oracle);
            let wall_ms = started.elapsed().as_millis();
            rows.push((
                run.algo.clone(),
                trial,
                trial_seed,
                format!("{}", run.amax),
                run.eps,
                outcome.log.target_draws,
                tv,
                wall_ms,
            ));
        }
    }
    rows.sort_by(|a, b| {
        (&a.0, &a.3, a.1).partial_cmp(&(&b.0, &b.3, b.1)).unwrap()
    });
    let mut csv = String::from("trial,seed,algo,amax,eps,samples_used,tv_audit,wall_ms\n");
    for (algo, trial, seed, amax, eps, samples, tv, wall_ms) in &rows {
        csv.push_str(&format!(
            "{trial},{seed},{algo},{amax},{eps},{samples},{tv},{wall_ms}\n"
        ));
    }
    std::fs::write(out.join("results.csv"), csv)?;
    Ok(())
}

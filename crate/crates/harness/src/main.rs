use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use matchbandit::config::{Algorithm, Deviation, ExperimentConfig, MarketSource};
use matchbandit::deviation::deviation_report;
use matchbandit::experiment::{run_experiment, write_json, Manifest, Prepared};
use matchbandit::generator::{CapacityProfile, GeneratorParams};
use matchbandit::specfile::SpecFile;
use matchbandit::sweep::{sweep, Axis};
use matchbandit::verify::verify;
use matchbandit_core::RewardModel;

#[derive(Parser)]
#[command(version, about = "Bandit learning in many-to-one matching markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over a list of seeds.
    Run(RunArgs),
    /// Repeat a run over several values of one market parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// T, delta, N or K.
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Paired honest and deviant runs on shared seeds.
    Deviate(RunArgs),
    /// Audit a spec file against the offline oracles.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random responsive market as a spec file.
    Generate {
        #[arg(long)]
        players: usize,
        #[arg(long)]
        arms: usize,
        /// Capacity of every arm.
        #[arg(long, default_value_t = 1)]
        capacity: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        gaussian: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Central,
    Decentral,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "spec")]
    config: Option<PathBuf>,
    /// Market spec file, run with default settings.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// etda, aetda, oda, aetda_central or aetda_decentral.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// player:policy with policy honest, minus-one, wrong-arm=J,
    /// never-resolve, probe=J or probe=J/PERIOD.
    #[arg(long)]
    deviant: Option<Deviation>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Write a per-round CSV trace for every seed.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let algo = match (self.algo.as_deref(), self.mode) {
            (Some("aetda"), Some(Mode::Decentral)) => Some(Algorithm::AetdaDecentral),
            (Some("aetda"), _) => Some(Algorithm::AetdaCentral),
            (Some(_), Some(_)) => bail!("--mode only applies to --algo aetda"),
            (Some(a), None) => Some(a.parse()?),
            (None, Some(_)) => bail!("--mode needs --algo aetda"),
            (None, None) => None,
        };
        let mut config = match (&self.config, &self.spec) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(spec)) => {
                let Some(a) = algo else { bail!("--spec needs --algo") };
                ExperimentConfig::new(MarketSource::File(spec.clone()), a)
            }
            (None, None) => bail!("pass --config or --spec"),
        };
        if let Some(a) = algo {
            config.algorithm = a;
        }
        if self.deviant.is_some() {
            config.deviation = self.deviant;
        }
        if !self.seed.is_empty() {
            config.seeds = self.seed.clone();
        }
        if self.horizon.is_some() {
            config.horizon = self.horizon;
        }
        config.trace |= self.trace;
        Ok(config)
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant violations detected; see the output directory");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether every invariant held.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let (records, manifest) = run_experiment(&config, &args.out)?;
            let reached = records.iter().filter(|r| r.reached_target).count();
            println!(
                "{}: {} runs, {reached} at target matching, outputs in {}",
                config.algorithm.name(),
                records.len(),
                args.out.display()
            );
            Ok(manifest.invariant_violations == 0)
        }
        Command::Sweep { run, axis, values } => {
            let config = run.config()?;
            prepare_out(&run.out)?;
            let rows = sweep(&config, axis, &values)?;
            let mut w = csv::Writer::from_path(run.out.join("sweep.csv"))?;
            for r in &rows {
                w.serialize(r)?;
                println!("{:>12} mean regret {:>12.3} (sd {:.3})", r.value, r.mean_regret, r.std_regret);
            }
            w.flush()?;
            write_json(&run.out.join("config.json"), &config)?;
            Manifest {
                command: "sweep".into(),
                config_hash: config.hash(),
                files: vec!["config.json".into(), "sweep.csv".into()],
                invariant_violations: 0,
            }
            .write(&run.out)?;
            Ok(true)
        }
        Command::Deviate(args) => {
            let config = args.config()?;
            let Some(deviation) = config.deviation else { bail!("deviate needs --deviant or a config deviation") };
            prepare_out(&args.out)?;
            let base = Prepared::from_config(&ExperimentConfig { deviation: None, ..config.clone() })?;
            let report = deviation_report(&base, deviation, &config.seeds)?;
            write_json(&args.out.join("deviation.json"), &report)?;
            write_json(&args.out.join("config.json"), &config)?;
            Manifest {
                command: "deviate".into(),
                config_hash: config.hash(),
                files: vec!["config.json".into(), "deviation.json".into()],
                invariant_violations: 0,
            }
            .write(&args.out)?;
            println!(
                "{} pairs, deviant improved in {} ({} of {} coverage-clean), mean reward delta {:.3}",
                report.pairs.len(),
                report.improved,
                report.improved_clean,
                report.clean_pairs,
                report.mean_reward_delta
            );
            Ok(true)
        }
        Command::Verify { spec, out } => {
            let market = SpecFile::load(&spec)?.to_market()?;
            let report = verify(&market);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(dir) = out {
                prepare_out(&dir)?;
                write_json(&dir.join("verify.json"), &report)?;
                Manifest {
                    command: "verify".into(),
                    config_hash: String::new(),
                    files: vec!["verify.json".into()],
                    invariant_violations: usize::from(!report.ok),
                }
                .write(&dir)?;
            }
            Ok(report.ok)
        }
        Command::Generate { players, arms, capacity, delta, horizon, seed, gaussian } => {
            let params = GeneratorParams {
                players,
                arms,
                capacity: CapacityProfile::Uniform(capacity),
                delta_floor: delta,
                reward_model: if gaussian { RewardModel::GaussianUnitVariance } else { RewardModel::Bernoulli },
                horizon,
                market_seed: seed,
            };
            print!("{}", SpecFile::from_market(&params.generate()?, seed)?.to_canonical());
            Ok(true)
        }
    }
}

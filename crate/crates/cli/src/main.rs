//! `tdmrc`: runs time-shared delay reservoir experiments from TOML configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tdm_reservoir::exec::{self, Execution};
use tdm_reservoir::harness::{self, ExperimentConfig, HarnessError, SweepGrid, SweepStatus};
use tdm_reservoir::tasks::{self, ChannelModel, SyntheticDigits, TaskError};

const OUT_ENV: &str = "TDMRC_OUT";

#[derive(Parser)]
#[command(name = "tdmrc", version, about = "Time-shared delay reservoir experiment runner")]
struct Cli {
    /// Output directory (default: $TDMRC_OUT, then the config's `output`,
    /// then ./results).
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Worker threads for seed-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config and write its result record.
    Run {
        config: PathBuf,
        /// Run this single seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a config over a parameter grid, one record per grid point.
    Sweep {
        config: PathBuf,
        grid: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the records in a directory into CSV and TSV series.
    Report { dir: PathBuf },
    /// Export a generated dataset.
    GenData {
        kind: DataKind,
        /// Number of samples (utterances per class for digits).
        #[arg(long, default_value_t = 4000)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Channel SNR in dB; omit for a noiseless channel.
        #[arg(long)]
        snr_db: Option<f64>,
        /// Sine period in samples.
        #[arg(long, default_value_t = 12.7)]
        period: f64,
        /// Within-class noise of synthetic digits.
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        /// Output file (default: <out>/<kind>.csv).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Narma,
    Channel,
    Sine,
    SyntheticDigit,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<TaskError> for Failure {
    fn from(e: TaskError) -> Self {
        let code = match e {
            TaskError::Argument(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 1, message }
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1".into()));
        }
        exec::configure_threads(n).map_err(usage)?;
    }
    match &cli.command {
        Command::Run { config, seed } => {
            let cfg = load(config, *seed)?;
            let record = harness::run_experiment_with(&cfg, Execution::Parallel)?;
            let path = harness::write_record(&record, &out_dir(&cli.out, Some(&cfg)))?;
            for t in &record.tasks {
                println!(
                    "{}\t{}\t{:.6e} ± {:.2e}\t({} seeds, {} nodes)",
                    t.id,
                    t.metric,
                    t.mean,
                    t.std,
                    t.per_seed.len(),
                    t.node_count
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Sweep { config, grid, seed } => {
            let cfg = load(config, *seed)?;
            let grid = SweepGrid::load(grid)?;
            let dir = out_dir(&cli.out, Some(&cfg));
            let outcome = harness::run_sweep(&cfg, &grid, &dir, Execution::Parallel)?;
            let mut worst = 0;
            for (digest, status) in &outcome.points {
                match status {
                    SweepStatus::Completed(_) => println!("{}\tdone", &digest[..16]),
                    SweepStatus::Skipped(_) => println!("{}\tskipped (exists)", &digest[..16]),
                    SweepStatus::Failed { message, exit_code, .. } => {
                        println!("{}\tfailed: {message}", &digest[..16]);
                        worst = worst.max(*exit_code);
                    }
                }
            }
            println!(
                "{} points, {} failed, records in {}",
                outcome.points.len(),
                outcome.failures(),
                dir.display()
            );
            if worst != 0 {
                return Err(Failure {
                    code: worst as u8,
                    message: format!("{} sweep points failed", outcome.failures()),
                });
            }
        }
        Command::Report { dir } => {
            let out = cli.out.clone().unwrap_or_else(|| dir.clone());
            let summary = harness::report(dir, &out)?;
            for (path, why) in &summary.skipped {
                eprintln!("skipped {}: {why}", path.display());
            }
            for path in &summary.written {
                println!("wrote {}", path.display());
            }
        }
        Command::GenData {
            kind,
            length,
            seed,
            snr_db,
            period,
            sigma,
            file,
        } => {
            let name = match kind {
                DataKind::Narma => "narma",
                DataKind::Channel => "channel",
                DataKind::Sine => "sine",
                DataKind::SyntheticDigit => "synthetic-digit",
            };
            let path = match file {
                Some(f) => f.clone(),
                None => {
                    let dir = out_dir(&cli.out, None);
                    std::fs::create_dir_all(&dir).map_err(|e| Failure {
                        code: 2,
                        message: format!("{}: {e}", dir.display()),
                    })?;
                    dir.join(format!("{name}.csv"))
                }
            };
            match kind {
                DataKind::Narma => {
                    let n = tasks::gen_narma10(*length, *seed)?;
                    tasks::write_columns(&path, &[("u", &n.u), ("y", &n.y)])?;
                }
                DataKind::Channel => {
                    let c = tasks::gen_channel(*length, *seed, *snr_db, &ChannelModel::default())?;
                    tasks::write_columns(&path, &[("s", &c.s), ("d", &c.g)])?;
                }
                DataKind::Sine => {
                    let s = tasks::gen_sine(*length, *period, *seed)?;
                    tasks::write_series(&path, &s)?;
                }
                DataKind::SyntheticDigit => {
                    let cfg = SyntheticDigits {
                        utterances_per_class: *length,
                        sigma: *sigma,
                        ..SyntheticDigits::default()
                    };
                    let utts = tasks::gen_synthetic_digits(*seed, &cfg)?;
                    tasks::write_digit_features(&path, &utts)?;
                }
            }
            println!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let used: usize = cfg.tasks.iter().map(|t| cfg.node_count(t)).sum::<Result<_, _>>()?;
            println!(
                "ok: k = {}, tau/h = {} slots, {} used",
                cfg.k(),
                cfg.tau_slots(),
                used + 2 * (cfg.k() - 1)
            );
            for t in &cfg.tasks {
                println!(
                    "  {}\t{:?}\t{} nodes\tshare {} -> {}",
                    t.id,
                    t.source.kind(),
                    cfg.node_count(t)?,
                    t.share_train,
                    t.share_test()
                );
            }
            println!("digest {}", cfg.digest());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

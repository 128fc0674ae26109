//! Command-line front end: run a campaign into a log directory, summarize
//! a log, or pick up an interrupted campaign where it stopped.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use qas_core::campaign::{
    make_proposer, run_campaign_from, CampaignError, IterationRecord, ProposerChoice,
};
use qas_core::config::load_config;
use qas_core::report::{emit_report, ReportFormat};
use qas_core::storage::{init_log_dir, load_log, persist_iteration};

#[derive(Parser)]
#[command(name = "qas", version, about = "Quantum ansatz search campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy)]
enum ProposerKind {
    Heuristic,
    Llm,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign from a config file, logging every iteration.
    Run {
        /// Campaign config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the proposer named in the config.
        #[arg(long, value_enum)]
        proposer: Option<ProposerKind>,
        /// Override the master seed named in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Where the log goes; must not already hold one.
        #[arg(long, default_value = "./qas-logs")]
        log_dir: PathBuf,
    },
    /// Summarize a finished or interrupted campaign log.
    Report {
        #[arg(long)]
        log_dir: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Continue an interrupted campaign in place.
    Resume {
        #[arg(long)]
        log_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Run {
            config,
            proposer,
            seed,
            log_dir,
        } => run(&config, proposer, seed, &log_dir),
        Command::Report { log_dir, format } => {
            let format = match format {
                Format::Table => ReportFormat::Table,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", emit_report(&log_dir, format)?);
            Ok(())
        }
        Command::Resume { log_dir } => resume(&log_dir),
    }
}

/// Persists one finished iteration and echoes a progress line. A failed
/// persist aborts the process: continuing would silently drop records.
fn persist_and_report(log_dir: &Path, record: &IterationRecord, seconds: f64) {
    if let Err(e) = persist_iteration(log_dir, record, seconds) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    println!(
        "iteration {:>3}  ansatz {:?}  final kl {:.5e}  mean {:.5e}  ({:.1}s)",
        record.iteration,
        record.spec.tags(),
        record.feedback.entropy_values.last().copied().unwrap_or(f64::NAN),
        record.kl_mean,
        seconds,
    );
}

fn finish(log_dir: &Path, log: &qas_core::campaign::CampaignLog) {
    if let Some(best) = &log.best {
        println!(
            "best: iteration {}, ansatz {:?}, final kl {:.5e}, {} parameters, depth {}",
            best.iteration,
            best.spec.tags(),
            best.final_kl,
            best.parameter_count,
            best.depth,
        );
    }
    println!("log: {}", log_dir.display());
}

fn run(
    config: &Path,
    proposer: Option<ProposerKind>,
    seed: Option<u64>,
    log_dir: &Path,
) -> Result<(), Box<dyn Error>> {
    let mut cfg = load_config(config)?;
    if let Some(kind) = proposer {
        cfg.proposer = match (kind, cfg.proposer) {
            (ProposerKind::Heuristic, _) => ProposerChoice::Heuristic,
            (ProposerKind::Llm, llm @ ProposerChoice::Llm(_)) => llm,
            (ProposerKind::Llm, ProposerChoice::Heuristic) => {
                return Err(
                    "--proposer llm needs [proposer] settings (endpoint, model) in the config"
                        .into(),
                )
            }
        };
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    init_log_dir(log_dir, &cfg)?;

    let mut proposer = make_proposer(&cfg)?;
    let mut last = Instant::now();
    let result = run_campaign_from(&cfg, proposer.as_mut(), Vec::new(), &mut |record| {
        let now = Instant::now();
        persist_and_report(log_dir, record, now.duration_since(last).as_secs_f64());
        last = now;
    });
    match result {
        Ok(log) => {
            finish(log_dir, &log);
            Ok(())
        }
        Err(CampaignError::ProposerUnavailable { detail, log }) => {
            finish(log_dir, &log);
            Err(format!(
                "proposer unavailable after {} iterations: {detail}; \
                 the log is intact, continue with `qas resume --log-dir {}`",
                log.iterations.len(),
                log_dir.display(),
            )
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

fn resume(log_dir: &Path) -> Result<(), Box<dyn Error>> {
    let (manifest, records) = load_log(log_dir)?;
    let cfg = manifest.config;
    let prior = records.len();

    let mut proposer = make_proposer(&cfg)?;
    let mut last = Instant::now();
    let result = run_campaign_from(&cfg, proposer.as_mut(), records, &mut |record| {
        let now = Instant::now();
        persist_and_report(log_dir, record, now.duration_since(last).as_secs_f64());
        last = now;
    });
    match result {
        Ok(log) => {
            if log.iterations.len() == prior {
                println!("nothing to do: the campaign is already complete");
            }
            finish(log_dir, &log);
            Ok(())
        }
        Err(CampaignError::ProposerUnavailable { detail, log }) => {
            finish(log_dir, &log);
            Err(format!(
                "proposer unavailable after {} iterations: {detail}; \
                 the log is intact, continue with `qas resume --log-dir {}`",
                log.iterations.len(),
                log_dir.display(),
            )
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

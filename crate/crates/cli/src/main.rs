use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use policy_debate_cli::{
    cmd_eval, cmd_ingest, cmd_report, cmd_run, BackendKind, CliError, ExperimentConfig, RunOptions, REPORT_JSON,
    TRANSCRIPT_FILE,
};

#[derive(Parser)]
#[command(name = "policy-debate", version, about = "Multi-agent debate for policy-rate prediction")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ablation preset 1..6.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=6))]
    preset: Option<u8>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the slice store from CSV inputs.
    Ingest {
        #[arg(long)]
        beige_book: Option<PathBuf>,
        #[arg(long)]
        indicators: Option<PathBuf>,
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Where to write the store.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Draw 15/30/15 slices per class after neighbour exclusion.
        #[arg(long)]
        sample: bool,
    },
    /// Run debates over the slice store.
    Run {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Continue an interrupted run in the same output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Score a transcript against true labels.
    Eval {
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        truths: Option<PathBuf>,
    },
    /// Print the tables of a saved report.
    Report {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cwd_path(p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    // Command-line paths are relative to the working directory.
    if let Some(p) = cli.preset {
        cfg.preset = p;
    }
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = cwd_path(o);
    }

    match cli.command {
        Command::Ingest {
            beige_book,
            indicators,
            rates,
            store,
            sample,
        } => {
            if let Some(p) = beige_book {
                cfg.data.beige_book = Some(cwd_path(p));
            }
            if let Some(p) = indicators {
                cfg.data.indicators = Some(cwd_path(p));
            }
            if let Some(p) = rates {
                cfg.data.rates = Some(cwd_path(p));
            }
            if let Some(p) = store {
                cfg.store = Some(cwd_path(p));
            }
            if sample && cfg.sampling.is_none() {
                cfg.sampling = Some(Default::default());
            }
            let o = cmd_ingest(&cfg)?;
            println!("{} slices written to {} ({} meetings excluded)", o.slices, o.store.display(), o.excluded);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { store, workers, resume } => {
            if let Some(p) = store {
                cfg.store = Some(cwd_path(p));
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let o = cmd_run(&cfg, RunOptions { resume })?;
            println!(
                "{} meetings: {} completed, {} skipped, {} aborted; output in {}",
                o.meetings,
                o.completed,
                o.skipped,
                o.aborted.len(),
                o.out_dir.display()
            );
            for (id, e) in &o.aborted {
                eprintln!("aborted {id}: {e}");
            }
            Ok(if o.aborted.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Eval { transcript, truths } => {
            let transcript = transcript.map(cwd_path).unwrap_or_else(|| cfg.out_dir().join(TRANSCRIPT_FILE));
            let truths = truths.map(cwd_path).unwrap_or_else(|| cfg.truths_path());
            let report = cmd_eval(&transcript, &truths, &cfg.out_dir(), &cfg.debate.tie_break)?;
            print!("{}", report.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { report } => {
            let path = report.map(cwd_path).unwrap_or_else(|| cfg.out_dir().join(REPORT_JSON));
            print!("{}", cmd_report(&path)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

//! Command-line front end: run batches, print oracle predictions, replay
//! single trials. Exit codes: 0 completed, 2 a run aborted on its error
//! threshold (stats still written), 1 usage/config/IO error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qss::harness::{
    load_spec, oracle_predictions, run_trial, run_trials, stats_json, transcript_lines,
    write_stats, write_transcript, HarnessError, RunSpec,
};

#[derive(Parser)]
#[command(
    name = "qss",
    version,
    about = "Seeded simulator for single-photon threshold secret sharing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a configured batch and report aggregate statistics
    Run(RunArgs),
    /// Print a batch's exact predictions without simulating anything
    Oracle(CommonArgs),
    /// Re-execute one trial by index and dump its transcript
    Replay(ReplayArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML batch description
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trial count
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the stats report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every trial's transcript as JSON lines
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Suppress progress notes on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Zero-based index of the trial to re-execute
    #[arg(long)]
    trial: u64,
    /// Write the transcript here instead of stdout
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Suppress progress notes on stderr
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version aren't usage errors.
            let code = i32::from(err.use_stderr());
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Replay(args) => cmd_replay(args),
    }
}

/// Prints report data to stdout, shrugging off a reader that went away
/// (e.g. the output piped into `head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn load(common: &CommonArgs) -> Result<RunSpec, HarnessError> {
    let mut spec = load_spec(&common.config)?;
    if let Some(seed) = common.seed {
        spec.cfg.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        if trials == 0 {
            return Err(HarnessError::Field {
                field: "trials",
                reason: "must be at least 1".into(),
            });
        }
        spec.trials = trials;
    }
    Ok(spec)
}

fn cmd_run(args: RunArgs) -> Result<i32, HarnessError> {
    let spec = load(&args.common)?;
    let batch = run_trials(&spec);

    // Write whatever we have even when a trial failed: the partial report
    // is flagged incomplete and the failure decides the exit code.
    match &args.out {
        Some(path) => {
            write_stats(&batch.report, path)?;
            if !args.quiet {
                eprintln!(
                    "wrote stats for {} of {} trial(s) to {}",
                    batch.report.trials_run,
                    batch.report.trials_requested,
                    path.display()
                );
            }
        }
        None => emit(&stats_json(&batch.report)),
    }
    if let Some(path) = &args.trace {
        write_transcript(&batch.records, path)?;
        if !args.quiet {
            eprintln!("wrote transcripts to {}", path.display());
        }
    }

    if let Some(err) = batch.failure {
        eprintln!("error: {err}");
        return Ok(1);
    }
    if batch.report.any_abort {
        if !args.quiet {
            eprintln!("at least one trial aborted on its error threshold");
        }
        return Ok(2);
    }
    Ok(0)
}

fn cmd_oracle(args: CommonArgs) -> Result<i32, HarnessError> {
    let spec = load(&args)?;
    let doc = json!({
        "effective_config": spec.effective_config(),
        "predictions": oracle_predictions(&spec)?,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("doc serializes");
    text.push('\n');
    emit(&text);
    Ok(0)
}

fn cmd_replay(args: ReplayArgs) -> Result<i32, HarnessError> {
    let spec = load(&args.common)?;
    if args.trial >= spec.trials {
        return Err(HarnessError::TrialOutOfRange {
            trial: args.trial,
            trials: spec.trials,
        });
    }
    let (_, record) = run_trial(&spec, args.trial)?;
    let aborted = record.aborted;
    let text = transcript_lines(std::slice::from_ref(&record));
    match &args.trace {
        Some(path) => {
            write_transcript(std::slice::from_ref(&record), path)?;
            if !args.quiet {
                eprintln!("wrote trial {} transcript to {}", args.trial, path.display());
            }
        }
        None => emit(&text),
    }
    Ok(if aborted { 2 } else { 0 })
}

//! `qverify`: run the experiment suites from the command line.
//!
//! Every subcommand prints a human summary (one line per check), optionally
//! writes the full machine-readable report as JSON, and exits nonzero when
//! any check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qverify_core::batchkeys::Backend;
use qverify_core::harness::{run_command, CommandKind, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "qverify", version, about = "commit-and-measure verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Protocol width (qubits measured per session)
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Claw-free domain width
    #[arg(long = "l", default_value_t = 1)]
    ell: usize,
    /// Master seed: fully determines the run
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trial count for sampled checks
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Key backend: trivial or compressed
    #[arg(long, default_value = "trivial")]
    backend: String,
    /// Write the full report as JSON to this path
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Completeness checks of the commit-and-measure protocol
    Protocol {
        #[command(flatten)]
        common: Common,
        /// Persist the first session transcript (binary framing)
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Extraction identity and distribution-collapse checks
    ExtractCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Delegated verification of a stabilizer-check instance
    Delegate {
        #[command(flatten)]
        common: Common,
        /// Instance file (width header plus `X|Z <mask-hex> <parity>` lines)
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Parallel repetition count
        #[arg(long, default_value_t = 4)]
        reps: usize,
    },
    /// Batched verification of several instances under one key
    Batch {
        #[command(flatten)]
        common: Common,
        /// Number of instances verified together
        #[arg(long, default_value_t = 2)]
        instances: usize,
    },
    /// Compiled (hash-compressed) protocol runs
    Compile {
        #[command(flatten)]
        common: Common,
        /// Compiler version: 1 (12 rounds) or 2 (8 rounds)
        #[arg(long, default_value_t = 2)]
        version: u8,
        /// Also run the hash-chain transformed variant
        #[arg(long)]
        fs: bool,
    },
    /// Hash-chain transform checks (honest run plus tamper rejections)
    Fs {
        #[command(flatten)]
        common: Common,
    },
    /// GGM puncturable-PRF checks
    Prf {
        #[command(flatten)]
        common: Common,
    },
}

fn build_config(kind: CommandKind, common: &Common) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig::new(kind);
    config.n = common.n;
    config.ell = common.ell;
    config.seed = common.seed;
    config.trials = common.trials;
    config.backend = match common.backend.as_str() {
        "trivial" => Backend::Trivial,
        "compressed" => Backend::Compressed,
        other => return Err(format!("unknown backend {other:?} (trivial|compressed)")),
    };
    Ok(config)
}

fn print_report(report: &Report) {
    println!("== {} (seed {}) ==", report.command, report.seed);
    for check in &report.checks {
        println!(
            "{} {:<38} value {:.3e}  bound {:.3e}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.bound,
        );
    }
    println!("{}: {}", report.command, if report.pass { "all checks passed" } else { "FAILED" });
}

fn run(cli: Cli) -> Result<bool, String> {
    let (config, json_path) = match &cli.command {
        Command::Protocol { common, transcript } => {
            let mut c = build_config(CommandKind::Protocol, common)?;
            c.transcript_path = transcript.clone();
            (c, common.json.clone())
        }
        Command::ExtractCheck { common } => {
            (build_config(CommandKind::ExtractCheck, common)?, common.json.clone())
        }
        Command::Delegate { common, instance, reps } => {
            let mut c = build_config(CommandKind::Delegate, common)?;
            c.reps = *reps;
            if let Some(path) = instance {
                c.instance_text = Some(
                    std::fs::read_to_string(path)
                        .map_err(|e| format!("reading {}: {e}", path.display()))?,
                );
            }
            (c, common.json.clone())
        }
        Command::Batch { common, instances } => {
            let mut c = build_config(CommandKind::Batch, common)?;
            c.batch_size = *instances;
            (c, common.json.clone())
        }
        Command::Compile { common, version, fs } => {
            let mut c = build_config(CommandKind::Compile, common)?;
            c.version = *version;
            c.fs = *fs;
            (c, common.json.clone())
        }
        Command::Fs { common } => (build_config(CommandKind::Fs, common)?, common.json.clone()),
        Command::Prf { common } => (build_config(CommandKind::Prf, common)?, common.json.clone()),
    };
    let report = run_command(&config).map_err(|e| e.to_string())?;
    print_report(&report);
    if let Some(path) = json_path {
        std::fs::write(&path, report.to_json())
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

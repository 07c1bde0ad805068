//! `qpuf`: device profiles, CRP experiments, metrics, oracle checks and an
//! attestation demo.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
//! 3 IO error.

mod attest_cmd;
mod crp_run;
mod exit;
mod metrics_cmd;
mod oracle_cmd;
mod profiles;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use exit::CmdResult;

#[derive(Parser)]
#[command(
    name = "qpuf",
    version,
    about = "Quantum PUF simulation and attestation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect device profiles.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
    /// Challenge-response experiments.
    Crp {
        #[command(subcommand)]
        action: CrpAction,
    },
    /// Randomness, diffuseness, reliability and uniqueness of CRP stores.
    Metrics {
        /// CRP store files written by `crp run`.
        #[arg(required = true)]
        stores: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Cross-checks of the simulator.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// IED attestation.
    Attest {
        #[command(subcommand)]
        action: AttestAction,
    },
}

#[derive(Subcommand)]
enum ProfileAction {
    /// List built-in profiles and any found in QPUF_PROFILE_DIR.
    List,
    /// Print the per-qubit calibration of a profile.
    Show {
        /// Profile name or path to a profile file.
        name: String,
        /// Print the profile document instead of the table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum CrpAction {
    /// Run every challenge on several instances of one device.
    Run {
        /// Profile name or path to a profile file.
        #[arg(long, default_value = "ideal")]
        profile: String,
        /// Number of random challenges, or a file with one challenge per line.
        #[arg(long, default_value = "75")]
        challenges: String,
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value_t = 5)]
        instances: u32,
        /// Master seed; a fresh one is chosen and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// Worker threads for challenge execution.
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write a gnuplot script for the per-qubit P(1) series.
        #[arg(long)]
        gnuplot: bool,
    },
}

#[derive(Subcommand)]
enum OracleAction {
    /// Compare engine and block oracle on random challenges for every built-in profile.
    Check {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reverse one CNOT in the engine circuit (negative control).
        #[arg(long, hide = true)]
        corrupt_cnot: bool,
    },
}

#[derive(Subcommand)]
enum AttestAction {
    /// Enroll and authenticate IEDs, then run tamper and fake-device scenarios.
    Demo {
        #[arg(long, default_value_t = 50)]
        ieds: usize,
        /// Largest accepted Hamming distance.
        #[arg(long, default_value_t = 0)]
        threshold: usize,
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "ideal")]
        profile: String,
    },
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = crp_run::fresh_seed();
        println!("seed: {s}");
        s
    })
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Profile { action } => match action {
            ProfileAction::List => profiles::list(),
            ProfileAction::Show { name, json } => profiles::show(&name, json),
        },
        Command::Crp {
            action:
                CrpAction::Run {
                    profile,
                    challenges,
                    shots,
                    instances,
                    seed,
                    output_dir,
                    jobs,
                    gnuplot,
                },
        } => crp_run::run(crp_run::RunConfig {
            profile,
            challenges,
            shots,
            instances,
            seed,
            output_dir,
            jobs,
            gnuplot,
        }),
        Command::Metrics { stores, output_dir } => metrics_cmd::run(&stores, &output_dir),
        Command::Oracle {
            action:
                OracleAction::Check {
                    trials,
                    seed,
                    corrupt_cnot,
                },
        } => oracle_cmd::check(trials, seed, corrupt_cnot),
        Command::Attest {
            action:
                AttestAction::Demo {
                    ieds,
                    threshold,
                    shots,
                    seed,
                    profile,
                },
        } => attest_cmd::demo(attest_cmd::DemoConfig {
            ieds,
            threshold,
            shots,
            seed: seed_or_fresh(seed),
            profile,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

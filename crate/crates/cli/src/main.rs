//! Command-line front end: policy tooling, proving, verification,
//! scenario simulation, and the ledger service with its client.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod common;
mod policy;
mod proving;
mod service;
mod simulate;

use muac_core::logic::ProofMode;

#[derive(Parser)]
#[command(name = "muac", version, about = "Fair exchanges under user-defined policies")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Starcut,
}

impl From<ModeArg> for ProofMode {
    fn from(m: ModeArg) -> ProofMode {
        match m {
            ModeArg::Strict => ProofMode::Strict,
            ModeArg::Starcut => ProofMode::StarCut,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or compile MuAC policy files.
    Policy {
        #[command(subcommand)]
        action: PolicyCmd,
    },
    /// Search a scenario for a fair computation granting resources.
    Prove {
        scenario: PathBuf,
        /// The requesting user.
        #[arg(long)]
        user: String,
        /// Comma-separated resources the user wants.
        #[arg(long)]
        want: String,
        #[arg(long, value_enum, default_value = "starcut")]
        mode: ModeArg,
        /// Largest exchange considered (also MUAC_CAP).
        #[arg(long)]
        cap: Option<u64>,
        /// Where to write the proof.
        #[arg(long, default_value = "proof.muacl-proof")]
        out: PathBuf,
        /// Emit the full proof instead of the sliced one.
        #[arg(long)]
        full: bool,
    },
    /// Check a proof file, optionally against a scenario's theory.
    Verify {
        proof: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "starcut")]
        mode: ModeArg,
    },
    /// Run every proposal of a scenario through the decision procedure
    /// and the brute-force oracle.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Run the ledger service.
    Serve {
        /// Snapshot file, loaded when present and kept up to date.
        #[arg(long)]
        snapshot: PathBuf,
        /// Listen address, e.g. 127.0.0.1:7700.
        #[arg(long)]
        listen: String,
        /// Scenario used to initialize a fresh ledger.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "starcut")]
        mode: ModeArg,
    },
    /// Talk to a running ledger.
    Client {
        /// Ledger address, e.g. 127.0.0.1:7700.
        addr: String,
        #[command(subcommand)]
        action: ClientCmd,
    },
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Parse a policy file and report diagnostics.
    Check {
        file: PathBuf,
        /// Owner of the ruleset (defaults to the file stem).
        #[arg(long)]
        owner: Option<String>,
    },
    /// Compile a policy file to logic formulas.
    Compile {
        file: PathBuf,
        #[arg(long)]
        owner: String,
        /// Also print grounded instances over a user universe.
        #[arg(long)]
        ground: bool,
        /// Comma-separated universe for grounding.
        #[arg(long)]
        users: Option<String>,
    },
}

#[derive(Subcommand)]
enum ClientCmd {
    /// Prove locally against the fetched ledger state and submit.
    Request {
        #[arg(long)]
        user: String,
        /// Comma-separated resources.
        #[arg(long)]
        want: String,
        /// Skip the confirmation prompt.
        #[arg(long)]
        yes: bool,
        #[arg(long)]
        cap: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let outcome = match cli.command {
        Command::Policy { action } => match action {
            PolicyCmd::Check { file, owner } => policy::check(&file, owner.as_deref(), json),
            PolicyCmd::Compile { file, owner, ground, users } => {
                policy::compile(&file, &owner, ground, users.as_deref(), json)
            }
        },
        Command::Prove { scenario, user, want, mode, cap, out, full } => {
            proving::prove(&scenario, &user, &want, mode.into(), cap, &out, full, json)
        }
        Command::Verify { proof, against, mode } => {
            proving::verify(&proof, against.as_deref(), mode.into(), json)
        }
        Command::Simulate { scenario, cap } => simulate::run(&scenario, cap, json),
        Command::Serve { snapshot, listen, init, mode } => {
            service::serve(&snapshot, &listen, init.as_deref(), mode.into())
        }
        Command::Client { addr, action } => match action {
            ClientCmd::Request { user, want, yes, cap } => {
                service::client_request(&addr, &user, &want, yes, cap, json)
            }
        },
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(10)
        }
    }
}

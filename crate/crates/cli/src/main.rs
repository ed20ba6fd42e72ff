//! Batch entry point: construct witnesses, verify certificates, run the LP
//! oracle, the duality sandwich, the symmetrization check, and the
//! upper-bound error reports. All quantities feeding a verdict are exact
//! rationals; reports serialize rationals as canonical `"p/q"` strings with
//! sorted keys, so identical configurations produce byte-identical output.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or precondition
//! error, 3 enumeration budget exceeded.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "apxdeg",
    version,
    about = "Exact certificates for the approximate degree of Collision and Element Distinctness"
)]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Worker threads for enumeration-heavy verification.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Enumeration budget (maximum number of tables to enumerate).
    #[arg(long, global = true)]
    budget: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dual witness and write it as JSON.
    Construct {
        #[command(subcommand)]
        kind: commands::ConstructKind,
    },
    /// Verify a witness JSON as an (epsilon, degree) certificate.
    Verify(commands::VerifyArgs),
    /// Solve the degree-d approximation program exactly.
    Oracle(commands::OracleArgs),
    /// Tabulate witness bounds, LP optima, and approximant errors.
    Sandwich(commands::SandwichArgs),
    /// Exact trivariate interpolation of orbit averages.
    Symcheck(commands::SymcheckArgs),
    /// Approximating-polynomial error reports.
    Upperbound {
        #[command(subcommand)]
        kind: commands::UpperboundKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref(), cli.jobs, cli.budget) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", output::error_json("config", &e.to_string()));
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = config.jobs {
        // Ignore failure: the global pool can only be set once (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Construct { kind } => commands::construct(kind, &config),
        Command::Verify(args) => commands::verify(args, &config),
        Command::Oracle(args) => commands::oracle(args, &config),
        Command::Sandwich(args) => commands::sandwich(args, &config),
        Command::Symcheck(args) => commands::symcheck(args, &config),
        Command::Upperbound { kind } => commands::upperbound(kind, &config),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let (tag, code) = commands::classify_error(&e);
            eprintln!("{}", output::error_json(tag, &format!("{e:#}")));
            ExitCode::from(code)
        }
    }
}

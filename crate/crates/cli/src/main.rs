mod commands;
mod describe;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit statuses: success, a failed check, bad usage, a runtime error.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "statebuddy", version, about = "Author, run and serve human-in-the-loop workflows")]
struct Cli {
    /// Config file; falls back to $STATEBUDDY_CONFIG, then built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine-readable output, one JSON object per line.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check workflow files or directories (the configured catalog when none are given).
    Validate { paths: Vec<PathBuf> },
    /// Interactive session reading one utterance per line from stdin.
    Run {
        /// Catalog id or path to a workflow file.
        workflow: String,
        /// Treat each line as a trigger name and skip intent matching.
        #[arg(long)]
        direct: bool,
        /// Fixed session id `run-<seed>`, for reproducible logs.
        #[arg(long)]
        seed: Option<u64>,
        /// Virtual clock: waits and cursor delays take no real time.
        #[arg(long)]
        zero_delay: bool,
    },
    /// Feed a transcript through a fresh session; exits 0 iff the final state is expected.
    Replay { workflow: String, transcript: PathBuf },
    /// Print a workflow as Graphviz DOT.
    Export { workflow: String },
    /// Run the HTTP and WebSocket service.
    Serve {
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Print a session's logged events.
    Events {
        session_id: String,
        /// Only events after this sequence number.
        #[arg(long, default_value_t = 0)]
        from_seq: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let ctx = commands::Context {
        config: cli.config,
        json: cli.json,
    };
    let result = match cli.command {
        Command::Validate { paths } => commands::validate(&ctx, &paths),
        Command::Run { workflow, direct, seed, zero_delay } => commands::run(&ctx, &workflow, direct, seed, zero_delay),
        Command::Replay { workflow, transcript } => commands::replay(&ctx, &workflow, &transcript),
        Command::Export { workflow } => commands::export(&ctx, &workflow),
        Command::Serve { bind } => commands::serve(&ctx, bind),
        Command::Events { session_id, from_seq } => commands::events(&ctx, &session_id, from_seq),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

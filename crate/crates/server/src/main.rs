use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tsvis_core::ontology::Store;
use tsvis_core::SystemClock;
use tsvis_server::auth::{PasswordHash, DEFAULT_ITERATIONS};
use tsvis_server::service::{build_engine, serve};
use tsvis_server::Config;

#[derive(Parser)]
#[command(name = "tsvis", version, about = "Time-series visualisation registry and agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API and the background agents.
    Serve {
        #[arg(short, long, default_value = "tsvis.toml")]
        config: PathBuf,
    },
    /// Read a password from stdin and print its hash for the config file.
    HashPassword {
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: u32,
    },
    /// Poll every source and run every agent once, then print the report.
    Tick {
        #[arg(short, long, default_value = "tsvis.toml")]
        config: PathBuf,
    },
    /// Write the registry as a JSON-lines snapshot.
    Export {
        #[arg(short, long, default_value = "tsvis.toml")]
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Replace the registry with a snapshot written by `export`.
    Import {
        #[arg(short, long, default_value = "tsvis.toml")]
        config: PathBuf,
        input: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let clock = Arc::new(SystemClock);
    match Cli::parse().command {
        Command::Serve { config } => {
            let config = Config::load(config)?;
            tokio::runtime::Runtime::new()?.block_on(serve(config, clock))
        }
        Command::HashPassword { iterations } => {
            anyhow::ensure!(iterations > 0, "iterations must be positive");
            let mut password = String::new();
            std::io::stdin().read_to_string(&mut password)?;
            let password = password.trim_end_matches(['\r', '\n']);
            anyhow::ensure!(!password.is_empty(), "empty password");
            println!("{}", PasswordHash::new(password, iterations));
            Ok(())
        }
        Command::Tick { config } => {
            let engine = build_engine(&Config::load(config)?, clock)?;
            let report = engine.tick_all()?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Export { config, out } => {
            let store = Store::open(Config::load(config)?.data_dir, clock)?;
            match out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
                    store.export_snapshot(&mut w)?;
                    w.flush()?;
                }
                None => {
                    let mut w = std::io::stdout().lock();
                    store.export_snapshot(&mut w)?;
                }
            }
            Ok(())
        }
        Command::Import { config, input } => {
            let store = Store::open(Config::load(config)?.data_dir, clock)?;
            let file = File::open(&input).with_context(|| input.display().to_string())?;
            store.import_snapshot(BufReader::new(file))?;
            eprintln!("imported {} change-log entries", store.read().head_seq());
            Ok(())
        }
    }
}

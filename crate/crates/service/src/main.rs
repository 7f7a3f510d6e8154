use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use moles_core::{validate_document, Catalog};
use moles_service::log::{read_log, replay};
use moles_service::server::{self, AppState};
use moles_service::{sample_catalog, simulate, GameConfig, SimParams, Store};

#[derive(Parser)]
#[command(name = "moles", about = "Whac-A-Mole spelling game service", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP/WebSocket session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        wordlist: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory of static client assets served at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Word-list utilities.
    Wordlist {
        #[command(subcommand)]
        command: WordlistCommand,
    },
    /// Run a headless simulated learner and print summary statistics as JSON.
    Simulate {
        #[arg(long)]
        words: usize,
        #[arg(long = "error-rate")]
        error_rate: f64,
        #[arg(long = "learning-rate")]
        learning_rate: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Word list to draw from; defaults to the bundled sample lists.
        #[arg(long)]
        wordlist: Option<PathBuf>,
        /// Also write the session log to this file.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Include every round in the output.
        #[arg(long)]
        details: bool,
    },
    /// Replay a session log and check it reproduces the recorded events.
    Replay {
        log: PathBuf,
        #[arg(long)]
        wordlist: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WordlistCommand {
    /// Check a word-list file; prints one diagnostic per line on failure.
    Validate { path: PathBuf },
}

fn load_config(path: Option<&Path>) -> anyhow::Result<GameConfig> {
    match path {
        Some(p) => Ok(GameConfig::load(p)?),
        None => Ok(GameConfig::default()),
    }
}

fn load_wordlist(path: Option<&Path>) -> anyhow::Result<Catalog> {
    let Some(path) = path else {
        return Ok(sample_catalog());
    };
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    validate_document(&bytes).map_err(|errors| {
        let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
        anyhow::anyhow!(
            "{}: invalid word list\n{}",
            path.display(),
            lines.join("\n")
        )
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Wordlist {
            command: WordlistCommand::Validate { path },
        } => {
            let bytes = match std::fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    println!("{}: {e}", path.display());
                    return Ok(ExitCode::FAILURE);
                }
            };
            match validate_document(&bytes) {
                Ok(catalog) => {
                    eprintln!(
                        "{}: ok, {} lists, {} words",
                        path.display(),
                        catalog.lists().len(),
                        catalog.word_count()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(errors) => {
                    for e in errors {
                        println!("{}: {e}", path.display());
                    }
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Simulate {
            words,
            error_rate,
            learning_rate,
            seed,
            config,
            wordlist,
            log,
            details,
        } => {
            let config = load_config(config.as_deref())?;
            let catalog = Arc::new(load_wordlist(wordlist.as_deref())?);
            let log = log
                .map(moles_service::log::SessionLog::create)
                .transpose()?;
            let mut summary = simulate(
                SimParams {
                    words,
                    error_rate,
                    learning_rate,
                    seed,
                },
                catalog,
                config,
                log,
            )?;
            if !details {
                summary.round_details.clear();
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { log, wordlist } => {
            let catalog = Arc::new(load_wordlist(wordlist.as_deref())?);
            let records = read_log(&log)?;
            let outcome = replay(&records, catalog)?;
            println!(
                "{}",
                serde_json::json!({
                    "final_score": outcome.final_score,
                    "recorded_score": outcome.recorded_score(),
                    "server_events": outcome.replayed.len(),
                    "matches": outcome.matches(),
                })
            );
            Ok(if outcome.matches() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Serve {
            port,
            data_dir,
            wordlist,
            config,
            assets,
        } => {
            let config = load_config(config.as_deref())?;
            let catalog = Arc::new(load_wordlist(Some(&wordlist))?);
            let store = Arc::new(Store::open(&data_dir)?);
            let state = AppState::new(store, catalog, config);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                tracing::info!("listening on {}", listener.local_addr()?);
                server::serve(listener, state, assets).await
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

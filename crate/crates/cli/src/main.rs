use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use multibot_core::dialogue::{generate_corpus, AddressingMode};
use multibot_core::orchestrator::{
    compute_metrics, parse_log, parse_script, replay, run_headless, to_jsonl, DmMode, LogRecord, SessionConfig,
};
use multibot_core::sim::ScenarioConfig;
use multibot_core::world::load_map;
use multibot_core::{demo, dialogue};
use multibot_server::{start, ServerOptions};

#[derive(Parser)]
#[command(name = "multibot", version, about = "Talk to a simulated robot team")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scripted session without a console and write its log.
    Run {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// `auto`, or `wizard-replay` to take DM turns from the script.
        #[arg(long, default_value = "auto")]
        dm: DmMode,
        #[arg(long, default_value = "explicit")]
        addressing: AddressingMode,
    },
    /// Serve a live session over WebSocket at /ws.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "auto")]
        dm: DmMode,
        #[arg(long, default_value = "explicit")]
        addressing: AddressingMode,
        #[arg(long)]
        seed: Option<u64>,
        /// Stream the session log here as it grows.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Milliseconds of wall time per simulation tick.
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
    },
    /// Print, one JSON frame per line, the frames a console would have seen for a log.
    Replay { log: PathBuf },
    /// Summarize a log as JSON.
    Metrics { log: PathBuf },
    /// Generate an instruction corpus for a map.
    GenCorpus {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario whose roster the corpus names; defaults to the demo team.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_log(path: &Path) -> Result<Vec<LogRecord>> {
    Ok(parse_log(&read(path)?)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // Output piped into `head` and friends.
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Run {
            map,
            corpus,
            config,
            script,
            seed,
            out,
            dm,
            addressing,
        } => {
            let config = SessionConfig::from_paths(&map, &corpus, &config)?
                .with_seed(seed)
                .with_dm_mode(dm)
                .with_addressing(addressing);
            let script = parse_script(&read(&script)?)?;
            let (log, metrics) = run_headless(config, &script)?;
            fs::write(&out, to_jsonl(&log)).with_context(|| format!("writing {}", out.display()))?;
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&metrics)?)?;
            if metrics.timed_out {
                eprintln!("warning: run hit the scenario timeout");
            }
        }
        Cmd::Serve {
            port,
            map,
            corpus,
            config,
            dm,
            addressing,
            seed,
            log,
            host,
            tick_ms,
        } => {
            let mut config = SessionConfig::from_paths(&map, &corpus, &config)?
                .with_dm_mode(dm)
                .with_addressing(addressing);
            if let Some(seed) = seed {
                config = config.with_seed(seed);
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let options = ServerOptions {
                tick_interval: std::time::Duration::from_millis(tick_ms.max(1)),
                log_path: log,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let handle = start(config, options, addr).await?;
                eprintln!("listening on ws://{}/ws", handle.addr);
                handle.join().await
            })?;
        }
        Cmd::Replay { log } => {
            let mut stdout = io::stdout().lock();
            for frame in replay(&load_log(&log)?)? {
                writeln!(stdout, "{}", frame.to_json())?;
            }
        }
        Cmd::Metrics { log } => {
            let metrics = compute_metrics(&load_log(&log)?)?;
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&metrics)?)?;
        }
        Cmd::GenCorpus { map, out, config } => {
            let map = load_map(&read(&map)?)?;
            let scenario = match config {
                Some(p) => ScenarioConfig::from_json(&read(&p)?)?,
                None => demo::config(),
            };
            let pairs = generate_corpus(&map, &scenario.robots);
            if pairs.is_empty() {
                bail!("the map produced no training pairs");
            }
            fs::write(&out, dialogue::to_jsonl(&pairs)).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} pairs to {}", pairs.len(), out.display());
        }
    }
    Ok(())
}

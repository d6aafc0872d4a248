//! `dualsff`: form factors, transfer spectra and the acceptance suite from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on errors.

mod commands;
mod output;
mod run_config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};

use commands::{Context, Outcome};
use run_config::{CommandKind, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "dualsff",
    version,
    about = "Spectral form factors of dual-unitary brickwork circuits"
)]
struct Cli {
    /// Run configuration (JSON, comments allowed); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, capped by the configured `threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated criterion ids or tags for `verify`.
    #[arg(long, global = true, value_delimiter = ',')]
    criteria: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Unitarity and dual-unitarity residuals of the configured gates.
    GateCheck,
    /// Monte Carlo spectral form factor over the (t, L) grid.
    Sff,
    /// Transfer-matrix spectrum and trace curves for each t.
    Transfer,
    /// Runs the acceptance criteria.
    Verify,
}

impl Command {
    fn kind(self) -> CommandKind {
        match self {
            Self::GateCheck => CommandKind::GateCheck,
            Self::Sff => CommandKind::Sff,
            Self::Transfer => CommandKind::Transfer,
            Self::Verify => CommandKind::Verify,
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::builtin(),
    };
    if let Some(expected) = config.command {
        if expected != cli.command.kind() {
            bail!("config is for {expected:?}, not {:?}", cli.command.kind());
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let threads = match (cli.threads, config.threads) {
        (Some(n), Some(cap)) if n > cap => bail!("--threads {n} exceeds the configured cap {cap}"),
        (Some(0), _) => bail!("--threads must be positive"),
        (Some(n), _) => Some(n),
        (None, cap) => cap,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = cli
        .out
        .as_deref()
        .or(config.outputs.dir.as_deref().map(std::path::Path::new))
        .map(PathBuf::from);
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let hash = config.hash();
    log::info!("config sha256 {hash}, seed {}", config.seed);
    let ctx = Context {
        config: &config,
        hash,
        out: out.as_deref(),
    };
    match cli.command {
        Command::GateCheck => commands::gate_check(&ctx),
        Command::Sff => commands::sff(&ctx),
        Command::Transfer => commands::transfer(&ctx),
        Command::Verify => commands::verify(&ctx, &cli.criteria),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

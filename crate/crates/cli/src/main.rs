//! `credchain`: operator command line.
//!
//! Exit codes: 0 success (or verified), 1 not verified, 2 usage, I/O or
//! parse errors. Machine-readable output goes to stdout, diagnostics to
//! stderr.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use credchain_analytics::{aggregate, emit_report, parse_prices, parse_txlog, write_txlog, ReportFormat};
use credchain_core::{sha256, Hash256};
use credchain_service::demo::run_demo;
use credchain_service::{InitParams, Node, NodeOptions, ServiceConfig, ServiceError};

#[derive(Debug, Parser)]
#[command(name = "credchain", version, about = "Blockchain-anchored achievement records")]
struct Cli {
    /// TOML configuration file; CREDCHAIN_* variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Seeds every random choice (keys, salts, tokens, demo data).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    port: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a node: admin account, genesis and the registry contract.
    Init {
        #[arg(long)]
        admin_email: Option<String>,
        #[arg(long, env = "CREDCHAIN_ADMIN_PASSWORD", hide_env_values = true)]
        admin_password: String,
    },
    /// Run the HTTP service with the background mining driver.
    Serve,
    /// Print the SHA-256 digest of a file.
    Hash { file: PathBuf },
    /// Look a digest up in the registry; exit 1 when not verified.
    Verify { digest: String },
    /// Mine blocks (empty if nothing is pending) and print their hashes.
    Mine {
        #[arg(default_value_t = 1)]
        count: usize,
    },
    /// Aggregate a transaction log into a cost and delay report.
    Report {
        #[arg(long)]
        txlog: PathBuf,
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Seed a fresh node with the demo population.
    Demo,
    /// Write chain data to stdout.
    Export {
        #[arg(value_enum, default_value_t = ExportKind::Chain)]
        what: ExportKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportKind {
    /// Blocks, one JSON object per line.
    Chain,
    /// Receipts as CSV.
    Receipts,
    /// University transactions as an analytics transaction log.
    Txlog,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] credchain_service::ConfigError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Analytics(#[from] credchain_analytics::AnalyticsError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn settings(cli: &Cli) -> Result<ServiceConfig, CliError> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(port) = cli.port {
        config.port = port;
    }
    Ok(config)
}

fn open_node(config: &ServiceConfig) -> Result<Node, CliError> {
    if !config.data_dir.join("node.json").is_file() {
        return Err(CliError::Usage(format!(
            "{} is not an initialised node; run `credchain init` first",
            config.data_dir.display()
        )));
    }
    Ok(Node::open(&config.data_dir, NodeOptions { session_ttl_secs: config.session_ttl_secs, ..Default::default() })?)
}

fn parse_digest(text: &str) -> Result<Hash256, CliError> {
    let malformed = || CliError::Usage(format!("malformed digest `{text}`: expected 64 hex characters"));
    if text.len() != 64 {
        return Err(malformed());
    }
    text.to_ascii_lowercase().parse().map_err(|_| malformed())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut stdout = io::stdout().lock();
    let out_err = |e: io::Error| CliError::Io(format!("stdout: {e}"));
    match &cli.command {
        Command::Hash { file } => {
            let bytes = std::fs::read(file).map_err(io_err(file))?;
            writeln!(stdout, "{}", sha256(&bytes)).map_err(out_err)?;
        }
        Command::Report { txlog, prices, format } => {
            let format: ReportFormat = format.parse()?;
            let entries = parse_txlog(BufReader::new(File::open(txlog).map_err(io_err(txlog))?))
                .map_err(|e| CliError::Usage(format!("{}: {e}", txlog.display())))?;
            let prices = parse_prices(BufReader::new(File::open(prices).map_err(io_err(prices))?))
                .map_err(|e| CliError::Usage(format!("{}: {e}", prices.display())))?;
            let report = aggregate(&entries, &prices)?;
            stdout.write_all(&emit_report(&report, format)?).map_err(out_err)?;
        }
        Command::Init { admin_email, admin_password } => {
            let config = settings(&cli)?;
            let node = Node::init(
                &config.data_dir,
                InitParams {
                    chain: config.chain.to_chain_config()?,
                    seed: config.seed,
                    admin_email: admin_email.clone().unwrap_or(config.admin_email.clone()),
                    admin_password: admin_password.clone(),
                },
                NodeOptions::default(),
            )?;
            writeln!(stdout, "admin {} contract {}", node.admin_address(), node.contract()).map_err(out_err)?;
        }
        Command::Demo => {
            let config = settings(&cli)?;
            run_demo(&config.data_dir, config.seed, config.chain.to_chain_config()?, &mut stdout)?;
        }
        Command::Verify { digest } => {
            let digest = parse_digest(digest)?;
            let node = open_node(&settings(&cli)?)?;
            let result = node.verify(&digest);
            writeln!(stdout, "{}", serde_json::to_string(&result).expect("serializable")).map_err(out_err)?;
            if !result.verified {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Mine { count } => {
            let node = open_node(&settings(&cli)?)?;
            for _ in 0..*count {
                let block = node.mine_once()?;
                writeln!(stdout, "{} {} txs={}", block.number, block.block_hash, block.transactions.len())
                    .map_err(out_err)?;
            }
        }
        Command::Export { what } => {
            let node = open_node(&settings(&cli)?)?;
            match what {
                ExportKind::Chain => node.export_chain(&mut stdout)?,
                ExportKind::Receipts => node.export_receipts(&mut stdout)?,
                ExportKind::Txlog => write_txlog(&node.txlog()?, &mut stdout)?,
            }
        }
        Command::Serve => {
            let config = settings(&cli)?;
            let node = Arc::new(open_node(&config)?);
            let ip: IpAddr = config.bind.parse().map_err(|_| CliError::Usage(format!("bad bind address `{}`", config.bind)))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
            runtime
                .block_on(credchain_service::serve(
                    node,
                    SocketAddr::new(ip, config.port),
                    Duration::from_millis(config.mining_interval_ms),
                ))
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    stdout.flush().map_err(out_err)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "credchain=info,warn".into()),
        )
        .with_writer(io::stderr)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("credchain: {e}");
            ExitCode::from(2)
        }
    }
}

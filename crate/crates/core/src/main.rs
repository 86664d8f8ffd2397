use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prisk::pipeline::{self, RunConfig};
use prisk::{Error, Result};

#[derive(Parser)]
#[command(name = "prisk", version, about = "Perceived driving-risk prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured workspace directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenarios, a synthetic roster and oracle ratings.
    Generate(Common),
    /// Extract risk features for every generated scenario.
    Features(Common),
    /// Cluster the driver roster.
    Cluster(Common),
    /// Train pooled and per-category models.
    Train(Common),
    /// Evaluate trained models and write the report.
    Eval(Common),
    /// Re-render the report from evaluation results.
    Report(Common),
    /// Run every stage in order.
    Run(Common),
    /// Serve the rating HTTP API over the workspace scenarios.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let m = pipeline::cmd_generate(&load_config(&c)?)?;
            println!("{} scenarios, {} drivers", m.scenarios.len(), m.drivers.len());
        }
        Command::Features(c) => {
            let counts = pipeline::cmd_features(&load_config(&c)?)?;
            let rows: usize = counts.iter().map(|(_, n)| n).sum();
            println!("{} feature files, {rows} rows", counts.len());
        }
        Command::Cluster(c) => {
            let s = pipeline::cmd_cluster(&load_config(&c)?)?;
            print!("{}", s.model);
            if s.degenerate {
                println!("degenerate roster: silhouette undefined for every p");
            }
        }
        Command::Train(c) => {
            for e in pipeline::cmd_train(&load_config(&c)?)? {
                println!("{} ({} windows, best epoch {})", e.checkpoint, e.samples, e.best_epoch);
            }
        }
        Command::Eval(c) => {
            let cfg = load_config(&c)?;
            pipeline::cmd_eval(&cfg)?;
            print!("{}", pipeline::cmd_report(&cfg)?);
        }
        Command::Report(c) => print!("{}", pipeline::cmd_report(&load_config(&c)?)?),
        Command::Run(c) => print!("{}", pipeline::cmd_run(&load_config(&c)?)?),
        Command::Serve { common, bind } => {
            let cfg = load_config(&common)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            rt.block_on(pipeline::service::serve(cfg.out, bind))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

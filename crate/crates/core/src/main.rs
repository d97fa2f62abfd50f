use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgis_core::cli::{self, Overrides};
use sgis_core::config::RunConfig;

#[derive(Parser)]
#[command(name = "sgis", version, about = "Simulator-guided importance sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session log.
    GenSessions {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the SGIS search.
    Sgis {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a uniform grid by direct simulation.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        points_per_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local importance-sampling hill-climb from a start setting.
    IsBaseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Comma-separated start setting.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare IS and direct IY deltas around a center.
    Correlation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Comma-separated center (defaults to the configured one).
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate result files side by side.
    Compare {
        #[arg(long)]
        sgis: PathBuf,
        #[arg(long)]
        enumerate: Option<PathBuf>,
        #[arg(long)]
        is_baseline: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn paths(
    common: &Common,
    log: Option<PathBuf>,
    out: Option<PathBuf>,
) -> sgis_core::Result<(PathBuf, PathBuf)> {
    let cfg = RunConfig::load(&common.config)?;
    Ok((
        cli::pick_path(log, &cfg.paths.log, "log")?,
        cli::pick_path(out, &cfg.paths.out, "output")?,
    ))
}

fn run(cli: Cli) -> sgis_core::Result<()> {
    match cli.command {
        Command::GenSessions { common, out } => {
            let cfg = RunConfig::load(&common.config)?;
            let out = cli::pick_path(out, &cfg.paths.log, "output")?;
            let s = cli::cmd_gen_sessions(&common.config, &out, common.overrides())?;
            println!(
                "wrote {} sessions to {} (sha256 {})",
                s.n_sessions,
                s.path.display(),
                s.digest
            );
        }
        Command::Sgis { common, log, out } => {
            let (log, out) = paths(&common, log, out)?;
            let s = cli::cmd_sgis(&common.config, &log, &out, common.overrides())?;
            print!("{s}");
        }
        Command::Enumerate {
            common,
            log,
            points_per_dim,
            out,
        } => {
            let (log, out) = paths(&common, log, out)?;
            let s = cli::cmd_enumerate(
                &common.config,
                &log,
                points_per_dim,
                &out,
                common.overrides(),
            )?;
            print!("{s}");
        }
        Command::IsBaseline {
            common,
            log,
            start,
            out,
        } => {
            let (log, out) = paths(&common, log, out)?;
            let start = cli::parse_values(&start)?;
            let s = cli::cmd_is_baseline(&common.config, &log, &start, &out, common.overrides())?;
            print!("{s}");
        }
        Command::Correlation {
            common,
            log,
            center,
            out,
        } => {
            let (log, out) = paths(&common, log, out)?;
            let center = center.as_deref().map(cli::parse_values).transpose()?;
            let s = cli::cmd_correlation(
                &common.config,
                &log,
                center.as_deref(),
                &out,
                common.overrides(),
            )?;
            match s.r {
                Some(r) => println!("pearson r = {r:.4} over {} probes", s.rows),
                None => println!(
                    "pearson r undefined: {}",
                    s.reason.as_deref().unwrap_or("degenerate sample")
                ),
            }
            println!(
                "scatter: {}  summary: {}",
                s.csv.display(),
                s.sidecar.display()
            );
        }
        Command::Compare {
            sgis,
            enumerate,
            is_baseline,
            out,
        } => {
            let c = cli::cmd_compare(
                &sgis,
                enumerate.as_deref(),
                is_baseline.as_deref(),
                out.as_deref(),
            )?;
            print!("{c}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use erasure_robust::bounds::{gaussian_constants, GaussianConstants};
use erasure_robust::constants::{pinned, ConstantsFile};
use serde_json::json;

use commands::{CliError, Ctx, Outcome};
use config::Config;
use output::Artifact;

const ENV_OUT: &str = "ERASURE_ROBUST_OUT";
const ENV_WORKERS: &str = "ERASURE_ROBUST_WORKERS";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "erasure-robust", version, about = "Row-erasure robustness of Gaussian sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Constants file replacing the shipped calibration of c_g.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    /// Worker threads; never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Tabulate closed-form bounds over parameter grids.
    Bounds,
    /// Estimate membership probabilities.
    Estimate,
    /// Empirical quantiles of the extreme ratios.
    Quantiles,
    /// Compare chi-square exceedance frequencies with the tail bound.
    Tailcheck,
    /// Calibrate the order-statistics constant c_g.
    #[command(name = "calibrate-cg")]
    CalibrateCg,
    /// Cross-check the sorting reduction against subset enumeration.
    Oracle,
    /// Size a projection and audit pairwise distances under erasures.
    Jl,
    /// Certify restricted-isometry bands under erasures.
    Rip,
    /// Sign-matrix construction where half the rows annihilate a 2-sparse vector.
    #[command(name = "bernoulli-demo")]
    BernoulliDemo,
    /// Check order-statistic and partial-sum expectation brackets.
    Orderstats,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Estimate => "estimate",
            Command::Quantiles => "quantiles",
            Command::Tailcheck => "tailcheck",
            Command::CalibrateCg => "calibrate-cg",
            Command::Oracle => "oracle",
            Command::Jl => "jl",
            Command::Rip => "rip",
            Command::BernoulliDemo => "bernoulli-demo",
            Command::Orderstats => "orderstats",
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            config::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn resolve_constants(cli: &Cli, cfg: &Config) -> Result<GaussianConstants, CliError> {
    if let Some(p) = &cli.constants {
        return Ok(ConstantsFile::load(p)?.gaussian()?);
    }
    if let Some(c) = cfg.c_g {
        return Ok(gaussian_constants(c)?);
    }
    if let Some(p) = &cfg.constants {
        return Ok(ConstantsFile::load(p)?.gaussian()?);
    }
    Ok(pinned())
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var(ENV_WORKERS) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{ENV_WORKERS} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn block_echo(cmd: Command, cfg: &Config) -> serde_json::Value {
    let v = match cmd {
        Command::Bounds => serde_json::to_value(&cfg.bounds),
        Command::Estimate => serde_json::to_value(&cfg.estimate),
        Command::Quantiles => serde_json::to_value(&cfg.quantiles),
        Command::Tailcheck => serde_json::to_value(&cfg.tailcheck),
        Command::CalibrateCg => serde_json::to_value(&cfg.calibrate_cg),
        Command::Oracle => serde_json::to_value(&cfg.oracle),
        Command::Jl => serde_json::to_value(&cfg.jl),
        Command::Rip => serde_json::to_value(&cfg.rip),
        Command::BernoulliDemo => serde_json::to_value(&cfg.bernoulli_demo),
        Command::Orderstats => serde_json::to_value(&cfg.orderstats),
    };
    v.expect("config blocks serialize")
}

fn run(cli: &Cli) -> Result<(Artifact, Option<PathBuf>, Format), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let workers = match cli.workers {
        Some(w) => w,
        None => env_workers()?.or(cfg.workers).unwrap_or(1),
    };
    if workers == 0 {
        return Err(CliError::Config("workers must be positive".into()));
    }
    let format = match (cli.format, cfg.format.as_deref()) {
        (Some(f), _) => f,
        (None, None) => Format::Json,
        (None, Some(s)) => Format::from_str(s, true)
            .map_err(|_| CliError::Config(format!("unknown format `{s}`")))?,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
        .or(cfg.out.clone());
    let gc = resolve_constants(cli, &cfg)?;
    let ctx = Ctx { seed, workers, gc };
    let Outcome {
        records,
        passed,
        details,
    } = match cli.command {
        Command::Bounds => commands::bounds(&ctx, &cfg.bounds),
        Command::Estimate => commands::estimate(&ctx, &cfg.estimate),
        Command::Quantiles => commands::quantiles(&ctx, &cfg.quantiles),
        Command::Tailcheck => commands::tailcheck(&ctx, &cfg.tailcheck),
        Command::CalibrateCg => commands::calibrate(&ctx, &cfg.calibrate_cg),
        Command::Oracle => commands::oracle(&ctx, &cfg.oracle),
        Command::Jl => commands::jl(&ctx, &cfg.jl),
        Command::Rip => commands::rip(&ctx, &cfg.rip),
        Command::BernoulliDemo => commands::bernoulli(&ctx, &cfg.bernoulli_demo),
        Command::Orderstats => commands::orderstats(&ctx, &cfg.orderstats),
    }?;
    let artifact = Artifact {
        command: cli.command.name().to_string(),
        master_seed: seed,
        constants: json!({
            "c_g": ctx.gc.c_g,
            "eps_g": ctx.gc.eps_g,
            "beta_g": ctx.gc.beta_g,
            "provenance": ctx.gc.provenance.to_string(),
        }),
        config: block_echo(cli.command, &cfg),
        passed,
        records,
        details,
    };
    Ok((artifact, out, format))
}

fn write_outputs(artifact: &Artifact, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let body = match format {
        Format::Json => artifact.to_json(),
        Format::Csv => artifact.to_csv(),
    };
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut log = p.as_os_str().to_owned();
            log.push(".log");
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let line = format!(
                "unix_time={stamp} command={} passed={} records={}\n",
                artifact.command,
                artifact.passed,
                artifact.records.len()
            );
            std::fs::write(PathBuf::from(log), line)
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|(a, out, f)| write_outputs(&a, out.as_deref(), f).map(|_| a)) {
        Ok(a) if a.passed => ExitCode::SUCCESS,
        Ok(a) => {
            eprintln!("{}: audit did not pass", a.command);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

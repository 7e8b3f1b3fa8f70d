use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{RenderMode, RenderRequest};
use config::{ExperimentConfig, Overrides};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<proxmag::Error> for CliError {
    fn from(e: proxmag::Error) -> Self {
        match e {
            proxmag::Error::InvalidInput(_) | proxmag::Error::Unsupported(_) => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "proxmag", version, about = "Magnitude-regularized complex SAR imaging")]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, env = "PROXMAG_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a phantom scene and its phase history.
    Simulate(ExperimentArgs),
    /// Reconstruct an image from simulated or recorded phase history.
    Reconstruct {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Directory holding the phase history; defaults to the output directory.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Render a complex image as a picture.
    Render(RenderArgs),
    /// Run a numerical verification suite.
    ProxTest {
        /// One of: counterexample, theorem1, theorem2, multibang, tgv-fallback, levelset.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Square scene side, in pixels.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    regularizer: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        cfg.apply(&Overrides {
            seed: self.seed,
            output_dir: self.output.clone(),
            size: self.size,
            channels: self.channels,
            snr_db: self.snr_db,
            regularizer: self.regularizer.clone(),
            lambda: self.lambda,
            iterations: self.iterations,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RenderArgs {
    #[arg(value_enum)]
    mode: RenderMode,
    input: PathBuf,
    /// Second image for phase-diff.
    #[arg(long)]
    other: Option<PathBuf>,
    /// Output file; .pgm or .png for mag-db, .png for phase, .png or .cimg for phase-diff.
    #[arg(long, short)]
    output: PathBuf,
    /// Lower end of the dB window.
    #[arg(long, allow_negative_numbers = true)]
    db_min: Option<f64>,
    /// Upper end of the dB window.
    #[arg(long, allow_negative_numbers = true)]
    db_max: Option<f64>,
    /// Render only this channel.
    #[arg(long)]
    channel: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    proxmag::par::configure_threads(cli.threads);
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            for p in commands::simulate(&cfg)? {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
        Command::Reconstruct { exp, data } => {
            let cfg = exp.resolve()?;
            let data = data.unwrap_or_else(|| cfg.output_dir.clone());
            let m = commands::reconstruct_cmd(&cfg, &data)?;
            let psnr = m.psnr_db.map_or("n/a".to_string(), |v| format!("{v:.2} dB"));
            println!(
                "{} iterations, objective {:.6e}, psnr {psnr}, {:.1} s",
                m.iterations, m.final_objective, m.seconds
            );
            Ok(true)
        }
        Command::Render(a) => {
            let (lo, hi) = proxmag::export::DEFAULT_DB_WINDOW;
            let window = (a.db_min.unwrap_or(lo), a.db_max.unwrap_or(hi));
            if !(window.0 < window.1) {
                return Err(CliError::usage("--db-min must be below --db-max"));
            }
            commands::render(&RenderRequest {
                mode: a.mode,
                input: &a.input,
                other: a.other.as_deref(),
                output: &a.output,
                window,
                channel: a.channel,
            })?;
            Ok(true)
        }
        Command::ProxTest { suite, seed, json } => commands::prox_test(&suite, seed, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `ptflow run <config>` executes one declarative experiment;
//! `ptflow fit <csv>` refits an existing data file.
//!
//! Exit codes: 0 success, 1 unusable input (config, CSV, paths, flags),
//! 2 numeric failure.

mod config;
mod emit;
mod error;
mod fitting;
mod plot;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use config::FitKind;
use emit::{sha256_hex, Emitter, RunManifest};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "ptflow", version, about = "Information flow in PT-symmetric dynamics: experiment runner")]
struct Cli {
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "PTFLOW_THREADS", value_name = "N")]
    threads: Option<usize>,
    /// Progress on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Fit a power law or exponential to two columns of a CSV file.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: FitKind,
        /// Fit against |λ − λ_EP| instead of treating the CSV as a time series.
        #[arg(long, allow_negative_numbers = true)]
        lambda_ep: Option<f64>,
        /// Column for the abscissa.
        #[arg(long)]
        x: Option<String>,
        /// Column for the ordinate.
        #[arg(long)]
        y: Option<String>,
        /// Fit window LO,HI in the abscissa (offsets for `--lambda-ep`).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_target(false)
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            n
        }
        None => rayon::current_num_threads(),
    };
    match cli.command {
        Command::Run { config } => run(&config, cli.out.as_deref(), threads),
        Command::Fit { csv, kind, lambda_ep, x, y, window } => {
            let spec = fitting::spec_from_args(csv.clone(), kind, lambda_ep, x, y, window)?;
            let started = Started::now();
            let report = fitting::run_fit(&spec, &csv);
            let Some(dir) = cli.out else {
                let report = report?;
                println!("{}", serde_json::to_string_pretty(&report).expect("fit report serialises"));
                return Ok(());
            };
            let mut em = Emitter::new(&dir)?;
            let result = report.and_then(|r| {
                println!("{}", serde_json::to_string_pretty(&r).expect("fit report serialises"));
                em.json("fit.json", &r)
            });
            let args = serde_json::to_vec(&spec).expect("fit spec serialises");
            let manifest = started.manifest("fit", None, sha256_hex(&args), None, None, threads, &result);
            em.finish(manifest)?;
            result
        }
    }
}

struct Started {
    unix: u64,
    clock: Instant,
}

impl Started {
    fn now() -> Self {
        let unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { unix, clock: Instant::now() }
    }

    #[allow(clippy::too_many_arguments)]
    fn manifest(
        &self,
        command: &str,
        config_path: Option<String>,
        config_sha256: String,
        schema_version: Option<u32>,
        seed: Option<u64>,
        threads: usize,
        result: &CliResult<()>,
    ) -> RunManifest {
        RunManifest {
            tool: "ptflow",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_path,
            config_sha256,
            schema_version,
            seed,
            threads,
            started_unix: self.unix,
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            error: result.as_ref().err().map(|e| e.to_string()),
            outputs: Vec::new(),
        }
    }
}

fn run(path: &Path, out: Option<&Path>, threads: usize) -> CliResult<()> {
    let started = Started::now();
    let loaded = config::load(path)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| loaded.config.output.as_deref().map(|p| loaded.relative(p)))
        .ok_or_else(|| CliError::Config(format!("{}: no output directory; set `output` or pass --out", path.display())))?;
    let mut em = Emitter::new(&dir)?;
    let result = runner::run(&loaded, &mut em);
    let manifest = started.manifest(
        "run",
        Some(path.display().to_string()),
        sha256_hex(&loaded.raw),
        Some(loaded.config.schema_version),
        Some(loaded.config.seed),
        threads,
        &result,
    );
    let manifest = em.finish(manifest)?;
    log::info!("{} outputs in {} ({:.2} s)", manifest.outputs.len(), dir.display(), manifest.wall_clock_seconds);
    result
}

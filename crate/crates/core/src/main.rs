use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use psdclust::harness::{
    cluster_files, quadform_suite, load_labels, inner_product_suite, run_sweep, theory_table, write_checks_csv,
    write_theory_csv, ExperimentConfig,
};
use psdclust::Error;

#[derive(Parser)]
#[command(name = "psdclust", version, about = "Cluster stationary time series by their power spectra")]
struct Cli {
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and report mean clustering error per cell.
    Sweep { config: PathBuf },
    /// Cluster series files (one value per line).
    Cluster {
        config: PathBuf,
        files: Vec<PathBuf>,
        /// File with one integer label per series, enabling CE and entropy.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Evaluate the sufficient clustering condition for every sweep cell.
    Theory { config: PathBuf },
    /// Monte-Carlo checks of the quadratic-form tail bound and the
    /// inner-product dominance bound.
    ValidateBounds {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            context: p.display().to_string(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Sweep { config } => {
            let config = load_config(config, cli.seed)?;
            let table = run_sweep(&config)?;
            table.write_csv(output(&cli.out)?)
        }
        Command::Cluster { config, files, labels } => {
            let config = load_config(config, cli.seed)?;
            let labels = labels.as_deref().map(load_labels).transpose()?;
            let result = cluster_files(files, &config, labels.as_deref())?;
            result.write_csv(output(&cli.out)?)
        }
        Command::Theory { config } => {
            let config = load_config(config, cli.seed)?;
            let table = theory_table(&config)?;
            write_theory_csv(&config, &table, output(&cli.out)?)
        }
        Command::ValidateBounds { trials } => {
            let seed = cli.seed.unwrap_or(0);
            let mut checks = quadform_suite(*trials, seed)?;
            checks.extend(inner_product_suite(*trials, seed)?);
            let failed = checks.iter().filter(|c| !c.holds).count();
            if failed > 0 {
                log::warn!("{failed} of {} bound checks failed", checks.len());
            }
            write_checks_csv(&checks, &format!("validate-bounds trials={trials} seed={seed}"), output(&cli.out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chain_hydro_runner::report::format_summary;
use chain_hydro_runner::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use clap::{Parser, Subcommand};

const OUT_ENV: &str = "CHAIN_HYDRO_OUT";
const DEFAULT_OUT: &str = "chain-hydro-out";

#[derive(Parser)]
#[command(name = "chain-hydro", version, about = "Hydrodynamic-limit experiments on disordered harmonic chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory [default: config `output`, then $CHAIN_HYDRO_OUT, then ./chain-hydro-out].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_override: u64,
    },
    /// List the experiment kinds and the quantities each one records.
    ListExperiments,
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::from_file(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{kind:<22} {}", kind.summary());
                for q in chain_hydro_runner::quantity::quantities(kind) {
                    println!("    {:<26} {}", q.name, q.description);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: ok ({}, {} cells)", config.display(), cfg.kind, cfg.sizes.len() * cfg.seeds.len());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out, workers, seed_override } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let out_dir = out
                .or_else(|| cfg.output.clone())
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let opts = RunOptions { out_dir: out_dir.clone(), workers, seed_shift: seed_override };
            match run_experiment(&cfg, &opts) {
                Ok(report) => {
                    print!("{}", format_summary(&report.series));
                    for o in &report.outcomes {
                        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.description, o.observed);
                    }
                    println!("wrote {} files to {}", report.files.len(), out_dir.display());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
            }
        }
    }
}

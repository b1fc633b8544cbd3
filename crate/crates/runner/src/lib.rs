//! Batch experiments over disordered chains: configuration, execution and reporting.

pub mod config;
pub mod experiments;
pub mod predicate;
pub mod quantity;
pub mod report;
pub mod stats;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
use experiments::{run_cells, CellError};
pub use predicate::{Outcome, Predicate, Rule};
pub use quantity::Record;
pub use stats::{convergence_table, ConvergenceTable, Series};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Setup(#[from] CellError),
    #[error("{count} of the cells failed, first: N={n} seed={seed}: {message}")]
    Cells { count: usize, n: usize, seed: u64, message: String },
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the configuration, then all cores.
    pub workers: Option<usize>,
    /// Added to every configured seed.
    pub seed_shift: u64,
}

#[derive(Debug)]
pub struct RunReport {
    pub records: Vec<Record>,
    pub series: Vec<Series>,
    pub outcomes: Vec<Outcome>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

/// Runs `cfg`, writes every output file into `opts.out_dir` and evaluates the predicates.
///
/// Files are written even when some cells fail; the failure is reported afterwards.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut cfg = cfg.clone();
    for s in &mut cfg.seeds {
        *s = s.wrapping_add(opts.seed_shift);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.workers.or(cfg.workers) {
        pool = pool.num_threads(k);
    }
    let pool = pool.build()?;
    let mut data = pool.install(|| run_cells(&cfg))?;
    stats::sort_records(cfg.kind, &mut data.records);
    let series = stats::summarize(cfg.kind, &data.records);
    let outcomes: Vec<Outcome> = cfg.predicates.iter().map(|p| predicate::evaluate(p, &data.records, &series)).collect();
    let files = write_outputs(&cfg, &opts.out_dir, &data, &series, &outcomes)?;
    if let Some((cell, err)) = data.failures.first() {
        return Err(RunError::Cells {
            count: data.failures.len(),
            n: cell.n,
            seed: cell.seed,
            message: err.to_string(),
        });
    }
    Ok(RunReport { records: data.records, series, outcomes, files })
}

fn write_outputs(
    cfg: &ExperimentConfig,
    dir: &Path,
    data: &experiments::RunData,
    series: &[Series],
    outcomes: &[Outcome],
) -> Result<Vec<PathBuf>, RunError> {
    let err = |path: &Path| {
        let path = path.to_owned();
        move |source| RunError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(err(dir))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<(), RunError> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(err(&path))?;
        files.push(path);
        Ok(())
    };
    let mut buf = Vec::new();
    report::write_records(&mut buf, cfg.kind, stamp, &data.records).map_err(err(dir))?;
    emit("results.csv", buf)?;
    let mut buf = Vec::new();
    report::write_summary(&mut buf, cfg.kind, stamp, series).map_err(err(dir))?;
    emit("summary.csv", buf)?;
    if !outcomes.is_empty() {
        let mut buf = Vec::new();
        report::write_outcomes(&mut buf, cfg.kind, stamp, outcomes).map_err(err(dir))?;
        emit("predicates.csv", buf)?;
    }
    for s in series {
        if let Some(svg) = report::svg_plot(s) {
            emit(&format!("{}.svg", s.key.label()), svg.into_bytes())?;
        }
    }
    for a in &data.artifacts {
        emit(&a.name, a.contents.clone().into_bytes())?;
    }
    Ok(files)
}

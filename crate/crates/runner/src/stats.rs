//! Replica aggregation and convergence fits.

use std::cmp::Ordering;

use chain_hydro::numeric::{linear_fit, LinearFit};
use thiserror::Error;

use crate::config::ExperimentKind;
use crate::quantity::{lookup, Aggregate, Record};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 3 distinct chain lengths with non-zero values, got {0}")]
    TooFewSizes(usize),
}

/// Aggregate over the replicas at one chain length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointStats {
    pub n: usize,
    pub count: usize,
    pub value: f64,
    pub stderr: f64,
}

pub fn aggregate(n: usize, values: &[f64], how: Aggregate) -> PointStats {
    let count = values.len();
    let c = count as f64;
    let spread = |xs: &mut dyn Iterator<Item = f64>, m: f64| -> f64 {
        if count < 2 {
            return 0.0;
        }
        let ss: f64 = xs.map(|x| (x - m).powi(2)).sum();
        (ss / (c - 1.0)).sqrt() / c.sqrt()
    };
    match how {
        Aggregate::Mean => {
            let m = values.iter().sum::<f64>() / c;
            PointStats { n, count, value: m, stderr: spread(&mut values.iter().copied(), m) }
        }
        Aggregate::Rms => {
            let ms = values.iter().map(|x| x * x).sum::<f64>() / c;
            let rms = ms.sqrt();
            let se_ms = spread(&mut values.iter().map(|x| x * x), ms);
            PointStats { n, count, value: rms, stderr: if rms > 0.0 { se_ms / (2.0 * rms) } else { 0.0 } }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub points: Vec<PointStats>,
    /// Fit of `log value` against `log N`.
    pub fit: LinearFit,
    /// Rows dropped for being exactly zero.
    pub excluded: usize,
}

/// Per-size aggregates of `|X_N − X|` rows and the log-log slope through them.
pub fn convergence_table(rows: &[(usize, f64)], how: Aggregate) -> Result<ConvergenceTable, StatsError> {
    let kept: Vec<(usize, f64)> = rows.iter().copied().filter(|&(_, v)| v != 0.0).collect();
    let excluded = rows.len() - kept.len();
    if excluded > 0 {
        log::info!("excluded {excluded} zero-error rows from the convergence fit");
    }
    let mut sizes: Vec<usize> = kept.iter().map(|&(n, _)| n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(StatsError::TooFewSizes(sizes.len()));
    }
    let points: Vec<PointStats> = sizes
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = kept.iter().filter(|&&(m, _)| m == n).map(|&(_, v)| v).collect();
            aggregate(n, &vals, how)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().map(|p| ((p.n as f64).ln(), p.value.abs().ln())).unzip();
    let fit = linear_fit(&xs, &ys).ok_or(StatsError::TooFewSizes(sizes.len()))?;
    Ok(ConvergenceTable { points, fit, excluded })
}

/// Identifies one curve over `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesKey {
    pub quantity: &'static str,
    pub time: Option<f64>,
    pub scale: Option<f64>,
}

impl SeriesKey {
    pub fn of(r: &Record) -> Self {
        Self { quantity: r.quantity, time: r.time, scale: r.scale }
    }

    /// File-name friendly label such as `thermal_drift_t0.5_s1.5`.
    pub fn label(&self) -> String {
        let mut s = self.quantity.to_string();
        if let Some(t) = self.time {
            s.push_str(&format!("_t{t}"));
        }
        if let Some(e) = self.scale {
            s.push_str(&format!("_s{e}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub key: SeriesKey,
    pub aggregate: Aggregate,
    pub points: Vec<PointStats>,
    pub fit: Option<LinearFit>,
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

/// Canonical record order: quantity as listed for the kind, then time, scale, N, seed.
pub fn sort_records(kind: ExperimentKind, records: &mut [Record]) {
    let rank = |q: &str| crate::quantity::quantities(kind).iter().position(|x| x.name == q).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        rank(a.quantity)
            .cmp(&rank(b.quantity))
            .then(cmp_opt(a.time, b.time))
            .then(cmp_opt(a.scale, b.scale))
            .then(a.n.cmp(&b.n))
            .then(a.seed.cmp(&b.seed))
    });
}

/// Groups sorted records into series and aggregates each chain length.
pub fn summarize(kind: ExperimentKind, records: &[Record]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let key = SeriesKey::of(&records[i]);
        let j = i + records[i..].iter().take_while(|r| SeriesKey::of(r) == key).count();
        let group = &records[i..j];
        let how = lookup(kind, key.quantity).map_or(Aggregate::Mean, |q| q.aggregate);
        let mut sizes: Vec<usize> = group.iter().map(|r| r.n).collect();
        sizes.dedup();
        let points: Vec<PointStats> = sizes
            .iter()
            .map(|&n| {
                let vals: Vec<f64> = group.iter().filter(|r| r.n == n).map(|r| r.value).collect();
                aggregate(n, &vals, how)
            })
            .collect();
        let rows: Vec<(usize, f64)> = group.iter().map(|r| (r.n, r.value)).collect();
        let fit = if points.iter().all(|p| p.value != 0.0) {
            convergence_table(&rows, how).ok().map(|t| t.fit)
        } else {
            None
        };
        out.push(Series { key, aggregate: how, points, fit });
        i = j;
    }
    out
}

//! Spatial localization of eigenmodes.

use std::io::Write;

use thiserror::Error;

use crate::chain::EigenBasis;
use crate::fields::first_high_mode;
use crate::numeric::{linear_fit, LinearFit};

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("support exponent must lie in (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("need 0 < 2 alpha < gamma < 1, got alpha = {alpha}, gamma = {gamma}")]
    ExponentsOutOfRange { alpha: f64, gamma: f64 },
    #[error("mode {k} outside 0..{n}")]
    ModeOutOfRange { k: usize, n: usize },
    #[error("need at least 2 frequency bands, got {0}")]
    TooFewBands(usize),
    #[error("no eigenbases supplied")]
    NoBases,
    #[error("replicas must share the chain length, got {expected} and {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("the high band is empty for N = {0}")]
    EmptyBand(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LocalizationError> = std::result::Result<T, E>;

/// Where a mode lives: `center` and `interval` are 1-based sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSupport {
    pub k: usize,
    pub center: usize,
    pub interval: (usize, usize),
    pub outside_max: f64,
    pub ipr: f64,
}

impl ModeSupport {
    /// Whether the amplitude outside the interval is at most `N^{-1/gamma}`.
    pub fn is_confined(&self, n: usize, gamma: f64) -> bool {
        self.outside_max <= decay_threshold(n, gamma)
    }
}

pub fn decay_threshold(n: usize, gamma: f64) -> f64 {
    (n as f64).powf(-1.0 / gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(LocalizationError::GammaOutOfRange(gamma))
    }
}

fn center_of(mode: impl Iterator<Item = f64>, masses: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (x, (v, m)) in mode.zip(masses).enumerate() {
        let w = m * v * v;
        if w > best.1 {
            best = (x, w);
        }
    }
    best.0
}

/// Support of mode `k` on the window of half-width `N^gamma` around the mass-weighted peak.
pub fn mode_support(basis: &EigenBasis, k: usize, gamma: f64) -> Result<ModeSupport> {
    check_gamma(gamma)?;
    let n = basis.n();
    if k >= n {
        return Err(LocalizationError::ModeOutOfRange { k, n });
    }
    let mode = basis.mode(k);
    let c = center_of(mode.iter().copied(), basis.masses()) + 1;
    let half = (n as f64).powf(gamma);
    let a = (c as f64 - half).ceil().max(1.0) as usize;
    let b = ((c as f64 + half).floor() as usize).min(n);
    let outside_max = mode
        .iter()
        .enumerate()
        .filter(|&(i, _)| i + 1 < a || i + 1 > b)
        .fold(0.0_f64, |acc, (_, v)| acc.max(v.abs()));
    let (s2, s4) = mode.iter().fold((0.0, 0.0), |(s2, s4), v| {
        let v2 = v * v;
        (s2 + v2, s4 + v2 * v2)
    });
    Ok(ModeSupport { k, center: c, interval: (a, b), outside_max, ipr: s4 / (s2 * s2) })
}

/// Modes `k` with `N^{1-alpha} < k <= N-1`.
pub fn high_band(n: usize, alpha: f64) -> std::ops::Range<usize> {
    first_high_mode(n, alpha)..n
}

/// Supports of every mode in the high band together with their pass flags.
pub fn high_band_supports(basis: &EigenBasis, alpha: f64, gamma: f64) -> Result<Vec<(ModeSupport, bool)>> {
    if !(alpha > 0.0 && 2.0 * alpha < gamma && gamma < 1.0) {
        return Err(LocalizationError::ExponentsOutOfRange { alpha, gamma });
    }
    let n = basis.n();
    let band = high_band(n, alpha);
    if band.is_empty() {
        return Err(LocalizationError::EmptyBand(n));
    }
    band.map(|k| {
        let s = mode_support(basis, k, gamma)?;
        Ok((s, s.is_confined(n, gamma)))
    })
    .collect()
}

/// Fraction of high-band modes confined to their window.
pub fn confinement_pass_rate(basis: &EigenBasis, alpha: f64, gamma: f64) -> Result<f64> {
    let supports = high_band_supports(basis, alpha, gamma)?;
    let passed = supports.iter().filter(|(_, ok)| *ok).count();
    Ok(passed as f64 / supports.len() as f64)
}

pub fn write_supports_csv<W: Write>(
    mut w: W,
    n: usize,
    seed: Option<u64>,
    rows: &[(ModeSupport, bool)],
    basis: &EigenBasis,
) -> Result<()> {
    writeln!(w, "N,seed,k,omega,center,outside_max,ipr,pass")?;
    let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    for (s, ok) in rows {
        writeln!(
            w,
            "{n},{seed},{},{:e},{},{:e},{:e},{}",
            s.k,
            basis.frequency(s.k),
            s.center,
            s.outside_max,
            s.ipr,
            u8::from(*ok)
        )?;
    }
    Ok(())
}

/// Relative amplitude floor below which the envelope counts as numerical noise.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Decay length of a mode's envelope away from its mass-weighted peak.
///
/// The envelope on each side is the running maximum of `|mode|` taken from the far end,
/// so it is non-increasing in the distance from the peak. `log envelope` is fitted
/// linearly against distance and the length is `-1/slope`; a non-decaying fit gives
/// `f64::INFINITY`. Returns `None` when fewer than two points are usable.
pub fn decay_length(mode: &[f64], masses: &[f64]) -> Option<f64> {
    let c = center_of(mode.iter().copied(), masses);
    let peak = mode[c].abs();
    if peak == 0.0 {
        return None;
    }
    let floor = ENVELOPE_FLOOR * peak;
    let mut free = vec![(0.0, peak.ln())];
    let mut clamped = Vec::new();
    let sides: [Box<dyn Iterator<Item = usize>>; 2] = [Box::new(c + 1..mode.len()), Box::new((0..c).rev())];
    for side in sides {
        let sites: Vec<usize> = side.collect();
        let mut env = vec![0.0; sites.len()];
        let mut run = 0.0_f64;
        for (i, &x) in sites.iter().enumerate().rev() {
            run = run.max(mode[x].abs());
            env[i] = run;
        }
        for (i, &e) in env.iter().enumerate() {
            let d = (i + 1) as f64;
            if e > floor {
                free.push((d, e.ln()));
            } else {
                clamped.push((d, floor.ln()));
                break;
            }
        }
    }
    if free.len() < 2 {
        clamped.sort_by(|a, b| a.0.total_cmp(&b.0));
        free.extend(clamped.into_iter().take(2 - free.len()));
    }
    if free.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = free.into_iter().unzip();
    let slope = linear_fit(&xs, &ys)?.slope;
    Some(if slope < 0.0 { -1.0 / slope } else { f64::INFINITY })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthBand {
    pub omega_mid: f64,
    pub zeta: f64,
    pub modes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthProfile {
    pub n: usize,
    pub bands: Vec<LengthBand>,
    /// Indices of bands dropped for holding fewer than three modes.
    pub skipped: Vec<usize>,
}

/// Frequency and decay length of every non-zero mode, skipping modes with no usable envelope.
pub fn mode_decay_lengths(basis: &EigenBasis) -> Vec<DecaySample> {
    (1..basis.n())
        .filter_map(|k| {
            let mode = basis.mode(k);
            let mode = mode.as_slice().expect("mode rows are contiguous");
            decay_length(mode, basis.masses()).map(|zeta| DecaySample { omega: basis.frequency(k), zeta })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySample {
    pub omega: f64,
    pub zeta: f64,
}

/// Decay lengths averaged per frequency band over all modes of all replicas.
///
/// Bands split `[0, max ω]` evenly. Within a band the decay rates `1/ζ` are averaged
/// and the result inverted.
pub fn localization_length_profile(bases: &[EigenBasis], band_count: usize) -> Result<LengthProfile> {
    let n = bases.first().ok_or(LocalizationError::NoBases)?.n();
    if let Some(b) = bases.iter().find(|b| b.n() != n) {
        return Err(LocalizationError::LengthMismatch { expected: n, found: b.n() });
    }
    let samples: Vec<DecaySample> = bases.iter().flat_map(mode_decay_lengths).collect();
    length_profile(&samples, n, band_count)
}

/// Band averages of pooled samples from chains of length `n`.
pub fn length_profile(samples: &[DecaySample], n: usize, band_count: usize) -> Result<LengthProfile> {
    if band_count < 2 {
        return Err(LocalizationError::TooFewBands(band_count));
    }
    let top = samples.iter().map(|s| s.omega).fold(0.0, f64::max);
    let width = top / band_count as f64;
    let mut rate_sum = vec![0.0; band_count];
    let mut count = vec![0usize; band_count];
    for s in samples {
        let band = ((s.omega / width) as usize).min(band_count - 1);
        rate_sum[band] += 1.0 / s.zeta;
        count[band] += 1;
    }
    let mut bands = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..band_count {
        if count[i] < 3 {
            skipped.push(i);
            continue;
        }
        let rate = rate_sum[i] / count[i] as f64;
        bands.push(LengthBand {
            omega_mid: (i as f64 + 0.5) * width,
            zeta: if rate > 0.0 { 1.0 / rate } else { f64::INFINITY },
            modes: count[i],
        });
    }
    if !skipped.is_empty() {
        log::info!("skipped {} sparse frequency bands", skipped.len());
    }
    Ok(LengthProfile { n, bands, skipped })
}

impl LengthProfile {
    /// Bands with `m̄ ω² <= 1` and `ζ <= N/8`, away from both spectral edges.
    pub fn mid_spectrum(&self, m_bar: f64) -> Vec<LengthBand> {
        let cap = self.n as f64 / 8.0;
        self.bands
            .iter()
            .filter(|b| m_bar * b.omega_mid * b.omega_mid <= 1.0 && b.zeta <= cap)
            .copied()
            .collect()
    }

    /// Least-squares slope of `log ζ` against `log ω` over the mid-spectrum bands.
    pub fn scaling_fit(&self, m_bar: f64) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.mid_spectrum(m_bar).iter().map(|b| (b.omega_mid.ln(), b.zeta.ln())).unzip();
        linear_fit(&xs, &ys)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega_mid,zeta,modes")?;
        for b in &self.bands {
            writeln!(w, "{:e},{:e},{}", b.omega_mid, b.zeta, b.modes)?;
        }
        Ok(())
    }
}

//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chain_hydro::chain::{MassLaw, Tolerances};
use chain_hydro::gibbs::{MacroProfiles, Profile};
use serde::Deserialize;
use thiserror::Error;

use crate::predicate::{Predicate, Rule};
use crate::quantity::quantities;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Conservation,
    EquilibriumExactness,
    Convergence,
    FrozenTemperature,
    Localization,
    Averaging,
    CleanChain,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Conservation,
        ExperimentKind::EquilibriumExactness,
        ExperimentKind::Convergence,
        ExperimentKind::FrozenTemperature,
        ExperimentKind::Localization,
        ExperimentKind::Averaging,
        ExperimentKind::CleanChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Conservation => "conservation",
            ExperimentKind::EquilibriumExactness => "equilibrium_exactness",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::FrozenTemperature => "frozen_temperature",
            ExperimentKind::Localization => "localization",
            ExperimentKind::Averaging => "averaging",
            ExperimentKind::CleanChain => "clean_chain",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Conservation => "drift of H, I and every mode energy under the exact flow",
            ExperimentKind::EquilibriumExactness => "site variances of an evolved local Gibbs state against 1/(2 beta)",
            ExperimentKind::Convergence => "empirical fields against the Euler limit, thermal drift, a priori sums",
            ExperimentKind::FrozenTemperature => "thermal energy drift over long time scales and its mode-band split",
            ExperimentKind::Localization => "support test of high modes and decay-length scaling",
            ExperimentKind::Averaging => "mass-fluctuation averaging sums and the constant-mass control",
            ExperimentKind::CleanChain => "equal-mass chain: covariance invariance and the Wigner phase identity",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(Box<toml::de::Error>),
    #[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { field: String, line: Option<usize>, message: String },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ProfileSpec {
    Constant { value: f64 },
    Polynomial { coefficients: Vec<f64> },
    Sine { coefficients: Vec<f64> },
    Cosine { coefficients: Vec<f64> },
    Table { path: PathBuf },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    beta: Option<ProfileSpec>,
    r_mean: Option<ProfileSpec>,
    p_mean: Option<ProfileSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    orthonormality: Option<f64>,
    residual_relative: Option<f64>,
    residual_absolute: Option<f64>,
    euler_modes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: ExperimentKind,
    n: Vec<usize>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    times: Vec<f64>,
    time_exponents: Option<Vec<f64>>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    mass_law: Option<String>,
    beta: Option<f64>,
    samples: Option<usize>,
    xi: Option<usize>,
    bands: Option<usize>,
    output: Option<PathBuf>,
    workers: Option<usize>,
    #[serde(default)]
    profiles: RawProfiles,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default, rename = "predicate")]
    predicates: Vec<Predicate>,
}

/// A validated experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Macroscopic times.
    pub times: Vec<f64>,
    /// Microscopic time is `N^e · t` for each exponent `e`.
    pub time_exponents: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub mass_law: MassLaw,
    pub profiles: MacroProfiles,
    /// Inverse temperature of the equal-mass equilibrium.
    pub beta: f64,
    pub samples: usize,
    pub xi: usize,
    pub bands: usize,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub tolerances: Tolerances,
    pub euler_modes: usize,
    pub predicates: Vec<Predicate>,
}

impl ExperimentConfig {
    /// Defaults for `kind`, with a single seed and no predicates.
    pub fn new(kind: ExperimentKind, sizes: Vec<usize>) -> Self {
        Self {
            kind,
            sizes,
            seeds: vec![1],
            times: vec![0.5],
            time_exponents: vec![1.0],
            alpha: 0.3,
            gamma: 0.8,
            mass_law: MassLaw::CANONICAL,
            profiles: MacroProfiles::canonical(),
            beta: 1.0,
            samples: 10_000,
            xi: 1,
            bands: 48,
            output: None,
            workers: None,
            tolerances: Tolerances::default(),
            euler_modes: 512,
            predicates: Vec::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::parse(&text, path.parent())
    }

    /// Parses TOML text; relative table paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))?;
        let invalid = |field: &str, message: String| ConfigError::Invalid {
            field: field.to_string(),
            line: line_of(text, field),
            message,
        };
        let mut cfg = ExperimentConfig::new(raw.kind, raw.n);
        cfg.seeds = raw.seeds;
        cfg.times = raw.times;
        if let Some(e) = raw.time_exponents {
            cfg.time_exponents = e;
        }
        cfg.alpha = raw.alpha.unwrap_or(cfg.alpha);
        cfg.gamma = raw.gamma.unwrap_or(cfg.gamma);
        if let Some(law) = raw.mass_law {
            cfg.mass_law = MassLaw::from_str(&law).map_err(|e| invalid("mass_law", e.to_string()))?;
        }
        cfg.beta = raw.beta.unwrap_or(cfg.beta);
        cfg.samples = raw.samples.unwrap_or(cfg.samples);
        cfg.xi = raw.xi.unwrap_or(cfg.xi);
        cfg.bands = raw.bands.unwrap_or(cfg.bands);
        cfg.output = raw.output;
        cfg.workers = raw.workers;
        let t = raw.tolerances;
        cfg.tolerances = Tolerances {
            orthonormality: t.orthonormality.unwrap_or(cfg.tolerances.orthonormality),
            residual_relative: t.residual_relative.unwrap_or(cfg.tolerances.residual_relative),
            residual_absolute: t.residual_absolute.unwrap_or(cfg.tolerances.residual_absolute),
        };
        cfg.euler_modes = t.euler_modes.unwrap_or(cfg.euler_modes);
        cfg.profiles = build_profiles(raw.profiles, base).map_err(|(field, msg)| invalid(field, msg))?;
        cfg.predicates = raw.predicates;
        cfg.validate().map_err(|(field, message)| invalid(field, message))?;
        Ok(cfg)
    }

    /// Checks invariants, reporting the offending field.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.sizes.is_empty() {
            return Err(("n", "at least one chain length is required".into()));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 8) {
            return Err(("n", format!("chain lengths must be at least 8, got {n}")));
        }
        if self.seeds.is_empty() {
            return Err(("seeds", "at least one seed is required".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(("seeds", "seeds must be distinct".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(("times", format!("times must be finite and non-negative, got {t}")));
        }
        let needs_times = !matches!(self.kind, ExperimentKind::Localization);
        if needs_times && self.times.is_empty() {
            return Err(("times", "at least one time is required".into()));
        }
        if self.time_exponents.is_empty() || self.time_exponents.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(("time_exponents", "need one or more finite non-negative exponents".into()));
        }
        if self.kind == ExperimentKind::Convergence && !self.time_exponents.contains(&1.0) {
            return Err(("time_exponents", "convergence compares fields at scale 1, include 1.0".into()));
        }
        match self.kind {
            ExperimentKind::FrozenTemperature if !(self.alpha > 0.0 && self.alpha < 0.5) => {
                return Err(("alpha", format!("must lie in (0, 1/2), got {}", self.alpha)));
            }
            ExperimentKind::Localization if !(self.alpha > 0.0 && 2.0 * self.alpha < self.gamma && self.gamma < 1.0) => {
                return Err(("gamma", format!("need 0 < 2 alpha < gamma < 1, got alpha = {}, gamma = {}", self.alpha, self.gamma)));
            }
            _ => {}
        }
        if self.kind == ExperimentKind::Localization && self.bands < 2 {
            return Err(("bands", "need at least 2 frequency bands".into()));
        }
        if self.kind == ExperimentKind::CleanChain {
            if !(self.beta > 0.0) {
                return Err(("beta", format!("must be positive, got {}", self.beta)));
            }
            if self.samples < 2 {
                return Err(("samples", "need at least 2 samples".into()));
            }
            if let Some(n) = self.sizes.iter().find(|&&n| self.xi >= n) {
                return Err(("xi", format!("offset {} does not fit a lattice of {n} sites", self.xi)));
            }
        }
        if self.workers == Some(0) {
            return Err(("workers", "need at least one worker".into()));
        }
        let known = quantities(self.kind);
        for p in &self.predicates {
            if !known.iter().any(|q| q.name == p.quantity) {
                return Err(("quantity", format!("`{}` is not produced by {}", p.quantity, self.kind)));
            }
            if p.rule.needs_value() && p.value.is_none() {
                return Err(("value", format!("rule {} on `{}` needs a value", p.rule, p.quantity)));
            }
            if p.rule == Rule::SlopeWithin && p.tolerance.is_none() {
                return Err(("tolerance", format!("rule {} on `{}` needs a tolerance", p.rule, p.quantity)));
            }
        }
        Ok(())
    }
}

fn build_profiles(raw: RawProfiles, base: Option<&Path>) -> Result<MacroProfiles, (&'static str, String)> {
    let canonical = MacroProfiles::canonical();
    let convert = |spec: Option<ProfileSpec>, field: &'static str, default: &Profile| -> Result<Profile, (&'static str, String)> {
        Ok(match spec {
            None => default.clone(),
            Some(ProfileSpec::Constant { value }) => Profile::constant(value),
            Some(ProfileSpec::Polynomial { coefficients }) => Profile::Polynomial(coefficients),
            Some(ProfileSpec::Sine { coefficients }) => Profile::SineSeries(coefficients),
            Some(ProfileSpec::Cosine { coefficients }) => Profile::CosineSeries(coefficients),
            Some(ProfileSpec::Table { path }) => {
                let path = base.map_or(path.clone(), |b| b.join(&path));
                let file = std::fs::File::open(&path).map_err(|e| (field, format!("{}: {e}", path.display())))?;
                Profile::read_table(std::io::BufReader::new(file)).map_err(|e| (field, e.to_string()))?
            }
        })
    };
    let beta = convert(raw.beta, "beta", canonical.beta())?;
    let r_mean = convert(raw.r_mean, "r_mean", canonical.r_mean())?;
    let p_mean = convert(raw.p_mean, "p_mean", canonical.p_mean())?;
    MacroProfiles::new(beta, r_mean, p_mean).map_err(|e| ("profiles", e.to_string()))
}

/// First line declaring `key = ...`, 1-based.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

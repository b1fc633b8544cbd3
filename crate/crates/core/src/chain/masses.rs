use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChainError, Result};

/// Distribution of the i.i.d. site masses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MassLaw {
    Uniform { lo: f64, hi: f64 },
    Constant(f64),
}

impl MassLaw {
    /// Uniform on `[0.8, 1.2]`, mean one.
    pub const CANONICAL: MassLaw = MassLaw::Uniform { lo: 0.8, hi: 1.2 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            MassLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
                    return Err(ChainError::InvalidLaw(format!(
                        "uniform bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                    )));
                }
            }
            MassLaw::Constant(m) => {
                if !(m.is_finite() && m > 0.0) {
                    return Err(ChainError::InvalidLaw(format!(
                        "constant mass must be positive, got {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MassLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            MassLaw::Constant(m) => m,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MassLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            MassLaw::Constant(_) => 0.0,
        }
    }

    /// Support `(m₋, m₊)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            MassLaw::Uniform { lo, hi } => (lo, hi),
            MassLaw::Constant(m) => (m, m),
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            MassLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            MassLaw::Constant(m) => m,
        }
    }
}

impl fmt::Display for MassLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassLaw::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            MassLaw::Constant(m) => write!(f, "constant({m})"),
        }
    }
}

impl FromStr for MassLaw {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || ChainError::InvalidLaw(format!("cannot parse `{s}`"));
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let law = match (name.trim(), nums.as_slice()) {
            ("uniform", [lo, hi]) => MassLaw::Uniform { lo: *lo, hi: *hi },
            ("constant", [m]) => MassLaw::Constant(*m),
            _ => return Err(bad()),
        };
        law.validate()?;
        Ok(law)
    }
}

/// One realization of the site masses `m_1..m_N` (stored zero-based).
#[derive(Clone, Debug, PartialEq)]
pub struct MassField {
    masses: Vec<f64>,
    law: MassLaw,
    seed: Option<u64>,
}

impl MassField {
    /// Draws `n` masses from `law`; the same `(law, n, seed)` always gives the same masses.
    pub fn sample(law: MassLaw, n: usize, seed: u64) -> Result<Self> {
        law.validate()?;
        if n < 2 {
            return Err(ChainError::TooShort(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masses = (0..n).map(|_| law.draw(&mut rng)).collect();
        Ok(Self {
            masses,
            law,
            seed: Some(seed),
        })
    }

    /// Wraps explicit masses; `law` supplies the reference mean used by averaging statistics.
    pub fn from_masses(masses: Vec<f64>, law: MassLaw) -> Result<Self> {
        law.validate()?;
        if masses.len() < 2 {
            return Err(ChainError::TooShort(masses.len()));
        }
        if let Some((site, &mass)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(ChainError::BadMass { site, mass });
        }
        Ok(Self {
            masses,
            law,
            seed: None,
        })
    }

    pub fn constant(n: usize, mass: f64) -> Result<Self> {
        Self::from_masses(vec![mass; n], MassLaw::Constant(mass))
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn law(&self) -> MassLaw {
        self.law
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Mean of the law (not the empirical mean).
    pub fn mean_mass(&self) -> f64 {
        self.law.mean()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::MAX, f64::min)
    }
}

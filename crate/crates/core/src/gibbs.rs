//! Macroscopic profiles and the first two moments of the local Gibbs state they define.

use std::io::BufRead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::chain::MassField;
use crate::numeric::{cos_pi, sin_pi, InterpolationError, MonotoneCubic};

#[derive(Debug, Error)]
pub enum GibbsError {
    #[error("inverse temperature must be positive, got {value} at y = {y}")]
    NonPositiveBeta { y: f64, value: f64 },
    #[error("mean stretch must vanish at the ends, got {value} at y = {y}")]
    NonZeroBoundary { y: f64, value: f64 },
    #[error("{which} profile is not continuously differentiable on [0, 1]")]
    NotDifferentiable { which: &'static str },
    #[error("{which} profile is not finite at y = {y}")]
    NonFinite { which: &'static str, y: f64 },
    #[error("table must cover [0, 1], covers [{lo}, {hi}]")]
    TableDomain { lo: f64, hi: f64 },
    #[error("table line {line}: {message}")]
    TableSyntax { line: usize, message: String },
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GibbsError> = std::result::Result<T, E>;

/// A function on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `Σ_i c_i y^i`.
    Polynomial(Vec<f64>),
    /// `Σ_{n≥1} c_n sin(nπy)`; the first coefficient multiplies `sin(πy)`.
    SineSeries(Vec<f64>),
    /// `Σ_{n≥0} c_n cos(nπy)`.
    CosineSeries(Vec<f64>),
    /// Sampled values joined by a monotone cubic.
    Table(MonotoneCubic),
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Profile::Polynomial(vec![c])
    }

    pub fn table(ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let interp = MonotoneCubic::new(ys, values)?;
        let (lo, hi) = interp.domain();
        if lo > 0.0 || hi < 1.0 {
            return Err(GibbsError::TableDomain { lo, hi });
        }
        Ok(Profile::Table(interp))
    }

    /// Reads whitespace- or comma-separated `(y, value)` pairs; `#` starts a comment.
    pub fn read_table(reader: impl BufRead) -> Result<Self> {
        let mut ys = Vec::new();
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let syntax = |message: String| GibbsError::TableSyntax { line: i + 1, message };
            if fields.len() != 2 {
                return Err(syntax(format!("expected 2 columns, found {}", fields.len())));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|_| syntax(format!("bad number `{s}`")));
            ys.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
        }
        Self::table(ys, values)
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Profile::Table(_))
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            Profile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, a| acc * y + a),
            Profile::SineSeries(c) => c
                .iter()
                .enumerate()
                .map(|(i, a)| a * sin_pi((i + 1) as f64 * y))
                .sum(),
            Profile::CosineSeries(c) => c
                .iter()
                .enumerate()
                .map(|(i, a)| a * cos_pi(i as f64 * y))
                .sum(),
            Profile::Table(t) => t.value(y),
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Profile::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, a)| acc * y + i as f64 * a),
            Profile::SineSeries(c) => c
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let n = (i + 1) as f64;
                    a * n * PI * cos_pi(n * y)
                })
                .sum(),
            Profile::CosineSeries(c) => c
                .iter()
                .enumerate()
                .map(|(i, a)| -a * i as f64 * PI * sin_pi(i as f64 * y))
                .sum(),
            Profile::Table(t) => t.derivative(y),
        }
    }

    /// Centered differences at steps `h` and `h/10` agree with the derivative increasingly well.
    fn difference_quotients_converge(&self) -> bool {
        let defect = |h: f64| {
            (1..100)
                .map(|i| {
                    let y = i as f64 / 100.0;
                    let fd = (self.value(y + h) - self.value(y - h)) / (2.0 * h);
                    (fd - self.derivative(y)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (defect(1e-3), defect(1e-4));
        fine.is_finite() && (fine < 1e-8 || fine < 0.5 * coarse)
    }
}

/// Inverse temperature `β`, mean stretch `r̄` and mean momentum `p̄` as functions of `y ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroProfiles {
    beta: Profile,
    r_mean: Profile,
    p_mean: Profile,
    beta_min: f64,
}

const VALIDATION_GRID: usize = 4096;
const TABLE_BOUNDARY_TOL: f64 = 1e-12;

impl MacroProfiles {
    pub fn new(beta: Profile, r_mean: Profile, p_mean: Profile) -> Result<Self> {
        let grid = (0..=VALIDATION_GRID).map(|i| i as f64 / VALIDATION_GRID as f64);
        let mut beta_min = f64::INFINITY;
        for y in grid.clone() {
            let b = beta.value(y);
            if !b.is_finite() {
                return Err(GibbsError::NonFinite { which: "beta", y });
            }
            if b <= 0.0 {
                return Err(GibbsError::NonPositiveBeta { y, value: b });
            }
            beta_min = beta_min.min(b);
            for (which, p) in [("r_mean", &r_mean), ("p_mean", &p_mean)] {
                if !p.value(y).is_finite() {
                    return Err(GibbsError::NonFinite { which, y });
                }
            }
        }
        let boundary_tol = match &r_mean {
            Profile::SineSeries(_) => 0.0,
            // Other closed forms are summed in floating point, so allow rounding.
            Profile::Polynomial(c) | Profile::CosineSeries(c) => {
                1e-14 * c.iter().map(|a| a.abs()).sum::<f64>()
            }
            Profile::Table(_) => TABLE_BOUNDARY_TOL,
        };
        for y in [0.0, 1.0] {
            let v = r_mean.value(y);
            if v.abs() > boundary_tol {
                return Err(GibbsError::NonZeroBoundary { y, value: v });
            }
        }
        for (which, p) in [("r_mean", &r_mean), ("p_mean", &p_mean)] {
            if !p.difference_quotients_converge() {
                return Err(GibbsError::NotDifferentiable { which });
            }
        }
        Ok(Self { beta, r_mean, p_mean, beta_min })
    }

    /// `β = 1 + ½sin²(πy)`, `r̄ = 0.3 sin(πy)`, `p̄ = 0.3 cos(πy)`.
    pub fn canonical() -> Self {
        Self::new(
            Profile::CosineSeries(vec![1.25, 0.0, -0.25]),
            Profile::SineSeries(vec![0.3]),
            Profile::CosineSeries(vec![0.0, 0.3]),
        )
        .expect("canonical profiles are valid")
    }

    /// Constant temperature and zero means.
    pub fn equilibrium(beta: f64) -> Result<Self> {
        Self::new(Profile::constant(beta), Profile::constant(0.0), Profile::constant(0.0))
    }

    pub fn beta(&self) -> &Profile {
        &self.beta
    }

    pub fn r_mean(&self) -> &Profile {
        &self.r_mean
    }

    pub fn p_mean(&self) -> &Profile {
        &self.p_mean
    }

    /// Minimum of `β` over the validation grid.
    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }
}

/// Means and variances of the product Gaussian at time zero.
///
/// Stretch vectors have `N − 1` entries (`r_1..r_{N−1}`), momentum vectors `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialMoments {
    pub mean_r: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_r: Vec<f64>,
    pub var_p: Vec<f64>,
}

impl InitialMoments {
    pub fn n(&self) -> usize {
        self.mean_p.len()
    }
}

/// Moments of the local Gibbs state: `⟨p_x⟩ = m_x p̄(x/N)/m̄`, `⟨r_x⟩ = r̄(x/N)`,
/// `Var p_x = m_x/β(x/N)`, `Var r_x = 1/β(x/N)`.
pub fn initial_moments(profiles: &MacroProfiles, masses: &MassField) -> Result<InitialMoments> {
    let n = masses.n();
    let nf = n as f64;
    let m_bar = masses.mean_mass();
    let beta_at = |x: usize| -> Result<f64> {
        let y = x as f64 / nf;
        let b = profiles.beta.value(y);
        if b > 0.0 && b.is_finite() {
            Ok(b)
        } else {
            Err(GibbsError::NonPositiveBeta { y, value: b })
        }
    };
    let mut mean_p = Vec::with_capacity(n);
    let mut var_p = Vec::with_capacity(n);
    for (i, &m) in masses.masses().iter().enumerate() {
        let x = i + 1;
        mean_p.push(m * profiles.p_mean.value(x as f64 / nf) / m_bar);
        var_p.push(m / beta_at(x)?);
    }
    let mut mean_r = Vec::with_capacity(n - 1);
    let mut var_r = Vec::with_capacity(n - 1);
    for x in 1..n {
        mean_r.push(profiles.r_mean.value(x as f64 / nf));
        var_r.push(1.0 / beta_at(x)?);
    }
    Ok(InitialMoments { mean_r, mean_p, var_r, var_p })
}

/// Variances below this are treated as this when sampling.
pub const MIN_SAMPLING_VARIANCE: f64 = 1e-16;

/// One draw `(r, p)` of independent Gaussians with the given moments.
pub fn sample_configuration(moments: &InitialMoments, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |mean: f64, var: f64| {
        let z: f64 = StandardNormal.sample(&mut rng);
        mean + var.max(MIN_SAMPLING_VARIANCE).sqrt() * z
    };
    let r = moments
        .mean_r
        .iter()
        .zip(&moments.var_r)
        .map(|(&m, &v)| draw(m, v))
        .collect();
    let p = moments
        .mean_p
        .iter()
        .zip(&moments.var_p)
        .map(|(&m, &v)| draw(m, v))
        .collect();
    (r, p)
}

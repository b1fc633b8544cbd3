//! Spectral solution of the macroscopic wave system `∂t r = ∂y p / m̄`, `∂t p = ∂y r`
//! with `r(0) = r(1) = 0`, plus the energy field slaved to it.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::gibbs::{MacroProfiles, Profile};
use crate::numeric::{cos_pi, integrate, sin_pi, QuadratureError};

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("truncation order must be at least 1")]
    NoModes,
    #[error("truncation order {requested} exceeds the cap {cap}")]
    TooManyModes { requested: usize, cap: usize },
    #[error("mean mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EulerError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Number of sine (and nonconstant cosine) terms kept.
    pub modes: usize,
    pub max_modes: usize,
    /// Relative tail energy above which a warning is logged.
    pub tail_warning: f64,
    /// Absolute error target for spatial quadratures.
    pub quadrature_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            modes: 512,
            max_modes: 1 << 16,
            tail_warning: 1e-8,
            quadrature_tol: 1e-10,
        }
    }
}

/// Which macroscopic field a functional integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Stretch,
    Momentum,
    Energy,
}

/// Truncated series `r = Σ a_n sin(nπy)`, `p = Σ_{n≥0} b_n cos(nπy)` at time zero.
#[derive(Clone, Debug)]
pub struct MacroFields {
    m_bar: f64,
    stretch_coeffs: Vec<f64>,
    momentum_coeffs: Vec<f64>,
    beta: Profile,
    tail: f64,
    tail_fraction: f64,
    quadrature_tol: f64,
}

/// Coefficients advanced to one time, for repeated pointwise evaluation.
#[derive(Clone, Debug)]
pub struct Snapshot<'a> {
    fields: &'a MacroFields,
    stretch: Vec<f64>,
    momentum: Vec<f64>,
}

/// Expands the profiles and returns the exact solution of the truncated system.
pub fn solve_wave(profiles: &MacroProfiles, m_bar: f64, opts: SolveOptions) -> Result<MacroFields> {
    if opts.modes == 0 {
        return Err(EulerError::NoModes);
    }
    if opts.modes > opts.max_modes {
        return Err(EulerError::TooManyModes { requested: opts.modes, cap: opts.max_modes });
    }
    if !(m_bar.is_finite() && m_bar > 0.0) {
        return Err(EulerError::BadMass(m_bar));
    }
    let k = opts.modes;
    let grid = 4 * k;
    let (sine, cosine) = trig_transforms(profiles.r_mean(), profiles.p_mean(), grid);
    let total: f64 = sine.iter().chain(&cosine).map(|c| c * c).sum();
    let tail2: f64 = sine[k..].iter().chain(&cosine[k + 1..]).map(|c| c * c).sum();
    let tail_fraction = if total > 0.0 { tail2 / total } else { 0.0 };
    if tail_fraction > opts.tail_warning {
        log::warn!("series tail holds a fraction {tail_fraction:e} of the initial coefficient energy with {k} modes");
    }
    Ok(MacroFields {
        m_bar,
        stretch_coeffs: sine[..k].to_vec(),
        momentum_coeffs: cosine[..=k].to_vec(),
        beta: profiles.beta().clone(),
        tail: tail2.sqrt(),
        tail_fraction,
        quadrature_tol: opts.quadrature_tol,
    })
}

/// Sine coefficients `a_1..a_{M-1}` and cosine coefficients `b_0..b_{M-1}` by trapezoidal
/// projection on `M + 1` equispaced points, computed with one FFT each.
fn trig_transforms(r: &Profile, p: &Profile, grid: usize) -> (Vec<f64>, Vec<f64>) {
    let m = grid;
    let len = 2 * m;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let y = |j: usize| j as f64 / m as f64;

    let mut odd = vec![Complex64::default(); len];
    for j in 1..m {
        let v = r.value(y(j));
        odd[j] = Complex64::new(v, 0.0);
        odd[len - j] = Complex64::new(-v, 0.0);
    }
    fft.process(&mut odd);
    let sine = (1..m).map(|n| -odd[n].im / m as f64).collect();

    let mut even = vec![Complex64::default(); len];
    for j in 0..=m {
        let v = p.value(y(j));
        even[j] = Complex64::new(v, 0.0);
        if j > 0 && j < m {
            even[len - j] = Complex64::new(v, 0.0);
        }
    }
    fft.process(&mut even);
    let cosine = (0..m)
        .map(|n| even[n].re / m as f64 * if n == 0 { 0.5 } else { 1.0 })
        .collect();
    (sine, cosine)
}

impl MacroFields {
    pub fn m_bar(&self) -> f64 {
        self.m_bar
    }

    pub fn modes(&self) -> usize {
        self.stretch_coeffs.len()
    }

    /// `a_1..a_K` at time zero.
    pub fn stretch_coefficients(&self) -> &[f64] {
        &self.stretch_coeffs
    }

    /// `b_0..b_K` at time zero.
    pub fn momentum_coefficients(&self) -> &[f64] {
        &self.momentum_coeffs
    }

    /// ℓ² norm of the discarded initial coefficients (estimated from the next `K` terms).
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    pub fn tail_fraction(&self) -> f64 {
        self.tail_fraction
    }

    /// Each pair `(a_n, b_n/√m̄)` rotates with angular frequency `nπ/√m̄`; `b_0` is fixed.
    pub fn at_time(&self, t: f64) -> Snapshot<'_> {
        let sqrt_m = self.m_bar.sqrt();
        let mut stretch = Vec::with_capacity(self.modes());
        let mut momentum = Vec::with_capacity(self.modes() + 1);
        momentum.push(self.momentum_coeffs[0]);
        for (i, &a) in self.stretch_coeffs.iter().enumerate() {
            let n = (i + 1) as f64;
            let b = self.momentum_coeffs[i + 1] / sqrt_m;
            let (s, c) = (std::f64::consts::PI * n * t / sqrt_m).sin_cos();
            stretch.push(a * c - b * s);
            momentum.push(sqrt_m * (b * c + a * s));
        }
        Snapshot { fields: self, stretch, momentum }
    }

    pub fn stretch(&self, y: f64, t: f64) -> f64 {
        self.at_time(t).stretch(y)
    }

    pub fn momentum(&self, y: f64, t: f64) -> f64 {
        self.at_time(t).momentum(y)
    }

    /// `p²/2m̄ + r²/2 + 1/β(y)`.
    pub fn energy(&self, y: f64, t: f64) -> f64 {
        self.at_time(t).energy(y)
    }

    /// `∫₀¹ (p²/2m̄ + r²/2) dy` from the coefficients.
    pub fn mechanical_energy(&self, t: f64) -> f64 {
        let s = self.at_time(t);
        let b0 = s.momentum[0];
        let rest: f64 = s.stretch.iter().map(|a| a * a / 4.0).sum::<f64>()
            + s.momentum[1..].iter().map(|b| b * b / (4.0 * self.m_bar)).sum::<f64>();
        b0 * b0 / (2.0 * self.m_bar) + rest
    }

    /// `∫₀¹ f(y) X(y, t) dy` for the chosen field.
    pub fn limit_field(&self, f: impl Fn(f64) -> f64, t: f64, which: Field) -> Result<f64> {
        let s = self.at_time(t);
        let q = integrate(|y| f(y) * s.field(y, which), 0.0, 1.0, self.quadrature_tol)?;
        Ok(q.value)
    }

    /// Writes `y,r,p,e` rows on `points + 1` equispaced nodes of `[0, 1]`.
    pub fn write_csv(&self, mut w: impl Write, t: f64, points: usize) -> Result<()> {
        let s = self.at_time(t);
        writeln!(w, "y,r,p,e")?;
        for i in 0..=points {
            let y = i as f64 / points as f64;
            writeln!(w, "{y:?},{:?},{:?},{:?}", s.stretch(y), s.momentum(y), s.energy(y))?;
        }
        Ok(())
    }
}

impl Snapshot<'_> {
    pub fn stretch(&self, y: f64) -> f64 {
        self.stretch
            .iter()
            .enumerate()
            .map(|(i, a)| a * sin_pi((i + 1) as f64 * y))
            .sum()
    }

    pub fn momentum(&self, y: f64) -> f64 {
        self.momentum
            .iter()
            .enumerate()
            .map(|(n, b)| b * cos_pi(n as f64 * y))
            .sum()
    }

    pub fn energy(&self, y: f64) -> f64 {
        let r = self.stretch(y);
        let p = self.momentum(y);
        p * p / (2.0 * self.fields.m_bar) + r * r / 2.0 + 1.0 / self.fields.beta.value(y)
    }

    pub fn field(&self, y: f64, which: Field) -> f64 {
        match which {
            Field::Stretch => self.stretch(y),
            Field::Momentum => self.momentum(y),
            Field::Energy => self.energy(y),
        }
    }
}

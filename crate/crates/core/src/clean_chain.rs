//! Equal-mass periodic chain solved in Fourier space.
//!
//! Sites live on `ℤ/nℤ` with unit masses. The state is the pair `(r, p)` where
//! `r_x = q_{x+1} − q_x`, so `ṙ_x = p_{x+1} − p_x` and `ṗ_x = r_x − r_{x−1}`.
//! Transforms use `f̂(k) = Σ_x f_x e^{2πikx}` on the dual grid `k = j/n`, and the
//! wave function `φ̂ = ω q̂ + i p̂` rotates as `φ̂(k, t) = e^{−iω(k)t} φ̂(k, 0)`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView1};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::numeric::{cos_pi, sin_pi};

#[derive(Debug, Error)]
pub enum CleanChainError {
    #[error("lattice needs at least 2 sites, got {0}")]
    TooSmall(usize),
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("index {index} is off the dual grid of size {n}")]
    OffGrid { index: usize, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CleanChainError> = std::result::Result<T, E>;

/// `ω(k) = |2 sin(πk)|`.
pub fn dispersion(k: f64) -> f64 {
    (2.0 * sin_pi(k)).abs()
}

/// `dω/dk`, taken as zero where `sin(πk)` vanishes.
pub fn group_velocity(k: f64) -> f64 {
    let s = sin_pi(k);
    if s == 0.0 {
        0.0
    } else {
        2.0 * PI * cos_pi(k) * s.signum()
    }
}

/// Factor turning `r̂(k)` into `ω(k) q̂(k)`.
fn strain_factor(k: f64) -> Complex64 {
    let s = sin_pi(k);
    if s == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::i() * Complex64::new(cos_pi(k), sin_pi(k)) * s.signum()
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        Err(CleanChainError::TooSmall(n))
    } else {
        Ok(())
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn hat(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inverse.process(&mut buf);
        buf
    }

    fn unhat(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        let n = buf.len() as f64;
        self.forward.process(&mut buf);
        buf.into_iter().map(|z| z.re / n).collect()
    }
}

/// Wave function amplitudes `φ̂(j/n, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    phi_hat: Vec<Complex64>,
    time: f64,
}

impl WaveField {
    pub fn new(phi_hat: Vec<Complex64>, time: f64) -> Result<Self> {
        check_size(phi_hat.len())?;
        Ok(Self { phi_hat, time })
    }

    pub fn from_configuration(r: &[f64], p: &[f64]) -> Result<Self> {
        let n = p.len();
        check_size(n)?;
        if r.len() != n {
            return Err(CleanChainError::Length { expected: n, found: r.len() });
        }
        Ok(Self::from_configuration_with(&Plans::new(n), r, p))
    }

    fn from_configuration_with(plans: &Plans, r: &[f64], p: &[f64]) -> Self {
        let n = p.len();
        let (rh, ph) = (plans.hat(r), plans.hat(p));
        let phi_hat = (0..n)
            .map(|j| strain_factor(j as f64 / n as f64) * rh[j] + Complex64::i() * ph[j])
            .collect();
        Self { phi_hat, time: 0.0 }
    }

    /// Recovers `(r, p)` using `φ̂(−k)* = ω q̂(k) − i p̂(k)`.
    pub fn to_configuration(&self) -> (Vec<f64>, Vec<f64>) {
        self.to_configuration_with(&Plans::new(self.n()))
    }

    fn to_configuration_with(&self, plans: &Plans) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut rh = Vec::with_capacity(n);
        let mut ph = Vec::with_capacity(n);
        for j in 0..n {
            let a = self.phi_hat[j];
            let b = self.phi_hat[(n - j) % n].conj();
            rh.push((a + b) * 0.5 / strain_factor(j as f64 / n as f64));
            ph.push((a - b) * Complex64::new(0.0, -0.5));
        }
        (plans.unhat(rh), plans.unhat(ph))
    }

    pub fn n(&self) -> usize {
        self.phi_hat.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.phi_hat
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `(1/n) Σ |φ̂|²`, which equals twice the energy `Σ (r² + p²)/2`.
    pub fn norm_squared(&self) -> f64 {
        self.phi_hat.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.n() as f64
    }

    pub fn evolve(&self, t: f64) -> Self {
        let n = self.n() as f64;
        let phi_hat = self
            .phi_hat
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, -dispersion(j as f64 / n) * t))
            .collect();
        Self { phi_hat, time: self.time + t }
    }

    /// Rows `k,power,phase` with `power = |φ̂|²` and `phase = arg φ̂`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,power,phase")?;
        let n = self.n() as f64;
        for (j, z) in self.phi_hat.iter().enumerate() {
            writeln!(w, "{:e},{:e},{:e}", j as f64 / n, z.norm_sqr(), z.arg())?;
        }
        Ok(())
    }
}

pub fn evolve_wavefield(w: &WaveField, t: f64) -> WaveField {
    w.evolve(t)
}

/// Real `2n × 2n` matrix of the time-`t` flow acting on `(r, p)` stacked in that order.
pub fn propagator(n: usize, t: f64) -> Result<Array2<f64>> {
    check_size(n)?;
    let plans = Plans::new(n);
    let mut u = Array2::zeros((2 * n, 2 * n));
    let mut unit = vec![0.0; 2 * n];
    for col in 0..2 * n {
        unit[col] = 1.0;
        let w = WaveField::from_configuration_with(&plans, &unit[..n], &unit[n..]).evolve(t);
        let (r, p) = w.to_configuration_with(&plans);
        u.slice_mut(s![..n, col]).assign(&ArrayView1::from(&r));
        u.slice_mut(s![n.., col]).assign(&ArrayView1::from(&p));
        unit[col] = 0.0;
    }
    Ok(u)
}

/// Largest entry of `|U Σ Uᵀ − Σ|` for the equilibrium covariance `Σ = β⁻¹ I`.
pub fn covariance_invariance_exact(beta: f64, t: f64, n: usize) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(CleanChainError::NonPositiveBeta(beta));
    }
    let u = propagator(n, t)?;
    let mut c = u.dot(&u.t()) / beta;
    c.diag_mut().mapv_inplace(|d| d - 1.0 / beta);
    Ok(c.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Monte Carlo comparison of evolved equilibrium covariances with `β⁻¹ δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceCheck {
    pub samples: usize,
    /// Distinct covariance entries examined across the `r` and `p` blocks.
    pub entries: usize,
    pub max_deviation: f64,
    /// `β⁻¹/√samples`, the standard error of an off-diagonal entry.
    pub sigma: f64,
    /// Largest deviation in units of its own standard error.
    pub max_z: f64,
    /// Two-sided normal quantile for family-wise level [`FAMILY_LEVEL`] over all entries.
    pub critical_z: f64,
}

pub const FAMILY_LEVEL: f64 = 1e-3;

impl CovarianceCheck {
    pub fn passes(&self) -> bool {
        self.max_z <= self.critical_z
    }
}

pub fn covariance_invariance_check(
    beta: f64,
    t: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CovarianceCheck> {
    if !(beta > 0.0) {
        return Err(CleanChainError::NonPositiveBeta(beta));
    }
    check_size(n)?;
    if samples < 2 {
        return Err(CleanChainError::TooFewSamples(samples));
    }
    let plans = Plans::new(n);
    let scale = beta.recip().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rs = Array2::zeros((samples, n));
    let mut ps = Array2::zeros((samples, n));
    let mut draw = || -> f64 { let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    };
    for i in 0..samples {
        let r: Vec<f64> = (0..n).map(|_| draw()).collect();
        let p: Vec<f64> = (0..n).map(|_| draw()).collect();
        let (r, p) = WaveField::from_configuration_with(&plans, &r, &p).evolve(t).to_configuration_with(&plans);
        rs.row_mut(i).assign(&ArrayView1::from(&r));
        ps.row_mut(i).assign(&ArrayView1::from(&p));
    }
    let sf = samples as f64;
    let sigma = 1.0 / (beta * sf.sqrt());
    let mut max_deviation: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for block in [&rs, &ps] {
        let c = block.t().dot(block) / sf;
        for ((x, y), v) in c.indexed_iter() {
            if y < x {
                continue;
            }
            let (target, se) = if x == y { (1.0 / beta, std::f64::consts::SQRT_2 * sigma) } else { (0.0, sigma) };
            let d = (v - target).abs();
            max_deviation = max_deviation.max(d);
            max_z = max_z.max(d / se);
        }
    }
    let entries = n * (n + 1);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let critical_z = normal.inverse_cdf(1.0 - FAMILY_LEVEL / (2.0 * entries as f64));
    Ok(CovarianceCheck { samples, entries, max_deviation, sigma, max_z, critical_z })
}

/// `⟨φ̂*(k) φ̂(k')⟩` for independent centered `r_x, p_x` with variance `temperature[x]`.
pub fn local_gibbs_covariance(temperature: &[f64]) -> Result<Array2<Complex64>> {
    let n = temperature.len();
    check_size(n)?;
    let th = Plans::new(n).hat(temperature);
    let theta: Vec<Complex64> = (0..n).map(|j| strain_factor(j as f64 / n as f64)).collect();
    Ok(Array2::from_shape_fn((n, n), |(a, b)| {
        (theta[a].conj() * theta[b] + 1.0) * th[(b + n - a) % n]
    }))
}

/// Finite-size Wigner amplitude at the grid pair `(a, b) = (k_index, k_index + ξ)` and its
/// closed-form evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerCheck {
    /// `(2/N) ⟨φ̂*(a) φ̂(b)⟩` after evolving both amplitudes for time `N t`.
    pub lhs: Complex64,
    /// Initial amplitude times `e^{i[ω(a) − ω(b)] N t}`.
    pub rhs: Complex64,
    /// `|e^{i[ω(a) − ω(b)] N t} − e^{−i ω'(a) ξ t}|`.
    pub slope_error_grid: f64,
    /// Same with the slope taken at the midpoint of the pair.
    pub slope_error_mid: f64,
}

impl WignerCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

pub fn wigner_phase_identity(
    cov0: &Array2<Complex64>,
    xi_index: usize,
    k_index: usize,
    t: f64,
    n: usize,
) -> Result<WignerCheck> {
    check_size(n)?;
    if cov0.dim() != (n, n) {
        return Err(CleanChainError::Length { expected: n * n, found: cov0.len() });
    }
    for index in [xi_index, k_index] {
        if index >= n {
            return Err(CleanChainError::OffGrid { index, n });
        }
    }
    let nf = n as f64;
    let a = k_index;
    let b = (k_index + xi_index) % n;
    let unit = |j: usize| {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[j] = Complex64::new(1.0, 0.0);
        WaveField::new(v, 0.0).expect("size checked")
    };
    let time = nf * t;
    let ga = evolve_wavefield(&unit(a), time).phi_hat[a];
    let gb = evolve_wavefield(&unit(b), time).phi_hat[b];
    let w0 = cov0[(a, b)] * (2.0 / nf);
    let lhs = ga.conj() * gb * w0;
    let (ka, kb) = (a as f64 / nf, (a + xi_index) as f64 / nf);
    let exact = Complex64::from_polar(1.0, (dispersion(ka) - dispersion(kb)) * time);
    let xi = xi_index as f64;
    let approx = |k: f64| Complex64::from_polar(1.0, -group_velocity(k) * xi * t);
    Ok(WignerCheck {
        lhs,
        rhs: w0 * exact,
        slope_error_grid: (exact - approx(ka)).norm(),
        slope_error_mid: (exact - approx(0.5 * (ka + kb))).norm(),
    })
}

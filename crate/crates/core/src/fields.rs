//! Empirical fields of the chain and the diagnostics built on them.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use thiserror::Error;

use crate::chain::{EigenBasis, MassField};
use crate::euler::Field;
use crate::evolution::{congruence, ModeCovariance, SiteVariances};
use crate::numeric::sin_pi;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldsError {
    #[error("test function `{name}` must vanish at both ends, got f(0) = {left}, f(1) = {right}")]
    EndsNotVanishing { name: String, left: f64, right: f64 },
    #[error("band exponent must lie in (0, 1/2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("the energy field needs site variances")]
    MissingVariances,
    #[error("site index {index} outside 1..={n}")]
    SiteOutOfRange { index: usize, n: usize },
}

pub type Result<T, E = FieldsError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Continuous,
    Differentiable,
    DifferentiableVanishingEnds,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Function on `[0, 1]` used to smear fields.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    smoothness: Smoothness,
    value: RealFn,
    derivative: Option<RealFn>,
}

const END_TOL: f64 = 1e-14;

impl TestFunction {
    pub fn continuous(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), smoothness: Smoothness::Continuous, value: Arc::new(f), derivative: None }
    }

    pub fn differentiable(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            smoothness: Smoothness::Differentiable,
            value: Arc::new(f),
            derivative: Some(Arc::new(df)),
        }
    }

    /// Differentiable and zero at `y = 0, 1` (checked to `1e-14`).
    pub fn vanishing_at_ends(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        let (left, right) = (f(0.0), f(1.0));
        if left.abs() > END_TOL || right.abs() > END_TOL {
            return Err(FieldsError::EndsNotVanishing { name, left, right });
        }
        Ok(Self {
            name,
            smoothness: Smoothness::DifferentiableVanishingEnds,
            value: Arc::new(f),
            derivative: Some(Arc::new(df)),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::differentiable(format!("const({c})"), move |_| c, |_| 0.0)
    }

    /// `sin(nπy)`.
    pub fn sine(n: u32) -> Self {
        let w = std::f64::consts::PI * n as f64;
        Self::vanishing_at_ends(format!("sin({n}piy)"), move |y| sin_pi(n as f64 * y), move |y| w * (w * y).cos())
            .expect("sine vanishes at integers")
    }

    /// `cos(nπy)`.
    pub fn cosine(n: u32) -> Self {
        let w = std::f64::consts::PI * n as f64;
        Self::differentiable(format!("cos({n}piy)"), move |y| (w * y).cos(), move |y| -w * (w * y).sin())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn value(&self, y: f64) -> f64 {
        (self.value)(y)
    }

    pub fn derivative(&self) -> Option<TestFunction> {
        self.derivative.as_ref().map(|d| TestFunction {
            name: format!("d/dy {}", self.name),
            smoothness: Smoothness::Continuous,
            value: d.clone(),
            derivative: None,
        })
    }

    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |y| self.value(y)
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

/// Mean fields (and optionally fluctuation variances) at one time.
#[derive(Clone, Copy, Debug)]
pub struct SiteMoments<'a> {
    pub mean_r: &'a [f64],
    pub mean_p: &'a [f64],
    pub variances: Option<&'a SiteVariances>,
}

/// `(1/N) Σ_{x=1}^{N} f(x/N) X_x` with `r_N = 0`.
pub fn empirical_field(m: &SiteMoments<'_>, masses: &MassField, f: &TestFunction, which: Field) -> Result<f64> {
    let n = m.mean_p.len();
    let nf = n as f64;
    Ok(match which {
        Field::Stretch => {
            m.mean_r.iter().enumerate().map(|(i, r)| f.value((i + 1) as f64 / nf) * r).sum::<f64>() / nf
        }
        Field::Momentum => {
            m.mean_p.iter().enumerate().map(|(i, p)| f.value((i + 1) as f64 / nf) * p).sum::<f64>() / nf
        }
        Field::Energy => {
            let var = m.variances.ok_or(FieldsError::MissingVariances)?;
            energy_split(m.mean_r, m.mean_p, var, masses, f).total()
        }
    })
}

/// Mechanical (squared means) and thermal (variances) parts of the energy field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySplit {
    pub mechanical: f64,
    pub thermal: f64,
}

impl EnergySplit {
    pub fn total(&self) -> f64 {
        self.mechanical + self.thermal
    }
}

pub fn energy_split(
    mean_r: &[f64],
    mean_p: &[f64],
    var: &SiteVariances,
    masses: &MassField,
    f: &TestFunction,
) -> EnergySplit {
    let m = masses.masses();
    let n = m.len();
    let nf = n as f64;
    let (mut mech, mut therm) = (0.0, 0.0);
    for x in 0..n {
        let w = f.value((x + 1) as f64 / nf);
        let (r, vr) = if x + 1 < n { (mean_r[x], var.var_r[x]) } else { (0.0, 0.0) };
        mech += w * (mean_p[x] * mean_p[x] / (2.0 * m[x]) + r * r / 2.0);
        therm += w * (var.var_p[x] / (2.0 * m[x]) + vr / 2.0);
    }
    EnergySplit { mechanical: mech / nf, thermal: therm / nf }
}

/// Mechanical part of the energy field alone, `(1/N) Σ f(x/N)(p_x²/2m_x + r_x²/2)`.
pub fn mechanical_field(mean_r: &[f64], mean_p: &[f64], masses: &MassField, f: &TestFunction) -> f64 {
    let m = masses.masses();
    let nf = m.len() as f64;
    let mut sum = 0.0;
    for (x, (p, m)) in mean_p.iter().zip(m).enumerate() {
        let r = mean_r.get(x).copied().unwrap_or(0.0);
        sum += f.value((x + 1) as f64 / nf) * (p * p / (2.0 * m) + r * r / 2.0);
    }
    sum / nf
}

/// Thermal part of the energy field as a quadratic functional of the mode covariance.
///
/// With `W_p = Ψ diag(f·m) Ψᵀ` and `W_r = Ψ̃ diag(f) Ψ̃ᵀ` it equals
/// `(1/2N)(⟨Suu, W_p⟩ + ⟨Svv, W_r⟩)`, which costs `O(N²)` per evaluation.
#[derive(Clone, Debug)]
pub struct ThermalFunctional {
    wp: Array2<f64>,
    wr: Array2<f64>,
}

/// Band-restricted thermal sums; `low + high + cross` is the whole functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandSplit {
    pub low: f64,
    pub high: f64,
    pub cross: f64,
}

impl ThermalFunctional {
    pub fn new(basis: &EigenBasis, f: &TestFunction) -> Self {
        let n = basis.n();
        let nf = n as f64;
        let fp: Vec<f64> = basis.masses().iter().enumerate().map(|(i, m)| f.value((i + 1) as f64 / nf) * m).collect();
        let fr: Vec<f64> = (1..n).map(|x| f.value(x as f64 / nf)).collect();
        Self { wp: congruence(basis.modes(), &fp), wr: congruence(basis.strain_modes(), &fr) }
    }

    pub fn evaluate(&self, c: &ModeCovariance) -> f64 {
        let n = self.wp.nrows() as f64;
        let a: f64 = c.suu.iter().zip(self.wp.iter()).map(|(s, w)| s * w).sum();
        let b: f64 = c.svv.iter().zip(self.wr.iter()).map(|(s, w)| s * w).sum();
        (a + b) / (2.0 * n)
    }

    /// Value after evolving `c` by `t`, without forming the evolved covariance.
    pub fn evaluate_after(&self, c: &ModeCovariance, basis: &EigenBasis, t: f64) -> f64 {
        self.band_sums(c, basis, t, basis.n()).iter().sum::<f64>() / (2.0 * basis.n() as f64)
    }

    /// Splits the evolved functional between modes `k ≤ N^{1−α}` and the rest.
    pub fn band_split(&self, c: &ModeCovariance, basis: &EigenBasis, t: f64, alpha: f64) -> Result<BandSplit> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(FieldsError::AlphaOutOfRange(alpha));
        }
        let n = basis.n();
        let cut = first_high_mode(n, alpha);
        let [low, cross, high] = self.band_sums(c, basis, t, cut);
        let norm = 2.0 * n as f64;
        Ok(BandSplit { low: low / norm, high: high / norm, cross: cross / norm })
    }

    /// Sums of evolved `Suu∘Wp + Svv∘Wr` over (low, low), mixed and (high, high) index pairs.
    fn band_sums(&self, c: &ModeCovariance, basis: &EigenBasis, t: f64, cut: usize) -> [f64; 3] {
        let n = basis.n();
        let (sn, cs): (Vec<f64>, Vec<f64>) = basis.frequencies().iter().map(|w| (w * t).sin_cos()).unzip();
        let mut sums = [0.0; 3];
        for j in 0..n {
            let (cj, sj) = (cs[j], sn[j]);
            let mut row = [0.0; 2];
            for k in 0..n {
                let (ck, sk) = (cs[k], sn[k]);
                let uu = c.suu[[j, k]];
                let vv = c.svv[[j, k]];
                let uv = c.suv[[j, k]];
                let vu = c.suv[[k, j]];
                let suu = cj * ck * uu - cj * sk * uv - sj * ck * vu + sj * sk * vv;
                let svv = sj * sk * uu + sj * ck * uv + cj * sk * vu + cj * ck * vv;
                row[(k >= cut) as usize] += suu * self.wp[[j, k]] + svv * self.wr[[j, k]];
            }
            if j < cut {
                sums[0] += row[0];
                sums[1] += row[1];
            } else {
                sums[1] += row[0];
                sums[2] += row[1];
            }
        }
        sums
    }
}

/// Band split of the thermal functional of `c` evolved by `t`.
pub fn mode_band_split(
    c: &ModeCovariance,
    basis: &EigenBasis,
    f: &TestFunction,
    alpha: f64,
    t: f64,
) -> Result<BandSplit> {
    ThermalFunctional::new(basis, f).band_split(c, basis, t, alpha)
}

/// `Σ r_x²`, `Σ p_x²`, `Σ (∇₋r)_x²` and `Σ (∇₊M⁻¹p)_x²` of a mean state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriSums {
    pub l2_r: f64,
    pub l2_p: f64,
    pub h1_r: f64,
    pub h1_p: f64,
}

pub fn apriori_bounds(mean_r: &[f64], mean_p: &[f64], masses: &MassField) -> AprioriSums {
    let m = masses.masses();
    let n = m.len();
    let stretch = |x: usize| if x == 0 || x == n { 0.0 } else { mean_r[x - 1] };
    AprioriSums {
        l2_r: mean_r.iter().map(|r| r * r).sum(),
        l2_p: mean_p.iter().map(|p| p * p).sum(),
        h1_r: (1..=n).map(|x| (stretch(x) - stretch(x - 1)).powi(2)).sum(),
        h1_p: (0..n - 1).map(|x| (mean_p[x + 1] / m[x + 1] - mean_p[x] / m[x]).powi(2)).sum(),
    }
}

/// Pairs `(x, x + d)` for `d = 1, 2, 4, …, N/2`, about a thousand in total (sites are 1-based).
pub fn holder_pairs(n: usize) -> Vec<(usize, usize)> {
    let scales: Vec<usize> = std::iter::successors(Some(1usize), |d| Some(d * 2)).take_while(|&d| d <= n / 2).collect();
    if scales.is_empty() {
        return Vec::new();
    }
    let per_scale = 1000usize.div_ceil(scales.len());
    let mut pairs = Vec::new();
    for &d in &scales {
        let starts = n - d;
        let count = per_scale.min(starts);
        for i in 0..count {
            let x = 1 + i * starts / count;
            pairs.push((x, x + d));
        }
    }
    pairs
}

/// `max |ΔX| / |Δx/N|^{1/2}` over the pairs for `X = r` (with `r_N = 0`) and `X = p/m`.
pub fn holder_modulus(mean_r: &[f64], mean_p: &[f64], masses: &MassField, pairs: &[(usize, usize)]) -> Result<f64> {
    let m = masses.masses();
    let n = m.len();
    let nf = n as f64;
    let stretch = |x: usize| if x == n { 0.0 } else { mean_r[x - 1] };
    let velocity = |x: usize| mean_p[x - 1] / m[x - 1];
    let mut worst: f64 = 0.0;
    for &(a, b) in pairs {
        for idx in [a, b] {
            if idx == 0 || idx > n {
                return Err(FieldsError::SiteOutOfRange { index: idx, n });
            }
        }
        if a == b {
            continue;
        }
        let scale = ((a as f64 - b as f64).abs() / nf).sqrt();
        worst = worst
            .max((stretch(a) - stretch(b)).abs() / scale)
            .max((velocity(a) - velocity(b)).abs() / scale);
    }
    Ok(worst)
}

/// Smallest mode index `k > N^{1-alpha}`, capped at `N`.
///
/// Powers that land on an integer up to rounding are snapped, so `1024^0.7` counts as 128.
pub fn first_high_mode(n: usize, alpha: f64) -> usize {
    let x = (n as f64).powf(1.0 - alpha);
    let r = x.round();
    let floor = if (x - r).abs() <= 1e-9 * x { r } else { x.floor() };
    (floor as usize + 1).min(n)
}

/// `(1/N)Σ f(x/N)(p_x/m_x)(m_x − m̄)` and `(1/N)Σ f(x/N)(p_x/m_x)²(m_x − m̄)`, `m̄` the law mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragingSums {
    pub linear: f64,
    pub quadratic: f64,
}

pub fn averaging_sums(mean_p: &[f64], masses: &MassField, f: &TestFunction) -> AveragingSums {
    let m = masses.masses();
    let m_bar = masses.mean_mass();
    let nf = m.len() as f64;
    let (mut lin, mut quad) = (0.0, 0.0);
    for (i, (p, mx)) in mean_p.iter().zip(m).enumerate() {
        let w = f.value((i + 1) as f64 / nf) * (mx - m_bar);
        let v = p / mx;
        lin += w * v;
        quad += w * v * v;
    }
    AveragingSums { linear: lin / nf, quadratic: quad / nf }
}

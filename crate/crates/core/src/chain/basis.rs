use std::fmt;

use ndarray::{Array2, ArrayView1, Axis};

use super::{dynamical_matrix, ChainError, MassField, Result};

/// Post-condition that a computed basis must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisCheck {
    MassOrthonormality,
    StrainOrthonormality,
    Residual,
    Finite,
}

impl fmt::Display for BasisCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisCheck::MassOrthonormality => "mass orthonormality",
            BasisCheck::StrainOrthonormality => "strain orthonormality",
            BasisCheck::Residual => "eigen residual",
            BasisCheck::Finite => "finite entries",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub orthonormality: f64,
    pub residual_relative: f64,
    pub residual_absolute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orthonormality: 1e-10,
            residual_relative: 1e-9,
            residual_absolute: 1e-12,
        }
    }
}

/// Entries within this relative distance of the largest magnitude count as tied.
const SIGN_TIE: f64 = 1e-9;
const ZERO_MODE_CLAMP: f64 = 1e-12;

/// Normal modes of `M^{-1}(-Δ)`.
///
/// Row `k` of `modes` is `ψ^k`, normalized so that `Σ_x m_x ψ^k_x ψ^j_x = δ_{jk}`.
/// Row `k` of `strain_modes` is `∇₊ψ^k / ω_k`; row 0 is identically zero.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    masses: MassField,
    frequencies: Vec<f64>,
    modes: Array2<f64>,
    strain_modes: Array2<f64>,
}

impl EigenBasis {
    /// Diagonalizes the chain and verifies the result with default tolerances.
    pub fn compute(masses: &MassField) -> Result<Self> {
        Self::compute_with(masses, Tolerances::default())
    }

    pub fn compute_with(masses: &MassField, tol: Tolerances) -> Result<Self> {
        let basis = Self::compute_unverified(masses)?;
        basis.verify(tol)?;
        Ok(basis)
    }

    /// Diagonalizes without running the post-condition checks.
    pub fn compute_unverified(masses: &MassField) -> Result<Self> {
        let t = dynamical_matrix(masses);
        let n = t.n();
        let m = masses.masses();
        let eigenvalues = t.eigenvalues()?;
        let sqrt_m: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
        let total = masses.total_mass().sqrt();
        let kernel: Vec<f64> = sqrt_m.iter().map(|s| s / total).collect();
        let cluster_gap = t.norm_inf() * (1e-4_f64).min(0.1 / n as f64);
        let vectors = t.eigenvectors(&eigenvalues, cluster_gap, &[(0, kernel)])?;

        let mut modes = Array2::zeros((n, n));
        for (k, phi) in vectors.iter().enumerate() {
            let mut row = modes.row_mut(k);
            for x in 0..n {
                row[x] = phi[x] / sqrt_m[x];
            }
            fix_sign(row.as_slice_mut().expect("row-major"));
        }
        Ok(Self::from_modes(masses.clone(), modes))
    }

    /// Assembles a basis from mass-normalized modes, deriving frequencies and strain modes.
    pub(crate) fn from_modes(masses: MassField, modes: Array2<f64>) -> Self {
        let n = masses.n();
        let mut frequencies = vec![0.0; n];
        let mut strain_modes = Array2::zeros((n, n - 1));
        for k in 0..n {
            let psi = modes.row(k);
            let grad: Vec<f64> = (0..n - 1).map(|x| psi[x + 1] - psi[x]).collect();
            let omega2: f64 = grad.iter().map(|g| g * g).sum();
            if k == 0 || omega2 < ZERO_MODE_CLAMP {
                continue;
            }
            let omega = omega2.sqrt();
            frequencies[k] = omega;
            let mut row = strain_modes.row_mut(k);
            for (x, g) in grad.iter().enumerate() {
                row[x] = g / omega;
            }
        }
        Self {
            masses,
            frequencies,
            modes,
            strain_modes,
        }
    }

    /// Checks mass orthonormality, strain orthonormality and eigen residuals.
    pub fn verify(&self, tol: Tolerances) -> Result<()> {
        if !self.modes.iter().chain(self.strain_modes.iter()).all(|v| v.is_finite()) {
            return Err(ChainError::Verification {
                check: BasisCheck::Finite,
                worst: f64::INFINITY,
                tolerance: 0.0,
            });
        }
        let worst = self.residuals().into_iter().zip(&self.frequencies).fold(
            0.0_f64,
            |acc, (res, w)| acc.max(res / (tol.residual_relative * w * w + tol.residual_absolute)),
        );
        if worst > 1.0 {
            return Err(ChainError::Verification {
                check: BasisCheck::Residual,
                worst,
                tolerance: 1.0,
            });
        }
        let mass_dev = self.mass_gram_deviation();
        if mass_dev > tol.orthonormality {
            return Err(ChainError::Verification {
                check: BasisCheck::MassOrthonormality,
                worst: mass_dev,
                tolerance: tol.orthonormality,
            });
        }
        let strain_dev = self.strain_gram_deviation();
        if strain_dev > tol.orthonormality {
            return Err(ChainError::Verification {
                check: BasisCheck::StrainOrthonormality,
                worst: strain_dev,
                tolerance: tol.orthonormality,
            });
        }
        Ok(())
    }

    /// `‖M^{-1}(-Δ)ψ^k − ω_k² ψ^k‖₂` for every mode.
    pub fn residuals(&self) -> Vec<f64> {
        let n = self.n();
        let m = self.masses.masses();
        (0..n)
            .map(|k| {
                let psi = self.modes.row(k);
                let w2 = self.frequencies[k].powi(2);
                (0..n)
                    .map(|x| {
                        let left = if x > 0 { psi[x] - psi[x - 1] } else { 0.0 };
                        let right = if x + 1 < n { psi[x] - psi[x + 1] } else { 0.0 };
                        ((left + right) / m[x] - w2 * psi[x]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `max |Σ_x m_x ψ^j_x ψ^k_x − δ_{jk}|`.
    pub fn mass_gram_deviation(&self) -> f64 {
        let mut weighted = self.modes.clone();
        for (mut col, m) in weighted.axis_iter_mut(Axis(1)).zip(self.masses.masses()) {
            col.mapv_inplace(|v| v * m.sqrt());
        }
        identity_deviation(&weighted.dot(&weighted.t()), 0)
    }

    /// `max |⟨ψ̃^j, ψ̃^k⟩ − δ_{jk}|` over `j, k ≥ 1`.
    pub fn strain_gram_deviation(&self) -> f64 {
        let s = &self.strain_modes;
        identity_deviation(&s.dot(&s.t()), 1)
    }

    pub fn n(&self) -> usize {
        self.frequencies.len()
    }

    pub fn mass_field(&self) -> &MassField {
        &self.masses
    }

    pub fn masses(&self) -> &[f64] {
        self.masses.masses()
    }

    /// Ascending `ω_0 = 0 < ω_1 ≤ … ≤ ω_{N-1}`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.frequencies[k]
    }

    pub fn modes(&self) -> &Array2<f64> {
        &self.modes
    }

    pub fn mode(&self, k: usize) -> ArrayView1<'_, f64> {
        self.modes.row(k)
    }

    pub fn strain_modes(&self) -> &Array2<f64> {
        &self.strain_modes
    }

    /// `ψ̃^k`, length `N − 1`; zero for `k = 0`.
    pub fn strain_mode(&self, k: usize) -> ArrayView1<'_, f64> {
        self.strain_modes.row(k)
    }
}

fn identity_deviation(gram: &Array2<f64>, skip: usize) -> f64 {
    gram.indexed_iter()
        .filter(|((i, j), _)| *i >= skip && *j >= skip)
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Makes the largest-magnitude entry positive; near-ties go to the lowest index.
fn fix_sign(v: &mut [f64]) {
    let amax = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if let Some(lead) = v.iter().find(|x| x.abs() >= amax * (1.0 - SIGN_TIE)) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

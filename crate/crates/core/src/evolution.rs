//! Exact evolution of mean fields and thermal covariances by rotating normal-mode coordinates.

use ndarray::{Array2, Axis, Zip};

use crate::chain::{EigenBasis, MassField};
use crate::gibbs::InitialMoments;

/// Mode amplitudes `u_k = ⟨ψ^k, p⟩` and `v_k = ⟨ψ̃^k, r⟩` (`v_0 = 0`) at microscopic `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
}

impl ModeState {
    pub fn n(&self) -> usize {
        self.u.len()
    }
}

/// Second moments of the centered fluctuations in mode coordinates.
///
/// `suv[[j, k]]` is `Cov(u_j, v_k)`. Row and column 0 of `svv` and column 0 of `suv` vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeCovariance {
    pub suu: Array2<f64>,
    pub svv: Array2<f64>,
    pub suv: Array2<f64>,
    pub time: f64,
}

impl ModeCovariance {
    /// `½ tr(Suu + Svv)`, the mean thermal energy.
    pub fn thermal_energy(&self) -> f64 {
        0.5 * (self.suu.diag().sum() + self.svv.diag().sum())
    }
}

/// Per-site variances of the fluctuations (`r` has `N − 1` entries, `p` has `N`).
#[derive(Clone, Debug, PartialEq)]
pub struct SiteVariances {
    pub var_r: Vec<f64>,
    pub var_p: Vec<f64>,
}

/// `H` and `I` of a configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conserved {
    pub energy: f64,
    pub gradient_energy: f64,
}

/// Projects a configuration `(r, p)` on the modes.
pub fn project(r: &[f64], p: &[f64], basis: &EigenBasis) -> ModeState {
    let n = basis.n();
    assert_eq!(p.len(), n, "momentum length");
    assert_eq!(r.len(), n - 1, "stretch length");
    let modes = basis.modes();
    let strain = basis.strain_modes();
    let u = (0..n).map(|k| dot(modes.row(k).as_slice().unwrap(), p)).collect();
    let v = (0..n)
        .map(|k| if k == 0 { 0.0 } else { dot(strain.row(k).as_slice().unwrap(), r) })
        .collect();
    ModeState { u, v, time: 0.0 }
}

pub fn project_mean(moments: &InitialMoments, basis: &EigenBasis) -> ModeState {
    project(&moments.mean_r, &moments.mean_p, basis)
}

/// Advances the state by `t`; the result carries time `s.time + t`.
pub fn evolve_mode_state(s: &ModeState, basis: &EigenBasis, t: f64) -> ModeState {
    let mut u = Vec::with_capacity(s.n());
    let mut v = Vec::with_capacity(s.n());
    for (k, &w) in basis.frequencies().iter().enumerate() {
        if k == 0 {
            u.push(s.u[0]);
            v.push(0.0);
            continue;
        }
        let (sn, cs) = (w * t).sin_cos();
        u.push(s.u[k] * cs - s.v[k] * sn);
        v.push(s.v[k] * cs + s.u[k] * sn);
    }
    ModeState { u, v, time: s.time + t }
}

/// Inverse of [`project`]: `r = Σ_{k≥1} v_k ψ̃^k`, `p = Σ_k u_k Mψ^k`.
pub fn reconstruct(s: &ModeState, basis: &EigenBasis) -> (Vec<f64>, Vec<f64>) {
    let n = basis.n();
    let mut r = vec![0.0; n - 1];
    let mut p = vec![0.0; n];
    for k in 0..n {
        axpy(s.u[k], basis.mode(k).as_slice().unwrap(), &mut p);
        if k > 0 {
            axpy(s.v[k], basis.strain_mode(k).as_slice().unwrap(), &mut r);
        }
    }
    p.iter_mut().zip(basis.masses()).for_each(|(pi, m)| *pi *= m);
    (r, p)
}

/// `Ψ diag(d) Ψᵀ` for a matrix whose rows are modes.
pub(crate) fn congruence(rows: &Array2<f64>, weights: &[f64]) -> Array2<f64> {
    let mut scaled = rows.clone();
    for (mut col, w) in scaled.axis_iter_mut(Axis(1)).zip(weights) {
        col *= *w;
    }
    scaled.dot(&rows.t())
}

/// Product-measure covariance of the initial fluctuations, in mode coordinates.
pub fn initial_mode_covariance(moments: &InitialMoments, basis: &EigenBasis) -> ModeCovariance {
    let n = basis.n();
    let suu = congruence(basis.modes(), &moments.var_p);
    let svv = congruence(basis.strain_modes(), &moments.var_r);
    ModeCovariance {
        suu,
        svv,
        suv: Array2::zeros((n, n)),
        time: 0.0,
    }
}

/// Applies the mode rotations over a time `t` to both sides of the covariance.
pub fn evolve_covariance(c: &ModeCovariance, basis: &EigenBasis, t: f64) -> ModeCovariance {
    let n = basis.n();
    let (sn, cs): (Vec<f64>, Vec<f64>) = basis.frequencies().iter().map(|w| (w * t).sin_cos()).unzip();
    let mut suu = Array2::zeros((n, n));
    let mut svv = Array2::zeros((n, n));
    let mut suv = Array2::zeros((n, n));
    for j in 0..n {
        let (cj, sj) = (cs[j], sn[j]);
        for k in 0..n {
            let (ck, sk) = (cs[k], sn[k]);
            let uu = c.suu[[j, k]];
            let vv = c.svv[[j, k]];
            let uv = c.suv[[j, k]];
            let vu = c.suv[[k, j]];
            suu[[j, k]] = cj * ck * uu - cj * sk * uv - sj * ck * vu + sj * sk * vv;
            svv[[j, k]] = sj * sk * uu + sj * ck * uv + cj * sk * vu + cj * ck * vv;
            suv[[j, k]] = cj * sk * uu + cj * ck * uv - sj * sk * vu - sj * ck * vv;
        }
    }
    ModeCovariance { suu, svv, suv, time: c.time + t }
}

/// Site variances `Var p_x = m_x² (Ψᵀ Suu Ψ)_{xx}` and `Var r_x = (Ψ̃ᵀ Svv Ψ̃)_{xx}`.
pub fn site_thermal_variances(c: &ModeCovariance, basis: &EigenBasis) -> SiteVariances {
    let var_p = diag_of_sandwich(&c.suu, basis.modes(), None);
    let var_r = diag_of_sandwich(&c.svv, basis.strain_modes(), None);
    SiteVariances {
        var_r,
        var_p: scale_by_mass_squared(var_p, basis.masses(), None),
    }
}

/// Site variances on a subset of sites (zero-based indices; stretch sites must be `< N − 1`).
pub fn site_thermal_variances_at(
    c: &ModeCovariance,
    basis: &EigenBasis,
    p_sites: &[usize],
    r_sites: &[usize],
) -> SiteVariances {
    let var_p = diag_of_sandwich(&c.suu, basis.modes(), Some(p_sites));
    SiteVariances {
        var_r: diag_of_sandwich(&c.svv, basis.strain_modes(), Some(r_sites)),
        var_p: scale_by_mass_squared(var_p, basis.masses(), Some(p_sites)),
    }
}

/// Every `⌈N/256⌉`-th site.
pub fn probe_sites(n: usize) -> Vec<usize> {
    let step = n.div_ceil(256).max(1);
    (0..n).step_by(step).collect()
}

fn diag_of_sandwich(s: &Array2<f64>, rows: &Array2<f64>, sites: Option<&[usize]>) -> Vec<f64> {
    let cols = match sites {
        Some(idx) => rows.select(Axis(1), idx),
        None => rows.clone(),
    };
    let prod = s.dot(&cols);
    let mut out = vec![0.0; cols.ncols()];
    Zip::from(&mut out[..])
        .and(prod.axis_iter(Axis(1)))
        .and(cols.axis_iter(Axis(1)))
        .for_each(|o, a, b| *o = a.dot(&b));
    out
}

fn scale_by_mass_squared(mut v: Vec<f64>, m: &[f64], sites: Option<&[usize]>) -> Vec<f64> {
    for (i, val) in v.iter_mut().enumerate() {
        let x = sites.map_or(i, |s| s[i]);
        *val *= m[x] * m[x];
    }
    v
}

/// `H = ½(⟨p, M⁻¹p⟩ + ⟨r, r⟩)` and `I = ½(⟨∇₋r, M⁻¹∇₋r⟩ + |∇₊M⁻¹p|²)` with `r_0 = r_N = 0`.
pub fn conserved_quantities(r: &[f64], p: &[f64], masses: &MassField) -> Conserved {
    let m = masses.masses();
    let n = m.len();
    assert_eq!(p.len(), n, "momentum length");
    assert_eq!(r.len(), n - 1, "stretch length");
    let stretch = |x: usize| if x == 0 || x == n { 0.0 } else { r[x - 1] };
    let kinetic: f64 = p.iter().zip(m).map(|(p, m)| p * p / m).sum();
    let elastic: f64 = r.iter().map(|r| r * r).sum();
    let grad_r: f64 = (1..=n).map(|x| (stretch(x) - stretch(x - 1)).powi(2) / m[x - 1]).sum();
    let grad_v: f64 = (0..n - 1).map(|x| (p[x + 1] / m[x + 1] - p[x] / m[x]).powi(2)).sum();
    Conserved {
        energy: 0.5 * (kinetic + elastic),
        gradient_energy: 0.5 * (grad_r + grad_v),
    }
}

/// `E_k = ½(u_k² + v_k²)`.
pub fn mode_energies(s: &ModeState) -> Vec<f64> {
    s.u.iter().zip(&s.v).map(|(u, v)| 0.5 * (u * u + v * v)).collect()
}

/// `H` and `I` evaluated from mode amplitudes.
pub fn mode_space_conserved(s: &ModeState, basis: &EigenBasis) -> Conserved {
    let e = mode_energies(s);
    Conserved {
        energy: e.iter().sum(),
        gradient_energy: e.iter().zip(basis.frequencies()).map(|(e, w)| e * w * w).sum(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

//! Per-(N, seed) computations for each experiment kind.

use chain_hydro::chain::{ChainError, EigenBasis, MassField};
use chain_hydro::clean_chain::{
    covariance_invariance_check, covariance_invariance_exact, local_gibbs_covariance, wigner_phase_identity,
    CleanChainError, WaveField,
};
use chain_hydro::euler::{solve_wave, EulerError, Field, MacroFields, SolveOptions};
use chain_hydro::evolution::{
    conserved_quantities, evolve_covariance, evolve_mode_state, initial_mode_covariance, mode_energies, project,
    project_mean, reconstruct, site_thermal_variances,
};
use chain_hydro::fields::{
    apriori_bounds, averaging_sums, empirical_field, holder_modulus, holder_pairs, mechanical_field, FieldsError,
    SiteMoments, TestFunction, ThermalFunctional,
};
use chain_hydro::gibbs::{initial_moments, sample_configuration, GibbsError};
use chain_hydro::localization::{
    high_band_supports, length_profile, confinement_pass_rate, mode_decay_lengths, write_supports_csv, DecaySample,
    LocalizationError,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::quantity::Record;

#[derive(Debug, Error)]
pub enum CellError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Gibbs(#[from] GibbsError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Fields(#[from] FieldsError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error(transparent)]
    CleanChain(#[from] CleanChainError),
}

/// An extra output file produced by a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Default)]
pub struct CellOutput {
    pub records: Vec<Record>,
    pub artifacts: Vec<Artifact>,
    decay: Vec<DecaySample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub n: usize,
    pub seed: u64,
}

/// Everything a run produced, plus failures of individual cells.
#[derive(Debug, Default)]
pub struct RunData {
    pub records: Vec<Record>,
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<(Cell, CellError)>,
}

/// Offsets the configuration-sampling stream from the mass-sampling stream of the same seed.
const SAMPLE_STREAM: u64 = 0x5DEE_CE66_D1CE_4E5B;

fn sine2() -> TestFunction {
    TestFunction::sine(2)
}

fn micro_time(n: usize, t: f64, exponent: f64) -> f64 {
    (n as f64).powf(exponent) * t
}

fn basis_for(cfg: &ExperimentConfig, masses: &MassField) -> Result<EigenBasis, CellError> {
    Ok(EigenBasis::compute_with(masses, cfg.tolerances)?)
}

fn sampled_basis(cfg: &ExperimentConfig, cell: Cell) -> Result<EigenBasis, CellError> {
    basis_for(cfg, &MassField::sample(cfg.mass_law, cell.n, cell.seed)?)
}

/// Runs every cell on the current rayon pool and the pooled post-processing.
///
/// Fails early only if the limit equations cannot be solved; per-cell failures are
/// collected in [`RunData::failures`].
pub fn run_cells(cfg: &ExperimentConfig) -> Result<RunData, CellError> {
    let cells: Vec<Cell> =
        cfg.sizes.iter().flat_map(|&n| cfg.seeds.iter().map(move |&seed| Cell { n, seed })).collect();
    let limit = match cfg.kind {
        ExperimentKind::Convergence => {
            let opts = SolveOptions { modes: cfg.euler_modes, ..SolveOptions::default() };
            Some(solve_wave(&cfg.profiles, cfg.mass_law.mean(), opts)?)
        }
        _ => None,
    };
    let outputs: Vec<(Cell, Result<CellOutput, CellError>)> = cells
        .par_iter()
        .map(|&cell| {
            log::debug!("cell N={} seed={}", cell.n, cell.seed);
            (cell, run_cell(cfg, cell, limit.as_ref()))
        })
        .collect();
    let mut data = RunData::default();
    let mut decay: Vec<(usize, Vec<DecaySample>)> = Vec::new();
    for (cell, out) in outputs {
        match out {
            Ok(o) => {
                data.records.extend(o.records);
                data.artifacts.extend(o.artifacts);
                decay.push((cell.n, o.decay));
            }
            Err(e) => data.failures.push((cell, e)),
        }
    }
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let pooled: Vec<_> = sizes
        .par_iter()
        .map(|&n| {
            let samples: Vec<DecaySample> =
                decay.iter().filter(|(m, _)| *m == n).flat_map(|(_, s)| s.iter().copied()).collect();
            (n, pooled_records(cfg, n, &samples))
        })
        .collect();
    for (n, out) in pooled {
        match out {
            Ok(o) => {
                data.records.extend(o.records);
                data.artifacts.extend(o.artifacts);
            }
            Err(e) => data.failures.push((Cell { n, seed: 0 }, e)),
        }
    }
    data.artifacts.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(data)
}

pub fn run_cell(cfg: &ExperimentConfig, cell: Cell, limit: Option<&MacroFields>) -> Result<CellOutput, CellError> {
    match cfg.kind {
        ExperimentKind::Conservation => conservation(cfg, cell),
        ExperimentKind::EquilibriumExactness => equilibrium(cfg, cell),
        ExperimentKind::Convergence => convergence(cfg, cell, limit.expect("limit solved before cells")),
        ExperimentKind::FrozenTemperature => frozen(cfg, cell),
        ExperimentKind::Localization => localization(cfg, cell),
        ExperimentKind::Averaging => averaging(cfg, cell),
        ExperimentKind::CleanChain => clean_chain(cfg, cell),
    }
}

fn conservation(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let mf = basis.mass_field();
    let moments = initial_moments(&cfg.profiles, mf)?;
    let (r, p) = sample_configuration(&moments, cell.seed ^ SAMPLE_STREAM);
    let c0 = conserved_quantities(&r, &p, mf);
    let s0 = project(&r, &p, &basis);
    let e0 = mode_energies(&s0);
    let unit = c0.energy / cell.n as f64;
    let mut out = CellOutput::default();
    for &t in &cfg.times {
        for &e in &cfg.time_exponents {
            let (rt, pt) = reconstruct(&evolve_mode_state(&s0, &basis, micro_time(cell.n, t, e)), &basis);
            let c = conserved_quantities(&rt, &pt, mf);
            let et = mode_energies(&project(&rt, &pt, &basis));
            let mode_drift = e0.iter().zip(&et).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / unit;
            let rec = |q, v| Record::new(q, cell.n, Some(cell.seed), v).at(t, e);
            out.records.push(rec("energy_drift", (c.energy - c0.energy).abs() / c0.energy));
            out.records.push(rec("gradient_drift", (c.gradient_energy - c0.gradient_energy).abs() / c0.gradient_energy));
            out.records.push(rec("mode_energy_drift", mode_drift));
        }
    }
    Ok(out)
}

fn equilibrium(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let m = basis.masses();
    let n = cell.n;
    let moments = initial_moments(&cfg.profiles, basis.mass_field())?;
    let c0 = initial_mode_covariance(&moments, &basis);
    let half_temp = |x: usize| 0.5 / cfg.profiles.beta().value(x as f64 / n as f64);
    let mut out = CellOutput::default();
    for &t in &cfg.times {
        for &e in &cfg.time_exponents {
            let v = site_thermal_variances(&evolve_covariance(&c0, &basis, micro_time(n, t, e)), &basis);
            let dp = (0..n).map(|x| (v.var_p[x] / (2.0 * m[x]) - half_temp(x + 1)).abs()).fold(0.0, f64::max);
            let dr = (0..n - 1).map(|x| (v.var_r[x] / 2.0 - half_temp(x + 1)).abs()).fold(0.0, f64::max);
            out.records.push(Record::new("var_p_deviation", n, Some(cell.seed), dp).at(t, e));
            out.records.push(Record::new("var_r_deviation", n, Some(cell.seed), dr).at(t, e));
        }
    }
    Ok(out)
}

fn convergence(cfg: &ExperimentConfig, cell: Cell, limit: &MacroFields) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let mf = basis.mass_field();
    let n = cell.n;
    let moments = initial_moments(&cfg.profiles, mf)?;
    let s0 = project_mean(&moments, &basis);
    let c0 = initial_mode_covariance(&moments, &basis);
    let f = sine2();
    let thermal = ThermalFunctional::new(&basis, &f);
    let f0 = thermal.evaluate(&c0);
    let (r0, p0) = reconstruct(&s0, &basis);
    let h0 = conserved_quantities(&r0, &p0, mf);
    let m_max = mf.max_mass();
    let pairs = holder_pairs(n);
    let one = TestFunction::constant(1.0);
    let sine1 = TestFunction::sine(1);
    let mut out = CellOutput::default();
    for &t in &cfg.times {
        let (r, p) = reconstruct(&evolve_mode_state(&s0, &basis, micro_time(n, t, 1.0)), &basis);
        let moments_t = SiteMoments { mean_r: &r, mean_p: &p, variances: None };
        let field = |g: &TestFunction, which| empirical_field(&moments_t, mf, g, which);
        let lim = |g: &TestFunction, which| limit.limit_field(g.as_fn(), t, which);
        let energy = mechanical_field(&r, &p, mf, &f) + thermal.evaluate_after(&c0, &basis, micro_time(n, t, 1.0));
        let sums = apriori_bounds(&r, &p, mf);
        let rec = |q, v| Record::new(q, n, Some(cell.seed), v).at(t, 1.0);
        out.records.extend([
            rec("stretch_error", (field(&f, Field::Stretch)? - lim(&f, Field::Stretch)?).abs()),
            rec("momentum_error", (field(&one, Field::Momentum)? - lim(&one, Field::Momentum)?).abs()),
            rec("momentum_sine_error", (field(&sine1, Field::Momentum)? - lim(&sine1, Field::Momentum)?).abs()),
            rec("energy_error", (energy - lim(&f, Field::Energy)?).abs()),
            rec("l2_r_ratio", sums.l2_r / (2.0 * h0.energy)),
            rec("l2_p_ratio", sums.l2_p / (2.0 * m_max * h0.energy)),
            rec("h1_r_ratio", sums.h1_r / (2.0 * m_max * h0.gradient_energy)),
            rec("h1_p_ratio", sums.h1_p / (2.0 * h0.gradient_energy)),
            rec("l2_p_unweighted_ratio", sums.l2_p / (2.0 * h0.energy)),
            rec("h1_r_unweighted_ratio", sums.h1_r / (2.0 * h0.gradient_energy)),
            rec("h1_r_scaled", n as f64 * sums.h1_r),
            rec("holder_modulus", holder_modulus(&r, &p, mf, &pairs)?),
        ]);
        for &e in &cfg.time_exponents {
            let drift = (thermal.evaluate_after(&c0, &basis, micro_time(n, t, e)) - f0).abs();
            out.records.push(Record::new("thermal_drift", n, Some(cell.seed), drift).at(t, e));
        }
    }
    Ok(out)
}

fn frozen(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let n = cell.n;
    let moments = initial_moments(&cfg.profiles, basis.mass_field())?;
    let c0 = initial_mode_covariance(&moments, &basis);
    let thermal = ThermalFunctional::new(&basis, &sine2());
    let f0 = thermal.evaluate(&c0);
    let mut out = CellOutput::default();
    for &t in &cfg.times {
        for &e in &cfg.time_exponents {
            let tm = micro_time(n, t, e);
            let split = thermal.band_split(&c0, &basis, tm, cfg.alpha)?;
            let drift = (split.low + split.high + split.cross - f0).abs();
            let rec = |q, v: f64| Record::new(q, n, Some(cell.seed), v).at(t, e);
            out.records.extend([
                rec("thermal_drift", drift),
                rec("thermal_low_band", split.low.abs()),
                rec("thermal_high_band", split.high.abs()),
                rec("thermal_cross", split.cross.abs()),
            ]);
        }
    }
    Ok(out)
}

fn localization(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let supports = high_band_supports(&basis, cfg.alpha, cfg.gamma)?;
    let rate = supports.iter().filter(|(_, ok)| *ok).count() as f64 / supports.len() as f64;
    let mut csv = Vec::new();
    write_supports_csv(&mut csv, cell.n, Some(cell.seed), &supports, &basis)?;
    Ok(CellOutput {
        records: vec![Record::new("pass_rate", cell.n, Some(cell.seed), rate)],
        artifacts: vec![Artifact {
            name: format!("modes_N{}_seed{}.csv", cell.n, cell.seed),
            contents: String::from_utf8(csv).expect("csv is utf-8"),
        }],
        decay: mode_decay_lengths(&basis),
    })
}

fn averaging(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let basis = sampled_basis(cfg, cell)?;
    let mut out = CellOutput::default();
    for (t, e, sums) in averaging_at_times(cfg, &basis)? {
        out.records.push(Record::new("average_linear", cell.n, Some(cell.seed), sums.linear).at(t, e));
        out.records.push(Record::new("average_quadratic", cell.n, Some(cell.seed), sums.quadratic).at(t, e));
    }
    Ok(out)
}

fn averaging_at_times(
    cfg: &ExperimentConfig,
    basis: &EigenBasis,
) -> Result<Vec<(f64, f64, chain_hydro::fields::AveragingSums)>, CellError> {
    let moments = initial_moments(&cfg.profiles, basis.mass_field())?;
    let s0 = project_mean(&moments, basis);
    let f = sine2();
    let mut out = Vec::new();
    for &t in &cfg.times {
        for &e in &cfg.time_exponents {
            let (_, p) = reconstruct(&evolve_mode_state(&s0, basis, micro_time(basis.n(), t, e)), basis);
            out.push((t, e, averaging_sums(&p, basis.mass_field(), &f)));
        }
    }
    Ok(out)
}

fn clean_chain(cfg: &ExperimentConfig, cell: Cell) -> Result<CellOutput, CellError> {
    let n = cell.n;
    let temperature: Vec<f64> = (0..n).map(|x| 1.0 / cfg.profiles.beta().value(x as f64 / n as f64)).collect();
    let cov0 = local_gibbs_covariance(&temperature)?;
    let mut out = CellOutput::default();
    let r: Vec<f64> = sample_local(&temperature, cell.seed ^ SAMPLE_STREAM);
    let p: Vec<f64> = sample_local(&temperature, cell.seed.rotate_left(17) ^ SAMPLE_STREAM);
    let field = WaveField::from_configuration(&r, &p)?;
    for &t in &cfg.times {
        for &e in &cfg.time_exponents {
            let tm = micro_time(n, t, e);
            let exact = covariance_invariance_exact(cfg.beta, tm, n)?;
            let mc = covariance_invariance_check(cfg.beta, tm, n, cfg.samples, cell.seed)?;
            let rec = |q, v| Record::new(q, n, Some(cell.seed), v).at(t, e);
            out.records.extend([
                rec("covariance_exact_deviation", exact),
                rec("covariance_mc_deviation", mc.max_deviation),
                rec("covariance_mc_z_ratio", mc.max_z / mc.critical_z),
            ]);
            // The Wigner identity evolves for N t, so only the scale-1 entry is meaningful.
            if e == 1.0 {
                let w = wigner_phase_identity(&cov0, cfg.xi, n / 4, t, n)?;
                out.records.extend([
                    rec("wigner_discrepancy", w.discrepancy()),
                    rec("slope_error_grid", w.slope_error_grid),
                    rec("slope_error_mid", w.slope_error_mid),
                ]);
            }
            let mut csv = Vec::new();
            field.evolve(tm).write_csv(&mut csv)?;
            out.artifacts.push(Artifact {
                name: format!("wavefield_N{n}_seed{}_t{t}_s{e}.csv", cell.seed),
                contents: String::from_utf8(csv).expect("csv is utf-8"),
            });
        }
    }
    Ok(out)
}

fn sample_local(temperature: &[f64], seed: u64) -> Vec<f64> {
    use chain_hydro::gibbs::InitialMoments;
    let n = temperature.len();
    let moments = InitialMoments {
        mean_r: vec![0.0; n - 1],
        mean_p: vec![0.0; n],
        var_r: temperature[..n - 1].to_vec(),
        var_p: temperature.to_vec(),
    };
    sample_configuration(&moments, seed).1
}

/// Values pooled over all seeds of one chain length.
fn pooled_records(cfg: &ExperimentConfig, n: usize, decay: &[DecaySample]) -> Result<CellOutput, CellError> {
    let mut out = CellOutput::default();
    let m_bar = cfg.mass_law.mean();
    match cfg.kind {
        ExperimentKind::Localization => {
            let clean = basis_for(cfg, &MassField::constant(n, m_bar)?)?;
            out.records.push(Record::new("clean_pass_rate", n, None, confinement_pass_rate(&clean, cfg.alpha, cfg.gamma)?));
            let profile = length_profile(decay, n, cfg.bands)?;
            if let Some(top) = profile.bands.last() {
                out.records.push(Record::new("top_band_zeta", n, None, top.zeta));
            }
            if let Some(fit) = profile.scaling_fit(m_bar) {
                out.records.push(Record::new("zeta_slope", n, None, fit.slope));
                out.records.push(Record::new("zeta_slope_stderr", n, None, fit.slope_stderr));
            }
            let mut csv = Vec::new();
            profile.write_csv(&mut csv)?;
            out.artifacts.push(Artifact { name: format!("zeta_N{n}.csv"), contents: String::from_utf8(csv).expect("utf-8") });
        }
        ExperimentKind::Averaging => {
            let clean = basis_for(cfg, &MassField::constant(n, m_bar)?)?;
            for (t, e, sums) in averaging_at_times(cfg, &clean)? {
                out.records.push(Record::new("average_linear_control", n, None, sums.linear).at(t, e));
                out.records.push(Record::new("average_quadratic_control", n, None, sums.quadratic).at(t, e));
            }
        }
        _ => {}
    }
    Ok(out)
}

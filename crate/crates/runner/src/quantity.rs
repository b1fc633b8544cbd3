//! Tracked quantities and the records that carry them.

use crate::config::ExperimentKind;

/// How replicas at one chain length are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    /// Root mean square, for signed quantities expected to average out.
    Rms,
}

impl Aggregate {
    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Mean => "mean",
            Aggregate::Rms => "rms",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantity {
    pub name: &'static str,
    pub aggregate: Aggregate,
    pub description: &'static str,
}

const fn mean(name: &'static str, description: &'static str) -> Quantity {
    Quantity { name, aggregate: Aggregate::Mean, description }
}

const fn rms(name: &'static str, description: &'static str) -> Quantity {
    Quantity { name, aggregate: Aggregate::Rms, description }
}

const CONSERVATION: &[Quantity] = &[
    mean("energy_drift", "|H(t) - H(0)| / H(0) of a sampled configuration"),
    mean("gradient_drift", "|I(t) - I(0)| / I(0) of a sampled configuration"),
    mean("mode_energy_drift", "max_k |E_k(t) - E_k(0)| in units of the mean mode energy H(0)/N"),
];

const EQUILIBRIUM: &[Quantity] = &[
    mean("var_p_deviation", "max_x |var p_x / 2m_x - 1/(2 beta(x/N))|"),
    mean("var_r_deviation", "max_x |var r_x / 2 - 1/(2 beta(x/N))|"),
];

const CONVERGENCE: &[Quantity] = &[
    mean("stretch_error", "|R_N - R| for f(y) = sin(2 pi y)"),
    mean("momentum_error", "|P_N - P| for f = 1"),
    mean("momentum_sine_error", "|P_N - P| for f(y) = sin(pi y)"),
    mean("energy_error", "|E_N - E| for f(y) = sin(2 pi y)"),
    mean("thermal_drift", "|F_N(t) - F_N(0)| for f(y) = sin(2 pi y)"),
    mean("l2_r_ratio", "sum r^2 / 2H(0) of the mean state"),
    mean("l2_p_ratio", "sum p^2 / (2 m_max H(0)) of the mean state"),
    mean("h1_r_ratio", "sum (grad r)^2 / (2 m_max I(0)) of the mean state"),
    mean("h1_p_ratio", "sum (grad p/m)^2 / 2I(0) of the mean state"),
    mean("l2_p_unweighted_ratio", "sum p^2 / 2H(0), without the mass factor"),
    mean("h1_r_unweighted_ratio", "sum (grad r)^2 / 2I(0), without the mass factor"),
    mean("h1_r_scaled", "N sum (grad r)^2 of the mean state"),
    mean("holder_modulus", "max over dyadic pairs of |dX| / |dx/N|^(1/2) for X = r, p/m"),
];

const FROZEN: &[Quantity] = &[
    mean("thermal_drift", "|F_N(t) - F_N(0)| for f(y) = sin(2 pi y)"),
    mean("thermal_low_band", "|thermal sum over modes k <= N^(1-alpha)|"),
    mean("thermal_high_band", "|thermal sum over modes k > N^(1-alpha)|"),
    mean("thermal_cross", "|thermal cross terms between the two bands|"),
];

const LOCALIZATION: &[Quantity] = &[
    mean("pass_rate", "fraction of high modes confined to a window of half-width N^gamma"),
    mean("clean_pass_rate", "the same for the equal-mass chain"),
    mean("zeta_slope", "slope of log zeta against log omega over mid-spectrum bands"),
    mean("zeta_slope_stderr", "standard error of that slope"),
    mean("top_band_zeta", "decay length in the highest frequency band"),
];

const AVERAGING: &[Quantity] = &[
    rms("average_linear", "(1/N) sum f (p/m)(m - m_bar) for f(y) = sin(2 pi y)"),
    rms("average_quadratic", "(1/N) sum f (p/m)^2 (m - m_bar) for f(y) = sin(2 pi y)"),
    rms("average_linear_control", "linear sum for constant masses"),
    rms("average_quadratic_control", "quadratic sum for constant masses"),
];

const CLEAN_CHAIN: &[Quantity] = &[
    mean("covariance_exact_deviation", "max entry of |U U^T - I| / beta"),
    mean("covariance_mc_deviation", "max entry deviation of sampled covariances from delta / beta"),
    mean("covariance_mc_z_ratio", "largest entry z-score over its family-wise critical value"),
    mean("wigner_discrepancy", "|evolved Wigner amplitude - closed-form phase times initial|"),
    mean("slope_error_grid", "|exact phase - exp(-i w'(k) xi t)| with w' at the grid point"),
    mean("slope_error_mid", "|exact phase - exp(-i w'(k) xi t)| with w' at the pair midpoint"),
];

pub fn quantities(kind: ExperimentKind) -> &'static [Quantity] {
    match kind {
        ExperimentKind::Conservation => CONSERVATION,
        ExperimentKind::EquilibriumExactness => EQUILIBRIUM,
        ExperimentKind::Convergence => CONVERGENCE,
        ExperimentKind::FrozenTemperature => FROZEN,
        ExperimentKind::Localization => LOCALIZATION,
        ExperimentKind::Averaging => AVERAGING,
        ExperimentKind::CleanChain => CLEAN_CHAIN,
    }
}

pub fn lookup(kind: ExperimentKind, name: &str) -> Option<&'static Quantity> {
    quantities(kind).iter().find(|q| q.name == name)
}

/// One measured value. `seed` is `None` for values pooled over replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub quantity: &'static str,
    pub n: usize,
    pub seed: Option<u64>,
    pub time: Option<f64>,
    pub scale: Option<f64>,
    pub value: f64,
}

impl Record {
    pub fn new(quantity: &'static str, n: usize, seed: Option<u64>, value: f64) -> Self {
        Self { quantity, n, seed, time: None, scale: None, value }
    }

    pub fn at(mut self, time: f64, scale: f64) -> Self {
        self.time = Some(time);
        self.scale = Some(scale);
        self
    }
}

use chain_hydro::chain::{EigenBasis, MassField, MassLaw};
use chain_hydro::euler::Field;
use chain_hydro::evolution::*;
use chain_hydro::fields::*;
use chain_hydro::gibbs::{initial_moments, sample_configuration, MacroProfiles};
use proptest::prelude::*;

fn setup(n: usize, seed: u64, prof: &MacroProfiles) -> (EigenBasis, ModeState, ModeCovariance) {
    let mf = MassField::sample(MassLaw::CANONICAL, n, seed).unwrap();
    let b = EigenBasis::compute(&mf).unwrap();
    let mom = initial_moments(prof, &mf).unwrap();
    let s = project_mean(&mom, &b);
    let c = initial_mode_covariance(&mom, &b);
    (b, s, c)
}

fn fields_at(b: &EigenBasis, s: &ModeState, c: &ModeCovariance, t: f64, f: &TestFunction) -> [f64; 3] {
    let (r, p) = reconstruct(&evolve_mode_state(s, b, t), b);
    let v = site_thermal_variances(&evolve_covariance(c, b, t), b);
    let m = SiteMoments { mean_r: &r, mean_p: &p, variances: Some(&v) };
    [Field::Stretch, Field::Momentum, Field::Energy].map(|w| empirical_field(&m, b.mass_field(), f, w).unwrap())
}

#[test]
fn zero_test_function_gives_zero() {
    let (b, s, c) = setup(32, 1, &MacroProfiles::canonical());
    assert_eq!(fields_at(&b, &s, &c, 3.0, &TestFunction::constant(0.0)), [0.0; 3]);
}

#[test]
fn unit_temperature_energy_field() {
    let n = 64;
    let (b, s, c) = setup(n, 2, &MacroProfiles::equilibrium(1.0).unwrap());
    let [_, _, e] = fields_at(&b, &s, &c, 0.0, &TestFunction::constant(1.0));
    assert!((e - (1.0 - 0.5 / n as f64)).abs() < 1e-12);
    let thermal = ThermalFunctional::new(&b, &TestFunction::constant(1.0));
    assert!((thermal.evaluate(&c) - (1.0 - 0.5 / n as f64)).abs() < 1e-12);
}

#[test]
fn total_momentum_is_constant() {
    let n = 100;
    let (b, s, c) = setup(n, 3, &MacroProfiles::canonical());
    let one = TestFunction::constant(1.0);
    let p0 = fields_at(&b, &s, &c, 0.0, &one)[1];
    for &t in &[1.0, 50.0, 1e4] {
        assert!((fields_at(&b, &s, &c, t, &one)[1] - p0).abs() < 1e-10);
    }
}

#[test]
fn trace_route_matches_site_variances() {
    let n = 80;
    let (b, s, c) = setup(n, 4, &MacroProfiles::canonical());
    let f = TestFunction::sine(2);
    let functional = ThermalFunctional::new(&b, &f);
    for &t in &[0.0, 7.5, 40.0, 6400.0] {
        let ct = evolve_covariance(&c, &b, t);
        let v = site_thermal_variances(&ct, &b);
        let (r, p) = reconstruct(&evolve_mode_state(&s, &b, t), &b);
        let split = energy_split(&r, &p, &v, b.mass_field(), &f);
        let m = SiteMoments { mean_r: &r, mean_p: &p, variances: Some(&v) };
        let e = empirical_field(&m, b.mass_field(), &f, Field::Energy).unwrap();
        assert!((split.total() - e).abs() < 1e-12);
        assert!((mechanical_field(&r, &p, b.mass_field(), &f) - split.mechanical).abs() < 1e-14);
        assert!((functional.evaluate(&ct) - split.thermal).abs() < 1e-12);
        assert!((functional.evaluate_after(&c, &b, t) - split.thermal).abs() < 1e-12);
    }
    let m = SiteMoments { mean_r: &[0.0; 79], mean_p: &[0.0; 80], variances: None };
    assert_eq!(empirical_field(&m, b.mass_field(), &f, Field::Energy), Err(FieldsError::MissingVariances));
}

#[test]
fn constant_temperature_freezes_thermal_energy() {
    for seed in 0..4 {
        let (b, _, c) = setup(60, seed, &MacroProfiles::equilibrium(1.7).unwrap());
        let functional = ThermalFunctional::new(&b, &TestFunction::sine(1));
        let f0 = functional.evaluate(&c);
        for &t in &[3.0, 300.0, 3600.0] {
            assert!((functional.evaluate_after(&c, &b, t) - f0).abs() < 1e-8);
            let split = functional.band_split(&c, &b, t, 0.3).unwrap();
            assert!((split.low + split.high + split.cross - f0).abs() < 1e-8);
        }
    }
}

#[test]
fn band_split_edges() {
    let (b, _, c) = setup(64, 5, &MacroProfiles::canonical());
    let f = TestFunction::sine(2);
    let total = ThermalFunctional::new(&b, &f).evaluate_after(&c, &b, 20.0);
    let split = mode_band_split(&c, &b, &f, 1e-6, 20.0).unwrap();
    assert!((split.low - total).abs() < 1e-12 && split.high == 0.0 && split.cross == 0.0);
    let split = mode_band_split(&c, &b, &f, 0.3, 20.0).unwrap();
    assert!((split.low + split.high + split.cross - total).abs() < 1e-12);
    assert_eq!(mode_band_split(&c, &b, &f, 0.5, 1.0), Err(FieldsError::AlphaOutOfRange(0.5)));
    assert!(mode_band_split(&c, &b, &f, 0.0, 1.0).is_err());
}

#[test]
fn mechanical_part_vanishes_without_means() {
    let (b, s, c) = setup(40, 6, &MacroProfiles::equilibrium(1.0).unwrap());
    let (r, p) = reconstruct(&evolve_mode_state(&s, &b, 9.0), &b);
    let v = site_thermal_variances(&evolve_covariance(&c, &b, 9.0), &b);
    assert_eq!(energy_split(&r, &p, &v, b.mass_field(), &TestFunction::constant(1.0)).mechanical, 0.0);
}

#[test]
fn apriori_sums_and_holder_examples() {
    let mf = MassField::sample(MassLaw::CANONICAL, 50, 7).unwrap();
    let zero = apriori_bounds(&[0.0; 49], &[0.0; 50], &mf);
    assert_eq!((zero.l2_r, zero.l2_p, zero.h1_r, zero.h1_p), (0.0, 0.0, 0.0, 0.0));
    let p: Vec<f64> = mf.masses().iter().map(|m| 0.4 * m).collect();
    let pairs = holder_pairs(50);
    assert!(holder_modulus(&[0.0; 49], &p, &mf, &pairs).unwrap() < 1e-13);
    let r: Vec<f64> = (1..50).map(|x| x as f64).collect();
    assert_eq!(holder_modulus(&r, &p, &mf, &[(3, 3)]).unwrap(), 0.0);
    assert!(holder_modulus(&r, &p, &mf, &[(0, 3)]).is_err());
    assert!(holder_modulus(&r, &p, &mf, &[(2, 51)]).is_err());
}

#[test]
fn holder_pair_lattice() {
    let pairs = holder_pairs(2048);
    assert!((900..1200).contains(&pairs.len()));
    assert!(pairs.iter().all(|&(a, b)| a >= 1 && b <= 2048 && b > a));
    let scales: std::collections::BTreeSet<usize> = pairs.iter().map(|(a, b)| b - a).collect();
    assert_eq!(scales.into_iter().collect::<Vec<_>>(), (0..11).map(|e| 1 << e).collect::<Vec<_>>());
}

#[test]
fn averaging_sums_vanish_for_constant_masses() {
    let mf = MassField::constant(64, 1.0).unwrap();
    let p: Vec<f64> = (0..64).map(|x| (x as f64 * 0.1).sin()).collect();
    let a = averaging_sums(&p, &mf, &TestFunction::cosine(1));
    assert_eq!((a.linear, a.quadratic), (0.0, 0.0));
    let rand = MassField::sample(MassLaw::CANONICAL, 64, 1).unwrap();
    let z = averaging_sums(&p, &rand, &TestFunction::constant(0.0));
    assert_eq!((z.linear, z.quadratic), (0.0, 0.0));
}

#[test]
fn test_function_end_check() {
    assert!(matches!(
        TestFunction::vanishing_at_ends("bad", |y| y, |_| 1.0),
        Err(FieldsError::EndsNotVanishing { .. })
    ));
    let s = TestFunction::sine(3);
    assert_eq!(s.value(1.0), 0.0);
    assert_eq!(s.smoothness(), Smoothness::DifferentiableVanishingEnds);
    let d = s.derivative().unwrap();
    assert!((d.value(0.0) - 3.0 * std::f64::consts::PI).abs() < 1e-14);
    assert!(TestFunction::continuous("c", |y| y).derivative().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn apriori_bounds_hold_for_any_state(
        m in prop::collection::vec(0.5_f64..2.0, 4..80),
        seed in any::<u64>(),
    ) {
        let n = m.len();
        let mf = MassField::from_masses(m.clone(), MassLaw::Constant(1.0)).unwrap();
        let mom = initial_moments(&MacroProfiles::canonical(), &mf).unwrap();
        let (r, p) = sample_configuration(&mom, seed);
        let h = conserved_quantities(&r, &p, &mf);
        let sums = apriori_bounds(&r, &p, &mf);
        let (mmin, mmax) = (mf.min_mass(), mf.max_mass());
        prop_assert!(sums.l2_r <= 2.0 * h.energy * (1.0 + 1e-12));
        prop_assert!(sums.l2_p <= 2.0 * mmax * h.energy * (1.0 + 1e-12));
        prop_assert!(sums.h1_p <= 2.0 * h.gradient_energy * (1.0 + 1e-12));
        prop_assert!(sums.h1_r <= 2.0 * mmax * h.gradient_energy * (1.0 + 1e-12));
        prop_assert!(mmin > 0.0);
        let modulus = holder_modulus(&r, &p, &mf, &holder_pairs(n)).unwrap();
        let bound = (n as f64 * sums.h1_r.max(sums.h1_p)).sqrt();
        prop_assert!(modulus <= bound * (1.0 + 1e-12));
    }
}

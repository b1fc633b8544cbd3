use chain_hydro::chain::{EigenBasis, MassField, MassLaw};
use chain_hydro::localization::*;
use proptest::prelude::*;

fn disordered(n: usize, seed: u64) -> EigenBasis {
    EigenBasis::compute(&MassField::sample(MassLaw::CANONICAL, n, seed).unwrap()).unwrap()
}

fn clean(n: usize) -> EigenBasis {
    EigenBasis::compute(&MassField::constant(n, 1.0).unwrap()).unwrap()
}

#[test]
fn clean_modes_are_extended() {
    let n = 256;
    let b = clean(n);
    for k in [40, 128, 255] {
        let s = mode_support(&b, k, 0.8).unwrap();
        assert!(s.outside_max > 0.3 / (n as f64).sqrt(), "k={k}: {}", s.outside_max);
        assert!(!s.is_confined(n, 0.8));
    }
    assert_eq!(confinement_pass_rate(&b, 0.3, 0.8).unwrap(), 0.0);
}

#[test]
fn top_mode_of_disordered_chain_is_confined() {
    let n = 1024;
    for seed in 1..=3 {
        let b = disordered(n, seed);
        let s = mode_support(&b, n - 1, 0.8).unwrap();
        assert!(s.is_confined(n, 0.8), "seed {seed}: {}", s.outside_max);
        assert!(s.ipr > 0.05);
    }
}

#[test]
fn support_fields_are_consistent() {
    let n = 200;
    let b = disordered(n, 9);
    let half = (n as f64).powf(0.6);
    for k in [0, 1, 57, 150, 199] {
        let s = mode_support(&b, k, 0.6).unwrap();
        let (a, e) = s.interval;
        assert!(1 <= a && a <= s.center && s.center <= e && e <= n);
        assert!((e - a) as f64 <= 2.0 * half);
        assert!(s.outside_max >= 0.0 && s.ipr > 0.0 && s.ipr <= 1.0);
        let norm: f64 = b.mode(k).iter().zip(b.masses()).map(|(v, m)| m * v * v).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }
    // The flat zero mode has ipr 1/N.
    let z = mode_support(&clean(50), 0, 0.5).unwrap();
    assert!((z.ipr - 1.0 / 50.0).abs() < 1e-14);
    assert_eq!(z.center, 1);
}

#[test]
fn parameter_checks() {
    let b = disordered(64, 1);
    assert!(matches!(mode_support(&b, 3, 1.0), Err(LocalizationError::GammaOutOfRange(_))));
    assert!(matches!(mode_support(&b, 64, 0.5), Err(LocalizationError::ModeOutOfRange { .. })));
    for (alpha, gamma) in [(0.4, 0.8), (0.3, 1.0), (0.0, 0.5), (0.3, 0.6)] {
        assert!(matches!(
            confinement_pass_rate(&b, alpha, gamma),
            Err(LocalizationError::ExponentsOutOfRange { .. })
        ));
    }
    assert!(matches!(localization_length_profile(std::slice::from_ref(&b), 1), Err(LocalizationError::TooFewBands(1))));
    assert!(matches!(localization_length_profile(&[], 4), Err(LocalizationError::NoBases)));
    assert!(matches!(
        localization_length_profile(&[b, disordered(32, 1)], 4),
        Err(LocalizationError::LengthMismatch { .. })
    ));
}

#[test]
fn high_band_bounds() {
    assert_eq!(high_band(1024, 0.3), 129..1024);
    assert_eq!(high_band(100, 0.25), 32..100);
}

#[test]
fn pass_rate_is_deterministic() {
    let a = confinement_pass_rate(&disordered(300, 5), 0.3, 0.8).unwrap();
    let b = confinement_pass_rate(&disordered(300, 5), 0.3, 0.8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_site_vector_has_subunit_length() {
    let mut v = vec![0.0; 41];
    v[17] = 1.0;
    let z = decay_length(&v, &[1.0; 41]).unwrap();
    assert!(z < 1.0, "{z}");
    assert_eq!(decay_length(&[0.0; 5], &[1.0; 5]), None);
}

#[test]
fn exponential_profile_recovers_its_length() {
    let n = 301;
    let v: Vec<f64> = (0..n).map(|x| (-(x as f64 - 150.0).abs() / 7.5).exp()).collect();
    let z = decay_length(&v, &vec![1.0; n]).unwrap();
    assert!((z - 7.5).abs() < 1e-9, "{z}");
    let flat = vec![0.1; n];
    assert_eq!(decay_length(&flat, &vec![1.0; n]), Some(f64::INFINITY));
}

#[test]
fn top_band_length_is_order_one_and_size_independent() {
    let law = MassLaw::Uniform { lo: 0.2, hi: 1.8 };
    let top = |n: usize| {
        let bases: Vec<_> =
            (1..=2).map(|s| EigenBasis::compute(&MassField::sample(law, n, s).unwrap()).unwrap()).collect();
        let p = localization_length_profile(&bases, 24).unwrap();
        p.bands.last().unwrap().zeta
    };
    let (a, b) = (top(256), top(512));
    assert!(a < 3.0 && b < 3.0, "{a} {b}");
    assert!((a - b).abs() < 0.5 * a.max(b), "{a} {b}");
}

#[test]
fn supports_csv_layout() {
    let b = disordered(64, 2);
    let rows = high_band_supports(&b, 0.3, 0.8).unwrap();
    let mut out = Vec::new();
    write_supports_csv(&mut out, 64, Some(2), &rows, &b).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,seed,k,omega,center,outside_max,ipr,pass");
    assert_eq!(lines.len(), rows.len() + 1);
    assert!(lines[1].starts_with("64,2,19,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outside_max_is_exhaustive(
        m in prop::collection::vec(0.3_f64..3.0, 3..60),
        gamma in 0.05_f64..0.95,
        pick in any::<prop::sample::Index>(),
    ) {
        let n = m.len();
        let b = EigenBasis::compute(&MassField::from_masses(m, MassLaw::Constant(1.0)).unwrap()).unwrap();
        let k = pick.index(n);
        let s = mode_support(&b, k, gamma).unwrap();
        let mode = b.mode(k);
        let peak = (0..n).map(|x| b.masses()[x] * mode[x] * mode[x]).fold(f64::MIN, f64::max);
        prop_assert_eq!(b.masses()[s.center - 1] * mode[s.center - 1] * mode[s.center - 1], peak);
        let half = (n as f64).powf(gamma);
        let brute = (1..=n)
            .filter(|&x| (x as f64 - s.center as f64).abs() > half)
            .map(|x| mode[x - 1].abs())
            .fold(0.0, f64::max);
        prop_assert_eq!(s.outside_max, brute);
    }
}

#[test]
fn pooled_samples_reproduce_profile() {
    let bases = [disordered(128, 1), disordered(128, 2)];
    let direct = localization_length_profile(&bases, 12).unwrap();
    let pooled: Vec<DecaySample> = bases.iter().flat_map(mode_decay_lengths).collect();
    assert_eq!(length_profile(&pooled, 128, 12).unwrap(), direct);
    assert!(direct.bands.iter().all(|b| b.modes >= 3));
    assert!(direct.bands.iter().map(|b| b.modes).sum::<usize>() <= pooled.len());
    assert_eq!(direct.bands.len() + direct.skipped.len(), 12);
}

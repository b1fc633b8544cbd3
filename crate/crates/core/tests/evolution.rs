use std::f64::consts::PI;

use chain_hydro::chain::{EigenBasis, MassField, MassLaw};
use chain_hydro::evolution::*;
use chain_hydro::gibbs::{initial_moments, sample_configuration, InitialMoments, MacroProfiles};
use ndarray::Array2;
use proptest::prelude::*;

fn basis(n: usize, seed: u64) -> EigenBasis {
    EigenBasis::compute(&MassField::sample(MassLaw::CANONICAL, n, seed).unwrap()).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Right-hand side of the equations of motion, used as an independent integrator.
fn rhs(r: &[f64], p: &[f64], m: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = m.len();
    let rr = |x: usize| if x == 0 || x == n { 0.0 } else { r[x - 1] };
    let dr = (0..n - 1).map(|x| p[x + 1] / m[x + 1] - p[x] / m[x]).collect();
    let dp = (1..=n).map(|x| rr(x) - rr(x - 1)).collect();
    (dr, dp)
}

fn rk4(r: &[f64], p: &[f64], m: &[f64], t: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let h = t / steps as f64;
    let (mut r, mut p) = (r.to_vec(), p.to_vec());
    let comb = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    for _ in 0..steps {
        let (k1r, k1p) = rhs(&r, &p, m);
        let (k2r, k2p) = rhs(&comb(&r, &k1r, h / 2.0), &comb(&p, &k1p, h / 2.0), m);
        let (k3r, k3p) = rhs(&comb(&r, &k2r, h / 2.0), &comb(&p, &k2p, h / 2.0), m);
        let (k4r, k4p) = rhs(&comb(&r, &k3r, h), &comb(&p, &k3p, h), m);
        for i in 0..r.len() {
            r[i] += h / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
        }
        for i in 0..p.len() {
            p[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
    }
    (r, p)
}

#[test]
fn projection_of_single_modes() {
    let b = basis(24, 1);
    let m = b.masses();
    let p: Vec<f64> = b.mode(3).iter().zip(m).map(|(psi, m)| m * psi).collect();
    let s = project(&[0.0; 23], &p, &b);
    for k in 0..24 {
        assert!((s.u[k] - if k == 3 { 1.0 } else { 0.0 }).abs() < 1e-12);
        assert_eq!(s.v[k], 0.0);
    }
    let r = b.strain_mode(2).to_vec();
    let s = project(&r, &[0.0; 24], &b);
    for k in 0..24 {
        assert!((s.v[k] - if k == 2 { 1.0 } else { 0.0 }).abs() < 1e-12);
        assert!(s.u[k].abs() < 1e-12);
    }
    let p: Vec<f64> = m.iter().map(|m| 0.7 * m).collect();
    let s = project(&[0.0; 23], &p, &b);
    assert!((s.u[0] - 0.7 * b.mass_field().total_mass().sqrt()).abs() < 1e-12);
    assert!(s.u[1..].iter().all(|u| u.abs() < 1e-12));
}

#[test]
fn rotation_examples() {
    let b = basis(10, 2);
    let k = 4;
    let mut s = ModeState { u: vec![0.0; 10], v: vec![0.0; 10], time: 0.0 };
    s.u[k] = 1.0;
    assert_eq!(evolve_mode_state(&s, &b, 0.0), s);
    let q = evolve_mode_state(&s, &b, PI / (2.0 * b.frequency(k)));
    assert!(q.u[k].abs() < 1e-15 && (q.v[k] - 1.0).abs() < 1e-15);

    let two = EigenBasis::compute(&MassField::constant(2, 1.0).unwrap()).unwrap();
    let s = project(&[0.0], &[1.0, -1.0], &two);
    assert!((s.u[1] - 2.0_f64.sqrt()).abs() < 1e-15);
    let back = evolve_mode_state(&s, &two, 2.0 * PI / 2.0_f64.sqrt());
    let (r, p) = reconstruct(&back, &two);
    assert!(close(&p, &[1.0, -1.0], 1e-10) && r[0].abs() < 1e-10);
}

#[test]
fn mode_evolution_matches_direct_integration() {
    let b = basis(16, 3);
    let mom = initial_moments(&MacroProfiles::canonical(), b.mass_field()).unwrap();
    let (r0, p0) = sample_configuration(&mom, 5);
    let t = 3.7;
    let (r_ref, p_ref) = rk4(&r0, &p0, b.masses(), t, 20_000);
    let (r, p) = reconstruct(&evolve_mode_state(&project(&r0, &p0, &b), &b, t), &b);
    assert!(close(&r, &r_ref, 1e-10), "{r:?} vs {r_ref:?}");
    assert!(close(&p, &p_ref, 1e-10));
}

#[test]
fn composition_reversal_and_round_trip() {
    let b = basis(50, 4);
    let mom = initial_moments(&MacroProfiles::canonical(), b.mass_field()).unwrap();
    let s = project_mean(&mom, &b);
    let (r, p) = reconstruct(&s, &b);
    assert!(close(&r, &mom.mean_r, 1e-12) && close(&p, &mom.mean_p, 1e-12));
    let a = evolve_mode_state(&evolve_mode_state(&s, &b, 13.0), &b, 29.5);
    let c = evolve_mode_state(&s, &b, 42.5);
    assert!(close(&a.u, &c.u, 1e-10) && close(&a.v, &c.v, 1e-10));
    assert_eq!(a.time, 42.5);
    let back = evolve_mode_state(&c, &b, -42.5);
    assert!(close(&back.u, &s.u, 1e-10) && close(&back.v, &s.v, 1e-10));
}

#[test]
fn conserved_quantities_by_hand() {
    let mf = MassField::constant(2, 1.0).unwrap();
    let c = conserved_quantities(&[0.0], &[1.0, -1.0], &mf);
    assert_eq!(c.energy, 1.0);
    assert_eq!(c.gradient_energy, 2.0);
    let z = conserved_quantities(&[0.0; 4], &[0.0; 5], &MassField::constant(5, 2.0).unwrap());
    assert_eq!((z.energy, z.gradient_energy), (0.0, 0.0));
    let s = ModeState { u: vec![0.0, 3.0], v: vec![0.0, 4.0], time: 0.0 };
    assert_eq!(mode_energies(&s), vec![0.0, 12.5]);
}

#[test]
fn constant_temperature_covariance_is_isotropic_and_frozen() {
    let b = basis(40, 6);
    let mom = initial_moments(&MacroProfiles::equilibrium(2.0).unwrap(), b.mass_field()).unwrap();
    let c = initial_mode_covariance(&mom, &b);
    let mut want: Array2<f64> = Array2::eye(40) * 0.5;
    assert!(c.suu.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    want[[0, 0]] = 0.0;
    assert!(c.svv.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    let later = evolve_covariance(&c, &b, 1234.5);
    let v = site_thermal_variances(&later, &b);
    for (x, m) in b.masses().iter().enumerate() {
        assert!((v.var_p[x] / m - 0.5).abs() < 1e-10);
    }
    assert!(v.var_r.iter().all(|r| (r - 0.5).abs() < 1e-10));
}

#[test]
fn two_site_equilibrium_covariance() {
    let two = EigenBasis::compute(&MassField::constant(2, 1.0).unwrap()).unwrap();
    let mom = InitialMoments { mean_r: vec![0.0], mean_p: vec![0.0; 2], var_r: vec![1.0], var_p: vec![1.0; 2] };
    let c = initial_mode_covariance(&mom, &two);
    assert!((c.suu.clone() - Array2::<f64>::eye(2)).iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn covariance_round_trip_and_single_entry_rotation() {
    let b = basis(30, 7);
    let mom = initial_moments(&MacroProfiles::canonical(), b.mass_field()).unwrap();
    let c = initial_mode_covariance(&mom, &b);
    for k in 0..30 {
        assert!(c.suu[[k, k]] >= 1.0 / 1.5 - 1e-12 && c.suu[[k, k]] <= 1.0 + 1e-12);
    }
    let v = site_thermal_variances(&c, &b);
    assert!(close(&v.var_p, &mom.var_p, 1e-10) && close(&v.var_r, &mom.var_r, 1e-10));
    assert_eq!(evolve_covariance(&c, &b, 0.0).suu, c.suu);

    let k = 5;
    let mut single = ModeCovariance {
        suu: Array2::zeros((30, 30)),
        svv: Array2::zeros((30, 30)),
        suv: Array2::zeros((30, 30)),
        time: 0.0,
    };
    single.suu[[k, k]] = 2.0;
    let t = 0.77;
    let e = evolve_covariance(&single, &b, t);
    let w = b.frequency(k) * t;
    assert!((e.suu[[k, k]] - 2.0 * w.cos().powi(2)).abs() < 1e-15);
    assert!((e.svv[[k, k]] - 2.0 * w.sin().powi(2)).abs() < 1e-15);
}

#[test]
fn covariance_evolution_composes_and_conserves_energy() {
    let b = basis(32, 8);
    let mom = initial_moments(&MacroProfiles::canonical(), b.mass_field()).unwrap();
    let c = initial_mode_covariance(&mom, &b);
    let a = evolve_covariance(&evolve_covariance(&c, &b, 7.0), &b, 11.0);
    let d = evolve_covariance(&c, &b, 18.0);
    for (x, y) in [(&a.suu, &d.suu), (&a.svv, &d.svv), (&a.suv, &d.suv)] {
        assert!(x.iter().zip(y.iter()).all(|(p, q)| (p - q).abs() < 1e-12));
    }
    assert!((d.thermal_energy() / c.thermal_energy() - 1.0).abs() < 1e-12);
    for k in 0..32 {
        let before = c.suu[[k, k]] + c.svv[[k, k]];
        let after = d.suu[[k, k]] + d.svv[[k, k]];
        assert!((before - after).abs() < 1e-12);
    }
    let probes = probe_sites(32);
    let r_probes: Vec<usize> = probes.iter().copied().filter(|&x| x < 31).collect();
    let full = site_thermal_variances(&d, &b);
    let sub = site_thermal_variances_at(&d, &b, &probes, &r_probes);
    for (i, &x) in probes.iter().enumerate() {
        assert!((sub.var_p[i] - full.var_p[x]).abs() < 1e-13);
    }
    for (i, &x) in r_probes.iter().enumerate() {
        assert!((sub.var_r[i] - full.var_r[x]).abs() < 1e-13);
    }
}

#[test]
fn monte_carlo_variances_agree_with_exact_propagation() {
    let b = basis(12, 9);
    let mom = initial_moments(&MacroProfiles::canonical(), b.mass_field()).unwrap();
    let t = 5.3;
    let exact = site_thermal_variances(&evolve_covariance(&initial_mode_covariance(&mom, &b), &b, t), &b);
    let mean = reconstruct(&evolve_mode_state(&project_mean(&mom, &b), &b, t), &b).1;
    let draws = 10_000;
    let mut acc = [0.0; 12];
    for s in 0..draws {
        let (r, p) = sample_configuration(&mom, 1000 + s);
        let (_, pt) = reconstruct(&evolve_mode_state(&project(&r, &p, &b), &b, t), &b);
        for x in 0..12 {
            acc[x] += (pt[x] - mean[x]).powi(2);
        }
    }
    for x in 0..12 {
        let est = acc[x] / draws as f64;
        let sigma = exact.var_p[x] * (2.0 / draws as f64).sqrt();
        assert!((est - exact.var_p[x]).abs() < 3.0 * sigma, "site {x}: {est} vs {}", exact.var_p[x]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_of_exact_flow(
        m in prop::collection::vec(0.2_f64..3.0, 2..60),
        seed in any::<u64>(),
        t in 0.0_f64..1e4,
    ) {
        let n = m.len();
        let mf = MassField::from_masses(m, MassLaw::Constant(1.0)).unwrap();
        let b = EigenBasis::compute(&mf).unwrap();
        let mom = initial_moments(&MacroProfiles::canonical(), &mf).unwrap();
        let (r, p) = sample_configuration(&mom, seed);
        let s = project(&r, &p, &b);
        let direct = conserved_quantities(&r, &p, &mf);
        let modal = mode_space_conserved(&s, &b);
        prop_assert!((direct.energy - modal.energy).abs() <= 1e-10 * direct.energy);
        prop_assert!((direct.gradient_energy - modal.gradient_energy).abs() <= 1e-9 * direct.gradient_energy.max(1e-12));
        let later = evolve_mode_state(&s, &b, t);
        let (rt, pt) = reconstruct(&later, &b);
        prop_assert_eq!(rt.len(), n - 1);
        let after = conserved_quantities(&rt, &pt, &mf);
        prop_assert!((after.energy - direct.energy).abs() <= 1e-10 * direct.energy);
        prop_assert!((after.gradient_energy - direct.gradient_energy).abs() <= 1e-9 * direct.gradient_energy.max(1e-12));
        for (a, b) in mode_energies(&s).iter().zip(mode_energies(&later)) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300);
        }
    }
}

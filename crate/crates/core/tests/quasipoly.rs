mod common;

use std::f64::consts::PI;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use tdstab::quasipoly::*;
use tdstab::{AnalysisConfig, Error, RealMatrix};

fn j(w: f64) -> Complex64 {
    Complex64::new(0.0, w)
}

fn terms(f: &CharacteristicFunction) -> Vec<(Vec<f64>, u32)> {
    f.terms().iter().map(|t| (t.coeffs.0.clone(), t.mult)).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Root of `F(., tau)` reached by Newton from `s0`.
fn track(f: &CharacteristicFunction, s0: Complex64, tau: f64) -> Complex64 {
    let mut s = s0;
    for _ in 0..60 {
        let (v, fs, _) = f.eval_partials(s, tau);
        s -= v / fs;
    }
    s
}

/// Finite-difference direction oracle: sign of the real part after a small delay increase.
fn tracked_sign(f: &CharacteristicFunction, omega: f64, tau: f64) -> i8 {
    let d = 1e-4;
    let after = track(f, j(omega), tau + d);
    let before = track(f, j(omega), tau - d);
    ((after.re - before.re).signum()) as i8
}

#[test]
fn char_function_subsystem5() {
    let f = char_function(&sub5()).unwrap();
    let t = terms(&f);
    assert_eq!(t.len(), 2);
    assert!(close(&t[0].0, &[1.0, -1.0, 1.0], 1e-12) && t[0].1 == 0);
    assert!(close(&t[1].0, &[0.0, -1.0], 1e-12) && t[1].1 == 1);
}

#[test]
fn char_function_subsystem6() {
    let f = char_function(&sub6()).unwrap();
    let t = terms(&f);
    assert!(close(&t[0].0, &[2.0, 0.0, 1.0], 1e-12) && t[0].1 == 0);
    assert!(close(&t[1].0, &[1.0], 1e-12) && t[1].1 == 1);
}

#[test]
fn char_function_without_delay() {
    let sys = TimeDelaySystem::single_delay(a11(), RealMatrix::zeros(2, 2)).unwrap();
    let f = char_function(&sys).unwrap();
    assert_eq!(f.terms().len(), 1);
    assert_eq!(f.max_mult(), 0);
}

#[test]
fn evaluate_examples() {
    let f6 = char_function(&sub6()).unwrap();
    let s = j(3f64.sqrt());
    let tau = 2.0 * PI / 3f64.sqrt();
    assert!(evaluate_cf(&f6, s, tau).norm() <= 1e-12 * f6.scale(s, tau));
    let f5 = char_function(&sub5()).unwrap();
    assert!(evaluate_cf(&f5, j(1.0), PI).norm() <= 1e-12 * f5.scale(j(1.0), PI));
}

#[test]
fn conjugate_symmetry() {
    let mut r = rng(41);
    let fs = [char_function(&sub5()).unwrap(), char_function(&sub9()).unwrap()];
    for k in 0..100 {
        let f = &fs[k % 2];
        let s = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-5.0..5.0));
        let tau = r.gen_range(0.0..5.0);
        let a = evaluate_cf(f, s.conj(), tau);
        let b = evaluate_cf(f, s, tau).conj();
        assert!((a - b).norm() <= 1e-14 * f.scale(s, tau), "{a} vs {b}");
    }
}

#[test]
fn tau_zero_collapse() {
    let mut r = rng(42);
    for _ in 0..5 {
        let sys = random_system(&mut r, 3);
        let f = char_function(&sys).unwrap();
        let sum = sys.matrix_sum();
        for _ in 0..10 {
            let s = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let direct = (DMatrix::<Complex64>::identity(3, 3) * s - sum.map(|x| Complex64::new(x, 0.0))).determinant();
            let v = evaluate_cf(&f, s, 0.0);
            assert!((v - direct).norm() <= 1e-9 * direct.norm().max(1.0), "{v} vs {direct}");
        }
    }
}

#[test]
fn example2_crossings() {
    let (a1, a2) = example2_exact();
    let f = char_function(&TimeDelaySystem::single_delay(a1, a2).unwrap()).unwrap();
    let cps = crossing_sweep(&f, 5.0, 2000).unwrap();
    let omegas: Vec<f64> = cps.iter().map(|c| c.omega).collect();
    assert_eq!(cps.len(), 2, "{omegas:?}");
    assert!((cps[0].omega - 1.0).abs() < 1e-4);
    assert!((cps[0].delay(0) - PI).abs() < 1e-3 && (cps[0].delay(1) - 3.0 * PI).abs() < 1e-3);
    assert!((cps[1].omega - 3f64.sqrt()).abs() < 1e-8);
    assert!(cps[1].delay(0).abs() < 1e-6 && (cps[1].delay(1) - 2.0 * PI / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn hurwitz_without_delay_has_no_crossings() {
    let a = m(&[&[-1.0, 2.0], &[0.0, -3.0]]);
    let sys = TimeDelaySystem::single_delay(a, RealMatrix::zeros(2, 2)).unwrap();
    let f = char_function(&sys).unwrap();
    assert!(crossing_sweep(&f, 10.0, 500).unwrap().is_empty());
    let map = stability_map(&f, &sys, 5.0, &AnalysisConfig::default()).unwrap();
    assert_eq!(map.intervals.len(), 1);
    assert_eq!(map.intervals[0].nu, 0);
    assert_eq!((map.intervals[0].tau_lo, map.intervals[0].tau_hi), (0.0, 5.0));
}

#[test]
fn coarse_grid_rejected() {
    let f = char_function(&sub6()).unwrap();
    assert!(matches!(crossing_sweep(&f, 5.0, 4), Err(Error::GridTooCoarse(_))));
}

#[test]
fn tendency_examples() {
    let (a1, a2) = example2_exact();
    let f = char_function(&TimeDelaySystem::single_delay(a1, a2).unwrap()).unwrap();
    assert_eq!(root_tendency(&f, 1.0, PI).unwrap(), Tendency::Indeterminate);

    let f6 = char_function(&sub6()).unwrap();
    let tau = 2.0 * PI / 3f64.sqrt();
    assert_eq!(root_tendency(&f6, 3f64.sqrt(), tau).unwrap(), Tendency::Destabilizing);
    assert_eq!(tracked_sign(&f6, 3f64.sqrt(), tau), 1);
    assert_eq!(root_tendency(&f6, 1.0, PI).unwrap(), Tendency::Stabilizing);
    assert!(matches!(root_tendency(&f6, 1.3, 1.0), Err(Error::NotACrossing(_))));
}

#[test]
fn w_polynomial_examples() {
    let w5 = w_polynomial(&char_function(&sub5()).unwrap()).unwrap();
    assert!(close(w5.coeffs.coeffs(), &[1.0, -2.0, 1.0], 1e-12));
    assert_eq!(w5.derivative_sign(1.0, 1e-9), WSign::Zero);
    let w6 = w_polynomial(&char_function(&sub6()).unwrap()).unwrap();
    assert!(close(w6.coeffs.coeffs(), &[3.0, -4.0, 1.0], 1e-12));
    assert!((w6.derivative_at(3.0) - 2.0).abs() < 1e-12 && (w6.derivative_at(1.0) + 2.0).abs() < 1e-12);
}

#[test]
fn subsystem6_window() {
    let sys = sub6();
    let f = char_function(&sys).unwrap();
    let map = stability_map(&f, &sys, 4.0, &AnalysisConfig::default()).unwrap();
    assert_eq!(map.nu0, 0);
    let stable = map.stable_intervals();
    let inner: Vec<_> = stable.iter().filter(|iv| iv.0 > 1.0).collect();
    assert_eq!(inner.len(), 1);
    assert!((inner[0].0 - PI).abs() < 1e-6 && (inner[0].1 - 2.0 * PI / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn subsystem9_window() {
    let sys = sub9();
    let f = char_function(&sys).unwrap();
    let map = stability_map(&f, &sys, 4.0, &AnalysisConfig::default()).unwrap();
    let omegas: Vec<f64> = map.crossings.iter().map(|c| c.omega).collect();
    assert!(omegas.iter().any(|w| (w - 1.0).abs() < 1e-6));
    assert!(omegas.iter().any(|w| (w - (1.0 + 2f64.sqrt()).sqrt()).abs() < 1e-6));
    let (nu, wins) = map.min_nu_windows();
    assert_eq!(map.nu0, 3);
    assert_eq!(nu, 1);
    assert_eq!(wins.len(), 1);
    assert!((wins[0].0 - 3.1416).abs() < 1e-3 && (wins[0].1 - 3.3077).abs() < 1e-3);
    let roots = rightmost_roots(&sys, 3.2, 40).unwrap();
    assert_eq!(roots.unstable_count(1e-8), map.nu_at(3.2));
}

#[test]
fn degenerate_full_system_is_reported() {
    let (a1, a2) = example2_exact();
    let sys = TimeDelaySystem::single_delay(a1, a2).unwrap();
    let f = char_function(&sys).unwrap();
    match stability_map(&f, &sys, 4.0, &AnalysisConfig::default()) {
        Err(Error::DegenerateCrossing { omegas }) => assert!(omegas.iter().all(|w| (w - 1.0).abs() < 1e-4)),
        other => panic!("expected a degenerate crossing, got {other:?}"),
    }
}

#[test]
fn rightmost_examples() {
    let neg = m(&[&[-1.0]]);
    let sys = TimeDelaySystem::single_delay(neg, RealMatrix::zeros(1, 1)).unwrap();
    let roots = rightmost_roots(&sys, 1.0, 20).unwrap();
    assert!((roots.roots[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-10);
    assert_eq!(rightmost_roots(&sub5(), 3.2, 40).unwrap().unstable_count(1e-8), 2);
    assert!(rightmost_roots(&sub5(), 3.2, 5).is_err());
}

// seeded random suites

#[test]
fn sweep_matches_grid_oracle() {
    let mut r = rng(43);
    for trial in 0..20 {
        let n = 2 + trial % 2;
        let sys = random_system(&mut r, n);
        let f = char_function(&sys).unwrap();
        let omega_max = default_omega_max(&f);
        let found: Vec<f64> = crossing_sweep(&f, omega_max, 2000)
            .unwrap()
            .iter()
            .filter(|c| c.tendency != Tendency::Indeterminate)
            .map(|c| c.omega)
            .collect();
        let oracle = oracle_crossings(&f, omega_max);
        for w in &oracle {
            assert!(found.iter().any(|x| (x - w).abs() < 1e-4), "trial {trial}: oracle {w} missing from {found:?}");
        }
        for w in &found {
            assert!(oracle.iter().any(|x| (x - w).abs() < 1e-4), "trial {trial}: spurious {w}, oracle {oracle:?}");
        }
    }
}

#[test]
fn crossings_are_w_roots() {
    let mut r = rng(44);
    for _ in 0..10 {
        let sys = random_system(&mut r, 2);
        let f = char_function(&sys).unwrap();
        let w = w_polynomial(&f).unwrap();
        let scale = w.coeffs.max_abs();
        for c in crossing_sweep(&f, default_omega_max(&f), 2000).unwrap() {
            let u = c.omega * c.omega;
            // a root within 1e-6 in u: |W(u)| is at most |W'| * 1e-6 there
            let slack = (w.derivative_at(u).abs() + scale) * 1e-6 * u.max(1.0).powi(w.coeffs.degree() as i32);
            assert!(w.eval(u).abs() <= slack, "W({u}) = {}", w.eval(u));
        }
    }
}

#[test]
fn nu_matches_spectral_count() {
    let mut r = rng(45);
    let cfg = AnalysisConfig::default();
    let mut checked = 0;
    while checked < 20 {
        let n = 2 + checked % 2;
        let sys = random_system(&mut r, n);
        let f = char_function(&sys).unwrap();
        let map = match stability_map(&f, &sys, 5.0, &cfg) {
            Ok(m) => m,
            Err(e) => panic!("random system rejected: {e}"),
        };
        let tau: f64 = r.gen_range(0.05..5.0);
        if map.events.iter().any(|e| (e.tau - tau).abs() < 1e-3) {
            continue;
        }
        let roots = rightmost_roots(&sys, tau, cfg.collocation_nodes).unwrap();
        assert_eq!(roots.unstable_count(1e-8), map.nu_at(tau), "tau = {tau}, events {:?}", map.events);
        checked += 1;
    }
}

#[test]
fn tendency_matches_tracking() {
    let mut r = rng(46);
    let mut checked = 0;
    for k in 0..30 {
        let sys = random_system(&mut r, 2 + k % 2);
        let f = char_function(&sys).unwrap();
        for c in crossing_sweep(&f, default_omega_max(&f), 2000).unwrap() {
            let tau = c.delay(1);
            match c.tendency {
                Tendency::Indeterminate => {}
                t => {
                    assert_eq!(t.as_i8(), tracked_sign(&f, c.omega, tau), "omega {}", c.omega);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 10, "only {checked} crossings");
}

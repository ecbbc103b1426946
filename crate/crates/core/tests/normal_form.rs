use std::sync::Arc;

use torusnf::init::{random_on_shells, rng_from_seed};
use torusnf::normal_form::{gauge, NormalState, NormalStateFile, WeightSchedule};
use torusnf::spectral::{Dim, ModeSet};
use torusnf::verify::{run_criterion, VerifyOptions};

/// `sum_n [[xi]]_{d,n}^2 z^n` is the `t^d` coefficient of
/// `prod_k 1 / (1 - t x_k z^k)` with `x_k = |xi_k|^2`; expanded here as a
/// truncated power series in `(t, z)`.
fn gauge_table(x: &[(u32, f64)], d_max: usize, n_max: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; n_max + 1]; d_max + 1];
    g[0][0] = 1.0;
    for &(k, xk) in x {
        // multiply by the geometric series in t x_k z^k
        let mut next = g.clone();
        for d in 0..=d_max {
            for n in 0..=n_max {
                let mut p = 1.0;
                for a in 1..=d {
                    p *= xk;
                    let shift = a * k as usize;
                    if shift > n {
                        break;
                    }
                    next[d][n] += p * g[d - a][n - shift];
                }
            }
        }
        g = next;
    }
    g
}

#[test]
fn gauges_match_the_generating_function() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let mut rng = rng_from_seed(21);
    let mut xi = NormalState::zeros(Arc::clone(&ms));
    for n in [1u32, 2, 3, 5, 6, 9] {
        xi.set(n, random_on_shells(&ms, &[n], 0.3 + 0.1 * n as f64, &mut rng).unwrap()).unwrap();
    }
    let x: Vec<(u32, f64)> = ms.shells().map(|k| (k, xi.comp_norm(k).powi(2))).collect();
    let table = gauge_table(&x, 5, 12);
    for d in 1..=5u32 {
        for n in 1..=12u32 {
            let want = table[d as usize][n as usize].sqrt();
            let got = gauge(&xi, d, n);
            assert!((got - want).abs() <= 1e-14 * want.max(1e-300), "d = {d}, n = {n}: {got} vs {want}");
        }
    }
    for n in 1..=10 {
        assert_eq!(gauge(&xi, 1, n), xi.comp_norm(n));
    }
}

#[test]
fn weights_stay_finite_as_logarithms() {
    let w = WeightSchedule::standard(10);
    w.validate().unwrap();
    assert_eq!(w.rho(1), 1.0);
    assert!(w.ln_rho(10).unwrap().is_finite());
    assert_eq!(w.rho(10), 0.0);
}

#[test]
fn corrupted_weights_break_the_diagram_criterion() {
    let mut w = WeightSchedule::standard(10);
    w.ln_rho[3] += 1.0;
    assert!(w.validate().is_err());
    let opts = VerifyOptions { weights: Some(w), ..VerifyOptions::default() };
    let rep = run_criterion(6, &opts);
    assert!(!rep.passed);
    assert!(rep.checks.iter().any(|c| !c.passed && c.name.starts_with("weights")));
    let good = run_criterion(6, &VerifyOptions::default());
    assert!(good.passed, "{good:?}");
}

#[test]
fn normal_state_file_round_trip() {
    let ms = ModeSet::shared(Dim::Two, 10).unwrap();
    let mut rng = rng_from_seed(22);
    let mut xi = NormalState::zeros(Arc::clone(&ms));
    for n in [1u32, 4, 5] {
        xi.set(n, random_on_shells(&ms, &[n], 0.1, &mut rng).unwrap()).unwrap();
    }
    let text = serde_json::to_string(&NormalStateFile::from_state(&xi)).unwrap();
    let back: NormalStateFile = serde_json::from_str(&text).unwrap();
    let back = back.to_state().unwrap();
    assert!(back.to_field().max_abs_diff(&xi.to_field()) == 0.0);
    assert_eq!(back.support(), vec![1, 4, 5]);
    // a component off its shell is rejected
    let mut s = NormalState::zeros(Arc::clone(&ms));
    assert!(s.set(2, random_on_shells(&ms, &[1], 0.1, &mut rng).unwrap()).is_err());
}

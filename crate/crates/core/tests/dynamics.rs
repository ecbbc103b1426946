use std::sync::Arc;

use num_complex::Complex64;
use torusnf::exec::Execution;
use torusnf::init::{beltrami, invariant_family, m_perp, random_field, rng_from_seed};
use torusnf::solver::{energy_checks, evolve, EvolveOptions};
use torusnf::spectral::{Dim, ModeSet, SpectralField, WaveVector};

/// Heat flow of the profile: harmonic `j` of `k` decays like `e^{-j^2 |k|^2 t}`.
fn heat(ms: &Arc<ModeSet>, k: WaveVector, profile: &[(i32, Complex64)], t: f64) -> SpectralField {
    let damped: Vec<(i32, Complex64)> =
        profile.iter().map(|&(j, c)| (j, c * (-((j * j) as f64) * k.norm_sq() as f64 * t).exp())).collect();
    invariant_family(ms, k, &damped).unwrap()
}

#[test]
fn invariant_family_follows_the_heat_equation() {
    for (dim, k) in [(Dim::Three, [1, -1, 0]), (Dim::Three, [1, 1, -2]), (Dim::Two, [1, -1, 0])] {
        let ms = ModeSet::shared(dim, 10).unwrap();
        let k = WaveVector::new(k);
        let profile: Vec<(i32, Complex64)> = if k.norm_sq() == 2 {
            vec![(1, Complex64::new(0.5, -0.2)), (2, Complex64::new(0.0, 0.3))]
        } else {
            vec![(1, Complex64::new(0.4, 0.1))]
        };
        let u0 = invariant_family(&ms, k, &profile).unwrap();
        let traj = evolve(&u0, &EvolveOptions::new(1e-3, 1.0, 250)).unwrap();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let gap = u.max_abs_diff(&heat(&ms, k, &profile, *t));
            assert!(gap < 1e-12, "{dim:?} {k:?} t = {t}: {gap}");
        }
    }
}

#[test]
fn beltrami_decays_exactly() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let u0 = beltrami(&ms, 2, -1, 0.5, &mut rng_from_seed(9)).unwrap();
    let traj = evolve(&u0, &EvolveOptions::new(1e-2, 2.0, 50)).unwrap();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        assert!(u.max_abs_diff(&u0.scaled((-2.0 * t).exp())) < 1e-14);
    }
}

#[test]
fn m_perp_keeps_its_structure() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let a = [0, 1, 1];
    let u0 = m_perp(&ms, a, &[2, 3, 5, 6], 0.5, &mut rng_from_seed(10)).unwrap();
    let traj = evolve(&u0, &EvolveOptions::new(1e-2, 2.0, 40)).unwrap();
    let av = WaveVector::new(a);
    let af = av.as_f64();
    for u in &traj.states {
        for (i, amp) in u.amplitudes().iter().enumerate() {
            let k = ms.wave(i);
            let size = amp.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if k.dot(&av) != 0 {
                assert_eq!(size, 0.0, "mode {k:?} off the plane");
                continue;
            }
            // collinear with a: amp x a = 0
            let cross =
                [amp[1] * af[2] - amp[2] * af[1], amp[2] * af[0] - amp[0] * af[2], amp[0] * af[1] - amp[1] * af[0]];
            assert!(cross.iter().all(|c| c.norm() <= 1e-15 * size.max(1e-300)));
        }
    }
}

#[test]
fn fourth_order_in_time() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let u0 = random_field(&ms, 1.0, &mut rng_from_seed(12)).unwrap();
    let end = |dt: f64| evolve(&u0, &EvolveOptions::new(dt, 0.8, 1)).unwrap().states.pop().unwrap();
    let (a, b, c) = (end(0.04), end(0.02), end(0.01));
    let ratio = a.sub(&b).norm_h() / b.sub(&c).norm_h();
    assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
}

#[test]
fn energy_decays_under_the_poincare_bound() {
    for dim in [Dim::Two, Dim::Three] {
        let ms = ModeSet::shared(dim, 8).unwrap();
        let u0 = random_field(&ms, 0.5, &mut rng_from_seed(13)).unwrap();
        let traj = evolve(&u0, &EvolveOptions::new(1e-3, 2.0, 100)).unwrap();
        let r = energy_checks(&traj);
        assert!(r.strictly_decreasing);
        assert!(r.max_poincare_ratio <= 1.0 + 1e-12);
        assert!(r.max_residual < 1e-8, "{dim:?} {}", r.max_residual);
    }
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let u0 = random_field(&ms, 0.3, &mut rng_from_seed(14)).unwrap();
    let run = |exec| {
        let opts = EvolveOptions { exec, ..EvolveOptions::new(1e-2, 0.5, 10) };
        evolve(&u0, &opts).unwrap().states
    };
    let s = run(Execution::Sequential);
    let p = run(Execution::best());
    for (x, y) in s.iter().zip(&p) {
        assert_eq!(x.max_abs_diff(y), 0.0);
    }
}

#[test]
fn rejects_bad_step_parameters() {
    let ms = ModeSet::shared(Dim::Three, 4).unwrap();
    let u0 = random_field(&ms, 0.1, &mut rng_from_seed(15)).unwrap();
    assert!(evolve(&u0, &EvolveOptions::new(0.0, 1.0, 1)).is_err());
    assert!(evolve(&u0, &EvolveOptions::new(0.3, 1.0, 1)).is_err());
    assert!(evolve(&u0, &EvolveOptions::new(0.1, 1.0, 0)).is_err());
}

use proptest::prelude::*;
use torusnf::init::{random_field, rng_from_seed};
use torusnf::spectral::{
    bilinear, leray_project, norm, shell_project, stokes_apply, Dim, GevreyParams, ModeSet, RawField, SpectralField,
};

fn field(dim: Dim, lambda: u32, seed: u64, amp: f64) -> SpectralField {
    let ms = ModeSet::shared(dim, lambda).unwrap();
    random_field(&ms, amp, &mut rng_from_seed(seed)).unwrap()
}

fn dims() -> impl Strategy<Value = Dim> {
    prop_oneof![Just(Dim::Two), Just(Dim::Three)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn advection_is_skew(dim in dims(), lambda in 2u32..9, s1 in any::<u64>(), s2 in any::<u64>(), a in 0.01f64..10.0) {
        let u = field(dim, lambda, s1, a);
        let v = field(dim, lambda, s2, 1.0);
        let b = bilinear(&u, &v).unwrap();
        let scale = b.norm_h() * v.norm_h() + 1e-300;
        prop_assert!(b.inner(&v).abs() <= 1e-13 * scale);
    }

    #[test]
    fn enstrophy_is_conserved_by_2d_advection(lambda in 2u32..12, seed in any::<u64>()) {
        let u = field(Dim::Two, lambda, seed, 1.0);
        let b = bilinear(&u, &u).unwrap();
        let au = stokes_apply(&u);
        prop_assert!(b.inner(&au).abs() <= 1e-13 * b.norm_h() * au.norm_h());
    }

    #[test]
    fn leray_projection_is_idempotent(dim in dims(), lambda in 1u32..8, seed in any::<u64>()) {
        let ms = ModeSet::shared(dim, lambda).unwrap();
        let mut rng = rng_from_seed(seed);
        let mut raw = RawField::zeros(ms.clone());
        let g = random_field(&ms, 1.0, &mut rng).unwrap();
        let h = random_field(&ms, 1.0, &mut rng).unwrap();
        // a divergence-free part plus a gradient part k * c
        for (i, slot) in raw.amp.iter_mut().enumerate() {
            let k = ms.wave(i).as_f64();
            let c = h.amplitudes()[i][0];
            for j in 0..dim.as_usize() {
                slot[j] = g.amplitudes()[i][j] + c * k[j];
            }
        }
        let p = leray_project(&raw);
        prop_assert!(p.max_abs_diff(&g) < 1e-13);
        let mut again = RawField::zeros(ms.clone());
        again.amp.copy_from_slice(p.amplitudes());
        prop_assert!(leray_project(&again).max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn shell_projections_sum_to_identity(dim in dims(), lambda in 1u32..12, seed in any::<u64>()) {
        let u = field(dim, lambda, seed, 1.0);
        let mut sum = SpectralField::zeros(u.modes().clone());
        let mut sq = 0.0;
        for m in u.modes().shells() {
            let r = shell_project(&u, m);
            sq += r.inner(&r);
            sum.axpy(1.0, &r);
        }
        prop_assert!(sum.max_abs_diff(&u) == 0.0);
        prop_assert!((sq - u.inner(&u)).abs() < 1e-13);
        prop_assert!(shell_project(&u, 7).is_zero());
    }

    #[test]
    fn gevrey_norm_is_monotone(seed in any::<u64>(), a1 in 0.0f64..2.0, da in 0.0f64..1.0, s1 in 0.0f64..1.0, ds in 0.0f64..1.0) {
        let u = field(Dim::Three, 10, seed, 1.0);
        let base = norm(&u, GevreyParams::new(a1, s1).unwrap());
        let more_alpha = norm(&u, GevreyParams::new(a1 + da, s1).unwrap());
        let more_sigma = norm(&u, GevreyParams::new(a1, s1 + ds).unwrap());
        prop_assert!(more_alpha >= base * (1.0 - 1e-15));
        prop_assert!(more_sigma >= base * (1.0 - 1e-15));
        prop_assert!((norm(&u, GevreyParams::new(0.0, 0.0).unwrap()) - u.norm_h()).abs() < 1e-15);
        prop_assert!((norm(&u, GevreyParams::new(0.5, 0.0).unwrap()) - u.norm_v()).abs() < 1e-14);
    }
}

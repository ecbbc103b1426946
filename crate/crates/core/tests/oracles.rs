//! Checks of the spectral kernels against physical-space computations and
//! closed forms.

use std::sync::Arc;

use num_complex::Complex64;
use torusnf::init::{beltrami, invariant_family, random_field, rng_from_seed};
use torusnf::spectral::{bilinear, curl, stokes_apply, Dim, ModeSet, SpectralField, WaveVector};

const GRID: usize = 16;

fn full_modes(u: &SpectralField) -> Vec<(WaveVector, [Complex64; 3])> {
    let mut out = Vec::new();
    for k in u.modes().waves() {
        out.push((*k, u.amplitude(k)));
        out.push((k.neg(), u.amplitude(&k.neg())));
    }
    out
}

fn grid_points(dim: Dim) -> Vec<[f64; 3]> {
    let h = 2.0 * std::f64::consts::PI / GRID as f64;
    let nz = if dim == Dim::Three { GRID } else { 1 };
    let mut pts = Vec::new();
    for a in 0..GRID {
        for b in 0..GRID {
            for c in 0..nz {
                pts.push([a as f64 * h, b as f64 * h, c as f64 * h]);
            }
        }
    }
    pts
}

fn phase(k: &WaveVector, x: &[f64; 3]) -> Complex64 {
    let kf = k.as_f64();
    Complex64::from_polar(1.0, kf[0] * x[0] + kf[1] * x[1] + kf[2] * x[2])
}

/// `P[(u . grad) v]` by evaluating on a grid fine enough to be alias-free,
/// then transforming back mode by mode.
fn collocated_b(u: &SpectralField, v: &SpectralField) -> Vec<(WaveVector, [Complex64; 3])> {
    let fu = full_modes(u);
    let fv = full_modes(v);
    let pts = grid_points(u.dim());
    let w: Vec<[f64; 3]> = pts
        .iter()
        .map(|x| {
            let mut uu = [0.0; 3];
            for (k, a) in &fu {
                let e = phase(k, x);
                for c in 0..3 {
                    uu[c] += (a[c] * e).re;
                }
            }
            let mut out = [0.0; 3];
            for (k, b) in &fv {
                let e = phase(k, x);
                let kf = k.as_f64();
                let d = Complex64::new(0.0, uu[0] * kf[0] + uu[1] * kf[1] + uu[2] * kf[2]) * e;
                for c in 0..3 {
                    out[c] += (d * b[c]).re;
                }
            }
            out
        })
        .collect();
    u.modes()
        .waves()
        .iter()
        .map(|k| {
            let mut h = [Complex64::new(0.0, 0.0); 3];
            for (x, wx) in pts.iter().zip(&w) {
                let e = phase(k, x).conj();
                for c in 0..3 {
                    h[c] += e * wx[c];
                }
            }
            let n = pts.len() as f64;
            let kf = k.as_f64();
            let kk = k.norm_sq() as f64;
            let dot = (h[0] * kf[0] + h[1] * kf[1] + h[2] * kf[2]) / n;
            let p = [h[0] / n - dot * kf[0] / kk, h[1] / n - dot * kf[1] / kk, h[2] / n - dot * kf[2] / kk];
            (*k, p)
        })
        .collect()
}

fn max_gap(b: &SpectralField, oracle: &[(WaveVector, [Complex64; 3])]) -> f64 {
    oracle
        .iter()
        .map(|(k, p)| {
            let a = b.amplitude(k);
            (0..3).map(|c| (a[c] - p[c]).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn bilinear_matches_collocation_3d() {
    let ms = ModeSet::shared(Dim::Three, 5).unwrap();
    let mut rng = rng_from_seed(71);
    let u = random_field(&ms, 1.0, &mut rng).unwrap();
    let v = random_field(&ms, 1.0, &mut rng).unwrap();
    let gap = max_gap(&bilinear(&u, &v).unwrap(), &collocated_b(&u, &v));
    assert!(gap < 1e-13, "{gap}");
}

#[test]
fn bilinear_matches_collocation_2d() {
    let ms = ModeSet::shared(Dim::Two, 8).unwrap();
    let mut rng = rng_from_seed(72);
    let u = random_field(&ms, 1.0, &mut rng).unwrap();
    let v = random_field(&ms, 1.0, &mut rng).unwrap();
    let gap = max_gap(&bilinear(&u, &v).unwrap(), &collocated_b(&u, &v));
    assert!(gap < 1e-13, "{gap}");
}

#[test]
fn curl_identities() {
    let ms = ModeSet::shared(Dim::Three, 6).unwrap();
    let mut rng = rng_from_seed(73);
    let u = random_field(&ms, 1.0, &mut rng).unwrap();
    let v = random_field(&ms, 1.0, &mut rng).unwrap();
    // curl curl = -Laplacian on divergence-free fields
    let cc = curl(&curl(&u).unwrap()).unwrap();
    assert!(cc.max_abs_diff(&stokes_apply(&u)) < 1e-13);
    // curl is symmetric for the L2 inner product
    let lhs = curl(&u).unwrap().inner(&v);
    let rhs = u.inner(&curl(&v).unwrap());
    assert!((lhs - rhs).abs() < 1e-13, "{lhs} {rhs}");
    assert!(curl(&SpectralField::zeros(ModeSet::shared(Dim::Two, 3).unwrap())).is_err());
}

#[test]
fn beltrami_fields_have_no_nonlinearity() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    for (shell, sign) in [(1, 1), (2, -1), (3, 1), (5, -1)] {
        let u = beltrami(&ms, shell, sign, 1.0, &mut rng_from_seed(shell as u64)).unwrap();
        let w = curl(&u).unwrap();
        assert!(w.max_abs_diff(&u.scaled(sign as f64 * (shell as f64).sqrt())) < 1e-14);
        let b = bilinear(&u, &u).unwrap();
        assert!(b.norm_h() < 1e-14, "shell {shell}: {}", b.norm_h());
    }
}

#[test]
fn invariant_family_has_no_nonlinearity() {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let k = WaveVector::new([1, -1, 0]);
    let profile = [(1, Complex64::new(0.3, -0.1)), (2, Complex64::new(0.0, 0.2))];
    let u = invariant_family(&ms, k, &profile).unwrap();
    assert!(bilinear(&u, &u).unwrap().norm_h() < 1e-15);
    let fv = Arc::clone(u.modes());
    assert!(invariant_family(&fv, WaveVector::new([1, 1, 0]), &profile).is_err());
}

//! Initial-data constructors: random small fields, curl eigenfields,
//! the heat-flow invariant family `(phi(k.x), ..., phi(k.x))` and the
//! directional manifolds `M_{a-perp}`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::{leray_project, Cvec, Dim, ModeSet, RawField, SpectralField, WaveVector};

/// Deterministic generator used for every seeded construction.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss_c<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn rescale(u: SpectralField, amplitude: f64) -> Result<SpectralField> {
    let n = u.norm_h();
    if n == 0.0 {
        return Err(Error::validation("constructed field is identically zero"));
    }
    Ok(u.scaled(amplitude / n))
}

/// i.i.d. complex Gaussian amplitudes on the modes accepted by `keep`,
/// Leray-projected and rescaled to `|u| = amplitude`.
pub fn random_field_where<R: Rng>(
    modes: &Arc<ModeSet>,
    amplitude: f64,
    rng: &mut R,
    keep: impl Fn(usize) -> bool,
) -> Result<SpectralField> {
    let mut raw = RawField::zeros(Arc::clone(modes));
    let n = modes.dim().as_usize();
    for (i, a) in raw.amp.iter_mut().enumerate() {
        // draw unconditionally so the stream does not depend on `keep`
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for c in v.iter_mut().take(n) {
            *c = gauss_c(rng);
        }
        if keep(i) {
            *a = v;
        }
    }
    rescale(leray_project(&raw), amplitude)
}

/// Random field over every stored mode.
pub fn random_field<R: Rng>(modes: &Arc<ModeSet>, amplitude: f64, rng: &mut R) -> Result<SpectralField> {
    random_field_where(modes, amplitude, rng, |_| true)
}

/// Random field supported on the listed shells.
pub fn random_on_shells<R: Rng>(
    modes: &Arc<ModeSet>,
    shells: &[u32],
    amplitude: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    random_field_where(modes, amplitude, rng, |i| shells.contains(&modes.shell_of(i)))
}

/// Real orthonormal pair `(e1, e2)` spanning the plane orthogonal to `k`,
/// oriented so that `e1 x e2 = k / |k|`.
pub fn fiber_basis(k: &WaveVector) -> ([f64; 3], [f64; 3]) {
    let kf = k.as_f64();
    let kn = (k.norm_sq() as f64).sqrt();
    let kh = [kf[0] / kn, kf[1] / kn, kf[2] / kn];
    let axis = (0..3).min_by(|&a, &b| kf[a].abs().partial_cmp(&kf[b].abs()).unwrap().then(a.cmp(&b))).unwrap();
    let mut c = [0.0; 3];
    c[axis] = 1.0;
    let e1 = normalize(cross(&kh, &c));
    let e2 = cross(&kh, &e1);
    (e1, e2)
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Unit helical vector with `i k x h = sign |k| h`.
pub fn helical_vector(k: &WaveVector, sign: i32) -> Cvec {
    let (e1, e2) = fiber_basis(k);
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::new(e1[0] * r, s * e2[0] * r),
        Complex64::new(e1[1] * r, s * e2[1] * r),
        Complex64::new(e1[2] * r, s * e2[2] * r),
    ]
}

/// Curl eigenfield on shell `m`: `curl u = sign sqrt(m) u`, random complex
/// weights per mode, `|u| = amplitude`.
pub fn beltrami<R: Rng>(
    modes: &Arc<ModeSet>,
    shell: u32,
    sign: i32,
    amplitude: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    if modes.dim() != Dim::Three {
        return Err(Error::validation("Beltrami fields require dim = 3"));
    }
    beltrami_where(modes, shell, sign, amplitude, rng, |_| true)
}

/// Curl eigenfield restricted to the modes accepted by `keep`.
pub fn beltrami_where<R: Rng>(
    modes: &Arc<ModeSet>,
    shell: u32,
    sign: i32,
    amplitude: f64,
    rng: &mut R,
    keep: impl Fn(&WaveVector) -> bool,
) -> Result<SpectralField> {
    let range = modes
        .shell_range(shell)
        .ok_or_else(|| Error::validation(format!("shell {shell} is not in the truncated spectrum")))?;
    let mut entries = Vec::new();
    for i in range {
        let k = modes.wave(i);
        let w = gauss_c(rng);
        if !keep(&k) {
            continue;
        }
        let h = helical_vector(&k, sign);
        entries.push((k, [h[0] * w, h[1] * w, h[2] * w]));
    }
    rescale(SpectralField::from_modes(Arc::clone(modes), &entries)?, amplitude)
}

/// Invariant family `u = (phi(k.x), ..., phi(k.x))` with `sum k_i = 0` and
/// `phi(y) = sum_j profile_j e^{i j y} + c.c.`; `profile` lists `(j, phi_j)`,
/// `j >= 1`. Harmonics beyond `lambda_max` are rejected.
pub fn invariant_family(modes: &Arc<ModeSet>, k: WaveVector, profile: &[(i32, Complex64)]) -> Result<SpectralField> {
    let n = modes.dim().as_usize();
    if k.is_zero() {
        return Err(Error::validation("invariant family needs a nonzero k"));
    }
    if k.0.iter().sum::<i32>() != 0 {
        return Err(Error::validation(format!("invariant family needs k_1 + ... + k_n = 0, got {:?}", &k.0[..n])));
    }
    let mut entries = Vec::new();
    for &(j, phi) in profile {
        if j < 1 {
            return Err(Error::validation("profile harmonics must be >= 1"));
        }
        let kj = k.scale(j);
        if kj.norm_sq() > modes.lambda_max() {
            return Err(Error::validation(format!("harmonic {j} of k lies beyond lambda_max")));
        }
        let mut a = [Complex64::new(0.0, 0.0); 3];
        for c in a.iter_mut().take(n) {
            *c = phi;
        }
        entries.push((kj, a));
    }
    SpectralField::from_modes(Arc::clone(modes), &entries)
}

/// Random element of `M_{a-perp}`: modes `k . a = 0` on the listed shells,
/// amplitudes complex multiples of `a`.
pub fn m_perp<R: Rng>(
    modes: &Arc<ModeSet>,
    a: [i32; 3],
    shells: &[u32],
    amplitude: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    if modes.dim() != Dim::Three {
        return Err(Error::validation("M_{a-perp} data require dim = 3"));
    }
    let av = WaveVector(a);
    if av.is_zero() {
        return Err(Error::validation("direction a must be nonzero"));
    }
    let af = av.as_f64();
    let mut entries = Vec::new();
    for (i, k) in modes.waves().iter().enumerate() {
        let w = gauss_c(rng);
        if k.dot(&av) == 0 && shells.contains(&modes.shell_of(i)) {
            entries.push((*k, [w * af[0], w * af[1], w * af[2]]));
        }
    }
    if entries.is_empty() {
        return Err(Error::validation("no stored mode is orthogonal to a on the requested shells"));
    }
    rescale(SpectralField::from_modes(Arc::clone(modes), &entries)?, amplitude)
}

/// Shell-`m` mixture `cos(theta) u_+ + sin(theta) u_-` of unit curl
/// eigenfields with `H / |u|^2 = alpha` (requires `|alpha| <= sqrt(m)`).
/// The two signs live on disjoint halves of the shell.
pub fn helicity_mixture<R: Rng>(
    modes: &Arc<ModeSet>,
    shell: u32,
    alpha: f64,
    amplitude: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    let root = (shell as f64).sqrt();
    if alpha.abs() > root {
        return Err(Error::validation(format!("alpha {alpha} outside [-sqrt({shell}), sqrt({shell})]")));
    }
    let range = modes
        .shell_range(shell)
        .ok_or_else(|| Error::validation(format!("shell {shell} is not in the truncated spectrum")))?;
    if range.len() < 2 {
        return Err(Error::validation("helicity mixture needs at least two modes on the shell"));
    }
    let first = modes.wave(range.start);
    let second = modes.wave(range.start + 1);
    let plus = beltrami_where(modes, shell, 1, 1.0, rng, |k| *k == first)?;
    let minus = beltrami_where(modes, shell, -1, 1.0, rng, |k| *k == second)?;
    let theta = 0.5 * (alpha / root).acos();
    let mut u = plus.scaled(theta.cos());
    u.axpy(theta.sin(), &minus);
    Ok(u.scaled(amplitude / u.norm_h()))
}

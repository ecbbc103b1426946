use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{conj_vec, vec_norm_sq, Cvec, RawField, ScalarField, SpectralField};
use super::modes::Dim;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gevrey class parameters: weight `|k|^{2 alpha} e^{sigma |k|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl GevreyParams {
    pub const H: GevreyParams = GevreyParams { alpha: 0.0, sigma: 0.0 };
    pub const V: GevreyParams = GevreyParams { alpha: 0.5, sigma: 0.0 };

    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha >= 0.0 && sigma >= 0.0 && alpha.is_finite() && sigma.is_finite()) {
            return Err(Error::validation(format!(
                "Gevrey parameters must be finite and >= 0 (alpha {alpha}, sigma {sigma})"
            )));
        }
        Ok(GevreyParams { alpha, sigma })
    }
}

/// `A u` (mode-wise multiplication by `|k|^2`).
pub fn stokes_apply(u: &SpectralField) -> SpectralField {
    let modes = Arc::clone(u.modes());
    u.weighted(|i| modes.shell_of(i) as f64)
}

/// `A^alpha u` (mode-wise `|k|^{2 alpha}`).
pub fn stokes_power(u: &SpectralField, alpha: f64) -> SpectralField {
    let modes = Arc::clone(u.modes());
    u.weighted(|i| (modes.shell_of(i) as f64).powf(alpha))
}

fn project_fiber(k: [f64; 3], k2: f64, v: &Cvec) -> Cvec {
    let kv = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
    let s = kv / k2;
    [v[0] - s * k[0], v[1] - s * k[1], v[2] - s * k[2]]
}

/// Leray projection `v(k) - k (k . v(k)) / |k|^2`.
pub fn leray_project(v: &RawField) -> SpectralField {
    let modes = Arc::clone(&v.modes);
    let amp = v
        .amp
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = modes.wave(i);
            let mut p = project_fiber(k.as_f64(), k.norm_sq() as f64, a);
            if modes.dim() == Dim::Two {
                p[2] = Complex64::new(0.0, 0.0);
            }
            p
        })
        .collect();
    SpectralField::from_parts(modes, amp)
}

/// Galerkin-truncated `B(u, v) = P[(u . grad) v]` by direct convolution.
pub fn bilinear(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    bilinear_with(Execution::Sequential, u, v)
}

/// `bilinear` with an explicit execution strategy over the output modes.
pub fn bilinear_with(exec: Execution, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.check_same_space(v)?;
    let modes = Arc::clone(u.modes());
    let ua = u.amplitudes();
    let va = v.amplitudes();
    let out_mode = |o: usize| -> Cvec {
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for t in modes.triads_for(o) {
            let a = if t.a_conj { conj_vec(&ua[t.a as usize]) } else { ua[t.a as usize] };
            let b = if t.b_conj { conj_vec(&va[t.b as usize]) } else { va[t.b as usize] };
            let adv = (a[0] * t.kb[0] + a[1] * t.kb[1] + a[2] * t.kb[2]) * I;
            acc[0] += adv * b[0];
            acc[1] += adv * b[1];
            acc[2] += adv * b[2];
        }
        let k = modes.wave(o);
        project_fiber(k.as_f64(), k.norm_sq() as f64, &acc)
    };
    let amp = map_indexed(exec, modes.len(), out_mode);
    Ok(SpectralField::from_parts(modes, amp))
}

/// Eigen-shell projection `R_m`; zero when `m` is not a stored shell.
pub fn shell_project(u: &SpectralField, m: u32) -> SpectralField {
    match u.modes().shell_range(m) {
        Some(r) => u.restricted(|i| r.contains(&i)),
        None => SpectralField::zeros(Arc::clone(u.modes())),
    }
}

/// Gevrey norm `|A^alpha e^{sigma A^{1/2}} u|`; `(0,0)` is `|u|`, `(1/2,0)` is `||u||`.
pub fn norm(u: &SpectralField, p: GevreyParams) -> f64 {
    let modes = u.modes();
    u.amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k2 = modes.shell_of(i) as f64;
            let w = k2.powf(2.0 * p.alpha) * (2.0 * p.sigma * k2.sqrt()).exp();
            w * vec_norm_sq(a)
        })
        .sum::<f64>()
        .sqrt()
}

/// `curl u` mode-wise `i k x u(k)` (3D only).
pub fn curl(u: &SpectralField) -> Result<SpectralField> {
    if u.dim() != Dim::Three {
        return Err(Error::validation("curl returns a vector field only in 3D; use vorticity_2d"));
    }
    let modes = Arc::clone(u.modes());
    let amp = u
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = modes.wave(i).as_f64();
            [I * (a[2] * k[1] - a[1] * k[2]), I * (a[0] * k[2] - a[2] * k[0]), I * (a[1] * k[0] - a[0] * k[1])]
        })
        .collect();
    Ok(SpectralField::from_parts(modes, amp))
}

/// Scalar vorticity `i (k_1 u_2 - k_2 u_1)` of a 2D field.
pub fn vorticity_2d(u: &SpectralField) -> Result<ScalarField> {
    if u.dim() != Dim::Two {
        return Err(Error::validation("scalar vorticity is defined for 2D fields"));
    }
    let modes = Arc::clone(u.modes());
    let amp = u
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = modes.wave(i).as_f64();
            I * (a[1] * k[0] - a[0] * k[1])
        })
        .collect();
    Ok(ScalarField { modes, amp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ModeSet, WaveVector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z() -> Complex64 {
        c(0.0, 0.0)
    }

    #[test]
    fn stokes_examples() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let u = SpectralField::from_modes(
            Arc::clone(&ms),
            &[
                (WaveVector([1, 0, 0]), [z(), c(1.0, 0.0), z()]),
                (WaveVector([1, 1, 0]), [c(1.0, 0.0), c(-1.0, 0.0), z()]),
            ],
        )
        .unwrap();
        let au = stokes_apply(&u);
        assert_eq!(au.amplitude(&WaveVector([1, 0, 0])), [z(), c(1.0, 0.0), z()]);
        assert_eq!(au.amplitude(&WaveVector([1, 1, 0])), [c(2.0, 0.0), c(-2.0, 0.0), z()]);
        let s4 =
            SpectralField::from_modes(Arc::clone(&ms), &[(WaveVector([0, 2, 0]), [c(3.0, 0.0), z(), z()])]).unwrap();
        let h = stokes_power(&s4, 0.5);
        assert_eq!(h.amplitude(&WaveVector([0, 2, 0]))[0], c(6.0, 0.0));
    }

    #[test]
    fn leray_examples() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let mut raw = RawField::zeros(Arc::clone(&ms));
        let (i, _) = ms.find(&WaveVector([1, 1, 0])).unwrap();
        raw.amp[i] = [c(1.0, 0.0), c(1.0, 0.0), z()];
        assert!(leray_project(&raw).is_zero());

        let mut raw = RawField::zeros(Arc::clone(&ms));
        let (j, _) = ms.find(&WaveVector([1, 0, 0])).unwrap();
        raw.amp[j] = [c(1.0, 0.0), c(1.0, 0.0), z()];
        let p = leray_project(&raw);
        assert_eq!(p.amplitude(&WaveVector([1, 0, 0])), [z(), c(1.0, 0.0), z()]);
    }

    #[test]
    fn shell_projection_examples() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let u = SpectralField::from_modes(
            Arc::clone(&ms),
            &[
                (WaveVector([0, 0, 1]), [c(1.0, 0.0), z(), z()]),
                (WaveVector([1, 1, 0]), [c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]),
            ],
        )
        .unwrap();
        let r1 = shell_project(&u, 1);
        assert_eq!(shell_project(&r1, 1), r1);
        assert!(shell_project(&u, 7).is_zero());
        let r2 = shell_project(&u, 2);
        assert_eq!(r2.amplitude(&WaveVector([0, 0, 1])), [z(); 3]);
        assert_eq!(r2.amplitude(&WaveVector([1, 1, 0])), u.amplitude(&WaveVector([1, 1, 0])));
    }

    #[test]
    fn norm_examples() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let u =
            SpectralField::from_modes(Arc::clone(&ms), &[(WaveVector([1, 0, 0]), [z(), c(1.0, 0.0), z()])]).unwrap();
        assert!((norm(&u, GevreyParams::H) - 1.0).abs() < 1e-15);
        assert!((norm(&u, GevreyParams::new(1.0, 0.0).unwrap()) - 1.0).abs() < 1e-15);
        assert!((norm(&u, GevreyParams::new(0.0, 2f64.ln()).unwrap()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn curl_unit_examples() {
        let ms = ModeSet::shared(Dim::Three, 4).unwrap();
        let u = SpectralField::from_modes(Arc::clone(&ms), &[(WaveVector([0, 0, 1]), [c(1.0, 0.0), c(0.0, 1.0), z()])])
            .unwrap();
        let w = curl(&u).unwrap();
        // i e3 x (1, i, 0) = i (-i, 1, 0) = (1, i, 0)
        assert_eq!(w.amplitude(&WaveVector([0, 0, 1])), [c(1.0, 0.0), c(0.0, 1.0), z()]);
        assert!(curl(&SpectralField::zeros(ms)).unwrap().is_zero());
        let two = ModeSet::shared(Dim::Two, 4).unwrap();
        assert!(curl(&SpectralField::zeros(two)).is_err());
    }

    #[test]
    fn bilinear_space_mismatch() {
        let a = SpectralField::zeros(ModeSet::shared(Dim::Three, 4).unwrap());
        let b = SpectralField::zeros(ModeSet::shared(Dim::Three, 5).unwrap());
        assert!(bilinear(&a, &b).is_err());
    }
}

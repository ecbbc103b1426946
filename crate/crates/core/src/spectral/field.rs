use std::sync::Arc;

use num_complex::Complex64;

use super::modes::{Dim, ModeSet, WaveVector};
use crate::error::{Error, Result};

/// Complex 3-vector amplitude; the third component is zero in 2D.
pub type Cvec = [Complex64; 3];

const ZERO: Cvec = [Complex64::new(0.0, 0.0); 3];

/// Relative tolerance for the incompressibility check on externally supplied
/// amplitudes.
const DIV_TOL: f64 = 1e-10;

/// Unconstrained Fourier vector field on the stored half-space (input of the
/// Leray projection).
#[derive(Clone, Debug)]
pub struct RawField {
    pub modes: Arc<ModeSet>,
    pub amp: Vec<Cvec>,
}

impl RawField {
    pub fn zeros(modes: Arc<ModeSet>) -> Self {
        let n = modes.len();
        RawField { modes, amp: vec![ZERO; n] }
    }
}

/// Divergence-free, zero-mean truncated Fourier field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    modes: Arc<ModeSet>,
    amp: Vec<Cvec>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.modes.same_space(&other.modes) && self.amp == other.amp
    }
}

impl SpectralField {
    pub fn zeros(modes: Arc<ModeSet>) -> Self {
        let n = modes.len();
        SpectralField { modes, amp: vec![ZERO; n] }
    }

    /// Build from amplitudes that are already known to satisfy the invariants.
    pub(crate) fn from_parts(modes: Arc<ModeSet>, amp: Vec<Cvec>) -> Self {
        debug_assert_eq!(modes.len(), amp.len());
        SpectralField { modes, amp }
    }

    /// Checked constructor: every listed wave vector must be a stored
    /// representative; amplitudes must be finite and divergence-free.
    pub fn from_modes(modes: Arc<ModeSet>, entries: &[(WaveVector, Cvec)]) -> Result<Self> {
        let mut f = SpectralField::zeros(Arc::clone(&modes));
        for (k, a) in entries {
            f.set_checked(k, *a)?;
        }
        Ok(f)
    }

    /// Set the amplitude of mode `k`. A non-canonical `k` stores the
    /// conjugate on its representative.
    pub fn set_checked(&mut self, k: &WaveVector, a: Cvec) -> Result<()> {
        let (idx, conj) = self
            .modes
            .find(k)
            .ok_or_else(|| Error::validation(format!("wave vector {:?} is not a stored mode", k.0)))?;
        let a = if conj { conj_vec(&a) } else { a };
        validate_amplitude(self.modes.dim(), &self.modes.wave(idx), &a)?;
        self.amp[idx] = a;
        Ok(())
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn dim(&self) -> Dim {
        self.modes.dim()
    }

    pub fn lambda_max(&self) -> u32 {
        self.modes.lambda_max()
    }

    pub fn amplitudes(&self) -> &[Cvec] {
        &self.amp
    }

    /// Amplitude at any wave vector (conjugated for `-k`, zero if absent).
    pub fn amplitude(&self, k: &WaveVector) -> Cvec {
        match self.modes.find(k) {
            Some((i, false)) => self.amp[i],
            Some((i, true)) => conj_vec(&self.amp[i]),
            None => ZERO,
        }
    }

    pub fn same_space(&self, other: &SpectralField) -> bool {
        self.modes.same_space(&other.modes)
    }

    pub fn check_same_space(&self, other: &SpectralField) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "field spaces differ: (dim {:?}, lambda_max {}) vs (dim {:?}, lambda_max {})",
                self.dim(),
                self.lambda_max(),
                other.dim(),
                other.lambda_max()
            )))
        }
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        self.map(|a| [a[0] * s, a[1] * s, a[2] * s])
    }

    pub fn scaled_c(&self, s: Complex64) -> SpectralField {
        self.map(|a| [a[0] * s, a[1] * s, a[2] * s])
    }

    fn map(&self, f: impl Fn(&Cvec) -> Cvec) -> SpectralField {
        SpectralField { modes: Arc::clone(&self.modes), amp: self.amp.iter().map(f).collect() }
    }

    /// Mode-wise multiplication by a real weight depending on the mode index.
    pub fn weighted(&self, w: impl Fn(usize) -> f64) -> SpectralField {
        let amp = self
            .amp
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let s = w(i);
                [a[0] * s, a[1] * s, a[2] * s]
            })
            .collect();
        SpectralField { modes: Arc::clone(&self.modes), amp }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert!(self.same_space(other));
        for (a, b) in self.amp.iter_mut().zip(&other.amp) {
            for c in 0..3 {
                a[c] += b[c] * s;
            }
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Half-space inner product `Re sum u(k) . conj(v(k))`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.same_space(other));
        self.amp.iter().zip(&other.amp).map(|(a, b)| (0..3).map(|c| (a[c] * b[c].conj()).re).sum::<f64>()).sum()
    }

    /// H norm `|u|`.
    pub fn norm_h(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// V norm `||u|| = |A^{1/2} u|`.
    pub fn norm_v(&self) -> f64 {
        self.amp.iter().enumerate().map(|(i, a)| self.modes.shell_of(i) as f64 * vec_norm_sq(a)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.amp.iter().all(|a| a.iter().all(|c| c.re == 0.0 && c.im == 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.amp.iter().all(|a| a.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    /// Largest component-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.amp.iter().zip(&other.amp).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).norm())).fold(0.0, f64::max)
    }

    /// Shells carrying nonzero amplitude.
    pub fn support_shells(&self) -> Vec<u32> {
        self.modes
            .shells()
            .filter(|&m| {
                let r = self.modes.shell_range(m).unwrap();
                self.amp[r].iter().any(|a| vec_norm_sq(a) > 0.0)
            })
            .collect()
    }

    /// Flatten to real coordinates `(re, im)` of every component, mode-major.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let n = self.dim().as_usize();
        let mut out = Vec::with_capacity(self.amp.len() * n * 2);
        for a in &self.amp {
            for c in a.iter().take(n) {
                out.push(c.re);
                out.push(c.im);
            }
        }
        out
    }

    /// Set the whole field to zero except the given mode range.
    pub(crate) fn restricted(&self, keep: impl Fn(usize) -> bool) -> SpectralField {
        let amp = self.amp.iter().enumerate().map(|(i, a)| if keep(i) { *a } else { ZERO }).collect();
        SpectralField { modes: Arc::clone(&self.modes), amp }
    }
}

/// Scalar Fourier field (2D vorticity), same half-space storage.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub modes: Arc<ModeSet>,
    pub amp: Vec<Complex64>,
}

impl ScalarField {
    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn conj_vec(a: &Cvec) -> Cvec {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

pub(crate) fn vec_norm_sq(a: &Cvec) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

pub(crate) fn validate_amplitude(dim: Dim, k: &WaveVector, a: &Cvec) -> Result<()> {
    if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::validation(format!("non-finite amplitude at {:?}", k.0)));
    }
    if dim == Dim::Two && a[2] != Complex64::new(0.0, 0.0) {
        return Err(Error::validation(format!("2D field has third component at {:?}", k.0)));
    }
    let kf = k.as_f64();
    let div = a[0] * kf[0] + a[1] * kf[1] + a[2] * kf[2];
    let scale = vec_norm_sq(a).sqrt() * (k.norm_sq() as f64).sqrt();
    if div.norm() > DIV_TOL * scale.max(f64::MIN_POSITIVE) && div.norm() > 0.0 {
        return Err(Error::validation(format!(
            "amplitude at {:?} is not divergence-free (|k.u| = {:.3e})",
            k.0,
            div.norm()
        )));
    }
    Ok(())
}

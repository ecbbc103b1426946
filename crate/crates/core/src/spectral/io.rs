use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{Cvec, SpectralField};
use super::modes::{Dim, ModeSet, WaveVector};
use crate::error::{Error, Result};

/// On-disk form of a [`SpectralField`]: half-space representatives only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub dim: usize,
    pub lambda_max: u32,
    pub modes: Vec<ModeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: Vec<i32>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FieldFile {
    /// Nonzero modes of `u`, in storage order.
    pub fn from_field(u: &SpectralField) -> FieldFile {
        let n = u.dim().as_usize();
        let modes = u
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.iter().any(|c| c.re != 0.0 || c.im != 0.0))
            .map(|(i, a)| ModeEntry {
                k: u.modes().wave(i).0[..n].to_vec(),
                re: a[..n].iter().map(|c| c.re).collect(),
                im: a[..n].iter().map(|c| c.im).collect(),
            })
            .collect();
        FieldFile { dim: n, lambda_max: u.lambda_max(), modes }
    }

    /// Validate every invariant and build the field.
    pub fn to_field(&self) -> Result<SpectralField> {
        let dim = Dim::from_usize(self.dim)?;
        let ms = ModeSet::shared(dim, self.lambda_max)?;
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(self.modes.len());
        for m in &self.modes {
            if m.k.len() != self.dim || m.re.len() != self.dim || m.im.len() != self.dim {
                return Err(Error::validation(format!("mode {:?}: arrays must have length {}", m.k, self.dim)));
            }
            let mut k = [0i32; 3];
            k[..self.dim].copy_from_slice(&m.k);
            let k = WaveVector(k);
            if k.is_zero() {
                return Err(Error::validation("zero wave vector (mean mode) is not allowed"));
            }
            if !k.is_canonical() {
                return Err(Error::validation(format!("wave vector {:?} is not a half-space representative", m.k)));
            }
            if k.norm_sq() > self.lambda_max {
                return Err(Error::validation(format!("wave vector {:?} exceeds lambda_max {}", m.k, self.lambda_max)));
            }
            if !seen.insert(k) {
                return Err(Error::validation(format!("duplicate wave vector {:?}", m.k)));
            }
            let mut a: Cvec = [Complex64::new(0.0, 0.0); 3];
            for c in 0..self.dim {
                a[c] = Complex64::new(m.re[c], m.im[c]);
            }
            entries.push((k, a));
        }
        SpectralField::from_modes(ms, &entries)
    }

    pub fn read(path: &Path) -> Result<SpectralField> {
        let text = std::fs::read_to_string(path)?;
        let f: FieldFile = serde_json::from_str(&text)?;
        f.to_field()
    }

    pub fn write(u: &SpectralField, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&FieldFile::from_field(u))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

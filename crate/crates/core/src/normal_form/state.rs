use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{shell_project, stokes_power, FieldFile, ModeSet, SpectralField};

/// Truncated element of `S_A`: one field per eigen-shell, component `n`
/// supported on `|k|^2 = n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalState {
    modes: Arc<ModeSet>,
    comps: BTreeMap<u32, SpectralField>,
}

impl NormalState {
    pub fn zeros(modes: Arc<ModeSet>) -> Self {
        NormalState { modes, comps: BTreeMap::new() }
    }

    /// Split a field into its shell components.
    pub fn from_field(u: &SpectralField) -> Self {
        let mut s = NormalState::zeros(Arc::clone(u.modes()));
        for m in u.support_shells() {
            s.comps.insert(m, shell_project(u, m));
        }
        s
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    /// Set component `n`; it must be supported on shell `n`.
    pub fn set(&mut self, n: u32, f: SpectralField) -> Result<()> {
        if !f.modes().same_space(&self.modes) {
            return Err(Error::validation("component lives on a different space"));
        }
        if f.is_zero() {
            self.comps.remove(&n);
            return Ok(());
        }
        if shell_project(&f, n).max_abs_diff(&f) != 0.0 {
            return Err(Error::validation(format!("component {n} is not supported on the shell |k|^2 = {n}")));
        }
        self.comps.insert(n, f);
        Ok(())
    }

    pub fn component(&self, n: u32) -> SpectralField {
        self.comps.get(&n).cloned().unwrap_or_else(|| SpectralField::zeros(Arc::clone(&self.modes)))
    }

    /// Shells with a nonzero component, ascending.
    pub fn support(&self) -> Vec<u32> {
        self.comps.keys().copied().collect()
    }

    pub fn max_shell(&self) -> u32 {
        self.comps.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn to_field(&self) -> SpectralField {
        let mut u = SpectralField::zeros(Arc::clone(&self.modes));
        for c in self.comps.values() {
            u.axpy(1.0, c);
        }
        u
    }

    pub fn scaled(&self, s: f64) -> Self {
        NormalState::from_fn(&self.modes, self.comps.iter().map(|(n, c)| (*n, c.scaled(s))))
    }

    pub fn add(&self, other: &NormalState) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.comps {
            let sum = out.component(*n).add(c);
            out.comps.insert(*n, sum);
        }
        out.comps.retain(|_, c| !c.is_zero());
        out
    }

    pub fn sub(&self, other: &NormalState) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Components with index at most `n`.
    pub fn truncated(&self, n: u32) -> Self {
        NormalState::from_fn(&self.modes, self.comps.iter().filter(|(m, _)| **m <= n).map(|(m, c)| (*m, c.clone())))
    }

    /// `A^alpha` component-wise.
    pub fn stokes_power(&self, alpha: f64) -> Self {
        NormalState::from_fn(&self.modes, self.comps.iter().map(|(n, c)| (*n, stokes_power(c, alpha))))
    }

    /// H norm of component `n`.
    pub fn comp_norm(&self, n: u32) -> f64 {
        self.comps.get(&n).map_or(0.0, |c| c.norm_h())
    }

    fn from_fn(modes: &Arc<ModeSet>, it: impl Iterator<Item = (u32, SpectralField)>) -> Self {
        let comps = it.filter(|(_, c)| !c.is_zero()).collect();
        NormalState { modes: Arc::clone(modes), comps }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalStateFile {
    pub dim: usize,
    pub lambda_max: u32,
    pub components: Vec<ComponentFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub n: u32,
    pub field: FieldFile,
}

impl NormalStateFile {
    pub fn from_state(s: &NormalState) -> Self {
        NormalStateFile {
            dim: s.modes.dim().as_usize(),
            lambda_max: s.modes.lambda_max(),
            components: s.comps.iter().map(|(n, c)| ComponentFile { n: *n, field: FieldFile::from_field(c) }).collect(),
        }
    }

    pub fn to_state(&self) -> Result<NormalState> {
        let modes = ModeSet::shared(crate::spectral::Dim::from_usize(self.dim)?, self.lambda_max)?;
        let mut s = NormalState::zeros(Arc::clone(&modes));
        for c in &self.components {
            if c.field.dim != self.dim || c.field.lambda_max != self.lambda_max {
                return Err(Error::validation(format!("component {} has a different dim/lambda_max", c.n)));
            }
            if s.comps.contains_key(&c.n) {
                return Err(Error::validation(format!("duplicate component {}", c.n)));
            }
            s.set(c.n, c.field.to_field()?)?;
        }
        Ok(s)
    }
}

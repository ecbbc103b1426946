use serde::{Deserialize, Serialize};

use super::state::NormalState;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Weights `rho_1 = 1`, `rho_n = kappa_n gamma_n rho_{n-1}^2` of the star
/// norm. Kept as logarithms: `rho_n` leaves the f64 range from `n = 5` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSchedule {
    /// Index `i` holds the weight for `n = i + 1`.
    pub ln_kappa: Vec<f64>,
    pub ln_gamma: Vec<f64>,
    pub ln_rho: Vec<f64>,
}

impl WeightSchedule {
    /// `kappa_n = e^{-n 2^n}`, `gamma_n = n^{-2n}`.
    pub fn standard(n_max: u32) -> Self {
        let mut ln_kappa = Vec::new();
        let mut ln_gamma = Vec::new();
        let mut ln_rho: Vec<f64> = Vec::new();
        for n in 1..=n_max.max(1) {
            let nf = n as f64;
            let k = -nf * 2f64.powi(n as i32);
            let g = -2.0 * nf * nf.ln();
            ln_kappa.push(k);
            ln_gamma.push(g);
            ln_rho.push(if n == 1 { 0.0 } else { k + g + 2.0 * ln_rho[n as usize - 2] });
        }
        WeightSchedule { ln_kappa, ln_gamma, ln_rho }
    }

    pub fn len(&self) -> usize {
        self.ln_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_rho.is_empty()
    }

    /// `rho_n` (may underflow to 0).
    pub fn rho(&self, n: u32) -> f64 {
        self.ln_rho.get(n as usize - 1).map_or(0.0, |l| l.exp())
    }

    pub fn ln_rho(&self, n: u32) -> Option<f64> {
        self.ln_rho.get(n as usize - 1).copied()
    }

    /// Check `kappa, gamma in (0, 1]`, `rho_1 = 1` and the recursion.
    pub fn validate(&self) -> Result<()> {
        let n = self.ln_rho.len();
        if n == 0 || self.ln_kappa.len() != n || self.ln_gamma.len() != n {
            return Err(Error::validation("weight arrays must be nonempty and of equal length"));
        }
        for i in 0..n {
            if !(self.ln_kappa[i] <= 0.0 && self.ln_gamma[i] <= 0.0) || !self.ln_rho[i].is_finite() {
                return Err(Error::validation(format!("weights at n = {} leave (0, 1]", i + 1)));
            }
        }
        if self.ln_rho[0] != 0.0 {
            return Err(Error::validation("rho_1 must equal 1"));
        }
        for i in 1..n {
            let want = self.ln_kappa[i] + self.ln_gamma[i] + 2.0 * self.ln_rho[i - 1];
            if (want - self.ln_rho[i]).abs() > 1e-12 * want.abs().max(1.0) {
                return Err(Error::validation(format!(
                    "rho_{} violates rho_n = kappa_n gamma_n rho_(n-1)^2 (ln rho {} vs {})",
                    i + 1,
                    self.ln_rho[i],
                    want
                )));
            }
        }
        Ok(())
    }
}

/// `sum_n rho_n ||xi_n||`.
pub fn star_norm(xi: &NormalState, w: &WeightSchedule) -> f64 {
    xi.support().iter().map(|&n| w.ln_rho(n).map_or(0.0, |l| (l + xi.component(n).norm_v().ln()).exp())).sum()
}

/// Star norm of an extended-NSE level stack, `levels[i]` being level `i + 1`.
pub fn star_norm_levels(levels: &[SpectralField], w: &WeightSchedule) -> f64 {
    levels
        .iter()
        .enumerate()
        .filter(|(_, u)| !u.is_zero())
        .map(|(i, u)| w.ln_rho(i as u32 + 1).map_or(0.0, |l| (l + u.norm_v().ln()).exp()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_weights_follow_recursion() {
        let w = WeightSchedule::standard(10);
        w.validate().unwrap();
        assert_eq!(w.rho(1), 1.0);
        let r2 = (-8f64).exp() * 2f64.powi(-4);
        assert!((w.rho(2) - r2).abs() < 1e-18);
        let mut bad = w.clone();
        bad.ln_rho[2] += 1.0;
        assert!(bad.validate().is_err());
    }
}

//! Trajectory diagnostics: Dirichlet quotients, invariant-manifold tests,
//! the level-set functionals `Phi_k` and helicity asymptotics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{const_exp_fit, line_fit, ConstExpFit};
use crate::solver::{evolve, EvolveOptions, Trajectory};
use crate::spectral::{bilinear, shell_project, FieldFile, SpectralField};

/// Values below this are treated as an exactly decayed state.
pub const DECAY_FLOOR: f64 = 1e-300;

/// Dirichlet quotient `lambda(t) = ||u||^2 / |u|^2` and its fitted limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientSeries {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub window: [f64; 2],
    pub fitted: f64,
    pub matched: u32,
    pub delta: f64,
    pub residual: f64,
    /// Largest increase of `lambda` between consecutive snapshots in the window.
    pub tail_rise: f64,
}

pub fn dirichlet_quotient(u: &SpectralField) -> f64 {
    let e = u.inner(u);
    u.norm_v().powi(2) / e
}

/// Fit `Lambda + c e^{-delta t}` to `lambda(t)` on `window` and match the
/// nearest truncated eigenvalue.
pub fn dirichlet_limit(traj: &Trajectory, window: [f64; 2]) -> Result<QuotientSeries> {
    let idx = traj.window(window[0], window[1]);
    if idx.len() < 4 {
        return Err(Error::validation(format!("window {window:?} holds fewer than four snapshots")));
    }
    let mut times = Vec::with_capacity(traj.times.len());
    let mut lambda = Vec::with_capacity(traj.times.len());
    for (t, u) in traj.times.iter().zip(&traj.states) {
        if u.inner(u) < DECAY_FLOOR {
            return Err(Error::numeric(format!("trajectory decayed below the floor at t = {t}")));
        }
        times.push(*t);
        lambda.push(dirichlet_quotient(u));
    }
    let tw: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let lw: Vec<f64> = idx.iter().map(|&i| lambda[i]).collect();
    let fit = const_exp_fit(&tw, std::slice::from_ref(&lw), 0.5, 40.0)?;
    let fitted = fit.constants[0];
    let modes = traj.modes();
    let matched = modes
        .shells()
        .min_by(|a, b| (*a as f64 - fitted).abs().partial_cmp(&(*b as f64 - fitted).abs()).unwrap())
        .ok_or_else(|| Error::validation("empty spectrum"))?;
    let tol = (10.0 * fit.rms).max(1e-3);
    if (matched as f64 - fitted).abs() > tol {
        return Err(Error::numeric(format!(
            "fitted limit {fitted} is {} away from the nearest eigenvalue {matched} (tolerance {tol:e})",
            (matched as f64 - fitted).abs()
        )));
    }
    let tail_rise = lw.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(QuotientSeries { times, lambda, window, fitted, matched, delta: fit.delta, residual: fit.rms, tail_rise })
}

/// Growth-rate evidence for one shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRate {
    pub shell: u32,
    /// Fitted slope of `log(e^{j t} |R_j u(t)|)`; `None` when `R_j u` vanishes.
    pub rate: Option<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub k: usize,
    pub member: bool,
    pub window: [f64; 2],
    pub delta_min: f64,
    pub rates: Vec<ShellRate>,
}

/// Whether `u0` lies in `M_k`: every one of the first `k` eigen-shells decays
/// strictly faster than its own eigenvalue, i.e. `e^{j t} R_j u(t)` has
/// fitted rate at most `-delta_min`.
pub fn manifold_membership(traj: &Trajectory, k: usize, window: [f64; 2], delta_min: f64) -> Result<Membership> {
    let idx = traj.window(window[0], window[1]);
    if idx.len() < 4 {
        return Err(Error::validation(format!("window {window:?} holds fewer than four snapshots")));
    }
    let shells: Vec<u32> = traj.modes().shells().take(k).collect();
    if shells.len() < k {
        return Err(Error::validation(format!("the truncation has only {} eigenvalues", shells.len())));
    }
    let mut rates = Vec::new();
    for &j in &shells {
        let mut ts = Vec::new();
        let mut ls = Vec::new();
        for &i in &idx {
            let n = shell_project(&traj.states[i], j).norm_h();
            if n > DECAY_FLOOR {
                ts.push(traj.times[i]);
                ls.push(n.ln() + j as f64 * traj.times[i]);
            }
        }
        if ts.len() >= idx.len() / 2 && ts.len() >= 2 {
            let f = line_fit(&ts, &ls)?;
            rates.push(ShellRate { shell: j, rate: Some(f.slope), residual: f.rms });
        } else {
            rates.push(ShellRate { shell: j, rate: None, residual: 0.0 });
        }
    }
    let member = rates.iter().all(|r| r.rate.is_none_or(|s| s <= -delta_min));
    Ok(Membership { k, member, window, delta_min, rates })
}

/// `Phi_k(u0) = R_k u0 - int_0^inf e^{k t} R_k B(S(t)u0, S(t)u0) dt`, with
/// composite Simpson on the snapshots up to `t_max` and an exponential tail
/// estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiValue {
    pub k: u32,
    pub value: FieldFile,
    pub tail_estimate: f64,
    pub t_max: f64,
}

pub fn phi_functional(
    u0: &SpectralField,
    k: u32,
    t_max: f64,
    opts: &EvolveOptions,
    tail_tol: f64,
) -> Result<(SpectralField, PhiValue)> {
    if !u0.modes().has_shell(k) {
        return Err(Error::validation(format!("{k} is not an eigenvalue of the truncation")));
    }
    let run = EvolveOptions { t_end: t_max, ..*opts };
    let traj = evolve(u0, &run)?;
    phi_from_trajectory(&traj, k, tail_tol)
}

pub fn phi_from_trajectory(traj: &Trajectory, k: u32, tail_tol: f64) -> Result<(SpectralField, PhiValue)> {
    let n = traj.states.len();
    if n < 5 {
        return Err(Error::validation("Phi quadrature needs at least five snapshots"));
    }
    // even number of intervals
    let m = if (n - 1).is_multiple_of(2) { n - 1 } else { n - 2 };
    let h = traj.spacing();
    let g: Vec<SpectralField> = (0..=m)
        .map(|i| {
            let u = &traj.states[i];
            shell_project(&bilinear(u, u).expect("same space"), k).scaled((k as f64 * traj.times[i]).exp())
        })
        .collect();
    let mut integral = SpectralField::zeros(Arc::clone(traj.modes()));
    for (i, gi) in g.iter().enumerate() {
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral.axpy(w * h / 3.0, gi);
    }
    // tail: |g| ~ C e^{-r t} fitted over the last quarter
    let q = (m / 4).max(2);
    let a = g[m - q].norm_h();
    let b = g[m].norm_h();
    let tail = if b == 0.0 {
        0.0
    } else if a > b {
        let r = (a / b).ln() / (q as f64 * h);
        b / r
    } else {
        f64::INFINITY
    };
    let value = shell_project(&traj.states[0], k).sub(&integral);
    if tail > tail_tol {
        return Err(Error::numeric(format!("Phi_{k} tail estimate {tail:e} exceeds tolerance {tail_tol:e}")));
    }
    let t_max = traj.times[m];
    let pv = PhiValue { k, value: FieldFile::from_field(&value), tail_estimate: tail, t_max };
    Ok((value, pv))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    pub limit: f64,
    pub window: [f64; 2],
    pub residual: f64,
}

/// Helicity series and their fitted asymptotics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelicityReport {
    pub times: Vec<f64>,
    pub helicity: Vec<f64>,
    pub energy: Vec<f64>,
    pub enstrophy: Vec<f64>,
    pub i_helicity: Vec<f64>,
    pub identically_zero: bool,
    pub balance_residual: f64,
    /// Largest `|H| / (|u| |omega|)`; at most 1.
    pub max_cauchy_schwarz: f64,
    pub window: [f64; 2],
    /// `log|H| ~ c + d log t - 2 h0 t`.
    pub degree: Option<u32>,
    pub h0_decay: Option<f64>,
    pub decay_residual: Option<f64>,
    /// `H / |u|^2 -> alpha0`.
    pub alpha0: Option<RatioFit>,
    /// `I / H -> h0`.
    pub h0_ratio: Option<RatioFit>,
}

fn ratio_fit(t: &[f64], y: &[f64], window: [f64; 2]) -> Result<RatioFit> {
    let f: ConstExpFit = const_exp_fit(t, &[y.to_vec()], 0.5, 40.0)?;
    Ok(RatioFit { limit: f.constants[0], window, residual: f.rms })
}

fn decay_fit(t: &[f64], h: &[f64]) -> Result<(u32, f64, f64)> {
    // least squares on [1, log t, t] with d tested sequentially
    let y: Vec<f64> = h.iter().map(|v| v.abs().ln()).collect();
    let fit0 = line_fit(t, &y)?;
    let mut best = (0u32, -0.5 * fit0.slope, fit0.rms);
    for d in 1..=2u32 {
        let yd: Vec<f64> = t.iter().zip(&y).map(|(s, v)| v - d as f64 * s.ln()).collect();
        let f = line_fit(t, &yd)?;
        if f.rms * 10.0 < best.2 {
            best = (d, -0.5 * f.slope, f.rms);
        } else {
            break;
        }
    }
    Ok(best)
}

pub fn helicity_report(traj: &Trajectory, window: [f64; 2]) -> Result<HelicityReport> {
    let mut times = Vec::new();
    let mut helicity = Vec::new();
    let mut energy = Vec::new();
    let mut enstrophy = Vec::new();
    let mut i_helicity = Vec::new();
    let mut max_cs: f64 = 0.0;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let sc = crate::solver::StepScalars::of(u);
        times.push(*t);
        helicity.push(sc.helicity);
        energy.push(0.5 * sc.l2_sq);
        enstrophy.push(sc.h1_sq);
        i_helicity.push(sc.i_helicity);
        let bound = (sc.l2_sq * sc.h1_sq).sqrt();
        if bound > 0.0 {
            max_cs = max_cs.max(sc.helicity.abs() / bound);
        }
    }
    let max_h = helicity.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let max_u2 = energy.iter().fold(0.0f64, |a, v| a.max(2.0 * v));
    let identically_zero = max_h < 1e-12 * max_u2 || max_u2 == 0.0;
    let balance_residual = crate::solver::energy_checks(traj).max_helicity_residual;

    let idx = traj.window(window[0], window[1]);
    let (mut degree, mut h0_decay, mut decay_residual, mut alpha0, mut h0_ratio) = (None, None, None, None, None);
    if !identically_zero && idx.len() >= 4 {
        let tw: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        if idx.iter().all(|&i| helicity[i] != 0.0) {
            let hw: Vec<f64> = idx.iter().map(|&i| helicity[i]).collect();
            let (d, h0, r) = decay_fit(&tw, &hw)?;
            degree = Some(d);
            h0_decay = Some(h0);
            decay_residual = Some(r);
            let ih: Vec<f64> = idx.iter().map(|&i| i_helicity[i] / helicity[i]).collect();
            h0_ratio = Some(ratio_fit(&tw, &ih, window)?);
        }
        let a: Vec<f64> = idx.iter().map(|&i| helicity[i] / (2.0 * energy[i])).collect();
        alpha0 = Some(ratio_fit(&tw, &a, window)?);
    }
    Ok(HelicityReport {
        times,
        helicity,
        energy,
        enstrophy,
        i_helicity,
        identically_zero,
        balance_residual,
        max_cauchy_schwarz: max_cs,
        window,
        degree,
        h0_decay,
        decay_residual,
        alpha0,
        h0_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{beltrami, rng_from_seed};
    use crate::spectral::{Dim, ModeSet};

    #[test]
    fn beltrami_quotient_is_one() {
        let ms = ModeSet::shared(Dim::Three, 6).unwrap();
        let u = beltrami(&ms, 1, 1, 0.1, &mut rng_from_seed(1)).unwrap();
        let tr = evolve(&u, &EvolveOptions::new(0.01, 4.0, 5)).unwrap();
        let q = dirichlet_limit(&tr, [2.0, 3.8]).unwrap();
        assert_eq!(q.matched, 1);
        assert!((q.fitted - 1.0).abs() < 1e-12);
        let h = helicity_report(&tr, [2.0, 3.8]).unwrap();
        assert!((h.alpha0.unwrap().limit - 1.0).abs() < 1e-12);
        assert_eq!(h.degree, Some(0));
        assert!((h.h0_decay.unwrap() - 1.0).abs() < 1e-10);
    }
}

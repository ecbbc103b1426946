use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expansion::Expansion;
use super::state::NormalState;
use crate::error::{Error, Result};
use crate::fit::const_exp_fit;
use crate::solver::Trajectory;
use crate::spectral::{leray_project, RawField, SpectralField};

/// Tail-fit settings for the peel-off extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractOptions {
    /// Window per level (`windows[j-1]`); missing entries use the default.
    pub windows: Vec<[f64; 2]>,
    /// Refinement sweeps after the first pass; each subtracts the higher
    /// levels rebuilt from the current estimate.
    pub sweeps: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Relative fit residual above which a component is flagged.
    pub tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { windows: Vec::new(), sweeps: 2, delta_min: 0.5, delta_max: 40.0, tol: 1e-3 }
    }
}

/// Level `j` sees signal `e^{-j t}` against a floor near `eps e^{-t}`, so the
/// window moves earlier as `j` grows.
pub fn default_window(j: u32, t_end: f64) -> [f64; 2] {
    if j == 1 {
        [0.4 * t_end, 0.95 * t_end]
    } else {
        let b = (0.95 * t_end).min(24.0 / j as f64);
        [b / 2.5, b]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentFit {
    pub n: u32,
    pub window: [f64; 2],
    pub delta: f64,
    pub residual: f64,
    /// Relative residual `|fit error| / |xi_n|`.
    pub relative_residual: f64,
    /// Condition number of the two-function least-squares basis.
    pub condition: f64,
    pub reliable: bool,
}

pub struct Extraction {
    pub xi: NormalState,
    pub fits: Vec<ComponentFit>,
}

fn shell_coords(u: &SpectralField, range: std::ops::Range<usize>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(range.len() * n * 2);
    for a in &u.amplitudes()[range] {
        for c in a.iter().take(n) {
            out.push(c.re);
            out.push(c.im);
        }
    }
    out
}

/// Recover `xi = W(u0)` up to component `order` from a trajectory.
pub fn extract_normalization(traj: &Trajectory, order: u32, opts: &ExtractOptions) -> Result<Extraction> {
    let modes = Arc::clone(traj.modes());
    let t_end = *traj.times.last().expect("nonempty trajectory");
    let ncomp = modes.dim().as_usize();
    let mut xi = NormalState::zeros(Arc::clone(&modes));
    let mut fits: Vec<ComponentFit> = Vec::new();
    let shells: Vec<u32> = (1..=order).filter(|&j| modes.has_shell(j)).collect();
    for sweep in 0..=opts.sweeps {
        fits.clear();
        for &j in &shells {
            let window = opts.windows.get(j as usize - 1).copied().unwrap_or_else(|| default_window(j, t_end));
            let idx = traj.window(window[0], window[1]);
            if idx.len() < 4 {
                return Err(Error::validation(format!(
                    "level {j}: window {window:?} holds fewer than four snapshots (trajectory ends at {t_end})"
                )));
            }
            let ex = Expansion::new(xi.clone());
            let top = if sweep == 0 { j - 1 } else { order + 2 };
            let range = modes.shell_range(j).expect("shell exists");
            let subtract: Vec<_> =
                (1..=top as usize).filter(|&i| i != j as usize).map(|i| ex.q(i)).collect::<Result<_>>()?;
            let pj = ex.p(j as usize)?;
            let mut ts = Vec::with_capacity(idx.len());
            let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(idx.len()); range.len() * ncomp * 2];
            for &i in &idx {
                let t = traj.times[i];
                let mut v = traj.states[i].scaled((j as f64 * t).exp());
                for (n, q) in subtract.iter().enumerate() {
                    let lvl = if n + 1 >= j as usize { n + 2 } else { n + 1 };
                    v.axpy(-((j as f64 - lvl as f64) * t).exp(), &q.eval(t));
                }
                v.axpy(-1.0, &pj.eval(t));
                ts.push(t);
                for (s, val) in series.iter_mut().zip(shell_coords(&v, range.clone(), ncomp)) {
                    s.push(val);
                }
            }
            let fit = const_exp_fit(&ts, &series, opts.delta_min, opts.delta_max)?;
            let mut raw = RawField::zeros(Arc::clone(&modes));
            let mut c = fit.constants.iter();
            for a in &mut raw.amp[range.clone()] {
                for comp in a.iter_mut().take(ncomp) {
                    let re = *c.next().unwrap();
                    let im = *c.next().unwrap();
                    *comp = Complex64::new(re, im);
                }
            }
            let value = crate::spectral::shell_project(&leray_project(&raw), j);
            let norm = value.norm_h();
            let total_res = fit.rms * ((range.len() * ncomp * 2) as f64).sqrt();
            let relative_residual = if norm > 0.0 { total_res / norm } else { total_res };
            let g: Vec<f64> = ts.iter().map(|t| (-fit.delta * (t - ts[0])).exp()).collect();
            let (n, sg, sgg) = (g.len() as f64, g.iter().sum::<f64>(), g.iter().map(|x| x * x).sum::<f64>());
            let tr = n + sgg;
            let det = n * sgg - sg * sg;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let condition = (tr / 2.0 + disc) / (tr / 2.0 - disc).max(f64::MIN_POSITIVE);
            xi.set(j, value)?;
            fits.push(ComponentFit {
                n: j,
                window,
                delta: fit.delta,
                residual: fit.rms,
                relative_residual,
                condition,
                reliable: relative_residual <= opts.tol || total_res < 1e-15,
            });
        }
    }
    Ok(Extraction { xi, fits })
}

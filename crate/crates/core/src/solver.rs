//! Time integration of the truncated NSE `u' + A u + B(u, u) = 0`.
//!
//! A Lawson integrating-factor RK4 scheme: the Stokes part is propagated
//! exactly, the nonlinearity by classical RK4 in the transformed variable.
//! The integrator works on stacks of fields so the same stepper drives plain
//! NSE, the extended (level-by-level) system and the remainder frame.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exppoly::{ep_bilinear_with, ep_eval, ExpPolyField};
use crate::spectral::{bilinear_with, curl, Dim, FieldFile, ModeSet, SpectralField};

/// Integration parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot every `stride` steps.
    pub stride: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { dt: 1e-3, t_end: 15.0, stride: 10, exec: Execution::Sequential }
    }
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64, stride: usize) -> Self {
        EvolveOptions { dt, t_end, stride, exec: Execution::Sequential }
    }

    /// Step count, after checking the parameters.
    pub fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::validation(format!("T must be nonnegative, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::validation("snapshot stride must be positive"));
        }
        let steps = (self.t_end / self.dt).round();
        if ((steps * self.dt) - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::validation(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(steps as usize)
    }
}

fn decay_factors(modes: &ModeSet, h: f64) -> Vec<f64> {
    (0..modes.len()).map(|i| (-(modes.shell_of(i) as f64) * h).exp()).collect()
}

fn apply_decay(u: &SpectralField, e: &[f64]) -> SpectralField {
    u.weighted(|i| e[i])
}

fn combine(a: &SpectralField, s: f64, b: &SpectralField) -> SpectralField {
    let mut out = a.clone();
    out.axpy(s, b);
    out
}

/// One Lawson IF-RK4 step of `y' = -A y + n(t, y)` on a stack of fields.
pub fn ifrk4_stack<F>(y: &[SpectralField], t: f64, h: f64, n: &F) -> Vec<SpectralField>
where
    F: Fn(f64, &[SpectralField]) -> Vec<SpectralField>,
{
    let modes = Arc::clone(y[0].modes());
    let e = decay_factors(&modes, h);
    let e2 = decay_factors(&modes, 0.5 * h);
    let k1 = n(t, y);
    let y2: Vec<_> = y.iter().zip(&k1).map(|(u, k)| apply_decay(&combine(u, 0.5 * h, k), &e2)).collect();
    let k2 = n(t + 0.5 * h, &y2);
    let y3: Vec<_> = y.iter().zip(&k2).map(|(u, k)| combine(&apply_decay(u, &e2), 0.5 * h, k)).collect();
    let k3 = n(t + 0.5 * h, &y3);
    let y4: Vec<_> = y.iter().zip(&k3).map(|(u, k)| combine(&apply_decay(u, &e), h, &apply_decay(k, &e2))).collect();
    let k4 = n(t + h, &y4);
    (0..y.len())
        .map(|l| {
            let mut out = apply_decay(&y[l], &e);
            out.axpy(h / 6.0, &apply_decay(&k1[l], &e));
            out.axpy(h / 3.0, &apply_decay(&k2[l].add(&k3[l]), &e2));
            out.axpy(h / 6.0, &k4[l]);
            out
        })
        .collect()
}

fn nse_rhs(exec: Execution) -> impl Fn(f64, &[SpectralField]) -> Vec<SpectralField> {
    move |_t, y| vec![bilinear_with(exec, &y[0], &y[0]).expect("state space is fixed").scaled(-1.0)]
}

fn check_finite(y: &[SpectralField], t: f64) -> Result<()> {
    if y.iter().all(|u| u.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!("non-finite amplitude after the step ending at t = {t:.6}")))
    }
}

/// One IF-RK4 step of the NSE.
pub fn step_ifrk4(u: &SpectralField, dt: f64) -> Result<SpectralField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    let y = ifrk4_stack(std::slice::from_ref(u), 0.0, dt, &nse_rhs(Execution::Sequential));
    check_finite(&y, dt)?;
    Ok(y.into_iter().next().unwrap())
}

/// Scalar quantities tracked at every step: `|u|^2`, `||u||^2`, `H`, `I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepScalars {
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub helicity: f64,
    pub i_helicity: f64,
}

impl StepScalars {
    pub fn of(u: &SpectralField) -> StepScalars {
        let (helicity, i_helicity) = helicity_pair(u);
        StepScalars { l2_sq: u.inner(u), h1_sq: u.norm_v().powi(2), helicity, i_helicity }
    }
}

/// `(H, I) = (<u, curl u>, <curl u, curl curl u>)`; both vanish in 2D.
pub fn helicity_pair(u: &SpectralField) -> (f64, f64) {
    if u.dim() == Dim::Two {
        return (0.0, 0.0);
    }
    let w = curl(u).expect("3D field");
    let ww = curl(&w).expect("3D field");
    (u.inner(&w), w.inner(&ww))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub dim: usize,
    pub lambda_max: u32,
    pub dt: f64,
    pub stride: usize,
    pub t_end: f64,
    pub scheme: String,
}

/// Snapshots of a run plus the per-step scalar series.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// One entry per step, including `t = 0`.
    pub fine: Vec<StepScalars>,
    /// Spacing of `fine`.
    pub fine_dt: f64,
}

impl Trajectory {
    pub fn modes(&self) -> &Arc<ModeSet> {
        self.states[0].modes()
    }

    /// Snapshot spacing.
    pub fn spacing(&self) -> f64 {
        self.meta.dt * self.meta.stride as f64
    }

    /// Index of the snapshot closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let i = (t / self.spacing()).round().max(0.0) as usize;
        i.min(self.times.len() - 1)
    }

    /// Snapshot indices with `t` in `[a, b]`.
    pub fn window(&self, a: f64, b: f64) -> Vec<usize> {
        (0..self.times.len()).filter(|&i| self.times[i] >= a - 1e-12 && self.times[i] <= b + 1e-12).collect()
    }

    /// The same run restarted at the snapshot nearest `t0`, times re-based to 0.
    pub fn tail_from(&self, t0: f64) -> Trajectory {
        let i0 = self.index_at(t0);
        let step0 = (self.times[i0] / self.fine_dt).round() as usize;
        Trajectory {
            meta: TrajectoryMeta { t_end: self.meta.t_end - self.times[i0], ..self.meta.clone() },
            times: self.times[i0..].iter().map(|t| t - self.times[i0]).collect(),
            states: self.states[i0..].to_vec(),
            fine: self.fine[step0.min(self.fine.len() - 1)..].to_vec(),
            fine_dt: self.fine_dt,
        }
    }

    pub fn write_dir(&self, dir: &Path, extra: serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(dir.join("states"))?;
        let manifest = serde_json::json!({
            "trajectory": self.meta,
            "n_states": self.states.len(),
            "run": extra,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        for (i, u) in self.states.iter().enumerate() {
            FieldFile::write(u, &dir.join("states").join(format!("{i:04}.json")))?;
        }
        std::fs::write(dir.join("series.csv"), self.series_csv())?;
        Ok(())
    }

    /// CSV with the fixed header `t,u_l2,u_h1,lambda,helicity,energy,enstrophy,I`.
    pub fn series_csv(&self) -> String {
        let mut s = String::from("t,u_l2,u_h1,lambda,helicity,energy,enstrophy,I\n");
        for (t, u) in self.times.iter().zip(&self.states) {
            let sc = StepScalars::of(u);
            let lambda = if sc.l2_sq > 0.0 { sc.h1_sq / sc.l2_sq } else { f64::NAN };
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                t,
                sc.l2_sq.sqrt(),
                sc.h1_sq.sqrt(),
                lambda,
                sc.helicity,
                0.5 * sc.l2_sq,
                sc.h1_sq,
                sc.i_helicity
            ));
        }
        s
    }

    /// Re-read a trajectory directory. The per-step series is rebuilt from
    /// snapshots only, so step-resolution diagnostics need the original run.
    pub fn read_dir(dir: &Path) -> Result<Trajectory> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let meta: TrajectoryMeta = serde_json::from_value(v["trajectory"].clone())?;
        let n = v["n_states"].as_u64().ok_or_else(|| Error::validation("manifest lacks n_states"))? as usize;
        let mut states = Vec::with_capacity(n);
        for i in 0..n {
            states.push(FieldFile::read(&dir.join("states").join(format!("{i:04}.json")))?);
        }
        if states.is_empty() {
            return Err(Error::validation("trajectory has no states"));
        }
        let h = meta.dt * meta.stride as f64;
        let times = (0..n).map(|i| i as f64 * h).collect();
        let fine = states.iter().map(StepScalars::of).collect();
        Ok(Trajectory { meta, times, states, fine, fine_dt: h })
    }
}

fn run_stack<F>(
    y0: Vec<SpectralField>,
    opts: &EvolveOptions,
    scheme: &str,
    n: F,
) -> Result<(Vec<Vec<SpectralField>>, Vec<f64>, Vec<StepScalars>, TrajectoryMeta)>
where
    F: Fn(f64, &[SpectralField]) -> Vec<SpectralField>,
{
    let steps = opts.validate()?;
    let modes = Arc::clone(y0[0].modes());
    let meta = TrajectoryMeta {
        dim: modes.dim().as_usize(),
        lambda_max: modes.lambda_max(),
        dt: opts.dt,
        stride: opts.stride,
        t_end: opts.t_end,
        scheme: scheme.to_string(),
    };
    let sum = |y: &[SpectralField]| {
        let mut s = y[0].clone();
        for u in &y[1..] {
            s.axpy(1.0, u);
        }
        s
    };
    let mut y = y0;
    let mut snaps = vec![y.clone()];
    let mut times = vec![0.0];
    let mut fine = vec![StepScalars::of(&sum(&y))];
    for s in 0..steps {
        let t = s as f64 * opts.dt;
        y = ifrk4_stack(&y, t, opts.dt, &n);
        let t1 = (s + 1) as f64 * opts.dt;
        check_finite(&y, t1)?;
        fine.push(StepScalars::of(&sum(&y)));
        if (s + 1) % opts.stride == 0 {
            snaps.push(y.clone());
            times.push(t1);
        }
    }
    Ok((snaps, times, fine, meta))
}

/// Integrate the NSE from `u0`.
pub fn evolve(u0: &SpectralField, opts: &EvolveOptions) -> Result<Trajectory> {
    let (snaps, times, fine, meta) = run_stack(vec![u0.clone()], opts, "ifrk4", nse_rhs(opts.exec))?;
    let states = snaps.into_iter().map(|mut v| v.remove(0)).collect();
    Ok(Trajectory { fine_dt: meta.dt, meta, times, states, fine })
}

/// Extended NSE `u_n' + A u_n + sum_{j+k=n} B(u_j, u_k) = 0` for levels
/// `1..=levels.len()`, integrated as one triangular system. Returns the
/// level stack at each snapshot.
pub fn evolve_levels(levels: &[SpectralField], opts: &EvolveOptions) -> Result<(Vec<f64>, Vec<Vec<SpectralField>>)> {
    if levels.is_empty() {
        return Err(Error::validation("at least one level is required"));
    }
    for u in levels {
        levels[0].check_same_space(u)?;
    }
    let exec = opts.exec;
    let rhs = move |_t: f64, y: &[SpectralField]| -> Vec<SpectralField> {
        let n = y.len();
        (1..=n)
            .map(|lvl| {
                let mut acc = SpectralField::zeros(Arc::clone(y[0].modes()));
                for j in 1..lvl {
                    let k = lvl - j;
                    acc.axpy(-1.0, &bilinear_with(exec, &y[j - 1], &y[k - 1]).expect("same space"));
                }
                acc
            })
            .collect()
    };
    let (snaps, times, _, _) = run_stack(levels.to_vec(), opts, "ifrk4-levels", rhs)?;
    Ok((times, snaps))
}

/// Frame moving with a known approximate solution `U(t)`: integrates
/// `r = u - U` directly so `r` is resolved to relative precision even when
/// it is far below `|u|` times machine epsilon.
pub struct RemainderFrame {
    base: ExpPolyField,
    defect: ExpPolyField,
}

impl RemainderFrame {
    /// `base = sum_{n<=order} q_n e^{-n t}` built from exact level solutions;
    /// its defect `U' + A U + B(U, U)` is then the part of `B(U, U)` with
    /// decay index above `order`.
    pub fn new(base: ExpPolyField, order: u32) -> Result<Self> {
        let defect = ep_bilinear_with(Execution::best(), &base, &base)?.filter(|m| m > order);
        Ok(RemainderFrame { base, defect })
    }

    pub fn base(&self) -> &ExpPolyField {
        &self.base
    }

    /// Integrate `r' + A r + B(r,r) + B(U,r) + B(r,U) + defect(t) = 0`.
    pub fn evolve(&self, r0: &SpectralField, opts: &EvolveOptions) -> Result<Trajectory> {
        let exec = opts.exec;
        let rhs = |t: f64, y: &[SpectralField]| -> Vec<SpectralField> {
            let r = &y[0];
            let u = ep_eval(&self.base, t);
            let mut acc = ep_eval(&self.defect, t);
            acc.axpy(1.0, &bilinear_with(exec, r, r).expect("same space"));
            acc.axpy(1.0, &bilinear_with(exec, &u, r).expect("same space"));
            acc.axpy(1.0, &bilinear_with(exec, r, &u).expect("same space"));
            vec![acc.scaled(-1.0)]
        };
        let (snaps, times, fine, meta) = run_stack(vec![r0.clone()], opts, "ifrk4-remainder", rhs)?;
        let states = snaps.into_iter().map(|mut v| v.remove(0)).collect();
        Ok(Trajectory { fine_dt: meta.dt, meta, times, states, fine })
    }
}

/// Discrete energy-equality diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `max |d/dt (|u|^2 / 2) + ||u||^2|`, derivative by a five-point
    /// central stencil on the per-step series.
    pub max_residual: f64,
    /// Same, with the two-point midpoint quotient.
    pub max_residual_midpoint: f64,
    /// `max_t |u(t)|^2 e^{2t} / |u0|^2`; at most 1 by the Poincaré bound.
    pub max_poincare_ratio: f64,
    pub strictly_decreasing: bool,
    /// Residual of `dH/dt / 2 + I = 0`, same stencil.
    pub max_helicity_residual: f64,
}

fn five_point(f: &[f64], i: usize, h: f64) -> f64 {
    (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
}

pub fn energy_checks(traj: &Trajectory) -> EnergyReport {
    let h = traj.fine_dt;
    let f = &traj.fine;
    let e: Vec<f64> = f.iter().map(|s| 0.5 * s.l2_sq).collect();
    let hh: Vec<f64> = f.iter().map(|s| 0.5 * s.helicity).collect();
    let mut max_residual: f64 = 0.0;
    let mut max_hel: f64 = 0.0;
    for i in 2..f.len().saturating_sub(2) {
        max_residual = max_residual.max((five_point(&e, i, h) + f[i].h1_sq).abs());
        max_hel = max_hel.max((five_point(&hh, i, h) + f[i].i_helicity).abs());
    }
    let mut max_mid: f64 = 0.0;
    for i in 0..f.len().saturating_sub(1) {
        let d = (e[i + 1] - e[i]) / h;
        max_mid = max_mid.max((d + 0.5 * (f[i].h1_sq + f[i + 1].h1_sq)).abs());
    }
    let e0 = f[0].l2_sq;
    let max_poincare_ratio = if e0 > 0.0 {
        f.iter().enumerate().map(|(i, s)| s.l2_sq * (2.0 * i as f64 * h).exp() / e0).fold(0.0, f64::max)
    } else {
        0.0
    };
    let strictly_decreasing = e0 == 0.0 || f.windows(2).all(|w| w[1].l2_sq < w[0].l2_sq);
    EnergyReport {
        max_residual,
        max_residual_midpoint: max_mid,
        max_poincare_ratio,
        strictly_decreasing,
        max_helicity_residual: max_hel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{beltrami, random_field, rng_from_seed};

    #[test]
    fn single_mode_propagates_exactly() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let u = beltrami(&ms, 5, 1, 0.3, &mut rng_from_seed(1)).unwrap();
        let v = step_ifrk4(&u, 0.01).unwrap();
        assert!(v.max_abs_diff(&u.scaled((-0.05f64).exp())) < 1e-15);
        assert!(step_ifrk4(&u, -1.0).is_err());
    }

    #[test]
    fn richardson_ratio_is_fourth_order() {
        let ms = ModeSet::shared(Dim::Three, 6).unwrap();
        let u0 = random_field(&ms, 2.0, &mut rng_from_seed(2)).unwrap();
        let run = |dt: f64| evolve(&u0, &EvolveOptions::new(dt, 0.4, 1)).unwrap().states.last().unwrap().clone();
        let a = run(0.04);
        let b = run(0.02);
        let c = run(0.01);
        let ratio = a.sub(&b).norm_h() / b.sub(&c).norm_h();
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let ms = ModeSet::shared(Dim::Two, 8).unwrap();
        let tr = evolve(&SpectralField::zeros(ms), &EvolveOptions::new(0.01, 0.1, 1)).unwrap();
        let r = energy_checks(&tr);
        assert_eq!(r.max_residual, 0.0);
        assert!(r.strictly_decreasing);
    }

    #[test]
    fn rejects_bad_options() {
        let ms = ModeSet::shared(Dim::Two, 8).unwrap();
        let u = SpectralField::zeros(ms);
        assert!(evolve(&u, &EvolveOptions::new(0.0, 1.0, 1)).is_err());
        assert!(evolve(&u, &EvolveOptions::new(0.3, 1.0, 1)).is_err());
        assert!(evolve(&u, &EvolveOptions::new(0.1, 1.0, 0)).is_err());
    }
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use torusnf::asymptotics::{
    dirichlet_limit, helicity_report, manifold_membership, HelicityReport, Membership, QuotientSeries,
};
use torusnf::exppoly::ep_eval;
use torusnf::fit::line_fit;
use torusnf::normal_form::{
    extract_normalization, s_normal, star_norm, ComponentFit, Expansion, ExtractOptions, Extraction, NormalStateFile,
    WeightSchedule,
};
use torusnf::solver::{energy_checks, evolve, EnergyReport, Trajectory};
use torusnf::spectral::{norm, SpectralField};
use torusnf::{Error, Result};

use crate::config::RunConfig;
use crate::manifest::{write_json, RunManifest};

pub struct Run {
    pub name: String,
    pub config: RunConfig,
    pub dir: PathBuf,
}

impl Run {
    pub fn new(root: &Path, name: String, config: RunConfig) -> Self {
        Run { dir: root.join(&name), name, config }
    }

    /// The manifest for this config; stages from a run with different
    /// trajectory parameters are dropped.
    fn manifest(&self) -> Result<RunManifest> {
        Ok(match RunManifest::read(&self.dir)? {
            Some(m) if same_trajectory(&m.config, &self.config) => RunManifest { config: self.config.clone(), ..m },
            _ => RunManifest::new(self.config.clone()),
        })
    }

    fn has_trajectory(&self) -> Result<bool> {
        Ok(match RunManifest::read(&self.dir)? {
            Some(m) => same_trajectory(&m.config, &self.config) && m.stages.contains_key("simulate"),
            None => false,
        })
    }

    /// The stored trajectory, simulating it first when absent or stale.
    fn trajectory(&self) -> Result<Trajectory> {
        if !self.has_trajectory()? {
            simulate(self)?;
        }
        Trajectory::read_dir(&self.dir.join("trajectory"))
    }

    fn finish(&self, stage: &str, outputs: &[&str], start: Instant) -> Result<()> {
        let mut m = self.manifest()?;
        m.record(stage, &self.dir, outputs, start.elapsed().as_secs_f64())?;
        m.write(&self.dir)
    }
}

/// Everything that determines the trajectory itself.
fn same_trajectory(a: &RunConfig, b: &RunConfig) -> bool {
    a.dimension == b.dimension
        && a.lambda_max == b.lambda_max
        && a.dt == b.dt
        && a.t_end == b.t_end
        && a.stride == b.stride
        && a.seed == b.seed
        && a.initial == b.initial
}

#[derive(Serialize)]
struct EnergyFile {
    window: [f64; 2],
    step: f64,
    #[serde(flatten)]
    report: EnergyReport,
}

pub fn simulate(run: &Run) -> Result<()> {
    let start = Instant::now();
    let cfg = &run.config;
    let u0 = cfg.initial_field()?;
    let traj = evolve(&u0, &cfg.evolve_options())?;
    std::fs::create_dir_all(&run.dir)?;
    let tdir = run.dir.join("trajectory");
    if tdir.exists() {
        std::fs::remove_dir_all(&tdir)?;
    }
    traj.write_dir(&tdir, serde_json::json!({ "name": run.name, "seed": cfg.seed }))?;
    std::fs::copy(tdir.join("series.csv"), run.dir.join("series.csv"))?;
    let energy = EnergyFile { window: [0.0, cfg.t_end], step: cfg.dt, report: energy_checks(&traj) };
    write_json(&run.dir.join("energy.json"), &energy)?;
    let mut m = RunManifest::new(cfg.clone());
    m.record(
        "simulate",
        &run.dir,
        &["series.csv", "energy.json", "trajectory/manifest.json", "trajectory/states"],
        start.elapsed().as_secs_f64(),
    )?;
    m.write(&run.dir)
}

fn extract(cfg: &RunConfig, traj: &Trajectory) -> Result<Extraction> {
    let opts = ExtractOptions { windows: cfg.windows.clone(), ..ExtractOptions::default() };
    extract_normalization(traj, cfg.order, &opts)
}

#[derive(Serialize)]
struct SlopeFit {
    slope: f64,
    window: [f64; 2],
    residual: f64,
}

#[derive(Serialize)]
struct ResidualDecay {
    order: u32,
    /// Any slope at most `-order` is consistent with `O(e^{-(order + eps) t})`.
    bound: f64,
    h: Option<SlopeFit>,
    gevrey: Option<SlopeFit>,
    /// Largest `|u - series| / |u|` in the window.
    max_relative: f64,
    /// The residual sits at rounding level; slopes are then meaningless and omitted.
    at_floor: bool,
}

#[derive(Serialize)]
struct ExpandReport {
    order: u32,
    gevrey: crate::config::Gevrey,
    fits: Vec<ComponentFit>,
    residuals: Vec<ResidualDecay>,
}

const FLOOR: f64 = 1e-12;

pub fn expand(run: &Run) -> Result<()> {
    let traj = run.trajectory()?;
    let start = Instant::now();
    let cfg = &run.config;
    let ext = extract(cfg, &traj)?;
    let ex = Expansion::new(ext.xi.clone());
    let window = cfg.fit_window();
    let idx = traj.window(window[0], window[1]);
    if idx.len() < 4 {
        return Err(Error::validation(format!("fit window {window:?} holds fewer than four snapshots")));
    }
    let g = cfg.gevrey();
    let mut residuals = Vec::new();
    for n in 1..=cfg.order {
        let series = ex.series(n as usize)?;
        let r: Vec<SpectralField> = idx.iter().map(|&i| traj.states[i].sub(&ep_eval(&series, traj.times[i]))).collect();
        let max_relative = idx.iter().zip(&r).map(|(&i, r)| r.norm_h() / traj.states[i].norm_h()).fold(0.0, f64::max);
        let at_floor = max_relative < FLOOR;
        let ts: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
        let fit = |f: &dyn Fn(&SpectralField) -> f64| -> Result<Option<SlopeFit>> {
            if at_floor {
                return Ok(None);
            }
            let ls: Vec<f64> = r.iter().map(|u| f(u).max(1e-300).ln()).collect();
            let lf = line_fit(&ts, &ls)?;
            Ok(Some(SlopeFit { slope: lf.slope, window, residual: lf.rms }))
        };
        residuals.push(ResidualDecay {
            order: n,
            bound: -(n as f64),
            h: fit(&|u| u.norm_h())?,
            gevrey: fit(&|u| norm(u, g))?,
            max_relative,
            at_floor,
        });
    }
    let report = ExpandReport { order: cfg.order, gevrey: cfg.gevrey, fits: ext.fits, residuals };
    write_json(&run.dir.join("expand.json"), &report)?;
    run.finish("expand", &["expand.json"], start)
}

#[derive(Serialize)]
struct DiagramPoint {
    t: f64,
    /// `|W(S(t)u0) - S_normal(t)W(u0)|_*`, standard weights.
    star_error: f64,
    /// Worst relative fit residual of the extraction at `t`.
    residual: f64,
}

#[derive(Serialize)]
struct NormalizeReport {
    order: u32,
    components: Vec<ComponentReport>,
    diagram: Vec<DiagramPoint>,
}

#[derive(Serialize)]
struct ComponentReport {
    n: u32,
    norm: f64,
    fit: ComponentFit,
}

pub fn normalize(run: &Run, times: &[f64]) -> Result<()> {
    let traj = run.trajectory()?;
    let start = Instant::now();
    let cfg = &run.config;
    let ext = extract(cfg, &traj)?;
    let w = WeightSchedule::standard(cfg.order.max(10));
    let mut diagram = Vec::new();
    for &t in times {
        if !(t > 0.0 && t < cfg.t_end) {
            return Err(Error::validation(format!("diagram time {t} is outside (0, t_end)")));
        }
        let tail = traj.tail_from(t);
        let windows: Vec<[f64; 2]> = cfg.windows.iter().map(|w| [(w[0] - t).max(0.0), w[1] - t]).collect();
        let opts = ExtractOptions { windows, ..ExtractOptions::default() };
        let wt = extract_normalization(&tail, cfg.order, &opts)?;
        let sn = s_normal(&ext.xi, traj.times[traj.index_at(t)], cfg.order as usize)?;
        let residual = wt.fits.iter().fold(0.0f64, |a, f| a.max(f.relative_residual));
        diagram.push(DiagramPoint { t, star_error: star_norm(&wt.xi.sub(&sn), &w), residual });
    }
    let components =
        ext.fits.iter().map(|f| ComponentReport { n: f.n, norm: ext.xi.comp_norm(f.n), fit: f.clone() }).collect();
    write_json(&run.dir.join("xi.json"), &NormalStateFile::from_state(&ext.xi))?;
    write_json(&run.dir.join("normalize.json"), &NormalizeReport { order: cfg.order, components, diagram })?;
    run.finish("normalize", &["xi.json", "normalize.json"], start)
}

#[derive(Serialize)]
struct DiagnoseReport {
    quotient: QuotientSeries,
    membership: Membership,
    helicity: HelicityReport,
}

pub fn diagnose(run: &Run) -> Result<()> {
    let traj = run.trajectory()?;
    let start = Instant::now();
    let cfg = &run.config;
    let window = cfg.fit_window();
    let quotient = dirichlet_limit(&traj, window)?;
    let k = (cfg.order as usize).min(traj.modes().shells().count());
    let membership = manifold_membership(&traj, k, window, 0.5)?;
    let helicity = helicity_report(&traj, window)?;
    write_json(&run.dir.join("diagnose.json"), &DiagnoseReport { quotient, membership, helicity })?;
    run.finish("diagnose", &["diagnose.json"], start)
}

/// Runs `f` on every run, concurrently when `parallel`; returns the
/// failures in input order.
pub fn for_each_run<F>(runs: &[Run], parallel: bool, f: F) -> Vec<(String, Error)>
where
    F: Fn(&Run) -> Result<()> + Sync,
{
    use rayon::prelude::*;
    let results: Vec<Result<()>> =
        if parallel { runs.par_iter().map(&f).collect() } else { runs.iter().map(&f).collect() };
    runs.iter().zip(results).filter_map(|(r, res)| res.err().map(|e| (r.name.clone(), e))).collect()
}

pub fn ensure_unique(runs: &[Run]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for r in runs {
        if !seen.insert(&r.name) {
            return Err(Error::validation(format!("two configs share the run name {:?}", r.name)));
        }
    }
    Ok(())
}

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use torusnf::init::{beltrami, invariant_family, m_perp, random_field, random_on_shells, rng_from_seed};
use torusnf::normal_form::{Expansion, NormalStateFile, MAX_LEVELS};
use torusnf::solver::EvolveOptions;
use torusnf::spectral::{Dim, FieldFile, GevreyParams, ModeSet, SpectralField, WaveVector};
use torusnf::{Error, Result};

/// One run, as read from a JSON file. Relative paths inside are resolved
/// against the file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output subdirectory; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub dimension: usize,
    pub lambda_max: u32,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    /// Expansion order `N`.
    #[serde(default = "default_order")]
    pub order: u32,
    /// Extraction window per level; missing levels use the built-in default.
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
    /// Window for slopes and limits; defaults to the second half of the run.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub gevrey: Gevrey,
    pub initial: InitialData,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gevrey {
    pub alpha: f64,
    pub sigma: f64,
}

impl Default for Gevrey {
    fn default() -> Self {
        Gevrey { alpha: 1.0, sigma: 0.1 }
    }
}

fn default_order() -> u32 {
    3
}

fn default_seed() -> u64 {
    2024
}

fn default_amplitude() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// A field file.
    File { path: PathBuf },
    /// Seeded Gaussian data rescaled to `|u0| = amplitude`, optionally only
    /// on some shells.
    RandomSmall {
        amplitude: f64,
        #[serde(default)]
        shells: Option<Vec<u32>>,
    },
    Beltrami {
        shell: u32,
        sign: i32,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// `profile` lists harmonics `j >= 1` with complex coefficients.
    InvariantFamily { k: [i32; 3], profile: Vec<Harmonic> },
    MPerp {
        a: [i32; 3],
        shells: Vec<u32>,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// A normal-state file; the data are `sum_n q_n(0, xi)` summed until the
    /// levels fall below `1e-14 |xi|`.
    FromXi { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub j: i32,
    pub re: f64,
    pub im: f64,
}

/// Flag values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
    pub order: Option<u32>,
    pub seed: Option<u64>,
    pub lambda_max: Option<u32>,
}

impl RunConfig {
    /// Parse, apply overrides, make paths absolute and validate.
    pub fn load(path: &Path, ov: &Overrides) -> Result<(String, RunConfig)> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        match &mut cfg.initial {
            InitialData::File { path: p } | InitialData::FromXi { path: p } if p.is_relative() => *p = base.join(&*p),
            _ => {}
        }
        cfg.dt = ov.dt.unwrap_or(cfg.dt);
        cfg.t_end = ov.t_end.unwrap_or(cfg.t_end);
        cfg.stride = ov.stride.unwrap_or(cfg.stride);
        cfg.order = ov.order.unwrap_or(cfg.order);
        cfg.seed = ov.seed.unwrap_or(cfg.seed);
        cfg.lambda_max = ov.lambda_max.unwrap_or(cfg.lambda_max);
        cfg.validate()?;
        let name = match &cfg.name {
            Some(n) => n.clone(),
            None => path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::validation(format!("cannot name a run after {}", path.display())))?
                .to_string(),
        };
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::validation(format!("run name {name:?} is not a plain directory name")));
        }
        Ok((name, cfg))
    }

    pub fn validate(&self) -> Result<()> {
        Dim::from_usize(self.dimension)?;
        let positive = [("dt", self.dt), ("t_end", self.t_end)];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{k} must be positive, got {v}")));
            }
        }
        if self.lambda_max == 0 || self.stride == 0 || self.order == 0 {
            return Err(Error::validation("lambda_max, stride and order must be positive"));
        }
        for w in self.windows.iter().chain(self.fit_window.iter()) {
            if !(w[0] >= 0.0 && w[0] < w[1] && w[1] <= self.t_end + 1e-12) {
                return Err(Error::validation(format!("window {w:?} must satisfy 0 <= a < b <= t_end")));
            }
        }
        GevreyParams::new(self.gevrey.alpha, self.gevrey.sigma)?;
        self.evolve_options().validate()?;
        Ok(())
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { exec: torusnf::exec::Execution::best(), ..EvolveOptions::new(self.dt, self.t_end, self.stride) }
    }

    pub fn fit_window(&self) -> [f64; 2] {
        self.fit_window.unwrap_or([0.5 * self.t_end, self.t_end])
    }

    pub fn gevrey(&self) -> GevreyParams {
        GevreyParams::new(self.gevrey.alpha, self.gevrey.sigma).expect("validated")
    }

    pub fn modes(&self) -> Result<Arc<ModeSet>> {
        ModeSet::shared(Dim::from_usize(self.dimension)?, self.lambda_max)
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        let ms = self.modes()?;
        let mut rng = rng_from_seed(self.seed);
        match &self.initial {
            InitialData::File { path } => {
                let u = FieldFile::read(path)?;
                if !u.modes().same_space(&ms) {
                    return Err(Error::validation(format!("{} does not match dimension/lambda_max", path.display())));
                }
                Ok(u)
            }
            InitialData::RandomSmall { amplitude, shells } => match shells {
                Some(s) => random_on_shells(&ms, s, *amplitude, &mut rng),
                None => random_field(&ms, *amplitude, &mut rng),
            },
            InitialData::Beltrami { shell, sign, amplitude } => beltrami(&ms, *shell, *sign, *amplitude, &mut rng),
            InitialData::InvariantFamily { k, profile } => {
                let p: Vec<(i32, Complex64)> = profile.iter().map(|h| (h.j, Complex64::new(h.re, h.im))).collect();
                invariant_family(&ms, WaveVector(*k), &p)
            }
            InitialData::MPerp { a, shells, amplitude } => m_perp(&ms, *a, shells, *amplitude, &mut rng),
            InitialData::FromXi { path } => {
                let text = std::fs::read_to_string(path)?;
                let f: NormalStateFile = serde_json::from_str(&text)?;
                let xi = f.to_state()?;
                if !xi.modes().same_space(&ms) {
                    return Err(Error::validation(format!("{} does not match dimension/lambda_max", path.display())));
                }
                let ex = Expansion::new(xi);
                let k = ex.converged_order(1e-14, MAX_LEVELS)?;
                ex.initial_data(k)
            }
        }
    }
}

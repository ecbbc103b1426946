//! `torusnf`: batch runs of the torus Navier-Stokes toolkit.
//!
//! Output goes under `--out` (or `$TORUSNF_OUT`), one directory per config.
//! Exit codes: 0 ok, 1 I/O, 2 invalid input, 3 numeric failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use torusnf::pd::{
    flow_check, normal_form, truncated_nse_as_polysystem, verify_conjugacy, FlowCheck, NFResultFile, PolySystemFile,
};
use torusnf::spectral::Dim;
use torusnf::verify::{run_suite, title, VerifyOptions, CRITERIA};
use torusnf::Error;

use commands::{diagnose, ensure_unique, expand, for_each_run, normalize, simulate, Run};
use config::{Overrides, RunConfig};
use manifest::write_json;

#[derive(Parser)]
#[command(name = "torusnf", version, about = "Torus Navier-Stokes: simulation, expansions, normal forms")]
struct Cli {
    /// Output root.
    #[arg(long, global = true, env = "TORUSNF_OUT", default_value = "torusnf-out")]
    out: PathBuf,
    /// Worker threads. With several configs the runs also proceed concurrently.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, check the energy equality, write the trajectory and series.csv.
    Simulate(RunArgs),
    /// Extract the normalization and fit residual decay of the truncated expansion.
    Expand(RunArgs),
    /// Write `xi.json` and check commutation with the normal-form flow.
    Normalize {
        #[command(flatten)]
        run: RunArgs,
        /// Times for the commutation check.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        times: Vec<f64>,
    },
    /// Dirichlet quotient limit, invariant-manifold membership, helicity.
    Diagnose(RunArgs),
    /// Poincare-Dulac normal form of a polynomial system.
    Pdnf(PdnfArgs),
    /// Run the property suite; nonzero exit when a criterion fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run config files (JSON).
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Expansion order N.
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda_max: Option<u32>,
}

#[derive(Args)]
struct PdnfArgs {
    /// System file (JSON).
    #[arg(long, conflicts_with = "nse", required_unless_present = "nse")]
    system: Option<PathBuf>,
    /// Use the Galerkin NSE truncated at this eigenvalue.
    #[arg(long)]
    nse: Option<u32>,
    /// Space dimension for `--nse`.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Normalize through this degree.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Also compare flows from a seeded random direction at several amplitudes.
    #[arg(long)]
    flow_check: bool,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Report path; defaults to `<out>/pdnf.json`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Multiplies every error tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Star-norm weight schedule (JSON).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Subset of criteria, e.g. `1,4,9`.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u32>>,
    /// Report path; defaults to `<out>/verify.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(t) = cause.downcast_ref::<Error>() {
            return t.exit_code() as u8;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::validation("--jobs must be positive").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("building the thread pool")?;
    }
    let parallel = cli.jobs.is_some_and(|j| j > 1);
    match cli.command {
        Command::Simulate(a) => runs(&cli.out, &a, parallel, simulate),
        Command::Expand(a) => runs(&cli.out, &a, parallel, expand),
        Command::Normalize { run, times } => runs(&cli.out, &run, parallel, |r| normalize(r, &times)),
        Command::Diagnose(a) => runs(&cli.out, &a, parallel, diagnose),
        Command::Pdnf(a) => pdnf(&cli.out, &a),
        Command::Verify(a) => verify(&cli.out, &a),
    }
}

fn runs<F>(out: &std::path::Path, a: &RunArgs, parallel: bool, f: F) -> anyhow::Result<ExitCode>
where
    F: Fn(&Run) -> torusnf::Result<()> + Sync,
{
    let ov = Overrides {
        dt: a.dt,
        t_end: a.t_end,
        stride: a.stride,
        order: a.order,
        seed: a.seed,
        lambda_max: a.lambda_max,
    };
    let mut list = Vec::new();
    for p in &a.configs {
        let (name, cfg) = RunConfig::load(p, &ov).with_context(|| format!("config {}", p.display()))?;
        list.push(Run::new(out, name, cfg));
    }
    ensure_unique(&list)?;
    let failures = for_each_run(&list, parallel, f);
    for r in &list {
        if !failures.iter().any(|(n, _)| n == &r.name) {
            println!("{}: ok ({})", r.name, r.dir.display());
        }
    }
    let mut code = 0u8;
    for (name, e) in failures {
        if code == 0 {
            code = e.exit_code() as u8;
        }
        eprintln!("error: {name}: {:#}", anyhow::Error::from(e));
    }
    Ok(ExitCode::from(code))
}

#[derive(serde::Serialize)]
struct PdnfReport {
    source: String,
    dimension: usize,
    eigenvalues: Vec<f64>,
    degree: usize,
    conjugacy_residual: f64,
    flow_check: Option<FlowCheck>,
    normal_form: NFResultFile,
}

fn pdnf(out: &std::path::Path, a: &PdnfArgs) -> anyhow::Result<ExitCode> {
    let (source, sys) = match (&a.system, a.nse) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let f: PolySystemFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            (p.display().to_string(), f.to_system()?)
        }
        (None, Some(l)) => (
            format!("nse dim={} lambda_max={l}", a.dim),
            truncated_nse_as_polysystem(l, Dim::from_usize(a.dim)?)?.system,
        ),
        (None, None) => unreachable!("clap requires one source"),
    };
    let nf = normal_form(&sys, a.degree)?;
    let flow = if a.flow_check {
        let mut rng = torusnf::init::rng_from_seed(a.seed);
        let mut dir: Vec<f64> = (0..sys.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= n);
        let scales: Vec<f64> = (0..6).map(|i| 1e-2 * 10f64.powf(i as f64 / 5.0)).collect();
        Some(flow_check(&sys, &nf, &dir, &scales, 1.0)?)
    } else {
        None
    };
    for w in &nf.warnings {
        eprintln!("warning: {w}");
    }
    let report = PdnfReport {
        source,
        dimension: sys.dimension(),
        eigenvalues: sys.eigenvalues().to_vec(),
        degree: a.degree,
        conjugacy_residual: verify_conjugacy(&sys, &nf, a.degree),
        flow_check: flow,
        normal_form: NFResultFile::from_result(&nf),
    };
    let path = a.output.clone().unwrap_or_else(|| out.join("pdnf.json"));
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    write_json(&path, &report)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(out: &std::path::Path, a: &VerifyArgs) -> anyhow::Result<ExitCode> {
    if !(a.tolerance_scale > 0.0 && a.tolerance_scale.is_finite()) {
        return Err(Error::validation("--tolerance-scale must be positive").into());
    }
    let weights = match &a.weights {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    if let Some(c) = &a.criteria {
        if let Some(bad) = c.iter().find(|id| !CRITERIA.contains(id)) {
            return Err(Error::validation(format!("unknown criterion {bad}")).into());
        }
    }
    let opts = VerifyOptions { seed: a.seed, tolerance_scale: a.tolerance_scale, weights, ..VerifyOptions::default() };
    let report = run_suite(&opts, a.criteria.as_deref());
    for c in &report.criteria {
        println!("criterion {:>2} {}  {}", c.id, if c.passed { "PASS" } else { "FAIL" }, title(c.id));
        for ch in c.checks.iter().filter(|ch| !ch.passed) {
            println!("    {}: {:e} vs {:e}", ch.name, ch.value, ch.threshold);
        }
        if let Some(e) = &c.error {
            println!("    error: {e}");
        }
    }
    let path = a.report.clone().unwrap_or_else(|| out.join("verify.json"));
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(&path, report.to_json())?;
    println!("report: {}", path.display());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

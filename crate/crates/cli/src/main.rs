//! `annulus`: minimizers and verifiers for energies between annuli.
//!
//! JSON goes to stdout; data files go to `--out` paths with a
//! `<out>.manifest.json` sidecar. Exit codes: 0 success, 2 usage or domain
//! error, 3 infeasible instance, 4 verification failure, 5 invalid map file.

mod instance;
mod manifest;
mod verify;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annulus::closed_form::{nitsche_threshold_distortion, nitsche_threshold_energy};
use annulus::competitors::rotate;
use annulus::energy::{
    grid_energy_report, radial_combined_energy, radial_distortion, radial_total_energy,
};
use annulus::ode::Dopri5;
use annulus::ode_shooting::phi_curve;
use annulus::{radial_lift_on, Error, PolarGridMap, Weights};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use instance::{FunctionalArg, InstanceArgs, Solved};
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "annulus",
    version,
    about = "Radial minimizers of combined energies between concentric annuli"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feasibility threshold for radial minimizers.
    Nitsche(NitscheArgs),
    /// Radial minimizer of a functional, with its energy report.
    Minimize(MinimizeArgs),
    /// Run a verification suite; exits 4 on failure.
    Verify(verify::VerifyArgs),
    /// Sampled elasticity curve as `s,phi` CSV.
    PhiCurve(PhiCurveArgs),
    /// Energy report of a grid map file.
    Energy(EnergyArgs),
    /// Write the radial lift of a minimizer as a grid map file.
    Lift(LiftArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ThresholdMode {
    Energy,
    Distortion,
}

#[derive(Args, Serialize)]
struct NitscheArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    big_r: Option<f64>,
    #[arg(long)]
    c: f64,
    #[arg(long, value_enum, default_value_t = ThresholdMode::Energy)]
    mode: ThresholdMode,
}

#[derive(Args, Serialize)]
struct MinimizeArgs {
    #[arg(long, value_enum)]
    functional: FunctionalArg,
    #[command(flatten)]
    #[serde(flatten)]
    instance: InstanceArgs,
    /// Profile CSV (`t,H,Hdot`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    n_t: usize,
    #[arg(long, default_value_t = 256)]
    n_theta: usize,
}

#[derive(Args, Serialize)]
struct PhiCurveArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    s_min: f64,
    #[arg(long, default_value_t = 50.0)]
    s_max: f64,
    /// Number of uniform `s` nodes.
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EnergyArgs {
    /// Grid map JSON file.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    wa: f64,
    #[arg(long, default_value_t = 1.0)]
    wb: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args, Serialize)]
struct LiftArgs {
    #[arg(long, value_enum, default_value_t = FunctionalArg::Energy)]
    functional: FunctionalArg,
    #[command(flatten)]
    #[serde(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 256)]
    n_t: usize,
    #[arg(long, default_value_t = 256)]
    n_theta: usize,
    /// Constant rotation added to the angle.
    #[arg(long, default_value_t = 0.0)]
    rotate: f64,
    #[arg(long)]
    out: PathBuf,
}

/// A suite ran and at least one check failed.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

/// A map file was read but breaks the map invariants.
#[derive(Debug)]
struct InvalidMapFile(Error);

impl std::fmt::Display for InvalidMapFile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid map file: {}", self.0)
    }
}

impl std::error::Error for InvalidMapFile {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 4;
    }
    if err.downcast_ref::<InvalidMapFile>().is_some() {
        return 5;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::BelowNitsche { .. }) => 3,
        Some(
            Error::StepFailure { .. } | Error::BracketFailure { .. } | Error::InversionFailure(_),
        ) => 1,
        _ => 2,
    }
}

/// Pretty JSON on stdout; a closed pipe is an error, not a panic.
pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_nitsche(args: &NitscheArgs) -> Result<()> {
    let (threshold, compared, flag) = match args.mode {
        ThresholdMode::Energy => {
            let r = args.r.context("--r is required for --mode energy")?;
            (
                nitsche_threshold_energy(r, args.c).context("--r/--c")?,
                args.big_r,
                "R",
            )
        }
        ThresholdMode::Distortion => {
            let big_r = args
                .big_r
                .context("--R is required for --mode distortion")?;
            (
                nitsche_threshold_distortion(big_r, args.c).context("--R/--c")?,
                args.r,
                "r",
            )
        }
    };
    let verdict = compared.map(|v| {
        if v >= threshold - 1e-12 {
            "feasible"
        } else {
            "infeasible"
        }
    });
    print_json(&serde_json::json!({
        "mode": args.mode,
        "threshold": threshold,
        "compared": flag,
        "value": compared,
        "verdict": verdict,
        "boundary": compared.map(|v| (v - threshold).abs() <= 1e-12),
        "manifest": RunManifest::new("nitsche", args)?,
    }))
}

fn cmd_minimize(args: &MinimizeArgs) -> Result<()> {
    let inst = &args.instance;
    let w = inst.weights()?;
    let solved = Solved::solve(args.functional, inst)?;
    let base = solved.base();
    let gw = solved.grid_weights(&w);
    // The boundary-regime profile has zero slope at t = 1 and no grid lift.
    let report = match radial_lift_on(base.as_ref(), args.n_t, args.n_theta) {
        Ok(lift) => Some(grid_energy_report(&lift, &gw)?),
        Err(Error::InvalidProfile(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let radial = serde_json::json!({
        "combined_energy": radial_combined_energy(base.as_ref(), &w),
        "distortion": radial_distortion(base.as_ref(), &w)?,
        "total": radial_total_energy(base.as_ref(), &w)?,
    });
    let manifest = RunManifest::new("minimize", args)?
        .grid(args.n_t, args.n_theta)
        .tolerances(serde_json::json!({ "shoot_tol": inst.shoot_tol }));
    if let Some(out) = &args.out {
        solved.profile().write_csv(create(out)?)?;
        manifest.write_sidecar(out)?;
    }
    print_json(&serde_json::json!({
        "functional": args.functional,
        "minimum": solved.minimum(&w)?,
        "solution": solved.summary(),
        "radial": radial,
        "grid_weights": gw,
        "report": report,
        "profile_file": args.out,
        "manifest": manifest,
    }))
}

fn cmd_phi_curve(args: &PhiCurveArgs) -> Result<()> {
    let curve = phi_curve(
        args.q,
        args.c,
        args.gamma,
        (args.s_min, args.s_max),
        args.n,
        &Dopri5::default(),
    )
    .with_context(|| format!("--q {}", args.q))?;
    let manifest = RunManifest::new("phi-curve", args)?;
    if let Some(out) = &args.out {
        curve.write_csv(create(out)?)?;
        manifest.write_sidecar(out)?;
    }
    let n = curve.s_nodes.len();
    print_json(&serde_json::json!({
        "q": curve.q,
        "c": curve.c,
        "gamma": curve.gamma,
        "points": n,
        "s_range": [curve.s_nodes.first(), curve.s_nodes.last()],
        "phi_range": [curve.phi_values.first(), curve.phi_values.last()],
        "maximal_interval_hint": curve.maximal_interval_hint,
        "expected_shape": annulus::ode_shooting::PhiCurve::expected_shape(curve.q, curve.c),
        "satisfies_shape": curve.satisfies_shape(),
        "curve_file": args.out,
        "manifest": manifest,
    }))
}

fn read_map(path: &Path) -> Result<PolarGridMap> {
    let file = File::open(path).with_context(|| format!("--map {}", path.display()))?;
    match PolarGridMap::read_json(BufReader::new(file)) {
        Ok(map) => Ok(map),
        Err(e @ (Error::Json(_) | Error::Io(_))) => {
            Err(anyhow::Error::new(e).context(format!("--map {}", path.display())))
        }
        Err(e) => Err(InvalidMapFile(e).into()),
    }
}

fn cmd_energy(args: &EnergyArgs) -> Result<()> {
    let w = Weights::new(args.wa, args.wb, args.alpha, args.beta)
        .context("--wa/--wb/--alpha/--beta")?;
    let map = read_map(&args.map)?;
    let report = grid_energy_report(&map, &w).map_err(InvalidMapFile)?;
    let manifest = RunManifest::new("energy", args)?.grid(map.n_t(), map.n_theta());
    print_json(&serde_json::json!({ "report": report, "manifest": manifest }))
}

fn cmd_lift(args: &LiftArgs) -> Result<()> {
    let solved = Solved::solve(args.functional, &args.instance)?;
    let map = rotate(
        &radial_lift_on(solved.base().as_ref(), args.n_t, args.n_theta)?,
        args.rotate,
    );
    map.write_json(create(&args.out)?)?;
    let manifest = RunManifest::new("lift", args)?.grid(args.n_t, args.n_theta);
    manifest.write_sidecar(&args.out)?;
    print_json(&serde_json::json!({ "map_file": args.out, "manifest": manifest }))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Nitsche(a) => cmd_nitsche(a),
        Command::Minimize(a) => cmd_minimize(a),
        Command::Verify(a) => verify::run(a),
        Command::PhiCurve(a) => cmd_phi_curve(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Lift(a) => cmd_lift(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

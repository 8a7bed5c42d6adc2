//! Verification suites behind `annulus verify`.

use std::path::PathBuf;

use annulus::closed_form::{solve_combined_energy, Regime};
use annulus::competitors::{competitor_sweep, make_competitor, random_specs, SweepOptions};
use annulus::energy::duality_check;
use annulus::lagrangians::{
    fl_integral_on, verify_energy_lower_bound, verify_total_lower_bound, FreeLagrangian,
    LowerBoundCertificate,
};
use annulus::ode::Dopri5;
use annulus::ode_shooting::{phi_curve, phi_limit_suite, LimitVerdict};
use annulus::{differentiate_grid, radial_lift_on, Error, PolarGridMap, RadialFn, Weights};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::instance::{FunctionalArg, InstanceArgs, Solved};
use crate::manifest::RunManifest;
use crate::{print_json, VerificationFailed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lagrangian,
    Lowerbound,
    Dominance,
    PhiPortrait,
    Duality,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, value_enum, default_value_t = FunctionalArg::Energy)]
    functional: FunctionalArg,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    big_r: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 257)]
    nodes: usize,
    #[arg(long, default_value_t = 1e-8)]
    shoot_tol: f64,
    /// Number of competitors (default 50 for dominance, 10 otherwise).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    n_t: usize,
    #[arg(long, default_value_t = 256)]
    n_theta: usize,
    /// Suite tolerance: duality 1e-7, lagrangian 1e-3, phi-portrait end gap 1e-3.
    #[arg(long)]
    tol: Option<f64>,
    /// Single elasticity curve for the phi-portrait suite.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    s_max: f64,
    /// Dominance table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl VerifyArgs {
    fn instance(&self) -> Result<InstanceArgs> {
        Ok(InstanceArgs {
            r: self
                .r
                .with_context(|| format!("--r is required for --suite {:?}", self.suite))?,
            big_r: self
                .big_r
                .with_context(|| format!("--R is required for --suite {:?}", self.suite))?,
            c: self.c,
            gamma: self.gamma,
            nodes: self.nodes,
            shoot_tol: self.shoot_tol,
        })
    }

    fn sweep_options(&self, default_n: usize) -> SweepOptions {
        SweepOptions {
            n: self.n.unwrap_or(default_n),
            seed: self.seed,
            n_t: self.n_t,
            n_theta: self.n_theta,
            ..SweepOptions::default()
        }
    }

    fn eps_grid(&self) -> f64 {
        let dt = (self.r.unwrap_or(2.0) - 1.0) / (self.n_t.max(2) - 1) as f64;
        10.0 * dt * dt
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    limit: f64,
    pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            limit: 1.0,
            pass: ok,
        }
    }
}

pub fn run(args: &VerifyArgs) -> Result<()> {
    let (checks, details) = match args.suite {
        Suite::Duality => duality(args)?,
        Suite::Lagrangian => lagrangian(args)?,
        Suite::Lowerbound => lowerbound(args)?,
        Suite::Dominance => dominance(args)?,
        Suite::PhiPortrait => phi_portrait(args)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let manifest = RunManifest::new("verify", args)?
        .grid(args.n_t, args.n_theta)
        .seed(args.seed)
        .tolerances(serde_json::json!({ "tol": args.tol, "eps_grid": args.eps_grid(), "shoot_tol": args.shoot_tol }));
    if let Some(out) = &args.out {
        manifest.write_sidecar(out)?;
    }
    print_json(&serde_json::json!({
        "suite": args.suite,
        "pass": pass,
        "checks": checks,
        "details": details,
        "manifest": manifest,
    }))?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(VerificationFailed(failed.join(", ")).into())
    }
}

type SuiteOutput = (Vec<Check>, serde_json::Value);

fn duality(args: &VerifyArgs) -> Result<SuiteOutput> {
    let inst = args.instance()?;
    let sol = solve_combined_energy(inst.pair()?, inst.c, inst.nodes)?;
    let w = Weights::new(inst.c, 1.0, 1.0, 1.0)?;
    let report = duality_check(&sol.profile, &w)?;
    let checks = vec![Check::at_most(
        "relative_gap",
        report.relative_gap,
        args.tol.unwrap_or(1e-7),
    )];
    Ok((checks, serde_json::to_value(report)?))
}

/// The radial lift followed by `n` seeded competitors.
fn maps(base: &(dyn RadialFn + Sync), opts: &SweepOptions) -> Result<Vec<PolarGridMap>> {
    let mut out = vec![radial_lift_on(base, opts.n_t, opts.n_theta)?];
    for spec in random_specs(base, opts) {
        match make_competitor(&spec, opts.n_t, opts.n_theta) {
            Ok(c) => out.push(c.map),
            Err(Error::CannotSatisfyJacobian { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn lagrangian(args: &VerifyArgs) -> Result<SuiteOutput> {
    let inst = args.instance()?;
    let solved = Solved::solve(args.functional, &inst)?;
    let base = solved.base();
    let maps = maps(base.as_ref(), &args.sweep_options(10))?;
    let catalogue = FreeLagrangian::catalogue();
    let tol = args.tol.unwrap_or(1e-3);
    let mut worst = vec![0.0f64; catalogue.len()];
    for map in &maps {
        let d = differentiate_grid(map)?;
        for (k, fl) in catalogue.iter().enumerate() {
            worst[k] = worst[k].max(fl_integral_on(fl, map, &d).relative_gap);
        }
    }
    let checks = catalogue
        .iter()
        .zip(&worst)
        .enumerate()
        .map(|(k, (fl, &gap))| {
            Check::at_most(format!("{}[{}] relative_gap", fl.label(), k % 3), gap, tol)
        })
        .collect();
    let angular_printed: Vec<_> = catalogue
        .iter()
        .filter_map(|fl| {
            let p = fl.printed_prediction(inst.r)?;
            Some(serde_json::json!({ "predicted": fl.predicted(inst.r, inst.big_r), "printed_variant": p }))
        })
        .collect();
    Ok((
        checks,
        serde_json::json!({ "maps": maps.len(), "angular": angular_printed }),
    ))
}

fn certificate_checks(
    certs: &[LowerBoundCertificate],
    eps: f64,
    lift_deviation: f64,
) -> Vec<Check> {
    let mut checks = Vec::new();
    let lift = &certs[0];
    checks.push(Check::at_most(
        "lift relative_integral_gap",
        lift.relative_integral_gap.abs(),
        1e-3,
    ));
    checks.push(Check::at_most(
        "lift equality_deviation",
        lift.equality_locus_deviation,
        lift_deviation,
    ));
    for (k, c) in certs.iter().enumerate() {
        let density_scale = (c.functional / c.bound_integral.abs().max(1.0))
            .abs()
            .max(1.0);
        checks.push(Check::at_least(
            format!("map {k} pointwise_margin_min"),
            c.pointwise_margin_min,
            -eps * density_scale,
        ));
        checks.push(Check::at_least(
            format!("map {k} functional - minimum (relative)"),
            (c.functional - c.minimum) / c.minimum.abs(),
            -eps,
        ));
    }
    checks
}

fn lowerbound(args: &VerifyArgs) -> Result<SuiteOutput> {
    let inst = args.instance()?;
    let w = inst.weights()?;
    let solved = Solved::solve(args.functional, &inst)?;
    let base = solved.base();
    let maps = maps(base.as_ref(), &args.sweep_options(10))?;
    let eps = args.eps_grid();
    let (certs, deviation) = match &solved {
        Solved::Energy(sol) => {
            let regime = if sol.regime == Regime::Elastic {
                Regime::Elastic
            } else {
                Regime::NonElastic
            };
            let certs = maps
                .iter()
                .map(|m| verify_energy_lower_bound(m, sol, &w, regime))
                .collect::<annulus::Result<Vec<_>>>()?;
            (certs, 1e-6)
        }
        Solved::Total(sol) => {
            let certs = maps
                .iter()
                .map(|m| verify_total_lower_bound(m, sol, &w))
                .collect::<annulus::Result<Vec<_>>>()?;
            (certs, 1e-5)
        }
        Solved::Distortion(_) => bail!(Error::Domain(
            "the lowerbound suite covers --functional energy|total".into()
        )),
    };
    let checks = certificate_checks(&certs, eps, deviation);
    Ok((checks, serde_json::to_value(&certs)?))
}

fn dominance(args: &VerifyArgs) -> Result<SuiteOutput> {
    let inst = args.instance()?;
    let w = inst.weights()?;
    let solved = Solved::solve(args.functional, &inst)?;
    let gw = solved.grid_weights(&w);
    let minimum = solved.minimum(&w)?;
    let base = solved.base();
    let table = competitor_sweep(
        base.as_ref(),
        &gw,
        args.functional.sweep_functional(),
        &args.sweep_options(50),
    )?;
    if let Some(out) = &args.out {
        table.write_csv(
            std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?,
        )?;
    }
    let lift_gap = (table.baseline - minimum) / minimum;
    let checks = vec![
        Check::at_least("min_gap", table.min_gap, -table.eps_grid),
        Check::at_most("lift gap vs radial minimum", lift_gap.abs(), table.eps_grid),
    ];
    Ok((
        checks,
        serde_json::json!({
            "minimum": minimum,
            "baseline": table.baseline,
            "eps_grid": table.eps_grid,
            "failures": table.failures,
            "solution": solved.summary(),
            "rows": table.rows,
        }),
    ))
}

/// `lim_{s→∞} Φ_q(s)` for `c < 1`: 0 below `q = 1`, `1/c` above.
fn expected_tail(q: f64, c: f64) -> Option<f64> {
    (c < 1.0).then(|| if q < 1.0 { 0.0 } else { 1.0 / c })
}

fn phi_portrait(args: &VerifyArgs) -> Result<SuiteOutput> {
    let (c, gamma) = (args.c, args.gamma);
    let ode = Dopri5::default();
    let balanced = 1.0 / c;
    let qs = match args.q {
        Some(q) => vec![q],
        None => vec![0.1, 1.0 + 0.3 * (balanced - 1.0), balanced, 1.5 * balanced],
    };
    let tol = args.tol.unwrap_or(1e-3);
    let mut checks = Vec::new();
    let mut curves = Vec::new();
    for &q in &qs {
        let curve = phi_curve(q, c, gamma, (1.0, args.s_max), 400, &ode)
            .with_context(|| format!("--q {q}"))?;
        checks.push(Check::holds(
            format!("q={q} monotone in its band"),
            curve.satisfies_shape(),
        ));
        let last = *curve.phi_values.last().context("empty curve")?;
        let reached = *curve.s_nodes.last().context("empty curve")?;
        checks.push(Check::at_least(
            format!("q={q} reaches s_max"),
            reached,
            args.s_max,
        ));
        if let Some(limit) = expected_tail(q, c) {
            checks.push(Check::at_most(
                format!("q={q} end gap at s={reached}"),
                (last - limit).abs(),
                tol,
            ));
        }
        curves.push(serde_json::json!({
            "q": q,
            "phi_at_s_max": last,
            "expected_shape": annulus::ode_shooting::PhiCurve::expected_shape(q, c),
            "maximal_interval_hint": curve.maximal_interval_hint,
        }));
    }
    let limits = if args.q.is_none() {
        let report = phi_limit_suite(c, gamma, &[0.5, 2.0], &ode)?;
        for seq in &report.sequences {
            checks.push(Check::holds(
                format!("{:?} at s={}", seq.claim, seq.s),
                seq.verdict == LimitVerdict::Consistent,
            ));
        }
        for nc in &report.non_crossing {
            checks.push(Check::holds(
                format!("non-crossing at s={}", nc.s),
                nc.increasing,
            ));
        }
        Some(report)
    } else {
        None
    };
    Ok((
        checks,
        serde_json::json!({ "curves": curves, "limits": limits }),
    ))
}

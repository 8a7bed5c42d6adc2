//! Non-radial admissible maps built by perturbing a radial minimizer, and
//! sweeps comparing their energies with the radial one.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{grid_energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::{radial_lift_on, uniform_nodes, PolarGridMap, RadialFn, Weights};

const MAX_HALVINGS: u32 = 20;

/// A perturbation of the radial lift of `base`:
/// `ρ = H(t) + ε_r φ(t) cos(mθ + φ₀)`,
/// `Θ = θ + ε_a ψ(t) sin(mθ + φ₀) + twist · ln t / ln r`,
/// with `φ = ψ = sin(π k (t−1)/(r−1))`, `m = mode_theta`, `k = mode_t`, and
/// the phase `φ₀` drawn from `seed`.
#[derive(Clone, Copy)]
pub struct PerturbationSpec<'a> {
    pub base: &'a (dyn RadialFn + Sync),
    pub eps_radial: f64,
    pub eps_angular: f64,
    /// Relative rotation of the outer circle against the inner one.
    pub twist: f64,
    pub mode_t: u32,
    pub mode_theta: u32,
    pub seed: u64,
}

impl<'a> PerturbationSpec<'a> {
    /// Zero perturbation of `base`.
    pub fn radial(base: &'a (dyn RadialFn + Sync)) -> Self {
        Self {
            base,
            eps_radial: 0.0,
            eps_angular: 0.0,
            twist: 0.0,
            mode_t: 1,
            mode_theta: 1,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mode_t < 1 || self.mode_theta < 1 {
            return Err(Error::Domain(format!(
                "modes must be at least 1, got mode_t={} mode_theta={}",
                self.mode_t, self.mode_theta
            )));
        }
        if ![self.eps_radial, self.eps_angular, self.twist]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::Domain(
                "perturbation amplitudes must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Phase offset in `[0, 2π)`, the first draw of the seeded generator.
    pub fn phase(&self) -> f64 {
        TAU * unit_draw(&mut SplitMix64::seed_from_u64(self.seed))
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn unit_draw(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A generated map with the amplitudes actually used.
#[derive(Clone, Debug)]
pub struct Competitor {
    pub map: PolarGridMap,
    pub eps_radial: f64,
    pub eps_angular: f64,
    /// Number of amplitude halvings needed to reach `J > 0`.
    pub halvings: u32,
}

fn sample(
    spec: &PerturbationSpec,
    eps_r: f64,
    eps_a: f64,
    n_t: usize,
    n_theta: usize,
) -> Result<PolarGridMap> {
    let (lo, r) = spec.base.span();
    let big_r = spec.base.value(r).0;
    let phase = spec.phase();
    let ln_r = r.ln();
    let ts = uniform_nodes(lo, r, n_t);
    let mut rho = Vec::with_capacity(n_t * n_theta);
    let mut theta = Vec::with_capacity(n_t * n_theta);
    for (i, &t) in ts.iter().enumerate() {
        let (h, _) = spec.base.value(t);
        // Exact zeros on the boundary rows keep the circles fixed.
        let bump = if i == 0 || i + 1 == n_t {
            0.0
        } else {
            (PI * spec.mode_t as f64 * (t - lo) / (r - lo)).sin()
        };
        let twist = spec.twist * t.ln() / ln_r;
        for j in 0..n_theta {
            let th = TAU * j as f64 / n_theta as f64;
            let arg = spec.mode_theta as f64 * th + phase;
            let p = h + eps_r * bump * arg.cos();
            if !(1.0..=big_r).contains(&p) && bump != 0.0 {
                return Err(Error::ClassViolation(format!(
                    "rho={p} leaves [1, {big_r}] at node (i={i}, j={j}), t={t}"
                )));
            }
            rho.push(p);
            theta.push(th + eps_a * bump * arg.sin() + twist);
        }
    }
    PolarGridMap::new(n_t, n_theta, r, big_r, rho, theta)
}

/// Samples the perturbed map on an `n_t × n_θ` grid, halving both
/// amplitudes until the map is admissible (at most 20 times).
pub fn make_competitor(spec: &PerturbationSpec, n_t: usize, n_theta: usize) -> Result<Competitor> {
    spec.validate()?;
    let (mut eps_r, mut eps_a) = (spec.eps_radial, spec.eps_angular);
    for halvings in 0..=MAX_HALVINGS {
        match sample(spec, eps_r, eps_a, n_t, n_theta) {
            Ok(map) => {
                return Ok(Competitor {
                    map,
                    eps_radial: eps_r,
                    eps_angular: eps_a,
                    halvings,
                })
            }
            Err(Error::NonPositiveJacobian { .. } | Error::ClassViolation(_)) => {
                eps_r *= 0.5;
                eps_a *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::CannotSatisfyJacobian {
        halvings: MAX_HALVINGS,
    })
}

/// Post-composes with the rotation by `phi0`.
pub fn rotate(map: &PolarGridMap, phi0: f64) -> PolarGridMap {
    map.rotated(phi0)
}

/// Functional compared in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    CombinedEnergy,
    CombinedDistortion,
    /// `α D + β D/J` with `D = w_a²|h_N|² + w_b²|h_T|²`.
    TotalEnergy,
}

impl Functional {
    pub fn pick(self, report: &EnergyReport) -> f64 {
        match self {
            Self::CombinedEnergy => report.combined_energy,
            Self::CombinedDistortion => report.combined_distortion,
            Self::TotalEnergy => report.total_hnht,
        }
    }
}

/// Ranges from which sweep perturbations are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub n: usize,
    pub seed: u64,
    pub n_t: usize,
    pub n_theta: usize,
    pub eps_radial_max: f64,
    pub eps_angular_max: f64,
    pub twist_max: f64,
    pub mode_t_max: u32,
    pub mode_theta_max: u32,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n: 50,
            seed: 0,
            n_t: 129,
            n_theta: 128,
            eps_radial_max: 0.2,
            eps_angular_max: 0.2,
            twist_max: 0.5,
            mode_t_max: 3,
            mode_theta_max: 4,
        }
    }
}

/// One competitor of a sweep. Generation failures fill `error` instead of
/// the energy columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceRow {
    pub index: usize,
    /// Amplitudes after any halving.
    pub eps_r: f64,
    pub eps_a: f64,
    pub twist: f64,
    pub mode_t: u32,
    pub mode_theta: u32,
    pub halvings: u32,
    pub energy: Option<f64>,
    /// `(energy − baseline) / baseline`.
    pub gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceTable {
    pub functional: Functional,
    pub weights: Weights,
    pub options: SweepOptions,
    /// The functional on the radial lift over the same grid.
    pub baseline: f64,
    /// `10 Δt²`, the discretization allowance for gaps.
    pub eps_grid: f64,
    pub min_gap: f64,
    pub failures: usize,
    pub rows: Vec<DominanceRow>,
}

impl DominanceTable {
    /// Every generated competitor is at least the baseline, up to `eps_grid`.
    pub fn dominated(&self) -> bool {
        self.min_gap >= -self.eps_grid
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eps_r", "eps_a", "mode", "energy", "gap"])?;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for row in &self.rows {
            w.write_record([
                row.index.to_string(),
                row.eps_r.to_string(),
                row.eps_a.to_string(),
                format!("{}x{}", row.mode_t, row.mode_theta),
                opt(row.energy),
                opt(row.gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The `opts.n` perturbations a sweep with `opts` would draw, in index
/// order. Drawn sequentially so they never depend on scheduling.
pub fn random_specs<'a>(
    base: &'a (dyn RadialFn + Sync),
    opts: &SweepOptions,
) -> Vec<PerturbationSpec<'a>> {
    let mut rng = SplitMix64::seed_from_u64(opts.seed);
    (0..opts.n)
        .map(|_| {
            let mut draw = || unit_draw(&mut rng);
            PerturbationSpec {
                base,
                eps_radial: opts.eps_radial_max * draw(),
                eps_angular: opts.eps_angular_max * draw(),
                twist: opts.twist_max * (2.0 * draw() - 1.0),
                mode_t: 1 + (draw() * opts.mode_t_max.max(1) as f64) as u32,
                mode_theta: 1 + (draw() * opts.mode_theta_max.max(1) as f64) as u32,
                seed: rng.next_u64(),
            }
        })
        .collect()
}

/// Draws `opts.n` perturbations of `base` from `opts.seed` and compares
/// `functional` on each with its value on the radial lift.
pub fn competitor_sweep(
    base: &(dyn RadialFn + Sync),
    w: &Weights,
    functional: Functional,
    opts: &SweepOptions,
) -> Result<DominanceTable> {
    let lift = radial_lift_on(base, opts.n_t, opts.n_theta)?;
    let baseline = functional.pick(&grid_energy_report(&lift, w)?);
    let (lo, hi) = base.span();
    let dt = (hi - lo) / (opts.n_t - 1) as f64;

    let specs = random_specs(base, opts);

    let rows: Vec<DominanceRow> = specs
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let mut row = DominanceRow {
                index,
                eps_r: spec.eps_radial,
                eps_a: spec.eps_angular,
                twist: spec.twist,
                mode_t: spec.mode_t,
                mode_theta: spec.mode_theta,
                halvings: 0,
                energy: None,
                gap: None,
                error: None,
            };
            let outcome = make_competitor(spec, opts.n_t, opts.n_theta).and_then(|c| {
                let value = functional.pick(&grid_energy_report(&c.map, w)?);
                Ok((c, value))
            });
            match outcome {
                Ok((c, value)) => {
                    row.eps_r = c.eps_radial;
                    row.eps_a = c.eps_angular;
                    row.halvings = c.halvings;
                    row.energy = Some(value);
                    row.gap = Some((value - baseline) / baseline);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    let min_gap = rows
        .iter()
        .filter_map(|r| r.gap)
        .fold(f64::INFINITY, f64::min);
    Ok(DominanceTable {
        functional,
        weights: *w,
        options: *opts,
        baseline,
        eps_grid: 10.0 * dt * dt,
        min_gap,
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
    })
}

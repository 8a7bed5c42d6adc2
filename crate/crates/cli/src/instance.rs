//! Instance flags and the radial minimizer they select.

use annulus::closed_form::{
    solve_combined_distortion, solve_combined_energy, DistortionSolution, EnergySolution,
};
use annulus::competitors::Functional;
use annulus::energy::radial_total_energy;
use annulus::ode_shooting::{shoot, ShootOptions, ShootResult};
use annulus::{AnnulusPair, RadialFn, RadialProfile, Weights};
use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalArg {
    Energy,
    Distortion,
    Total,
}

impl FunctionalArg {
    pub fn sweep_functional(self) -> Functional {
        match self {
            Self::Energy => Functional::CombinedEnergy,
            Self::Distortion => Functional::CombinedDistortion,
            Self::Total => Functional::TotalEnergy,
        }
    }
}

/// Annuli `A(1, r)`, `B(1, R)` and the weight ratios. Weights are
/// `(w_a, w_b, alpha, beta) = (c, 1, gamma, 1)`.
#[derive(Clone, Debug, Args, Serialize)]
pub struct InstanceArgs {
    /// Outer radius of the domain annulus A(1, r).
    #[arg(long)]
    pub r: f64,
    /// Outer radius of the target annulus B(1, R).
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Anisotropy ratio c = w_a / w_b.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Mixing ratio gamma = alpha / beta (total energy only).
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Profile nodes for closed-form and shot solutions.
    #[arg(long, default_value_t = 257)]
    pub nodes: usize,
    /// Relative shooting tolerance on H(r) = R.
    #[arg(long, default_value_t = 1e-8)]
    pub shoot_tol: f64,
}

impl InstanceArgs {
    pub fn pair(&self) -> Result<AnnulusPair> {
        AnnulusPair::new(self.r, self.big_r).context("--r/--R")
    }

    pub fn weights(&self) -> Result<Weights> {
        Weights::from_ratios(self.c, self.gamma).context("--c/--gamma")
    }

    pub fn shoot_options(&self) -> ShootOptions {
        ShootOptions {
            tol: self.shoot_tol,
            n_nodes: self.nodes.max(3),
            ..ShootOptions::default()
        }
    }
}

pub enum Solved {
    Energy(EnergySolution),
    Distortion(DistortionSolution),
    Total(Box<ShootResult>),
}

impl Solved {
    pub fn solve(functional: FunctionalArg, inst: &InstanceArgs) -> Result<Self> {
        let pair = inst.pair()?;
        inst.weights()?;
        Ok(match functional {
            FunctionalArg::Energy => Self::Energy(solve_combined_energy(pair, inst.c, inst.nodes)?),
            FunctionalArg::Distortion => {
                Self::Distortion(solve_combined_distortion(pair, inst.c, inst.nodes)?)
            }
            FunctionalArg::Total => Self::Total(Box::new(shoot(
                pair,
                inst.c,
                inst.gamma,
                &inst.shoot_options(),
            )?)),
        })
    }

    /// The minimizer as a radial function.
    pub fn base(&self) -> Box<dyn RadialFn + Sync + '_> {
        match self {
            Self::Energy(s) => Box::new(s.exact()),
            Self::Distortion(s) => Box::new(s.exact()),
            Self::Total(s) => Box::new(s.trajectory.clone()),
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        match self {
            Self::Energy(s) => &s.profile,
            Self::Distortion(s) => &s.profile,
            Self::Total(s) => &s.profile,
        }
    }

    /// Weights under which the grid functional of this kind is the one the
    /// minimizer minimizes. The distortion minimizer for ratio `c` minimizes
    /// `∫ D[w_b, w_a] / J`, so its axes are swapped.
    pub fn grid_weights(&self, w: &Weights) -> Weights {
        match self {
            Self::Distortion(_) => w.swap_axes(),
            _ => *w,
        }
    }

    /// Radial value of the minimized functional.
    pub fn minimum(&self, w: &Weights) -> Result<f64> {
        Ok(match self {
            Self::Energy(s) => s.energy_for(w),
            Self::Distortion(s) => w.w_a() * w.w_b() * s.closed_form_distortion,
            Self::Total(s) => radial_total_energy(&s.trajectory, w)?,
        })
    }

    pub fn summary(&self) -> serde_json::Value {
        match self {
            Self::Energy(s) => serde_json::json!({
                "mu": s.mu,
                "regime": s.regime,
                "closed_form_energy": s.closed_form_energy,
            }),
            Self::Distortion(s) => serde_json::json!({
                "nu": s.nu,
                "closed_form_distortion": s.closed_form_distortion,
                "nu_swapped_formula": s.nu_swapped_formula,
                "nu_mixed_formula": s.nu_mixed_formula,
            }),
            Self::Total(s) => serde_json::json!({
                "q": s.q,
                "case": s.case_label,
                "concavity": s.concavity,
                "concavity_margin_min": s.concavity_margin_min,
                "concavity_margin_max": s.concavity_margin_max,
                "residual_sup": s.ode_residual_sup,
                "end_error": s.end_error,
                "bisections": s.bisections,
            }),
        }
    }
}

//! Radial quadrature and grid summation of the energy functionals, and the
//! inverse-map duality check.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    differentiate_grid, GridRule, PolarGridMap, RadialFn, RadialProfile, Weights,
};
use crate::quadrature::{CompensatedSum, CompositeGauss};

/// Points per piece when a radial function is only piecewise smooth.
const PIECE_POINTS: usize = 8;

fn piece_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(PIECE_POINTS).expect("non-zero"))
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// `∫ f(t, H, Ḣ) dt` over the span of `p`: Gauss per smooth piece for sampled
/// profiles, the standard composite rule otherwise.
pub fn radial_integral<P, F>(p: &P, mut f: F) -> Result<f64>
where
    P: RadialFn + ?Sized,
    F: FnMut(f64, f64, f64) -> Result<f64>,
{
    match p.breakpoints() {
        Some(knots) => {
            let mut acc = CompensatedSum::new();
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (x, wt) in piece_rule() {
                    let t = mid + half * x;
                    let (h, d) = p.value(t);
                    acc.add(wt * half * f(t, h, d)?);
                }
            }
            Ok(acc.value())
        }
        None => {
            let (lo, hi) = p.span();
            CompositeGauss::standard().try_integrate(lo, hi, |t| {
                let (h, d) = p.value(t);
                f(t, h, d)
            })
        }
    }
}

/// Combined energy `2π ∫ t (w_a² Ḣ² + w_b² H²/t²) dt` of a radial map.
pub fn radial_combined_energy<P: RadialFn + ?Sized>(p: &P, w: &Weights) -> f64 {
    let (a2, b2) = (w.w_a().powi(2), w.w_b().powi(2));
    let v: Result<f64> = radial_integral(p, |t, h, d| Ok(t * (a2 * d * d + b2 * h * h / (t * t))));
    TAU * v.expect("integrand is infallible")
}

fn endpoint_degenerate<P: RadialFn + ?Sized>(p: &P) -> bool {
    let (lo, hi) = p.span();
    let (h0, d0) = p.value(lo);
    let (h1, d1) = p.value(hi);
    h0 * d0 <= 0.0 || h1 * d1 <= 0.0
}

/// Radial distortion `2π ∫ t (w_b² Ḣ² + w_a² H²/t²) / (Ḣ H / t) dt`.
///
/// Returns `+∞` when the Jacobian vanishes only at an endpoint.
pub fn radial_distortion<P: RadialFn + ?Sized>(p: &P, w: &Weights) -> Result<f64> {
    let (a2, b2) = (w.w_a().powi(2), w.w_b().powi(2));
    let v = radial_integral(p, |t, h, d| {
        let jac = d * h / t;
        if !(jac > 0.0) {
            return Err(Error::DegenerateJacobian { t });
        }
        Ok(t * (b2 * d * d + a2 * h * h / (t * t)) / jac)
    })?;
    Ok(if endpoint_degenerate(p) {
        f64::INFINITY
    } else {
        TAU * v
    })
}

/// Total energy `2π ∫ (α t + β t²/(H Ḣ)) (w_a² Ḣ² + w_b² H²/t²) dt`.
pub fn radial_total_energy<P: RadialFn + ?Sized>(p: &P, w: &Weights) -> Result<f64> {
    let (a2, b2) = (w.w_a().powi(2), w.w_b().powi(2));
    let (alpha, beta) = (w.alpha(), w.beta());
    let v = radial_integral(p, |t, h, d| {
        if !(h * d > 0.0) {
            return Err(Error::DegenerateJacobian { t });
        }
        Ok((alpha * t + beta * t * t / (h * d)) * (a2 * d * d + b2 * h * h / (t * t)))
    })?;
    Ok(if beta > 0.0 && endpoint_degenerate(p) {
        f64::INFINITY
    } else {
        TAU * v
    })
}

/// Grid description carried by every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridMeta {
    pub n_t: usize,
    pub n_theta: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl GridMeta {
    pub fn of(map: &PolarGridMap) -> Self {
        Self {
            n_t: map.n_t(),
            n_theta: map.n_theta(),
            r: map.r(),
            big_r: map.big_r(),
        }
    }
}

/// Energies of a grid map with pointwise diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `∫ D[a,b]`, `D = w_a²|h_N|² + w_b²|h_T|²`.
    pub combined_energy: f64,
    /// `∫ D[a,b] / J`.
    pub combined_distortion: f64,
    /// `∫ (w_a²|∇ρ|² + w_b²ρ²|∇Θ|²) / J`, the inverse-map energy form.
    pub grad_distortion: f64,
    /// `α·combined_energy + β·combined_distortion`.
    pub total_hnht: f64,
    /// `α·combined_energy + β·grad_distortion`.
    pub total_dual: f64,
    pub integrand_min_jacobian: f64,
    pub integrand_max_jacobian: f64,
    pub energy_density_min: f64,
    pub energy_density_max: f64,
    pub distortion_density_min: f64,
    pub distortion_density_max: f64,
    pub weights: Weights,
    pub grid: GridMeta,
}

/// Evaluates every functional on a grid map.
pub fn grid_energy_report(map: &PolarGridMap, w: &Weights) -> Result<EnergyReport> {
    let d = differentiate_grid(map)?;
    let rule = GridRule::new(map);
    let (a2, b2) = (w.w_a().powi(2), w.w_b().powi(2));
    let dens = |k: usize| a2 * d.h_n_sq[k] + b2 * d.h_t_sq[k];
    let grad = |k: usize| a2 * d.grad_rho_sq[k] + b2 * d.rho_sq_grad_theta_sq[k];
    let combined_energy = rule.integrate(dens);
    let combined_distortion = rule.integrate(|k| dens(k) / d.jac[k]);
    let grad_distortion = rule.integrate(|k| grad(k) / d.jac[k]);
    let range = |f: &dyn Fn(usize) -> f64| {
        (0..d.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            let v = f(k);
            (lo.min(v), hi.max(v))
        })
    };
    let (jmin, jmax) = range(&|k| d.jac[k]);
    let (emin, emax) = range(&dens);
    let (dmin, dmax) = range(&|k| dens(k) / d.jac[k]);
    Ok(EnergyReport {
        combined_energy,
        combined_distortion,
        grad_distortion,
        total_hnht: w.alpha() * combined_energy + w.beta() * combined_distortion,
        total_dual: w.alpha() * combined_energy + w.beta() * grad_distortion,
        integrand_min_jacobian: jmin,
        integrand_max_jacobian: jmax,
        energy_density_min: emin,
        energy_density_max: emax,
        distortion_density_min: dmin,
        distortion_density_max: dmax,
        weights: *w,
        grid: GridMeta::of(map),
    })
}

/// Both sides of the inverse-map identity for a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    /// Combined energy `E[w_a, w_b]` of the numerically inverted profile.
    pub energy_of_inverse: f64,
    /// Radial distortion of the original profile.
    pub distortion_of_original: f64,
    pub relative_gap: f64,
}

/// Solves `H(t) = s` on the profile interpolant to 1e-12 relative.
pub fn invert_profile(p: &RadialProfile, s: f64) -> Result<f64> {
    let (ts, hs) = (p.t_nodes(), p.h_values());
    let n = ts.len();
    if !(s >= hs[0] && s <= hs[n - 1]) {
        return Err(Error::InversionFailure(format!(
            "s={s} outside the image [{}, {}]",
            hs[0],
            hs[n - 1]
        )));
    }
    let k = hs.partition_point(|&h| h <= s).clamp(1, n - 1) - 1;
    if hs[k] == s {
        return Ok(ts[k]);
    }
    let (mut lo, mut hi) = (ts[k], ts[k + 1]);
    let mut t = lo + (hi - lo) * (s - hs[k]) / (hs[k + 1] - hs[k]);
    for _ in 0..200 {
        let (h, d) = p.value(t);
        let g = h - s;
        if g.abs() <= 1e-15 * s || hi - lo <= 1e-15 * hi {
            return Ok(t);
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - g / d;
        t = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let (h, _) = p.value(t);
    if (h - s).abs() <= 1e-12 * s {
        Ok(t)
    } else {
        Err(Error::InversionFailure(format!("no convergence at s={s}")))
    }
}

/// Compares `E[w_a, w_b]` of the inverted profile with the radial
/// distortion of the profile itself.
pub fn duality_check(p: &RadialProfile, w: &Weights) -> Result<DualityReport> {
    let (a2, b2) = (w.w_a().powi(2), w.w_b().powi(2));
    let hs = p.h_values();
    let mut acc = CompensatedSum::new();
    for pair in hs.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, wt) in piece_rule() {
            let s = mid + half * x;
            let t = invert_profile(p, s)?;
            let (_, d) = p.value(t);
            if !(d > 0.0) {
                return Err(Error::InversionFailure(format!("zero slope at t={t}")));
            }
            let fp = 1.0 / d;
            acc.add(wt * half * s * (a2 * fp * fp + b2 * t * t / (s * s)));
        }
    }
    let energy_of_inverse = TAU * acc.value();
    let distortion_of_original = radial_distortion(p, w)?;
    let relative_gap =
        (energy_of_inverse - distortion_of_original).abs() / distortion_of_original.abs();
    Ok(DualityReport {
        energy_of_inverse,
        distortion_of_original,
        relative_gap,
    })
}

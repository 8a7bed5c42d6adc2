//! Closed-form radial minimizers of the combined energy and the combined
//! distortion, and their feasibility thresholds.

use serde::{Deserialize, Serialize};

use crate::energy::radial_distortion;
use crate::error::{Error, Result};
use crate::geometry::{AnnulusPair, RadialFn, RadialProfile, Weights};

/// Slack allowed when comparing a radius against a threshold.
pub const THRESHOLD_SLACK: f64 = 1e-12;

/// Default number of profile nodes.
pub const DEFAULT_NODES: usize = 512;

fn check_ratio(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("c must be positive, got {c}")))
    }
}

fn threshold(x: f64, c: f64, name: &str) -> Result<f64> {
    if !(x.is_finite() && x > 1.0) {
        return Err(Error::Domain(format!("{name} must exceed 1, got {x}")));
    }
    check_ratio(c)?;
    let p = x.powf(1.0 / c);
    Ok((1.0 + p * p) / (2.0 * p))
}

/// Smallest target radius `R*(r, c) = (1 + r^{2/c}) / (2 r^{1/c})` admitting a
/// radial energy minimizer. Equals `cosh(ln(r)/c)`.
pub fn nitsche_threshold_energy(r: f64, c: f64) -> Result<f64> {
    threshold(r, c, "r")
}

/// Smallest domain radius `r*(R, c) = (1 + R^{2/c}) / (2 R^{1/c})` admitting a
/// radial distortion minimizer.
pub fn nitsche_threshold_distortion(big_r: f64, c: f64) -> Result<f64> {
    threshold(big_r, c, "R")
}

/// Which side of the elasticity divide `μ = 1` a minimizer falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `μ ≥ 1`: `c t Ḣ ≥ H` everywhere.
    Elastic,
    /// `0 < μ < 1`: `c t Ḣ < H` everywhere.
    NonElastic,
    /// `μ = 0`: threshold instance with `Ḣ(1) = 0`.
    Boundary,
}

impl Regime {
    pub fn from_mu(mu: f64) -> Self {
        if mu >= 1.0 {
            Regime::Elastic
        } else if mu > 0.0 {
            Regime::NonElastic
        } else {
            Regime::Boundary
        }
    }
}

/// Exact energy minimizer `H(t) = ½ t^{−1/c}(1 − μ + (1 + μ) t^{2/c})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyMinimizer {
    pub c: f64,
    pub mu: f64,
    pub r: f64,
}

impl EnergyMinimizer {
    pub fn h(&self, t: f64) -> f64 {
        let k = 1.0 / self.c;
        0.5 * t.powf(-k) * (1.0 - self.mu + (1.0 + self.mu) * t.powf(2.0 * k))
    }

    pub fn hdot(&self, t: f64) -> f64 {
        let k = 1.0 / self.c;
        0.5 * k * t.powf(-k - 1.0) * (self.mu - 1.0 + (1.0 + self.mu) * t.powf(2.0 * k))
    }

    /// Inverse map `F(s) = ((s + √(μ² − 1 + s²)) / (1 + μ))^c`.
    pub fn inverse(&self, s: f64) -> f64 {
        ((s + (self.mu * self.mu - 1.0 + s * s).sqrt()) / (1.0 + self.mu)).powf(self.c)
    }

    /// `F'(s) = c F(s) / √(μ² − 1 + s²)`.
    pub fn inverse_slope(&self, s: f64) -> f64 {
        self.c * self.inverse(s) / (self.mu * self.mu - 1.0 + s * s).sqrt()
    }
}

impl RadialFn for EnergyMinimizer {
    fn span(&self) -> (f64, f64) {
        (1.0, self.r)
    }

    fn value(&self, t: f64) -> (f64, f64) {
        (self.h(t), self.hdot(t))
    }
}

/// Closed-form minimizer of the combined energy.
#[derive(Clone, Debug, Serialize)]
pub struct EnergySolution {
    pub pair: AnnulusPair,
    pub c: f64,
    pub mu: f64,
    pub regime: Regime,
    pub profile: RadialProfile,
    /// Minimal energy per unit `w_a · w_b`.
    pub closed_form_energy: f64,
}

impl EnergySolution {
    /// The analytic minimizer behind the sampled profile.
    pub fn exact(&self) -> EnergyMinimizer {
        EnergyMinimizer {
            c: self.c,
            mu: self.mu,
            r: self.pair.r(),
        }
    }

    /// Minimal energy for explicit weights (whose ratio must be `c`).
    pub fn energy_for(&self, w: &Weights) -> f64 {
        w.w_a() * w.w_b() * self.closed_form_energy
    }
}

/// `μ(r, R, c) = (1 + r^{2/c} − 2 r^{1/c} R) / (1 − r^{2/c})`.
pub fn mu_parameter(r: f64, big_r: f64, c: f64) -> f64 {
    let p = r.powf(1.0 / c);
    (1.0 + p * p - 2.0 * p * big_r) / (1.0 - p * p)
}

/// Minimal combined energy per unit `w_a · w_b`.
pub fn minimal_energy(r: f64, big_r: f64, c: f64) -> f64 {
    let p = r.powf(1.0 / c);
    let p2 = p * p;
    2.0 * std::f64::consts::PI
        * (1.0 - 4.0 * p * big_r + big_r * big_r + p2 * (1.0 + big_r * big_r))
        / (p2 - 1.0)
}

/// Closed-form energy minimizer mapping `A(1,r)` onto `B(1,R)`.
pub fn solve_combined_energy(pair: AnnulusPair, c: f64, n_nodes: usize) -> Result<EnergySolution> {
    let (r, big_r) = (pair.r(), pair.big_r());
    let threshold = nitsche_threshold_energy(r, c)?;
    if big_r < threshold - THRESHOLD_SLACK {
        return Err(Error::BelowNitsche {
            value: big_r,
            threshold,
        });
    }
    let mu = mu_parameter(r, big_r, c).max(0.0);
    let exact = EnergyMinimizer { c, mu, r };
    let mut profile = RadialProfile::sample(r, n_nodes.max(2), |t| exact.value(t))?;
    if mu == 0.0 {
        let mut hdot = profile.hdot_values().to_vec();
        hdot[0] = 0.0;
        profile = RadialProfile::new(
            profile.t_nodes().to_vec(),
            profile.h_values().to_vec(),
            hdot,
        )?;
    }
    Ok(EnergySolution {
        pair,
        c,
        mu,
        regime: Regime::from_mu(mu),
        profile,
        closed_form_energy: minimal_energy(r, big_r, c),
    })
}

/// Sampled inverse `F: [1, R] → [1, r]` of an energy minimizer.
pub fn inverse_profile(sol: &EnergySolution, n_nodes: usize) -> Result<RadialProfile> {
    if sol.mu == 0.0 {
        return Err(Error::InvalidProfile(
            "the inverse of a threshold minimizer has infinite slope at s=1".into(),
        ));
    }
    let exact = sol.exact();
    RadialProfile::sample(sol.pair.big_r(), n_nodes.max(2), |s| {
        (exact.inverse(s), exact.inverse_slope(s))
    })
}

/// Pointwise elasticity certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ElasticityVerdict {
    pub regime: Regime,
    /// `min (c t Ḣ − H)` over the nodes.
    pub min_margin: f64,
    /// `max (c t Ḣ − H)` over the nodes.
    pub max_margin: f64,
}

/// Checks `c t Ḣ − H` on every node against the `μ`-based regime.
pub fn elasticity_regime(sol: &EnergySolution) -> Result<ElasticityVerdict> {
    let p = &sol.profile;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut scale: f64 = 1.0;
    for k in 0..p.len() {
        let (t, h, d) = (p.t_nodes()[k], p.h_values()[k], p.hdot_values()[k]);
        let m = sol.c * t * d - h;
        lo = lo.min(m);
        hi = hi.max(m);
        scale = scale.max(h);
    }
    let tol = 1e-12 * scale;
    let regime = Regime::from_mu(sol.mu);
    let consistent = match regime {
        Regime::Elastic => lo >= -tol,
        Regime::NonElastic | Regime::Boundary => hi < tol,
    };
    if !consistent {
        return Err(Error::InconsistentCertificate {
            mu: sol.mu,
            detail: format!("margins c t H' - H span [{lo:e}, {hi:e}]"),
        });
    }
    Ok(ElasticityVerdict {
        regime,
        min_margin: lo,
        max_margin: hi,
    })
}

/// Exact distortion minimizer `H(t) = ((t + √(ν² − 1 + t²)) / (1 + ν))^c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionMinimizer {
    pub c: f64,
    pub nu: f64,
    pub r: f64,
}

impl DistortionMinimizer {
    pub fn h(&self, t: f64) -> f64 {
        ((t + (self.nu * self.nu - 1.0 + t * t).sqrt()) / (1.0 + self.nu)).powf(self.c)
    }

    pub fn hdot(&self, t: f64) -> f64 {
        self.c * self.h(t) / (self.nu * self.nu - 1.0 + t * t).sqrt()
    }
}

impl RadialFn for DistortionMinimizer {
    fn span(&self) -> (f64, f64) {
        (1.0, self.r)
    }

    fn value(&self, t: f64) -> (f64, f64) {
        (self.h(t), self.hdot(t))
    }
}

/// Closed-form minimizer of the combined distortion.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionSolution {
    pub pair: AnnulusPair,
    pub c: f64,
    pub nu: f64,
    pub profile: RadialProfile,
    /// Minimal distortion per unit `w_a · w_b`, by quadrature.
    pub closed_form_distortion: f64,
    /// `(1 + R^{2/c} − 2 r R^{1/c}) / (1 − R^{2/c})`: the energy parameter of
    /// the swapped instance, which reproduces the root.
    pub nu_swapped_formula: f64,
    /// `(1 + r^{2/c} − 2 R^{1/c} r) / (1 − R^{2/c})`: the variant with `r`
    /// and `R` exchanged in the first two terms; kept for comparison only.
    pub nu_mixed_formula: f64,
}

impl DistortionSolution {
    pub fn exact(&self) -> DistortionMinimizer {
        DistortionMinimizer {
            c: self.c,
            nu: self.nu,
            r: self.pair.r(),
        }
    }
}

/// Closed-form distortion minimizer; `ν` is found by bisection on `H(r) = R`.
pub fn solve_combined_distortion(
    pair: AnnulusPair,
    c: f64,
    n_nodes: usize,
) -> Result<DistortionSolution> {
    let (r, big_r) = (pair.r(), pair.big_r());
    let threshold = nitsche_threshold_distortion(big_r, c)?;
    if r < threshold - THRESHOLD_SLACK {
        return Err(Error::BelowNitsche {
            value: r,
            threshold,
        });
    }
    let end_gap = |nu: f64| DistortionMinimizer { c, nu, r }.h(r).ln() - big_r.ln();
    // end_gap is decreasing in ν, non-negative at 0 and negative for large ν.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while end_gap(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain(format!(
                "no distortion parameter found for r={r}, R={big_r}, c={c}"
            )));
        }
    }
    if end_gap(0.0) <= 0.0 {
        hi = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if end_gap(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    if nu == 0.0 {
        return Err(Error::InvalidProfile(
            "the distortion minimizer at the threshold has infinite slope at t=1".into(),
        ));
    }
    let exact = DistortionMinimizer { c, nu, r };
    let profile = RadialProfile::sample(r, n_nodes.max(2), |t| exact.value(t))?;
    let unit = Weights::new(c, 1.0, 1.0, 1.0)?;
    let closed_form_distortion = radial_distortion(&exact, &unit)? / c;
    let pr = r.powf(1.0 / c);
    let pbig = big_r.powf(1.0 / c);
    Ok(DistortionSolution {
        pair,
        c,
        nu,
        profile,
        closed_form_distortion,
        nu_swapped_formula: (1.0 + pbig * pbig - 2.0 * r * pbig) / (1.0 - pbig * pbig),
        nu_mixed_formula: (1.0 + pr * pr - 2.0 * pbig * r) / (1.0 - pbig * pbig),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fourth_order_slope<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
        (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
    }

    fn pair(r: f64, big_r: f64) -> AnnulusPair {
        AnnulusPair::new(r, big_r).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(nitsche_threshold_energy(2.0, 0.5).unwrap(), 2.125);
        assert_eq!(nitsche_threshold_energy(2.0, 1.0).unwrap(), 1.25);
        assert!((nitsche_threshold_energy(1.0 + 1e-9, 0.3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nitsche_threshold_distortion(2.0, 0.5).unwrap(), 2.125);
        assert!(nitsche_threshold_energy(1.0, 1.0).is_err());
        assert!(nitsche_threshold_energy(2.0, 0.0).is_err());
        let c: f64 = 0.7;
        let via_cosh = (2f64.ln() / c).cosh();
        assert!((nitsche_threshold_energy(2.0, c).unwrap() - via_cosh).abs() < 1e-14);
    }

    #[test]
    fn worked_instance() {
        let sol = solve_combined_energy(pair(2.0, 3.0), 1.0, 512).unwrap();
        assert!((sol.mu - 7.0 / 3.0).abs() < 1e-14);
        assert!((sol.profile.end_value() - 3.0).abs() < 1e-12);
        assert!((sol.closed_form_energy - 52.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(sol.regime, Regime::Elastic);
    }

    #[test]
    fn identity_instance() {
        let sol = solve_combined_energy(pair(2.0, 2.0), 1.0, 257).unwrap();
        assert_eq!(sol.mu, 1.0);
        for (t, h) in sol.profile.t_nodes().iter().zip(sol.profile.h_values()) {
            assert!((t - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn threshold_instance_is_boundary() {
        let sol = solve_combined_energy(pair(2.0, 2.125), 0.5, 64).unwrap();
        assert_eq!(sol.mu, 0.0);
        assert_eq!(sol.regime, Regime::Boundary);
        assert!(sol.profile.is_degenerate());
        assert!(inverse_profile(&sol, 64).is_err());
    }

    #[test]
    fn below_threshold_rejected() {
        let err = solve_combined_energy(pair(2.0, 2.124), 0.5, 64).unwrap_err();
        assert!(matches!(err, Error::BelowNitsche { threshold, .. } if threshold == 2.125));
    }

    #[test]
    fn inverse_round_trip() {
        let sol = solve_combined_energy(pair(2.0, 3.0), 1.0, 512).unwrap();
        let inv = inverse_profile(&sol, 512).unwrap();
        assert!((inv.end_value() - 2.0).abs() < 1e-9);
        let exact = sol.exact();
        let worst = (0..1000)
            .map(|k| {
                let t = 1.0 + k as f64 / 999.0;
                (exact.inverse(exact.h(t)) - t).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn ode_residual_of_energy_minimizer() {
        for (r, big_r, c) in [(2.0, 3.0, 1.0), (2.0, 3.0625, 0.5), (1.5, 4.0, 1.7)] {
            let sol = solve_combined_energy(pair(r, big_r), c, 64).unwrap();
            let ex = sol.exact();
            let step = 1e-4;
            for k in 1..63 {
                let t = sol.profile.t_nodes()[k];
                let hdd = fourth_order_slope(|x| ex.hdot(x), t, step);
                let rhs = (ex.h(t) - c * c * t * ex.hdot(t)) / (c * c * t * t);
                assert!((hdd - rhs).abs() <= 1e-8, "{r} {big_r} {c}: {}", hdd - rhs);
            }
        }
    }

    #[test]
    fn regimes() {
        let elastic = solve_combined_energy(pair(2.0, 3.0), 1.0, 128).unwrap();
        let v = elasticity_regime(&elastic).unwrap();
        assert_eq!(v.regime, Regime::Elastic);
        assert!(v.min_margin > 0.0);

        let ident = solve_combined_energy(pair(2.0, 2.0), 1.0, 128).unwrap();
        let v = elasticity_regime(&ident).unwrap();
        assert_eq!(v.regime, Regime::Elastic);
        assert!(v.min_margin.abs() < 1e-12 && v.max_margin.abs() < 1e-12);

        // μ = 0.5 with r = 2, c = 1/2 gives R = (17 + 0.5·15)/8.
        let half = solve_combined_energy(pair(2.0, 3.0625), 0.5, 128).unwrap();
        assert!((half.mu - 0.5).abs() < 1e-14);
        let v = elasticity_regime(&half).unwrap();
        assert_eq!(v.regime, Regime::NonElastic);
        assert!(v.max_margin < 0.0);
    }

    #[test]
    fn distortion_identity_and_root() {
        let id = solve_combined_distortion(pair(2.0, 2.0), 1.0, 64).unwrap();
        assert!((id.nu - 1.0).abs() < 1e-12);
        let sol = solve_combined_distortion(pair(2.5, 2.0), 0.5, 512).unwrap();
        assert!((sol.profile.end_value() - 2.0).abs() <= 1e-9 * 2.0);
        assert!((sol.nu - sol.nu_swapped_formula).abs() < 1e-10);
        assert!(matches!(
            solve_combined_distortion(pair(2.0, 2.5), 0.5, 64),
            Err(Error::BelowNitsche { .. })
        ));
    }

    #[test]
    fn distortion_minimizer_solves_its_equation() {
        let sol = solve_combined_distortion(pair(2.5, 2.0), 0.5, 64).unwrap();
        let ex = sol.exact();
        let c = sol.c;
        let step = 1e-4;
        for k in 1..63 {
            let t = sol.profile.t_nodes()[k];
            let (h, d) = (ex.h(t), ex.hdot(t));
            let hdd = fourth_order_slope(|x| ex.hdot(x), t, step);
            let rhs = d * d * (h - t * d / (c * c)) / (h * h);
            assert!((hdd - rhs).abs() <= 1e-6);
        }
    }

    #[test]
    fn distortion_inverse_is_swapped_energy_minimizer() {
        let (r, big_r, c) = (2.5, 2.0, 0.5);
        let dist = solve_combined_distortion(pair(r, big_r), c, 64).unwrap();
        let energy = solve_combined_energy(pair(big_r, r), c, 64).unwrap();
        let (d, e) = (dist.exact(), energy.exact());
        for k in 0..=100 {
            let s = 1.0 + (big_r - 1.0) * k as f64 / 100.0;
            let t = e.h(s);
            assert!((d.h(t) - s).abs() <= 1e-7);
        }
    }

    #[test]
    fn mu_grows_with_target() {
        let (r, c) = (1.8, 0.6);
        let r0 = nitsche_threshold_energy(r, c).unwrap();
        let mut last = -1.0;
        for k in 0..50 {
            let mu = mu_parameter(r, r0 + 0.1 * k as f64, c);
            assert!(mu > last);
            last = mu;
        }
    }
}

//! Free Lagrangians (integrands whose integral depends only on the annuli)
//! and the pointwise lower bounds built from them.

mod certificate;

pub use certificate::{
    certified_region_scan, potential_sign_check, verify_energy_lower_bound,
    verify_total_lower_bound, ConcavityBound, LowerBoundCertificate, PotentialSignReport,
    TotalBranch,
};

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{differentiate_grid, DerivativeField, GridRule, PolarGridMap, Weights};
use crate::quadrature::CompositeGauss;

/// One-variable density.
pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Two-variable potential `𝒜(t, s)` with its gradient `(𝒜_t, 𝒜_s)`.
#[derive(Clone)]
pub struct Potential {
    pub value: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub gradient: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
}

impl Potential {
    /// Gradient by central differences with step `step`.
    pub fn with_difference_gradient<F>(value: F, step: f64) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let value = Arc::new(value);
        let v = Arc::clone(&value);
        Self {
            value,
            gradient: Arc::new(move |t, s| {
                (
                    (v(t + step, s) - v(t - step, s)) / (2.0 * step),
                    (v(t, s + step) - v(t, s - step)) / (2.0 * step),
                )
            }),
        }
    }
}

/// The five free-Lagrangian families.
#[derive(Clone)]
pub enum FreeLagrangian {
    /// `M(|z|)`: integral `2π ∫₁^r t M(t) dt`.
    RadialFunction(Density),
    /// `N(|h|) J`: integral `2π ∫₁^R s N(s) ds`.
    Pullback(Density),
    /// `A(|h|) |h|_N / |z|`: integral `2π ∫₁^R A(s) ds`.
    Radial(Density),
    /// `B(|z|) Im(h_T / h)`: integral `2π ∫₁^r B(t) dt`.
    Angular(Density),
    /// `(𝒜_t + 𝒜_s |h|_N) / |z|`: integral `2π (𝒜(r, R) − 𝒜(1, 1))`.
    TwoVariable(Potential),
}

impl FreeLagrangian {
    pub fn label(&self) -> &'static str {
        match self {
            FreeLagrangian::RadialFunction(_) => "radial-function",
            FreeLagrangian::Pullback(_) => "pullback",
            FreeLagrangian::Radial(_) => "radial",
            FreeLagrangian::Angular(_) => "angular",
            FreeLagrangian::TwoVariable(_) => "two-variable",
        }
    }

    /// Integrand at flat node `k`.
    fn density(&self, d: &DerivativeField, k: usize) -> f64 {
        let t = d.t_of(k);
        match self {
            FreeLagrangian::RadialFunction(m) => m(t),
            FreeLagrangian::Pullback(n) => n(d.rho[k]) * d.jac[k],
            FreeLagrangian::Radial(a) => a(d.rho[k]) * d.rho_t[k] / t,
            FreeLagrangian::Angular(b) => b(t) * d.theta_theta[k] / t,
            FreeLagrangian::TwoVariable(p) => {
                let (at, as_) = (p.gradient)(t, d.rho[k]);
                (at + as_ * d.rho_t[k]) / t
            }
        }
    }

    /// Map-independent value on `A(1, r) → B(1, R)`.
    pub fn predicted(&self, r: f64, big_r: f64) -> f64 {
        let q = CompositeGauss::standard();
        match self {
            FreeLagrangian::RadialFunction(m) => TAU * q.integrate(1.0, r, |t| t * m(t)),
            FreeLagrangian::Pullback(n) => TAU * q.integrate(1.0, big_r, |s| s * n(s)),
            FreeLagrangian::Radial(a) => TAU * q.integrate(1.0, big_r, |s| a(s)),
            FreeLagrangian::Angular(b) => TAU * q.integrate(1.0, r, |t| b(t)),
            FreeLagrangian::TwoVariable(p) => TAU * ((p.value)(r, big_r) - (p.value)(1.0, 1.0)),
        }
    }

    /// The angular value with the extra `1/t` weight, `2π ∫₁^r B(t)/t dt`.
    pub fn printed_prediction(&self, r: f64) -> Option<f64> {
        match self {
            FreeLagrangian::Angular(b) => {
                Some(TAU * CompositeGauss::standard().integrate(1.0, r, |t| b(t) / t))
            }
            _ => None,
        }
    }
}

impl FreeLagrangian {
    /// Three densities of each kind: constant, growing and decaying.
    pub fn catalogue() -> Vec<FreeLagrangian> {
        fn d(f: fn(f64) -> f64) -> Density {
            Arc::new(f)
        }
        vec![
            FreeLagrangian::RadialFunction(d(|_| 1.0)),
            FreeLagrangian::RadialFunction(d(|t| t)),
            FreeLagrangian::RadialFunction(d(|t| 1.0 / (t * t))),
            FreeLagrangian::Pullback(d(|_| 1.0)),
            FreeLagrangian::Pullback(d(|s| s)),
            FreeLagrangian::Pullback(d(|s| 1.0 / s)),
            FreeLagrangian::Radial(d(|_| 1.0)),
            FreeLagrangian::Radial(d(|s| s * s)),
            FreeLagrangian::Radial(d(|s| 1.0 / s)),
            FreeLagrangian::Angular(d(|_| 1.0)),
            FreeLagrangian::Angular(d(|t| t)),
            FreeLagrangian::Angular(d(f64::ln)),
            FreeLagrangian::TwoVariable(Potential::with_difference_gradient(|t, s| t * s, 1e-5)),
            FreeLagrangian::TwoVariable(Potential::with_difference_gradient(
                |t, s| s * s + t,
                1e-5,
            )),
            FreeLagrangian::TwoVariable(Potential::with_difference_gradient(
                |t, s| t.ln() * s,
                1e-5,
            )),
        ]
    }
}

impl fmt::Debug for FreeLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Grid integral of a free Lagrangian against its map-independent value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlIntegral {
    pub kind: &'static str,
    pub computed: f64,
    pub predicted: f64,
    pub relative_gap: f64,
    /// Angular kind only: the `1/t`-weighted variant, which does not match.
    pub printed_prediction: Option<f64>,
}

/// Integrates `lagrangian` over `map` and compares with the predicted value.
pub fn fl_integral(lagrangian: &FreeLagrangian, map: &PolarGridMap) -> Result<FlIntegral> {
    map.check_class()?;
    let d = differentiate_grid(map)?;
    Ok(fl_integral_on(lagrangian, map, &d))
}

/// [`fl_integral`] with precomputed derivatives.
pub fn fl_integral_on(
    lagrangian: &FreeLagrangian,
    map: &PolarGridMap,
    d: &DerivativeField,
) -> FlIntegral {
    let computed = GridRule::new(map).integrate(|k| lagrangian.density(d, k));
    let predicted = lagrangian.predicted(map.r(), map.big_r());
    FlIntegral {
        kind: lagrangian.label(),
        computed,
        predicted,
        relative_gap: (computed - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE),
        printed_prediction: lagrangian.printed_prediction(map.r()),
    }
}

/// Both evaluations of the completed square behind the general inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SquareMargin {
    /// `(p w_b x − q w_a y)²`.
    pub direct: f64,
    /// Left side minus right side, expanded.
    pub difference: f64,
}

/// `w_a² x² + w_b² y² − [(w_a² − w_b² p²) x² + (w_b² − w_a² q²) y² + 2pq w_a w_b x y]`
/// for `x = |h_N|`, `y = |h_T|`; equals `(p w_b x − q w_a y)²`.
pub fn pointwise_ineq_general(x: f64, y: f64, w: &Weights, p: f64, q: f64) -> SquareMargin {
    let (wa, wb) = (w.w_a(), w.w_b());
    let d = p * wb * x - q * wa * y;
    let lhs = wa * wa * x * x + wb * wb * y * y;
    let rhs = (wa * wa - wb * wb * p * p) * x * x
        + (wb * wb - wa * wa * q * q) * y * y
        + 2.0 * p * q * wa * wb * x * y;
    SquareMargin {
        direct: d * d,
        difference: lhs - rhs,
    }
}

/// Smallest nodewise slack in `|∇ρ| ≥ |h|_N` and `|∇Θ| ≥ |Im(h_T/h)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientBounds {
    pub rho_margin_min: f64,
    pub theta_margin_min: f64,
}

pub fn gradient_bounds(d: &DerivativeField) -> GradientBounds {
    let mut out = GradientBounds {
        rho_margin_min: f64::INFINITY,
        theta_margin_min: f64::INFINITY,
    };
    for k in 0..d.len() {
        let t = d.t_of(k);
        let grad_rho = d.grad_rho_sq[k].sqrt();
        let grad_theta = (d.theta_t[k].powi(2) + (d.theta_theta[k] / t).powi(2)).sqrt();
        out.rho_margin_min = out.rho_margin_min.min(grad_rho - d.rho_t[k].abs());
        out.theta_margin_min = out
            .theta_margin_min
            .min(grad_theta - (d.theta_theta[k] / t).abs());
    }
    out
}

//! Radial minimizers of the total energy: the Euler–Lagrange equation, the
//! shooting method on the initial slope, and the phase portrait of the
//! elasticity function.

mod phi;
mod trajectory;

pub use phi::{
    phi_at, phi_curve, phi_limit_suite, phi_reduced, ClaimedLimit, IntervalHint, LimitClaim,
    LimitReport, LimitSequence, LimitVerdict, NonCrossing, PhiCurve, ReducedForm,
};
pub use trajectory::Trajectory;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AnnulusPair, RadialProfile};
use crate::ode::{Dopri5, Flow};

/// `Ḧ = Ḣ²(H − c²tḢ)(t + γHḢ) / (tH(H + c²γtḢ³))`.
pub fn el_rhs(c: f64, gamma: f64, t: f64, h: f64, hd: f64) -> f64 {
    let c2 = c * c;
    hd * hd * (h - c2 * t * hd) * (t + gamma * h * hd)
        / (t * h * (h + c2 * gamma * t * hd * hd * hd))
}

/// Sign of `q − 1/c`, which fixes the sign of `c t Ḣ − H` along the orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    /// `q = 1/c`: the power map `t^{1/c}`.
    Balanced,
    /// `q > 1/c`: `H / t^{1/c}` increasing.
    Expanding,
    /// `q < 1/c`: `H / t^{1/c}` decreasing.
    Contracting,
}

impl CaseLabel {
    /// Label of slope `q`; `rel_tol` is relative to `1/c`.
    pub fn of(q: f64, c: f64, rel_tol: f64) -> Self {
        let balanced = 1.0 / c;
        if (q - balanced).abs() <= rel_tol * balanced {
            CaseLabel::Balanced
        } else if q > balanced {
            CaseLabel::Expanding
        } else {
            CaseLabel::Contracting
        }
    }
}

/// Sign pattern of `c²tḢ − H` over the whole profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Concavity {
    /// `c²tḢ ≥ H` everywhere with `c ≤ 1`: `H` is concave.
    ConcavityCase,
    /// `c²tḢ ≤ H` everywhere with `c ≥ 1`: `H` is convex.
    ConvexityCase,
    Balanced,
    Neither,
}

/// Settings for [`shoot`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShootOptions {
    #[serde(skip)]
    pub ode: Dopri5,
    /// Relative tolerance on `H(r) = R`.
    pub tol: f64,
    /// Profile node count.
    pub n_nodes: usize,
    /// Dense nodes per profile interval in the stored trajectory.
    pub refine: usize,
    /// Maximum number of bracket doublings or halvings.
    pub max_expansions: u32,
    /// Relative tolerance for the balanced label.
    pub case_tol: f64,
    /// Slack on the concavity sign test.
    pub sign_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            ode: Dopri5::default(),
            tol: 1e-8,
            n_nodes: 512,
            refine: 8,
            max_expansions: 40,
            case_tol: 1e-6,
            sign_tol: 1e-8,
        }
    }
}

/// Shooting solution of the total-energy boundary problem.
#[derive(Clone, Debug, Serialize)]
pub struct ShootResult {
    pub q: f64,
    pub c: f64,
    pub gamma: f64,
    pub pair: AnnulusPair,
    #[serde(rename = "case")]
    pub case_label: CaseLabel,
    pub concavity: Concavity,
    /// `min (c²tḢ − H)` over the profile nodes.
    pub concavity_margin_min: f64,
    /// `max (c²tḢ − H)` over the profile nodes.
    pub concavity_margin_max: f64,
    #[serde(rename = "residual_sup")]
    pub ode_residual_sup: f64,
    /// `|H(r) − R| / R`.
    pub end_error: f64,
    pub bisections: u32,
    pub profile: RadialProfile,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Integrates the Euler–Lagrange equation from `H(1) = 1`, `Ḣ(1) = q` and
/// samples it on `n_nodes` uniform nodes of `[1, t_max]`.
pub fn integrate_el_ode(
    q: f64,
    c: f64,
    gamma: f64,
    t_max: f64,
    ode: &Dopri5,
    n_nodes: usize,
) -> Result<RadialProfile> {
    check_ratios(c, gamma)?;
    Trajectory::integrate(q, c, gamma, t_max, n_nodes, ode)?.to_profile(1)
}

fn check_ratios(c: f64, gamma: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// `H_q(r)` without storing the orbit.
pub fn end_value(q: f64, c: f64, gamma: f64, r: f64, ode: &Dopri5) -> Result<f64> {
    let mut bad = None;
    let out = ode.integrate(
        |t, y: &[f64; 2]| [y[1], el_rhs(c, gamma, t, y[0], y[1])],
        1.0,
        [1.0, q],
        r,
        &[],
        |s| {
            if !(s.y1[1] > 0.0) {
                bad = Some((s.t1, s.y1[1]));
                Flow::Halt
            } else {
                Flow::Continue
            }
        },
    )?;
    match bad {
        Some((t, slope)) => Err(Error::NegativeSlope { t, slope }),
        None => Ok(out.y[0]),
    }
}

/// Sup over interior nodes of `|Ḧ_fd − rhs|`, with `Ḧ_fd` a fourth-order
/// difference of the stored slopes (equispaced nodes assumed).
pub fn ode_residual(profile: &RadialProfile, c: f64, gamma: f64) -> f64 {
    let (t, h, d) = (profile.t_nodes(), profile.h_values(), profile.hdot_values());
    let n = t.len();
    if n < 5 {
        return f64::NAN;
    }
    let step = (t[n - 1] - t[0]) / (n - 1) as f64;
    let mut sup: f64 = 0.0;
    for i in 1..n - 1 {
        let fd = if i == 1 {
            (-3.0 * d[0] - 10.0 * d[1] + 18.0 * d[2] - 6.0 * d[3] + d[4]) / (12.0 * step)
        } else if i == n - 2 {
            (3.0 * d[n - 1] + 10.0 * d[n - 2] - 18.0 * d[n - 3] + 6.0 * d[n - 4] - d[n - 5])
                / (12.0 * step)
        } else {
            (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * step)
        };
        sup = sup.max((fd - el_rhs(c, gamma, t[i], h[i], d[i])).abs());
    }
    sup
}

/// Finds the initial slope whose orbit maps `[1, r]` onto `[1, R]`.
pub fn shoot(pair: AnnulusPair, c: f64, gamma: f64, opts: &ShootOptions) -> Result<ShootResult> {
    check_ratios(c, gamma)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!(
            "shoot tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let (r, big_r) = (pair.r(), pair.big_r());
    let end = |q: f64| end_value(q, c, gamma, r, &opts.ode);

    let mut lo = (1.0 / c).min(1.0) / 16.0;
    let mut hi = (1.0 / c).max(1.0) * 16.0;
    let mut expansions = 0u32;
    let mut h_lo = end(lo)?;
    while h_lo > big_r {
        expansions += 1;
        if expansions > opts.max_expansions {
            return Err(Error::BracketFailure { expansions, lo, hi });
        }
        hi = lo;
        lo *= 0.5;
        h_lo = end(lo)?;
    }
    let mut h_hi = end(hi)?;
    while h_hi < big_r {
        expansions += 1;
        if expansions > opts.max_expansions {
            return Err(Error::BracketFailure { expansions, lo, hi });
        }
        lo = hi;
        h_lo = h_hi;
        hi *= 2.0;
        h_hi = end(hi)?;
    }

    let mut bisections = 0u32;
    let mut q = if (h_lo - big_r).abs() <= opts.tol * big_r {
        lo
    } else {
        hi
    };
    let mut h_q = if q == lo { h_lo } else { h_hi };
    while (h_q - big_r).abs() > opts.tol * big_r {
        // Geometric midpoint while the bracket spans orders of magnitude.
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi || bisections > 400 {
            break;
        }
        bisections += 1;
        let h_mid = end(mid)?;
        if h_mid < big_r {
            lo = mid;
        } else {
            hi = mid;
        }
        q = mid;
        h_q = h_mid;
    }

    let stride = opts.refine.max(1);
    let dense = stride * (opts.n_nodes.max(2) - 1) + 1;
    let trajectory = Trajectory::integrate(q, c, gamma, r, dense, &opts.ode)?;
    let profile = trajectory.to_profile(stride)?;
    let (t, h, d) = (profile.t_nodes(), profile.h_values(), profile.hdot_values());
    let (mut m_lo, mut m_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..t.len() {
        let m = c * c * t[k] * d[k] - h[k];
        m_lo = m_lo.min(m);
        m_hi = m_hi.max(m);
    }
    let case_label = CaseLabel::of(q, c, opts.case_tol);
    let concavity = if case_label == CaseLabel::Balanced {
        Concavity::Balanced
    } else if c <= 1.0 && m_lo >= -opts.sign_tol {
        Concavity::ConcavityCase
    } else if c >= 1.0 && m_hi <= opts.sign_tol {
        Concavity::ConvexityCase
    } else {
        Concavity::Neither
    };
    Ok(ShootResult {
        q,
        c,
        gamma,
        pair,
        case_label,
        concavity,
        concavity_margin_min: m_lo,
        concavity_margin_max: m_hi,
        ode_residual_sup: ode_residual(&profile, c, gamma),
        end_error: (profile.end_value() - big_r).abs() / big_r,
        bisections,
        profile,
        trajectory,
    })
}

/// Monotonicity of `s(t) = H(t) / t^{1/c}` along an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

/// Case label of a slope together with its check on an integrated orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub label: CaseLabel,
    pub trend: Trend,
    /// `H_q(r)`.
    pub end_value: f64,
    /// `r^{1/c}`, the balanced end value.
    pub balanced_end: f64,
    /// Whether trend and end value agree with the label.
    pub consistent: bool,
}

/// Classifies `q` and cross-checks the label on the orbit over `[1, r]`.
pub fn case_classify(q: f64, c: f64, gamma: f64, r: f64, ode: &Dopri5) -> Result<CaseReport> {
    check_ratios(c, gamma)?;
    let label = CaseLabel::of(q, c, 1e-12);
    let tr = Trajectory::integrate(q, c, gamma, r, 257, ode)?;
    let k = 1.0 / c;
    let s: Vec<f64> = tr
        .t_nodes()
        .iter()
        .zip(tr.h_values())
        .map(|(t, h)| h / t.powf(k))
        .collect();
    let tol = 1e-9;
    let inc = s.windows(2).all(|w| w[1] > w[0] - tol);
    let dec = s.windows(2).all(|w| w[1] < w[0] + tol);
    let strict_inc = s.windows(2).all(|w| w[1] > w[0]);
    let strict_dec = s.windows(2).all(|w| w[1] < w[0]);
    let trend = if inc && dec {
        Trend::Constant
    } else if strict_inc {
        Trend::Increasing
    } else if strict_dec {
        Trend::Decreasing
    } else {
        Trend::Mixed
    };
    let end_value = tr.end_value();
    let balanced_end = r.powf(k);
    let consistent = match label {
        CaseLabel::Balanced => {
            trend == Trend::Constant && (end_value - balanced_end).abs() <= 1e-8 * balanced_end
        }
        CaseLabel::Expanding => trend == Trend::Increasing && end_value > balanced_end,
        CaseLabel::Contracting => trend == Trend::Decreasing && end_value < balanced_end,
    };
    Ok(CaseReport {
        label,
        trend,
        end_value,
        balanced_end,
        consistent,
    })
}

/// One inequality evaluated on an instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// The concavity-case size bounds evaluated on a shooting solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeBoundsReport {
    pub bounds: Vec<BoundCheck>,
    /// Bounds violated even though the instance is a certified concavity case.
    pub alarms: Vec<String>,
}

/// Evaluates the four concavity-case bounds
/// `r ≤ ln(qc²)/ln(1/c² − 1)`, `r^{1/c²} ≤ R`, `R ≤ rqc²`, `r < 1/(1 − c² + c²/R)`.
pub fn size_bounds_check(result: &ShootResult) -> Result<SizeBoundsReport> {
    let (c, q) = (result.c, result.q);
    let (r, big_r) = (result.pair.r(), result.pair.big_r());
    let c2 = c * c;
    if !(c < 1.0) {
        return Err(Error::PreconditionUnmet(format!("needs c < 1, got {c}")));
    }
    if result.concavity != Concavity::ConcavityCase {
        return Err(Error::PreconditionUnmet(format!(
            "concavity certificate fails: min(c^2 t H' - H) = {:e}",
            result.concavity_margin_min
        )));
    }
    if !(q > 1.0 / c2) {
        return Err(Error::PreconditionUnmet(format!(
            "needs q > 1/c^2 = {}, got {q}",
            1.0 / c2
        )));
    }
    let check = |name: &str, lhs: f64, rhs: f64, strict: bool| BoundCheck {
        name: name.to_string(),
        lhs,
        rhs,
        satisfied: if strict { lhs < rhs } else { lhs <= rhs },
    };
    let bounds = vec![
        check(
            "r <= ln(q c^2) / ln(1/c^2 - 1)",
            r,
            (q * c2).ln() / (1.0 / c2 - 1.0).ln(),
            false,
        ),
        check("r^(1/c^2) <= R", r.powf(1.0 / c2), big_r, false),
        check("R <= r q c^2", big_r, r * q * c2, false),
        check(
            "r < 1/(1 - c^2 + c^2/R)",
            r,
            1.0 / (1.0 - c2 + c2 / big_r),
            true,
        ),
    ];
    let alarms = bounds
        .iter()
        .filter(|b| !b.satisfied)
        .map(|b| {
            format!(
                "{} fails on a certified concavity instance: {} vs {}",
                b.name, b.lhs, b.rhs
            )
        })
        .collect();
    Ok(SizeBoundsReport { bounds, alarms })
}

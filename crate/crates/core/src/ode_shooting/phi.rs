//! Elasticity function `Φ_q(s) = tḢ/H` at `s = H/t` along the orbit with
//! `H(1) = 1`, `Ḣ(1) = q`, extracted parametrically from the second-order
//! equation in `t`, plus direct integration of the reduced first-order forms
//! for cross-checking.

use std::io::Write;

use serde::Serialize;

use super::el_rhs;
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Flow};

/// Integration window in `t` for the portrait.
const T_MIN: f64 = 1e-8;
const T_MAX: f64 = 1e8;
/// Branches stop once `|Φ − 1|` falls below this.
const TURN_TOL: f64 = 1e-10;

/// Ends of the maximal `s`-interval detected inside the probed range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalHint {
    /// Left endpoint where `Φ → 1`, or 0 when none was detected.
    pub left: f64,
    /// Right endpoint where `Φ → 1`, or `None` for no finite endpoint.
    pub right: Option<f64>,
}

/// Sampled `Φ_q` on an increasing set of `s` nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiCurve {
    pub q: f64,
    pub c: f64,
    pub gamma: f64,
    pub s_nodes: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub maximal_interval_hint: IntervalHint,
}

impl PhiCurve {
    /// Value at `s`, if `s` is a node.
    pub fn at_node(&self, s: f64) -> Option<f64> {
        self.s_nodes
            .iter()
            .position(|&x| x == s)
            .map(|k| self.phi_values[k])
    }

    /// Open band `(lo, hi)` cut out by `0 < 1, 1/c < ∞` that contains `q`, and
    /// the expected monotonicity (+1 increasing, −1 decreasing, 0 constant).
    pub fn expected_shape(q: f64, c: f64) -> ((f64, f64), i32) {
        let balanced = 1.0 / c;
        if (q - balanced).abs() <= 1e-12 * balanced {
            return ((balanced, balanced), 0);
        }
        let (a, b) = (balanced.min(1.0), balanced.max(1.0));
        let band = if q < a {
            (0.0, a)
        } else if q < b {
            (a, b)
        } else {
            (b, f64::INFINITY)
        };
        // Φ' has the sign of −(c²Φ² − 1)/(Φ − 1) at Φ = q.
        let slope = -(c * c * q * q - 1.0) / (q - 1.0);
        (band, if slope > 0.0 { 1 } else { -1 })
    }

    /// Whether the samples are monotone as predicted and stay in their band.
    pub fn satisfies_shape(&self) -> bool {
        let ((lo, hi), trend) = Self::expected_shape(self.q, self.c);
        let v = &self.phi_values;
        if trend == 0 {
            let scale = self.q.max(1.0);
            return v.iter().all(|x| (x - self.q).abs() <= 1e-8 * scale);
        }
        let banded = v.iter().all(|&x| x > lo && x < hi);
        let monotone = v
            .windows(2)
            .all(|w| if trend > 0 { w[1] > w[0] } else { w[1] < w[0] });
        banded && monotone
    }

    /// Writes `s,phi` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "phi"])?;
        for (s, p) in self.s_nodes.iter().zip(&self.phi_values) {
            w.write_record([format!("{s:e}"), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Side {
    /// `s > 1`.
    Up,
    /// `s < 1`.
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BranchEnd {
    /// Passed the requested `s` limit.
    Range,
    /// `Φ` reached 1 at this `s`: an end of the maximal interval.
    Turn(f64),
    /// Left the `t` window.
    TimeLimit,
    /// The orbit or the integrator broke down.
    Breakdown,
}

/// One monotone-in-`s` branch of the orbit, from `t = 1` outwards.
struct Branch {
    dir: f64,
    states: Vec<(f64, [f64; 2])>,
    end: BranchEnd,
}

fn s_phi(t: f64, y: &[f64; 2]) -> (f64, f64) {
    (y[0] / t, t * y[1] / y[0])
}

struct Portrait<'a> {
    q: f64,
    c: f64,
    gamma: f64,
    ode: &'a Dopri5,
}

impl Portrait<'_> {
    fn rhs(&self) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        move |t, y| [y[1], el_rhs(self.c, self.gamma, t, y[0], y[1])]
    }

    /// State at `t0 + τ`.
    fn state_after(&self, t0: f64, y0: [f64; 2], tau: f64) -> Result<[f64; 2]> {
        self.ode.advance(self.rhs(), t0, y0, tau)
    }

    /// Finds `τ` in the step `[t0, t1]` with `g(t0 + τ, y) = 0`, given a sign
    /// change between the ends (Illinois false position).
    fn locate<G: Fn(f64, &[f64; 2]) -> f64>(
        &self,
        t0: f64,
        y0: [f64; 2],
        t1: f64,
        y1: [f64; 2],
        g: G,
    ) -> Result<(f64, [f64; 2])> {
        let (mut a, mut b) = (0.0, t1 - t0);
        let (mut ga, mut gb) = (g(t0, &y0), g(t1, &y1));
        let (mut ya, mut yb) = (y0, y1);
        if ga == 0.0 {
            return Ok((t0, y0));
        }
        let mut side = 0i32;
        for _ in 0..200 {
            let mut m = (a * gb - b * ga) / (gb - ga);
            if !(m.is_finite() && (m - a) * (m - b) < 0.0) {
                m = 0.5 * (a + b);
            }
            let ym = self.state_after(t0, y0, m)?;
            let gm = g(t0 + m, &ym);
            if gm == 0.0 {
                return Ok((t0 + m, ym));
            }
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
                ga = gm;
                ya = ym;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            } else {
                b = m;
                gb = gm;
                yb = ym;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            }
            if (b - a).abs() <= 4.0 * f64::EPSILON * (t0 + b).abs() {
                break;
            }
        }
        Ok(if ga.abs() <= gb.abs() {
            (t0 + a, ya)
        } else {
            (t0 + b, yb)
        })
    }

    /// Walks one branch until `s` passes `s_limit` or the interval ends.
    fn walk(&self, side: Side, s_limit: f64) -> Result<Branch> {
        let q = self.q;
        let dir = if (side == Side::Up) == (q > 1.0) {
            1.0
        } else {
            -1.0
        };
        let t_end = if dir > 0.0 { T_MAX } else { T_MIN };
        let above = q > 1.0;
        let mut states = vec![(1.0, [1.0, q])];
        let mut end = BranchEnd::TimeLimit;
        let mut pending_turn = None;
        let outcome = self
            .ode
            .integrate(self.rhs(), 1.0, [1.0, q], t_end, &[], |step| {
                let y = step.y1;
                if !(y[0] > 0.0 && y[1] > 0.0) {
                    end = BranchEnd::Breakdown;
                    return Flow::Halt;
                }
                let (s, phi) = s_phi(step.t1, &y);
                if (phi > 1.0) != above || (phi - 1.0).abs() < TURN_TOL {
                    pending_turn = Some((step.t0, step.y0, step.t1, step.y1));
                    return Flow::Halt;
                }
                states.push((step.t1, y));
                let passed = match side {
                    Side::Up => s >= s_limit,
                    Side::Down => s <= s_limit,
                };
                if passed {
                    end = BranchEnd::Range;
                    return Flow::Halt;
                }
                Flow::Continue
            });
        match outcome {
            Ok(_) => {}
            Err(Error::StepFailure { .. }) => end = BranchEnd::Breakdown,
            Err(e) => return Err(e),
        }
        if let Some((t0, y0, t1, y1)) = pending_turn {
            let (tt, yt) = self.locate(t0, y0, t1, y1, |t, y| s_phi(t, y).1 - 1.0)?;
            end = BranchEnd::Turn(s_phi(tt, &yt).0);
        }
        Ok(Branch { dir, states, end })
    }

    /// `Φ` at `s` on a walked branch, or `None` when the branch stops short.
    fn value_on(&self, branch: &Branch, s: f64) -> Result<Option<f64>> {
        let sv = |k: usize| {
            let (t, y) = branch.states[k];
            s_phi(t, &y).0
        };
        let n = branch.states.len();
        let increasing = (branch.dir > 0.0) == (self.q > 1.0);
        // s is monotone along the branch.
        let key = |k: usize| if increasing { sv(k) } else { -sv(k) };
        let target = if increasing { s } else { -s };
        if n < 2 || target < key(0) || target > key(n - 1) {
            return Ok(None);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if key(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, y0) = branch.states[lo];
        let (t1, y1) = branch.states[hi];
        if sv(lo) == s {
            return Ok(Some(s_phi(t0, &y0).1));
        }
        if sv(hi) == s {
            return Ok(Some(s_phi(t1, &y1).1));
        }
        let (t, y) = self.locate(t0, y0, t1, y1, |t, y| s_phi(t, y).0 - s)?;
        Ok(Some(s_phi(t, &y).1))
    }
}

fn check_q(q: f64, c: f64, gamma: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Domain(format!(
            "initial slope q must be positive, got {q}"
        )));
    }
    if !(c.is_finite() && c > 0.0 && gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "c and gamma must be positive, got c={c}, gamma={gamma}"
        )));
    }
    if (q - 1.0).abs() <= 1e-14 {
        return Err(Error::SingularStart);
    }
    Ok(())
}

/// Samples `Φ_q` on `n` uniform nodes of `s_range` (plus `s = 1` when inside),
/// keeping the nodes that lie in the maximal interval.
pub fn phi_curve(
    q: f64,
    c: f64,
    gamma: f64,
    s_range: (f64, f64),
    n: usize,
    ode: &Dopri5,
) -> Result<PhiCurve> {
    check_q(q, c, gamma)?;
    let (s_lo, s_hi) = s_range;
    if !(s_lo > 0.0 && s_hi > s_lo && s_hi.is_finite()) {
        return Err(Error::Domain(format!(
            "s range must satisfy 0 < s_min < s_max, got {s_lo}..{s_hi}"
        )));
    }
    let portrait = Portrait { q, c, gamma, ode };
    let mut nodes = crate::geometry::uniform_nodes(s_lo, s_hi, n.max(2));
    if s_lo < 1.0 && s_hi > 1.0 && !nodes.contains(&1.0) {
        nodes.push(1.0);
        nodes.sort_by(f64::total_cmp);
    }
    let up = if s_hi > 1.0 {
        Some(portrait.walk(Side::Up, s_hi)?)
    } else {
        None
    };
    let down = if s_lo < 1.0 {
        Some(portrait.walk(Side::Down, s_lo)?)
    } else {
        None
    };
    let mut s_nodes = Vec::with_capacity(nodes.len());
    let mut phi_values = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        let value = if s == 1.0 {
            Some(q)
        } else if s > 1.0 {
            match &up {
                Some(b) => portrait.value_on(b, s)?,
                None => None,
            }
        } else {
            match &down {
                Some(b) => portrait.value_on(b, s)?,
                None => None,
            }
        };
        if let Some(v) = value {
            s_nodes.push(s);
            phi_values.push(v);
        }
    }
    let turn = |b: &Option<Branch>| match b.as_ref().map(|b| b.end) {
        Some(BranchEnd::Turn(s)) => Some(s),
        _ => None,
    };
    Ok(PhiCurve {
        q,
        c,
        gamma,
        s_nodes,
        phi_values,
        maximal_interval_hint: IntervalHint {
            left: turn(&down).unwrap_or(0.0),
            right: turn(&up),
        },
    })
}

/// `Φ_q(s)`, or `None` when `s` is outside the maximal interval (or beyond
/// the `t` window).
pub fn phi_at(q: f64, c: f64, gamma: f64, s: f64, ode: &Dopri5) -> Result<Option<f64>> {
    check_q(q, c, gamma)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("s must be positive, got {s}")));
    }
    if s == 1.0 {
        return Ok(Some(q));
    }
    let portrait = Portrait { q, c, gamma, ode };
    let side = if s > 1.0 { Side::Up } else { Side::Down };
    let branch = portrait.walk(side, s)?;
    portrait.value_on(&branch, s)
}

/// First-order form integrated directly in `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReducedForm {
    /// `Φ′ = −Φ(c²Φ² − 1)(1 + γs²Φ²) / (s(Φ − 1)(1 + c²γs²Φ³))`.
    Elasticity,
    /// `V = sΦ`: `V′ = V²(c²V − s)(1 + γsV) / (s(s − V)(s + c²γV³))`.
    Slope,
}

/// Integrates a reduced form from `Φ(1) = q` to the given nodes, which must
/// all lie on one side of 1 and move away from it. Returns `Φ` at each node.
pub fn phi_reduced(
    q: f64,
    c: f64,
    gamma: f64,
    form: ReducedForm,
    s_nodes: &[f64],
    ode: &Dopri5,
) -> Result<Vec<f64>> {
    check_q(q, c, gamma)?;
    let Some(&last) = s_nodes.last() else {
        return Ok(Vec::new());
    };
    let away = s_nodes
        .windows(2)
        .all(|w| if last > 1.0 { w[1] > w[0] } else { w[1] < w[0] });
    if !away || s_nodes.iter().any(|&s| (s - 1.0) * (last - 1.0) < 0.0) {
        return Err(Error::Domain(
            "reduced-form nodes must move monotonically away from s=1".into(),
        ));
    }
    let c2 = c * c;
    let rhs = |s: f64, y: &[f64; 1]| -> [f64; 1] {
        match form {
            ReducedForm::Elasticity => {
                let p = y[0];
                [-p * (c2 * p * p - 1.0) * (1.0 + gamma * s * s * p * p)
                    / (s * (p - 1.0) * (1.0 + c2 * gamma * s * s * p * p * p))]
            }
            ReducedForm::Slope => {
                let v = y[0];
                [v * v * (c2 * v - s) * (1.0 + gamma * s * v)
                    / (s * (s - v) * (s + c2 * gamma * v * v * v))]
            }
        }
    };
    let stops: Vec<f64> = s_nodes.iter().copied().filter(|&s| s != 1.0).collect();
    let mut values = Vec::with_capacity(s_nodes.len());
    if s_nodes[0] == 1.0 {
        values.push(q);
    }
    ode.integrate(rhs, 1.0, [q], last, &stops, |step| {
        if step.stop.is_some() {
            let y = step.y1[0];
            values.push(match form {
                ReducedForm::Elasticity => y,
                ReducedForm::Slope => y / step.t1,
            });
        }
        Flow::Continue
    })?;
    Ok(values)
}

/// Value the family is claimed to approach.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ClaimedLimit {
    Infinity,
    Value(f64),
}

/// Which `q`-limit a sequence probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitClaim {
    /// `q → ∞`: `Φ_q(s) → ∞`.
    QToInfinity,
    /// `q ↓ 1/c`: `Φ_q(s) → 1/c`.
    QToBalancedFromAbove,
    /// `q ↑ 1/c`: `Φ_q(s) → 1/c`.
    QToBalancedFromBelow,
    /// `q ↑ 1`: probed against the value 1.
    QToOneFromBelow,
    /// `q ↓ 1`: probed against the value 1.
    QToOneFromAbove,
    /// `q ↓ 0`: `Φ_q(s) → 0`.
    QToZero,
}

/// Empirical reading of one `q`-sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitVerdict {
    /// Monotone approach with a small final gap (or unbounded growth).
    Consistent,
    /// Monotone and contracting, but the extrapolated limit is elsewhere.
    ConvergesElsewhere,
    Inconclusive,
}

/// One probed sequence `q_k → q*` at a fixed `s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSequence {
    pub claim: LimitClaim,
    pub s: f64,
    pub claimed: ClaimedLimit,
    pub q_values: Vec<f64>,
    /// `None` where `s` lies outside the maximal interval of `Φ_q`.
    pub phi_values: Vec<Option<f64>>,
    pub monotone: bool,
    /// Successive increments shrink.
    pub contracting: bool,
    /// Distance of the last value from the claimed limit.
    pub final_gap: f64,
    /// Aitken extrapolation from the last three values.
    pub extrapolated: Option<f64>,
    pub verdict: LimitVerdict,
}

/// `q ↦ Φ_q(s)` increasing over all probed `q` at a fixed `s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonCrossing {
    pub s: f64,
    pub q_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub increasing: bool,
}

/// Limit sequences and non-crossing checks at every probe point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitReport {
    pub c: f64,
    pub gamma: f64,
    pub sequences: Vec<LimitSequence>,
    pub non_crossing: Vec<NonCrossing>,
    /// Sequences whose verdict is not `Consistent`.
    pub alarms: Vec<String>,
}

fn aitken(v: &[f64]) -> Option<f64> {
    let n = v.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
    let denom = (c - b) - (b - a);
    if denom == 0.0 {
        return Some(c);
    }
    let e = c - (c - b) * (c - b) / denom;
    e.is_finite().then_some(e)
}

fn judge(
    claim: LimitClaim,
    s: f64,
    claimed: ClaimedLimit,
    q_values: Vec<f64>,
    phi_values: Vec<Option<f64>>,
) -> LimitSequence {
    let defined: Option<Vec<f64>> = phi_values.iter().copied().collect();
    let (monotone, contracting, final_gap, extrapolated, verdict) = match defined {
        None => (false, false, f64::NAN, None, LimitVerdict::Inconclusive),
        Some(v) => {
            let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
            let monotone =
                !d.is_empty() && (d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0));
            let contracting = d.windows(2).all(|w| w[1].abs() < w[0].abs());
            let last = *v.last().expect("non-empty sequence");
            match claimed {
                ClaimedLimit::Infinity => {
                    let growing = monotone && d[0] > 0.0 && !contracting;
                    let verdict = if growing {
                        LimitVerdict::Consistent
                    } else {
                        LimitVerdict::Inconclusive
                    };
                    (monotone, contracting, f64::INFINITY, None, verdict)
                }
                ClaimedLimit::Value(target) => {
                    let tol = 1e-2 * target.abs().max(1.0);
                    let gaps: Vec<f64> = v.iter().map(|x| (x - target).abs()).collect();
                    let approaching = gaps.windows(2).all(|w| w[1] < w[0]);
                    let ext = aitken(&v);
                    let ext_near = ext.is_some_and(|e| (e - target).abs() <= tol);
                    let final_gap = (last - target).abs();
                    let verdict = if monotone && approaching && (final_gap <= tol || ext_near) {
                        LimitVerdict::Consistent
                    } else if monotone && contracting && ext.is_some() && !ext_near {
                        LimitVerdict::ConvergesElsewhere
                    } else {
                        LimitVerdict::Inconclusive
                    };
                    (monotone, contracting, final_gap, ext, verdict)
                }
            }
        }
    };
    LimitSequence {
        claim,
        s,
        claimed,
        q_values,
        phi_values,
        monotone,
        contracting,
        final_gap,
        extrapolated,
        verdict,
    }
}

/// Evaluates `Φ_q(s)` along `q`-sequences approaching each limit at every
/// probe `s`, and checks that integral curves do not cross.
pub fn phi_limit_suite(c: f64, gamma: f64, s_probe: &[f64], ode: &Dopri5) -> Result<LimitReport> {
    if !(c.is_finite() && c > 0.0 && gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "c and gamma must be positive, got c={c}, gamma={gamma}"
        )));
    }
    let balanced = 1.0 / c;
    let small = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut plans: Vec<(LimitClaim, ClaimedLimit, Vec<f64>)> = vec![
        (
            LimitClaim::QToInfinity,
            ClaimedLimit::Infinity,
            [4.0, 16.0, 64.0, 256.0]
                .iter()
                .map(|k| k * balanced.max(1.0))
                .collect(),
        ),
        (
            LimitClaim::QToBalancedFromAbove,
            ClaimedLimit::Value(balanced),
            small.iter().map(|e| balanced + e * balanced).collect(),
        ),
        (
            LimitClaim::QToBalancedFromBelow,
            ClaimedLimit::Value(balanced),
            small
                .iter()
                .map(|e| balanced - e * (balanced - 1.0).abs().min(balanced))
                .collect(),
        ),
        (
            LimitClaim::QToOneFromBelow,
            ClaimedLimit::Value(1.0),
            small.iter().map(|e| 1.0 - e).collect(),
        ),
        (
            LimitClaim::QToOneFromAbove,
            ClaimedLimit::Value(1.0),
            small.iter().map(|e| 1.0 + e).collect(),
        ),
        (
            LimitClaim::QToZero,
            ClaimedLimit::Value(0.0),
            small.to_vec(),
        ),
    ];
    if (balanced - 1.0).abs() < 1e-12 {
        plans.retain(|p| {
            p.0 != LimitClaim::QToBalancedFromBelow && p.0 != LimitClaim::QToBalancedFromAbove
        });
    }
    let mut sequences = Vec::new();
    let mut non_crossing = Vec::new();
    for &s in s_probe {
        let mut pool: Vec<(f64, f64)> = Vec::new();
        for (claim, claimed, qs) in &plans {
            let mut values = Vec::with_capacity(qs.len());
            for &q in qs {
                let v = phi_at(q, c, gamma, s, ode)?;
                if let Some(x) = v {
                    pool.push((q, x));
                }
                values.push(v);
            }
            sequences.push(judge(*claim, s, *claimed, qs.clone(), values));
        }
        pool.sort_by(|a, b| a.0.total_cmp(&b.0));
        pool.dedup_by(|a, b| a.0 == b.0);
        non_crossing.push(NonCrossing {
            s,
            increasing: pool.windows(2).all(|w| w[1].1 > w[0].1),
            q_values: pool.iter().map(|p| p.0).collect(),
            phi_values: pool.iter().map(|p| p.1).collect(),
        });
    }
    let alarms = sequences
        .iter()
        .filter(|q| q.verdict != LimitVerdict::Consistent)
        .map(|q| {
            format!(
                "{:?} at s={}: {:?} (last value {:?}, extrapolated {:?})",
                q.claim,
                q.s,
                q.verdict,
                q.phi_values.last().copied().flatten(),
                q.extrapolated
            )
        })
        .collect();
    Ok(LimitReport {
        c,
        gamma,
        sequences,
        non_crossing,
        alarms,
    })
}

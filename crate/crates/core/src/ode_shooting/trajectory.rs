use crate::error::{Error, Result};
use crate::geometry::{uniform_nodes, RadialFn, RadialProfile};
use crate::ode::{Dopri5, Flow};

use super::el_rhs;

/// Dense solution of the Euler–Lagrange equation on `[1, t_end]`, stored
/// with first and second derivatives and evaluated by quintic Hermite
/// interpolation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub q: f64,
    pub c: f64,
    pub gamma: f64,
    t: Vec<f64>,
    h: Vec<f64>,
    hd: Vec<f64>,
    hdd: Vec<f64>,
}

impl Trajectory {
    /// Integrates from `H(1) = 1`, `Ḣ(1) = q` to `t_end`, landing exactly on
    /// `n` uniform nodes.
    pub fn integrate(
        q: f64,
        c: f64,
        gamma: f64,
        t_end: f64,
        n: usize,
        ode: &Dopri5,
    ) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!(
                "initial slope q must be positive, got {q}"
            )));
        }
        if !(t_end >= 1.0 && t_end.is_finite()) {
            return Err(Error::Domain(format!(
                "t_max must be at least 1, got {t_end}"
            )));
        }
        let n = n.max(2);
        let nodes = uniform_nodes(1.0, t_end, n);
        let mut h = Vec::with_capacity(n);
        let mut hd = Vec::with_capacity(n);
        h.push(1.0);
        hd.push(q);
        if t_end > 1.0 {
            let mut bad_slope = None;
            ode.integrate(
                |t, y: &[f64; 2]| [y[1], el_rhs(c, gamma, t, y[0], y[1])],
                1.0,
                [1.0, q],
                t_end,
                &nodes[1..],
                |step| {
                    if !(step.y1[1] > 0.0 && step.y1[0] > 0.0) {
                        bad_slope = Some((step.t1, step.y1[1]));
                        return Flow::Halt;
                    }
                    if step.stop.is_some() {
                        h.push(step.y1[0]);
                        hd.push(step.y1[1]);
                    }
                    Flow::Continue
                },
            )?;
            if let Some((t, slope)) = bad_slope {
                return Err(Error::NegativeSlope { t, slope });
            }
        }
        let hdd = (0..n)
            .map(|k| el_rhs(c, gamma, nodes[k], h[k], hd[k]))
            .collect();
        Ok(Self {
            q,
            c,
            gamma,
            t: nodes,
            h,
            hd,
            hdd,
        })
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn hdot_values(&self) -> &[f64] {
        &self.hd
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn end_value(&self) -> f64 {
        self.h[self.h.len() - 1]
    }

    /// Every `stride`-th node as a profile (the last node is always kept).
    pub fn to_profile(&self, stride: usize) -> Result<RadialProfile> {
        let stride = stride.max(1);
        let mut idx: Vec<usize> = (0..self.t.len()).step_by(stride).collect();
        if *idx.last().expect("non-empty") != self.t.len() - 1 {
            idx.push(self.t.len() - 1);
        }
        RadialProfile::new(
            idx.iter().map(|&k| self.t[k]).collect(),
            idx.iter().map(|&k| self.h[k]).collect(),
            idx.iter().map(|&k| self.hd[k]).collect(),
        )
    }

    /// `(H, Ḣ, Ḧ)` at `t`, clamped into the domain; `Ḧ` from the equation.
    pub fn state(&self, t: f64) -> (f64, f64, f64) {
        let (h, d) = self.value(t);
        (h, d, el_rhs(self.c, self.gamma, t, h, d))
    }

    /// Inverse map `F(s)` with `H(F(s)) = s`, and `F'(s) = 1/Ḣ(F(s))`.
    pub fn inverse(&self, s: f64) -> (f64, f64) {
        let n = self.h.len();
        let s = s.clamp(self.h[0], self.h[n - 1]);
        let k = self.h.partition_point(|&x| x <= s).clamp(1, n - 1) - 1;
        if self.h[k] == s {
            return (self.t[k], 1.0 / self.hd[k]);
        }
        let (mut lo, mut hi) = (self.t[k], self.t[k + 1]);
        let mut t = lo + (hi - lo) * (s - self.h[k]) / (self.h[k + 1] - self.h[k]);
        for _ in 0..100 {
            let (h, d) = self.value(t);
            let g = h - s;
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - g / d;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            // Converged only when the accepted iterate barely moves.
            let settled = (next - t).abs() <= 1e-15 * t || hi - lo <= 1e-15 * hi;
            t = next;
            if settled {
                break;
            }
        }
        let (_, d) = self.value(t);
        (t, 1.0 / d)
    }
}

impl RadialFn for Trajectory {
    fn span(&self) -> (f64, f64) {
        (self.t[0], self.t_end())
    }

    fn value(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        let t = t.clamp(self.t[0], self.t[n - 1]);
        let k = self.t.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let w = self.t[k + 1] - self.t[k];
        let u = (t - self.t[k]) / w;
        let (u2, u3, u4, u5) = (u * u, u * u * u, u.powi(4), u.powi(5));
        let (y0, y1) = (self.h[k], self.h[k + 1]);
        let (d0, d1) = (self.hd[k], self.hd[k + 1]);
        let (e0, e1) = (self.hdd[k], self.hdd[k + 1]);
        let b0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let b1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let b2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
        let b3 = 0.5 * u3 - u4 + 0.5 * u5;
        let b4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let b5 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let value = b0 * y0 + b5 * y1 + w * (b1 * d0 + b4 * d1) + w * w * (b2 * e0 + b3 * e1);
        let p0 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
        let p1 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
        let p2 = u - 4.5 * u2 + 6.0 * u3 - 2.5 * u4;
        let p3 = 1.5 * u2 - 4.0 * u3 + 2.5 * u4;
        let p4 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
        let slope = (p0 * y0 - p0 * y1) / w + p1 * d0 + p4 * d1 + w * (p2 * e0 + p3 * e1);
        (value, slope)
    }
}

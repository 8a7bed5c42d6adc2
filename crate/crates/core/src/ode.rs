//! Dormand–Prince 5(4) integrator with FSAL stages, stop-time clipping and
//! step observers.

use crate::error::{Error, Result};

/// Adaptive step-control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step, handed to the observer.
#[derive(Clone, Copy, Debug)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    /// Index into the `stops` slice when `t1` landed exactly on a stop time.
    pub stop: Option<usize>,
}

/// Observer verdict after an accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Halt,
}

/// State reached when integration ended.
#[derive(Clone, Copy, Debug)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub halted: bool,
    pub steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// One trial step of size `h` from `(t, y)` with first stage `k1`.
    /// Returns the fifth-order state, the derivative there, and the scaled
    /// error norm (infinite when any stage is non-finite).
    pub fn trial<const N: usize, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> ([f64; N], [f64; N], f64)
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &combine(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = combine(
            y,
            h,
            &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(t + h, &y1);
        if !(all_finite(&y1) && all_finite(&k7)) {
            return (y1, k7, f64::INFINITY);
        }
        let mut norm = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
            norm += (e / scale).powi(2);
        }
        let norm = (norm / N as f64).sqrt();
        (
            y1,
            k7,
            if norm.is_finite() {
                norm
            } else {
                f64::INFINITY
            },
        )
    }

    /// Advances `(t, y)` by exactly `h` using as many adaptive sub-steps as needed.
    pub fn advance<const N: usize, F>(
        &self,
        mut f: F,
        t: f64,
        y: [f64; N],
        h: f64,
    ) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        Ok(self
            .integrate(&mut f, t, y, t + h, &[], |_| Flow::Continue)?
            .y)
    }

    /// Integrates from `t0` to `t_end` (either direction). Steps are clipped
    /// to land exactly on every time in `stops`, which must be ordered in
    /// the integration direction and lie strictly between `t0` and `t_end`
    /// or equal `t_end`.
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        stops: &[f64],
        mut observer: O,
    ) -> Result<Outcome<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(&Step<N>) -> Flow,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0;
        if span == 0.0 {
            return Ok(Outcome {
                t,
                y,
                halted: false,
                steps: 0,
            });
        }
        let mut k1 = f(t, &y);
        if !all_finite(&k1) {
            return Err(Error::StepFailure { t, step: 0.0 });
        }
        let mut h = self.initial_step(&mut f, t, &y, &k1, dir, span);
        let mut next_stop = 0usize;
        let mut steps = 0usize;
        let mut rejected_in_row = 0u32;

        loop {
            let target = stops.get(next_stop).copied().unwrap_or(t_end);
            let remaining = (target - t) * dir;
            let mut landing = None;
            let mut step = h;
            if remaining <= step * (1.0 + 1e-12) {
                step = remaining;
                landing = Some(target);
            }
            let h_floor = 1e-14 * t.abs().max(1.0);
            if step < h_floor && landing.is_none() {
                return Err(Error::StepFailure { t, step });
            }

            let (y1, k7, err) = self.trial(&mut f, t, &y, &k1, dir * step);
            if err <= 1.0 {
                let t1 = landing.unwrap_or(t + dir * step);
                let stop_hit = match landing {
                    Some(_) if next_stop < stops.len() => {
                        next_stop += 1;
                        Some(next_stop - 1)
                    }
                    _ => None,
                };
                let record = Step {
                    t0: t,
                    y0: y,
                    t1,
                    y1,
                    stop: stop_hit,
                };
                t = t1;
                y = y1;
                k1 = k7;
                steps += 1;
                rejected_in_row = 0;
                if observer(&record) == Flow::Halt {
                    return Ok(Outcome {
                        t,
                        y,
                        halted: true,
                        steps,
                    });
                }
                if landing.is_some() && next_stop >= stops.len() && (t - t_end).abs() <= 0.0 {
                    return Ok(Outcome {
                        t,
                        y,
                        halted: false,
                        steps,
                    });
                }
                if steps >= self.max_steps {
                    return Err(Error::StepFailure { t, step });
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A clipped step says nothing about the admissible size.
                h = if landing.is_some() {
                    h.max(step * grow)
                } else {
                    step * grow
                };
            } else {
                rejected_in_row += 1;
                let shrink = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.2
                };
                h = step * shrink;
                if h < h_floor || rejected_in_row > 200 {
                    return Err(Error::StepFailure { t, step: h });
                }
            }
        }
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        dir: f64,
        span: f64,
    ) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let scale = |i: usize| self.atol + self.rtol * y[i].abs();
        let d0 = (0..N)
            .map(|i| (y[i] / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt();
        let d1 = (0..N)
            .map(|i| (k1[i] / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        let y1 = combine(y, dir * h0, &[(1.0, k1)]);
        let k2 = f(t + dir * h0, &y1);
        if !all_finite(&k2) {
            return (h0 * 1e-3).max(1e-12);
        }
        let d2 = (0..N)
            .map(|i| ((k2[i] - k1[i]) / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A radial function `t ↦ (H(t), Ḣ(t))` on a closed interval.
pub trait RadialFn {
    /// Closed interval on which the function is defined.
    fn span(&self) -> (f64, f64);

    /// Value and derivative at `t`; callers keep `t` inside [`span`](Self::span).
    fn value(&self, t: f64) -> (f64, f64);

    /// Points where the function is only piecewise smooth, including both
    /// ends of the span. `None` means smooth on the whole span.
    fn breakpoints(&self) -> Option<&[f64]> {
        None
    }
}

impl<F: Fn(f64) -> (f64, f64)> RadialFn for ((f64, f64), F) {
    fn span(&self) -> (f64, f64) {
        self.0
    }

    fn value(&self, t: f64) -> (f64, f64) {
        (self.1)(t)
    }
}

/// `n` equispaced nodes on `[lo, hi]` with both endpoints exact.
pub fn uniform_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect()
}

/// Sampled strictly increasing map `H` with derivative samples.
///
/// Nodes start at 1 and `H(1) = 1`. Every slope is positive, except that a
/// zero slope is tolerated at the first node (the degenerate inner circle
/// of a threshold minimizer).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    t: Vec<f64>,
    #[serde(rename = "H")]
    h: Vec<f64>,
    #[serde(rename = "Hdot")]
    hdot: Vec<f64>,
}

#[derive(Deserialize)]
struct CsvRow {
    t: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "Hdot")]
    hdot: f64,
}

impl RadialProfile {
    /// Allowed deviation of `H(1)` from 1.
    pub const START_TOLERANCE: f64 = 1e-10;

    pub fn new(t: Vec<f64>, h: Vec<f64>, hdot: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || h.len() != n || hdot.len() != n {
            return Err(Error::InvalidProfile(format!(
                "need at least two nodes and equal lengths, got t={}, H={}, Hdot={}",
                n,
                h.len(),
                hdot.len()
            )));
        }
        if let Some(k) =
            (0..n).find(|&k| !(t[k].is_finite() && h[k].is_finite() && hdot[k].is_finite()))
        {
            return Err(Error::InvalidProfile(format!(
                "non-finite sample at node {k}"
            )));
        }
        if (t[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProfile(format!(
                "first node must be 1, got {}",
                t[0]
            )));
        }
        if (h[0] - 1.0).abs() > Self::START_TOLERANCE {
            return Err(Error::InvalidProfile(format!(
                "H(1) must be 1, got {}",
                h[0]
            )));
        }
        if let Some(k) = (1..n).find(|&k| t[k] <= t[k - 1]) {
            return Err(Error::InvalidProfile(format!(
                "nodes not strictly increasing at {k}"
            )));
        }
        if let Some(k) = (1..n).find(|&k| h[k] <= h[k - 1]) {
            return Err(Error::InvalidProfile(format!(
                "H not strictly increasing at node {k}"
            )));
        }
        if hdot[0] < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "negative slope {} at t=1",
                hdot[0]
            )));
        }
        if let Some(k) = (1..n).find(|&k| hdot[k] <= 0.0) {
            return Err(Error::InvalidProfile(format!(
                "slope {} at t={} is not positive",
                hdot[k], t[k]
            )));
        }
        Ok(Self { t, h, hdot })
    }

    /// Samples `f` on `n` uniform nodes of `[1, t_max]`.
    pub fn sample<F: FnMut(f64) -> (f64, f64)>(t_max: f64, n: usize, mut f: F) -> Result<Self> {
        let t = uniform_nodes(1.0, t_max, n);
        let (h, hdot) = t.iter().map(|&x| f(x)).unzip();
        Self::new(t, h, hdot)
    }

    /// Identity map on `[1, r]`.
    pub fn identity(r: f64, n: usize) -> Result<Self> {
        Self::sample(r, n, |t| (t, 1.0))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn hdot_values(&self) -> &[f64] {
        &self.hdot
    }

    /// Right end of the domain.
    pub fn t_max(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// `H` at the right end of the domain.
    pub fn end_value(&self) -> f64 {
        self.h[self.h.len() - 1]
    }

    /// True when the slope vanishes at the inner circle.
    pub fn is_degenerate(&self) -> bool {
        self.hdot[0] == 0.0
    }

    /// True when the nodes are equispaced to rounding.
    pub fn is_uniform(&self) -> bool {
        let step = (self.t_max() - 1.0) / (self.len() - 1) as f64;
        self.t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step.max(1.0))
    }

    /// Shape-preserving cubic Hermite interpolation of `H` using the stored
    /// slopes, limited per interval so that the interpolant stays monotone.
    /// Stored values are returned unchanged at nodes.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.t[0], self.t_max());
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        let k = self.t.partition_point(|&x| x <= t);
        if k > 0 && self.t[k - 1] == t {
            return (self.h[k - 1], self.hdot[k - 1]);
        }
        let k = k.clamp(1, n - 1) - 1;
        let width = self.t[k + 1] - self.t[k];
        let secant = (self.h[k + 1] - self.h[k]) / width;
        let (mut m0, mut m1) = (self.hdot[k], self.hdot[k + 1]);
        let a = m0 / secant;
        let b = m1 / secant;
        let norm = a * a + b * b;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
        let u = (t - self.t[k]) / width;
        let (h0, h1) = (self.h[k], self.h[k + 1]);
        let om = 1.0 - u;
        let value = h0 * (1.0 + 2.0 * u) * om * om
            + width * m0 * u * om * om
            + h1 * u * u * (3.0 - 2.0 * u)
            - width * m1 * u * u * om;
        let slope =
            6.0 * u * om * (h1 - h0) / width + m0 * om * (1.0 - 3.0 * u) + m1 * u * (3.0 * u - 2.0);
        (value, slope)
    }

    /// Writes the `t,H,Hdot` CSV form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "H", "Hdot"])?;
        for k in 0..self.len() {
            w.write_record([
                format!("{:e}", self.t[k]),
                format!("{:e}", self.h[k]),
                format!("{:e}", self.hdot[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `t,H,Hdot` CSV form and validates it.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let (mut t, mut h, mut hdot) = (Vec::new(), Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            t.push(row.t);
            h.push(row.h);
            hdot.push(row.hdot);
        }
        Self::new(t, h, hdot)
    }
}

impl RadialFn for RadialProfile {
    fn span(&self) -> (f64, f64) {
        (self.t[0], self.t_max())
    }

    fn value(&self, t: f64) -> (f64, f64) {
        self.eval_unchecked(t.clamp(self.t[0], self.t_max()))
    }

    fn breakpoints(&self) -> Option<&[f64]> {
        Some(&self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(n: usize) -> RadialProfile {
        RadialProfile::sample(2.0, n, |t| (t * t, 2.0 * t)).unwrap()
    }

    #[test]
    fn identity_midpoint() {
        let p = RadialProfile::identity(2.0, 17).unwrap();
        let (h, d) = p.eval(1.5).unwrap();
        assert!((h - 1.5).abs() < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nodes_are_exact() {
        let p = square(33);
        for k in 0..p.len() {
            let (h, d) = p.eval(p.t_nodes()[k]).unwrap();
            assert_eq!(h, p.h_values()[k]);
            assert_eq!(d, p.hdot_values()[k]);
        }
    }

    #[test]
    fn square_interpolates_within_tolerance() {
        let p = square(200);
        let (h, d) = p.eval(1.37).unwrap();
        assert!((h - 1.8769).abs() < 1e-6);
        assert!((d - 2.74).abs() < 1e-4);
    }

    #[test]
    fn out_of_domain_rejected() {
        let p = square(10);
        assert!(matches!(p.eval(0.99), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.eval(2.01), Err(Error::OutOfDomain { .. })));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn invariants_enforced() {
        let t = vec![1.0, 1.5, 2.0];
        assert!(RadialProfile::new(t.clone(), vec![1.0, 1.5, 1.4], vec![1.0; 3]).is_err());
        assert!(RadialProfile::new(t.clone(), vec![1.0, 1.5, 2.0], vec![1.0, 0.0, 1.0]).is_err());
        assert!(RadialProfile::new(t.clone(), vec![1.1, 1.5, 2.0], vec![1.0; 3]).is_err());
        assert!(
            RadialProfile::new(vec![1.0, 1.0, 2.0], vec![1.0, 1.5, 2.0], vec![1.0; 3]).is_err()
        );
        let degenerate = RadialProfile::new(t, vec![1.0, 1.5, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert!(degenerate.is_degenerate());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let p = RadialProfile::sample(2.5, 41, |t| (t.powf(1.3), 1.3 * t.powf(0.3))).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,H,Hdot\n"));
        let q = RadialProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn uniform_nodes_hit_endpoints() {
        let t = uniform_nodes(1.0, 3.7, 256);
        assert_eq!(t[0], 1.0);
        assert_eq!(t[255], 3.7);
        assert!(square(64).is_uniform());
    }

    proptest! {
        #[test]
        fn interpolant_stays_monotone(k in 0.2f64..5.0, n in 3usize..40, x in 0.0f64..1.0) {
            // Steep power profiles exercise the limiter.
            let p = RadialProfile::sample(3.0, n, |t| (t.powf(k), k * t.powf(k - 1.0))).unwrap();
            let t = 1.0 + 2.0 * x;
            let (h, d) = p.eval(t).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(h >= 1.0 - 1e-12 && h <= p.end_value() + 1e-12);
            let (h2, _) = p.eval((t + 1e-3).min(3.0)).unwrap();
            prop_assert!(h2 >= h);
        }
    }
}

//! One-dimensional quadrature rules and compensated summation.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Default number of Gauss–Legendre points per panel.
pub const DEFAULT_POINTS: usize = 64;

/// Default number of panels for composite radial integrals.
pub const DEFAULT_PANELS: usize = 8;

/// Neumaier-compensated accumulator. Summation order is the push order.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Composite Gauss–Legendre rule: `panels` equal sub-intervals, each with
/// the same `points`-point rule.
#[derive(Clone, Debug)]
pub struct CompositeGauss {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

fn rule(points: usize) -> (Vec<f64>, Vec<f64>) {
    let degree = NonZeroUsize::new(points.max(1)).expect("max(1) is non-zero");
    let gl = GaussLegendre::new(degree);
    gl.as_node_weight_pairs().iter().copied().unzip()
}

impl CompositeGauss {
    pub fn new(points: usize, panels: usize) -> Self {
        let (nodes, weights) = rule(points);
        Self {
            nodes,
            weights,
            panels: panels.max(1),
        }
    }

    /// The shared 64-point, 8-panel rule.
    pub fn standard() -> &'static CompositeGauss {
        static RULE: OnceLock<CompositeGauss> = OnceLock::new();
        RULE.get_or_init(|| CompositeGauss::new(DEFAULT_POINTS, DEFAULT_PANELS))
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over `[a, b]`. Orientation is respected (`b < a` flips the sign).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let width = (b - a) / self.panels as f64;
        let mut acc = CompensatedSum::new();
        for k in 0..self.panels {
            let lo = a + width * k as f64;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc.add(w * half * f(mid + half * x));
            }
        }
        acc.value()
    }

    /// Like [`integrate`](Self::integrate) for integrands that may fail.
    pub fn try_integrate<E, F>(&self, a: f64, b: f64, mut f: F) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        let mut err = None;
        let value = self.integrate(a, b, |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                if err.is_none() {
                    err = Some(e);
                }
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// Absolute abscissae of the rule mapped onto `[a, b]`, panel by panel.
    pub fn abscissae(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let width = (b - a) / self.panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(self.panels * self.nodes.len());
        for k in 0..self.panels {
            let mid = a + width * k as f64 + half;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, w * half));
            }
        }
        out
    }
}

/// Weights of the composite Simpson rule on `n` uniform nodes of spacing `h`.
///
/// An odd number of intervals is closed with a Simpson 3/8 panel, so the
/// rule is exact for cubics for every `n >= 4`; `n = 2` falls back to the
/// trapezoid rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => {}
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals % 2 == 0 {
                intervals
            } else {
                intervals - 3
            };
            let mut k = 0;
            while k < simpson_end {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
                k += 2;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

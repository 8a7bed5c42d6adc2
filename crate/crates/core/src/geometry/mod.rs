//! Domain types: weights, annulus pairs, radial profiles and polar grid maps.

mod grid;
mod profile;

pub use grid::{
    differentiate_grid, radial_lift, radial_lift_on, DerivativeField, GridRule, PolarGridMap,
};
pub use profile::{uniform_nodes, RadialFn, RadialProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four positive constants of the energies: `w_a` weighs the normal
/// derivative, `w_b` the tangential one, `alpha`/`beta` mix energy and
/// distortion in the total functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct Weights {
    w_a: f64,
    w_b: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    w_a: f64,
    w_b: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawWeights> for Weights {
    type Error = Error;
    fn try_from(raw: RawWeights) -> Result<Self> {
        Weights::new(raw.w_a, raw.w_b, raw.alpha, raw.beta)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl Weights {
    pub fn new(w_a: f64, w_b: f64, alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            w_a: positive("w_a", w_a)?,
            w_b: positive("w_b", w_b)?,
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }

    /// Like [`new`](Self::new) but allows `alpha` or `beta` to vanish, which
    /// switches off one half of the total functional.
    pub fn with_mix(w_a: f64, w_b: f64, alpha: f64, beta: f64) -> Result<Self> {
        let mix_ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(mix_ok(alpha) && mix_ok(beta)) || alpha + beta <= 0.0 {
            return Err(Error::Domain(format!(
                "alpha and beta must be non-negative and not both zero, got {alpha}, {beta}"
            )));
        }
        Ok(Self {
            w_a: positive("w_a", w_a)?,
            w_b: positive("w_b", w_b)?,
            alpha,
            beta,
        })
    }

    /// All four weights equal to one.
    pub fn unit() -> Self {
        Self {
            w_a: 1.0,
            w_b: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// Weights `(c, 1, gamma, 1)` realizing the given ratios.
    pub fn from_ratios(c: f64, gamma: f64) -> Result<Self> {
        Self::new(c, 1.0, gamma, 1.0)
    }

    pub fn w_a(&self) -> f64 {
        self.w_a
    }

    pub fn w_b(&self) -> f64 {
        self.w_b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Anisotropy ratio `w_a / w_b`.
    pub fn c(&self) -> f64 {
        self.w_a / self.w_b
    }

    /// Mixing ratio `alpha / beta`.
    pub fn gamma(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Same mix, normal and tangential weights exchanged.
    pub fn swap_axes(&self) -> Self {
        Self {
            w_a: self.w_b,
            w_b: self.w_a,
            ..*self
        }
    }

    /// Weights of the inverse-map problem: axes and mix both exchanged, so
    /// `c` and `gamma` are inverted.
    pub fn dual(&self) -> Self {
        Self {
            w_a: self.w_b,
            w_b: self.w_a,
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// Domain annulus `A(1, r)` and target annulus `B(1, R)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPair {
    r: f64,
    #[serde(rename = "R")]
    big_r: f64,
}

impl AnnulusPair {
    pub fn new(r: f64, big_r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(Error::Domain(format!("r must exceed 1, got {r}")));
        }
        if !(big_r.is_finite() && big_r > 1.0) {
            return Err(Error::Domain(format!("R must exceed 1, got {big_r}")));
        }
        Ok(Self { r, big_r })
    }

    /// Outer radius of the domain annulus.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Outer radius of the target annulus.
    pub fn big_r(&self) -> f64 {
        self.big_r
    }

    /// The pair with domain and target exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r: self.big_r,
            big_r: self.r,
        }
    }
}

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::profile::{uniform_nodes, RadialFn, RadialProfile};
use crate::error::{Error, Result};
use crate::quadrature::{simpson_weights, CompensatedSum};

/// Boundary-circle tolerance, absolute at the inner row and relative at the outer.
const BOUNDARY_TOL: f64 = 1e-10;

/// Sampled polar map `ρ e^{iΘ}` on the uniform grid
/// `t_i = 1 + (r−1) i/(n_t−1)`, `θ_j = 2π j/n_θ`, stored t-major.
///
/// `Θ` is stored unwrapped; the wrap `Θ(t, θ+2π) = Θ(t, θ) + 2π` is implicit.
/// A global rotation is kept apart from the samples so derivatives never
/// see it.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGridMap {
    n_t: usize,
    n_theta: usize,
    r: f64,
    big_r: f64,
    rho: Vec<f64>,
    theta: Vec<f64>,
    rotation: f64,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    n_t: usize,
    n_theta: usize,
    r: f64,
    #[serde(rename = "R")]
    big_r: f64,
    rho: Vec<f64>,
    theta: Vec<f64>,
}

impl PolarGridMap {
    /// Builds and validates a map: boundary circles preserved, winding one,
    /// positive discrete Jacobian at every node.
    pub fn new(
        n_t: usize,
        n_theta: usize,
        r: f64,
        big_r: f64,
        rho: Vec<f64>,
        theta: Vec<f64>,
    ) -> Result<Self> {
        let map = Self {
            n_t,
            n_theta,
            r,
            big_r,
            rho,
            theta,
            rotation: 0.0,
        };
        map.check_shape()?;
        map.check_class()?;
        differentiate_grid(&map)?;
        Ok(map)
    }

    fn check_shape(&self) -> Result<()> {
        if self.n_t < 3 || self.n_theta < 4 {
            return Err(Error::InvalidMap(format!(
                "grid must be at least 3 x 4, got {} x {}",
                self.n_t, self.n_theta
            )));
        }
        let cells = self.n_t * self.n_theta;
        if self.rho.len() != cells || self.theta.len() != cells {
            return Err(Error::InvalidMap(format!(
                "expected {} samples, got rho={} theta={}",
                cells,
                self.rho.len(),
                self.theta.len()
            )));
        }
        if !(self.r.is_finite() && self.r > 1.0 && self.big_r.is_finite() && self.big_r > 1.0) {
            return Err(Error::InvalidMap(format!(
                "radii must exceed 1, got r={} R={}",
                self.r, self.big_r
            )));
        }
        if let Some(k) =
            (0..cells).find(|&k| !(self.rho[k].is_finite() && self.theta[k].is_finite()))
        {
            let (i, j) = (k / self.n_theta, k % self.n_theta);
            return Err(Error::InvalidMap(format!(
                "non-finite sample at node (i={i}, j={j}), t={}, theta={}",
                self.t(i),
                self.theta_node(j)
            )));
        }
        Ok(())
    }

    /// Boundary rows on the boundary circles, `ρ > 0`, and every Θ step
    /// (including the wrap) shorter than π so the stored unwrapping has
    /// winding exactly one.
    pub fn check_class(&self) -> Result<()> {
        for j in 0..self.n_theta {
            let inner = self.rho[j];
            let outer = self.rho[(self.n_t - 1) * self.n_theta + j];
            if (inner - 1.0).abs() > BOUNDARY_TOL {
                return Err(Error::ClassViolation(format!(
                    "inner circle not preserved: rho={inner} at node (i=0, j={j}), theta={}",
                    self.theta_node(j)
                )));
            }
            if (outer - self.big_r).abs() > BOUNDARY_TOL * self.big_r {
                return Err(Error::ClassViolation(format!(
                    "outer circle not preserved: rho={outer} (R={}) at node (i={}, j={j}), theta={}",
                    self.big_r,
                    self.n_t - 1,
                    self.theta_node(j)
                )));
            }
        }
        for i in 0..self.n_t {
            for j in 0..self.n_theta {
                let k = i * self.n_theta + j;
                if self.rho[k] <= 0.0 {
                    return Err(Error::ClassViolation(format!(
                        "rho={} not positive at node (i={i}, j={j}), t={}",
                        self.rho[k],
                        self.t(i)
                    )));
                }
                let next = if j + 1 == self.n_theta {
                    self.theta[i * self.n_theta] + TAU
                } else {
                    self.theta[k + 1]
                };
                let step = next - self.theta[k];
                if step.abs() >= PI {
                    return Err(Error::ClassViolation(format!(
                        "theta jumps by {step} between nodes (i={i}, j={j}) and its neighbour; winding is not one"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn big_r(&self) -> f64 {
        self.big_r
    }

    /// Radial node `t_i`.
    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.r
        } else {
            1.0 + (self.r - 1.0) * (i as f64 / (self.n_t - 1) as f64)
        }
    }

    /// Angular node `θ_j`.
    pub fn theta_node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_theta as f64
    }

    pub fn dt(&self) -> f64 {
        (self.r - 1.0) / (self.n_t - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Stored Θ samples without the global rotation.
    pub fn theta_samples(&self) -> &[f64] {
        &self.theta
    }

    /// Global rotation added to every Θ sample.
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// `Θ(t_i, θ_j)` including the global rotation.
    pub fn theta_at(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.n_theta + j] + self.rotation
    }

    pub fn rho_at(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.n_theta + j]
    }

    /// The same map post-composed with the rotation `e^{i φ0}`.
    pub fn rotated(&self, phi0: f64) -> Self {
        Self {
            rotation: self.rotation + phi0,
            ..self.clone()
        }
    }

    /// Writes the JSON file form (rotation folded into Θ).
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let theta = if self.rotation == 0.0 {
            self.theta.clone()
        } else {
            self.theta.iter().map(|x| x + self.rotation).collect()
        };
        let file = MapFile {
            n_t: self.n_t,
            n_theta: self.n_theta,
            r: self.r,
            big_r: self.big_r,
            rho: self.rho.clone(),
            theta,
        };
        serde_json::to_writer(out, &file)?;
        Ok(())
    }

    /// Reads and validates the JSON file form.
    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let f: MapFile = serde_json::from_reader(input)?;
        Self::new(f.n_t, f.n_theta, f.r, f.big_r, f.rho, f.theta)
    }
}

/// Per-node partial derivatives and the derived energy densities.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    pub n_t: usize,
    pub n_theta: usize,
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_t: Vec<f64>,
    pub rho_theta: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub theta_theta: Vec<f64>,
    /// `|h_N|² = ρ_t² + ρ²Θ_t²`.
    pub h_n_sq: Vec<f64>,
    /// `|h_T|² = (ρ_θ² + ρ²Θ_θ²)/t²`.
    pub h_t_sq: Vec<f64>,
    /// `|∇ρ|² = ρ_t² + ρ_θ²/t²`.
    pub grad_rho_sq: Vec<f64>,
    /// `ρ²|∇Θ|² = ρ²(Θ_t² + Θ_θ²/t²)`.
    pub rho_sq_grad_theta_sq: Vec<f64>,
    /// `J = (ρ/t)(ρ_t Θ_θ − ρ_θ Θ_t)`.
    pub jac: Vec<f64>,
}

impl DerivativeField {
    pub fn len(&self) -> usize {
        self.jac.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jac.is_empty()
    }

    /// Row index of a flat node index.
    pub fn row(&self, k: usize) -> usize {
        k / self.n_theta
    }

    /// `t` at a flat node index.
    pub fn t_of(&self, k: usize) -> f64 {
        self.t[k / self.n_theta]
    }
}

/// Finite-difference partials: periodic central differences in θ, central
/// in t inside, second-order one-sided at the two boundary rows.
pub fn differentiate_grid(map: &PolarGridMap) -> Result<DerivativeField> {
    let (nt, nth) = (map.n_t, map.n_theta);
    let cells = nt * nth;
    let dt = map.dt();
    let dth = map.dtheta();
    let t: Vec<f64> = (0..nt).map(|i| map.t(i)).collect();
    let mut field = DerivativeField {
        n_t: nt,
        n_theta: nth,
        t,
        rho: map.rho.clone(),
        rho_t: vec![0.0; cells],
        rho_theta: vec![0.0; cells],
        theta_t: vec![0.0; cells],
        theta_theta: vec![0.0; cells],
        h_n_sq: vec![0.0; cells],
        h_t_sq: vec![0.0; cells],
        grad_rho_sq: vec![0.0; cells],
        rho_sq_grad_theta_sq: vec![0.0; cells],
        jac: vec![0.0; cells],
    };
    let d_t = |f: &[f64], i: usize, j: usize| -> f64 {
        let at = |ii: usize| f[ii * nth + j];
        if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dt)
        } else if i + 1 == nt {
            (3.0 * at(nt - 1) - 4.0 * at(nt - 2) + at(nt - 3)) / (2.0 * dt)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * dt)
        }
    };
    for i in 0..nt {
        let ti = field.t[i];
        let row = i * nth;
        for j in 0..nth {
            let k = row + j;
            let (jm, jp) = ((j + nth - 1) % nth, (j + 1) % nth);
            let rho_theta = (map.rho[row + jp] - map.rho[row + jm]) / (2.0 * dth);
            let th_p = map.theta[row + jp] + if jp == 0 { TAU } else { 0.0 };
            let th_m = map.theta[row + jm] - if j == 0 { TAU } else { 0.0 };
            let theta_theta = (th_p - th_m) / (2.0 * dth);
            let rho_t = d_t(&map.rho, i, j);
            let theta_t = d_t(&map.theta, i, j);
            let rho = map.rho[k];
            let jac = rho / ti * (rho_t * theta_theta - rho_theta * theta_t);
            if !(jac > 0.0) {
                return Err(Error::NonPositiveJacobian {
                    i,
                    j,
                    t: ti,
                    theta: map.theta_node(j),
                    jac,
                });
            }
            field.rho_t[k] = rho_t;
            field.rho_theta[k] = rho_theta;
            field.theta_t[k] = theta_t;
            field.theta_theta[k] = theta_theta;
            field.h_n_sq[k] = rho_t * rho_t + rho * rho * theta_t * theta_t;
            field.h_t_sq[k] =
                (rho_theta * rho_theta + rho * rho * theta_theta * theta_theta) / (ti * ti);
            field.grad_rho_sq[k] = rho_t * rho_t + rho_theta * rho_theta / (ti * ti);
            field.rho_sq_grad_theta_sq[k] =
                rho * rho * (theta_t * theta_t + theta_theta * theta_theta / (ti * ti));
            field.jac[k] = jac;
        }
    }
    Ok(field)
}

/// Area quadrature on the polar grid: composite Simpson in t (with a 3/8
/// closing panel when needed) times the periodic trapezoid rule in θ,
/// against the area element `t dt dθ`.
#[derive(Clone, Debug)]
pub struct GridRule {
    n_theta: usize,
    row_weights: Vec<f64>,
}

impl GridRule {
    pub fn new(map: &PolarGridMap) -> Self {
        Self::for_grid(map.n_t, map.n_theta, map.r)
    }

    pub fn for_grid(n_t: usize, n_theta: usize, r: f64) -> Self {
        let dt = (r - 1.0) / (n_t - 1) as f64;
        let ts = uniform_nodes(1.0, r, n_t);
        let dth = TAU / n_theta as f64;
        let row_weights = simpson_weights(n_t, dt)
            .into_iter()
            .zip(ts)
            .map(|(w, t)| w * t * dth)
            .collect();
        Self {
            n_theta,
            row_weights,
        }
    }

    /// `∫∫ f t dt dθ` where `f(k)` is the integrand at flat node `k`.
    /// Rows are summed in order with compensation, so the result is
    /// deterministic.
    pub fn integrate<F: FnMut(usize) -> f64>(&self, mut f: F) -> f64 {
        let mut total = CompensatedSum::new();
        for (i, w) in self.row_weights.iter().enumerate() {
            let base = i * self.n_theta;
            let mut row = CompensatedSum::new();
            for j in 0..self.n_theta {
                row.add(f(base + j));
            }
            total.add(w * row.value());
        }
        total.value()
    }
}

/// Radial lift `H(t) e^{iθ}` on the profile's own (uniform) nodes.
pub fn radial_lift(profile: &RadialProfile, n_theta: usize) -> Result<PolarGridMap> {
    if !profile.is_uniform() {
        return Err(Error::InvalidProfile(
            "radial_lift needs equispaced nodes; use radial_lift_on".into(),
        ));
    }
    radial_lift_on(profile, profile.len(), n_theta)
}

/// Radial lift of any radial function, sampled on an `n_t × n_θ` grid. The
/// target radius is the function's value at the outer circle.
pub fn radial_lift_on<P: RadialFn + ?Sized>(
    profile: &P,
    n_t: usize,
    n_theta: usize,
) -> Result<PolarGridMap> {
    let (lo, hi) = profile.span();
    let ts = uniform_nodes(lo, hi, n_t);
    let mut rho = Vec::with_capacity(n_t * n_theta);
    let mut theta = Vec::with_capacity(n_t * n_theta);
    for &t in &ts {
        let (h, hdot) = profile.value(t);
        if !(hdot > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "slope {hdot} at t={t} is not positive"
            )));
        }
        for j in 0..n_theta {
            rho.push(h);
            theta.push(TAU * j as f64 / n_theta as f64);
        }
    }
    let big_r = rho[rho.len() - 1];
    PolarGridMap::new(n_t, n_theta, hi, big_r, rho, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build<F: Fn(f64, f64) -> (f64, f64)>(
        n_t: usize,
        n_theta: usize,
        r: f64,
        big_r: f64,
        f: F,
    ) -> Result<PolarGridMap> {
        let ts = uniform_nodes(1.0, r, n_t);
        let mut rho = Vec::new();
        let mut theta = Vec::new();
        for &t in &ts {
            for j in 0..n_theta {
                let (p, q) = f(t, TAU * j as f64 / n_theta as f64);
                rho.push(p);
                theta.push(q);
            }
        }
        PolarGridMap::new(n_t, n_theta, r, big_r, rho, theta)
    }

    #[test]
    fn identity_has_unit_densities() {
        let map = build(33, 32, 2.0, 2.0, |t, th| (t, th)).unwrap();
        let d = differentiate_grid(&map).unwrap();
        for k in 0..d.len() {
            assert!((d.h_n_sq[k] - 1.0).abs() < 1e-12);
            assert!((d.h_t_sq[k] - 1.0).abs() < 1e-12);
            assert!((d.jac[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_map_second_order() {
        let errs: Vec<f64> = [33usize, 65]
            .iter()
            .map(|&n| {
                let map = build(n, 16, 2.0, 4.0, |t, th| (t * t, th)).unwrap();
                let d = differentiate_grid(&map).unwrap();
                (0..d.len())
                    .map(|k| {
                        let t = d.t_of(k);
                        (d.jac[k] - 2.0 * t * t).abs()
                            + (d.h_n_sq[k] - 4.0 * t * t).abs()
                            + (d.h_t_sq[k] - t * t).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        // Central differences are exact on quadratics; boundary stencils too.
        assert!(errs[0] < 1e-10 && errs[1] < 1e-10, "{errs:?}");
    }

    #[test]
    fn twist_map_densities() {
        let map = build(129, 32, 2.0, 2.0, |t, th| (t, th + t.ln())).unwrap();
        let d = differentiate_grid(&map).unwrap();
        for k in (0..d.len()).step_by(7) {
            let t = d.t_of(k);
            // |h_N|² = 1 + t²Θ_t² = 2, |h_T|² = 1, J = 1.
            assert!((d.h_n_sq[k] - 2.0).abs() < 2e-3, "{}", d.h_n_sq[k]);
            assert!((d.h_t_sq[k] - 1.0).abs() < 1e-12);
            assert!((d.jac[k] - 1.0).abs() < 1e-12);
            assert!(t >= 1.0);
        }
    }

    #[test]
    fn gradient_identity_and_jacobian_bound() {
        let map = build(65, 64, 2.0, 3.0, |t, th| {
            let bump = (std::f64::consts::PI * (t - 1.0)).sin();
            (
                1.0 + 2.0 * (t - 1.0) + 0.05 * bump * (2.0 * th).cos(),
                th + 0.1 * bump * th.sin() + 0.3 * t.ln(),
            )
        })
        .unwrap();
        let d = differentiate_grid(&map).unwrap();
        for k in 0..d.len() {
            let lhs = d.h_n_sq[k] + d.h_t_sq[k];
            let rhs = d.grad_rho_sq[k] + d.rho_sq_grad_theta_sq[k];
            assert!((lhs - rhs).abs() < 1e-12 * lhs);
            assert!(d.jac[k] <= (d.h_n_sq[k] * d.h_t_sq[k]).sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn winding_telescopes_to_two_pi() {
        let map = build(9, 48, 2.0, 2.0, |t, th| (t, th + 0.3 * (th + t).sin())).unwrap();
        let d = differentiate_grid(&map).unwrap();
        for i in 0..map.n_t() {
            let s: f64 = (0..48)
                .map(|j| d.theta_theta[i * 48 + j] * map.dtheta())
                .sum();
            assert!((s - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn class_violations_detected() {
        assert!(matches!(
            build(9, 16, 2.0, 2.0, |t, th| (t + 0.01, th)),
            Err(Error::ClassViolation(_))
        ));
        assert!(matches!(
            build(9, 16, 2.0, 2.0, |t, th| (t, 2.0 * th)),
            Err(Error::ClassViolation(_))
        ));
        assert!(matches!(
            build(9, 16, 2.0, 2.0, |t, th| (t, -th)),
            Err(Error::ClassViolation(_)) | Err(Error::NonPositiveJacobian { .. })
        ));
    }

    #[test]
    fn folded_map_reports_node() {
        let err = build(33, 16, 2.0, 2.0, |t, th| {
            (
                t + 0.4 * (std::f64::consts::PI * (t - 1.0)).sin() * (6.0 * (t - 1.0)).cos(),
                th,
            )
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonPositiveJacobian { .. }), "{err}");
    }

    #[test]
    fn lift_of_square() {
        let p = RadialProfile::sample(2.0, 17, |t| (t * t, 2.0 * t)).unwrap();
        let map = radial_lift(&p, 8).unwrap();
        assert_eq!(map.rho_at(0, 3), 1.0);
        assert_eq!(map.rho_at(16, 5), 4.0);
        assert_eq!(map.big_r(), 4.0);
    }

    #[test]
    fn lift_rejects_degenerate_profile() {
        let p = RadialProfile::new(
            vec![1.0, 1.5, 2.0],
            vec![1.0, 1.2, 2.0],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        assert!(radial_lift(&p, 8).is_err());
    }

    #[test]
    fn grid_rule_integrates_area() {
        let rule = GridRule::for_grid(256, 64, 2.0);
        let area = rule.integrate(|_| 1.0);
        assert!((area - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_rotation() {
        let map = build(9, 16, 2.0, 3.0, |t, th| (1.0 + 2.0 * (t - 1.0), th)).unwrap();
        let mut buf = Vec::new();
        map.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"R\":3"));
        assert_eq!(PolarGridMap::read_json(buf.as_slice()).unwrap(), map);
        let rot = map.rotated(0.5);
        assert_eq!(rot.theta_at(2, 3), map.theta_at(2, 3) + 0.5);
    }
}

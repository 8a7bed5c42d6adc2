//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! and then asserts, so a failing criterion shows its numbers either way.

use std::f64::consts::PI;

use annulus::closed_form::{
    minimal_energy, mu_parameter, nitsche_threshold_energy, solve_combined_energy, Regime,
};
use annulus::competitors::{
    competitor_sweep, make_competitor, random_specs, rotate, Functional, SweepOptions,
};
use annulus::energy::{
    duality_check, grid_energy_report, radial_combined_energy, radial_total_energy,
};
use annulus::lagrangians::{
    fl_integral_on, pointwise_ineq_general, potential_sign_check, ConcavityBound, FreeLagrangian,
};
use annulus::ode::Dopri5;
use annulus::ode_shooting::{
    ode_residual, phi_curve, phi_limit_suite, shoot, size_bounds_check, Concavity, LimitVerdict,
    PhiCurve, ShootOptions, ShootResult,
};
use annulus::{
    differentiate_grid, radial_lift_on, AnnulusPair, Error, PolarGridMap, RadialFn, RadialProfile,
    Weights,
};
use num_rational::Ratio;
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn verdict(n: u32, title: &str, ok: bool, detail: String) {
    println!(
        "criterion {n:>2} {}: {title} [{detail}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn pair(r: f64, big_r: f64) -> AnnulusPair {
    AnnulusPair::new(r, big_r).unwrap()
}

fn shot(r: f64, big_r: f64, c: f64, gamma: f64) -> ShootResult {
    shoot(pair(r, big_r), c, gamma, &ShootOptions::default()).unwrap()
}

/// Uniform draw in `[lo, hi)`.
fn uniform(rng: &mut Xoshiro256PlusPlus, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn dense(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

#[test]
fn criterion_01_closed_form_matches_quadrature() {
    let sol = solve_combined_energy(pair(2.0, 3.0), 1.0, 513).unwrap();
    let target = 52.0 * PI / 3.0;
    let closed = sol.closed_form_energy;
    let quad = radial_combined_energy(&sol.exact(), &Weights::unit());
    let (e1, e2) = (
        (closed - target).abs() / target,
        (quad - target).abs() / target,
    );
    verdict(
        1,
        "combined energy on (2, 3, 1) is 52pi/3",
        e1 <= 1e-8 && e2 <= 1e-8,
        format!("closed form rel err {e1:.2e}, quadrature rel err {e2:.2e}"),
    );
}

#[test]
fn criterion_02_nitsche_threshold() {
    // r^{1/c} = 2^2 = 4, so the threshold is (1 + 16) / 8 in exact arithmetic.
    let p: i64 = 4;
    let exact = Ratio::new(1 + p * p, 2 * p);
    let value = nitsche_threshold_energy(2.0, 0.5).unwrap();
    let exact_ok =
        exact == Ratio::new(17, 8) && value == *exact.numer() as f64 / *exact.denom() as f64;
    let below = matches!(
        solve_combined_energy(pair(2.0, 2.124), 0.5, 65),
        Err(Error::BelowNitsche { .. })
    );
    let above = solve_combined_energy(pair(2.0, 2.126), 0.5, 65).unwrap();
    // Independent sign oracle: μ ≥ 0 exactly when R ≥ threshold.
    let mu_oracle = (1.0 + 16.0 - 2.0 * 4.0 * 2.126) / (1.0 - 16.0);
    let above_ok = above.mu >= 0.0
        && (above.mu - mu_oracle).abs() < 1e-14
        && mu_parameter(2.0, 2.124, 0.5) < 0.0;
    verdict(
        2,
        "energy threshold 2.125 and BelowNitsche split",
        exact_ok && below && above_ok,
        format!(
            "threshold {value}, below rejected {below}, mu(2.126) = {:.3e}",
            above.mu
        ),
    );
}

#[test]
fn criterion_03_identity_recovery() {
    let sol = solve_combined_energy(pair(2.0, 2.0), 1.0, 257).unwrap();
    let exact = sol.exact();
    let sup = dense(1.0, 2.0, 2001)
        .map(|t| (exact.h(t) - t).abs())
        .chain(
            sol.profile
                .t_nodes()
                .iter()
                .zip(sol.profile.h_values())
                .map(|(t, h)| (h - t).abs()),
        )
        .fold(0.0, f64::max);
    verdict(
        3,
        "identity instance gives mu = 1, H(t) = t",
        sol.mu == 1.0 && sup <= 1e-12,
        format!("mu {}, sup |H - t| {sup:.2e}", sol.mu),
    );
}

#[test]
fn criterion_04_balanced_shooting() {
    let res = shot(2.0, 4.0, 0.5, 1.0);
    let sup = dense(1.0, 2.0, 2001)
        .map(|t| (res.trajectory.value(t).0 - t * t).abs())
        .fold(0.0, f64::max);
    let residual = ode_residual(&res.profile, 0.5, 1.0);
    verdict(
        4,
        "balanced shot on (2, 4, 1/2, 1) is t^2",
        (res.q - 2.0).abs() <= 1e-4 && sup <= 1e-6 && residual <= 1e-6,
        format!(
            "q {:.10}, sup |H - t^2| {sup:.2e}, residual {residual:.2e}",
            res.q
        ),
    );
}

#[test]
fn criterion_05_convex_instance() {
    let res = shot(2.0, 2.0, 0.5, 1.0);
    let min_hdd = dense(1.0, 2.0, 4001)
        .map(|t| res.trajectory.state(t).2)
        .fold(f64::INFINITY, f64::min);
    verdict(
        5,
        "shot on (2, 2, 1/2, 1) has q < 1 and H'' >= 0",
        res.q < 1.0 && min_hdd >= -1e-8,
        format!(
            "q {:.8}, min H'' {min_hdd:.3e}, label {:?}",
            res.q, res.concavity
        ),
    );
}

#[test]
fn criterion_06_concave_instance_and_size_bound() {
    let (r, big_r, c) = (2.0, 3.0, 0.9);
    let res = shot(r, big_r, c, 1.0);
    let margin = dense(1.0, r, 4001)
        .map(|t| {
            let (h, d, _) = res.trajectory.state(t);
            c * c * t * d - h
        })
        .fold(f64::INFINITY, f64::min);
    // 1 / (1 − 81/100 + 27/100) = 50/23.
    let bound = Ratio::new(50i64, 23);
    let bound_f = *bound.numer() as f64 / *bound.denom() as f64;
    let report = size_bounds_check(&res).unwrap();
    let last = report.bounds.last().unwrap();
    let ok = res.concavity == Concavity::ConcavityCase
        && margin >= -1e-8
        && (last.rhs - bound_f).abs() < 1e-12
        && last.satisfied
        && r < bound_f;
    verdict(
        6,
        "shot on (2, 3, 9/10, 1) is concave and r < 1/(1 - c^2 + c^2/R)",
        ok,
        format!(
            "q {:.6}, min(c^2 t H' - H) {margin:.3e}, bound {bound_f:.4}",
            res.q
        ),
    );
}

#[test]
fn criterion_07_phi_portrait() {
    let (c, gamma) = (0.5, 1.0);
    let ode = Dopri5::default();
    // (q, expected trend, limit as s grows)
    let cases = [(0.1, -1, 0.0), (1.3, 1, 2.0), (2.0, 0, 2.0), (3.0, -1, 2.0)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (q, trend, limit) in cases {
        let curve = phi_curve(q, c, gamma, (1.0, 50.0), 400, &ode).unwrap();
        let shape = PhiCurve::expected_shape(q, c).1 == trend && curve.satisfies_shape();
        let bounded = trend != 1 || curve.phi_values.iter().all(|&v| v < 2.0);
        let end_s = *curve.s_nodes.last().unwrap();
        let gap = (curve.phi_values.last().unwrap() - limit).abs();
        let pass = shape && bounded && end_s == 50.0 && gap <= 1e-3;
        ok &= pass;
        detail.push(format!("q={q}: shape {shape}, end gap {gap:.3e}"));
    }
    let report = phi_limit_suite(c, gamma, &[2.0, 10.0], &ode).unwrap();
    for seq in &report.sequences {
        let monotone_conv =
            seq.monotone && (seq.contracting || seq.verdict == LimitVerdict::Consistent);
        ok &= monotone_conv;
        if seq.verdict != LimitVerdict::Consistent {
            detail.push(format!(
                "{:?}@s={} {:?} (extrapolated {:?})",
                seq.claim, seq.s, seq.verdict, seq.extrapolated
            ));
        }
    }
    let crossing = report.non_crossing.iter().all(|nc| nc.increasing);
    ok &= crossing;
    detail.push(format!("non-crossing {crossing}"));
    verdict(
        7,
        "four elasticity-curve behaviors and limit sequences",
        ok,
        detail.join("; "),
    );
}

#[test]
fn criterion_08_duality_on_random_profiles() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = uniform(&mut rng, 1.3, 3.0);
        let k = uniform(&mut rng, 0.3, 3.0);
        let b = uniform(&mut rng, 0.0, 1.0);
        let w = Weights::new(
            uniform(&mut rng, 0.2, 3.0),
            uniform(&mut rng, 0.2, 3.0),
            1.0,
            1.0,
        )
        .unwrap();
        let p = RadialProfile::sample(r, 1025, |t| {
            (
                t.powf(k) + b * (t - 1.0).powi(2),
                k * t.powf(k - 1.0) + 2.0 * b * (t - 1.0),
            )
        })
        .unwrap();
        worst = worst.max(duality_check(&p, &w).unwrap().relative_gap);
    }
    verdict(
        8,
        "energy of the inverse equals the swapped distortion",
        worst <= 1e-7,
        format!("worst relative gap over 20 profiles {worst:.2e}"),
    );
}

/// Worst relative gap of every catalogue density over the lift and ten
/// seeded competitors.
fn worst_free_lagrangian_gap(base: &(dyn RadialFn + Sync), n: usize) -> Vec<f64> {
    let opts = SweepOptions {
        n: 10,
        seed: 9,
        n_t: n + 1,
        n_theta: n,
        ..SweepOptions::default()
    };
    let mut maps: Vec<PolarGridMap> = vec![radial_lift_on(base, opts.n_t, opts.n_theta).unwrap()];
    maps.extend(
        random_specs(base, &opts)
            .iter()
            .map(|s| make_competitor(s, opts.n_t, opts.n_theta).unwrap().map),
    );
    let catalogue = FreeLagrangian::catalogue();
    let mut worst = vec![0.0f64; catalogue.len()];
    for map in &maps {
        let d = differentiate_grid(map).unwrap();
        for (k, fl) in catalogue.iter().enumerate() {
            worst[k] = worst[k].max(fl_integral_on(fl, map, &d).relative_gap);
        }
    }
    worst
}

#[test]
fn criterion_09_free_lagrangians_are_map_independent() {
    let sol = solve_combined_energy(pair(2.0, 3.0), 1.0, 513).unwrap();
    let exact = sol.exact();
    let coarse = worst_free_lagrangian_gap(&exact, 256);
    let fine = worst_free_lagrangian_gap(&exact, 512);
    let (wc, wf) = (
        coarse.iter().fold(0.0f64, |a, &b| a.max(b)),
        fine.iter().fold(0.0f64, |a, &b| a.max(b)),
    );
    let order = (wc / wf).log2();
    verdict(
        9,
        "15 free-Lagrangian densities over lift + 10 competitors",
        wc <= 1e-3 && wf <= 1e-4,
        format!("worst gap 256: {wc:.2e}, 512: {wf:.2e}, observed order {order:.2}"),
    );
}

#[test]
fn criterion_10_dominance_sweeps() {
    let opts = SweepOptions {
        n: 50,
        seed: 7,
        n_t: 257,
        n_theta: 256,
        ..SweepOptions::default()
    };
    let mut ok = true;
    let mut detail = Vec::new();

    let energy = solve_combined_energy(pair(2.0, 3.0), 1.0, 513).unwrap();
    let w = Weights::unit();
    let table = competitor_sweep(&energy.exact(), &w, Functional::CombinedEnergy, &opts).unwrap();
    let lift_gap = (table.baseline - energy.energy_for(&w)) / energy.energy_for(&w);
    ok &= table.dominated() && lift_gap.abs() <= table.eps_grid;
    detail.push(format!(
        "energy (2,3,1): min gap {:.2e}, lift gap {lift_gap:.2e}",
        table.min_gap
    ));

    for (r, big_r, c) in [(2.0, 4.0, 0.5), (2.0, 3.0, 0.9)] {
        let res = shot(r, big_r, c, 1.0);
        let w = Weights::from_ratios(c, 1.0).unwrap();
        let minimum = radial_total_energy(&res.trajectory, &w).unwrap();
        let table = competitor_sweep(&res.trajectory, &w, Functional::TotalEnergy, &opts).unwrap();
        let lift_gap = (table.baseline - minimum) / minimum;
        ok &= table.dominated() && lift_gap.abs() <= table.eps_grid;
        detail.push(format!(
            "total ({r},{big_r},{c}): min gap {:.2e}, lift gap {lift_gap:.2e}, failures {}",
            table.min_gap, table.failures
        ));
    }
    detail.push(format!("eps_grid {:.2e}", 10.0 / 256.0f64.powi(2)));
    verdict(
        10,
        "50 seeded competitors never beat the radial minimizer",
        ok,
        detail.join("; "),
    );
}

#[test]
fn criterion_11_potential_sign_checks() {
    let res = shot(2.0, 3.0, 0.9, 1.0);
    let w = Weights::from_ratios(0.9, 1.0).unwrap();
    let bound = ConcavityBound::new(&res.trajectory, &w).unwrap();
    let report = potential_sign_check(&bound, 128, 128);
    verdict(
        11,
        "potential slope <= 0 and Gamma_t sign split on 128 x 128",
        report.passed(1e-8),
        format!(
            "max A_t {:.2e}, {} of {} points violate the sign split",
            report.potential_t_max, report.gamma_t_violations, report.gamma_t_checked
        ),
    );
}

#[test]
fn criterion_12_rotation_and_equality_locus() {
    let sol = solve_combined_energy(pair(2.0, 3.0), 1.0, 513).unwrap();
    let exact = sol.exact();
    let opts = SweepOptions {
        n: 3,
        seed: 12,
        n_t: 65,
        n_theta: 64,
        ..SweepOptions::default()
    };
    let mut maps = vec![radial_lift_on(&exact, 65, 64).unwrap()];
    maps.extend(
        random_specs(&exact, &opts)
            .iter()
            .map(|s| make_competitor(s, 65, 64).unwrap().map),
    );
    let w = Weights::new(1.3, 0.7, 0.4, 1.1).unwrap();
    let mut invariant = true;
    for map in &maps {
        let base = grid_energy_report(map, &w).unwrap();
        for phi0 in [0.3, PI, -2.0, 17.0] {
            invariant &= grid_energy_report(&rotate(map, phi0), &w).unwrap() == base;
        }
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(12);
    let (mut min_square, mut min_expanded) = (f64::INFINITY, f64::INFINITY);
    let (mut worst_identity, mut worst_locus, mut off_locus_zero) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..1_000_000 {
        let w = Weights::new(
            uniform(&mut rng, 0.1, 5.0),
            uniform(&mut rng, 0.1, 5.0),
            1.0,
            1.0,
        )
        .unwrap();
        let (p, q) = (uniform(&mut rng, 0.0, 3.0), uniform(&mut rng, 0.0, 3.0));
        let (x, y) = (uniform(&mut rng, 0.0, 4.0), uniform(&mut rng, 0.0, 4.0));
        let m = pointwise_ineq_general(x, y, &w, p, q);
        let scale = (w.w_a() * x).powi(2)
            + (w.w_b() * y).powi(2)
            + (p * w.w_b() * x).powi(2)
            + (q * w.w_a() * y).powi(2);
        let scale = scale.max(f64::MIN_POSITIVE);
        min_square = min_square.min(m.direct);
        min_expanded = min_expanded.min(m.difference / scale);
        worst_identity = worst_identity.max((m.difference - m.direct).abs() / scale);
        if m.direct == 0.0 && (p * w.w_b() * x - q * w.w_a() * y) != 0.0 {
            off_locus_zero += 1;
        }
        // Land on the locus p w_b x = q w_a y and require a vanishing margin.
        if q > 0.0 {
            let y_eq = p * w.w_b() * x / (q * w.w_a());
            let on = pointwise_ineq_general(x, y_eq, &w, p, q);
            let s2 = (w.w_a() * x).powi(2) + (w.w_b() * y_eq).powi(2) + (p * w.w_b() * x).powi(2);
            worst_locus = worst_locus.max(on.difference.abs() / s2.max(f64::MIN_POSITIVE));
        }
    }
    // The expanded form may round a hair below zero; the square never does.
    let fuzz_ok = min_square >= 0.0
        && min_expanded >= -1e-12
        && worst_identity <= 1e-12
        && worst_locus <= 1e-12
        && off_locus_zero == 0;
    verdict(
        12,
        "rotation-invariant reports and the completed-square identity",
        invariant && fuzz_ok,
        format!(
            "rotation exact {invariant}; 1e6 samples: min square {min_square:.1e}, min expanded {min_expanded:.1e}, identity err {worst_identity:.1e}, \
             locus err {worst_locus:.1e}, off-locus zeros {off_locus_zero}"
        ),
    );
}

#[test]
fn regime_labels_are_consistent() {
    // Not a numbered criterion: ties the closed-form energy to the regimes used above.
    let elastic = solve_combined_energy(pair(2.0, 3.0), 1.0, 65).unwrap();
    let near = solve_combined_energy(pair(2.0, 2.126), 0.5, 65).unwrap();
    assert_eq!(elastic.regime, Regime::Elastic);
    assert_eq!(near.regime, Regime::NonElastic);
    assert!((minimal_energy(2.0, 3.0, 1.0) - 52.0 * PI / 3.0).abs() < 1e-12);
}

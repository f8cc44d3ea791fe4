mod common;

use std::f64::consts::PI;

use common::{rel, rk4};
use inls_core::evolution::{energy, mass, potential};
use inls_core::groundstate::{
    gn_ratio, petviashvili, solve_ground_state, threshold_quantities, GroundState,
    GroundStateConfig,
};
use inls_core::spectral::{fields::random_smooth_field, kinetic, make_weight, Grid, GridSpec, SpectralField};
use inls_core::{validate_params, ProblemParams, Rational};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(n: i64, b: (i64, i64), a: (i64, i64)) -> ProblemParams {
    validate_params(n, Rational::new(b.0, b.1), Rational::new(a.0, a.1)).unwrap()
}

fn solve(p: &ProblemParams, points: usize) -> GroundState {
    let grid = Grid::new(GridSpec::radial(p.dimension() as usize, 32.0, points, 2)).unwrap();
    solve_ground_state(p, &grid, 1e-10).unwrap()
}

fn check_ground_state(gs: &GroundState) {
    assert!(gs.residual < 1e-10, "residual {}", gs.residual);
    assert!(gs.pohozaev.ratio_error < 1e-6, "{:?}", gs.pohozaev);
    assert!(gs.pohozaev.pairing < 1e-6, "{:?}", gs.pohozaev);
    assert!(gs.pohozaev.dilation < 1e-6, "{:?}", gs.pohozaev);
    assert!(gs.profile_is_monotone());
    assert!(gs.energy > 0.0);
    assert!(gs.threshold_me > 0.0 && gs.threshold_grad > 0.0);
    // Tail of the stabilizing factor approaches one monotonically.
    let gaps: Vec<f64> = gs.factors.iter().map(|m| (m - 1.0).abs()).collect();
    for w in gaps[10..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-14, "{gaps:?}");
    }
}

#[test]
fn planar_ground_state() {
    let gs = solve(&params(2, (1, 2), (3, 1)), 1024);
    check_ground_state(&gs);
    // Equality in GN at the optimizer.
    let r = gn_ratio(&gs.profile, &gs.weight, &gs.params, gs.gn_constant);
    assert!((r - 1.0).abs() < 1e-12);
}

#[test]
fn three_dimensional_ground_state() {
    let gs = solve(&params(3, (1, 2), (2, 1)), 1024);
    check_ground_state(&gs);
}

#[test]
fn grid_refinement_is_converged() {
    let p = params(2, (1, 2), (3, 1));
    let coarse = solve(&p, 512);
    let fine = solve(&p, 1024);
    for (a, b) in [
        (coarse.mass, fine.mass),
        (coarse.kinetic, fine.kinetic),
        (coarse.potential, fine.potential),
    ] {
        assert!(rel(a, b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn gn_inequality_on_random_fields() {
    let p = params(2, (1, 2), (3, 1));
    let gs = solve(&p, 1024);
    let grid = gs.profile.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let f = random_smooth_field(&grid, &mut rng);
        worst = worst.max(gn_ratio(&f, &gs.weight, &p, gs.gn_constant));
    }
    assert!(worst <= 1.0 + 1e-3, "worst ratio {worst}");
}

#[test]
fn gn_ratio_is_scale_invariant() {
    let p = params(2, (1, 2), (3, 1));
    let grid = Grid::new(GridSpec::radial(2, 32.0, 1024, 2)).unwrap();
    let weight = make_weight(&grid, p.b(), grid.radii()[0] / 2.0).unwrap();
    let a = p.alpha_f64();
    let b = p.b_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let c: Vec<(f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1.2..2.5)))
            .collect();
        let profile = |r: f64| -> f64 {
            c.iter().map(|(amp, w)| amp * (-r * r / (2.0 * w * w)).exp()).sum()
        };
        let base = SpectralField::from_radial_fn(&grid, &profile);
        let r0 = gn_ratio(&base, &weight, &p, 1.0);
        for lambda in [0.5f64, 2.0] {
            let amp = lambda.powf((2.0 - b) / a);
            let scaled = SpectralField::from_radial_fn(&grid, |r| amp * profile(lambda * r));
            let r1 = gn_ratio(&scaled, &weight, &p, 1.0);
            assert!(rel(r1, r0) < 1e-8, "lambda {lambda}: {r0} vs {r1}");
        }
    }
}

#[test]
fn scaled_profile_functionals() {
    let p = params(2, (1, 2), (3, 1));
    let gs = solve(&p, 1024);
    let a = p.alpha_f64();
    let c = 0.5;
    let u = gs.profile.scaled_real(c);
    let closed = c * c / 2.0 * gs.kinetic - c.powf(a + 2.0) / (a + 2.0) * gs.potential;
    assert!(rel(energy(&u, &gs.weight, a), closed) < 1e-12);
    assert!(rel(energy(&gs.profile, &gs.weight, a), gs.energy) < 1e-14);
    let t = threshold_quantities(&gs, &p);
    let sc = p.critical_index_f64();
    assert!(rel(t.threshold_me, gs.energy.powf(sc) * gs.mass.powf(1.0 - sc)) < 1e-14);
    // Q itself sits exactly on both thresholds.
    let me_q = energy(&gs.profile, &gs.weight, a).powf(sc) * mass(&gs.profile).powf(1.0 - sc);
    assert!(rel(me_q, t.threshold_me) < 1e-12);
    let grad_q = kinetic(&gs.profile).powf(sc / 2.0) * mass(&gs.profile).powf((1.0 - sc) / 2.0);
    assert!(rel(grad_q, t.threshold_grad) < 1e-12);
}

/// Townes profile by shooting on `Q'' + Q'/r - Q + Q^3 = 0`; returns its mass.
fn townes_mass_by_shooting() -> f64 {
    let rhs = |r: f64, y: &[f64; 3]| [y[1], -y[1] / r + y[0] - y[0].powi(3), 2.0 * PI * r * y[0] * y[0]];
    let r0 = 1e-4;
    let start = |a: f64| [a + (a - a * a * a) * r0 * r0 / 4.0, (a - a * a * a) * r0 / 2.0, 0.0];
    // Overshoot (crosses zero) above the ground-state amplitude, undershoot below.
    let overshoots = |a: f64| -> bool {
        let mut y = start(a);
        let mut r = r0;
        let h = 0.01;
        while r < 12.0 {
            y = rk4(rhs, y, r, r + h, 4);
            r += h;
            if y[0] < 0.0 {
                return true;
            }
            if y[1] > 0.0 {
                return false;
            }
        }
        false
    };
    let (mut lo, mut hi) = (2.0, 2.5);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if overshoots(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Integrate the mass up to the point where the trajectory departs.
    let mut y = start(lo);
    let mut r = r0;
    let h = 0.005;
    let mut best = 0.0;
    while r < 12.0 {
        y = rk4(rhs, y, r, r + h, 2);
        r += h;
        if y[0] < 1e-7 || y[1] > 0.0 {
            break;
        }
        best = y[2];
    }
    best
}

#[test]
fn townes_limit_matches_shooting() {
    let grid = Grid::new(GridSpec::radial(2, 32.0, 1024, 2)).unwrap();
    let weight = make_weight(&grid, &Rational::zero(), 1.0).unwrap();
    let out = petviashvili(&grid, &weight, 2.0, &GroundStateConfig::default()).unwrap();
    let m = mass(&out.profile);
    let oracle = townes_mass_by_shooting();
    assert!((oracle - 11.70).abs() < 0.01, "oracle {oracle}");
    assert!(rel(m, oracle) < 1e-4, "{m} vs {oracle}");
    // Pohozaev with b = 0: potential = 2 * mass in two dimensions.
    assert!(rel(potential(&out.profile, &weight, 2.0), 2.0 * m) < 1e-6);
}

#[test]
fn cartesian_ground_state_is_radial_and_positive() {
    let p = params(2, (1, 2), (3, 1));
    let grid = Grid::new(GridSpec::cartesian(16.0, 128)).unwrap();
    let gs = solve_ground_state(&p, &grid, 1e-10).unwrap();
    assert!(gs.residual < 1e-10);
    assert!(gs.profile_is_monotone());
    assert!(gs.raw_residual < 1e-8, "raw residual {}", gs.raw_residual);
    // Pairing identity holds exactly for the discrete problem.
    assert!(gs.pohozaev.pairing < 1e-9);
    let _ = Complex64::new(0.0, 0.0);
}

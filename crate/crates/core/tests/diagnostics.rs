mod common;

use std::sync::OnceLock;

use common::rel;
use inls_core::diagnostics::{
    classify_threshold, coercivity_check, far_cutoff, far_initial_data, far_translation_experiment,
    scattering_diagnostic, virial_contradiction_monitor, virial_error_bound, virial_triple, virial_z,
    virial_zprime, virial_zsecond, FarTranslationConfig, ScatteringVerdict, ThresholdClass, VirialKind,
    VirialWeight,
};
use inls_core::evolution::{energy, evolve, potential, EvolutionConfig};
use inls_core::groundstate::{solve_ground_state, GroundState};
use inls_core::spectral::bump::bump;
use inls_core::spectral::{
    default_reg_radius, fields, free_propagate, gradient_density, h1_norm, kinetic, make_weight, Grid, GridSpec,
    SingularWeight, SpectralField,
};
use inls_core::{validate_params, ProblemParams, Rational};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> ProblemParams {
    validate_params(2, Rational::new(1, 2), Rational::new(3, 1)).unwrap()
}

fn radial_q() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = Grid::new(GridSpec::radial(2, 32.0, 1024, 2)).unwrap();
        solve_ground_state(&params(), &grid, 1e-10).unwrap()
    })
}

fn cartesian_q() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = Grid::new(GridSpec::cartesian(16.0, 128)).unwrap();
        solve_ground_state(&params(), &grid, 1e-10).unwrap()
    })
}

fn cgrid(extent: f64, points: usize) -> Grid {
    Grid::new(GridSpec::cartesian(extent, points)).unwrap()
}

fn inls_weight(g: &Grid) -> SingularWeight {
    make_weight(g, &Rational::new(1, 2), default_reg_radius(g)).unwrap()
}

/// Lemma quantity `8K - 4(N alpha + 2b)/(alpha + 2) P`, with `K` by direct
/// quadrature of `|∇u|^2` like the virial terms.
fn coercive_quantity(u: &SpectralField, w: &SingularWeight, alpha: f64, b: f64) -> f64 {
    let n = u.grid().dimension() as f64;
    let k = u.grid().integrate(&gradient_density(u));
    8.0 * k - 4.0 * (n * alpha + 2.0 * b) / (alpha + 2.0) * potential(u, w, alpha)
}

#[test]
fn ground_state_sits_at_threshold() {
    let gs = radial_q();
    let r = classify_threshold(&gs.profile, gs, &params()).unwrap();
    assert_eq!(r.classification, ThresholdClass::AtThreshold);
    assert!((r.grad_ratio - 1.0).abs() < 1e-12);
    assert!((r.me_ratio.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn half_ground_state_is_subthreshold_with_closed_form_ratios() {
    let gs = radial_q();
    let p = params();
    let (a, sc) = (p.alpha_f64(), p.critical_index_f64());
    let c: f64 = 0.5;
    let r = classify_threshold(&gs.profile.scaled_real(c), gs, &p).unwrap();
    assert_eq!(r.classification, ThresholdClass::SubThreshold);
    assert!(rel(r.grad_ratio, c) < 1e-12, "{}", r.grad_ratio);
    // E[cQ] = c^2 K/2 - c^{alpha+2} P/(alpha+2).
    let e_c = c * c / 2.0 * gs.kinetic - c.powf(a + 2.0) / (a + 2.0) * gs.potential;
    let me = (e_c / gs.energy).powf(sc) * (c * c).powf(1.0 - sc);
    assert!(rel(r.me_ratio.unwrap(), me) < 1e-12);
    assert!(r.final_state_subthreshold);
}

#[test]
fn large_gaussian_has_negative_energy() {
    let gs = radial_q();
    let p = params();
    let mut amp = 1.0;
    let u = loop {
        let u = SpectralField::from_radial_fn(gs.profile.grid(), |r| amp * (-r * r / 2.0).exp());
        if energy(&u, &gs.weight, p.alpha_f64()) < 0.0 {
            break u;
        }
        amp *= 1.5;
        assert!(amp < 1e3);
    };
    let r = classify_threshold(&u, gs, &p).unwrap();
    assert_eq!(r.classification, ThresholdClass::NegativeEnergy);
    assert!(r.me_ratio.is_none());
}

#[test]
fn classification_is_phase_invariant() {
    let gs = cartesian_q();
    let p = params();
    let u = fields::gaussian(gs.profile.grid(), 0.9, 1.1, [0.5, -0.25]);
    let a = classify_threshold(&u, gs, &p).unwrap();
    let b = classify_threshold(&u.scaled(Complex64::from_polar(1.0, 1.3)), gs, &p).unwrap();
    assert_eq!(a.classification, b.classification);
    assert!(rel(a.grad_ratio, b.grad_ratio) < 1e-12);
    assert!(rel(a.me_ratio.unwrap(), b.me_ratio.unwrap()) < 1e-12);
}

#[test]
fn translation_moves_only_the_weighted_potential() {
    // Mass and kinetic energy are translation invariant, so the gradient
    // ratio is; the weighted potential is not, because the weight is
    // centered at the origin.
    let gs = cartesian_q();
    let p = params();
    let grid = gs.profile.grid();
    let u = fields::gaussian(grid, 0.9, 1.1, [0.0, 0.0]);
    let shifted = fields::translate(&u, [4.0 * grid.spacing(), 0.0]).unwrap();
    let a = classify_threshold(&u, gs, &p).unwrap();
    let b = classify_threshold(&shifted, gs, &p).unwrap();
    assert!(rel(a.grad_ratio, b.grad_ratio) < 1e-12);
    assert!(b.potential < a.potential);
    assert_eq!(a.classification, ThresholdClass::SubThreshold);
    assert_eq!(b.classification, ThresholdClass::SubThreshold);
}

#[test]
fn coercivity_items_for_scaled_ground_states() {
    let gs = radial_q();
    let p = params();
    let half = coercivity_check(&gs.profile.scaled_real(0.5), gs, &p).unwrap();
    assert!(half.applicable);
    assert_eq!(half.items_positive, [true, true, true]);

    let tiny = coercivity_check(&gs.profile.scaled_real(1e-3), gs, &p).unwrap();
    assert!((tiny.virial_ratio - 8.0).abs() < 1e-4, "{}", tiny.virial_ratio);

    let q = coercivity_check(&gs.profile, gs, &p).unwrap();
    assert!(!q.applicable);
    // At Q the Pohozaev identities make the item (iii) quantity vanish.
    assert!(q.virial_ratio.abs() < 1e-6, "{}", q.virial_ratio);
}

#[test]
fn quadratic_second_derivative_equals_coercive_quantity() {
    let gs = radial_q();
    let (a, b) = (3.0, 0.5);
    let wq = VirialWeight::quadratic(gs.profile.grid());
    let zpp = virial_zsecond(&gs.profile, &wq, &gs.weight, a);
    let target = coercive_quantity(&gs.profile, &gs.weight, a, b);
    assert!((zpp - target).abs() < 1e-8 * kinetic(&gs.profile), "{zpp} vs {target}");

    let g = cgrid(16.0, 128);
    let w = inls_weight(&g);
    let wq = VirialWeight::quadratic(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let u = fields::random_smooth_field(&g, &mut rng);
        let zpp = virial_zsecond(&u, &wq, &w, a);
        let target = coercive_quantity(&u, &w, a, b);
        assert!(rel(zpp, target) < 1e-8, "{zpp} vs {target}");
    }
}

#[test]
fn real_fields_have_zero_virial_derivative() {
    let gs = radial_q();
    let w = VirialWeight::localized(gs.profile.grid(), 4.0);
    assert_eq!(virial_zprime(&gs.profile, &w), 0.0);
}

#[test]
fn localized_matches_quadratic_inside_radius() {
    let g = cgrid(16.0, 512);
    let w = inls_weight(&g);
    let radius = 6.0;
    // Supported in |x| < 4, with a phase so that z' is nonzero.
    let u = SpectralField::from_fn(&g, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        Complex64::from_polar(bump(r / 2.0), 0.7 * x[0] - 0.3 * x[1])
    });
    let lq = virial_triple(&u, &VirialWeight::quadratic(&g), &w, 3.0);
    let ll = virial_triple(&u, &VirialWeight::localized(&g, radius), &w, 3.0);
    for k in 0..3 {
        assert!((lq[k] - ll[k]).abs() <= 1e-10 * lq[k].abs().max(1.0), "{k}: {} vs {}", lq[k], ll[k]);
    }
    // Only the spectral gradient reaches outside the support.
    let err = virial_error_bound(&u, radius, 0.5, 3.0);
    assert!(err < 1e-10 * kinetic(&u), "{err:e}");
}

#[test]
fn exterior_error_decays_in_radius() {
    let gs = radial_q();
    let bounds: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&r| virial_error_bound(&gs.profile, r, 0.5, 3.0))
        .collect();
    for w in bounds.windows(2) {
        assert!(w[1] < w[0], "{bounds:?}");
    }
}

/// Largest centered-difference mismatch of `(z, z')` against `(z', z'')`.
/// The data overlaps both the singular core and the transition of the
/// virial weight, which is resolved with `R / dx = 64`.
fn fd_errors(dt: f64) -> (f64, f64) {
    let g = cgrid(16.0, 256);
    let w = inls_weight(&g);
    let u0 = SpectralField::from_fn(&g, |x| {
        let r2 = (x[0] - 3.0).powi(2) + x[1] * x[1];
        Complex64::from_polar(0.9 * (-r2 / 4.5).exp(), 0.4 * x[0] + 0.1 * r2)
    });
    let mut cfg = EvolutionConfig::new(w, 3.0, 0.5);
    cfg.virial = VirialKind::Localized { radius: 8.0 };
    cfg.dt = dt;
    cfg.monitor_stride = 1;
    cfg.snapshot_stride = 1_000_000;
    cfg.wraparound_guard = false;
    let traj = evolve(&u0, &cfg).unwrap();
    let m = &traj.monitors;
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    // Compare on the coarse-grid times only, so both runs see the same points.
    let stride = (0.05 / dt).round() as usize;
    for k in (stride..traj.times.len() - 1).step_by(stride) {
        let d1 = (m.virial_z[k + 1] - m.virial_z[k - 1]) / (2.0 * dt);
        let d2 = (m.virial_zp[k + 1] - m.virial_zp[k - 1]) / (2.0 * dt);
        e1 = e1.max((d1 - m.virial_zp[k]).abs());
        e2 = e2.max((d2 - m.virial_zpp[k]).abs());
    }
    (e1, e2)
}

#[test]
fn virial_derivatives_match_finite_differences_at_second_order() {
    let (a1, a2) = fd_errors(0.01);
    let (b1, b2) = fd_errors(0.005);
    assert!((a1 / b1 - 4.0).abs() < 0.5, "z': {a1:e} / {b1:e}");
    assert!((a2 / b2 - 4.0).abs() < 0.5, "z'': {a2:e} / {b2:e}");
}

#[test]
fn contradiction_monitor_integrates_consistently() {
    let g = cgrid(16.0, 256);
    let w = inls_weight(&g);
    let u0 = fields::gaussian(&g, 0.8, 1.5, [3.0, 0.0]);
    let mut cfg = EvolutionConfig::new(w, 3.0, 1.0);
    cfg.virial = VirialKind::Localized { radius: 8.0 };
    cfg.monitor_stride = 10;
    cfg.snapshot_stride = 100;
    cfg.wraparound_guard = false;
    let traj = evolve(&u0, &cfg).unwrap();
    let report = virial_contradiction_monitor(&traj, 0.1);
    assert!(report.ftc_consistent, "{report:?}");
    assert!(report.ratio.is_finite() && report.ratio > 0.0);
    assert!(report.zprime_constant.is_finite());
    // Cross-check z' against a direct evaluation at the last time.
    let wl = VirialWeight::localized(&g, 8.0);
    let zp = virial_zprime(&traj.final_state, &wl);
    assert!((zp - traj.monitors.virial_zp.last().unwrap()).abs() < 1e-12 * zp.abs().max(1.0));
    assert!(virial_z(&traj.final_state, &wl) > 0.0);
}

#[test]
fn free_flow_scatters_onto_its_data() {
    let g = cgrid(16.0, 128);
    let u0 = fields::gaussian(&g, 1.0, 1.0, [0.0, 0.0]);
    let mut cfg = EvolutionConfig::new(SingularWeight::vanishing(&g), 3.0, 1.0);
    cfg.snapshot_stride = 100;
    cfg.wraparound_guard = false;
    let traj = evolve(&u0, &cfg).unwrap();
    let report = scattering_diagnostic(&traj);
    assert!(report.h1_distance.iter().all(|&d| d < 1e-12), "{:?}", report.h1_distance);
    assert!(h1_norm(&report.u_plus.sub(&u0).unwrap()) < 1e-12);
    assert_eq!(report.h1_distance.len(), traj.snapshot_times.len());
    assert_eq!(report.potential.len(), traj.times.len());
}

#[test]
fn small_data_is_scattering_consistent() {
    let g = cgrid(32.0, 128);
    let w = inls_weight(&g);
    let u0 = fields::gaussian(&g, 0.01, 1.0, [0.0, 0.0]);
    // Past t = 2.5 the free spread of this Gaussian reaches the guard shell.
    let mut cfg = EvolutionConfig::new(w, 3.0, 2.5);
    cfg.snapshot_stride = 125;
    cfg.monitor_stride = 25;
    let traj = evolve(&u0, &cfg).unwrap();
    assert!(!traj.guard.violated());
    let report = scattering_diagnostic(&traj);
    assert_eq!(report.verdict, ScatteringVerdict::ScatteringConsistent, "{:?}", report.summary());
}

#[test]
fn far_cutoff_removes_data_near_origin() {
    let g = cgrid(16.0, 128);
    let psi = fields::gaussian(&g, 1.0, 1.0, [0.0, 0.0]);
    let d = 8.0;
    let u = far_initial_data(&psi, d, 0.5, [1.0, 0.0]).unwrap();
    for (z, &r) in u.values().iter().zip(g.radii()) {
        if r < d / 4.0 {
            assert_eq!(z.norm(), 0.0);
        }
        assert!(far_cutoff(r, d) == 0.0 || r >= d / 4.0);
    }
    // Zero offset is the untouched profile.
    let base = far_initial_data(&psi, 0.0, 0.5, [1.0, 0.0]).unwrap();
    assert_eq!(base.values(), psi.values());
}

#[test]
fn far_translation_skips_rows_that_do_not_fit() {
    let g = cgrid(32.0, 128);
    let psi = fields::gaussian(&g, 0.5, 1.0, [0.0, 0.0]);
    let mut cfg = FarTranslationConfig::new(inls_weight(&g), 3.0);
    cfg.dt = 1e-2;
    cfg.sample_stride = 5;
    let table = far_translation_experiment(&psi, &[30.0, 0.0, 8.0], 0.5, 0.2, &cfg);
    let offsets: Vec<f64> = table.rows.iter().map(|r| r.offset).collect();
    assert_eq!(offsets, vec![0.0, 8.0, 30.0]);
    assert!(table.rows[0].skipped.is_none(), "{:?}", table.rows[0]);
    assert!(table.rows[1].skipped.is_none(), "{:?}", table.rows[1]);
    assert!(table.rows[2].skipped.is_some());
    // Baseline deviation is the full nonlinear effect on psi.
    assert!(table.rows[0].deviation > table.rows[1].deviation);
    assert!(table.nonincreasing);
    let c = table.rows[1].cutoff_gradient_constant;
    assert!(c > 0.0 && c.is_finite());
    assert_eq!(table.to_csv().lines().count(), 4);
    // Deviations are measured against the free flow of the row's own data.
    let u0 = far_initial_data(&psi, 8.0, 0.5, [1.0, 0.0]).unwrap();
    assert!(h1_norm(&free_propagate(&u0, 0.0).sub(&u0).unwrap()) < 1e-12);
}

use inls_core::params::{
    build_exponent_family, critical_index, is_admissible, theta_window, ExponentFamily, Regime,
};
use inls_core::{validate_params, Exponent, ProblemParams, Rational};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn finite(fam: &ExponentFamily, name: &str) -> Rational {
    fam.exponent(name).and_then(|e| e.finite()).unwrap_or_else(|| panic!("{name}")).clone()
}

/// Dual exponent reciprocal `1/p' = 1 - 1/p`.
fn dual_recip(p: &Rational) -> Rational {
    Rational::one() - p.recip().unwrap()
}

/// Valid `(N, b, alpha)` drawn from the hypothesis region: `b` strictly
/// inside `(0, min(N/2, 2))` and `alpha` strictly between the mass- and
/// energy-critical powers (below 6 when `N = 2`).
fn valid_params() -> impl Strategy<Value = ProblemParams> {
    (2i64..=3, 1i64..16, 1i64..16).prop_map(|(n, i, j)| {
        let b_max = q(n, 2).min(q(2, 1));
        let b = &b_max * q(i, 16);
        let lower = (4 - &b * 2) / n;
        let upper = if n == 2 { &lower + 6 } else { (4 - &b * 2) / (n - 2) };
        let alpha = &lower + (&upper - &lower) * q(j, 16);
        validate_params(n, b, alpha).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn critical_index_increases_in_alpha(n in 2i64..=3, b in 1i64..8, a1 in 1i64..200, da in 1i64..50) {
        let b = q(b, 8);
        let (a1, a2) = (q(a1, 20), q(a1 + da, 20));
        prop_assert!(critical_index(n, &b, &a1).unwrap() < critical_index(n, &b, &a2).unwrap());
    }

    #[test]
    fn critical_index_increases_in_b(n in 2i64..=3, b1 in 0i64..7, db in 1i64..8, a in 1i64..200) {
        let alpha = q(a, 20);
        let (b1, b2) = (q(b1, 8), q(b1 + db, 8));
        prop_assert!(critical_index(n, &b1, &alpha).unwrap() < critical_index(n, &b2, &alpha).unwrap());
    }

    #[test]
    fn boundary_powers_give_endpoint_indices(n in 2i64..=3, i in 1i64..16) {
        let b = q(n, 2).min(q(2, 1)) * q(i, 16);
        let mass_critical = (4 - &b * 2) / n;
        prop_assert_eq!(critical_index(n, &b, &mass_critical).unwrap(), Rational::zero());
        let rejected = validate_params(n, b.clone(), mass_critical).unwrap_err();
        prop_assert_eq!(rejected.regime, Regime::MassCritical);
        if n >= 3 {
            let energy_critical = (4 - &b * 2) / (n - 2);
            prop_assert_eq!(critical_index(n, &b, &energy_critical).unwrap(), Rational::one());
            let rejected = validate_params(n, b, energy_critical).unwrap_err();
            prop_assert_eq!(rejected.regime, Regime::EnergyCritical);
        }
    }

    #[test]
    fn valid_params_have_index_in_unit_interval(p in valid_params()) {
        let sc = p.critical_index();
        prop_assert!(sc.is_positive() && sc < &Rational::one());
        let recomputed = q(p.dimension() as i64, 2) - (2 - p.b()) / p.alpha();
        prop_assert_eq!(&recomputed, sc);
    }

    #[test]
    fn family_relations_hold_inside_window(p in valid_params(), j in 1i64..=64) {
        let window = theta_window(&p).unwrap();
        let theta = &window.certified * q(j, 64);
        let fam = build_exponent_family(&p, &theta, &theta).unwrap();
        let gap = p.alpha() - &theta;
        let hat_a = finite(&fam, "hat_a");
        // 1/tilde_a' = (alpha - theta)/hat_a + 1/hat_a.
        prop_assert_eq!(
            dual_recip(&finite(&fam, "tilde_a")),
            &gap / &hat_a + hat_a.recip().unwrap()
        );
        // 1/hat_q' = (alpha - theta)/hat_a + 1/hat_q.
        let hat_q = finite(&fam, "hat_q");
        prop_assert_eq!(dual_recip(&hat_q), &gap / &hat_a + hat_q.recip().unwrap());
        let sc = p.critical_index().clone();
        let n = p.dimension();
        let e = |name: &str| Exponent::Finite(finite(&fam, name));
        prop_assert!(is_admissible(&e("hat_q"), &e("hat_r"), &Rational::zero(), n).admissible);
        prop_assert!(is_admissible(&e("hat_a"), &e("hat_r"), &sc, n).admissible);
        prop_assert!(is_admissible(&e("tilde_a"), &e("hat_r"), &-sc.clone(), n).admissible);
        if n == 2 {
            let (bar_a, bar_q, a_star) = (finite(&fam, "bar_a"), finite(&fam, "bar_q"), finite(&fam, "a_star"));
            let q_exp = finite(&fam, "q");
            // 1/q' = (alpha - theta)/bar_a + 1/bar_q and (alpha - theta) q' = a_star.
            prop_assert_eq!(dual_recip(&q_exp), &gap / &bar_a + bar_q.recip().unwrap());
            prop_assert_eq!(&gap / dual_recip(&q_exp), a_star);
            prop_assert!(finite(&fam, "embed_a") > Rational::integer(4));
        }
    }
}

#[test]
fn window_is_nonempty_on_a_parameter_grid() {
    for n in 2..=3i64 {
        for i in [1, 4, 8, 12, 15] {
            for j in [1, 4, 8, 12, 15] {
                let b = q(n, 2).min(q(2, 1)) * q(i, 16);
                let lower = (4 - &b * 2) / n;
                let upper = if n == 2 { &lower + 6 } else { (4 - &b * 2) / (n - 2) };
                let alpha = &lower + (&upper - &lower) * q(j, 16);
                let p = validate_params(n, b, alpha).unwrap();
                assert!(theta_window(&p).is_ok(), "{p}");
            }
        }
    }
}

//! Exact certification of the exponent family at one parameter point or on
//! a rational grid over the hypothesis region.

use inls_core::params::{
    build_exponent_family, evaluate_exponent_family, theta_window, window_epsilon, ExponentFamily,
    FamilyFailure, ThetaWindow,
};
use inls_core::{validate_params, ProblemParams, Rational};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub b: Rational,
    pub alpha: Rational,
    pub critical_index: Rational,
    pub theta: Rational,
    pub epsilon: Rational,
    /// `config` or `window`.
    pub theta_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<ThetaWindow>,
    pub all_pass: bool,
    pub first_failure: Option<FamilyFailure>,
    /// Every exponent, relation, pair verdict and side condition.
    pub family: Option<ExponentFamily>,
}

/// Certifies one point. With `theta = None` the largest certified `theta`
/// of the window is used, with `epsilon` tied to it.
pub fn certify_point(
    params: &ProblemParams,
    theta: Option<Rational>,
    epsilon: Option<Rational>,
) -> PointReport {
    let (theta, window, source) = match theta {
        Some(t) => (t, None, "config"),
        None => match theta_window(params) {
            Ok(w) => (w.certified.clone(), Some(w), "window"),
            Err(e) => {
                return PointReport {
                    n: params.dimension(),
                    b: params.b().clone(),
                    alpha: params.alpha().clone(),
                    critical_index: params.critical_index().clone(),
                    theta: Rational::zero(),
                    epsilon: Rational::zero(),
                    theta_source: "window".into(),
                    window: None,
                    all_pass: false,
                    first_failure: Some(FamilyFailure::Condition {
                        name: "theta-window".into(),
                        detail: e.to_string(),
                    }),
                    family: None,
                }
            }
        },
    };
    let epsilon = epsilon.unwrap_or_else(|| window_epsilon(&theta));
    let (family, first_failure) = match build_exponent_family(params, &theta, &epsilon) {
        Ok(f) => (Some(f), None),
        Err(e) => {
            let family = e.family.map(|f| *f).or_else(|| {
                (theta.is_positive() && &theta < params.alpha() && epsilon.is_positive())
                    .then(|| evaluate_exponent_family(params, &theta, &epsilon))
            });
            (family, Some(e.failure))
        }
    };
    PointReport {
        n: params.dimension(),
        b: params.b().clone(),
        alpha: params.alpha().clone(),
        critical_index: params.critical_index().clone(),
        theta,
        epsilon,
        theta_source: source.into(),
        window,
        all_pass: first_failure.is_none(),
        first_failure,
        family,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSample {
    #[serde(rename = "N")]
    pub n: i64,
    pub b: Rational,
    pub alpha: Rational,
    pub theta: Rational,
    pub epsilon: Rational,
    pub passed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub points_per_axis: usize,
    pub samples: usize,
    pub passed: usize,
    pub all_pass: bool,
    pub rows: Vec<RegionSample>,
}

/// The `(N, b, alpha)` nodes of the region grid: `b = b_max i/(k+1)` and
/// `alpha` at the fractions `j/(k+1)` between the mass-critical power and
/// the energy-critical one (for `N = 2`, the mass-critical power plus 6).
pub fn region_nodes(points: usize) -> Vec<(i64, Rational, Rational)> {
    let k = points as i64;
    let mut out = Vec::new();
    for n in 2..=3i64 {
        let b_max = Rational::new(n, 2).min(Rational::integer(2));
        for i in 1..=k {
            let b = &b_max * Rational::new(i, k + 1);
            let lower = (4 - &b * 2) / n;
            let upper = if n == 2 { &lower + 6 } else { (4 - &b * 2) / (n - 2) };
            for j in 1..=k {
                let alpha = &lower + (&upper - &lower) * Rational::new(j, k + 1);
                out.push((n, b.clone(), alpha));
            }
        }
    }
    out
}

/// Certifies `points^3` samples per dimension: the nodes of
/// [`region_nodes`] times `theta = certified * l / points`, `l = 1..=points`.
pub fn certify_region(points: usize) -> RegionReport {
    let mut rows = Vec::new();
    for (n, b, alpha) in region_nodes(points) {
        let sample = |theta: Rational, passed: bool, failure: Option<String>| RegionSample {
            n,
            b: b.clone(),
            alpha: alpha.clone(),
            epsilon: window_epsilon(&theta),
            theta,
            passed,
            failure,
        };
        let params = match validate_params(n, b.clone(), alpha.clone()) {
            Ok(p) => p,
            Err(e) => {
                rows.push(sample(Rational::zero(), false, Some(e.to_string())));
                continue;
            }
        };
        let window = match theta_window(&params) {
            Ok(w) => w,
            Err(e) => {
                rows.push(sample(Rational::zero(), false, Some(e.to_string())));
                continue;
            }
        };
        for l in 1..=points as i64 {
            let theta = &window.certified * Rational::new(l, points as i64);
            let eps = window_epsilon(&theta);
            match build_exponent_family(&params, &theta, &eps) {
                Ok(_) => rows.push(sample(theta, true, None)),
                Err(e) => rows.push(sample(theta, false, Some(e.failure.to_string()))),
            }
        }
    }
    let passed = rows.iter().filter(|r| r.passed).count();
    RegionReport {
        points_per_axis: points,
        samples: rows.len(),
        passed,
        all_pass: passed == rows.len() && !rows.is_empty(),
        rows,
    }
}

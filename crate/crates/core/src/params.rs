//! Problem parameters and exact exponent certification.
//!
//! Everything in this module is exact rational arithmetic. The parameter
//! triple `(N, b, alpha)` is validated against the intercritical region,
//! and the Strichartz exponent families used by the nonlinear estimates are
//! built in closed form so their scaling identities and admissibility
//! claims can be checked as rational equalities and strict inequalities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{Exponent, Rational};

/// Which side of the intercritical window a parameter triple falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Intercritical,
    MassSubcritical,
    MassCritical,
    EnergyCritical,
    EnergySupercritical,
    /// `b` outside `(0, min(N/2, 2))` or `N < 2`; the scaling regime is not
    /// the deciding issue.
    OutOfRange,
}

/// The first hypothesis a parameter triple violates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "kebab-case")]
pub enum ParamConstraint {
    DimensionAtLeastTwo { dimension: i64 },
    WeightPositive { b: Rational },
    WeightBelowHalfDimension { b: Rational, bound: Rational },
    WeightBelowTwo { b: Rational },
    PowerPositive { alpha: Rational },
    AboveMassCritical { alpha: Rational, bound: Rational },
    BelowEnergyCritical { alpha: Rational, bound: Rational },
}

impl fmt::Display for ParamConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamConstraint::DimensionAtLeastTwo { dimension } => {
                write!(f, "N >= 2 violated (N = {dimension})")
            }
            ParamConstraint::WeightPositive { b } => write!(f, "b > 0 violated (b = {b})"),
            ParamConstraint::WeightBelowHalfDimension { b, bound } => {
                write!(f, "b < N/2 = {bound} violated (b = {b})")
            }
            ParamConstraint::WeightBelowTwo { b } => write!(f, "b < 2 violated (b = {b})"),
            ParamConstraint::PowerPositive { alpha } => {
                write!(f, "alpha > 0 violated (alpha = {alpha})")
            }
            ParamConstraint::AboveMassCritical { alpha, bound } => {
                write!(f, "alpha > (4-2b)/N = {bound} violated (alpha = {alpha})")
            }
            ParamConstraint::BelowEnergyCritical { alpha, bound } => {
                write!(f, "alpha < (4-2b)/(N-2) = {bound} violated (alpha = {alpha})")
            }
        }
    }
}

/// Structured rejection returned by [`validate_params`].
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{constraint} [{regime:?}]")]
pub struct ParamRejection {
    pub constraint: ParamConstraint,
    pub regime: Regime,
    /// `s_c`, whenever it is defined (`alpha != 0`).
    pub critical_index: Option<Rational>,
}

/// A validated intercritical triple `(N, b, alpha)` with its critical index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemParams {
    dimension: u32,
    b: Rational,
    alpha: Rational,
    critical_index: Rational,
}

impl ProblemParams {
    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn n(&self) -> Rational {
        Rational::integer(self.dimension as i64)
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// `s_c = N/2 - (2-b)/alpha`.
    pub fn critical_index(&self) -> &Rational {
        &self.critical_index
    }

    pub fn b_f64(&self) -> f64 {
        self.b.to_f64()
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn critical_index_f64(&self) -> f64 {
        self.critical_index.to_f64()
    }

    /// Mass-critical power `(4-2b)/N`.
    pub fn mass_critical_power(&self) -> Rational {
        mass_critical_power(self.dimension as i64, &self.b)
    }

    /// Energy-critical power `(4-2b)/(N-2)`; `None` (unbounded) for `N = 2`.
    pub fn energy_critical_power(&self) -> Option<Rational> {
        energy_critical_power(self.dimension as i64, &self.b)
    }
}

impl fmt::Display for ProblemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={}, b={}, alpha={} (s_c={})",
            self.dimension, self.b, self.alpha, self.critical_index
        )
    }
}

/// `s_c = N/2 - (2-b)/alpha`; `None` when `alpha = 0`.
pub fn critical_index(dimension: i64, b: &Rational, alpha: &Rational) -> Option<Rational> {
    let inv = alpha.recip()?;
    Some(Rational::new(dimension, 2) - (2 - b) * inv)
}

fn mass_critical_power(dimension: i64, b: &Rational) -> Rational {
    (4 - b * 2) / dimension
}

fn energy_critical_power(dimension: i64, b: &Rational) -> Option<Rational> {
    if dimension <= 2 {
        None
    } else {
        Some((4 - b * 2) / (dimension - 2))
    }
}

/// Checks the hypotheses of the scattering theorem and computes `s_c`.
///
/// Never panics: any input is accepted, and violations come back as a
/// [`ParamRejection`] naming the first failed constraint and the regime.
pub fn validate_params(
    dimension: i64,
    b: Rational,
    alpha: Rational,
) -> Result<ProblemParams, ParamRejection> {
    let s_c = critical_index(dimension, &b, &alpha);
    let reject = |constraint, regime| ParamRejection {
        constraint,
        regime,
        critical_index: s_c.clone(),
    };
    if dimension < 2 {
        return Err(reject(
            ParamConstraint::DimensionAtLeastTwo { dimension },
            Regime::OutOfRange,
        ));
    }
    if !b.is_positive() {
        return Err(reject(ParamConstraint::WeightPositive { b }, Regime::OutOfRange));
    }
    let half_n = Rational::new(dimension, 2);
    if b >= half_n {
        return Err(reject(
            ParamConstraint::WeightBelowHalfDimension { b, bound: half_n },
            Regime::OutOfRange,
        ));
    }
    if b >= Rational::integer(2) {
        return Err(reject(ParamConstraint::WeightBelowTwo { b }, Regime::OutOfRange));
    }
    if !alpha.is_positive() {
        return Err(reject(
            ParamConstraint::PowerPositive { alpha },
            Regime::MassSubcritical,
        ));
    }
    let lower = mass_critical_power(dimension, &b);
    if alpha <= lower {
        let regime = if alpha == lower {
            Regime::MassCritical
        } else {
            Regime::MassSubcritical
        };
        return Err(reject(
            ParamConstraint::AboveMassCritical { alpha, bound: lower },
            regime,
        ));
    }
    if let Some(upper) = energy_critical_power(dimension, &b) {
        if alpha >= upper {
            let regime = if alpha == upper {
                Regime::EnergyCritical
            } else {
                Regime::EnergySupercritical
            };
            return Err(reject(
                ParamConstraint::BelowEnergyCritical { alpha, bound: upper },
                regime,
            ));
        }
    }
    let critical_index = s_c.expect("alpha > 0 here");
    debug_assert!(critical_index.is_positive() && critical_index < Rational::one());
    Ok(ProblemParams {
        dimension: dimension as u32,
        b,
        alpha,
        critical_index,
    })
}

/// Regularity class of a Strichartz pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// `s = 0`.
    L2Admissible,
    /// `s > 0`: `2/q + N/r = N/2 - s`.
    HsAdmissible,
    /// `s < 0` in [`is_admissible`]'s signed convention: `2/q + N/r = N/2 + |s|`.
    DualHsAdmissible,
}

impl PairKind {
    pub fn of_signed_regularity(s: &Rational) -> Self {
        if s.is_zero() {
            PairKind::L2Admissible
        } else if s.is_positive() {
            PairKind::HsAdmissible
        } else {
            PairKind::DualHsAdmissible
        }
    }
}

/// First constraint an exponent pair fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "failure", rename_all = "kebab-case")]
pub enum AdmissibilityFailure {
    NonPositiveExponent { which: String },
    InfiniteSpaceExponent,
    Scaling { lhs: Rational, rhs: Rational },
    /// `N - 2|s| <= 0`, so the lower end of the range is undefined.
    RegularityTooLarge { s: Rational },
    BelowRange { r: Rational, lower: Rational },
    AboveRange { r: Rational, upper: Rational },
}

impl fmt::Display for AdmissibilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissibilityFailure::NonPositiveExponent { which } => {
                write!(f, "exponent {which} is not positive")
            }
            AdmissibilityFailure::InfiniteSpaceExponent => write!(f, "r = inf is excluded"),
            AdmissibilityFailure::Scaling { lhs, rhs } => {
                write!(f, "scaling 2/q + N/r = {lhs} != {rhs}")
            }
            AdmissibilityFailure::RegularityTooLarge { s } => {
                write!(f, "regularity |s| = {s} leaves no admissible range")
            }
            AdmissibilityFailure::BelowRange { r, lower } => {
                write!(f, "r = {r} below lower bound {lower}")
            }
            AdmissibilityFailure::AboveRange { r, upper } => {
                write!(f, "r = {r} not below upper bound {upper}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub kind: PairKind,
    pub failure: Option<AdmissibilityFailure>,
}

impl AdmissibilityVerdict {
    fn pass(kind: PairKind) -> Self {
        Self {
            admissible: true,
            kind,
            failure: None,
        }
    }

    fn fail(kind: PairKind, failure: AdmissibilityFailure) -> Self {
        Self {
            admissible: false,
            kind,
            failure: Some(failure),
        }
    }
}

/// Exact admissibility test for the pair `(q, r)` at signed regularity `s`.
///
/// `s >= 0` checks `\dot H^s`-admissibility (`2/q + N/r = N/2 - s`); a
/// negative `s` checks the dual class (`2/q + N/r = N/2 + |s|`). Both use
/// the same dimension-dependent range on `r`, evaluated at `|s|`:
/// `2N/(N-2|s|) <= r < 2N/(N-2)` for `N >= 3`, `2/(1-|s|) <= r < inf` for
/// `N = 2`, and `2/(1-2|s|) <= r < inf` for `N = 1`.
pub fn is_admissible(
    q: &Exponent,
    r: &Exponent,
    s: &Rational,
    dimension: u32,
) -> AdmissibilityVerdict {
    let kind = PairKind::of_signed_regularity(s);
    if let Exponent::Finite(qv) = q {
        if !qv.is_positive() {
            return AdmissibilityVerdict::fail(
                kind,
                AdmissibilityFailure::NonPositiveExponent { which: "q".into() },
            );
        }
    }
    let rv = match r {
        Exponent::Finite(rv) => rv,
        Exponent::Infinite => {
            return AdmissibilityVerdict::fail(kind, AdmissibilityFailure::InfiniteSpaceExponent)
        }
    };
    if !rv.is_positive() {
        return AdmissibilityVerdict::fail(
            kind,
            AdmissibilityFailure::NonPositiveExponent { which: "r".into() },
        );
    }
    let n = Rational::integer(dimension as i64);
    let lhs = q.reciprocal() * 2 + &n * r.reciprocal();
    let rhs = Rational::new(dimension as i64, 2) - s;
    if lhs != rhs {
        return AdmissibilityVerdict::fail(kind, AdmissibilityFailure::Scaling { lhs, rhs });
    }
    let s_abs = s.abs();
    let (lower, upper) = match dimension {
        1 => {
            let denom = 1 - &s_abs * 2;
            match (Rational::integer(2) / 1).clone() * denom.recip().unwrap_or_else(Rational::zero) {
                v if denom.is_positive() => (v, None),
                _ => {
                    return AdmissibilityVerdict::fail(
                        kind,
                        AdmissibilityFailure::RegularityTooLarge { s: s_abs },
                    )
                }
            }
        }
        2 => {
            let denom = 1 - &s_abs;
            if !denom.is_positive() {
                return AdmissibilityVerdict::fail(
                    kind,
                    AdmissibilityFailure::RegularityTooLarge { s: s_abs },
                );
            }
            (Rational::integer(2) / denom, None)
        }
        d => {
            let d = d as i64;
            let denom = d - &s_abs * 2;
            if !denom.is_positive() {
                return AdmissibilityVerdict::fail(
                    kind,
                    AdmissibilityFailure::RegularityTooLarge { s: s_abs },
                );
            }
            (
                Rational::integer(2 * d) / denom,
                Some(Rational::new(2 * d, d - 2)),
            )
        }
    };
    if rv < &lower {
        return AdmissibilityVerdict::fail(
            kind,
            AdmissibilityFailure::BelowRange {
                r: rv.clone(),
                lower,
            },
        );
    }
    if let Some(upper) = upper {
        if rv >= &upper {
            return AdmissibilityVerdict::fail(
                kind,
                AdmissibilityFailure::AboveRange {
                    r: rv.clone(),
                    upper,
                },
            );
        }
    }
    AdmissibilityVerdict::pass(kind)
}

/// A named pair together with its verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrichartzPair {
    pub name: String,
    pub q: Exponent,
    pub r: Exponent,
    /// Signed regularity (negative for the dual class).
    pub s: Rational,
    pub kind: PairKind,
    pub verdict: AdmissibilityVerdict,
}

/// An exact identity between two rational expressions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    pub statement: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub holds: bool,
}

/// A strict inequality or positivity side condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub statement: String,
    pub holds: bool,
    pub detail: String,
}

/// Every exponent from the nonlinear estimates and the profile-embedding
/// construction, with certified relations and verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentFamily {
    pub params: ProblemParams,
    pub theta: Rational,
    pub epsilon: Rational,
    /// Named exponents; `None` marks a degenerate (zero) denominator.
    pub exponents: BTreeMap<String, Option<Exponent>>,
    pub relations: Vec<RelationCheck>,
    pub pairs: Vec<StrichartzPair>,
    pub conditions: Vec<ConditionCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyFailure {
    ThetaOutOfRange { theta: Rational, alpha: Rational },
    EpsilonNotPositive { epsilon: Rational },
    DegenerateExponent { name: String },
    Relation { name: String, lhs: Rational, rhs: Rational },
    Pair { name: String, failure: AdmissibilityFailure },
    Condition { name: String, detail: String },
}

impl fmt::Display for FamilyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyFailure::ThetaOutOfRange { theta, alpha } => {
                write!(f, "theta = {theta} outside (0, alpha = {alpha})")
            }
            FamilyFailure::EpsilonNotPositive { epsilon } => {
                write!(f, "epsilon = {epsilon} is not positive")
            }
            FamilyFailure::DegenerateExponent { name } => {
                write!(f, "exponent {name} has a vanishing denominator")
            }
            FamilyFailure::Relation { name, lhs, rhs } => {
                write!(f, "relation {name} fails: {lhs} != {rhs}")
            }
            FamilyFailure::Pair { name, failure } => write!(f, "pair {name}: {failure}"),
            FamilyFailure::Condition { name, detail } => write!(f, "condition {name}: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("exponent family rejected: {failure}")]
pub struct FamilyError {
    pub failure: FamilyFailure,
    pub family: Option<Box<ExponentFamily>>,
}

impl ExponentFamily {
    /// First failed item in declaration order: degenerate exponents, then
    /// relations, pair verdicts and side conditions.
    pub fn first_failure(&self) -> Option<FamilyFailure> {
        for (name, value) in &self.exponents {
            if value.is_none() {
                return Some(FamilyFailure::DegenerateExponent { name: name.clone() });
            }
        }
        for rel in &self.relations {
            if !rel.holds {
                return Some(FamilyFailure::Relation {
                    name: rel.name.clone(),
                    lhs: rel.lhs.clone(),
                    rhs: rel.rhs.clone(),
                });
            }
        }
        for pair in &self.pairs {
            if let Some(failure) = &pair.verdict.failure {
                return Some(FamilyFailure::Pair {
                    name: pair.name.clone(),
                    failure: failure.clone(),
                });
            }
        }
        for cond in &self.conditions {
            if !cond.holds {
                return Some(FamilyFailure::Condition {
                    name: cond.name.clone(),
                    detail: cond.detail.clone(),
                });
            }
        }
        None
    }

    pub fn all_pass(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn exponent(&self, name: &str) -> Option<&Exponent> {
        self.exponents.get(name).and_then(|e| e.as_ref())
    }

    pub fn pair(&self, name: &str) -> Option<&StrichartzPair> {
        self.pairs.iter().find(|p| p.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationCheck> {
        self.relations.iter().find(|r| r.name == name)
    }
}

fn quotient(num: Rational, den: Rational) -> Option<Rational> {
    den.recip().map(|inv| num * inv)
}

struct FamilyBuilder {
    dimension: u32,
    exponents: BTreeMap<String, Option<Exponent>>,
    relations: Vec<RelationCheck>,
    pairs: Vec<StrichartzPair>,
    conditions: Vec<ConditionCheck>,
}

impl FamilyBuilder {
    fn exponent(&mut self, name: &str, num: Rational, den: Rational) -> Option<Rational> {
        let value = quotient(num, den);
        self.exponents
            .insert(name.to_string(), value.clone().map(Exponent::Finite));
        value
    }

    fn relation(&mut self, name: &str, statement: &str, lhs: Option<Rational>, rhs: Option<Rational>) {
        match (lhs, rhs) {
            (Some(lhs), Some(rhs)) => {
                let holds = lhs == rhs;
                self.relations.push(RelationCheck {
                    name: name.into(),
                    statement: statement.into(),
                    lhs,
                    rhs,
                    holds,
                });
            }
            _ => self.conditions.push(ConditionCheck {
                name: name.into(),
                statement: statement.into(),
                holds: false,
                detail: "relation involves a degenerate exponent".into(),
            }),
        }
    }

    fn pair(&mut self, name: &str, q: Option<&Rational>, r: Option<&Rational>, s: Rational) {
        let kind = PairKind::of_signed_regularity(&s);
        match (q, r) {
            (Some(q), Some(r)) => {
                let q = Exponent::Finite(q.clone());
                let r = Exponent::Finite(r.clone());
                let verdict = is_admissible(&q, &r, &s, self.dimension);
                self.pairs.push(StrichartzPair {
                    name: name.into(),
                    q,
                    r,
                    s,
                    kind,
                    verdict,
                });
            }
            _ => self.conditions.push(ConditionCheck {
                name: name.into(),
                statement: format!("pair {name} is well defined"),
                holds: false,
                detail: "degenerate exponent".into(),
            }),
        }
    }

    fn condition(&mut self, name: &str, statement: &str, holds: Option<bool>, detail: String) {
        self.conditions.push(ConditionCheck {
            name: name.into(),
            statement: statement.into(),
            holds: holds.unwrap_or(false),
            detail,
        });
    }
}

fn dual_reciprocal(p: &Rational) -> Rational {
    // 1/p' = 1 - 1/p
    1 - p.recip().expect("nonzero exponent")
}

/// Evaluates the whole exponent family and records every verdict, without
/// rejecting anything. `epsilon` only enters the `N = 2` embedding family.
pub fn evaluate_exponent_family(
    params: &ProblemParams,
    theta: &Rational,
    epsilon: &Rational,
) -> ExponentFamily {
    let n = params.n();
    let b = params.b().clone();
    let al = params.alpha().clone();
    let sc = params.critical_index().clone();
    let th = theta.clone();
    let ep = epsilon.clone();
    let mut fb = FamilyBuilder {
        dimension: params.dimension(),
        exponents: BTreeMap::new(),
        relations: Vec::new(),
        pairs: Vec::new(),
        conditions: Vec::new(),
    };

    // Nonlinear-estimate exponents, all dimensions.
    let a2t = &al + 2 - &th;
    let hat_q = fb.exponent(
        "hat_q",
        &al * &a2t * 4,
        &al * (&n * &al + &b * 2) - &th * (&n * &al - 4 + &b * 2),
    );
    let hat_r = fb.exponent(
        "hat_r",
        &n * &al * &a2t,
        &al * (&n - &b) - &th * (2 - &b),
    );
    let tilde_a = fb.exponent(
        "tilde_a",
        &al * &a2t * 2,
        &al * (&n * (&al + 1 - &th) - 2 + &b * 2) - (4 - &b * 2) * (1 - &th),
    );
    let hat_a = fb.exponent(
        "hat_a",
        &al * &a2t * 2,
        4 - &b * 2 - (&n - 2) * &al,
    );

    fb.pair("hat_q,hat_r", hat_q.as_ref(), hat_r.as_ref(), Rational::zero());
    fb.pair("hat_a,hat_r", hat_a.as_ref(), hat_r.as_ref(), sc.clone());
    fb.pair("tilde_a,hat_r", tilde_a.as_ref(), hat_r.as_ref(), -sc.clone());

    if let (Some(hat_q), Some(tilde_a), Some(hat_a)) = (&hat_q, &tilde_a, &hat_a) {
        let weight = (&al - &th) / hat_a;
        fb.relation(
            "LG1-dual",
            "1/tilde_a' = (alpha-theta)/hat_a + 1/hat_a",
            Some(dual_reciprocal(tilde_a)),
            Some(&weight + hat_a.recip().unwrap()),
        );
        fb.relation(
            "LG1-l2",
            "1/hat_q' = (alpha-theta)/hat_a + 1/hat_q",
            Some(dual_reciprocal(hat_q)),
            Some(&weight + hat_q.recip().unwrap()),
        );
    } else {
        fb.relation("LG1-dual", "1/tilde_a' = (alpha-theta)/hat_a + 1/hat_a", None, None);
        fb.relation("LG1-l2", "1/hat_q' = (alpha-theta)/hat_a + 1/hat_q", None, None);
    }

    if params.dimension() >= 3 {
        // Space exponent used to bound the approximate solution for N >= 3.
        let hat_p = fb.exponent(
            "hat_p",
            &n * &a2t * 2,
            &n * &a2t - (1 - &sc) * 4,
        );
        fb.pair("hat_a,hat_p", hat_a.as_ref(), hat_p.as_ref(), Rational::zero());
        fb.relation(
            "hat_p-gap",
            "s_c = N/hat_p - N/hat_r",
            Some(sc.clone()),
            match (&hat_p, &hat_r) {
                (Some(p), Some(r)) => Some(&n / p - &n / r),
                _ => None,
            },
        );
        let below = hat_p.as_ref().map(|p| p < &(&n / &sc));
        fb.condition(
            "hat_p<N/s_c",
            "hat_p < N/s_c",
            below,
            format!("hat_p = {:?}, N/s_c = {}", hat_p, &n / &sc),
        );
        let upper = Rational::new(2 * params.dimension() as i64, params.dimension() as i64 - 2);
        let inside = hat_p
            .as_ref()
            .map(|p| p > &Rational::integer(2) && p < &upper);
        fb.condition(
            "2<hat_p<2N/(N-2)",
            "2 < hat_p < 2N/(N-2)",
            inside,
            format!("hat_p = {:?}, 2N/(N-2) = {upper}", hat_p),
        );
    }

    if params.dimension() == 2 {
        // Gradient-estimate exponents in two dimensions.
        let a1t = &al + 1 - &th;
        let bar_a = fb.exponent("bar_a", &a1t * 2, 1 - &sc + &th);
        let bar_r = fb.exponent(
            "bar_r",
            &al * &a1t * 2,
            &al * (1 - &b + &sc) + 2 - &b - &th * (2 - &b + &al),
        );
        let bar_q = fb.exponent("bar_q", &a1t * 2, 1 + &al * &sc + &th * (1 - &sc));
        let a_star = fb.exponent("a_star", (&al - &th) * 2, 1 + &th);
        let r_star = fb.exponent(
            "r_star",
            &al * (&al - &th) * 2,
            &al * (1 - &b) - &th * (2 - &b + &al),
        );
        let q = fb.exponent("q", Rational::integer(2), 1 - &th);
        let r = fb.exponent("r", Rational::integer(2), th.clone());

        fb.pair("bar_q,bar_r", bar_q.as_ref(), bar_r.as_ref(), Rational::zero());
        fb.pair("bar_a,bar_r", bar_a.as_ref(), bar_r.as_ref(), sc.clone());
        fb.pair("a_star,r_star", a_star.as_ref(), r_star.as_ref(), sc.clone());
        fb.pair("q,r", q.as_ref(), r.as_ref(), Rational::zero());

        match (&q, &bar_a, &bar_q, &a_star) {
            (Some(q), Some(bar_a), Some(bar_q), Some(a_star)) => {
                fb.relation(
                    "GWP4-holder",
                    "1/q' = (alpha-theta)/bar_a + 1/bar_q",
                    Some(dual_reciprocal(q)),
                    Some((&al - &th) / bar_a + bar_q.recip().unwrap()),
                );
                let q_dual = dual_reciprocal(q).recip();
                fb.relation(
                    "GWP4-power",
                    "(alpha-theta) q' = a_star",
                    q_dual.map(|qd| (&al - &th) * qd),
                    Some(a_star.clone()),
                );
            }
            _ => {
                fb.relation("GWP4-holder", "1/q' = (alpha-theta)/bar_a + 1/bar_q", None, None);
                fb.relation("GWP4-power", "(alpha-theta) q' = a_star", None, None);
            }
        }

        // Embedding family for remote profiles.
        let embed_a = fb.exponent("embed_a", &al * &a1t * 2, 2 - &b + &ep);
        let embed_r = fb.exponent(
            "embed_r",
            &al * &a1t * 2,
            (2 - &b) * (&al - &th) - &ep,
        );
        let embed_bar_a = fb.exponent("embed_bar_a", &al * 2, &al * 2 - (2 - &b) - &ep);
        let embed_bar_r = fb.exponent("embed_bar_r", &al * 2, ep.clone());
        let embed_p = fb.exponent(
            "embed_p",
            &al * &a1t * 2 - (2 - &b + &ep) * 4,
            (2 - &b) * (&al - 1 - &th) - &ep * 2,
        );
        fb.pair("embed_a,embed_r", embed_a.as_ref(), embed_r.as_ref(), sc.clone());
        fb.pair(
            "embed_bar_a,embed_bar_r",
            embed_bar_a.as_ref(),
            embed_bar_r.as_ref(),
            -sc.clone(),
        );
        fb.condition(
            "embed_a>4",
            "a > 4",
            embed_a.as_ref().map(|a| a > &Rational::integer(4)),
            format!("a = {:?}", embed_a),
        );
        fb.condition(
            "embed_p>2",
            "p > 2",
            embed_p.as_ref().map(|p| p > &Rational::integer(2)),
            format!("p = {:?}", embed_p),
        );
        fb.relation(
            "embed-power",
            "(alpha+1-theta) bar_a' = a",
            embed_bar_a
                .as_ref()
                .and_then(|ba| dual_reciprocal(ba).recip())
                .map(|bad| &a1t * bad),
            embed_a.clone(),
        );
    }

    ExponentFamily {
        params: params.clone(),
        theta: th,
        epsilon: ep,
        exponents: fb.exponents,
        relations: fb.relations,
        pairs: fb.pairs,
        conditions: fb.conditions,
    }
}

/// Builds the exponent family and rejects it unless every relation, every
/// claimed admissibility and every side condition holds exactly.
pub fn build_exponent_family(
    params: &ProblemParams,
    theta: &Rational,
    epsilon: &Rational,
) -> Result<ExponentFamily, FamilyError> {
    if !theta.is_positive() || theta >= params.alpha() {
        return Err(FamilyError {
            failure: FamilyFailure::ThetaOutOfRange {
                theta: theta.clone(),
                alpha: params.alpha().clone(),
            },
            family: None,
        });
    }
    if !epsilon.is_positive() {
        return Err(FamilyError {
            failure: FamilyFailure::EpsilonNotPositive {
                epsilon: epsilon.clone(),
            },
            family: None,
        });
    }
    let family = evaluate_exponent_family(params, theta, epsilon);
    match family.first_failure() {
        None => Ok(family),
        Some(failure) => Err(FamilyError {
            failure,
            family: Some(Box::new(family)),
        }),
    }
}

/// Certified range of small `theta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaWindow {
    /// Every probe in `(0, certified]` passed.
    pub certified: Rational,
    /// Smallest probe above `certified` that failed, or `None` when the
    /// search reached `alpha` (the window is then `(0, alpha)`).
    pub first_failure: Option<Rational>,
    /// Resolution of the bracketing.
    pub resolution: Rational,
    pub probes: usize,
}

impl ThetaWindow {
    /// Upper end of the bracket containing the true supremum.
    pub fn supremum_bound(&self, alpha: &Rational) -> Rational {
        self.first_failure.clone().unwrap_or_else(|| alpha.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("no theta probe down to {smallest_probe} passes: {failure}")]
pub struct EmptyWindow {
    pub smallest_probe: Rational,
    pub failure: String,
}

const WINDOW_DEPTH: u32 = 40;

/// `epsilon` used by [`theta_window`] probes: the embedding family's
/// `epsilon` is tied to `theta` so both shrink together.
pub fn window_epsilon(theta: &Rational) -> Rational {
    theta.clone()
}

fn probe_passes(params: &ProblemParams, theta: &Rational) -> Result<(), FamilyFailure> {
    match build_exponent_family(params, theta, &window_epsilon(theta)) {
        Ok(_) => Ok(()),
        Err(e) => Err(e.failure),
    }
}

/// Conservative window of valid `theta`.
///
/// Probes the dyadic ladder `alpha/2^k`, keeps the largest rung below which
/// every rung passes, bisects between it and the next failing rung down to a
/// resolution of `1/1024`, and finally re-checks 64 evenly spaced interior
/// points of the certified interval.
pub fn theta_window(params: &ProblemParams) -> Result<ThetaWindow, EmptyWindow> {
    let alpha = params.alpha().clone();
    let mut probes = 0usize;
    let ladder: Vec<Rational> = (1..=WINDOW_DEPTH)
        .map(|k| &alpha / Rational::integer(1i64 << k))
        .collect();
    // Walk from the smallest rung upward while probes keep passing.
    let mut best: Option<Rational> = None;
    let mut failed_above: Option<Rational> = None;
    for theta in ladder.iter().rev() {
        probes += 1;
        match probe_passes(params, theta) {
            Ok(()) => best = Some(theta.clone()),
            Err(failure) => {
                if best.is_none() {
                    return Err(EmptyWindow {
                        smallest_probe: theta.clone(),
                        failure: failure.to_string(),
                    });
                }
                failed_above = Some(theta.clone());
                break;
            }
        }
    }
    let mut pass = best.expect("at least one probe passed");
    let mut fail = failed_above.clone().unwrap_or_else(|| alpha.clone());
    let resolution = Rational::new(1, 1024);
    // `alpha` itself is excluded from the window, so it is a valid "fail" end.
    while &fail - &pass > resolution {
        let mid = (&pass + &fail) / 2;
        probes += 1;
        if probe_passes(params, &mid).is_ok() {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    // Re-check an interior grid; shrink to just below any failing point.
    for j in (1..=64).rev() {
        let theta = &pass * Rational::new(j, 64);
        probes += 1;
        if probe_passes(params, &theta).is_err() {
            fail = theta.clone();
            pass = &pass * Rational::new(j - 1, 64);
        }
    }
    if !pass.is_positive() {
        return Err(EmptyWindow {
            smallest_probe: ladder.last().unwrap().clone(),
            failure: "interior re-check failed".into(),
        });
    }
    let first_failure = if fail == alpha && failed_above.is_none() {
        None
    } else {
        Some(fail)
    };
    Ok(ThetaWindow {
        certified: pass,
        first_failure,
        resolution,
        probes,
    })
}

/// Region in which the weight `|x|^{-b}` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRegion {
    /// Unit ball `|x| <= 1`.
    Ball,
    /// Its complement.
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightVerdict {
    pub region: WeightRegion,
    /// `1/gamma` from the Hölder bookkeeping.
    pub inv_gamma: Rational,
    /// `N/gamma - b = theta (2-b)/alpha - N/r1`.
    pub margin: Rational,
    pub integrable: bool,
    pub reason: String,
}

/// Decides whether `|x|^{-b} ∈ L^gamma(region)`, where `gamma` is fixed by
/// `N/gamma - b = theta (2-b)/alpha - N/r1`.
///
/// On the ball this needs `N/gamma - b > 0`; on the exterior it needs
/// `N/gamma - b < 0` with `gamma ∈ (0, ∞]`.
pub fn weight_exponent_check(
    params: &ProblemParams,
    theta: &Rational,
    r1: &Rational,
    region: WeightRegion,
) -> WeightVerdict {
    let n = params.n();
    let b = params.b();
    let margin = theta * (2 - b) / params.alpha() - &n / r1;
    let inv_gamma = (&margin + b) / &n;
    let precondition = theta * r1 > Rational::one();
    let (integrable, reason) = if !precondition {
        (false, format!("r1 = {r1} does not exceed 1/theta"))
    } else {
        match region {
            WeightRegion::Ball => {
                if margin.is_positive() {
                    (true, "N/gamma - b > 0: weight integrable on the ball".into())
                } else {
                    (false, format!("N/gamma - b = {margin} is not positive"))
                }
            }
            WeightRegion::Exterior => {
                if inv_gamma.is_negative() {
                    (false, format!("1/gamma = {inv_gamma} is negative"))
                } else if margin.is_negative() {
                    (true, "N/gamma - b < 0: weight integrable on the exterior".into())
                } else {
                    (false, format!("N/gamma - b = {margin} is not negative"))
                }
            }
        }
    };
    WeightVerdict {
        region,
        inv_gamma,
        margin,
        integrable,
        reason,
    }
}

use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::evolution::{mass, potential};
use crate::groundstate::GroundState;
use crate::params::ProblemParams;
use crate::spectral::{kinetic, SpectralField};

/// Ratios within this distance of one are reported as at-threshold.
pub const THRESHOLD_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdClass {
    SubThreshold,
    AtThreshold,
    AboveThreshold,
    NegativeEnergy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    /// `E^{s_c} M^{1-s_c}` relative to `Q`; absent when `E < 0`.
    pub me_ratio: Option<f64>,
    /// `||∇u||^{s_c} ||u||^{1-s_c}` relative to `Q`.
    pub grad_ratio: f64,
    pub band: f64,
    pub classification: ThresholdClass,
    /// `||u||^{2(1-s_c)} ||∇u||^{2 s_c}` over `2^{s_c} M[Q]^{1-s_c} E[Q]^{s_c}`:
    /// the final-state condition for the wave operator, informational only.
    pub final_state_ratio: f64,
    pub final_state_subthreshold: bool,
}

impl ThresholdReport {
    pub fn is_subthreshold(&self) -> bool {
        self.classification == ThresholdClass::SubThreshold
    }
}

struct Functionals {
    mass: f64,
    kinetic: f64,
    potential: f64,
    energy: f64,
}

fn functionals(u: &SpectralField, gs: &GroundState, alpha: f64) -> Result<Functionals, GridError> {
    if u.grid() != gs.profile.grid() {
        return Err(GridError::GridMismatch);
    }
    let m = mass(u);
    let k = kinetic(u);
    let p = potential(u, &gs.weight, alpha);
    Ok(Functionals {
        mass: m,
        kinetic: k,
        potential: p,
        energy: 0.5 * k - p / (alpha + 2.0),
    })
}

/// Scale-invariant comparison of `u0` with the ground state, using the
/// default band [`THRESHOLD_BAND`].
pub fn classify_threshold(
    u0: &SpectralField,
    gs: &GroundState,
    params: &ProblemParams,
) -> Result<ThresholdReport, GridError> {
    classify_threshold_with(u0, gs, params, THRESHOLD_BAND)
}

pub fn classify_threshold_with(
    u0: &SpectralField,
    gs: &GroundState,
    params: &ProblemParams,
    band: f64,
) -> Result<ThresholdReport, GridError> {
    let sc = params.critical_index_f64();
    let f = functionals(u0, gs, params.alpha_f64())?;
    let grad_ratio = f.kinetic.powf(sc / 2.0) * f.mass.powf((1.0 - sc) / 2.0) / gs.threshold_grad;
    let me_ratio = (f.energy >= 0.0).then(|| f.energy.powf(sc) * f.mass.powf(1.0 - sc) / gs.threshold_me);
    let classification = match me_ratio {
        None => ThresholdClass::NegativeEnergy,
        Some(me) if me < 1.0 - band && grad_ratio < 1.0 - band => ThresholdClass::SubThreshold,
        Some(me) if me > 1.0 + band || grad_ratio > 1.0 + band => ThresholdClass::AboveThreshold,
        Some(_) => ThresholdClass::AtThreshold,
    };
    let final_state_ratio = f.mass.powf(1.0 - sc) * f.kinetic.powf(sc)
        / (2f64.powf(sc) * gs.mass.powf(1.0 - sc) * gs.energy.powf(sc));
    Ok(ThresholdReport {
        mass: f.mass,
        kinetic: f.kinetic,
        potential: f.potential,
        energy: f.energy,
        me_ratio,
        grad_ratio,
        band,
        classification,
        final_state_ratio,
        final_state_subthreshold: final_state_ratio < 1.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityReport {
    /// `M^{1-s_c} E^{s_c}` strictly below that of `Q`.
    pub mass_energy_below: bool,
    /// `||u||^{1-s_c} ||∇u||^{s_c}` at most that of `Q`.
    pub gradient_at_most: bool,
    pub applicable: bool,
    /// Item (i): `E / ||∇u||^2`.
    pub energy_ratio: f64,
    /// Item (ii): `1 - grad_ratio`.
    pub gradient_gap: f64,
    /// Item (iii): `8K - 4(N alpha + 2b)/(alpha + 2) P`.
    pub virial_quantity: f64,
    /// Item (iii) divided by `K`; tends to 8 as `u -> 0`.
    pub virial_ratio: f64,
    pub items_positive: [bool; 3],
}

/// Evaluates the three coercivity items. The hypotheses are tested with
/// exact comparisons; when they fail the values are still reported but the
/// report is marked inapplicable.
pub fn coercivity_check(
    u: &SpectralField,
    gs: &GroundState,
    params: &ProblemParams,
) -> Result<CoercivityReport, GridError> {
    let sc = params.critical_index_f64();
    let alpha = params.alpha_f64();
    let n = params.dimension() as f64;
    let b = params.b_f64();
    let f = functionals(u, gs, alpha)?;
    let me = if f.energy >= 0.0 {
        f.energy.powf(sc) * f.mass.powf(1.0 - sc)
    } else {
        f64::NEG_INFINITY
    };
    let grad = f.kinetic.powf(sc / 2.0) * f.mass.powf((1.0 - sc) / 2.0);
    let mass_energy_below = me < gs.threshold_me;
    let gradient_at_most = grad <= gs.threshold_grad;
    let virial_quantity = 8.0 * f.kinetic - 4.0 * (n * alpha + 2.0 * b) / (alpha + 2.0) * f.potential;
    let energy_ratio = f.energy / f.kinetic;
    let gradient_gap = 1.0 - grad / gs.threshold_grad;
    let virial_ratio = virial_quantity / f.kinetic;
    Ok(CoercivityReport {
        mass_energy_below,
        gradient_at_most,
        applicable: mass_energy_below && gradient_at_most,
        energy_ratio,
        gradient_gap,
        virial_quantity,
        virial_ratio,
        items_positive: [energy_ratio > 0.0, gradient_gap > 0.0, virial_quantity > 0.0],
    })
}

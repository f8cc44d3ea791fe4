//! Threshold classification, coercivity, virial monitoring and scattering
//! diagnostics.

pub mod far;
pub mod scattering;
pub mod threshold;
pub mod virial;

pub use far::{far_cutoff, far_initial_data, far_translation_experiment, FarTranslationConfig, FarTranslationRow, FarTranslationTable};
pub use scattering::{
    scattering_diagnostic, scattering_diagnostic_with, virial_contradiction_monitor, ContradictionReport,
    ScatteringConfig, ScatteringReport, ScatteringSummary, ScatteringVerdict,
};
pub use threshold::{
    classify_threshold, classify_threshold_with, coercivity_check, CoercivityReport, ThresholdClass, ThresholdReport,
    THRESHOLD_BAND,
};
pub use virial::{
    virial_error_bound, virial_triple, virial_z, virial_zprime, virial_zsecond, virial_zsecond_parts,
    VirialKind, VirialWeight, ZSecondParts,
};

//! Shared data types and small numerical helpers: Weibull penetrance
//! curves, logit transforms, interval-to-variance conversion, 2x2 tables
//! and validated study records.

mod stats;
mod study;
mod weibull;

pub use stats::{
    ci_to_logvar, continuity_corrected_or, inv_logit, logit, normal_logpdf, two_sided_z,
    Counts2x2, Transform, Z95,
};
pub use study::{
    AgeDistributions, AgeSummary, Modality, PenetranceReport, RatioReport, StudyRecord,
};
pub use weibull::{BaselinePenetrance, WeibullCurve};

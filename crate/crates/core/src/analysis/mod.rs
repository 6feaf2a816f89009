//! Scaling-exponent fits and ratio audits of the localized bounds.

mod audits;
mod report;
mod scaling;

pub use audits::{
    audit_holder, audit_small_scale, audit_localized, audit_operator_bound,
    audit_critical_localized, audit_trivial_bound, dyadic_radii, kernel_trial, kernel_trial_band,
    operator_audit_resolution, sup_ball, OperatorAuditSpec, RSchedule, BALL_LAW_TOLERANCE,
    KERNEL_TRIAL_TAIL,
};
pub use report::{AuditMetadata, AuditPoint, AuditReport};
pub use scaling::{fit_scaling, sigma, ScalingFit, ScalingLaw, MIN_FIT_POINTS, MIN_FIT_SPAN};

//! Numerical checks of the isoperimetric stability condition in rotationally
//! symmetric warped products `ds² = dr²/f²(r) + r²·dσ²` on ℝ^{n+1}.
//!
//! The crate evaluates `Φ(r) = f f'/r + (1 - f²)/r²`, perturbs geodesic spheres
//! along a fixed axis with the quadratic isometry correction, measures the
//! area and enclosed volume of the perturbed surfaces by two independent
//! routes, and issues certificates when the enclosed volume exceeds that of
//! the geodesic ball.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod expr;
pub mod fit;
pub mod geometry;
pub mod perturbation;
pub mod quadrature;
pub mod warp_model;

pub use analysis::{
    assess_order, certify, fit_order, recertify, scan_phi, selfcheck, verification_suite,
    CheckDetail, ConvergenceReport, CounterexampleCertificate, InvariantCheck, OrderLaw,
    SuiteCheck, VerificationReport,
};
pub use error::{Error, Result};
pub use expr::{Bindings, Expr};
pub use geometry::{
    ball_volume, g_weight, metric_at, sphere_area, unit_sphere_area, AmbientMetricTensor, GWeights,
};
pub use perturbation::{
    default_ladder, gphi_series_check, volume_gap_coefficient, PerturbedSphere, SurfaceSample,
    VolumeGapFit,
};
pub use quadrature::Tolerance;
pub use warp_model::{
    AlternateFormCondition, ConditionReport, ConditionStatus, PhiProfile, Preset, RadialInterval,
    ScanOptions, WarpDescriptor, WarpSpec,
};

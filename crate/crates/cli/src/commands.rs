//! Command implementations. Each returns a typed [`Report`] and an exit status.

use serde::{Deserialize, Serialize};
use warpiso_core::analysis::{
    certify_with, selfcheck, verification_suite, CheckDetail, InvariantCheck,
};
use warpiso_core::{
    ball_volume, g_weight, sphere_area, ConditionReport, ConditionStatus,
    CounterexampleCertificate, Error, RadialInterval, ScanOptions, Tolerance, VerificationReport,
};

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_CHECKS_FAILED, EXIT_OK, EXIT_REFUSED, EXIT_VIOLATED};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub results: T,
    pub diagnostics: Vec<String>,
}

impl<T> Report<T> {
    fn new(config: &RunConfig, results: T, diagnostics: Vec<String>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: config.command.clone(),
            config: config.clone(),
            results,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResults {
    pub interval: RadialInterval,
    pub condition: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertifyResults {
    Certified {
        certificate: Box<CounterexampleCertificate>,
    },
    Refused {
        r: f64,
        phi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub r: f64,
    pub f: f64,
    pub phi: f64,
    pub g: f64,
    pub area: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallResults {
    pub rows: Vec<BallRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckResults {
    pub passed: bool,
    pub checks: Vec<InvariantCheck>,
}

/// A finished command.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Analyze(Report<AnalyzeResults>),
    Verify(Report<VerificationReport>),
    Certify(Report<CertifyResults>),
    Ball(Report<BallResults>),
    Selfcheck(Report<SelfcheckResults>),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Analyze(r) => match r.results.condition.status {
                ConditionStatus::Holds => EXIT_OK,
                ConditionStatus::Violated => EXIT_VIOLATED,
            },
            Outcome::Verify(r) if !r.results.passed => EXIT_CHECKS_FAILED,
            Outcome::Selfcheck(r) if !r.results.passed => EXIT_CHECKS_FAILED,
            Outcome::Certify(Report {
                results: CertifyResults::Refused { .. },
                ..
            }) => EXIT_REFUSED,
            _ => EXIT_OK,
        }
    }

    pub fn diagnostics(&self) -> &[String] {
        match self {
            Outcome::Analyze(r) => &r.diagnostics,
            Outcome::Verify(r) => &r.diagnostics,
            Outcome::Certify(r) => &r.diagnostics,
            Outcome::Ball(r) => &r.diagnostics,
            Outcome::Selfcheck(r) => &r.diagnostics,
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match config.command.as_str() {
        "analyze" => analyze(config).map(Outcome::Analyze),
        "verify" => verify(config).map(Outcome::Verify),
        "certify" => certify(config).map(Outcome::Certify),
        "ball" => ball(config).map(Outcome::Ball),
        "selfcheck" => run_selfcheck(config).map(Outcome::Selfcheck),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn single_radius(config: &RunConfig) -> Result<f64, CliError> {
    match config.radii.as_slice() {
        [r] => Ok(*r),
        _ => Err(CliError::Usage(format!(
            "{} needs exactly one --r",
            config.command
        ))),
    }
}

pub fn analyze(config: &RunConfig) -> Result<Report<AnalyzeResults>, CliError> {
    let spec = config.spec()?;
    let (lo, hi) = config.query_interval(&spec);
    let opts = ScanOptions {
        grid_size: config.grid_size.unwrap_or(ScanOptions::default().grid_size),
        tol: config.tolerances.condition,
        bisect_rel_tol: config.tolerances.bisect_rel,
    };
    let condition = spec.glw_condition((lo, hi), &opts)?;
    let mut diagnostics = Vec::new();
    if let Some(worst) = condition.profile.phi.iter().copied().reduce(f64::min) {
        diagnostics.push(format!("minimum of Phi on the grid: {worst:e}"));
    }
    for v in &condition.profile.violations {
        diagnostics.push(format!("condition violated on [{}, {}]", v.lo, v.hi));
    }
    Ok(Report::new(
        config,
        AnalyzeResults {
            interval: RadialInterval { lo, hi },
            condition,
        },
        diagnostics,
    ))
}

pub fn verify(config: &RunConfig) -> Result<Report<VerificationReport>, CliError> {
    let spec = config.spec()?;
    let r = single_radius(config)?;
    let ladder = config
        .ladder
        .clone()
        .ok_or_else(|| CliError::Usage("verify needs an epsilon ladder".into()))?;
    let u1 = config.u1.unwrap_or(std::f64::consts::FRAC_PI_4);
    let report = verification_suite(&spec, r, u1, &ladder)?;
    let mut diagnostics = Vec::new();
    for c in &report.checks {
        if c.exact {
            diagnostics.push(format!(
                "{}: exact to rounding at every ladder point (fast path)",
                c.name
            ));
        }
        match &c.detail {
            CheckDetail::VolumeCoefficient {
                fit, decay_order, ..
            } => {
                if fit.rel_discrepancy.is_none() {
                    diagnostics.push(format!(
                        "{}: c_analytic = 0, measured c = {:e}",
                        c.name, fit.c_meas
                    ));
                    if let Some(p) = decay_order {
                        diagnostics.push(format!("{}: gap decays with order {p:.3}", c.name));
                    }
                }
                if fit.noise_limited {
                    diagnostics.push(format!("{}: gaps are at the rounding floor", c.name));
                }
            }
            CheckDetail::Order(rep) if !rep.exact && rep.usable < 3 && rep.passed => {
                diagnostics.push(format!(
                    "{}: falls below the noise floor after {} ladder points",
                    c.name, rep.usable
                ));
            }
            _ => {}
        }
        if !c.passed {
            diagnostics.push(format!("{}: FAILED", c.name));
        }
    }
    Ok(Report::new(config, report, diagnostics))
}

pub fn certify(config: &RunConfig) -> Result<Report<CertifyResults>, CliError> {
    let spec = config.spec()?;
    let r = single_radius(config)?;
    let eps = config
        .eps
        .ok_or_else(|| CliError::Usage("certify needs --eps".into()))?;
    let tol = Tolerance::new(
        config.tolerances.quadrature_abs,
        config.tolerances.quadrature_rel,
    );
    match certify_with(&spec, r, eps, tol) {
        Ok(certificate) => {
            let diagnostics = vec![format!(
                "volume gap {:e} vs predicted {:e} (relative error {:.3e})",
                certificate.volume_gap, certificate.predicted_gap, certificate.prediction_error
            )];
            Ok(Report::new(
                config,
                CertifyResults::Certified {
                    certificate: Box::new(certificate),
                },
                diagnostics,
            ))
        }
        Err(Error::Refused { r, phi }) => {
            let diagnostics = vec![format!(
                "refused: Phi({r}) = {phi:e} is not strictly negative"
            )];
            Ok(Report::new(
                config,
                CertifyResults::Refused { r, phi },
                diagnostics,
            ))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn ball(config: &RunConfig) -> Result<Report<BallResults>, CliError> {
    let spec = config.spec()?;
    let radii = if config.radii.is_empty() {
        let (lo, hi) = config.query_interval(&spec);
        let k = config.grid_size.unwrap_or(11);
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    } else {
        config.radii.clone()
    };
    let rows = radii
        .iter()
        .map(|&r| {
            Ok(BallRow {
                r,
                f: spec.f_value(r)?,
                phi: spec.phi_stability(r)?,
                g: g_weight(&spec, r)?.g,
                area: sphere_area(&spec, r)?,
                volume: ball_volume(&spec, r)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Report::new(config, BallResults { rows }, Vec::new()))
}

pub fn run_selfcheck(config: &RunConfig) -> Result<Report<SelfcheckResults>, CliError> {
    let checks = selfcheck()?;
    let diagnostics = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: error {:e} exceeds {:e}", c.name, c.error, c.tolerance))
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report::new(
        config,
        SelfcheckResults { passed, checks },
        diagnostics,
    ))
}

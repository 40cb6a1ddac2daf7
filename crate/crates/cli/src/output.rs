//! JSON, CSV and text renderings of a finished command.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use warpiso_core::analysis::CheckDetail;

use crate::commands::{CertifyResults, Outcome};
use crate::config::Format;
use crate::error::CliError;

/// Pretty JSON with every float written with 17 significant digits.
struct SigDigits<'a>(PrettyFormatter<'a>);

impl Formatter for SigDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SigDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

#[derive(Serialize)]
struct ScanRow {
    r: f64,
    phi: f64,
    violated: bool,
}

pub fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => match outcome {
            Outcome::Analyze(r) => to_json(r),
            Outcome::Verify(r) => to_json(r),
            Outcome::Certify(r) => to_json(r),
            Outcome::Ball(r) => to_json(r),
            Outcome::Selfcheck(r) => to_json(r),
        },
        Format::Csv => match outcome {
            Outcome::Analyze(r) => {
                let c = &r.results.condition;
                to_csv(
                    c.profile
                        .radii
                        .iter()
                        .zip(&c.profile.phi)
                        .map(|(&r, &phi)| ScanRow {
                            r,
                            phi,
                            violated: phi < -c.tol,
                        }),
                )
            }
            Outcome::Ball(r) => to_csv(r.results.rows.iter()),
            _ => Err(CliError::Usage(
                "csv output is only available for analyze and ball".into(),
            )),
        },
        Format::Text => Ok(text(outcome).into_bytes()),
    }
}

fn text(outcome: &Outcome) -> String {
    let mut s = String::new();
    match outcome {
        Outcome::Analyze(r) => {
            let c = &r.results.condition;
            let iv = r.results.interval;
            let _ = writeln!(
                s,
                "stability condition on [{}, {}]: {:?}",
                iv.lo, iv.hi, c.status
            );
            let _ = writeln!(
                s,
                "grid points: {}  tolerance: {}",
                c.profile.radii.len(),
                c.tol
            );
            for v in &c.profile.violations {
                let _ = writeln!(s, "  violated on [{:.12}, {:.12}]", v.lo, v.hi);
            }
        }
        Outcome::Verify(r) => {
            let v = &r.results;
            let _ = writeln!(
                s,
                "order-law battery at r = {}, n = {}, u1 = {:.6}",
                v.r, v.n, v.u1
            );
            let _ = writeln!(
                s,
                "{:<24} {:>12} {:>10} {:>7}  result",
                "check", "expected", "measured", "points"
            );
            for c in &v.checks {
                let (expected, measured, points) = match &c.detail {
                    CheckDetail::Order(rep) => (
                        format!("{:?}", rep.expected).to_lowercase(),
                        rep.slope.map_or("-".into(), |p| format!("{p:.3}")),
                        rep.usable.to_string(),
                    ),
                    CheckDetail::VolumeCoefficient { fit, .. } => (
                        format!("{:.6e}", fit.c_analytic),
                        format!("{:.6e}", fit.c_meas),
                        fit.usable.to_string(),
                    ),
                    CheckDetail::Series { report, .. } => (
                        "err<=1e-4".into(),
                        format!("{:.1e}", report.linear_error.max(report.quadratic_error)),
                        report.ladder.len().to_string(),
                    ),
                };
                let verdict = match (c.passed, c.exact) {
                    (true, true) => "pass (exact)",
                    (true, false) => "pass",
                    _ => "FAIL",
                };
                let _ = writeln!(
                    s,
                    "{:<24} {:>12} {:>10} {:>7}  {verdict}",
                    c.name, expected, measured, points
                );
            }
        }
        Outcome::Certify(r) => match &r.results {
            CertifyResults::Certified { certificate: c } => {
                let _ = writeln!(
                    s,
                    "certificate at r = {}, eps = {}",
                    c.inputs.r, c.inputs.eps
                );
                for (k, v) in [
                    ("Phi(r)", c.phi),
                    ("ball volume", c.ball_volume),
                    ("volume (flux)", c.volume_flux),
                    ("volume (radial)", c.volume_radial),
                    ("volume gap", c.volume_gap),
                    ("predicted gap", c.predicted_gap),
                    ("prediction error", c.prediction_error),
                    ("area defect", c.area_defect),
                    ("area defect ratio", c.area_defect_ratio),
                ] {
                    let _ = writeln!(s, "  {k:<18} {v:.12e}");
                }
            }
            CertifyResults::Refused { r, phi } => {
                let _ = writeln!(
                    s,
                    "refused at r = {r}: Phi = {phi:e} is not strictly negative"
                );
            }
        },
        Outcome::Ball(r) => {
            let _ = writeln!(
                s,
                "{:>12} {:>14} {:>14} {:>14} {:>14} {:>14}",
                "r", "f", "Phi", "g", "area", "volume"
            );
            for row in &r.results.rows {
                let _ = writeln!(
                    s,
                    "{:>12.6} {:>14.8e} {:>14.6e} {:>14.8e} {:>14.8e} {:>14.8e}",
                    row.r, row.f, row.phi, row.g, row.area, row.volume
                );
            }
        }
        Outcome::Selfcheck(r) => {
            let failed = r.results.checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(s, "{} checks, {} failed", r.results.checks.len(), failed);
            for c in &r.results.checks {
                let _ = writeln!(
                    s,
                    "  {:<40} {:.2e}  {}",
                    c.name,
                    c.error,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
        }
    }
    s
}

//! Command-line arguments and the validated run configuration.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use warpiso_core::perturbation::default_ladder;
use warpiso_core::{Bindings, Preset, RadialInterval, WarpDescriptor, WarpSpec};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "warpiso",
    version,
    about = "Isoperimetric stability checks in warped product metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan Φ(r) over an interval and report where the stability condition fails
    Analyze(AnalyzeArgs),
    /// Run the order-law battery for the perturbed sphere of radius r
    Verify(VerifyArgs),
    /// Certify that a perturbed sphere encloses more volume than the geodesic ball
    Certify(CertifyArgs),
    /// Tabulate f, Φ, g, sphere area and ball volume
    Ball(BallArgs),
    /// Run the built-in invariant battery
    Selfcheck(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Euclidean,
    Spaceform,
    Ads,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("metric").required(true).args(["preset", "f2", "f"])))]
pub struct MetricArgs {
    /// Built-in metric family
    #[arg(long, value_enum)]
    pub preset: Option<PresetName>,
    /// Expression for f²(r)
    #[arg(long, value_name = "EXPR")]
    pub f2: Option<String>,
    /// Expression for f(r)
    #[arg(long, value_name = "EXPR")]
    pub f: Option<String>,
    /// Mass parameter m
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Curvature parameter kappa
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Extra expression parameter, NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Dimension of the geodesic spheres
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Lower end of the radial interval
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Upper end of the radial interval
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Lower limit of radial volume integrals (expressions only)
    #[arg(long)]
    pub volume_origin: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (json when --out is given, text otherwise)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Number of scan points
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Φ counts as violated only below -tol
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tol: f64,
    /// Bisection tolerance for violation endpoints, relative to the interval width
    #[arg(long, default_value_t = 1e-10)]
    pub bisect_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Base radius
    #[arg(long)]
    pub r: f64,
    /// Colatitude for the pointwise checks
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub u1: f64,
    /// Comma-separated ε ladder, largest first (default r·2^-4 … r·2^-10)
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Base radius
    #[arg(long)]
    pub r: f64,
    /// Perturbation size, at most 0.1·r
    #[arg(long)]
    pub eps: f64,
    /// Absolute quadrature tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub quad_abs_tol: f64,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub quad_rel_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BallArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Radius to tabulate (repeatable); without it the table spans [r-min, r-max]
    #[arg(long = "r")]
    pub radii: Vec<f64>,
    /// Number of rows when tabulating an interval
    #[arg(long, default_value_t = 11)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Where the warping function comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSource {
    Preset {
        preset: Preset,
    },
    Expression {
        text: String,
        is_squared: bool,
        params: Bindings,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub condition: f64,
    pub bisect_rel: f64,
    pub quadrature_abs: f64,
    pub quadrature_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            condition: 0.0,
            bisect_rel: 1e-10,
            quadrature_abs: 1e-12,
            quadrature_rel: 1e-12,
        }
    }
}

/// Everything a command needs, independent of how it was given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub metric: MetricSource,
    pub n: usize,
    /// Validity interval for expressions; query interval for analyze and ball.
    pub interval: Option<RadialInterval>,
    pub volume_origin: Option<f64>,
    pub radii: Vec<f64>,
    pub eps: Option<f64>,
    pub ladder: Option<Vec<f64>>,
    pub u1: Option<f64>,
    pub grid_size: Option<usize>,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_param(text: &str) -> Result<(String, f64), CliError> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("--param expects NAME=VALUE, got `{text}`")))?;
    let name = name.trim();
    if name.is_empty()
        || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        || name == "r"
    {
        return Err(usage(format!("invalid parameter name `{name}`")));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value for parameter `{name}`")))?;
    Ok((name.to_string(), value))
}

impl MetricArgs {
    fn source(&self) -> Result<MetricSource, CliError> {
        let need = |v: Option<f64>, flag: &str, preset: &str| {
            v.ok_or_else(|| usage(format!("preset {preset} requires --{flag}")))
        };
        if let Some(p) = self.preset {
            if !self.params.is_empty() || self.volume_origin.is_some() {
                return Err(usage(
                    "--param and --volume-origin apply to expressions only",
                ));
            }
            let preset = match p {
                PresetName::Euclidean => Preset::Euclidean,
                PresetName::Spaceform => Preset::SpaceForm {
                    kappa: need(self.kappa, "kappa", "spaceform")?,
                },
                PresetName::Ads => Preset::Ads {
                    m: need(self.m, "m", "ads")?,
                    kappa: need(self.kappa, "kappa", "ads")?,
                },
                PresetName::Paper => Preset::Paper {
                    m: need(self.m, "m", "paper")?,
                },
            };
            return Ok(MetricSource::Preset { preset });
        }
        let (text, is_squared) = match (&self.f2, &self.f) {
            (Some(t), None) => (t.clone(), true),
            (None, Some(t)) => (t.clone(), false),
            _ => return Err(usage("exactly one of --preset, --f2, --f is required")),
        };
        let mut params = Bindings::new();
        for (name, v) in [("m", self.m), ("kappa", self.kappa)] {
            if let Some(v) = v {
                params.insert(name.to_string(), v);
            }
        }
        for p in &self.params {
            let (k, v) = parse_param(p)?;
            params.insert(k, v);
        }
        Ok(MetricSource::Expression {
            text,
            is_squared,
            params,
        })
    }

    fn interval(&self) -> Result<Option<RadialInterval>, CliError> {
        match (self.r_min, self.r_max) {
            (Some(lo), Some(hi)) => Ok(Some(RadialInterval { lo, hi })),
            (None, None) => Ok(None),
            _ => Err(usage("--r-min and --r-max must be given together")),
        }
    }
}

impl OutputArgs {
    fn format(&self) -> Format {
        self.format.unwrap_or(if self.out.is_some() {
            Format::Json
        } else {
            Format::Text
        })
    }
}

impl RunConfig {
    fn base(command: &str, metric: &MetricArgs, output: &OutputArgs) -> Result<Self, CliError> {
        Ok(RunConfig {
            command: command.to_string(),
            metric: metric.source()?,
            n: metric.n,
            interval: metric.interval()?,
            volume_origin: metric.volume_origin,
            radii: Vec::new(),
            eps: None,
            ladder: None,
            u1: None,
            grid_size: None,
            tolerances: Tolerances::default(),
            output: output.out.clone(),
            format: output.format(),
        })
    }

    pub fn from_command(cmd: &Command) -> Result<Self, CliError> {
        let cfg = match cmd {
            Command::Analyze(a) => {
                let mut c = Self::base("analyze", &a.metric, &a.output)?;
                c.grid_size = Some(a.grid);
                c.tolerances.condition = a.tol;
                c.tolerances.bisect_rel = a.bisect_tol;
                c
            }
            Command::Verify(a) => {
                let mut c = Self::base("verify", &a.metric, &a.output)?;
                c.radii = vec![a.r];
                c.u1 = Some(a.u1);
                c.ladder = Some(a.ladder.clone().unwrap_or_else(|| default_ladder(a.r)));
                c
            }
            Command::Certify(a) => {
                let mut c = Self::base("certify", &a.metric, &a.output)?;
                c.radii = vec![a.r];
                c.eps = Some(a.eps);
                c.tolerances.quadrature_abs = a.quad_abs_tol;
                c.tolerances.quadrature_rel = a.quad_rel_tol;
                c
            }
            Command::Ball(a) => {
                let mut c = Self::base("ball", &a.metric, &a.output)?;
                c.radii = a.radii.clone();
                c.grid_size = Some(a.grid);
                c
            }
            Command::Selfcheck(o) => RunConfig {
                command: "selfcheck".into(),
                metric: MetricSource::Preset {
                    preset: Preset::Euclidean,
                },
                n: 2,
                interval: None,
                volume_origin: None,
                radii: Vec::new(),
                eps: None,
                ladder: None,
                u1: None,
                grid_size: None,
                tolerances: Tolerances::default(),
                output: o.out.clone(),
                format: o.format(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.condition >= 0.0 && t.condition.is_finite()) {
            return Err(usage("--tol must be a finite non-negative number"));
        }
        for (name, v) in [
            ("bisect", t.bisect_rel),
            ("quadrature abs", t.quadrature_abs),
            ("quadrature rel", t.quadrature_rel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{name} tolerance must be positive")));
            }
        }
        if self.n == 0 {
            return Err(usage("--n must be at least 1"));
        }
        if let Some(g) = self.grid_size {
            if g < 2 {
                return Err(usage("--grid must be at least 2"));
            }
        }
        if let Some(l) = &self.ladder {
            if l.len() < 5 || !l.windows(2).all(|w| w[1] < w[0]) || !l.iter().all(|e| *e > 0.0) {
                return Err(usage(
                    "--ladder needs at least 5 positive, strictly decreasing values",
                ));
            }
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(usage("radii must be positive"));
        }
        if self.format == Format::Csv && !matches!(self.command.as_str(), "analyze" | "ball") {
            return Err(usage(format!(
                "csv output is only available for analyze and ball, not {}",
                self.command
            )));
        }
        if matches!(self.metric, MetricSource::Expression { .. })
            && self.command != "selfcheck"
            && self.interval.is_none()
        {
            return Err(usage(
                "expression metrics need --r-min and --r-max (the validity interval)",
            ));
        }
        if self.command == "ball" && self.radii.is_empty() && self.interval.is_none() {
            return Err(usage("ball needs --r or --r-min/--r-max"));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<WarpSpec, CliError> {
        let spec = match &self.metric {
            MetricSource::Preset { preset } => WarpSpec::preset(*preset, self.n)?,
            MetricSource::Expression {
                text,
                is_squared,
                params,
            } => {
                let iv = self
                    .interval
                    .ok_or_else(|| usage("expression metrics need --r-min and --r-max"))?;
                WarpSpec::new(WarpDescriptor {
                    expression: text.clone(),
                    is_squared: *is_squared,
                    params: params.clone(),
                    n: self.n,
                    r_min: iv.lo,
                    r_max: iv.hi,
                    volume_origin: self.volume_origin.unwrap_or(0.0),
                    preset: None,
                })?
            }
        };
        Ok(spec)
    }

    /// Interval to scan or tabulate: the given one, else the validity interval.
    pub fn query_interval(&self, spec: &WarpSpec) -> (f64, f64) {
        self.interval
            .map_or_else(|| spec.interval(), |iv| (iv.lo, iv.hi))
    }
}

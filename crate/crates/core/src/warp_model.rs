//! The warped product metric `ds² = dr²/f²(r) + r²·dσ²` and its stability
//! function `Φ(r) = f f'/r + (1 - f²)/r²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};

/// Number of points in the positivity check run at construction.
const POSITIVITY_GRID: usize = 4096;

/// The shipped metric families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Preset {
    /// f ≡ 1.
    Euclidean,
    /// f² = 1 + κr².
    SpaceForm { kappa: f64 },
    /// f² = 1 - m/r + κr², restricted to radii past the horizon.
    Ads { m: f64, kappa: f64 },
    /// f² = 1 + m/(r+1), the family violating the stability condition.
    Paper { m: f64 },
}

impl Preset {
    pub const NAMES: [&'static str; 4] = ["euclidean", "spaceform", "ads", "paper"];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Euclidean => "euclidean",
            Preset::SpaceForm { .. } => "spaceform",
            Preset::Ads { .. } => "ads",
            Preset::Paper { .. } => "paper",
        }
    }

    /// Expression text and whether it describes f² (true) or f (false).
    pub fn expression(&self) -> (&'static str, bool) {
        match self {
            Preset::Euclidean => ("1", false),
            Preset::SpaceForm { .. } => ("1 + kappa*r^2", true),
            Preset::Ads { .. } => ("1 - m/r + kappa*r^2", true),
            Preset::Paper { .. } => ("1 + m/(r+1)", true),
        }
    }

    pub fn bindings(&self) -> Bindings {
        let pairs: Vec<(&str, f64)> = match *self {
            Preset::Euclidean => vec![],
            Preset::SpaceForm { kappa } => vec![("kappa", kappa)],
            Preset::Ads { m, kappa } => vec![("m", m), ("kappa", kappa)],
            Preset::Paper { m } => vec![("m", m)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Default validity interval and volume origin.
    pub fn domain(&self) -> Result<(f64, f64, f64)> {
        const LO: f64 = 1e-3;
        const HI: f64 = 1e3;
        match *self {
            Preset::Euclidean | Preset::Paper { .. } => Ok((LO, HI, 0.0)),
            Preset::SpaceForm { kappa } if kappa < 0.0 => Ok((LO, 0.999 / (-kappa).sqrt(), 0.0)),
            Preset::SpaceForm { .. } => Ok((LO, HI, 0.0)),
            Preset::Ads { m, kappa } => {
                let horizon = ads_horizon(m, kappa)?;
                let lo = if horizon > 0.0 { 1.1 * horizon } else { LO };
                Ok((lo, HI.max(10.0 * lo), lo))
            }
        }
    }
}

/// Largest positive root of κr³ + r - m (zero of f² = 1 - m/r + κr²), or 0 when
/// there is none.
pub fn ads_horizon(m: f64, kappa: f64) -> Result<f64> {
    if kappa < 0.0 {
        return Err(Error::Invalid("ads preset requires kappa >= 0".into()));
    }
    if m <= 0.0 {
        return Ok(0.0);
    }
    // The cubic is increasing for kappa >= 0 with value -m at 0 and >= 0 at m.
    let h = |r: f64| kappa * r * r * r + r - m;
    let (mut lo, mut hi) = (0.0, m);
    while hi - lo > 1e-15 * m {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Serializable description of a metric, enough to rebuild a [`WarpSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpDescriptor {
    pub expression: String,
    pub is_squared: bool,
    pub params: Bindings,
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Lower limit of the radial volume integral; 0 unless f² vanishes near the origin.
    pub volume_origin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

/// A validated warping function together with dimension and validity interval.
#[derive(Debug, Clone)]
pub struct WarpSpec {
    descriptor: WarpDescriptor,
    expr: Expr,
    deriv: Expr,
}

impl WarpSpec {
    pub fn new(descriptor: WarpDescriptor) -> Result<Self> {
        let d = &descriptor;
        if d.n == 0 {
            return Err(Error::Invalid(
                "dimension n must be a positive integer".into(),
            ));
        }
        if !(d.r_min > 0.0 && d.r_min < d.r_max && d.r_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "validity interval [{}, {}] must satisfy 0 < r_min < r_max",
                d.r_min, d.r_max
            )));
        }
        if !(0.0..=d.r_min).contains(&d.volume_origin) {
            return Err(Error::Invalid(format!(
                "volume origin {} must lie in [0, r_min]",
                d.volume_origin
            )));
        }
        let expr = Expr::parse(&d.expression)?;
        if let Some(p) = expr
            .params()
            .into_iter()
            .find(|p| !d.params.contains_key(p))
        {
            return Err(Error::Invalid(format!("parameter `{p}` is not bound")));
        }
        let deriv = expr.differentiate()?;
        let spec = WarpSpec {
            descriptor,
            expr,
            deriv,
        };
        spec.check_positive()?;
        Ok(spec)
    }

    pub fn preset(preset: Preset, n: usize) -> Result<Self> {
        let (lo, hi, origin) = preset.domain()?;
        Self::preset_on(preset, n, lo, hi, origin)
    }

    pub fn preset_on(
        preset: Preset,
        n: usize,
        r_min: f64,
        r_max: f64,
        volume_origin: f64,
    ) -> Result<Self> {
        let (text, squared) = preset.expression();
        WarpSpec::new(WarpDescriptor {
            expression: text.to_string(),
            is_squared: squared,
            params: preset.bindings(),
            n,
            r_min,
            r_max,
            volume_origin,
            preset: Some(preset),
        })
    }

    fn check_positive(&self) -> Result<()> {
        let (lo, hi) = self.interval();
        let geometric = hi / lo > 100.0;
        let k = POSITIVITY_GRID - 1;
        (0..POSITIVITY_GRID).into_par_iter().try_for_each(|i| {
            let t = i as f64 / k as f64;
            let r = if geometric {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            };
            self.f_unchecked(r).map(|_| ())
        })
    }

    pub fn descriptor(&self) -> &WarpDescriptor {
        &self.descriptor
    }

    pub fn n(&self) -> usize {
        self.descriptor.n
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.descriptor.r_min, self.descriptor.r_max)
    }

    pub fn volume_origin(&self) -> f64 {
        self.descriptor.volume_origin
    }

    pub fn expression(&self) -> &Expr {
        &self.expr
    }

    pub fn contains(&self, r: f64) -> bool {
        let (lo, hi) = self.interval();
        (lo..=hi).contains(&r)
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            let (lo, hi) = self.interval();
            Err(Error::OutOfInterval { r, lo, hi })
        }
    }

    fn eval(&self, e: &Expr, r: f64) -> Result<f64> {
        e.evaluate(r, &self.descriptor.params)
            .map_err(|source| Error::Eval { r, source })
    }

    /// f(r) without the interval check; still rejects f ≤ 0.
    pub fn f_unchecked(&self, r: f64) -> Result<f64> {
        let v = self.eval(&self.expr, r)?;
        let f = if self.descriptor.is_squared {
            if v <= 0.0 {
                return Err(Error::NotPositive { what: "f^2", at: r });
            }
            v.sqrt()
        } else {
            v
        };
        if f <= 0.0 {
            return Err(Error::NotPositive { what: "f", at: r });
        }
        Ok(f)
    }

    /// (f, f') without the interval check.
    pub fn f_and_prime_unchecked(&self, r: f64) -> Result<(f64, f64)> {
        let f = self.f_unchecked(r)?;
        let d = self.eval(&self.deriv, r)?;
        let fp = if self.descriptor.is_squared {
            d / (2.0 * f)
        } else {
            d
        };
        Ok((f, fp))
    }

    /// (f², f f') evaluated directly from the expression, avoiding a square
    /// root round trip when f² is supplied.
    fn square_and_half_derivative(&self, r: f64) -> Result<(f64, f64)> {
        if self.descriptor.is_squared {
            let f2 = self.eval(&self.expr, r)?;
            if f2 <= 0.0 {
                return Err(Error::NotPositive { what: "f^2", at: r });
            }
            Ok((f2, 0.5 * self.eval(&self.deriv, r)?))
        } else {
            let (f, fp) = self.f_and_prime_unchecked(r)?;
            Ok((f * f, f * fp))
        }
    }

    pub fn f_value(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        self.f_unchecked(r)
    }

    pub fn f_prime(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.f_and_prime_unchecked(r)?.1)
    }

    /// Φ(r) = f f'/r + (1 - f²)/r².
    pub fn phi_stability(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let (f2, ffp) = self.square_and_half_derivative(r)?;
        Ok(ffp / r + (1.0 - f2) / (r * r))
    }

    /// f² - r f f', which equals (φ')² - φ''φ for the metric written as
    /// dr̃² + φ²(r̃) dσ².
    pub fn alternate_form_value(&self, r: f64) -> Result<AlternateFormCondition> {
        self.check_radius(r)?;
        let (f2, ffp) = self.square_and_half_derivative(r)?;
        Ok(AlternateFormCondition {
            r,
            value: f2 - r * ffp,
        })
    }

    /// Scans Φ over `interval` and reports whether Φ ≥ -tol holds everywhere.
    pub fn glw_condition(
        &self,
        interval: (f64, f64),
        opts: &ScanOptions,
    ) -> Result<ConditionReport> {
        let profile = self.scan(interval, opts)?;
        let status = if profile.violations.is_empty() {
            ConditionStatus::Holds
        } else {
            ConditionStatus::Violated
        };
        Ok(ConditionReport {
            status,
            tol: opts.tol,
            profile,
        })
    }

    pub fn scan(&self, (lo, hi): (f64, f64), opts: &ScanOptions) -> Result<PhiProfile> {
        if !(lo < hi) {
            return Err(Error::Invalid(format!("empty scan interval [{lo}, {hi}]")));
        }
        self.check_radius(lo)?;
        self.check_radius(hi)?;
        if opts.grid_size < 2 {
            return Err(Error::Invalid("scan grid needs at least 2 points".into()));
        }
        let k = (opts.grid_size - 1) as f64;
        let radii: Vec<f64> = (0..opts.grid_size)
            .map(|i| {
                if i == opts.grid_size - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / k
                }
            })
            .collect();
        let phi = radii
            .par_iter()
            .map(|&r| self.phi_stability(r))
            .collect::<Result<Vec<_>>>()?;

        let width_tol = opts.bisect_rel_tol * (hi - lo);
        let bad = |v: f64| v < -opts.tol;
        let mut violations = Vec::new();
        let mut i = 0;
        while i < radii.len() {
            if !bad(phi[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < radii.len() && bad(phi[i + 1]) {
                i += 1;
            }
            let end = i;
            let from = if start == 0 {
                radii[0]
            } else {
                self.refine(radii[start - 1], radii[start], opts.tol, width_tol)?
            };
            let to = if end == radii.len() - 1 {
                radii[end]
            } else {
                self.refine(radii[end], radii[end + 1], opts.tol, width_tol)?
            };
            violations.push(RadialInterval { lo: from, hi: to });
            i += 1;
        }
        Ok(PhiProfile {
            radii,
            phi,
            violations,
        })
    }

    /// Bisects the crossing of Φ + tol = 0 inside [a, b].
    fn refine(&self, mut a: f64, mut b: f64, tol: f64, width: f64) -> Result<f64> {
        let sa = self.phi_stability(a)? + tol < 0.0;
        while b - a > width {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if (self.phi_stability(mid)? + tol < 0.0) == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// The value f² - r f f' at a radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternateFormCondition {
    pub r: f64,
    pub value: f64,
}

impl AlternateFormCondition {
    /// r²Φ(r) implied by the value.
    pub fn implied_r2_phi(&self) -> f64 {
        1.0 - self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub grid_size: usize,
    pub tol: f64,
    /// Bisection stops once the bracket is narrower than this fraction of the scan width.
    pub bisect_rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            grid_size: 512,
            tol: 0.0,
            bisect_rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiProfile {
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
    /// Maximal sub-intervals where Φ < -tol, endpoints refined by bisection.
    pub violations: Vec<RadialInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConditionStatus {
    Holds,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub status: ConditionStatus,
    pub tol: f64,
    pub profile: PhiProfile,
}

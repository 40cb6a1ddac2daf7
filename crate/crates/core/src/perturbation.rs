//! The perturbed geodesic sphere
//!
//! ```text
//! Y(u) = r·σ(u) + (ε + ε²·h¹(sin u₁))·e_{n+1},   h¹(s) = (f²(r) - 1)/(2 r f²(r))·s
//! ```
//!
//! where σ is the standard parametrization of the unit n-sphere with last
//! coordinate sin u₁. The cubic correction that makes Y exactly isometric to
//! the round sphere has no closed form and is omitted, so every comparison
//! against the expansions is an order-of-ε check.
//!
//! Both the metric (a function of |z|) and the offset (a function of u₁ along
//! the last axis) are invariant under rotations fixing e_{n+1}, so all
//! pointwise quantities are evaluated at the representative angles
//! (u₁, 0, …, 0) and every surface integral reduces to a u₁-integral with
//! weight ω_{n-1}.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{ols_line, poly_fit};
use crate::geometry::{
    g_weight_with, metric_at, radial_mass, radial_mass_from_origin, unit_sphere_area, GWeights,
};
use crate::quadrature::{integrate, Tolerance};
use crate::warp_model::WarpSpec;

/// Open grid used by the isometry defect and the star-shapedness check.
pub const ISOMETRY_GRID: usize = 64;
const STAR_GRID: usize = 2048;

/// Largest admissible ε for a base radius r.
pub fn eps_cap(r: f64) -> f64 {
    0.1 * r
}

/// `{r·2^{-k} : k = 4..=10}`, largest first.
pub fn default_ladder(r: f64) -> Vec<f64> {
    (4..=10).map(|k| r * 0.5f64.powi(k)).collect()
}

/// Second-order volume coefficient `-r^{n+1} Φ(r) ω_n / (2(n+1) f³(r))`.
pub fn c_analytic(spec: &WarpSpec, r: f64) -> Result<f64> {
    let phi = spec.phi_stability(r)?;
    let f = spec.f_value(r)?;
    let n = spec.n();
    // + 0.0 turns the -0.0 of a vanishing Φ into 0.0
    Ok(
        -r.powi(n as i32 + 1) * phi * unit_sphere_area(n) / (2.0 * (n as f64 + 1.0) * f.powi(3))
            + 0.0,
    )
}

#[derive(Debug, Clone)]
pub struct PerturbedSphere<'a> {
    spec: &'a WarpSpec,
    r: f64,
    eps: f64,
    include_h1: bool,
    alpha: f64,
    base_mass: f64,
    tol: Tolerance,
}

/// Geometric data at the representative point (u₁, 0, …, 0) of Y.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub u1: f64,
    pub point: DVector<f64>,
    /// Euclidean radius r(ε) = |Y|.
    pub radius: f64,
    /// ρ(ε) = r(ε)²/2.
    pub rho: f64,
    /// ∂Y/∂u_i, i = 1..n.
    pub tangents: Vec<DVector<f64>>,
    /// Outward unit normal in the warped metric.
    pub normal: DVector<f64>,
    /// Conformal Killing field X = f(|Y|)·Y.
    pub killing: DVector<f64>,
    /// Support function g(X, ν).
    pub support: f64,
    /// Pulled-back metric g(∂_i Y, ∂_j Y).
    pub induced: DMatrix<f64>,
    /// sqrt(det induced).
    pub area_density: f64,
    pub orthogonality_residual: f64,
    pub normalization_residual: f64,
}

impl<'a> PerturbedSphere<'a> {
    pub fn new(spec: &'a WarpSpec, r: f64, eps: f64, include_h1: bool) -> Result<Self> {
        Self::with_tolerance(spec, r, eps, include_h1, Tolerance::default())
    }

    pub fn with_tolerance(
        spec: &'a WarpSpec,
        r: f64,
        eps: f64,
        include_h1: bool,
        tol: Tolerance,
    ) -> Result<Self> {
        spec.check_radius(r)?;
        let cap = eps_cap(r);
        if !(eps >= 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be non-negative, got {eps}"
            )));
        }
        if eps > cap {
            return Err(Error::EpsilonTooLarge { eps, cap });
        }
        if !spec.contains(r - cap) || !spec.contains(r + cap) {
            return Err(Error::Invalid(format!(
                "radius {r} is too close to the edge of the validity interval for perturbations up to {cap}"
            )));
        }
        let f_r = spec.f_value(r)?;
        let f2 = f_r * f_r;
        let base_mass = radial_mass_from_origin(spec, r, tol)?;
        Ok(PerturbedSphere {
            spec,
            r,
            eps,
            include_h1,
            alpha: (f2 - 1.0) / (2.0 * f2),
            base_mass,
            tol,
        })
    }

    /// Same base sphere with another ε.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be non-negative, got {eps}"
            )));
        }
        let cap = eps_cap(self.r);
        if eps > cap {
            return Err(Error::EpsilonTooLarge { eps, cap });
        }
        Ok(PerturbedSphere {
            eps,
            ..self.clone()
        })
    }

    pub fn spec(&self) -> &WarpSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn include_h1(&self) -> bool {
        self.include_h1
    }

    /// α = (f²(r) - 1)/(2 f²(r)).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Coefficient of sin u₁ in h¹.
    pub fn h1_coefficient(&self) -> f64 {
        self.alpha / self.r
    }

    fn offset(&self, u1: f64) -> f64 {
        let h1 = if self.include_h1 {
            self.h1_coefficient() * u1.sin()
        } else {
            0.0
        };
        self.eps + self.eps * self.eps * h1
    }

    fn offset_derivative(&self, u1: f64) -> f64 {
        if self.include_h1 {
            self.eps * self.eps * self.h1_coefficient() * u1.cos()
        } else {
            0.0
        }
    }

    /// Y at the angles (u₁, others…); `others` holds u₂..u_n.
    pub fn embed(&self, u1: f64, others: &[f64]) -> Result<DVector<f64>> {
        let n = self.n();
        if others.len() != n - 1 {
            return Err(Error::Invalid(format!(
                "expected {} secondary angles, got {}",
                n - 1,
                others.len()
            )));
        }
        let angles: Vec<f64> = std::iter::once(u1).chain(others.iter().copied()).collect();
        let mut z = DVector::zeros(n + 1);
        let mut cos_prod = self.r;
        for (j, u) in angles.iter().enumerate() {
            z[n - j] = cos_prod * u.sin();
            cos_prod *= u.cos();
        }
        z[0] = cos_prod;
        z[n] += self.offset(u1);
        Ok(z)
    }

    fn representative_point(&self, u1: f64) -> DVector<f64> {
        let n = self.n();
        let mut z = DVector::zeros(n + 1);
        z[0] = self.r * u1.cos();
        z[n] = self.r * u1.sin() + self.offset(u1);
        z
    }

    /// Analytic ∂Y/∂u_i at (u₁, 0, …, 0).
    fn tangents(&self, u1: f64) -> Vec<DVector<f64>> {
        let n = self.n();
        let mut first = DVector::zeros(n + 1);
        first[0] = -self.r * u1.sin();
        first[n] = self.r * u1.cos() + self.offset_derivative(u1);
        let mut out = vec![first];
        for j in 2..=n {
            let mut t = DVector::zeros(n + 1);
            t[n + 1 - j] = self.r * u1.cos();
            out.push(t);
        }
        out
    }

    /// Polar angle ψ = arcsin(Y_{n+1}/|Y|) of the representative point and dψ/du₁.
    pub fn polar_angle(&self, u1: f64) -> (f64, f64) {
        let y = self.representative_point(u1);
        let t = &self.tangents(u1)[0];
        let n = self.n();
        let r2 = y[0] * y[0] + y[n] * y[n];
        (y[n].atan2(y[0]), (y[0] * t[n] - y[n] * t[0]) / r2)
    }

    pub fn sample(&self, u1: f64) -> Result<SurfaceSample> {
        let n = self.n();
        let point = self.representative_point(u1);
        let tangents = self.tangents(u1);
        let metric = metric_at(self.spec, &point)?;

        // Euclidean normal covector: generalized cross product of the tangents.
        let rows = DMatrix::from_fn(n, n + 1, |i, k| tangents[i][k]);
        let mut covector = DVector::zeros(n + 1);
        for k in 0..=n {
            let minor = rows.clone().remove_column(k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            covector[k] = sign * minor.determinant();
        }
        let scale: f64 = tangents.iter().map(|t| t.norm()).product();
        if !(covector.norm() > 1e-12 * scale) {
            return Err(Error::DegenerateTangents { u1 });
        }
        let raised = metric.raise(&covector);
        let mut normal = &raised / metric.norm(&raised);
        if normal.dot(&point) < 0.0 {
            normal = -normal;
        }

        let radius = point.norm();
        let killing = &point * metric.f;
        let support = metric.inner(&killing, &normal);
        let induced = DMatrix::from_fn(n, n, |i, j| metric.inner(&tangents[i], &tangents[j]));
        let area_density = induced.determinant().sqrt();
        let orthogonality_residual = tangents
            .iter()
            .map(|t| metric.inner(t, &normal).abs() / metric.norm(t))
            .fold(0.0, f64::max);
        let normalization_residual = (metric.inner(&normal, &normal) - 1.0).abs();

        Ok(SurfaceSample {
            u1,
            radius,
            rho: 0.5 * radius * radius,
            point,
            tangents,
            normal,
            killing,
            support,
            induced,
            area_density,
            orthogonality_residual,
            normalization_residual,
        })
    }

    /// | |Y| - (r + ε sin u₁ + ε²/(2r)(cos²u₁ + 2α sin²u₁)) |
    pub fn radial_expansion_defect(&self, u1: f64) -> f64 {
        let (s, c, e, r) = (u1.sin(), u1.cos(), self.eps, self.r);
        let expansion = r + e * s + e * e / (2.0 * r) * (c * c + 2.0 * self.alpha * s * s);
        (self.representative_point(u1).norm() - expansion).abs()
    }

    /// Support function g(X, ν) from the warped unit normal.
    pub fn support_function(&self, u1: f64) -> Result<f64> {
        Ok(self.sample(u1)?.support)
    }

    /// | φ - (r + ε sin u₁ + α ε²/r) |
    pub fn support_expansion_defect(&self, u1: f64) -> Result<f64> {
        let expansion = self.r + self.eps * u1.sin() + self.alpha * self.eps * self.eps / self.r;
        Ok((self.support_function(u1)? - expansion).abs())
    }

    /// Support function of the radial graph: φ² = 2ρ - |∇ρ|²/f²(r(ε)), with
    /// the gradient norm taken in the round metric of radius r.
    pub fn support_function_via_rho(&self, u1: f64) -> Result<f64> {
        let y = self.representative_point(u1);
        let t = &self.tangents(u1)[0];
        let radius = y.norm();
        let f = self.spec.f_value(radius)?;
        let drho = y.dot(t);
        let radicand = radius * radius - drho * drho / (self.r * self.r * f * f);
        if radicand < 0.0 {
            return Err(Error::NegativeRadicand {
                u1,
                value: radicand,
            });
        }
        Ok(radicand.sqrt())
    }

    /// Pulled-back metric minus r² times the round metric, max-norm, over an
    /// open grid in u₁.
    pub fn isometry_defect(&self) -> Result<f64> {
        self.isometry_defect_on(ISOMETRY_GRID)
    }

    pub fn isometry_defect_on(&self, grid: usize) -> Result<f64> {
        let r2 = self.r * self.r;
        let mut worst = 0.0f64;
        for k in 0..grid {
            let u1 = -PI / 2.0 + PI * (k as f64 + 0.5) / grid as f64;
            let s = self.sample(u1)?;
            let c2 = u1.cos().powi(2);
            for i in 0..self.n() {
                for j in 0..self.n() {
                    let round = match (i, j) {
                        (0, 0) => r2,
                        (i, j) if i == j => r2 * c2,
                        _ => 0.0,
                    };
                    worst = worst.max((s.induced[(i, j)] - round).abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn surface_area(&self) -> Result<f64> {
        let inner = integrate(
            |u1| Ok(self.sample(u1)?.area_density),
            -PI / 2.0,
            PI / 2.0,
            self.tol,
        )?;
        Ok(unit_sphere_area(self.n() - 1) * inner)
    }

    /// `∫ t^n/f(t) dt` from the volume origin to `radius`, split at the base radius.
    fn mass_to(&self, radius: f64) -> Result<f64> {
        Ok(self.base_mass + radial_mass(self.spec, self.r, radius, self.tol)?)
    }

    /// g(|Y|)·φ at the representative point.
    pub fn gphi(&self, u1: f64) -> Result<f64> {
        let s = self.sample(u1)?;
        let g = self.mass_to(s.radius)? / s.radius.powi(self.n() as i32 + 1);
        Ok(g * s.support)
    }

    /// Checks that the polar angle is strictly increasing in u₁.
    pub fn check_star_shaped(&self) -> Result<()> {
        let mut bad: Option<(f64, f64)> = None;
        for k in 0..STAR_GRID {
            let u1 = -PI / 2.0 + PI * (k as f64 + 0.5) / STAR_GRID as f64;
            if self.polar_angle(u1).1 <= 0.0 {
                bad = Some(bad.map_or((u1, u1), |(a, _)| (a, u1)));
            }
        }
        match bad {
            Some((from, to)) => Err(Error::NotStarShaped { from, to }),
            None => Ok(()),
        }
    }

    /// Enclosed volume from the flux formula ∫_Y g(|Y|)·φ dS.
    pub fn enclosed_volume_flux(&self) -> Result<f64> {
        self.check_star_shaped()?;
        let n = self.n() as i32;
        let inner = integrate(
            |u1| {
                let s = self.sample(u1)?;
                let g = self.mass_to(s.radius)? / s.radius.powi(n + 1);
                Ok(g * s.support * s.area_density)
            },
            -PI / 2.0,
            PI / 2.0,
            self.tol,
        )?;
        Ok(unit_sphere_area(self.n() - 1) * inner)
    }

    fn radial_integral(&self, subtract_base: bool) -> Result<f64> {
        self.check_star_shaped()?;
        let k = self.n() as i32 - 1;
        let inner = integrate(
            |u1| {
                let (psi, dpsi) = self.polar_angle(u1);
                if dpsi <= 0.0 {
                    return Err(Error::NotStarShaped { from: u1, to: u1 });
                }
                let radius = self.representative_point(u1).norm();
                let mass = if subtract_base {
                    radial_mass(self.spec, self.r, radius, self.tol)?
                } else {
                    self.mass_to(radius)?
                };
                Ok(mass * psi.cos().powi(k) * dpsi)
            },
            -PI / 2.0,
            PI / 2.0,
            self.tol,
        )?;
        Ok(unit_sphere_area(self.n() - 1) * inner)
    }

    /// Enclosed volume by slicing along rays from the origin.
    pub fn enclosed_volume_radial(&self) -> Result<f64> {
        self.radial_integral(false)
    }

    /// Vol(M_ε) - Vol(B(r)), integrating only the mass between S(r) and Y along each ray.
    pub fn volume_gap(&self) -> Result<f64> {
        self.radial_integral(true)
    }

    pub fn ball_volume(&self) -> f64 {
        unit_sphere_area(self.n()) * self.base_mass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGapFit {
    pub r: f64,
    pub n: usize,
    pub ladder: Vec<f64>,
    pub gaps: Vec<f64>,
    pub flux_volumes: Vec<f64>,
    pub radial_volumes: Vec<f64>,
    pub ball_volume: f64,
    /// Gaps at or below this magnitude are treated as rounding noise.
    pub noise_floor: f64,
    pub usable: usize,
    /// Intercept of the fit gap/ε² ≈ c + d·ε + e·ε².
    pub c_meas: f64,
    pub c_analytic: f64,
    pub abs_discrepancy: f64,
    /// `None` when c_analytic is zero.
    pub rel_discrepancy: Option<f64>,
    /// Fewer than three gaps rose above the noise floor; c_meas is then the
    /// mean of gap/ε² over the whole ladder.
    pub noise_limited: bool,
    /// Largest relative flux-vs-radial disagreement over the ladder.
    pub max_oracle_disagreement: f64,
}

/// Measures Vol(M_ε) - Vol(B(r)) over an ε ladder (with h¹) and extracts the ε² coefficient.
pub fn volume_gap_coefficient(spec: &WarpSpec, r: f64, ladder: &[f64]) -> Result<VolumeGapFit> {
    if ladder.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            found: ladder.len(),
        });
    }
    let base = PerturbedSphere::new(spec, r, 0.0, true)?;
    let rows = ladder
        .par_iter()
        .map(|&eps| {
            let ps = base.with_eps(eps)?;
            Ok((
                ps.volume_gap()?,
                ps.enclosed_volume_flux()?,
                ps.enclosed_volume_radial()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let flux_volumes: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let radial_volumes: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ball_volume = base.ball_volume();
    let noise_floor = 1e3 * f64::EPSILON * ball_volume.abs();

    let (xs, ys): (Vec<f64>, Vec<f64>) = ladder
        .iter()
        .zip(&gaps)
        .filter(|(_, g)| g.abs() > noise_floor)
        .map(|(e, g)| (*e, g / (e * e)))
        .unzip();
    let usable = xs.len();
    let (c_meas, noise_limited) = if usable >= 3 {
        (poly_fit(&xs, &ys, 2)?[0], false)
    } else {
        let all: Vec<f64> = ladder.iter().zip(&gaps).map(|(e, g)| g / (e * e)).collect();
        (all.iter().sum::<f64>() / all.len() as f64, true)
    };
    let c_an = c_analytic(spec, r)?;
    let abs_discrepancy = (c_meas - c_an).abs();
    let rel_discrepancy = (c_an != 0.0).then(|| abs_discrepancy / c_an.abs());
    let max_oracle_disagreement = flux_volumes
        .iter()
        .zip(&radial_volumes)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);

    Ok(VolumeGapFit {
        r,
        n: spec.n(),
        ladder: ladder.to_vec(),
        gaps,
        flux_volumes,
        radial_volumes,
        ball_volume,
        noise_floor,
        usable,
        c_meas,
        c_analytic: c_an,
        abs_discrepancy,
        rel_discrepancy,
        noise_limited,
        max_oracle_disagreement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPhiSeriesReport {
    pub u1: f64,
    pub ladder: Vec<f64>,
    pub linear_measured: f64,
    pub linear_expected: f64,
    pub quadratic_measured: f64,
    pub quadratic_expected: f64,
    /// |measured - expected| / max(|expected|, 1/f(r)).
    pub linear_error: f64,
    /// |measured - expected| / max(|expected|, 1/(r f(r))).
    pub quadratic_error: f64,
}

/// Closed-form first and second Taylor coefficients of g(r(ε))·φ(ε) at fixed u₁.
pub fn gphi_series_coefficients(
    spec: &WarpSpec,
    r: f64,
    u1: f64,
    w: &GWeights,
) -> Result<(f64, f64)> {
    let (f, fp) = spec.f_and_prime_unchecked(r)?;
    let n = spec.n() as f64;
    let alpha = (f * f - 1.0) / (2.0 * f * f);
    let g = w.g;
    let (s2, c2) = (u1.sin().powi(2), u1.cos().powi(2));
    let linear = (1.0 / f - n * g) * u1.sin();
    let bracket = (-(fp * r + n * f) / (f * f * r) + 2.0 * alpha / (f * r)) * s2
        + (1.0 / (f * r) - (n + 1.0) * g / r) * c2
        + g / r * ((n * (n + 1.0) - 2.0 * alpha * (n + 1.0)) * s2 + 2.0 * alpha);
    Ok((linear, 0.5 * bracket))
}

/// Fits g(|Y|)·φ over an ε ladder at fixed u₁ and compares its first two
/// Taylor coefficients with the closed forms.
pub fn gphi_series_check(
    spec: &WarpSpec,
    r: f64,
    u1: f64,
    ladder: &[f64],
) -> Result<GPhiSeriesReport> {
    if ladder.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            found: ladder.len(),
        });
    }
    let base = PerturbedSphere::new(spec, r, 0.0, true)?;
    let a0 = base.gphi(u1)?;
    let ys = ladder
        .iter()
        .map(|&eps| Ok((base.with_eps(eps)?.gphi(u1)? - a0) / eps))
        .collect::<Result<Vec<_>>>()?;
    let coef = poly_fit(ladder, &ys, 3)?;
    let w = g_weight_with(spec, r, base.tol)?;
    let (lin, quad) = gphi_series_coefficients(spec, r, u1, &w)?;
    let f = spec.f_value(r)?;
    Ok(GPhiSeriesReport {
        u1,
        ladder: ladder.to_vec(),
        linear_measured: coef[0],
        linear_expected: lin,
        quadratic_measured: coef[1],
        quadratic_expected: quad,
        linear_error: (coef[0] - lin).abs() / lin.abs().max(1.0 / f),
        quadratic_error: (coef[1] - quad).abs() / quad.abs().max(1.0 / (r * f)),
    })
}

/// Slope of log|gap| against log ε over the gaps above the noise floor.
pub fn gap_decay_order(fit: &VolumeGapFit) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit
        .ladder
        .iter()
        .zip(&fit.gaps)
        .filter(|(_, g)| g.abs() > fit.noise_floor)
        .map(|(e, g)| (e.ln(), g.abs().ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    ols_line(&xs, &ys).ok().map(|l| l.slope)
}

//! Ambient metric tensor, the flux weight g(r), and integrals over round spheres.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::warp_model::WarpSpec;

/// Components of the warped metric at a Cartesian point z:
/// `g_ab = δ_ab + (1/f²(|z|) - 1) z_a z_b / |z|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientMetricTensor {
    pub z: DVector<f64>,
    pub r: f64,
    pub f: f64,
    pub components: DMatrix<f64>,
}

impl AmbientMetricTensor {
    fn radial_factor(&self) -> f64 {
        1.0 / (self.f * self.f) - 1.0
    }

    pub fn inner(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let zv = self.z.dot(v);
        let zw = self.z.dot(w);
        v.dot(w) + self.radial_factor() * zv * zw / (self.r * self.r)
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).sqrt()
    }

    /// Raises an index: returns g⁻¹ c, using `g^ab = δ^ab + (f² - 1) z_a z_b / |z|²`.
    pub fn raise(&self, covector: &DVector<f64>) -> DVector<f64> {
        let zc = self.z.dot(covector);
        covector + &self.z * ((self.f * self.f - 1.0) * zc / (self.r * self.r))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.components.clone().symmetric_eigenvalues().min()
    }
}

pub fn metric_at(spec: &WarpSpec, z: &DVector<f64>) -> Result<AmbientMetricTensor> {
    if z.len() != spec.n() + 1 {
        return Err(Error::Invalid(format!(
            "point has {} coordinates, ambient dimension is {}",
            z.len(),
            spec.n() + 1
        )));
    }
    let r = z.norm();
    let f = spec.f_value(r)?;
    let factor = 1.0 / (f * f) - 1.0;
    let components = DMatrix::identity(z.len(), z.len()) + (z * z.transpose()) * (factor / (r * r));
    Ok(AmbientMetricTensor {
        z: z.clone(),
        r,
        f,
        components,
    })
}

pub fn inner(spec: &WarpSpec, z: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    Ok(metric_at(spec, z)?.inner(v, w))
}

/// Area of the unit k-sphere, `2π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn unit_sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    (std::f64::consts::LN_2 + h * PI.ln() - libm::lgamma(h)).exp()
}

/// `∫_a^b t^n / f(t) dt`.
pub fn radial_mass(spec: &WarpSpec, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    let n = spec.n() as i32;
    integrate(|t| Ok(t.powi(n) / spec.f_unchecked(t)?), a, b, tol)
}

/// `∫ t^n / f(t) dt` from the volume origin to r. The expression must be
/// valid on the whole range, including radii below `r_min` when the origin is 0.
pub fn radial_mass_from_origin(spec: &WarpSpec, r: f64, tol: Tolerance) -> Result<f64> {
    radial_mass(spec, spec.volume_origin(), r, tol)
}

/// g(r) and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GWeights {
    pub r: f64,
    pub g: f64,
    pub g_prime: f64,
    pub g_second: f64,
}

impl GWeights {
    /// Closed-form derivatives for a given g(r).
    pub fn from_value(spec: &WarpSpec, r: f64, g: f64) -> Result<Self> {
        let (f, fp) = spec.f_and_prime_unchecked(r)?;
        let n1 = spec.n() as f64 + 1.0;
        let g_prime = 1.0 / (r * f) - n1 * g / r;
        let g_second =
            -(f + r * fp) / (r * r * f * f) - n1 / (r * r * f) + n1 * (n1 + 1.0) * g / (r * r);
        Ok(GWeights {
            r,
            g,
            g_prime,
            g_second,
        })
    }
}

/// `g(r) = r^{-(n+1)} ∫ t^n/f(t) dt`, integrated from the volume origin.
pub fn g_weight(spec: &WarpSpec, r: f64) -> Result<GWeights> {
    g_weight_with(spec, r, Tolerance::default())
}

pub fn g_weight_with(spec: &WarpSpec, r: f64, tol: Tolerance) -> Result<GWeights> {
    spec.check_radius(r)?;
    let mass = radial_mass_from_origin(spec, r, tol)?;
    let g = mass / r.powi(spec.n() as i32 + 1);
    if g <= 0.0 {
        return Err(Error::NotPositive { what: "g", at: r });
    }
    GWeights::from_value(spec, r, g)
}

/// Volume of the geodesic ball B(r) (of the shell above the volume origin when it is positive).
pub fn ball_volume(spec: &WarpSpec, r: f64) -> Result<f64> {
    ball_volume_with(spec, r, Tolerance::default())
}

pub fn ball_volume_with(spec: &WarpSpec, r: f64, tol: Tolerance) -> Result<f64> {
    spec.check_radius(r)?;
    Ok(unit_sphere_area(spec.n()) * radial_mass_from_origin(spec, r, tol)?)
}

/// Area of the geodesic sphere S(r): its induced metric is r² times the round one.
pub fn sphere_area(spec: &WarpSpec, r: f64) -> Result<f64> {
    spec.check_radius(r)?;
    Ok(unit_sphere_area(spec.n()) * r.powi(spec.n() as i32))
}

/// `∫_{S^n} F(u₁) dS_n = ω_{n-1} ∫_{-π/2}^{π/2} F(u₁) cos^{n-1}u₁ du₁`.
pub fn axisym_integral<F>(f: F, n: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    axisym_integral_with(|u| Ok(f(u)), n, Tolerance::default())
}

pub fn axisym_integral_with<F>(mut f: F, n: usize, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::Invalid("axisymmetric reduction needs n >= 1".into()));
    }
    let k = n as i32 - 1;
    let inner = integrate(
        |u: f64| Ok(f(u)? * u.cos().powi(k)),
        -PI / 2.0,
        PI / 2.0,
        tol,
    )?;
    Ok(unit_sphere_area(n - 1) * inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Bindings;
    use crate::quadrature::composite;
    use crate::warp_model::{Preset, WarpDescriptor};
    use approx::assert_relative_eq;

    fn presets() -> Vec<Preset> {
        vec![
            Preset::Euclidean,
            Preset::SpaceForm { kappa: 1.0 },
            Preset::Ads { m: 1.0, kappa: 1.0 },
            Preset::Paper { m: 1.0 },
        ]
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(0), 2.0, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(1), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(2), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(3), 2.0 * PI * PI, max_relative = 1e-15);
        // ω_k = 2π/(k-1) ω_{k-2}
        for k in 2..40 {
            let lhs = unit_sphere_area(k);
            let rhs = 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
        assert!(unit_sphere_area(400).is_finite());
    }

    #[test]
    fn geodesic_sphere_area_examples() {
        let s = |n| WarpSpec::preset(Preset::Paper { m: 1.0 }, n).unwrap();
        assert_relative_eq!(
            sphere_area(&s(2), 1.0).unwrap(),
            4.0 * PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sphere_area(&s(2), 2.0).unwrap(),
            16.0 * PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sphere_area(&s(3), 1.0).unwrap(),
            2.0 * PI * PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let s = WarpSpec::preset(Preset::Euclidean, 2).unwrap();
        let m = metric_at(&s, &DVector::from_vec(vec![0.3, -1.0, 2.0])).unwrap();
        assert!((m.components - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn radial_direction_has_length_one_over_f() {
        let s = WarpSpec::preset(Preset::Paper { m: 1.0 }, 2).unwrap();
        let z = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_relative_eq!(
            inner(&s, &z, &z, &z).unwrap(),
            1.0 / 1.5,
            max_relative = 1e-15
        );

        let z = DVector::from_vec(vec![0.6, -1.2, 0.9]);
        let m = metric_at(&s, &z).unwrap();
        let unit = &z / z.norm();
        let f = s.f_value(z.norm()).unwrap();
        assert!((m.inner(&unit, &unit) - 1.0 / (f * f)).abs() < 1e-12);
        let v = DVector::from_vec(vec![1.2, 0.6, 0.0]);
        let w = DVector::from_vec(vec![0.0, 0.75, 1.0]);
        assert!(z.dot(&v).abs() < 1e-15 && z.dot(&w).abs() < 1e-15);
        assert!((m.inner(&v, &w) - v.dot(&w)).abs() < 1e-12);
        // inner agrees with the explicit component matrix, raise inverts it
        assert!((m.inner(&v, &unit) - (v.transpose() * &m.components * &unit)[0]).abs() < 1e-14);
        let back = &m.components * m.raise(&v);
        assert!((back - v).amax() < 1e-14);
    }

    #[test]
    fn metric_rejects_wrong_dimension_and_out_of_range_points() {
        let s = WarpSpec::preset(Preset::Paper { m: 1.0 }, 2).unwrap();
        assert!(metric_at(&s, &DVector::from_vec(vec![1.0, 0.0])).is_err());
        assert!(metric_at(&s, &DVector::from_vec(vec![0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn euclidean_g_is_constant() {
        for n in 1..5 {
            let s = WarpSpec::preset(Preset::Euclidean, n).unwrap();
            for r in [0.01, 0.5, 3.0] {
                let g = g_weight(&s, r).unwrap();
                assert_relative_eq!(g.g, 1.0 / (n as f64 + 1.0), max_relative = 1e-13);
                assert!(g.g_prime.abs() < 1e-12 && g.g_second.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn g_small_radius_limit() {
        let s = WarpSpec::preset(Preset::Paper { m: 1.0 }, 2).unwrap();
        // f(0) = sqrt(2)
        let g = g_weight(&s, 1e-3).unwrap().g;
        assert_relative_eq!(g, 1.0 / (3.0 * 2f64.sqrt()), max_relative = 1e-3);
    }

    #[test]
    fn paper_g_matches_high_order_fixed_rule() {
        let s = WarpSpec::preset(Preset::Paper { m: 1.0 }, 2).unwrap();
        // 512 panels of a 16-point rule, independent of the doubling loop
        let oracle = composite(
            &mut |t: f64| Ok(t * t / (1.0 + 1.0 / (t + 1.0)).sqrt()),
            0.0,
            1.0,
            512,
        )
        .unwrap();
        let g = g_weight(&s, 1.0).unwrap().g;
        assert_relative_eq!(g, oracle, max_relative = 1e-13);
        assert_relative_eq!(g, 0.265_436_117_924_327_2, max_relative = 1e-12);
        assert_relative_eq!(
            ball_volume(&s, 1.0).unwrap(),
            4.0 * PI * oracle,
            max_relative = 1e-13
        );
    }

    #[test]
    fn ball_volume_examples() {
        let e2 = WarpSpec::preset(Preset::Euclidean, 2).unwrap();
        assert_relative_eq!(
            ball_volume(&e2, 1.0).unwrap(),
            4.0 * PI / 3.0,
            max_relative = 1e-14
        );
        let e1 = WarpSpec::preset(Preset::Euclidean, 1).unwrap();
        assert_relative_eq!(
            ball_volume(&e1, 2.0).unwrap(),
            4.0 * PI,
            max_relative = 1e-14
        );
        for p in presets() {
            let s = WarpSpec::preset(p, 3).unwrap();
            let r = 2.0;
            let g = g_weight(&s, r).unwrap().g;
            let v = ball_volume(&s, r).unwrap();
            assert_relative_eq!(v, g * r.powi(4) * unit_sphere_area(3), max_relative = 1e-12);
        }
    }

    #[test]
    fn g_requires_positive_f_down_to_the_origin() {
        let spec = WarpSpec::new(WarpDescriptor {
            expression: "r - 0.5".into(),
            is_squared: false,
            params: Bindings::new(),
            n: 2,
            r_min: 1.0,
            r_max: 3.0,
            volume_origin: 0.0,
            preset: None,
        })
        .unwrap();
        assert!(matches!(
            g_weight(&spec, 2.0),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn g_derivatives_match_finite_differences() {
        let tight = Tolerance::new(1e-15, 1e-15);
        for p in presets() {
            let s = WarpSpec::preset(p, 2).unwrap();
            for r in [1.2, 2.0, 3.5] {
                let h = 1e-3;
                let g = |x: f64| g_weight_with(&s, x, tight).unwrap().g;
                let w = g_weight_with(&s, r, tight).unwrap();
                let d1 = (g(r - 2.0 * h) - 8.0 * g(r - h) + 8.0 * g(r + h) - g(r + 2.0 * h))
                    / (12.0 * h);
                let d2 = (-g(r - 2.0 * h) + 16.0 * g(r - h) - 30.0 * w.g + 16.0 * g(r + h)
                    - g(r + 2.0 * h))
                    / (12.0 * h * h);
                assert!(
                    (w.g_prime - d1).abs() <= 1e-7 * w.g_prime.abs().max(1.0),
                    "{p:?} {r}"
                );
                assert!(
                    (w.g_second - d2).abs() <= 1e-6 * w.g_second.abs().max(1.0),
                    "{p:?} {r}"
                );
            }
        }
    }

    #[test]
    fn sphere_identities() {
        for n in 1..=5 {
            let omega = unit_sphere_area(n);
            let nf = n as f64;
            let c2 = axisym_integral(|u| u.cos().powi(2), n).unwrap();
            let s2 = axisym_integral(|u| u.sin().powi(2), n).unwrap();
            let s1 = axisym_integral(|u| u.sin(), n).unwrap();
            let one = axisym_integral(|_| 1.0, n).unwrap();
            assert!(
                (c2 - nf / (nf + 1.0) * omega).abs() <= 1e-12 * omega,
                "n={n}"
            );
            assert!((s2 - omega / (nf + 1.0)).abs() <= 1e-12 * omega, "n={n}");
            assert!(s1.abs() <= 1e-12, "n={n}");
            assert!((one - omega).abs() <= 1e-12 * omega, "n={n}");
        }
        assert!(axisym_integral(|_| 1.0, 0).is_err());
    }
}

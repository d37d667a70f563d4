//! Surface scattering. Directions point away from the surface; `n` is the
//! outward geometric normal. Opaque materials are two-sided.

use std::f64::consts::{FRAC_1_PI, PI};

use thiserror::Error;

use crate::math::{vec3, Frame, Rgb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialKind {
    Diffuse,
    Phong { exponent: f64 },
    Mirror,
    Glass { ior: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub kind: MaterialKind,
    pub albedo: Rgb,
    pub emission: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BsdfError {
    #[error("density query on a delta (specular) material")]
    DeltaQuery,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdfSample {
    pub wi: Vec3,
    /// `f_s(wi, wo)`. For delta lobes, the lobe weight divided by `|cos wi|`
    /// so that `value * |cos| / pdf` is the usual throughput factor.
    pub value: Rgb,
    /// Solid-angle density; for delta lobes the lobe selection probability.
    pub pdf: f64,
    pub specular: bool,
}

/// Cosine-weighted direction about +z.
pub fn cosine_hemisphere(u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    vec3(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt())
}

/// Uniform direction about +z.
pub fn uniform_hemisphere(u1: f64, u2: f64) -> Vec3 {
    let z = u1;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u2;
    vec3(r * phi.cos(), r * phi.sin(), z)
}

/// Direction about +z with density `(e + 1) / (2 pi) cos^e`.
pub fn power_cosine(u1: f64, u2: f64, e: f64) -> Vec3 {
    let z = u1.powf(1.0 / (e + 1.0));
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u2;
    vec3(r * phi.cos(), r * phi.sin(), z)
}

/// Unpolarized Fresnel reflectance for a dielectric; `eta = eta_t / eta_i`.
pub fn fresnel_dielectric(cos_i: f64, eta: f64) -> f64 {
    let cos_i = cos_i.abs().min(1.0);
    let sin_t2 = (1.0 - cos_i * cos_i) / (eta * eta);
    if sin_t2 >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin_t2).sqrt();
    let rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    let rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    0.5 * (rs * rs + rp * rp)
}

impl Material {
    pub fn diffuse(name: &str, albedo: Rgb) -> Self {
        Self {
            name: name.into(),
            kind: MaterialKind::Diffuse,
            albedo,
            emission: Vec3::ZERO,
        }
    }

    pub fn with_emission(mut self, emission: Rgb) -> Self {
        self.emission = emission;
        self
    }

    pub fn is_specular(&self) -> bool {
        matches!(self.kind, MaterialKind::Mirror | MaterialKind::Glass { .. })
    }

    pub fn is_emissive(&self) -> bool {
        !self.emission.is_zero()
    }

    /// Checks the per-kind parameter ranges.
    pub fn validate(&self) -> Result<(), String> {
        let a = self.albedo;
        if [a.x, a.y, a.z].iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(format!("albedo of '{}' must lie in [0, 1]", self.name));
        }
        let e = self.emission;
        if [e.x, e.y, e.z].iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(format!("emission of '{}' must be finite and >= 0", self.name));
        }
        match self.kind {
            MaterialKind::Diffuse if a.max_component() >= 1.0 => Err(format!(
                "diffuse albedo of '{}' must be below 1 in every channel",
                self.name
            )),
            MaterialKind::Phong { exponent } if !(exponent >= 1.0 && exponent.is_finite()) => {
                Err(format!("phong exponent of '{}' must be >= 1", self.name))
            }
            MaterialKind::Glass { ior } if !(ior > 1.0 && ior.is_finite()) => {
                Err(format!("index of refraction of '{}' must be > 1", self.name))
            }
            _ => Ok(()),
        }
    }

    /// Survival probability used for Russian roulette after scattering.
    pub fn continuation_probability(&self) -> f64 {
        self.albedo.max_component().clamp(0.05, 1.0)
    }

    /// `f_s(wi, wo)`; zero for delta materials.
    pub fn eval(&self, wi: Vec3, wo: Vec3, n: Vec3) -> Rgb {
        let (ci, co) = (wi.dot(n), wo.dot(n));
        if ci * co <= 0.0 {
            return Vec3::ZERO;
        }
        match self.kind {
            MaterialKind::Diffuse => self.albedo * FRAC_1_PI,
            MaterialKind::Phong { exponent } => {
                let ns = if co > 0.0 { n } else { -n };
                let c = wi.dot(wo.reflect(ns));
                if c <= 0.0 {
                    return Vec3::ZERO;
                }
                self.albedo * ((exponent + 2.0) / (2.0 * PI) * c.powf(exponent))
            }
            MaterialKind::Mirror | MaterialKind::Glass { .. } => Vec3::ZERO,
        }
    }

    /// Solid-angle density of sampling `wi` given `wo`.
    pub fn pdf(&self, wi: Vec3, wo: Vec3, n: Vec3) -> Result<f64, BsdfError> {
        let (ci, co) = (wi.dot(n), wo.dot(n));
        match self.kind {
            MaterialKind::Mirror | MaterialKind::Glass { .. } => Err(BsdfError::DeltaQuery),
            _ if ci * co <= 0.0 => Ok(0.0),
            MaterialKind::Diffuse => Ok(ci.abs() * FRAC_1_PI),
            MaterialKind::Phong { exponent } => {
                let ns = if co > 0.0 { n } else { -n };
                let c = wi.dot(wo.reflect(ns));
                Ok(if c <= 0.0 {
                    0.0
                } else {
                    (exponent + 1.0) / (2.0 * PI) * c.powf(exponent)
                })
            }
        }
    }

    /// Draws `wi` given `wo` from uniforms `u` (the third is used only by
    /// glass to pick a lobe). Returns `None` for absorbed or invalid draws.
    pub fn sample(&self, wo: Vec3, n: Vec3, u: [f64; 3]) -> Option<BsdfSample> {
        let co = wo.dot(n);
        if co == 0.0 {
            return None;
        }
        let ns = if co > 0.0 { n } else { -n };
        match self.kind {
            MaterialKind::Diffuse => {
                let wi = Frame::from_normal(ns).to_world(cosine_hemisphere(u[0], u[1]));
                let c = wi.dot(ns);
                if c <= 0.0 {
                    return None;
                }
                Some(BsdfSample {
                    wi,
                    value: self.albedo * FRAC_1_PI,
                    pdf: c * FRAC_1_PI,
                    specular: false,
                })
            }
            MaterialKind::Phong { exponent } => {
                let r = wo.reflect(ns);
                let wi = Frame::from_normal(r).to_world(power_cosine(u[0], u[1], exponent));
                if wi.dot(ns) <= 0.0 {
                    return None;
                }
                let value = self.eval(wi, wo, n);
                let pdf = self.pdf(wi, wo, n).ok()?;
                if pdf <= 0.0 {
                    return None;
                }
                Some(BsdfSample {
                    wi,
                    value,
                    pdf,
                    specular: false,
                })
            }
            MaterialKind::Mirror => {
                let wi = wo.reflect(ns);
                Some(BsdfSample {
                    wi,
                    value: self.albedo / wi.dot(ns).abs(),
                    pdf: 1.0,
                    specular: true,
                })
            }
            MaterialKind::Glass { ior } => {
                let entering = co > 0.0;
                let eta = if entering { ior } else { 1.0 / ior };
                let cos_o = co.abs();
                let f = fresnel_dielectric(cos_o, eta);
                if u[2] < f {
                    let wi = wo.reflect(ns);
                    Some(BsdfSample {
                        wi,
                        value: self.albedo * (f / cos_o),
                        pdf: f,
                        specular: true,
                    })
                } else {
                    let sin_t2 = (1.0 - cos_o * cos_o) / (eta * eta);
                    let cos_t = (1.0 - sin_t2).max(0.0).sqrt();
                    let wi = (-wo / eta + ns * (cos_o / eta - cos_t)).normalize();
                    Some(BsdfSample {
                        wi,
                        value: self.albedo * ((1.0 - f) / cos_t),
                        pdf: 1.0 - f,
                        specular: true,
                    })
                }
            }
        }
    }
}

//! Emitters and the pinhole camera.

use std::f64::consts::{FRAC_1_PI, PI};

use super::material::cosine_hemisphere;
use super::shape::Ray;
use crate::math::{Frame, Rgb, Vec3};

/// Sphere enclosing the scene; directional lights emit through a disk of
/// its radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere {
    pub center: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Light {
    /// One-sided emitter on the parallelogram `origin + s*u + t*v`,
    /// radiating along `u x v`.
    Area {
        origin: Vec3,
        u: Vec3,
        v: Vec3,
        normal: Vec3,
        area: f64,
        radiance: Rgb,
    },
    /// Parallel light travelling along `direction` with the given
    /// irradiance on a perpendicular plane.
    Directional { direction: Vec3, irradiance: Rgb },
}

/// A light-path origin drawn for light tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub position: Vec3,
    pub direction: Vec3,
    /// `L_e` (radiance, or irradiance for a directional light).
    pub radiance: Rgb,
    /// Area density of `position` times the solid-angle density of
    /// `direction` (disk area density for directional lights).
    pub emission_pdf_w: f64,
    /// Area density of `position` under direct light sampling (1 for a
    /// directional light).
    pub direct_pdf_a: f64,
    pub cos_light: f64,
    pub is_delta: bool,
    pub is_finite: bool,
}

/// A light sample seen from a receiving point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Illumination {
    pub direction: Vec3,
    pub distance: f64,
    pub radiance: Rgb,
    /// Solid-angle density at the receiver.
    pub direct_pdf_w: f64,
    pub emission_pdf_w: f64,
    pub cos_light: f64,
    pub is_delta: bool,
    pub is_finite: bool,
}

impl Light {
    pub fn area_light(origin: Vec3, u: Vec3, v: Vec3, radiance: Rgb) -> Self {
        let c = u.cross(v);
        Light::Area {
            origin,
            u,
            v,
            normal: c.normalize(),
            area: c.length(),
            radiance,
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, Light::Directional { .. })
    }

    /// Total emitted power (per channel).
    pub fn power(&self, bounds: &BoundingSphere) -> Rgb {
        match *self {
            Light::Area { area, radiance, .. } => radiance * (PI * area),
            Light::Directional { irradiance, .. } => {
                irradiance * (PI * bounds.radius * bounds.radius)
            }
        }
    }

    /// Uniform point on an area light as `(position, pdf_area)`.
    pub fn sample_point(&self, s: f64, t: f64) -> Option<(Vec3, f64)> {
        match *self {
            Light::Area {
                origin, u, v, area, ..
            } => Some((origin + u * s + v * t, 1.0 / area)),
            Light::Directional { .. } => None,
        }
    }

    pub fn emit(&self, bounds: &BoundingSphere, u: [f64; 4]) -> Emission {
        match *self {
            Light::Area {
                normal,
                area,
                radiance,
                ..
            } => {
                let (position, _) = self.sample_point(u[0], u[1]).expect("area light");
                let local = cosine_hemisphere(u[2], u[3]);
                let direction = Frame::from_normal(normal).to_world(local);
                let cos_light = local.z;
                Emission {
                    position,
                    direction,
                    radiance,
                    emission_pdf_w: cos_light * FRAC_1_PI / area,
                    direct_pdf_a: 1.0 / area,
                    cos_light,
                    is_delta: false,
                    is_finite: true,
                }
            }
            Light::Directional {
                direction,
                irradiance,
            } => {
                let frame = Frame::from_normal(direction);
                let (dx, dy) = concentric_disk(u[0], u[1]);
                let position = bounds.center
                    + (frame.s * dx + frame.t * dy - direction) * bounds.radius;
                Emission {
                    position,
                    direction,
                    radiance: irradiance,
                    emission_pdf_w: 1.0 / (PI * bounds.radius * bounds.radius),
                    direct_pdf_a: 1.0,
                    cos_light: 1.0,
                    is_delta: true,
                    is_finite: false,
                }
            }
        }
    }

    pub fn illuminate(&self, bounds: &BoundingSphere, receiver: Vec3, u: [f64; 2]) -> Option<Illumination> {
        match *self {
            Light::Area {
                normal,
                area,
                radiance,
                ..
            } => {
                let (p, _) = self.sample_point(u[0], u[1])?;
                let d = p - receiver;
                let dist2 = d.length_squared();
                let distance = dist2.sqrt();
                let direction = d / distance;
                let cos_light = -direction.dot(normal);
                if cos_light <= 0.0 {
                    return None;
                }
                Some(Illumination {
                    direction,
                    distance,
                    radiance,
                    direct_pdf_w: dist2 / (cos_light * area),
                    emission_pdf_w: cos_light * FRAC_1_PI / area,
                    cos_light,
                    is_delta: false,
                    is_finite: true,
                })
            }
            Light::Directional {
                direction,
                irradiance,
            } => Some(Illumination {
                direction: -direction,
                distance: f64::INFINITY,
                radiance: irradiance,
                direct_pdf_w: 1.0,
                emission_pdf_w: 1.0 / (PI * bounds.radius * bounds.radius),
                cos_light: 1.0,
                is_delta: true,
                is_finite: false,
            }),
        }
    }

    /// Radiance leaving a hit point on the light towards `-ray_dir`, with
    /// `(direct_pdf_a, emission_pdf_w)` of that point and direction.
    pub fn radiance_towards(&self, ray_dir: Vec3) -> Option<(Rgb, f64, f64)> {
        match *self {
            Light::Area {
                normal,
                area,
                radiance,
                ..
            } => {
                let cos = -ray_dir.dot(normal);
                if cos <= 0.0 {
                    return None;
                }
                Some((radiance, 1.0 / area, cos * FRAC_1_PI / area))
            }
            Light::Directional { .. } => None,
        }
    }
}

/// Shirley-Chiu mapping of the unit square to the unit disk.
pub fn concentric_disk(u1: f64, u2: f64) -> (f64, f64) {
    let a = 2.0 * u1 - 1.0;
    let b = 2.0 * u2 - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a * a > b * b {
        (a, PI / 4.0 * (b / a))
    } else {
        (b, PI / 2.0 - PI / 4.0 * (a / b))
    };
    (r * phi.cos(), r * phi.sin())
}

/// Scene-level pinhole description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov: f64,
}

/// Camera bound to a film resolution. Raster coordinates run right and
/// down from the top-left corner; pixels have unit area on an image plane
/// at `image_plane_dist`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraView {
    pub position: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub width: usize,
    pub height: usize,
    pub image_plane_dist: f64,
}

/// Projection of a scene point onto the film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraImportance {
    pub raster: (f64, f64),
    pub pixel: usize,
    /// `W_e` for the pixel containing the point's direction.
    pub importance: f64,
    /// Solid-angle density of the eye ray through this direction.
    pub pdf_w: f64,
    pub cos_at_camera: f64,
    pub distance: f64,
}

impl CameraView {
    pub fn new(camera: &Camera, width: usize, height: usize) -> Self {
        let forward = (camera.look_at - camera.position).normalize();
        let right = forward.cross(camera.up).normalize();
        let up = right.cross(forward);
        let half = (camera.fov.to_radians() * 0.5).tan();
        Self {
            position: camera.position,
            forward,
            right,
            up,
            width,
            height,
            image_plane_dist: height as f64 / (2.0 * half),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn generate_ray(&self, x: f64, y: f64) -> Ray {
        let d = self.forward * self.image_plane_dist
            + self.right * (x - 0.5 * self.width as f64)
            + self.up * (0.5 * self.height as f64 - y);
        Ray::new(self.position, d.normalize())
    }

    /// Eye-ray direction density `d^2 / cos^3` for a direction making
    /// `cos` with the optical axis.
    pub fn pdf_w(&self, cos: f64) -> f64 {
        self.image_plane_dist * self.image_plane_dist / (cos * cos * cos)
    }

    pub fn project(&self, point: Vec3) -> Option<CameraImportance> {
        let d = point - self.position;
        let distance = d.length();
        let dir = d / distance;
        let cos = dir.dot(self.forward);
        if cos <= 0.0 {
            return None;
        }
        let scale = self.image_plane_dist / cos;
        let x = dir.dot(self.right) * scale + 0.5 * self.width as f64;
        let y = 0.5 * self.height as f64 - dir.dot(self.up) * scale;
        if !(x >= 0.0 && x < self.width as f64 && y >= 0.0 && y < self.height as f64) {
            return None;
        }
        let pixel = y as usize * self.width + x as usize;
        let pdf_w = self.pdf_w(cos);
        Some(CameraImportance {
            raster: (x, y),
            pixel,
            importance: pdf_w / cos,
            pdf_w,
            cos_at_camera: cos,
            distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::rng::Stream;

    fn camera() -> CameraView {
        CameraView::new(
            &Camera {
                position: vec3(0.0, 0.0, 0.0),
                look_at: vec3(0.0, 0.0, -1.0),
                up: vec3(0.0, 1.0, 0.0),
                fov: 60.0,
            },
            64,
            48,
        )
    }

    #[test]
    fn optical_axis_maps_to_center() {
        let c = camera();
        let p = c.project(vec3(0.0, 0.0, -5.0)).unwrap();
        assert_eq!(p.raster, (32.0, 24.0));
        assert_eq!(p.pixel, 24 * 64 + 32);
        assert!(c.project(vec3(0.0, 0.0, 5.0)).is_none());
    }

    #[test]
    fn projection_inverts_ray_generation() {
        let c = camera();
        let mut rng = Stream::new(1);
        for _ in 0..100 {
            let (x, y) = (rng.uniform() * 64.0, rng.uniform() * 48.0);
            let r = c.generate_ray(x, y);
            let p = c.project(r.at(3.7)).unwrap();
            assert!((p.raster.0 - x).abs() < 1e-9 && (p.raster.1 - y).abs() < 1e-9);
        }
    }

    #[test]
    fn importance_integrates_to_one_per_pixel() {
        // int_pixel W_e cos dw = 1: sample the pixel uniformly in raster
        // space, where dw = cos^3 / d^2 dA.
        let c = camera();
        let mut rng = Stream::new(3);
        let mut sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let (x, y) = (5.0 + rng.uniform(), 7.0 + rng.uniform());
            let r = c.generate_ray(x, y);
            let p = c.project(r.at(2.0)).unwrap();
            let dw_da = 1.0 / c.pdf_w(p.cos_at_camera);
            sum += p.importance * p.cos_at_camera * dw_da;
        }
        assert!((sum / n as f64 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unit_quad_light_has_unit_area_density() {
        let l = Light::area_light(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            Vec3::ONE,
        );
        let mut rng = Stream::new(1);
        for _ in 0..10 {
            let (_, pdf) = l.sample_point(rng.uniform(), rng.uniform()).unwrap();
            assert_eq!(pdf, 1.0);
        }
    }

    #[test]
    fn emitted_power_estimate() {
        let radiance = vec3(2.0, 1.0, 0.5);
        let l = Light::area_light(
            vec3(0.0, 0.0, 0.0),
            vec3(2.0, 0.0, 0.0),
            vec3(0.0, 0.0, 1.5),
            radiance,
        );
        let b = BoundingSphere {
            center: Vec3::ZERO,
            radius: 10.0,
        };
        let mut rng = Stream::new(9);
        let n = 1_000_000;
        let mut sum = Vec3::ZERO;
        for _ in 0..n {
            let e = l.emit(&b, [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()]);
            sum += e.radiance * (e.cos_light / e.emission_pdf_w);
        }
        let est = sum / n as f64;
        let power = l.power(&b);
        assert!((est - power).length() <= 0.005 * power.length());
        assert!((power - radiance * (3.0 * PI)).length() < 1e-12);
    }

    #[test]
    fn concentric_disk_stays_inside() {
        let mut rng = Stream::new(2);
        for _ in 0..1000 {
            let (x, y) = concentric_disk(rng.uniform(), rng.uniform());
            assert!(x * x + y * y <= 1.0 + 1e-12);
        }
    }
}

use crate::math::{vec3, Vec3};

/// Offset applied to ray origins and segment ends to avoid self-hits.
pub const RAY_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Self {
            origin,
            dir,
            t_min: RAY_EPSILON,
            t_max: f64::INFINITY,
        }
    }

    pub fn segment(origin: Vec3, dir: Vec3, t_max: f64) -> Self {
        Self {
            origin,
            dir,
            t_min: RAY_EPSILON,
            t_max,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).length()
    }

    pub fn surface_area(&self) -> f64 {
        let d = self.max - self.min;
        if d.x < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Entry distance of the ray into the box if it enters within
    /// `[t_min, t_max]`.
    #[inline]
    pub fn hit(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (self.min[a] - origin[a]) * inv_dir[a];
            let mut far = (self.max[a] - origin[a]) * inv_dir[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf leaves the bounds unchanged.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
            if t0 > t1 * (1.0 + 4.0 * f64::EPSILON) {
                return None;
            }
        }
        Some(t0)
    }
}

/// Scene primitive. Normals returned by [`Shape::intersect`] are geometric
/// and point outward (for triangles and quads, along the winding normal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Cuboid { min: Vec3, max: Vec3 },
    Triangle { a: Vec3, b: Vec3, c: Vec3 },
    /// Parallelogram `origin + s*u + t*v`, `s, t` in `[0, 1]`.
    Quad { origin: Vec3, u: Vec3, v: Vec3 },
}

impl Shape {
    pub fn bounds(&self) -> Aabb {
        match *self {
            Shape::Sphere { center, radius } => Aabb {
                min: center - Vec3::splat(radius),
                max: center + Vec3::splat(radius),
            },
            Shape::Cuboid { min, max } => Aabb { min, max },
            Shape::Triangle { a, b, c } => Aabb::EMPTY.grow(a).grow(b).grow(c),
            Shape::Quad { origin, u, v } => Aabb::EMPTY
                .grow(origin)
                .grow(origin + u)
                .grow(origin + v)
                .grow(origin + u + v),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Sphere { radius, .. } => 4.0 * std::f64::consts::PI * radius * radius,
            Shape::Cuboid { min, max } => Aabb { min, max }.surface_area(),
            Shape::Triangle { a, b, c } => 0.5 * (b - a).cross(c - a).length(),
            Shape::Quad { u, v, .. } => u.cross(v).length(),
        }
    }

    /// Nearest intersection in `(t_min, t_max)` as `(t, outward normal)`.
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, Vec3)> {
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - center;
                let b = oc.dot(ray.dir);
                let c = oc.length_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // Numerically stable pair of roots.
                let q = if b > 0.0 { -b - sq } else { -b + sq };
                let (mut t0, mut t1) = if q != 0.0 { (c / q, q) } else { (-b, -b) };
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                let t = if t0 > ray.t_min && t0 < ray.t_max {
                    t0
                } else if t1 > ray.t_min && t1 < ray.t_max {
                    t1
                } else {
                    return None;
                };
                Some((t, (ray.at(t) - center) / radius))
            }
            Shape::Cuboid { min, max } => {
                let mut enter = (f64::NEG_INFINITY, 0usize, 0.0);
                let mut exit = (f64::INFINITY, 0usize, 0.0);
                for a in 0..3 {
                    let d = ray.dir[a];
                    let o = ray.origin[a];
                    if d == 0.0 {
                        if o < min[a] || o > max[a] {
                            return None;
                        }
                        continue;
                    }
                    let inv = 1.0 / d;
                    let (tn, tf, sign) = if inv > 0.0 {
                        ((min[a] - o) * inv, (max[a] - o) * inv, -1.0)
                    } else {
                        ((max[a] - o) * inv, (min[a] - o) * inv, 1.0)
                    };
                    if tn > enter.0 {
                        enter = (tn, a, sign);
                    }
                    if tf < exit.0 {
                        exit = (tf, a, -sign);
                    }
                }
                if enter.0 > exit.0 {
                    return None;
                }
                let face = |axis: usize, sign: f64| match axis {
                    0 => vec3(sign, 0.0, 0.0),
                    1 => vec3(0.0, sign, 0.0),
                    _ => vec3(0.0, 0.0, sign),
                };
                // Origin inside the box hits the exit face.
                if enter.0 > ray.t_min && enter.0 < ray.t_max {
                    Some((enter.0, face(enter.1, enter.2)))
                } else if exit.0 > ray.t_min && exit.0 < ray.t_max {
                    Some((exit.0, face(exit.1, exit.2)))
                } else {
                    None
                }
            }
            Shape::Triangle { a, b, c } => {
                let e1 = b - a;
                let e2 = c - a;
                let (t, _, _) = moller_trumbore(ray, a, e1, e2, false)?;
                Some((t, e1.cross(e2).normalize()))
            }
            Shape::Quad { origin, u, v } => {
                let (t, _, _) = moller_trumbore(ray, origin, u, v, true)?;
                Some((t, u.cross(v).normalize()))
            }
        }
    }

    /// Maps `(s, t)` in the unit square uniformly onto the surface of a
    /// quad or triangle, returning the point and outward normal.
    pub fn sample_surface(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        match *self {
            Shape::Quad { origin, u, v } => Some((origin + u * s + v * t, u.cross(v).normalize())),
            Shape::Triangle { a, b, c } => {
                let su = s.sqrt();
                let (b0, b1) = (1.0 - su, t * su);
                let p = a * b0 + b * b1 + c * (1.0 - b0 - b1);
                Some((p, (b - a).cross(c - a).normalize()))
            }
            _ => None,
        }
    }
}

/// Ray/parallelogram or ray/triangle test on `p0 + s*e1 + t*e2`.
#[inline]
fn moller_trumbore(
    ray: &Ray,
    p0: Vec3,
    e1: Vec3,
    e2: Vec3,
    parallelogram: bool,
) -> Option<(f64, f64, f64)> {
    let pvec = ray.dir.cross(e2);
    let det = e1.dot(pvec);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = ray.origin - p0;
    let s = tvec.dot(pvec) * inv;
    if !(0.0..=1.0).contains(&s) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let t2 = ray.dir.dot(qvec) * inv;
    if t2 < 0.0 || (parallelogram && t2 > 1.0) || (!parallelogram && s + t2 > 1.0) {
        return None;
    }
    let t = e2.dot(qvec) * inv;
    if t > ray.t_min && t < ray.t_max {
        Some((t, s, t2))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_from_sphere_center_hits_at_radius() {
        let s = Shape::Sphere {
            center: vec3(1.0, -2.0, 0.5),
            radius: 1.0,
        };
        for d in [
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, -1.0, 0.0),
            vec3(0.3, 0.4, -0.5).normalize(),
        ] {
            let (t, n) = s.intersect(&Ray::new(vec3(1.0, -2.0, 0.5), d)).unwrap();
            assert!((t - 1.0).abs() < 1e-12);
            assert!((n - d).length() < 1e-12);
        }
    }

    #[test]
    fn cuboid_entry_and_exit_faces() {
        let b = Shape::Cuboid {
            min: vec3(0.0, 0.0, 0.0),
            max: vec3(1.0, 2.0, 3.0),
        };
        let (t, n) = b
            .intersect(&Ray::new(vec3(-1.0, 0.5, 0.5), vec3(1.0, 0.0, 0.0)))
            .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(n, vec3(-1.0, 0.0, 0.0));
        let (t, n) = b
            .intersect(&Ray::new(vec3(0.5, 0.5, 0.5), vec3(0.0, 0.0, 1.0)))
            .unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert_eq!(n, vec3(0.0, 0.0, 1.0));
        assert!(b
            .intersect(&Ray::new(vec3(-1.0, 0.5, 0.5), vec3(-1.0, 0.0, 0.0)))
            .is_none());
    }

    #[test]
    fn triangle_and_quad_edges() {
        let tri = Shape::Triangle {
            a: vec3(0.0, 0.0, 0.0),
            b: vec3(1.0, 0.0, 0.0),
            c: vec3(0.0, 1.0, 0.0),
        };
        let down = vec3(0.0, 0.0, -1.0);
        assert!(tri.intersect(&Ray::new(vec3(0.2, 0.2, 1.0), down)).is_some());
        assert!(tri.intersect(&Ray::new(vec3(0.6, 0.6, 1.0), down)).is_none());
        let quad = Shape::Quad {
            origin: vec3(0.0, 0.0, 0.0),
            u: vec3(1.0, 0.0, 0.0),
            v: vec3(0.0, 1.0, 0.0),
        };
        let (t, n) = quad.intersect(&Ray::new(vec3(0.6, 0.6, 1.0), down)).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(n, vec3(0.0, 0.0, 1.0));
        assert!((quad.area() - 1.0).abs() < 1e-15);
    }
}

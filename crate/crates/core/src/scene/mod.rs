//! Scene description: shapes, materials, lights, camera and the text format.

mod bvh;
pub mod fixtures;
mod light;
mod material;
mod parse;
mod shape;

pub use bvh::{brute_force_intersect, Bvh};
pub use light::{
    concentric_disk, BoundingSphere, Camera, CameraImportance, CameraView, Emission,
    Illumination, Light,
};
pub use material::{
    cosine_hemisphere, fresnel_dielectric, power_cosine, uniform_hemisphere, BsdfError,
    BsdfSample, Material, MaterialKind,
};
pub use parse::{parse_scene, ParseError, ParseErrorKind};
pub use shape::{Aabb, Ray, Shape, RAY_EPSILON};

use crate::math::Vec3;

/// A shape with its material and, for area lights, its light index.
#[derive(Debug, Clone, PartialEq)]
pub struct Object {
    pub shape: Shape,
    pub material: usize,
    pub light: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub position: Vec3,
    /// Geometric normal flipped to face the incoming ray.
    pub normal: Vec3,
    /// Outward geometric normal.
    pub outward: Vec3,
    /// Whether the ray arrived on the outward side.
    pub front_face: bool,
    pub material: usize,
    pub shape: usize,
    pub light: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub materials: Vec<Material>,
    pub objects: Vec<Object>,
    pub lights: Vec<Light>,
    pub camera: Camera,
    shapes: Vec<Shape>,
    bvh: Bvh,
    bounds: Aabb,
    sphere: BoundingSphere,
}

impl Scene {
    /// Assembles a scene. Validation of references happens in the parser;
    /// this only builds the acceleration structure and bounds.
    pub fn new(
        materials: Vec<Material>,
        objects: Vec<Object>,
        lights: Vec<Light>,
        camera: Camera,
    ) -> Self {
        let shapes: Vec<Shape> = objects.iter().map(|o| o.shape).collect();
        let bvh = Bvh::build(&shapes);
        let bounds = shapes
            .iter()
            .fold(Aabb::EMPTY, |b, s| b.union(s.bounds()))
            .grow(camera.position);
        let center = bounds.centroid();
        let radius = 0.5 * bounds.diagonal() * 1.01 + 1e-9;
        Self {
            materials,
            objects,
            lights,
            camera,
            shapes,
            bvh,
            bounds,
            sphere: BoundingSphere { center, radius },
        }
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    /// Bounds of all shapes and the camera position.
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn bounding_sphere(&self) -> BoundingSphere {
        self.sphere
    }

    pub fn material(&self, hit: &Hit) -> &Material {
        &self.materials[hit.material]
    }

    fn make_hit(&self, ray: &Ray, (t, outward, shape): (f64, Vec3, usize)) -> Hit {
        let front_face = ray.dir.dot(outward) < 0.0;
        let obj = &self.objects[shape];
        Hit {
            t,
            position: ray.at(t),
            normal: if front_face { outward } else { -outward },
            outward,
            front_face,
            material: obj.material,
            shape,
            light: obj.light,
        }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.bvh
            .intersect(&self.shapes, ray)
            .map(|h| self.make_hit(ray, h))
    }

    /// Linear scan over every shape; reference for [`Scene::intersect`].
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<Hit> {
        brute_force_intersect(&self.shapes, ray).map(|h| self.make_hit(ray, h))
    }

    /// Whether the open segment between `a` and `b` is blocked.
    pub fn occluded(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let len = d.length();
        if len <= 2.0 * RAY_EPSILON {
            return false;
        }
        let ray = Ray::segment(a, d / len, len * (1.0 - 1e-9) - RAY_EPSILON);
        self.bvh.occluded(&self.shapes, &ray)
    }

    /// Whether anything lies along `dir` from `origin`.
    pub fn occluded_direction(&self, origin: Vec3, dir: Vec3) -> bool {
        self.bvh.occluded(&self.shapes, &Ray::new(origin, dir))
    }

    /// Serializes to the text format; [`parse_scene`] inverts this.
    pub fn to_text(&self) -> String {
        parse::serialize(self)
    }
}

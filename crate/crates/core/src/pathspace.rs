//! Path vertices, the measurement contribution and the recursive VCM
//! weight quantities.
//!
//! Densities are in area measure. For a path `x_0 .. x_k` (light to
//! camera), `pdf_forward[i]` is the density of generating `x_i` from the
//! light side and `pdf_reverse[i]` from the camera side.

use thiserror::Error;

use crate::math::{Rgb, Vec3};
use crate::rng::Stream;
use crate::scene::{CameraView, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PathError {
    #[error("singular weight step: {0}")]
    Singular(&'static str),
    #[error("negative MIS accumulator ({0})")]
    NegativeAccumulator(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathVertex {
    pub position: Vec3,
    /// Unit surface normal (the optical axis for the camera vertex).
    pub normal: Vec3,
    pub material: Option<usize>,
    /// Area light index when the vertex lies on an emitter.
    pub light: Option<usize>,
    /// Product of the `f_s G / p` factors so far.
    pub throughput: Rgb,
    pub pdf_forward: f64,
    pub pdf_reverse: f64,
    pub w_vc: f64,
    pub w_vm: f64,
    pub is_specular: bool,
    /// Edges from the subpath origin.
    pub depth: usize,
}

impl PathVertex {
    pub fn at(position: Vec3, normal: Vec3) -> Self {
        Self {
            position,
            normal,
            material: None,
            light: None,
            throughput: Vec3::ONE,
            pdf_forward: 0.0,
            pdf_reverse: 0.0,
            w_vc: 0.0,
            w_vm: 0.0,
            is_specular: false,
            depth: 0,
        }
    }
}

/// `x_0` on a light, `x_j` at the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPath {
    pub vertices: Vec<PathVertex>,
    pub camera: CameraView,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTerm {
    pub value: f64,
    /// Set for coincident endpoints, where the term is reported as zero.
    pub degenerate: bool,
}

/// Cosine-over-distance-squared factor without visibility.
pub fn unoccluded_geometry(a: &PathVertex, b: &PathVertex) -> GeometryTerm {
    let d = b.position - a.position;
    let dist2 = d.length_squared();
    if dist2 == 0.0 {
        return GeometryTerm {
            value: 0.0,
            degenerate: true,
        };
    }
    let dir = d / dist2.sqrt();
    GeometryTerm {
        value: a.normal.dot(dir).abs() * b.normal.dot(dir).abs() / dist2,
        degenerate: false,
    }
}

/// `V(a, b) |cos a| |cos b| / |a - b|^2`.
pub fn geometry_term(a: &PathVertex, b: &PathVertex, scene: &Scene) -> GeometryTerm {
    let g = unoccluded_geometry(a, b);
    if g.degenerate || scene.occluded(a.position, b.position) {
        return GeometryTerm { value: 0.0, ..g };
    }
    g
}

/// Converts a solid-angle density at `from` into an area density at a
/// point `dist2` away whose surface makes `cos_there` with the segment.
pub fn pdf_w_to_a(pdf_w: f64, dist2: f64, cos_there: f64) -> f64 {
    pdf_w * cos_there.abs() / dist2
}

pub fn pdf_a_to_w(pdf_a: f64, dist2: f64, cos_there: f64) -> f64 {
    pdf_a * dist2 / cos_there.abs()
}

/// Measurement contribution `f(x)` for a path whose first vertex lies on
/// an area light. Specular interior vertices evaluate to zero (their
/// scattering is a Dirac delta).
pub fn path_contribution(path: &FullPath, scene: &Scene) -> Rgb {
    let v = &path.vertices;
    let j = v.len() - 1;
    assert!(j >= 1, "a full path needs at least two vertices");
    let Some(light) = v[0].light else {
        return Vec3::ZERO;
    };
    let to_first = (v[0].position - v[1].position).normalize();
    let Some((le, _, _)) = scene.lights[light].radiance_towards(to_first) else {
        return Vec3::ZERO;
    };
    let mut f = le * geometry_term(&v[0], &v[1], scene).value;
    for i in 1..j {
        let Some(m) = v[i].material else {
            return Vec3::ZERO;
        };
        let wi = (v[i - 1].position - v[i].position).normalize();
        let wo = (v[i + 1].position - v[i].position).normalize();
        let fs = scene.materials[m].eval(wi, wo, v[i].normal);
        f = f.mul_elem(fs) * geometry_term(&v[i], &v[i + 1], scene).value;
        if f.is_zero() {
            return f;
        }
    }
    match path.camera.project(v[j - 1].position) {
        Some(c) => f * c.importance,
        None => Vec3::ZERO,
    }
}

/// Traces a light subpath of up to `max_vertices` vertices with BSDF
/// sampling, recording area densities and throughput incrementally.
/// The first vertex lies on an area light picked uniformly.
pub fn sample_light_subpath(scene: &Scene, rng: &mut Stream, max_vertices: usize) -> Vec<PathVertex> {
    let mut out = Vec::new();
    let area_lights: Vec<usize> = (0..scene.lights.len())
        .filter(|&i| !scene.lights[i].is_delta())
        .collect();
    if area_lights.is_empty() || max_vertices == 0 {
        return out;
    }
    let pick = area_lights[rng.below(area_lights.len())];
    let pick_pdf = 1.0 / area_lights.len() as f64;
    let light = &scene.lights[pick];
    let e = light.emit(
        &scene.bounding_sphere(),
        [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()],
    );
    let normal = match *light {
        crate::scene::Light::Area { normal, .. } => normal,
        _ => unreachable!(),
    };
    let pdf0 = e.direct_pdf_a * pick_pdf;
    out.push(PathVertex {
        light: Some(pick),
        throughput: Vec3::ONE / pdf0,
        pdf_forward: pdf0,
        ..PathVertex::at(e.position, normal)
    });
    // Solid-angle density of the outgoing direction and the factor
    // `f_s |cos|` (or `L_e |cos|` at the light) that goes with it.
    let mut dir = e.direction;
    let mut pdf_w = e.emission_pdf_w / e.direct_pdf_a;
    let mut weight = e.radiance * e.cos_light;
    while out.len() < max_vertices {
        let prev = *out.last().expect("nonempty");
        let Some(hit) = scene.intersect(&crate::scene::Ray::new(prev.position, dir)) else {
            break;
        };
        let cos_in = hit.outward.dot(dir).abs();
        let pdf_a = pdf_w_to_a(pdf_w, hit.t * hit.t, cos_in);
        let throughput = prev.throughput.mul_elem(weight) * (cos_in / (hit.t * hit.t)) / pdf_a;
        let material = &scene.materials[hit.material];
        let v = PathVertex {
            material: Some(hit.material),
            light: hit.light,
            throughput,
            pdf_forward: pdf_a,
            is_specular: material.is_specular(),
            depth: prev.depth + 1,
            ..PathVertex::at(hit.position, hit.outward)
        };
        out.push(v);
        let wo = -dir;
        let Some(s) = material.sample(wo, hit.outward, [rng.uniform(), rng.uniform(), rng.uniform()])
        else {
            break;
        };
        if s.pdf <= 0.0 {
            break;
        }
        dir = s.wi;
        pdf_w = s.pdf;
        weight = s.value * s.wi.dot(hit.outward).abs();
    }
    out
}

/// `eta = (n_vm / n_vc) * pi * r^2`.
pub fn eta_vcm(n_vc: f64, n_vm: f64, radius: f64) -> f64 {
    assert!(n_vc >= 1.0 && radius > 0.0, "eta_vcm needs n_vc >= 1 and r > 0");
    n_vm / n_vc * std::f64::consts::PI * radius * radius
}

/// Connection accumulator on one subpath side.
///
/// First step: `w_0 = p_rev / p_fwd`. Later steps:
/// `w_i = p_rev_i * (eta + 1/p_fwd_i + w_{i-1}/p_fwd_i)`, the sum of the
/// densities of all techniques with fewer vertices on this side relative
/// to connecting at vertex `i`. Pass `eta = 0` where merging is disabled.
pub fn vc_weight_step(
    prev: f64,
    pdf_forward: f64,
    pdf_reverse: f64,
    eta: f64,
    is_first: bool,
) -> Result<f64, PathError> {
    if !(pdf_forward > 0.0) {
        return Err(PathError::Singular("zero forward density"));
    }
    if is_first {
        return Ok(pdf_reverse / pdf_forward);
    }
    Ok(pdf_reverse * (eta + 1.0 / pdf_forward + prev / pdf_forward))
}

/// Merging accumulator on one subpath side, relative to merging at vertex
/// `i`.
///
/// First step (`i = 1`): `v_1 = (1/p_fwd_1) * (1/eta + p_rev_0 / (eta p_fwd_0))`.
/// Later steps: `v_i = (1/p_fwd_i) * (1/eta + p_rev_{i-1} + p_rev_{i-1} v_{i-1})`.
pub fn vm_weight_step(
    prev: f64,
    pdf_forward: f64,
    pdf_reverse_prev: f64,
    eta: f64,
    is_first: bool,
    pdf_reverse0: f64,
    pdf_forward0: f64,
) -> Result<f64, PathError> {
    if !(eta > 0.0) {
        return Err(PathError::Singular("merging weight with eta = 0"));
    }
    if !(pdf_forward > 0.0) {
        return Err(PathError::Singular("zero forward density"));
    }
    if is_first {
        if !(pdf_forward0 > 0.0) {
            return Err(PathError::Singular("zero forward density at the origin"));
        }
        return Ok((1.0 / eta + pdf_reverse0 / (eta * pdf_forward0)) / pdf_forward);
    }
    Ok((1.0 / eta + pdf_reverse_prev + pdf_reverse_prev * prev) / pdf_forward)
}

/// Balance-heuristic weight `1 / (1 + w_light + w_camera)`.
pub fn final_mis_weight(w_light: f64, w_camera: f64) -> Result<f64, PathError> {
    for w in [w_light, w_camera] {
        if w < 0.0 || w.is_nan() {
            return Err(PathError::NegativeAccumulator(w));
        }
    }
    Ok(1.0 / (1.0 + w_light + w_camera))
}

/// A sampling technique for a path `x_0 .. x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    /// `s` light vertices `x_0 .. x_{s-1}` joined to eye vertices
    /// `x_s .. x_k`.
    Connect { s: usize },
    /// Light and eye subpaths both reaching `x_m`.
    Merge { m: usize },
}

/// Area densities along one path, with `eta = 0` meaning merging is off.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfChain {
    pub forward: Vec<f64>,
    pub reverse: Vec<f64>,
    pub eta: f64,
}

impl PdfChain {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Techniques able to produce the path: connections with `s` from 0
    /// to `k` (those with a zero density are skipped) and, when merging
    /// is on, merges at interior vertices `1 .. k-1`.
    pub fn techniques(&self) -> Vec<Technique> {
        let k = self.len() - 1;
        let mut out: Vec<Technique> = (0..=k)
            .filter(|&s| self.connect_possible(s))
            .map(|s| Technique::Connect { s })
            .collect();
        if self.eta > 0.0 {
            out.extend((1..k).map(|m| Technique::Merge { m }));
        }
        out
    }

    fn connect_possible(&self, s: usize) -> bool {
        let k = self.len() - 1;
        self.forward[..s].iter().all(|&p| p > 0.0) && self.reverse[s..=k].iter().all(|&p| p > 0.0)
    }

    /// Light-side connection accumulators `w_0 .. w_{k-1}`.
    pub fn light_vc(&self) -> Result<Vec<f64>, PathError> {
        let k = self.len() - 1;
        let mut w = Vec::with_capacity(k);
        for i in 0..k {
            let prev = w.last().copied().unwrap_or(0.0);
            w.push(vc_weight_step(
                prev,
                self.forward[i],
                self.reverse[i],
                if i == 0 { 0.0 } else { self.eta },
                i == 0,
            )?);
        }
        Ok(w)
    }

    /// Camera-side connection accumulators `c_0 .. c_k`, the mirror image
    /// of [`PdfChain::light_vc`] (`c_k = p_fwd_k / p_rev_k`).
    pub fn camera_vc(&self) -> Result<Vec<f64>, PathError> {
        let k = self.len() - 1;
        let mut c = vec![0.0; k + 1];
        for j in (0..=k).rev() {
            let prev = if j == k { 0.0 } else { c[j + 1] };
            c[j] = vc_weight_step(
                prev,
                self.reverse[j],
                self.forward[j],
                if j == 0 || j == k { 0.0 } else { self.eta },
                j == k,
            )?;
        }
        Ok(c)
    }

    /// Light-side merging accumulators `v_1 .. v_{k-1}` (index 0 unused).
    pub fn light_vm(&self) -> Result<Vec<f64>, PathError> {
        let k = self.len() - 1;
        let mut v = vec![0.0; k.max(1)];
        for m in 1..k {
            v[m] = vm_weight_step(
                v[m - 1],
                self.forward[m],
                self.reverse[m - 1],
                self.eta,
                m == 1,
                self.reverse[0],
                self.forward[0],
            )?;
        }
        Ok(v)
    }

    /// Camera-side merging accumulators `u_1 .. u_{k-1}`.
    pub fn camera_vm(&self) -> Result<Vec<f64>, PathError> {
        let k = self.len() - 1;
        let mut u = vec![0.0; k.max(1)];
        for m in (1..k).rev() {
            let prev = if m + 1 < k { u[m + 1] } else { 0.0 };
            u[m] = vm_weight_step(
                prev,
                self.reverse[m],
                self.forward[m + 1],
                self.eta,
                m + 1 == k,
                self.forward[k],
                self.reverse[k],
            )?;
        }
        Ok(u)
    }

    /// Weight of every technique from the recursive accumulators.
    pub fn weights(&self) -> Result<Vec<(Technique, f64)>, PathError> {
        let lvc = self.light_vc()?;
        let cvc = self.camera_vc()?;
        let (lvm, cvm) = if self.eta > 0.0 {
            (self.light_vm()?, self.camera_vm()?)
        } else {
            (Vec::new(), Vec::new())
        };
        self.techniques()
            .into_iter()
            .map(|t| {
                let w = match t {
                    Technique::Connect { s } => {
                        let wl = if s == 0 { 0.0 } else { lvc[s - 1] };
                        final_mis_weight(wl, cvc[s])?
                    }
                    Technique::Merge { m } => final_mis_weight(lvm[m], cvm[m])?,
                };
                Ok((t, w))
            })
            .collect()
    }
}

//! Light and eye subpath tracing for one progressive iteration.

use std::collections::VecDeque;

use crate::math::{Rgb, Vec3};
use crate::mis::{select_indices, SelectionStrategy};
use crate::pathspace::pdf_w_to_a;
use crate::rng::Stream;
use crate::scene::{CameraView, Ray, Scene};

use super::mis::{MisFactors, SubpathMis};
use super::photon::PhotonStore;
use super::proposal::{Proposal, ProposalMixture};
use super::{IntegratorConfig, IntegratorKind};

/// A non-delta vertex of a light subpath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightVertex {
    pub position: Vec3,
    /// Outward geometric normal.
    pub normal: Vec3,
    /// Unit direction towards the previous vertex.
    pub incoming: Vec3,
    pub material: usize,
    /// Path throughput, already divided by the branch count.
    pub throughput: Rgb,
    /// Edges from the light.
    pub path_length: usize,
    pub mis: SubpathMis,
}

/// Counters gathered while tracing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceCounters {
    pub light_paths: u64,
    /// Every light subpath vertex, delta ones included.
    pub light_vertices: u64,
    pub light_vertex_depth: u64,
    /// Longest chain (in edges) summed over light paths.
    pub light_path_length: u64,
    /// Scattering events at non-delta light vertices.
    pub branch_events: u64,
    /// Directions drawn at those events.
    pub branch_samples: u64,
    /// Directions and emissions drawn, summed over light paths.
    pub charged_samples: u64,
    pub max_charged_samples: u64,
    /// Samples discarded for a zero density or value.
    pub dropped_samples: u64,
    /// Non-finite or negative estimates that were discarded.
    pub rejected_samples: u64,
    pub eye_vertices: u64,
}

impl TraceCounters {
    pub fn add(&mut self, o: &TraceCounters) {
        self.light_paths += o.light_paths;
        self.light_vertices += o.light_vertices;
        self.light_vertex_depth += o.light_vertex_depth;
        self.light_path_length += o.light_path_length;
        self.branch_events += o.branch_events;
        self.branch_samples += o.branch_samples;
        self.charged_samples += o.charged_samples;
        self.max_charged_samples = self.max_charged_samples.max(o.max_charged_samples);
        self.dropped_samples += o.dropped_samples;
        self.rejected_samples += o.rejected_samples;
        self.eye_vertices += o.eye_vertices;
    }
}

/// Output of one light subpath.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LightSubpath {
    /// Non-delta vertices in generation order.
    pub vertices: Vec<LightVertex>,
    /// Contributions of camera connections as `(pixel, value)`.
    pub splats: Vec<(usize, Rgb)>,
    pub counters: TraceCounters,
}

/// Everything an iteration needs besides the photon store.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    pub scene: &'a Scene,
    pub view: CameraView,
    pub kind: IntegratorKind,
    pub factors: MisFactors,
    pub radius: f64,
    /// Longest full path in edges.
    pub max_path_length: usize,
    /// Per-path sample budget when branching.
    pub budget: Option<usize>,
    pub branch: usize,
    /// Density the light side uses at non-delta vertices.
    pub mixture: ProposalMixture,
}

struct Pending {
    origin: Vec3,
    dir: Vec3,
    throughput: Rgb,
    share: f64,
    mis: SubpathMis,
    path_length: usize,
    from_finite: bool,
    continues: bool,
}

fn finite_nonnegative(c: Rgb) -> bool {
    c.is_finite() && c.x >= 0.0 && c.y >= 0.0 && c.z >= 0.0
}

fn add(c: Rgb, color: &mut Rgb, counters: &mut TraceCounters) {
    if finite_nonnegative(c) {
        *color += c;
    } else {
        counters.rejected_samples += 1;
    }
}

fn uniforms<const N: usize>(rng: &mut Stream) -> [f64; N] {
    std::array::from_fn(|_| rng.uniform())
}

impl<'a> Tracer<'a> {
    /// Sets up iteration `iteration` (0-based) for a `width x height` film.
    pub fn new(
        scene: &'a Scene,
        view: CameraView,
        config: &IntegratorConfig,
        iteration: u64,
    ) -> Self {
        let kind = config.kind;
        let light_paths = view.pixel_count() as f64;
        let radius = config.radius(scene, iteration);
        let eta = crate::pathspace::eta_vcm(1.0, light_paths, radius);
        let factors = MisFactors {
            vm: if kind.merges() && kind != IntegratorKind::Ppm { eta } else { 0.0 },
            vc: if kind.connects() && kind.merges() { 1.0 / eta } else { 0.0 },
            light_paths,
        };
        let branching = kind == IntegratorKind::Gmis;
        let (max_path_length, budget) = if branching {
            (config.max_depth.min(config.max_samples + 1), Some(config.max_samples))
        } else {
            (config.max_depth, None)
        };
        Self {
            scene,
            view,
            kind,
            factors,
            radius,
            max_path_length,
            budget,
            branch: config.branch,
            mixture: if branching {
                ProposalMixture::for_branching(config.branch)
            } else {
                ProposalMixture::bsdf_only()
            },
        }
    }

    /// Density with which a light subpath leaves a non-delta vertex.
    fn light_pdf(&self, m: usize, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
        let material = &self.scene.materials[m];
        self.mixture.pdf(material, wi, wo, n) * material.continuation_probability()
    }

    /// Density with which an eye subpath leaves a non-delta vertex.
    fn eye_pdf(&self, m: usize, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
        let material = &self.scene.materials[m];
        Proposal::Bsdf.pdf(material, wi, wo, n) * material.continuation_probability()
    }

    /// Traces one light subpath. Under branching, every non-delta vertex
    /// draws several directions from the proposal mixture; each resulting
    /// vertex is stored and splatted with its share of the throughput and
    /// only the first continues the walk.
    pub fn trace_light_subpath(&self, rng: &mut Stream) -> LightSubpath {
        let mut out = LightSubpath::default();
        let scene = self.scene;
        out.counters.light_paths = 1;
        if scene.lights.is_empty() {
            return out;
        }
        let pick_pdf = 1.0 / scene.lights.len() as f64;
        let light = &scene.lights[rng.below(scene.lights.len())];
        let e = light.emit(&scene.bounding_sphere(), uniforms(rng));
        let mut charged = 1usize;
        let emission_pdf_w = e.emission_pdf_w * pick_pdf;
        let direct_pdf_a = e.direct_pdf_a * pick_pdf;
        if !(e.cos_light > 0.0 && emission_pdf_w > 0.0) {
            out.counters.dropped_samples += 1;
            return out;
        }
        let mut queue = VecDeque::new();
        queue.push_back(Pending {
            origin: e.position,
            dir: e.direction,
            throughput: e.radiance * (e.cos_light / emission_pdf_w),
            share: 1.0,
            mis: SubpathMis::from_emission(
                &self.factors,
                emission_pdf_w,
                direct_pdf_a,
                e.cos_light,
                e.is_delta,
                e.is_finite,
            ),
            path_length: 0,
            from_finite: e.is_finite,
            continues: true,
        });
        let mut chain = 0;
        while let Some(st) = queue.pop_front() {
            let Some(hit) = scene.intersect(&Ray::new(st.origin, st.dir)) else {
                continue;
            };
            let cos_in = hit.outward.dot(st.dir).abs();
            if cos_in <= 0.0 {
                continue;
            }
            let mut mis = st.mis;
            mis.on_hit(hit.t * hit.t, cos_in, st.path_length > 0 || st.from_finite);
            let path_length = st.path_length + 1;
            chain = chain.max(path_length);
            out.counters.light_vertices += 1;
            out.counters.light_vertex_depth += path_length as u64;
            let material = &scene.materials[hit.material];
            let vertex = LightVertex {
                position: hit.position,
                normal: hit.outward,
                incoming: -st.dir,
                material: hit.material,
                throughput: st.throughput * st.share,
                path_length,
                mis,
            };
            if !material.is_specular() {
                out.vertices.push(vertex);
                if self.kind.connects() && path_length < self.max_path_length {
                    match self.connect_to_camera(&vertex) {
                        Some((_, c)) if !finite_nonnegative(c) => {
                            out.counters.rejected_samples += 1
                        }
                        Some(s) => out.splats.push(s),
                        None => {}
                    }
                }
            }
            if !st.continues || path_length + 2 > self.max_path_length {
                continue;
            }
            let q = material.continuation_probability();
            if rng.uniform() >= q {
                continue;
            }
            let wo = -st.dir;
            let n = hit.outward;
            if material.is_specular() {
                charged += 1;
                let Some(s) = material.sample(wo, n, uniforms(rng)) else {
                    out.counters.dropped_samples += 1;
                    continue;
                };
                let cos_out = s.wi.dot(n).abs();
                if s.pdf <= 0.0 || cos_out == 0.0 {
                    out.counters.dropped_samples += 1;
                    continue;
                }
                let mut m = mis;
                m.on_specular(cos_out);
                queue.push_back(Pending {
                    origin: hit.position,
                    dir: s.wi,
                    throughput: st.throughput.mul_elem(s.value) * (cos_out / (s.pdf * q)),
                    share: 1.0,
                    mis: m,
                    path_length,
                    from_finite: true,
                    continues: true,
                });
                continue;
            }
            let draws = match self.budget {
                Some(budget) => {
                    // Keep one sample for every level still reachable.
                    let reserve = self.max_path_length - 2 - path_length;
                    let left = budget.saturating_sub(charged);
                    self.branch.min(left.saturating_sub(reserve)).max(1)
                }
                None => 1,
            };
            charged += draws;
            out.counters.branch_events += 1;
            out.counters.branch_samples += draws as u64;
            let proposals: Vec<Proposal> = if self.mixture.len() == 1 {
                vec![Proposal::Bsdf; draws]
            } else {
                let k = self.mixture.len();
                let slots = draws.div_ceil(k) * k;
                select_indices(SelectionStrategy::S2, k, slots, rng)
                    .expect("valid cycle")
                    .into_iter()
                    .take(draws)
                    .map(|i| self.mixture.proposals()[i])
                    .collect()
            };
            for (b, proposal) in proposals.into_iter().enumerate() {
                let Some(wi) = proposal.sample(material, wo, n, uniforms(rng)) else {
                    out.counters.dropped_samples += 1;
                    continue;
                };
                let pdf_fwd = self.light_pdf(hit.material, wi, wo, n);
                let f = material.eval(wi, wo, n);
                let cos_out = wi.dot(n).abs();
                if !(pdf_fwd > 0.0) || f.is_zero() || cos_out == 0.0 {
                    out.counters.dropped_samples += 1;
                    continue;
                }
                let pdf_rev = self.eye_pdf(hit.material, wo, wi, n);
                let mut m = mis;
                m.on_scatter(&self.factors, cos_out, pdf_fwd, pdf_rev);
                queue.push_back(Pending {
                    origin: hit.position,
                    dir: wi,
                    throughput: st.throughput.mul_elem(f) * (cos_out / pdf_fwd),
                    share: 1.0 / draws as f64,
                    mis: m,
                    path_length,
                    from_finite: true,
                    continues: b == 0,
                });
            }
        }
        if let Some(budget) = self.budget {
            debug_assert!(charged <= budget, "light path charged {charged} > {budget}");
        }
        out.counters.light_path_length = chain as u64;
        out.counters.charged_samples = charged as u64;
        out.counters.max_charged_samples = charged as u64;
        out
    }

    /// Light tracing: joins a light vertex to the camera.
    pub fn connect_to_camera(&self, v: &LightVertex) -> Option<(usize, Rgb)> {
        let cam = self.view.project(v.position)?;
        let to_camera = (self.view.position - v.position) / cam.distance;
        let material = &self.scene.materials[v.material];
        let f = material.eval(to_camera, v.incoming, v.normal);
        if f.is_zero() {
            return None;
        }
        let cos_surface = v.normal.dot(to_camera).abs();
        let camera_pdf_a = pdf_w_to_a(cam.pdf_w, cam.distance * cam.distance, cos_surface);
        let scaled = camera_pdf_a / self.factors.light_paths;
        let pdf_rev = self.eye_pdf(v.material, v.incoming, to_camera, v.normal);
        let weight = 1.0 / (1.0 + v.mis.connection_sum(&self.factors, scaled, pdf_rev));
        if self.scene.occluded(v.position, self.view.position) {
            return None;
        }
        Some((cam.pixel, v.throughput.mul_elem(f) * (weight * scaled)))
    }

    /// Traces the eye subpath of `pixel` and returns its estimate.
    pub fn trace_eye_path(
        &self,
        pixel: usize,
        rng: &mut Stream,
        light_vertices: &[LightVertex],
        store: Option<&PhotonStore>,
        all_vertices: &[LightVertex],
        counters: &mut TraceCounters,
    ) -> Rgb {
        let scene = self.scene;
        let (px, py) = (pixel % self.view.width, pixel / self.view.width);
        let ray0 = self.view.generate_ray(px as f64 + rng.uniform(), py as f64 + rng.uniform());
        let cos_camera = ray0.dir.dot(self.view.forward);
        let mut mis = SubpathMis::from_camera(&self.factors, self.view.pdf_w(cos_camera));
        let mut throughput = Rgb::ONE;
        let mut ray = ray0;
        let mut specular_path = true;
        let mut color = Rgb::ZERO;
        let mut path_length = 1usize;
        let light_pick = 1.0 / scene.lights.len().max(1) as f64;
        loop {
            let Some(hit) = scene.intersect(&ray) else {
                break;
            };
            counters.eye_vertices += 1;
            let cos_in = hit.outward.dot(ray.dir).abs();
            if cos_in <= 0.0 {
                break;
            }
            mis.on_hit(hit.t * hit.t, cos_in, true);
            let material = &scene.materials[hit.material];
            let wo = -ray.dir;
            let n = hit.outward;

            if let Some(li) = hit.light {
                if let Some((le, direct_pdf_a, emission_pdf_w)) =
                    scene.lights[li].radiance_towards(ray.dir)
                {
                    let weight = match self.kind {
                        IntegratorKind::Ppm => f64::from(u8::from(specular_path)),
                        _ if path_length == 1 => 1.0,
                        _ => {
                            let others = mis.emission_sum(
                                direct_pdf_a * light_pick,
                                emission_pdf_w * light_pick,
                            );
                            1.0 / (1.0 + others)
                        }
                    };
                    if weight > 0.0 {
                        add(throughput.mul_elem(le) * weight, &mut color, counters);
                    }
                }
            }
            if path_length >= self.max_path_length {
                break;
            }

            if !material.is_specular() {
                if self.kind.connects() {
                    let c = self.direct_illumination(&hit, wo, &mis, rng);
                    add(throughput.mul_elem(c), &mut color, counters);
                    for lv in light_vertices {
                        if lv.path_length + path_length + 1 > self.max_path_length {
                            continue;
                        }
                        let c = self.connect_vertices(&hit, wo, &mis, lv);
                        add(throughput.mul_elem(c), &mut color, counters);
                    }
                }
                if let Some(store) = store {
                    let c = self.merge(&hit, wo, &mis, path_length, store, all_vertices);
                    add(throughput.mul_elem(c), &mut color, counters);
                    if self.kind == IntegratorKind::Ppm {
                        break;
                    }
                }
            }

            let q = material.continuation_probability();
            if rng.uniform() >= q {
                break;
            }
            let Some(s) = material.sample(wo, n, uniforms(rng)) else {
                break;
            };
            let cos_out = s.wi.dot(n).abs();
            if s.pdf <= 0.0 || cos_out == 0.0 {
                break;
            }
            if s.specular {
                mis.on_specular(cos_out);
                throughput = throughput.mul_elem(s.value) * (cos_out / (s.pdf * q));
            } else {
                let pdf_fwd = s.pdf * q;
                let pdf_rev = self.light_pdf(hit.material, wo, s.wi, n);
                mis.on_scatter(&self.factors, cos_out, pdf_fwd, pdf_rev);
                throughput = throughput.mul_elem(s.value) * (cos_out / pdf_fwd);
            }
            specular_path &= s.specular;
            ray = Ray::new(hit.position, s.wi);
            path_length += 1;
        }
        color
    }

    /// Next-event estimation towards a randomly picked light.
    fn direct_illumination(
        &self,
        hit: &crate::scene::Hit,
        wo: Vec3,
        mis: &SubpathMis,
        rng: &mut Stream,
    ) -> Rgb {
        let scene = self.scene;
        if scene.lights.is_empty() {
            return Rgb::ZERO;
        }
        let pick = 1.0 / scene.lights.len() as f64;
        let light = &scene.lights[rng.below(scene.lights.len())];
        let u = uniforms(rng);
        let Some(il) = light.illuminate(&scene.bounding_sphere(), hit.position, u) else {
            return Rgb::ZERO;
        };
        let n = hit.outward;
        let material = &scene.materials[hit.material];
        let f = material.eval(il.direction, wo, n);
        if f.is_zero() {
            return Rgb::ZERO;
        }
        let cos_to_light = il.direction.dot(n).abs();
        let pdf_fwd = if il.is_delta {
            0.0
        } else {
            self.eye_pdf(hit.material, il.direction, wo, n)
        };
        let pdf_rev = self.light_pdf(hit.material, wo, il.direction, n);
        let w_light = pdf_fwd / (pick * il.direct_pdf_w);
        let w_camera = il.emission_pdf_w * cos_to_light / (il.direct_pdf_w * il.cos_light)
            * (self.factors.vm + mis.dvcm + mis.dvc * pdf_rev);
        let weight = 1.0 / (w_light + 1.0 + w_camera);
        let blocked = if il.is_finite {
            scene.occluded(hit.position, hit.position + il.direction * il.distance)
        } else {
            scene.occluded_direction(hit.position, il.direction)
        };
        if blocked {
            return Rgb::ZERO;
        }
        il.radiance.mul_elem(f) * (weight * cos_to_light / (pick * il.direct_pdf_w))
    }

    fn connect_vertices(
        &self,
        hit: &crate::scene::Hit,
        wo: Vec3,
        mis: &SubpathMis,
        lv: &LightVertex,
    ) -> Rgb {
        let d = lv.position - hit.position;
        let dist2 = d.length_squared();
        if dist2 == 0.0 {
            return Rgb::ZERO;
        }
        let dir = d / dist2.sqrt();
        let n = hit.outward;
        let camera_f = self.scene.materials[hit.material].eval(dir, wo, n);
        if camera_f.is_zero() {
            return Rgb::ZERO;
        }
        let light_f = self.scene.materials[lv.material].eval(-dir, lv.incoming, lv.normal);
        if light_f.is_zero() {
            return Rgb::ZERO;
        }
        let cos_camera = dir.dot(n).abs();
        let cos_light = dir.dot(lv.normal).abs();
        let camera_fwd_a = pdf_w_to_a(self.eye_pdf(hit.material, dir, wo, n), dist2, cos_light);
        let camera_rev = self.light_pdf(hit.material, wo, dir, n);
        let light_fwd_a = pdf_w_to_a(
            self.light_pdf(lv.material, -dir, lv.incoming, lv.normal),
            dist2,
            cos_camera,
        );
        let light_rev = self.eye_pdf(lv.material, lv.incoming, -dir, lv.normal);
        let w_light = lv.mis.connection_sum(&self.factors, camera_fwd_a, light_rev);
        let w_camera = mis.connection_sum(&self.factors, light_fwd_a, camera_rev);
        let weight = 1.0 / (w_light + 1.0 + w_camera);
        if self.scene.occluded(hit.position, lv.position) {
            return Rgb::ZERO;
        }
        let g = cos_camera * cos_light / dist2;
        camera_f.mul_elem(light_f).mul_elem(lv.throughput) * (weight * g)
    }

    fn merge(
        &self,
        hit: &crate::scene::Hit,
        wo: Vec3,
        mis: &SubpathMis,
        path_length: usize,
        store: &PhotonStore,
        vertices: &[LightVertex],
    ) -> Rgb {
        let n = hit.outward;
        let material = &self.scene.materials[hit.material];
        let mut sum = Rgb::ZERO;
        store.for_each_in_range(hit.position, |i| {
            let lv = &vertices[i];
            if lv.path_length + path_length > self.max_path_length {
                return;
            }
            let f = material.eval(lv.incoming, wo, n);
            if f.is_zero() {
                return;
            }
            let weight = if self.kind == IntegratorKind::Ppm {
                1.0
            } else {
                let camera_fwd = self.eye_pdf(hit.material, lv.incoming, wo, n);
                let camera_rev = self.light_pdf(hit.material, wo, lv.incoming, n);
                let w_light = lv.mis.merge_sum(&self.factors, camera_fwd);
                let w_camera = mis.merge_sum(&self.factors, camera_rev);
                1.0 / (w_light + 1.0 + w_camera)
            };
            sum += f.mul_elem(lv.throughput) * weight;
        });
        let r2 = self.radius * self.radius;
        sum / (std::f64::consts::PI * r2 * self.factors.light_paths)
    }
}

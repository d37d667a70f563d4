use gmis::math::{vec3, Vec3};
use gmis::renderer::{
    render_progressive, IntegratorConfig, IntegratorKind, MisFactors, PhotonStore, Renderer,
    StopCondition, SubpathMis, Tracer,
};
use gmis::rng::Stream;
use gmis::scene::{fixtures, parse_scene, CameraView, Object, Scene};

#[test]
fn photon_queries_match_brute_force() {
    let mut rng = Stream::new(3);
    let points: Vec<Vec3> = (0..100_000)
        .map(|_| vec3(rng.uniform(), rng.uniform(), rng.uniform()) * 4.0 - Vec3::splat(2.0))
        .collect();
    for radius in [0.01, 0.05, 0.2] {
        let store = PhotonStore::build(points.clone(), radius);
        for _ in 0..1000 {
            let q = vec3(rng.uniform(), rng.uniform(), rng.uniform()) * 4.4 - Vec3::splat(2.2);
            let expected: Vec<usize> = (0..points.len())
                .filter(|&i| (points[i] - q).length_squared() <= radius * radius)
                .collect();
            assert_eq!(store.query(q), expected);
        }
    }
}

#[test]
fn scene_without_lights_renders_black() {
    let scene = fixtures::load("box");
    let dark = Scene::new(
        scene.materials.clone(),
        scene
            .objects
            .iter()
            .map(|o| Object {
                light: None,
                ..o.clone()
            })
            .collect(),
        Vec::new(),
        scene.camera,
    );
    for kind in IntegratorKind::ALL {
        let out = render_progressive(
            &dark,
            8,
            8,
            IntegratorConfig::new(kind),
            StopCondition::Iterations(3),
            None,
        )
        .unwrap();
        assert!(out.film.mean().iter().all(|p| *p == Vec3::ZERO), "{kind}");
    }
}

#[test]
fn single_iteration_logs_one_row() {
    let scene = fixtures::load("box");
    let out = render_progressive(
        &scene,
        8,
        8,
        IntegratorConfig::new(IntegratorKind::Gmis).with_seed(1),
        StopCondition::Iterations(1),
        None,
    )
    .unwrap();
    assert_eq!(out.log.rows.len(), 1);
    assert_eq!(out.log.rows[0].iteration, 1);
    assert!(out.log.rmse_series().is_err());
    assert!(out.log.to_csv().starts_with("iteration,seconds,rmse\n1,"));
}

#[test]
fn reference_enables_rmse_column() {
    let scene = fixtures::load("box");
    let reference = gmis::imageio::Image::new(8, 8);
    let out = render_progressive(
        &scene,
        8,
        8,
        IntegratorConfig::new(IntegratorKind::Vcm),
        StopCondition::Iterations(3),
        Some(&reference),
    )
    .unwrap();
    let rmse = out.log.rmse_series().unwrap();
    assert_eq!(rmse.len(), 3);
    let direct = gmis::imageio::rmse(out.film.mean(), &reference.pixels);
    assert_eq!(rmse[2], direct);
    assert!(render_progressive(
        &scene,
        4,
        8,
        IntegratorConfig::new(IntegratorKind::Vcm),
        StopCondition::Iterations(1),
        Some(&reference),
    )
    .is_err());
}

fn render_bits(scene: &Scene, kind: IntegratorKind, threads: usize, seed: u64) -> Vec<u64> {
    let config = IntegratorConfig {
        threads: Some(threads),
        ..IntegratorConfig::new(kind).with_seed(seed)
    };
    let out = render_progressive(scene, 12, 10, config, StopCondition::Iterations(4), None).unwrap();
    out.film
        .mean()
        .iter()
        .flat_map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()])
        .collect()
}

#[test]
fn films_are_identical_across_runs_and_thread_counts() {
    let scene = fixtures::load("box-with-balls");
    for kind in IntegratorKind::ALL {
        let a = render_bits(&scene, kind, 1, 9);
        assert_eq!(a, render_bits(&scene, kind, 1, 9), "{kind} rerun");
        assert_eq!(a, render_bits(&scene, kind, 4, 9), "{kind} threads");
        assert_ne!(a, render_bits(&scene, kind, 1, 10), "{kind} seed");
    }
}

#[test]
fn furnace_mean_is_close_to_the_series_limit() {
    let scene = fixtures::load("white-furnace");
    let truth = 2.0 * (1.0 - 0.5f64.powi(12));
    for kind in IntegratorKind::ALL {
        let out = render_progressive(
            &scene,
            16,
            16,
            IntegratorConfig::new(kind).with_seed(2),
            StopCondition::Iterations(200),
            None,
        )
        .unwrap();
        let mean = out.film.mean().iter().map(|p| p.x).sum::<f64>() / 256.0;
        assert!((mean - truth).abs() < 0.02 * truth, "{kind}: {mean}");
        assert_eq!(out.stats.rejected_samples(), 0);
    }
}

#[test]
fn films_stay_finite_with_specular_surfaces() {
    for name in ["mirror-wall", "glossy-floor"] {
        let scene = fixtures::load(name);
        for kind in IntegratorKind::ALL {
            let out = render_progressive(
                &scene,
                16,
                12,
                IntegratorConfig::new(kind).with_seed(4),
                StopCondition::Iterations(5),
                None,
            )
            .unwrap();
            assert!(out.film.mean().iter().all(|p| p.is_finite()), "{name} {kind}");
        }
    }
}

const MIRROR_CELL: &str = "\
material mirror mirror 1 1 1
material lamp diffuse 0.5 0.5 0.5 emit 10 10 10
box -1 -1 -1 1 1 1 mirror
arealight -0.01 0.9 -0.01 0.02 0 0 0 0 0.02 lamp
camera 0 0 0.5 0 0 -1 0 1 0 60
";

#[test]
fn specular_chains_draw_one_sample_per_vertex() {
    let scene = parse_scene(MIRROR_CELL).unwrap();
    let view = CameraView::new(&scene.camera, 8, 8);
    for (max_samples, expected) in [(7, 7), (20, 11)] {
        let config = IntegratorConfig {
            max_samples,
            ..IntegratorConfig::new(IntegratorKind::Gmis)
        };
        let tracer = Tracer::new(&scene, view, &config, 0);
        let mut rng = Stream::new(12);
        let mut all_specular = 0;
        for _ in 0..2000 {
            let sub = tracer.trace_light_subpath(&mut rng);
            let c = sub.counters;
            assert!(c.charged_samples <= max_samples as u64);
            if c.branch_events == 0 && sub.vertices.is_empty() {
                assert_eq!(c.light_path_length, expected);
                assert_eq!(c.charged_samples, expected);
                all_specular += 1;
            }
        }
        assert!(all_specular > 1900);
    }
}

#[test]
fn single_branch_reproduces_the_plain_light_tracer() {
    let scene = fixtures::load("box-with-balls");
    let view = CameraView::new(&scene.camera, 16, 16);
    let gmis = IntegratorConfig {
        branch: 1,
        max_samples: 12,
        ..IntegratorConfig::new(IntegratorKind::Gmis)
    };
    let vcm = IntegratorConfig::new(IntegratorKind::Vcm);
    let a = Tracer::new(&scene, view, &gmis, 3);
    let b = Tracer::new(&scene, view, &vcm, 3);
    for p in 0..2000u64 {
        let x = a.trace_light_subpath(&mut Stream::new(5).split(p));
        let y = b.trace_light_subpath(&mut Stream::new(5).split(p));
        assert_eq!(x.vertices, y.vertices);
        assert_eq!(x.splats, y.splats);
    }
}

/// A plain chain that spends `c` samples reaches depth `c`; branching
/// spends part of the budget on width instead.
#[test]
fn branching_respects_the_budget_and_stays_shallow() {
    let scene = fixtures::load("box");
    let view = CameraView::new(&scene.camera, 16, 16);
    let gmis = Tracer::new(&scene, view, &IntegratorConfig::new(IntegratorKind::Gmis), 0);
    let vcm = Tracer::new(&scene, view, &IntegratorConfig::new(IntegratorKind::Vcm), 0);
    let (mut depth, mut charged) = (0u64, 0u64);
    for p in 0..10_000u64 {
        let g = gmis.trace_light_subpath(&mut Stream::new(8).split(p)).counters;
        assert!(g.charged_samples <= 20);
        depth += g.light_path_length;
        charged += g.charged_samples;
        let v = vcm.trace_light_subpath(&mut Stream::new(8).split(p)).counters;
        assert!(v.light_path_length <= v.charged_samples);
    }
    assert!(depth < charged, "{depth} vs {charged}");
}

/// A synthetic light subpath with explicit area densities.
struct Chain {
    pos: Vec<Vec3>,
    nrm: Vec<Vec3>,
    specular: Vec<bool>,
    /// Solid-angle density at `x_i` of the direction to `x_{i+1}`.
    fwd_w: Vec<f64>,
    /// Solid-angle density at `x_i` of the direction to `x_{i-1}`.
    rev_w: Vec<f64>,
    origin_pdf_a: f64,
}

impl Chain {
    fn random(rng: &mut Stream, n: usize, delta: f64) -> Self {
        let mut unit = || {
            let z = 2.0 * rng.uniform() - 1.0;
            let phi = std::f64::consts::TAU * rng.uniform();
            let r = (1.0 - z * z).sqrt();
            vec3(r * phi.cos(), r * phi.sin(), z)
        };
        let pos: Vec<Vec3> = (0..n).map(|_| unit() * 3.0).collect();
        let nrm: Vec<Vec3> = (0..n).map(|_| unit()).collect();
        let specular: Vec<bool> = (0..n)
            .map(|i| i > 0 && i + 1 < n && rng.uniform() < 0.3)
            .collect();
        let mut density = |s: bool| if s { delta } else { 0.05 + 2.0 * rng.uniform() };
        let fwd_w = specular.iter().map(|&s| density(s)).collect();
        let rev_w = specular.iter().map(|&s| density(s)).collect();
        Self {
            pos,
            nrm,
            specular,
            fwd_w,
            rev_w,
            origin_pdf_a: 0.1 + rng.uniform(),
        }
    }

    fn cos(&self, at: usize, towards: usize) -> f64 {
        self.nrm[at].dot((self.pos[towards] - self.pos[at]).normalize()).abs()
    }

    fn dist2(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).length_squared()
    }

    /// Area densities from the light side.
    fn forward_a(&self) -> Vec<f64> {
        let mut out = vec![self.origin_pdf_a];
        for i in 1..self.pos.len() {
            out.push(self.fwd_w[i - 1] * self.cos(i, i - 1) / self.dist2(i, i - 1));
        }
        out
    }

    /// Area densities from the eye side, for vertices below the last.
    fn reverse_a(&self) -> Vec<f64> {
        (0..self.pos.len() - 1)
            .map(|i| self.rev_w[i + 1] * self.cos(i, i + 1) / self.dist2(i, i + 1))
            .collect()
    }

    /// Runs the factored updates up to the last vertex.
    fn factored(&self, factors: &MisFactors) -> SubpathMis {
        let emission_pdf_w = self.origin_pdf_a * self.fwd_w[0];
        let mut mis = SubpathMis::from_emission(
            factors,
            emission_pdf_w,
            self.origin_pdf_a,
            self.cos(0, 1),
            false,
            true,
        );
        let last = self.pos.len() - 1;
        for i in 1..=last {
            mis.on_hit(self.dist2(i, i - 1), self.cos(i, i - 1), true);
            if i == last {
                break;
            }
            let cos_out = self.cos(i, i + 1);
            if self.specular[i] {
                mis.on_specular(cos_out);
            } else {
                mis.on_scatter(factors, cos_out, self.fwd_w[i], self.rev_w[i]);
            }
        }
        mis
    }
}

#[test]
fn factored_weights_match_technique_enumeration() {
    let mut rng = Stream::new(77);
    for case in 0..2000 {
        let n = 2 + case % 5;
        let delta = 0.3 + 5.0 * rng.uniform();
        let chain = Chain::random(&mut rng, n, delta);
        let eta = 0.01 + rng.uniform();
        let factors = MisFactors {
            vm: eta,
            vc: 1.0 / eta,
            light_paths: 1.0,
        };
        let fwd = chain.forward_a();
        let mut rev = chain.reverse_a();
        let i = n - 1;
        // Density of the eye side reaching the last vertex.
        let eye_a = 0.2 + rng.uniform();
        rev.push(eye_a);
        let ratio = |l: usize| rev[l] / fwd[l];
        let connectable = |a: usize| !chain.specular[a];

        // Light-side techniques relative to connecting `x_i` to the eye.
        let mut brute = 0.0;
        for s in 0..=i {
            let ok = (s == 0 || connectable(s - 1)) && connectable(s);
            if ok {
                brute += (s..=i).map(ratio).product::<f64>();
            }
        }
        let mut merges = 0.0;
        for m in 1..=i {
            if connectable(m) {
                merges += eta * rev[m] * (m + 1..=i).map(ratio).product::<f64>();
            }
        }
        // Merging at `x_i` itself is the competitor of the connection.
        let conn_sum = brute + merges;
        let mis = chain.factored(&factors);
        let factored = mis.connection_sum(&factors, eye_a, chain.rev_w[i]);
        assert!(
            (factored - conn_sum).abs() <= 1e-9 * conn_sum,
            "case {case}: {factored} vs {conn_sum}"
        );

        // Relative to merging at `x_i`: every connection with s <= i and
        // every merge before `i`.
        let merge_self = eta * rev[i];
        let brute_merge = (conn_sum - merge_self) / merge_self;
        let factored_merge = mis.merge_sum(&factors, chain.rev_w[i]);
        assert!(
            (factored_merge - brute_merge).abs() <= 1e-9 * brute_merge,
            "case {case}: {factored_merge} vs {brute_merge}"
        );
    }
}

#[test]
fn renderer_reports_stats() {
    let scene = fixtures::load("box");
    let mut r = Renderer::new(&scene, 8, 8, IntegratorConfig::new(IntegratorKind::Gmis)).unwrap();
    r.iterate();
    r.iterate();
    let s = r.stats();
    assert_eq!(s.iterations, 2);
    assert_eq!(s.counters.light_paths, 128);
    assert!(s.average_branch_factor() > 1.0);
    assert!(s.counters.max_charged_samples <= 20);
    assert!(s.to_text().contains("\"average_branch_factor\""));
}

#[test]
fn rejects_bad_configs() {
    let scene = fixtures::load("box");
    let bad = [
        IntegratorConfig {
            alpha: 1.0,
            ..IntegratorConfig::new(IntegratorKind::Vcm)
        },
        IntegratorConfig {
            max_samples: 0,
            ..IntegratorConfig::new(IntegratorKind::Gmis)
        },
        IntegratorConfig {
            branch: 0,
            ..IntegratorConfig::new(IntegratorKind::Gmis)
        },
    ];
    for c in bad {
        assert!(Renderer::new(&scene, 8, 8, c).is_err());
    }
    assert!(Renderer::new(&scene, 0, 8, IntegratorConfig::new(IntegratorKind::Bpt)).is_err());
}

use std::f64::consts::PI;

use gmis::math::{vec3, Vec3};
use gmis::pathspace::{
    geometry_term, path_contribution, pdf_a_to_w, pdf_w_to_a, sample_light_subpath, FullPath,
    PathVertex, PdfChain, Technique,
};
use gmis::rng::Stream;
use gmis::scene::{fixtures, parse_scene, CameraView};
use proptest::prelude::*;

fn random_chain(rng: &mut Stream, vertices: usize, merging: bool) -> PdfChain {
    // Densities spread over several orders of magnitude.
    let mut draw = || 10f64.powf(4.0 * rng.uniform() - 2.0);
    let mut forward: Vec<f64> = (0..vertices).map(|_| draw()).collect();
    // A pinhole camera cannot be hit.
    forward[vertices - 1] = 0.0;
    let reverse: Vec<f64> = (0..vertices).map(|_| draw()).collect();
    let eta = if merging { draw() } else { 0.0 };
    PdfChain {
        forward,
        reverse,
        eta,
    }
}

/// Density of a technique as a direct product over the vertices.
fn technique_pdf(chain: &PdfChain, t: Technique) -> f64 {
    let k = chain.len() - 1;
    match t {
        Technique::Connect { s } => {
            let light: f64 = chain.forward[..s].iter().product();
            let camera: f64 = chain.reverse[s..=k].iter().product();
            light * camera
        }
        Technique::Merge { m } => {
            let light: f64 = chain.forward[..=m].iter().product();
            let camera: f64 = chain.reverse[m + 1..=k].iter().product();
            light * camera * chain.reverse[m] * chain.eta
        }
    }
}

fn brute_force_techniques(chain: &PdfChain) -> Vec<Technique> {
    let k = chain.len() - 1;
    let mut out: Vec<Technique> = (0..=k).map(|s| Technique::Connect { s }).collect();
    if chain.eta > 0.0 {
        out.extend((1..k).map(|m| Technique::Merge { m }));
    }
    out
}

#[test]
fn weights_partition_unity_against_enumeration() {
    let mut rng = Stream::new(17);
    for case in 0..1000 {
        let vertices = 2 + case % 4;
        let merging = case % 2 == 0;
        let chain = random_chain(&mut rng, vertices, merging);
        let techniques = brute_force_techniques(&chain);
        let total: f64 = techniques.iter().map(|&t| technique_pdf(&chain, t)).sum();
        let weights = chain.weights().unwrap();
        assert_eq!(weights.len(), techniques.len());
        let mut sum = 0.0;
        for (t, w) in weights {
            let expected = technique_pdf(&chain, t) / total;
            assert!((w - expected).abs() < 1e-9, "{chain:?} {t:?}: {w} vs {expected}");
            sum += w;
        }
        assert!((sum - 1.0).abs() < 1e-9, "{chain:?}: {sum}");
    }
}

#[test]
fn three_vertex_connections_sum_to_one() {
    let chain = PdfChain {
        forward: vec![0.25, 1.3, 0.0],
        reverse: vec![0.8, 0.6, 1.0],
        eta: 0.0,
    };
    let w = chain.weights().unwrap();
    assert_eq!(w.len(), 3);
    let sum: f64 = w.iter().map(|x| x.1).sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

/// Light-side connection sum written out term by term.
fn expanded_light_vc(chain: &PdfChain, i: usize) -> f64 {
    let ratio = |l: usize| chain.reverse[l] / chain.forward[l];
    let mut sum = 0.0;
    for first in 0..=i {
        sum += (first..=i).map(ratio).product::<f64>();
    }
    for m in 1..=i {
        sum += chain.eta * chain.reverse[m] * (m + 1..=i).map(ratio).product::<f64>();
    }
    sum
}

/// Light-side merging sum relative to a merge at `m`, written out.
fn expanded_light_vm(chain: &PdfChain, m: usize) -> f64 {
    let merge = technique_pdf(chain, Technique::Merge { m });
    let mut sum = 0.0;
    for s in 0..=m {
        sum += technique_pdf(chain, Technique::Connect { s });
    }
    for other in 1..m {
        sum += technique_pdf(chain, Technique::Merge { m: other });
    }
    sum / merge
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn recursions_match_expansion() {
    let mut rng = Stream::new(29);
    for case in 0..10_000 {
        let chain = random_chain(&mut rng, 2 + case % 5, true);
        let k = chain.len() - 1;
        let lvc = chain.light_vc().unwrap();
        for (i, &w) in lvc.iter().enumerate() {
            let e = expanded_light_vc(&chain, i);
            assert!(rel(w, e) < 1e-12, "vc {i}: {w} vs {e}");
        }
        let lvm = chain.light_vm().unwrap();
        for m in 1..k {
            let e = expanded_light_vm(&chain, m);
            assert!(rel(lvm[m], e) < 1e-12, "vm {m}: {} vs {e}", lvm[m]);
        }
    }
}

#[test]
fn camera_accumulators_mirror_light_side() {
    let mut rng = Stream::new(31);
    for case in 0..500 {
        let chain = random_chain(&mut rng, 2 + case % 5, case % 3 != 0);
        let mirrored = PdfChain {
            forward: chain.reverse.iter().rev().copied().collect(),
            reverse: chain.forward.iter().rev().copied().collect(),
            eta: chain.eta,
        };
        let k = chain.len() - 1;
        let c = chain.camera_vc().unwrap();
        let l = mirrored.light_vc().unwrap();
        for j in 1..=k {
            assert!(rel(c[j], l[k - j]) < 1e-12 || (c[j] == 0.0 && l[k - j] == 0.0));
        }
    }
}

fn unit_box_view() -> (gmis::scene::Scene, CameraView) {
    let scene = fixtures::load("unit-box");
    let view = CameraView::new(&scene.camera, 32, 32);
    (scene, view)
}

fn camera_vertex(view: &CameraView) -> PathVertex {
    PathVertex::at(view.position, view.forward)
}

#[test]
fn contribution_matches_incremental_throughput() {
    let (scene, view) = unit_box_view();
    let mut rng = Stream::new(5);
    let mut checked = 0;
    while checked < 200 {
        let sub = sample_light_subpath(&scene, &mut rng, 2);
        if sub.len() < 2 {
            continue;
        }
        let (x0, x1) = (sub[0], sub[1]);
        let Some(cam) = view.project(x1.position) else {
            continue;
        };
        if scene.occluded(x1.position, view.position) {
            continue;
        }
        let path = FullPath {
            vertices: vec![x0, x1, camera_vertex(&view)],
            camera: view,
        };
        let f = path_contribution(&path, &scene);

        // Every factor from raw geometry.
        let albedo = scene.materials[x1.material.unwrap()].albedo;
        let d01 = x1.position - x0.position;
        let d12 = view.position - x1.position;
        let cos0 = x0.normal.dot(d01.normalize()).abs();
        let cos1a = x1.normal.dot(d01.normalize()).abs();
        let cos1b = x1.normal.dot(d12.normalize()).abs();
        let cos_cam = view.forward.dot(-d12.normalize());
        let importance = view.image_plane_dist.powi(2) / cos_cam.powi(4);
        let direct = Vec3::splat(5.0).mul_elem(albedo / PI)
            * (cos0 * cos1a / d01.length_squared() * cos1b * cos_cam / d12.length_squared()
                * importance);
        assert!((cam.importance - importance).abs() < 1e-9 * importance);

        let fs = albedo / PI;
        let g = geometry_term(&x1, &camera_vertex(&view), &scene).value;
        let incremental =
            x1.throughput.mul_elem(fs) * (g * cam.importance * x0.pdf_forward * x1.pdf_forward);
        for c in 0..3 {
            assert!(rel(f[c], direct[c]) < 1e-10, "{} vs {}", f[c], direct[c]);
            assert!(rel(f[c], incremental[c]) < 1e-10, "{} vs {}", f[c], incremental[c]);
        }
        checked += 1;
    }
}

const FACING_LAMP: &str = "\
material lamp diffuse 0.5 0.5 0.5 emit 3 2 1
material black diffuse 0 0 0
arealight -0.5 -0.5 0 1 0 0 0 1 0 lamp
tri -1 -1 -1 1 -1 -1 0 1 -1 black
camera 0 0 4 0 0 0 0 1 0 30
";

#[test]
fn direct_view_of_light() {
    let scene = parse_scene(FACING_LAMP).unwrap();
    let view = CameraView::new(&scene.camera, 16, 16);
    let x0 = PathVertex {
        light: Some(0),
        ..PathVertex::at(vec3(0.1, 0.2, 0.0), vec3(0.0, 0.0, 1.0))
    };
    let path = FullPath {
        vertices: vec![x0, camera_vertex(&view)],
        camera: view,
    };
    let f = path_contribution(&path, &scene);
    let cam = view.project(x0.position).unwrap();
    let g = geometry_term(&x0, &camera_vertex(&view), &scene).value;
    let expected = vec3(3.0, 2.0, 1.0) * (g * cam.importance);
    assert!((f - expected).length() < 1e-12 * expected.length());
}

#[test]
fn black_vertex_zeroes_the_path() {
    let scene = parse_scene(FACING_LAMP).unwrap();
    let view = CameraView::new(&scene.camera, 16, 16);
    let x0 = PathVertex {
        light: Some(0),
        ..PathVertex::at(vec3(0.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0))
    };
    // The black triangle sits behind the lamp, facing it.
    let x1 = PathVertex {
        material: Some(1),
        ..PathVertex::at(vec3(0.0, 0.0, -1.0), vec3(0.0, 0.0, 1.0))
    };
    let path = FullPath {
        vertices: vec![x0, x1, camera_vertex(&view)],
        camera: view,
    };
    assert_eq!(path_contribution(&path, &scene), Vec3::ZERO);
}

#[test]
fn occluded_geometry_term_is_zero() {
    let scene = parse_scene(
        "material m diffuse 0.5 0.5 0.5\nmaterial e diffuse 0.5 0.5 0.5 emit 1 1 1\n\
         sphere 0 0 1 0.3 m\narealight 5 5 5 1 0 0 0 1 0 e\ncamera 0 0 -3 0 0 0 0 1 0 40\n",
    )
    .unwrap();
    let a = PathVertex::at(Vec3::ZERO, vec3(0.0, 0.0, 1.0));
    let b = PathVertex::at(vec3(0.0, 0.0, 2.0), vec3(0.0, 0.0, -1.0));
    let g = geometry_term(&a, &b, &scene);
    assert_eq!(g.value, 0.0);
    assert!(!g.degenerate);
    let c = PathVertex::at(vec3(1.0, 1.0, 1.0), vec3(0.0, 0.0, -1.0));
    assert!((geometry_term(&a, &c, &scene).value - 1.0 / 9.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn area_solid_angle_round_trip(
        pdf in 1e-6f64..1e6,
        dist in 1e-3f64..1e3,
        cos in 1e-4f64..1.0,
    ) {
        let dist2 = dist * dist;
        let back = pdf_a_to_w(pdf_w_to_a(pdf, dist2, cos), dist2, cos);
        prop_assert!((back - pdf).abs() <= 1e-10 * pdf);
    }

    #[test]
    fn weights_lie_in_unit_interval(seed in any::<u64>(), vertices in 2usize..6, merging: bool) {
        let chain = random_chain(&mut Stream::new(seed), vertices, merging);
        let weights = chain.weights().unwrap();
        let mut sum = 0.0;
        for (_, w) in weights {
            prop_assert!(w > 0.0 && w <= 1.0);
            sum += w;
        }
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }
}

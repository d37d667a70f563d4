//! Progressive bidirectional integrators.
//!
//! Every iteration traces one light subpath per pixel, indexes their
//! vertices for merging and then traces one eye subpath per pixel. The
//! four integrators differ in the techniques they enable:
//!
//! | kind | light tracing + connections | merging | light-side sampling |
//! |------|-----------------------------|---------|---------------------|
//! | bpt  | yes | no  | BSDF |
//! | ppm  | no  | yes (first diffuse eye vertex, unweighted) | BSDF |
//! | vcm  | yes | yes | BSDF |
//! | gmis | yes | yes | branching proposal mixture |

mod film;
mod mis;
mod photon;
mod proposal;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub use film::Film;
pub use mis::{MisFactors, SubpathMis};
pub use photon::PhotonStore;
pub use proposal::{Proposal, ProposalMixture, PROPOSALS};
pub use trace::{LightSubpath, LightVertex, TraceCounters, Tracer};

use crate::imageio::{self, Image};
use crate::math::Rgb;
use crate::rng::Stream;
use crate::scene::{CameraView, Scene};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntegratorKind {
    Bpt,
    Ppm,
    Vcm,
    Gmis,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 4] = [Self::Bpt, Self::Ppm, Self::Vcm, Self::Gmis];

    /// Light tracing, next-event estimation and vertex connections.
    pub fn connects(self) -> bool {
        self != Self::Ppm
    }

    pub fn merges(self) -> bool {
        self != Self::Bpt
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bpt => "bpt",
            Self::Ppm => "ppm",
            Self::Vcm => "vcm",
            Self::Gmis => "gmis",
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RenderError::Config(format!("unknown integrator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub kind: IntegratorKind,
    /// Samples one branching light path may draw, emission included.
    pub max_samples: usize,
    /// Directions drawn per non-delta light vertex when branching.
    pub branch: usize,
    /// Longest full path in edges.
    pub max_depth: usize,
    /// Initial merge radius as a fraction of the scene diagonal.
    pub radius_factor: f64,
    /// Radius reduction exponent.
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl IntegratorConfig {
    pub fn new(kind: IntegratorKind) -> Self {
        Self {
            kind,
            max_samples: 20,
            branch: 4,
            max_depth: 12,
            radius_factor: 0.003,
            alpha: 0.75,
            seed: 0,
            threads: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let err = |m: &str| Err(RenderError::Config(m.to_owned()));
        if self.max_samples < 1 {
            return err("max samples must be at least 1");
        }
        if self.branch < 1 {
            return err("branch factor must be at least 1");
        }
        if self.max_depth < 1 {
            return err("max depth must be at least 1");
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return err("alpha must lie in (0.5, 1)");
        }
        if !(self.radius_factor > 0.0 && self.radius_factor.is_finite()) {
            return err("radius factor must be positive");
        }
        if self.threads == Some(0) {
            return err("thread count must be positive");
        }
        Ok(())
    }

    /// Merge radius of iteration `i` (0-based): `r0 (i + 1)^((alpha - 1) / 2)`.
    pub fn radius(&self, scene: &Scene, iteration: u64) -> f64 {
        let r0 = self.radius_factor * scene.bounds().diagonal();
        r0 * ((iteration + 1) as f64).powf(0.5 * (self.alpha - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    Iterations(u64),
    Seconds(f64),
}

/// Aggregate counters over a render.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RenderStats {
    pub iterations: u64,
    pub counters: TraceCounters,
}

impl RenderStats {
    pub fn rejected_samples(&self) -> u64 {
        self.counters.rejected_samples
    }

    /// Mean over light paths of the longest chain in edges.
    pub fn average_path_length(&self) -> f64 {
        ratio(self.counters.light_path_length, self.counters.light_paths)
    }

    /// Directions drawn per non-delta light scattering event.
    pub fn average_branch_factor(&self) -> f64 {
        ratio(self.counters.branch_samples, self.counters.branch_events)
    }

    /// Mean edge count from the light over all light vertices.
    pub fn average_vertex_depth(&self) -> f64 {
        ratio(self.counters.light_vertex_depth, self.counters.light_vertices)
    }

    /// Sidecar text written next to rendered images.
    pub fn to_text(&self) -> String {
        let c = &self.counters;
        format!(
            "{{\n  \"iterations\": {},\n  \"light_paths\": {},\n  \"light_vertices\": {},\n  \
             \"rejected_samples\": {},\n  \"dropped_samples\": {},\n  \
             \"average_path_length\": {},\n  \"average_branch_factor\": {},\n  \
             \"average_vertex_depth\": {},\n  \"max_samples_per_path\": {}\n}}\n",
            self.iterations,
            c.light_paths,
            c.light_vertices,
            c.rejected_samples,
            c.dropped_samples,
            self.average_path_length(),
            self.average_branch_factor(),
            self.average_vertex_depth(),
            c.max_charged_samples,
        )
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: u64,
    pub seconds: f64,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub rows: Vec<LogRow>,
}

impl ConvergenceLog {
    pub const HEADER: &'static str = "iteration,seconds,rmse";

    /// CSV with an empty `rmse` field when no reference was given.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let rmse = r.rmse.map(|e| format!("{e:e}")).unwrap_or_default();
            out += &format!("{},{:.6},{}\n", r.iteration, r.seconds, rmse);
        }
        out
    }

    /// The RMSE column; fails when the render had no reference.
    pub fn rmse_series(&self) -> Result<Vec<f64>, RenderError> {
        self.rows
            .iter()
            .map(|r| {
                r.rmse
                    .ok_or_else(|| RenderError::Config("RMSE requested without a reference".into()))
            })
            .collect()
    }
}

/// A progressive render in flight.
pub struct Renderer<'a> {
    scene: &'a Scene,
    view: CameraView,
    config: IntegratorConfig,
    film: Film,
    stats: RenderStats,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Renderer<'a> {
    pub fn new(
        scene: &'a Scene,
        width: usize,
        height: usize,
        config: IntegratorConfig,
    ) -> Result<Self, RenderError> {
        config.validate()?;
        if width == 0 || height == 0 {
            return Err(RenderError::Config("film must be at least 1x1".into()));
        }
        let pool = match config.threads {
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| RenderError::Threads(e.to_string()))?,
            ),
            None => None,
        };
        Ok(Self {
            scene,
            view: CameraView::new(&scene.camera, width, height),
            config,
            film: Film::new(width, height),
            stats: RenderStats::default(),
            pool,
        })
    }

    pub fn film(&self) -> &Film {
        &self.film
    }

    pub fn stats(&self) -> &RenderStats {
        &self.stats
    }

    pub fn view(&self) -> &CameraView {
        &self.view
    }

    /// Runs one light pass and one eye pass and folds the frame into the
    /// film.
    pub fn iterate(&mut self) {
        let (frame, counters) = match &self.pool {
            Some(pool) => pool.install(|| self.render_frame()),
            None => self.render_frame(),
        };
        self.film.accumulate(&frame);
        self.stats.iterations += 1;
        self.stats.counters.add(&counters);
    }

    fn render_frame(&self) -> (Vec<Rgb>, TraceCounters) {
        let iteration = self.film.iterations();
        let tracer = Tracer::new(self.scene, self.view, &self.config, iteration);
        let base = Stream::new(self.config.seed).derive(&[iteration]);
        let n = self.view.pixel_count();

        let subpaths: Vec<LightSubpath> = (0..n)
            .into_par_iter()
            .map(|p| tracer.trace_light_subpath(&mut base.derive(&[0, p as u64])))
            .collect();

        let mut counters = TraceCounters::default();
        let mut frame = vec![Rgb::ZERO; n];
        let mut vertices = Vec::new();
        let mut ranges = Vec::with_capacity(n);
        for sp in &subpaths {
            counters.add(&sp.counters);
            for &(pixel, c) in &sp.splats {
                frame[pixel] += c;
            }
            let start = vertices.len();
            vertices.extend_from_slice(&sp.vertices);
            ranges.push(start..vertices.len());
        }
        drop(subpaths);

        let store = self.config.kind.merges().then(|| {
            PhotonStore::build(vertices.iter().map(|v| v.position).collect(), tracer.radius)
        });

        let eye: Vec<(Rgb, TraceCounters)> = (0..n)
            .into_par_iter()
            .map(|p| {
                let mut c = TraceCounters::default();
                let color = tracer.trace_eye_path(
                    p,
                    &mut base.derive(&[1, p as u64]),
                    &vertices[ranges[p].clone()],
                    store.as_ref(),
                    &vertices,
                    &mut c,
                );
                (color, c)
            })
            .collect();
        for (p, (color, c)) in eye.into_iter().enumerate() {
            frame[p] += color;
            counters.add(&c);
        }
        (frame, counters)
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub film: Film,
    pub log: ConvergenceLog,
    pub stats: RenderStats,
}

/// Iterates until `stop` holds, logging elapsed time and, when a
/// reference is given, the RMSE of the running mean after every
/// iteration. At least one iteration always runs.
pub fn render_progressive(
    scene: &Scene,
    width: usize,
    height: usize,
    config: IntegratorConfig,
    stop: StopCondition,
    reference: Option<&Image>,
) -> Result<RenderOutput, RenderError> {
    if let Some(r) = reference {
        if (r.width, r.height) != (width, height) {
            return Err(RenderError::Config(format!(
                "reference is {}x{}, film is {width}x{height}",
                r.width, r.height
            )));
        }
    }
    let mut renderer = Renderer::new(scene, width, height, config)?;
    let mut log = ConvergenceLog::default();
    let start = Instant::now();
    loop {
        renderer.iterate();
        let seconds = start.elapsed().as_secs_f64();
        let iteration = renderer.film().iterations();
        log.rows.push(LogRow {
            iteration,
            seconds,
            rmse: reference.map(|r| imageio::rmse(renderer.film().mean(), &r.pixels)),
        });
        let done = match stop {
            StopCondition::Iterations(n) => iteration >= n,
            StopCondition::Seconds(s) => seconds >= s,
        };
        if done {
            break;
        }
    }
    Ok(RenderOutput {
        film: renderer.film,
        log,
        stats: renderer.stats,
    })
}

//! Subpath MIS state in factored form.
//!
//! Each subpath carries three running quantities. With `p_fwd` the
//! density that generated the current vertex and `p_rev` the density of
//! the opposite subpath generating the previous one:
//!
//! * `dvcm`: `1 / p_fwd`, times `dist^2 / cos` once the vertex is reached,
//! * `dvc`: light-side connection sum divided by `p_fwd`,
//! * `dvm`: light-side merging sum divided by `p_fwd`.
//!
//! Closing a technique multiplies these by the densities that are only
//! known at that point.

/// Technique scale factors for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisFactors {
    /// `eta` when merging is enabled, else zero.
    pub vm: f64,
    /// `1 / eta` when connections are enabled, else zero.
    pub vc: f64,
    /// Light subpaths per iteration.
    pub light_paths: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SubpathMis {
    pub dvcm: f64,
    pub dvc: f64,
    pub dvm: f64,
}

impl SubpathMis {
    /// State right after emission. Densities include the light pick
    /// probability.
    pub fn from_emission(
        factors: &MisFactors,
        emission_pdf_w: f64,
        direct_pdf_a: f64,
        cos_light: f64,
        is_delta: bool,
        is_finite: bool,
    ) -> Self {
        let dvc = if is_delta {
            0.0
        } else if is_finite {
            cos_light / emission_pdf_w
        } else {
            1.0 / emission_pdf_w
        };
        Self {
            dvcm: direct_pdf_a / emission_pdf_w,
            dvc,
            dvm: dvc * factors.vc,
        }
    }

    /// State of a fresh eye subpath whose ray has solid-angle density
    /// `camera_pdf_w`.
    pub fn from_camera(factors: &MisFactors, camera_pdf_w: f64) -> Self {
        Self {
            dvcm: factors.light_paths / camera_pdf_w,
            dvc: 0.0,
            dvm: 0.0,
        }
    }

    /// Moves the solid-angle densities to area measure at a new hit.
    /// `scale_distance` is false only for the first segment of a path
    /// from an infinitely distant light.
    pub fn on_hit(&mut self, dist2: f64, cos_in: f64, scale_distance: bool) {
        if scale_distance {
            self.dvcm *= dist2;
        }
        let inv = 1.0 / cos_in;
        self.dvcm *= inv;
        self.dvc *= inv;
        self.dvm *= inv;
    }

    /// Update after a non-delta scattering event with outgoing cosine
    /// `cos_out`, forward density `pdf_fwd` and reverse density `pdf_rev`
    /// (both solid angle, both including the survival probability).
    pub fn on_scatter(&mut self, factors: &MisFactors, cos_out: f64, pdf_fwd: f64, pdf_rev: f64) {
        let k = cos_out / pdf_fwd;
        let dvc = k * (self.dvc * pdf_rev + self.dvcm + factors.vm);
        let dvm = k * (self.dvm * pdf_rev + self.dvcm * factors.vc + 1.0);
        *self = Self {
            dvcm: 1.0 / pdf_fwd,
            dvc,
            dvm,
        };
    }

    /// Update after a delta scattering event. The delta densities cancel
    /// in every ratio; techniques ending on this vertex are impossible.
    pub fn on_specular(&mut self, cos_out: f64) {
        self.dvcm = 0.0;
        self.dvc *= cos_out;
        self.dvm *= cos_out;
    }

    /// Sum of the other side's techniques relative to a connection whose
    /// opposite subpath reaches this vertex with area density
    /// `pdf_other_a`; `pdf_rev_w` is the reverse density at this vertex.
    pub fn connection_sum(&self, factors: &MisFactors, pdf_other_a: f64, pdf_rev_w: f64) -> f64 {
        pdf_other_a * (factors.vm + self.dvcm + self.dvc * pdf_rev_w)
    }

    /// Sum relative to a merge at this vertex. `pdf_w` is the density with
    /// which the opposite subpath would have continued through it.
    pub fn merge_sum(&self, factors: &MisFactors, pdf_w: f64) -> f64 {
        self.dvcm * factors.vc + self.dvm * pdf_w
    }

    /// Sum relative to an eye subpath hitting an area light directly.
    pub fn emission_sum(&self, direct_pdf_a: f64, emission_pdf_w: f64) -> f64 {
        direct_pdf_a * self.dvcm + emission_pdf_w * self.dvc
    }
}

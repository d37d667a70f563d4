//! Direction proposals for branching light subpaths.

use std::f64::consts::{FRAC_1_PI, PI};

use crate::math::{Frame, Vec3};
use crate::scene::{cosine_hemisphere, uniform_hemisphere, Material};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proposal {
    /// The material's own sampler.
    Bsdf,
    Cosine,
    Uniform,
}

pub const PROPOSALS: [Proposal; 3] = [Proposal::Bsdf, Proposal::Cosine, Proposal::Uniform];

impl Proposal {
    /// Density of `wi` given `wo` for a non-delta material.
    pub fn pdf(self, material: &Material, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
        let (ci, co) = (wi.dot(n), wo.dot(n));
        if ci * co <= 0.0 {
            return 0.0;
        }
        match self {
            Proposal::Bsdf => material.pdf(wi, wo, n).unwrap_or(0.0),
            Proposal::Cosine => ci.abs() * FRAC_1_PI,
            Proposal::Uniform => 0.5 / PI,
        }
    }

    /// Draws a direction on the side of `wo`.
    pub fn sample(self, material: &Material, wo: Vec3, n: Vec3, u: [f64; 3]) -> Option<Vec3> {
        let co = wo.dot(n);
        if co == 0.0 {
            return None;
        }
        let ns = if co > 0.0 { n } else { -n };
        let local = match self {
            Proposal::Bsdf => return material.sample(wo, n, u).map(|s| s.wi),
            Proposal::Cosine => cosine_hemisphere(u[0], u[1]),
            Proposal::Uniform => uniform_hemisphere(u[0], u[1]),
        };
        Some(Frame::from_normal(ns).to_world(local))
    }
}

/// Equal-weight mixture of the first `len` proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposalMixture {
    len: usize,
}

impl ProposalMixture {
    /// Mixture used when `branch` directions are drawn per vertex.
    pub fn for_branching(branch: usize) -> Self {
        Self {
            len: branch.clamp(1, PROPOSALS.len()),
        }
    }

    pub fn bsdf_only() -> Self {
        Self { len: 1 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn proposals(&self) -> &'static [Proposal] {
        &PROPOSALS[..self.len]
    }

    pub fn pdf(&self, material: &Material, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
        if self.len == 1 {
            return Proposal::Bsdf.pdf(material, wi, wo, n);
        }
        self.proposals()
            .iter()
            .map(|p| p.pdf(material, wi, wo, n))
            .sum::<f64>()
            / self.len as f64
    }
}

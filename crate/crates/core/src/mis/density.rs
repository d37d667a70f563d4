//! Built-in proposal families and the proposal set they form.

use rand_distr::{Distribution, StandardNormal};

use super::quadrature::{self, Tolerance};
use super::MisError;
use crate::rng::Stream;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Half-width, in standard deviations, of the window that stands in for the
/// unbounded support of a normal density.
pub const NORMAL_SUPPORT_SIGMAS: f64 = 10.0;

/// A point of a one- or two-dimensional domain. One-dimensional problems
/// leave `y` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn line(x: f64) -> Self {
        Self { x, y: 0.0 }
    }

    pub fn plane(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Univariate {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
}

impl Univariate {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, MisError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MisError::Parameter(format!(
                "uniform bounds must satisfy lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn normal(mean: f64, std: f64) -> Result<Self, MisError> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(MisError::Parameter(format!(
                "normal needs finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Self::Normal { mean, std })
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::Normal { mean, std } => {
                let z = (x - mean) / std;
                INV_SQRT_2PI / std * (-0.5 * z * z).exp()
            }
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
            Self::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
        }
    }

    /// Support, or the `NORMAL_SUPPORT_SIGMAS` window for a normal.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lo, hi } => (lo, hi),
            Self::Normal { mean, std } => (
                mean - NORMAL_SUPPORT_SIGMAS * std,
                mean + NORMAL_SUPPORT_SIGMAS * std,
            ),
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Uniform { lo, hi } => vec![lo, hi],
            Self::Normal { mean, .. } => vec![mean],
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Self::Normal { .. })
    }
}

/// A proposal density: a univariate family on a line, or an axis-aligned
/// product of two on the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    Line(Univariate),
    Plane(Univariate, Univariate),
}

impl Proposal {
    pub fn dim(&self) -> usize {
        match self {
            Self::Line(_) => 1,
            Self::Plane(..) => 2,
        }
    }

    #[inline]
    pub fn pdf(&self, p: &Point) -> f64 {
        match self {
            Self::Line(u) => u.pdf(p.x),
            Self::Plane(u, v) => u.pdf(p.x) * v.pdf(p.y),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> Point {
        match self {
            Self::Line(u) => Point::line(u.sample(rng)),
            Self::Plane(u, v) => {
                let x = u.sample(rng);
                Point::plane(x, v.sample(rng))
            }
        }
    }

    pub(crate) fn axes(&self) -> [Option<&Univariate>; 2] {
        match self {
            Self::Line(u) => [Some(u), None],
            Self::Plane(u, v) => [Some(u), Some(v)],
        }
    }
}

/// Interval or axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rect { x: (f64, f64), y: (f64, f64) },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Rect { .. } => 2,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Self::Interval { lo, hi } => p.x >= lo && p.x <= hi,
            Self::Rect { x, y } => p.x >= x.0 && p.x <= x.1 && p.y >= y.0 && p.y <= y.1,
        }
    }

    pub fn axis(&self, axis: usize) -> (f64, f64) {
        match (*self, axis) {
            (Self::Interval { lo, hi }, 0) => (lo, hi),
            (Self::Rect { x, .. }, 0) => x,
            (Self::Rect { y, .. }, 1) => y,
            _ => panic!("axis {axis} out of range for {}-d domain", self.dim()),
        }
    }
}

/// Integrates `f` over a one- or two-dimensional domain with nested
/// adaptive quadrature. `breaks[axis]` lists the non-smooth points.
pub(crate) fn integrate_domain<F: Fn(&Point) -> f64>(
    f: F,
    domain: &Domain,
    breaks: &[Vec<f64>; 2],
    tol: Tolerance,
) -> quadrature::Estimate {
    match *domain {
        Domain::Interval { lo, hi } => {
            quadrature::integrate(|x| f(&Point::line(x)), lo, hi, &breaks[0], tol)
        }
        Domain::Rect { x, y } => {
            let mut converged = true;
            let inner_tol = Tolerance {
                abs: tol.abs * 1e-2,
                rel: tol.rel * 1e-1,
            };
            let outer = quadrature::integrate(
                |yv| {
                    let inner = quadrature::integrate(
                        |xv| f(&Point::plane(xv, yv)),
                        x.0,
                        x.1,
                        &breaks[0],
                        inner_tol,
                    );
                    converged &= inner.converged;
                    inner.value
                },
                y.0,
                y.1,
                &breaks[1],
                tol,
            );
            quadrature::Estimate {
                converged: converged && outer.converged,
                ..outer
            }
        }
    }
}

/// Ordered set of `N >= 1` proposal densities on a common domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSet {
    proposals: Vec<Proposal>,
    domain: Domain,
}

impl ProposalSet {
    /// Builds the set on an explicit domain, checking that each member
    /// integrates to one over it to within 1e-6.
    pub fn new(proposals: Vec<Proposal>, domain: Domain) -> Result<Self, MisError> {
        if proposals.is_empty() {
            return Err(MisError::Parameter("proposal set needs N >= 1".into()));
        }
        if let Some(p) = proposals.iter().find(|p| p.dim() != domain.dim()) {
            return Err(MisError::Parameter(format!(
                "{}-d proposal on a {}-d domain",
                p.dim(),
                domain.dim()
            )));
        }
        let set = Self { proposals, domain };
        for (k, p) in set.proposals.iter().enumerate() {
            let mass = integrate_domain(
                |x| p.pdf(x),
                &set.domain,
                &set.breakpoints(),
                Tolerance {
                    abs: 1e-12,
                    rel: 1e-10,
                },
            )
            .value;
            if (mass - 1.0).abs() > 1e-6 {
                return Err(MisError::Domain(format!(
                    "proposal {k} has mass {mass} on the domain (expected 1)"
                )));
            }
        }
        Ok(set)
    }

    /// Builds the set on the smallest domain covering every member's
    /// effective support.
    pub fn covering(proposals: Vec<Proposal>) -> Result<Self, MisError> {
        let first = proposals
            .first()
            .ok_or_else(|| MisError::Parameter("proposal set needs N >= 1".into()))?;
        let dim = first.dim();
        let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        for p in &proposals {
            for (axis, u) in p.axes().iter().enumerate() {
                if let Some(u) = u {
                    let (lo, hi) = u.effective_support();
                    bounds[axis].0 = bounds[axis].0.min(lo);
                    bounds[axis].1 = bounds[axis].1.max(hi);
                }
            }
        }
        let domain = if dim == 1 {
            Domain::Interval {
                lo: bounds[0].0,
                hi: bounds[0].1,
            }
        } else {
            Domain::Rect {
                x: bounds[0],
                y: bounds[1],
            }
        };
        Self::new(proposals, domain)
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Density of proposal `k` (0-based).
    #[inline]
    pub fn pdf(&self, k: usize, x: &Point) -> f64 {
        self.proposals[k].pdf(x)
    }

    /// Mixture density `(1/N) * sum_n p_n(x)`.
    pub fn mixture_pdf(&self, x: &Point) -> Result<f64, MisError> {
        if !self.domain.contains(x) {
            return Err(MisError::Domain(format!(
                "point ({}, {}) outside the domain",
                x.x, x.y
            )));
        }
        Ok(self.mixture_pdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn mixture_pdf_unchecked(&self, x: &Point) -> f64 {
        self.proposals.iter().map(|p| p.pdf(x)).sum::<f64>() / self.len() as f64
    }

    pub fn sample(&self, k: usize, rng: &mut Stream) -> Point {
        self.proposals[k].sample(rng)
    }

    pub(crate) fn breakpoints(&self) -> [Vec<f64>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for p in &self.proposals {
            for (axis, u) in p.axes().iter().enumerate() {
                if let Some(u) = u {
                    out[axis].extend(u.breakpoints());
                }
            }
        }
        out
    }

    pub(crate) fn has_unbounded_member(&self) -> bool {
        self.proposals
            .iter()
            .any(|p| p.axes().iter().flatten().any(|u| u.is_unbounded()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_pdf_oracle(x: f64, m: f64, s: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn single_member_mixture_is_identity() {
        let p = Proposal::Line(Univariate::normal(0.3, 1.7).unwrap());
        let set = ProposalSet::covering(vec![p]).unwrap();
        for x in [-2.0, 0.0, 0.3, 4.1] {
            let pt = Point::line(x);
            assert_eq!(set.mixture_pdf(&pt).unwrap(), p.pdf(&pt));
        }
    }

    #[test]
    fn two_uniforms_at_half() {
        let set = ProposalSet::new(
            vec![
                Proposal::Line(Univariate::uniform(0.0, 1.0).unwrap()),
                Proposal::Line(Univariate::uniform(0.0, 2.0).unwrap()),
            ],
            Domain::Interval { lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        assert_eq!(set.mixture_pdf(&Point::line(0.5)).unwrap(), 0.75);
    }

    #[test]
    fn three_normals_match_density_sum_oracle() {
        let set = ProposalSet::covering(
            [0.0, 2.0, 4.0]
                .iter()
                .map(|&m| Proposal::Line(Univariate::normal(m, 1.0).unwrap()))
                .collect(),
        )
        .unwrap();
        let oracle = (normal_pdf_oracle(1.0, 0.0, 1.0)
            + normal_pdf_oracle(1.0, 2.0, 1.0)
            + normal_pdf_oracle(1.0, 4.0, 1.0))
            / 3.0;
        let got = set.mixture_pdf(&Point::line(1.0)).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn outside_domain_is_rejected() {
        let set = ProposalSet::covering(vec![Proposal::Line(
            Univariate::uniform(0.0, 1.0).unwrap(),
        )])
        .unwrap();
        assert!(matches!(
            set.mixture_pdf(&Point::line(1.5)),
            Err(MisError::Domain(_))
        ));
    }

    #[test]
    fn truncating_domain_is_rejected() {
        let err = ProposalSet::new(
            vec![Proposal::Line(Univariate::normal(0.0, 1.0).unwrap())],
            Domain::Interval { lo: -1.0, hi: 1.0 },
        );
        assert!(matches!(err, Err(MisError::Domain(_))));
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(ProposalSet::covering(vec![]).is_err());
    }

    #[test]
    fn product_density_on_rect() {
        let p = Proposal::Plane(
            Univariate::uniform(0.0, 2.0).unwrap(),
            Univariate::normal(0.0, 1.0).unwrap(),
        );
        let set = ProposalSet::covering(vec![p]).unwrap();
        let v = set.mixture_pdf(&Point::plane(1.0, 0.0)).unwrap();
        assert!((v - 0.5 * INV_SQRT_2PI).abs() < 1e-15);
    }
}

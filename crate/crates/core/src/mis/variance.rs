//! Exact variances of the six estimators for `M = N` (one selection
//! cycle). With `M = kN` the cycles are independent and the variance is
//! divided by `k`.
//!
//! Writing `I = integral f`, `q_k` for the proposals and `psi` for their
//! mixture:
//!
//! * R1, N1: `(1/N^2) sum_k int f^2/q_k - I^2/N`
//! * R3: `(1/N) int f^2/psi - I^2/N`
//! * N3: `(1/N) int f^2/psi - (1/N^2) sum_k (int f q_k/psi)^2`
//! * R2: average over all `N^N` index sequences `j` of
//!   `(1/N^2) [N int f^2/phi_j - sum_n (int f q_{j_n}/phi_j)^2]` where
//!   `phi_j` is the mixture of the selected proposals.
//! * N2: `(1/N^2) sum_n E[int f^2/p_n] - I^2/N` where `p_n` is the
//!   mixture of the proposals not yet used before slot `n`. Each weight has
//!   conditional mean `I` given the past, so the cross terms vanish.

use std::collections::HashMap;

use super::density::{integrate_domain, Point, ProposalSet};
use super::quadrature::Tolerance;
use super::scheme::SchemeTag;
use super::target::Integrand;
use super::MisError;

/// Largest `N` for which R2 and N2 index sequences are enumerated.
pub const MAX_ENUMERATED_PROPOSALS: usize = 6;

const TOL: Tolerance = Tolerance {
    abs: 1e-15,
    rel: 1e-12,
};

/// Relative size of a second-moment integrand at a truncated domain edge
/// above which the integral is declared divergent.
const TAIL_LIMIT: f64 = 1e-9;

struct Ctx<'a, T: Integrand + ?Sized> {
    target: &'a T,
    proposals: &'a ProposalSet,
    breaks: [Vec<f64>; 2],
    truncated: bool,
}

impl<'a, T: Integrand + ?Sized> Ctx<'a, T> {
    fn new(target: &'a T, proposals: &'a ProposalSet) -> Self {
        let mut breaks = proposals.breakpoints();
        let tb = target.breakpoints();
        for axis in 0..2 {
            breaks[axis].extend(tb[axis].iter().copied());
        }
        Self {
            target,
            proposals,
            breaks,
            truncated: target.is_unbounded() || proposals.has_unbounded_member(),
        }
    }

    fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> Result<f64, MisError> {
        let e = integrate_domain(&f, self.proposals.domain(), &self.breaks, TOL);
        if !e.converged || !e.value.is_finite() {
            return Err(MisError::Divergence(format!(
                "quadrature did not converge (value {}, error {})",
                e.value, e.error
            )));
        }
        Ok(e.value)
    }

    /// `int f^2 / d`, refusing points where `d` vanishes under a nonzero
    /// target and integrands that are still large at a truncated edge.
    fn second_moment<D: Fn(&Point) -> f64>(&self, den: D) -> Result<f64, MisError> {
        let bad = std::cell::Cell::new(None);
        let integrand = |x: &Point| {
            let f = self.target.eval(x);
            if f == 0.0 {
                return 0.0;
            }
            let d = den(x);
            if d > 0.0 {
                f * f / d
            } else {
                bad.set(Some(*x));
                0.0
            }
        };
        let value = self.integrate(integrand)?;
        if let Some(x) = bad.get() {
            return Err(MisError::Divergence(format!(
                "weighting density vanishes at ({}, {}) where the target does not",
                x.x, x.y
            )));
        }
        if self.truncated {
            for x in self.edge_points() {
                let v = integrand(&x);
                if v > TAIL_LIMIT * value.abs().max(1.0) {
                    return Err(MisError::Divergence(format!(
                        "f^2/d is {v:e} at the domain edge ({}, {})",
                        x.x, x.y
                    )));
                }
            }
        }
        Ok(value)
    }

    fn edge_points(&self) -> Vec<Point> {
        let d = self.proposals.domain();
        match d.dim() {
            1 => {
                let (lo, hi) = d.axis(0);
                vec![Point::line(lo), Point::line(hi)]
            }
            _ => {
                let (x0, x1) = d.axis(0);
                let (y0, y1) = d.axis(1);
                let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
                [
                    (x0, ym),
                    (x1, ym),
                    (xm, y0),
                    (xm, y1),
                    (x0, y0),
                    (x0, y1),
                    (x1, y0),
                    (x1, y1),
                ]
                .into_iter()
                .map(|(x, y)| Point::plane(x, y))
                .collect()
            }
        }
    }

    fn mean_ratio<D: Fn(&Point) -> f64>(&self, k: usize, den: D) -> Result<f64, MisError> {
        self.integrate(|x| {
            let f = self.target.eval(x);
            let d = den(x);
            if f == 0.0 || d <= 0.0 {
                0.0
            } else {
                f * self.proposals.pdf(k, x) / d
            }
        })
    }

    /// Mixture of the proposals weighted by their selection counts.
    fn subset_pdf(&self, counts: &[usize], x: &Point) -> f64 {
        let total: usize = counts.iter().sum();
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| c as f64 * self.proposals.pdf(k, x))
            .sum::<f64>()
            / total as f64
    }
}

/// `integral f` over the proposal domain.
pub fn domain_integral<T: Integrand + ?Sized>(
    target: &T,
    proposals: &ProposalSet,
) -> Result<f64, MisError> {
    Ctx::new(target, proposals).integrate(|x| target.eval(x))
}

/// Exact variance of one `M = N` estimate under `scheme`.
pub fn analytic_variance<T: Integrand + ?Sized>(
    scheme: SchemeTag,
    target: &T,
    proposals: &ProposalSet,
) -> Result<f64, MisError> {
    let n = proposals.len();
    let nf = n as f64;
    if matches!(scheme, SchemeTag::R2 | SchemeTag::N2) && n > MAX_ENUMERATED_PROPOSALS {
        return Err(MisError::Capability(scheme, n));
    }
    let ctx = Ctx::new(target, proposals);
    let integral = ctx.integrate(|x| target.eval(x))?;
    let psi = |x: &Point| proposals.mixture_pdf_unchecked(x);

    match scheme {
        SchemeTag::R1 | SchemeTag::N1 => {
            let mut sum = 0.0;
            for k in 0..n {
                sum += ctx.second_moment(|x| proposals.pdf(k, x))?;
            }
            Ok(sum / (nf * nf) - integral * integral / nf)
        }
        SchemeTag::R3 => Ok((ctx.second_moment(psi)? - integral * integral) / nf),
        SchemeTag::N3 => {
            let m2 = ctx.second_moment(psi)?;
            let mut sq = 0.0;
            for k in 0..n {
                let mu = ctx.mean_ratio(k, psi)?;
                sq += mu * mu;
            }
            Ok(m2 / nf - sq / (nf * nf))
        }
        SchemeTag::R2 => {
            // Sum over all N^N sequences; the summand depends only on the
            // multiset of selected indices, so cache per count vector.
            let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
            let mut seq = vec![0usize; n];
            let mut total = 0.0;
            loop {
                let mut counts = vec![0usize; n];
                for &j in &seq {
                    counts[j] += 1;
                }
                let term = match cache.get(&counts) {
                    Some(&t) => t,
                    None => {
                        let phi = |x: &Point| ctx.subset_pdf(&counts, x);
                        let mut t = nf * ctx.second_moment(phi)?;
                        for (k, &c) in counts.iter().enumerate() {
                            if c > 0 {
                                let mu = ctx.mean_ratio(k, phi)?;
                                t -= c as f64 * mu * mu;
                            }
                        }
                        cache.insert(counts.clone(), t);
                        t
                    }
                };
                total += term;
                // Next sequence in base-N counting order.
                let mut i = 0;
                while i < n {
                    seq[i] += 1;
                    if seq[i] < n {
                        break;
                    }
                    seq[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            Ok(total / (nf.powi(n as i32) * nf * nf))
        }
        SchemeTag::N2 => {
            // Slot s sees a uniformly random set of s used proposals; its
            // density is the mixture of the remaining N - s.
            let mut cache: HashMap<u32, f64> = HashMap::new();
            let mut sum = 0.0;
            for used in 0..n {
                let mut acc = 0.0;
                let mut subsets = 0usize;
                for mask in 0u32..(1u32 << n) {
                    if mask.count_ones() as usize != used {
                        continue;
                    }
                    let m2 = match cache.get(&mask) {
                        Some(&v) => v,
                        None => {
                            let counts: Vec<usize> = (0..n)
                                .map(|k| usize::from(mask & (1 << k) == 0))
                                .collect();
                            let v = ctx.second_moment(|x| ctx.subset_pdf(&counts, x))?;
                            cache.insert(mask, v);
                            v
                        }
                    };
                    acc += m2;
                    subsets += 1;
                }
                sum += acc / subsets as f64;
            }
            Ok(sum / (nf * nf) - integral * integral / nf)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mis::density::{Domain, Proposal, Univariate};
    use crate::mis::Target;

    fn normals(means: &[f64], std: f64) -> ProposalSet {
        ProposalSet::covering(
            means
                .iter()
                .map(|&m| Proposal::Line(Univariate::normal(m, std).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn canonical_target() -> Target {
        Target::single(Proposal::Line(Univariate::normal(1.0, 0.5).unwrap()))
    }

    #[test]
    fn identical_proposals_collapse_to_plain_is() {
        let set = normals(&[0.5, 0.5, 0.5], 1.2);
        let target = canonical_target();
        let single = normals(&[0.5], 1.2);
        let base = analytic_variance(SchemeTag::R1, &target, &single).unwrap() / 3.0;
        for tag in SchemeTag::ALL {
            let v = analytic_variance(tag, &target, &set).unwrap();
            assert!((v - base).abs() < 1e-10 * base.max(1.0), "{tag}: {v} vs {base}");
        }
    }

    #[test]
    fn r1_equals_n1() {
        let set = normals(&[0.0, 2.0, 4.0], 1.0);
        let t = canonical_target();
        let r1 = analytic_variance(SchemeTag::R1, &t, &set).unwrap();
        let n1 = analytic_variance(SchemeTag::N1, &t, &set).unwrap();
        assert!((r1 - n1).abs() <= 1e-8);
    }

    #[test]
    fn canonical_testbed_values() {
        // Frozen from an independent scipy.integrate.quad computation of the
        // same formulas on [-10, 14].
        let set = normals(&[0.0, 2.0, 4.0], 1.0);
        let t = canonical_target();
        let expect = [
            (SchemeTag::R1, 29.02120439439977),
            (SchemeTag::R2, 4.020573646521393),
            (SchemeTag::R3, 0.8201442600140725),
            (SchemeTag::N2, 10.301793545311607),
            (SchemeTag::N3, 0.6724023419623213),
        ];
        for (tag, v) in expect {
            let got = analytic_variance(tag, &t, &set).unwrap();
            assert!((got - v).abs() < 1e-8 * v, "{tag}: {got} vs {v}");
        }
    }

    #[test]
    fn enumeration_limit() {
        let set = normals(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 1.0);
        let t = canonical_target();
        for tag in [SchemeTag::R2, SchemeTag::N2] {
            assert!(matches!(
                analytic_variance(tag, &t, &set),
                Err(MisError::Capability(_, 7))
            ));
        }
        assert!(analytic_variance(SchemeTag::N3, &t, &set).is_ok());
    }

    #[test]
    fn uncovered_support_diverges() {
        let set = ProposalSet::new(
            vec![
                Proposal::Line(Univariate::uniform(0.0, 1.0).unwrap()),
                Proposal::Line(Univariate::uniform(0.0, 2.0).unwrap()),
            ],
            Domain::Interval { lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let t = Target::single(Proposal::Line(Univariate::uniform(0.0, 2.0).unwrap()));
        assert!(matches!(
            analytic_variance(SchemeTag::R1, &t, &set),
            Err(MisError::Divergence(_))
        ));
        // The mixture covers [0, 2], so R3 is fine.
        assert!(analytic_variance(SchemeTag::R3, &t, &set).is_ok());
    }

    #[test]
    fn heavy_ratio_tail_diverges() {
        // A narrow proposal under a wide target: f^2/q grows without bound.
        let set = normals(&[0.0], 0.5);
        let t = Target::single(Proposal::Line(Univariate::normal(0.0, 1.0).unwrap()));
        assert!(matches!(
            analytic_variance(SchemeTag::R1, &t, &set),
            Err(MisError::Divergence(_))
        ));
    }

    #[test]
    fn two_dimensional_product() {
        let p = |mx: f64, my: f64| {
            Proposal::Plane(
                Univariate::normal(mx, 1.0).unwrap(),
                Univariate::normal(my, 1.0).unwrap(),
            )
        };
        let set = ProposalSet::covering(vec![p(0.0, 0.0), p(1.0, -1.0)]).unwrap();
        let t = Target::single(Proposal::Plane(
            Univariate::normal(0.2, 0.7).unwrap(),
            Univariate::normal(-0.3, 0.7).unwrap(),
        ));
        let r1 = analytic_variance(SchemeTag::R1, &t, &set).unwrap();
        let r3 = analytic_variance(SchemeTag::R3, &t, &set).unwrap();
        let n3 = analytic_variance(SchemeTag::N3, &t, &set).unwrap();
        assert!(r1 > r3 && r3 > n3 && n3 > 0.0, "{r1} {r3} {n3}");
    }
}

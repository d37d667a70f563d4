use rayon::prelude::*;

use super::density::{Point, ProposalSet};
use super::scheme::MisScheme;
use super::selection::select_indices;
use super::target::Integrand;
use super::weighting::{denominator, CycleView};
use super::MisError;
use crate::rng::Stream;
use crate::stats::{mean_variance, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorReport {
    pub estimate: f64,
    /// Number of values summarized (weights for one run, estimates for a
    /// batch of trials).
    pub trials: usize,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// `sqrt(sample_variance / trials)`.
    pub standard_error: f64,
}

impl EstimatorReport {
    fn from_values(estimate: f64, values: &[f64]) -> Self {
        let (mean, var) = mean_variance(values);
        Self {
            estimate,
            trials: values.len(),
            sample_mean: mean,
            sample_variance: var,
            standard_error: (var / values.len() as f64).sqrt(),
        }
    }
}

/// `f / d`, treating `0 / 0` as zero. A zero density under a nonzero
/// target makes the estimator invalid.
pub(crate) fn importance_weight(value: f64, d: f64, x: &Point) -> Result<f64, MisError> {
    if d > 0.0 {
        Ok(value / d)
    } else if value == 0.0 {
        Ok(0.0)
    } else {
        Err(MisError::ZeroDenominator {
            x: x.x,
            y: x.y,
            value,
        })
    }
}

/// Draws `m` samples and returns their importance weights `f(x_n) / d_n`.
///
/// Index selection and point sampling use separate substreams of `rng`, so
/// schemes that differ only in selection see identical points whenever
/// their index sequences agree.
fn weights<T: Integrand + ?Sized>(
    scheme: &MisScheme,
    target: &T,
    proposals: &ProposalSet,
    m: usize,
    rng: &mut Stream,
) -> Result<Vec<f64>, MisError> {
    let n = proposals.len();
    let key = rng.next_u64();
    let mut select_rng = rng.derive(&[key, 0]);
    let mut sample_rng = rng.derive(&[key, 1]);
    let indices = select_indices(scheme.selection(), n, m, &mut select_rng)?;
    let points: Vec<_> = indices
        .iter()
        .map(|&k| proposals.sample(k, &mut sample_rng))
        .collect();

    let mut out = Vec::with_capacity(m);
    for (cycle, pts) in indices.chunks(n).zip(points.chunks(n)) {
        for (pos, x) in pts.iter().enumerate() {
            let value = target.eval(x);
            let d = denominator(
                scheme.weighting(),
                scheme.selection(),
                x,
                CycleView {
                    indices: cycle,
                    position: pos,
                },
                proposals,
            );
            out.push(importance_weight(value, d, x)?);
        }
    }
    Ok(out)
}

/// One estimate of `integral f` from `m = kN` samples:
/// `(1/m) * sum_n f(x_n) / d_n`. The report summarizes the `m` weights.
pub fn run_estimator<T: Integrand + ?Sized>(
    scheme: &MisScheme,
    target: &T,
    proposals: &ProposalSet,
    m: usize,
    rng: &mut Stream,
) -> Result<EstimatorReport, MisError> {
    let w = weights(scheme, target, proposals, m, rng)?;
    let estimate = w.iter().copied().collect::<CompensatedSum>().value() / m as f64;
    Ok(EstimatorReport::from_values(estimate, &w))
}

/// `trials` independent estimates, each on its own substream of `rng`
/// keyed by the trial index. The result does not depend on the number of
/// worker threads.
pub fn run_trials<T: Integrand + ?Sized>(
    scheme: &MisScheme,
    target: &T,
    proposals: &ProposalSet,
    m: usize,
    trials: usize,
    rng: &Stream,
) -> Result<(EstimatorReport, Vec<f64>), MisError> {
    if trials == 0 {
        return Err(MisError::Parameter("need at least one trial".into()));
    }
    let estimates = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.split(t as u64);
            let w = weights(scheme, target, proposals, m, &mut r)?;
            Ok(w.iter().copied().collect::<CompensatedSum>().value() / m as f64)
        })
        .collect::<Result<Vec<f64>, MisError>>()?;
    let (mean, _) = mean_variance(&estimates);
    Ok((EstimatorReport::from_values(mean, &estimates), estimates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mis::density::{Domain, Proposal, Univariate};
    use crate::mis::scheme::SchemeTag;

    fn three_normals() -> ProposalSet {
        ProposalSet::covering(
            [0.0, 2.0, 4.0]
                .iter()
                .map(|&m| Proposal::Line(Univariate::normal(m, 1.0).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn mixture_target_under_n3_is_exact() {
        let set = three_normals();
        let target = |x: &Point| set.mixture_pdf_unchecked(x);
        let mut rng = Stream::new(1);
        for m in [3, 6, 30] {
            let r = run_estimator(
                &MisScheme::canonical(SchemeTag::N3),
                &target,
                &set,
                m,
                &mut rng,
            )
            .unwrap();
            assert!((r.estimate - 1.0).abs() < 1e-14);
            assert!(r.sample_variance < 1e-28);
        }
    }

    #[test]
    fn linear_target_is_unbiased_for_every_scheme() {
        let set = ProposalSet::new(
            vec![Proposal::Line(Univariate::uniform(0.0, 1.0).unwrap())],
            Domain::Interval { lo: 0.0, hi: 1.0 },
        )
        .unwrap();
        let target = |x: &Point| 2.0 * x.x;
        for tag in SchemeTag::ALL {
            let (rep, _) = run_trials(
                &MisScheme::canonical(tag),
                &target,
                &set,
                1,
                100_000,
                &Stream::new(3),
            )
            .unwrap();
            assert!(
                (rep.sample_mean - 1.0).abs() < 3.0 * rep.standard_error,
                "{tag}: {} +- {}",
                rep.sample_mean,
                rep.standard_error
            );
        }
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let x = Point::line(1.5);
        assert_eq!(importance_weight(0.0, 0.0, &x), Ok(0.0));
        assert_eq!(importance_weight(3.0, 0.5, &x), Ok(6.0));
        assert!(matches!(
            importance_weight(1.0, 0.0, &x),
            Err(MisError::ZeroDenominator { .. })
        ));
    }

    #[test]
    fn single_proposal_schemes_collapse() {
        let set = ProposalSet::covering(vec![Proposal::Line(
            Univariate::normal(0.5, 1.3).unwrap(),
        )])
        .unwrap();
        let target = |x: &Point| (-(x.x - 1.0).powi(2)).exp();
        let estimates: Vec<f64> = SchemeTag::ALL
            .iter()
            .map(|&tag| {
                let mut rng = Stream::new(77);
                run_estimator(&MisScheme::canonical(tag), &target, &set, 5, &mut rng)
                    .unwrap()
                    .estimate
            })
            .collect();
        for e in &estimates {
            assert_eq!(e.to_bits(), estimates[0].to_bits());
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let set = three_normals();
        let target = crate::mis::Target::single(Proposal::Line(
            Univariate::normal(1.0, 0.5).unwrap(),
        ));
        let s = MisScheme::canonical(SchemeTag::N2);
        let (a, _) = run_trials(&s, &target, &set, 3, 1000, &Stream::new(5)).unwrap();
        let (b, _) = run_trials(&s, &target, &set, 3, 1000, &Stream::new(5)).unwrap();
        assert_eq!(a, b);
    }
}

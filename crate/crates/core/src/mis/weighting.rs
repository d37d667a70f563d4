use std::fmt;

use super::density::{Point, ProposalSet};
use super::selection::SelectionStrategy;
use super::MisError;

/// Which density divides the target in a sample's importance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightingFunction {
    /// Density of `x_n` conditional on the earlier indices of its cycle.
    W1,
    /// Density of the proposal that generated `x_n`.
    W2,
    /// Marginal density of `x_n` under the selection strategy.
    W3,
    /// Mixture of the proposals actually selected in the cycle.
    W4,
    /// Mixture of all proposals.
    W5,
}

impl WeightingFunction {
    pub const ALL: [WeightingFunction; 5] = [Self::W1, Self::W2, Self::W3, Self::W4, Self::W5];
}

impl fmt::Display for WeightingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for WeightingFunction {
    type Err = MisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "W1" => Ok(Self::W1),
            "W2" => Ok(Self::W2),
            "W3" => Ok(Self::W3),
            "W4" => Ok(Self::W4),
            "W5" => Ok(Self::W5),
            _ => Err(MisError::Parameter(format!("unknown weighting function '{s}'"))),
        }
    }
}

/// The selection cycle a sample belongs to and its slot in it.
#[derive(Debug, Clone, Copy)]
pub struct CycleView<'a> {
    /// Indices selected in the cycle (at most `N`; a trailing S1 cycle may
    /// be shorter).
    pub indices: &'a [usize],
    /// Slot of the sample being weighted.
    pub position: usize,
}

/// Evaluates the weighting density for the sample at `cycle.position`.
///
/// Returns zero where every constituent density vanishes; callers must
/// reject a zero denominator paired with a nonzero target value.
pub fn weighting_denominator(
    weighting: WeightingFunction,
    selection: SelectionStrategy,
    x: &Point,
    cycle: CycleView<'_>,
    proposals: &ProposalSet,
) -> Result<f64, MisError> {
    if cycle.indices.is_empty() || cycle.position >= cycle.indices.len() {
        return Err(MisError::Parameter(format!(
            "slot {} outside a cycle of length {}",
            cycle.position,
            cycle.indices.len()
        )));
    }
    if let Some(&bad) = cycle.indices.iter().find(|&&k| k >= proposals.len()) {
        return Err(MisError::Parameter(format!(
            "index {bad} out of range for N = {}",
            proposals.len()
        )));
    }
    if !proposals.domain().contains(x) {
        return Err(MisError::Domain(format!(
            "point ({}, {}) outside the domain",
            x.x, x.y
        )));
    }
    Ok(denominator(weighting, selection, x, cycle, proposals))
}

/// Unchecked core of [`weighting_denominator`].
pub(crate) fn denominator(
    weighting: WeightingFunction,
    selection: SelectionStrategy,
    x: &Point,
    cycle: CycleView<'_>,
    proposals: &ProposalSet,
) -> f64 {
    let n = proposals.len();
    let own = cycle.indices[cycle.position];
    match (weighting, selection) {
        (WeightingFunction::W2, _) => proposals.pdf(own, x),
        (WeightingFunction::W5, _) => proposals.mixture_pdf_unchecked(x),
        (WeightingFunction::W4, _) => {
            cycle
                .indices
                .iter()
                .map(|&k| proposals.pdf(k, x))
                .sum::<f64>()
                / cycle.indices.len() as f64
        }
        // Draws under S1 are i.i.d. from the mixture.
        (WeightingFunction::W1 | WeightingFunction::W3, SelectionStrategy::S1) => {
            proposals.mixture_pdf_unchecked(x)
        }
        // Under S3 the slot fixes the proposal.
        (WeightingFunction::W1 | WeightingFunction::W3, SelectionStrategy::S3) => {
            proposals.pdf(own, x)
        }
        // A random permutation slot is marginally the full mixture.
        (WeightingFunction::W3, SelectionStrategy::S2) => proposals.mixture_pdf_unchecked(x),
        // Conditional on the used indices, the draw comes from the mixture
        // of the proposals still unused in this cycle.
        (WeightingFunction::W1, SelectionStrategy::S2) => {
            let used = &cycle.indices[..cycle.position];
            let mut sum = 0.0;
            let mut count = 0usize;
            for k in 0..n {
                if !used.contains(&k) {
                    sum += proposals.pdf(k, x);
                    count += 1;
                }
            }
            sum / count as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mis::density::{Domain, Proposal, Univariate};
    use crate::rng::Stream;

    fn uniforms() -> ProposalSet {
        ProposalSet::new(
            vec![
                Proposal::Line(Univariate::uniform(0.0, 1.0).unwrap()),
                Proposal::Line(Univariate::uniform(0.0, 2.0).unwrap()),
            ],
            Domain::Interval { lo: 0.0, hi: 2.0 },
        )
        .unwrap()
    }

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
    fn w5_is_the_mixture() {
        let set = three_normals();
        let x = Point::line(0.7);
        for sel in SelectionStrategy::ALL {
            let d = weighting_denominator(
                WeightingFunction::W5,
                sel,
                &x,
                CycleView {
                    indices: &[2, 0, 1],
                    position: 1,
                },
                &set,
            )
            .unwrap();
            assert_eq!(d, set.mixture_pdf(&x).unwrap());
        }
    }

    #[test]
    fn w2_uses_the_generating_proposal() {
        let set = uniforms();
        let d = weighting_denominator(
            WeightingFunction::W2,
            SelectionStrategy::S1,
            &Point::line(1.5),
            CycleView {
                indices: &[1],
                position: 0,
            },
            &set,
        )
        .unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn w4_over_full_permutation_equals_w5() {
        let set = three_normals();
        let mut rng = Stream::new(17);
        for _ in 0..100 {
            let x = Point::line(-4.0 + 12.0 * rng.uniform());
            let cycle = CycleView {
                indices: &[2, 0, 1],
                position: 0,
            };
            let w4 = weighting_denominator(
                WeightingFunction::W4,
                SelectionStrategy::S2,
                &x,
                cycle,
                &set,
            )
            .unwrap();
            let w5 = weighting_denominator(
                WeightingFunction::W5,
                SelectionStrategy::S2,
                &x,
                cycle,
                &set,
            )
            .unwrap();
            assert!((w4 - w5).abs() <= 1e-12 * w5.abs().max(1e-300));
        }
    }

    #[test]
    fn w1_without_replacement_uses_remaining_proposals() {
        let set = three_normals();
        let x = Point::line(1.0);
        let cycle = CycleView {
            indices: &[2, 0, 1],
            position: 1,
        };
        let d =
            weighting_denominator(WeightingFunction::W1, SelectionStrategy::S2, &x, cycle, &set)
                .unwrap();
        let expect = 0.5 * (set.pdf(0, &x) + set.pdf(1, &x));
        assert!((d - expect).abs() < 1e-15);
        // First slot: nothing used yet, so the full mixture.
        let first = CycleView {
            indices: &[2, 0, 1],
            position: 0,
        };
        let d0 =
            weighting_denominator(WeightingFunction::W1, SelectionStrategy::S2, &x, first, &set)
                .unwrap();
        assert!((d0 - set.mixture_pdf(&x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_where_all_densities_vanish() {
        let set = uniforms();
        let d = weighting_denominator(
            WeightingFunction::W2,
            SelectionStrategy::S1,
            &Point::line(1.5),
            CycleView {
                indices: &[0],
                position: 0,
            },
            &set,
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn bad_slot_is_rejected() {
        let set = uniforms();
        let r = weighting_denominator(
            WeightingFunction::W2,
            SelectionStrategy::S1,
            &Point::line(0.5),
            CycleView {
                indices: &[],
                position: 0,
            },
            &set,
        );
        assert!(r.is_err());
    }
}

use std::fmt;

use super::MisError;
use crate::rng::Stream;

/// How the proposal index of each draw is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionStrategy {
    /// Uniformly random index, with replacement.
    S1,
    /// Uniformly random permutation of `0..N` per cycle (without replacement).
    S2,
    /// The fixed cycle `0, 1, ..., N-1`, repeated.
    S3,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 3] = [Self::S1, Self::S2, Self::S3];
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for SelectionStrategy {
    type Err = MisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Self::S1),
            "S2" => Ok(Self::S2),
            "S3" => Ok(Self::S3),
            _ => Err(MisError::Parameter(format!("unknown selection strategy '{s}'"))),
        }
    }
}

/// Draws `m` proposal indices in `0..n`.
///
/// S2 and S3 operate in cycles of `n` and need `m` to be a multiple of `n`.
pub fn select_indices(
    strategy: SelectionStrategy,
    n: usize,
    m: usize,
    rng: &mut Stream,
) -> Result<Vec<usize>, MisError> {
    if n == 0 || m == 0 {
        return Err(MisError::Parameter(format!(
            "need N >= 1 and M >= 1, got N = {n}, M = {m}"
        )));
    }
    match strategy {
        SelectionStrategy::S1 => Ok((0..m).map(|_| rng.below(n)).collect()),
        SelectionStrategy::S2 | SelectionStrategy::S3 => {
            if m % n != 0 {
                return Err(MisError::Parameter(format!(
                    "{strategy} selects in cycles of N = {n}; M = {m} is not a multiple"
                )));
            }
            let mut out = Vec::with_capacity(m);
            for _ in 0..m / n {
                let start = out.len();
                out.extend(0..n);
                if strategy == SelectionStrategy::S2 {
                    rng.shuffle(&mut out[start..]);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_cycle() {
        let mut rng = Stream::new(0);
        let idx = select_indices(SelectionStrategy::S3, 3, 6, &mut rng).unwrap();
        assert_eq!(idx, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn single_proposal_always_zero() {
        let mut rng = Stream::new(9);
        let idx = select_indices(SelectionStrategy::S1, 1, 4, &mut rng).unwrap();
        assert_eq!(idx, vec![0, 0, 0, 0]);
    }

    #[test]
    fn cycles_require_multiple_of_n() {
        let mut rng = Stream::new(0);
        for s in [SelectionStrategy::S2, SelectionStrategy::S3] {
            assert!(matches!(
                select_indices(s, 3, 4, &mut rng),
                Err(MisError::Parameter(_))
            ));
        }
        assert!(select_indices(SelectionStrategy::S1, 3, 4, &mut rng).is_ok());
    }

    #[test]
    fn permutation_cycles_are_permutations() {
        let mut rng = Stream::new(5);
        let idx = select_indices(SelectionStrategy::S2, 4, 40, &mut rng).unwrap();
        for cycle in idx.chunks(4) {
            let mut c = cycle.to_vec();
            c.sort();
            assert_eq!(c, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn permutation_slots_are_uniform() {
        // Frequency-count oracle: each index lands in each slot w.p. 1/3.
        let draws = 100_000;
        let mut counts = [[0usize; 3]; 3];
        let mut rng = Stream::new(11);
        for _ in 0..draws {
            let idx = select_indices(SelectionStrategy::S2, 3, 3, &mut rng).unwrap();
            for (slot, &k) in idx.iter().enumerate() {
                counts[slot][k] += 1;
            }
        }
        let p = 1.0 / 3.0;
        let bound = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
        for row in counts {
            for c in row {
                let freq = c as f64 / draws as f64;
                assert!((freq - p).abs() <= bound, "freq {freq}");
            }
        }
    }
}

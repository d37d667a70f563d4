use std::fmt;

use super::selection::SelectionStrategy;
use super::weighting::WeightingFunction;
use super::MisError;

/// The six distinct estimators produced by pairing a selection strategy
/// with a weighting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeTag {
    R1,
    R2,
    R3,
    N1,
    N2,
    N3,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 6] = [Self::R1, Self::R2, Self::R3, Self::N1, Self::N2, Self::N3];

    /// The estimator a (selection, weighting) pair reduces to.
    pub fn classify(selection: SelectionStrategy, weighting: WeightingFunction) -> SchemeTag {
        use SelectionStrategy::*;
        use WeightingFunction::*;
        match (selection, weighting) {
            (S1, W2) => Self::R1,
            (S1, W4) => Self::R2,
            (S1, W1 | W3 | W5) => Self::R3,
            (S2, W2) => Self::N1,
            (S2, W1) => Self::N2,
            (S2, W3 | W4 | W5) => Self::N3,
            (S3, W1 | W2 | W3) => Self::N1,
            (S3, W4 | W5) => Self::N3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::R1 => "R1",
            Self::R2 => "R2",
            Self::R3 => "R3",
            Self::N1 => "N1",
            Self::N2 => "N2",
            Self::N3 => "N3",
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeTag {
    type Err = MisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| MisError::Parameter(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MisScheme {
    tag: SchemeTag,
    selection: SelectionStrategy,
    weighting: WeightingFunction,
}

impl MisScheme {
    /// Builds a scheme, rejecting a pair that does not reduce to `tag`.
    pub fn new(
        tag: SchemeTag,
        selection: SelectionStrategy,
        weighting: WeightingFunction,
    ) -> Result<Self, MisError> {
        let actual = SchemeTag::classify(selection, weighting);
        if actual != tag {
            return Err(MisError::InconsistentScheme {
                requested: tag,
                actual,
                selection,
                weighting,
            });
        }
        Ok(Self {
            tag,
            selection,
            weighting,
        })
    }

    pub fn from_pair(selection: SelectionStrategy, weighting: WeightingFunction) -> Self {
        Self {
            tag: SchemeTag::classify(selection, weighting),
            selection,
            weighting,
        }
    }

    /// Canonical pair per scheme: R1 = (S1, W2), R2 = (S1, W4),
    /// R3 = (S1, W5), N1 = (S2, W2), N2 = (S2, W1), N3 = (S2, W5).
    pub fn canonical(tag: SchemeTag) -> Self {
        use SelectionStrategy::*;
        use WeightingFunction::*;
        let (selection, weighting) = match tag {
            SchemeTag::R1 => (S1, W2),
            SchemeTag::R2 => (S1, W4),
            SchemeTag::R3 => (S1, W5),
            SchemeTag::N1 => (S2, W2),
            SchemeTag::N2 => (S2, W1),
            SchemeTag::N3 => (S2, W5),
        };
        Self {
            tag,
            selection,
            weighting,
        }
    }

    pub fn tag(&self) -> SchemeTag {
        self.tag
    }

    pub fn selection(&self) -> SelectionStrategy {
        self.selection
    }

    pub fn weighting(&self) -> WeightingFunction {
        self.weighting
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_pairs_give_six_schemes() {
        let mut seen = std::collections::BTreeSet::new();
        for s in SelectionStrategy::ALL {
            for w in WeightingFunction::ALL {
                seen.insert(SchemeTag::classify(s, w));
            }
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn canonical_pairs_are_consistent() {
        for tag in SchemeTag::ALL {
            let c = MisScheme::canonical(tag);
            assert!(MisScheme::new(tag, c.selection(), c.weighting()).is_ok());
        }
    }

    #[test]
    fn inconsistent_pair_is_rejected() {
        let r = MisScheme::new(
            SchemeTag::N3,
            SelectionStrategy::S1,
            WeightingFunction::W5,
        );
        assert!(matches!(
            r,
            Err(MisError::InconsistentScheme {
                actual: SchemeTag::R3,
                ..
            })
        ));
    }

    #[test]
    fn parse_tags() {
        assert_eq!("n2".parse::<SchemeTag>().unwrap(), SchemeTag::N2);
        assert!("R4".parse::<SchemeTag>().is_err());
    }
}

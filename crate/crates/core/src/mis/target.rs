use super::density::{Point, Proposal};

/// An integrable function on a proposal set's domain.
pub trait Integrand: Sync {
    fn eval(&self, x: &Point) -> f64;

    /// Non-smooth points per axis, used to split quadrature panels.
    fn breakpoints(&self) -> [Vec<f64>; 2] {
        [Vec::new(), Vec::new()]
    }

    /// True when the function has unbounded support that a finite domain
    /// truncates.
    fn is_unbounded(&self) -> bool {
        false
    }
}

impl<F> Integrand for F
where
    F: Fn(&Point) -> f64 + Sync,
{
    fn eval(&self, x: &Point) -> f64 {
        self(x)
    }
}

/// Unnormalized target `f = sum_i w_i * p_i` built from the proposal
/// families. Its normalizing constant is `sum_i w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    components: Vec<(f64, Proposal)>,
}

impl Target {
    pub fn new(components: Vec<(f64, Proposal)>) -> Self {
        Self { components }
    }

    pub fn single(density: Proposal) -> Self {
        Self::new(vec![(1.0, density)])
    }

    pub fn components(&self) -> &[(f64, Proposal)] {
        &self.components
    }

    /// Known normalizing constant.
    pub fn integral(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }
}

impl Integrand for Target {
    fn eval(&self, x: &Point) -> f64 {
        self.components.iter().map(|(w, p)| w * p.pdf(x)).sum()
    }

    fn breakpoints(&self) -> [Vec<f64>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (_, p) in &self.components {
            for (axis, u) in p.axes().iter().enumerate() {
                if let Some(u) = u {
                    out[axis].extend(u.breakpoints());
                }
            }
        }
        out
    }

    fn is_unbounded(&self) -> bool {
        self.components
            .iter()
            .any(|(_, p)| p.axes().iter().flatten().any(|u| u.is_unbounded()))
    }
}

use super::{JetError, JetExpr, JetSpace, MultiIndex, Var};

/// A local section `u^α = s^α(x)` given by polynomials in the base
/// coordinates with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionPolynomial {
    components: Vec<JetExpr>,
}

impl SectionPolynomial {
    pub fn new(space: &JetSpace, components: Vec<JetExpr>) -> Result<Self, JetError> {
        if components.len() != space.m() {
            return Err(JetError::InvalidSpace(format!(
                "section needs {} components, got {}",
                space.m(),
                components.len()
            )));
        }
        for c in &components {
            if c.depends_on_fiber() || c.has_atoms() {
                return Err(JetError::InvalidSpace(
                    "section components must be polynomials in the base coordinates".into(),
                ));
            }
            space.validate(c)?;
        }
        Ok(SectionPolynomial { components })
    }

    pub fn components(&self) -> &[JetExpr] {
        &self.components
    }

    /// `∂^{|I|} s^α / ∂x^I`
    pub fn derivative(&self, alpha: usize, index: &MultiIndex) -> JetExpr {
        index
            .entries()
            .fold(self.components[alpha].clone(), |acc, i| acc.partial_base(i))
    }

    /// Pulls `e` back along the prolonged section: `u^α_I ↦ ∂_I s^α`.
    pub fn pullback(&self, e: &JetExpr) -> JetExpr {
        e.substitute(&|v| match v {
            Var::Fiber { alpha, index } => Some(self.derivative(*alpha as usize, index)),
            Var::Base(_) => None,
        })
    }

    /// Componentwise `self + c * other`.
    pub fn perturbed(&self, other: &SectionPolynomial, c: &crate::Rational) -> SectionPolynomial {
        SectionPolynomial {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + &b.scale(c))
                .collect(),
        }
    }
}

//! Variational operators on Lagrange and source forms.
//!
//! The Euler–Lagrange operator maps a Lagrangian `L` to the source form
//! `(𝓔_α L) du^α ∧ dx`; the Helmholtz operator maps a second-order source
//! form to its Helmholtz expressions, whose vanishing is equivalent to
//! local variationality. Both are implemented directly on canonical
//! [`JetExpr`]s, so identities such as `𝓔_α ∘ D_i = 0` hold exactly.

mod anderson_duchamp;
mod helmholtz;
mod lagrangian;

pub use anderson_duchamp::{anderson_duchamp_check, AndersonDuchampReport, SymmetrizedFailure};
pub use helmholtz::{
    helmholtz, helmholtz_dependency_residuals, independent_helmholtz_count, is_locally_variational,
    DependencyResiduals, HelmholtzTensor,
};
pub(crate) use lagrangian::integrate_homogeneous;
pub use lagrangian::{reconstruct_lagrangian_ode, vainberg_tonti, OdeReconstruction};

use crate::jet::{JetError, JetExpr, JetSpace, MultiIndex, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VarcalcError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("source form has order {order}; Helmholtz operators are implemented for order <= 2")]
    UnsupportedOrder { order: usize },
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("input outside the polynomial fragment: {0}; use the numeric weak-form check instead")]
    Unsupported(String),
    #[error("resonance: the u_x-linear part {residue} of E cannot be produced by any polynomial Lagrangian (singular solution L = -u_x ln u_x)")]
    Resonance { residue: String },
    #[error("reconstruction failed verification: {0}")]
    Verification(String),
}

/// `λ = L dx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagrangeForm {
    space: JetSpace,
    lagrangian: JetExpr,
}

impl LagrangeForm {
    pub fn new(space: JetSpace, lagrangian: JetExpr) -> Result<Self, VarcalcError> {
        space.validate(&lagrangian)?;
        Ok(LagrangeForm { space, lagrangian })
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn lagrangian(&self) -> &JetExpr {
        &self.lagrangian
    }

    pub fn order(&self) -> usize {
        self.lagrangian.order()
    }
}

/// `Δ = f_α du^α ∧ dx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceForm {
    space: JetSpace,
    coeffs: Vec<JetExpr>,
}

impl SourceForm {
    pub fn new(space: JetSpace, coeffs: Vec<JetExpr>) -> Result<Self, VarcalcError> {
        if coeffs.len() != space.m() {
            return Err(VarcalcError::Dimension { expected: space.m(), got: coeffs.len() });
        }
        for c in &coeffs {
            space.validate(c)?;
        }
        Ok(SourceForm { space, coeffs })
    }

    pub fn zero(space: JetSpace) -> Self {
        SourceForm { space, coeffs: vec![JetExpr::zero(); space.m()] }
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[JetExpr] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: usize) -> &JetExpr {
        &self.coeffs[alpha]
    }

    pub fn order(&self) -> usize {
        self.coeffs.iter().map(JetExpr::order).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(JetExpr::is_zero)
    }

    pub(crate) fn require_second_order(&self) -> Result<(), VarcalcError> {
        match self.order() {
            o if o > 2 => Err(VarcalcError::UnsupportedOrder { order: o }),
            _ => Ok(()),
        }
    }

    /// Componentwise sum; both forms must live on the same space.
    pub fn add(&self, other: &SourceForm) -> SourceForm {
        SourceForm {
            space: self.space,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> SourceForm {
        SourceForm { space: self.space, coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

/// Components `J^i` of a current density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentDensity {
    components: Vec<JetExpr>,
}

impl CurrentDensity {
    pub fn new(space: &JetSpace, components: Vec<JetExpr>) -> Result<Self, VarcalcError> {
        if components.len() != space.n() {
            return Err(VarcalcError::Dimension { expected: space.n(), got: components.len() });
        }
        for c in &components {
            space.validate(c)?;
        }
        Ok(CurrentDensity { components })
    }

    pub fn components(&self) -> &[JetExpr] {
        &self.components
    }
}

/// `𝓔_α L = Σ_I (-1)^{|I|} D_I ∂L/∂u^α_I` over sorted multi-indices.
///
/// Summing the weighted partials over all orderings of `I` collapses to the
/// plain partial over the sorted index, since the weight is the inverse of
/// the number of orderings.
pub fn euler_lagrange_expr(space: &JetSpace, l: &JetExpr, alpha: usize) -> Result<JetExpr, JetError> {
    space.check_fiber(alpha)?;
    let mut out = JetExpr::zero();
    let indices: Vec<MultiIndex> = l
        .vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Fiber { alpha: a, index } if a as usize == alpha => Some(index),
            _ => None,
        })
        .collect();
    for index in indices {
        let p = l.partial(&Var::fiber(alpha, index.clone()));
        let d = space.total_derivatives(&p, &index)?;
        if index.len() % 2 == 0 {
            out += &d;
        } else {
            out -= &d;
        }
    }
    Ok(out)
}

/// `E_{n+1}(λ) = (𝓔_α L) du^α ∧ dx`.
pub fn euler_lagrange(lambda: &LagrangeForm) -> Result<SourceForm, VarcalcError> {
    let space = lambda.space;
    let coeffs = (0..space.m())
        .map(|a| euler_lagrange_expr(&space, &lambda.lagrangian, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SourceForm { space, coeffs })
}

/// `D_i J^i`.
pub fn total_divergence(space: &JetSpace, j: &CurrentDensity) -> Result<JetExpr, VarcalcError> {
    let mut out = JetExpr::zero();
    for (i, c) in j.components.iter().enumerate() {
        out += &space.total_derivative(c, i)?;
    }
    Ok(out)
}

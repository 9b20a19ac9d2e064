use num_bigint::BigInt;
use num_traits::One;

use super::{euler_lagrange, LagrangeForm, SourceForm, VarcalcError};
use crate::jet::{JetExpr, JetSpace, MultiIndex, Var};
use crate::Rational;

/// Vainberg–Tonti Lagrangian `L = ∫₀¹ f_α(x, tu, tDu, tD²u) u^α dt`.
///
/// Every fiber monomial of degree `d` in `f_α` picks up `t^d`, so the
/// integral is `u^α` times `f_α` with each such monomial divided by `d + 1`.
pub fn vainberg_tonti(delta: &SourceForm) -> Result<LagrangeForm, VarcalcError> {
    delta.require_second_order()?;
    let mut l = JetExpr::zero();
    for (alpha, f) in delta.coeffs().iter().enumerate() {
        let integrated = integrate_homogeneous(f);
        l += &(&JetExpr::u(alpha, &[]) * &integrated);
    }
    LagrangeForm::new(*delta.space(), l)
}

/// `∫₀¹ e(x, t u, t Du, …) dt`, term by term.
pub(crate) fn integrate_homogeneous(e: &JetExpr) -> JetExpr {
    e.map_terms(|m, c| c / Rational::from_integer(BigInt::from(m.fiber_degree() + 1)))
}

/// Result of reconstructing a first-order Lagrangian from an energy
/// function `E(u, u_x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OdeReconstruction {
    pub lagrangian: LagrangeForm,
    pub source: SourceForm,
    /// `E = L − u_x ∂L/∂u_x` holds exactly.
    pub energy_verified: bool,
    /// `𝓔(L) = f` holds exactly.
    pub euler_lagrange_verified: bool,
}

impl OdeReconstruction {
    /// The trivial term `c(u) u_x` that may be added to `L` without changing
    /// `E` or `f`; it is chosen as zero here.
    pub const GAUGE_NOTE: &'static str = "L is determined up to a trivial term c(u)*u_x (chosen c = 0)";
}

/// Solves `E = L − u_x ∂L/∂u_x` for a polynomial `L(u, u_x)` and returns
/// `L` together with `f = ∂_u E + (u_xx / u_x) ∂_{u_x} E`.
///
/// A monomial `u^a u_x^d` of `E` comes from `u^a u_x^d / (1 − d)` in `L`.
/// Monomials linear in `u_x` have no preimage: they make `∂E/∂u_x` not
/// divisible by `u_x` and correspond to the singular `−u_x ln u_x` solution.
pub fn reconstruct_lagrangian_ode(space: &JetSpace, energy: &JetExpr) -> Result<OdeReconstruction, VarcalcError> {
    if space.n() != 1 || space.m() != 1 {
        return Err(VarcalcError::Unsupported(format!(
            "reconstruction needs n = m = 1, got n = {}, m = {}",
            space.n(),
            space.m()
        )));
    }
    let u = Var::fiber(0, MultiIndex::empty());
    let ux = Var::fiber(0, MultiIndex::new([0]));
    if let Some(v) = energy.vars().into_iter().find(|v| *v != u && *v != ux) {
        let what = match v {
            Var::Base(_) => "explicit x dependence".to_string(),
            Var::Fiber { index, .. } => format!("a coordinate of order {}", index.len()),
        };
        return Err(VarcalcError::Unsupported(format!("E must depend on (u, u_x) only, found {what}")));
    }
    if energy.has_atoms() {
        return Err(VarcalcError::Unsupported("E must be polynomial".into()));
    }

    let resonant = energy.filter_terms(|m| m.power_of(&ux) == 1);
    if !resonant.is_zero() {
        return Err(VarcalcError::Resonance {
            residue: resonant.display(&space.default_names()).to_string(),
        });
    }

    let lagrangian = energy.map_terms(|m, c| {
        let d = BigInt::from(m.power_of(&ux));
        c / Rational::from_integer(BigInt::one() - d)
    });

    // ∂E/∂u_x is divisible by u_x because no monomial is linear in u_x.
    let de_dux = energy.partial(&ux);
    let mut quotient = JetExpr::zero();
    for (m, c) in de_dux.terms() {
        let lowered = JetExpr::term(c.clone(), m.clone()).partial(&ux);
        let p = m.power_of(&ux);
        // u_x^p / u_x = (1/p) ∂(u_x^p)/∂u_x
        quotient += &lowered.scale(&Rational::new(BigInt::one(), BigInt::from(p)));
    }
    let uxx = JetExpr::var(Var::fiber(0, MultiIndex::new([0, 0])));
    let f = &energy.partial(&u) + &(&uxx * &quotient);

    let lambda = LagrangeForm::new(*space, lagrangian)?;
    let source = SourceForm::new(*space, vec![f])?;

    let l = lambda.lagrangian();
    let ux_expr = JetExpr::var(ux.clone());
    let energy_verified = &(l - &(&ux_expr * &l.partial(&ux))) == energy;
    let euler_lagrange_verified = euler_lagrange(&lambda)? == source;
    if !energy_verified || !euler_lagrange_verified {
        return Err(VarcalcError::Verification(format!(
            "energy relation {energy_verified}, Euler-Lagrange relation {euler_lagrange_verified}"
        )));
    }
    Ok(OdeReconstruction { lagrangian: lambda, source, energy_verified, euler_lagrange_verified })
}

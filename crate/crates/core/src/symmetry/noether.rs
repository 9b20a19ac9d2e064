//! Splitting `L_{j²V} Δ` into a continuity part and a Helmholtz part, and
//! current densities for conservation laws.

use num_bigint::BigInt;

use super::{all_zero, characteristic, lie_derivative_source, ProjectableVectorField, SymmetryError};
use crate::jet::{Decision, IdentityTester, JetExpr, JetSpace, MultiIndex, Var};
use crate::varcalc::{
    euler_lagrange_expr, helmholtz, total_divergence, CurrentDensity, HelmholtzTensor, SourceForm,
};
use crate::Rational;

/// `L_{j²V} Δ = el_part + ecs_part` with
///
/// ```text
/// el_part_α  = 𝓔_α(V_ch^β f_β)
/// ecs_part_α = V_ch^β H_{αβ} + D_i V_ch^β H^i_{αβ} + D_j D_i V_ch^β H^{ji}_{αβ}
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoetherDecomposition {
    pub el_part: SourceForm,
    pub ecs_part: SourceForm,
    /// How the sum was matched against the directly computed Lie derivative.
    pub cross_check: Decision,
}

fn pairing(q: &[JetExpr], delta: &SourceForm) -> JetExpr {
    q.iter().zip(delta.coeffs()).map(|(a, b)| a * b).sum()
}

/// `𝓔_α(V_ch^β f_β)`; it vanishes iff `V_ch^β f_β` is a total divergence.
pub fn continuity_residual(v: &ProjectableVectorField, delta: &SourceForm) -> Result<SourceForm, SymmetryError> {
    let space = *delta.space();
    let g = pairing(&characteristic(v), delta);
    let coeffs = (0..space.m())
        .map(|a| euler_lagrange_expr(&space, &g, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SourceForm::new(space, coeffs)?)
}

fn ecs_from_tensor(
    space: &JetSpace,
    ch: &[JetExpr],
    h: &HelmholtzTensor,
) -> Result<SourceForm, SymmetryError> {
    let (n, m) = (space.n(), space.m());
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for c in ch {
        let first = (0..n).map(|i| space.total_derivative(c, i)).collect::<Result<Vec<_>, _>>()?;
        let mut second = Vec::new();
        for di in &first {
            second.push((0..n).map(|j| space.total_derivative(di, j)).collect::<Result<Vec<_>, _>>()?);
        }
        d1.push(first);
        d2.push(second);
    }
    let coeffs = (0..m)
        .map(|a| {
            let mut e = JetExpr::zero();
            for b in 0..m {
                e += &(&ch[b] * h.h(a, b));
                for i in 0..n {
                    e += &(&d1[b][i] * h.hi(i, a, b));
                    for j in 0..n {
                        // D_j D_i V_ch^β H^{ji}_{αβ}
                        e += &(&d2[b][i][j] * h.hij(j, i, a, b));
                    }
                }
            }
            e
        })
        .collect();
    Ok(SourceForm::new(*space, coeffs)?)
}

/// The Helmholtz part of the decomposition; these are the coefficients of
/// the equations whose vanishing, together with the symmetry and continuity
/// conditions, expresses that `V` preserves `Δ` compatibly with a
/// variational structure.
pub fn ecs_residual(v: &ProjectableVectorField, delta: &SourceForm) -> Result<SourceForm, SymmetryError> {
    let h = helmholtz(delta)?;
    ecs_from_tensor(delta.space(), &characteristic(v), &h)
}

/// Computes both parts and checks their sum against the Lie derivative.
/// A mismatch means an implementation error and is reported as
/// [`SymmetryError::Internal`].
pub fn noether_decomposition(
    v: &ProjectableVectorField,
    delta: &SourceForm,
    tester: &IdentityTester,
) -> Result<NoetherDecomposition, SymmetryError> {
    let h = helmholtz(delta)?;
    let el_part = continuity_residual(v, delta)?;
    let ecs_part = ecs_from_tensor(delta.space(), &characteristic(v), &h)?;
    let lie = lie_derivative_source(v, delta)?;
    let diff: Vec<JetExpr> = (0..delta.space().m())
        .map(|a| &(el_part.coeff(a) + ecs_part.coeff(a)) - lie.coeff(a))
        .collect();
    let cross_check = all_zero(&diff, tester);
    if !cross_check.holds() {
        let names = delta.space().default_names();
        let shown: Vec<String> = diff.iter().map(|e| e.display(&names).to_string()).collect();
        return Err(SymmetryError::Internal(format!(
            "Lie derivative differs from its decomposition by [{}]",
            shown.join(", ")
        )));
    }
    Ok(NoetherDecomposition { el_part, ecs_part, cross_check })
}

/// Whether `D_i J^i = Q^α f_α`.
pub fn check_current(
    q: &[JetExpr],
    delta: &SourceForm,
    current: &CurrentDensity,
    tester: &IdentityTester,
) -> Result<Decision, SymmetryError> {
    let space = *delta.space();
    if q.len() != space.m() {
        return Err(SymmetryError::Unsupported(format!(
            "characteristic has {} components, expected {}",
            q.len(),
            space.m()
        )));
    }
    let div = total_divergence(&space, current)?;
    let g = pairing(q, delta);
    Ok(all_zero(&[&div - &g], tester))
}

/// Finds `J` with `D_x J = Q^α f_α` for `n = 1` by the homotopy formula
///
/// ```text
/// J = Σ_α Σ_{j>=1} Σ_{k<j} u^α_k (−D_x)^{j−1−k} ∫₀¹ (∂g/∂u^α_j)(x, tu) dt + ∫ g(x, 0) dx
/// ```
///
/// which is valid once `𝓔(g) = 0`. The result is verified before it is
/// returned.
pub fn construct_current_ode(
    q: &[JetExpr],
    delta: &SourceForm,
    tester: &IdentityTester,
) -> Result<(CurrentDensity, Decision), SymmetryError> {
    let space = *delta.space();
    if space.n() != 1 {
        return Err(SymmetryError::Unsupported(format!(
            "current construction is implemented for one independent variable, got {}",
            space.n()
        )));
    }
    if q.len() != space.m() {
        return Err(SymmetryError::Unsupported(format!(
            "characteristic has {} components, expected {}",
            q.len(),
            space.m()
        )));
    }
    let g = pairing(q, delta);
    let el = (0..space.m())
        .map(|a| euler_lagrange_expr(&space, &g, a))
        .collect::<Result<Vec<_>, _>>()?;
    if !all_zero(&el, tester).holds() {
        let names = space.default_names();
        let shown: Vec<String> = el.iter().map(|e| e.display(&names).to_string()).collect();
        return Err(SymmetryError::NoCurrent(format!(
            "Q^a f_a is not a total derivative, its Euler-Lagrange expression is [{}]",
            shown.join(", ")
        )));
    }

    let order = g.order();
    let mut j = JetExpr::zero();
    for a in 0..space.m() {
        for jj in 1..=order {
            let p = g.partial(&Var::fiber(a, MultiIndex::new(vec![0; jj])));
            if p.is_zero() {
                continue;
            }
            let integrated = crate::varcalc::integrate_homogeneous(&p);
            let mut term = integrated;
            // (−D)^{j−1−k} for k = j−1 down to 0
            for k in (0..jj).rev() {
                j += &(&JetExpr::var(Var::fiber(a, MultiIndex::new(vec![0; k]))) * &term);
                if k > 0 {
                    term = -&space.total_derivative(&term, 0)?;
                }
            }
        }
    }

    let base_part = g.substitute(&|v| v.is_fiber().then(JetExpr::zero));
    if base_part.has_atoms() {
        return Err(SymmetryError::Unsupported(
            "the fiber-independent part of Q^a f_a must be polynomial in x".into(),
        ));
    }
    let j = integrate_x(&base_part) + j;

    let current = CurrentDensity::new(&space, vec![j])?;
    let check = check_current(q, delta, &current, tester)?;
    if !check.holds() {
        return Err(SymmetryError::Internal("constructed current fails D_x J = Q^a f_a".into()));
    }
    Ok((current, check))
}

fn integrate_x(e: &JetExpr) -> JetExpr {
    let x = Var::base(0);
    let mut out = JetExpr::zero();
    for (m, c) in e.terms() {
        let p = m.power_of(&x);
        out += &(&JetExpr::x(0) * &JetExpr::term(c / Rational::from_integer(BigInt::from(p + 1)), m.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> JetSpace {
        JetSpace::with_dims(1, 1).unwrap()
    }

    fn u(idx: &[usize]) -> JetExpr {
        JetExpr::u(0, idx)
    }

    fn form(f: JetExpr) -> SourceForm {
        SourceForm::new(s1(), vec![f]).unwrap()
    }

    #[test]
    fn translation_of_first_order_source() {
        let t = IdentityTester::default();
        let dx = ProjectableVectorField::translation(s1(), 0);
        let d = noether_decomposition(&dx, &form(u(&[0])), &t).unwrap();
        assert_eq!(d.el_part.coeff(0), &(&JetExpr::int(2) * &u(&[0, 0])));
        assert_eq!(d.ecs_part.coeff(0), &(&JetExpr::int(-2) * &u(&[0, 0])));
        assert_eq!(d.cross_check, Decision::Exact(true));
    }

    #[test]
    fn oscillator_translation() {
        let t = IdentityTester::default();
        let f = form(&u(&[]) + &u(&[0, 0]));
        let dx = ProjectableVectorField::translation(s1(), 0);
        let d = noether_decomposition(&dx, &f, &t).unwrap();
        assert!(d.el_part.is_zero() && d.ecs_part.is_zero());
        let energy = (&u(&[]).pow(2) + &u(&[0]).pow(2)).scale(&Rational::new((-1).into(), 2.into()));
        let (j, dec) = construct_current_ode(&characteristic(&dx), &f, &t).unwrap();
        assert_eq!(j.components()[0], energy);
        assert_eq!(dec, Decision::Exact(true));
    }

    #[test]
    fn current_with_atoms() {
        let t = IdentityTester::default();
        let f = form(&u(&[]) + &u(&[0, 0]));
        let x = JetExpr::x(0);
        let v = ProjectableVectorField::vertical(s1(), 0, JetExpr::sin(x.clone())).unwrap();
        let (j, dec) = construct_current_ode(&characteristic(&v), &f, &t).unwrap();
        let expected = &(&JetExpr::sin(x.clone()) * &u(&[0])) - &(&JetExpr::cos(x) * &u(&[]));
        assert_eq!(j.components()[0], expected);
        assert!(dec.holds());
    }

    #[test]
    fn current_with_base_part() {
        let t = IdentityTester::default();
        // Q f = x^2 + u_x, J = x^3/3 + u
        let q = vec![JetExpr::one()];
        let f = form(&JetExpr::x(0).pow(2) + &u(&[0]));
        let (j, _) = construct_current_ode(&q, &f, &t).unwrap();
        assert_eq!(j.components()[0], &JetExpr::x(0).pow(3).scale(&Rational::new(1.into(), 3.into())) + &u(&[]));
    }

    #[test]
    fn no_current_for_non_divergence() {
        let t = IdentityTester::default();
        let err = construct_current_ode(&[JetExpr::one()], &form(u(&[])), &t).unwrap_err();
        assert!(matches!(err, SymmetryError::NoCurrent(_)));
    }

    #[test]
    fn check_current_verdicts() {
        let t = IdentityTester::default();
        let s = s1();
        let f = form(&u(&[]) + &u(&[0, 0]));
        let q = vec![u(&[0])];
        let good = CurrentDensity::new(&s, vec![(&u(&[]).pow(2) + &u(&[0]).pow(2)).scale(&Rational::new(1.into(), 2.into()))]).unwrap();
        assert_eq!(check_current(&q, &f, &good, &t).unwrap(), Decision::Exact(true));
        let bad = CurrentDensity::new(&s, vec![u(&[]).pow(2)]).unwrap();
        assert_eq!(check_current(&q, &f, &bad, &t).unwrap(), Decision::Exact(false));
    }
}

//! Projectable vector fields, their jet prolongations, and the symmetry and
//! conservation-law machinery built on top of them.

mod noether;
mod span;
mod takens;

pub use noether::{
    check_current, construct_current_ode, continuity_residual, ecs_residual, noether_decomposition,
    NoetherDecomposition,
};
pub use span::{span_matrix, transformed_ecs, Matrix, PointResidual, SpanMatrix, TransformedEcs};
pub use takens::{
    takens_report, FieldVerdict, HelmholtzStatus, NamedField, SpanVerdict, TakensOptions, TakensReport,
    TraceStep,
};

use std::collections::BTreeMap;

use crate::jet::{Decision, IdentityTester, JetError, JetExpr, JetSpace, MultiIndex, Var};
use crate::varcalc::{SourceForm, VarcalcError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Varcalc(#[from] VarcalcError),
    #[error("vector field is not projectable: {0}")]
    NotProjectable(String),
    #[error("span condition fails: rank {rank} of {needed} at the sample point")]
    SpanFailure { rank: usize, needed: usize },
    #[error("no current density: {0}")]
    NoCurrent(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

/// `V = V^i(x) ∂_i + V^α(x, u) ∂_α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectableVectorField {
    space: JetSpace,
    base: Vec<JetExpr>,
    fiber: Vec<JetExpr>,
}

impl ProjectableVectorField {
    pub fn new(space: JetSpace, base: Vec<JetExpr>, fiber: Vec<JetExpr>) -> Result<Self, SymmetryError> {
        if base.len() != space.n() || fiber.len() != space.m() {
            return Err(SymmetryError::NotProjectable(format!(
                "expected {} base and {} fiber components",
                space.n(),
                space.m()
            )));
        }
        for (i, c) in base.iter().enumerate() {
            space.validate(c)?;
            if c.depends_on_fiber() {
                return Err(SymmetryError::NotProjectable(format!(
                    "base component {} depends on fiber coordinates",
                    i + 1
                )));
            }
        }
        for (a, c) in fiber.iter().enumerate() {
            space.validate(c)?;
            if c.order() > 0 {
                return Err(SymmetryError::NotProjectable(format!(
                    "fiber component {} depends on derivatives",
                    a + 1
                )));
            }
        }
        Ok(ProjectableVectorField { space, base, fiber })
    }

    /// `∂/∂x^i`
    pub fn translation(space: JetSpace, i: usize) -> Self {
        let mut base = vec![JetExpr::zero(); space.n()];
        base[i] = JetExpr::one();
        ProjectableVectorField { space, base, fiber: vec![JetExpr::zero(); space.m()] }
    }

    /// `g ∂/∂u^α` for a function `g(x, u)`.
    pub fn vertical(space: JetSpace, alpha: usize, g: JetExpr) -> Result<Self, SymmetryError> {
        let mut fiber = vec![JetExpr::zero(); space.m()];
        fiber[alpha] = g;
        ProjectableVectorField::new(space, vec![JetExpr::zero(); space.n()], fiber)
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn base(&self) -> &[JetExpr] {
        &self.base
    }

    pub fn fiber(&self) -> &[JetExpr] {
        &self.fiber
    }

    /// Components in the column order `(V^1..V^n, V^1..V^m)`.
    pub fn coefficients(&self) -> impl Iterator<Item = &JetExpr> {
        self.base.iter().chain(&self.fiber)
    }

    /// Action on functions on `E`.
    pub fn apply(&self, g: &JetExpr) -> JetExpr {
        let mut out = JetExpr::zero();
        for (i, c) in self.base.iter().enumerate() {
            if !c.is_zero() {
                out += &(c * &g.partial_base(i));
            }
        }
        for (a, c) in self.fiber.iter().enumerate() {
            if !c.is_zero() {
                out += &(c * &g.partial(&Var::fiber(a, MultiIndex::empty())));
            }
        }
        out
    }

    /// Lie bracket `[V, W]`; projectable fields are closed under it.
    pub fn bracket(&self, other: &ProjectableVectorField) -> ProjectableVectorField {
        let comp = |x: &JetExpr, y: &JetExpr| &self.apply(y) - &other.apply(x);
        ProjectableVectorField {
            space: self.space,
            base: self.base.iter().zip(&other.base).map(|(x, y)| comp(x, y)).collect(),
            fiber: self.fiber.iter().zip(&other.fiber).map(|(x, y)| comp(x, y)).collect(),
        }
    }
}

/// Characteristic `V_ch^α = V^α − u^α_i V^i`.
pub fn characteristic(v: &ProjectableVectorField) -> Vec<JetExpr> {
    (0..v.space.m())
        .map(|a| {
            let mut c = v.fiber[a].clone();
            for (i, vi) in v.base.iter().enumerate() {
                if !vi.is_zero() {
                    c -= &(&JetExpr::u(a, &[i]) * vi);
                }
            }
            c
        })
        .collect()
}

/// `j^k V` with coefficients `ξ^α_I`, `1 <= |I| <= k`, keyed by sorted `I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProlongedVectorField {
    field: ProjectableVectorField,
    order: usize,
    xi: BTreeMap<(usize, MultiIndex), JetExpr>,
}

impl ProlongedVectorField {
    pub fn field(&self) -> &ProjectableVectorField {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `ξ^α_I` for `1 <= |I| <= k`.
    pub fn xi(&self, alpha: usize, index: &MultiIndex) -> &JetExpr {
        &self.xi[&(alpha, index.clone())]
    }

    /// All components as `(coordinate, coefficient)` with respect to the
    /// plain coordinate vector fields of `J^k E`.
    ///
    /// Summing `ξ^α_I ∂^I_α` over ordered index tuples equals summing
    /// `ξ^α_I ∂/∂u^α_I` over sorted ones.
    pub fn components(&self) -> Vec<(Var, JetExpr)> {
        let mut out = Vec::new();
        for (i, c) in self.field.base.iter().enumerate() {
            out.push((Var::base(i), c.clone()));
        }
        for (a, c) in self.field.fiber.iter().enumerate() {
            out.push((Var::fiber(a, MultiIndex::empty()), c.clone()));
        }
        for ((a, index), c) in &self.xi {
            out.push((Var::fiber(*a, index.clone()), c.clone()));
        }
        out
    }

    /// `j^k V (g)` for a function `g` of order at most `k`.
    pub fn apply(&self, g: &JetExpr) -> JetExpr {
        let mut out = JetExpr::zero();
        for (v, c) in self.components() {
            if c.is_zero() {
                continue;
            }
            let d = g.partial(&v);
            if !d.is_zero() {
                out += &(&c * &d);
            }
        }
        out
    }

    /// Lie bracket of two prolonged fields as coefficient lists.
    pub fn bracket_components(&self, other: &ProlongedVectorField) -> Vec<(Var, JetExpr)> {
        self.components()
            .into_iter()
            .zip(other.components())
            .map(|((v, x), (_, y))| (v, &self.apply(&y) - &other.apply(&x)))
            .collect()
    }
}

/// Prolongation by the recursion
/// `ξ^α_{i} = D_i V^α − u^α_j D_i V^j`,
/// `ξ^α_{I i} = D_i ξ^α_I − u^α_{I j} D_i V^j`.
pub fn prolong(v: &ProjectableVectorField, k: usize) -> Result<ProlongedVectorField, SymmetryError> {
    let space = v.space;
    space.check_order(k)?;
    let (n, m) = (space.n(), space.m());
    let mut xi: BTreeMap<(usize, MultiIndex), JetExpr> = BTreeMap::new();
    let dv: Vec<Vec<JetExpr>> = (0..n)
        .map(|l| v.base.iter().map(|c| c.partial_base(l)).collect())
        .collect();
    for len in 1..=k {
        for index in space.multi_indices(len) {
            let last = index.max_entry().expect("nonempty index");
            let rest = index.without(last).expect("index contains its maximum");
            for a in 0..m {
                let prev = if rest.is_empty() {
                    v.fiber[a].clone()
                } else {
                    xi[&(a, rest.clone())].clone()
                };
                let mut e = space.total_derivative(&prev, last)?;
                for (j, dvj) in dv[last].iter().enumerate() {
                    if !dvj.is_zero() {
                        e -= &(&JetExpr::var(Var::fiber(a, rest.with(j))) * dvj);
                    }
                }
                xi.insert((a, index.clone()), e);
            }
        }
    }
    Ok(ProlongedVectorField { field: v.clone(), order: k, xi })
}

/// Coefficients of `tot^k V + j^k V_ch`:
/// `ξ^α_I = D_I V_ch^α + V^i u^α_{I i}`.
pub fn prolong_by_characteristic(
    v: &ProjectableVectorField,
    k: usize,
) -> Result<BTreeMap<(usize, MultiIndex), JetExpr>, SymmetryError> {
    let space = v.space;
    space.check_order(k + 1)?;
    let ch = characteristic(v);
    let mut out = BTreeMap::new();
    for len in 1..=k {
        for index in space.multi_indices(len) {
            for (a, cha) in ch.iter().enumerate() {
                let mut e = space.total_derivatives(cha, &index)?;
                for (i, vi) in v.base.iter().enumerate() {
                    if !vi.is_zero() {
                        e += &(vi * &JetExpr::var(Var::fiber(a, index.with(i))));
                    }
                }
                out.insert((a, index.clone()), e);
            }
        }
    }
    Ok(out)
}

/// Coefficients of `L_{j²V} Δ`:
/// `j²V(f_α) + f_β ∂_α V^β + f_α ∂_i V^i`.
pub fn lie_derivative_source(v: &ProjectableVectorField, delta: &SourceForm) -> Result<SourceForm, SymmetryError> {
    if delta.order() > 2 {
        return Err(VarcalcError::UnsupportedOrder { order: delta.order() }.into());
    }
    let space = *delta.space();
    let j2 = prolong(v, 2)?;
    let f = delta.coeffs();
    let div: JetExpr = v.base.iter().enumerate().map(|(i, c)| c.partial_base(i)).sum();
    let coeffs = (0..space.m())
        .map(|a| {
            let mut e = j2.apply(&f[a]);
            let u_a = Var::fiber(a, MultiIndex::empty());
            for (b, fb) in f.iter().enumerate() {
                let dvb = v.fiber[b].partial(&u_a);
                if !dvb.is_zero() {
                    e += &(fb * &dvb);
                }
            }
            e += &(&f[a] * &div);
            e
        })
        .collect();
    Ok(SourceForm::new(space, coeffs)?)
}

/// Whether `L_{j²V} Δ` vanishes on all of `J² E`.
pub fn is_symmetry(
    v: &ProjectableVectorField,
    delta: &SourceForm,
    tester: &IdentityTester,
) -> Result<Decision, SymmetryError> {
    let lie = lie_derivative_source(v, delta)?;
    Ok(all_zero(lie.coeffs(), tester))
}

/// Joint zero decision over several expressions.
pub(crate) fn all_zero(exprs: &[JetExpr], tester: &IdentityTester) -> Decision {
    let mut probabilistic = false;
    for e in exprs {
        let d = tester.is_zero(e);
        probabilistic |= d.is_probabilistic();
        if !d.holds() {
            return if probabilistic { Decision::Probabilistic(false) } else { Decision::Exact(false) };
        }
    }
    if probabilistic {
        Decision::Probabilistic(true)
    } else {
        Decision::Exact(true)
    }
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

    fn oscillator() -> SourceForm {
        SourceForm::new(s1(), vec![&u(&[]) + &u(&[0, 0])]).unwrap()
    }

    #[test]
    fn characteristics() {
        assert_eq!(characteristic(&ProjectableVectorField::translation(s1(), 0)), vec![-u(&[0])]);
        let sin = ProjectableVectorField::vertical(s1(), 0, JetExpr::sin(JetExpr::x(0))).unwrap();
        assert_eq!(characteristic(&sin), vec![JetExpr::sin(JetExpr::x(0))]);
        let scale = ProjectableVectorField::vertical(s1(), 0, u(&[])).unwrap();
        assert_eq!(characteristic(&scale), vec![u(&[])]);
    }

    #[test]
    fn prolongations() {
        let i1 = MultiIndex::new([0]);
        let i11 = MultiIndex::new([0, 0]);
        let p = prolong(&ProjectableVectorField::translation(s1(), 0), 2).unwrap();
        assert!(p.xi(0, &i1).is_zero() && p.xi(0, &i11).is_zero());

        let p = prolong(&ProjectableVectorField::vertical(s1(), 0, JetExpr::x(0)).unwrap(), 2).unwrap();
        assert_eq!(p.xi(0, &i1), &JetExpr::one());
        assert!(p.xi(0, &i11).is_zero());

        let p = prolong(&ProjectableVectorField::vertical(s1(), 0, u(&[])).unwrap(), 2).unwrap();
        assert_eq!(p.xi(0, &i1), &u(&[0]));
        assert_eq!(p.xi(0, &i11), &u(&[0, 0]));
    }

    #[test]
    fn lie_derivatives() {
        let t = IdentityTester::default();
        let dx = ProjectableVectorField::translation(s1(), 0);
        assert!(lie_derivative_source(&dx, &oscillator()).unwrap().is_zero());

        let du = ProjectableVectorField::vertical(s1(), 0, JetExpr::one()).unwrap();
        let lin = SourceForm::new(s1(), vec![u(&[])]).unwrap();
        assert_eq!(lie_derivative_source(&du, &lin).unwrap().coeff(0), &JetExpr::one());
        assert_eq!(is_symmetry(&du, &oscillator(), &t).unwrap(), Decision::Exact(false));

        for g in [JetExpr::sin(JetExpr::x(0)), JetExpr::cos(JetExpr::x(0))] {
            let v = ProjectableVectorField::vertical(s1(), 0, g).unwrap();
            assert!(lie_derivative_source(&v, &oscillator()).unwrap().is_zero());
            assert!(is_symmetry(&v, &oscillator(), &t).unwrap().holds());
        }
    }

    #[test]
    fn rejects_non_projectable() {
        let s = s1();
        assert!(ProjectableVectorField::new(s, vec![u(&[])], vec![JetExpr::zero()]).is_err());
        assert!(ProjectableVectorField::new(s, vec![JetExpr::zero()], vec![u(&[0])]).is_err());
    }

    #[test]
    fn recursion_matches_characteristic_form() {
        let s = JetSpace::with_dims(2, 1).unwrap();
        let x = JetExpr::x(0);
        let y = JetExpr::x(1);
        let v = ProjectableVectorField::new(s, vec![&x * &y, x.pow(2)], vec![&(&u(&[]) * &y) + &x]).unwrap();
        let rec = prolong(&v, 3).unwrap();
        let ch = prolong_by_characteristic(&v, 3).unwrap();
        for ((a, idx), e) in &ch {
            assert_eq!(rec.xi(*a, idx), e, "index {idx}");
        }
    }
}

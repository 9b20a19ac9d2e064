use proptest::prelude::*;

use varkit_core::dsl;
use varkit_core::jet::{IdentityTester, JetExpr, JetSpace, MultiIndex, SectionPolynomial, Var};
use varkit_core::symmetry::{
    noether_decomposition, prolong, prolong_by_characteristic, ProjectableVectorField,
};
use varkit_core::varcalc::{
    euler_lagrange, helmholtz, helmholtz_dependency_residuals, LagrangeForm, SourceForm,
};
use varkit_core::Rational;

fn coordinates(n: usize, m: usize, order: usize, with_base: bool) -> Vec<Var> {
    let mut out = Vec::new();
    if with_base {
        out.extend((0..n).map(Var::base));
    }
    for a in 0..m {
        for len in 0..=order {
            for idx in MultiIndex::all_of_length(n, len) {
                out.push(Var::fiber(a, idx));
            }
        }
    }
    out
}

/// Sums of up to `terms` monomials of degree <= 3 with integer
/// coefficients in [-3, 3].
fn poly(vars: Vec<Var>, terms: usize) -> impl Strategy<Value = JetExpr> {
    let k = vars.len();
    prop::collection::vec((-3i64..=3, prop::collection::vec(0..k, 0..=3)), 1..=terms).prop_map(move |ts| {
        let mut e = JetExpr::zero();
        for (c, factors) in ts {
            let mut t = JetExpr::int(c);
            for f in factors {
                t = &t * &JetExpr::var(vars[f].clone());
            }
            e += &t;
        }
        e
    })
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=2, 1usize..=2)
}

fn source(n: usize, m: usize) -> impl Strategy<Value = SourceForm> {
    let space = JetSpace::with_dims(n, m).unwrap();
    prop::collection::vec(poly(coordinates(n, m, 2, true), 4), m)
        .prop_map(move |c| SourceForm::new(space, c).unwrap())
}

fn base_poly(n: usize) -> impl Strategy<Value = JetExpr> {
    poly((0..n).map(Var::base).collect(), 3)
}

fn field(n: usize, m: usize) -> impl Strategy<Value = ProjectableVectorField> {
    let space = JetSpace::with_dims(n, m).unwrap();
    let fiber_vars = coordinates(n, m, 0, true);
    (
        prop::collection::vec(base_poly(n), n),
        prop::collection::vec(poly(fiber_vars, 3), m),
    )
        .prop_map(move |(b, f)| ProjectableVectorField::new(space, b, f).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws((a, b, c) in dims().prop_flat_map(|(n, m)| {
        let v = coordinates(n, m, 2, true);
        (poly(v.clone(), 4), poly(v.clone(), 4), poly(v, 4))
    })) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn total_derivatives_commute(g in poly(coordinates(2, 1, 2, true), 4)) {
        let space = JetSpace::with_dims(2, 1).unwrap();
        let dxy = space.total_derivative(&space.total_derivative(&g, 0).unwrap(), 1).unwrap();
        let dyx = space.total_derivative(&space.total_derivative(&g, 1).unwrap(), 0).unwrap();
        prop_assert_eq!(dxy, dyx);
    }

    #[test]
    fn euler_lagrange_kills_divergences((n, m, g, i) in dims().prop_flat_map(|(n, m)| {
        (Just(n), Just(m), poly(coordinates(n, m, 2, true), 4), 0..n)
    })) {
        let space = JetSpace::with_dims(n, m).unwrap();
        let l = LagrangeForm::new(space, space.total_derivative(&g, i).unwrap()).unwrap();
        prop_assert!(euler_lagrange(&l).unwrap().is_zero());
    }

    #[test]
    fn euler_lagrange_outputs_are_variational((n, m, l) in dims().prop_flat_map(|(n, m)| {
        (Just(n), Just(m), poly(coordinates(n, m, 1, true), 4))
    })) {
        let space = JetSpace::with_dims(n, m).unwrap();
        let delta = euler_lagrange(&LagrangeForm::new(space, l).unwrap()).unwrap();
        prop_assert!(delta.order() <= 2);
        prop_assert!(helmholtz(&delta).unwrap().is_zero());
    }

    #[test]
    fn helmholtz_dependencies_vanish(delta in dims().prop_flat_map(|(n, m)| source(n, m))) {
        let r = helmholtz_dependency_residuals(&delta).unwrap();
        prop_assert!(r.all_zero());
    }

    #[test]
    fn prolongation_forms_agree(v in dims().prop_flat_map(|(n, m)| field(n, m))) {
        let rec = prolong(&v, 3).unwrap();
        for ((a, idx), e) in prolong_by_characteristic(&v, 3).unwrap() {
            prop_assert_eq!(rec.xi(a, &idx), &e);
        }
    }

    #[test]
    fn prolongation_preserves_brackets((v, w) in dims().prop_flat_map(|(n, m)| (field(n, m), field(n, m)))) {
        let lhs = prolong(&v.bracket(&w), 2).unwrap().components();
        let rhs = prolong(&v, 2).unwrap().bracket_components(&prolong(&w, 2).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn lie_derivative_splits((delta, v) in dims().prop_flat_map(|(n, m)| (source(n, m), field(n, m)))) {
        let d = noether_decomposition(&v, &delta, &IdentityTester::default());
        prop_assert!(d.is_ok(), "{:?}", d.err());
    }

    #[test]
    fn pullback_intertwines_total_derivative(g in poly(coordinates(1, 1, 2, true), 4), s in base_poly(1)) {
        let space = JetSpace::with_dims(1, 1).unwrap();
        let sec = SectionPolynomial::new(&space, vec![s]).unwrap();
        let lhs = sec.pullback(&g).partial_base(0);
        let rhs = sec.pullback(&space.total_derivative(&g, 0).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn printed_expressions_parse_back(e in poly(coordinates(2, 2, 2, true), 5), k in -5i64..=5) {
        let model = dsl::parse("space { base: x, y; fiber: u, v; order: 2 }\nequation f_u = 0; equation f_v = 0;").unwrap();
        let e = &e.scale(&Rational::new(k.into(), 7.into())) + &JetExpr::sin(&JetExpr::x(0) * &JetExpr::int(k));
        let text = model.display(&e).to_string();
        prop_assert_eq!(model.parse_expression(&text).unwrap(), e);
    }
}

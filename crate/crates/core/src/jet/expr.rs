//! Canonical sums of rational-coefficient monomials over jet coordinates.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::index::{MultiIndex, Names, Var};
use crate::Rational;

/// Transcendental functions allowed on pure-`x` arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    Sin,
    Cos,
    Exp,
}

impl AtomKind {
    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Sin => "sin",
            AtomKind::Cos => "cos",
            AtomKind::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(AtomKind::Sin),
            "cos" => Some(AtomKind::Cos),
            "exp" => Some(AtomKind::Exp),
            _ => None,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            AtomKind::Sin => v.sin(),
            AtomKind::Cos => v.cos(),
            AtomKind::Exp => v.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub kind: AtomKind,
    pub arg: JetExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Var(Var),
    Atom(Box<Atom>),
}

/// Product of factors with positive exponents, sorted by factor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(Factor, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(Factor::Var(v), 1)])
    }

    pub fn factors(&self) -> &[(Factor, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, p)| p).sum()
    }

    /// Combined exponent of all fiber coordinates.
    pub fn fiber_degree(&self) -> u32 {
        self.vars()
            .filter(|(v, _)| v.is_fiber())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = (&Var, u32)> {
        self.0.iter().filter_map(|(f, p)| match f {
            Factor::Var(v) => Some((v, *p)),
            Factor::Atom(_) => None,
        })
    }

    pub fn power_of(&self, v: &Var) -> u32 {
        self.vars().find(|(w, _)| *w == v).map_or(0, |(_, p)| p)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((fa, pa)), Some((fb, pb))) => match fa.cmp(fb) {
                    Ordering::Less => {
                        out.push((fa.clone(), *pa));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((fb.clone(), *pb));
                        b.next();
                    }
                    Ordering::Equal => {
                        out.push((fa.clone(), pa + pb));
                        a.next();
                        b.next();
                    }
                },
                (Some(x), None) => {
                    out.push((*x).clone());
                    a.next();
                }
                (None, Some(y)) => {
                    out.push((*y).clone());
                    b.next();
                }
                (None, None) => break,
            }
        }
        Monomial(out)
    }

    /// The monomial with the factor at position `k` lowered by one power.
    fn lowered(&self, k: usize) -> Monomial {
        let mut out = self.0.clone();
        if out[k].1 == 1 {
            out.remove(k);
        } else {
            out[k].1 -= 1;
        }
        Monomial(out)
    }

    fn from_factor(f: Factor, p: u32) -> Monomial {
        Monomial(vec![(f, p)])
    }
}

// graded: total degree first, then factors lexicographically
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact expression over jet coordinates.
///
/// Stored as a map from monomial to nonzero rational coefficient, so two
/// atom-free expressions are equal iff their maps are equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl JetExpr {
    pub fn zero() -> Self {
        JetExpr::default()
    }

    pub fn one() -> Self {
        JetExpr::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        JetExpr::term(c, Monomial::one())
    }

    pub fn int(c: i64) -> Self {
        JetExpr::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        JetExpr::constant(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut e = JetExpr::zero();
        e.add_term(m, c);
        e
    }

    pub fn var(v: Var) -> Self {
        JetExpr::term(Rational::one(), Monomial::var(v))
    }

    /// `x^i`
    pub fn x(i: usize) -> Self {
        JetExpr::var(Var::base(i))
    }

    /// `u^α_I`
    pub fn u(alpha: usize, index: &[usize]) -> Self {
        JetExpr::var(Var::fiber(alpha, MultiIndex::new(index.iter().copied())))
    }

    /// Builds `kind(arg)`; `arg` must not involve fiber coordinates.
    pub fn atom(kind: AtomKind, arg: JetExpr) -> Result<Self, NonBaseArgument> {
        if arg.vars().iter().any(Var::is_fiber) {
            return Err(NonBaseArgument);
        }
        if arg.is_zero() {
            return Ok(match kind {
                AtomKind::Sin => JetExpr::zero(),
                AtomKind::Cos | AtomKind::Exp => JetExpr::one(),
            });
        }
        Ok(JetExpr::term(
            Rational::one(),
            Monomial::from_factor(Factor::Atom(Box::new(Atom { kind, arg })), 1),
        ))
    }

    pub fn sin(arg: JetExpr) -> Self {
        JetExpr::atom(AtomKind::Sin, arg).expect("sin of a base expression")
    }

    pub fn cos(arg: JetExpr) -> Self {
        JetExpr::atom(AtomKind::Cos, arg).expect("cos of a base expression")
    }

    pub fn exp(arg: JetExpr) -> Self {
        JetExpr::atom(AtomKind::Exp, arg).expect("exp of a base expression")
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant value, if the expression is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Rational) -> JetExpr {
        if c.is_zero() {
            return JetExpr::zero();
        }
        JetExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> JetExpr {
        let mut acc = JetExpr::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Maps every coefficient through `f`, keeping monomials.
    pub fn map_terms(&self, mut f: impl FnMut(&Monomial, &Rational) -> Rational) -> JetExpr {
        let mut out = JetExpr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Monomial) -> bool) -> JetExpr {
        JetExpr {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// All coordinates occurring in the expression, atom arguments included.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for m in self.terms.keys() {
            for (f, _) in &m.0 {
                match f {
                    Factor::Var(v) => {
                        out.insert(v.clone());
                    }
                    Factor::Atom(a) => a.arg.collect_vars(out),
                }
            }
        }
    }

    pub fn has_atoms(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.iter().any(|(f, _)| matches!(f, Factor::Atom(_))))
    }

    pub fn depends_on_fiber(&self) -> bool {
        self.terms.keys().any(|m| m.vars().any(|(v, _)| v.is_fiber()))
    }

    /// Smallest `r` such that only coordinates of order `<= r` occur.
    pub fn order(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|m| m.vars().filter_map(|(v, _)| v.order()))
            .max()
            .unwrap_or(0)
    }

    /// Joint polynomial degree in the coordinates of order exactly `r`.
    pub fn degree_in_order(&self, r: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| {
                m.vars()
                    .filter(|(v, _)| v.order() == Some(r))
                    .map(|(_, p)| p)
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    /// Plain partial derivative with respect to a coordinate.
    ///
    /// Fiber coordinates never occur inside atoms, so only base coordinates
    /// go through the chain rule.
    pub fn partial(&self, v: &Var) -> JetExpr {
        match v {
            Var::Fiber { .. } => {
                let mut out = JetExpr::zero();
                for (m, c) in &self.terms {
                    if let Some(k) = m.0.iter().position(|(f, _)| matches!(f, Factor::Var(w) if w == v)) {
                        let p = m.0[k].1;
                        out.add_term(m.lowered(k), c * Rational::from_integer(p.into()));
                    }
                }
                out
            }
            Var::Base(i) => self.partial_base(*i as usize),
        }
    }

    /// `∂/∂x^i` holding all fiber coordinates fixed.
    pub fn partial_base(&self, i: usize) -> JetExpr {
        let target = Var::base(i);
        let mut out = JetExpr::zero();
        for (m, c) in &self.terms {
            for (k, (f, p)) in m.0.iter().enumerate() {
                let inner = match f {
                    Factor::Var(w) if *w == target => JetExpr::one(),
                    Factor::Var(_) => continue,
                    Factor::Atom(a) => {
                        let darg = a.arg.partial_base(i);
                        if darg.is_zero() {
                            continue;
                        }
                        let outer = match a.kind {
                            AtomKind::Sin => JetExpr::cos(a.arg.clone()),
                            AtomKind::Cos => -JetExpr::sin(a.arg.clone()),
                            AtomKind::Exp => JetExpr::exp(a.arg.clone()),
                        };
                        &outer * &darg
                    }
                };
                let rest = JetExpr::term(c * Rational::from_integer((*p).into()), m.lowered(k));
                out += &(&rest * &inner);
            }
        }
        out
    }

    /// Weighted partial `∂^I_α = (l_1!…l_n!/|I|!) ∂/∂u^α_I`.
    pub fn weighted_partial(&self, alpha: usize, index: &MultiIndex) -> JetExpr {
        let w = index.weight();
        self.partial(&Var::fiber(alpha, index.clone())).scale(&w)
    }

    /// Total derivative `D_i` with no capacity check; see
    /// [`JetSpace::total_derivative`](super::JetSpace::total_derivative).
    pub fn total_derivative_unchecked(&self, i: usize) -> JetExpr {
        let mut out = self.partial_base(i);
        for (m, c) in &self.terms {
            for (k, (f, p)) in m.0.iter().enumerate() {
                if let Factor::Var(Var::Fiber { alpha, index }) = f {
                    let raised = Var::Fiber { alpha: *alpha, index: index.with(i) };
                    let mono = m.lowered(k).mul(&Monomial::var(raised));
                    out.add_term(mono, c * Rational::from_integer((*p).into()));
                }
            }
        }
        out
    }

    /// Replaces coordinates by expressions; `None` leaves a coordinate as is.
    /// Atom arguments are substituted as well.
    pub fn substitute(&self, f: &dyn Fn(&Var) -> Option<JetExpr>) -> JetExpr {
        let mut out = JetExpr::zero();
        for (m, c) in &self.terms {
            let mut acc = JetExpr::constant(c.clone());
            for (fac, p) in &m.0 {
                let base = match fac {
                    Factor::Var(v) => f(v).unwrap_or_else(|| JetExpr::var(v.clone())),
                    Factor::Atom(a) => {
                        let arg = a.arg.substitute(f);
                        JetExpr::atom(a.kind, arg).expect("substitution keeps atom arguments in the base")
                    }
                };
                acc = &acc * &base.pow(*p);
            }
            out += &acc;
        }
        out
    }

    /// Floating-point value with coordinates supplied by `value`.
    pub fn eval_with(&self, value: &dyn Fn(&Var) -> f64) -> f64 {
        self.terms.iter().map(|(m, c)| term_value(m, c, value)).sum()
    }

    /// Largest absolute term value; the natural scale for zero tests.
    pub fn term_scale_with(&self, value: &dyn Fn(&Var) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| term_value(m, c, value).abs())
            .fold(0.0, f64::max)
    }

    /// Exact value when the expression is atom-free and every coordinate
    /// has a rational value.
    pub fn eval_exact(&self, value: &dyn Fn(&Var) -> Option<Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (f, p) in &m.0 {
                match f {
                    Factor::Var(v) => {
                        let x = value(v)?;
                        t *= num_traits::pow(x, *p as usize);
                    }
                    Factor::Atom(_) => return None,
                }
            }
            acc += t;
        }
        Some(acc)
    }

    pub fn display<'a>(&'a self, names: &'a Names) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

fn term_value(m: &Monomial, c: &Rational, value: &dyn Fn(&Var) -> f64) -> f64 {
    let mut t = c.to_f64().unwrap_or(f64::NAN);
    for (f, p) in &m.0 {
        let x = match f {
            Factor::Var(v) => value(v),
            Factor::Atom(a) => a.kind.apply(a.arg.eval_with(value)),
        };
        t *= x.powi(*p as i32);
    }
    t
}

/// Error for atoms whose argument involves fiber coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("transcendental functions may only be applied to base-coordinate expressions")]
pub struct NonBaseArgument;

impl From<Rational> for JetExpr {
    fn from(c: Rational) -> Self {
        JetExpr::constant(c)
    }
}

impl From<i64> for JetExpr {
    fn from(c: i64) -> Self {
        JetExpr::int(c)
    }
}

impl AddAssign<&JetExpr> for JetExpr {
    fn add_assign(&mut self, rhs: &JetExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&JetExpr> for JetExpr {
    fn sub_assign(&mut self, rhs: &JetExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add<&JetExpr> for &JetExpr {
    type Output = JetExpr;
    fn add(self, rhs: &JetExpr) -> JetExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&JetExpr> for &JetExpr {
    type Output = JetExpr;
    fn sub(self, rhs: &JetExpr) -> JetExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&JetExpr> for &JetExpr {
    type Output = JetExpr;
    fn mul(self, rhs: &JetExpr) -> JetExpr {
        let mut out = JetExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &JetExpr {
    type Output = JetExpr;
    fn neg(self) -> JetExpr {
        JetExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<JetExpr> for JetExpr {
            type Output = JetExpr;
            fn $method(self, rhs: JetExpr) -> JetExpr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&JetExpr> for JetExpr {
            type Output = JetExpr;
            fn $method(self, rhs: &JetExpr) -> JetExpr {
                (&self).$method(rhs)
            }
        }
        impl $tr<JetExpr> for &JetExpr {
            type Output = JetExpr;
            fn $method(self, rhs: JetExpr) -> JetExpr {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for JetExpr {
    type Output = JetExpr;
    fn neg(self) -> JetExpr {
        -&self
    }
}

impl std::iter::Sum for JetExpr {
    fn sum<I: Iterator<Item = JetExpr>>(iter: I) -> JetExpr {
        let mut acc = JetExpr::zero();
        for e in iter {
            acc += &e;
        }
        acc
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a JetExpr,
    names: &'a Names,
}

impl ExprDisplay<'_> {
    fn write_monomial(&self, f: &mut fmt::Formatter<'_>, m: &Monomial) -> fmt::Result {
        for (k, (fac, p)) in m.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            match fac {
                Factor::Var(v) => f.write_str(&self.names.var(v))?,
                Factor::Atom(a) => write!(f, "{}({})", a.kind.name(), a.arg.display(self.names))?,
            }
            if *p > 1 {
                write!(f, "^{p}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.expr.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else {
                if !a.is_one() {
                    write!(f, "{a}*")?;
                }
                self.write_monomial(f, m)?;
            }
        }
        Ok(())
    }
}

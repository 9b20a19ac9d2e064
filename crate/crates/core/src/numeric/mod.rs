//! Numerical cross-checks of symbolic verdicts: quadrature of functionals
//! along polynomial sections, central differences of the functional against
//! the weak form of a source form, and randomized identity testing.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::jet::{IdentityTester, JetExpr, JetSpace, SectionPolynomial, Var};
use crate::varcalc::{LagrangeForm, SourceForm};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid test function: {0}")]
    TestFunction(String),
    #[error("numeric checks support n <= 2, got n = {0}")]
    Dimension(usize),
    #[error("finite-difference step {0} outside [1e-6, 1e-3]")]
    Step(f64),
    #[error("randomized identity checks need at least 20 trials, got {0}")]
    Trials(usize),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    CompositeSimpson,
}

/// Rectangular domain with a composite Simpson rule on each axis.
///
/// `panels` counts subintervals per axis and must be even; the rule uses
/// `panels + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    bounds: Vec<(f64, f64)>,
    panels: usize,
    rule: QuadratureRule,
}

impl GridSpec {
    pub const MIN_PANELS: usize = 32;
    pub const DEFAULT_PANELS_1D: usize = 1024;
    pub const DEFAULT_PANELS_2D: usize = 128;

    pub fn new(bounds: Vec<(f64, f64)>, panels: usize) -> Result<Self, NumericError> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(NumericError::Grid(format!("domain must be 1-D or 2-D, got {} axes", bounds.len())));
        }
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(NumericError::Grid(format!("bad interval [{lo}, {hi}]")));
            }
        }
        if panels < Self::MIN_PANELS || !panels.is_multiple_of(2) {
            return Err(NumericError::Grid(format!(
                "panel count must be even and at least {}, got {panels}",
                Self::MIN_PANELS
            )));
        }
        Ok(GridSpec { bounds, panels, rule: QuadratureRule::CompositeSimpson })
    }

    /// Default resolution for the dimension of `bounds`.
    pub fn with_default_panels(bounds: Vec<(f64, f64)>) -> Result<Self, NumericError> {
        let panels = if bounds.len() == 2 { Self::DEFAULT_PANELS_2D } else { Self::DEFAULT_PANELS_1D };
        GridSpec::new(bounds, panels)
    }

    pub fn unit(dim: usize) -> Self {
        GridSpec::with_default_panels(vec![(0.0, 1.0); dim]).expect("unit domain is valid")
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    fn axis(&self, k: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = self.bounds[k];
        let n = self.panels;
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                (lo + h * i as f64, w * h / 3.0)
            })
            .collect()
    }

    /// `∫ e dx` over the domain; `e` may only depend on base coordinates.
    pub fn integrate(&self, e: &JetExpr) -> f64 {
        self.quadrature(e, |v| v)
    }

    /// Richardson estimate `|Q_h − Q_{2h}| / 15` of the Simpson error of
    /// `∫ e dx`, using a grid with half as many panels (rounded up to even).
    pub fn error_estimate(&self, e: &JetExpr) -> f64 {
        let half = (self.panels / 2).div_ceil(2) * 2;
        let coarse = GridSpec { panels: half, ..self.clone() };
        (self.integrate(e) - coarse.integrate(e)).abs() / 15.0
    }

    /// `∫ |e| dx` with the same rule.
    pub fn integrate_abs(&self, e: &JetExpr) -> f64 {
        self.quadrature(e, f64::abs)
    }

    fn quadrature(&self, e: &JetExpr, post: impl Fn(f64) -> f64) -> f64 {
        let c = Compiled::new(e);
        let poly = |x: &[f64; 2]| post(c.eval(x));
        match self.dim() {
            1 => self.axis(0).iter().map(|&(x, w)| w * poly(&[x, 0.0])).sum(),
            _ => {
                let ys = self.axis(1);
                self.axis(0)
                    .iter()
                    .map(|&(x, wx)| wx * ys.iter().map(|&(y, wy)| wy * poly(&[x, y])).sum::<f64>())
                    .sum()
            }
        }
    }
}

/// Fast evaluation of an expression in the base coordinates.
enum Compiled<'a> {
    Poly(Vec<(f64, [i32; 2])>),
    General(&'a JetExpr),
}

impl<'a> Compiled<'a> {
    fn new(e: &'a JetExpr) -> Self {
        if e.has_atoms() {
            return Compiled::General(e);
        }
        let terms = e
            .terms()
            .map(|(m, c)| {
                let mut p = [0i32; 2];
                for (v, k) in m.vars() {
                    if let Var::Base(i) = v {
                        p[*i as usize] = k as i32;
                    }
                }
                (c.to_f64().unwrap_or(f64::NAN), p)
            })
            .collect();
        Compiled::Poly(terms)
    }

    fn eval(&self, x: &[f64; 2]) -> f64 {
        match self {
            Compiled::Poly(t) => t.iter().map(|(c, p)| c * x[0].powi(p[0]) * x[1].powi(p[1])).sum(),
            Compiled::General(e) => e.eval_with(&|v| match v {
                Var::Base(i) => x[*i as usize],
                Var::Fiber { .. } => f64::NAN,
            }),
        }
    }
}

/// Perturbation direction for the first variation: polynomial components
/// that vanish together with their first derivatives on the boundary of
/// the grid domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestFunction {
    components: Vec<JetExpr>,
}

fn exact(v: f64) -> Rational {
    Rational::from_float(v).expect("finite bound")
}

impl TestFunction {
    pub fn new(space: &JetSpace, grid: &GridSpec, components: Vec<JetExpr>) -> Result<Self, NumericError> {
        if grid.dim() != space.n() {
            return Err(NumericError::Dimension(space.n()));
        }
        if components.len() != space.m() {
            return Err(NumericError::TestFunction(format!(
                "expected {} components, got {}",
                space.m(),
                components.len()
            )));
        }
        for (a, c) in components.iter().enumerate() {
            if c.depends_on_fiber() || c.has_atoms() {
                return Err(NumericError::TestFunction(format!("component {} is not a polynomial in x", a + 1)));
            }
            for (i, &(lo, hi)) in grid.bounds().iter().enumerate() {
                for bound in [lo, hi] {
                    let b = exact(bound);
                    let mut checks = vec![c.clone()];
                    checks.extend((0..space.n()).map(|k| c.partial_base(k)));
                    for e in &checks {
                        let restricted = e.substitute(&|v| (*v == Var::base(i)).then(|| JetExpr::constant(b.clone())));
                        if !restricted.is_zero() {
                            return Err(NumericError::TestFunction(format!(
                                "component {} or its gradient is nonzero on the face x^{} = {bound}",
                                a + 1,
                                i + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(TestFunction { components })
    }

    /// `Π_i (x^i − a_i)² (b_i − x^i)²` in component `alpha`, times `factor`.
    pub fn bump(space: &JetSpace, grid: &GridSpec, alpha: usize, factor: JetExpr) -> Result<Self, NumericError> {
        let mut bump = factor;
        for (i, &(lo, hi)) in grid.bounds().iter().enumerate() {
            let x = JetExpr::x(i);
            let left = &x - &JetExpr::constant(exact(lo));
            let right = &JetExpr::constant(exact(hi)) - &x;
            bump = &bump * &(&left * &right).pow(2);
        }
        let mut components = vec![JetExpr::zero(); space.m()];
        if alpha >= space.m() {
            return Err(NumericError::TestFunction(format!("no fiber coordinate {}", alpha + 1)));
        }
        components[alpha] = bump;
        TestFunction::new(space, grid, components)
    }

    pub fn components(&self) -> &[JetExpr] {
        &self.components
    }
}

fn check_dims(space: &JetSpace, grid: &GridSpec) -> Result<(), NumericError> {
    if space.n() > 2 {
        return Err(NumericError::Dimension(space.n()));
    }
    if grid.dim() != space.n() {
        return Err(NumericError::Grid(format!("grid has {} axes, base has {}", grid.dim(), space.n())));
    }
    Ok(())
}

/// `∫_Ω (j^k s)^* L dx` by composite Simpson.
pub fn functional_value(lambda: &LagrangeForm, s: &SectionPolynomial, grid: &GridSpec) -> Result<f64, NumericError> {
    check_dims(lambda.space(), grid)?;
    Ok(grid.integrate(&s.pullback(lambda.lagrangian())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakVerdict {
    Pass,
    Fail,
    /// Both sides are below `1e-12`, or below the quadrature resolution
    /// `1e-9 ∫ |integrand|`, so no relative comparison is possible.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFormResult {
    pub eps: f64,
    /// `(I(s + εφ) − I(s − εφ)) / 2ε`
    pub variation: f64,
    /// `∫ f_α(j² s) φ^α dx`
    pub weak: f64,
    pub residual: f64,
    pub relative: f64,
    pub verdict: WeakVerdict,
}

impl WeakFormResult {
    pub const REL_TOL: f64 = 1e-6;
    pub const DEGENERATE: f64 = 1e-12;
}

/// The step as a short decimal fraction, so perturbed sections keep small
/// denominators.
fn step_rational(eps: f64) -> Rational {
    let scale = 1e15;
    let num = (eps * scale).round() as i64;
    Rational::new(BigInt::from(num), BigInt::from(1_000_000_000_000_000i64))
}

/// Compares the central difference of the functional along `φ` with the
/// weak form `∫ f_α φ^α`. The difference `L(s + εφ) − L(s − εφ)` is formed
/// exactly before quadrature.
pub fn weak_form_check(
    delta: &SourceForm,
    lambda: &LagrangeForm,
    s: &SectionPolynomial,
    phi: &TestFunction,
    grid: &GridSpec,
    eps: f64,
) -> Result<WeakFormResult, NumericError> {
    let space = delta.space();
    check_dims(space, grid)?;
    if lambda.space() != space {
        return Err(NumericError::Mismatch("source form and Lagrangian live on different spaces".into()));
    }
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(NumericError::Step(eps));
    }
    let e = step_rational(eps);
    let direction = SectionPolynomial::new(space, phi.components.clone())
        .map_err(|err| NumericError::TestFunction(err.to_string()))?;
    let plus = s.perturbed(&direction, &e);
    let minus = s.perturbed(&direction, &-e.clone());
    let l = lambda.lagrangian();
    let diff = &plus.pullback(l) - &minus.pullback(l);
    let two_eps = e.clone() + e;
    let quotient = diff.scale(&two_eps.recip());
    let variation = grid.integrate(&quotient);

    let mut integrand = JetExpr::zero();
    for (f, p) in delta.coeffs().iter().zip(&phi.components) {
        if !p.is_zero() {
            integrand += &(&s.pullback(f) * p);
        }
    }
    let weak = grid.integrate(&integrand);
    // Below this the two numbers are indistinguishable from quadrature error.
    let resolution = (1e-9 * grid.integrate_abs(&quotient).max(grid.integrate_abs(&integrand)))
        .max(10.0 * (grid.error_estimate(&quotient) + grid.error_estimate(&integrand)));

    let residual = (variation - weak).abs();
    let scale = variation.abs().max(weak.abs());
    let (relative, verdict) = if scale < WeakFormResult::DEGENERATE || scale < resolution {
        (0.0, WeakVerdict::Inconclusive)
    } else {
        let r = residual / scale;
        (r, if r <= WeakFormResult::REL_TOL { WeakVerdict::Pass } else { WeakVerdict::Fail })
    };
    Ok(WeakFormResult { eps, variation, weak, residual, relative, verdict })
}

/// Step-size study for [`weak_form_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingResult {
    pub at_eps: WeakFormResult,
    pub at_half: WeakFormResult,
    /// `|A(ε) − A(ε/2)|` and `|A(ε/2) − A(ε/4)|` for the central difference `A`.
    pub change: f64,
    pub change_half: f64,
    /// The step-dependent part of the residual shrinks like `ε²`.
    pub quadratic: bool,
}

impl ScalingResult {
    pub fn passes(&self) -> bool {
        self.at_eps.verdict == WeakVerdict::Pass && self.at_half.verdict == WeakVerdict::Pass && self.quadratic
    }
}

/// Runs the check at `ε`, `ε/2` and `ε/4`.
///
/// The residual is the sum of a step-independent quadrature term and the
/// central-difference truncation `c ε² + O(ε⁴)`. Successive differences of
/// the central quotient isolate the truncation, which must drop by about
/// four when `ε` halves (a factor 1.5 of slack is allowed, plus a floor at
/// the rounding level).
pub fn weak_form_scaling(
    delta: &SourceForm,
    lambda: &LagrangeForm,
    s: &SectionPolynomial,
    phi: &TestFunction,
    grid: &GridSpec,
    eps: f64,
) -> Result<ScalingResult, NumericError> {
    let at_eps = weak_form_check(delta, lambda, s, phi, grid, eps)?;
    let at_half = weak_form_check(delta, lambda, s, phi, grid, eps / 2.0)?;
    let quarter = weak_form_check(delta, lambda, s, phi, grid, (eps / 4.0).max(1e-6))?;
    let change = (at_eps.variation - at_half.variation).abs();
    let change_half = (at_half.variation - quarter.variation).abs();
    let floor = 1e-12 * (1.0 + at_eps.variation.abs());
    let quadratic = change_half <= change / 4.0 * 1.5 + floor;
    Ok(ScalingResult { at_eps, at_half, change, change_half, quadratic })
}

/// Evaluates `e` at `trials` random points with coordinates uniform in
/// `[−2, 2]` and reports whether `|e| <= 1e-9 (1 + largest term)` at each.
pub fn randomized_identity_check(e: &JetExpr, trials: usize, seed: u64) -> Result<bool, NumericError> {
    if trials < 20 {
        return Err(NumericError::Trials(trials));
    }
    Ok(IdentityTester::with_seed(seed).sampled_zero(e, trials))
}

/// `∫ e dx` for a polynomial in one variable, computed exactly; used as an
/// oracle for the quadrature.
pub fn exact_integral_1d(e: &JetExpr, lo: &Rational, hi: &Rational) -> Option<Rational> {
    if e.has_atoms() || e.depends_on_fiber() {
        return None;
    }
    let x = Var::base(0);
    let mut acc = Rational::zero();
    for (m, c) in e.terms() {
        if m.vars().any(|(v, _)| *v != x) {
            return None;
        }
        let p = m.power_of(&x) as usize + 1;
        let pw = |t: &Rational| num_traits::pow(t.clone(), p);
        acc += c * (pw(hi) - pw(lo)) / Rational::from_integer(BigInt::from(p));
    }
    Some(acc)
}

//! Exact expression algebra on a finite-order jet space.
//!
//! A [`JetSpace`] fixes the number of base coordinates `x^1..x^n`, fiber
//! coordinates `u^1..u^m` and the highest jet order that expressions may
//! reach. All differential operators that can raise the order go through
//! the space so that capacity overflow surfaces as an error instead of a
//! silently truncated result.

mod eval;
mod expr;
mod index;
mod section;

pub use eval::{Decision, IdentityTester, JetPoint};
pub use expr::{Atom, AtomKind, ExprDisplay, Factor, JetExpr, Monomial, NonBaseArgument};
pub use index::{MultiIndex, Names, Var};
pub use section::SectionPolynomial;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("invalid jet space: {0}")]
    InvalidSpace(String),
    #[error("jet order {needed} exceeds the configured maximum {max}")]
    Capacity { needed: usize, max: usize },
    #[error("base index {index} out of range for n = {n}")]
    BaseIndex { index: usize, n: usize },
    #[error("fiber index {index} out of range for m = {m}")]
    FiberIndex { index: usize, m: usize },
}

/// Dimensions of `J^k E`: `n` base coordinates, `m` fiber coordinates and
/// the maximum jet order `k` available to intermediate expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetSpace {
    n: usize,
    m: usize,
    max_order: usize,
}

impl JetSpace {
    pub fn new(n: usize, m: usize, max_order: usize) -> Result<Self, JetError> {
        if n == 0 || m == 0 {
            return Err(JetError::InvalidSpace(format!(
                "need n >= 1 and m >= 1, got n = {n}, m = {m}"
            )));
        }
        if max_order < 2 {
            return Err(JetError::InvalidSpace(format!(
                "max_order must be at least 2, got {max_order}"
            )));
        }
        if n > u8::MAX as usize || m > u8::MAX as usize {
            return Err(JetError::InvalidSpace("dimension too large".into()));
        }
        Ok(JetSpace { n, m, max_order })
    }

    /// Space with the default maximum order of 6.
    pub fn with_dims(n: usize, m: usize) -> Result<Self, JetError> {
        JetSpace::new(n, m, DEFAULT_MAX_ORDER)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn check_order(&self, needed: usize) -> Result<(), JetError> {
        if needed > self.max_order {
            Err(JetError::Capacity { needed, max: self.max_order })
        } else {
            Ok(())
        }
    }

    pub fn check_base(&self, i: usize) -> Result<(), JetError> {
        if i >= self.n {
            Err(JetError::BaseIndex { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn check_fiber(&self, alpha: usize) -> Result<(), JetError> {
        if alpha >= self.m {
            Err(JetError::FiberIndex { index: alpha, m: self.m })
        } else {
            Ok(())
        }
    }

    /// Sorted multi-indices of length `len`.
    pub fn multi_indices(&self, len: usize) -> Vec<MultiIndex> {
        MultiIndex::all_of_length(self.n, len)
    }

    /// `D_i e = ∂_i e + Σ_I u^α_{I∪i} ∂e/∂u^α_I`.
    pub fn total_derivative(&self, e: &JetExpr, i: usize) -> Result<JetExpr, JetError> {
        self.check_base(i)?;
        let order = e.order();
        if e.depends_on_fiber() {
            self.check_order(order + 1)?;
        }
        Ok(e.total_derivative_unchecked(i))
    }

    /// `D_{i1} … D_{il} e`, applied right to left.
    pub fn total_derivatives(&self, e: &JetExpr, index: &MultiIndex) -> Result<JetExpr, JetError> {
        let mut acc = e.clone();
        for i in index.entries() {
            acc = self.total_derivative(&acc, i)?;
        }
        Ok(acc)
    }

    /// Weighted partial `∂^I_α`.
    pub fn weighted_partial(&self, e: &JetExpr, alpha: usize, index: &MultiIndex) -> Result<JetExpr, JetError> {
        self.check_fiber(alpha)?;
        if let Some(i) = index.max_entry() {
            self.check_base(i)?;
        }
        self.check_order(index.len())?;
        Ok(e.weighted_partial(alpha, index))
    }

    /// Weighted partial with the indices given as an (unsorted) slice.
    pub fn weighted_partial_at(&self, e: &JetExpr, alpha: usize, index: &[usize]) -> Result<JetExpr, JetError> {
        self.weighted_partial(e, alpha, &MultiIndex::new(index.iter().copied()))
    }

    /// Checks that every coordinate in `e` belongs to this space.
    pub fn validate(&self, e: &JetExpr) -> Result<(), JetError> {
        for v in e.vars() {
            match v {
                Var::Base(i) => self.check_base(i as usize)?,
                Var::Fiber { alpha, index } => {
                    self.check_fiber(alpha as usize)?;
                    if let Some(i) = index.max_entry() {
                        self.check_base(i)?;
                    }
                    self.check_order(index.len())?;
                }
            }
        }
        Ok(())
    }

    pub fn default_names(&self) -> Names {
        Names::default_for(self.n, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn u(idx: &[usize]) -> JetExpr {
        JetExpr::u(0, idx)
    }

    #[test]
    fn product_rule() {
        let s = JetSpace::with_dims(1, 1).unwrap();
        let e = &u(&[]) * &u(&[0]);
        let d = s.total_derivative(&e, 0).unwrap();
        assert_eq!(d, &u(&[0]).pow(2) + &(&u(&[]) * &u(&[0, 0])));
        assert_eq!(s.total_derivative(&JetExpr::x(0), 0).unwrap(), JetExpr::one());
    }

    #[test]
    fn raises_sorted_index() {
        let s = JetSpace::with_dims(3, 1).unwrap();
        let d = s.total_derivative(&u(&[1, 2]), 0).unwrap();
        assert_eq!(d, u(&[0, 1, 2]));
    }

    #[test]
    fn capacity_error_names_order() {
        let s = JetSpace::new(1, 1, 2).unwrap();
        let err = s.total_derivative(&u(&[0, 0]), 0).unwrap_err();
        assert_eq!(err, JetError::Capacity { needed: 3, max: 2 });
        // pure functions of x never overflow
        assert!(s.total_derivative(&JetExpr::x(0).pow(3), 0).is_ok());
    }

    #[test]
    fn weighted_partials() {
        let s = JetSpace::with_dims(2, 1).unwrap();
        let half = Rational::new(1.into(), 2.into());
        assert_eq!(s.weighted_partial_at(&u(&[0, 1]), 0, &[0, 1]).unwrap(), JetExpr::constant(half));
        assert_eq!(s.weighted_partial_at(&u(&[0, 0]), 0, &[0, 0]).unwrap(), JetExpr::one());
        let e = &u(&[0, 1]).pow(2) * &u(&[1]);
        assert_eq!(
            s.weighted_partial_at(&e, 0, &[0, 1]).unwrap(),
            s.weighted_partial_at(&e, 0, &[1, 0]).unwrap()
        );
    }

    #[test]
    fn rejects_degenerate_spaces() {
        assert!(JetSpace::new(0, 1, 4).is_err());
        assert!(JetSpace::new(1, 0, 4).is_err());
        assert!(JetSpace::new(1, 1, 1).is_err());
    }
}

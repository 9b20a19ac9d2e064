//! Numeric evaluation and randomized identity testing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{JetExpr, Var};

/// Numeric values for jet coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetPoint {
    values: BTreeMap<Var, f64>,
}

impl JetPoint {
    pub fn new() -> Self {
        JetPoint::default()
    }

    pub fn set(&mut self, v: Var, value: f64) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: &Var) -> Option<f64> {
        self.values.get(v).copied()
    }

    /// Assigns uniform values in `[lo, hi]` to every coordinate of `vars`
    /// that has no value yet.
    pub fn fill_random<'a, R: Rng>(
        &mut self,
        vars: impl IntoIterator<Item = &'a Var>,
        rng: &mut R,
        lo: f64,
        hi: f64,
    ) {
        for v in vars {
            self.values
                .entry(v.clone())
                .or_insert_with(|| rng.gen_range(lo..=hi));
        }
    }

    /// Evaluates `e`; every coordinate of `e` must have a value.
    pub fn eval(&self, e: &JetExpr) -> Result<f64, MissingCoordinate> {
        if let Some(v) = e.vars().into_iter().find(|v| !self.values.contains_key(v)) {
            return Err(MissingCoordinate(v));
        }
        Ok(e.eval_with(&|v| self.values[v]))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("no value for coordinate {0:?}")]
pub struct MissingCoordinate(pub Var);

/// Outcome of an equality or zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// Decided by canonical form.
    Exact(bool),
    /// Decided by agreement at random points.
    Probabilistic(bool),
}

impl Decision {
    pub fn holds(self) -> bool {
        match self {
            Decision::Exact(b) | Decision::Probabilistic(b) => b,
        }
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, Decision::Probabilistic(_))
    }
}

/// Zero testing for expressions whose canonical form cannot decide
/// (products of transcendental atoms such as `sin(x)^2 + cos(x)^2 - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityTester {
    pub seed: u64,
    pub samples: usize,
    pub rel_tol: f64,
    pub range: f64,
}

impl Default for IdentityTester {
    fn default() -> Self {
        IdentityTester { seed: 0x5eed_1dea, samples: 20, rel_tol: 1e-9, range: 2.0 }
    }
}

impl IdentityTester {
    pub fn with_seed(seed: u64) -> Self {
        IdentityTester { seed, ..Default::default() }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Whether `e` vanishes identically.
    ///
    /// Atom-free expressions are decided by their canonical form. Otherwise
    /// `e` is evaluated at `samples` random points and declared zero only if
    /// every value is below `rel_tol * (1 + largest term magnitude)`.
    pub fn is_zero(&self, e: &JetExpr) -> Decision {
        if e.is_zero() {
            return Decision::Exact(true);
        }
        if !e.has_atoms() {
            return Decision::Exact(false);
        }
        Decision::Probabilistic(self.sampled_zero(e, self.samples))
    }

    pub fn equals(&self, a: &JetExpr, b: &JetExpr) -> Decision {
        self.is_zero(&(a - b))
    }

    /// Sampling test without the canonical-form shortcut.
    pub fn sampled_zero(&self, e: &JetExpr, trials: usize) -> bool {
        let vars = e.vars();
        let mut rng = self.rng();
        (0..trials).all(|_| {
            let mut p = JetPoint::new();
            p.fill_random(vars.iter(), &mut rng, -self.range, self.range);
            let value = e.eval_with(&|v| p.values[v]);
            let scale = e.term_scale_with(&|v| p.values[v]);
            value.is_finite() && value.abs() <= self.rel_tol * (1.0 + scale)
        })
    }
}

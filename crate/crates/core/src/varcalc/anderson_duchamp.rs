//! Necessary structure of variational second-order source forms: the
//! fourth-order-linear and third-order-quadratic parts of `H_{αβ}` vanish,
//! which forces each `f_β` to be a polynomial of degree `<= n` in the
//! second-order coordinates.

use num_bigint::BigInt;

use super::{SourceForm, VarcalcError};
use crate::jet::{JetExpr, MultiIndex};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetrizedFailure {
    /// Fiber indices in the order they appear in the condition.
    pub fibers: Vec<usize>,
    /// Base indices (zero based) before symmetrization.
    pub indices: Vec<usize>,
    pub value: JetExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AndersonDuchampReport {
    /// `∂^{(ij}_γ ∂^{kl)}_α f_β ≠ 0`, fibers `[γ, α, β]`, indices `[i, j, k, l]`.
    pub fourth_order: Vec<SymmetrizedFailure>,
    /// `∂^{(rs}_δ ∂^{k)(l}_α ∂^{ij)}_γ f_β ≠ 0`, fibers `[δ, α, γ, β]`,
    /// indices `[r, s, k, l, i, j]`.
    pub third_order: Vec<SymmetrizedFailure>,
    /// Degree of each `f_β` in the second-order coordinates.
    pub degrees: Vec<u32>,
    pub n: usize,
}

impl AndersonDuchampReport {
    pub fn degree_ok(&self) -> bool {
        self.degrees.iter().all(|&d| d as usize <= self.n)
    }

    pub fn passes(&self) -> bool {
        self.fourth_order.is_empty() && self.third_order.is_empty() && self.degree_ok()
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn wp(e: &JetExpr, alpha: usize, a: usize, b: usize) -> JetExpr {
    e.weighted_partial(alpha, &MultiIndex::new([a, b]))
}

pub fn anderson_duchamp_check(delta: &SourceForm) -> Result<AndersonDuchampReport, VarcalcError> {
    delta.require_second_order()?;
    let space = delta.space();
    let (n, m) = (space.n(), space.m());
    let f = delta.coeffs();

    let perms4 = permutations(4);
    let perms3 = permutations(3);
    let quads = space.multi_indices(4);
    let triples = space.multi_indices(3);

    let mut fourth_order = Vec::new();
    let mut third_order = Vec::new();
    for (beta, fb) in f.iter().enumerate() {
        if fb.degree_in_order(2) < 2 {
            // both conditions differentiate at least twice in second-order coordinates
            continue;
        }
        for gamma in 0..m {
            for alpha in 0..m {
                for q in &quads {
                    let ix: Vec<usize> = q.entries().collect();
                    let mut acc = JetExpr::zero();
                    for p in &perms4 {
                        let inner = wp(fb, alpha, ix[p[2]], ix[p[3]]);
                        acc += &wp(&inner, gamma, ix[p[0]], ix[p[1]]);
                    }
                    if !acc.is_zero() {
                        let value = acc.scale(&Rational::new(1.into(), BigInt::from(perms4.len())));
                        fourth_order.push(SymmetrizedFailure { fibers: vec![gamma, alpha, beta], indices: ix, value });
                    }
                }
            }
        }
        if fb.degree_in_order(2) < 3 {
            continue;
        }
        for delta_ in 0..m {
            for alpha in 0..m {
                for gamma in 0..m {
                    for rsk in &triples {
                        let a: Vec<usize> = rsk.entries().collect();
                        for lij in &triples {
                            let b: Vec<usize> = lij.entries().collect();
                            let mut acc = JetExpr::zero();
                            for p in &perms3 {
                                for q in &perms3 {
                                    let (r, s, k) = (a[p[0]], a[p[1]], a[p[2]]);
                                    let (l, i, j) = (b[q[0]], b[q[1]], b[q[2]]);
                                    let e = wp(fb, gamma, i, j);
                                    let e = wp(&e, alpha, k, l);
                                    acc += &wp(&e, delta_, r, s);
                                }
                            }
                            if !acc.is_zero() {
                                let value = acc.scale(&Rational::new(1.into(), BigInt::from(36)));
                                let mut indices = a.clone();
                                indices.extend(&b);
                                third_order.push(SymmetrizedFailure {
                                    fibers: vec![delta_, alpha, gamma, beta],
                                    indices,
                                    value,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    let degrees = f.iter().map(|fb| fb.degree_in_order(2)).collect();
    Ok(AndersonDuchampReport { fourth_order, third_order, degrees, n })
}

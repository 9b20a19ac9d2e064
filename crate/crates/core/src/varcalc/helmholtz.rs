use num_bigint::BigInt;

use super::{SourceForm, VarcalcError};
use crate::jet::{JetExpr, MultiIndex, Names};
use crate::Rational;

/// Helmholtz expressions `H_{αβ}`, `H^i_{αβ}`, `H^{ij}_{αβ}` of a
/// second-order source form. `H^{ij}` is stored once per unordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelmholtzTensor {
    n: usize,
    m: usize,
    h: Vec<JetExpr>,
    hi: Vec<JetExpr>,
    hij: Vec<JetExpr>,
    pairs: Vec<MultiIndex>,
}

impl HelmholtzTensor {
    fn pair_slot(&self, i: usize, j: usize) -> usize {
        let key = MultiIndex::new([i, j]);
        self.pairs.iter().position(|p| *p == key).expect("pair in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self, alpha: usize, beta: usize) -> &JetExpr {
        &self.h[alpha * self.m + beta]
    }

    pub fn hi(&self, i: usize, alpha: usize, beta: usize) -> &JetExpr {
        &self.hi[(i * self.m + alpha) * self.m + beta]
    }

    pub fn hij(&self, i: usize, j: usize, alpha: usize, beta: usize) -> &JetExpr {
        let p = self.pair_slot(i, j);
        &self.hij[(p * self.m + alpha) * self.m + beta]
    }

    pub fn h_is_zero(&self) -> bool {
        self.h.iter().all(JetExpr::is_zero)
    }

    pub fn hi_is_zero(&self) -> bool {
        self.hi.iter().all(JetExpr::is_zero)
    }

    pub fn hij_is_zero(&self) -> bool {
        self.hij.iter().all(JetExpr::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.h_is_zero() && self.hi_is_zero() && self.hij_is_zero()
    }

    /// Highest jet order among the `H^i` components.
    pub fn hi_order(&self) -> usize {
        self.hi.iter().map(JetExpr::order).max().unwrap_or(0)
    }

    /// Every component with a readable label, in the order `H^{ij}`, `H^i`, `H`.
    pub fn labelled(&self, names: &Names) -> Vec<(String, &JetExpr)> {
        let b = |i: usize| names.base[i].clone();
        let f = |a: usize| names.fiber[a].clone();
        let mut out = Vec::new();
        for (p, pair) in self.pairs.iter().enumerate() {
            let ij: Vec<usize> = pair.entries().collect();
            for a in 0..self.m {
                for c in 0..self.m {
                    out.push((
                        format!("H^{{{}{}}}_{{{}{}}}", b(ij[0]), b(ij[1]), f(a), f(c)),
                        &self.hij[(p * self.m + a) * self.m + c],
                    ));
                }
            }
        }
        for i in 0..self.n {
            for a in 0..self.m {
                for c in 0..self.m {
                    out.push((format!("H^{}_{{{}{}}}", b(i), f(a), f(c)), self.hi(i, a, c)));
                }
            }
        }
        for a in 0..self.m {
            for c in 0..self.m {
                out.push((format!("H_{{{}{}}}", f(a), f(c)), self.h(a, c)));
            }
        }
        out
    }

    /// Labels and values of the nonvanishing components.
    pub fn nonzero(&self, names: &Names) -> Vec<(String, JetExpr)> {
        self.labelled(names)
            .into_iter()
            .filter(|(_, e)| !e.is_zero())
            .map(|(l, e)| (l, e.clone()))
            .collect()
    }
}

fn idx(entries: &[usize]) -> MultiIndex {
    MultiIndex::new(entries.iter().copied())
}

/// Helmholtz expressions of a source form of order at most two:
///
/// ```text
/// H_{αβ}    = ∂_β f_α − ∂_α f_β + D_i ∂^i_α f_β − D_i D_j ∂^{ij}_α f_β
/// H^i_{αβ}  = ∂^i_β f_α + ∂^i_α f_β − 2 D_j ∂^{ij}_α f_β
/// H^{ij}_{αβ} = ∂^{ij}_β f_α − ∂^{ij}_α f_β
/// ```
///
/// with summation over ordered base indices.
pub fn helmholtz(delta: &SourceForm) -> Result<HelmholtzTensor, VarcalcError> {
    delta.require_second_order()?;
    let space = *delta.space();
    let (n, m) = (space.n(), space.m());
    let f = delta.coeffs();
    let d = |e: &JetExpr, i: usize| space.total_derivative(e, i);
    let wp = |e: &JetExpr, a: usize, ix: &[usize]| e.weighted_partial(a, &idx(ix));

    let mut h = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let mut e = &wp(&f[a], b, &[]) - &wp(&f[b], a, &[]);
            for i in 0..n {
                e += &d(&wp(&f[b], a, &[i]), i)?;
                for j in 0..n {
                    let inner = d(&wp(&f[b], a, &[i, j]), j)?;
                    e -= &d(&inner, i)?;
                }
            }
            h.push(e);
        }
    }

    let mut hi = Vec::with_capacity(n * m * m);
    let two = Rational::from_integer(BigInt::from(2));
    for i in 0..n {
        for a in 0..m {
            for b in 0..m {
                let mut e = &wp(&f[a], b, &[i]) + &wp(&f[b], a, &[i]);
                for j in 0..n {
                    e -= &d(&wp(&f[b], a, &[i, j]), j)?.scale(&two);
                }
                hi.push(e);
            }
        }
    }

    let pairs = space.multi_indices(2);
    let mut hij = Vec::with_capacity(pairs.len() * m * m);
    for pair in &pairs {
        for a in 0..m {
            for b in 0..m {
                hij.push(&f[a].weighted_partial(b, pair) - &f[b].weighted_partial(a, pair));
            }
        }
    }

    Ok(HelmholtzTensor { n, m, h, hi, hij, pairs })
}

/// `(true, H)` iff every Helmholtz expression vanishes identically.
pub fn is_locally_variational(delta: &SourceForm) -> Result<(bool, HelmholtzTensor), VarcalcError> {
    let t = helmholtz(delta)?;
    Ok((t.is_zero(), t))
}

/// Residuals of the three identities relating the Helmholtz expressions of
/// any second-order source form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyResiduals {
    /// `H_{αβ} + H_{βα} − D_i H^i_{αβ} + D_i D_j H^{ij}_{αβ}`, indexed `[α][β]`.
    pub symmetric: Vec<Vec<JetExpr>>,
    /// `H^i_{αβ} − H^i_{βα} − 2 D_j H^{ij}_{αβ}`, indexed `[i][α][β]`.
    pub skew: Vec<Vec<Vec<JetExpr>>>,
    /// `H^{ij}_{αβ} + H^{ij}_{βα}`, indexed `[pair][α][β]` over sorted pairs.
    pub top: Vec<Vec<Vec<JetExpr>>>,
}

impl DependencyResiduals {
    pub fn all(&self) -> impl Iterator<Item = &JetExpr> {
        self.symmetric
            .iter()
            .flatten()
            .chain(self.skew.iter().flatten().flatten())
            .chain(self.top.iter().flatten().flatten())
    }

    pub fn all_zero(&self) -> bool {
        self.all().all(JetExpr::is_zero)
    }
}

pub fn helmholtz_dependency_residuals(delta: &SourceForm) -> Result<DependencyResiduals, VarcalcError> {
    let t = helmholtz(delta)?;
    let space = *delta.space();
    let (n, m) = (space.n(), space.m());
    let d = |e: &JetExpr, i: usize| space.total_derivative(e, i);
    let two = Rational::from_integer(BigInt::from(2));

    let mut symmetric = vec![vec![JetExpr::zero(); m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut e = t.h(a, b) + t.h(b, a);
            for i in 0..n {
                e -= &d(t.hi(i, a, b), i)?;
                for j in 0..n {
                    let inner = d(t.hij(i, j, a, b), j)?;
                    e += &d(&inner, i)?;
                }
            }
            symmetric[a][b] = e;
        }
    }

    let mut skew = vec![vec![vec![JetExpr::zero(); m]; m]; n];
    for (i, slot) in skew.iter_mut().enumerate() {
        for a in 0..m {
            for b in 0..m {
                let mut e = t.hi(i, a, b) - t.hi(i, b, a);
                for j in 0..n {
                    e -= &d(t.hij(i, j, a, b), j)?.scale(&two);
                }
                slot[a][b] = e;
            }
        }
    }

    let pairs = space.multi_indices(2);
    let top = pairs
        .iter()
        .map(|p| {
            let ij: Vec<usize> = p.entries().collect();
            (0..m)
                .map(|a| (0..m).map(|b| t.hij(ij[0], ij[1], a, b) + t.hij(ij[0], ij[1], b, a)).collect())
                .collect()
        })
        .collect();

    Ok(DependencyResiduals { symmetric, skew, top })
}

/// Upper bound on the number of independent Helmholtz expressions,
/// `m(m−1)/2 + n·m(m+1)/2 + n(n+1)/2 · m(m−1)/2`.
pub fn independent_helmholtz_count(n: u64, m: u64) -> u64 {
    m * (m - 1) / 2 + n * m * (m + 1) / 2 + n * (n + 1) / 2 * (m * (m - 1) / 2)
}

//! The span condition at a point and the equations obtained by solving the
//! ECS equations for the Helmholtz expressions.

use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use super::{ProjectableVectorField, SymmetryError};
use crate::jet::{IdentityTester, JetExpr, JetSpace, MultiIndex, Var};
use crate::varcalc::SourceForm;
use crate::Rational;

/// A square or rectangular matrix, exact when every entry could be
/// evaluated in rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Exact(Vec<Vec<Rational>>),
    Float(Vec<Vec<f64>>),
}

impl Matrix {
    pub fn rows(&self) -> usize {
        match self {
            Matrix::Exact(r) => r.len(),
            Matrix::Float(r) => r.len(),
        }
    }

    pub fn get_f64(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Exact(r) => r[i][j].to_f64().unwrap_or(f64::NAN),
            Matrix::Float(r) => r[i][j],
        }
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        match self {
            Matrix::Exact(r) => r.iter().map(|row| row.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()).collect(),
            Matrix::Float(r) => r.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Matrix::Exact(_))
    }
}

/// `B` holds the components of the selected fields at the point (one row
/// per field, columns `x^1..x^n, u^1..u^m`); `C = B⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanMatrix {
    /// Positions of the selected fields in the input list.
    pub subset: Vec<usize>,
    pub b: Matrix,
    pub c: Matrix,
}

fn point_value(space: &JetSpace, point: &[Rational], v: &Var) -> Option<Rational> {
    match v {
        Var::Base(i) => point.get(*i as usize).cloned(),
        Var::Fiber { alpha, index } if index.is_empty() => point.get(space.n() + *alpha as usize).cloned(),
        _ => None,
    }
}

fn point_f64(point: &[Rational]) -> Vec<f64> {
    point.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
}

enum Entries {
    Exact(Vec<Vec<Rational>>),
    Float(Vec<Vec<f64>>),
}

fn evaluate_rows(space: &JetSpace, fields: &[ProjectableVectorField], point: &[Rational]) -> Entries {
    let exact: Option<Vec<Vec<Rational>>> = fields
        .iter()
        .map(|f| {
            f.coefficients()
                .map(|c| c.eval_exact(&|v| point_value(space, point, v)))
                .collect::<Option<Vec<_>>>()
        })
        .collect();
    if let Some(rows) = exact {
        return Entries::Exact(rows);
    }
    let p = point_f64(point);
    let n = space.n();
    let value = |v: &Var| match v {
        Var::Base(i) => p[*i as usize],
        Var::Fiber { alpha, .. } => p[n + *alpha as usize],
    };
    Entries::Float(
        fields
            .iter()
            .map(|f| f.coefficients().map(|c| c.eval_with(&value)).collect())
            .collect(),
    )
}

fn rank_select_exact(rows: &[Vec<Rational>], need: usize) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    let mut chosen = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (piv, b) in &basis {
            if !r[*piv].is_zero() {
                let factor = &r[*piv] / &b[*piv];
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= &factor * y;
                }
            }
        }
        if let Some(piv) = r.iter().position(|x| !x.is_zero()) {
            basis.push((piv, r));
            chosen.push(k);
            if chosen.len() == need {
                break;
            }
        }
    }
    chosen
}

fn rank_select_float(rows: &[Vec<f64>], need: usize, tol: f64) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut chosen = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (piv, b) in &basis {
            let factor = r[*piv] / b[*piv];
            for (x, y) in r.iter_mut().zip(b) {
                *x -= factor * y;
            }
        }
        let (piv, best) = r
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if best > tol {
            basis.push((piv, r));
            chosen.push(k);
            if chosen.len() == need {
                break;
            }
        }
    }
    chosen
}

fn invert_exact(b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = b.len();
    let mut a: Vec<Vec<Rational>> = b
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::from_integer(1.into()) } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("selected rows are independent");
        a.swap(col, p);
        let inv = Rational::from_integer(1.into()) / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * y;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn invert_float(b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b.len();
    let mut a: Vec<Vec<f64>> = b
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty");
        a.swap(col, p);
        let inv = 1.0 / a[col][col];
        for x in a[col].iter_mut() {
            *x *= inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let factor = row[col];
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= factor * y;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Selects the first `n + m` fields, in the given order, whose values at
/// `point = (x, u)` are linearly independent, and inverts the resulting
/// matrix.
///
/// Entries are compared exactly when every component evaluates to a
/// rational number at the point. Otherwise elimination runs in `f64` with
/// pivot tolerance `1e-9 · max(1, max |entry|)`.
pub fn span_matrix(fields: &[ProjectableVectorField], point: &[Rational]) -> Result<SpanMatrix, SymmetryError> {
    let space = match fields.first() {
        Some(f) => *f.space(),
        None => return Err(SymmetryError::SpanFailure { rank: 0, needed: 0 }),
    };
    let need = space.n() + space.m();
    if point.len() != need {
        return Err(SymmetryError::Unsupported(format!(
            "sample point has {} coordinates, expected {need}",
            point.len()
        )));
    }
    match evaluate_rows(&space, fields, point) {
        Entries::Exact(rows) => {
            let subset = rank_select_exact(&rows, need);
            if subset.len() < need {
                return Err(SymmetryError::SpanFailure { rank: subset.len(), needed: need });
            }
            let b: Vec<Vec<Rational>> = subset.iter().map(|&k| rows[k].clone()).collect();
            let c = invert_exact(&b);
            Ok(SpanMatrix { subset, b: Matrix::Exact(b), c: Matrix::Exact(c) })
        }
        Entries::Float(rows) => {
            let scale = rows.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
            let subset = rank_select_float(&rows, need, 1e-9 * scale);
            if subset.len() < need {
                return Err(SymmetryError::SpanFailure { rank: subset.len(), needed: need });
            }
            let b: Vec<Vec<f64>> = subset.iter().map(|&k| rows[k].clone()).collect();
            let c = invert_float(&b);
            Ok(SpanMatrix { subset, b: Matrix::Float(b), c: Matrix::Float(c) })
        }
    }
}

/// One component of the transformed equations at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResidual {
    /// Exact residual as a function of the higher jet coordinates over the
    /// point, when it could be formed in rational arithmetic.
    pub exact: Option<JetExpr>,
    /// Largest magnitude over the random completions.
    pub max_abs: f64,
    pub zero: bool,
    /// The verdict rests on random completions rather than exact algebra.
    pub probabilistic: bool,
}

/// With `C = B⁻¹` split into base rows `c_j` and fiber rows `c_γ`,
///
/// ```text
/// eq_ii[γ][α] = Σ_A c_{γA} ECS_{A,α}
/// eq_i[j][α]  = Σ_A c_{jA} ECS_{A,α} + u^γ_j eq_ii[γ][α]
/// ```
///
/// These express the Helmholtz expressions of a variational `Δ` at the
/// point in terms of the symmetry data.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedEcs {
    pub eq_i: Vec<Vec<PointResidual>>,
    pub eq_ii: Vec<Vec<PointResidual>>,
}

impl TransformedEcs {
    pub fn all_zero(&self) -> bool {
        self.eq_i.iter().chain(&self.eq_ii).flatten().all(|r| r.zero)
    }

    pub fn any_probabilistic(&self) -> bool {
        self.eq_i.iter().chain(&self.eq_ii).flatten().any(|r| r.probabilistic)
    }
}

/// Linear combination `Σ_A w_A e_A (+ Σ extra)` with coefficients known
/// either exactly or numerically.
struct Combination {
    exact: Option<Vec<(Rational, JetExpr)>>,
    float: Vec<(f64, JetExpr)>,
}

/// `ecs[A]` is the ECS residual of the field `span.subset[A]`.
pub fn transformed_ecs(
    space: &JetSpace,
    ecs: &[SourceForm],
    span: &SpanMatrix,
    point: &[Rational],
    tester: &IdentityTester,
) -> Result<TransformedEcs, SymmetryError> {
    let (n, m) = (space.n(), space.m());
    if ecs.len() != n + m || span.c.rows() != n + m {
        return Err(SymmetryError::Unsupported(format!(
            "transformed equations need {} fields, got {}",
            n + m,
            ecs.len()
        )));
    }
    // restrict every ECS coefficient to the fiber over (x, u)
    let exact_c = match &span.c {
        Matrix::Exact(c) => Some(c),
        Matrix::Float(_) => None,
    };
    let restricted: Vec<Vec<JetExpr>> = ecs
        .iter()
        .map(|f| {
            f.coeffs()
                .iter()
                .map(|e| {
                    e.substitute(&|v| match v {
                        Var::Base(_) => point_value(space, point, v).map(JetExpr::constant),
                        Var::Fiber { index, .. } if index.is_empty() => point_value(space, point, v).map(JetExpr::constant),
                        _ => None,
                    })
                })
                .collect()
        })
        .collect();
    let symbolic = exact_c.is_some() && restricted.iter().flatten().all(|e| !e.has_atoms());

    let row_combination = |row: usize, alpha: usize| -> Combination {
        let exact = exact_c.map(|c| (0..n + m).map(|a| (c[row][a].clone(), restricted[a][alpha].clone())).collect());
        let float = (0..n + m).map(|a| (span.c.get_f64(row, a), restricted[a][alpha].clone())).collect();
        Combination { exact, float }
    };

    let mut higher = std::collections::BTreeSet::new();
    for e in restricted.iter().flatten() {
        higher.extend(e.vars().into_iter().filter(|v| v.order().is_some_and(|o| o > 0)));
    }
    for g in 0..m {
        for j in 0..n {
            higher.insert(Var::fiber(g, MultiIndex::new([j])));
        }
    }
    let mut rng = tester.rng();
    let samples: Vec<std::collections::BTreeMap<Var, f64>> = (0..tester.samples.max(1))
        .map(|_| higher.iter().map(|v| (v.clone(), rng.gen_range(-tester.range..=tester.range))).collect())
        .collect();
    let p = point_f64(point);
    let value_at = |s: &std::collections::BTreeMap<Var, f64>, v: &Var| -> f64 {
        match v {
            Var::Base(i) => p[*i as usize],
            Var::Fiber { alpha, index } if index.is_empty() => p[n + *alpha as usize],
            _ => s[v],
        }
    };

    let finish = |parts: Vec<(Combination, Option<JetExpr>)>| -> PointResidual {
        // parts: combinations, each optionally multiplied by a coordinate
        let exact = if symbolic {
            let mut acc = JetExpr::zero();
            for (comb, mult) in &parts {
                let mut sub = JetExpr::zero();
                for (w, e) in comb.exact.as_ref().expect("exact inverse") {
                    sub += &e.scale(w);
                }
                acc += &match mult {
                    Some(u) => u * &sub,
                    None => sub,
                };
            }
            Some(acc)
        } else {
            None
        };
        let mut max_abs = 0.0f64;
        let mut sampled_zero = true;
        for s in &samples {
            let val = |v: &Var| value_at(s, v);
            let mut total = 0.0;
            let mut scale = 0.0;
            for (comb, mult) in &parts {
                let factor = mult.as_ref().map_or(1.0, |u| u.eval_with(&val));
                for (w, e) in &comb.float {
                    total += factor * w * e.eval_with(&val);
                    scale += (factor * w).abs() * e.term_scale_with(&val);
                }
            }
            max_abs = max_abs.max(total.abs());
            if !(total.is_finite() && total.abs() <= tester.rel_tol * (1.0 + scale)) {
                sampled_zero = false;
            }
        }
        match exact {
            Some(e) => {
                let zero = e.is_zero();
                PointResidual { exact: Some(e), max_abs: if zero { 0.0 } else { max_abs }, zero, probabilistic: false }
            }
            None => PointResidual { exact: None, max_abs, zero: sampled_zero, probabilistic: true },
        }
    };

    let eq_ii: Vec<Vec<PointResidual>> = (0..m)
        .map(|g| (0..m).map(|a| finish(vec![(row_combination(n + g, a), None)])).collect())
        .collect();
    let eq_i: Vec<Vec<PointResidual>> = (0..n)
        .map(|j| {
            (0..m)
                .map(|a| {
                    let mut parts = vec![(row_combination(j, a), None)];
                    for g in 0..m {
                        parts.push((row_combination(n + g, a), Some(JetExpr::u(g, &[j]))));
                    }
                    finish(parts)
                })
                .collect()
        })
        .collect();
    Ok(TransformedEcs { eq_i, eq_ii })
}

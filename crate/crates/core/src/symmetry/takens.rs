//! Combined verdict for a source form with a family of symmetries that
//! satisfy continuity equations and span the fibers at sample points.

use super::{
    is_symmetry, noether_decomposition, span_matrix, transformed_ecs, ProjectableVectorField, SpanMatrix,
    SymmetryError, TransformedEcs,
};
use crate::jet::{Decision, IdentityTester, JetExpr};
use crate::varcalc::{
    anderson_duchamp_check, euler_lagrange, helmholtz, vainberg_tonti, AndersonDuchampReport, HelmholtzTensor,
    LagrangeForm, SourceForm,
};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedField {
    pub name: String,
    pub field: ProjectableVectorField,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TakensOptions {
    pub tester: IdentityTester,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVerdict {
    pub name: String,
    pub symmetry: Decision,
    pub lie_derivative: SourceForm,
    pub continuity: Decision,
    pub continuity_residual: SourceForm,
    pub ecs: SourceForm,
    pub ecs_zero: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanVerdict {
    pub point: Vec<Rational>,
    /// Rank reached by the symmetries at the point.
    pub rank: usize,
    pub needed: usize,
    /// Present when the span condition holds.
    pub matrix: Option<SpanMatrix>,
    /// Names of the fields selected for the matrix.
    pub selected: Vec<String>,
    pub transformed: Option<TransformedEcs>,
}

impl SpanVerdict {
    pub fn holds(&self) -> bool {
        self.matrix.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelmholtzStatus {
    pub hij_zero: bool,
    pub hi_zero: bool,
    pub h_zero: bool,
    pub hi_order: usize,
    /// Nonzero components as `(label, value)`, `H^{ij}` first.
    pub nonzero: Vec<(String, JetExpr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TakensReport {
    pub fields: Vec<FieldVerdict>,
    pub spans: Vec<SpanVerdict>,
    pub helmholtz: HelmholtzStatus,
    pub tensor: HelmholtzTensor,
    pub anderson_duchamp: AndersonDuchampReport,
    /// Every field is a symmetry with a continuity equation and the
    /// symmetries span the fibers at every sample point.
    pub hypotheses_hold: bool,
    /// `Δ` is locally variational.
    pub variational: bool,
    /// Vainberg–Tonti Lagrangian, when `Δ` is variational.
    pub lagrangian: Option<LagrangeForm>,
    /// `𝓔(L) = Δ` for the Lagrangian above.
    pub lagrangian_verified: bool,
    pub trace: Vec<TraceStep>,
}

pub fn takens_report(
    delta: &SourceForm,
    fields: &[NamedField],
    points: &[Vec<Rational>],
    options: &TakensOptions,
) -> Result<TakensReport, SymmetryError> {
    let space = *delta.space();
    let names = space.default_names();
    let tester = &options.tester;
    let tensor = helmholtz(delta)?;

    let mut verdicts = Vec::new();
    for nf in fields {
        if nf.field.space() != &space {
            return Err(SymmetryError::Unsupported(format!("field {} lives on a different space", nf.name)));
        }
        let decomposition = noether_decomposition(&nf.field, delta, tester)?;
        let lie = decomposition.el_part.add(&decomposition.ecs_part);
        verdicts.push(FieldVerdict {
            name: nf.name.clone(),
            symmetry: is_symmetry(&nf.field, delta, tester)?,
            lie_derivative: lie,
            continuity: super::all_zero(decomposition.el_part.coeffs(), tester),
            continuity_residual: decomposition.el_part,
            ecs_zero: super::all_zero(decomposition.ecs_part.coeffs(), tester),
            ecs: decomposition.ecs_part,
        });
    }

    let symmetric: Vec<usize> = (0..fields.len()).filter(|&k| verdicts[k].symmetry.holds()).collect();
    let sym_fields: Vec<ProjectableVectorField> = symmetric.iter().map(|&k| fields[k].field.clone()).collect();
    let needed = space.n() + space.m();
    let mut spans = Vec::new();
    for point in points {
        let outcome = if sym_fields.is_empty() {
            Err(SymmetryError::SpanFailure { rank: 0, needed })
        } else {
            span_matrix(&sym_fields, point)
        };
        match outcome {
            Ok(matrix) => {
                let chosen: Vec<usize> = matrix.subset.iter().map(|&k| symmetric[k]).collect();
                let ecs: Vec<SourceForm> = chosen.iter().map(|&k| verdicts[k].ecs.clone()).collect();
                let transformed = transformed_ecs(&space, &ecs, &matrix, point, tester)?;
                spans.push(SpanVerdict {
                    point: point.clone(),
                    rank: needed,
                    needed,
                    selected: chosen.iter().map(|&k| fields[k].name.clone()).collect(),
                    matrix: Some(matrix),
                    transformed: Some(transformed),
                });
            }
            Err(SymmetryError::SpanFailure { rank, needed }) => spans.push(SpanVerdict {
                point: point.clone(),
                rank,
                needed,
                matrix: None,
                selected: Vec::new(),
                transformed: None,
            }),
            Err(e) => return Err(e),
        }
    }

    let helmholtz_status = HelmholtzStatus {
        hij_zero: tensor.hij_is_zero(),
        hi_zero: tensor.hi_is_zero(),
        h_zero: tensor.h_is_zero(),
        hi_order: tensor.hi_order(),
        nonzero: tensor.nonzero(&names),
    };
    let anderson_duchamp = anderson_duchamp_check(delta)?;
    let hypotheses_hold = !fields.is_empty()
        && verdicts.iter().all(|v| v.symmetry.holds() && v.continuity.holds())
        && !spans.is_empty()
        && spans.iter().all(SpanVerdict::holds);
    let variational = tensor.is_zero();

    let (lagrangian, lagrangian_verified) = if variational {
        let l = vainberg_tonti(delta)?;
        let ok = euler_lagrange(&l)? == *delta;
        (Some(l), ok)
    } else {
        (None, false)
    };

    let mut trace = Vec::new();
    if options.trace {
        let step = |name: &str, passed: bool, detail: String| TraceStep { name: name.to_string(), passed, detail };
        trace.push(step(
            "anderson-duchamp",
            anderson_duchamp.passes(),
            format!(
                "{} fourth-order and {} third-order symmetrized derivatives nonzero; second-order degrees {:?} with n = {}",
                anderson_duchamp.fourth_order.len(),
                anderson_duchamp.third_order.len(),
                anderson_duchamp.degrees,
                anderson_duchamp.n
            ),
        ));
        let count = |prefix: &str| {
            helmholtz_status
                .nonzero
                .iter()
                .filter(|(l, _)| l.starts_with(prefix) && (prefix != "H_" || !l.starts_with("H^")))
                .count()
        };
        trace.push(step("H^{ij} = 0", helmholtz_status.hij_zero, format!("{} nonzero components", count("H^{"))));
        trace.push(step(
            "order of H^i <= 2",
            helmholtz_status.hi_order <= 2,
            format!("H^i has order {}", helmholtz_status.hi_order),
        ));
        let hi_nonzero = helmholtz_status
            .nonzero
            .iter()
            .filter(|(l, _)| l.starts_with("H^") && !l.starts_with("H^{"))
            .count();
        trace.push(step("H^i = 0", helmholtz_status.hi_zero, format!("{hi_nonzero} nonzero components")));
        trace.push(step("H = 0", helmholtz_status.h_zero, format!("{} nonzero components", count("H_"))));
    }

    Ok(TakensReport {
        fields: verdicts,
        spans,
        helmholtz: helmholtz_status,
        tensor,
        anderson_duchamp,
        hypotheses_hold,
        variational,
        lagrangian,
        lagrangian_verified,
        trace,
    })
}

use std::path::Path;

use serde_json::{json, Value};
use varkit_core::dsl::{self, ModelFile};
use varkit_core::jet::{Decision, IdentityTester, JetExpr, JetPoint, SectionPolynomial, Var};
use varkit_core::numeric::{self, GridSpec, TestFunction, WeakVerdict};
use varkit_core::symmetry::{
    self, characteristic, check_current, construct_current_ode, is_symmetry, lie_derivative_source,
    noether_decomposition, takens_report, SymmetryError, TakensOptions,
};
use varkit_core::varcalc::{
    anderson_duchamp_check, euler_lagrange, helmholtz, independent_helmholtz_count, reconstruct_lagrangian_ode,
    vainberg_tonti, CurrentDensity, LagrangeForm, OdeReconstruction, SourceForm, VarcalcError,
};
use varkit_core::Rational;

use crate::report::{Check, Report, Verdict, Witness};

/// Errors that end the run with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

pub type Outcome = Result<(), UsageError>;

pub struct Session {
    pub model: ModelFile,
    pub tester: IdentityTester,
}

pub fn load(path: &Path) -> Result<(String, ModelFile), UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let model = dsl::parse(&text).map_err(|e| UsageError(format!("{}:{e}", path.display())))?;
    Ok((text, model))
}

impl Session {
    fn show(&self, e: &JetExpr) -> String {
        self.model.display(e).to_string()
    }

    fn field(&self, name: &str) -> Result<&symmetry::NamedField, UsageError> {
        self.model.field(name).ok_or_else(|| UsageError(format!("no vectorfield named '{name}'")))
    }

    fn fiber_name(&self, a: usize) -> &str {
        &self.model.names.fiber[a]
    }

    fn components(&self, prefix: &str, form: &SourceForm) -> Vec<Witness> {
        form.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(a, e)| Witness { label: format!("{prefix}_{}", self.fiber_name(a)), value: self.show(e) })
            .collect()
    }

    fn form_json(&self, form: &SourceForm) -> Value {
        Value::Array(form.coeffs().iter().map(|e| Value::String(self.show(e))).collect())
    }

    pub fn check_variational(&self, r: &mut Report) -> Outcome {
        let delta = self.model.source_form();
        let tensor = helmholtz(&delta)?;
        let names = &self.model.names;
        let nonzero = tensor.nonzero(names);
        let detail = if nonzero.is_empty() {
            "all Helmholtz expressions vanish".to_string()
        } else {
            format!("{} nonzero Helmholtz expressions", nonzero.len())
        };
        let witness = nonzero.iter().map(|(l, e)| Witness { label: l.clone(), value: self.show(e) }).collect();
        r.check(Check::new("helmholtz", Verdict::from_bool(tensor.is_zero()), detail).with_witness(witness));

        let ad = anderson_duchamp_check(&delta)?;
        let mut witness: Vec<Witness> = ad
            .fourth_order
            .iter()
            .chain(&ad.third_order)
            .map(|f| Witness {
                label: format!("fibers {:?} indices {:?}", f.fibers, f.indices),
                value: self.show(&f.value),
            })
            .collect();
        for (b, d) in ad.degrees.iter().enumerate() {
            if *d as usize > ad.n {
                witness.push(Witness { label: format!("degree of f_{}", self.fiber_name(b)), value: d.to_string() });
            }
        }
        r.check(
            Check::new(
                "anderson-duchamp",
                Verdict::from_bool(ad.passes()),
                format!("second-order degrees {:?}, n = {}", ad.degrees, ad.n),
            )
            .with_witness(witness),
        );

        let all: serde_json::Map<String, Value> =
            tensor.labelled(names).into_iter().map(|(l, e)| (l, Value::String(self.show(e)))).collect();
        r.result("helmholtz", Value::Object(all));
        r.result("variational", tensor.is_zero());
        Ok(())
    }

    pub fn lagrangian(&self, r: &mut Report, energy: Option<&str>) -> Outcome {
        if let Some(text) = energy {
            let e = self.model.parse_expression(text)?;
            match reconstruct_lagrangian_ode(&self.model.space, &e) {
                Ok(rec) => {
                    r.check(Check::new(
                        "energy relation",
                        Verdict::from_bool(rec.energy_verified),
                        "E = L - u_x dL/du_x holds exactly",
                    ));
                    r.check(Check::new(
                        "euler-lagrange relation",
                        Verdict::from_bool(rec.euler_lagrange_verified),
                        "E(L) = f holds exactly",
                    ));
                    r.result("lagrangian", self.show(rec.lagrangian.lagrangian()));
                    r.result("source", self.form_json(&rec.source));
                    r.result("gauge", OdeReconstruction::GAUGE_NOTE);
                }
                Err(VarcalcError::Resonance { residue }) => {
                    r.check(Check::new(
                        "reconstruction",
                        Verdict::Fail,
                        format!("resonant term {residue}: no polynomial Lagrangian (singular solution -u_x ln u_x)"),
                    ));
                }
                Err(e) => return Err(e.into()),
            }
            return Ok(());
        }

        let delta = self.model.source_form();
        let tensor = helmholtz(&delta)?;
        r.check(Check::new(
            "helmholtz",
            Verdict::from_bool(tensor.is_zero()),
            if tensor.is_zero() { "source form is locally variational" } else { "source form is not variational" },
        ));
        let l = vainberg_tonti(&delta)?;
        let el = euler_lagrange(&l)?;
        let diff = el.add(&delta.neg());
        r.check(
            Check::new(
                "euler-lagrange",
                Verdict::from_bool(diff.is_zero()),
                "Euler-Lagrange expressions of the Vainberg-Tonti Lagrangian reproduce f",
            )
            .with_witness(self.components("E(L) - f", &diff)),
        );
        r.result("lagrangian", self.show(l.lagrangian()));
        for (name, _) in &self.model.lagrangians {
            let lam = self.model.lagrangian(name).expect("declared");
            let el = euler_lagrange(&lam)?;
            let diff = el.add(&delta.neg());
            r.check(
                Check::new(
                    format!("euler-lagrange {name}"),
                    Verdict::from_bool(diff.is_zero()),
                    format!("Euler-Lagrange expressions of {name} reproduce f"),
                )
                .with_witness(self.components("E(L) - f", &diff)),
            );
        }
        Ok(())
    }

    pub fn symmetry(&self, r: &mut Report, field: &str) -> Outcome {
        let nf = self.field(field)?;
        let delta = self.model.source_form();
        let lie = lie_derivative_source(&nf.field, &delta)?;
        let d = is_symmetry(&nf.field, &delta, &self.tester)?;
        r.check(
            Check::decided(format!("symmetry {field}"), d, "Lie derivative of the source form along the prolonged field")
                .with_witness(self.components("L_V f", &lie)),
        );
        r.result("lie_derivative", self.form_json(&lie));
        Ok(())
    }

    pub fn conservation(&self, r: &mut Report, field: &str, current: Option<&str>) -> Outcome {
        let nf = self.field(field)?;
        let delta = self.model.source_form();
        let q = characteristic(&nf.field);
        let residual = symmetry::continuity_residual(&nf.field, &delta)?;
        let cont = all_zero(&self.tester, residual.coeffs());
        r.check(
            Check::decided(format!("continuity {field}"), cont, "Q^a f_a is a total divergence")
                .with_witness(self.components("E(Q f)", &residual)),
        );
        r.result("characteristic", Value::Array(q.iter().map(|e| Value::String(self.show(e))).collect()));
        let space = self.model.space;
        match current {
            Some(name) => {
                let comps = self.model.current(name).ok_or_else(|| UsageError(format!("no current named '{name}'")))?;
                let j = CurrentDensity::new(&space, comps.to_vec())?;
                let d = check_current(&q, &delta, &j, &self.tester)?;
                let div = varkit_core::varcalc::total_divergence(&space, &j)?;
                let pairing: JetExpr = q.iter().zip(delta.coeffs()).map(|(a, b)| a * b).sum();
                let mut check = Check::decided(format!("current {name}"), d, "D_i J^i = Q^a f_a");
                if !d.holds() {
                    check = check.with_witness(vec![Witness {
                        label: "D_i J^i - Q^a f_a".into(),
                        value: self.show(&(&div - &pairing)),
                    }]);
                }
                r.check(check);
            }
            None if cont.holds() => match construct_current_ode(&q, &delta, &self.tester) {
                Ok((j, d)) => {
                    r.check(Check::decided("current construction", d, "D_x J = Q^a f_a verified"));
                    r.result("current", self.show(&j.components()[0]));
                }
                Err(SymmetryError::Unsupported(msg)) => {
                    r.check(Check::new("current construction", Verdict::Inconclusive, msg));
                }
                Err(e) => r.check(Check::new("current construction", Verdict::Fail, e.to_string())),
            },
            None => {}
        }
        Ok(())
    }

    pub fn ecs(&self, r: &mut Report, field: &str) -> Outcome {
        let nf = self.field(field)?;
        let delta = self.model.source_form();
        match noether_decomposition(&nf.field, &delta, &self.tester) {
            Ok(d) => {
                r.check(Check::decided(
                    "decomposition",
                    d.cross_check,
                    "Lie derivative = continuity part + ECS part",
                ));
                let z = all_zero(&self.tester, d.ecs_part.coeffs());
                r.check(
                    Check::decided(format!("ecs {field}"), z, "ECS residual vanishes")
                        .with_witness(self.components("ECS", &d.ecs_part)),
                );
                r.result("continuity_part", self.form_json(&d.el_part));
                r.result("ecs_part", self.form_json(&d.ecs_part));
                r.result("lie_derivative", self.form_json(&d.el_part.add(&d.ecs_part)));
            }
            Err(SymmetryError::Internal(msg)) => r.check(Check::new("decomposition", Verdict::Fail, msg)),
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    pub fn takens(&self, r: &mut Report, points: &[Vec<Rational>], trace: bool) -> Outcome {
        let delta = self.model.source_form();
        let options = TakensOptions { tester: self.tester, trace };
        let rep = takens_report(&delta, &self.model.fields, points, &options)?;
        for v in &rep.fields {
            r.check(
                Check::decided(format!("symmetry {}", v.name), v.symmetry, "Lie derivative vanishes")
                    .with_witness(self.components("L_V f", &v.lie_derivative)),
            );
            r.check(
                Check::decided(format!("continuity {}", v.name), v.continuity, "Q^a f_a is a total divergence")
                    .with_witness(self.components("E(Q f)", &v.continuity_residual)),
            );
        }
        let mut point_json = Vec::new();
        for s in &rep.spans {
            let at = self.point_text(&s.point);
            let detail = if s.holds() {
                format!("rank {} using {}", s.rank, s.selected.join(", "))
            } else {
                format!("rank {} of {}", s.rank, s.needed)
            };
            r.check(Check::new(format!("span at {at}"), Verdict::from_bool(s.holds()), detail));
            if let Some(t) = &s.transformed {
                let mut witness = Vec::new();
                let names = &self.model.names;
                for (j, row) in t.eq_i.iter().enumerate() {
                    for (a, res) in row.iter().enumerate() {
                        if !res.zero {
                            witness.push(self.residual_witness(format!("I_{}{}", names.base[j], names.fiber[a]), res));
                        }
                    }
                }
                for (g, row) in t.eq_ii.iter().enumerate() {
                    for (a, res) in row.iter().enumerate() {
                        if !res.zero {
                            witness.push(self.residual_witness(format!("II_{}{}", names.fiber[g], names.fiber[a]), res));
                        }
                    }
                }
                let mut c = Check::new(
                    format!("transformed ecs at {at}"),
                    Verdict::from_bool(t.all_zero()),
                    "ECS equations solved for the Helmholtz expressions through the inverse span matrix",
                )
                .with_witness(witness);
                c.probabilistic = t.any_probabilistic();
                r.check(c);
            }
            point_json.push(Value::String(at));
        }
        let h = &rep.helmholtz;
        r.check(
            Check::new(
                "helmholtz",
                Verdict::from_bool(rep.variational),
                if rep.variational { "all Helmholtz expressions vanish" } else { "Helmholtz expressions do not vanish" },
            )
            .with_witness(h.nonzero.iter().map(|(l, e)| Witness { label: l.clone(), value: self.show(e) }).collect()),
        );
        if let Some(l) = &rep.lagrangian {
            r.check(Check::new(
                "euler-lagrange",
                Verdict::from_bool(rep.lagrangian_verified),
                "Euler-Lagrange expressions of the Vainberg-Tonti Lagrangian reproduce f",
            ));
            r.result("lagrangian", self.show(l.lagrangian()));
        }
        r.result("points", Value::Array(point_json));
        r.result("hypotheses_hold", rep.hypotheses_hold);
        r.result("verdict_text", if rep.variational { "variational" } else { "not variational" });
        if trace {
            let steps: Vec<Value> = rep
                .trace
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    Value::String(format!(
                        "{}. {}: {} ({})",
                        k + 1,
                        s.name,
                        if s.passed { "pass" } else { "fail" },
                        s.detail
                    ))
                })
                .collect();
            r.result("trace", Value::Array(steps));
        }
        Ok(())
    }

    fn residual_witness(&self, label: String, res: &symmetry::PointResidual) -> Witness {
        let value = match &res.exact {
            Some(e) => self.show(e),
            None => format!("max |value| = {:.3e} over random completions", res.max_abs),
        };
        Witness { label, value }
    }

    fn point_text(&self, p: &[Rational]) -> String {
        let names = self.model.names.base.iter().chain(&self.model.names.fiber);
        let parts: Vec<String> = names.zip(p).map(|(n, v)| format!("{n}={v}")).collect();
        format!("({})", parts.join(", "))
    }

    /// Points from `--points`: points separated by `,`, coordinates inside
    /// a point by `:` in the order `x.., u..`; missing coordinates are 0.
    pub fn parse_points(&self, text: &str) -> Result<Vec<Vec<Rational>>, UsageError> {
        let dim = self.model.space.n() + self.model.space.m();
        let mut out = Vec::new();
        for item in text.split(',') {
            let coords: Vec<&str> = item.split(':').collect();
            if coords.len() > dim {
                return Err(UsageError(format!("point '{item}' has more than {dim} coordinates")));
            }
            let mut p = vec![Rational::from_integer(0.into()); dim];
            for (k, c) in coords.iter().enumerate() {
                let e = self.model.parse_expression(c.trim())?;
                p[k] = e.as_constant().ok_or_else(|| UsageError(format!("'{c}' is not a number")))?;
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Five points with coordinates drawn from `[-2, 2]` and rounded to
    /// three decimals.
    pub fn default_points(&self) -> Vec<Vec<Rational>> {
        let space = self.model.space;
        let vars: Vec<Var> = (0..space.n())
            .map(Var::base)
            .chain((0..space.m()).map(|a| Var::fiber(a, Default::default())))
            .collect();
        let mut rng = self.tester.rng();
        (0..5)
            .map(|_| {
                let mut p = JetPoint::new();
                p.fill_random(vars.iter(), &mut rng, -2.0, 2.0);
                vars.iter()
                    .map(|v| {
                        let milli = (p.get(v).expect("filled") * 1000.0).round() as i64;
                        Rational::new(milli.into(), 1000.into())
                    })
                    .collect()
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn weak_check(
        &self,
        r: &mut Report,
        section: &str,
        test: &str,
        domain: &str,
        eps: f64,
        lagrangian: Option<&str>,
        panels: Option<usize>,
    ) -> Outcome {
        let space = self.model.space;
        let delta = self.model.source_form();
        let bounds = parse_domain(domain, space.n())?;
        let grid = match panels {
            Some(p) => GridSpec::new(bounds, p)?,
            None => GridSpec::with_default_panels(bounds)?,
        };
        let lambda: LagrangeForm = match lagrangian {
            Some(name) => self.model.lagrangian(name).ok_or_else(|| UsageError(format!("no lagrangian named '{name}'")))?,
            None => vainberg_tonti(&delta)?,
        };
        let s_comps = match self.model.section(section) {
            Some(c) => c.to_vec(),
            None => self.model.parse_tuple(section)?,
        };
        let s = SectionPolynomial::new(&space, s_comps)?;
        let phi_comps = match self.model.section(test) {
            Some(c) => c.to_vec(),
            None => self.model.parse_tuple(test)?,
        };
        let phi = TestFunction::new(&space, &grid, phi_comps)?;
        let sc = numeric::weak_form_scaling(&delta, &lambda, &s, &phi, &grid, eps)?;
        let verdict = |v: WeakVerdict| match v {
            WeakVerdict::Pass => Verdict::Pass,
            WeakVerdict::Fail => Verdict::Fail,
            WeakVerdict::Inconclusive => Verdict::Inconclusive,
        };
        for (label, res) in [("eps", &sc.at_eps), ("eps/2", &sc.at_half)] {
            r.check(Check::new(
                format!("weak form at {label}"),
                verdict(res.verdict),
                format!(
                    "variation {:.12e}, weak form {:.12e}, relative residual {:.3e} (eps = {})",
                    res.variation, res.weak, res.relative, res.eps
                ),
            ));
        }
        let scaling = if sc.at_eps.verdict == WeakVerdict::Fail {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(sc.quadratic)
        };
        r.check(Check::new(
            "eps^2 scaling",
            scaling,
            format!("change of the difference quotient {:.3e} then {:.3e}", sc.change, sc.change_half),
        ));
        r.result("lagrangian", self.show(lambda.lagrangian()));
        r.result("variation", sc.at_eps.variation);
        r.result("weak_form", sc.at_eps.weak);
        r.result("residual", sc.at_eps.residual);
        r.result("relative_residual", sc.at_eps.relative);
        Ok(())
    }
}

fn all_zero(tester: &IdentityTester, exprs: &[JetExpr]) -> Decision {
    let mut prob = false;
    for e in exprs {
        let d = tester.is_zero(e);
        prob |= d.is_probabilistic();
        if !d.holds() {
            return if prob { Decision::Probabilistic(false) } else { Decision::Exact(false) };
        }
    }
    if prob {
        Decision::Probabilistic(true)
    } else {
        Decision::Exact(true)
    }
}

fn parse_domain(text: &str, n: usize) -> Result<Vec<(f64, f64)>, UsageError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| UsageError(format!("bad domain bound '{s}'"))))
        .collect::<Result<_, _>>()?;
    if values.len() != 2 * n {
        return Err(UsageError(format!("domain needs {} bounds for n = {n}, got {}", 2 * n, values.len())));
    }
    Ok(values.chunks(2).map(|c| (c[0], c[1])).collect())
}

pub fn count(r: &mut Report, n: u64, m: u64) -> Outcome {
    if n == 0 || m == 0 {
        return Err(UsageError("n and m must be positive".into()));
    }
    let c = independent_helmholtz_count(n, m);
    r.check(Check::new("count", Verdict::Pass, format!("{c} independent Helmholtz conditions for n = {n}, m = {m}")));
    r.result("count", json!(c));
    Ok(())
}

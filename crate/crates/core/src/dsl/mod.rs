//! The `.vk` model format.
//!
//! ```text
//! space { base: x; fiber: u; order: 2 }
//! equation f_u = u + u_xx;
//! vectorfield T = d/dx;
//! vectorfield S = sin(x)*d/du;
//! current E = (u^2 + u_x^2)/2;
//! section s = x^2;
//! lagrangian L = u^2/2 - u_x^2/2;
//! ```
//!
//! Derivatives are written with an index suffix (`u_xy` is `u_{xy}`, and
//! `u_yx` names the same coordinate). Decimal literals are read as exact
//! rationals. `sin`, `cos` and `exp` accept base-coordinate arguments only.
//! `#` starts a comment.

mod lexer;
mod parser;

use std::fmt;

use num_traits::Signed;

use crate::jet::{JetExpr, JetSpace, Names};
use crate::symmetry::NamedField;
use crate::varcalc::{LagrangeForm, SourceForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Undeclared(String),
    OrderOverflow { name: String, order: usize, max: usize },
    Semantic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}:{}: {kind}", pos.line, pos.column)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError { pos, kind }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::Undeclared(n) => write!(f, "undeclared coordinate or name: {n}"),
            ParseErrorKind::OrderOverflow { name, order, max } => {
                write!(f, "{name} has order {order}, above the declared order {max}")
            }
            ParseErrorKind::Semantic(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub names: Names,
    /// Declared maximal order of the expressions in the file.
    pub order: usize,
    pub space: JetSpace,
    /// `f_α`, indexed by fiber coordinate.
    pub equations: Vec<JetExpr>,
    pub fields: Vec<NamedField>,
    pub currents: Vec<(String, Vec<JetExpr>)>,
    pub sections: Vec<(String, Vec<JetExpr>)>,
    pub lagrangians: Vec<(String, JetExpr)>,
}

pub fn parse(text: &str) -> Result<ModelFile, ParseError> {
    parser::parse_model(text)
}

fn find<'a, T>(items: &'a [(String, T)], name: &str) -> Option<&'a T> {
    items.iter().find(|(n, _)| n == name).map(|(_, v)| v)
}

impl ModelFile {
    pub fn source_form(&self) -> SourceForm {
        SourceForm::new(self.space, self.equations.clone()).expect("equations were validated at parse time")
    }

    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn current(&self, name: &str) -> Option<&[JetExpr]> {
        find(&self.currents, name).map(Vec::as_slice)
    }

    pub fn section(&self, name: &str) -> Option<&[JetExpr]> {
        find(&self.sections, name).map(Vec::as_slice)
    }

    pub fn lagrangian(&self, name: &str) -> Option<LagrangeForm> {
        find(&self.lagrangians, name).map(|l| LagrangeForm::new(self.space, l.clone()).expect("validated"))
    }

    fn scope(&self) -> parser::Scope {
        parser::Scope { names: self.names.clone(), order: self.order, space: self.space }
    }

    /// Parses a single function in this model's coordinates.
    pub fn parse_expression(&self, text: &str) -> Result<JetExpr, ParseError> {
        let scope = self.scope();
        let mut p = parser::Parser::new(text, Some(&scope))?;
        let (e, _) = p.scalar()?;
        p.expect_eof()?;
        Ok(e)
    }

    /// Parses `expr` or `(expr, ..., expr)`.
    pub fn parse_tuple(&self, text: &str) -> Result<Vec<JetExpr>, ParseError> {
        let scope = self.scope();
        let mut p = parser::Parser::new(text, Some(&scope))?;
        let (e, _) = p.tuple()?;
        p.expect_eof()?;
        Ok(e)
    }

    pub fn display<'a>(&'a self, e: &'a JetExpr) -> crate::jet::ExprDisplay<'a> {
        e.display(&self.names)
    }
}

fn tuple(names: &Names, items: &[JetExpr]) -> String {
    let parts: Vec<String> = items.iter().map(|e| e.display(names).to_string()).collect();
    if parts.len() == 1 {
        parts.into_iter().next().expect("one item")
    } else {
        format!("({})", parts.join(", "))
    }
}

fn field_text(model: &ModelFile, f: &NamedField) -> String {
    let names = &model.names;
    let targets = names.base.iter().chain(&names.fiber);
    let mut parts = Vec::new();
    for (c, target) in f.field.coefficients().zip(targets) {
        if c.is_zero() {
            continue;
        }
        let coeff = if *c == JetExpr::one() {
            String::new()
        } else if c.num_terms() == 1 && !c.terms().next().is_some_and(|(_, k)| k.is_negative()) {
            format!("{}*", c.display(names))
        } else {
            format!("({})*", c.display(names))
        };
        parts.push(format!("{coeff}d/d{target}"));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Prints a model in the `.vk` syntax; `parse(&serialize(m)) == m`.
pub fn serialize(model: &ModelFile) -> String {
    let names = &model.names;
    let mut out = format!(
        "space {{ base: {}; fiber: {}; order: {} }}\n",
        names.base.join(", "),
        names.fiber.join(", "),
        model.order
    );
    for (a, e) in model.equations.iter().enumerate() {
        out.push_str(&format!("equation f_{} = {};\n", names.fiber[a], e.display(names)));
    }
    for f in &model.fields {
        out.push_str(&format!("vectorfield {} = {};\n", f.name, field_text(model, f)));
    }
    for (name, c) in &model.currents {
        out.push_str(&format!("current {name} = {};\n", tuple(names, c)));
    }
    for (name, c) in &model.sections {
        out.push_str(&format!("section {name} = {};\n", tuple(names, c)));
    }
    for (name, l) in &model.lagrangians {
        out.push_str(&format!("lagrangian {name} = {};\n", l.display(names)));
    }
    out
}

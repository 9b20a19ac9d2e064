use num_traits::{Signed, ToPrimitive, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::{ModelFile, ParseError, ParseErrorKind, Pos};
use crate::jet::{AtomKind, JetExpr, JetSpace, MultiIndex, Names, Var, DEFAULT_MAX_ORDER};
use crate::symmetry::{NamedField, ProjectableVectorField};

const KEYWORDS: &[&str] = &[
    "space", "base", "fiber", "order", "equation", "vectorfield", "current", "section", "lagrangian", "d", "sin",
    "cos", "exp",
];

/// Declared coordinates, needed to resolve identifiers.
#[derive(Debug, Clone)]
pub(crate) struct Scope {
    pub names: Names,
    pub order: usize,
    pub space: JetSpace,
}

impl Scope {
    fn n(&self) -> usize {
        self.names.base.len()
    }

    fn m(&self) -> usize {
        self.names.fiber.len()
    }

    /// Splits a suffix such as `xy` into a sorted list of base indices;
    /// `None` when no segmentation exists, an error when two segmentations
    /// give different indices.
    fn split_suffix(&self, suffix: &str) -> Result<Option<Vec<usize>>, String> {
        let len = suffix.len();
        let mut ways: Vec<Vec<Vec<usize>>> = vec![Vec::new(); len + 1];
        ways[0].push(Vec::new());
        for k in 0..len {
            let here = std::mem::take(&mut ways[k]);
            for (i, b) in self.names.base.iter().enumerate() {
                if suffix[k..].starts_with(b.as_str()) {
                    for w in &here {
                        let mut w = w.clone();
                        w.push(i);
                        ways[k + b.len()].push(w);
                    }
                }
            }
            ways[k] = here;
        }
        let mut found = ways.swap_remove(len);
        for w in found.iter_mut() {
            w.sort_unstable();
        }
        found.sort();
        found.dedup();
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.pop()),
            _ => Err(format!("derivative suffix '{suffix}' is ambiguous")),
        }
    }

    fn resolve(&self, name: &str) -> Result<Var, ParseErrorKind> {
        if let Some(i) = self.names.base.iter().position(|b| b == name) {
            return Ok(Var::base(i));
        }
        if let Some(a) = self.names.fiber.iter().position(|f| f == name) {
            return Ok(Var::fiber(a, MultiIndex::empty()));
        }
        if let Some((head, suffix)) = name.split_once('_') {
            if let Some(a) = self.names.fiber.iter().position(|f| f == head) {
                let idx = self.split_suffix(suffix).map_err(ParseErrorKind::Syntax)?;
                return match idx {
                    Some(idx) if idx.len() > self.order => Err(ParseErrorKind::OrderOverflow {
                        name: name.to_string(),
                        order: idx.len(),
                        max: self.order,
                    }),
                    Some(idx) => Ok(Var::fiber(a, MultiIndex::new(idx))),
                    None => Err(ParseErrorKind::Undeclared(name.to_string())),
                };
            }
        }
        Err(ParseErrorKind::Undeclared(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Value {
    Scalar(JetExpr),
    /// Components in the order `∂/∂x^1..∂/∂x^n, ∂/∂u^1..∂/∂u^m`.
    Field(Vec<JetExpr>),
}

pub(crate) struct Parser<'s> {
    toks: Vec<Token>,
    at: usize,
    scope: Option<&'s Scope>,
}

fn err<T>(pos: Pos, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError::new(pos, kind))
}

fn syntax<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    err(pos, ParseErrorKind::Syntax(msg.into()))
}

impl<'s> Parser<'s> {
    pub(crate) fn new(text: &str, scope: Option<&'s Scope>) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(text)?, at: 0, scope })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<Pos, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Sym(d) if d == c => Ok(t.pos),
            other => syntax(t.pos, format!("expected '{c}', found {}", describe(&other))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => syntax(t.pos, format!("expected a name, found {}", describe(&other))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        let (s, pos) = self.expect_ident()?;
        if s != kw {
            return syntax(pos, format!("expected '{kw}', found '{s}'"));
        }
        Ok(pos)
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Eof => Ok(()),
            other => syntax(t.pos, format!("unexpected {}", describe(&other))),
        }
    }

    fn scope(&self) -> &'s Scope {
        self.scope.expect("scope is set after the space block")
    }

    fn name_list(&mut self) -> Result<Vec<(String, Pos)>, ParseError> {
        let mut out = vec![self.expect_ident()?];
        while self.is_sym(',') {
            self.bump();
            out.push(self.expect_ident()?);
        }
        Ok(out)
    }

    /// `space { base: x, y; fiber: u; order: 2 }`
    fn space_block(&mut self) -> Result<Scope, ParseError> {
        self.expect_sym('{')?;
        self.expect_keyword("base")?;
        self.expect_sym(':')?;
        let base = self.name_list()?;
        self.expect_sym(';')?;
        self.expect_keyword("fiber")?;
        self.expect_sym(':')?;
        let fiber = self.name_list()?;
        self.expect_sym(';')?;
        self.expect_keyword("order")?;
        self.expect_sym(':')?;
        let t = self.bump();
        let order = match &t.tok {
            Tok::Number(r) if r.is_integer() && r.is_positive() => r.to_integer().to_usize().unwrap_or(usize::MAX),
            other => return syntax(t.pos, format!("expected a positive integer order, found {}", describe(other))),
        };
        if self.is_sym(';') {
            self.bump();
        }
        self.expect_sym('}')?;

        let mut seen: Vec<&str> = Vec::new();
        for (name, pos) in base.iter().chain(&fiber) {
            if name.contains('_') {
                return syntax(*pos, format!("coordinate name '{name}' may not contain '_'"));
            }
            if KEYWORDS.contains(&name.as_str()) {
                return syntax(*pos, format!("'{name}' is reserved"));
            }
            if seen.contains(&name.as_str()) {
                return syntax(*pos, format!("coordinate '{name}' declared twice"));
            }
            seen.push(name);
        }
        let max = DEFAULT_MAX_ORDER.max(2 * order);
        if order > 4 {
            return syntax(t.pos, format!("order {order} exceeds the supported maximum 4"));
        }
        let space = JetSpace::new(base.len(), fiber.len(), max)
            .map_err(|e| ParseError::new(t.pos, ParseErrorKind::Semantic(e.to_string())))?;
        Ok(Scope {
            names: Names::new(
                base.into_iter().map(|(s, _)| s).collect(),
                fiber.into_iter().map(|(s, _)| s).collect(),
            ),
            order,
            space,
        })
    }

    pub(crate) fn expr(&mut self) -> Result<(Value, Pos), ParseError> {
        let pos = self.peek().pos;
        let mut acc = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => '+',
                Tok::Sym('-') => '-',
                _ => break,
            };
            let op_pos = self.bump().pos;
            let rhs = self.term()?;
            acc = self.combine(acc, rhs, op, op_pos)?;
        }
        Ok((acc, pos))
    }

    fn combine(&self, a: Value, b: Value, op: char, pos: Pos) -> Result<Value, ParseError> {
        let sign = |e: JetExpr| if op == '-' { -e } else { e };
        match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(&x + &sign(y))),
            (Value::Field(x), Value::Field(y)) => {
                Ok(Value::Field(x.iter().zip(y).map(|(p, q)| p + &sign(q)).collect()))
            }
            (Value::Field(x), Value::Scalar(y)) if y.is_zero() => Ok(Value::Field(x)),
            (Value::Scalar(x), Value::Field(y)) if x.is_zero() => {
                Ok(Value::Field(y.into_iter().map(sign).collect()))
            }
            _ => syntax(pos, "cannot add a function and a vector field"),
        }
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => '*',
                Tok::Sym('/') => '/',
                _ => break,
            };
            let op_pos = self.bump().pos;
            let rhs = self.unary()?;
            acc = match (op, acc, rhs) {
                ('*', Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(&x * &y),
                ('*', Value::Scalar(s), Value::Field(f)) | ('*', Value::Field(f), Value::Scalar(s)) => {
                    Value::Field(f.iter().map(|c| &s * c).collect())
                }
                ('*', _, _) => return syntax(op_pos, "cannot multiply two vector fields"),
                (_, lhs, Value::Scalar(d)) => {
                    let c = match d.as_constant() {
                        Some(c) if !c.is_zero() => c,
                        Some(_) => return err(op_pos, ParseErrorKind::Semantic("division by zero".into())),
                        None => return syntax(op_pos, "division is only allowed by nonzero constants"),
                    };
                    let inv = c.recip();
                    match lhs {
                        Value::Scalar(x) => Value::Scalar(x.scale(&inv)),
                        Value::Field(f) => Value::Field(f.iter().map(|e| e.scale(&inv)).collect()),
                    }
                }
                (_, _, Value::Field(_)) => return syntax(op_pos, "cannot divide by a vector field"),
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Value, ParseError> {
        if self.is_sym('-') {
            self.bump();
            return Ok(match self.unary()? {
                Value::Scalar(x) => Value::Scalar(-x),
                Value::Field(f) => Value::Field(f.into_iter().map(|e| -e).collect()),
            });
        }
        if self.is_sym('+') {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Value, ParseError> {
        let base = self.primary()?;
        if !self.is_sym('^') {
            return Ok(base);
        }
        let caret = self.bump().pos;
        let t = self.bump();
        let k = match &t.tok {
            Tok::Number(r) if r.is_integer() && !r.is_negative() => match r.to_integer().to_u32() {
                Some(k) if k <= 64 => k,
                _ => return syntax(t.pos, "exponent too large"),
            },
            other => return syntax(t.pos, format!("expected a nonnegative integer exponent, found {}", describe(other))),
        };
        match base {
            Value::Scalar(x) => Ok(Value::Scalar(x.pow(k))),
            Value::Field(_) => syntax(caret, "cannot raise a vector field to a power"),
        }
    }

    fn primary(&mut self) -> Result<Value, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Number(r) => Ok(Value::Scalar(JetExpr::constant(r))),
            Tok::Sym('(') => {
                let (v, _) = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Tok::Ident(name) if name == "d" && self.is_sym('/') => {
                self.bump();
                let (target, pos) = self.expect_ident()?;
                let scope = self.scope();
                let coord = target.strip_prefix('d').unwrap_or("");
                let slot = if let Some(i) = scope.names.base.iter().position(|b| b == coord) {
                    i
                } else if let Some(a) = scope.names.fiber.iter().position(|f| f == coord) {
                    scope.n() + a
                } else {
                    return err(pos, ParseErrorKind::Undeclared(coord.to_string()));
                };
                let mut comps = vec![JetExpr::zero(); scope.n() + scope.m()];
                comps[slot] = JetExpr::one();
                Ok(Value::Field(comps))
            }
            Tok::Ident(name) => {
                if let Some(kind) = AtomKind::from_name(&name) {
                    if self.is_sym('(') {
                        let open = self.bump().pos;
                        let (arg, _) = self.expr()?;
                        self.expect_sym(')')?;
                        let arg = match arg {
                            Value::Scalar(e) => e,
                            Value::Field(_) => return syntax(open, format!("{name} of a vector field")),
                        };
                        return JetExpr::atom(kind, arg)
                            .map(Value::Scalar)
                            .map_err(|e| ParseError::new(open, ParseErrorKind::Semantic(e.to_string())));
                    }
                }
                let scope = self.scope();
                let v = scope.resolve(&name).map_err(|k| ParseError::new(t.pos, k))?;
                Ok(Value::Scalar(JetExpr::var(v)))
            }
            other => syntax(t.pos, format!("unexpected {}", describe(&other))),
        }
    }

    /// `expr` or `(expr, expr, ...)`.
    pub(crate) fn tuple(&mut self) -> Result<(Vec<JetExpr>, Pos), ParseError> {
        let pos = self.peek().pos;
        if self.is_sym('(') && self.paren_has_comma() {
            self.bump();
            let mut out = vec![self.scalar()?.0];
            while self.is_sym(',') {
                self.bump();
                out.push(self.scalar()?.0);
            }
            self.expect_sym(')')?;
            return Ok((out, pos));
        }
        Ok((vec![self.scalar()?.0], pos))
    }

    fn paren_has_comma(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.toks[self.at..] {
            match t.tok {
                Tok::Sym('(') => depth += 1,
                Tok::Sym(')') => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                Tok::Sym(',') if depth == 1 => return true,
                Tok::Eof => return false,
                _ => {}
            }
        }
        false
    }

    pub(crate) fn scalar(&mut self) -> Result<(JetExpr, Pos), ParseError> {
        match self.expr()? {
            (Value::Scalar(e), pos) => Ok((e, pos)),
            (Value::Field(_), pos) => syntax(pos, "expected a function, found a vector field"),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Number(r) => format!("number {r}"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::Eof => "end of input".into(),
    }
}

fn check_unique(names: &[(String, Pos)]) -> Result<(), ParseError> {
    for (k, (name, pos)) in names.iter().enumerate() {
        if names[..k].iter().any(|(other, _)| other == name) {
            return err(*pos, ParseErrorKind::Semantic(format!("'{name}' defined twice")));
        }
    }
    Ok(())
}

pub(crate) fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    let mut head = Parser::new(text, None)?;
    let first = head.peek().clone();
    match &first.tok {
        Tok::Ident(s) if s == "space" => {
            head.bump();
        }
        other => return syntax(first.pos, format!("a model starts with a space block, found {}", describe(other))),
    }
    let scope = head.space_block()?;
    let mut p = Parser { toks: head.toks, at: head.at, scope: Some(&scope) };
    let (n, m) = (scope.n(), scope.m());

    let mut equations: Vec<Option<JetExpr>> = vec![None; m];
    let mut fields = Vec::new();
    let mut currents = Vec::new();
    let mut sections = Vec::new();
    let mut lagrangians = Vec::new();
    let mut defined: Vec<(String, Pos)> = Vec::new();

    while !p.at_eof() {
        let (kw, kw_pos) = p.expect_ident()?;
        let (name, name_pos) = p.expect_ident()?;
        p.expect_sym('=')?;
        match kw.as_str() {
            "equation" => {
                let alpha = name
                    .strip_prefix("f_")
                    .and_then(|f| scope.names.fiber.iter().position(|g| g == f))
                    .ok_or_else(|| {
                        ParseError::new(
                            name_pos,
                            ParseErrorKind::Undeclared(format!("{name} (equations are named f_<fiber>)")),
                        )
                    })?;
                let (e, _) = p.scalar()?;
                if equations[alpha].replace(e).is_some() {
                    return err(name_pos, ParseErrorKind::Semantic(format!("{name} defined twice")));
                }
            }
            "vectorfield" => {
                let (v, pos) = p.expr()?;
                let comps = match v {
                    Value::Field(c) => c,
                    Value::Scalar(e) if e.is_zero() => vec![JetExpr::zero(); n + m],
                    Value::Scalar(_) => return syntax(pos, "expected a vector field such as sin(x)*d/du"),
                };
                let fiber = comps[n..].to_vec();
                let base = comps[..n].to_vec();
                let field = ProjectableVectorField::new(scope.space, base, fiber)
                    .map_err(|e| ParseError::new(pos, ParseErrorKind::Semantic(e.to_string())))?;
                defined.push((name.clone(), name_pos));
                fields.push(NamedField { name, field });
            }
            "current" => {
                let (c, pos) = p.tuple()?;
                if c.len() != n {
                    return err(pos, ParseErrorKind::Semantic(format!("a current needs {n} components, got {}", c.len())));
                }
                defined.push((name.clone(), name_pos));
                currents.push((name, c));
            }
            "section" => {
                let (c, pos) = p.tuple()?;
                if c.len() != m {
                    return err(pos, ParseErrorKind::Semantic(format!("a section needs {m} components, got {}", c.len())));
                }
                if c.iter().any(|e| e.depends_on_fiber() || e.has_atoms()) {
                    return err(pos, ParseErrorKind::Semantic("section components must be polynomials in the base coordinates".into()));
                }
                defined.push((name.clone(), name_pos));
                sections.push((name, c));
            }
            "lagrangian" => {
                let (e, _) = p.scalar()?;
                defined.push((name.clone(), name_pos));
                lagrangians.push((name, e));
            }
            other => return syntax(kw_pos, format!("unknown block '{other}'")),
        }
        p.expect_sym(';')?;
    }
    check_unique(&defined)?;

    let end = p.peek().pos;
    let equations = equations
        .into_iter()
        .enumerate()
        .map(|(a, e)| {
            e.ok_or_else(|| {
                ParseError::new(
                    end,
                    ParseErrorKind::Semantic(format!("missing equation f_{}", scope.names.fiber[a])),
                )
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ModelFile {
        names: scope.names.clone(),
        order: scope.order,
        space: scope.space,
        equations,
        fields,
        currents,
        sections,
        lagrangians,
    })
}

//! Scenario documents: a JSON format for assertion systems.
//!
//! A document names the atomic events, defines quantities by expression
//! strings, lists assertions, and names the targets to bound. Documents are
//! the CLI's input format and the export format for the built-in scenarios,
//! so an analyst can edit a study's judgments without recompiling.

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::assertions::{Assertion, OrderingSide};
use crate::events::{enumerate_realm, EventError, EventExpr, Quantity, Realm, Workspace};
use crate::numeric::{integer, parse_rational, to_literal, Rational};
use crate::solver::Target;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("expression `{expr}`: {message} at offset {offset}")]
    Expr {
        expr: String,
        message: String,
        offset: usize,
    },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is not an atomic event")]
    NotAnAtom(String),
    #[error("ordering side needs exactly one of `value` or `expr`")]
    AmbiguousSide,
    #[error("column order: {0}")]
    ColumnOrder(String),
    #[error(transparent)]
    Event(#[from] EventError),
}

/// Exact number literal. Serializes as a JSON number when the value has a
/// terminating decimal form, as a `"n/d"` string otherwise; accepts either
/// on input. JSON numbers are read digit-for-digit, never through a float.
#[derive(Debug, Clone, PartialEq)]
pub struct Num(pub Rational);

impl From<Rational> for Num {
    fn from(r: Rational) -> Self {
        Num(r)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let lit = to_literal(&self.0);
        match serde_json::Number::from_str(&lit) {
            Ok(n) => n.serialize(s),
            Err(_) => s.serialize_str(&lit),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl<'de> Visitor<'de> for NumVisitor {
            type Value = Num;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or a rational string like \"1/3\"")
            }

            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<Num, E> {
                parse_rational(s).map(Num).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(crate::numeric::integer(v)))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Num, E> {
                parse_rational(&v.to_string()).map(Num).map_err(E::custom)
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Num, E> {
                // Only reachable through float-typed sources; JSON text
                // lands in visit_map with the raw digits instead.
                parse_rational(&format!("{v}")).map(Num).map_err(E::custom)
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Num, A::Error> {
                let n = serde_json::Number::deserialize(
                    serde::de::value::MapAccessDeserializer::new(map),
                )?;
                parse_rational(&n.to_string())
                    .map(Num)
                    .map_err(serde::de::Error::custom)
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityDoc {
    pub name: String,
    pub expr: String,
}

/// One side of an ordering: a constant `value`, or `expr` with an optional
/// `given`. Exactly one of the two forms must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OrderingSideDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AssertionDoc {
    Prevision {
        expr: String,
        value: Num,
    },
    PrevisionInterval {
        expr: String,
        lo: Num,
        hi: Num,
    },
    Conditional {
        expr: String,
        given: String,
        value: Num,
    },
    ConditionalInterval {
        expr: String,
        given: String,
        lo: Num,
        hi: Num,
    },
    Exchangeable {
        atoms: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        given: Option<String>,
    },
    Ordering {
        lesser: OrderingSideDoc,
        greater: OrderingSideDoc,
    },
}

/// A conditional prevision reference; `given` defaults to the sure event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRef {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TargetSpec {
    /// Prevision of a quantity.
    Linear { expr: String },
    /// Conditional prevision.
    Conditional { expr: String, given: String },
    /// `P(left) - P(right)`, optimized jointly.
    Difference {
        left: ConditionalRef,
        right: ConditionalRef,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDoc {
    pub name: String,
    #[serde(flatten)]
    pub spec: TargetSpec,
}

/// The document itself. `column_order` optionally lists canonical
/// configuration indices (atom values read MSB-first in declaration order)
/// in the desired presentation order; it affects only how cells are
/// labelled and ordered in output, never the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub atoms: Vec<String>,
    #[serde(default)]
    pub quantities: Vec<QuantityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_order: Option<Vec<usize>>,
    #[serde(default)]
    pub assertions: Vec<AssertionDoc>,
    #[serde(default)]
    pub targets: Vec<TargetDoc>,
}

/// A document resolved against a workspace: the realm of its quantities,
/// the assertion list, and the named targets.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub realm: Realm,
    pub assertions: Vec<Assertion>,
    pub targets: Vec<(String, Target)>,
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }

    /// Resolves names, parses every expression, and enumerates the realm.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        let ws = Workspace::new(self.atoms.iter().map(|s| s.as_str()))?;
        let mut env = Env::new(&ws, &self.atoms)?;
        let mut quantities = Vec::new();
        for q in &self.quantities {
            let expr = parse_expr(&q.expr, &env)?;
            let quantity = if expr.is_event_structural() {
                Quantity::event(&q.name, expr.clone())
            } else {
                Quantity::new(&q.name, expr.clone())
            };
            env.define(&q.name, expr)?;
            quantities.push(quantity);
        }
        let order = match &self.column_order {
            Some(perm) => {
                if perm.len() != ws.n_configurations() {
                    return Err(ScenarioError::ColumnOrder(format!(
                        "expected {} indices, got {}",
                        ws.n_configurations(),
                        perm.len()
                    )));
                }
                Some(perm.as_slice())
            }
            None => None,
        };
        let realm = enumerate_realm(&ws, quantities, order)?;

        let mut assertions = Vec::new();
        for a in &self.assertions {
            assertions.push(build_assertion(a, &env, &ws)?);
        }
        let mut targets = Vec::new();
        for t in &self.targets {
            targets.push((t.name.clone(), build_target(&t.spec, &env, &realm)?));
        }
        Ok(BuiltScenario {
            realm,
            assertions,
            targets,
        })
    }
}

fn build_assertion(
    doc: &AssertionDoc,
    env: &Env,
    ws: &Workspace,
) -> Result<Assertion, ScenarioError> {
    Ok(match doc {
        AssertionDoc::Prevision { expr, value } => Assertion::Prevision {
            expr: parse_expr(expr, env)?,
            value: value.0.clone(),
        },
        AssertionDoc::PrevisionInterval { expr, lo, hi } => Assertion::PrevisionInterval {
            expr: parse_expr(expr, env)?,
            lo: lo.0.clone(),
            hi: hi.0.clone(),
        },
        AssertionDoc::Conditional { expr, given, value } => Assertion::Conditional {
            expr: parse_expr(expr, env)?,
            given: parse_expr(given, env)?,
            value: value.0.clone(),
        },
        AssertionDoc::ConditionalInterval {
            expr,
            given,
            lo,
            hi,
        } => Assertion::ConditionalInterval {
            expr: parse_expr(expr, env)?,
            given: parse_expr(given, env)?,
            lo: lo.0.clone(),
            hi: hi.0.clone(),
        },
        AssertionDoc::Exchangeable { atoms, given } => {
            let mut ids = Vec::new();
            for name in atoms {
                let id = ws
                    .atom(name)
                    .ok_or_else(|| ScenarioError::NotAnAtom(name.clone()))?;
                ids.push(id);
            }
            Assertion::Exchangeable {
                atoms: ids,
                given: given.as_deref().map(|g| parse_expr(g, env)).transpose()?,
            }
        }
        AssertionDoc::Ordering { lesser, greater } => Assertion::Ordering {
            lesser: build_side(lesser, env)?,
            greater: build_side(greater, env)?,
        },
    })
}

fn build_side(doc: &OrderingSideDoc, env: &Env) -> Result<OrderingSide, ScenarioError> {
    match (&doc.value, &doc.expr) {
        (Some(v), None) => {
            if doc.given.is_some() {
                return Err(ScenarioError::AmbiguousSide);
            }
            Ok(OrderingSide::Constant(v.0.clone()))
        }
        (None, Some(e)) => Ok(OrderingSide::Ratio {
            expr: parse_expr(e, env)?,
            given: doc.given.as_deref().map(|g| parse_expr(g, env)).transpose()?,
        }),
        _ => Err(ScenarioError::AmbiguousSide),
    }
}

fn build_target(spec: &TargetSpec, env: &Env, realm: &Realm) -> Result<Target, ScenarioError> {
    Ok(match spec {
        TargetSpec::Linear { expr } => Target::prevision(realm, &parse_expr(expr, env)?)?,
        TargetSpec::Conditional { expr, given } => {
            Target::conditional(realm, &parse_expr(expr, env)?, &parse_expr(given, env)?)?
        }
        TargetSpec::Difference { left, right } => {
            let sure = EventExpr::constant(integer(1));
            let g1 = left
                .given
                .as_deref()
                .map(|g| parse_expr(g, env))
                .transpose()?
                .unwrap_or_else(|| sure.clone());
            let g2 = right
                .given
                .as_deref()
                .map(|g| parse_expr(g, env))
                .transpose()?
                .unwrap_or(sure);
            Target::conditional_difference(
                realm,
                &parse_expr(&left.expr, env)?,
                &g1,
                &parse_expr(&right.expr, env)?,
                &g2,
            )?
        }
    })
}

/// Name environment: atoms first, then quantities in declaration order.
/// Quantity references are inlined at parse time, so a document expression
/// compiles to the same tree whether it names a quantity or spells it out.
struct Env {
    names: Vec<(String, EventExpr)>,
}

impl Env {
    fn new(ws: &Workspace, atoms: &[String]) -> Result<Self, ScenarioError> {
        let mut env = Env { names: Vec::new() };
        for name in atoms {
            let id = ws
                .atom(name)
                .ok_or_else(|| ScenarioError::UnknownName(name.clone()))?;
            env.define(name, EventExpr::atom(id))?;
        }
        Ok(env)
    }

    fn define(&mut self, name: &str, expr: EventExpr) -> Result<(), ScenarioError> {
        match self.lookup(name) {
            // Re-listing an atom as a quantity is idiomatic; only a
            // conflicting redefinition is an error.
            Some(existing) if *existing == expr => Ok(()),
            Some(_) => Err(ScenarioError::DuplicateName(name.to_string())),
            None => {
                self.names.push((name.to_string(), expr));
                Ok(())
            }
        }
    }

    fn lookup(&self, name: &str) -> Option<&EventExpr> {
        self.names
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
    }
}

// ---------------------------------------------------------------------------
// Expression strings.
//
// Grammar, loosest binding first:
//   expr  := ['-'] term (('+' | '-') term)*
//   term  := junct ('or' junct)*
//   junct := factor ('and' factor)*
//   factor:= scaled ('*' scaled)*
//   scaled:= 'not' scaled | primary
//   primary := '(' expr ')' | '[' expr '>=' number ']'
//            | 'sum' '(' expr (',' expr)* ')' | number | name
//
// 'and'/'*' both mean the product; 'or' is inclusive and requires events.
// Number literals are decimals or fractions ('0.82', '41/50').

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(Rational),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Ge,
    Comma,
    Not,
    And,
    Or,
    Sum,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ScenarioError> {
    let err = |offset: usize, message: &str| ScenarioError::Expr {
        expr: src.to_string(),
        message: message.to_string(),
        offset,
    };
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '>' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(err(i, "expected `>=`"));
                }
                i += 2;
                Tok::Ge
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // A fraction only when the slash is followed by digits;
                // keeps the door open for other uses of '/'.
                if bytes.get(i) == Some(&b'/')
                    && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())
                {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit = &src[start..i];
                let value =
                    parse_rational(lit).map_err(|_| err(start, "bad number literal"))?;
                Tok::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                match &src[start..i] {
                    "not" => Tok::Not,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "sum" => Tok::Sum,
                    name => Tok::Ident(name.to_string()),
                }
            }
            _ => return Err(err(i, "unexpected character")),
        };
        toks.push((tok, start));
    }
    Ok(toks)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    env: &'a Env,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ScenarioError {
        let offset = self
            .toks
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.src.len());
        ScenarioError::Expr {
            expr: self.src.to_string(),
            message: message.to_string(),
            offset,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ScenarioError> {
        if self.eat(&want) {
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn expr(&mut self) -> Result<EventExpr, ScenarioError> {
        let negate_first = self.eat(&Tok::Minus);
        let first = self.term()?;
        let mut terms = vec![if negate_first { negated(first) } else { first }];
        loop {
            if self.eat(&Tok::Plus) {
                terms.push(self.term()?);
            } else if self.eat(&Tok::Minus) {
                let t = self.term()?;
                terms.push(negated(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            EventExpr::sum(terms)
        })
    }

    fn term(&mut self) -> Result<EventExpr, ScenarioError> {
        let mut operands = vec![self.junct()?];
        while self.eat(&Tok::Or) {
            operands.push(self.junct()?);
        }
        Ok(if operands.len() == 1 {
            operands.pop().unwrap()
        } else {
            // n-ary inclusive or: complement of "none of them".
            EventExpr::not(EventExpr::product(
                operands.into_iter().map(EventExpr::not).collect(),
            ))
        })
    }

    fn junct(&mut self) -> Result<EventExpr, ScenarioError> {
        let mut factors = vec![self.factor()?];
        while self.eat(&Tok::And) {
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            EventExpr::product(factors)
        })
    }

    fn factor(&mut self) -> Result<EventExpr, ScenarioError> {
        let mut factors = vec![self.scaled()?];
        while self.eat(&Tok::Star) {
            factors.push(self.scaled()?);
        }
        if factors.len() == 1 {
            return Ok(factors.pop().unwrap());
        }
        // `c * x` is a scaling, anything else a plain product.
        if factors.len() == 2 {
            if let EventExpr::Constant(c) = &factors[0] {
                let c = c.clone();
                return Ok(EventExpr::scaled(c, factors.pop().unwrap()));
            }
        }
        Ok(EventExpr::product(factors))
    }

    fn scaled(&mut self) -> Result<EventExpr, ScenarioError> {
        if self.eat(&Tok::Not) {
            return Ok(EventExpr::not(self.scaled()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<EventExpr, ScenarioError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        match tok {
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(inner)
            }
            Tok::LBracket => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::Ge, "expected `>=` in threshold")?;
                let Some(Tok::Number(bound)) = self.peek().cloned() else {
                    return Err(self.error("expected a number bound"));
                };
                self.pos += 1;
                self.expect(Tok::RBracket, "expected `]`")?;
                Ok(EventExpr::threshold(inner, bound))
            }
            Tok::Sum => {
                self.pos += 1;
                self.expect(Tok::LParen, "expected `(` after sum")?;
                let mut terms = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    terms.push(self.expr()?);
                }
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(EventExpr::sum(terms))
            }
            Tok::Number(value) => {
                self.pos += 1;
                Ok(EventExpr::constant(value))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match self.env.lookup(&name) {
                    Some(expr) => Ok(expr.clone()),
                    None => Err(ScenarioError::UnknownName(name)),
                }
            }
            _ => Err(self.error("expected an expression")),
        }
    }
}

/// Arithmetic negation, folding into an existing scaling or constant so
/// `- 0.25 * C` and `0.25 * C` parse to trees of the same shape.
fn negated(expr: EventExpr) -> EventExpr {
    match expr {
        EventExpr::Scaled(c, inner) => EventExpr::Scaled(-c, inner),
        EventExpr::Constant(c) => EventExpr::Constant(-c),
        other => EventExpr::scaled(integer(-1), other),
    }
}

fn parse_expr(src: &str, env: &Env) -> Result<EventExpr, ScenarioError> {
    let toks = lex(src)?;
    let mut parser = Parser {
        src,
        toks,
        pos: 0,
        env,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Rendering. The inverse of the parser: `parse_expr(render(e)) == e` for any
// tree the library builds, with named subtrees folded back to their names.

/// Binding strength of a rendered node, for minimal parenthesization.
fn strength(expr: &EventExpr) -> u8 {
    match expr {
        EventExpr::Sum(_) => 0,
        _ if or_operands(expr).is_some() => 1,
        EventExpr::Product(_) => 2,
        EventExpr::Scaled(..) => 3,
        EventExpr::Not(_) => 4,
        _ => 5,
    }
}

/// Detects the n-ary inclusive-or shape the parser produces.
fn or_operands(expr: &EventExpr) -> Option<Vec<&EventExpr>> {
    let EventExpr::Not(inner) = expr else {
        return None;
    };
    let EventExpr::Product(factors) = inner.as_ref() else {
        return None;
    };
    if factors.len() < 2 {
        return None;
    }
    factors
        .iter()
        .map(|f| match f {
            EventExpr::Not(x) => Some(x.as_ref()),
            _ => None,
        })
        .collect()
}

/// Renders an expression, naming any subtree that matches an environment
/// entry. Inverse of `parse_expr` over the same environment.
pub struct Renderer {
    names: Vec<(String, EventExpr)>,
}

impl Renderer {
    pub fn new() -> Self {
        Renderer { names: Vec::new() }
    }

    pub fn with_name(mut self, name: impl Into<String>, expr: EventExpr) -> Self {
        self.names.push((name.into(), expr));
        self
    }

    pub fn render(&self, expr: &EventExpr) -> String {
        let mut out = String::new();
        self.walk(expr, &mut out);
        out
    }

    fn is_named(&self, expr: &EventExpr) -> bool {
        self.names.iter().any(|(_, e)| e == expr)
    }

    fn walk(&self, expr: &EventExpr, out: &mut String) {
        if let Some((name, _)) = self.names.iter().find(|(_, e)| e == expr) {
            out.push_str(name);
            return;
        }
        match expr {
            EventExpr::Atom(id) => {
                // Unnamed atom: positional fallback, kept parseable.
                out.push_str(&format!("_a{}", id.index()));
            }
            EventExpr::Constant(c) => out.push_str(&to_literal(c)),
            EventExpr::Not(_) => {
                if let Some(ops) = or_operands(expr) {
                    for (k, op) in ops.iter().enumerate() {
                        if k > 0 {
                            out.push_str(" or ");
                        }
                        self.child(op, 1, out);
                    }
                } else {
                    let EventExpr::Not(inner) = expr else {
                        unreachable!()
                    };
                    out.push_str("not ");
                    self.child(inner, 4, out);
                }
            }
            EventExpr::Product(factors) => {
                // `and` reads as conjunction; fall back to `*` when a
                // factor is numeric rather than event-shaped.
                let symbolic = factors.iter().all(|f| f.is_event_structural())
                    || factors.iter().all(|f| !matches!(f, EventExpr::Constant(_)));
                let op = if symbolic { " and " } else { " * " };
                for (k, f) in factors.iter().enumerate() {
                    if k > 0 {
                        out.push_str(op);
                    }
                    self.child(f, 2, out);
                }
            }
            EventExpr::Sum(terms) => {
                for (k, t) in terms.iter().enumerate() {
                    // `x - y` rather than `x + -1 * y`.
                    if let EventExpr::Scaled(c, inner) = t {
                        if !self.is_named(t) && *c == integer(-1) {
                            out.push_str(if k > 0 { " - " } else { "- " });
                            self.child(inner, 3, out);
                            continue;
                        }
                    }
                    if k > 0 {
                        out.push_str(" + ");
                    }
                    self.child(t, 0, out);
                }
            }
            EventExpr::Scaled(c, inner) => {
                if c < &Rational::from_integer(0.into()) {
                    out.push('(');
                    out.push_str(&to_literal(c));
                    out.push(')');
                } else {
                    out.push_str(&to_literal(c));
                }
                out.push_str(" * ");
                self.child(inner, 3, out);
            }
            EventExpr::Threshold { expr, bound } => {
                out.push('[');
                self.walk(expr, out);
                out.push_str(" >= ");
                out.push_str(&to_literal(bound));
                out.push(']');
            }
        }
    }

    /// Parenthesizes children that bind no tighter than their parent, so
    /// nesting survives a round trip instead of being flattened.
    fn child(&self, expr: &EventExpr, parent: u8, out: &mut String) {
        let named = self.names.iter().any(|(_, e)| e == expr);
        if !named && strength(expr) <= parent {
            out.push('(');
            self.walk(expr, out);
            out.push(')');
        } else {
            self.walk(expr, out);
        }
    }
}

impl Default for Renderer {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Export: turn an in-memory scenario back into a document.

/// Target descriptor carrying defining expressions, for export. The solver's
/// own target type holds compiled rows and cannot be rendered back.
#[derive(Debug, Clone)]
pub enum ExportTarget {
    Linear(EventExpr),
    Conditional(EventExpr, EventExpr),
    Difference {
        left: (EventExpr, Option<EventExpr>),
        right: (EventExpr, Option<EventExpr>),
    },
}

/// Document identifier: strips characters the expression grammar reserves.
fn sanitize_name(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        match c {
            '*' => out.push_str("star"),
            c if c.is_ascii_alphanumeric() || c == '_' => out.push(c),
            _ => out.push('_'),
        }
    }
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

/// Renders a realm, its assertions, and named targets as a document.
/// Rebuilding the document yields the same realm shape and assertion list,
/// so the compiled constraints match the originals exactly.
pub fn document_from_parts(
    realm: &Realm,
    assertions: &[Assertion],
    targets: &[(String, ExportTarget)],
    description: Option<String>,
) -> ScenarioDocument {
    let ws = realm.workspace();
    let atoms: Vec<String> = ws.atom_names().to_vec();
    let mut renderer = Renderer::new();
    for name in &atoms {
        let id = ws.atom(name).expect("listed atom is declared");
        renderer = renderer.with_name(sanitize_name(name), EventExpr::atom(id));
    }

    let mut quantities = Vec::new();
    for q in realm.quantities() {
        let doc_name = sanitize_name(&q.name);
        // Atoms re-listed as quantities keep their name row without a
        // separate definition entry being needed, but we emit one anyway
        // so the document lists every realm row explicitly.
        quantities.push(QuantityDoc {
            name: doc_name.clone(),
            expr: renderer.render(&q.expr),
        });
        if !renderer.is_named(&q.expr) {
            renderer = renderer.with_name(doc_name, q.expr.clone());
        }
    }

    let column_order: Vec<usize> = (0..realm.n_columns())
        .map(|j| realm.column_config(j).index())
        .collect();
    let is_identity = column_order.iter().enumerate().all(|(k, &v)| k == v);

    let render_side = |side: &OrderingSide| match side {
        OrderingSide::Constant(v) => OrderingSideDoc {
            value: Some(Num(v.clone())),
            expr: None,
            given: None,
        },
        OrderingSide::Ratio { expr, given } => OrderingSideDoc {
            value: None,
            expr: Some(renderer.render(expr)),
            given: given.as_ref().map(|g| renderer.render(g)),
        },
    };

    let assertion_docs: Vec<AssertionDoc> = assertions
        .iter()
        .map(|a| match a {
            Assertion::Prevision { expr, value } => AssertionDoc::Prevision {
                expr: renderer.render(expr),
                value: Num(value.clone()),
            },
            Assertion::PrevisionInterval { expr, lo, hi } => AssertionDoc::PrevisionInterval {
                expr: renderer.render(expr),
                lo: Num(lo.clone()),
                hi: Num(hi.clone()),
            },
            Assertion::Conditional { expr, given, value } => AssertionDoc::Conditional {
                expr: renderer.render(expr),
                given: renderer.render(given),
                value: Num(value.clone()),
            },
            Assertion::ConditionalInterval {
                expr,
                given,
                lo,
                hi,
            } => AssertionDoc::ConditionalInterval {
                expr: renderer.render(expr),
                given: renderer.render(given),
                lo: Num(lo.clone()),
                hi: Num(hi.clone()),
            },
            Assertion::Exchangeable { atoms, given } => AssertionDoc::Exchangeable {
                atoms: atoms
                    .iter()
                    .map(|id| sanitize_name(ws.atom_name(*id)))
                    .collect(),
                given: given.as_ref().map(|g| renderer.render(g)),
            },
            Assertion::Ordering { lesser, greater } => AssertionDoc::Ordering {
                lesser: render_side(lesser),
                greater: render_side(greater),
            },
        })
        .collect();

    let target_docs: Vec<TargetDoc> = targets
        .iter()
        .map(|(name, t)| TargetDoc {
            name: name.clone(),
            spec: match t {
                ExportTarget::Linear(e) => TargetSpec::Linear {
                    expr: renderer.render(e),
                },
                ExportTarget::Conditional(e, g) => TargetSpec::Conditional {
                    expr: renderer.render(e),
                    given: renderer.render(g),
                },
                ExportTarget::Difference { left, right } => TargetSpec::Difference {
                    left: ConditionalRef {
                        expr: renderer.render(&left.0),
                        given: left.1.as_ref().map(|g| renderer.render(g)),
                    },
                    right: ConditionalRef {
                        expr: renderer.render(&right.0),
                        given: right.1.as_ref().map(|g| renderer.render(g)),
                    },
                },
            },
        })
        .collect();

    ScenarioDocument {
        description,
        atoms: atoms.iter().map(|a| sanitize_name(a)).collect(),
        quantities,
        column_order: if is_identity { None } else { Some(column_order) },
        assertions: assertion_docs,
        targets: target_docs,
    }
}

/// Built-in documents: the two agreement-event examples and the six study
/// columns, each exportable and re-loadable.
pub mod builtin {
    use super::*;
    use crate::asbestos::{
        build_realm, scenario, ScenarioColumn, TABLE1_ROWS, TABLE2_ROWS,
    };

    pub const NAMES: [&str; 8] = [
        "agreement",
        "agreement-exchangeable",
        "tm82",
        "condex-fic82",
        "tm90",
        "condex-fic90",
        "condex-bnd",
        "condex-bplus",
    ];

    fn agreement_doc(exchangeable: bool) -> ScenarioDocument {
        let assertions = if exchangeable {
            vec![
                AssertionDoc::Exchangeable {
                    atoms: vec!["E1".into(), "E2".into()],
                    given: None,
                },
                AssertionDoc::Prevision {
                    expr: "E1".into(),
                    value: Num(crate::numeric::ratio(7, 10)),
                },
            ]
        } else {
            vec![
                AssertionDoc::Prevision {
                    expr: "E1".into(),
                    value: Num(crate::numeric::ratio(7, 10)),
                },
                AssertionDoc::Prevision {
                    expr: "E2".into(),
                    value: Num(crate::numeric::ratio(1, 5)),
                },
            ]
        };
        let description = if exchangeable {
            "Two exchangeable opinions with P(E1) = .7; E3 is the event that they agree."
        } else {
            "Two opinions with P(E1) = .7, P(E2) = .2; E3 is the event that they agree."
        };
        ScenarioDocument {
            description: Some(description.to_string()),
            atoms: vec!["E1".into(), "E2".into()],
            quantities: vec![
                QuantityDoc {
                    name: "E1".into(),
                    expr: "E1".into(),
                },
                QuantityDoc {
                    name: "E2".into(),
                    expr: "E2".into(),
                },
                QuantityDoc {
                    name: "E3".into(),
                    expr: "(E1 and E2) or (not E1 and not E2)".into(),
                },
            ],
            column_order: None,
            assertions,
            targets: vec![TargetDoc {
                name: "P(E3)".into(),
                spec: TargetSpec::Linear { expr: "E3".into() },
            }],
        }
    }

    fn study_doc(column: ScenarioColumn) -> ScenarioDocument {
        let realm = build_realm();
        let sc = scenario(&realm, column);
        let ws = realm.workspace();
        let atom = |n: &str| EventExpr::atom(ws.atom(n).expect("study atom"));
        let quantity = |n: &str| {
            realm.quantities()[realm.quantity_index(n).expect("study quantity")]
                .expr
                .clone()
        };
        let f = atom("F");
        let nf = EventExpr::not(f.clone());
        let d1 = atom("D1");
        let nd1 = EventExpr::not(d1.clone());
        let dstar = quantity("D*");
        let ndstar = EventExpr::not(dstar.clone());

        let mut targets: Vec<(String, ExportTarget)> = vec![
            ExportTarget::Conditional(d1.clone(), f.clone()),
            ExportTarget::Conditional(nd1.clone(), nf.clone()),
            ExportTarget::Conditional(f.clone(), d1.clone()),
            ExportTarget::Conditional(nf.clone(), nd1.clone()),
            ExportTarget::Conditional(dstar.clone(), f.clone()),
            ExportTarget::Conditional(ndstar.clone(), nf.clone()),
            ExportTarget::Conditional(f.clone(), dstar.clone()),
            ExportTarget::Conditional(nf.clone(), ndstar.clone()),
            ExportTarget::Linear(f.clone()),
        ]
        .into_iter()
        .zip(TABLE1_ROWS)
        .map(|(t, name)| (name.to_string(), t))
        .collect();
        targets.extend(
            vec![
                ExportTarget::Difference {
                    left: (dstar.clone(), Some(f.clone())),
                    right: (d1.clone(), Some(f.clone())),
                },
                ExportTarget::Difference {
                    left: (ndstar.clone(), Some(nf.clone())),
                    right: (nd1.clone(), Some(nf.clone())),
                },
                ExportTarget::Difference {
                    left: (f.clone(), Some(dstar.clone())),
                    right: (f.clone(), Some(d1.clone())),
                },
                ExportTarget::Difference {
                    left: (nf.clone(), Some(ndstar)),
                    right: (nf, Some(nd1)),
                },
            ]
            .into_iter()
            .zip(TABLE2_ROWS)
            .map(|(t, name)| (name.to_string(), t)),
        );

        document_from_parts(
            &realm,
            &sc.assertions,
            &targets,
            Some(format!(
                "Asbestosis screening study, {} column: three readers, a median \
                 diagnosis, and the judgments behind the published bounds.",
                column.label()
            )),
        )
    }

    /// The named built-in document, if the name is known.
    pub fn document(name: &str) -> Option<ScenarioDocument> {
        let column = |c| Some(study_doc(c));
        match name {
            "agreement" => Some(agreement_doc(false)),
            "agreement-exchangeable" => Some(agreement_doc(true)),
            "tm82" => column(ScenarioColumn::Tm82),
            "condex-fic82" => column(ScenarioColumn::CondExFic82),
            "tm90" => column(ScenarioColumn::Tm90),
            "condex-fic90" => column(ScenarioColumn::CondExFic90),
            "condex-bnd" => column(ScenarioColumn::CondExBnd),
            "condex-bplus" => column(ScenarioColumn::CondExBPlus),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integer, ratio};

    fn env2() -> (Workspace, Env) {
        let ws = Workspace::new(["A", "B", "C"]).unwrap();
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let env = Env::new(&ws, &names).unwrap();
        (ws, env)
    }

    #[test]
    fn parses_boolean_operators() {
        let (ws, env) = env2();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        assert_eq!(
            parse_expr("A and not B", &env).unwrap(),
            EventExpr::product(vec![a.clone(), EventExpr::not(b.clone())])
        );
        assert_eq!(
            parse_expr("A or B", &env).unwrap(),
            EventExpr::or(a.clone(), b.clone())
        );
        assert_eq!(
            parse_expr("not (A or B)", &env).unwrap(),
            EventExpr::not(EventExpr::or(a, b))
        );
    }

    #[test]
    fn parses_sums_thresholds_and_scalars() {
        let (ws, env) = env2();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        let c = EventExpr::atom(ws.atom("C").unwrap());
        let total = EventExpr::sum(vec![a.clone(), b.clone(), c.clone()]);
        assert_eq!(
            parse_expr("[A + B + C >= 2]", &env).unwrap(),
            EventExpr::threshold(total.clone(), integer(2))
        );
        assert_eq!(parse_expr("sum(A, B, C)", &env).unwrap(), total);
        assert_eq!(
            parse_expr("0.5 * A + 1/2 * B", &env).unwrap(),
            EventExpr::sum(vec![
                EventExpr::scaled(ratio(1, 2), a.clone()),
                EventExpr::scaled(ratio(1, 2), b),
            ])
        );
        assert_eq!(
            parse_expr("A - C", &env).unwrap(),
            EventExpr::sum(vec![a, EventExpr::scaled(integer(-1), c)])
        );
    }

    #[test]
    fn rejects_unknown_names_and_trailing_input() {
        let (_ws, env) = env2();
        assert!(matches!(
            parse_expr("A and Z", &env),
            Err(ScenarioError::UnknownName(n)) if n == "Z"
        ));
        assert!(matches!(
            parse_expr("A B", &env),
            Err(ScenarioError::Expr { .. })
        ));
        assert!(parse_expr("", &env).is_err());
        assert!(parse_expr("[A + B >= ]", &env).is_err());
    }

    #[test]
    fn renderer_inverts_parser_on_library_shapes() {
        let (ws, env) = env2();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        let c = EventExpr::atom(ws.atom("C").unwrap());
        let renderer = Renderer::new()
            .with_name("A", a.clone())
            .with_name("B", b.clone())
            .with_name("C", c.clone());
        let cases = vec![
            EventExpr::product(vec![a.clone(), EventExpr::not(b.clone())]),
            EventExpr::or(a.clone(), EventExpr::product(vec![b.clone(), c.clone()])),
            EventExpr::threshold(
                EventExpr::sum(vec![a.clone(), b.clone(), c.clone()]),
                integer(2),
            ),
            EventExpr::product(vec![
                EventExpr::product(vec![a.clone(), b.clone()]),
                c.clone(),
            ]),
            EventExpr::sum(vec![
                EventExpr::sum(vec![a.clone(), b.clone()]),
                EventExpr::scaled(integer(-1), c.clone()),
            ]),
            EventExpr::not(EventExpr::or(a.clone(), b.clone())),
            EventExpr::scaled(ratio(3, 7), EventExpr::sum(vec![a.clone(), b.clone()])),
            EventExpr::constant(ratio(1, 3)),
        ];
        for expr in cases {
            let text = renderer.render(&expr);
            let back = parse_expr(&text, &env).unwrap_or_else(|e| {
                panic!("rendered `{text}` failed to parse: {e}");
            });
            assert_eq!(back, expr, "round trip through `{text}`");
        }
    }

    #[test]
    fn named_subtrees_render_by_name() {
        let (ws, env) = env2();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        let majority = EventExpr::threshold(
            EventExpr::sum(vec![a.clone(), b.clone()]),
            integer(2),
        );
        let renderer = Renderer::new()
            .with_name("A", a.clone())
            .with_name("B", b.clone())
            .with_name("Both", majority.clone());
        let wrapped = EventExpr::product(vec![majority, EventExpr::not(a)]);
        assert_eq!(renderer.render(&wrapped), "Both and not A");
    }

    #[test]
    fn exact_numbers_survive_json() {
        #[derive(Serialize, Deserialize)]
        struct Holder {
            x: Num,
            y: Num,
            z: Num,
        }
        let parsed: Holder =
            serde_json::from_str(r#"{ "x": 0.82, "y": "1/3", "z": 2 }"#).unwrap();
        assert_eq!(parsed.x.0, ratio(41, 50));
        assert_eq!(parsed.y.0, ratio(1, 3));
        assert_eq!(parsed.z.0, integer(2));
        let text = serde_json::to_string(&parsed).unwrap();
        assert_eq!(text, r#"{"x":0.82,"y":"1/3","z":2}"#);
    }

    #[test]
    fn document_builds_and_round_trips() {
        let text = r#"{
            "atoms": ["E1", "E2"],
            "quantities": [
                {"name": "E1", "expr": "E1"},
                {"name": "E2", "expr": "E2"},
                {"name": "E3", "expr": "(E1 and E2) or (not E1 and not E2)"}
            ],
            "assertions": [
                {"type": "prevision", "expr": "E1", "value": 0.7},
                {"type": "prevision", "expr": "E2", "value": 0.2}
            ],
            "targets": [
                {"name": "P(E3)", "type": "linear", "expr": "E3"}
            ]
        }"#;
        let doc = ScenarioDocument::from_json(text).unwrap();
        let built = doc.build().unwrap();
        assert_eq!(built.realm.n_columns(), 4);
        assert_eq!(built.assertions.len(), 2);
        assert_eq!(built.targets.len(), 1);

        let doc2 = ScenarioDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, doc2);
    }

    #[test]
    fn duplicate_quantity_names_are_rejected() {
        let doc = ScenarioDocument {
            description: None,
            atoms: vec!["A".into()],
            quantities: vec![
                QuantityDoc {
                    name: "A".into(),
                    expr: "A".into(),
                },
                QuantityDoc {
                    name: "A".into(),
                    expr: "not A".into(),
                },
            ],
            column_order: None,
            assertions: vec![],
            targets: vec![],
        };
        assert!(matches!(
            doc.build(),
            Err(ScenarioError::DuplicateName(n)) if n == "A"
        ));
    }

    #[test]
    fn exported_study_document_compiles_to_identical_constraints() {
        use crate::asbestos::{build_realm, scenario, ScenarioColumn};
        use crate::assertions::compile;

        let realm = build_realm();
        for column in [ScenarioColumn::CondExFic82, ScenarioColumn::CondExBPlus] {
            let sc = scenario(&realm, column);
            let direct = compile(&realm, &sc.assertions).unwrap();

            let doc = builtin::document(match column {
                ScenarioColumn::CondExFic82 => "condex-fic82",
                _ => "condex-bplus",
            })
            .unwrap();
            let reloaded = ScenarioDocument::from_json(&doc.to_json()).unwrap();
            assert_eq!(doc, reloaded);
            let built = reloaded.build().unwrap();
            let via_doc = compile(&built.realm, &built.assertions).unwrap();
            assert_eq!(direct, via_doc);
            assert_eq!(built.targets.len(), 13);
        }
    }

    #[test]
    fn agreement_documents_have_four_cells() {
        for name in ["agreement", "agreement-exchangeable"] {
            let built = builtin::document(name).unwrap().build().unwrap();
            assert_eq!(built.realm.n_columns(), 4);
            assert_eq!(built.targets.len(), 1);
        }
    }

    #[test]
    fn bad_column_order_is_rejected() {
        let doc = ScenarioDocument {
            description: None,
            atoms: vec!["A".into()],
            quantities: vec![],
            column_order: Some(vec![0]),
            assertions: vec![],
            targets: vec![],
        };
        assert!(matches!(doc.build(), Err(ScenarioError::ColumnOrder(_))));
    }
}

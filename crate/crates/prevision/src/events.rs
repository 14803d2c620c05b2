//! Atomic events, quantity expressions and realm enumeration.
//!
//! A *workspace* declares a finite set of atomic events. Every joint
//! configuration of the atoms (one column of the truth table) is a
//! [`Configuration`]; the *realm* of a list of quantities is the matrix of
//! their values across all configurations. Any prevision assessment over the
//! quantities is a linear functional of the vector `q` of configuration
//! probabilities, so the realm is the bridge between expressions and the
//! constraint systems built in [`crate::assertions`].
//!
//! Quantities are [`EventExpr`] trees: atoms, rational constants, negations
//! `1 - x`, products, sums, scalar multiples, and threshold indicators
//! `[expr >= c]`. An expression is an *event* when it takes only the values 0
//! and 1; this is either evident from its structure or verified by full
//! enumeration.
//!
//! Realm columns have a canonical order (the binary encoding of atom values,
//! first-declared atom most significant) but a realm may carry any
//! presentation permutation, e.g. to match a published table. All exported
//! rows and probability vectors follow the realm's column order.

use crate::numeric::{to_f64, Rational};
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Default cap on workspace size; `2^20` columns is the largest realm that
/// enumerates in reasonable time and memory.
pub const DEFAULT_ATOM_LIMIT: usize = 20;

/// Errors from workspace construction, expression validation and realm
/// enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    /// The same atom name was declared twice.
    #[error("atom `{0}` is declared twice")]
    DuplicateAtom(String),
    /// Atom names must be non-empty identifiers.
    #[error("invalid atom name `{0}`: use [A-Za-z_][A-Za-z0-9_]*")]
    InvalidAtomName(String),
    /// The workspace would exceed the enumeration cap.
    #[error("{n} atoms exceed the enumeration limit of {limit} (raise it with Workspace::with_limit)")]
    TooManyAtoms { n: usize, limit: usize },
    /// An expression references an atom outside the workspace.
    #[error("expression references atom #{index}, but the workspace declares only {n_atoms} atoms")]
    UndeclaredAtom { index: usize, n_atoms: usize },
    /// A quantity flagged as an event takes a value other than 0/1.
    #[error("`{name}` is flagged as an event but evaluates to {value} on configuration {config}")]
    NotZeroOne {
        name: String,
        value: String,
        config: String,
    },
    /// An operation required an event and got a general quantity.
    #[error("expression is not an event: it evaluates to {value} on configuration {config}")]
    NotAnEvent { value: String, config: String },
    /// A presentation order was not a bijection on the configurations.
    #[error("presentation order must list each of the {expected} configuration indices exactly once")]
    BadPermutation { expected: usize },
    /// Realm lookups with an expression from a different workspace.
    #[error("expression does not belong to this realm's workspace")]
    ForeignExpression,
}

/// Handle for a declared atomic event. Valid only for the workspace that
/// issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub(crate) usize);

impl AtomId {
    /// Position of the atom in declaration order.
    pub fn index(self) -> usize {
        self.0
    }
}

/// A declared set of atomic events.
#[derive(Debug, Clone)]
pub struct Workspace {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
}

fn valid_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Workspace {
    /// Declares atoms in order, with the default enumeration limit.
    pub fn new<I, S>(names: I) -> Result<Self, EventError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_limit(names, DEFAULT_ATOM_LIMIT)
    }

    /// Declares atoms with an explicit enumeration limit.
    pub fn with_limit<I, S>(names: I, limit: usize) -> Result<Self, EventError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > limit {
            return Err(EventError::TooManyAtoms {
                n: names.len(),
                limit,
            });
        }
        let mut by_name = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if !valid_name(name) {
                return Err(EventError::InvalidAtomName(name.clone()));
            }
            if by_name.insert(name.clone(), i).is_some() {
                return Err(EventError::DuplicateAtom(name.clone()));
            }
        }
        Ok(Workspace { names, by_name })
    }

    /// Looks up an atom by name.
    pub fn atom(&self, name: &str) -> Option<AtomId> {
        self.by_name.get(name).copied().map(AtomId)
    }

    /// Name of a declared atom.
    pub fn atom_name(&self, id: AtomId) -> &str {
        &self.names[id.0]
    }

    /// All atoms in declaration order.
    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.names.len()).map(AtomId)
    }

    /// Declared atom names in order.
    pub fn atom_names(&self) -> &[String] {
        &self.names
    }

    /// Number of declared atoms.
    pub fn n_atoms(&self) -> usize {
        self.names.len()
    }

    /// `2^n` joint configurations.
    pub fn n_configurations(&self) -> usize {
        1usize << self.names.len()
    }

    /// All configurations in canonical order.
    pub fn configurations(&self) -> impl Iterator<Item = Configuration> {
        let n = self.n_atoms();
        (0..self.n_configurations()).map(move |i| Configuration::from_index(i, n))
    }
}

/// One joint 0/1 assignment to every atom of a workspace.
///
/// The canonical index is the binary encoding of the atom values in
/// declaration order, first atom most significant: with atoms `(E1, E2)` the
/// canonical order is `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    bits: usize,
    n_atoms: usize,
}

impl Configuration {
    /// Configuration with the given canonical index.
    pub fn from_index(index: usize, n_atoms: usize) -> Self {
        debug_assert!(index < (1usize << n_atoms));
        Configuration {
            bits: index,
            n_atoms,
        }
    }

    /// Canonical index of this configuration.
    pub fn index(&self) -> usize {
        self.bits
    }

    /// Number of atoms in the underlying workspace.
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Value of one atom under this configuration.
    pub fn value(&self, atom: AtomId) -> bool {
        debug_assert!(atom.0 < self.n_atoms);
        (self.bits >> (self.n_atoms - 1 - atom.0)) & 1 == 1
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_atoms {
            let bit = (self.bits >> (self.n_atoms - 1 - i)) & 1;
            write!(f, "{}", bit)?;
        }
        Ok(())
    }
}

/// Numerical expression over the atoms of a workspace.
#[derive(Debug, Clone, PartialEq)]
pub enum EventExpr {
    /// Value of an atomic event (0 or 1).
    Atom(AtomId),
    /// Constant quantity.
    Constant(Rational),
    /// Negation `1 - x` of an event.
    Not(Box<EventExpr>),
    /// Product of the factors; on events this is their conjunction.
    Product(Vec<EventExpr>),
    /// Sum of the terms.
    Sum(Vec<EventExpr>),
    /// Scalar multiple.
    Scaled(Rational, Box<EventExpr>),
    /// Indicator `[expr >= bound]`, typically of a linear combination.
    Threshold {
        expr: Box<EventExpr>,
        bound: Rational,
    },
}

impl EventExpr {
    /// Atom as an expression.
    pub fn atom(id: AtomId) -> Self {
        EventExpr::Atom(id)
    }

    /// Constant expression.
    pub fn constant(value: Rational) -> Self {
        EventExpr::Constant(value)
    }

    /// Negation `1 - x`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: EventExpr) -> Self {
        EventExpr::Not(Box::new(inner))
    }

    /// Product of factors.
    pub fn product(factors: Vec<EventExpr>) -> Self {
        EventExpr::Product(factors)
    }

    /// Sum of terms.
    pub fn sum(terms: Vec<EventExpr>) -> Self {
        EventExpr::Sum(terms)
    }

    /// Scalar multiple.
    pub fn scaled(factor: Rational, inner: EventExpr) -> Self {
        EventExpr::Scaled(factor, Box::new(inner))
    }

    /// Indicator of `expr >= bound`.
    pub fn threshold(expr: EventExpr, bound: Rational) -> Self {
        EventExpr::Threshold {
            expr: Box::new(expr),
            bound,
        }
    }

    /// Inclusive disjunction `1 - (1-a)(1-b)` of two events.
    pub fn or(a: EventExpr, b: EventExpr) -> Self {
        EventExpr::not(EventExpr::product(vec![EventExpr::not(a), EventExpr::not(b)]))
    }

    /// Value of the expression on one configuration.
    pub fn eval(&self, config: Configuration) -> Rational {
        match self {
            EventExpr::Atom(id) => {
                if config.value(*id) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            EventExpr::Constant(c) => c.clone(),
            EventExpr::Not(inner) => Rational::one() - inner.eval(config),
            EventExpr::Product(factors) => factors
                .iter()
                .fold(Rational::one(), |acc, f| acc * f.eval(config)),
            EventExpr::Sum(terms) => terms
                .iter()
                .fold(Rational::zero(), |acc, t| acc + t.eval(config)),
            EventExpr::Scaled(k, inner) => k * inner.eval(config),
            EventExpr::Threshold { expr, bound } => {
                if expr.eval(config) >= *bound {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
        }
    }

    /// Largest referenced atom index, if any atom appears.
    pub fn max_atom_index(&self) -> Option<usize> {
        match self {
            EventExpr::Atom(id) => Some(id.0),
            EventExpr::Constant(_) => None,
            EventExpr::Not(inner) => inner.max_atom_index(),
            EventExpr::Scaled(_, inner) => inner.max_atom_index(),
            EventExpr::Threshold { expr, .. } => expr.max_atom_index(),
            EventExpr::Product(items) | EventExpr::Sum(items) => {
                items.iter().filter_map(|e| e.max_atom_index()).max()
            }
        }
    }

    /// Collects every referenced atom.
    pub fn atoms(&self) -> Vec<AtomId> {
        fn walk(expr: &EventExpr, out: &mut Vec<AtomId>) {
            match expr {
                EventExpr::Atom(id) => {
                    if !out.contains(id) {
                        out.push(*id);
                    }
                }
                EventExpr::Constant(_) => {}
                EventExpr::Not(inner) | EventExpr::Scaled(_, inner) => walk(inner, out),
                EventExpr::Threshold { expr, .. } => walk(expr, out),
                EventExpr::Product(items) | EventExpr::Sum(items) => {
                    for item in items {
                        walk(item, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Checks that every referenced atom is declared in `ws`.
    pub fn validate(&self, ws: &Workspace) -> Result<(), EventError> {
        match self.max_atom_index() {
            Some(index) if index >= ws.n_atoms() => Err(EventError::UndeclaredAtom {
                index,
                n_atoms: ws.n_atoms(),
            }),
            _ => Ok(()),
        }
    }

    /// True when 0/1-valuedness is evident from the structure alone.
    pub fn is_event_structural(&self) -> bool {
        match self {
            EventExpr::Atom(_) => true,
            EventExpr::Constant(c) => c.is_zero() || c.is_one(),
            EventExpr::Not(inner) => inner.is_event_structural(),
            EventExpr::Product(factors) => factors.iter().all(|f| f.is_event_structural()),
            EventExpr::Threshold { .. } => true,
            EventExpr::Sum(_) | EventExpr::Scaled(_, _) => false,
        }
    }

    /// Verifies that the expression is an event, by structure or by full
    /// enumeration over the workspace.
    pub fn check_event(&self, ws: &Workspace) -> Result<(), EventError> {
        self.validate(ws)?;
        if self.is_event_structural() {
            return Ok(());
        }
        for config in ws.configurations() {
            let v = self.eval(config);
            if !v.is_zero() && !v.is_one() {
                return Err(EventError::NotAnEvent {
                    value: v.to_string(),
                    config: config.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Negation `1 - x` of an event. Fails if the input is not an event.
pub fn negate(expr: &EventExpr, ws: &Workspace) -> Result<EventExpr, EventError> {
    expr.check_event(ws)?;
    Ok(EventExpr::not(expr.clone()))
}

/// Conjunction (product) of two events. Fails if either input is not an
/// event.
pub fn conjunction(a: &EventExpr, b: &EventExpr, ws: &Workspace) -> Result<EventExpr, EventError> {
    a.check_event(ws)?;
    b.check_event(ws)?;
    Ok(EventExpr::product(vec![a.clone(), b.clone()]))
}

/// A named quantity row of a realm.
#[derive(Debug, Clone)]
pub struct Quantity {
    /// Display name, also usable as an identifier in scenario documents.
    pub name: String,
    /// Defining expression.
    pub expr: EventExpr,
    /// Whether the quantity is asserted to be an event (verified on
    /// enumeration).
    pub event: bool,
}

impl Quantity {
    /// General quantity row.
    pub fn new(name: impl Into<String>, expr: EventExpr) -> Self {
        Quantity {
            name: name.into(),
            expr,
            event: false,
        }
    }

    /// Quantity asserted to be 0/1-valued; enumeration checks the claim.
    pub fn event(name: impl Into<String>, expr: EventExpr) -> Self {
        Quantity {
            name: name.into(),
            expr,
            event: true,
        }
    }
}

/// Value matrix of a list of quantities across every configuration.
#[derive(Debug, Clone)]
pub struct Realm {
    workspace: Workspace,
    quantities: Vec<Quantity>,
    /// `values[i][j]` is quantity `i` on presentation column `j`.
    values: Vec<Vec<Rational>>,
    /// Presentation column -> configuration.
    columns: Vec<Configuration>,
    /// Canonical index -> presentation column.
    config_to_column: Vec<usize>,
}

/// Enumerates the realm of `quantities` over `ws`.
///
/// `order`, when given, lists canonical configuration indices in the desired
/// presentation order and must be a bijection. Event-flagged quantities are
/// verified to be 0/1 on every configuration.
pub fn enumerate_realm(
    ws: &Workspace,
    quantities: Vec<Quantity>,
    order: Option<&[usize]>,
) -> Result<Realm, EventError> {
    let n_cols = ws.n_configurations();
    let columns: Vec<Configuration> = match order {
        Some(perm) => {
            if perm.len() != n_cols {
                return Err(EventError::BadPermutation { expected: n_cols });
            }
            let mut seen = vec![false; n_cols];
            for &idx in perm {
                if idx >= n_cols || seen[idx] {
                    return Err(EventError::BadPermutation { expected: n_cols });
                }
                seen[idx] = true;
            }
            perm.iter()
                .map(|&i| Configuration::from_index(i, ws.n_atoms()))
                .collect()
        }
        None => ws.configurations().collect(),
    };
    let mut config_to_column = vec![0usize; n_cols];
    for (col, config) in columns.iter().enumerate() {
        config_to_column[config.index()] = col;
    }
    let mut values = Vec::with_capacity(quantities.len());
    for q in &quantities {
        q.expr.validate(ws)?;
        let row: Vec<Rational> = columns.iter().map(|&c| q.expr.eval(c)).collect();
        if q.event {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() && !v.is_one() {
                    return Err(EventError::NotZeroOne {
                        name: q.name.clone(),
                        value: v.to_string(),
                        config: columns[j].to_string(),
                    });
                }
            }
        }
        values.push(row);
    }
    Ok(Realm {
        workspace: ws.clone(),
        quantities,
        values,
        columns,
        config_to_column,
    })
}

impl Realm {
    /// The underlying workspace.
    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    /// The quantity rows.
    pub fn quantities(&self) -> &[Quantity] {
        &self.quantities
    }

    /// Number of columns (`2^n`).
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Configuration shown at a presentation column.
    pub fn column_config(&self, col: usize) -> Configuration {
        self.columns[col]
    }

    /// Presentation column of a configuration.
    pub fn column_of(&self, config: Configuration) -> usize {
        self.config_to_column[config.index()]
    }

    /// Value of quantity `i` at presentation column `j`.
    pub fn value(&self, i: usize, j: usize) -> &Rational {
        &self.values[i][j]
    }

    /// Whole value row of quantity `i`, in presentation order.
    pub fn quantity_row(&self, i: usize) -> &[Rational] {
        &self.values[i]
    }

    /// Looks up a quantity by name.
    pub fn quantity_index(&self, name: &str) -> Option<usize> {
        self.quantities.iter().position(|q| q.name == name)
    }

    /// Coefficient vector of `expr` across the realm's columns: the prevision
    /// of `expr` equals `row . q` for any probability vector `q` in the
    /// realm's column order.
    pub fn indicator_row(&self, expr: &EventExpr) -> Result<Vec<Rational>, EventError> {
        expr.validate(&self.workspace)?;
        Ok(self.columns.iter().map(|&c| expr.eval(c)).collect())
    }

    /// [`Realm::indicator_row`] converted to `f64` for the solvers.
    pub fn indicator_row_f64(&self, expr: &EventExpr) -> Result<Vec<f64>, EventError> {
        Ok(self.indicator_row(expr)?.iter().map(to_f64).collect())
    }

    /// CSV dump: one row per quantity, one column per configuration in
    /// presentation order, configurations labelled by their bit patterns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
        for (q, row) in self.quantities.iter().zip(&self.values) {
            out.push_str(&csv_escape(&q.name));
            for v in row {
                out.push(',');
                if v.denom().is_one() {
                    out.push_str(&v.numer().to_string());
                } else {
                    out.push_str(&format!("{}/{}", v.numer(), v.denom()));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integer, ratio};

    fn two_event_workspace() -> Workspace {
        Workspace::new(["E1", "E2"]).unwrap()
    }

    /// E3 = 1 + 2 E1 E2 - E1 - E2, the event that E1 and E2 agree.
    fn agreement_expr(ws: &Workspace) -> EventExpr {
        let e1 = EventExpr::atom(ws.atom("E1").unwrap());
        let e2 = EventExpr::atom(ws.atom("E2").unwrap());
        EventExpr::sum(vec![
            EventExpr::constant(integer(1)),
            EventExpr::scaled(integer(2), EventExpr::product(vec![e1.clone(), e2.clone()])),
            EventExpr::scaled(integer(-1), e1),
            EventExpr::scaled(integer(-1), e2),
        ])
    }

    #[test]
    fn two_atom_realm_rows() {
        let ws = two_event_workspace();
        let e3 = agreement_expr(&ws);
        let realm = enumerate_realm(
            &ws,
            vec![
                Quantity::event("E1", EventExpr::atom(ws.atom("E1").unwrap())),
                Quantity::event("E2", EventExpr::atom(ws.atom("E2").unwrap())),
                Quantity::event("E3", e3),
            ],
            None,
        )
        .unwrap();
        let ints =
            |i: usize| -> Vec<i64> { realm.quantity_row(i).iter().map(|v| v.to_integer().try_into().unwrap()).collect() };
        // Columns in canonical order 00, 01, 10, 11.
        assert_eq!(ints(0), vec![0, 0, 1, 1]);
        assert_eq!(ints(1), vec![0, 1, 0, 1]);
        assert_eq!(ints(2), vec![1, 0, 0, 1]);
    }

    #[test]
    fn indicator_row_matches_expression_values() {
        let ws = two_event_workspace();
        let e3 = agreement_expr(&ws);
        let realm = enumerate_realm(
            &ws,
            vec![
                Quantity::event("E1", EventExpr::atom(ws.atom("E1").unwrap())),
                Quantity::event("E2", EventExpr::atom(ws.atom("E2").unwrap())),
            ],
            None,
        )
        .unwrap();
        let row = realm.indicator_row(&e3).unwrap();
        assert_eq!(row, vec![integer(1), integer(0), integer(0), integer(1)]);
    }

    #[test]
    fn event_flag_is_checked_by_enumeration() {
        let ws = two_event_workspace();
        let e1 = EventExpr::atom(ws.atom("E1").unwrap());
        let e2 = EventExpr::atom(ws.atom("E2").unwrap());
        // E1 + E2 takes the value 2 on configuration 11.
        let sum = EventExpr::sum(vec![e1.clone(), e2.clone()]);
        let err = enumerate_realm(&ws, vec![Quantity::event("bad", sum.clone())], None).unwrap_err();
        match err {
            EventError::NotZeroOne { name, value, config } => {
                assert_eq!(name, "bad");
                assert_eq!(value, "2");
                assert_eq!(config, "11");
            }
            other => panic!("unexpected error {other:?}"),
        }
        // The agreement combination passes the same check.
        let ok = enumerate_realm(&ws, vec![Quantity::event("E3", agreement_expr(&ws))], None);
        assert!(ok.is_ok());
    }

    #[test]
    fn negate_and_conjunction_require_events() {
        let ws = two_event_workspace();
        let e1 = EventExpr::atom(ws.atom("E1").unwrap());
        let e2 = EventExpr::atom(ws.atom("E2").unwrap());
        let not_e1 = negate(&e1, &ws).unwrap();
        let both = conjunction(&e1, &e2, &ws).unwrap();
        for config in ws.configurations() {
            assert_eq!(
                not_e1.eval(config),
                Rational::one() - e1.eval(config),
                "negation is 1 - x"
            );
            assert_eq!(
                both.eval(config),
                e1.eval(config) * e2.eval(config),
                "conjunction is the product"
            );
        }
        let sum = EventExpr::sum(vec![e1.clone(), e2.clone()]);
        assert!(negate(&sum, &ws).is_err());
        assert!(conjunction(&sum, &e2, &ws).is_err());
        // A non-structural event is accepted after enumeration.
        assert!(negate(&agreement_expr(&ws), &ws).is_ok());
    }

    #[test]
    fn threshold_indicator() {
        let ws = Workspace::new(["A", "B", "C"]).unwrap();
        let total = EventExpr::sum(vec![
            EventExpr::atom(ws.atom("A").unwrap()),
            EventExpr::atom(ws.atom("B").unwrap()),
            EventExpr::atom(ws.atom("C").unwrap()),
        ]);
        let majority = EventExpr::threshold(total, integer(2));
        assert!(majority.is_event_structural());
        for config in ws.configurations() {
            let ones = (0..3).filter(|&i| config.value(AtomId(i))).count();
            let expect = if ones >= 2 { 1 } else { 0 };
            assert_eq!(majority.eval(config), integer(expect));
        }
    }

    #[test]
    fn presentation_order_permutes_columns() {
        let ws = two_event_workspace();
        let order = [3usize, 1, 2, 0];
        let realm = enumerate_realm(
            &ws,
            vec![Quantity::event("E1", EventExpr::atom(ws.atom("E1").unwrap()))],
            Some(&order),
        )
        .unwrap();
        let ints: Vec<i64> = realm
            .quantity_row(0)
            .iter()
            .map(|v| v.to_integer().try_into().unwrap())
            .collect();
        assert_eq!(ints, vec![1, 0, 1, 0]);
        assert_eq!(realm.column_of(Configuration::from_index(3, 2)), 0);
        assert_eq!(realm.column_config(0).index(), 3);
        // Rejects non-bijections.
        assert!(enumerate_realm(
            &ws,
            vec![Quantity::event("E1", EventExpr::atom(ws.atom("E1").unwrap()))],
            Some(&[0, 0, 1, 2])
        )
        .is_err());
    }

    #[test]
    fn workspace_limits_and_validation() {
        assert!(matches!(
            Workspace::with_limit(["A", "B", "C"], 2).unwrap_err(),
            EventError::TooManyAtoms { n: 3, limit: 2 }
        ));
        assert!(Workspace::new(["A", "A"]).is_err());
        assert!(Workspace::new(["2bad"]).is_err());
        let ws = two_event_workspace();
        let foreign = EventExpr::atom(AtomId(7));
        assert!(foreign.validate(&ws).is_err());
    }

    #[test]
    fn csv_layout() {
        let ws = two_event_workspace();
        let realm = enumerate_realm(
            &ws,
            vec![
                Quantity::event("E1", EventExpr::atom(ws.atom("E1").unwrap())),
                Quantity::new("half", EventExpr::constant(ratio(1, 2))),
            ],
            None,
        )
        .unwrap();
        let csv = realm.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "quantity,00,01,10,11");
        assert_eq!(lines[1], "E1,0,0,1,1");
        assert_eq!(lines[2], "half,1/2,1/2,1/2,1/2");
    }
}

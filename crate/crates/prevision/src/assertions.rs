//! Assertions and their compilation into constraints on the
//! partition-probability vector.
//!
//! The vector `q` assigns a nonnegative mass to every realm column, summing
//! to 1. Each assertion restricts `q`:
//!
//! * a prevision `P(X) = v` pins the linear functional `row(X) . q`;
//! * a conditional prevision `P(X|G) = v` is multiplied through to the
//!   linear row `row(X.G) - v row(G)`, vacuous when `P(G) = 0`;
//! * exchangeability equates the masses of configurations that are
//!   permutations of one another (per orbit, within the conditioning event);
//! * an ordering of two conditional previsions with different conditioning
//!   events cross-multiplies into a product of linear forms, the one
//!   constraint class here that is not linear in `q`.
//!
//! The compiled [`ConstraintSystem`] keeps equalities, inequalities and
//! bilinear inequalities separate so the solvers can route linear systems to
//! plain LP. All coefficients stay rational until a solver converts them.

use crate::events::{AtomId, EventExpr, EventError, Realm};
use crate::numeric::{to_f64, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// Compilation failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Event(#[from] EventError),
    /// Interval assertions need lo <= hi.
    #[error("empty interval: lo = {lo} exceeds hi = {hi}")]
    EmptyInterval { lo: String, hi: String },
    /// Exchangeability needs at least two events.
    #[error("exchangeability needs at least two atomic events")]
    ExchangeabilityArity,
    /// Participant listed twice.
    #[error("atom `{0}` appears twice in an exchangeability assertion")]
    ExchangeabilityDuplicate(String),
    /// The conditioning event may not mention the exchangeable atoms.
    #[error("conditioning event of an exchangeability assertion mentions participant atom `{0}`")]
    ExchangeabilityOverlap(String),
    /// A probability parameter fell outside [0,1].
    #[error("{what} = {value} is outside [0,1]")]
    ProbabilityRange { what: &'static str, value: String },
    /// Sum distribution must be a probability distribution.
    #[error("invalid sum distribution: {0}")]
    BadDistribution(String),
    /// Success count above the number of events.
    #[error("success count {k} exceeds the {n} exchangeable events")]
    CountOutOfRange { k: usize, n: usize },
    /// Product measures need every atom accounted for.
    #[error("product measure leaves atom `{0}` unspecified")]
    UnspecifiedAtom(String),
}

/// One side of a conditional-prevision ordering.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderingSide {
    /// A known number.
    Constant(Rational),
    /// `P(expr)` when `given` is absent, else `P(expr | given)`.
    Ratio {
        expr: EventExpr,
        given: Option<EventExpr>,
    },
}

impl OrderingSide {
    pub fn constant(value: Rational) -> Self {
        OrderingSide::Constant(value)
    }

    pub fn prevision(expr: EventExpr) -> Self {
        OrderingSide::Ratio { expr, given: None }
    }

    pub fn conditional(expr: EventExpr, given: EventExpr) -> Self {
        OrderingSide::Ratio {
            expr,
            given: Some(given),
        }
    }
}

/// A single coherence judgment.
#[derive(Debug, Clone, PartialEq)]
pub enum Assertion {
    /// `P(expr) = value`.
    Prevision { expr: EventExpr, value: Rational },
    /// `lo <= P(expr) <= hi`.
    PrevisionInterval {
        expr: EventExpr,
        lo: Rational,
        hi: Rational,
    },
    /// `P(expr | given) = value`, multiplied through by `P(given)`.
    Conditional {
        expr: EventExpr,
        given: EventExpr,
        value: Rational,
    },
    /// `lo <= P(expr | given) <= hi`.
    ConditionalInterval {
        expr: EventExpr,
        given: EventExpr,
        lo: Rational,
        hi: Rational,
    },
    /// The listed atoms are exchangeable, within `given` when present.
    Exchangeable {
        atoms: Vec<AtomId>,
        given: Option<EventExpr>,
    },
    /// `lesser <= greater` as conditional previsions.
    Ordering {
        lesser: OrderingSide,
        greater: OrderingSide,
    },
}

/// Linear row `row . q = rhs` (or `<= rhs` in the inequality list).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub row: Vec<Rational>,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn row_f64(&self) -> Vec<f64> {
        self.row.iter().map(to_f64).collect()
    }

    pub fn rhs_f64(&self) -> f64 {
        to_f64(&self.rhs)
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        self.row.iter().zip(q).map(|(a, x)| to_f64(a) * x).sum()
    }
}

/// Product inequality `(a . q)(b . q) <= (u . q)(v . q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearConstraint {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
}

impl BilinearConstraint {
    /// Signed violation at `q`: positive means the inequality fails.
    pub fn violation(&self, q: &[f64]) -> f64 {
        let dot = |row: &[Rational]| -> f64 { row.iter().zip(q).map(|(a, x)| to_f64(a) * x).sum() };
        dot(&self.a) * dot(&self.b) - dot(&self.u) * dot(&self.v)
    }
}

/// Constraints on the partition-probability vector, in realm column order.
/// `q >= 0` is implicit; the total-probability row `sum q = 1` is always the
/// first equality.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub n_cells: usize,
    pub linear_eq: Vec<LinearConstraint>,
    pub linear_ineq: Vec<LinearConstraint>,
    pub bilinear_ineq: Vec<BilinearConstraint>,
}

impl ConstraintSystem {
    /// Fresh system holding only the total-probability row.
    pub fn new(n_cells: usize) -> Self {
        ConstraintSystem {
            n_cells,
            linear_eq: vec![LinearConstraint {
                row: vec![Rational::one(); n_cells],
                rhs: Rational::one(),
            }],
            linear_ineq: Vec::new(),
            bilinear_ineq: Vec::new(),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.bilinear_ineq.is_empty()
    }

    pub fn push_eq(&mut self, row: Vec<Rational>, rhs: Rational) {
        debug_assert_eq!(row.len(), self.n_cells);
        self.linear_eq.push(LinearConstraint { row, rhs });
    }

    pub fn push_ineq(&mut self, row: Vec<Rational>, rhs: Rational) {
        debug_assert_eq!(row.len(), self.n_cells);
        self.linear_ineq.push(LinearConstraint { row, rhs });
    }

    pub fn push_bilinear(&mut self, c: BilinearConstraint) {
        debug_assert!(
            c.a.len() == self.n_cells
                && c.b.len() == self.n_cells
                && c.u.len() == self.n_cells
                && c.v.len() == self.n_cells
        );
        self.bilinear_ineq.push(c);
    }

    /// Worst constraint violation at `q`, including negativity of any cell.
    pub fn max_violation(&self, q: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in q {
            worst = worst.max(-x);
        }
        for c in &self.linear_eq {
            worst = worst.max((c.eval(q) - c.rhs_f64()).abs());
        }
        for c in &self.linear_ineq {
            worst = worst.max(c.eval(q) - c.rhs_f64());
        }
        for c in &self.bilinear_ineq {
            worst = worst.max(c.violation(q));
        }
        worst
    }

    pub fn satisfied_by(&self, q: &[f64], tol: f64) -> bool {
        self.max_violation(q) <= tol
    }
}

fn scale_row(row: &[Rational], k: &Rational) -> Vec<Rational> {
    row.iter().map(|a| a * k).collect()
}

fn sub_rows(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Row of `expr . given`, multiplying through a conditional assertion.
fn conditioned_row(
    realm: &Realm,
    expr: &EventExpr,
    given: &EventExpr,
) -> Result<Vec<Rational>, EventError> {
    realm.indicator_row(&EventExpr::product(vec![expr.clone(), given.clone()]))
}

/// Numerator and denominator rows of an ordering side; the denominator of an
/// unconditional prevision is the all-ones row (the sure event).
fn side_rows(realm: &Realm, side: &OrderingSide) -> Result<(Vec<Rational>, Vec<Rational>), CompileError> {
    match side {
        OrderingSide::Constant(_) => unreachable!("constant sides are handled by the caller"),
        OrderingSide::Ratio { expr, given } => match given {
            None => Ok((
                realm.indicator_row(expr)?,
                vec![Rational::one(); realm.n_columns()],
            )),
            Some(g) => {
                g.check_event(realm.workspace())?;
                Ok((conditioned_row(realm, expr, g)?, realm.indicator_row(g)?))
            }
        },
    }
}

/// Compiles assertions over `realm` into a constraint system on `q`.
pub fn compile(realm: &Realm, assertions: &[Assertion]) -> Result<ConstraintSystem, CompileError> {
    let mut system = ConstraintSystem::new(realm.n_columns());
    for assertion in assertions {
        compile_into(&mut system, realm, assertion)?;
    }
    Ok(system)
}

/// Appends one assertion's constraints to an existing system.
pub fn compile_into(
    system: &mut ConstraintSystem,
    realm: &Realm,
    assertion: &Assertion,
) -> Result<(), CompileError> {
    match assertion {
        Assertion::Prevision { expr, value } => {
            let row = realm.indicator_row(expr)?;
            system.push_eq(row, value.clone());
        }
        Assertion::PrevisionInterval { expr, lo, hi } => {
            check_interval(lo, hi)?;
            let row = realm.indicator_row(expr)?;
            system.push_ineq(row.iter().map(|a| -a).collect(), -lo);
            system.push_ineq(row, hi.clone());
        }
        Assertion::Conditional { expr, given, value } => {
            given.check_event(realm.workspace())?;
            let num = conditioned_row(realm, expr, given)?;
            let den = realm.indicator_row(given)?;
            system.push_eq(sub_rows(&num, &scale_row(&den, value)), Rational::zero());
        }
        Assertion::ConditionalInterval {
            expr,
            given,
            lo,
            hi,
        } => {
            check_interval(lo, hi)?;
            given.check_event(realm.workspace())?;
            let num = conditioned_row(realm, expr, given)?;
            let den = realm.indicator_row(given)?;
            // num - hi*den <= 0 and lo*den - num <= 0.
            system.push_ineq(sub_rows(&num, &scale_row(&den, hi)), Rational::zero());
            system.push_ineq(sub_rows(&scale_row(&den, lo), &num), Rational::zero());
        }
        Assertion::Exchangeable { atoms, given } => {
            compile_exchangeable(system, realm, atoms, given.as_ref())?;
        }
        Assertion::Ordering { lesser, greater } => {
            compile_ordering(system, realm, lesser, greater)?;
        }
    }
    Ok(())
}

fn check_interval(lo: &Rational, hi: &Rational) -> Result<(), CompileError> {
    if lo > hi {
        return Err(CompileError::EmptyInterval {
            lo: lo.to_string(),
            hi: hi.to_string(),
        });
    }
    Ok(())
}

/// Expands an exchangeability judgment into cell equalities.
///
/// Configurations inside the conditioning event are grouped into orbits of
/// the participant-permutation action: same values on every non-participant
/// atom, same count of positive participants. Exchangeability makes `q`
/// constant on each orbit, which an orbit of size m expresses as m-1 chained
/// equalities.
fn compile_exchangeable(
    system: &mut ConstraintSystem,
    realm: &Realm,
    atoms: &[AtomId],
    given: Option<&EventExpr>,
) -> Result<(), CompileError> {
    let ws = realm.workspace();
    if atoms.len() < 2 {
        return Err(CompileError::ExchangeabilityArity);
    }
    let mut participant = vec![false; ws.n_atoms()];
    for atom in atoms {
        if atom.index() >= ws.n_atoms() {
            return Err(EventError::UndeclaredAtom {
                index: atom.index(),
                n_atoms: ws.n_atoms(),
            }
            .into());
        }
        if participant[atom.index()] {
            return Err(CompileError::ExchangeabilityDuplicate(
                ws.atom_name(*atom).to_string(),
            ));
        }
        participant[atom.index()] = true;
    }
    if let Some(g) = given {
        g.check_event(ws)?;
        for atom in g.atoms() {
            if participant[atom.index()] {
                return Err(CompileError::ExchangeabilityOverlap(
                    ws.atom_name(atom).to_string(),
                ));
            }
        }
    }

    // Orbit key: (non-participant atom values, number of positive
    // participants). BTreeMap keeps the emitted row order deterministic.
    let mut orbits: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for config in ws.configurations() {
        if let Some(g) = given {
            if g.eval(config).is_zero() {
                continue;
            }
        }
        let mut rest_bits = 0usize;
        let mut count = 0usize;
        for atom in ws.atom_ids() {
            let bit = config.value(atom) as usize;
            if participant[atom.index()] {
                count += bit;
            } else {
                rest_bits = (rest_bits << 1) | bit;
            }
        }
        orbits
            .entry((rest_bits, count))
            .or_default()
            .push(realm.column_of(config));
    }

    for cells in orbits.values_mut() {
        cells.sort_unstable();
        for pair in cells.windows(2) {
            let mut row = vec![Rational::zero(); realm.n_columns()];
            row[pair[0]] = Rational::one();
            row[pair[1]] = -Rational::one();
            system.push_eq(row, Rational::zero());
        }
    }
    Ok(())
}

/// Compiles `lesser <= greater` over conditional previsions.
///
/// Multiplying `P(A|B) <= P(C|D)` through by `P(B) P(D) >= 0` gives
/// `P(AB) P(D) <= P(CD) P(B)`. The product collapses to a single linear row
/// whenever the two conditioning rows are identical or one side is a
/// constant.
fn compile_ordering(
    system: &mut ConstraintSystem,
    realm: &Realm,
    lesser: &OrderingSide,
    greater: &OrderingSide,
) -> Result<(), CompileError> {
    match (lesser, greater) {
        (OrderingSide::Constant(a), OrderingSide::Constant(b)) => {
            if a > b {
                // A false numeric claim poisons the whole system; record it
                // as a row no q can satisfy so feasibility checks report it.
                system.push_ineq(vec![Rational::zero(); realm.n_columns()], -Rational::one());
            }
        }
        (OrderingSide::Constant(c), side) => {
            let (num, den) = side_rows(realm, side)?;
            // c * den - num <= 0.
            system.push_ineq(sub_rows(&scale_row(&den, c), &num), Rational::zero());
        }
        (side, OrderingSide::Constant(c)) => {
            let (num, den) = side_rows(realm, side)?;
            // num - c * den <= 0.
            system.push_ineq(sub_rows(&num, &scale_row(&den, c)), Rational::zero());
        }
        (left, right) => {
            let (n1, d1) = side_rows(realm, left)?;
            let (n2, d2) = side_rows(realm, right)?;
            if d1 == d2 {
                system.push_ineq(sub_rows(&n1, &n2), Rational::zero());
            } else {
                system.push_bilinear(BilinearConstraint {
                    a: n1,
                    b: d2,
                    u: n2,
                    v: d1,
                });
            }
        }
    }
    Ok(())
}

/// Distribution of the number of positive outcomes among exchangeable
/// events. Under exchangeability this determines the probability of every
/// ordered outcome string.
#[derive(Debug, Clone, PartialEq)]
pub struct SumDistribution {
    probs: Vec<Rational>,
}

fn check_probability(what: &'static str, value: &Rational) -> Result<(), CompileError> {
    if value.is_negative() || value > &Rational::one() {
        return Err(CompileError::ProbabilityRange {
            what,
            value: value.to_string(),
        });
    }
    Ok(())
}

fn rat_pow(base: &Rational, exp: usize) -> Rational {
    let mut out = Rational::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

fn binomial(n: usize, k: usize) -> Rational {
    Rational::from(num_integer::binomial(
        BigInt::from(n),
        BigInt::from(k),
    ))
}

impl SumDistribution {
    /// Distribution from `P(S = k)` for `k = 0..=n`; must be nonnegative and
    /// sum to 1 exactly.
    pub fn new(probs: Vec<Rational>) -> Result<Self, CompileError> {
        if probs.is_empty() {
            return Err(CompileError::BadDistribution(
                "no outcome probabilities given".into(),
            ));
        }
        let mut total = Rational::zero();
        for p in &probs {
            if p.is_negative() {
                return Err(CompileError::BadDistribution(format!(
                    "negative probability {p}"
                )));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(CompileError::BadDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(SumDistribution { probs })
    }

    /// Binomial sum distribution of `n` independent events with success
    /// probability `theta`.
    pub fn iid(n: usize, theta: &Rational) -> Result<Self, CompileError> {
        check_probability("theta", theta)?;
        let complement = Rational::one() - theta;
        let probs = (0..=n)
            .map(|k| binomial(n, k) * rat_pow(theta, k) * rat_pow(&complement, n - k))
            .collect();
        Ok(SumDistribution { probs })
    }

    /// Number of events.
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P(S = k)`.
    pub fn prob_sum(&self, k: usize) -> Result<&Rational, CompileError> {
        self.probs.get(k).ok_or(CompileError::CountOutOfRange {
            k,
            n: self.n(),
        })
    }

    /// Probability of any one ordered string with exactly `k` positive
    /// outcomes: `P(S = k)` split evenly over the `C(n, k)` strings.
    pub fn string_probability(&self, k: usize) -> Result<Rational, CompileError> {
        let p = self.prob_sum(k)?.clone();
        Ok(p / binomial(self.n(), k))
    }
}

/// Conditioning half of a two-class product measure: the splitting atom, its
/// probability, and the success parameter used when the atom is 0.
#[derive(Debug, Clone)]
pub struct IidConditioning {
    pub atom: AtomId,
    pub prob: Rational,
    pub theta_complement: Rational,
}

/// Cell masses of the product measure that makes `atoms` independent with
/// success probability `theta`, optionally split by a conditioning atom with
/// its own parameter on the complement class.
///
/// Every workspace atom must be a participant or the conditioning atom,
/// otherwise the measure is underdetermined. The result is in realm column
/// order and satisfies every constraint compiled from the matching
/// exchangeability assertion.
pub fn iid_cell_masses(
    realm: &Realm,
    atoms: &[AtomId],
    theta: &Rational,
    given: Option<&IidConditioning>,
) -> Result<Vec<Rational>, CompileError> {
    let ws = realm.workspace();
    check_probability("theta", theta)?;
    let mut covered = vec![false; ws.n_atoms()];
    for atom in atoms {
        if atom.index() >= ws.n_atoms() {
            return Err(EventError::UndeclaredAtom {
                index: atom.index(),
                n_atoms: ws.n_atoms(),
            }
            .into());
        }
        if covered[atom.index()] {
            return Err(CompileError::ExchangeabilityDuplicate(
                ws.atom_name(*atom).to_string(),
            ));
        }
        covered[atom.index()] = true;
    }
    if let Some(c) = given {
        check_probability("class probability", &c.prob)?;
        check_probability("theta", &c.theta_complement)?;
        if covered[c.atom.index()] {
            return Err(CompileError::ExchangeabilityOverlap(
                ws.atom_name(c.atom).to_string(),
            ));
        }
        covered[c.atom.index()] = true;
    }
    if let Some(missing) = covered.iter().position(|&c| !c) {
        return Err(CompileError::UnspecifiedAtom(
            ws.atom_name(AtomId(missing)).to_string(),
        ));
    }

    let m = atoms.len();
    let mut masses = Vec::with_capacity(realm.n_columns());
    for j in 0..realm.n_columns() {
        let config = realm.column_config(j);
        let k = atoms.iter().filter(|a| config.value(**a)).count();
        let mass = match given {
            None => rat_pow(theta, k) * rat_pow(&(Rational::one() - theta), m - k),
            Some(c) => {
                if config.value(c.atom) {
                    c.prob.clone() * rat_pow(theta, k) * rat_pow(&(Rational::one() - theta), m - k)
                } else {
                    (Rational::one() - &c.prob)
                        * rat_pow(&c.theta_complement, k)
                        * rat_pow(&(Rational::one() - &c.theta_complement), m - k)
                }
            }
        };
        masses.push(mass);
    }
    Ok(masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integer;
    use crate::events::{enumerate_realm, Quantity, Workspace};
    use crate::numeric::{parse_rational, ratio};

    fn pair_realm() -> Realm {
        let ws = Workspace::new(["E1", "E2"]).unwrap();
        let e1 = EventExpr::atom(ws.atom("E1").unwrap());
        let e2 = EventExpr::atom(ws.atom("E2").unwrap());
        enumerate_realm(
            &ws,
            vec![Quantity::event("E1", e1), Quantity::event("E2", e2)],
            None,
        )
        .unwrap()
    }

    fn ints(row: &[i64]) -> Vec<Rational> {
        row.iter().map(|&v| integer(v)).collect()
    }

    #[test]
    fn two_previsions_compile_to_three_rows() {
        let realm = pair_realm();
        let e1 = realm.quantities()[0].expr.clone();
        let e2 = realm.quantities()[1].expr.clone();
        let system = compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: e1,
                    value: ratio(7, 10),
                },
                Assertion::Prevision {
                    expr: e2,
                    value: ratio(2, 10),
                },
            ],
        )
        .unwrap();
        assert_eq!(system.linear_eq.len(), 3);
        assert!(system.linear_ineq.is_empty() && system.bilinear_ineq.is_empty());
        assert_eq!(system.linear_eq[0].row, ints(&[1, 1, 1, 1]));
        assert_eq!(system.linear_eq[0].rhs, integer(1));
        assert_eq!(system.linear_eq[1].row, ints(&[0, 0, 1, 1]));
        assert_eq!(system.linear_eq[1].rhs, ratio(7, 10));
        assert_eq!(system.linear_eq[2].row, ints(&[0, 1, 0, 1]));
        assert_eq!(system.linear_eq[2].rhs, ratio(2, 10));
    }

    #[test]
    fn exchangeable_pair_equates_the_mixed_cells() {
        let realm = pair_realm();
        let ws = realm.workspace();
        let system = compile(
            &realm,
            &[
                Assertion::Exchangeable {
                    atoms: vec![ws.atom("E1").unwrap(), ws.atom("E2").unwrap()],
                    given: None,
                },
                Assertion::Prevision {
                    expr: EventExpr::atom(ws.atom("E1").unwrap()),
                    value: ratio(7, 10),
                },
            ],
        )
        .unwrap();
        // Total probability, q2 = q3 (columns 01 and 10), prevision row.
        assert_eq!(system.linear_eq.len(), 3);
        assert_eq!(system.linear_eq[1].row, ints(&[0, 1, -1, 0]));
        assert_eq!(system.linear_eq[1].rhs, integer(0));
        assert_eq!(system.linear_eq[2].row, ints(&[0, 0, 1, 1]));
    }

    fn reader_realm() -> Realm {
        // Atoms: condition F, then three readers' positive calls.
        let ws = Workspace::new(["F", "D1", "D2", "D3"]).unwrap();
        let rows = ["F", "D1", "D2", "D3"]
            .iter()
            .map(|name| Quantity::event(*name, EventExpr::atom(ws.atom(name).unwrap())))
            .collect();
        enumerate_realm(&ws, rows, None).unwrap()
    }

    fn cells_row(n: usize, cells: &[usize]) -> Vec<Rational> {
        let mut row = vec![Rational::zero(); n];
        for &c in cells {
            row[c] = Rational::one();
        }
        row
    }

    #[test]
    fn ordering_with_different_conditioning_events_cross_multiplies() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let atom = |name: &str| EventExpr::atom(ws.atom(name).unwrap());
        let not = |e: EventExpr| EventExpr::not(e);
        // P(D3 | ~D2 ~D1 ~F) <= P(D3 | ~D1 ~F).
        let lesser = OrderingSide::conditional(
            atom("D3"),
            EventExpr::product(vec![not(atom("D2")), not(atom("D1")), not(atom("F"))]),
        );
        let greater = OrderingSide::conditional(
            atom("D3"),
            EventExpr::product(vec![not(atom("D1")), not(atom("F"))]),
        );
        let system = compile(&realm, &[Assertion::Ordering { lesser, greater }]).unwrap();
        assert_eq!(system.bilinear_ineq.len(), 1);
        assert!(system.linear_ineq.is_empty());
        let b = &system.bilinear_ineq[0];
        // Canonical cell index is 8F + 4D1 + 2D2 + D3.
        assert_eq!(b.a, cells_row(16, &[1]), "numerator D3 ~D2 ~D1 ~F");
        assert_eq!(b.b, cells_row(16, &[0, 1, 2, 3]), "denominator ~D1 ~F");
        assert_eq!(b.u, cells_row(16, &[1, 3]), "numerator D3 ~D1 ~F");
        assert_eq!(b.v, cells_row(16, &[0, 1]), "denominator ~D2 ~D1 ~F");
    }

    #[test]
    fn constant_bounded_orderings_stay_linear() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let atom = |name: &str| EventExpr::atom(ws.atom(name).unwrap());
        let half = ratio(1, 2);
        // P(D3 | D1) <= 1/2 compiles to row(D3 D1) - row(D1)/2 <= 0.
        let system = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::conditional(atom("D3"), atom("D1")),
                greater: OrderingSide::constant(half.clone()),
            }],
        )
        .unwrap();
        assert!(system.bilinear_ineq.is_empty());
        assert_eq!(system.linear_ineq.len(), 1);
        let num = realm
            .indicator_row(&EventExpr::product(vec![atom("D3"), atom("D1")]))
            .unwrap();
        let den = realm.indicator_row(&atom("D1")).unwrap();
        let expect: Vec<Rational> = num
            .iter()
            .zip(&den)
            .map(|(n, d)| n - d * &half)
            .collect();
        assert_eq!(system.linear_ineq[0].row, expect);
        assert_eq!(system.linear_ineq[0].rhs, integer(0));

        // Mirrored constant on the lesser side flips the row sign.
        let mirrored = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::constant(half),
                greater: OrderingSide::conditional(atom("D3"), atom("D1")),
            }],
        )
        .unwrap();
        let flipped: Vec<Rational> = expect.iter().map(|a| -a).collect();
        assert_eq!(mirrored.linear_ineq[0].row, flipped);
    }

    #[test]
    fn constant_versus_constant_orderings() {
        let realm = pair_realm();
        let fine = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::constant(ratio(1, 2)),
                greater: OrderingSide::constant(ratio(3, 4)),
            }],
        )
        .unwrap();
        assert_eq!(fine.linear_ineq.len(), 0);
        let broken = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::constant(ratio(3, 4)),
                greater: OrderingSide::constant(ratio(1, 2)),
            }],
        )
        .unwrap();
        // Unsatisfiable marker row: 0 <= -1.
        assert_eq!(broken.linear_ineq.len(), 1);
        assert!(broken.linear_ineq[0].row.iter().all(|a| a.is_zero()));
        assert_eq!(broken.linear_ineq[0].rhs, integer(-1));
    }

    #[test]
    fn identical_conditioning_rows_never_go_bilinear() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let atom = |name: &str| EventExpr::atom(ws.atom(name).unwrap());
        // Same conditioning event written two different ways.
        let g1 = EventExpr::product(vec![atom("F"), atom("F")]);
        let g2 = atom("F");
        let system = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::conditional(atom("D1"), g1),
                greater: OrderingSide::conditional(atom("D2"), g2),
            }],
        )
        .unwrap();
        assert!(system.bilinear_ineq.is_empty());
        assert_eq!(system.linear_ineq.len(), 1);
        // Two unconditional previsions compare linearly as well.
        let plain = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::prevision(atom("D1")),
                greater: OrderingSide::prevision(atom("D2")),
            }],
        )
        .unwrap();
        assert!(plain.bilinear_ineq.is_empty());
        assert_eq!(plain.linear_ineq.len(), 1);
    }

    #[test]
    fn conditional_prevision_rows_multiply_through() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let atom = |name: &str| EventExpr::atom(ws.atom(name).unwrap());
        let v = parse_rational("0.82").unwrap();
        let system = compile(
            &realm,
            &[Assertion::Conditional {
                expr: atom("D1"),
                given: atom("F"),
                value: v.clone(),
            }],
        )
        .unwrap();
        assert_eq!(system.linear_eq.len(), 2);
        let num = realm
            .indicator_row(&EventExpr::product(vec![atom("D1"), atom("F")]))
            .unwrap();
        let den = realm.indicator_row(&atom("F")).unwrap();
        let expect: Vec<Rational> = num.iter().zip(&den).map(|(n, d)| n - d * &v).collect();
        assert_eq!(system.linear_eq[1].row, expect);
        assert_eq!(system.linear_eq[1].rhs, integer(0));
    }

    #[test]
    fn interval_assertions_make_inequality_pairs() {
        let realm = pair_realm();
        let e1 = EventExpr::atom(realm.workspace().atom("E1").unwrap());
        let system = compile(
            &realm,
            &[Assertion::PrevisionInterval {
                expr: e1.clone(),
                lo: ratio(1, 4),
                hi: ratio(1, 2),
            }],
        )
        .unwrap();
        assert_eq!(system.linear_ineq.len(), 2);
        assert_eq!(system.linear_ineq[0].row, ints(&[0, 0, -1, -1]));
        assert_eq!(system.linear_ineq[0].rhs, ratio(-1, 4));
        assert_eq!(system.linear_ineq[1].row, ints(&[0, 0, 1, 1]));
        assert_eq!(system.linear_ineq[1].rhs, ratio(1, 2));
        let err = compile(
            &realm,
            &[Assertion::PrevisionInterval {
                expr: e1,
                lo: ratio(1, 2),
                hi: ratio(1, 4),
            }],
        )
        .unwrap_err();
        assert!(matches!(err, CompileError::EmptyInterval { .. }));
    }

    #[test]
    fn conditional_exchangeability_on_reader_realm() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let readers = vec![
            ws.atom("D1").unwrap(),
            ws.atom("D2").unwrap(),
            ws.atom("D3").unwrap(),
        ];
        let f = EventExpr::atom(ws.atom("F").unwrap());
        let system = compile(
            &realm,
            &[
                Assertion::Exchangeable {
                    atoms: readers.clone(),
                    given: Some(f.clone()),
                },
                Assertion::Exchangeable {
                    atoms: readers.clone(),
                    given: Some(EventExpr::not(f)),
                },
            ],
        )
        .unwrap();
        // Each conditioning class has a 3-cell orbit at one positive reader
        // and another at two, so 2 + 2 equalities per class plus the total
        // row.
        assert_eq!(system.linear_eq.len(), 9);
        // Canonical cells: given F, one positive reader = {9, 10, 12}.
        assert_eq!(system.linear_eq[1].row[9], integer(1));
        assert_eq!(system.linear_eq[1].row[10], integer(-1));
        assert_eq!(system.linear_eq[2].row[10], integer(1));
        assert_eq!(system.linear_eq[2].row[12], integer(-1));
        // Given ~F, one positive reader = {1, 2, 4}.
        assert_eq!(system.linear_eq[5].row[1], integer(1));
        assert_eq!(system.linear_eq[5].row[2], integer(-1));
        // Overlapping conditioning event is rejected.
        let err = compile(
            &realm,
            &[Assertion::Exchangeable {
                atoms: readers,
                given: Some(EventExpr::atom(ws.atom("D1").unwrap())),
            }],
        )
        .unwrap_err();
        assert!(matches!(err, CompileError::ExchangeabilityOverlap(_)));
    }

    #[test]
    fn string_probabilities_follow_the_sum_distribution() {
        let half = ratio(1, 2);
        let dist = SumDistribution::new(vec![ratio(1, 4), half, ratio(1, 4)]).unwrap();
        assert_eq!(dist.string_probability(1).unwrap(), ratio(1, 4));

        let iid = SumDistribution::iid(3, &ratio(1, 2)).unwrap();
        assert_eq!(iid.string_probability(2).unwrap(), ratio(1, 8));

        let dist = SumDistribution::new(vec![
            ratio(1, 10),
            ratio(2, 10),
            ratio(3, 10),
            ratio(4, 10),
        ])
        .unwrap();
        assert_eq!(dist.string_probability(2).unwrap(), ratio(1, 10));
        assert!(dist.string_probability(4).is_err());
        assert!(SumDistribution::new(vec![ratio(1, 2), ratio(1, 4)]).is_err());
    }

    #[test]
    fn product_measure_masses() {
        let realm = pair_realm();
        let ws = realm.workspace();
        let atoms = [ws.atom("E1").unwrap(), ws.atom("E2").unwrap()];
        let q = iid_cell_masses(&realm, &atoms, &ratio(1, 2), None).unwrap();
        assert_eq!(q, vec![ratio(1, 4); 4]);

        let ws3 = Workspace::new(["A", "B", "C"]).unwrap();
        let realm3 = enumerate_realm(
            &ws3,
            vec![Quantity::event("A", EventExpr::atom(ws3.atom("A").unwrap()))],
            None,
        )
        .unwrap();
        let all = [
            ws3.atom("A").unwrap(),
            ws3.atom("B").unwrap(),
            ws3.atom("C").unwrap(),
        ];
        let q = iid_cell_masses(&realm3, &all, &integer(1), None).unwrap();
        assert!(q[..7].iter().all(|m| m.is_zero()));
        assert_eq!(q[7], integer(1));
    }

    #[test]
    fn split_product_measure_masses() {
        let ws = Workspace::new(["C", "X1", "X2"]).unwrap();
        let realm = enumerate_realm(
            &ws,
            vec![Quantity::event("C", EventExpr::atom(ws.atom("C").unwrap()))],
            None,
        )
        .unwrap();
        let split = IidConditioning {
            atom: ws.atom("C").unwrap(),
            prob: ratio(3, 10),
            theta_complement: ratio(1, 5),
        };
        let q = iid_cell_masses(
            &realm,
            &[ws.atom("X1").unwrap(), ws.atom("X2").unwrap()],
            &ratio(3, 5),
            Some(&split),
        )
        .unwrap();
        // Cell C=1, X1=1, X2=0 has canonical index 6: .3 * .6 * .4.
        assert_eq!(q[6], ratio(3, 10) * ratio(3, 5) * ratio(2, 5));
        // Cell C=0, X1=0, X2=1 has canonical index 1: .7 * .8 * .2.
        assert_eq!(q[1], ratio(7, 10) * ratio(4, 5) * ratio(1, 5));
        let total: Rational = q.iter().sum();
        assert!(total.is_one());
        // Leaving an atom out of the specification is an error.
        let err = iid_cell_masses(&realm, &[ws.atom("X1").unwrap()], &ratio(3, 5), Some(&split))
            .unwrap_err();
        assert!(matches!(err, CompileError::UnspecifiedAtom(_)));
    }

    #[test]
    fn split_product_measure_satisfies_exchangeability() {
        let realm = reader_realm();
        let ws = realm.workspace();
        let readers = vec![
            ws.atom("D1").unwrap(),
            ws.atom("D2").unwrap(),
            ws.atom("D3").unwrap(),
        ];
        let f = EventExpr::atom(ws.atom("F").unwrap());
        let system = compile(
            &realm,
            &[
                Assertion::Exchangeable {
                    atoms: readers.clone(),
                    given: Some(f.clone()),
                },
                Assertion::Exchangeable {
                    atoms: readers.clone(),
                    given: Some(EventExpr::not(f)),
                },
            ],
        )
        .unwrap();
        let split = IidConditioning {
            atom: ws.atom("F").unwrap(),
            prob: ratio(126, 1000),
            theta_complement: ratio(42, 1000),
        };
        let q = iid_cell_masses(&realm, &readers, &ratio(82, 100), Some(&split)).unwrap();
        let qf: Vec<f64> = q.iter().map(to_f64).collect();
        assert!(system.satisfied_by(&qf, 1e-12));
    }
}

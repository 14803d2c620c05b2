//! Worked study: accuracy of median radiograph diagnoses of asbestosis.
//!
//! Three readers each classify the same chest film. `F` marks actual
//! fibrosis, `D1`..`D3` the readers' positive calls, `D*` the median
//! diagnosis (at least two positive calls) and `S*` a split decision
//! (exactly two). Historical screening data pin `P(D*) = .12` and
//! `P(S*|D*) = .42`; everything else is judgment, expressed either as a
//! two-class conditional-independence model or as conditional
//! exchangeability plus a partial ordering of seventeen conditional
//! probabilities. This module builds those assertion sets, solves the
//! independence model exactly, and computes the certified accuracy tables
//! that the two approaches imply.

use crate::assertions::{
    compile, iid_cell_masses, Assertion, CompileError, IidConditioning, OrderingSide,
};
use crate::events::{enumerate_realm, EventError, EventExpr, Quantity, Realm, Workspace};
use crate::numeric::{integer, ratio, Rational};
use crate::solver::{bounds, SolveError, SolveStatus, SolverConfig, Target};
use rayon::prelude::*;
use thiserror::Error;

/// Canonical configuration indices in the order the study lists its
/// sixteen columns: grouped by the number of positive calls, the
/// no-fibrosis block of each count before the fibrosis block.
pub const COLUMN_ORDER: [usize; 16] = [0, 8, 4, 2, 1, 12, 10, 9, 3, 5, 6, 11, 13, 14, 7, 15];

#[derive(Debug, Error)]
pub enum StudyError {
    /// The two-class independence model has no solution with class
    /// probability and complement success rate both inside (0, 1).
    #[error("no conditional-independence solution for p = {p}")]
    NoRoot { p: f64 },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// The six quantities of the study over atoms F, D1, D2, D3, with columns
/// in the classic printed order.
pub fn build_realm() -> Realm {
    let ws = Workspace::new(["F", "D1", "D2", "D3"]).expect("fixed atom list");
    let f = EventExpr::atom(ws.atom("F").unwrap());
    let d1 = EventExpr::atom(ws.atom("D1").unwrap());
    let d2 = EventExpr::atom(ws.atom("D2").unwrap());
    let d3 = EventExpr::atom(ws.atom("D3").unwrap());
    let total = EventExpr::sum(vec![d1.clone(), d2.clone(), d3.clone()]);
    let dstar = EventExpr::threshold(total.clone(), integer(2));
    let sstar = EventExpr::product(vec![
        dstar.clone(),
        EventExpr::not(EventExpr::threshold(total, integer(3))),
    ]);
    enumerate_realm(
        &ws,
        vec![
            Quantity::event("F", f),
            Quantity::event("D1", d1),
            Quantity::event("D2", d2),
            Quantity::event("D3", d3),
            Quantity::event("D*", dstar),
            Quantity::event("S*", sstar),
        ],
        Some(&COLUMN_ORDER),
    )
    .expect("fixed study realm")
}

fn atom_expr(realm: &Realm, name: &str) -> EventExpr {
    EventExpr::atom(realm.workspace().atom(name).expect("study atom"))
}

fn quantity_expr(realm: &Realm, name: &str) -> EventExpr {
    let idx = realm.quantity_index(name).expect("study quantity");
    realm.quantities()[idx].expr.clone()
}

fn all_of(factors: Vec<EventExpr>) -> EventExpr {
    EventExpr::product(factors)
}

/// The judgments every column of the study shares: total probability, the
/// two screening rates, and exchangeability of the three readers within
/// each disease class. Compiling them yields eleven equality rows.
pub fn base_assertions(realm: &Realm) -> Vec<Assertion> {
    let ws = realm.workspace();
    let readers = vec![
        ws.atom("D1").unwrap(),
        ws.atom("D2").unwrap(),
        ws.atom("D3").unwrap(),
    ];
    let f = atom_expr(realm, "F");
    let dstar = quantity_expr(realm, "D*");
    let sstar = quantity_expr(realm, "S*");
    vec![
        Assertion::Prevision {
            expr: dstar.clone(),
            value: ratio(12, 100),
        },
        // P(S* and D*); S* entails D*, so this also pins P(S*|D*) = .42.
        Assertion::Prevision {
            expr: EventExpr::product(vec![sstar, dstar]),
            value: ratio(504, 10_000),
        },
        Assertion::Exchangeable {
            atoms: readers.clone(),
            given: Some(f.clone()),
        },
        Assertion::Exchangeable {
            atoms: readers,
            given: Some(EventExpr::not(f)),
        },
    ]
}

/// The partial ordering of conditional probabilities: seventeen judgments
/// that a reader's positive call becomes no less credible as the evidence
/// for fibrosis strengthens. Two of them bound a probability by the
/// constant one half; the other fifteen compare two conditionals and
/// compile to quadratic rows.
pub fn fic_inequalities(realm: &Realm) -> Vec<Assertion> {
    let f = atom_expr(realm, "F");
    let nf = EventExpr::not(f.clone());
    let d1 = atom_expr(realm, "D1");
    let nd1 = EventExpr::not(d1.clone());
    let d2 = atom_expr(realm, "D2");
    let nd2 = EventExpr::not(d2.clone());
    let d3 = atom_expr(realm, "D3");
    let half = ratio(1, 2);

    let cond = |expr: &EventExpr, given: Vec<EventExpr>| {
        OrderingSide::conditional(expr.clone(), all_of(given))
    };
    let le = |lesser: OrderingSide, greater: OrderingSide| Assertion::Ordering { lesser, greater };

    vec![
        // A third positive call, conditioned on ever-stronger records:
        // no record at all, then a healthy film, then fibrosis, then
        // fibrosis with concurring readers.
        le(
            cond(&d3, vec![nd2.clone(), nd1.clone(), nf.clone()]),
            cond(&d3, vec![nd1.clone(), nf.clone()]),
        ),
        le(
            cond(&d3, vec![nd1.clone(), nf.clone()]),
            cond(&d3, vec![nf.clone()]),
        ),
        le(cond(&d3, vec![nf.clone()]), cond(&d3, vec![f.clone()])),
        le(
            cond(&d3, vec![f.clone()]),
            cond(&d3, vec![d1.clone(), f.clone()]),
        ),
        le(
            cond(&d3, vec![d1.clone(), f.clone()]),
            cond(&d3, vec![d2.clone(), d1.clone(), f.clone()]),
        ),
        // The second reader, split by the first reader's call and the film.
        le(
            cond(&d2, vec![nd1.clone(), nf.clone()]),
            cond(&d2, vec![nd1.clone(), f.clone()]),
        ),
        le(
            cond(&d2, vec![nd1.clone(), f.clone()]),
            cond(&d2, vec![f.clone()]),
        ),
        le(
            cond(&d2, vec![nf.clone()]),
            cond(&d2, vec![d1.clone(), nf.clone()]),
        ),
        le(
            cond(&d2, vec![d1.clone(), nf.clone()]),
            cond(&d2, vec![d1.clone(), f.clone()]),
        ),
        // The third reader against mixed records on each film class.
        le(
            cond(&d3, vec![nd2.clone(), nd1.clone(), f.clone()]),
            cond(&d3, vec![nd1.clone(), f.clone()]),
        ),
        le(
            cond(&d3, vec![nd1.clone(), f.clone()]),
            cond(&d3, vec![nd1.clone(), d2.clone(), f.clone()]),
        ),
        le(
            cond(&d3, vec![nd2.clone(), d1.clone(), nf.clone()]),
            cond(&d3, vec![d1.clone(), nf.clone()]),
        ),
        le(
            cond(&d3, vec![d1.clone(), nf.clone()]),
            cond(&d3, vec![d2.clone(), d1.clone(), nf.clone()]),
        ),
        // Split records centered on an even chance: one concurring and one
        // dissenting reader leave the third call no better than a coin on
        // a healthy film, no worse than one on a fibrotic film.
        le(
            cond(&d3, vec![nd1.clone(), nf.clone()]),
            cond(&d3, vec![nd1.clone(), d2.clone(), nf.clone()]),
        ),
        le(
            cond(&d3, vec![nd1, d2.clone(), nf.clone()]),
            OrderingSide::constant(half.clone()),
        ),
        le(
            OrderingSide::constant(half),
            cond(&d3, vec![nd2.clone(), d1.clone(), f.clone()]),
        ),
        le(
            cond(&d3, vec![nd2, d1.clone(), f.clone()]),
            cond(&d3, vec![d1, f]),
        ),
    ]
}

/// Identifies one column of the accuracy tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioColumn {
    /// Conditional independence with P(Di|F) = .82.
    Tm82,
    /// Conditional exchangeability, the seventeen orderings, P(Di|F) = .82.
    CondExFic82,
    /// Conditional independence with P(Di|F) = .90.
    Tm90,
    /// Conditional exchangeability, the seventeen orderings, P(Di|F) = .90.
    CondExFic90,
    /// Exchangeability and orderings with interval inputs
    /// P(Di|F), P(~Di|~F) in [.82, .90].
    CondExBnd,
    /// CondExBnd sharpened by P(F|Di) >= .50 for each reader.
    CondExBPlus,
}

impl ScenarioColumn {
    pub const ALL: [ScenarioColumn; 6] = [
        ScenarioColumn::Tm82,
        ScenarioColumn::CondExFic82,
        ScenarioColumn::Tm90,
        ScenarioColumn::CondExFic90,
        ScenarioColumn::CondExBnd,
        ScenarioColumn::CondExBPlus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioColumn::Tm82 => "TM82",
            ScenarioColumn::CondExFic82 => "CondExFIC82",
            ScenarioColumn::Tm90 => "TM90",
            ScenarioColumn::CondExFic90 => "CondExFIC90",
            ScenarioColumn::CondExBnd => "CondExBnd",
            ScenarioColumn::CondExBPlus => "CondExBPlus",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        ScenarioColumn::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
    }

    /// Whether the column is a point model rather than a bounding problem.
    pub fn is_point_model(self) -> bool {
        matches!(self, ScenarioColumn::Tm82 | ScenarioColumn::Tm90)
    }

    /// Rows of the probability table whose entries echo pinned inputs
    /// (marked with a star in the classic layout).
    pub fn starred_rows(self) -> [bool; 9] {
        let mut rows = [false; 9];
        match self {
            ScenarioColumn::Tm82 | ScenarioColumn::Tm90 => {
                rows[0] = true;
                rows[1] = true;
                rows[6] = true;
                rows[7] = true;
            }
            ScenarioColumn::CondExFic82 | ScenarioColumn::CondExFic90 => rows[0] = true,
            _ => {}
        }
        rows
    }
}

/// One column's worth of judgments.
#[derive(Debug, Clone)]
pub struct AsbestosScenario {
    pub column: ScenarioColumn,
    pub assertions: Vec<Assertion>,
}

/// The assertion set behind a table column. Point-model columns carry the
/// judgments they share with the matching bounding column; their remaining
/// structure (independence across readers) is applied by
/// `tm_independence_solution`, not by constraints.
pub fn scenario(realm: &Realm, column: ScenarioColumn) -> AsbestosScenario {
    let f = atom_expr(realm, "F");
    let nf = EventExpr::not(f.clone());
    let readers: Vec<EventExpr> = ["D1", "D2", "D3"]
        .iter()
        .map(|n| atom_expr(realm, n))
        .collect();

    let mut assertions = base_assertions(realm);
    let pin_readers = |assertions: &mut Vec<Assertion>, value: Rational| {
        for d in &readers {
            assertions.push(Assertion::Conditional {
                expr: d.clone(),
                given: f.clone(),
                value: value.clone(),
            });
        }
    };
    match column {
        ScenarioColumn::Tm82 => pin_readers(&mut assertions, ratio(82, 100)),
        ScenarioColumn::Tm90 => pin_readers(&mut assertions, ratio(90, 100)),
        ScenarioColumn::CondExFic82 => {
            assertions.extend(fic_inequalities(realm));
            pin_readers(&mut assertions, ratio(82, 100));
        }
        ScenarioColumn::CondExFic90 => {
            assertions.extend(fic_inequalities(realm));
            pin_readers(&mut assertions, ratio(90, 100));
        }
        ScenarioColumn::CondExBnd | ScenarioColumn::CondExBPlus => {
            assertions.extend(fic_inequalities(realm));
            for d in &readers {
                assertions.push(Assertion::ConditionalInterval {
                    expr: d.clone(),
                    given: f.clone(),
                    lo: ratio(82, 100),
                    hi: ratio(90, 100),
                });
                assertions.push(Assertion::ConditionalInterval {
                    expr: EventExpr::not(d.clone()),
                    given: nf.clone(),
                    lo: ratio(82, 100),
                    hi: ratio(90, 100),
                });
            }
            if column == ScenarioColumn::CondExBPlus {
                for d in &readers {
                    // P(F|Di) >= .50, i.e. P(F|Di) in [.5, 1].
                    assertions.push(Assertion::ConditionalInterval {
                        expr: f.clone(),
                        given: d.clone(),
                        lo: ratio(1, 2),
                        hi: integer(1),
                    });
                }
            }
        }
    }
    AsbestosScenario { column, assertions }
}

/// One table entry: a certified interval, or a point when the endpoints
/// coincide. `starred` echoes the classic layout's marker for pinned
/// inputs.
#[derive(Debug, Clone)]
pub struct TableCell {
    pub lower: f64,
    pub upper: f64,
    pub status: SolveStatus,
    pub starred: bool,
}

impl TableCell {
    fn point(value: f64, starred: bool) -> Self {
        TableCell {
            lower: value,
            upper: value,
            status: SolveStatus::Optimal,
            starred,
        }
    }

    /// Whether the cell prints as a single number at 3 decimals.
    pub fn is_point(&self) -> bool {
        (self.upper - self.lower).abs() < 5e-4
    }
}

pub const TABLE1_ROWS: [&str; 9] = [
    "p = P(Di|F)",
    "1-pf = P(~Di|~F)",
    "PV+ind = P(F|Di)",
    "PV-ind = P(~F|~Di)",
    "P(D*|F)",
    "P(~D*|~F)",
    "PV+ = P(F|D*)",
    "PV- = P(~F|~D*)",
    "P(F)",
];

pub const TABLE2_ROWS: [&str; 4] = [
    "P(D*|F) - P(Di|F)",
    "P(~D*|~F) - P(~Di|~F)",
    "P(F|D*) - P(F|Di)",
    "P(~F|~D*) - P(~F|~Di)",
];

/// Accuracy summary for one column: the nine probability rows and the four
/// median-versus-individual difference rows.
#[derive(Debug, Clone)]
pub struct AccuracyProfile {
    pub column: ScenarioColumn,
    pub table1: Vec<TableCell>,
    pub table2: Vec<TableCell>,
}

/// Exact solution of the two-class conditional-independence model.
#[derive(Debug, Clone)]
pub struct IndependenceSolution {
    /// Given per-reader sensitivity P(Di|F).
    pub p: f64,
    /// Solved fibrosis prevalence P(F).
    pub pi: f64,
    /// Solved per-reader false-positive rate P(Di|~F).
    pub p_f: f64,
    /// Cell masses in study column order.
    pub q: Vec<Rational>,
    pub profile: AccuracyProfile,
}

/// P(at least 2 of 3 iid successes).
fn maj3(x: f64) -> f64 {
    3.0 * x * x - 2.0 * x * x * x
}

/// P(exactly 2 of 3 iid successes).
fn split3(x: f64) -> f64 {
    3.0 * x * x * (1.0 - x)
}

/// Solves the independence model: readers iid within each disease class
/// with success rate `p` given fibrosis and an unknown rate given none,
/// matched to the screening rates P(D*) = `p_dstar` and
/// P(S* and D*) = `p_split`. Scans for a sign change in the residual of the
/// split-rate equation, then bisects.
pub fn tm_independence_solution(
    p: f64,
    p_dstar: f64,
    p_split: f64,
    column: ScenarioColumn,
) -> Result<IndependenceSolution, StudyError> {
    if !(0.0 < p && p < 1.0) {
        return Err(StudyError::NoRoot { p });
    }
    // pi follows from the false-positive rate via the median-rate equation;
    // valid only while it lands in (0, 1).
    let pi_of = |pf: f64| -> Option<f64> {
        let denom = maj3(p) - maj3(pf);
        if denom.abs() < 1e-12 {
            return None;
        }
        let pi = (p_dstar - maj3(pf)) / denom;
        (1e-9..=1.0 - 1e-9).contains(&pi).then_some(pi)
    };
    let residual = |pf: f64| -> Option<f64> {
        let pi = pi_of(pf)?;
        Some(pi * split3(p) + (1.0 - pi) * split3(pf) - p_split)
    };

    const STEPS: usize = 4000;
    let width = p - 2e-9;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for k in 0..=STEPS {
        let pf = 1e-9 + width * (k as f64) / (STEPS as f64);
        let Some(r) = residual(pf) else {
            prev = None;
            continue;
        };
        if let Some((pf0, r0)) = prev {
            if r0 == 0.0 || r0 * r < 0.0 {
                bracket = Some((pf0, pf));
                break;
            }
        }
        prev = Some((pf, r));
    }
    let (mut lo, mut hi) = bracket.ok_or(StudyError::NoRoot { p })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (Some(rl), Some(rm)) = (residual(lo), residual(mid)) else {
            return Err(StudyError::NoRoot { p });
        };
        if rl * rm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let p_f = 0.5 * (lo + hi);
    let pi = pi_of(p_f).ok_or(StudyError::NoRoot { p })?;

    let realm = build_realm();
    let ws = realm.workspace();
    let to_rat = |x: f64| Rational::from_float(x).expect("finite probability");
    let q = iid_cell_masses(
        &realm,
        &[
            ws.atom("D1").unwrap(),
            ws.atom("D2").unwrap(),
            ws.atom("D3").unwrap(),
        ],
        &to_rat(p),
        Some(&IidConditioning {
            atom: ws.atom("F").unwrap(),
            prob: to_rat(pi),
            theta_complement: to_rat(p_f),
        }),
    )?;

    let profile = point_profile(&realm, &q, column)?;
    Ok(IndependenceSolution {
        p,
        pi,
        p_f,
        q,
        profile,
    })
}

/// Point accuracy profile of a fully specified mass vector.
fn point_profile(
    realm: &Realm,
    q: &[Rational],
    column: ScenarioColumn,
) -> Result<AccuracyProfile, StudyError> {
    let qf: Vec<f64> = crate::numeric::row_to_f64(q);
    let value = |t: &Target| t.evaluate(&qf).unwrap_or(f64::NAN);
    let t1 = table1_targets(realm)?;
    let t2 = table2_targets(realm)?;
    let starred = column.starred_rows();
    let table1: Vec<TableCell> = t1
        .iter()
        .zip(starred)
        .map(|(t, s)| TableCell::point(value(t), s))
        .collect();
    let table2: Vec<TableCell> = t2.iter().map(|t| TableCell::point(value(t), false)).collect();
    Ok(AccuracyProfile {
        column,
        table1,
        table2,
    })
}

/// The nine probability targets, in table row order.
pub fn table1_targets(realm: &Realm) -> Result<Vec<Target>, StudyError> {
    let f = atom_expr(realm, "F");
    let nf = EventExpr::not(f.clone());
    let d1 = atom_expr(realm, "D1");
    let nd1 = EventExpr::not(d1.clone());
    let dstar = quantity_expr(realm, "D*");
    let ndstar = EventExpr::not(dstar.clone());
    Ok(vec![
        Target::conditional(realm, &d1, &f)?,
        Target::conditional(realm, &nd1, &nf)?,
        Target::conditional(realm, &f, &d1)?,
        Target::conditional(realm, &nf, &nd1)?,
        Target::conditional(realm, &dstar, &f)?,
        Target::conditional(realm, &ndstar, &nf)?,
        Target::conditional(realm, &f, &dstar)?,
        Target::conditional(realm, &nf, &ndstar)?,
        Target::prevision(realm, &f)?,
    ])
}

/// The four difference targets: median accuracy minus single-reader
/// accuracy, each optimized as one joint target.
pub fn table2_targets(realm: &Realm) -> Result<Vec<Target>, StudyError> {
    let f = atom_expr(realm, "F");
    let nf = EventExpr::not(f.clone());
    let d1 = atom_expr(realm, "D1");
    let nd1 = EventExpr::not(d1.clone());
    let dstar = quantity_expr(realm, "D*");
    let ndstar = EventExpr::not(dstar.clone());
    Ok(vec![
        Target::conditional_difference(realm, &dstar, &f, &d1, &f)?,
        Target::conditional_difference(realm, &ndstar, &nf, &nd1, &nf)?,
        Target::conditional_difference(realm, &f, &dstar, &f, &d1)?,
        Target::conditional_difference(realm, &nf, &ndstar, &nf, &nd1)?,
    ])
}

/// Computes the full accuracy profile of one column: exact evaluation for
/// the point-model columns, certified bounds for the rest. Bound targets
/// run in parallel; results are deterministic regardless of thread count.
pub fn column_profile(
    realm: &Realm,
    column: ScenarioColumn,
    cfg: &SolverConfig,
) -> Result<AccuracyProfile, StudyError> {
    match column {
        ScenarioColumn::Tm82 => {
            Ok(tm_independence_solution(0.82, 0.12, 0.0504, column)?.profile)
        }
        ScenarioColumn::Tm90 => {
            Ok(tm_independence_solution(0.90, 0.12, 0.0504, column)?.profile)
        }
        _ => {
            let sc = scenario(realm, column);
            let system = compile(realm, &sc.assertions)?;
            let t1 = table1_targets(realm)?;
            let t2 = table2_targets(realm)?;
            let starred = column.starred_rows();
            let n1 = t1.len();
            let all: Vec<Target> = t1.into_iter().chain(t2).collect();
            let solved: Result<Vec<TableCell>, SolveError> = all
                .par_iter()
                .enumerate()
                .map(|(i, target)| {
                    let out = bounds(&system, target, cfg)?;
                    Ok(TableCell {
                        lower: out.lower,
                        upper: out.upper,
                        status: out.status,
                        starred: i < n1 && starred[i],
                    })
                })
                .collect();
            let mut cells = solved?;
            let table2 = cells.split_off(n1);
            Ok(AccuracyProfile {
                column,
                table1: cells,
                table2,
            })
        }
    }
}

/// A rendered table: row labels plus one profile per column.
#[derive(Debug, Clone)]
pub struct StudyTable {
    pub rows: &'static [&'static str],
    pub columns: Vec<AccuracyProfile>,
}

/// Computes both accuracy tables across all six columns.
pub fn tables(cfg: &SolverConfig) -> Result<(StudyTable, StudyTable), StudyError> {
    let realm = build_realm();
    let profiles: Result<Vec<AccuracyProfile>, StudyError> = ScenarioColumn::ALL
        .into_iter()
        .map(|c| column_profile(&realm, c, cfg))
        .collect();
    let profiles = profiles?;
    Ok((
        StudyTable {
            rows: &TABLE1_ROWS,
            columns: profiles.clone(),
        },
        StudyTable {
            rows: &TABLE2_ROWS,
            columns: profiles,
        },
    ))
}

/// Bounds on the nine probability rows for all six columns.
pub fn table1(cfg: &SolverConfig) -> Result<StudyTable, StudyError> {
    Ok(tables(cfg)?.0)
}

/// Bounds on the four difference rows for all six columns.
pub fn table2(cfg: &SolverConfig) -> Result<StudyTable, StudyError> {
    Ok(tables(cfg)?.1)
}

/// A reference table entry this pack is expected to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefEntry {
    Point(f64),
    Interval(f64, f64),
}

impl RefEntry {
    /// Absolute tolerance the computed cell must meet, per endpoint.
    pub fn tolerance(self) -> f64 {
        match self {
            RefEntry::Point(_) => 0.005,
            RefEntry::Interval(..) => 0.01,
        }
    }

    /// Whether `cell` matches this entry within its tolerance.
    pub fn matches(self, cell: &TableCell) -> bool {
        let tol = self.tolerance();
        match self {
            RefEntry::Point(v) => (cell.lower - v).abs() <= tol && (cell.upper - v).abs() <= tol,
            RefEntry::Interval(lo, hi) => {
                (cell.lower - lo).abs() <= tol && (cell.upper - hi).abs() <= tol
            }
        }
    }
}

use RefEntry::{Interval as I, Point as P};

/// Reference values for the probability table, column order as in
/// `ScenarioColumn::ALL`.
pub const REFERENCE_TABLE1: [[RefEntry; 6]; 9] = [
    [
        P(0.82),
        P(0.82),
        P(0.90),
        P(0.90),
        I(0.82, 0.90),
        I(0.82, 0.846),
    ],
    [
        P(0.958),
        I(0.797, 0.992),
        P(0.894),
        I(0.797, 0.956),
        I(0.82, 0.90),
        I(0.898, 0.90),
    ],
    [
        P(0.734),
        I(0.000, 0.932),
        P(0.466),
        I(0.000, 0.657),
        I(0.000, 0.506),
        I(0.50, 0.506),
    ],
    [
        P(0.974),
        I(0.973, 1.00),
        P(0.989),
        I(0.988, 1.00),
        I(0.975, 1.00),
        I(0.975, 0.981),
    ],
    [
        P(0.914),
        I(0.820, 0.915),
        P(0.972),
        I(0.900, 0.972),
        I(0.82, 0.972),
        I(0.852, 0.898),
    ],
    [
        P(0.995),
        I(0.880, 0.995),
        P(0.968),
        I(0.880, 0.969),
        I(0.880, 0.972),
        I(0.969, 0.972),
    ],
    [
        P(0.961),
        I(0.000, 0.961),
        P(0.761),
        I(0.000, 0.762),
        I(0.000, 0.793),
        I(0.772, 0.793),
    ],
    [
        P(0.987),
        I(0.979, 1.00),
        P(0.997),
        I(0.990, 1.00),
        I(0.979, 1.00),
        I(0.981, 0.988),
    ],
    [
        P(0.126),
        I(0.000, 0.127),
        P(0.094),
        I(0.000, 0.094),
        I(0.000, 0.111),
        I(0.105, 0.111),
    ],
];

/// Reference values for the difference table.
pub const REFERENCE_TABLE2: [[RefEntry; 6]; 4] = [
    [
        P(0.094),
        I(0.000, 0.095),
        P(0.072),
        I(0.000, 0.072),
        I(0.000, 0.095),
        I(0.032, 0.055),
    ],
    [
        P(0.037),
        I(0.000, 0.088),
        P(0.075),
        I(0.000, 0.088),
        I(0.000, 0.088),
        I(0.069, 0.073),
    ],
    [
        P(0.227),
        I(0.000, 0.299),
        P(0.294),
        I(0.000, 0.295),
        I(0.000, 0.299),
        I(0.272, 0.293),
    ],
    [
        P(0.014),
        I(0.000, 0.015),
        P(0.008),
        I(0.000, 0.009),
        I(0.000, 0.012),
        I(0.005, 0.009),
    ],
];

/// One computed cell that missed its reference value.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub table: usize,
    pub row: usize,
    pub column: ScenarioColumn,
    pub got: TableCell,
    pub want: RefEntry,
}

/// Compares computed tables against the reference values; empty means a
/// full reproduction within tolerance.
pub fn reference_mismatches(table1: &StudyTable, table2: &StudyTable) -> Vec<Mismatch> {
    let mut out = Vec::new();
    let mut scan = |idx: usize, table: &StudyTable, reference: &[[RefEntry; 6]]| {
        for (row, want_row) in reference.iter().enumerate() {
            for (col, profile) in table.columns.iter().enumerate() {
                let cells = if idx == 1 {
                    &profile.table1
                } else {
                    &profile.table2
                };
                let got = &cells[row];
                if !want_row[col].matches(got) {
                    out.push(Mismatch {
                        table: idx,
                        row,
                        column: profile.column,
                        got: got.clone(),
                        want: want_row[col],
                    });
                }
            }
        }
    };
    scan(1, table1, &REFERENCE_TABLE1);
    scan(2, table2, &REFERENCE_TABLE2);
    out
}

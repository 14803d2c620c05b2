//! Bound computation over compiled constraint systems.
//!
//! Linear targets over linear systems go straight to the simplex. Anything
//! involving product constraints or ratio targets routes through a spatial
//! branch-and-bound whose certificates are one-sided: reported intervals
//! always contain the exact bound, with `certified_gap` measuring how much
//! wider they might be.

pub mod bb;
pub mod fractional;
pub mod relax;
pub mod simplex;

use crate::assertions::ConstraintSystem;
use crate::events::{conjunction, EventError, EventExpr, Realm};
use crate::numeric::{row_to_f64, Rational};
use bb::{BbConfig, BbStatus, EarlyStop, QuadObjective};
use fractional::{CcOutcome, InfimumResult, ParametricTarget, RatioSearch};
use num_traits::{Signed, Zero};
use relax::{ExtendedProblem, RootStatus};
use simplex::{LpOutcome, LpProblem, SimplexStall};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Violation allowed when certifying points of linear systems.
    pub feas_tol_linear: f64,
    /// Violation allowed when certifying points of product systems.
    pub feas_tol_bilinear: f64,
    /// Width at which a certified interval counts as closed.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Starting points tried per polish round in branch-and-bound.
    pub polish_starts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol_linear: 1e-9,
            feas_tol_bilinear: 1e-8,
            gap_tol: 1e-4,
            node_limit: 500_000,
            time_limit: None,
            polish_starts: 3,
        }
    }
}

impl SolverConfig {
    fn feas_tol_for(&self, system: &ConstraintSystem) -> f64 {
        if system.is_linear() {
            self.feas_tol_linear
        } else {
            self.feas_tol_bilinear
        }
    }

    fn bb(&self, system: &ConstraintSystem) -> BbConfig {
        self.bb_raw(self.feas_tol_for(system))
    }

    fn bb_raw(&self, feas_tol: f64) -> BbConfig {
        BbConfig {
            gap_tol: self.gap_tol,
            feas_tol,
            node_limit: self.node_limit,
            time_limit: self.time_limit,
            polish_starts: self.polish_starts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Both endpoints are exact up to floating arithmetic.
    Optimal,
    /// Endpoints certified within `certified_gap`; `to_tolerance` says
    /// whether that gap met the configured tolerance.
    GapClosed { to_tolerance: bool },
    /// The assertions admit no probability vector at all.
    Infeasible,
    /// The conditioning event has probability zero everywhere, so the
    /// target ratio is undefined.
    UnboundedDenominator,
}

/// Certified interval for a target, with the points that (nearly) attain
/// each endpoint when the solver found them.
#[derive(Debug, Clone)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub status: SolveStatus,
    pub witness_min: Option<Vec<f64>>,
    pub witness_max: Option<Vec<f64>>,
    /// Whether a feasible point sits at the endpoint (rather than the
    /// endpoint being a closure value approached but never reached).
    pub lower_attained: bool,
    pub upper_attained: bool,
    /// Worst-case distance between a reported endpoint and the exact one.
    pub certified_gap: f64,
}

impl BoundsResult {
    fn infeasible() -> Self {
        BoundsResult {
            lower: f64::NAN,
            upper: f64::NAN,
            status: SolveStatus::Infeasible,
            witness_min: None,
            witness_max: None,
            lower_attained: false,
            upper_attained: false,
            certified_gap: 0.0,
        }
    }

    fn undefined_ratio() -> Self {
        BoundsResult {
            lower: f64::NAN,
            upper: f64::NAN,
            status: SolveStatus::UnboundedDenominator,
            witness_min: None,
            witness_max: None,
            lower_attained: false,
            upper_attained: false,
            certified_gap: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("the LP path needs a linear system; this one carries {products} product constraints")]
    BilinearPresent { products: usize },
    #[error("target has {got} cells but the system has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("conditional target puts weight outside its conditioning event ({0})")]
    TargetSupport(String),
    #[error("search limits hit before a verdict: {0}")]
    Undecided(String),
    #[error(transparent)]
    Event(#[from] EventError),
}

impl From<SimplexStall> for SolveError {
    fn from(e: SimplexStall) -> Self {
        SolveError::Numerical(format!("simplex stalled after {} pivots", e.0))
    }
}

/// What a bounds query asks for, as rows over the partition cells.
#[derive(Debug, Clone)]
pub enum Target {
    /// Prevision of a quantity: `row . q`.
    Linear { row: Vec<Rational> },
    /// Conditional prevision: `(num . q) / (den . q)`.
    Conditional { num: Vec<Rational>, den: Vec<Rational> },
    /// Difference of two conditional previsions.
    ConditionalDifference {
        n1: Vec<Rational>,
        d1: Vec<Rational>,
        n2: Vec<Rational>,
        d2: Vec<Rational>,
    },
}

impl Target {
    pub fn prevision(realm: &Realm, expr: &EventExpr) -> Result<Self, EventError> {
        Ok(Target::Linear {
            row: realm.indicator_row(expr)?,
        })
    }

    /// Prevision of a plain difference of two quantities.
    pub fn difference(realm: &Realm, a: &EventExpr, b: &EventExpr) -> Result<Self, EventError> {
        let ra = realm.indicator_row(a)?;
        let rb = realm.indicator_row(b)?;
        Ok(Target::Linear {
            row: ra.into_iter().zip(rb).map(|(x, y)| x - y).collect(),
        })
    }

    /// `P(expr | given)`; `given` must be an event.
    pub fn conditional(
        realm: &Realm,
        expr: &EventExpr,
        given: &EventExpr,
    ) -> Result<Self, EventError> {
        let joint = conjunction(expr, given, realm.workspace())?;
        Ok(Target::Conditional {
            num: realm.indicator_row(&joint)?,
            den: realm.indicator_row(given)?,
        })
    }

    /// `P(e1 | g1) - P(e2 | g2)`.
    pub fn conditional_difference(
        realm: &Realm,
        e1: &EventExpr,
        g1: &EventExpr,
        e2: &EventExpr,
        g2: &EventExpr,
    ) -> Result<Self, EventError> {
        let j1 = conjunction(e1, g1, realm.workspace())?;
        let j2 = conjunction(e2, g2, realm.workspace())?;
        Ok(Target::ConditionalDifference {
            n1: realm.indicator_row(&j1)?,
            d1: realm.indicator_row(g1)?,
            n2: realm.indicator_row(&j2)?,
            d2: realm.indicator_row(g2)?,
        })
    }

    /// True value at a probability vector, when every denominator carries
    /// enough mass to evaluate.
    pub fn evaluate(&self, q: &[f64]) -> Option<f64> {
        let dot = |row: &[Rational]| -> f64 {
            row.iter()
                .zip(q)
                .map(|(c, x)| crate::numeric::to_f64(c) * x)
                .sum()
        };
        match self {
            Target::Linear { row } => Some(dot(row)),
            Target::Conditional { num, den } => {
                let d = dot(den);
                (d >= 1e-9).then(|| dot(num) / d)
            }
            Target::ConditionalDifference { n1, d1, n2, d2 } => {
                let da = dot(d1);
                let db = dot(d2);
                (da >= 1e-9 && db >= 1e-9).then(|| dot(n1) / da - dot(n2) / db)
            }
        }
    }
}

fn check_dims(system: &ConstraintSystem, row: &[Rational]) -> Result<(), SolveError> {
    if row.len() != system.n_cells {
        return Err(SolveError::Dimension {
            expected: system.n_cells,
            got: row.len(),
        });
    }
    Ok(())
}

type Rows = Vec<(Vec<f64>, f64)>;

fn linear_rows(system: &ConstraintSystem) -> (Rows, Rows) {
    (
        system
            .linear_eq
            .iter()
            .map(|c| (c.row_f64(), c.rhs_f64()))
            .collect(),
        system
            .linear_ineq
            .iter()
            .map(|c| (c.row_f64(), c.rhs_f64()))
            .collect(),
    )
}

/// Exact bounds on a linear target over a linear system.
pub fn lp_bounds(
    system: &ConstraintSystem,
    row: &[Rational],
    _cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    if !system.is_linear() {
        return Err(SolveError::BilinearPresent {
            products: system.bilinear_ineq.len(),
        });
    }
    check_dims(system, row)?;
    let (eq, le) = linear_rows(system);
    let problem = LpProblem {
        n_vars: system.n_cells,
        objective: row_to_f64(row),
        eq,
        le,
    };
    let lo = simplex::solve(&problem)?;
    let hi = simplex::solve_max(&problem)?;
    let (lower, witness_min) = match lo {
        LpOutcome::Optimal { value, x } => (value, Some(x)),
        LpOutcome::Infeasible => return Ok(BoundsResult::infeasible()),
        LpOutcome::Unbounded => {
            return Err(SolveError::Numerical("linear target unbounded".into()))
        }
    };
    let (upper, witness_max) = match hi {
        LpOutcome::Optimal { value, x } => (value, Some(x)),
        LpOutcome::Infeasible => return Ok(BoundsResult::infeasible()),
        LpOutcome::Unbounded => {
            return Err(SolveError::Numerical("linear target unbounded".into()))
        }
    };
    Ok(BoundsResult {
        lower,
        upper,
        status: SolveStatus::Optimal,
        witness_min,
        witness_max,
        lower_attained: true,
        upper_attained: true,
        certified_gap: 0.0,
    })
}

/// Certified bounds on a linear target over any system, product
/// constraints included. Linear systems converge at the root node.
pub fn global_bounds(
    system: &ConstraintSystem,
    row: &[Rational],
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    check_dims(system, row)?;
    global_bounds_f64(system, row_to_f64(row), cfg)
}

fn global_bounds_f64(
    system: &ConstraintSystem,
    row_f: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    let (mut ext, _) = ExtendedProblem::build(system, &[]);
    if relax::tighten_root_box(&mut ext)? == RootStatus::Infeasible {
        return Ok(BoundsResult::infeasible());
    }
    let bb_cfg = cfg.bb(system);
    let negated: Vec<f64> = row_f.iter().map(|v| -v).collect();
    let min_run = bb::minimize(
        &ext,
        &QuadObjective::linear(row_f, ext.n_products()),
        &bb_cfg,
        &EarlyStop::none(),
    )?;
    if min_run.status == BbStatus::Infeasible {
        return Ok(BoundsResult::infeasible());
    }
    let max_run = bb::minimize(
        &ext,
        &QuadObjective::linear(negated, ext.n_products()),
        &bb_cfg,
        &EarlyStop::none(),
    )?;
    if max_run.status == BbStatus::Infeasible {
        return Ok(BoundsResult::infeasible());
    }

    let lower = min_run.lower_bound;
    let upper = -max_run.lower_bound;
    let gap_lo = min_run
        .incumbent
        .as_ref()
        .map_or(f64::INFINITY, |i| i.value - lower);
    let gap_hi = max_run
        .incumbent
        .as_ref()
        .map_or(f64::INFINITY, |i| upper - -i.value);
    let certified_gap = gap_lo.max(gap_hi).max(0.0);
    let limited = min_run.status == BbStatus::LimitReached
        || max_run.status == BbStatus::LimitReached;
    let status = if certified_gap == 0.0 {
        SolveStatus::Optimal
    } else {
        SolveStatus::GapClosed {
            to_tolerance: !limited && certified_gap <= cfg.gap_tol,
        }
    };
    Ok(BoundsResult {
        lower,
        upper,
        status,
        witness_min: min_run.incumbent.as_ref().map(|i| i.q.clone()),
        witness_max: max_run.incumbent.as_ref().map(|i| i.q.clone()),
        lower_attained: gap_lo <= cfg.gap_tol.max(1e-9),
        upper_attained: gap_hi <= cfg.gap_tol.max(1e-9),
        certified_gap,
    })
}

/// Whether the asserted constraints admit any probability vector.
#[derive(Debug, Clone)]
pub enum CoherenceVerdict {
    Coherent { witness: Vec<f64> },
    Incoherent,
}

pub fn check_coherence(
    system: &ConstraintSystem,
    cfg: &SolverConfig,
) -> Result<CoherenceVerdict, SolveError> {
    if system.is_linear() {
        let (eq, le) = linear_rows(system);
        let probe = LpProblem {
            n_vars: system.n_cells,
            objective: vec![0.0; system.n_cells],
            eq,
            le,
        };
        return Ok(match simplex::solve(&probe)? {
            LpOutcome::Infeasible => CoherenceVerdict::Incoherent,
            LpOutcome::Optimal { x, .. } => CoherenceVerdict::Coherent { witness: x },
            LpOutcome::Unbounded => {
                return Err(SolveError::Numerical("feasibility probe unbounded".into()))
            }
        });
    }
    let (mut ext, _) = ExtendedProblem::build(system, &[]);
    if relax::tighten_root_box(&mut ext)? == RootStatus::Infeasible {
        return Ok(CoherenceVerdict::Incoherent);
    }
    let stop = EarlyStop {
        lb_at_least: None,
        incumbent_at_most: Some(0.5),
    };
    let run = bb::minimize(
        &ext,
        &QuadObjective::linear(vec![0.0; ext.n_cells], ext.n_products()),
        &cfg.bb(system),
        &stop,
    )?;
    match (run.status, run.incumbent) {
        (BbStatus::Infeasible, _) => Ok(CoherenceVerdict::Incoherent),
        (_, Some(inc)) => Ok(CoherenceVerdict::Coherent { witness: inc.q }),
        (BbStatus::Converged, None) => Err(SolveError::Undecided(
            "no feasible point certified at tolerance".into(),
        )),
        _ => Err(SolveError::Undecided(format!(
            "{} nodes explored without a verdict",
            run.nodes
        ))),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A conditional target is only meaningful when every configuration the
/// numerator weights is also covered by the conditioning event, and the
/// conditioning row is a nonnegative mass. Violations are caller mistakes,
/// not solvable problems, so they surface as errors rather than bounds.
fn validate_ratio_support(num: &[Rational], den: &[Rational]) -> Result<(), SolveError> {
    for (j, (nj, dj)) in num.iter().zip(den).enumerate() {
        if dj.is_negative() {
            return Err(SolveError::TargetSupport(format!(
                "conditioning row has negative weight at configuration {j}"
            )));
        }
        if !nj.is_zero() && dj.is_zero() {
            return Err(SolveError::TargetSupport(format!(
                "numerator weights configuration {j} outside the conditioning event"
            )));
        }
    }
    Ok(())
}

/// Exact fractional bounds when every constraint is linear: one
/// Charnes-Cooper transform per direction. Witnesses are recovered from the
/// homogenized solution whenever the scale variable stays away from zero,
/// which it always does here because the feasible set lives inside the
/// probability simplex.
fn cc_bounds_linear(
    system: &ConstraintSystem,
    num_f: &[f64],
    den_f: &[f64],
) -> Result<BoundsResult, SolveError> {
    let (eq, le) = linear_rows(system);
    let n = system.n_cells;
    let lo = fractional::charnes_cooper(&eq, &le, n, num_f, den_f, false)?;
    let hi = fractional::charnes_cooper(&eq, &le, n, num_f, den_f, true)?;
    match (lo, hi) {
        (
            CcOutcome::Extremum {
                value: l,
                witness: wl,
            },
            CcOutcome::Extremum {
                value: u,
                witness: wu,
            },
        ) => {
            let lower_attained = wl.is_some();
            let upper_attained = wu.is_some();
            Ok(BoundsResult {
                lower: l,
                upper: u.max(l),
                status: SolveStatus::Optimal,
                witness_min: wl,
                witness_max: wu,
                lower_attained,
                upper_attained,
                certified_gap: 0.0,
            })
        }
        // The transformed program has no feasible point: either the base
        // system is itself infeasible, or it is feasible but the
        // conditioning event carries no mass anywhere on it.
        _ => {
            let probe = LpProblem {
                n_vars: n,
                objective: vec![0.0; n],
                eq,
                le,
            };
            Ok(match simplex::solve(&probe)? {
                LpOutcome::Infeasible => BoundsResult::infeasible(),
                _ => BoundsResult::undefined_ratio(),
            })
        }
    }
}

enum FixedProbe {
    Infeasible,
    /// The row evaluates to this constant on the linear relaxation.
    Fixed(f64),
    Moving,
}

/// Tests whether the linear constraints already pin a row to a constant.
/// Bilinear rows can only shrink the feasible set further, so a value fixed
/// here is fixed everywhere.
fn fixed_on_relaxation(
    eq: &[(Vec<f64>, f64)],
    le: &[(Vec<f64>, f64)],
    n: usize,
    row_f: &[f64],
) -> Result<FixedProbe, SolveError> {
    let lp = LpProblem {
        n_vars: n,
        objective: row_f.to_vec(),
        eq: eq.to_vec(),
        le: le.to_vec(),
    };
    let lo = match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => return Ok(FixedProbe::Infeasible),
        LpOutcome::Unbounded => {
            return Err(SolveError::Numerical("relaxation probe unbounded".into()))
        }
    };
    let hi = match simplex::solve_max(&lp)? {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => return Ok(FixedProbe::Infeasible),
        LpOutcome::Unbounded => {
            return Err(SolveError::Numerical("relaxation probe unbounded".into()))
        }
    };
    Ok(if hi - lo <= 1e-9 {
        FixedProbe::Fixed(0.5 * (lo + hi))
    } else {
        FixedProbe::Moving
    })
}

enum MassProbe {
    /// A feasible point where the probed quantity clears the threshold.
    Seed(Vec<f64>),
    /// Certified: nowhere on the feasible set does it clear the threshold.
    Empty,
    Infeasible,
}

/// Maximizes a quantity over the full (bilinear) feasible set, but only far
/// enough to decide whether it ever exceeds `thresh`. The objective must be
/// the NEGATED quantity since the engine minimizes.
fn mass_probe(
    ext: &ExtendedProblem,
    neg_obj: QuadObjective,
    thresh: f64,
    cfg: &SolverConfig,
    feas_tol: f64,
) -> Result<MassProbe, SolveError> {
    let stop = EarlyStop {
        lb_at_least: Some(-thresh),
        incumbent_at_most: Some(-thresh),
    };
    let run = bb::minimize(ext, &neg_obj, &cfg.bb_raw(feas_tol), &stop)?;
    if run.status == BbStatus::Infeasible {
        return Ok(MassProbe::Infeasible);
    }
    if let Some(inc) = &run.incumbent {
        if inc.value <= -thresh {
            return Ok(MassProbe::Seed(inc.q.clone()));
        }
    }
    if run.lower_bound >= -thresh || run.status == BbStatus::Converged {
        // Converged without a point above threshold: the certified maximum
        // sits within gap tolerance of the threshold, too thin to trust.
        return Ok(MassProbe::Empty);
    }
    Err(SolveError::Undecided(format!(
        "conditioning mass probe unresolved after {} nodes",
        run.nodes
    )))
}

/// Min and max of num/den on the linear relaxation, when defined there.
fn cc_range(
    eq: &[(Vec<f64>, f64)],
    le: &[(Vec<f64>, f64)],
    n: usize,
    num_f: &[f64],
    den_f: &[f64],
) -> Result<Option<(f64, f64)>, SolveError> {
    let lo = fractional::charnes_cooper(eq, le, n, num_f, den_f, false)?;
    let hi = fractional::charnes_cooper(eq, le, n, num_f, den_f, true)?;
    Ok(match (lo, hi) {
        (CcOutcome::Extremum { value: a, .. }, CcOutcome::Extremum { value: b, .. }) => {
            Some((a, b))
        }
        _ => None,
    })
}

fn scale_fixed_den(inner: BoundsResult, c: f64) -> BoundsResult {
    if matches!(inner.status, SolveStatus::Infeasible) {
        return inner;
    }
    let to_tolerance = match inner.status {
        SolveStatus::Optimal => true,
        SolveStatus::GapClosed { to_tolerance } => to_tolerance,
        _ => false,
    };
    BoundsResult {
        lower: inner.lower / c,
        upper: inner.upper / c,
        status: SolveStatus::GapClosed { to_tolerance },
        witness_min: inner.witness_min,
        witness_max: inner.witness_max,
        lower_attained: inner.lower_attained,
        upper_attained: inner.upper_attained,
        certified_gap: inner.certified_gap / c + 1e-9,
    }
}

/// Stitches the two directed parametric searches into one result. `extra_gap`
/// absorbs slop introduced upstream (e.g. a denominator pinned only to
/// relaxation tolerance).
fn assemble_ratio(lo: InfimumResult, hi: InfimumResult, extra_gap: f64) -> BoundsResult {
    let mut lower = lo.lower;
    let upper = hi.lower;
    if lower > upper {
        lower = upper;
    }
    let attained = |r: &InfimumResult| match r.best_value {
        Some(v) => (v - r.lower).abs() <= r.width.max(1e-6) + 1e-12,
        None => false,
    };
    let lower_attained = attained(&lo);
    let upper_attained = attained(&hi);
    BoundsResult {
        lower,
        upper,
        status: SolveStatus::GapClosed {
            to_tolerance: lo.to_tolerance && hi.to_tolerance,
        },
        witness_min: lo.witness,
        witness_max: hi.witness,
        lower_attained,
        upper_attained,
        certified_gap: lo.width.max(hi.width) + extra_gap,
    }
}

fn ratio_bounds_core(
    system: &ConstraintSystem,
    num: &[Rational],
    den: &[Rational],
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    let num_f = row_to_f64(num);
    let den_f = row_to_f64(den);
    if system.bilinear_ineq.is_empty() {
        return cc_bounds_linear(system, &num_f, &den_f);
    }
    let n = system.n_cells;
    let (eq, le) = linear_rows(system);
    match fixed_on_relaxation(&eq, &le, n, &den_f)? {
        FixedProbe::Infeasible => return Ok(BoundsResult::infeasible()),
        FixedProbe::Fixed(c) if c > 1e-9 => {
            // Constant denominator: the ratio is a rescaled linear target.
            let inner = global_bounds_f64(system, num_f, cfg)?;
            return Ok(scale_fixed_den(inner, c));
        }
        _ => {}
    }
    let (mut ext, _) = ExtendedProblem::build(system, &[]);
    if relax::tighten_root_box(&mut ext)? == RootStatus::Infeasible {
        return Ok(BoundsResult::infeasible());
    }
    let feas_tol = cfg.feas_tol_bilinear;
    let neg_den: Vec<f64> = den_f.iter().map(|v| -v).collect();
    let seed = match mass_probe(
        &ext,
        QuadObjective::linear(neg_den, ext.n_products()),
        1e-6,
        cfg,
        feas_tol,
    )? {
        MassProbe::Infeasible => return Ok(BoundsResult::infeasible()),
        MassProbe::Empty => return Ok(BoundsResult::undefined_ratio()),
        MassProbe::Seed(q) => q,
    };
    let Some((cell_lo, cell_hi)) = fractional::cell_ratio_bracket(&num_f, &den_f) else {
        return Ok(BoundsResult::undefined_ratio());
    };
    let (mut lo0, mut hi0) = (cell_lo, cell_hi);
    if let Some((a, b)) = cc_range(&eq, &le, n, &num_f, &den_f)? {
        // The relaxation can only widen the true range; clip the bracket.
        lo0 = lo0.max(a - 1e-9);
        hi0 = hi0.min(b + 1e-9);
    }
    let value_at = |q: &[f64]| -> Option<f64> {
        let d = dot(&den_f, q);
        (d >= 1e-6).then(|| dot(&num_f, q) / d)
    };
    let den_range = relax::relaxed_range(&ext, &den_f, &vec![0.0; ext.n_products()]);
    let search = RatioSearch {
        ext: &ext,
        target: ParametricTarget::ratio(num_f.clone(), den_f.clone(), ext.n_products()),
        value_at: &value_at,
        bracket: (lo0, hi0),
        seed: Some(seed),
        den_range,
    };
    let lo_res = fractional::infimum(&search, cfg, feas_tol)?;
    let hi_res = fractional::supremum(&search, cfg, feas_tol)?;
    Ok(assemble_ratio(lo_res, hi_res, 0.0))
}

/// Certified bounds on P(num-event | den-event): the ratio (num.q)/(den.q)
/// over the feasible set, restricted to points where the denominator carries
/// mass. Returns `UnboundedDenominator` when no feasible point gives the
/// conditioning event positive probability.
pub fn conditional_bounds(
    system: &ConstraintSystem,
    num: &[Rational],
    den: &[Rational],
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    check_dims(system, num)?;
    check_dims(system, den)?;
    validate_ratio_support(num, den)?;
    ratio_bounds_core(system, num, den, cfg)
}

/// Certified bounds on a difference of two conditional previsions,
/// n1/d1 - n2/d2. Shared or constant denominators collapse to cheaper exact
/// forms; the general case runs a parametric search over products of the
/// four rows.
pub fn difference_bounds(
    system: &ConstraintSystem,
    n1: &[Rational],
    d1: &[Rational],
    n2: &[Rational],
    d2: &[Rational],
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    for row in [n1, d1, n2, d2] {
        check_dims(system, row)?;
    }
    validate_ratio_support(n1, d1)?;
    validate_ratio_support(n2, d2)?;
    if d1 == d2 {
        // Common denominator: (n1 - n2)/d1 is a single ratio.
        let diff: Vec<Rational> = n1.iter().zip(n2).map(|(a, b)| a - b).collect();
        return ratio_bounds_core(system, &diff, d1, cfg);
    }
    let n = system.n_cells;
    let (eq, le) = linear_rows(system);
    let n1f = row_to_f64(n1);
    let d1f = row_to_f64(d1);
    let n2f = row_to_f64(n2);
    let d2f = row_to_f64(d2);
    let c1 = match fixed_on_relaxation(&eq, &le, n, &d1f)? {
        FixedProbe::Infeasible => return Ok(BoundsResult::infeasible()),
        FixedProbe::Fixed(c) if c > 1e-9 => Some(c),
        _ => None,
    };
    let c2 = match fixed_on_relaxation(&eq, &le, n, &d2f)? {
        FixedProbe::Infeasible => return Ok(BoundsResult::infeasible()),
        FixedProbe::Fixed(c) if c > 1e-9 => Some(c),
        _ => None,
    };
    if let (Some(a), Some(b)) = (c1, c2) {
        // Both denominators constant: the difference is a linear target.
        let row_f: Vec<f64> = n1f
            .iter()
            .zip(&n2f)
            .map(|(x, y)| x / a - y / b)
            .collect();
        let inner = global_bounds_f64(system, row_f, cfg)?;
        return Ok(scale_fixed_den(inner, 1.0));
    }

    // Brackets for the difference from per-ratio brackets.
    let Some((a1, b1)) = fractional::cell_ratio_bracket(&n1f, &d1f) else {
        return Ok(BoundsResult::undefined_ratio());
    };
    let Some((a2, b2)) = fractional::cell_ratio_bracket(&n2f, &d2f) else {
        return Ok(BoundsResult::undefined_ratio());
    };
    let mut lo0 = a1 - b2;
    let mut hi0 = b1 - a2;
    let r1 = cc_range(&eq, &le, n, &n1f, &d1f)?;
    let r2 = cc_range(&eq, &le, n, &n2f, &d2f)?;
    if let (Some((l1, u1)), Some((l2, u2))) = (r1, r2) {
        lo0 = lo0.max(l1 - u2 - 1e-9);
        hi0 = hi0.min(u1 - l2 + 1e-9);
    }

    let value_at = |q: &[f64]| -> Option<f64> {
        let da = dot(&d1f, q);
        let db = dot(&d2f, q);
        (da >= 1e-6 && db >= 1e-6).then(|| dot(&n1f, q) / da - dot(&n2f, q) / db)
    };
    let feas_tol = cfg.feas_tol_bilinear;

    let (mut ext, target, probe_obj, probe_thresh, extra_gap) = match (c1, c2) {
        (Some(c), None) => {
            // n1/c - n2/d2, rewritten over the product z = (n1.q)(d2.q):
            // base = z/c - n2.q, den = d2.q.
            let (ext, idx) = ExtendedProblem::build(system, &[(n1.to_vec(), d2.to_vec())]);
            let np = ext.n_products();
            let mut base_z = vec![0.0; np];
            base_z[idx[0]] += 1.0 / c;
            let base_q: Vec<f64> = n2f.iter().map(|v| -v).collect();
            let target = ParametricTarget {
                base_q,
                base_z,
                den_q: d2f.clone(),
                den_z: vec![0.0; np],
            };
            let probe: Vec<f64> = d2f.iter().map(|v| -v).collect();
            (
                ext,
                target,
                QuadObjective::linear(probe, np),
                1e-6,
                1e-9,
            )
        }
        (None, Some(c)) => {
            // n1/d1 - n2/c: base = n1.q - z/c with z = (n2.q)(d1.q), den = d1.q.
            let (ext, idx) = ExtendedProblem::build(system, &[(n2.to_vec(), d1.to_vec())]);
            let np = ext.n_products();
            let mut base_z = vec![0.0; np];
            base_z[idx[0]] -= 1.0 / c;
            let target = ParametricTarget {
                base_q: n1f.clone(),
                base_z,
                den_q: d1f.clone(),
                den_z: vec![0.0; np],
            };
            let probe: Vec<f64> = d1f.iter().map(|v| -v).collect();
            (
                ext,
                target,
                QuadObjective::linear(probe, np),
                1e-6,
                1e-9,
            )
        }
        _ => {
            // Fully general: clear both denominators. The sign test for
            // n1/d1 - n2/d2 - t becomes
            //   (n1.q)(d2.q) - (n2.q)(d1.q) - t (d1.q)(d2.q) >= 0.
            let (ext, idx) = ExtendedProblem::build(
                system,
                &[
                    (n1.to_vec(), d2.to_vec()),
                    (n2.to_vec(), d1.to_vec()),
                    (d1.to_vec(), d2.to_vec()),
                ],
            );
            let np = ext.n_products();
            let mut base_z = vec![0.0; np];
            let mut den_z = vec![0.0; np];
            // Duplicate rows can collapse onto one product slot, so add
            // rather than overwrite.
            base_z[idx[0]] += 1.0;
            base_z[idx[1]] -= 1.0;
            den_z[idx[2]] += 1.0;
            let target = ParametricTarget {
                base_q: vec![0.0; n],
                base_z,
                den_q: vec![0.0; n],
                den_z: den_z.clone(),
            };
            // Both denominators must carry mass at the same point, so probe
            // their product, not each alone.
            let mut probe_z = vec![0.0; np];
            probe_z[idx[2]] -= 1.0;
            let probe = QuadObjective {
                q_coeffs: vec![0.0; n],
                z_coeffs: probe_z,
            };
            (ext, target, probe, 1e-10, 0.0)
        }
    };
    if relax::tighten_root_box(&mut ext)? == RootStatus::Infeasible {
        return Ok(BoundsResult::infeasible());
    }
    let seed = match mass_probe(&ext, probe_obj, probe_thresh, cfg, feas_tol)? {
        MassProbe::Infeasible => return Ok(BoundsResult::infeasible()),
        MassProbe::Empty => return Ok(BoundsResult::undefined_ratio()),
        MassProbe::Seed(q) => q,
    };
    let den_range = relax::relaxed_range(&ext, &target.den_q, &target.den_z);
    let search = RatioSearch {
        ext: &ext,
        target,
        value_at: &value_at,
        bracket: (lo0, hi0),
        seed: Some(seed),
        den_range,
    };
    let lo_res = fractional::infimum(&search, cfg, feas_tol)?;
    let hi_res = fractional::supremum(&search, cfg, feas_tol)?;
    Ok(assemble_ratio(lo_res, hi_res, extra_gap))
}

/// Single entry point dispatching on target shape.
pub fn bounds(
    system: &ConstraintSystem,
    target: &Target,
    cfg: &SolverConfig,
) -> Result<BoundsResult, SolveError> {
    match target {
        Target::Linear { row } => {
            if system.bilinear_ineq.is_empty() {
                lp_bounds(system, row, cfg)
            } else {
                global_bounds(system, row, cfg)
            }
        }
        Target::Conditional { num, den } => conditional_bounds(system, num, den, cfg),
        Target::ConditionalDifference { n1, d1, n2, d2 } => {
            difference_bounds(system, n1, d1, n2, d2, cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{compile, Assertion, OrderingSide};
    use crate::events::{enumerate_realm, Quantity, Workspace};
    use crate::numeric::{integer, ratio};

    /// Two assessments pinning P(X) and P(X or Y); the unasserted P(Y)
    /// then ranges over [0.3, 0.6].
    fn shelf() -> (Realm, ConstraintSystem) {
        let ws = Workspace::new(["X", "Y"]).unwrap();
        let x = EventExpr::atom(ws.atom("X").unwrap());
        let y = EventExpr::atom(ws.atom("Y").unwrap());
        let realm = enumerate_realm(
            &ws,
            vec![
                Quantity::event("X", x.clone()),
                Quantity::event("Y", y.clone()),
            ],
            None,
        )
        .unwrap();
        // P(X) = 0.3, P(X or Y) = 0.6.
        let system = compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: x.clone(),
                    value: ratio(3, 10),
                },
                Assertion::Prevision {
                    expr: EventExpr::or(x, y),
                    value: ratio(3, 5),
                },
            ],
        )
        .unwrap();
        (realm, system)
    }

    #[test]
    fn lp_bounds_with_witnesses() {
        let (realm, system) = shelf();
        let y = EventExpr::atom(realm.workspace().atom("Y").unwrap());
        let row = realm.indicator_row(&y).unwrap();
        let out = lp_bounds(&system, &row, &SolverConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.lower - 0.3).abs() <= 1e-9);
        assert!((out.upper - 0.6).abs() <= 1e-9);
        let wmin = out.witness_min.unwrap();
        assert!(system.satisfied_by(&wmin, 1e-9));
        let wmax = out.witness_max.unwrap();
        assert!(system.satisfied_by(&wmax, 1e-9));
    }

    #[test]
    fn lp_refuses_product_constraints() {
        let (realm, mut system) = shelf();
        let x = EventExpr::atom(realm.workspace().atom("X").unwrap());
        let y = EventExpr::atom(realm.workspace().atom("Y").unwrap());
        let extra = compile(
            &realm,
            &[Assertion::Ordering {
                lesser: OrderingSide::conditional(x.clone(), y.clone()),
                greater: OrderingSide::conditional(x, EventExpr::not(y)),
            }],
        )
        .unwrap();
        system.bilinear_ineq = extra.bilinear_ineq;
        let row = vec![integer(0); 4];
        match lp_bounds(&system, &row, &SolverConfig::default()) {
            Err(SolveError::BilinearPresent { products: 1 }) => {}
            other => panic!("expected BilinearPresent, got {other:?}"),
        }
    }

    #[test]
    fn global_agrees_with_lp_on_linear_systems() {
        let (realm, system) = shelf();
        let y = EventExpr::atom(realm.workspace().atom("Y").unwrap());
        let row = realm.indicator_row(&y).unwrap();
        let cfg = SolverConfig::default();
        let lp = lp_bounds(&system, &row, &cfg).unwrap();
        let global = global_bounds(&system, &row, &cfg).unwrap();
        assert!((lp.lower - global.lower).abs() <= 1e-9);
        assert!((lp.upper - global.upper).abs() <= 1e-9);
        assert_eq!(global.status, SolveStatus::Optimal);
    }

    #[test]
    fn global_bounds_on_a_product_frontier() {
        // q0 q1 >= q2^2 over the 3-cell simplex: q2 ranges over [0, 1/3].
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(crate::assertions::BilinearConstraint {
            a: vec![integer(0), integer(0), integer(1)],
            b: vec![integer(0), integer(0), integer(1)],
            u: vec![integer(1), integer(0), integer(0)],
            v: vec![integer(0), integer(1), integer(0)],
        });
        let row = vec![integer(0), integer(0), integer(1)];
        let out = global_bounds(&system, &row, &SolverConfig::default()).unwrap();
        assert!(out.lower.abs() <= 1e-6, "lower {}", out.lower);
        assert!((out.upper - 1.0 / 3.0).abs() <= 1e-4, "upper {}", out.upper);
        assert!(out.certified_gap <= 1e-4);
        let w = out.witness_max.unwrap();
        assert!(system.satisfied_by(&w, 1e-8));
    }

    #[test]
    fn coherence_verdicts() {
        let (realm, system) = shelf();
        let cfg = SolverConfig::default();
        match check_coherence(&system, &cfg).unwrap() {
            CoherenceVerdict::Coherent { witness } => {
                assert!(system.satisfied_by(&witness, 1e-9))
            }
            CoherenceVerdict::Incoherent => panic!("shelf system is coherent"),
        }

        let x = EventExpr::atom(realm.workspace().atom("X").unwrap());
        let clash = compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: x.clone(),
                    value: ratio(3, 10),
                },
                Assertion::Prevision {
                    expr: x,
                    value: ratio(9, 10),
                },
            ],
        )
        .unwrap();
        assert!(matches!(
            check_coherence(&clash, &cfg).unwrap(),
            CoherenceVerdict::Incoherent
        ));
    }

    #[test]
    fn coherence_through_product_constraints() {
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(crate::assertions::BilinearConstraint {
            a: vec![integer(0), integer(0), integer(1)],
            b: vec![integer(0), integer(0), integer(1)],
            u: vec![integer(1), integer(0), integer(0)],
            v: vec![integer(0), integer(1), integer(0)],
        });
        // Demanding q2 = 0.5 clashes with q0 q1 >= q2^2 on the simplex.
        system.push_eq(
            vec![integer(0), integer(0), integer(1)],
            ratio(1, 2),
        );
        let cfg = SolverConfig::default();
        assert!(matches!(
            check_coherence(&system, &cfg).unwrap(),
            CoherenceVerdict::Incoherent
        ));
    }
    /// q0 q1 >= q2^2 with q0 pinned away from zero, so conditional targets
    /// on it have an irrational exact optimum to check against.
    fn curved() -> ConstraintSystem {
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(crate::assertions::BilinearConstraint {
            a: vec![integer(0), integer(0), integer(1)],
            b: vec![integer(0), integer(0), integer(1)],
            u: vec![integer(1), integer(0), integer(0)],
            v: vec![integer(0), integer(1), integer(0)],
        });
        // q0 >= 1/9
        system.push_ineq(vec![integer(-1), integer(0), integer(0)], ratio(-1, 9));
        system
    }

    #[test]
    fn conditional_bounds_on_linear_systems_are_exact() {
        let (realm, system) = shelf();
        let x = EventExpr::atom(realm.workspace().atom("X").unwrap());
        let y = EventExpr::atom(realm.workspace().atom("Y").unwrap());
        let target = Target::conditional(&realm, &y, &EventExpr::or(x, y.clone())).unwrap();
        let out = bounds(&system, &target, &SolverConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.lower - 0.5).abs() <= 1e-9, "lower {}", out.lower);
        assert!((out.upper - 1.0).abs() <= 1e-9, "upper {}", out.upper);
        let wmin = out.witness_min.expect("attained endpoints carry witnesses");
        assert!(system.satisfied_by(&wmin, 1e-7));
        assert!((target.evaluate(&wmin).unwrap() - 0.5).abs() <= 1e-7);
        let wmax = out.witness_max.unwrap();
        assert!((target.evaluate(&wmax).unwrap() - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn conditioning_on_a_null_event_is_flagged() {
        let (realm, system) = shelf();
        let x = EventExpr::atom(realm.workspace().atom("X").unwrap());
        let never = conjunction(&x, &EventExpr::not(x.clone()), realm.workspace()).unwrap();
        let target = Target::conditional(&realm, &never, &never).unwrap();
        let out = bounds(&system, &target, &SolverConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::UnboundedDenominator);
        assert!(out.lower.is_nan() && out.upper.is_nan());
    }

    #[test]
    fn conditional_bounds_across_a_product_frontier() {
        let system = curved();
        let num = vec![integer(0), integer(0), integer(1)];
        let den = vec![integer(1), integer(0), integer(1)];
        let out =
            conditional_bounds(&system, &num, &den, &SolverConfig::default()).unwrap();
        let exact = (33f64.sqrt() - 1.0) / (33f64.sqrt() + 1.0);
        assert!(out.lower >= -1e-6 && out.lower <= 2e-3, "lower {}", out.lower);
        assert!((out.upper - exact).abs() <= 2e-3, "upper {}", out.upper);
        assert!(matches!(out.status, SolveStatus::GapClosed { .. }));
        let w = out.witness_max.expect("supremum is attained here");
        assert!(system.satisfied_by(&w, 1e-6));
        let v = (w[2]) / (w[0] + w[2]);
        assert!((v - exact).abs() <= 2e-3, "witness value {v}");
    }

    #[test]
    fn difference_with_shared_conditioning_collapses_to_one_ratio() {
        let (realm, system) = shelf();
        let x = EventExpr::atom(realm.workspace().atom("X").unwrap());
        let y = EventExpr::atom(realm.workspace().atom("Y").unwrap());
        let either = EventExpr::or(x.clone(), y.clone());
        let target =
            Target::conditional_difference(&realm, &y, &either, &x, &either).unwrap();
        // P(Y | X or Y) - P(X | X or Y) = (P(Y) - 0.3) / 0.6 over P(Y) in [.3, .6].
        let out = bounds(&system, &target, &SolverConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.lower.abs() <= 1e-9, "lower {}", out.lower);
        assert!((out.upper - 0.5).abs() <= 1e-9, "upper {}", out.upper);
    }

    #[test]
    fn difference_with_two_pinned_denominators_goes_linear() {
        let (realm, system) = shelf();
        let ws = realm.workspace();
        let x = EventExpr::atom(ws.atom("X").unwrap());
        let y = EventExpr::atom(ws.atom("Y").unwrap());
        let either = EventExpr::or(x.clone(), y.clone());
        let sure = EventExpr::or(x.clone(), EventExpr::not(x.clone()));
        // P(X or Y) is asserted to .6 and P(sure) is 1, so both conditioning
        // masses are constants and the difference is a plain linear target:
        // P(Y)/0.6 - P(X) with P(Y) in [.3, .6] and P(X) = .3.
        let target = Target::conditional_difference(&realm, &y, &either, &x, &sure).unwrap();
        let out = bounds(&system, &target, &SolverConfig::default()).unwrap();
        assert!(matches!(
            out.status,
            SolveStatus::GapClosed { to_tolerance: true }
        ));
        assert!((out.lower - 0.2).abs() <= 1e-7, "lower {}", out.lower);
        assert!((out.upper - 0.7).abs() <= 1e-7, "upper {}", out.upper);
        let w = out.witness_max.unwrap();
        assert!(system.satisfied_by(&w, 1e-7));
        assert!((target.evaluate(&w).unwrap() - 0.7).abs() <= 1e-6);
    }

    #[test]
    fn difference_with_one_moving_denominator() {
        // 0/1 - P(c2 | c0 or c2): the mirror image of the conditional
        // frontier bounds, reached through the mixed fixed/moving path.
        let system = curved();
        let zero = vec![integer(0); 3];
        let ones = vec![integer(1); 3];
        let num = vec![integer(0), integer(0), integer(1)];
        let den = vec![integer(1), integer(0), integer(1)];
        let out = difference_bounds(
            &system,
            &zero,
            &ones,
            &num,
            &den,
            &SolverConfig::default(),
        )
        .unwrap();
        let exact = (33f64.sqrt() - 1.0) / (33f64.sqrt() + 1.0);
        assert!((out.lower + exact).abs() <= 2e-3, "lower {}", out.lower);
        assert!(out.upper >= -2e-3 && out.upper <= 2e-3, "upper {}", out.upper);
        assert!(matches!(out.status, SolveStatus::GapClosed { .. }));
        if let Some(w) = &out.witness_min {
            assert!(system.satisfied_by(w, 1e-6));
            let v = -(w[2]) / (w[0] + w[2]);
            assert!(v <= out.upper + 1e-6 && v >= out.lower - 1e-6);
        }
    }

    #[test]
    fn difference_with_two_moving_denominators() {
        // 0/(c1 or c2) - P(c2 | c0 or c2): both conditioning masses vary, so
        // the fully product-cleared search runs. Same exact interval as the
        // mixed case because the first ratio is identically zero wherever
        // defined.
        let system = curved();
        let zero = vec![integer(0); 3];
        let d1 = vec![integer(0), integer(1), integer(1)];
        let num = vec![integer(0), integer(0), integer(1)];
        let den = vec![integer(1), integer(0), integer(1)];
        let out = difference_bounds(
            &system,
            &zero,
            &d1,
            &num,
            &den,
            &SolverConfig::default(),
        )
        .unwrap();
        let exact = (33f64.sqrt() - 1.0) / (33f64.sqrt() + 1.0);
        assert!((out.lower + exact).abs() <= 2e-3, "lower {}", out.lower);
        assert!(out.upper >= -2e-3 && out.upper <= 2e-3, "upper {}", out.upper);
        assert!(matches!(out.status, SolveStatus::GapClosed { .. }));
    }

}

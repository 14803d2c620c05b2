//! Ratio targets: conditional previsions and differences of them.
//!
//! Over a linear system, a ratio is a linear-fractional program and the
//! homogenizing substitution `r = q / (den . q)` solves it exactly with one
//! LP. Over a system with product constraints, the ratio's infimum equals
//! `sup { t : min (num - t den) . q >= 0 }` whenever the numerator only
//! puts weight where the denominator does; each sign query on the right is
//! a global minimization, so a bisection over `t` with branch-and-bound
//! sign oracles pins the infimum between a certified floor and a witnessed
//! value. Suprema run through the same machinery on the negated numerator.

use crate::solver::bb::{self, BbConfig, BbStatus, EarlyStop, QuadObjective};
use crate::solver::relax::ExtendedProblem;
use crate::solver::simplex::{self, LpOutcome, LpProblem};
use crate::solver::{SolveError, SolverConfig};

/// Result of one linear-fractional LP.
#[derive(Debug, Clone)]
pub enum CcOutcome {
    Extremum { value: f64, witness: Option<Vec<f64>> },
    /// No feasible point gives the denominator positive mass (or the
    /// system itself is infeasible; the caller distinguishes).
    Infeasible,
}

/// Exact extremum of `(num . q) / (den . q)` over the linear rows, by the
/// Charnes-Cooper substitution. The cell polytope has no recession
/// directions, so the optimum is attained and the witness reconstructs.
pub fn charnes_cooper(
    eq: &[(Vec<f64>, f64)],
    le: &[(Vec<f64>, f64)],
    n: usize,
    num: &[f64],
    den: &[f64],
    maximize: bool,
) -> Result<CcOutcome, SolveError> {
    let homogenize = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut v = row.to_vec();
        v.push(-rhs);
        (v, 0.0)
    };
    let mut ceq: Vec<(Vec<f64>, f64)> =
        eq.iter().map(|(r, b)| homogenize(r, *b)).collect();
    let mut den_row = den.to_vec();
    den_row.push(0.0);
    ceq.push((den_row, 1.0));
    let cle: Vec<(Vec<f64>, f64)> =
        le.iter().map(|(r, b)| homogenize(r, *b)).collect();
    let mut objective = num.to_vec();
    objective.push(0.0);
    if maximize {
        for v in objective.iter_mut() {
            *v = -*v;
        }
    }
    let lp = LpProblem {
        n_vars: n + 1,
        objective,
        eq: ceq,
        le: cle,
    };
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, x } => {
            let t = x[n];
            let witness =
                (t > 1e-9).then(|| x[..n].iter().map(|r| r / t).collect());
            Ok(CcOutcome::Extremum {
                value: if maximize { -value } else { value },
                witness,
            })
        }
        LpOutcome::Infeasible => Ok(CcOutcome::Infeasible),
        LpOutcome::Unbounded => Err(SolveError::Numerical(
            "fractional program unbounded; is the numerator supported by the denominator?"
                .into(),
        )),
    }
}

/// Range of `num_j / den_j` over cells where the denominator is positive:
/// an outer bracket for any ratio value the system can produce. `None`
/// when the denominator row is identically zero.
pub fn cell_ratio_bracket(num: &[f64], den: &[f64]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&nj, &dj) in num.iter().zip(den) {
        if dj > 0.0 {
            let r = nj / dj;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Objective pieces of the sign query `G(t) = min (base - t * den)`, where
/// both parts may involve products of registered forms.
#[derive(Debug, Clone)]
pub struct ParametricTarget {
    pub base_q: Vec<f64>,
    pub base_z: Vec<f64>,
    pub den_q: Vec<f64>,
    pub den_z: Vec<f64>,
}

impl ParametricTarget {
    /// Plain ratio: numerator and denominator are rows over the cells.
    pub fn ratio(num: Vec<f64>, den: Vec<f64>, n_products: usize) -> Self {
        ParametricTarget {
            base_q: num,
            base_z: vec![0.0; n_products],
            den_q: den,
            den_z: vec![0.0; n_products],
        }
    }

    fn negated(&self) -> Self {
        let flip = |v: &[f64]| v.iter().map(|x| -x).collect();
        ParametricTarget {
            base_q: flip(&self.base_q),
            base_z: flip(&self.base_z),
            den_q: self.den_q.clone(),
            den_z: self.den_z.clone(),
        }
    }

    fn at(&self, t: f64) -> QuadObjective {
        QuadObjective {
            q_coeffs: self
                .base_q
                .iter()
                .zip(&self.den_q)
                .map(|(b, d)| b - t * d)
                .collect(),
            z_coeffs: self
                .base_z
                .iter()
                .zip(&self.den_z)
                .map(|(b, d)| b - t * d)
                .collect(),
        }
    }
}

/// One-sided search description. `value_at` evaluates the true target at a
/// candidate point, declining points whose denominators are too thin to
/// trust as witnesses.
pub struct RatioSearch<'a> {
    pub ext: &'a ExtendedProblem,
    pub target: ParametricTarget,
    pub value_at: &'a dyn Fn(&[f64]) -> Option<f64>,
    /// Outer bracket for the infimum: certified floor, witnessed ceiling.
    pub bracket: (f64, f64),
    pub seed: Option<Vec<f64>>,
    /// Certified range of the denominator over the feasible set. Lets a
    /// query's margin move the bracket by more than the probe point itself.
    pub den_range: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct InfimumResult {
    /// Certified: no admissible ratio value lies below this.
    pub lower: f64,
    /// Least true target value seen, with the point producing it.
    pub best_value: Option<f64>,
    pub witness: Option<Vec<f64>>,
    /// Final bracket width between floor and witnessed values.
    pub width: f64,
    pub to_tolerance: bool,
    pub nodes: usize,
}

/// Rides the best witness toward the infimum without a tree search. A
/// polish pass on the shifted objective `base - v den` goes negative
/// exactly where the ratio drops below `v`, so repeating the pass at each
/// new witnessed value walks down the ratio itself. Gains smaller than
/// `min_gain` end the walk.
fn refine_witness(
    search: &RatioSearch,
    best: &mut Option<(f64, Vec<f64>)>,
    hi: &mut f64,
    feas_tol: f64,
    min_gain: f64,
) {
    for _ in 0..6 {
        let Some((v, q)) = best.clone() else { return };
        let probe = search.target.at(v);
        let Some(p) = bb::polish_point(search.ext, &probe, &q, feas_tol) else {
            return;
        };
        let Some(vp) = (search.value_at)(&p) else { return };
        if vp < v - min_gain {
            if vp < *hi {
                *hi = vp;
            }
            *best = Some((vp, p));
        } else {
            return;
        }
    }
}

/// Certifies the infimum of the ratio target by bisection on `t`.
///
/// A sign query at `t` stops early as soon as either verdict is certain:
/// floor at `-1e-9` proves `inf >= t`, a feasible point below `-2e-9`
/// proves `inf < t` and usually hands back a much smaller witnessed value
/// to jump to. Ambiguous queries never move the bracket; after a few
/// unproductive rounds at ever tighter inner gaps the search stops and
/// reports the bracket it has, floor side still sound.
pub fn infimum(
    search: &RatioSearch,
    cfg: &SolverConfig,
    feas_tol: f64,
) -> Result<InfimumResult, SolveError> {
    let (mut lo, mut hi) = search.bracket;
    let mut best: Option<(f64, Vec<f64>)> = None;
    if let Some(seed) = &search.seed {
        if let Some(v) = (search.value_at)(seed) {
            if v < hi {
                hi = v;
            }
            best = Some((v, seed.clone()));
        }
    }
    let min_gain = (0.25 * cfg.gap_tol).max(1e-12);
    refine_witness(search, &mut best, &mut hi, feas_tol, min_gain);
    lo = lo.min(hi);
    let mut nodes = 0usize;
    let mut stalled = false;
    // With a solid denominator floor the margin shift below converts loose
    // certificates into bracket progress, so the sign queries can run at a
    // gap proportional to the bracket itself. The scale backs off whenever
    // an iteration fails to shrink the bracket.
    let den_floor_ok = search.den_range.0 > 1e-3;
    let mut gap_scale = 0.2_f64;
    let mut gap_shrink = 1.0_f64;
    let mut no_progress = 0u32;

    for _ in 0..60 {
        let width = hi - lo;
        if width <= cfg.gap_tol {
            break;
        }
        let t = 0.5 * (lo + hi);
        let inner_gap = if den_floor_ok {
            (gap_scale * width * search.den_range.0).max(1e-9)
        } else {
            (0.01 * width * gap_shrink).clamp(1e-9, 1e-5)
        };
        let bb_cfg = BbConfig {
            gap_tol: inner_gap,
            feas_tol,
            node_limit: cfg.node_limit,
            time_limit: cfg.time_limit,
            polish_starts: cfg.polish_starts,
        };
        let stop = EarlyStop {
            lb_at_least: Some(-1e-9),
            incumbent_at_most: Some(-2e-9),
        };
        let probe_clock = std::time::Instant::now();
        let run = bb::minimize(search.ext, &search.target.at(t), &bb_cfg, &stop)?;
        if std::env::var_os("PREVISION_TRACE").is_some() {
            eprintln!(
                "  query t {t:.6} width {width:.2e} nodes {} lb {:+.2e} inc {:?} in {:.2?}",
                run.nodes, run.lower_bound,
                run.incumbent.as_ref().map(|i| i.value),
                probe_clock.elapsed()
            );
        }
        nodes += run.nodes;
        if run.status == BbStatus::Infeasible {
            return Err(SolveError::Numerical(
                "sign query infeasible after a feasibility probe succeeded".into(),
            ));
        }
        // Any feasible point with trustworthy denominators tightens the
        // witnessed side, wherever it came from; a fresh witness is worth
        // riding further before the next query.
        if let Some(inc) = &run.incumbent {
            if let Some(v) = (search.value_at)(&inc.q) {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, inc.q.clone()));
                    if v < hi {
                        hi = v;
                    }
                    refine_witness(search, &mut best, &mut hi, feas_tol, min_gain);
                } else if v < hi {
                    hi = v;
                }
            }
        }
        // The query's certified margin says more than its sign. For every
        // feasible point, ratio - t = (base - t den) / den >= m / den, so the
        // infimum is at least t + m over the worst admissible denominator:
        // the largest when the margin is a credit, the smallest when it is a
        // debt. A thin denominator floor just makes the debt shift useless,
        // never unsound.
        let m = run.lower_bound;
        let (den_lo, den_hi) = search.den_range;
        if m >= 0.0 {
            if den_hi > 0.0 {
                lo = lo.max(t + m / den_hi);
            } else {
                lo = lo.max(t);
            }
        } else if m >= -1e-9 {
            lo = lo.max(t);
        } else if den_lo > 1e-9 {
            lo = lo.max(t + m / den_lo);
        }
        if hi < lo {
            hi = lo;
        }
        if run.lower_bound < -1e-9
            && run.incumbent.as_ref().is_some_and(|i| i.value <= -2e-9)
            && t < hi
        {
            hi = t;
        }
        // A query that moved neither side leaves the next midpoint where
        // this one was. Retry harder a few times, then stop and report the
        // bracket as it stands; only certificates and observed values have
        // moved it, so both sides stay honest.
        if hi - lo > 0.98 * width {
            no_progress += 1;
            gap_shrink *= 0.1;
            gap_scale = (gap_scale * 0.25).max(1e-3);
            if no_progress >= 3 {
                stalled = true;
                break;
            }
        } else {
            no_progress = 0;
        }
    }

    let mut lower = lo;
    if let Some((v, _)) = &best {
        if *v < lower {
            lower = *v;
        }
    }
    let width = (hi - lower).max(0.0);
    Ok(InfimumResult {
        lower,
        best_value: best.as_ref().map(|(v, _)| *v),
        witness: best.map(|(_, q)| q),
        width,
        to_tolerance: !stalled && width <= cfg.gap_tol + 1e-12,
        nodes,
    })
}

/// Mirror of [`infimum`] for the supremum: negates the base, searches, and
/// flips back.
pub fn supremum(
    search: &RatioSearch,
    cfg: &SolverConfig,
    feas_tol: f64,
) -> Result<InfimumResult, SolveError> {
    let negated_value = |q: &[f64]| (search.value_at)(q).map(|v| -v);
    let flipped = RatioSearch {
        ext: search.ext,
        target: search.target.negated(),
        value_at: &negated_value,
        bracket: (-search.bracket.1, -search.bracket.0),
        seed: search.seed.clone(),
        den_range: search.den_range,
    };
    let mut out = infimum(&flipped, cfg, feas_tol)?;
    out.lower = -out.lower;
    out.best_value = out.best_value.map(|v| -v);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{BilinearConstraint, ConstraintSystem};
    use crate::numeric::{integer, ratio};
    use crate::solver::relax::{relaxed_range, tighten_root_box, RootStatus};

    #[test]
    fn charnes_cooper_matches_hand_bounds() {
        // P(X) = 0.3, P(X or Y) = 0.6 on two atoms; P(Y | X or Y) spans
        // [1/2, 1]: numerator q1 + q3, denominator q1 + q2 + q3.
        let eq = vec![
            (vec![1.0, 1.0, 1.0, 1.0], 1.0),
            (vec![0.0, 0.0, 1.0, 1.0], 0.3),
            (vec![0.0, 1.0, 1.0, 1.0], 0.6),
        ];
        let num = vec![0.0, 1.0, 0.0, 1.0];
        let den = vec![0.0, 1.0, 1.0, 1.0];
        let lo = charnes_cooper(&eq, &[], 4, &num, &den, false).unwrap();
        match lo {
            CcOutcome::Extremum { value, witness } => {
                assert!((value - 0.5).abs() <= 1e-9, "min {value}");
                let q = witness.unwrap();
                let d: f64 = den.iter().zip(&q).map(|(a, b)| a * b).sum();
                let n: f64 = num.iter().zip(&q).map(|(a, b)| a * b).sum();
                assert!((n / d - 0.5).abs() <= 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let hi = charnes_cooper(&eq, &[], 4, &num, &den, true).unwrap();
        match hi {
            CcOutcome::Extremum { value, .. } => {
                assert!((value - 1.0).abs() <= 1e-9, "max {value}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn charnes_cooper_flags_empty_denominators() {
        let eq = vec![(vec![1.0, 1.0], 1.0), (vec![0.0, 1.0], 0.0)];
        // Conditioning event is the cell pinned to zero mass.
        let out = charnes_cooper(&eq, &[], 2, &[0.0, 1.0], &[0.0, 1.0], false).unwrap();
        assert!(matches!(out, CcOutcome::Infeasible));
    }

    #[test]
    fn bisection_certifies_a_curved_frontier() {
        // q0 q1 >= q2^2 with q0 >= 1/9. The supremum of
        // q2 / (q0 + q2) is (sqrt(33) - 1) / (sqrt(33) + 1), attained at
        // q0 = 1/9; the infimum is 0.
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(BilinearConstraint {
            a: vec![integer(0), integer(0), integer(1)],
            b: vec![integer(0), integer(0), integer(1)],
            u: vec![integer(1), integer(0), integer(0)],
            v: vec![integer(0), integer(1), integer(0)],
        });
        system.push_ineq(
            vec![integer(-1), integer(0), integer(0)],
            ratio(-1, 9),
        );
        let (mut ext, _) = ExtendedProblem::build(&system, &[]);
        assert_eq!(tighten_root_box(&mut ext).unwrap(), RootStatus::Feasible);

        let num = vec![0.0, 0.0, 1.0];
        let den = vec![1.0, 0.0, 1.0];
        let value_at = |q: &[f64]| -> Option<f64> {
            let d = q[0] + q[2];
            (d >= 1e-6).then(|| q[2] / d)
        };
        let search = RatioSearch {
            ext: &ext,
            target: ParametricTarget::ratio(num, den, ext.n_products()),
            value_at: &value_at,
            bracket: (0.0, 1.0),
            seed: Some(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
            den_range: relaxed_range(&ext, &[1.0, 0.0, 1.0], &vec![0.0; ext.n_products()]),
        };
        let cfg = SolverConfig::default();

        let lo = infimum(&search, &cfg, 1e-8).unwrap();
        assert!(lo.lower.abs() <= 1e-6, "inf {}", lo.lower);
        assert!(lo.best_value.unwrap() <= 1e-4);

        let hi = supremum(&search, &cfg, 1e-8).unwrap();
        let sqrt33 = 33.0_f64.sqrt();
        let expected = (sqrt33 - 1.0) / (sqrt33 + 1.0);
        assert!(
            (hi.lower - expected).abs() <= 2e-3,
            "sup {} vs {expected}",
            hi.lower
        );
        let w = hi.witness.unwrap();
        assert!(ext.violation(&w) <= 1e-6);
        assert!((hi.best_value.unwrap() - expected).abs() <= 2e-3);
    }
}

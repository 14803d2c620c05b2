//! Deterministic spatial branch-and-bound over McCormick relaxations.
//!
//! Minimizes a linear-plus-product objective over the cells subject to a
//! prepared [`ExtendedProblem`]. Nodes are explored best-first by their
//! relaxation bound; ties break on insertion order, so runs are exactly
//! reproducible. The certified lower bound aggregates every closed region,
//! never just the incumbent gap.

use crate::solver::relax::{node_lp, ExtendedProblem};
use crate::solver::simplex::{self, LpOutcome, LpProblem, SimplexStall};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

/// Objective `q_coeffs . q + sum_p z_coeffs[p] * product_p(q)`.
#[derive(Debug, Clone)]
pub struct QuadObjective {
    pub q_coeffs: Vec<f64>,
    pub z_coeffs: Vec<f64>,
}

impl QuadObjective {
    pub fn linear(row: Vec<f64>, n_products: usize) -> Self {
        QuadObjective {
            q_coeffs: row,
            z_coeffs: vec![0.0; n_products],
        }
    }

    pub fn eval(&self, ext: &ExtendedProblem, q: &[f64]) -> f64 {
        let mut v: f64 = self.q_coeffs.iter().zip(q).map(|(c, x)| c * x).sum();
        for (p, &c) in self.z_coeffs.iter().enumerate() {
            if c != 0.0 {
                v += c * ext.product_value(p, q);
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct BbConfig {
    /// Close a region once its bound is within this of the incumbent.
    pub gap_tol: f64,
    /// Cell-space violation allowed when accepting an incumbent.
    pub feas_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Number of polish starting points tried when hunting incumbents.
    pub polish_starts: usize,
}

impl Default for BbConfig {
    fn default() -> Self {
        BbConfig {
            gap_tol: 1e-6,
            feas_tol: 1e-8,
            node_limit: 200_000,
            time_limit: None,
            polish_starts: 3,
        }
    }
}

/// Optional stopping rules checked as the search progresses.
#[derive(Debug, Clone, Copy, Default)]
pub struct EarlyStop {
    /// Stop once the certified lower bound reaches this value.
    pub lb_at_least: Option<f64>,
    /// Stop once a feasible point at or below this value is known.
    pub incumbent_at_most: Option<f64>,
}

impl EarlyStop {
    pub fn none() -> Self {
        EarlyStop::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    /// Tree exhausted or incumbent gap closed to tolerance.
    Converged,
    /// An [`EarlyStop`] rule fired.
    EarlyStopped,
    /// Node or time limit reached with regions still open.
    LimitReached,
    /// Every region of the search space is infeasible.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct Incumbent {
    pub value: f64,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BbResult {
    /// Certified: no feasible point lies below this.
    pub lower_bound: f64,
    pub incumbent: Option<Incumbent>,
    pub status: BbStatus,
    pub nodes: usize,
}

struct Node {
    lb: f64,
    id: u64,
    boxes: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.lb == other.lb && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; reverse so the smallest bound pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Minimizes `obj` over the true (not relaxed) feasible set.
///
/// `lower_bound` in the result is always a sound outer bound; the incumbent,
/// when present, passed a full violation check at `cfg.feas_tol`.
pub fn minimize(
    ext: &ExtendedProblem,
    obj: &QuadObjective,
    cfg: &BbConfig,
    early: &EarlyStop,
) -> Result<BbResult, SimplexStall> {
    assert_eq!(obj.q_coeffs.len(), ext.n_cells);
    assert_eq!(obj.z_coeffs.len(), ext.n_products());
    let start = Instant::now();
    let mut heap = BinaryHeap::new();
    let mut next_id: u64 = 0;
    let mut nodes = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    // Minimum bound over regions closed by pruning, exact solves, stalls,
    // or exhausted boxes. Infinity while nothing has been closed that way.
    let mut closed_floor = f64::INFINITY;

    heap.push(Node {
        lb: f64::NEG_INFINITY,
        id: next_id,
        boxes: ext.root_box.clone(),
    });
    next_id += 1;

    let certified = |closed: f64, open: f64, inc: &Option<Incumbent>| -> f64 {
        let mut lb = closed.min(open);
        if let Some(i) = inc {
            lb = lb.min(i.value);
        }
        lb
    };

    let mut status = None;
    let mut final_lb = None;

    while let Some(node) = heap.pop() {
        let open_min = node.lb;
        let lb_now = certified(closed_floor, open_min, &incumbent);
        if let Some(t) = early.lb_at_least {
            if lb_now >= t {
                status = Some(BbStatus::EarlyStopped);
                final_lb = Some(lb_now);
                break;
            }
        }
        if let Some(inc) = &incumbent {
            if inc.value - lb_now <= cfg.gap_tol {
                status = Some(BbStatus::Converged);
                final_lb = Some(lb_now);
                break;
            }
        }
        if nodes >= cfg.node_limit
            || cfg.time_limit.is_some_and(|t| start.elapsed() > t)
        {
            status = Some(BbStatus::LimitReached);
            final_lb = Some(lb_now);
            break;
        }
        nodes += 1;

        let nl = node_lp(ext, &node.boxes, &obj.q_coeffs, &obj.z_coeffs);
        let (value, x) = match simplex::solve(&nl.problem) {
            // A stalled node keeps its inherited bound and is closed.
            Err(_) if nodes > 1 => {
                closed_floor = closed_floor.min(node.lb);
                continue;
            }
            Err(stall) => return Err(stall),
            Ok(LpOutcome::Infeasible) => continue,
            Ok(LpOutcome::Unbounded) => {
                // Shifted products are boxed, so this cannot happen unless
                // the input was malformed; treat like a stall.
                if nodes > 1 {
                    closed_floor = closed_floor.min(node.lb);
                    continue;
                }
                return Err(SimplexStall(0));
            }
            Ok(LpOutcome::Optimal { value, x }) => (value, x),
        };
        let lb = (value + nl.objective_constant).max(node.lb);

        if let Some(inc) = &incumbent {
            if lb >= inc.value - cfg.gap_tol {
                closed_floor = closed_floor.min(lb);
                continue;
            }
        }

        let q_lp = &x[..ext.n_cells];
        let do_polish = cfg.polish_starts > 0 && (nodes == 1 || nodes.is_multiple_of(4));
        let mut candidates: Vec<Vec<f64>> = vec![q_lp.to_vec()];
        if do_polish {
            if let Some(p) = polish(ext, obj, q_lp, cfg.feas_tol) {
                candidates.push(p);
            }
            if cfg.polish_starts > 1 {
                if let Some(inc) = &incumbent {
                    if let Some(p) = polish(ext, obj, &inc.q, cfg.feas_tol) {
                        candidates.push(p);
                    }
                }
            }
            if cfg.polish_starts > 2 {
                let n = ext.n_cells as f64;
                let blend: Vec<f64> =
                    q_lp.iter().map(|v| 0.5 * v + 0.5 / n).collect();
                if let Some(p) = polish(ext, obj, &blend, cfg.feas_tol) {
                    candidates.push(p);
                }
            }
        }
        for cand in candidates {
            if ext.violation(&cand) <= cfg.feas_tol {
                let v = obj.eval(ext, &cand);
                if incumbent.as_ref().is_none_or(|i| v < i.value) {
                    incumbent = Some(Incumbent { value: v, q: cand });
                }
            }
        }

        if let (Some(t), Some(inc)) = (early.incumbent_at_most, &incumbent) {
            if inc.value <= t {
                status = Some(BbStatus::EarlyStopped);
                let open = heap
                    .peek()
                    .map_or(f64::INFINITY, |n: &Node| n.lb)
                    .min(lb);
                final_lb = Some(certified(closed_floor, open, &incumbent));
                break;
            }
        }

        // Each form accumulates the relaxation error of the products it
        // appears in; the worst accumulator with a splittable box decides
        // where to branch.
        let mut form_score = vec![0.0_f64; ext.forms.len()];
        let mut worst = 0.0_f64;
        for p in 0..ext.n_products() {
            let z = x[ext.n_cells + p] + nl.zmin[p];
            let gap = (z - ext.product_value(p, q_lp)).abs();
            worst = worst.max(gap);
            let (fi, fj) = ext.products[p];
            form_score[fi] += gap;
            form_score[fj] += gap;
        }
        if worst <= 1e-12 {
            // Relaxation is exact here: the node is solved outright.
            closed_floor = closed_floor.min(lb);
            continue;
        }
        let mut f = 0usize;
        let mut best_score = -1.0_f64;
        for (i, &s) in form_score.iter().enumerate() {
            let w = node.boxes[i].1 - node.boxes[i].0;
            if s > 0.0 && w > 1e-10 && s * w > best_score {
                best_score = s * w;
                f = i;
            }
        }
        if best_score <= 0.0 {
            closed_floor = closed_floor.min(lb);
            continue;
        }
        let (lo, hi) = node.boxes[f];
        let w = hi - lo;
        if w <= 1e-10 {
            // Box too small to split; its residual relaxation error is
            // below certification tolerance.
            closed_floor = closed_floor.min(lb);
            continue;
        }
        let split = 0.5 * (lo + hi);
        for half in [(lo, split), (split, hi)] {
            let mut boxes = node.boxes.clone();
            boxes[f] = half;
            heap.push(Node {
                lb,
                id: next_id,
                boxes,
            });
            next_id += 1;
        }
    }

    let (status, lower_bound) = match (status, final_lb) {
        (Some(s), Some(lb)) => (s, lb),
        _ => {
            // Heap exhausted.
            if closed_floor.is_infinite() && incumbent.is_none() {
                (BbStatus::Infeasible, f64::INFINITY)
            } else {
                let lb = certified(closed_floor, f64::INFINITY, &incumbent);
                (BbStatus::Converged, lb)
            }
        }
    };
    Ok(BbResult {
        lower_bound,
        incumbent,
        status,
        nodes,
    })
}

/// Runs the polish loop outside a tree search: feasibility restoration
/// followed by damped objective descent from `start`. Callers use it to
/// ride a known-good point further along an objective without paying for
/// branching.
pub fn polish_point(
    ext: &ExtendedProblem,
    obj: &QuadObjective,
    start: &[f64],
    feas_tol: f64,
) -> Option<Vec<f64>> {
    polish(ext, obj, start, feas_tol)
}

/// Gauss-Newton style feasibility restoration: each pass minimizes the
/// total slack of the ordering rows linearized at the current point, in the
/// same relative units the violation check uses, with a halving line search
/// when the full step overshoots. Quadratic local convergence makes the
/// sharp relative tolerance reachable in a handful of passes. Returns
/// whether `q0` ended within tolerance.
fn restore_feasibility(
    ext: &ExtendedProblem,
    q0: &mut Vec<f64>,
    feas_tol: f64,
    passes: usize,
) -> bool {
    let n = ext.n_cells;
    let k = ext.ordered.len();
    if k == 0 {
        return ext.violation(q0) <= feas_tol;
    }
    let trace = std::env::var_os("PREVISION_TRACE_RESTORE").is_some();
    for pass in 0..passes {
        let v0 = ext.violation(q0);
        if v0 <= feas_tol {
            return true;
        }
        if trace {
            let mut worst = (0usize, 0.0_f64, 0.0_f64);
            for (idx, &(l, r)) in ext.ordered.iter().enumerate() {
                let zl = ext.product_value(l, q0);
                let zr = ext.product_value(r, q0);
                let scale = zl.abs().max(zr.abs()).max(1e-12);
                let rel = (zl - zr) / scale;
                if rel > worst.1 {
                    worst = (idx, rel, scale);
                }
            }
            eprintln!(
                "    restore pass {pass}: viol {v0:.3e} worst row {} rel {:.3e} scale {:.3e}",
                worst.0, worst.1, worst.2
            );
        }
        let width = n + k;
        let mut le: Vec<(Vec<f64>, f64)> = ext
            .le
            .iter()
            .map(|(r, b)| {
                let mut row = vec![0.0; width];
                row[..n].copy_from_slice(r);
                (row, *b)
            })
            .collect();
        let eq: Vec<(Vec<f64>, f64)> = ext
            .eq
            .iter()
            .map(|(r, b)| {
                let mut row = vec![0.0; width];
                row[..n].copy_from_slice(r);
                (row, *b)
            })
            .collect();
        for (idx, &(l, r)) in ext.ordered.iter().enumerate() {
            let (la, lb) = ext.products[l];
            let (ra, rb) = ext.products[r];
            let vals = [
                ext.form_value(la, q0),
                ext.form_value(lb, q0),
                ext.form_value(ra, q0),
                ext.form_value(rb, q0),
            ];
            let mut row = vec![0.0; width];
            if vals.iter().all(|&v| v > 1e-7) {
                // Log-space linearization: `ln zl <= ln zr` has a
                // scale-invariant gradient, so collapsing a conditioning
                // block toward zero is a neutral direction and cannot
                // masquerade as progress on a violated ratio.
                let g = (vals[0] * vals[1]).ln() - (vals[2] * vals[3]).ln();
                for (kk, dst) in row[..n].iter_mut().enumerate() {
                    *dst = ext.forms[la][kk] / vals[0] + ext.forms[lb][kk] / vals[1]
                        - ext.forms[ra][kk] / vals[2]
                        - ext.forms[rb][kk] / vals[3];
                }
                row[n + idx] = -1.0;
                let rhs: f64 =
                    row[..n].iter().zip(&*q0).map(|(a, b)| a * b).sum::<f64>() - g;
                le.push((row, rhs));
            } else {
                // A factor at or under the floor: fall back to the plain
                // linearization in relative units.
                let (g, grad) = linearized_gap(ext, l, r, q0);
                let scale = ext
                    .product_value(l, q0)
                    .abs()
                    .max(ext.product_value(r, q0).abs())
                    .max(1e-12);
                for (dst, src) in row[..n].iter_mut().zip(&grad) {
                    *dst = src / scale;
                }
                row[n + idx] = -1.0;
                let rhs: f64 = (grad.iter().zip(&*q0).map(|(a, b)| a * b).sum::<f64>()
                    - g)
                    / scale;
                le.push((row, rhs));
            }
        }
        let mut objective = vec![0.0; width];
        for v in objective[n..].iter_mut() {
            *v = 1.0;
        }
        let lp = LpProblem {
            n_vars: width,
            objective,
            eq,
            le,
        };
        let Ok(LpOutcome::Optimal { x, .. }) = simplex::solve(&lp) else {
            return false;
        };
        let full = x[..n].to_vec();
        let mut accepted = false;
        let mut blend = 1.0_f64;
        for _ in 0..4 {
            let cand: Vec<f64> = q0
                .iter()
                .zip(&full)
                .map(|(a, b)| (1.0 - blend) * a + blend * b)
                .collect();
            if ext.violation(&cand) < v0 {
                *q0 = cand;
                accepted = true;
                break;
            }
            blend *= 0.5;
        }
        if !accepted {
            if trace {
                eprintln!(
                    "    restore: line search failed, full-step viol {:.3e}",
                    ext.violation(&full)
                );
            }
            return false;
        }
    }
    ext.violation(q0) <= feas_tol
}

/// Sequential linearization polish: pushes a starting point to feasibility,
/// then walks the objective downhill along linearized product constraints.
/// Returns a point that passed the true violation check, or nothing.
fn polish(
    ext: &ExtendedProblem,
    obj: &QuadObjective,
    start: &[f64],
    feas_tol: f64,
) -> Option<Vec<f64>> {
    let n = ext.n_cells;
    let mut q0 = start.to_vec();
    for v in q0.iter_mut() {
        *v = v.max(0.0);
    }
    if !restore_feasibility(ext, &mut q0, feas_tol, 30) {
        return None;
    }

    // Objective phase: damped linearized descent, accepting only moves
    // that stay truly feasible.
    let mut best = q0.clone();
    let mut best_val = obj.eval(ext, &best);
    let mut step = 0.1;
    for _ in 0..8 {
        if step < 1e-6 {
            break;
        }
        let mut le: Vec<(Vec<f64>, f64)> = ext.le.clone();
        for &(l, r) in &ext.ordered {
            let (g, grad) = linearized_gap(ext, l, r, &q0);
            let rhs: f64 =
                grad.iter().zip(&q0).map(|(a, b)| a * b).sum::<f64>() - g;
            le.push((grad, rhs));
        }
        for j in 0..n {
            let mut up = vec![0.0; n];
            up[j] = 1.0;
            le.push((up, q0[j] + step));
            let mut down = vec![0.0; n];
            down[j] = -1.0;
            le.push((down, step - q0[j]));
        }
        let mut objective = obj.q_coeffs.clone();
        for (p, &c) in obj.z_coeffs.iter().enumerate() {
            if c != 0.0 {
                let (i, j) = ext.products[p];
                let a = ext.form_value(i, &q0);
                let b = ext.form_value(j, &q0);
                for (k, o) in objective.iter_mut().enumerate() {
                    *o += c * (b * ext.forms[i][k] + a * ext.forms[j][k]);
                }
            }
        }
        let lp = LpProblem {
            n_vars: n,
            objective,
            eq: ext.eq.clone(),
            le,
        };
        match simplex::solve(&lp) {
            Ok(LpOutcome::Optimal { x, .. }) => {
                // The step LP only sees linearized products, so pull its
                // point back to true feasibility before judging it.
                let mut q1 = x[..n].to_vec();
                if ext.violation(&q1) > feas_tol {
                    restore_feasibility(ext, &mut q1, feas_tol, 6);
                }
                let v1 = obj.eval(ext, &q1);
                if ext.violation(&q1) <= feas_tol && v1 < best_val - 1e-12 {
                    best = q1.clone();
                    best_val = v1;
                    q0 = q1;
                } else {
                    step *= 0.5;
                }
            }
            _ => {
                step *= 0.5;
            }
        }
    }
    Some(best)
}

/// Value and gradient of `product_l - product_r` at `q0`.
fn linearized_gap(
    ext: &ExtendedProblem,
    l: usize,
    r: usize,
    q0: &[f64],
) -> (f64, Vec<f64>) {
    let n = ext.n_cells;
    let mut grad = vec![0.0; n];
    let mut add = |p: usize, sign: f64| {
        let (i, j) = ext.products[p];
        let a = ext.form_value(i, q0);
        let b = ext.form_value(j, q0);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += sign * (b * ext.forms[i][k] + a * ext.forms[j][k]);
        }
    };
    add(l, 1.0);
    add(r, -1.0);
    let g = ext.product_value(l, q0) - ext.product_value(r, q0);
    (g, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{compile, Assertion, BilinearConstraint, ConstraintSystem};
    use crate::events::{enumerate_realm, EventExpr, Quantity, Workspace};
    use crate::numeric::{integer, ratio, Rational};
    use crate::solver::relax::{tighten_root_box, RootStatus};

    fn rational_row(coeffs: &[i64]) -> Vec<Rational> {
        coeffs.iter().map(|&c| integer(c)).collect()
    }

    fn prepared(system: &ConstraintSystem) -> ExtendedProblem {
        let (mut ext, _) = ExtendedProblem::build(system, &[]);
        assert_eq!(tighten_root_box(&mut ext).unwrap(), RootStatus::Feasible);
        ext
    }

    #[test]
    fn squared_mass_cap_converges() {
        // Two cells; q0^2 <= 1/4 forces q0 <= 1/2 even though the root
        // relaxation only sees q0 <= 5/8.
        let mut system = ConstraintSystem::new(2);
        system.push_bilinear(BilinearConstraint {
            a: rational_row(&[1, 0]),
            b: rational_row(&[1, 0]),
            u: vec![ratio(1, 2), ratio(1, 2)],
            v: vec![ratio(1, 2), ratio(1, 2)],
        });
        let ext = prepared(&system);
        let obj = QuadObjective::linear(vec![-1.0, 0.0], ext.n_products());
        let out = minimize(&ext, &obj, &BbConfig::default(), &EarlyStop::none()).unwrap();
        assert_eq!(out.status, BbStatus::Converged);
        assert!((out.lower_bound + 0.5).abs() <= 1e-5, "lb {}", out.lower_bound);
        let inc = out.incumbent.unwrap();
        assert!((inc.q[0] - 0.5).abs() <= 1e-5);
    }

    #[test]
    fn geometric_mean_frontier() {
        // q0 q1 >= q2^2 on the 3-cell simplex caps q2 at 1/3.
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(BilinearConstraint {
            a: rational_row(&[0, 0, 1]),
            b: rational_row(&[0, 0, 1]),
            u: rational_row(&[1, 0, 0]),
            v: rational_row(&[0, 1, 0]),
        });
        let ext = prepared(&system);
        let obj = QuadObjective::linear(vec![0.0, 0.0, -1.0], ext.n_products());
        let out = minimize(&ext, &obj, &BbConfig::default(), &EarlyStop::none()).unwrap();
        assert_eq!(out.status, BbStatus::Converged);
        assert!(
            (out.lower_bound + 1.0 / 3.0).abs() <= 1e-5,
            "lb {}",
            out.lower_bound
        );
        let inc = out.incumbent.unwrap();
        assert!(ext.violation(&inc.q) <= 1e-8);
        assert!((inc.value + 1.0 / 3.0).abs() <= 1e-5);
    }

    #[test]
    fn conflicting_assertions_are_infeasible() {
        let ws = Workspace::new(["A", "B"]).unwrap();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        let realm = enumerate_realm(
            &ws,
            vec![Quantity::event("A", a.clone()), Quantity::event("B", b.clone())],
            None,
        )
        .unwrap();
        let system = compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: a.clone(),
                    value: ratio(7, 10),
                },
                Assertion::Prevision {
                    expr: a,
                    value: ratio(1, 5),
                },
            ],
        )
        .unwrap();
        let (ext, _) = ExtendedProblem::build(&system, &[]);
        let obj = QuadObjective::linear(vec![0.0; 4], 0);
        let out = minimize(&ext, &obj, &BbConfig::default(), &EarlyStop::none()).unwrap();
        assert_eq!(out.status, BbStatus::Infeasible);
        assert!(out.incumbent.is_none());
    }

    #[test]
    fn linear_systems_resolve_at_the_root() {
        // Matches the simplex test polytope; no products at all.
        let mut system = ConstraintSystem::new(4);
        system.push_eq(rational_row(&[0, 0, 1, 1]), ratio(7, 10));
        let ext = prepared(&system);
        let obj = QuadObjective::linear(vec![0.0, 0.0, -1.0, -1.0], 0);
        let out = minimize(&ext, &obj, &BbConfig::default(), &EarlyStop::none()).unwrap();
        assert_eq!(out.status, BbStatus::Converged);
        assert_eq!(out.nodes, 1);
        assert!((out.lower_bound + 0.7).abs() <= 1e-9);
        let inc = out.incumbent.unwrap();
        assert!((inc.value + 0.7).abs() <= 1e-9);
    }

    #[test]
    fn early_stop_on_incumbent_value() {
        let mut system = ConstraintSystem::new(3);
        system.push_bilinear(BilinearConstraint {
            a: rational_row(&[0, 0, 1]),
            b: rational_row(&[0, 0, 1]),
            u: rational_row(&[1, 0, 0]),
            v: rational_row(&[0, 1, 0]),
        });
        let ext = prepared(&system);
        let obj = QuadObjective::linear(vec![0.0, 0.0, -1.0], ext.n_products());
        let stop = EarlyStop {
            lb_at_least: None,
            incumbent_at_most: Some(-0.2),
        };
        let out = minimize(&ext, &obj, &BbConfig::default(), &stop).unwrap();
        assert_eq!(out.status, BbStatus::EarlyStopped);
        let inc = out.incumbent.unwrap();
        assert!(inc.value <= -0.2);
        // The certified bound is still sound.
        assert!(out.lower_bound <= -1.0 / 3.0 + 1e-9);
    }
}

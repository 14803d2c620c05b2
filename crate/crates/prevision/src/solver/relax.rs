//! Extended-variable relaxation of bilinear constraint systems.
//!
//! Every product inequality `(a.q)(b.q) <= (u.q)(v.q)` is rewritten over
//! auxiliary variables: one per distinct *form* (a linear row over the
//! cells) and one per distinct *product* of two forms. A node of the
//! branch-and-bound tree owns an interval box per form; products are
//! relaxed there with the four McCormick envelope rows, which are exact at
//! the box corners and tighten as boxes shrink.
//!
//! The LP assembled for a node keeps the cell variables `q` and one shifted
//! variable per product; form values are substituted inline as rows over
//! `q`, so no explicit form variables are added.

use crate::assertions::ConstraintSystem;
use crate::numeric::{row_to_f64, Rational};
use crate::solver::simplex::{self, LpOutcome, LpProblem, SimplexStall};
use std::collections::BTreeMap;

/// A bilinear system prepared for spatial branch-and-bound.
#[derive(Debug, Clone)]
pub struct ExtendedProblem {
    pub n_cells: usize,
    /// Distinct linear forms referenced by products, as f64 rows over cells.
    pub forms: Vec<Vec<f64>>,
    /// Distinct products of forms, by form index, lower index first.
    pub products: Vec<(usize, usize)>,
    /// Product inequalities `products[left] <= products[right]`.
    pub ordered: Vec<(usize, usize)>,
    /// Pairs `(p, r)` with `z_p <= z_r` at every nonnegative point because
    /// the factor forms dominate coefficient-wise. Valid cuts the envelopes
    /// alone cannot reproduce.
    pub dominated: Vec<(usize, usize)>,
    /// Linear equalities and inequalities over the cells.
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
    /// Interval box per form at the root, tightened by [`tighten_root_box`].
    pub root_box: Vec<(f64, f64)>,
}

struct Registry {
    forms: BTreeMap<Vec<Rational>, usize>,
    products: BTreeMap<(usize, usize), usize>,
}

impl Registry {
    fn form(&mut self, row: &[Rational], out: &mut Vec<Vec<f64>>) -> usize {
        if let Some(&i) = self.forms.get(row) {
            return i;
        }
        let i = out.len();
        self.forms.insert(row.to_vec(), i);
        out.push(row_to_f64(row));
        i
    }

    fn product(&mut self, a: usize, b: usize, out: &mut Vec<(usize, usize)>) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&i) = self.products.get(&key) {
            return i;
        }
        let i = out.len();
        self.products.insert(key, i);
        out.push(key);
        i
    }
}

impl ExtendedProblem {
    /// Prepares `system` for branch-and-bound. `extra_pairs` registers
    /// additional products needed by an objective; the returned vector maps
    /// each pair to its product index.
    pub fn build(
        system: &ConstraintSystem,
        extra_pairs: &[(Vec<Rational>, Vec<Rational>)],
    ) -> (Self, Vec<usize>) {
        let mut registry = Registry {
            forms: BTreeMap::new(),
            products: BTreeMap::new(),
        };
        let mut forms = Vec::new();
        let mut products = Vec::new();
        let mut ordered = Vec::new();
        for c in &system.bilinear_ineq {
            let ia = registry.form(&c.a, &mut forms);
            let ib = registry.form(&c.b, &mut forms);
            let iu = registry.form(&c.u, &mut forms);
            let iv = registry.form(&c.v, &mut forms);
            let left = registry.product(ia, ib, &mut products);
            let right = registry.product(iu, iv, &mut products);
            ordered.push((left, right));
        }
        let mut extra = Vec::with_capacity(extra_pairs.len());
        for (a, b) in extra_pairs {
            let ia = registry.form(a, &mut forms);
            let ib = registry.form(b, &mut forms);
            extra.push(registry.product(ia, ib, &mut products));
        }
        // A form value is a convex combination of its coefficients, so the
        // coefficient range is a sound starting box.
        let root_box = forms
            .iter()
            .map(|row| {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect();
        // Coefficient-wise dominance between forms transfers to products
        // sharing a nonnegative factor, since cells are nonnegative too.
        // Restricting to shared-factor pairs keeps the row count linearish.
        let nonneg: Vec<bool> = forms
            .iter()
            .map(|row| row.iter().all(|&v| v >= 0.0))
            .collect();
        let dom = |a: usize, b: usize| -> bool {
            a != b && forms[a].iter().zip(&forms[b]).all(|(x, y)| x <= y)
        };
        let mut dominated = Vec::new();
        for (p, &(i, j)) in products.iter().enumerate() {
            for (r, &(k, l)) in products.iter().enumerate() {
                if p == r {
                    continue;
                }
                let le_pr = (i == k && nonneg[i] && dom(j, l))
                    || (i == l && nonneg[i] && dom(j, k))
                    || (j == k && nonneg[j] && dom(i, l))
                    || (j == l && nonneg[j] && dom(i, k));
                if le_pr {
                    dominated.push((p, r));
                }
            }
        }
        let ext = ExtendedProblem {
            n_cells: system.n_cells,
            forms,
            products,
            ordered,
            dominated,
            eq: system
                .linear_eq
                .iter()
                .map(|c| (c.row_f64(), c.rhs_f64()))
                .collect(),
            le: system
                .linear_ineq
                .iter()
                .map(|c| (c.row_f64(), c.rhs_f64()))
                .collect(),
            root_box,
        };
        (ext, extra)
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn form_value(&self, form: usize, q: &[f64]) -> f64 {
        self.forms[form].iter().zip(q).map(|(a, x)| a * x).sum()
    }

    pub fn product_value(&self, product: usize, q: &[f64]) -> f64 {
        let (i, j) = self.products[product];
        self.form_value(i, q) * self.form_value(j, q)
    }

    /// Worst violation of the cell-space constraints at `q`: negativity,
    /// linear rows, and the true (not relaxed) product inequalities.
    ///
    /// Product rows are judged relative to the larger of the two products.
    /// Near a vanishing conditioning event both sides shrink quadratically,
    /// and an absolute slack there would admit points whose conditional
    /// structure is wrong by whole percents.
    pub fn violation(&self, q: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in q {
            worst = worst.max(-x);
        }
        for (row, rhs) in &self.eq {
            let v: f64 = row.iter().zip(q).map(|(a, x)| a * x).sum();
            worst = worst.max((v - rhs).abs());
        }
        for (row, rhs) in &self.le {
            let v: f64 = row.iter().zip(q).map(|(a, x)| a * x).sum();
            worst = worst.max(v - rhs);
        }
        for &(left, right) in &self.ordered {
            let zl = self.product_value(left, q);
            let zr = self.product_value(right, q);
            let scale = zl.abs().max(zr.abs()).max(1e-12);
            worst = worst.max((zl - zr) / scale);
        }
        worst
    }
}

/// Feasibility verdict of the linear relaxation at the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootStatus {
    Feasible,
    Infeasible,
}

/// Tightens every form's root box by minimizing and maximizing the form
/// over the linear rows alone. This is sound for the full system (the
/// bilinear rows only shrink the feasible set) and often collapses forms
/// that the assertions pin to a constant.
pub fn tighten_root_box(ext: &mut ExtendedProblem) -> Result<RootStatus, SimplexStall> {
    if ext.forms.is_empty() {
        let probe = LpProblem {
            n_vars: ext.n_cells,
            objective: vec![0.0; ext.n_cells],
            eq: ext.eq.clone(),
            le: ext.le.clone(),
        };
        return Ok(match simplex::solve(&probe)? {
            LpOutcome::Infeasible => RootStatus::Infeasible,
            _ => RootStatus::Feasible,
        });
    }
    for i in 0..ext.forms.len() {
        let problem = LpProblem {
            n_vars: ext.n_cells,
            objective: ext.forms[i].clone(),
            eq: ext.eq.clone(),
            le: ext.le.clone(),
        };
        let lo = match simplex::solve(&problem)? {
            LpOutcome::Optimal { value, .. } => value - 1e-9,
            LpOutcome::Infeasible => return Ok(RootStatus::Infeasible),
            LpOutcome::Unbounded => f64::NEG_INFINITY,
        };
        let hi = match simplex::solve_max(&problem)? {
            LpOutcome::Optimal { value, .. } => value + 1e-9,
            LpOutcome::Infeasible => return Ok(RootStatus::Infeasible),
            LpOutcome::Unbounded => f64::INFINITY,
        };
        let (rlo, rhi) = ext.root_box[i];
        let lo = lo.max(rlo);
        let hi = hi.min(rhi).max(lo);
        ext.root_box[i] = (lo, hi);
    }

    // Second stage: re-bound each form under the McCormick relaxation of the
    // product constraints at the current boxes. Each pass uses the previous
    // pass's boxes, so the relaxation only ever contains the true feasible
    // set and the tightening stays sound. Stalls here are harmless: the form
    // just keeps the box it already had.
    let np = ext.products.len();
    for _ in 0..2 {
        let mut shrunk = 0.0_f64;
        for i in 0..ext.forms.len() {
            let (rlo, rhi) = ext.root_box[i];
            if rhi - rlo <= 1e-6 {
                continue;
            }
            let mut obj_q = ext.forms[i].clone();
            let boxes = ext.root_box.clone();
            let nl = node_lp(ext, &boxes, &obj_q, &vec![0.0; np]);
            let lo = match simplex::solve(&nl.problem) {
                Ok(LpOutcome::Optimal { value, .. }) => value - 1e-9,
                Ok(LpOutcome::Infeasible) => return Ok(RootStatus::Infeasible),
                _ => rlo,
            };
            for v in obj_q.iter_mut() {
                *v = -*v;
            }
            let nl = node_lp(ext, &boxes, &obj_q, &vec![0.0; np]);
            let hi = match simplex::solve(&nl.problem) {
                Ok(LpOutcome::Optimal { value, .. }) => -value + 1e-9,
                Ok(LpOutcome::Infeasible) => return Ok(RootStatus::Infeasible),
                _ => rhi,
            };
            let lo = lo.max(rlo);
            let hi = hi.min(rhi).max(lo);
            shrunk = shrunk.max((lo - rlo).max(rhi - hi));
            ext.root_box[i] = (lo, hi);
        }
        if shrunk < 1e-4 {
            break;
        }
    }
    Ok(RootStatus::Feasible)
}

/// Node LP plus the bookkeeping needed to interpret its solution.
pub struct NodeLp {
    pub problem: LpProblem,
    /// Shift applied to each product variable so it starts at zero.
    pub zmin: Vec<f64>,
    /// Constant folded out of the objective by the shifts.
    pub objective_constant: f64,
}

fn corner_range(bi: (f64, f64), bj: (f64, f64)) -> (f64, f64) {
    let corners = [bi.0 * bj.0, bi.0 * bj.1, bi.1 * bj.0, bi.1 * bj.1];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        lo = lo.min(c);
        hi = hi.max(c);
    }
    (lo, hi)
}

/// Builds the LP relaxation of a node with the given form boxes.
///
/// Variables are the cells followed by one shifted variable per product.
/// The objective is `obj_q` on the cells plus `obj_z` on the (unshifted)
/// products; add `objective_constant` to the LP optimum to undo the shift.
pub fn node_lp(
    ext: &ExtendedProblem,
    boxes: &[(f64, f64)],
    obj_q: &[f64],
    obj_z: &[f64],
) -> NodeLp {
    let n = ext.n_cells;
    let np = ext.products.len();
    let width = n + np;
    let pad = |row: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; width];
        out[..n].copy_from_slice(row);
        out
    };

    let eq: Vec<(Vec<f64>, f64)> = ext.eq.iter().map(|(r, b)| (pad(r), *b)).collect();
    let mut le: Vec<(Vec<f64>, f64)> = ext.le.iter().map(|(r, b)| (pad(r), *b)).collect();

    // Box rows only where branching tightened a side; root bounds follow
    // from the linear rows themselves.
    for (i, (&(lo, hi), &(rlo, rhi))) in boxes.iter().zip(&ext.root_box).enumerate() {
        if lo > rlo {
            let mut row = pad(&ext.forms[i]);
            for v in row.iter_mut() {
                *v = -*v;
            }
            le.push((row, -lo));
        }
        if hi < rhi {
            le.push((pad(&ext.forms[i]), hi));
        }
    }

    let mut zmin = Vec::with_capacity(np);
    for (p, &(i, j)) in ext.products.iter().enumerate() {
        let (lo, _hi) = corner_range(boxes[i], boxes[j]);
        zmin.push(lo);
        let (li, hi_i) = boxes[i];
        let (lj, hj) = boxes[j];
        let zcol = n + p;
        // Lower envelopes: z >= lj x_i + li x_j - li lj and the opposite
        // corner; written as <= rows in the shifted variable.
        let mut under1 = vec![0.0; width];
        let mut under2 = vec![0.0; width];
        let mut over1 = vec![0.0; width];
        let mut over2 = vec![0.0; width];
        for (k, (&fi, &fj)) in ext.forms[i].iter().zip(&ext.forms[j]).enumerate() {
            under1[k] = lj * fi + li * fj;
            under2[k] = hj * fi + hi_i * fj;
            over1[k] = -(hj * fi) - li * fj;
            over2[k] = -(lj * fi) - hi_i * fj;
        }
        under1[zcol] = -1.0;
        under2[zcol] = -1.0;
        over1[zcol] = 1.0;
        over2[zcol] = 1.0;
        le.push((under1, li * lj + lo));
        le.push((under2, hi_i * hj + lo));
        le.push((over1, -li * hj - lo));
        le.push((over2, -hi_i * lj - lo));
    }

    for &(left, right) in ext.ordered.iter().chain(&ext.dominated) {
        let mut row = vec![0.0; width];
        row[n + left] = 1.0;
        row[n + right] = -1.0;
        le.push((row, zmin[right] - zmin[left]));
    }

    let mut objective = vec![0.0; width];
    objective[..n].copy_from_slice(obj_q);
    let mut constant = 0.0;
    for (p, &c) in obj_z.iter().enumerate() {
        objective[n + p] = c;
        constant += c * zmin[p];
    }

    // Equality rows stay over the cells only; pad left them untouched.
    debug_assert!(eq.iter().all(|(r, _)| r.len() == width));

    NodeLp {
        problem: LpProblem {
            n_vars: width,
            objective,
            eq,
            le,
        },
        zmin,
        objective_constant: constant,
    }
}

/// Certified range of a linear functional of cells and products over the
/// root relaxation. The relaxation contains the true feasible set, so the
/// returned interval brackets the functional everywhere feasible. Falls
/// back to interval arithmetic over the root boxes when an LP stalls.
pub fn relaxed_range(ext: &ExtendedProblem, obj_q: &[f64], obj_z: &[f64]) -> (f64, f64) {
    let fallback = |sign: f64| -> f64 {
        let mut v = 0.0;
        for &c in obj_q {
            let c = sign * c;
            // Cells live in [0, 1].
            if c > 0.0 {
                v += c;
            }
        }
        for (p, &c) in obj_z.iter().enumerate() {
            let c = sign * c;
            let (i, j) = ext.products[p];
            let (lo, hi) = corner_range(ext.root_box[i], ext.root_box[j]);
            v += if c > 0.0 { c * hi } else { c * lo };
        }
        v
    };
    let boxes = ext.root_box.clone();
    let solve_dir = |sign: f64| -> f64 {
        let oq: Vec<f64> = obj_q.iter().map(|v| sign * v).collect();
        let oz: Vec<f64> = obj_z.iter().map(|v| sign * v).collect();
        let nl = node_lp(ext, &boxes, &oq, &oz);
        match simplex::solve(&nl.problem) {
            Ok(LpOutcome::Optimal { value, .. }) => sign * (value + nl.objective_constant),
            _ => sign * -fallback(-sign),
        }
    };
    let lo = solve_dir(1.0);
    let hi = solve_dir(-1.0);
    (lo.min(hi), hi.max(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{compile, Assertion, OrderingSide};
    use crate::events::{enumerate_realm, EventExpr, Quantity, Workspace};
    use crate::numeric::ratio;

    fn toy_system() -> ConstraintSystem {
        let ws = Workspace::new(["A", "B"]).unwrap();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let b = EventExpr::atom(ws.atom("B").unwrap());
        let realm = enumerate_realm(
            &ws,
            vec![
                Quantity::event("A", a.clone()),
                Quantity::event("B", b.clone()),
            ],
            None,
        )
        .unwrap();
        compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: a.clone(),
                    value: ratio(1, 2),
                },
                // P(A | B) <= P(A | ~B): different conditioning events.
                Assertion::Ordering {
                    lesser: OrderingSide::conditional(a.clone(), b.clone()),
                    greater: OrderingSide::conditional(a, EventExpr::not(b)),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn builder_dedupes_forms_and_products() {
        let system = toy_system();
        let (ext, extra) = ExtendedProblem::build(
            &system,
            &[(system.bilinear_ineq[0].a.clone(), system.bilinear_ineq[0].b.clone())],
        );
        // Rows: AB, ~B, A~B, B; the extra pair reuses two of them.
        assert_eq!(ext.forms.len(), 4);
        assert_eq!(ext.products.len(), 2);
        assert_eq!(ext.ordered, vec![(0, 1)]);
        assert_eq!(extra, vec![0]);
    }

    #[test]
    fn root_box_tightens_to_asserted_values() {
        let system = toy_system();
        let (mut ext, _) = ExtendedProblem::build(&system, &[]);
        assert_eq!(tighten_root_box(&mut ext).unwrap(), RootStatus::Feasible);
        // Form AB lives inside P(A) = 1/2, so its box caps at 1/2.
        for (i, &(_, hi)) in ext.root_box.iter().enumerate() {
            let is_sub_a = ext.forms[i]
                .iter()
                .enumerate()
                .all(|(j, &v)| v == 0.0 || j >= 2);
            if is_sub_a {
                assert!(hi <= 0.5 + 1e-6, "form {i} box {hi}");
            }
        }
    }

    #[test]
    fn node_lp_envelopes_contain_true_products() {
        let system = toy_system();
        let (mut ext, _) = ExtendedProblem::build(&system, &[]);
        tighten_root_box(&mut ext).unwrap();
        let boxes = ext.root_box.clone();
        let nl = node_lp(&ext, &boxes, &[1.0, 0.0, 0.0, 0.0], &[]);
        // Any feasible q extended with the true product values must satisfy
        // the relaxation rows.
        let q = [0.1, 0.4, 0.3, 0.2];
        let mut x: Vec<f64> = q.to_vec();
        for p in 0..ext.n_products() {
            x.push(ext.product_value(p, &q) - nl.zmin[p]);
        }
        for (row, rhs) in &nl.problem.le {
            let v: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(v <= rhs + 1e-9, "violated relaxation row: {v} > {rhs}");
        }
    }

    #[test]
    fn infeasible_roots_are_detected() {
        let ws = Workspace::new(["A"]).unwrap();
        let a = EventExpr::atom(ws.atom("A").unwrap());
        let realm =
            enumerate_realm(&ws, vec![Quantity::event("A", a.clone())], None).unwrap();
        let system = compile(
            &realm,
            &[
                Assertion::Prevision {
                    expr: a.clone(),
                    value: ratio(7, 10),
                },
                Assertion::Prevision {
                    expr: a,
                    value: ratio(2, 10),
                },
            ],
        )
        .unwrap();
        let (mut ext, _) = ExtendedProblem::build(&system, &[]);
        assert_eq!(tighten_root_box(&mut ext).unwrap(), RootStatus::Infeasible);
    }
}

//! Dense two-phase primal simplex over f64.
//!
//! Problems arrive in the form: minimize `c . x` subject to `A x = b`,
//! `G x <= h`, `x >= 0`. Slack variables absorb inequality rows; artificial
//! variables make phase 1 start basic. Pivoting uses Dantzig's rule and
//! falls back to Bland's rule when the objective stops improving, so the
//! iteration always terminates. All arithmetic is sequential f64, which
//! keeps repeated solves byte-for-byte reproducible.
//!
//! The solver is intentionally plain: every system in this crate has at
//! most a few hundred rows, so a dense tableau beats sparse bookkeeping.

use thiserror::Error;

/// Coefficient magnitudes below this are treated as zero when pivoting.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs above `-REDUCED_COST_TOL` count as optimal.
const REDUCED_COST_TOL: f64 = 1e-9;
/// Phase-1 artificial mass above this means the system is infeasible.
const PHASE1_TOL: f64 = 1e-7;

/// Minimize `objective . x` over `eq` and `le` rows with `x >= 0`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

/// Solver verdict for one LP.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// The pivot loop hit its iteration cap without resolving the problem.
#[derive(Debug, Clone, Error)]
#[error("simplex made no progress within {0} pivots")]
pub struct SimplexStall(pub usize);

struct Tableau {
    /// One constraint per row; the last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; its last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    n_total: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_total]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        // Renormalize exactly to kill drift on the pivot column.
        self.rows[row][col] = 1.0;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.n_total {
                    self.rows[i][j] -= factor * self.rows[row][j];
                }
                self.rows[i][col] = 0.0;
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for j in 0..=self.n_total {
                self.obj[j] -= factor * self.rows[row][j];
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Entering column, or None at optimality. `allowed_end` excludes the
    /// artificial block once phase 1 is done.
    fn entering(&self, bland: bool, allowed_end: usize) -> Option<usize> {
        if bland {
            (0..allowed_end).find(|&j| self.obj[j] < -REDUCED_COST_TOL)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..allowed_end {
                let r = self.obj[j];
                if r < -REDUCED_COST_TOL && best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    /// Leaving row by minimum ratio; ties go to the smallest basis index,
    /// which is what makes the Bland fallback anti-cycling.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][col];
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                let better = match best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < br - 1e-12
                            || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs the pivot loop on the current objective row. Returns false at a
    /// dead end (entering column with no leaving row, i.e. unbounded).
    fn iterate(&mut self, allowed_end: usize, budget: &mut usize) -> Result<bool, SimplexStall> {
        let mut bland = false;
        let mut since_improvement = 0usize;
        let stall_window = 2 * (self.rows.len() + self.n_total) + 16;
        let mut last_value = f64::INFINITY;
        loop {
            let Some(col) = self.entering(bland, allowed_end) else {
                return Ok(true);
            };
            let Some(row) = self.leaving(col) else {
                return Ok(false);
            };
            if *budget == 0 {
                return Err(SimplexStall(0));
            }
            *budget -= 1;
            self.pivot(row, col);
            let value = -self.obj[self.n_total];
            if value < last_value - 1e-12 {
                last_value = value;
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement > stall_window {
                    bland = true;
                }
            }
        }
    }
}

/// Solves the problem with a fresh tableau.
pub fn solve(p: &LpProblem) -> Result<LpOutcome, SimplexStall> {
    let n = p.n_vars;
    let m = p.eq.len() + p.le.len();
    let n_slack = p.le.len();
    let first_artificial = n + n_slack;

    // First pass: coefficient and slack blocks only, remembering which rows
    // start with a basic slack. Rows are negated to a nonnegative rhs, which
    // flips their slack sign and costs them the basis seat.
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let build_row = |coeffs: &[f64], rhs: f64, slack: Option<usize>| -> (Vec<f64>, Option<usize>) {
        debug_assert_eq!(coeffs.len(), n);
        let mut row = vec![0.0; first_artificial + 1];
        row[..n].copy_from_slice(coeffs);
        if let Some(s) = slack {
            row[n + s] = 1.0;
        }
        row[first_artificial] = rhs;
        let negate = rhs < 0.0;
        if negate {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        (row, slack.filter(|_| !negate))
    };

    for (k, (coeffs, rhs)) in p.le.iter().enumerate() {
        let (row, slack_basic) = build_row(coeffs, *rhs, Some(k));
        rows.push(row);
        basis.push(slack_basic.map(|s| n + s));
    }
    for (coeffs, rhs) in &p.eq {
        let (row, _) = build_row(coeffs, *rhs, None);
        rows.push(row);
        basis.push(None);
    }

    // Artificial columns exist only for rows without a basic slack, so the
    // tableau stays as narrow as the instance allows.
    let n_art = basis.iter().filter(|b| b.is_none()).count();
    let n_total = first_artificial + n_art;
    let mut basis_cols = Vec::with_capacity(m);
    let mut next_art = first_artificial;
    for (i, b) in basis.iter().enumerate() {
        let rhs = rows[i].pop().expect("row has rhs");
        rows[i].resize(n_total, 0.0);
        rows[i].push(rhs);
        match b {
            Some(col) => basis_cols.push(*col),
            None => {
                rows[i][next_art] = 1.0;
                basis_cols.push(next_art);
                next_art += 1;
            }
        }
    }

    let mut t = Tableau {
        rows,
        obj: vec![0.0; n_total + 1],
        basis: basis_cols,
        n_total,
    };

    let pivot_cap = 2000 + 40 * (m + n_total);
    let mut budget = pivot_cap;

    // Phase 1: minimize the artificial mass. Reduced costs of the phase-1
    // objective are minus the sum of rows with a basic artificial.
    let needs_phase1 = t.basis.iter().any(|&b| b >= first_artificial);
    if needs_phase1 {
        let mut obj = vec![0.0; n_total + 1];
        obj[first_artificial..n_total].fill(1.0);
        for i in 0..t.rows.len() {
            if t.basis[i] >= first_artificial {
                for (o, v) in obj.iter_mut().zip(&t.rows[i]) {
                    *o -= v;
                }
            }
        }
        t.obj = obj;
        let finished = t
            .iterate(n_total, &mut budget)
            .map_err(|_| SimplexStall(pivot_cap))?;
        let artificial_mass = -t.obj[n_total];
        if artificial_mass > PHASE1_TOL {
            // The artificial mass is bounded below by zero, so an
            // "unbounded" verdict here is a numerical dead end, not a
            // certificate of anything.
            if !finished {
                return Err(SimplexStall(pivot_cap));
            }
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot leftover artificials out; rows that offer no pivot are
        // linearly dependent and get dropped.
        let mut drop_rows = Vec::new();
        for i in 0..t.rows.len() {
            if t.basis[i] < first_artificial {
                continue;
            }
            let col = (0..first_artificial).find(|&j| t.rows[i][j].abs() > PHASE1_TOL);
            match col {
                Some(j) => t.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
        for &i in drop_rows.iter().rev() {
            t.rows.remove(i);
            t.basis.remove(i);
        }
    }

    // Phase 2 objective: reduced costs of the real objective under the
    // current basis. Artificial columns are never allowed back in.
    let cost = |col: usize| -> f64 {
        if col < n {
            p.objective[col]
        } else {
            0.0
        }
    };
    let mut obj = vec![0.0; n_total + 1];
    obj[..n].copy_from_slice(&p.objective);
    for i in 0..t.rows.len() {
        let c = cost(t.basis[i]);
        if c != 0.0 {
            for (o, v) in obj.iter_mut().zip(&t.rows[i]) {
                *o -= c * v;
            }
        }
    }
    t.obj = obj;
    let finished = t
        .iterate(first_artificial, &mut budget)
        .map_err(|_| SimplexStall(pivot_cap))?;
    if !finished {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal { value, x })
}

/// Convenience wrapper: maximize instead of minimize.
pub fn solve_max(p: &LpProblem) -> Result<LpOutcome, SimplexStall> {
    let negated = LpProblem {
        n_vars: p.n_vars,
        objective: p.objective.iter().map(|c| -c).collect(),
        eq: p.eq.clone(),
        le: p.le.clone(),
    };
    Ok(match solve(&negated)? {
        LpOutcome::Optimal { value, x } => LpOutcome::Optimal { value: -value, x },
        other => other,
    })
}

//! Hull geometry: the realm's columns as points in quantity space, the
//! affine slice the asserted previsions cut through them, and the segment
//! of coherent values for each target.
//!
//! The coherent prevision vectors are exactly the convex hull of the realm
//! columns; an assertion pins the vector to a slice of that hull, and a
//! target's attainable values trace a segment inside it. With at most
//! three quantities all of this is directly plottable, which is the sole
//! purpose of this module.

use thiserror::Error;

use crate::assertions::{compile, CompileError, ConstraintSystem};
use crate::events::Realm;
use crate::numeric::{to_f64, Rational};
use crate::scenario::BuiltScenario;
use crate::solver::{bounds, SolveStatus, SolverConfig};

use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HullError {
    #[error("hull output needs at most 3 quantities, the scenario defines {0}; re-run with a quantity subset")]
    TooManyQuantities(usize),
    #[error("the assertions are incoherent; there is no hull slice to draw")]
    Incoherent,
    #[error("target `{0}`: {1}")]
    Target(String, String),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// One affine row of the slice, in quantity coordinates:
/// `coeffs . x (=|<=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub equality: bool,
}

/// Endpoint witnesses of one target, mapped into quantity coordinates.
#[derive(Debug, Clone)]
pub struct Segment {
    pub target: String,
    pub lower: f64,
    pub upper: f64,
    pub min_point: Vec<f64>,
    pub max_point: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HullGeometry {
    /// Quantity names, the coordinate axes.
    pub names: Vec<String>,
    /// One point per realm column, labelled by its configuration bits.
    pub vertices: Vec<(String, Vec<Rational>)>,
    /// Assertion rows expressible in quantity coordinates.
    pub slice: Vec<SliceRow>,
    /// Constraint rows that have no affine form in these coordinates
    /// (they still shaped the segments, they just cannot be drawn).
    pub undrawable: usize,
    pub segments: Vec<Segment>,
}

/// Computes the geometry of a built scenario. Bounds for every listed
/// target are solved with `cfg`, so bilinear scenarios work too; only the
/// drawing of their constraint rows is skipped.
pub fn hull_geometry(built: &BuiltScenario, cfg: &SolverConfig) -> Result<HullGeometry, HullError> {
    let realm = &built.realm;
    let k = realm.quantities().len();
    if k > 3 {
        return Err(HullError::TooManyQuantities(k));
    }
    let names: Vec<String> = realm.quantities().iter().map(|q| q.name.clone()).collect();

    let vertices: Vec<(String, Vec<Rational>)> = (0..realm.n_columns())
        .map(|j| {
            let label = realm.column_config(j).to_string();
            let coords = (0..k).map(|i| realm.value(i, j).clone()).collect();
            (label, coords)
        })
        .collect();

    let system = compile(realm, &built.assertions)?;
    let (slice, undrawable) = project_rows(realm, &system);

    let mut segments = Vec::new();
    for (name, target) in &built.targets {
        let res = bounds(&system, target, cfg)
            .map_err(|e| HullError::Target(name.clone(), e.to_string()))?;
        match res.status {
            SolveStatus::Infeasible => return Err(HullError::Incoherent),
            SolveStatus::UnboundedDenominator => {
                return Err(HullError::Target(
                    name.clone(),
                    "conditioning event has no probability anywhere".to_string(),
                ))
            }
            _ => {}
        }
        let project = |q: &Option<Vec<f64>>| -> Option<Vec<f64>> {
            q.as_ref().map(|q| {
                (0..k)
                    .map(|i| {
                        realm
                            .quantity_row(i)
                            .iter()
                            .zip(q)
                            .map(|(c, x)| to_f64(c) * x)
                            .sum()
                    })
                    .collect()
            })
        };
        let (Some(min_point), Some(max_point)) =
            (project(&res.witness_min), project(&res.witness_max))
        else {
            return Err(HullError::Target(
                name.clone(),
                "solver returned no endpoint witnesses".to_string(),
            ));
        };
        segments.push(Segment {
            target: name.clone(),
            lower: res.lower,
            upper: res.upper,
            min_point,
            max_point,
        });
    }

    Ok(HullGeometry {
        names,
        vertices,
        slice,
        undrawable,
        segments,
    })
}

/// Rewrites each linear constraint row in quantity coordinates where an
/// exact affine form exists. A row `a . q (=|<=) b` is drawable when
/// `a = sum_i c_i M_i + c0 * 1` for realm rows `M_i`; on the simplex the
/// row then reads `sum_i c_i x_i <= b - c0`.
fn project_rows(realm: &Realm, system: &ConstraintSystem) -> (Vec<SliceRow>, usize) {
    let k = realm.quantities().len();
    let n = realm.n_columns();
    let mut drawable = Vec::new();
    let mut undrawable = system.bilinear_ineq.len();

    // Columns of the solve: the k quantity rows and the all-ones row.
    let basis: Vec<Vec<Rational>> = (0..k)
        .map(|i| realm.quantity_row(i).to_vec())
        .chain(std::iter::once(vec![Rational::one(); n]))
        .collect();

    let rows = system
        .linear_eq
        .iter()
        .map(|c| (c, true))
        .chain(system.linear_ineq.iter().map(|c| (c, false)));
    for (c, equality) in rows {
        // The total-probability row is the simplex itself, not a slice.
        if equality && c.row.iter().all(|v| v.is_one()) && c.rhs.is_one() {
            continue;
        }
        match solve_exact(&basis, &c.row) {
            Some(mut coeffs) => {
                let c0 = coeffs.pop().expect("constant coordinate");
                drawable.push(SliceRow {
                    coeffs,
                    rhs: c.rhs.clone() - c0,
                    equality,
                });
            }
            None => undrawable += 1,
        }
    }
    (drawable, undrawable)
}

/// Solves `sum_j x_j * basis[j] = rhs` exactly, if a solution exists.
fn solve_exact(basis: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let m = rhs.len();
    let k = basis.len();
    // Augmented system, one equation per cell.
    let mut a: Vec<Vec<Rational>> = (0..m)
        .map(|row| {
            (0..k)
                .map(|col| basis[col][row].clone())
                .chain(std::iter::once(rhs[row].clone()))
                .collect()
        })
        .collect();

    let mut pivot_of_col = vec![usize::MAX; k];
    let mut rank = 0;
    for col in 0..k {
        let Some(p) = (rank..m).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let inv = a[rank][col].clone();
        for v in a[rank].iter_mut() {
            *v /= &inv;
        }
        for r in 0..m {
            if r != rank && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for col2 in 0..=k {
                    let delta = &f * &a[rank][col2];
                    a[r][col2] -= delta;
                }
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
    }
    // Inconsistent when a zero row keeps a nonzero right-hand side.
    for r in rank..m {
        if !a[r][k].is_zero() {
            return None;
        }
    }
    Some(
        (0..k)
            .map(|col| {
                if pivot_of_col[col] == usize::MAX {
                    Rational::zero()
                } else {
                    a[pivot_of_col[col]][k].clone()
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integer, ratio, to_f64};
    use crate::scenario::builtin;

    fn geometry(name: &str) -> HullGeometry {
        let built = builtin::document(name).unwrap().build().unwrap();
        hull_geometry(&built, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn agreement_hull_matches_the_tetrahedron() {
        let g = geometry("agreement");
        let coords: Vec<Vec<i64>> = g
            .vertices
            .iter()
            .map(|(_, v)| v.iter().map(|x| to_f64(x) as i64).collect())
            .collect();
        assert_eq!(
            coords,
            vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 1]]
        );
        // Two asserted previsions cut the slice.
        assert_eq!(g.slice.len(), 2);
        assert!(g.slice.iter().all(|r| r.equality));
        assert_eq!(g.slice[0].coeffs, vec![integer(1), integer(0), integer(0)]);
        assert_eq!(g.slice[0].rhs, ratio(7, 10));
        assert_eq!(g.undrawable, 0);

        let seg = &g.segments[0];
        assert!((seg.lower - 0.10).abs() < 1e-9);
        assert!((seg.upper - 0.50).abs() < 1e-9);
        // Witness endpoints sit on the slice and attain the bounds.
        for (point, value) in [(&seg.min_point, 0.10), (&seg.max_point, 0.50)] {
            assert!((point[0] - 0.7).abs() < 1e-9);
            assert!((point[1] - 0.2).abs() < 1e-9);
            assert!((point[2] - value).abs() < 1e-9);
        }
    }

    #[test]
    fn exchangeable_hull_segment_runs_to_the_top_vertex() {
        let g = geometry("agreement-exchangeable");
        let seg = &g.segments[0];
        assert!((seg.lower - 0.40).abs() < 1e-9);
        assert!((seg.upper - 1.00).abs() < 1e-9);
        assert!((seg.max_point[2] - 1.0).abs() < 1e-9);
        // Exchangeability's orbit row q01 = q10 is not an affine row in
        // (E1, E2, E3) coordinates alone... but it is: E1 - E2 = 0.
        assert!(g.slice.iter().any(|r| {
            let flipped: Vec<_> = r.coeffs.iter().map(|c| -c.clone()).collect();
            r.equality
                && r.rhs.is_zero()
                && (r.coeffs == vec![integer(1), integer(-1), integer(0)]
                    || flipped == vec![integer(1), integer(-1), integer(0)])
        }));
    }

    #[test]
    fn pinned_scenario_collapses_the_segment() {
        let text = r#"{
            "atoms": ["A"],
            "quantities": [{"name": "A", "expr": "A"}],
            "assertions": [{"type": "prevision", "expr": "A", "value": 0.25}],
            "targets": [{"name": "P(A)", "type": "linear", "expr": "A"}]
        }"#;
        let built = crate::scenario::ScenarioDocument::from_json(text)
            .unwrap()
            .build()
            .unwrap();
        let g = hull_geometry(&built, &SolverConfig::default()).unwrap();
        let seg = &g.segments[0];
        assert!((seg.lower - seg.upper).abs() < 1e-12);
        assert!((seg.min_point[0] - seg.max_point[0]).abs() < 1e-9);
    }

    #[test]
    fn four_quantities_are_refused() {
        let text = r#"{
            "atoms": ["A", "B"],
            "quantities": [
                {"name": "A", "expr": "A"},
                {"name": "B", "expr": "B"},
                {"name": "C", "expr": "A and B"},
                {"name": "D", "expr": "A or B"}
            ]
        }"#;
        let built = crate::scenario::ScenarioDocument::from_json(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(
            hull_geometry(&built, &SolverConfig::default()).unwrap_err(),
            HullError::TooManyQuantities(4)
        );
    }

    #[test]
    fn incoherent_assertions_have_no_slice() {
        let text = r#"{
            "atoms": ["A"],
            "quantities": [{"name": "A", "expr": "A"}],
            "assertions": [
                {"type": "prevision", "expr": "A", "value": 0.7},
                {"type": "prevision", "expr": "A", "value": 0.2}
            ],
            "targets": [{"name": "P(A)", "type": "linear", "expr": "A"}]
        }"#;
        let built = crate::scenario::ScenarioDocument::from_json(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(
            hull_geometry(&built, &SolverConfig::default()).unwrap_err(),
            HullError::Incoherent
        );
    }
}

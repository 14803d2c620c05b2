// Temporary bench: node counts and LP sizes on the heaviest study column.
use std::time::Instant;

use prevision::asbestos::{build_realm, scenario, ScenarioColumn};
use prevision::assertions::compile;
use prevision::solver::bb::{self, BbConfig, EarlyStop, QuadObjective};
use prevision::solver::relax::{node_lp, tighten_root_box, ExtendedProblem};
use prevision::solver::SolverConfig;

fn main() {
    let realm = build_realm();
    let col: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let column = ScenarioColumn::ALL[col];
    let sc = scenario(&realm, column);
    let system = compile(&realm, &sc.assertions).unwrap();
    println!(
        "system: eq {} ineq {} bilinear {}",
        system.linear_eq.len(),
        system.linear_ineq.len(),
        system.bilinear_ineq.len()
    );

    let (mut ext, _) = ExtendedProblem::build(&system, &[]);
    println!("ext: forms {} products {}", ext.forms.len(), ext.products.len());
    let t = Instant::now();
    let st = tighten_root_box(&mut ext).unwrap();
    println!("obbt: {:?} in {:.2?}", st, t.elapsed());

    let row_f = realm.indicator_row_f64(
        &prevision::events::EventExpr::atom(realm.workspace().atom("F").unwrap()),
    ).unwrap();
    let nl = node_lp(&ext, &ext.root_box.clone(), &row_f, &vec![0.0; ext.products.len()]);
    println!(
        "node lp: vars {} eq {} le {}",
        nl.problem.n_vars,
        nl.problem.eq.len(),
        nl.problem.le.len()
    );

    let cfg = SolverConfig::default();
    let bbc = BbConfig {
        gap_tol: cfg.gap_tol,
        feas_tol: cfg.feas_tol_bilinear,
        node_limit: cfg.node_limit,
        time_limit: None,
        polish_starts: cfg.polish_starts,
    };
    for dir in [1.0f64, -1.0] {
        let obj_row: Vec<f64> = row_f.iter().map(|v| v * dir).collect();
        let obj = QuadObjective::linear(obj_row, ext.products.len());
        let t = Instant::now();
        let res = bb::minimize(&ext, &obj, &bbc, &EarlyStop::none()).unwrap();
        println!(
            "dir {dir:+.0}: lb {:.6} inc {:?} nodes {} status {:?} in {:.2?}",
            res.lower_bound,
            res.incumbent.as_ref().map(|i| i.value),
            res.nodes,
            res.status,
            t.elapsed()
        );
    }
}

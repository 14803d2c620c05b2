use prevision::asbestos::{build_realm, scenario, ScenarioColumn};
use prevision::assertions::compile;
use prevision::numeric::row_to_f64;
use prevision::solver::bb::QuadObjective;
use prevision::solver::relax::{node_lp, tighten_root_box, ExtendedProblem};
use prevision::solver::simplex::{self, LpOutcome};

fn main() {
    let realm = build_realm();
    let sc = scenario(&realm, ScenarioColumn::CondExFic82);
    let sys = compile(&realm, &sc.assertions).unwrap();
    let (mut ext, _) = ExtendedProblem::build(&sys, &[]);
    tighten_root_box(&mut ext).unwrap();
    let fq: Vec<f64> = row_to_f64(realm.quantity_row(realm.quantity_index("F").unwrap()));
    let ds: Vec<f64> = row_to_f64(realm.quantity_row(realm.quantity_index("D*").unwrap()));
    let num: Vec<f64> = fq.iter().zip(&ds).map(|(a, b)| a * b).collect();
    let den = fq.clone();
    let t = 0.83_f64;
    let obj_q: Vec<f64> = num.iter().zip(&den).map(|(n, d)| n - t * d).collect();
    let obj_z = vec![0.0; ext.n_products()];
    let nl = node_lp(&ext, &ext.root_box.clone(), &obj_q, &obj_z);
    let LpOutcome::Optimal { value, x } = simplex::solve(&nl.problem).unwrap() else {
        panic!()
    };
    let q0 = x[..ext.n_cells].to_vec();
    println!(
        "root lb {:.4e}  violation at q_lp {:.4e}",
        value + nl.objective_constant,
        ext.violation(&q0)
    );
    println!(
        "den at q_lp {:.4e}  obj {:.4e}",
        den.iter().zip(&q0).map(|(a, b)| a * b).sum::<f64>(),
        obj_q.iter().zip(&q0).map(|(a, b)| a * b).sum::<f64>()
    );
    let zero = QuadObjective::linear(vec![0.0; ext.n_cells], ext.n_products());
    match prevision::solver::bb::polish_point(&ext, &zero, &q0, 1e-8) {
        Some(p) => println!(
            "polish ok violation {:.4e} den {:.4e} obj {:.4e}",
            ext.violation(&p),
            den.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>(),
            obj_q.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()
        ),
        None => println!("polish FAILED from root point"),
    }
    let real = QuadObjective::linear(obj_q.clone(), ext.n_products());
    match prevision::solver::bb::polish_point(&ext, &real, &q0, 1e-8) {
        Some(p) => println!(
            "obj-polish ok violation {:.4e} den {:.4e} obj {:.4e} ratio {:.6}",
            ext.violation(&p),
            den.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>(),
            obj_q.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>(),
            num.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()
                / den.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()
        ),
        None => println!("obj-polish FAILED from root point"),
    }
}

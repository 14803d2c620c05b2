use prevision::asbestos::{
    build_realm, scenario, table1_targets, table2_targets, ScenarioColumn, REFERENCE_TABLE1,
    REFERENCE_TABLE2,
};
use prevision::assertions::compile;
use prevision::solver::{bounds, SolverConfig};

fn main() {
    let col: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let only: Option<usize> = std::env::args().nth(2).and_then(|s| s.parse().ok());
    let column = ScenarioColumn::ALL[col];
    let realm = build_realm();
    let cfg = SolverConfig::default();
    let system = compile(&realm, &scenario(&realm, column).assertions).unwrap();
    eprintln!(
        "{}: eq {} ineq {} bilinear {}",
        column.label(),
        system.linear_eq.len(),
        system.linear_ineq.len(),
        system.bilinear_ineq.len()
    );
    let t1 = table1_targets(&realm).unwrap();
    let t2 = table2_targets(&realm).unwrap();
    let all: Vec<_> = t1.into_iter().chain(t2).collect();
    for (i, target) in all.iter().enumerate() {
        if let Some(k) = only {
            if k != i {
                continue;
            }
        }
        let t0 = std::time::Instant::now();
        match bounds(&system, target, &cfg) {
            Ok(out) => {
                let want = if i < 9 {
                    format!("{:?}", REFERENCE_TABLE1[i][col])
                } else {
                    format!("{:?}", REFERENCE_TABLE2[i - 9][col])
                };
                println!(
                    "target {i:2}: ({:.4}, {:.4}) gap {:.1e} {:?} want {want} in {:?}",
                    out.lower, out.upper, out.certified_gap, out.status, t0.elapsed()
                );
            }
            Err(e) => println!("target {i:2}: ERROR {e} in {:?}", t0.elapsed()),
        }
    }
}

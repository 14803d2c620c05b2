use prevision::asbestos::{build_realm, scenario, table1_targets, ScenarioColumn};
use prevision::assertions::compile;
use prevision::numeric::to_f64;
use prevision::solver::{bounds, SolverConfig, Target};

fn main() {
    let realm = build_realm();
    let column = ScenarioColumn::CondExFic82;
    let asserts = scenario(&realm, column);
    let system = compile(&realm, &asserts.assertions).unwrap();
    let targets = table1_targets(&realm).unwrap();
    let cfg = SolverConfig::default();
    let idx: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let res = bounds(&system, &targets[idx], &cfg).unwrap();
    println!(
        "target {idx}: ({:.6}, {:.6}) {:?}",
        res.lower, res.upper, res.status
    );
    let Target::Conditional { num, den } = &targets[idx] else {
        return;
    };
    for (name, w) in [("min", &res.witness_min), ("max", &res.witness_max)] {
        let Some(q) = w else {
            println!("{name}: no witness");
            continue;
        };
        let dot = |row: &[prevision::numeric::Rational]| -> f64 {
            row.iter().zip(q.iter()).map(|(a, b)| to_f64(a) * b).sum()
        };
        let nv = dot(num);
        let dv = dot(den);
        println!("{name} witness:");
        for (i, v) in q.iter().enumerate() {
            if v.abs() > 1e-9 {
                println!("  q[{i:2}] = {v:.9}");
            }
        }
        println!("  num = {nv:.9}  den = {dv:.9}  ratio = {:.9}", nv / dv);
        // residuals of every constraint at the witness
        let mut worst_eq = 0.0_f64;
        for c in &system.linear_eq {
            let r: f64 = c
                .row
                .iter()
                .zip(q.iter())
                .map(|(a, b)| to_f64(a) * b)
                .sum::<f64>()
                - c.rhs_f64();
            worst_eq = worst_eq.max(r.abs());
        }
        let mut worst_le = 0.0_f64;
        for c in &system.linear_ineq {
            let r: f64 = c
                .row
                .iter()
                .zip(q.iter())
                .map(|(a, b)| to_f64(a) * b)
                .sum::<f64>()
                - c.rhs_f64();
            worst_le = worst_le.max(r);
        }
        let mut worst_bl = 0.0_f64;
        for c in &system.bilinear_ineq {
            let a: f64 = c.a.iter().zip(q.iter()).map(|(x, y)| to_f64(x) * y).sum();
            let b: f64 = c.b.iter().zip(q.iter()).map(|(x, y)| to_f64(x) * y).sum();
            let u: f64 = c.u.iter().zip(q.iter()).map(|(x, y)| to_f64(x) * y).sum();
            let v: f64 = c.v.iter().zip(q.iter()).map(|(x, y)| to_f64(x) * y).sum();
            worst_bl = worst_bl.max(a * b - u * v);
        }
        println!("  residuals: eq {worst_eq:.2e}  le {worst_le:.2e}  bilinear {worst_bl:.2e}");
    }
}

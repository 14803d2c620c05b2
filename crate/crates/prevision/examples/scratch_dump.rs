use prevision::asbestos::{build_realm, scenario, ScenarioColumn};
use prevision::assertions::compile;
use prevision::solver::relax::ExtendedProblem;

fn main() {
    let realm = build_realm();
    let sc = scenario(&realm, ScenarioColumn::CondExFic82);
    let sys = compile(&realm, &sc.assertions).unwrap();
    let (ext, _) = ExtendedProblem::build(&sys, &[]);
    println!("cells {} forms {} products {} ordered {} dominated {}",
        ext.n_cells, ext.forms.len(), ext.products.len(), ext.ordered.len(), ext.dominated.len());
    for (i, f) in ext.forms.iter().enumerate() {
        let supp: Vec<usize> = f.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect();
        let coef: Vec<f64> = supp.iter().map(|&j| f[j]).collect();
        println!("form {i:2}: supp {supp:?} coef {coef:?}");
    }
    for (p, &(i, j)) in ext.products.iter().enumerate() {
        println!("prod {p:2} = f{i} * f{j}");
    }
    for &(l, r) in &ext.ordered {
        println!("ord  z{l} <= z{r}");
    }
}

use corrdesign::*;
use corrdesign::problem::{BasisSpec, DesignGrid, GridSpec, KappaChoice, KernelSpec};

fn main() {
    let grid = DesignGrid::build(&GridSpec::Linspace { lo: 1.0, hi: 2.0, n_points: 9 }).unwrap();
    let problem = ProblemInstance::build(
        grid,
        &BasisSpec::Monomial { degree: 3 },
        &KernelSpec::Brownian,
        5,
        KappaChoice::Auto,
        1e-6,
    )
    .unwrap();
    for idx in [vec![0usize, 2, 5, 7, 8], vec![0usize, 1, 3, 6, 8]] {
        let d = ExactDesign::new(idx.clone(), 9).unwrap();
        let phi = phi_exact(&problem, Criterion::D, &d).unwrap();
        println!("{idx:?}: phi = {phi:.15e}");
    }
    let exs = exhaustive(&problem, Criterion::D, 2_000_000).unwrap();
    println!("exhaustive: {:?} phi = {:.15e}", exs.indices, exs.phi);
}

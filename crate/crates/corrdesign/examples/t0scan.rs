//! Which exchange starting designs reach the published final designs?
//! Runs the exchange from a family of deterministic starts and from many
//! seeded random starts, reporting the attractor of each.

use corrdesign::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn nearest_indices(problem: &ProblemInstance, pts: &[f64]) -> Vec<usize> {
    let grid = problem.grid();
    pts.iter()
        .map(|&t| {
            (0..grid.n_points())
                .min_by(|&a, &b| {
                    (grid.point(a)[0] - t)
                        .abs()
                        .partial_cmp(&(grid.point(b)[0] - t).abs())
                        .unwrap()
                })
                .unwrap()
        })
        .collect()
}

fn main() {
    let random_starts: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(300);
    for id in [ExampleId::One, ExampleId::Two, ExampleId::Four] {
        let ex = build_example(id).unwrap();
        let problem = &ex.problem;
        let criterion = ex.criterion;
        let n = problem.n();
        let nn = problem.n_points();
        let paper: Vec<usize> = reference_table(id)
            .into_iter()
            .find(|r| r.method == MethodTag::Bksf)
            .and_then(|r| r.points.map(|p| nearest_indices(problem, &p)))
            .unwrap();
        println!("== instance {id} (criterion {criterion:?}, n={n}) paper design {paper:?}");

        let uniform = DesignMeasure::uniform(nn, n).unwrap();
        let mut starts: Vec<(String, Vec<usize>)> = vec![
            ("first-n".into(), (0..n).collect()),
            ("last-n".into(), (nn - n..nn).collect()),
            (
                "equispaced".into(),
                equispaced_design(problem, n).unwrap().indices().to_vec(),
            ),
            (
                "plain-quantile-uniform".into(),
                quantile_extract(&uniform, n, QuantileMode::Plain)
                    .unwrap()
                    .indices()
                    .to_vec(),
            ),
            (
                "ep-quantile-uniform".into(),
                quantile_extract(&uniform, n, QuantileMode::WithEndpoints)
                    .unwrap()
                    .indices()
                    .to_vec(),
            ),
            (
                "greedy".into(),
                greedy_design(problem, criterion, n).unwrap().indices().to_vec(),
            ),
        ];
        for shift in 0..3 {
            let step = nn / n;
            let idx: Vec<usize> = (0..n).map(|k| (shift + k * step).min(nn - 1)).collect();
            starts.push((format!("strided+{shift}"), idx));
        }
        for row in reference_table(id) {
            if let Some(pts) = &row.points {
                if row.method == MethodTag::QuantileVn
                    || row.method == MethodTag::QuantileVnEndpoints
                {
                    starts.push((format!("paper-{}", row.method), nearest_indices(problem, pts)));
                }
            }
        }
        for (label, idx) in &starts {
            let t0 = ExactDesign::new(idx.clone(), nn).unwrap();
            match bksf(problem, criterion, &t0) {
                Ok(r) => {
                    let hit = if r.indices == paper { "  <-- PAPER" } else { "" };
                    println!("  {label:<24} {idx:?} -> {:?}{hit}", r.indices);
                }
                Err(e) => println!("  {label:<24} {idx:?} -> error {e}"),
            }
        }

        // random starts: basin census
        let mut basins: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut failures = 0usize;
        for s in 0..random_starts {
            let mut rng = ChaCha8Rng::seed_from_u64(555);
            rng.set_stream(s as u64);
            let mut idx = rand::seq::index::sample(&mut rng, nn, n).into_vec();
            idx.sort_unstable();
            let t0 = ExactDesign::new(idx, nn).unwrap();
            match bksf(problem, criterion, &t0) {
                Ok(r) => *basins.entry(r.indices).or_insert(0) += 1,
                Err(_) => failures += 1,
            }
        }
        let mut counted: Vec<(Vec<usize>, usize)> = basins.into_iter().collect();
        counted.sort_by(|a, b| b.1.cmp(&a.1));
        println!("  random starts: {random_starts} runs, {failures} failures, top attractors:");
        for (idx, count) in counted.iter().take(6) {
            let hit = if *idx == paper { "  <-- PAPER" } else { "" };
            let phi = phi_exact(
                problem,
                criterion,
                &ExactDesign::new(idx.clone(), nn).unwrap(),
            )
            .unwrap();
            println!("    {count:>4}x {idx:?} phi={phi:.6e}{hit}");
        }
    }
}

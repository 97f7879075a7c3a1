//! Calibration harness: solves a built-in instance, certifies the bound,
//! runs each design-construction method, and prints computed efficiencies
//! next to the published ones. Used to pick default parameters; not part
//! of the shipped test suite.

use corrdesign::cutplane::{GapRule, SolveOptions};
use corrdesign::*;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("usage: calibrate <id> [--rel-tol X] [--max-iters K] [--exs] [--no-random]");
        std::process::exit(2);
    }
    let id = ExampleId::parse(&args[0]).expect("unknown instance id");
    let mut rel_tol = 1e-4;
    let mut max_iters = 4000usize;
    let mut run_exs = false;
    let mut run_random = true;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--rel-tol" => {
                rel_tol = args[i + 1].parse().unwrap();
                i += 2;
            }
            "--max-iters" => {
                max_iters = args[i + 1].parse().unwrap();
                i += 2;
            }
            "--exs" => {
                run_exs = true;
                i += 1;
            }
            "--no-random" => {
                run_random = false;
                i += 1;
            }
            other => panic!("unknown flag {other}"),
        }
    }

    let ex = build_example(id).unwrap();
    let problem = &ex.problem;
    let criterion = ex.criterion;
    let n = problem.n();
    println!(
        "instance {} N={} p={} n={} criterion={:?} kappa={:.6e} lambda_min={:.6e} eps={:.1e}",
        id,
        problem.n_points(),
        problem.p(),
        n,
        criterion,
        problem.kappa(),
        problem.lambda_min(),
        problem.epsilon()
    );

    let t0 = std::time::Instant::now();
    let opts = SolveOptions {
        gap_rule: GapRule::Relative(rel_tol),
        max_iters,
        initial_anchors: vec![],
    };
    let report = optimize_measure(problem, criterion, &opts).unwrap();
    let solve_secs = t0.elapsed().as_secs_f64();
    println!(
        "solve: k={} converged={} stop={:?} phi={:.9e} t={:.9e} gap={:.3e} [{:.1}s]",
        report.iterations.len(),
        report.converged,
        report.stop_reason,
        report.final_phi,
        report.iterations.last().map(|r| r.t).unwrap_or(f64::NAN),
        report.iterations.last().map(|r| r.gap).unwrap_or(f64::NAN),
        solve_secs
    );
    let cert = certify(problem, criterion, &report.final_measure).unwrap();
    println!(
        "certificate: phi={:.9e} delta={:.3e} bound={:.9e} delta_rel={:.3e} optimal={}",
        cert.phi,
        cert.delta,
        cert.upper_bound,
        cert.delta / cert.phi,
        cert.is_optimal
    );
    let bound = cert.upper_bound;
    let xi = &report.final_measure;

    // mass profile head: heaviest indices
    let mut heavy: Vec<(usize, f64)> =
        xi.weights().iter().copied().enumerate().collect();
    heavy.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    print!("heaviest weights:");
    for (i, w) in heavy.iter().take(8) {
        print!(" [{i}]={w:.4}");
    }
    println!();

    let show = |label: &str, r: &MethodResult| {
        let pts: Vec<String> = r
            .points
            .iter()
            .map(|p| {
                p.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("/")
            })
            .collect();
        println!(
            "{label:<22} eff={:.4} phi={:.6e} idx={:?} pts=[{}]{}",
            r.phi / bound,
            r.phi,
            r.indices,
            pts.join(", "),
            r.stats
                .map(|s| format!(
                    " median_eff={:.4} best_eff={:.4}",
                    s.median_phi / bound,
                    s.best_phi / bound
                ))
                .unwrap_or_default()
        );
    };

    for mode in [QuantileMode::Plain, QuantileMode::WithEndpoints] {
        match quantile_method(problem, criterion, xi, n, mode) {
            Ok(r) => show(&format!("quantile {mode:?}"), &r),
            Err(e) => println!("quantile {mode:?} failed: {e}"),
        }
    }

    // diagnostic: CDF inversion under the exclusive-prefix convention
    // (smallest i whose mass strictly before it reaches q)
    let shifted = |weights: &[f64], qs: &[f64], offset: usize, limit: usize| -> Vec<usize> {
        let mut cum = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            cum.push(acc); // mass strictly before index i
            acc += w;
        }
        let mut taken: Vec<usize> = Vec::new();
        for &q in qs {
            let mut idx = cum
                .iter()
                .position(|&c| c >= q - 1e-9)
                .unwrap_or(weights.len() - 1);
            while taken.contains(&idx) && idx + 1 < limit {
                idx += 1;
            }
            taken.push(idx);
        }
        taken.iter().map(|&i| i + offset).collect()
    };
    {
        let qs: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let idx = shifted(xi.weights(), &qs, 0, problem.n_points());
        if let Ok(d) = ExactDesign::from_unsorted(idx.clone(), problem.n_points()) {
            if let Ok(phi) = phi_exact(problem, criterion, &d) {
                println!(
                    "quantile Plain-excl      eff={:.4} phi={:.6e} idx={:?}",
                    phi / bound,
                    phi,
                    d.indices()
                );
            }
        }
        let nn = problem.n_points();
        let interior: Vec<f64> = xi.weights()[1..nn - 1].to_vec();
        let total: f64 = interior.iter().sum();
        let scaled: Vec<f64> = interior.iter().map(|v| v / total).collect();
        let qs: Vec<f64> = (1..=n - 2).map(|k| k as f64 / (n - 1) as f64).collect();
        let mut idx = shifted(&scaled, &qs, 1, nn - 1);
        idx.insert(0, 0);
        idx.push(nn - 1);
        if let Ok(d) = ExactDesign::from_unsorted(idx.clone(), nn) {
            if let Ok(phi) = phi_exact(problem, criterion, &d) {
                println!(
                    "quantile WithEP-excl     eff={:.4} phi={:.6e} idx={:?}",
                    phi / bound,
                    phi,
                    d.indices()
                );
            }
        }
    }

    // exchange starts
    let mut starts: Vec<(String, ExactDesign)> = Vec::new();
    if let Ok(d) = equispaced_design(problem, n) {
        starts.push(("equispaced".into(), d));
    }
    if let Ok(d) = greedy_design(problem, criterion, n) {
        starts.push(("greedy".into(), d));
    }
    if let Ok(d) = quantile_extract(&DesignMeasure::uniform(problem.n_points(), n).unwrap(), n, QuantileMode::Plain)
    {
        starts.push(("interior-quantile".into(), d));
    }
    if let Ok(d) = quantile_extract(xi, n, QuantileMode::Plain) {
        starts.push(("measure-quantile".into(), d));
    }
    // published final designs: are they fixed points of the exchange?
    for row in reference_table(id) {
        if row.method != MethodTag::Bksf && row.method != MethodTag::Exhaustive {
            continue;
        }
        let Some(pts) = &row.points else { continue };
        let grid = problem.grid();
        let indices: Vec<usize> = pts
            .iter()
            .map(|&target| {
                (0..grid.n_points())
                    .min_by(|&a, &b| {
                        let da = (grid.point(a)[0] - target).abs();
                        let db = (grid.point(b)[0] - target).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap()
            })
            .collect();
        if let Ok(d) = ExactDesign::new(indices, grid.n_points()) {
            starts.push((format!("paper-{}", row.method), d));
        }
    }
    for (label, t0) in &starts {
        match bksf(problem, criterion, t0) {
            Ok(r) => show(&format!("bksf[{label}] <{:?}", t0.indices()), &r),
            Err(e) => println!("bksf[{label}] failed: {e}"),
        }
    }

    if run_random {
        let t = std::time::Instant::now();
        match random_extract(problem, criterion, xi, n, 100, ex.seed) {
            Ok(r) => show(&format!("random-measure [{:.1}s]", t.elapsed().as_secs_f64()), &r),
            Err(e) => println!("random-measure failed: {e}"),
        }
        let t = std::time::Instant::now();
        match random_uniform_baseline(problem, criterion, n, 100, ex.seed) {
            Ok(r) => show(&format!("random-uniform [{:.1}s]", t.elapsed().as_secs_f64()), &r),
            Err(e) => println!("random-uniform failed: {e}"),
        }
    }

    if run_exs {
        let t = std::time::Instant::now();
        match exhaustive(problem, criterion, 200_000_000) {
            Ok(r) => show(&format!("exhaustive [{:.1}s]", t.elapsed().as_secs_f64()), &r),
            Err(e) => println!("exhaustive failed: {e}"),
        }
    }

    println!("reference rows:");
    for row in reference_table(id) {
        println!(
            "  {:<8} {:?} eff={} tol={} pts={:?}",
            row.method.to_string(),
            row.kind,
            row.efficiency,
            row.tol,
            row.points
        );
    }
}

//! Cutting-plane maximization of the design criterion over the capped
//! simplex of measures.
//!
//! The concave objective Φ(M(ξ)) is sandwiched between its best evaluated
//! value and the maximum of an outer linear program built from tangent
//! cuts. Each round solves the LP, evaluates Φ at the LP argmax, adds the
//! tangent cut there, and stops once the relative sandwich width falls
//! under tolerance. The LP value at any round is a certified upper bound
//! for the whole feasible set, converged or not.

use std::io::Write;

use serde::Serialize;

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::measure::DesignMeasure;
use crate::problem::ProblemInstance;
use crate::simplex::{self, IncrementalLp, LpRow, RowKind};
use crate::vncore::{taylor_cut, TaylorCut};

/// New LP argmax points closer than this (sup norm) to an existing anchor
/// stop the loop: the LP has gone degenerate and cuts would repeat.
pub const STALL_TOL: f64 = 1e-12;

/// The linear program of one cutting-plane round: maximize t over
/// t ≤ a + b·ξ for each stored cut, ε ≤ ξᵢ ≤ 1/n, Σξᵢ = 1, t ≥ 0.
#[derive(Debug, Clone)]
pub struct LPProblem {
    pub n_points: usize,
    pub n: usize,
    pub epsilon: f64,
    pub cuts: Vec<TaylorCut>,
}

/// Stopping rule for the sandwich gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum GapRule {
    /// Stop when (t − Φ)/Φ ≤ value.
    Relative(f64),
    /// Stop when t − Φ ≤ value.
    Absolute(f64),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub gap_rule: GapRule,
    pub max_iters: usize,
    /// Extra starting anchors besides the uniform measure.
    pub initial_anchors: Vec<DesignMeasure>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_rule: GapRule::Relative(1e-4),
            max_iters: 1000,
            initial_anchors: Vec::new(),
        }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRow {
    pub k: usize,
    /// LP optimum: upper bound on Φ over the feasible measures.
    pub t: f64,
    /// Best Φ among anchors evaluated so far.
    pub phi: f64,
    /// (t − phi) / phi.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// LP argmax repeated an existing anchor within `STALL_TOL`.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: Vec<IterationRow>,
    /// Anchor with the highest evaluated Φ.
    pub final_measure: DesignMeasure,
    /// Φ at `final_measure`.
    pub final_phi: f64,
    /// Last LP optimum: upper bound on the criterion over all measures.
    pub final_bound: f64,
    /// Relative sandwich width at the stop.
    pub final_bound_gap: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// Solve one cutting-plane LP from scratch and return its optimum and the
/// maximizing measure.
pub fn solve_lp(lp: &LPProblem) -> Result<(f64, DesignMeasure)> {
    let nn = lp.n_points;
    if lp.epsilon > 1.0 / nn as f64 {
        return Err(Error::InfeasibleLP(format!(
            "epsilon {} exceeds 1/N = {}",
            lp.epsilon,
            1.0 / nn as f64
        )));
    }
    let (objective, lower, upper, eq) = lp_frame(nn, lp.n, lp.epsilon);
    let mut rows: Vec<LpRow> = Vec::with_capacity(lp.cuts.len() + 1);
    rows.push(LpRow { coeffs: eq, rhs: 1.0, kind: RowKind::Eq });
    for cut in &lp.cuts {
        rows.push(LpRow { coeffs: cut_coeffs(nn, &cut.b), rhs: cut.a, kind: RowKind::Le });
    }
    let sol = simplex::solve_lp(&simplex::LpProblem { objective, lower, upper, rows })?;
    let xi = measure_from_lp(&sol.x[1..], lp.n, lp.epsilon)?;
    Ok((sol.objective, xi))
}

/// Run the cutting-plane loop with default (no) tracing.
pub fn optimize_measure(
    problem: &ProblemInstance,
    criterion: Criterion,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    optimize_measure_traced(problem, criterion, opts, None)
}

/// Run the cutting-plane loop, optionally streaming one CSV row per
/// iteration (`k,t,phi,gap`, header included) to `trace`.
pub fn optimize_measure_traced(
    problem: &ProblemInstance,
    criterion: Criterion,
    opts: &SolveOptions,
    mut trace: Option<&mut dyn Write>,
) -> Result<SolveReport> {
    let nn = problem.n_points();
    let n = problem.n();
    let eps = problem.epsilon();

    let mut anchors: Vec<DesignMeasure> = Vec::new();
    anchors.push(DesignMeasure::uniform(nn, n)?);
    for extra in &opts.initial_anchors {
        if extra.len() != nn || extra.n() != n {
            return Err(Error::InvalidMeasure(
                "initial anchor has wrong dimensions".into(),
            ));
        }
        if !anchors.iter().any(|a| a.linf_distance(extra) <= STALL_TOL) {
            anchors.push(extra.clone());
        }
    }

    let (objective, lower, upper, eq) = lp_frame(nn, n, eps);
    let mut lp = IncrementalLp::new(objective, lower, upper, eq, 1.0)?;

    let mut best_phi = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    for (i, anchor) in anchors.iter().enumerate() {
        let cut = taylor_cut(problem, criterion, anchor)?;
        if cut.phi_at_anchor > best_phi {
            best_phi = cut.phi_at_anchor;
            best_idx = i;
        }
        lp.add_le_row(cut_coeffs(nn, &cut.b), cut.a);
    }

    if let Some(w) = trace.as_deref_mut() {
        writeln!(w, "k,t,phi,gap").map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }

    let mut iterations: Vec<IterationRow> = Vec::new();
    let mut stop_reason = StopReason::MaxIters;
    let mut final_bound = f64::INFINITY;

    for k in 1..=opts.max_iters {
        let mut sol = lp.solve()?;
        let mut violation = lp.validate(&sol.x);
        if violation > 1e-8 {
            // the warm-started basis has drifted; retry from a cold start
            lp.reset_basis();
            sol = lp.solve()?;
            violation = lp.validate(&sol.x);
        }
        if violation > 1e-8 {
            return Err(Error::InfeasibleLP(format!(
                "LP solution failed full-constraint validation (violation {violation:.3e} at iteration {k})"
            )));
        }
        let t = sol.objective;
        final_bound = t;
        let gap = (t - best_phi) / best_phi;
        let row = IterationRow { k, t, phi: best_phi, gap };
        if let Some(w) = trace.as_deref_mut() {
            writeln!(w, "{},{:.17e},{:.17e},{:.17e}", k, t, best_phi, gap)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        iterations.push(row);

        let met = match opts.gap_rule {
            GapRule::Relative(tol) => gap <= tol,
            GapRule::Absolute(tol) => t - best_phi <= tol,
        };
        if met {
            stop_reason = StopReason::Converged;
            break;
        }
        if k == opts.max_iters {
            stop_reason = StopReason::MaxIters;
            break;
        }

        let xi = measure_from_lp(&sol.x[1..], n, eps)?;
        if anchors.iter().any(|a| a.linf_distance(&xi) <= STALL_TOL) {
            stop_reason = StopReason::Stalled;
            break;
        }
        let cut = taylor_cut(problem, criterion, &xi)?;
        if cut.phi_at_anchor > best_phi {
            best_phi = cut.phi_at_anchor;
            best_idx = anchors.len();
        }
        lp.add_le_row(cut_coeffs(nn, &cut.b), cut.a);
        anchors.push(xi);
    }

    let converged = stop_reason == StopReason::Converged;
    let final_bound_gap = (final_bound - best_phi) / best_phi;
    Ok(SolveReport {
        iterations,
        final_measure: anchors[best_idx].clone(),
        final_phi: best_phi,
        final_bound,
        final_bound_gap,
        converged,
        stop_reason,
    })
}

/// Variable frame shared by both solvers: column 0 is t, then one weight
/// per grid point.
fn lp_frame(nn: usize, n: usize, eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let nv = nn + 1;
    let mut objective = vec![0.0; nv];
    objective[0] = 1.0;
    let mut lower = vec![eps; nv];
    let mut upper = vec![1.0 / n as f64; nv];
    lower[0] = 0.0;
    upper[0] = f64::INFINITY;
    let mut eq = vec![1.0; nv];
    eq[0] = 0.0;
    (objective, lower, upper, eq)
}

/// Constraint t − b·ξ ≤ a as an LP row over (t, ξ).
fn cut_coeffs(nn: usize, b: &[f64]) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(nn + 1);
    coeffs.push(1.0);
    coeffs.extend(b.iter().map(|v| -v));
    coeffs
}

/// Turn LP weight values into a validated measure: clamp the solver's
/// round-off into the box, renormalize, and keep weights at or above ε so
/// the point stays a valid cut anchor.
fn measure_from_lp(x: &[f64], n: usize, eps: f64) -> Result<DesignMeasure> {
    let cap = 1.0 / n as f64;
    let mut w: Vec<f64> = x.iter().map(|&v| v.clamp(eps, cap)).collect();
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidMeasure(format!(
            "LP weights sum to {sum}, expected 1"
        )));
    }
    for v in &mut w {
        *v = (*v / sum).clamp(eps, cap);
    }
    DesignMeasure::new(w, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BasisSpec, DesignGrid, GridSpec, KappaChoice, KernelSpec};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn cut(a: f64, b: Vec<f64>, phi: f64, nn: usize, n: usize) -> TaylorCut {
        TaylorCut {
            anchor: DesignMeasure::uniform(nn, n).unwrap(),
            a,
            b,
            phi_at_anchor: phi,
        }
    }

    #[test]
    fn single_cut_gives_its_constant() {
        // t ≤ 5 regardless of ξ
        let lp = LPProblem {
            n_points: 4,
            n: 2,
            epsilon: 0.01,
            cuts: vec![cut(5.0, vec![0.0; 4], 5.0, 4, 2)],
        };
        let (t, xi) = solve_lp(&lp).unwrap();
        assert_relative_eq!(t, 5.0, epsilon = 1e-9);
        assert_eq!(xi.len(), 4);
    }

    #[test]
    fn box_corner_optimum() {
        // N = 2, n = 1, ε = 0.1, cut t ≤ ξ₁
        let lp = LPProblem {
            n_points: 2,
            n: 1,
            epsilon: 0.1,
            cuts: vec![cut(0.0, vec![1.0, 0.0], 0.0, 2, 1)],
        };
        let (t, xi) = solve_lp(&lp).unwrap();
        assert_relative_eq!(t, 0.9, epsilon = 1e-9);
        assert_relative_eq!(xi.weights()[0], 0.9, epsilon = 1e-9);
        assert_relative_eq!(xi.weights()[1], 0.1, epsilon = 1e-9);
    }

    #[test]
    fn epsilon_above_reciprocal_grid_size_infeasible() {
        let lp = LPProblem {
            n_points: 4,
            n: 2,
            epsilon: 0.3,
            cuts: vec![cut(1.0, vec![0.0; 4], 1.0, 4, 2)],
        };
        assert!(matches!(solve_lp(&lp), Err(Error::InfeasibleLP(_))));
    }

    fn tiny_problem() -> ProblemInstance {
        let grid =
            DesignGrid::build(&GridSpec::Linspace { lo: 1.0, hi: 2.0, n_points: 11 }).unwrap();
        ProblemInstance::build(
            grid,
            &BasisSpec::Monomial { degree: 1 },
            &KernelSpec::Brownian,
            2,
            KappaChoice::Auto,
            1e-6,
        )
        .unwrap()
    }

    #[test]
    fn tiny_kappa_survives_ill_scaled_cuts() {
        // A kappa far below the smallest kernel eigenvalue makes the cut
        // gradients near the epsilon floor enormous (entries ~ kappa/eps^2),
        // which once broke the warm-started basis; the cold-restart recovery
        // must keep the loop converging.
        let grid =
            DesignGrid::build(&GridSpec::Linspace { lo: 1.0, hi: 2.0, n_points: 21 }).unwrap();
        let problem = ProblemInstance::build(
            grid,
            &BasisSpec::Monomial { degree: 1 },
            &KernelSpec::Brownian,
            3,
            KappaChoice::Fixed(0.001),
            1e-6,
        )
        .unwrap();
        let report =
            optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        assert!(report.converged);
        // at the cap-saturating optimum the virtual noise vanishes, so the
        // value matches the exact three-point design regardless of kappa
        assert_relative_eq!(report.final_phi, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn loop_converges_and_certifies_small_instance() {
        let problem = tiny_problem();
        let report =
            optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.stop_reason, StopReason::Converged);
        assert!(report.final_bound_gap <= 1e-4);
        // sandwich and monotonicity along the whole run
        let mut prev_t = f64::INFINITY;
        let mut prev_phi = 0.0;
        for row in &report.iterations {
            assert!(row.phi <= row.t + 1e-9 * row.t.abs().max(1.0));
            assert!(row.t <= prev_t + 1e-9 * prev_t.abs().min(1e300).max(1.0));
            assert!(row.phi >= prev_phi - 1e-12);
            prev_t = row.t;
            prev_phi = row.phi;
        }
        assert!(report.final_measure.in_xi_epsilon(problem.epsilon()));
    }

    #[test]
    fn reports_are_deterministic() {
        let problem = tiny_problem();
        let a = optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        let b = optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_designs_stay_below_the_bound() {
        use crate::criteria::{phi_exact, ExactDesign};
        // the weight floor ε shaves O(ε) off the bound, so checking the
        // sharp inequality needs a floor well under the asserted slack
        let grid =
            DesignGrid::build(&GridSpec::Linspace { lo: 1.0, hi: 2.0, n_points: 11 }).unwrap();
        let problem = ProblemInstance::build(
            grid,
            &BasisSpec::Monomial { degree: 1 },
            &KernelSpec::Brownian,
            2,
            KappaChoice::Auto,
            1e-12,
        )
        .unwrap();
        let report =
            optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        for pair in [[0usize, 10], [3, 7], [0, 5], [2, 9]] {
            let design = ExactDesign::new(pair.to_vec(), problem.n_points()).unwrap();
            let phi = phi_exact(&problem, Criterion::D, &design).unwrap();
            assert!(
                phi <= report.final_bound + 1e-9 * report.final_bound,
                "design {:?} has phi {} above bound {}",
                pair,
                phi,
                report.final_bound
            );
        }
    }

    #[test]
    fn uncorrelated_sanity_matches_multiplicative_algorithm() {
        // C = I via a custom instance: white-noise covariance is not one of
        // the named kernels, so build from parts
        let nn = 21;
        let grid: Vec<f64> = (0..nn).map(|i| -1.0 + 2.0 * i as f64 / 20.0).collect();
        let f = DMatrix::from_fn(nn, 3, |i, j| grid[i].powi(j as i32));
        let c = DMatrix::identity(nn, nn);
        let design_grid = DesignGrid::build(&GridSpec::Explicit {
            points: grid.iter().map(|&x| vec![x]).collect(),
        })
        .unwrap();
        let problem =
            ProblemInstance::from_parts(design_grid, f.clone(), c, 3, KappaChoice::Fixed(0.99), 1e-6)
                .unwrap();
        let report =
            optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        assert!(report.converged);
        let mut support = report.final_measure.heaviest_indices();
        support.sort_unstable();

        // multiplicative-algorithm oracle for the classical problem
        let mut w = vec![1.0 / nn as f64; nn];
        for _ in 0..20_000 {
            let mut m = DMatrix::zeros(3, 3);
            for i in 0..nn {
                let fi = f.row(i).transpose();
                m += w[i] * &fi * fi.transpose();
            }
            let minv = m.try_inverse().unwrap();
            let mut total = 0.0;
            for i in 0..nn {
                let fi = f.row(i).transpose();
                let d = (fi.transpose() * &minv * &fi)[(0, 0)];
                w[i] *= d / 3.0;
                total += w[i];
            }
            for v in &mut w {
                *v /= total;
            }
        }
        let mut kiefer: Vec<usize> = (0..nn).collect();
        kiefer.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap());
        let mut kiefer_top: Vec<usize> = kiefer[..3].to_vec();
        kiefer_top.sort_unstable();
        assert_eq!(support, kiefer_top);
        assert_eq!(kiefer_top, vec![0, 10, 20]);
    }

    #[test]
    fn one_point_model_matches_brute_force() {
        // p = 1, f ≡ 1, C = I, κ = 0.5, n = 2, N = 4
        let nn = 4;
        let grid: Vec<Vec<f64>> = (0..nn).map(|i| vec![i as f64]).collect();
        let f = DMatrix::from_element(nn, 1, 1.0);
        let c = DMatrix::identity(nn, nn);
        let design_grid = DesignGrid::build(&GridSpec::Explicit { points: grid }).unwrap();
        let problem =
            ProblemInstance::from_parts(design_grid, f, c, 2, KappaChoice::Fixed(0.5), 1e-6)
                .unwrap();
        let report =
            optimize_measure(&problem, Criterion::D, &SolveOptions::default()).unwrap();
        assert!(report.converged);

        // brute force over a simplex grid: xi1, xi2, xi3 on a lattice
        let steps = 100;
        let mut best = 0.0f64;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let x1 = 0.5 * i as f64 / steps as f64;
                    let x2 = 0.5 * j as f64 / steps as f64;
                    let x3 = 0.5 * k as f64 / steps as f64;
                    let x4 = 1.0 - x1 - x2 - x3;
                    if !(0.0..=0.5).contains(&x4) {
                        continue;
                    }
                    // Φ = Σ ξ_i/(0.5 ξ_i + 0.25) for this instance
                    let phi: f64 = [x1, x2, x3, x4]
                        .iter()
                        .map(|&v| v / (0.5 * v + 0.25))
                        .sum();
                    best = best.max(phi);
                }
            }
        }
        assert!(
            (report.final_phi - best).abs() <= 1e-4 * best,
            "loop phi {} vs brute force {}",
            report.final_phi,
            best
        );
        // the maximizer is the uniform measure, value 8/3
        assert_relative_eq!(report.final_phi, 8.0 / 3.0, max_relative = 1e-5);
    }

    #[test]
    fn max_iters_returns_best_so_far() {
        let problem = tiny_problem();
        let opts = SolveOptions {
            max_iters: 1,
            ..SolveOptions::default()
        };
        let report = optimize_measure(&problem, Criterion::D, &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.stop_reason, StopReason::MaxIters);
        assert_eq!(report.iterations.len(), 1);
        assert!(report.final_phi > 0.0);
        assert!(report.final_bound >= report.final_phi);
    }

    #[test]
    fn absolute_gap_rule_stops() {
        let problem = tiny_problem();
        let opts = SolveOptions {
            gap_rule: GapRule::Absolute(1e-3),
            ..SolveOptions::default()
        };
        let report = optimize_measure(&problem, Criterion::D, &opts).unwrap();
        assert!(report.converged);
        assert!(report.final_bound - report.final_phi <= 1e-3);
    }

    #[test]
    #[ignore = "timing probe for the full-size sine instance"]
    fn full_size_timing_probe() {
        let grid =
            DesignGrid::build(&GridSpec::Linspace { lo: 1.0, hi: 2.0, n_points: 101 }).unwrap();
        let problem = ProblemInstance::build(
            grid,
            &BasisSpec::ConstantPlusSine { amplitude: 0.5, cycles: 1.0 },
            &KernelSpec::SacksYlvisaker,
            4,
            KappaChoice::Auto,
            1e-6,
        )
        .unwrap();
        let opts = SolveOptions { max_iters: 4000, ..SolveOptions::default() };
        let start = std::time::Instant::now();
        let report = optimize_measure(&problem, Criterion::D, &opts).unwrap();
        let elapsed = start.elapsed();
        println!(
            "iters={} converged={} t={:.9} phi={:.9} gap={:.3e} elapsed={:?}",
            report.iterations.len(),
            report.converged,
            report.final_bound,
            report.final_phi,
            report.final_bound_gap,
            elapsed
        );
        assert!(report.converged);
    }

    #[test]
    fn trace_stream_has_header_and_rows() {
        let problem = tiny_problem();
        let mut buf: Vec<u8> = Vec::new();
        let report = optimize_measure_traced(
            &problem,
            Criterion::D,
            &SolveOptions::default(),
            Some(&mut buf),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,t,phi,gap");
        assert_eq!(lines.len(), report.iterations.len() + 1);
        assert!(lines[1].starts_with("1,"));
    }
}

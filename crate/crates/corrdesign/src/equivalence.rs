//! Optimality certificates for candidate measures.
//!
//! For a measure ξ̄ the sensitivity values h(x, ξ̄) decide optimality: ξ̄
//! maximizes the criterion over the capped simplex exactly when the sum of
//! the n largest h-values does not exceed d(ξ̄) = n·Σ ξ̄(x)h(x, ξ̄). When
//! the test fails, the surplus still yields a universal upper bound
//! Φ(M(ξ̄)) + (κ/n)·(top_n_sum − d)/n valid for every measure, and in
//! particular for every exact n-point design. Efficiencies of candidate
//! designs are reported against that bound, making them conservative.

use serde::Serialize;

use crate::criteria::{phi_exact, Criterion, ExactDesign};
use crate::error::Result;
use crate::measure::DesignMeasure;
use crate::problem::ProblemInstance;
use crate::vncore::equivalence_context;

/// One sensitivity entry: grid index and h-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HEntry {
    pub index: usize,
    pub h: f64,
}

/// The result of testing a measure against the optimality condition.
///
/// Serialization keeps only the head of the sorted sensitivity list (the
/// top 2n entries) so emitted certificates stay small on large grids.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityCertificate {
    /// Φ(M(ξ̄)) at the candidate measure.
    pub phi: f64,
    /// Sum of the n largest h-values.
    pub top_n_sum: f64,
    /// n · Σ ξ̄(x) h(x, ξ̄).
    pub d_value: f64,
    /// max(0, (top_n_sum − d_value)/n), the raw optimality surplus.
    pub delta_gap: f64,
    /// The surplus in criterion units: (κ/n) · delta_gap.
    pub delta: f64,
    /// Universal upper bound phi + delta for Φ over all measures.
    pub upper_bound: f64,
    /// top_n_sum ≤ d_value + tol.
    pub is_optimal: bool,
    /// Comparison tolerance used, 1e-8·max(1, phi).
    pub tol: f64,
    /// Top 2n sensitivity entries, nonincreasing in h.
    pub h_head: Vec<HEntry>,
    /// All sensitivity entries, nonincreasing in h.
    #[serde(skip)]
    pub h_sorted: Vec<HEntry>,
}

/// Sort sensitivity values nonincreasing, ties broken by lower index.
fn sort_h(h: &[f64]) -> Vec<HEntry> {
    let mut entries: Vec<HEntry> =
        h.iter().enumerate().map(|(index, &h)| HEntry { index, h }).collect();
    entries.sort_by(|a, b| {
        b.h.partial_cmp(&a.h).unwrap().then_with(|| a.index.cmp(&b.index))
    });
    entries
}

/// Evaluate the optimality condition for `xi_bar` at the default
/// tolerance 1e-8·max(1, Φ).
pub fn certify(
    problem: &ProblemInstance,
    criterion: Criterion,
    xi_bar: &DesignMeasure,
) -> Result<OptimalityCertificate> {
    let ctx = equivalence_context(problem, criterion, xi_bar)?;
    let n = problem.n();
    let h_sorted = sort_h(&ctx.h_values);
    let top_n_sum: f64 = h_sorted.iter().take(n).map(|e| e.h).sum();
    let d_value = ctx.d_value;
    let delta_gap = ((top_n_sum - d_value) / n as f64).max(0.0);
    let delta = ctx.kappa_over_n * delta_gap;
    let phi = ctx.phi;
    let tol = 1e-8 * phi.max(1.0);
    let h_head = h_sorted.iter().take(2 * n).copied().collect();
    Ok(OptimalityCertificate {
        phi,
        top_n_sum,
        d_value,
        delta_gap,
        delta,
        upper_bound: phi + delta,
        is_optimal: top_n_sum <= d_value + tol,
        tol,
        h_head,
        h_sorted,
    })
}

/// A design scored against a certified upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct CalibratedDesign {
    pub design: ExactDesign,
    pub phi: f64,
    pub efficiency: f64,
}

/// Score each design by Φ(M_T) and its efficiency against the universal
/// bound of `xi_bar`. Returns the certificate alongside so callers can
/// report the bound itself.
pub fn calibrate(
    problem: &ProblemInstance,
    criterion: Criterion,
    xi_bar: &DesignMeasure,
    designs: &[ExactDesign],
) -> Result<(OptimalityCertificate, Vec<CalibratedDesign>)> {
    let certificate = certify(problem, criterion, xi_bar)?;
    let scored = designs
        .iter()
        .map(|design| {
            let phi = phi_exact(problem, criterion, design)?;
            Ok(CalibratedDesign {
                design: design.clone(),
                phi,
                efficiency: phi / certificate.upper_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((certificate, scored))
}

//! Design measures: weight vectors over the grid constrained to the set
//! Xi = { xi : sum xi_i = 1, 0 <= xi_i <= 1/n }.
//!
//! The upper cap 1/n is what ties a measure to a target design size n; a
//! measure with every weight at the cap is an embedded exact design.

use serde::{Deserialize, Serialize};

use crate::criteria::ExactDesign;
use crate::error::{Error, Result};

/// Absolute tolerance on sum(xi) = 1.
pub const SUM_TOL: f64 = 1e-10;
/// Slack allowed above the 1/n cap (LP round-off).
pub const CAP_SLACK: f64 = 1e-9;
/// Weights below this count as zero when computing the support.
pub const SUPPORT_TOL: f64 = 1e-14;

/// A member of Xi: nonnegative weights summing to one, each at most 1/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMeasure {
    weights: Vec<f64>,
    n: usize,
}

impl DesignMeasure {
    /// Validate a weight vector against Xi for design size n.
    pub fn new(weights: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeasure("design size n = 0".into()));
        }
        if weights.len() < 2 {
            return Err(Error::InvalidMeasure("need at least 2 grid points".into()));
        }
        let cap = 1.0 / n as f64 + CAP_SLACK;
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 || w > cap {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w:e} at index {i} outside [0, 1/{n}]"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {sum}, not 1")));
        }
        Ok(DesignMeasure { weights, n })
    }

    /// The uniform measure 1/N, valid whenever n <= N.
    pub fn uniform(n_points: usize, n: usize) -> Result<Self> {
        if n > n_points {
            return Err(Error::InvalidMeasure(format!(
                "design size {n} exceeds grid size {n_points}"
            )));
        }
        Self::new(vec![1.0 / n_points as f64; n_points], n)
    }

    /// An exact design embedded as the measure with weight 1/n on each
    /// design point and zero elsewhere.
    pub fn from_design(design: &ExactDesign, n_points: usize) -> Result<Self> {
        let n = design.len();
        let mut weights = vec![0.0; n_points];
        for &i in design.indices() {
            if i >= n_points {
                return Err(Error::InvalidMeasure(format!("design index {i} out of range")));
            }
            weights[i] = 1.0 / n as f64;
        }
        Self::new(weights, n)
    }

    /// Bypass validation; only for in-crate finite-difference probes that
    /// evaluate M(.) at raw perturbed coordinates.
    #[cfg(test)]
    pub(crate) fn from_raw(weights: Vec<f64>, n: usize) -> Self {
        DesignMeasure { weights, n }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Target design size n (the cap is 1/n).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points N.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Whether the measure lies in Xi^epsilon (every weight >= epsilon).
    pub fn in_xi_epsilon(&self, epsilon: f64) -> bool {
        self.weights.iter().all(|&w| w >= epsilon)
    }

    /// Indices carrying more than negligible weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] >= SUPPORT_TOL).collect()
    }

    /// Largest absolute componentwise difference to another measure.
    pub fn linf_distance(&self, other: &DesignMeasure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The convex combination (1 - alpha) self + alpha other.
    pub fn blend(&self, other: &DesignMeasure, alpha: f64) -> Result<Self> {
        if self.weights.len() != other.weights.len() || self.n != other.n {
            return Err(Error::InvalidMeasure("mismatched measures in blend".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidMeasure(format!("alpha = {alpha} outside [0, 1]")));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
            .collect();
        Self::new(weights, self.n)
    }

    /// The n indices with the largest weights (ties broken by lower index),
    /// in increasing index order.
    pub fn heaviest_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| {
            self.weights[b].partial_cmp(&self.weights[a]).unwrap().then(a.cmp(&b))
        });
        let mut top: Vec<usize> = idx.into_iter().take(self.n).collect();
        top.sort_unstable();
        top
    }
}

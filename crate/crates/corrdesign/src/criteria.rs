//! Optimality criteria, their matrix gradients, exact-design information
//! matrices, and efficiency ratios.
//!
//! Both criteria are positive, concave, increasing, and positively
//! homogeneous of degree 1 on positive definite matrices:
//! D: Φ(M) = det(M)^{1/p}, A: Φ(M) = 1/tr(M⁻¹).

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

/// Which optimality criterion to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    D,
    A,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::D => write!(f, "D"),
            Criterion::A => write!(f, "A"),
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(Criterion::D),
            "A" | "a" => Ok(Criterion::A),
            other => Err(Error::InvalidConfig(format!("unknown criterion {other:?}"))),
        }
    }
}

fn cholesky_of(m: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    m.clone().cholesky().ok_or(Error::SingularInformation)
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

impl Criterion {
    /// Criterion value at a symmetric positive definite matrix.
    pub fn phi(&self, m: &DMatrix<f64>) -> Result<f64> {
        let chol = cholesky_of(m)?;
        Ok(self.phi_from_cholesky(&chol, m.nrows()))
    }

    fn phi_from_cholesky(&self, chol: &Cholesky<f64, nalgebra::Dyn>, p: usize) -> f64 {
        match self {
            Criterion::D => {
                let logdet: f64 = (0..p).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
                (logdet / p as f64).exp()
            }
            Criterion::A => 1.0 / chol.inverse().trace(),
        }
    }

    /// Matrix gradient ∇_M Φ at a symmetric positive definite matrix.
    pub fn grad_phi(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.phi_and_grad(m)?.1)
    }

    /// Criterion value and gradient from one factorization.
    pub fn phi_and_grad(&self, m: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        let p = m.nrows();
        let chol = cholesky_of(m)?;
        let minv = chol.inverse();
        match self {
            Criterion::D => {
                let phi = self.phi_from_cholesky(&chol, p);
                Ok((phi, symmetrize(minv * (phi / p as f64))))
            }
            Criterion::A => {
                let tr = minv.trace();
                let phi = 1.0 / tr;
                Ok((phi, symmetrize(&minv * &minv * (phi * phi))))
            }
        }
    }
}

/// An exact unreplicated n-point design: strictly increasing grid indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDesign {
    indices: Vec<usize>,
}

impl ExactDesign {
    /// Validate strictly increasing indices inside [0, n_points).
    pub fn new(indices: Vec<usize>, n_points: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidDesign("empty design".into()));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidDesign(format!(
                    "indices must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let last = *indices.last().unwrap();
        if last >= n_points {
            return Err(Error::InvalidDesign(format!(
                "index {last} out of range for {n_points} grid points"
            )));
        }
        Ok(ExactDesign { indices })
    }

    /// Sort and validate a set of indices.
    pub fn from_unsorted(mut indices: Vec<usize>, n_points: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, n_points)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Grid coordinates of the design points.
    pub fn points(&self, problem: &ProblemInstance) -> Vec<Vec<f64>> {
        self.indices.iter().map(|&i| problem.grid().point(i).to_vec()).collect()
    }
}

/// Information matrix of an exact design: M = F(T)ᵀ C(T)⁻¹ F(T).
pub fn info_matrix_exact(problem: &ProblemInstance, design: &ExactDesign) -> Result<DMatrix<f64>> {
    let idx = design.indices();
    if *idx.last().unwrap() >= problem.n_points() {
        return Err(Error::InvalidDesign("design index out of range".into()));
    }
    let m = idx.len();
    let p = problem.p();
    let mut ft = DMatrix::zeros(m, p);
    let mut ct = DMatrix::zeros(m, m);
    for (r, &i) in idx.iter().enumerate() {
        for j in 0..p {
            ft[(r, j)] = problem.f()[(i, j)];
        }
        for (s, &k) in idx.iter().enumerate() {
            ct[(r, s)] = problem.c()[(i, k)];
        }
    }
    let chol = ct.cholesky().ok_or_else(|| Error::IllConditionedCovariance {
        context: format!("{idx:?}"),
    })?;
    let solved = chol.solve(&ft);
    Ok(symmetrize(ft.transpose() * solved))
}

/// Criterion value of an exact design.
pub fn phi_exact(problem: &ProblemInstance, criterion: Criterion, design: &ExactDesign) -> Result<f64> {
    criterion.phi(&info_matrix_exact(problem, design)?)
}

/// Ratio of a design's criterion value to a certified upper bound.
/// Values above 1 are reported as-is; they indicate a broken certificate.
pub fn efficiency(phi_value: f64, bound: f64) -> f64 {
    phi_value / bound
}

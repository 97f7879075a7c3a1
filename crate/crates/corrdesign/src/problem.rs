//! Problem construction: design grids, regression bases, covariance kernels,
//! the smallest covariance eigenvalue, and the virtual-noise constant kappa.
//!
//! A problem instance fixes the finite design space (a grid of N candidate
//! observation locations), the N x p regression basis matrix F, the N x N
//! covariance matrix C of the correlated errors, the exact design size n,
//! the virtual-noise constant kappa (strictly below the smallest eigenvalue
//! of C), and the lower weight floor epsilon for design measures.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite design space: N distinct points in d dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    points: Vec<Vec<f64>>,
    dim: usize,
}

/// How to build a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridSpec {
    /// Evenly spaced 1D grid with `n_points` points on [lo, hi].
    Linspace { lo: f64, hi: f64, n_points: usize },
    /// Cartesian product of per-axis linspaces.
    Product { axes: Vec<AxisSpec> },
    /// Explicit list of points, all of the same dimension.
    Explicit { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

impl DesignGrid {
    /// Build a grid from a spec. Points come out in nondecreasing
    /// lexicographic order; duplicates are rejected.
    pub fn build(spec: &GridSpec) -> Result<Self> {
        let points: Vec<Vec<f64>> = match spec {
            GridSpec::Linspace { lo, hi, n_points } => {
                check_axis(*lo, *hi, *n_points)?;
                linspace(*lo, *hi, *n_points).into_iter().map(|x| vec![x]).collect()
            }
            GridSpec::Product { axes } => {
                if axes.is_empty() {
                    return Err(Error::InvalidGrid("product of zero axes".into()));
                }
                let mut grids = Vec::new();
                for a in axes {
                    check_axis(a.lo, a.hi, a.n_points)?;
                    grids.push(linspace(a.lo, a.hi, a.n_points));
                }
                let mut points = vec![Vec::new()];
                for g in &grids {
                    let mut next = Vec::with_capacity(points.len() * g.len());
                    for base in &points {
                        for &x in g {
                            let mut p = base.clone();
                            p.push(x);
                            next.push(p);
                        }
                    }
                    points = next;
                }
                points
            }
            GridSpec::Explicit { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidGrid("need at least 2 points".into()));
                }
                let d = points[0].len();
                if d == 0 || points.iter().any(|p| p.len() != d) {
                    return Err(Error::InvalidGrid("inconsistent point dimensions".into()));
                }
                let mut points = points.clone();
                points.sort_by(|a, b| a.partial_cmp(b).expect("non-finite grid coordinate"));
                points
            }
        };
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        for w in points.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidGrid(format!("duplicate point {:?}", w[0])));
            }
        }
        let dim = points[0].len();
        Ok(DesignGrid { points, dim })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of grid point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

fn check_axis(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("axis needs >= 2 points, got {n}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!("axis bounds [{lo}, {hi}] invalid")));
    }
    Ok(())
}

/// Named regression basis families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BasisSpec {
    /// Single regressor 1 + amplitude * sin(2 pi cycles x); 1D, p = 1.
    ConstantPlusSine { amplitude: f64, cycles: f64 },
    /// Monomials 1, x, ..., x^degree; 1D, p = degree + 1.
    Monomial { degree: usize },
    /// Per axis: sin(k x), cos(k x) for k = 1..=harmonics; p = 2 * harmonics * dim.
    TrigHarmonics { harmonics: usize },
    /// Intercept plus one slope per coordinate: 1, x_1, ..., x_d; p = d + 1.
    LinearWithIntercept,
}

impl BasisSpec {
    /// Number of basis functions on a grid of dimension `dim`.
    pub fn p(&self, dim: usize) -> usize {
        match self {
            BasisSpec::ConstantPlusSine { .. } => 1,
            BasisSpec::Monomial { degree } => degree + 1,
            BasisSpec::TrigHarmonics { harmonics } => 2 * harmonics * dim,
            BasisSpec::LinearWithIntercept => dim + 1,
        }
    }

    /// Evaluate the basis functions at one point.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        use std::f64::consts::PI;
        match self {
            BasisSpec::ConstantPlusSine { amplitude, cycles } => {
                vec![1.0 + amplitude * (2.0 * PI * cycles * x[0]).sin()]
            }
            BasisSpec::Monomial { degree } => {
                let mut row = Vec::with_capacity(degree + 1);
                let mut v = 1.0;
                for _ in 0..=*degree {
                    row.push(v);
                    v *= x[0];
                }
                row
            }
            BasisSpec::TrigHarmonics { harmonics } => {
                let mut row = Vec::with_capacity(2 * harmonics * x.len());
                for &xi in x {
                    for k in 1..=*harmonics {
                        row.push((k as f64 * xi).sin());
                        row.push((k as f64 * xi).cos());
                    }
                }
                row
            }
            BasisSpec::LinearWithIntercept => {
                let mut row = Vec::with_capacity(x.len() + 1);
                row.push(1.0);
                row.extend_from_slice(x);
                row
            }
        }
    }
}

/// Build the N x p basis matrix F with F[i][j] = f_j(x_i) and verify that
/// it has full column rank.
pub fn materialize_basis(grid: &DesignGrid, spec: &BasisSpec) -> Result<DMatrix<f64>> {
    let n = grid.n_points();
    let p = spec.p(grid.dim());
    let mut f = DMatrix::zeros(n, p);
    for i in 0..n {
        let row = spec.eval(grid.point(i));
        debug_assert_eq!(row.len(), p);
        for j in 0..p {
            f[(i, j)] = row[j];
        }
    }
    let svd = f.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    if rank < p {
        return Err(Error::DegenerateBasis { rank, p });
    }
    Ok(f)
}

/// Relative singular-value cutoff below which a basis column is considered
/// linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Named covariance kernel families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum KernelSpec {
    /// k(x, x') = min(x,x')^2 * max(x,x'); 1D.
    SacksYlvisaker,
    /// k(x, x') = min^2 (3 max - min) / 6; 1D.
    IntegratedBrownian,
    /// k(x, x') = min(x, x'); 1D.
    Brownian,
    /// k(x, x') = sigma2 * exp(-||x - x'||_2 / theta); any dimension.
    ScaledExponential { sigma2: f64, theta: f64 },
    /// k(x, x') = exp(-sum_j |x_j - x'_j|); any dimension.
    L1Exponential,
}

impl KernelSpec {
    /// Kernel value at a pair of points.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::SacksYlvisaker => {
                let (mn, mx) = minmax(x[0], y[0]);
                mn * mn * mx
            }
            KernelSpec::IntegratedBrownian => {
                let (mn, mx) = minmax(x[0], y[0]);
                mn * mn * (3.0 * mx - mn) / 6.0
            }
            KernelSpec::Brownian => x[0].min(y[0]),
            KernelSpec::ScaledExponential { sigma2, theta } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                sigma2 * (-d2.sqrt() / theta).exp()
            }
            KernelSpec::L1Exponential => {
                let d1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-d1).exp()
            }
        }
    }

    fn check_params(&self) -> Result<()> {
        if let KernelSpec::ScaledExponential { sigma2, theta } = self {
            if !(*sigma2 > 0.0) || !(*theta > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "scaled_exponential needs positive parameters, got sigma2 = {sigma2}, theta = {theta}"
                )));
            }
        }
        Ok(())
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Build the N x N covariance matrix for a kernel on a grid. The result is
/// symmetric by construction (each off-diagonal value is computed once and
/// mirrored) and must be positive definite.
pub fn materialize_covariance(grid: &DesignGrid, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel.check_params()?;
    let n = grid.n_points();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(grid.point(i), grid.point(j));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let lam = min_eigenvalue(&c)?;
    if lam <= 0.0 {
        return Err(Error::NotPositiveDefinite { lambda_min: lam });
    }
    Ok(c)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(c: &DMatrix<f64>) -> Result<f64> {
    if c.nrows() != c.ncols() {
        return Err(Error::InvalidMatrix);
    }
    for i in 0..c.nrows() {
        for j in (i + 1)..c.ncols() {
            if c[(i, j)] != c[(j, i)] {
                return Err(Error::InvalidMatrix);
            }
        }
    }
    let eigs = c.clone().symmetric_eigenvalues();
    Ok(eigs.min())
}

/// Largest number with two significant decimal digits strictly below
/// `lambda_min`. This is the default virtual-noise constant: rounding
/// lambda_min down to two significant digits, stepping one grid position
/// further down whenever rounding alone would land on lambda_min itself.
pub fn default_kappa(lambda_min: f64) -> Result<f64> {
    if !(lambda_min > 0.0) || !lambda_min.is_finite() {
        return Err(Error::InvalidEigenvalue(lambda_min));
    }
    let mut exp = lambda_min.log10().floor() as i32;
    let mut scale = 10f64.powi(exp - 1);
    // Mantissa in [10, 99]: lambda on a two-significant-digit grid.
    let mut m = (lambda_min / scale).floor() as i64;
    m = m.clamp(10, 99);
    // Float division can land one grid position off in either direction.
    while (m as f64 + 1.0) * scale < lambda_min && m < 99 {
        m += 1;
    }
    while m as f64 * scale >= lambda_min {
        m -= 1;
        if m < 10 {
            exp -= 1;
            scale = 10f64.powi(exp - 1);
            m = 99;
        }
    }
    Ok(m as f64 * scale)
}

/// Either a fixed kappa or the default rounding rule applied to
/// lambda_min(C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaChoice {
    Auto,
    Fixed(f64),
}

/// A fully materialized and validated design problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    grid: DesignGrid,
    f: DMatrix<f64>,
    c: DMatrix<f64>,
    n: usize,
    kappa: f64,
    epsilon: f64,
    lambda_min: f64,
}

impl ProblemInstance {
    /// Materialize and validate an instance. Enforces p <= n <= N,
    /// 0 < epsilon <= 1/N, and the strict bound 0 < kappa < lambda_min(C).
    pub fn build(
        grid: DesignGrid,
        basis: &BasisSpec,
        kernel: &KernelSpec,
        n: usize,
        kappa: KappaChoice,
        epsilon: f64,
    ) -> Result<Self> {
        let f = materialize_basis(&grid, basis)?;
        let c = materialize_covariance(&grid, kernel)?;
        Self::from_parts(grid, f, c, n, kappa, epsilon)
    }

    /// Validate an instance from already-built matrices.
    pub fn from_parts(
        grid: DesignGrid,
        f: DMatrix<f64>,
        c: DMatrix<f64>,
        n: usize,
        kappa: KappaChoice,
        epsilon: f64,
    ) -> Result<Self> {
        let n_points = grid.n_points();
        let p = f.ncols();
        if f.nrows() != n_points || c.nrows() != n_points || c.ncols() != n_points {
            return Err(Error::InvalidMatrix);
        }
        if n < p || n > n_points {
            return Err(Error::InvalidDesignSize { n, p, n_points });
        }
        let max_eps = 1.0 / n_points as f64;
        if !(epsilon > 0.0) || epsilon > max_eps {
            return Err(Error::InvalidEpsilon { epsilon, max: max_eps });
        }
        let lambda_min = min_eigenvalue(&c)?;
        if lambda_min <= 0.0 {
            return Err(Error::NotPositiveDefinite { lambda_min });
        }
        let kappa = match kappa {
            KappaChoice::Auto => default_kappa(lambda_min)?,
            KappaChoice::Fixed(k) => k,
        };
        if !(kappa > 0.0) || kappa >= lambda_min {
            return Err(Error::InvalidKappa { kappa, lambda_min });
        }
        Ok(ProblemInstance { grid, f, c, n, kappa, epsilon, lambda_min })
    }

    /// Build an instance without the kappa bound check. The concavity of the
    /// relaxation is only guaranteed for kappa < lambda_min(C); this
    /// constructor exists so tests and diagnostics can study what breaks
    /// beyond that bound. All structural checks still apply.
    pub fn with_unchecked_kappa(mut valid: ProblemInstance, kappa: f64) -> ProblemInstance {
        valid.kappa = kappa;
        valid
    }

    pub fn grid(&self) -> &DesignGrid {
        &self.grid
    }

    /// N, the number of grid points.
    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    /// p, the number of regression parameters.
    pub fn p(&self) -> usize {
        self.f.ncols()
    }

    /// n, the exact design size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The N x p basis matrix.
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// The N x N covariance matrix.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Same instance with a different design size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        if n < self.p() || n > self.n_points() {
            return Err(Error::InvalidDesignSize { n, p: self.p(), n_points: self.n_points() });
        }
        out.n = n;
        Ok(out)
    }
}

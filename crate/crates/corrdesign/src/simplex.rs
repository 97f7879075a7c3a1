//! Dense bounded-variable simplex solver.
//!
//! Built for the cutting-plane loop: a few hundred active rows over a few
//! hundred box-bounded columns, re-solved thousands of times with one new
//! row per outer iteration. Two entry points exist: `solve_lp` performs a
//! fresh two-phase primal solve of an arbitrary problem, and
//! `IncrementalLp` keeps a warm tableau across row insertions, restoring
//! feasibility after each insertion with dual simplex steps. Pivot rules
//! are deterministic throughout: Dantzig pricing with a Bland fallback
//! against cycling, lowest-index tie breaks everywhere.

use crate::error::{Error, Result};

/// Minimum magnitude accepted for a pivot element.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced-cost threshold for optimality.
const COST_TOL: f64 = 1e-11;
/// Bound violation threshold for primal feasibility.
const FEAS_TOL: f64 = 1e-11;
/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

/// One linear constraint over the structural variables.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub kind: RowKind,
}

/// max objective . x subject to rows and box bounds.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Dense simplex tableau over structural columns plus one slack per row.
struct Tableau {
    /// Structural column count.
    nv: usize,
    /// Objective per column (slacks and artificials carry 0).
    obj: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    /// Nonbasic columns hold their bound value; basic columns are tracked
    /// through `beta` of their row.
    xval: Vec<f64>,
    /// rows[r] has length ncols(); basic columns are unit across rows.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basic: Vec<usize>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    /// Reduced costs, kept in step with pivots; exact zeros on basics.
    z: Vec<f64>,
    degenerate_streak: usize,
}

impl Tableau {
    fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let nv = objective.len();
        if lower.len() != nv || upper.len() != nv {
            return Err(Error::InvalidConfig("mismatched LP bound lengths".into()));
        }
        let mut state = Vec::with_capacity(nv);
        let mut xval = Vec::with_capacity(nv);
        for j in 0..nv {
            if !(lower[j] <= upper[j]) {
                return Err(Error::InfeasibleLP(format!(
                    "empty bound interval on variable {j}"
                )));
            }
            if lower[j].is_infinite() && upper[j].is_infinite() {
                return Err(Error::InvalidConfig("free LP variables unsupported".into()));
            }
            if lower[j].is_finite() {
                state.push(VarState::AtLower);
                xval.push(lower[j]);
            } else {
                state.push(VarState::AtUpper);
                xval.push(upper[j]);
            }
        }
        let z = objective.clone();
        Ok(Tableau {
            nv,
            obj: objective,
            lower,
            upper,
            state,
            xval,
            rows: Vec::new(),
            rhs: Vec::new(),
            basic: Vec::new(),
            beta: Vec::new(),
            z,
            degenerate_streak: 0,
        })
    }

    fn ncols(&self) -> usize {
        self.obj.len()
    }

    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic => self.xval[j],
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
        }
    }

    fn push_column(&mut self, lower: f64, upper: f64, obj: f64, state: VarState) -> usize {
        let j = self.ncols();
        self.obj.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.state.push(state);
        self.xval.push(match state {
            VarState::AtLower => lower,
            VarState::AtUpper => upper,
            VarState::Basic => 0.0,
        });
        self.z.push(obj);
        for row in &mut self.rows {
            row.push(0.0);
        }
        j
    }

    /// Append a constraint row; its fresh slack becomes the basic variable.
    /// Returns the slack's value (negative or above its bound means the new
    /// row is violated and a dual restore pass is due).
    fn add_row(&mut self, coeffs: &[f64], rhs: f64, kind: RowKind) -> f64 {
        debug_assert_eq!(coeffs.len(), self.nv);
        let (sl, su) = match kind {
            RowKind::Le => (0.0, f64::INFINITY),
            RowKind::Eq => (0.0, 0.0),
        };
        let slack = self.push_column(sl, su, 0.0, VarState::Basic);
        let mut row = vec![0.0; self.ncols()];
        row[..self.nv].copy_from_slice(coeffs);
        row[slack] = 1.0;
        // the raw row's structural activity fixes the slack value
        let mut activity = 0.0;
        for j in 0..self.nv {
            activity += coeffs[j] * self.value_of(j);
        }
        // price out current basic variables so basic columns stay unit
        let mut new_rhs = rhs;
        for r in 0..self.nrows() {
            let alpha = row[self.basic[r]];
            if alpha != 0.0 {
                let src = self.rows[r].clone();
                for (dst, s) in row.iter_mut().zip(&src) {
                    *dst -= alpha * s;
                }
                row[self.basic[r]] = 0.0;
                new_rhs -= alpha * self.rhs[r];
            }
        }
        let beta = rhs - activity;
        self.rows.push(row);
        self.rhs.push(new_rhs);
        self.basic.push(slack);
        self.beta.push(beta);
        self.xval[slack] = beta;
        beta
    }

    /// One primal pivot or bound flip. Returns false when optimal.
    fn primal_step(&mut self, bland: bool) -> Result<bool> {
        // entering column
        let mut enter: Option<(usize, f64, f64)> = None; // (col, |z|, dir)
        for j in 0..self.ncols() {
            let (eligible, dir) = match self.state[j] {
                VarState::AtLower => (self.z[j] > COST_TOL, 1.0),
                VarState::AtUpper => (self.z[j] < -COST_TOL, -1.0),
                VarState::Basic => (false, 0.0),
            };
            if !eligible || self.lower[j] == self.upper[j] {
                continue;
            }
            if bland {
                enter = Some((j, self.z[j].abs(), dir));
                break;
            }
            match enter {
                Some((_, best, _)) if self.z[j].abs() <= best => {}
                _ => enter = Some((j, self.z[j].abs(), dir)),
            }
        }
        let Some((e, _, dir)) = enter else {
            return Ok(false);
        };
        self.pivot_in(e, dir)?;
        Ok(true)
    }

    /// Move entering column e in direction dir (+1 up from lower, -1 down
    /// from upper) until a basic variable or its own opposite bound blocks.
    fn pivot_in(&mut self, e: usize, dir: f64) -> Result<()> {
        let span = self.upper[e] - self.lower[e];
        let mut limit = span; // own bound flip
        let mut leave: Option<(usize, f64)> = None; // (row, target bound)
        for r in 0..self.nrows() {
            let alpha = self.rows[r][e];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basic[r];
            // beta changes by -alpha * dir per unit step
            let rate = -alpha * dir;
            let (room, target) = if rate > 0.0 {
                (self.upper[b] - self.beta[r], self.upper[b])
            } else {
                (self.beta[r] - self.lower[b], self.lower[b])
            };
            if !room.is_finite() {
                continue;
            }
            let step = (room.max(0.0)) / rate.abs();
            if step < limit - 1e-15 {
                limit = step;
                leave = Some((r, target));
            }
        }
        if !limit.is_finite() {
            return Err(Error::InfeasibleLP("objective unbounded above".into()));
        }
        let delta = limit.max(0.0);
        self.degenerate_streak =
            if delta <= 1e-13 { self.degenerate_streak + 1 } else { 0 };
        // apply the move to all basic values
        for r in 0..self.nrows() {
            let alpha = self.rows[r][e];
            if alpha != 0.0 {
                self.beta[r] -= alpha * dir * delta;
                self.xval[self.basic[r]] = self.beta[r];
            }
        }
        match leave {
            None => {
                // bound flip
                self.state[e] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                self.xval[e] = if dir > 0.0 { self.upper[e] } else { self.lower[e] };
            }
            Some((r, target)) => {
                let new_val = match self.state[e] {
                    VarState::AtLower => self.lower[e] + delta,
                    VarState::AtUpper => self.upper[e] - delta,
                    VarState::Basic => unreachable!(),
                };
                let old_basic = self.basic[r];
                self.state[old_basic] = if target == self.lower[old_basic] {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                self.xval[old_basic] = target;
                self.eliminate(r, e);
                self.basic[r] = e;
                self.state[e] = VarState::Basic;
                self.beta[r] = new_val;
                self.xval[e] = new_val;
            }
        }
        Ok(())
    }

    /// Gaussian elimination making column e unit at row r; updates reduced
    /// costs alongside.
    fn eliminate(&mut self, r: usize, e: usize) {
        let pivot = self.rows[r][e];
        debug_assert!(pivot.abs() > PIVOT_TOL * 1e-3);
        let inv = 1.0 / pivot;
        for v in &mut self.rows[r] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.rows[r][e] = 1.0;
        let src = self.rows[r].clone();
        let src_rhs = self.rhs[r];
        for rr in 0..self.nrows() {
            if rr == r {
                continue;
            }
            let factor = self.rows[rr][e];
            if factor != 0.0 {
                for (dst, s) in self.rows[rr].iter_mut().zip(&src) {
                    *dst -= factor * s;
                }
                self.rows[rr][e] = 0.0;
                self.rhs[rr] -= factor * src_rhs;
            }
        }
        let zfac = self.z[e];
        if zfac != 0.0 {
            for (dst, s) in self.z.iter_mut().zip(&src) {
                *dst -= zfac * s;
            }
            self.z[e] = 0.0;
        }
    }

    /// Primal simplex to optimality from a feasible basis.
    fn primal_solve(&mut self) -> Result<()> {
        self.degenerate_streak = 0;
        let cap = 200 * (self.nrows() + self.ncols()) + 5000;
        for _ in 0..cap {
            let bland = self.degenerate_streak >= DEGENERATE_LIMIT;
            if !self.primal_step(bland)? {
                return Ok(());
            }
        }
        Err(Error::InfeasibleLP("simplex iteration limit".into()))
    }

    /// Dual simplex until every basic value is back inside its bounds.
    fn dual_restore(&mut self) -> Result<()> {
        let cap = 200 * (self.nrows() + self.ncols()) + 5000;
        for _ in 0..cap {
            // most violated basic variable
            let mut worst: Option<(usize, f64, bool)> = None; // (row, violation, below)
            for r in 0..self.nrows() {
                let b = self.basic[r];
                let below = self.lower[b] - self.beta[r];
                let above = self.beta[r] - self.upper[b];
                if below > FEAS_TOL {
                    if worst.as_ref().map_or(true, |&(_, v, _)| below > v) {
                        worst = Some((r, below, true));
                    }
                } else if above > FEAS_TOL
                    && worst.as_ref().map_or(true, |&(_, v, _)| above > v)
                {
                    worst = Some((r, above, false));
                }
            }
            let Some((r, violation, below)) = worst else {
                return Ok(());
            };
            // entering column keeping dual feasibility: min |z_j / alpha_j|
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncols() {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let alpha = self.rows[r][j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let eligible = match (self.state[j], below) {
                    (VarState::AtLower, true) => alpha < 0.0,
                    (VarState::AtUpper, true) => alpha > 0.0,
                    (VarState::AtLower, false) => alpha > 0.0,
                    (VarState::AtUpper, false) => alpha < 0.0,
                    (VarState::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = (self.z[j] / alpha).abs();
                if enter.as_ref().map_or(true, |&(_, best)| ratio < best - 1e-15) {
                    enter = Some((j, ratio));
                }
            }
            let Some((e, _)) = enter else {
                return Err(Error::InfeasibleLP(
                    "no dual pivot available; constraints inconsistent".into(),
                ));
            };
            let alpha = self.rows[r][e];
            let delta = violation / alpha.abs();
            let dir = match self.state[e] {
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
                VarState::Basic => unreachable!(),
            };
            // sanity: the chosen sign actually reduces the violation
            debug_assert!(if below { -alpha * dir > 0.0 } else { -alpha * dir < 0.0 });
            for rr in 0..self.nrows() {
                let a = self.rows[rr][e];
                if a != 0.0 {
                    self.beta[rr] -= a * dir * delta;
                    self.xval[self.basic[rr]] = self.beta[rr];
                }
            }
            let old_basic = self.basic[r];
            self.state[old_basic] =
                if below { VarState::AtLower } else { VarState::AtUpper };
            self.xval[old_basic] =
                if below { self.lower[old_basic] } else { self.upper[old_basic] };
            let new_val = match dir {
                d if d > 0.0 => self.lower[e] + delta,
                _ => self.upper[e] - delta,
            };
            self.eliminate(r, e);
            self.basic[r] = e;
            self.state[e] = VarState::Basic;
            self.beta[r] = new_val;
            self.xval[e] = new_val;
        }
        Err(Error::InfeasibleLP("dual simplex iteration limit".into()))
    }

    /// Recompute reduced costs from the objective and current tableau.
    fn refresh_reduced_costs(&mut self) {
        self.z.copy_from_slice(&self.obj);
        for r in 0..self.nrows() {
            let cb = self.obj[self.basic[r]];
            if cb != 0.0 {
                let row = &self.rows[r];
                for (zj, a) in self.z.iter_mut().zip(row) {
                    *zj -= cb * a;
                }
            }
        }
        for r in 0..self.nrows() {
            self.z[self.basic[r]] = 0.0;
        }
    }

    fn solution(&self) -> LpSolution {
        let x: Vec<f64> = (0..self.nv).map(|j| self.value_of(j)).collect();
        let objective = x.iter().zip(&self.obj).map(|(xi, c)| xi * c).sum();
        LpSolution { objective, x }
    }
}

/// Fresh two-phase primal solve of an arbitrary bounded-variable LP.
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution> {
    let nv = lp.objective.len();
    for row in &lp.rows {
        if row.coeffs.len() != nv {
            return Err(Error::InvalidConfig("LP row length mismatch".into()));
        }
    }
    // phase 1: zero objective on structurals, artificials penalized
    let mut tab = Tableau::new(vec![0.0; nv], lp.lower.clone(), lp.upper.clone())?;
    let mut artificial_cols = Vec::new();
    for row in &lp.rows {
        let beta = tab.add_row(&row.coeffs, row.rhs, row.kind);
        let r = tab.nrows() - 1;
        let slack = tab.basic[r];
        let (lo, hi) = (tab.lower[slack], tab.upper[slack]);
        if beta < lo - FEAS_TOL || beta > hi + FEAS_TOL {
            // replace the violated slack by an artificial column absorbing
            // the violation; negate the row when needed so the artificial
            // (the new basic variable) keeps a unit column
            let below = beta < lo;
            if below {
                for v in &mut tab.rows[r] {
                    *v = -*v;
                }
                tab.rhs[r] = -tab.rhs[r];
            }
            let art = tab.push_column(0.0, f64::INFINITY, -1.0, VarState::Basic);
            tab.rows[r][art] = 1.0;
            // park the slack at its nearest bound
            tab.state[slack] = if below { VarState::AtLower } else { VarState::AtUpper };
            tab.xval[slack] = if below { lo } else { hi };
            let resid = if below { lo - beta } else { beta - hi };
            tab.basic[r] = art;
            tab.beta[r] = resid;
            tab.xval[art] = resid;
            artificial_cols.push(art);
        }
    }
    if !artificial_cols.is_empty() {
        tab.refresh_reduced_costs();
        tab.primal_solve()?;
        let infeas: f64 = artificial_cols.iter().map(|&j| tab.value_of(j)).sum();
        if infeas > 1e-8 {
            return Err(Error::InfeasibleLP(format!(
                "phase-1 residual {infeas:e}"
            )));
        }
        // pin every artificial to zero so phase 2 cannot revive them
        for &j in &artificial_cols {
            tab.upper[j] = 0.0;
            if tab.state[j] != VarState::Basic {
                tab.state[j] = VarState::AtLower;
                tab.xval[j] = 0.0;
            }
        }
    }
    // phase 2: the real objective
    tab.obj[..nv].copy_from_slice(&lp.objective);
    for j in nv..tab.ncols() {
        tab.obj[j] = 0.0;
    }
    tab.refresh_reduced_costs();
    tab.primal_solve()?;
    Ok(tab.solution())
}

/// Warm tableau for the cutting-plane loop: box-bounded structurals, one
/// fixed equality row, and a growing pool of `<=` rows. The tableau holds
/// only a working subset of the pool; every solve is validated against the
/// full pool, so pruning never changes results.
pub struct IncrementalLp {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    eq_row: Vec<f64>,
    eq_rhs: f64,
    /// All <= rows ever added, already scaled.
    pool: Vec<(Vec<f64>, f64)>,
    /// Pool indices currently in the tableau, in insertion order.
    working: Vec<usize>,
    /// Parallel to pool: whether the row sits in the tableau.
    in_working: Vec<bool>,
    /// Consecutive solves during which a working row stayed slack.
    idle: Vec<usize>,
    tableau: Option<Tableau>,
}

/// Working rows idle this many consecutive solves become prune candidates.
const IDLE_LIMIT: usize = 40;

impl IncrementalLp {
    /// A problem with box bounds and one equality row (the measure simplex).
    pub fn new(
        objective: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        eq_row: Vec<f64>,
        eq_rhs: f64,
    ) -> Result<Self> {
        let nv = objective.len();
        if lower.len() != nv || upper.len() != nv || eq_row.len() != nv {
            return Err(Error::InvalidConfig("mismatched LP dimensions".into()));
        }
        Ok(IncrementalLp {
            objective,
            lower,
            upper,
            eq_row,
            eq_rhs,
            pool: Vec::new(),
            working: Vec::new(),
            in_working: Vec::new(),
            idle: Vec::new(),
            tableau: None,
        })
    }

    /// Add a `<=` row to the pool (scaled to unit max coefficient) and to
    /// the working tableau.
    pub fn add_le_row(&mut self, coeffs: Vec<f64>, rhs: f64) {
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(rhs.abs()).max(1e-300);
        let inv = 1.0 / scale;
        let scaled: Vec<f64> = coeffs.iter().map(|c| c * inv).collect();
        let srhs = rhs * inv;
        let idx = self.pool.len();
        self.pool.push((scaled, srhs));
        self.in_working.push(true);
        if let Some(tab) = &mut self.tableau {
            let (row, rhs) = &self.pool[idx];
            tab.add_row(row, *rhs, RowKind::Le);
        }
        self.working.push(idx);
        self.idle.push(0);
    }

    /// Build a fresh tableau over the current working set with a feasible
    /// basis: structurals packed to meet the equality row, slacks basic.
    fn rebuild(&mut self) -> Result<()> {
        let nv = self.objective.len();
        let mut tab =
            Tableau::new(self.objective.clone(), self.lower.clone(), self.upper.clone())?;
        // choose structural values meeting the equality row: applicable to
        // the measure simplex (unit coefficients); otherwise fall back to a
        // phase-1-free start only if the slack trick works out
        tab.add_row(&self.eq_row, self.eq_rhs, RowKind::Eq);
        // make one structural basic in the equality row to absorb the rhs
        let mut need = self.eq_rhs;
        for j in 0..nv {
            if self.eq_row[j] != 0.0 {
                need -= self.eq_row[j] * tab.value_of(j);
            }
        }
        if need.abs() > FEAS_TOL {
            // raise structural variables with positive coefficient and room
            for j in 0..nv {
                let coef = self.eq_row[j];
                if coef == 0.0 || tab.state[j] != VarState::AtLower {
                    continue;
                }
                let room = (self.upper[j] - self.lower[j]) * coef;
                if !room.is_finite() || room <= 0.0 {
                    continue;
                }
                if room < need - 1e-15 {
                    tab.state[j] = VarState::AtUpper;
                    tab.xval[j] = self.upper[j];
                    need -= room;
                } else {
                    // fractional: make j basic in the equality row
                    let val = self.lower[j] + need / coef;
                    tab.eliminate(0, j);
                    tab.basic[0] = j;
                    tab.state[j] = VarState::Basic;
                    // the slack leaves to its fixed bound
                    let slack = nv; // first pushed column
                    tab.state[slack] = VarState::AtLower;
                    tab.xval[slack] = 0.0;
                    tab.beta[0] = val;
                    tab.xval[j] = val;
                    need = 0.0;
                    break;
                }
            }
            if need.abs() > 1e-9 {
                return Err(Error::InfeasibleLP(
                    "equality row unreachable within bounds".into(),
                ));
            }
        }
        for &idx in &self.working {
            let (row, rhs) = &self.pool[idx];
            tab.add_row(row, *rhs, RowKind::Le);
        }
        tab.refresh_reduced_costs();
        tab.dual_restore()?;
        tab.primal_solve()?;
        self.tableau = Some(tab);
        Ok(())
    }

    /// Re-optimize after row insertions and return the validated optimum.
    pub fn solve(&mut self) -> Result<LpSolution> {
        if self.tableau.is_none() {
            self.rebuild()?;
        } else {
            let tab = self.tableau.as_mut().unwrap();
            tab.dual_restore()?;
            tab.primal_solve()?;
        }
        loop {
            // bring in pool rows the current point violates
            let sol = self.tableau.as_ref().unwrap().solution();
            let mut added = false;
            for idx in 0..self.pool.len() {
                if self.in_working[idx] {
                    continue;
                }
                let (row, rhs) = &self.pool[idx];
                let act: f64 = row.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
                if act > rhs + 1e-10 {
                    let tab = self.tableau.as_mut().unwrap();
                    tab.add_row(row, *rhs, RowKind::Le);
                    self.working.push(idx);
                    self.in_working[idx] = true;
                    self.idle.push(0);
                    added = true;
                }
            }
            if !added {
                self.mark_idle_and_prune()?;
                return Ok(self.tableau.as_ref().unwrap().solution());
            }
            let tab = self.tableau.as_mut().unwrap();
            tab.dual_restore()?;
            tab.primal_solve()?;
        }
    }

    /// Update idle counters; drop long-idle rows and rebuild when the
    /// tableau has grown far past the structural dimension.
    fn mark_idle_and_prune(&mut self) -> Result<()> {
        let tab = self.tableau.as_ref().unwrap();
        let nv = self.objective.len();
        for w in 0..self.working.len() {
            // cut w's slack column: structurals, then the equality slack,
            // then one slack per working row in insertion order
            let slack = nv + 1 + w;
            let idle_now = tab.value_of(slack) > 1e-7;
            self.idle[w] = if idle_now { self.idle[w] + 1 } else { 0 };
        }
        let over = self.working.len() > 3 * nv + 50;
        if over {
            let keep: Vec<usize> = (0..self.working.len())
                .filter(|&w| self.idle[w] < IDLE_LIMIT)
                .collect();
            if keep.len() < self.working.len() {
                for w in 0..self.working.len() {
                    self.in_working[self.working[w]] = false;
                }
                self.working = keep.iter().map(|&w| self.working[w]).collect();
                self.idle = keep.iter().map(|&w| self.idle[w]).collect();
                for &idx in &self.working {
                    self.in_working[idx] = true;
                }
                self.rebuild()?;
            }
        }
        Ok(())
    }

    /// Highest violation of the returned point across the entire pool plus
    /// the equality residual; used by callers as a numerical self-check.
    pub fn validate(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, rhs) in &self.pool {
            let act: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max(act - rhs);
        }
        let eq: f64 = self.eq_row.iter().zip(x).map(|(a, v)| a * v).sum();
        worst.max((eq - self.eq_rhs).abs())
    }

    /// Discard the warm-started basis so the next `solve` rebuilds the
    /// tableau from scratch over the full working set. Used by callers as
    /// a recovery step when a returned point fails validation: the fresh
    /// feasible start takes a different pivot path than the dual restore.
    pub fn reset_basis(&mut self) {
        self.tableau = None;
    }

    pub fn n_pool_rows(&self) -> usize {
        self.pool.len()
    }

    pub fn n_working_rows(&self) -> usize {
        self.working.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn le(coeffs: &[f64], rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), rhs, kind: RowKind::Le }
    }

    #[test]
    fn single_cut_caps_objective() {
        // max t subject to t <= 5, box on a second variable
        let lp = LpProblem {
            objective: vec![1.0, 0.0],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, 1.0],
            rows: vec![le(&[1.0, 0.0], 5.0)],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_relative_eq!(sol.objective, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn box_corner_optimum() {
        // max t s.t. t <= xi1, xi1 + xi2 = 1, 0.1 <= xi <= 1, t >= 0
        let lp = LpProblem {
            objective: vec![1.0, 0.0, 0.0],
            lower: vec![0.0, 0.1, 0.1],
            upper: vec![f64::INFINITY, 1.0, 1.0],
            rows: vec![
                le(&[1.0, -1.0, 0.0], 0.0),
                LpRow { coeffs: vec![0.0, 1.0, 1.0], rhs: 1.0, kind: RowKind::Eq },
            ],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_relative_eq!(sol.objective, 0.9, epsilon = 1e-9);
        assert_relative_eq!(sol.x[1], 0.9, epsilon = 1e-9);
        assert_relative_eq!(sol.x[2], 0.1, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let lp = LpProblem {
            objective: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.0],
            rows: vec![
                LpRow { coeffs: vec![1.0], rhs: 3.0, kind: RowKind::Eq },
            ],
        };
        assert!(matches!(solve_lp(&lp), Err(Error::InfeasibleLP(_))));
    }

    #[test]
    fn unbounded_detected() {
        let lp = LpProblem {
            objective: vec![1.0],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
            rows: vec![],
        };
        assert!(matches!(solve_lp(&lp), Err(Error::InfeasibleLP(_))));
    }

    /// Exhaustive vertex enumeration for small LPs: all choices of active
    /// constraints (rows at equality or variables at bounds).
    fn brute_force(lp: &LpProblem) -> Option<f64> {
        let nv = lp.objective.len();
        let mut best: Option<f64> = None;
        // enumerate subsets of rows forced tight and variables at bounds
        let nr = lp.rows.len();
        let combos = 3usize.pow(nv as u32);
        for rows_mask in 0..(1usize << nr) {
            for combo in 0..combos {
                // decode variable states: 0 lower, 1 upper, 2 free
                let mut states = Vec::with_capacity(nv);
                let mut c = combo;
                for _ in 0..nv {
                    states.push(c % 3);
                    c /= 3;
                }
                let free: Vec<usize> =
                    (0..nv).filter(|&j| states[j] == 2).collect();
                let tight: Vec<usize> =
                    (0..nr).filter(|&r| rows_mask & (1 << r) != 0).collect();
                if free.len() != tight.len() {
                    continue;
                }
                // solve the square system for the free variables
                let dim = free.len();
                let mut x: Vec<f64> = (0..nv)
                    .map(|j| match states[j] {
                        0 => lp.lower[j],
                        1 => lp.upper[j],
                        _ => 0.0,
                    })
                    .collect();
                if x.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                if dim > 0 {
                    let mut a = nalgebra::DMatrix::zeros(dim, dim);
                    let mut b = nalgebra::DVector::zeros(dim);
                    for (i, &r) in tight.iter().enumerate() {
                        let row = &lp.rows[r];
                        let mut rhs = row.rhs;
                        for j in 0..nv {
                            if states[j] != 2 {
                                rhs -= row.coeffs[j] * x[j];
                            }
                        }
                        for (k, &j) in free.iter().enumerate() {
                            a[(i, k)] = row.coeffs[j];
                        }
                        b[i] = rhs;
                    }
                    let Some(sol) = a.lu().solve(&b) else { continue };
                    for (k, &j) in free.iter().enumerate() {
                        x[j] = sol[k];
                    }
                }
                // check feasibility
                let eps = 1e-9;
                if (0..nv).any(|j| x[j] < lp.lower[j] - eps || x[j] > lp.upper[j] + eps) {
                    continue;
                }
                let mut ok = true;
                for (r, row) in lp.rows.iter().enumerate() {
                    let act: f64 =
                        row.coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
                    match row.kind {
                        RowKind::Eq => {
                            if (act - row.rhs).abs() > eps {
                                ok = false;
                            }
                        }
                        RowKind::Le => {
                            let must_tight = rows_mask & (1 << r) != 0;
                            if act > row.rhs + eps
                                || (must_tight && (act - row.rhs).abs() > eps)
                            {
                                ok = false;
                            }
                        }
                    }
                    if !ok {
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                let obj: f64 =
                    lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.max(obj)));
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_random_lps() {
        let mut seed = 42u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let mut solved = 0;
        for _ in 0..100 {
            let nv = 4;
            let objective: Vec<f64> = (0..nv).map(|_| next() * 2.0 - 1.0).collect();
            let lower: Vec<f64> = (0..nv).map(|_| next() * 0.5).collect();
            let upper: Vec<f64> =
                lower.iter().map(|l| l + 0.2 + next()).collect();
            let nr = 3;
            let rows: Vec<LpRow> = (0..nr)
                .map(|_| {
                    let coeffs: Vec<f64> =
                        (0..nv).map(|_| next() * 2.0 - 1.0).collect();
                    // rhs chosen near the box midpoint activity to make the
                    // constraint bite sometimes
                    let mid: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c * 0.5 * (lower[j] + upper[j]))
                        .sum();
                    LpRow { coeffs, rhs: mid + (next() - 0.3) * 0.5, kind: RowKind::Le }
                })
                .collect();
            let lp = LpProblem { objective, lower, upper, rows };
            let brute = brute_force(&lp);
            match solve_lp(&lp) {
                Ok(sol) => {
                    let expect = brute.expect("simplex found a solution where none exists");
                    assert!(
                        (sol.objective - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                        "objective {} vs brute force {}",
                        sol.objective,
                        expect
                    );
                    solved += 1;
                }
                Err(_) => assert!(brute.is_none(), "simplex failed a feasible LP"),
            }
        }
        assert!(solved >= 90, "only {solved} of 100 random LPs were feasible");
    }

    #[test]
    fn incremental_matches_fresh_solves() {
        // measure-style LP: t plus 4 weights in [0.05, 0.5], sum = 1
        let nv = 5;
        let mut objective = vec![0.0; nv];
        objective[0] = 1.0;
        let mut lower = vec![0.05; nv];
        let mut upper = vec![0.5; nv];
        lower[0] = 0.0;
        upper[0] = f64::INFINITY;
        let mut eq = vec![1.0; nv];
        eq[0] = 0.0;
        let mut inc =
            IncrementalLp::new(objective.clone(), lower.clone(), upper.clone(), eq.clone(), 1.0)
                .unwrap();
        let mut seed = 7u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let mut rows_so_far: Vec<LpRow> = vec![LpRow {
            coeffs: eq.clone(),
            rhs: 1.0,
            kind: RowKind::Eq,
        }];
        for step in 0..40 {
            let mut coeffs = vec![0.0; nv];
            coeffs[0] = 1.0;
            for c in coeffs.iter_mut().skip(1) {
                *c = -(next() * 4.0);
            }
            let rhs = next() * 2.0 + 0.2;
            inc.add_le_row(coeffs.clone(), rhs);
            rows_so_far.push(le(&coeffs, rhs));
            let fresh = solve_lp(&LpProblem {
                objective: objective.clone(),
                lower: lower.clone(),
                upper: upper.clone(),
                rows: rows_so_far.clone(),
            })
            .unwrap();
            let warm = inc.solve().unwrap();
            assert!(
                (warm.objective - fresh.objective).abs() <= 1e-8 * (1.0 + fresh.objective.abs()),
                "step {step}: warm {} vs fresh {}",
                warm.objective,
                fresh.objective
            );
            assert!(inc.validate(&warm.x) <= 1e-9);
        }
    }

    #[test]
    fn incremental_prunes_but_stays_exact() {
        // many redundant rows force pruning; optimum must not move
        let mut inc = IncrementalLp::new(
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.1, 0.1],
            vec![f64::INFINITY, 0.9, 0.9],
            vec![0.0, 1.0, 1.0],
            1.0,
        )
        .unwrap();
        inc.add_le_row(vec![1.0, -1.0, 0.0], 0.0);
        for k in 0..400 {
            // successively looser cuts that never bind
            inc.add_le_row(vec![1.0, 0.0, 0.0], 2.0 + k as f64);
            let sol = inc.solve().unwrap();
            assert_relative_eq!(sol.objective, 0.9, epsilon = 1e-9);
        }
        assert!(inc.n_working_rows() < 400);
        assert_eq!(inc.n_pool_rows(), 401);
    }
}

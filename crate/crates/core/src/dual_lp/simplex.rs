//! Dense bounded-variable dual simplex for packing LPs
//!
//! ```text
//!     max  Σ_j r_j x_j   s.t.  Σ_j a_j x_j + s = rhs,   0 ≤ x_j ≤ 1,   s ≥ 0
//! ```
//!
//! Internally the problem is handled in minimization form (costs `-r_j`, zero
//! for slacks). The basis has `m` rows, so one factorization is a dense
//! `m × m` inverse and every iteration is a single O(m·n) pricing pass.
//!
//! The all-slack basis with every positive-reward column at its upper bound
//! is dual feasible, so no phase one is needed. Each iteration removes one
//! primal-infeasible basic variable and uses the bound-flipping ratio test:
//! breakpoints are passed in ratio order, flipping boxed columns, while the
//! dual objective slope stays positive. On a degenerate step (zero dual step
//! length) the next iteration switches to Bland's smallest-index rule.
//!
//! The simplex multipliers `π` of the optimal basis give the dual prices
//! `p = -π ≥ 0` of the packing LP, i.e. the minimizer of
//! `rhs·p + Σ_j (r_j - a_j·p)^+`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::input_gen::Columns;

use super::SolveStatus;

const PIVOT_TOL: f64 = 1e-9;

/// A basic variable: structural column `j` or slack of row `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Col(usize),
    Slack(usize),
}

/// A basis that can seed a later solve on a problem with the same rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Basis {
    vars: Vec<Var>,
}

impl Basis {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    fn slack(m: usize) -> Self {
        Self { vars: (0..m).map(Var::Slack).collect() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Feasibility and reduced-cost tolerance, scaled by `1 + max|rhs|` and
    /// `1 + max|r|` respectively.
    pub tol: f64,
    /// Iteration budget; `None` means `50 · (m + n)`.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iterations: None }
    }
}

#[derive(Clone, Debug)]
pub struct PackingSolution {
    pub status: SolveStatus,
    /// Primal allocation, one entry per column.
    pub allocation: Vec<f64>,
    /// Dual prices `p = -π`, clipped at zero.
    pub prices: Vec<f64>,
    /// `Σ r_j x_j`.
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
}

#[derive(Clone, Copy)]
enum Side {
    /// Basic value fell below its lower bound; it leaves at the lower bound.
    Below,
    /// Basic value exceeds its upper bound; it leaves at the upper bound.
    Above,
}

#[derive(Clone, Copy)]
struct Candidate {
    /// Column index, or `n + i` for the slack of row `i`.
    var: usize,
    ratio: f64,
    /// `|α_rj| · (u_j − l_j)`; infinite for slacks.
    weight: f64,
}

#[inline]
fn precedes(a: &Candidate, b: &Candidate) -> bool {
    a.ratio < b.ratio || (a.ratio == b.ratio && a.var < b.var)
}

/// Moves the median of `cands[lo]`, `cands[mid]`, `cands[hi - 1]` to `hi - 1`,
/// partitions `cands[lo..hi]` around it and returns its final position.
fn partition(cands: &mut [Candidate], lo: usize, hi: usize) -> usize {
    let last = hi - 1;
    let mid = lo + (hi - lo) / 2;
    if precedes(&cands[mid], &cands[lo]) {
        cands.swap(mid, lo);
    }
    if precedes(&cands[last], &cands[lo]) {
        cands.swap(last, lo);
    }
    if precedes(&cands[mid], &cands[last]) {
        cands.swap(mid, last);
    }
    let pivot = cands[last];
    let mut store = lo;
    for k in lo..last {
        if precedes(&cands[k], &pivot) {
            cands.swap(k, store);
            store += 1;
        }
    }
    cands.swap(store, last);
    store
}

/// Bound-flipping ratio test.
///
/// Walks the breakpoints in `(ratio, index)` order, subtracting each weight
/// from `slope` until it would drop to zero or below. Returns the position of
/// the entering candidate and moves every passed candidate to the front of
/// the slice (`cands[..pos]`). `None` means the slope never vanishes.
///
/// A weighted quickselect: expected cost is linear in the number of candidates.
fn bound_flip_select(cands: &mut [Candidate], mut slope: f64) -> Option<usize> {
    let mut lo = 0;
    let mut hi = cands.len();
    while lo < hi {
        let p = partition(cands, lo, hi);
        let left: f64 = cands[lo..p].iter().map(|c| c.weight).sum();
        if slope - left <= 0.0 {
            hi = p;
            continue;
        }
        slope -= left;
        let pivot = cands[p];
        if slope - pivot.weight <= 0.0 {
            return Some(p);
        }
        slope -= pivot.weight;
        lo = p + 1;
    }
    // Every candidate before `lo` was passed. Reaching the end means the slope
    // never vanished; otherwise `lo` is a pivot left in place by an earlier
    // narrowing, which only happens through rounding in the partial sums.
    (lo < cands.len()).then_some(lo)
}

struct Workspace<'a> {
    cols: Columns<'a>,
    m: usize,
    n: usize,
    basis: Vec<Var>,
    col_basic: Vec<bool>,
    slack_basic: Vec<bool>,
    at_upper: Vec<bool>,
    binv: Vec<f64>,
    pi: Vec<f64>,
    /// `rhs − Σ_{nonbasic at upper} a_j`.
    residual: Vec<f64>,
    x_basic: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(cols: Columns<'a>, m: usize, basis: Basis) -> Self {
        let n = cols.len();
        let mut ws = Self {
            cols,
            m,
            n,
            basis: Vec::new(),
            col_basic: vec![false; n],
            slack_basic: vec![false; m],
            at_upper: vec![false; n],
            binv: vec![0.0; m * m],
            pi: vec![0.0; m],
            residual: vec![0.0; m],
            x_basic: vec![0.0; m],
        };
        ws.install(basis);
        ws
    }

    fn install(&mut self, basis: Basis) {
        self.col_basic.iter_mut().for_each(|b| *b = false);
        self.slack_basic.iter_mut().for_each(|s| *s = false);
        for var in &basis.vars {
            match *var {
                Var::Col(j) => self.col_basic[j] = true,
                Var::Slack(i) => self.slack_basic[i] = true,
            }
        }
        self.basis = basis.vars;
    }

    fn cost(&self, var: Var) -> f64 {
        match var {
            Var::Col(j) => -self.cols.reward(j),
            Var::Slack(_) => 0.0,
        }
    }

    fn var_index(&self, var: Var) -> usize {
        match var {
            Var::Col(j) => j,
            Var::Slack(i) => self.n + i,
        }
    }

    /// Dense Gauss-Jordan inverse of the basis matrix with partial pivoting,
    /// followed by `π = c_B B⁻¹`.
    fn factor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (k, var) in self.basis.iter().enumerate() {
            match *var {
                Var::Col(j) => {
                    for (i, a) in self.cols.demand(j).iter().enumerate() {
                        b[i * m + k] = *a;
                    }
                }
                Var::Slack(i) => b[i * m + k] = 1.0,
            }
        }
        let inv = &mut self.binv;
        inv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (piv, piv_abs) = (col..m)
                .map(|r| (r, b[r * m + col].abs()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal))
                .unwrap();
            if piv_abs < 1e-12 {
                return Err(Error::SingularBasis);
            }
            if piv != col {
                for c in 0..m {
                    b.swap(piv * m + c, col * m + c);
                    inv.swap(piv * m + c, col * m + c);
                }
            }
            let scale = 1.0 / b[col * m + col];
            for c in 0..m {
                b[col * m + c] *= scale;
                inv[col * m + c] *= scale;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = b[r * m + col];
                if f != 0.0 {
                    for c in 0..m {
                        b[r * m + c] -= f * b[col * m + c];
                        inv[r * m + c] -= f * inv[col * m + c];
                    }
                }
            }
        }
        for i in 0..m {
            self.pi[i] = (0..m).map(|k| self.cost(self.basis[k]) * self.binv[k * m + i]).sum();
        }
        Ok(())
    }

    /// Sets every nonbasic column to the bound its reduced cost prefers and
    /// rebuilds the residual. Returns false if a nonbasic slack is dual infeasible.
    fn align_statuses(&mut self, rhs: &[f64], dtol: f64) -> bool {
        self.residual.copy_from_slice(rhs);
        let states = self.at_upper.iter_mut().zip(&self.col_basic);
        for ((r, a), (up, &basic)) in self.cols.iter().zip(states) {
            *up = !basic && -r - dot(&self.pi, a) < 0.0;
            if *up {
                for (w, ai) in self.residual.iter_mut().zip(a) {
                    *w -= ai;
                }
            }
        }
        (0..self.m).all(|i| self.slack_basic[i] || -self.pi[i] >= -dtol)
    }

    fn flip(&mut self, j: usize) {
        let a = self.cols.demand(j);
        let sign = if self.at_upper[j] { 1.0 } else { -1.0 };
        for (w, ai) in self.residual.iter_mut().zip(a) {
            *w += sign * ai;
        }
        self.at_upper[j] = !self.at_upper[j];
    }

    fn compute_primals(&mut self) {
        let m = self.m;
        for r in 0..m {
            self.x_basic[r] = (0..m).map(|k| self.binv[r * m + k] * self.residual[k]).sum();
        }
    }

    fn bounds(&self, var: Var) -> (f64, f64) {
        match var {
            Var::Col(_) => (0.0, 1.0),
            Var::Slack(_) => (0.0, f64::INFINITY),
        }
    }

    fn choose_leaving(&self, ptol: f64, bland: bool) -> Option<(usize, Side)> {
        let mut best: Option<(usize, Side, f64)> = None;
        for r in 0..self.m {
            let (lo, hi) = self.bounds(self.basis[r]);
            let x = self.x_basic[r];
            let (side, viol) = if x < lo - ptol {
                (Side::Below, lo - x)
            } else if x > hi + ptol {
                (Side::Above, x - hi)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((br, _, bv)) => {
                    if bland {
                        self.var_index(self.basis[r]) < self.var_index(self.basis[br])
                    } else {
                        viol > bv
                    }
                }
            };
            if better {
                best = Some((r, side, viol));
            }
        }
        best.map(|(r, side, _)| (r, side))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `max Σ r_j x_j` over `Σ a_j x_j ≤ rhs`, `0 ≤ x ≤ 1`.
///
/// `warm` seeds the solve with an earlier basis for the same rows. A warm
/// basis that is singular, references missing columns, or is not dual
/// feasible is replaced by the slack basis.
pub fn solve_packing(
    cols: Columns<'_>,
    rhs: &[f64],
    opts: &SimplexOptions,
    warm: Option<&Basis>,
) -> Result<PackingSolution> {
    let m = rhs.len();
    let n = cols.len();
    if m == 0 {
        return Err(Error::invalid("packing LP needs at least one row"));
    }
    if cols.resource_count() != m {
        return Err(Error::invalid("column length differs from the number of rows"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let rhs_scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let cost_scale = 1.0 + cols.rewards().iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let ptol = opts.tol * rhs_scale;
    let dtol = opts.tol * cost_scale;
    let max_iter = opts.max_iterations.unwrap_or(50 * (m + n));

    let warm_ok = warm.filter(|b| {
        b.vars.len() == m
            && b.vars.iter().all(|v| match *v {
                Var::Col(j) => j < n,
                Var::Slack(i) => i < m,
            })
    });
    let mut ws = Workspace::new(cols, m, warm_ok.cloned().unwrap_or_else(|| Basis::slack(m)));
    let usable = ws.factor().is_ok() && ws.align_statuses(rhs, dtol);
    if !usable {
        ws.install(Basis::slack(m));
        ws.factor()?;
        ws.align_statuses(rhs, dtol);
    }

    let mut iterations = 0usize;
    let mut bland = false;
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut rho = vec![0.0; m];
    let status = loop {
        ws.compute_primals();
        let Some((r, side)) = ws.choose_leaving(ptol, bland) else {
            break SolveStatus::Optimal;
        };
        if iterations >= max_iter {
            break SolveStatus::MaxIterations;
        }
        iterations += 1;

        let leaving = ws.basis[r];
        let (lo, hi) = ws.bounds(leaving);
        let slope = match side {
            Side::Below => lo - ws.x_basic[r],
            Side::Above => ws.x_basic[r] - hi,
        };
        // reduced costs move as d_j − θ·α_rj with θ = sign · step, step ≥ 0
        let sign = match side {
            Side::Below => -1.0,
            Side::Above => 1.0,
        };
        rho.copy_from_slice(&ws.binv[r * m..(r + 1) * m]);

        candidates.clear();
        let states = ws.at_upper.iter().zip(&ws.col_basic);
        for (j, ((r, a), (&up, &basic))) in cols.iter().zip(states).enumerate() {
            if basic {
                continue;
            }
            let alpha = dot(&rho, a);
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let s_alpha = sign * alpha;
            // at lower (d ≥ 0) blocks when s·α > 0; at upper (d ≤ 0) when s·α < 0
            let blocks = if up { s_alpha < 0.0 } else { s_alpha > 0.0 };
            if blocks {
                let d = -r - dot(&ws.pi, a);
                candidates.push(Candidate { var: j, ratio: d.abs() / alpha.abs(), weight: alpha.abs() });
            }
        }
        for i in 0..m {
            if ws.slack_basic[i] || rho[i].abs() <= PIVOT_TOL {
                continue;
            }
            if sign * rho[i] > 0.0 {
                let d = (-ws.pi[i]).max(0.0);
                candidates.push(Candidate { var: n + i, ratio: d / rho[i].abs(), weight: f64::INFINITY });
            }
        }

        let Some(enter_pos) = bound_flip_select(&mut candidates, slope) else {
            break SolveStatus::Unbounded;
        };
        for c in &candidates[..enter_pos] {
            ws.flip(c.var);
        }
        let enter = candidates[enter_pos];
        bland = enter.ratio <= 0.0;
        let entering = if enter.var < n { Var::Col(enter.var) } else { Var::Slack(enter.var - n) };

        match leaving {
            Var::Col(j) => {
                ws.col_basic[j] = false;
                if matches!(side, Side::Above) {
                    ws.at_upper[j] = true;
                    for (w, ai) in ws.residual.iter_mut().zip(cols.demand(j)) {
                        *w -= ai;
                    }
                }
            }
            Var::Slack(i) => ws.slack_basic[i] = false,
        }
        match entering {
            Var::Col(j) => {
                if ws.at_upper[j] {
                    ws.flip(j);
                }
                ws.col_basic[j] = true;
            }
            Var::Slack(i) => ws.slack_basic[i] = true,
        }
        ws.basis[r] = entering;
        ws.factor()?;
    };

    let mut allocation: Vec<f64> = ws.at_upper.iter().map(|&u| if u { 1.0 } else { 0.0 }).collect();
    for (row, var) in ws.basis.iter().enumerate() {
        if let Var::Col(j) = *var {
            allocation[j] = ws.x_basic[row].clamp(0.0, 1.0);
        }
    }
    let objective = cols.rewards().iter().zip(&allocation).map(|(r, x)| r * x).sum();
    let prices = ws.pi.iter().map(|p| (-p).max(0.0)).collect();
    Ok(PackingSolution { status, allocation, prices, objective, iterations, basis: Basis { vars: ws.basis } })
}

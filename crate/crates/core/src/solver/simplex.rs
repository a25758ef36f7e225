//! Dense two-phase primal simplex with bounded variables.
//!
//! Variables are shifted to a zero lower bound; a nonbasic variable sitting
//! at its upper bound is handled by complementing its column (`y' = u - y`)
//! so every nonbasic value is zero in tableau coordinates. Rows are scaled
//! to unit infinity norm, and the tableau is recomputed from the original
//! rows every few hundred pivots or when round-off drives a basic value
//! negative. Pricing is Dantzig's largest reduced cost,
//! switching to Bland's smallest-index rule after a run of degenerate
//! pivots, which rules out cycling.

use crate::milp::Relation;

use super::SolveError;

/// Ratio-test and drive-out pivot threshold.
const PIVOT_TOL: f64 = 1e-7;
/// Bland's rule only picks leaving rows whose pivot is at least this
/// fraction of the largest eligible one.
const STABLE_PIVOT: f64 = 1e-2;
/// Pivots smaller than this mean the basis has become singular.
const BREAKDOWN_TOL: f64 = 1e-12;
const OPTIMALITY_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;
/// Tableau entries smaller than this are round-off and are zeroed.
const DROP_TOL: f64 = 1e-11;
/// Basic values below minus this trigger a refactorization.
const DRIFT_TOL: f64 = 1e-6;
/// Pivots between scheduled refactorizations.
const REFACTOR_EVERY: usize = 200;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `rows` and `lower ≤ x ≤ upper`.
/// Bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(n: usize) -> Self {
        LpProblem { objective: vec![0.0; n], rows: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(LpRow { terms, relation, rhs });
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// How an original variable is expressed through internal columns:
/// `x = offset + sign * y[col] (- y[col2])`.
#[derive(Clone, Copy)]
struct Mapping {
    offset: f64,
    sign: f64,
    col: usize,
    /// Negative part of a free variable.
    minus: Option<usize>,
}

struct Tableau {
    m: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    flipped: Vec<bool>,
    allowed: Vec<bool>,
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    /// Initial tableau, whose basis is the identity.
    a0: Vec<f64>,
    b0: Vec<f64>,
    /// Cost of the running phase, for repricing after a refactorization.
    cost: Vec<f64>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn is_basic(&self, j: usize) -> bool {
        self.basis.contains(&j)
    }

    fn pivot(&mut self, r: usize, t: usize) -> Result<(), SolveError> {
        let cols = self.cols;
        let p = self.a[r * cols + t];
        if p.abs() < BREAKDOWN_TOL || !p.is_finite() {
            return Err(SolveError::NumericalBreakdown);
        }
        let inv = 1.0 / p;
        for j in 0..cols {
            self.a[r * cols + j] *= inv;
        }
        self.b[r] *= inv;
        self.a[r * cols + t] = 1.0;
        let (pivot_row, b_r) = (self.a[r * cols..(r + 1) * cols].to_vec(), self.b[r]);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + t];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                if pr != 0.0 {
                    *x -= f * pr;
                    if x.abs() < DROP_TOL {
                        *x = 0.0;
                    }
                }
            }
            row[t] = 0.0;
            self.b[i] -= f * b_r;
        }
        let f = self.d[t];
        if f != 0.0 {
            for (dj, &pr) in self.d.iter_mut().zip(&pivot_row) {
                *dj -= f * pr;
            }
            self.d[t] = 0.0;
        }
        self.basis[r] = t;
        Ok(())
    }

    /// Moves nonbasic `j` from zero to its upper bound by complementing it.
    fn flip_nonbasic(&mut self, j: usize) {
        let u = self.upper[j];
        for i in 0..self.m {
            let aij = self.a[i * self.cols + j];
            if aij != 0.0 {
                self.b[i] -= aij * u;
                self.a[i * self.cols + j] = -aij;
            }
        }
        self.d[j] = -self.d[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Complements the basic variable of row `r`.
    fn flip_basic(&mut self, r: usize) {
        let l = self.basis[r];
        for j in 0..self.cols {
            if j != l {
                self.a[r * self.cols + j] = -self.a[r * self.cols + j];
            }
        }
        self.b[r] = self.upper[l] - self.b[r];
        self.flipped[l] = !self.flipped[l];
    }

    /// Recomputes the tableau from the initial one for the current basis,
    /// discarding accumulated round-off.
    fn refactor(&mut self) -> Result<(), SolveError> {
        let (m, cols) = (self.m, self.cols);
        let width = cols + 1;
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            let mut rhs = self.b0[i];
            for j in 0..cols {
                let a = self.a0[i * cols + j];
                if self.flipped[j] {
                    t[i * width + j] = -a;
                    rhs -= a * self.upper[j];
                } else {
                    t[i * width + j] = a;
                }
            }
            t[i * width + cols] = rhs;
        }
        // Gauss-Jordan on the basic columns with partial pivoting.
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for (k, &col) in self.basis.iter().enumerate() {
            let r = (0..m)
                .filter(|&i| !used[i])
                .max_by(|&x, &y| t[x * width + col].abs().total_cmp(&t[y * width + col].abs()))
                .ok_or(SolveError::NumericalBreakdown)?;
            let p = t[r * width + col];
            if p.abs() < BREAKDOWN_TOL {
                return Err(SolveError::NumericalBreakdown);
            }
            used[r] = true;
            row_of[k] = r;
            let inv = 1.0 / p;
            for x in &mut t[r * width..(r + 1) * width] {
                *x *= inv;
            }
            let pivot_row = t[r * width..(r + 1) * width].to_vec();
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = t[i * width + col];
                if f == 0.0 {
                    continue;
                }
                for (x, &pr) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                    if pr != 0.0 {
                        *x -= f * pr;
                    }
                }
            }
        }
        for (k, &r) in row_of.iter().enumerate() {
            self.a[k * cols..(k + 1) * cols].copy_from_slice(&t[r * width..r * width + cols]);
            self.b[k] = t[r * width + cols];
            for (j, &col) in self.basis.iter().enumerate() {
                self.a[k * cols + col] = if j == k { 1.0 } else { 0.0 };
            }
        }
        let cost = std::mem::take(&mut self.cost);
        self.price(&cost);
        Ok(())
    }

    /// Sets reduced costs for `cost` (maximize) in current coordinates.
    fn price(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        let eff: Vec<f64> = (0..self.cols).map(|j| if self.flipped[j] { -cost[j] } else { cost[j] }).collect();
        self.d = eff.clone();
        for i in 0..self.m {
            let cb = eff[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                self.d[j] -= cb * self.a[i * self.cols + j];
            }
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }
    }

    fn run(&mut self) -> Result<PhaseEnd, SolveError> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(SolveError::IterationLimit);
            }
            let mut entering = None;
            let mut best = OPTIMALITY_TOL;
            for j in 0..self.cols {
                if !self.allowed[j] || self.d[j] <= OPTIMALITY_TOL || self.upper[j] <= 0.0 || self.is_basic(j) {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if self.d[j] > best {
                    best = self.d[j];
                    entering = Some(j);
                }
            }
            let Some(t) = entering else { return Ok(PhaseEnd::Optimal) };

            // Leaving row: (row, leaves at upper bound, ratio, |pivot|).
            // Two passes: the first finds the smallest ratio with bounds
            // relaxed by the feasibility tolerance, the second takes the
            // largest pivot among rows within it (Bland: smallest index).
            let ratio_of = |i: usize, slack: f64| -> Option<(f64, bool, f64)> {
                let a = self.at(i, t);
                let bi = self.b[i].max(0.0);
                if a > PIVOT_TOL {
                    Some(((bi + slack) / a, false, a))
                } else if a < -PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                    Some((((self.upper[self.basis[i]] - bi).max(0.0) + slack) / -a, true, -a))
                } else {
                    None
                }
            };
            let bound = (0..self.m).filter_map(|i| ratio_of(i, FEASIBILITY_TOL)).map(|r| r.0).fold(f64::INFINITY, f64::min);
            let largest = (0..self.m).filter_map(|i| ratio_of(i, 0.0)).filter(|r| r.0 <= bound).map(|r| r.2).fold(0.0, f64::max);
            let mut best: Option<(usize, bool, f64, f64)> = None;
            for i in 0..self.m {
                let Some((ratio, at_upper, a)) = ratio_of(i, 0.0) else { continue };
                if ratio > bound || a < STABLE_PIVOT * largest {
                    continue;
                }
                let replace = match best {
                    None => true,
                    Some((r, _, _, ba)) => {
                        if bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            a > ba
                        }
                    }
                };
                if replace {
                    best = Some((i, at_upper, ratio, a));
                }
            }
            let step = match best {
                None if self.upper[t].is_infinite() => return Ok(PhaseEnd::Unbounded),
                Some((_, _, ratio, _)) if ratio < self.upper[t] => {
                    let (r, at_upper, _, _) = best.expect("matched Some");
                    if at_upper {
                        self.flip_basic(r);
                    }
                    self.pivot(r, t)?;
                    ratio
                }
                _ => {
                    self.flip_nonbasic(t);
                    self.upper[t]
                }
            };
            let drifted = self.b.iter().any(|&bi| bi < -DRIFT_TOL);
            if drifted || self.iterations % REFACTOR_EVERY == 0 {
                self.refactor()?;
            }
            for bi in &mut self.b {
                if *bi < 0.0 && *bi > -FEASIBILITY_TOL {
                    *bi = 0.0;
                }
            }
            if step <= FEASIBILITY_TOL {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
    }

    fn value(&self, j: usize) -> f64 {
        let v = self.basis.iter().position(|&bj| bj == j).map_or(0.0, |i| self.b[i]);
        if self.flipped[j] {
            self.upper[j] - v
        } else {
            v
        }
    }
}

/// Solves the LP. `Err` only for numerical failure or the iteration cap.
pub fn simplex_lp(problem: &LpProblem) -> Result<LpOutcome, SolveError> {
    let n = problem.n();
    // Shift or split variables so every internal column lives in [0, u].
    let mut maps = Vec::with_capacity(n);
    let mut col_upper = Vec::new();
    for j in 0..n {
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        if lo > hi + FEASIBILITY_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        let col = col_upper.len();
        if lo.is_finite() {
            col_upper.push((hi - lo).max(0.0));
            maps.push(Mapping { offset: lo, sign: 1.0, col, minus: None });
        } else if hi.is_finite() {
            col_upper.push(f64::INFINITY);
            maps.push(Mapping { offset: hi, sign: -1.0, col, minus: None });
        } else {
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
            maps.push(Mapping { offset: 0.0, sign: 1.0, col, minus: Some(col + 1) });
        }
    }
    let structural = col_upper.len();

    // Internal rows: coefficients on structural columns, relation, rhs.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::with_capacity(problem.rows.len());
    for row in &problem.rows {
        let mut rhs = row.rhs;
        let mut terms = Vec::with_capacity(row.terms.len());
        for &(v, a) in &row.terms {
            if a == 0.0 {
                continue;
            }
            let map = maps[v];
            rhs -= a * map.offset;
            terms.push((map.col, a * map.sign));
            if let Some(minus) = map.minus {
                terms.push((minus, -a));
            }
        }
        let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            let ok = match row.relation {
                Relation::Le => rhs >= -FEASIBILITY_TOL * rhs.abs().max(1.0),
                Relation::Ge => rhs <= FEASIBILITY_TOL * rhs.abs().max(1.0),
                Relation::Eq => rhs.abs() <= FEASIBILITY_TOL * rhs.abs().max(1.0),
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        for t in &mut terms {
            t.1 /= scale;
        }
        rows.push((terms, row.relation, rhs / scale));
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    // Decide row orientation and which rows need an artificial.
    let mut needs_artificial = Vec::with_capacity(m);
    let mut negate = Vec::with_capacity(m);
    for (_, relation, rhs) in &rows {
        let slack_sign = match relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => 0.0,
        };
        let neg = *rhs < 0.0 || (*rhs == 0.0 && slack_sign < 0.0);
        negate.push(neg);
        let effective = if neg { -slack_sign } else { slack_sign };
        needs_artificial.push(effective <= 0.0);
    }
    let artificial_count = needs_artificial.iter().filter(|&&x| x).count();
    let cols = structural + slack_count + artificial_count;

    let mut t = Tableau {
        m,
        cols,
        a: vec![0.0; m * cols],
        b: vec![0.0; m],
        upper: col_upper,
        basis: vec![0; m],
        flipped: vec![false; cols],
        allowed: vec![true; cols],
        d: vec![0.0; cols],
        iterations: 0,
        max_iterations: 50 * (m + cols) + 1000,
        a0: Vec::new(),
        b0: Vec::new(),
        cost: Vec::new(),
    };
    t.upper.resize(cols, f64::INFINITY);
    let mut slack = structural;
    let mut art = structural + slack_count;
    let mut artificials = Vec::new();
    for (i, (terms, relation, rhs)) in rows.iter().enumerate() {
        let s = if negate[i] { -1.0 } else { 1.0 };
        for &(j, a) in terms {
            t.a[i * cols + j] += s * a;
        }
        t.b[i] = s * rhs;
        if *relation != Relation::Eq {
            let sign = if *relation == Relation::Le { 1.0 } else { -1.0 };
            t.a[i * cols + slack] = s * sign;
            if !needs_artificial[i] {
                t.basis[i] = slack;
            }
            slack += 1;
        }
        if needs_artificial[i] {
            t.a[i * cols + art] = 1.0;
            t.basis[i] = art;
            artificials.push(art);
            art += 1;
        }
    }

    t.a0 = t.a.clone();
    t.b0 = t.b.clone();
    let scale = t.b.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
    if !artificials.is_empty() {
        let mut cost = vec![0.0; cols];
        for &a in &artificials {
            cost[a] = -1.0;
        }
        t.price(&cost);
        t.run()?;
        let infeasibility: f64 = (0..m).filter(|&i| artificials.contains(&t.basis[i])).map(|i| t.b[i]).sum();
        if infeasibility > FEASIBILITY_TOL * scale * 10.0 {
            return Ok(LpOutcome::Infeasible);
        }
        for &a in &artificials {
            t.allowed[a] = false;
            t.upper[a] = 0.0;
        }
        for r in 0..m {
            if !artificials.contains(&t.basis[r]) {
                continue;
            }
            let candidate = (0..structural + slack_count)
                .filter(|&j| !t.is_basic(j))
                .map(|j| (j, t.at(r, j).abs()))
                .filter(|&(_, a)| a > PIVOT_TOL * 100.0)
                .max_by(|x, y| x.1.total_cmp(&y.1));
            if let Some((j, _)) = candidate {
                t.pivot(r, j)?;
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for (j, map) in maps.iter().enumerate() {
        cost[map.col] += problem.objective[j] * map.sign;
        if let Some(minus) = map.minus {
            cost[minus] -= problem.objective[j];
        }
    }
    t.price(&cost);
    if let PhaseEnd::Unbounded = t.run()? {
        return Ok(LpOutcome::Unbounded);
    }

    let x: Vec<f64> = maps
        .iter()
        .map(|map| {
            let mut v = map.offset + map.sign * t.value(map.col);
            if let Some(minus) = map.minus {
                v -= t.value(minus);
            }
            v
        })
        .collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NumericalBreakdown);
    }
    let x: Vec<f64> = x
        .into_iter()
        .enumerate()
        .map(|(j, v)| v.clamp(problem.lower[j], problem.upper[j]))
        .collect();
    let value = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal { x, value })
}

//! Bounded two-phase revised simplex with an explicit dense basis inverse.
//!
//! Every row `i` gets a slack `s_i` so that `A x + s = b`, with slack bounds
//! `[0, inf)` for `<=`, `(-inf, 0]` for `>=` and `[0, 0]` for `=`. Phase 1
//! adds one artificial per row whose slack cannot absorb the initial residual.

use crate::problem::{LinearProgram, LpError, RowSense};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A basic variable, identified independently of the internal layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisVar {
    Structural(usize),
    Slack(usize),
}

/// A simplex basis that can seed a later solve of a related problem.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<BasisVar>,
    /// Nonbasic structural variables resting at their upper bound.
    pub at_upper: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub objective: T,
    pub x: Vec<T>,
    /// Row duals `y` with `c_j - y'A_j` the reduced cost. For a minimization,
    /// `>=` rows have `y >= 0` and `<=` rows have `y <= 0`.
    pub duals: Vec<T>,
    pub reduced_costs: Vec<T>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            bland_after: 1000,
            refactor_every: 100,
        }
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    solve_lp_with(lp, &SimplexOptions::default(), None)
}

pub fn solve_lp_with<T: Scalar>(
    lp: &LinearProgram<T>,
    opts: &SimplexOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let mut engine = Engine::new(lp, opts);
    if let Some(basis) = warm {
        if engine.warm_start(basis) {
            engine.set_phase2_costs(lp);
            match engine.run() {
                Outcome::Singular => {}
                outcome => return Ok(engine.finish(lp, outcome)),
            }
            engine = Engine::new(lp, opts);
        }
    }
    engine.cold_start();
    engine.set_phase1_costs();
    match engine.run() {
        Outcome::Optimal => {}
        Outcome::Unbounded | Outcome::IterationLimit | Outcome::Singular => {
            return Ok(engine.finish(lp, Outcome::IterationLimit))
        }
    }
    let infeas = engine.phase1_objective();
    let bnorm = lp
        .rows()
        .iter()
        .fold(T::zero(), |acc, r| acc.max(r.rhs.abs()));
    if infeas > T::feasibility_tol() * (T::one() + bnorm) {
        return Ok(engine.infeasible(lp));
    }
    engine.retire_artificials();
    engine.set_phase2_costs(lp);
    let outcome = engine.run();
    let outcome = if outcome == Outcome::Singular {
        Outcome::IterationLimit
    } else {
        outcome
    };
    Ok(engine.finish(lp, outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

struct Engine<T> {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, T)>>,
    lower: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    b: Vec<T>,
    state: Vec<State>,
    basis: Vec<usize>,
    x: Vec<T>,
    binv: Vec<T>,
    iterations: usize,
    max_iterations: usize,
    bland_after: usize,
    refactor_every: usize,
    degenerate_run: usize,
    bland: bool,
    since_refactor: usize,
}

impl<T: Scalar> Engine<T> {
    fn new(lp: &LinearProgram<T>, opts: &SimplexOptions) -> Self {
        let m = lp.num_rows();
        let n_struct = lp.num_vars();
        let total = n_struct + 2 * m;
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); total];
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        for v in lp.vars() {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        let mut b = Vec::with_capacity(m);
        for (i, row) in lp.rows().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
            b.push(row.rhs);
        }
        for (i, row) in lp.rows().iter().enumerate() {
            cols[n_struct + i].push((i, T::one()));
            let (lo, up) = match row.sense {
                RowSense::Le => (T::zero(), T::infinity()),
                RowSense::Ge => (T::neg_infinity(), T::zero()),
                RowSense::Eq => (T::zero(), T::zero()),
            };
            lower.push(lo);
            upper.push(up);
        }
        for i in 0..m {
            cols[n_struct + m + i].push((i, T::one()));
            lower.push(T::zero());
            upper.push(T::zero());
        }
        Self {
            m,
            n_struct,
            cols,
            lower,
            upper,
            cost: vec![T::zero(); total],
            b,
            state: vec![State::Lower; total],
            basis: Vec::new(),
            x: vec![T::zero(); total],
            binv: vec![T::zero(); m * m],
            iterations: 0,
            max_iterations: opts.max_iterations,
            bland_after: opts.bland_after,
            refactor_every: opts.refactor_every.max(1),
            degenerate_run: 0,
            bland: false,
            since_refactor: 0,
        }
    }

    fn art(&self, i: usize) -> usize {
        self.n_struct + self.m + i
    }

    fn place_at_bound(&mut self, j: usize, prefer_upper: bool) {
        let (lo, up) = (self.lower[j], self.upper[j]);
        if (prefer_upper && up.is_finite()) || !lo.is_finite() {
            self.state[j] = State::Upper;
            self.x[j] = up;
        } else {
            self.state[j] = State::Lower;
            self.x[j] = lo;
        }
    }

    fn cold_start(&mut self) {
        let m = self.m;
        for j in 0..self.n_struct {
            self.place_at_bound(j, false);
        }
        let mut residual = self.b.clone();
        for j in 0..self.n_struct {
            let xj = self.x[j];
            if xj != T::zero() {
                for &(r, a) in &self.cols[j] {
                    residual[r] -= a * xj;
                }
            }
        }
        self.basis = Vec::with_capacity(m);
        self.binv = vec![T::zero(); m * m];
        let tol = T::feasibility_tol();
        for (i, &r) in residual.iter().enumerate() {
            let s = self.n_struct + i;
            let a = self.art(i);
            let (lo, up) = (self.lower[s], self.upper[s]);
            if r >= lo - tol && r <= up + tol {
                self.state[s] = State::Basic;
                self.x[s] = r;
                self.basis.push(s);
                self.binv[i * m + i] = T::one();
                self.state[a] = State::Lower;
                self.x[a] = T::zero();
                self.lower[a] = T::zero();
                self.upper[a] = T::zero();
            } else {
                let (bound, st) = if r < lo { (lo, State::Lower) } else { (up, State::Upper) };
                self.state[s] = st;
                self.x[s] = bound;
                let sign = if r > bound { T::one() } else { -T::one() };
                self.cols[a] = vec![(i, sign)];
                self.lower[a] = T::zero();
                self.upper[a] = T::infinity();
                self.state[a] = State::Basic;
                self.x[a] = (r - bound).abs();
                self.basis.push(a);
                self.binv[i * m + i] = sign;
            }
        }
        self.since_refactor = 0;
    }

    fn warm_start(&mut self, basis: &Basis) -> bool {
        let m = self.m;
        if basis.basic.len() != m {
            return false;
        }
        for j in 0..self.n_struct {
            self.place_at_bound(j, false);
        }
        for &j in &basis.at_upper {
            if j < self.n_struct && self.upper[j].is_finite() {
                self.state[j] = State::Upper;
                self.x[j] = self.upper[j];
            }
        }
        for i in 0..m {
            let s = self.n_struct + i;
            self.place_at_bound(s, false);
            let a = self.art(i);
            self.state[a] = State::Lower;
            self.x[a] = T::zero();
        }
        let mut seen = vec![false; self.cols.len()];
        self.basis = Vec::with_capacity(m);
        for bv in &basis.basic {
            let j = match *bv {
                BasisVar::Structural(j) if j < self.n_struct => j,
                BasisVar::Slack(i) if i < m => self.n_struct + i,
                _ => return false,
            };
            if seen[j] {
                return false;
            }
            seen[j] = true;
            self.state[j] = State::Basic;
            self.basis.push(j);
        }
        if !self.refactor() {
            return false;
        }
        let tol = T::feasibility_tol();
        self.basis
            .iter()
            .all(|&j| self.x[j] >= self.lower[j] - tol && self.x[j] <= self.upper[j] + tol)
    }

    fn set_phase1_costs(&mut self) {
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        for i in 0..self.m {
            let a = self.art(i);
            if self.upper[a] > T::zero() {
                self.cost[a] = T::one();
            }
        }
    }

    fn set_phase2_costs(&mut self, lp: &LinearProgram<T>) {
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        for (j, v) in lp.vars().iter().enumerate() {
            self.cost[j] = v.cost;
        }
        self.degenerate_run = 0;
        self.bland = false;
    }

    fn phase1_objective(&self) -> T {
        (0..self.m).fold(T::zero(), |acc, i| acc + self.x[self.art(i)].max(T::zero()))
    }

    /// Fixes artificials at zero and pivots basic ones out where possible.
    fn retire_artificials(&mut self) {
        let m = self.m;
        for i in 0..m {
            let a = self.art(i);
            self.upper[a] = T::zero();
            self.lower[a] = T::zero();
        }
        for r in 0..m {
            let a = self.basis[r];
            if a < self.n_struct + m {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n_struct + m {
                if self.state[j] == State::Basic {
                    continue;
                }
                let v = self.cols[j]
                    .iter()
                    .fold(T::zero(), |acc, &(row, coef)| acc + self.binv[r * m + row] * coef);
                if v.abs() > T::pivot_tol() * T::of(100.0)
                    && best.is_none_or(|(_, bv)| v.abs() > bv.abs())
                {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                self.x[a] = T::zero();
                self.state[a] = State::Lower;
                self.pivot(r, q, &alpha);
            }
        }
        self.refactor();
    }

    fn ftran(&self, q: usize) -> Vec<T> {
        let m = self.m;
        let mut alpha = vec![T::zero(); m];
        for &(r, a) in &self.cols[q] {
            for (i, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[i * m + r] * a;
            }
        }
        alpha
    }

    fn duals(&self) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let c = self.cost[bj];
            if c != T::zero() {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[T]) -> T {
        self.cols[j]
            .iter()
            .fold(self.cost[j], |acc, &(r, a)| acc - y[r] * a)
    }

    fn choose_entering(&self, y: &[T]) -> Option<(usize, T)> {
        let mut best: Option<(usize, T, T)> = None;
        for j in 0..self.cols.len() {
            let st = self.state[j];
            if st == State::Basic || self.upper[j] - self.lower[j] <= T::zero() {
                continue;
            }
            let d = self.reduced_cost(j, y);
            let tol = T::optimality_tol() * (T::one() + self.cost[j].abs());
            let (ok, dir) = match st {
                State::Lower => (d < -tol, T::one()),
                State::Upper => (d > tol, -T::one()),
                State::Basic => (false, T::zero()),
            };
            if !ok {
                continue;
            }
            if self.bland {
                return Some((j, dir));
            }
            let score = d.abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        let m = self.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f == T::zero() {
                continue;
            }
            for k in 0..m {
                let v = self.binv[r * m + k];
                if v != T::zero() {
                    self.binv[i * m + k] -= f * v;
                }
            }
        }
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.since_refactor += 1;
    }

    /// Rebuilds the basis inverse and basic values; false if B is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![T::zero(); m * m];
        for (p, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                a[r * m + p] = v;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let mut piv_row = c;
            let mut piv_val = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < T::of(1e-11) {
                return false;
            }
            if piv_row != c {
                for k in 0..m {
                    a.swap(c * m + k, piv_row * m + k);
                    inv.swap(c * m + k, piv_row * m + k);
                }
            }
            let p = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= p;
                inv[c * m + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..m {
                    let av = a[c * m + k];
                    if av != T::zero() {
                        a[r * m + k] -= f * av;
                    }
                    let iv = inv[c * m + k];
                    if iv != T::zero() {
                        inv[r * m + k] -= f * iv;
                    }
                }
            }
        }
        // Gauss-Jordan on B gives inv = B^{-1} with rows indexed by basis position.
        self.binv = inv;
        let mut rhs = self.b.clone();
        for j in 0..self.cols.len() {
            if self.state[j] != State::Basic {
                let xj = self.x[j];
                if xj != T::zero() {
                    for &(r, v) in &self.cols[j] {
                        rhs[r] -= v * xj;
                    }
                }
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v = row
                .iter()
                .zip(&rhs)
                .fold(T::zero(), |acc, (&bv, &rv)| acc + bv * rv);
            let j = self.basis[p];
            self.x[j] = v;
        }
        self.since_refactor = 0;
        true
    }

    fn run(&mut self) -> Outcome {
        let m = self.m;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            if self.since_refactor >= self.refactor_every && !self.refactor() {
                return Outcome::Singular;
            }
            let y = self.duals();
            let Some((q, dir)) = self.choose_entering(&y) else {
                if self.since_refactor > 0 {
                    if !self.refactor() {
                        return Outcome::Singular;
                    }
                    continue;
                }
                return Outcome::Optimal;
            };
            let alpha = self.ftran(q);
            let ptol = T::pivot_tol();
            let mut best_r: Option<usize> = None;
            let mut best_lim = T::infinity();
            let mut best_rate = T::zero();
            for i in 0..m {
                let rate = -dir * alpha[i];
                if rate.abs() <= ptol {
                    continue;
                }
                let j = self.basis[i];
                let lim = if rate < T::zero() {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    ((self.x[j] - self.lower[j]) / -rate).max(T::zero())
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    ((self.upper[j] - self.x[j]) / rate).max(T::zero())
                };
                let eps = T::of(1e-12) * (T::one() + best_lim.abs().min(T::of(1e12)));
                let better = match best_r {
                    None => true,
                    Some(br) => {
                        if lim < best_lim - eps {
                            true
                        } else if lim <= best_lim + eps {
                            if self.bland {
                                self.basis[i] < self.basis[br]
                            } else {
                                rate.abs() > best_rate.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_r = Some(i);
                    best_lim = lim;
                    best_rate = rate;
                }
            }
            let range = self.upper[q] - self.lower[q];
            let theta = best_lim.min(range);
            if !theta.is_finite() {
                return Outcome::Unbounded;
            }
            self.iterations += 1;
            if theta <= T::of(1e-12) {
                self.degenerate_run += 1;
                if self.degenerate_run > self.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            if theta != T::zero() {
                for i in 0..m {
                    let j = self.basis[i];
                    self.x[j] -= dir * alpha[i] * theta;
                }
                self.x[q] += dir * theta;
            }
            if range <= best_lim {
                if dir > T::zero() {
                    self.state[q] = State::Upper;
                    self.x[q] = self.upper[q];
                } else {
                    self.state[q] = State::Lower;
                    self.x[q] = self.lower[q];
                }
                continue;
            }
            let r = best_r.expect("finite ratio implies a blocking row");
            let leaving = self.basis[r];
            if best_rate < T::zero() {
                self.state[leaving] = State::Lower;
                self.x[leaving] = self.lower[leaving];
            } else {
                self.state[leaving] = State::Upper;
                self.x[leaving] = self.upper[leaving];
            }
            self.pivot(r, q, &alpha);
        }
    }

    fn export_basis(&self) -> Basis {
        let n = self.n_struct;
        let m = self.m;
        let basic = self
            .basis
            .iter()
            .map(|&j| {
                if j < n {
                    BasisVar::Structural(j)
                } else if j < n + m {
                    BasisVar::Slack(j - n)
                } else {
                    BasisVar::Slack(j - n - m)
                }
            })
            .collect();
        let at_upper = (0..n)
            .filter(|&j| self.state[j] == State::Upper && self.lower[j].is_finite())
            .collect();
        Basis { basic, at_upper }
    }

    fn infeasible(&self, lp: &LinearProgram<T>) -> LpSolution<T> {
        LpSolution {
            status: LpStatus::Infeasible,
            objective: T::infinity(),
            x: self.x[..self.n_struct].to_vec(),
            duals: vec![T::zero(); self.m],
            reduced_costs: vec![T::zero(); lp.num_vars()],
            iterations: self.iterations,
            basis: None,
        }
    }

    fn finish(&self, lp: &LinearProgram<T>, outcome: Outcome) -> LpSolution<T> {
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterationLimit | Outcome::Singular => LpStatus::IterationLimit,
        };
        let y = self.duals();
        let x: Vec<T> = self.x[..self.n_struct].to_vec();
        let reduced_costs = (0..self.n_struct).map(|j| self.reduced_cost(j, &y)).collect();
        let objective = match status {
            LpStatus::Unbounded => T::neg_infinity(),
            _ => lp.objective_value(&x),
        };
        LpSolution {
            status,
            objective,
            x,
            duals: y,
            reduced_costs,
            iterations: self.iterations,
            basis: (status == LpStatus::Optimal).then(|| self.export_basis()),
        }
    }
}

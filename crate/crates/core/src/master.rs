//! Restricted master problems over a shared, append-only column pool.
//!
//! The aggregated master (ARMP) holds columns without a skill composition
//! and limits cumulative demand `ξ_{q,k}` by `N_k`; the disaggregated master
//! (DRMP) holds `(r, q, s)` columns and limits `s_{q,k}` by `N^D_k`. Workforce
//! rows exist only for `(k, τ)` pairs that some column occupies.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use bpcs_lp::{solve_lp_with, solve_mip, Basis, BasisVar, Lp, LpError, LpStatus, MipOptions, MipStatus, RowSense, SimplexOptions};
use serde::{Deserialize, Serialize};

use crate::cuts::Cut;
use crate::distributions::Time;
use crate::model::{artificial_column, earliest_singleton, Column, ColumnKey, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MasterKind {
    Aggregated,
    Disaggregated,
}

/// All columns generated so far. Index 0 is the artificial column.
#[derive(Clone, Debug)]
pub struct ColumnPool {
    columns: Vec<Column>,
    index: HashMap<ColumnKey, usize>,
}

impl ColumnPool {
    /// Pool with the artificial column and one earliest singleton per
    /// (task, compatible profile).
    pub fn initial(inst: &Instance) -> Self {
        let mut pool = Self {
            columns: Vec::new(),
            index: HashMap::new(),
        };
        pool.insert(artificial_column(inst));
        for i in 0..inst.num_tasks() {
            for q in 0..inst.num_profiles() {
                if let Some(col) = earliest_singleton(inst, i, q) {
                    pool.insert(col);
                }
            }
        }
        pool
    }

    /// Adds a column unless an identical one exists; returns its index and
    /// whether it is new.
    pub fn insert(&mut self, col: Column) -> (usize, bool) {
        let key = col.key();
        if let Some(&idx) = self.index.get(&key) {
            return (idx, false);
        }
        let idx = self.columns.len();
        self.index.insert(key, idx);
        self.columns.push(col);
        (idx, true)
    }

    /// Adds every composition of each aggregated column.
    pub fn expand_compositions(&mut self, inst: &Instance) -> Vec<usize> {
        let mut added = Vec::new();
        for idx in 0..self.columns.len() {
            let col = &self.columns[idx];
            if col.artificial || col.composition.is_some() {
                continue;
            }
            let variants: Vec<Column> = (0..inst.compositions(col.profile).len()).map(|s| col.with_composition(s)).collect();
            for v in variants {
                let (j, new) = self.insert(v);
                if new {
                    added.push(j);
                }
            }
        }
        added
    }

    pub fn get(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn find(&self, key: &ColumnKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Column)> {
        self.columns.iter().enumerate()
    }

    /// Whether a column belongs in a master of the given kind.
    pub fn fits(col: &Column, kind: MasterKind) -> bool {
        col.artificial
            || match kind {
                MasterKind::Aggregated => col.composition.is_none(),
                MasterKind::Disaggregated => col.composition.is_some(),
            }
    }
}

/// Tour-count branching row `sum_{tl <= τ* <= tr} λ <= bound` (or `>=`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourCountBound {
    pub tau: Time,
    pub upper: bool,
    pub bound: f64,
}

/// Branching decisions of a tree node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeRules {
    /// Allowed inclusive range of a task's ω_γ-scenario finish time.
    pub finish_windows: BTreeMap<usize, (Time, Time)>,
    pub tour_counts: Vec<TourCountBound>,
    /// Columns fixed to one. A key without composition matches all compositions.
    pub forced: Vec<ColumnKey>,
    /// Columns fixed to zero, matched like `forced`.
    pub forbidden: Vec<ColumnKey>,
}

/// Whether `col` is `key`, reading a missing composition in `key` as a wildcard.
pub fn key_matches(key: &ColumnKey, col: &Column) -> bool {
    !col.artificial
        && key.tasks == col.tasks
        && key.profile == col.profile
        && key.tl == col.tl
        && (key.composition.is_none() || key.composition == col.composition)
}

impl NodeRules {
    pub fn forced_tasks(&self) -> BTreeSet<usize> {
        self.forced.iter().flat_map(|k| k.tasks.iter().copied()).collect()
    }

    /// Finish window of a task, or everything.
    pub fn window(&self, task: usize) -> (Time, Time) {
        self.finish_windows.get(&task).copied().unwrap_or((Time::MIN, Time::MAX))
    }

    pub fn allows(&self, col: &Column) -> bool {
        if col.artificial {
            return true;
        }
        if self.forbidden.iter().any(|k| key_matches(k, col)) {
            return false;
        }
        for (pos, &i) in col.tasks.iter().enumerate() {
            let (lo, hi) = self.window(i);
            let f = col.gamma_finishes[pos];
            if f < lo || f > hi {
                return false;
            }
        }
        if self.forced.iter().any(|k| key_matches(k, col)) {
            return true;
        }
        let forced = self.forced_tasks();
        !col.tasks.iter().any(|i| forced.contains(i))
    }

    /// Restricts the finish window of `task` to `[lo, hi]` within the current one.
    pub fn restrict_window(&mut self, task: usize, lo: Time, hi: Time) {
        let (a, b) = self.window(task);
        self.finish_windows.insert(task, (a.max(lo), b.min(hi)));
    }
}

/// Dual values in the sign conventions the pricing expects.
#[derive(Clone, Debug, PartialEq)]
pub struct Duals {
    /// `μ_i >= 0` of the covering rows.
    pub cover: Vec<f64>,
    /// `δ_{k,τ} <= 0`, indexed `[k][τ]`; zero where no row exists.
    pub workforce: Vec<Vec<f64>>,
    /// `ψ_g >= 0` of the cut rows.
    pub cuts: Vec<f64>,
    /// `(τ*, ρ)` of tour-count rows; `ρ <= 0` for `<=` rows, `>= 0` for `>=` rows.
    pub tours: Vec<(Time, f64)>,
    /// Extra reduced cost charged to a column equal to the key.
    pub special: Vec<(ColumnKey, f64)>,
}

impl Duals {
    pub fn zero(inst: &Instance) -> Self {
        Self {
            cover: vec![0.0; inst.num_tasks()],
            workforce: vec![vec![0.0; inst.time_horizon() as usize + 1]; inst.levels()],
            cuts: Vec::new(),
            tours: Vec::new(),
            special: Vec::new(),
        }
    }

    pub fn delta(&self, k: usize, tau: Time) -> f64 {
        if tau < 0 {
            return 0.0;
        }
        self.workforce[k].get(tau as usize).copied().unwrap_or(0.0)
    }

    /// `-sum δ_{k,τ} d_k` over `τ` in `[from, to]` for per-level demand `d`.
    pub fn workforce_charge(&self, demand: &[u32], from: Time, to: Time) -> f64 {
        let mut s = 0.0;
        for (k, &d) in demand.iter().enumerate() {
            if d == 0 {
                continue;
            }
            for tau in from.max(0)..=to {
                s -= self.delta(k, tau) * d as f64;
            }
        }
        s
    }
}

/// Row families of the master, in creation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowRef {
    Cover(usize),
    Workforce(usize, Time),
    Cut(usize),
    Tour(usize),
    Forced(usize),
    NoGood(usize),
}

#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub objective: f64,
    /// Pool index and value of every column with a nonzero value.
    pub values: Vec<(usize, f64)>,
    pub duals: Duals,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct IntegerSolution {
    pub objective: f64,
    pub columns: Vec<usize>,
    pub optimal: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum MasterError {
    #[error("linear program rejected: {0}")]
    Lp(#[from] LpError),
    #[error("master LP ended with status {0:?}")]
    Status(LpStatus),
}

/// Node-local restricted master LP.
#[derive(Clone, Debug)]
pub struct RestrictedMaster {
    kind: MasterKind,
    lp: Lp,
    rows: Vec<RowRef>,
    row_of: HashMap<RowRef, usize>,
    vars: Vec<usize>,
    var_of: HashMap<usize, usize>,
    rules: NodeRules,
    cuts: Vec<Cut>,
    no_goods: Vec<Vec<ColumnKey>>,
    basis: Option<Basis>,
    levels: Vec<u32>,
    horizon: usize,
}

impl RestrictedMaster {
    pub fn new(
        inst: &Instance,
        kind: MasterKind,
        pool: &ColumnPool,
        rules: &NodeRules,
        cuts: &[Cut],
        no_goods: &[Vec<ColumnKey>],
    ) -> Self {
        let levels = (0..inst.levels())
            .map(|k| match kind {
                MasterKind::Aggregated => inst.workforce.cumulative(k),
                MasterKind::Disaggregated => inst.workforce.per_level[k],
            })
            .collect();
        let mut m = Self {
            kind,
            lp: Lp::new(),
            rows: Vec::new(),
            row_of: HashMap::new(),
            vars: Vec::new(),
            var_of: HashMap::new(),
            rules: rules.clone(),
            cuts: Vec::new(),
            no_goods: no_goods.to_vec(),
            basis: None,
            levels,
            horizon: inst.time_horizon() as usize + 1,
        };
        for i in 0..inst.num_tasks() {
            m.push_row(RowRef::Cover(i), RowSense::Ge, 1.0);
        }
        for (t, tc) in rules.tour_counts.iter().enumerate() {
            let sense = if tc.upper { RowSense::Le } else { RowSense::Ge };
            m.push_row(RowRef::Tour(t), sense, tc.bound);
        }
        for f in 0..rules.forced.len() {
            m.push_row(RowRef::Forced(f), RowSense::Ge, 1.0);
        }
        for (n, set) in no_goods.iter().enumerate() {
            m.push_row(RowRef::NoGood(n), RowSense::Le, set.len() as f64 - 1.0);
        }
        for (idx, col) in pool.iter() {
            if ColumnPool::fits(col, kind) {
                m.add_column(inst, pool, idx);
            }
        }
        for cut in cuts {
            m.add_cut(inst, pool, cut.clone());
        }
        m
    }

    pub fn kind(&self) -> MasterKind {
        self.kind
    }

    pub fn rules(&self) -> &NodeRules {
        &self.rules
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn lp(&self) -> &Lp {
        &self.lp
    }

    pub fn num_columns(&self) -> usize {
        self.vars.len()
    }

    /// Pool indices of the columns in this master, in variable order.
    pub fn columns(&self) -> &[usize] {
        &self.vars
    }

    pub fn contains(&self, pool_idx: usize) -> bool {
        self.var_of.contains_key(&pool_idx)
    }

    fn push_row(&mut self, r: RowRef, sense: RowSense, rhs: f64) -> usize {
        let idx = self.lp.add_row(std::iter::empty(), sense, rhs);
        self.rows.push(r);
        self.row_of.insert(r, idx);
        if let Some(b) = &mut self.basis {
            b.basic.push(BasisVar::Slack(idx));
        }
        idx
    }

    /// Master coefficients of a column, including workforce rows that may
    /// not exist yet.
    pub fn entries(&self, inst: &Instance, col: &Column) -> Vec<(RowRef, f64)> {
        let mut out = Vec::new();
        for &i in &col.tasks {
            out.push((RowRef::Cover(i), 1.0));
        }
        if !col.artificial {
            for k in 0..inst.levels() {
                let d = col.level_demand(inst, k);
                if d == 0 {
                    continue;
                }
                for tau in col.tl..=col.tr {
                    out.push((RowRef::Workforce(k, tau), d as f64));
                }
            }
        }
        for (t, tc) in self.rules.tour_counts.iter().enumerate() {
            if col.artificial {
                if !tc.upper {
                    out.push((RowRef::Tour(t), tc.bound.max(0.0)));
                }
            } else if col.tl <= tc.tau && tc.tau <= col.tr {
                out.push((RowRef::Tour(t), 1.0));
            }
        }
        for (f, key) in self.rules.forced.iter().enumerate() {
            if col.artificial || key_matches(key, col) {
                out.push((RowRef::Forced(f), 1.0));
            }
        }
        for (n, set) in self.no_goods.iter().enumerate() {
            if set.iter().any(|k| key_matches(k, col)) {
                out.push((RowRef::NoGood(n), 1.0));
            }
        }
        for (g, cut) in self.cuts.iter().enumerate() {
            let c = cut.coefficient(inst, col);
            if c != 0.0 {
                out.push((RowRef::Cut(g), c));
            }
        }
        out
    }

    /// Adds a pool column as a new variable (no-op if present). Columns the
    /// node rules exclude get an upper bound of zero.
    pub fn add_column(&mut self, inst: &Instance, pool: &ColumnPool, idx: usize) -> bool {
        if self.var_of.contains_key(&idx) {
            return false;
        }
        let col = pool.get(idx);
        debug_assert!(ColumnPool::fits(col, self.kind));
        let entries = self.entries(inst, col);
        let mut coeffs = Vec::with_capacity(entries.len());
        for (r, a) in entries {
            let row = match self.row_of.get(&r) {
                Some(&row) => row,
                None => match r {
                    RowRef::Workforce(k, _) => {
                        let n = self.levels[k] as f64;
                        self.push_row(r, RowSense::Le, n)
                    }
                    _ => unreachable!("non-workforce rows are created up front"),
                },
            };
            coeffs.push((row, a));
        }
        let ub = if self.rules.allows(col) { f64::INFINITY } else { 0.0 };
        let var = self.lp.add_var(0.0, ub, col.cost);
        for (row, a) in coeffs {
            self.lp.add_coeff(row, var, a);
        }
        self.vars.push(idx);
        self.var_of.insert(idx, var);
        true
    }

    /// Adds a cut row over all current columns.
    pub fn add_cut(&mut self, inst: &Instance, pool: &ColumnPool, cut: Cut) {
        let g = self.cuts.len();
        let coeffs: Vec<(usize, f64)> = self
            .vars
            .iter()
            .enumerate()
            .filter_map(|(v, &idx)| {
                let c = cut.coefficient(inst, pool.get(idx));
                (c != 0.0).then_some((v, c))
            })
            .collect();
        let row = self.push_row(RowRef::Cut(g), RowSense::Le, cut.rhs);
        for (v, c) in coeffs {
            self.lp.add_coeff(row, v, c);
        }
        self.cuts.push(cut);
    }

    pub fn solve(&mut self, inst: &Instance) -> Result<MasterSolution, MasterError> {
        let opts = SimplexOptions::default();
        let sol = solve_lp_with(&self.lp, &opts, self.basis.as_ref())?;
        if sol.status != LpStatus::Optimal {
            return Err(MasterError::Status(sol.status));
        }
        self.basis = sol.basis.clone();
        let values = self
            .vars
            .iter()
            .enumerate()
            .filter(|(v, _)| sol.x[*v].abs() > 1e-9)
            .map(|(v, &idx)| (idx, sol.x[v]))
            .collect();
        Ok(MasterSolution {
            objective: sol.objective,
            values,
            duals: self.duals(inst, &sol.duals),
            iterations: sol.iterations,
        })
    }

    fn duals(&self, inst: &Instance, y: &[f64]) -> Duals {
        let mut d = Duals {
            cover: vec![0.0; inst.num_tasks()],
            workforce: vec![vec![0.0; self.horizon]; inst.levels()],
            cuts: vec![0.0; self.cuts.len()],
            tours: self.rules.tour_counts.iter().map(|t| (t.tau, 0.0)).collect(),
            special: Vec::new(),
        };
        for (row, r) in self.rows.iter().enumerate() {
            let v = y[row];
            match *r {
                RowRef::Cover(i) => d.cover[i] = v,
                RowRef::Workforce(k, tau) => d.workforce[k][tau as usize] = v,
                RowRef::Cut(g) => d.cuts[g] = -v,
                RowRef::Tour(t) => d.tours[t].1 = v,
                RowRef::Forced(_) => {}
                RowRef::NoGood(n) => {
                    if v != 0.0 {
                        for key in &self.no_goods[n] {
                            d.special.push((key.clone(), -v));
                        }
                    }
                }
            }
        }
        d
    }

    /// `c - y'a` of an arbitrary column under the last solution's duals.
    pub fn reduced_cost(&self, inst: &Instance, col: &Column, duals: &Duals) -> f64 {
        let mut rc = col.cost;
        for (r, a) in self.entries(inst, col) {
            let y = match r {
                RowRef::Cover(i) => duals.cover[i],
                RowRef::Workforce(k, tau) => duals.delta(k, tau),
                RowRef::Cut(g) => -duals.cuts[g],
                RowRef::Tour(t) => duals.tours[t].1,
                RowRef::Forced(_) => 0.0,
                RowRef::NoGood(_) => 0.0,
            };
            rc -= y * a;
        }
        for (key, pen) in &duals.special {
            if key_matches(key, col) {
                rc += pen;
            }
        }
        rc
    }

    /// Solves the master with integer variables over its current columns.
    pub fn solve_integer(&self, opts: &MipOptions) -> Result<Option<IntegerSolution>, MasterError> {
        let mut mip = self.lp.clone();
        for v in 0..mip.num_vars() {
            mip.set_integer(v, true);
        }
        let sol = solve_mip(&mip, opts, None)?;
        let (Some(x), Some(obj)) = (sol.x, sol.objective) else {
            return Ok(None);
        };
        let mut columns = Vec::new();
        for (v, &idx) in self.vars.iter().enumerate() {
            let n = x[v].round() as usize;
            for _ in 0..n {
                columns.push(idx);
            }
        }
        Ok(Some(IntegerSolution {
            objective: obj,
            columns,
            optimal: sol.status == MipStatus::Optimal,
        }))
    }
}

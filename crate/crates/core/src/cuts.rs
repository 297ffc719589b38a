//! Rank-1 Chvátal–Gomory cuts over the aggregated master rows.
//!
//! A cut is stored by its multipliers. Task rows are read as `sum λ <= 1`
//! and workforce rows as `sum b λ <= N_k`, so for every column the cut
//! coefficient is `floor(sum_{i in r} u_i + sum_{k,τ in [tl,tr]} ξ_{q,k} u_{k,τ})`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use bpcs_lp::{solve_mip, Lp, MipOptions, RowSense};

use crate::distributions::Time;
use crate::model::{Column, ColumnKey, Instance};

/// Multipliers are multiples of this step.
pub const MULTIPLIER_DENOM: i64 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    /// `u_i` per task; all zero when covering rows are left out of separation.
    pub task_u: Vec<f64>,
    /// `u_{k,τ}` for the workforce rows that entered separation.
    pub workforce_u: BTreeMap<(usize, Time), f64>,
    pub rhs: f64,
}

impl Cut {
    /// `floor` of the weighted row sum for this column. Workforce terms use
    /// the cumulative requirement `ξ` for both master kinds.
    pub fn coefficient(&self, inst: &Instance, col: &Column) -> f64 {
        (self.fractional_sum(inst, col) + 1e-9).floor()
    }

    pub fn fractional_sum(&self, inst: &Instance, col: &Column) -> f64 {
        let mut s: f64 = col.tasks.iter().map(|&i| self.task_u[i]).sum();
        if !col.artificial {
            let xi = &inst.profiles[col.profile].xi;
            for (&(k, tau), &u) in &self.workforce_u {
                if col.tl <= tau && tau <= col.tr {
                    s += xi[k] as f64 * u;
                }
            }
        }
        s
    }

    /// Workforce multiplier at `(k, τ)`, zero when absent.
    pub fn workforce_multiplier(&self, k: usize, tau: Time) -> f64 {
        self.workforce_u.get(&(k, tau)).copied().unwrap_or(0.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.task_u.iter().all(|&u| u == 0.0) && self.workforce_u.values().all(|&u| u == 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct SeparationOptions {
    /// Include covering rows, read as `sum λ <= 1`. Only valid when
    /// dropping a task from a route never makes it worse.
    pub cover_rows: bool,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub min_violation: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self {
            cover_rows: true,
            node_limit: 500,
            time_limit: Some(Duration::from_millis(300)),
            min_violation: 1e-6,
        }
    }
}

/// Whether covering rows may enter separation: removing a task from a route
/// then leaves every other finish stochastically no later and the occupancy
/// no longer.
pub fn shortcut_safe(inst: &Instance) -> bool {
    inst.travel().reset_safe() && inst.travel().bins_monotone()
}

/// Merges columns that differ only in their composition.
pub fn aggregate_support<'a>(cols: impl IntoIterator<Item = (&'a Column, f64)>) -> Vec<(Column, f64)> {
    let mut order: Vec<ColumnKey> = Vec::new();
    let mut merged: HashMap<ColumnKey, (Column, f64)> = HashMap::new();
    for (col, v) in cols {
        let agg = col.aggregated();
        let key = agg.key();
        match merged.get_mut(&key) {
            Some(e) => e.1 += v,
            None => {
                order.push(key.clone());
                merged.insert(key, (agg, v));
            }
        }
    }
    order.into_iter().map(|k| merged.remove(&k).expect("key recorded")).collect()
}

/// Violation `sum coef λ - rhs` of a cut at an aggregated point.
pub fn violation(inst: &Instance, cut: &Cut, support: &[(Column, f64)]) -> f64 {
    support.iter().map(|(c, v)| cut.coefficient(inst, c) * v).sum::<f64>() - cut.rhs
}

/// Searches for a rank-1 cut violated by the aggregated point `support`.
///
/// Multipliers `u = n / 64` with `n` in `0..64`. The separation problem
/// maximises `sum_j α_j λ_j - α_0` with `α_j <= u'A_j` and
/// `α_0 >= u'b - 63/64`, all `α` integer, so `α` are the rounded-down
/// weighted sums at the optimum.
pub fn separate(inst: &Instance, support: &[(Column, f64)], opts: &SeparationOptions) -> Option<Cut> {
    let support: Vec<&(Column, f64)> = support.iter().filter(|(_, v)| *v > 1e-9).collect();
    if support.is_empty() {
        return None;
    }
    let denom = MULTIPLIER_DENOM as f64;
    let mut lp = Lp::new();
    // Rows of the aggregated master touched by the support.
    let mut tasks = BTreeSet::new();
    let mut slots = BTreeSet::new();
    for (c, _) in &support {
        if opts.cover_rows {
            tasks.extend(c.tasks.iter().copied());
        }
        if !c.artificial {
            let xi = &inst.profiles[c.profile].xi;
            for (k, &x) in xi.iter().enumerate() {
                if x > 0 {
                    slots.extend((c.tl..=c.tr).map(|tau| (k, tau)));
                }
            }
        }
    }
    let tasks: Vec<usize> = tasks.into_iter().collect();
    let slots: Vec<(usize, Time)> = slots.into_iter().collect();
    if tasks.is_empty() && slots.is_empty() {
        return None;
    }
    let penalty = 1e-5 / denom;
    let task_var: HashMap<usize, usize> = tasks
        .iter()
        .map(|&i| (i, lp.add_int_var(0.0, denom - 1.0, penalty)))
        .collect();
    let slot_var: HashMap<(usize, Time), usize> = slots
        .iter()
        .map(|&s| (s, lp.add_int_var(0.0, denom - 1.0, penalty)))
        .collect();
    let alpha0 = lp.add_int_var(0.0, f64::INFINITY, 1.0);
    let mut rhs_row = Vec::new();
    for &i in &tasks {
        rhs_row.push((task_var[&i], 1.0 / denom));
    }
    for &(k, tau) in &slots {
        rhs_row.push((slot_var[&(k, tau)], inst.workforce.cumulative(k) as f64 / denom));
    }
    rhs_row.push((alpha0, -1.0));
    lp.add_row(rhs_row, RowSense::Le, (denom - 1.0) / denom);
    for (c, v) in &support {
        let mut row = Vec::new();
        let mut cap = 0.0;
        for i in &c.tasks {
            if let Some(&var) = task_var.get(i) {
                row.push((var, -1.0 / denom));
                cap += (denom - 1.0) / denom;
            }
        }
        if !c.artificial {
            let xi = &inst.profiles[c.profile].xi;
            for (k, &x) in xi.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for tau in c.tl..=c.tr {
                    row.push((slot_var[&(k, tau)], -(x as f64) / denom));
                    cap += x as f64 * (denom - 1.0) / denom;
                }
            }
        }
        let alpha = lp.add_int_var(0.0, cap.floor(), -v);
        row.push((alpha, 1.0));
        lp.add_row(row, RowSense::Le, 0.0);
    }
    let mip = MipOptions {
        time_limit: opts.time_limit,
        node_limit: opts.node_limit,
        ..MipOptions::default()
    };
    let sol = solve_mip(&lp, &mip, None).ok()?;
    let x = sol.x?;
    let mut task_u = vec![0.0; inst.num_tasks()];
    for (&i, &var) in &task_var {
        task_u[i] = x[var].round() / denom;
    }
    let mut workforce_u = BTreeMap::new();
    for (&s, &var) in &slot_var {
        let n = x[var].round();
        if n > 0.0 {
            workforce_u.insert(s, n / denom);
        }
    }
    let mut cut = Cut {
        task_u,
        workforce_u,
        rhs: 0.0,
    };
    cut.rhs = cut_rhs(inst, &cut);
    let owned: Vec<(Column, f64)> = support.iter().map(|(c, v)| (c.clone(), *v)).collect();
    (!cut.is_trivial() && violation(inst, &cut, &owned) >= opts.min_violation).then_some(cut)
}

/// `floor(sum_i u_i + sum_{k,τ} N_k u_{k,τ})` over all covering rows.
pub fn cut_rhs(inst: &Instance, cut: &Cut) -> f64 {
    let s: f64 = cut.task_u.iter().sum::<f64>()
        + cut
            .workforce_u
            .iter()
            .map(|(&(k, _), &u)| inst.workforce.cumulative(k) as f64 * u)
            .sum::<f64>();
    (s + 1e-9).floor()
}

#[cfg(test)]
mod tests;

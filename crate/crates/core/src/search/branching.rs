//! The three branching rules, tried in order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distributions::Time;
use crate::master::{ColumnPool, NodeRules, TourCountBound};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchRule {
    FinishTime,
    TourCount,
    Variable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branching {
    pub rule: BranchRule,
    pub left: NodeRules,
    pub right: NodeRules,
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

fn is_fractional(v: f64, tol: f64) -> bool {
    let f = frac(v);
    f > tol && f < 1.0 - tol
}

/// Median of a non-empty sorted slice; the mean of the middle pair for even
/// lengths.
fn median(sorted: &[Time]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

fn std_dev(values: &[Time]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    (values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Branch on a task's ω_γ finish: among tasks with the most distinct
/// finishes over fractional columns, the one with the largest spread.
/// Returns the task and `τ*`, or `None` when every task has one finish.
pub fn finish_time_candidate(pool: &ColumnPool, values: &[(usize, f64)], tol: f64) -> Option<(usize, Time)> {
    let mut finishes: BTreeMap<usize, Vec<Time>> = BTreeMap::new();
    for &(idx, v) in values {
        let col = pool.get(idx);
        if col.artificial || !is_fractional(v, tol) {
            continue;
        }
        for (pos, &i) in col.tasks.iter().enumerate() {
            finishes.entry(i).or_default().push(col.gamma_finishes[pos]);
        }
    }
    let distinct = |f: &Vec<Time>| {
        let mut d = f.clone();
        d.sort_unstable();
        d.dedup();
        d
    };
    let widest = finishes.values().map(|f| distinct(f).len()).max()?;
    if widest < 2 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (&i, f) in &finishes {
        if distinct(f).len() != widest {
            continue;
        }
        let s = std_dev(f);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (task, _) = best?;
    let mut f = finishes[&task].clone();
    f.sort_unstable();
    // Keep both children non-trivial: τ* below the largest finish.
    let tau = (median(&f).floor() as Time).min(f[f.len() - 1] - 1);
    Some((task, tau))
}

/// Branch on the number of tours active at `τ*`, the time whose tour count
/// has fractional part closest to 0.5.
pub fn tour_count_candidate(pool: &ColumnPool, values: &[(usize, f64)], tol: f64) -> Option<(Time, f64)> {
    let mut load: BTreeMap<Time, f64> = BTreeMap::new();
    for &(idx, v) in values {
        let col = pool.get(idx);
        if col.artificial {
            continue;
        }
        for tau in col.tl..=col.tr {
            *load.entry(tau).or_default() += v;
        }
    }
    let mut best: Option<(Time, f64, f64)> = None;
    for (&tau, &l) in &load {
        if !is_fractional(l, tol) {
            continue;
        }
        let dist = (frac(l) - 0.5).abs();
        if best.is_none_or(|(_, _, b)| dist < b - 1e-12) {
            best = Some((tau, l, dist));
        }
    }
    best.map(|(tau, l, _)| (tau, l))
}

/// The most fractional non-artificial column.
pub fn variable_candidate(pool: &ColumnPool, values: &[(usize, f64)], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(idx, v) in values {
        if pool.get(idx).artificial || !is_fractional(v, tol) {
            continue;
        }
        let dist = (frac(v) - 0.5).abs();
        if best.is_none_or(|(b, d)| dist < d - 1e-12 || (dist <= d + 1e-12 && idx < b)) {
            best = Some((idx, dist));
        }
    }
    best.map(|(idx, _)| idx)
}

/// Applies the first rule that yields a non-trivial split.
pub fn branch(pool: &ColumnPool, rules: &NodeRules, values: &[(usize, f64)], finish_rule: bool, tol: f64) -> Option<Branching> {
    if finish_rule {
        if let Some((task, tau)) = finish_time_candidate(pool, values, tol) {
            let mut left = rules.clone();
            left.restrict_window(task, Time::MIN, tau);
            let mut right = rules.clone();
            right.restrict_window(task, tau + 1, Time::MAX);
            return Some(Branching {
                rule: BranchRule::FinishTime,
                left,
                right,
            });
        }
    }
    if let Some((tau, l)) = tour_count_candidate(pool, values, tol) {
        let mut left = rules.clone();
        left.tour_counts.push(TourCountBound {
            tau,
            upper: true,
            bound: l.floor(),
        });
        let mut right = rules.clone();
        right.tour_counts.push(TourCountBound {
            tau,
            upper: false,
            bound: l.ceil(),
        });
        return Some(Branching {
            rule: BranchRule::TourCount,
            left,
            right,
        });
    }
    let idx = variable_candidate(pool, values, tol)?;
    let key = pool.get(idx).key();
    let mut left = rules.clone();
    left.forbidden.push(key.clone());
    let mut right = rules.clone();
    right.forced.push(key);
    Some(Branching {
        rule: BranchRule::Variable,
        left,
        right,
    })
}

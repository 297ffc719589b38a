//! Whether selected team routes can be staffed by individual workers who
//! stay with a tour from leave to return, and the worker flows that do it.
//!
//! A tour `ρ` precedes `r` when `tr_ρ < tl_r`; the master counts both end
//! points as occupied, so equal times overlap.

use std::collections::BTreeMap;

use bpcs_lp::{solve_mip, Lp, LpError, MipOptions, MipStatus, RowSense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Time;
use crate::model::{Column, Instance, SkillComposition};

/// A selected tour reduced to what staffing needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRoute {
    pub tl: Time,
    pub tr: Time,
    /// Cumulative requirement per level.
    pub xi: Vec<u32>,
    /// Exact composition, for routes of the disaggregated master.
    pub exact: Option<Vec<u32>>,
}

impl FlowRoute {
    pub fn from_column(inst: &Instance, col: &Column) -> Self {
        Self {
            tl: col.tl,
            tr: col.tr,
            xi: inst.profiles[col.profile].xi.clone(),
            exact: col.composition.map(|s| inst.compositions(col.profile)[s].0.clone()),
        }
    }
}

/// Worker flows per level: depot to tour, tour to tour, tour to depot, and
/// workers that stay home.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerFlows {
    pub from_depot: Vec<Vec<u32>>,
    pub to_depot: Vec<Vec<u32>>,
    /// `(from, to) -> per-level count`, only non-zero entries.
    pub between: BTreeMap<(usize, usize), Vec<u32>>,
    pub idle: Vec<u32>,
}

impl WorkerFlows {
    fn zero(routes: usize, levels: usize) -> Self {
        Self {
            from_depot: vec![vec![0; levels]; routes],
            to_depot: vec![vec![0; levels]; routes],
            between: BTreeMap::new(),
            idle: vec![0; levels],
        }
    }

    /// Workers of each level entering tour `r`.
    pub fn inflow(&self, r: usize) -> Vec<u32> {
        let mut f = self.from_depot[r].clone();
        for (&(_, to), x) in &self.between {
            if to == r {
                for (a, b) in f.iter_mut().zip(x) {
                    *a += b;
                }
            }
        }
        f
    }

    /// Workers of each level leaving tour `r` for another tour.
    pub fn onward(&self, r: usize) -> Vec<u32> {
        let levels = self.idle.len();
        let mut f = vec![0; levels];
        for (&(from, _), x) in &self.between {
            if from == r {
                for (a, b) in f.iter_mut().zip(x) {
                    *a += b;
                }
            }
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Additional workers needed; zero iff feasible.
    pub slack: u32,
    pub flows: WorkerFlows,
    /// Whether the minimum was proven.
    pub optimal: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasError {
    #[error("staffing model: {0}")]
    Lp(#[from] LpError),
    #[error("staffing model found no solution")]
    NoSolution,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowViolation {
    #[error("tour {route} level {level}: {have} qualified workers, {need} required")]
    Requirement { route: usize, level: usize, have: u32, need: u32 },
    #[error("tour {route} level {level}: inflow differs from outflow")]
    Conservation { route: usize, level: usize },
    #[error("level {0}: depot balance broken")]
    Depot(usize),
    #[error("flow from {0} to {1} does not respect the tour order")]
    Order(usize, usize),
    #[error("tour {route} level {level}: does not match its composition")]
    Composition { route: usize, level: usize },
}

/// `ρ` can hand its workers over to `r`.
pub fn precedes(a: &FlowRoute, b: &FlowRoute) -> bool {
    a.tr < b.tl
}

/// Minimum number of extra workers needed to staff `routes` with
/// `per_level` workers of each exact level.
pub fn feasibility_check(routes: &[FlowRoute], per_level: &[u32], opts: &MipOptions) -> Result<FeasibilityResult, FeasError> {
    let levels = per_level.len();
    let n = routes.len();
    let mut lp = Lp::new();
    let from_depot: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..levels).map(|_| lp.add_int_var(0.0, f64::INFINITY, 0.0)).collect())
        .collect();
    let to_depot: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..levels).map(|_| lp.add_int_var(0.0, f64::INFINITY, 0.0)).collect())
        .collect();
    let slack: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..levels).map(|_| lp.add_int_var(0.0, f64::INFINITY, 1.0)).collect())
        .collect();
    let idle: Vec<usize> = (0..levels).map(|_| lp.add_int_var(0.0, f64::INFINITY, 0.0)).collect();
    let mut between: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && precedes(&routes[a], &routes[b]) {
                between.insert((a, b), (0..levels).map(|_| lp.add_int_var(0.0, f64::INFINITY, 0.0)).collect());
            }
        }
    }
    for r in 0..n {
        let preds: Vec<&Vec<usize>> = between.iter().filter(|((_, b), _)| *b == r).map(|(_, v)| v).collect();
        let succs: Vec<&Vec<usize>> = between.iter().filter(|((a, _), _)| *a == r).map(|(_, v)| v).collect();
        for k in 0..levels {
            // Qualified workers: every level from k up.
            let mut row: Vec<(usize, f64)> = (k..levels).map(|c| (from_depot[r][c], 1.0)).collect();
            for p in &preds {
                row.extend((k..levels).map(|c| (p[c], 1.0)));
            }
            row.push((slack[r][k], 1.0));
            lp.add_row(row, RowSense::Ge, routes[r].xi[k] as f64);
            let mut flow = vec![(from_depot[r][k], 1.0), (to_depot[r][k], -1.0)];
            flow.extend(preds.iter().map(|p| (p[k], 1.0)));
            flow.extend(succs.iter().map(|s| (s[k], -1.0)));
            lp.add_row(flow, RowSense::Eq, 0.0);
        }
    }
    for k in 0..levels {
        let mut leave = vec![(idle[k], 1.0)];
        leave.extend((0..n).map(|r| (from_depot[r][k], 1.0)));
        lp.add_row(leave, RowSense::Eq, per_level[k] as f64);
        let mut back = vec![(idle[k], 1.0)];
        back.extend((0..n).map(|r| (to_depot[r][k], 1.0)));
        lp.add_row(back, RowSense::Eq, per_level[k] as f64);
    }
    let sol = solve_mip(&lp, opts, None)?;
    let x = sol.x.ok_or(FeasError::NoSolution)?;
    let v = |j: usize| x[j].round().max(0.0) as u32;
    let mut flows = WorkerFlows::zero(n, levels);
    for r in 0..n {
        for k in 0..levels {
            flows.from_depot[r][k] = v(from_depot[r][k]);
            flows.to_depot[r][k] = v(to_depot[r][k]);
        }
    }
    for k in 0..levels {
        flows.idle[k] = v(idle[k]);
    }
    for (&key, vars) in &between {
        let counts: Vec<u32> = vars.iter().map(|&j| v(j)).collect();
        if counts.iter().any(|&c| c > 0) {
            flows.between.insert(key, counts);
        }
    }
    let total: u32 = slack.iter().flatten().map(|&j| v(j)).sum();
    Ok(FeasibilityResult {
        feasible: total == 0,
        slack: total,
        flows,
        optimal: sol.status == MipStatus::Optimal,
    })
}

/// Worker flows for routes with exact compositions, built greedily in
/// leave-time order: a tour first takes workers released by its
/// predecessors (earliest leave first), then fresh ones from the depot.
/// Needs a solution whose per-level occupancy never exceeds `per_level`.
pub fn construct_flows(routes: &[FlowRoute], per_level: &[u32]) -> WorkerFlows {
    let levels = per_level.len();
    let n = routes.len();
    let need = |r: usize| -> Vec<u32> { routes[r].exact.clone().unwrap_or_else(|| routes[r].xi.clone()) };
    let preds: Vec<Vec<usize>> = (0..n)
        .map(|r| {
            let mut p: Vec<usize> = (0..n).filter(|&a| a != r && precedes(&routes[a], &routes[r])).collect();
            p.sort_by_key(|&a| (routes[a].tl, a));
            p
        })
        .collect();
    let mut flows = WorkerFlows::zero(n, levels);
    for r in (0..n).filter(|&r| preds[r].is_empty()) {
        flows.from_depot[r] = need(r);
    }
    let mut rest: Vec<usize> = (0..n).filter(|&r| !preds[r].is_empty()).collect();
    rest.sort_by_key(|&r| (routes[r].tl, r));
    let mut used_depot: Vec<u32> = (0..levels).map(|k| flows.from_depot.iter().map(|f| f[k]).sum()).collect();
    for r in rest {
        let s = need(r);
        for k in 0..levels {
            let mut got = 0;
            for &p in &preds[r] {
                if got == s[k] {
                    break;
                }
                let free = flows.inflow(p)[k] - flows.onward(p)[k];
                let take = (s[k] - got).min(free);
                if take > 0 {
                    flows.between.entry((p, r)).or_insert_with(|| vec![0; levels])[k] += take;
                    got += take;
                }
            }
            if got < s[k] {
                let take = (s[k] - got).min(per_level[k].saturating_sub(used_depot[k]));
                flows.from_depot[r][k] = take;
                used_depot[k] += take;
            }
        }
    }
    for r in 0..n {
        let inflow = flows.inflow(r);
        let onward = flows.onward(r);
        for k in 0..levels {
            flows.to_depot[r][k] = inflow[k] - onward[k];
        }
    }
    for k in 0..levels {
        flows.idle[k] = per_level[k].saturating_sub(used_depot[k]);
    }
    flows
}

/// Checks requirement, conservation, depot balance and order constraints
/// with zero slack. Routes with a composition must receive it exactly.
pub fn verify_flows(routes: &[FlowRoute], per_level: &[u32], flows: &WorkerFlows) -> Result<(), FlowViolation> {
    let levels = per_level.len();
    for &(a, b) in flows.between.keys() {
        if !precedes(&routes[a], &routes[b]) {
            return Err(FlowViolation::Order(a, b));
        }
    }
    for (r, route) in routes.iter().enumerate() {
        let inflow = flows.inflow(r);
        let onward = flows.onward(r);
        for k in 0..levels {
            let have: u32 = inflow[k..].iter().sum();
            if have < route.xi[k] {
                return Err(FlowViolation::Requirement {
                    route: r,
                    level: k,
                    have,
                    need: route.xi[k],
                });
            }
            if inflow[k] != onward[k] + flows.to_depot[r][k] {
                return Err(FlowViolation::Conservation { route: r, level: k });
            }
            if route.exact.as_ref().is_some_and(|s| s[k] != inflow[k]) {
                return Err(FlowViolation::Composition { route: r, level: k });
            }
        }
    }
    for k in 0..levels {
        let out: u32 = flows.from_depot.iter().map(|f| f[k]).sum();
        let back: u32 = flows.to_depot.iter().map(|f| f[k]).sum();
        if out + flows.idle[k] != per_level[k] || back + flows.idle[k] != per_level[k] {
            return Err(FlowViolation::Depot(k));
        }
    }
    Ok(())
}

/// A composition of the profile that the workers flowing into a tour can
/// provide, preferring lower levels.
pub fn composition_from_inflow(comps: &[SkillComposition], inflow: &[u32]) -> Option<usize> {
    comps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.0.iter().zip(inflow).all(|(a, b)| a <= b))
        .max_by(|(_, a), (_, b)| a.0.cmp(&b.0))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use super::instance::{Instance, ObjectiveBasis};
use super::route::{evaluate_route, leave_time_range, RouteError};
use crate::distributions::Time;
use crate::Distribution;

/// A team route `(r, q)` or, with a composition, `(r, q, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub tasks: Vec<usize>,
    pub profile: usize,
    /// Index into the profile's compositions; `None` for aggregated columns.
    pub composition: Option<usize>,
    pub tl: Time,
    pub tr: Time,
    pub finishes: Vec<Distribution>,
    pub gamma_finishes: Vec<Time>,
    pub cost: f64,
    /// Sentinel column covering every task; never part of a feasible plan.
    #[serde(default)]
    pub artificial: bool,
}

/// Identity of a column inside a pool.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnKey {
    pub tasks: Vec<usize>,
    pub profile: usize,
    pub composition: Option<usize>,
    pub tl: Time,
    pub artificial: bool,
}

impl Column {
    /// Evaluates the route and builds an aggregated column.
    pub fn build(inst: &Instance, tasks: Vec<usize>, profile: usize, tl: Time) -> Result<Self, RouteError> {
        let ev = evaluate_route(inst, &tasks, profile, tl)?;
        Ok(Self {
            tasks,
            profile,
            composition: None,
            tl,
            tr: ev.tr,
            finishes: ev.finishes,
            gamma_finishes: ev.gamma_finishes,
            cost: ev.cost,
            artificial: false,
        })
    }

    pub fn with_composition(&self, composition: usize) -> Self {
        let mut c = self.clone();
        c.composition = Some(composition);
        c
    }

    pub fn aggregated(&self) -> Self {
        let mut c = self.clone();
        c.composition = None;
        c
    }

    pub fn key(&self) -> ColumnKey {
        ColumnKey {
            tasks: self.tasks.clone(),
            profile: self.profile,
            composition: self.composition,
            tl: self.tl,
            artificial: self.artificial,
        }
    }

    pub fn covers(&self, task: usize) -> bool {
        self.tasks.contains(&task)
    }

    pub fn position(&self, task: usize) -> Option<usize> {
        self.tasks.iter().position(|&t| t == task)
    }

    /// ω_γ-scenario finish of `task` on this route.
    pub fn gamma_finish_of(&self, task: usize) -> Option<Time> {
        self.position(task).map(|p| self.gamma_finishes[p])
    }

    pub fn is_active_at(&self, tau: Time) -> bool {
        !self.artificial && self.tl <= tau && tau <= self.tr
    }

    /// Workers occupied at `tau` in workforce row `k`: cumulative `xi_{q,k}`
    /// for aggregated columns, exact `s_{q,k}` for disaggregated ones.
    pub fn occupancy(&self, inst: &Instance, k: usize, tau: Time) -> u32 {
        if !self.is_active_at(tau) {
            return 0;
        }
        self.level_demand(inst, k)
    }

    /// Occupancy level while the route is active.
    pub fn level_demand(&self, inst: &Instance, k: usize) -> u32 {
        if self.artificial {
            return 0;
        }
        match self.composition {
            Some(s) => inst.compositions(self.profile)[s].get(k),
            None => inst.profiles[self.profile].xi[k],
        }
    }
}

/// Single-task route started as early as possible: the first depot leave
/// time, scanning upward from the lower end of the leave-time range, at which
/// the route satisfies the chance constraint and the hard cap.
pub fn earliest_singleton(inst: &Instance, task: usize, profile: usize) -> Option<Column> {
    let exec = inst.tasks[task].exec_time(profile)?;
    let (lo, hi) = leave_time_range(inst, task, exec);
    (lo..=hi).find_map(|tl| Column::build(inst, vec![task], profile, tl).ok())
}

/// Largest possible cost of serving `task`: finishing exactly at `LF_e`.
pub fn worst_task_cost(inst: &Instance, task: usize) -> f64 {
    let t = &inst.tasks[task];
    let base = match inst.objective {
        ObjectiveBasis::RelativeToEarliest => t.earliest_finish() as f64,
        ObjectiveBasis::Absolute => 0.0,
    };
    t.weight * ((t.lf_ext as f64 - base) + t.penalty(t.lf_ext))
}

/// Sum of worst-case task costs; bounds any plan that covers each task once.
pub fn worst_case_total(inst: &Instance) -> f64 {
    (0..inst.num_tasks()).map(|i| worst_task_cost(inst, i)).sum()
}

/// Cost bound for plans whose every route is needed: each route is
/// elementary, so it costs at most the worst-case total, and a plan without
/// redundant routes has at most one route per task plus `extra_routes`
/// routes kept by branching decisions.
pub fn plan_cost_cap(inst: &Instance, extra_routes: usize) -> f64 {
    (inst.num_tasks() + extra_routes) as f64 * worst_case_total(inst)
}

/// Sentinel column covering all tasks, priced above every plan cost cap
/// reachable at the root.
pub fn artificial_column(inst: &Instance) -> Column {
    let n = inst.num_tasks();
    Column {
        tasks: (0..n).collect(),
        profile: 0,
        composition: None,
        tl: 0,
        tr: 0,
        finishes: inst.tasks.iter().map(|t| Distribution::point(t.lf_ext)).collect(),
        gamma_finishes: inst.tasks.iter().map(|t| t.lf_ext).collect(),
        cost: 10.0 * plan_cost_cap(inst, 1).max(1.0),
        artificial: true,
    }
}

use thiserror::Error;

use super::instance::Instance;
use crate::distributions::Time;
use crate::Distribution;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("route is empty")]
    Empty,
    #[error("task {0} appears more than once")]
    Repeated(usize),
    #[error("profile {profile} cannot serve task {task}")]
    Incompatible { task: usize, profile: usize },
    #[error("task {0} may finish after its extended latest finish time")]
    HorizonOverflow(usize),
    #[error("task {0} misses the service level")]
    ServiceLevel(usize),
}

/// Result of one finish-time propagation step.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation {
    pub finish: Distribution,
    pub gamma_finish: Time,
    /// Bin whose travel distribution was used.
    pub bin: usize,
}

/// Propagates the finish time of the predecessor at location `from` to a task
/// at location `to`, using the travel distribution of the bin that contains
/// the predecessor's median finish. The workforce-scenario finish uses the
/// same bin.
#[allow(clippy::too_many_arguments)]
pub fn propagate_finish(
    inst: &Instance,
    prev: &Distribution,
    prev_gamma: Time,
    from: usize,
    to: usize,
    exec: Time,
    es: Time,
    lf_ext: Time,
) -> Result<Propagation, Time> {
    let bin = inst.bins.bin_of(prev.median());
    let edge = inst.travel().edge(bin, from, to);
    let finish = prev.convolve(&edge.dist).truncate_left(es).shift(exec);
    if finish.max_time() > lf_ext {
        return Err(finish.max_time());
    }
    let gamma_finish = (prev_gamma + edge.q_gamma).max(es) + exec;
    Ok(Propagation {
        finish,
        gamma_finish,
        bin,
    })
}

/// Workforce-scenario return time to the depot after finishing at `last`.
pub fn return_time(inst: &Instance, last_loc: usize, last_finish: &Distribution, last_gamma: Time) -> Time {
    let bin = inst.bins.bin_of(last_finish.median());
    last_gamma + inst.travel().edge(bin, last_loc, inst.depot).q_gamma
}

/// `P(F <= LF) >= alpha` and `P(F > LF_e) = 0`.
pub fn task_feasible(inst: &Instance, task: usize, f: &Distribution) -> bool {
    let t = &inst.tasks[task];
    f.max_time() <= t.lf_ext && f.cdf(t.lf) >= inst.alpha - 1e-9
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteEvaluation {
    pub finishes: Vec<Distribution>,
    pub gamma_finishes: Vec<Time>,
    pub tr: Time,
    pub cost: f64,
}

/// Evaluates a route leaving the depot at `tl` with profile `profile`.
pub fn evaluate_route(inst: &Instance, tasks: &[usize], profile: usize, tl: Time) -> Result<RouteEvaluation, RouteError> {
    if tasks.is_empty() {
        return Err(RouteError::Empty);
    }
    for (k, &i) in tasks.iter().enumerate() {
        if tasks[..k].contains(&i) {
            return Err(RouteError::Repeated(i));
        }
    }
    let mut prev = Distribution::point(tl);
    let mut prev_gamma = tl;
    let mut loc = inst.depot;
    let mut finishes = Vec::with_capacity(tasks.len());
    let mut gamma_finishes = Vec::with_capacity(tasks.len());
    for &i in tasks {
        let t = &inst.tasks[i];
        let exec = t.exec_time(profile).ok_or(RouteError::Incompatible { task: i, profile })?;
        let step = propagate_finish(inst, &prev, prev_gamma, loc, t.location, exec, t.es, t.lf_ext)
            .map_err(|_| RouteError::HorizonOverflow(i))?;
        if !task_feasible(inst, i, &step.finish) {
            return Err(RouteError::ServiceLevel(i));
        }
        prev = step.finish.clone();
        prev_gamma = step.gamma_finish;
        loc = t.location;
        finishes.push(step.finish);
        gamma_finishes.push(step.gamma_finish);
    }
    let tr = return_time(inst, loc, &prev, prev_gamma);
    let cost = route_cost(inst, tasks, &finishes);
    Ok(RouteEvaluation {
        finishes,
        gamma_finishes,
        tr,
        cost,
    })
}

/// `sum_i w_i E[(F_i - EF_i) + P_i(F_i)]` under the instance's objective basis.
pub fn route_cost(inst: &Instance, tasks: &[usize], finishes: &[Distribution]) -> f64 {
    tasks
        .iter()
        .zip(finishes)
        .map(|(&i, f)| inst.task_cost(i, f))
        .sum()
}

/// Chance constraint and hard cap for every task of a route.
pub fn check_route_feasibility(inst: &Instance, tasks: &[usize], finishes: &[Distribution]) -> bool {
    tasks
        .iter()
        .zip(finishes)
        .all(|(&i, f)| task_feasible(inst, i, f))
}

/// Depot leave times worth considering for a route that starts with `task`.
/// Leaving earlier than the lower end only lengthens the occupancy, leaving
/// later than the upper end always overshoots `LF_e`.
pub fn leave_time_range(inst: &Instance, task: usize, exec: Time) -> (Time, Time) {
    let t = &inst.tasks[task];
    let tm = inst.travel();
    let longest = tm.over_bins(inst.depot, t.location, |e| e.max, Time::max);
    let shortest = tm.over_bins(inst.depot, t.location, |e| e.min, Time::min);
    ((t.es - longest).max(0), t.lf_ext - exec - shortest)
}

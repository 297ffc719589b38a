//! Deterministic baselines and Monte-Carlo evaluation of plans.
//!
//! A plan is executed against sampled travel times: tours run in leave-time
//! order and keep their worker flows, so a tour waits until every tour that
//! hands workers to it has returned.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::Time;
use crate::model::{evaluate_route, Instance, InstanceError};
use crate::search::{solve, SearchConfig, SearchError, Solution, SolveResult, SolveStatus};
use crate::Distribution;

/// Two-sided 95% standard normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

/// Statistic a deterministic baseline collapses each delay distribution to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TravelStat {
    Best,
    Mean,
    Median,
    Worst,
}

impl TravelStat {
    pub const ALL: [TravelStat; 4] = [TravelStat::Best, TravelStat::Mean, TravelStat::Median, TravelStat::Worst];

    pub fn name(self) -> &'static str {
        match self {
            TravelStat::Best => "best",
            TravelStat::Mean => "mean",
            TravelStat::Median => "median",
            TravelStat::Worst => "worst",
        }
    }

    /// The statistic of a delay distribution; the mean is rounded to the
    /// nearest step, halves upward.
    pub fn of(self, d: &Distribution) -> Time {
        match self {
            TravelStat::Best => d.min_time(),
            TravelStat::Mean => (d.expectation() + 0.5).floor() as Time,
            TravelStat::Median => d.median(),
            TravelStat::Worst => d.max_time(),
        }
    }
}

impl fmt::Display for TravelStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TravelStat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        TravelStat::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown travel-time mode `{s}`"))
    }
}

/// Which bin's travel time a step uses during execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinRule {
    /// The bin of the realized departure time.
    Actual,
    /// The bin the planning model used: that of the planned median finish.
    Median,
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// The instance with every delay replaced by a point mass at `stat`.
pub fn point_instance(inst: &Instance, stat: TravelStat) -> Result<Instance, InstanceError> {
    let delays = inst
        .travel
        .delays
        .iter()
        .map(|bin| bin.iter().map(|row| row.iter().map(|d| Distribution::point(stat.of(d))).collect()).collect())
        .collect();
    inst.with_delays(delays)
}

pub fn solve_deterministic(inst: &Instance, stat: TravelStat, config: &SearchConfig) -> Result<SolveResult, SimulateError> {
    Ok(solve(&point_instance(inst, stat)?, config)?)
}

/// Realized travel times per `(bin, from, to)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    locations: usize,
    travel: Vec<Time>,
}

impl Scenario {
    fn from_fn(inst: &Instance, f: impl Fn(usize, usize, usize) -> Time) -> Self {
        let l = inst.travel.locations();
        let mut travel = Vec::with_capacity(inst.bins.count * l * l);
        for b in 0..inst.bins.count {
            for i in 0..l {
                for j in 0..l {
                    travel.push(f(b, i, j));
                }
            }
        }
        Self { locations: l, travel }
    }

    /// Every edge at its γ-quantile travel time.
    pub fn quantile(inst: &Instance) -> Self {
        Self::from_fn(inst, |b, i, j| inst.travel().edge(b, i, j).q_gamma)
    }

    /// Every edge at a fixed statistic of its delay.
    pub fn statistic(inst: &Instance, stat: TravelStat) -> Self {
        Self::from_fn(inst, |b, i, j| inst.travel.det[i][j] + stat.of(&inst.travel.delays[b][i][j]))
    }

    pub fn travel(&self, bin: usize, from: usize, to: usize) -> Time {
        self.travel[(bin * self.locations + from) * self.locations + to]
    }

    /// The instance with this scenario as point-mass travel times.
    pub fn as_instance(&self, inst: &Instance) -> Result<Instance, InstanceError> {
        let l = self.locations;
        let delays = (0..inst.bins.count)
            .map(|b| {
                (0..l)
                    .map(|i| (0..l).map(|j| Distribution::point(self.travel(b, i, j) - inst.travel.det[i][j])).collect())
                    .collect()
            })
            .collect();
        inst.with_delays(delays)
    }
}

/// Draws independent per-bin, per-edge delays.
pub struct ScenarioSampler {
    det: Vec<Time>,
    edges: Vec<(Vec<Time>, Option<WeightedIndex<f64>>)>,
    locations: usize,
}

impl ScenarioSampler {
    pub fn new(inst: &Instance) -> Self {
        let l = inst.travel.locations();
        let mut det = Vec::new();
        let mut edges = Vec::new();
        for bin in &inst.travel.delays {
            for (i, row) in bin.iter().enumerate() {
                for (j, d) in row.iter().enumerate() {
                    det.push(inst.travel.det[i][j]);
                    let times: Vec<Time> = d.iter().map(|(t, _)| t).collect();
                    let index = (times.len() > 1).then(|| WeightedIndex::new(d.iter().map(|(_, p)| p)).expect("valid pmf"));
                    edges.push((times, index));
                }
            }
        }
        Self { det, edges, locations: l }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Scenario {
        let travel = self
            .edges
            .iter()
            .zip(&self.det)
            .map(|((times, index), det)| {
                det + match index {
                    Some(w) => times[w.sample(rng)],
                    None => times[0],
                }
            })
            .collect();
        Scenario {
            locations: self.locations,
            travel,
        }
    }
}

pub fn sample_scenario<R: Rng>(inst: &Instance, rng: &mut R) -> Scenario {
    ScenarioSampler::new(inst).sample(rng)
}

/// Outcome of one plan under one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    /// Realized leave and return time per route.
    pub starts: Vec<Time>,
    pub returns: Vec<Time>,
    /// Realized finish of every visit, per route.
    pub visits: Vec<Vec<Time>>,
    /// Earliest realized finish per task.
    pub finishes: Vec<Option<Time>>,
    pub objective: f64,
    pub penalty: f64,
}

impl Execution {
    pub fn postponed(&self, sol: &Solution) -> usize {
        self.starts.iter().zip(&sol.routes).filter(|(s, r)| **s > r.column.tl).count()
    }
}

/// Runs the plan in leave-time order. A route starts at its planned leave
/// time or one step after the last route handing it workers returns,
/// whichever is later.
pub fn execute_plan(inst: &Instance, sol: &Solution, scenario: &Scenario, rule: BinRule) -> Execution {
    let n = sol.routes.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (&(a, b), w) in &sol.flows.between {
        if w.iter().any(|&x| x > 0) {
            preds[b].push(a);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&r| (sol.routes[r].column.tl, r));
    let mut starts = vec![0; n];
    let mut returns = vec![0; n];
    let mut visits = vec![Vec::new(); n];
    let mut finishes: Vec<Option<Time>> = vec![None; inst.num_tasks()];
    let (mut objective, mut penalty) = (0.0, 0.0);
    for &r in &order {
        let col = &sol.routes[r].column;
        let ready = preds[r].iter().map(|&a| returns[a] + 1).max().unwrap_or(Time::MIN);
        let start = col.tl.max(ready);
        let mut t = start;
        let mut loc = inst.depot;
        for (pos, &i) in col.tasks.iter().enumerate() {
            let task = &inst.tasks[i];
            let planned = if pos == 0 { col.tl } else { col.finishes[pos - 1].median() };
            let bin = inst.bins.bin_of(match rule {
                BinRule::Actual => t,
                BinRule::Median => planned,
            });
            let arrive = t + scenario.travel(bin, loc, task.location);
            let f = arrive.max(task.es) + task.exec_time(col.profile).expect("route uses a compatible profile");
            let p = task.weight * task.penalty(f);
            objective += inst.task_cost(i, &Distribution::point(f));
            penalty += p;
            finishes[i] = Some(finishes[i].map_or(f, |g: Time| g.min(f)));
            visits[r].push(f);
            t = f;
            loc = task.location;
        }
        let last = col.finishes.last().map_or(col.tl, |d| d.median());
        let bin = inst.bins.bin_of(match rule {
            BinRule::Actual => t,
            BinRule::Median => last,
        });
        starts[r] = start;
        returns[r] = t + scenario.travel(bin, loc, inst.depot);
    }
    Execution {
        starts,
        returns,
        visits,
        finishes,
        objective,
        penalty,
    }
}

/// Workers of each level busy at `tau`, counting every worker that flows
/// into a route.
pub fn busy_workers(sol: &Solution, exec: &Execution, tau: Time) -> Vec<u32> {
    let levels = sol.flows.idle.len();
    let mut busy = vec![0; levels];
    for r in 0..sol.routes.len() {
        if exec.starts[r] <= tau && tau <= exec.returns[r] {
            for (k, w) in sol.flows.inflow(r).into_iter().enumerate() {
                busy[k] += w;
            }
        }
    }
    busy
}

/// Sum of expected route costs computed from the exact finish distributions.
pub fn in_model_objective(inst: &Instance, sol: &Solution) -> f64 {
    sol.routes
        .iter()
        .map(|r| {
            evaluate_route(inst, &r.column.tasks, r.column.profile, r.column.tl)
                .map_or(f64::INFINITY, |ev| ev.cost)
        })
        .sum()
}

/// Whether every route meets the service level and the hard cap exactly.
pub fn chance_constraints_hold(inst: &Instance, sol: &Solution) -> bool {
    sol.routes
        .iter()
        .all(|r| evaluate_route(inst, &r.column.tasks, r.column.profile, r.column.tl).is_ok())
}

/// Aggregated simulation results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub scenarios: usize,
    pub objective: f64,
    pub objective_std: f64,
    pub objective_without_penalty: f64,
    /// Service level of each task: share of scenarios finishing by `LF`.
    pub service_per_task: Vec<f64>,
    pub service_mean: f64,
    pub service_std: f64,
    pub service_min: f64,
    /// Count of task finishes per lateness `max(0, F - LF)`.
    pub delay_histogram: BTreeMap<Time, usize>,
    pub postponed_tours: f64,
    /// Scenario-task pairs finishing after `LF_e`.
    pub hard_cap_violations: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Evaluates a plan on `n` scenarios drawn from `seed`; equal seeds give
/// every plan the same scenarios.
pub fn evaluate(inst: &Instance, sol: &Solution, n: usize, seed: u64, rule: BinRule) -> Evaluation {
    let sampler = ScenarioSampler::new(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = (0..n).map(|_| sampler.sample(&mut rng));
    evaluate_on(inst, sol, scenarios, rule)
}

pub fn evaluate_on(inst: &Instance, sol: &Solution, scenarios: impl IntoIterator<Item = Scenario>, rule: BinRule) -> Evaluation {
    let tasks = inst.num_tasks();
    let mut on_time = vec![0usize; tasks];
    let mut objectives = Vec::new();
    let mut plain = 0.0;
    let mut histogram = BTreeMap::new();
    let mut postponed = 0usize;
    let mut violations = 0usize;
    for sc in scenarios {
        let ex = execute_plan(inst, sol, &sc, rule);
        objectives.push(ex.objective);
        plain += ex.objective - ex.penalty;
        postponed += ex.postponed(sol);
        for (i, f) in ex.finishes.iter().enumerate() {
            let Some(f) = *f else { continue };
            let t = &inst.tasks[i];
            if f <= t.lf {
                on_time[i] += 1;
            }
            if f > t.lf_ext {
                violations += 1;
            }
            *histogram.entry((f - t.lf).max(0)).or_insert(0) += 1;
        }
    }
    let n = objectives.len();
    let service: Vec<f64> = on_time.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
    let (objective, objective_std) = mean_std(&objectives);
    let (service_mean, service_std) = mean_std(&service);
    Evaluation {
        scenarios: n,
        objective,
        objective_std,
        objective_without_penalty: plain / n.max(1) as f64,
        service_min: service.iter().copied().fold(1.0, f64::min),
        service_per_task: service,
        service_mean,
        service_std,
        delay_histogram: histogram,
        postponed_tours: postponed as f64 / n.max(1) as f64,
        hard_cap_violations: violations,
    }
}

/// Value of the stochastic solution and of perfect information.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueMetrics {
    pub vss: Option<f64>,
    pub evpi: Option<f64>,
    /// Scenarios whose perfect-information instance was feasible.
    pub pi_scenarios: usize,
    pub pi_excluded: usize,
    pub pi_objective: Option<f64>,
}

/// VSS from simulated objectives on common scenarios; EVPI against the
/// per-scenario optimum with hard caps only, over the first `pi_scenarios`
/// scenarios with a feasible optimum.
pub fn vss_evpi(
    inst: &Instance,
    stochastic: &Solution,
    mean: Option<&Solution>,
    scenarios: usize,
    pi_scenarios: usize,
    seed: u64,
    rule: BinRule,
    config: &SearchConfig,
) -> Result<ValueMetrics, SimulateError> {
    let sto = evaluate(inst, stochastic, scenarios, seed, rule);
    let vss = mean.map(|m| evaluate(inst, m, scenarios, seed, rule).objective - sto.objective);
    let relaxed = inst.without_service_level()?;
    let sampler = ScenarioSampler::new(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pi_sum, mut plan_sum, mut used, mut excluded) = (0.0, 0.0, 0usize, 0usize);
    for _ in 0..pi_scenarios {
        let sc = sampler.sample(&mut rng);
        let res = solve(&sc.as_instance(&relaxed)?, config)?;
        match (res.status, res.objective()) {
            (SolveStatus::Optimal, Some(v)) => {
                pi_sum += v;
                plan_sum += execute_plan(inst, stochastic, &sc, rule).objective;
                used += 1;
            }
            _ => excluded += 1,
        }
    }
    let evpi = (used > 0).then(|| (plan_sum - pi_sum) / used as f64);
    Ok(ValueMetrics {
        vss,
        evpi,
        pi_scenarios: used,
        pi_excluded: excluded,
        pi_objective: (used > 0).then(|| pi_sum / used as f64),
    })
}

/// Batch statistics of one instance at a scenario count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaaBatch {
    pub mean: f64,
    pub std: f64,
    pub ci: f64,
}

impl SaaBatch {
    /// Both the batch spread and the interval half-width within
    /// `max(5% of the mean, 0.5)`.
    pub fn accepts(&self) -> bool {
        let tol = (0.05 * self.mean).max(0.5);
        self.std <= tol && self.ci <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaaReport {
    /// First scenario count meeting the criterion, if any up to the cap.
    pub scenarios: Option<usize>,
    /// Counts tried with their per-instance statistics.
    pub history: Vec<(usize, Vec<SaaBatch>)>,
}

/// Batch means of `batches` independent batches of `n` scenarios.
pub fn saa_batch<R: Rng>(inst: &Instance, sol: &Solution, n: usize, batches: usize, rng: &mut R, rule: BinRule) -> SaaBatch {
    let sampler = ScenarioSampler::new(inst);
    let means: Vec<f64> = (0..batches)
        .map(|_| (0..n).map(|_| execute_plan(inst, sol, &sampler.sample(rng), rule).objective).sum::<f64>() / n as f64)
        .collect();
    let m = batches as f64;
    let mean = means.iter().sum::<f64>() / m;
    let std = if batches > 1 {
        (means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    SaaBatch {
        mean,
        std,
        ci: Z_975 * std / m.sqrt(),
    }
}

#[derive(Clone, Debug)]
pub struct SaaOptions {
    pub start: usize,
    pub step: usize,
    pub batches: usize,
    pub max: usize,
    pub rule: BinRule,
}

impl Default for SaaOptions {
    fn default() -> Self {
        Self {
            start: 50,
            step: 50,
            batches: 25,
            max: 2000,
            rule: BinRule::Actual,
        }
    }
}

/// Increases the scenario count until every instance meets the criterion.
pub fn saa_scenario_count(plans: &[(&Instance, &Solution)], opts: &SaaOptions, seed: u64) -> SaaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = Vec::new();
    let mut n = opts.start;
    while n <= opts.max {
        let stats: Vec<SaaBatch> = plans.iter().map(|(inst, sol)| saa_batch(inst, sol, n, opts.batches, &mut rng, opts.rule)).collect();
        let ok = stats.iter().all(SaaBatch::accepts);
        history.push((n, stats));
        if ok {
            return SaaReport {
                scenarios: Some(n),
                history,
            };
        }
        n += opts.step;
    }
    SaaReport {
        scenarios: None,
        history,
    }
}

/// One row of the plan comparison: a planning mode and its simulated
/// performance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: String,
    pub status: SolveStatus,
    pub planned_objective: Option<f64>,
    pub evaluation: Option<Evaluation>,
    pub values: Option<ValueMetrics>,
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub scenarios: usize,
    pub pi_scenarios: usize,
    pub seed: u64,
    pub rule: BinRule,
    pub search: SearchConfig,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            scenarios: 500,
            pi_scenarios: 50,
            seed: 0,
            rule: BinRule::Actual,
            search: SearchConfig::default(),
        }
    }
}

/// Plans with stochastic and each deterministic travel-time mode, all
/// evaluated on the same scenarios.
pub fn compare(inst: &Instance, opts: &CompareOptions) -> Result<(Vec<ComparisonRow>, Vec<Option<Solution>>), SimulateError> {
    let mut plans: Vec<(String, SolveResult)> = vec![("stochastic".into(), solve(inst, &opts.search)?)];
    for stat in TravelStat::ALL {
        plans.push((stat.name().into(), solve_deterministic(inst, stat, &opts.search)?));
    }
    let mean_plan = plans.iter().find(|(m, _)| m == "mean").and_then(|(_, r)| r.incumbent.clone());
    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    for (mode, res) in plans {
        let evaluation = res.incumbent.as_ref().map(|s| evaluate(inst, s, opts.scenarios, opts.seed, opts.rule));
        let values = match (&res.incumbent, mode.as_str()) {
            (Some(s), "stochastic") => Some(vss_evpi(inst, s, mean_plan.as_ref(), opts.scenarios, opts.pi_scenarios, opts.seed, opts.rule, &opts.search)?),
            _ => None,
        };
        rows.push(ComparisonRow {
            mode,
            status: res.status,
            planned_objective: res.objective(),
            evaluation,
            values,
        });
        solutions.push(res.incumbent);
    }
    Ok((rows, solutions))
}

#[cfg(test)]
mod tests;

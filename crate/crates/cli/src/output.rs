//! Machine-readable reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use bpcs_core::model::Instance;
use bpcs_core::search::{SearchTimings, SolveResult, Solution};
use bpcs_core::simulate::{ComparisonRow, Evaluation, SaaReport, ValueMetrics};
use bpcs_core::Time;
use serde::Serialize;

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

#[derive(Serialize)]
struct RouteReport<'a> {
    tasks: Vec<&'a str>,
    profile: &'a str,
    /// Workers of each exact skill level.
    composition: &'a [u32],
    leave: Time,
    ret: Time,
    /// Finish times under the workforce scenario.
    gamma_finishes: &'a [Time],
    expected_cost: f64,
}

#[derive(Serialize)]
struct Transfer {
    from: String,
    to: String,
    workers: Vec<u32>,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    routes: Vec<RouteReport<'a>>,
    /// Who moves where: depot to tour, tour to tour, tour to depot.
    regrouping: Vec<Transfer>,
    idle: &'a [u32],
}

#[derive(Serialize)]
struct SolutionReport<'a> {
    instance: &'a str,
    status: &'static str,
    objective: Option<f64>,
    lower_bound: f64,
    gap: f64,
    plan: Option<PlanReport<'a>>,
}

fn plan_report<'a>(inst: &'a Instance, sol: &'a Solution) -> PlanReport<'a> {
    let routes = sol
        .routes
        .iter()
        .map(|r| RouteReport {
            tasks: r.column.tasks.iter().map(|&i| inst.tasks[i].name.as_str()).collect(),
            profile: &inst.profiles[r.column.profile].name,
            composition: &r.composition,
            leave: r.column.tl,
            ret: r.column.tr,
            gamma_finishes: &r.column.gamma_finishes,
            expected_cost: r.column.cost,
        })
        .collect();
    let tour = |r: usize| format!("tour{r}");
    let mut regrouping = Vec::new();
    let mut push = |from: String, to: String, w: &Vec<u32>| {
        if w.iter().any(|&x| x > 0) {
            regrouping.push(Transfer { from, to, workers: w.clone() });
        }
    };
    for (r, w) in sol.flows.from_depot.iter().enumerate() {
        push("depot".into(), tour(r), w);
    }
    for (&(a, b), w) in &sol.flows.between {
        push(tour(a), tour(b), w);
    }
    for (r, w) in sol.flows.to_depot.iter().enumerate() {
        push(tour(r), "depot".into(), w);
    }
    PlanReport {
        routes,
        regrouping,
        idle: &sol.flows.idle,
    }
}

pub fn solution_json(inst: &Instance, res: &SolveResult) -> Vec<u8> {
    let report = SolutionReport {
        instance: &inst.name,
        status: res.status.name(),
        objective: res.objective(),
        lower_bound: res.lower_bound,
        gap: res.gap,
        plan: res.incumbent.as_ref().map(|s| plan_report(inst, s)),
    };
    let mut out = serde_json::to_vec_pretty(&report).expect("report serializes");
    out.push(b'\n');
    out
}

#[derive(Serialize)]
struct StatsRow<'a> {
    instance: &'a str,
    features: &'a str,
    status: &'static str,
    optimal: u8,
    gap_pct: f64,
    objective: Option<f64>,
    lower_bound: f64,
    root_opt: u8,
    nodes_to_incumbent: usize,
    nodes: usize,
    armp_nodes: usize,
    drmp_nodes: usize,
    no_a_inf: usize,
    no_goods: usize,
    cuts: usize,
    root_lb_before_cuts: Option<f64>,
    root_lb: Option<f64>,
    finish_branchings: usize,
    tour_branchings: usize,
    variable_branchings: usize,
    lp_solves: usize,
    columns: usize,
    heuristic: u8,
    labels_created: usize,
    labels_dominated: usize,
    labels_extended: usize,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("row serializes");
    }
    w.into_inner().expect("in-memory writer")
}

pub fn stats_csv(inst: &Instance, features: &str, res: &SolveResult) -> Vec<u8> {
    let s = &res.stats;
    let optimal = u8::from(res.status == bpcs_core::search::SolveStatus::Optimal);
    csv_bytes([StatsRow {
        instance: &inst.name,
        features,
        status: res.status.name(),
        optimal,
        gap_pct: if res.gap.is_finite() { 100.0 * res.gap } else { f64::NAN },
        objective: res.objective(),
        lower_bound: res.lower_bound,
        root_opt: u8::from(s.solved_at_root),
        nodes_to_incumbent: s.nodes_to_incumbent,
        nodes: s.nodes,
        armp_nodes: s.armp_nodes,
        drmp_nodes: s.drmp_nodes,
        no_a_inf: s.disaggregated_infeasible,
        no_goods: s.no_goods,
        cuts: s.cuts_added,
        root_lb_before_cuts: s.root_lb_before_cuts,
        root_lb: s.root_lb,
        finish_branchings: s.finish_branchings,
        tour_branchings: s.tour_branchings,
        variable_branchings: s.variable_branchings,
        lp_solves: s.lp_solves,
        columns: s.columns,
        heuristic: u8::from(s.heuristic_used),
        labels_created: s.pricing.labels_created,
        labels_dominated: s.pricing.labels_dominated,
        labels_extended: s.pricing.labels_extended,
    }])
}

#[derive(Serialize)]
struct TimingsRow<'a> {
    instance: &'a str,
    total_secs: f64,
    root_secs: f64,
    secs_per_node: f64,
    secs_per_pricing: f64,
    incumbent_secs: f64,
}

pub fn timings_csv(inst: &Instance, res: &SolveResult) -> Vec<u8> {
    let t: &SearchTimings = &res.timings;
    csv_bytes([TimingsRow {
        instance: &inst.name,
        total_secs: t.total_secs,
        root_secs: t.root_secs,
        secs_per_node: t.per_node(&res.stats),
        secs_per_pricing: t.per_pricing(),
        incumbent_secs: t.incumbent_secs,
    }])
}

/// One row per planning mode, laid out like the simulation tables.
#[derive(Serialize)]
struct SimulationRow<'a> {
    instance: &'a str,
    mode: &'a str,
    feasible: u8,
    planned_objective: Option<f64>,
    objective: Option<f64>,
    objective_std: Option<f64>,
    objective_without_penalty: Option<f64>,
    service_mean_pct: Option<f64>,
    service_std_pct: Option<f64>,
    service_min_pct: Option<f64>,
    postponed_tours: Option<f64>,
    hard_cap_violations: Option<usize>,
    vss: Option<f64>,
    evpi: Option<f64>,
    pi_scenarios: Option<usize>,
}

fn simulation_row<'a>(inst: &'a Instance, mode: &'a str, planned: Option<f64>, ev: Option<&Evaluation>, v: Option<&ValueMetrics>) -> SimulationRow<'a> {
    SimulationRow {
        instance: &inst.name,
        mode,
        feasible: u8::from(planned.is_some()),
        planned_objective: planned,
        objective: ev.map(|e| e.objective),
        objective_std: ev.map(|e| e.objective_std),
        objective_without_penalty: ev.map(|e| e.objective_without_penalty),
        service_mean_pct: ev.map(|e| 100.0 * e.service_mean),
        service_std_pct: ev.map(|e| 100.0 * e.service_std),
        service_min_pct: ev.map(|e| 100.0 * e.service_min),
        postponed_tours: ev.map(|e| e.postponed_tours),
        hard_cap_violations: ev.map(|e| e.hard_cap_violations),
        vss: v.and_then(|v| v.vss),
        evpi: v.and_then(|v| v.evpi),
        pi_scenarios: v.map(|v| v.pi_scenarios),
    }
}

pub fn simulation_csv(inst: &Instance, mode: &str, planned: Option<f64>, ev: Option<&Evaluation>) -> Vec<u8> {
    csv_bytes([simulation_row(inst, mode, planned, ev, None)])
}

pub fn comparison_csv(inst: &Instance, rows: &[ComparisonRow]) -> Vec<u8> {
    csv_bytes(
        rows.iter()
            .map(|r| simulation_row(inst, &r.mode, r.planned_objective, r.evaluation.as_ref(), r.values.as_ref())),
    )
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    mode: &'a str,
    lateness: Time,
    count: usize,
}

pub fn histogram_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a BTreeMap<Time, usize>)>) -> Vec<u8> {
    let mut out = Vec::new();
    for (mode, h) in rows {
        for (&lateness, &count) in h {
            out.push(HistogramRow { mode, lateness, count });
        }
    }
    if out.is_empty() {
        return b"mode,lateness,count\n".to_vec();
    }
    csv_bytes(out)
}

#[derive(Serialize)]
struct SaaRow<'a> {
    scenarios: usize,
    instance: &'a str,
    mean: f64,
    std: f64,
    ci: f64,
    accepted: u8,
}

pub fn saa_csv(names: &[&str], report: &SaaReport) -> Vec<u8> {
    let mut rows = Vec::new();
    for (n, batches) in &report.history {
        for (name, b) in names.iter().zip(batches) {
            rows.push(SaaRow {
                scenarios: *n,
                instance: name,
                mean: b.mean,
                std: b.std,
                ci: b.ci,
                accepted: u8::from(b.accepts()),
            });
        }
    }
    csv_bytes(rows)
}

//! Best-first branch-price-cut-and-switch.
//!
//! Nodes start on the aggregated master. An integral aggregated solution is
//! checked for a worker-flow realization; when none exists the node and its
//! sibling switch to the disaggregated master (or, without the switch, the
//! solution is excluded by a no-good row).

mod branching;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use bpcs_lp::MipOptions;
use serde::Serialize;

use crate::cuts::{aggregate_support, separate, shortcut_safe, Cut, SeparationOptions};
use crate::feascheck::{composition_from_inflow, construct_flows, feasibility_check, verify_flows, FeasError, FlowRoute, WorkerFlows};
use crate::master::{ColumnPool, MasterError, MasterKind, MasterSolution, NodeRules, RestrictedMaster};
use crate::model::{plan_cost_cap, Column, ColumnKey, Instance};
use crate::pricing::{price, PricingConfig, PricingContext, PricingStats};

pub use branching::{branch, finish_time_candidate, tour_count_candidate, variable_candidate, BranchRule, Branching};

/// Solver feature sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Features {
    Full,
    Basic,
    NoCgc,
    NoDrmp,
    NoBranching,
}

impl Features {
    pub const ALL: [Features; 5] = [Features::Full, Features::Basic, Features::NoCgc, Features::NoDrmp, Features::NoBranching];

    pub fn name(self) -> &'static str {
        match self {
            Features::Full => "full",
            Features::Basic => "basic",
            Features::NoCgc => "no-cgc",
            Features::NoDrmp => "no-drmp",
            Features::NoBranching => "no-branching",
        }
    }

    pub fn cuts(self) -> bool {
        matches!(self, Features::Full | Features::NoDrmp | Features::NoBranching)
    }

    /// Switch to the disaggregated master instead of adding no-good rows.
    pub fn switch(self) -> bool {
        matches!(self, Features::Full | Features::NoCgc | Features::NoBranching)
    }

    pub fn finish_branching(self) -> bool {
        matches!(self, Features::Full | Features::NoCgc | Features::NoDrmp)
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Features {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Features::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature set `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub features: Features,
    /// Hard limit on the tree search; `None` runs to completion.
    pub time_limit: Option<Duration>,
    /// Limit of the early-termination MIP.
    pub heuristic_limit: Duration,
    pub node_limit: Option<usize>,
    pub max_cuts: usize,
    pub separation: SeparationOptions,
    pub pricing: PricingConfig,
    /// Relative optimality gap.
    pub gap_tolerance: f64,
    pub integrality: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            features: Features::Full,
            time_limit: Some(Duration::from_secs(180)),
            heuristic_limit: Duration::from_secs(30),
            node_limit: None,
            max_cuts: 12,
            separation: SeparationOptions::default(),
            pricing: PricingConfig::default(),
            gap_tolerance: 1e-6,
            integrality: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn with_features(features: Features) -> Self {
        Self {
            features,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// A route of the final plan with its exact team.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlannedRoute {
    pub column: Column,
    /// Workers of exactly each level.
    pub composition: Vec<u32>,
}

/// A disaggregated-feasible plan with its worker flows. Flow indices refer
/// to `routes`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub routes: Vec<PlannedRoute>,
    pub objective: f64,
    pub flows: WorkerFlows,
}

impl Solution {
    /// Builds the plan for integer-selected columns. Aggregated columns get
    /// the composition their incoming workers realize; `flows` must staff
    /// every route.
    fn assemble(inst: &Instance, mut columns: Vec<Column>, flows: Option<WorkerFlows>) -> Option<Self> {
        sort_plan(&mut columns);
        let routes: Vec<FlowRoute> = columns.iter().map(|c| FlowRoute::from_column(inst, c)).collect();
        let per_level = &inst.workforce.per_level;
        let flows = match flows {
            Some(f) => f,
            None if routes.iter().all(|r| r.exact.is_some()) => construct_flows(&routes, per_level),
            None => {
                let res = feasibility_check(&routes, per_level, &MipOptions::default()).ok()?;
                if !res.feasible {
                    return None;
                }
                res.flows
            }
        };
        let relaxed: Vec<FlowRoute> = routes.iter().map(|r| FlowRoute { exact: None, ..r.clone() }).collect();
        verify_flows(&relaxed, per_level, &flows).ok()?;
        let mut out = Vec::with_capacity(columns.len());
        for (r, col) in columns.into_iter().enumerate() {
            let comps = inst.compositions(col.profile);
            let s = match col.composition {
                Some(s) => s,
                None => composition_from_inflow(comps, &flows.inflow(r))?,
            };
            out.push(PlannedRoute {
                composition: comps[s].0.clone(),
                column: col,
            });
        }
        Some(Self {
            objective: out.iter().map(|r| r.column.cost).sum(),
            routes: out,
            flows,
        })
    }

    /// Whether every task is on some route.
    pub fn covers_all(&self, inst: &Instance) -> bool {
        (0..inst.num_tasks()).all(|i| self.routes.iter().any(|r| r.column.covers(i)))
    }
}

/// Plan order: by leave time, then return time, then route.
fn sort_plan(columns: &mut [Column]) {
    columns.sort_by(|a, b| (a.tl, a.tr, &a.tasks, a.profile, a.composition).cmp(&(b.tl, b.tr, &b.tasks, b.profile, b.composition)));
}

/// Counters mirroring the usual branch-and-price tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub nodes: usize,
    pub armp_nodes: usize,
    pub drmp_nodes: usize,
    pub disaggregated_infeasible: usize,
    pub no_goods: usize,
    pub cuts_added: usize,
    pub root_lb_before_cuts: Option<f64>,
    pub root_lb: Option<f64>,
    pub solved_at_root: bool,
    /// Nodes explored when the final incumbent was found.
    pub nodes_to_incumbent: usize,
    pub finish_branchings: usize,
    pub tour_branchings: usize,
    pub variable_branchings: usize,
    pub lp_solves: usize,
    pub columns: usize,
    pub heuristic_used: bool,
    pub pricing: PricingStats,
}

/// Wall-clock measurements; kept apart from the counters because they vary
/// between runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchTimings {
    pub total_secs: f64,
    pub root_secs: f64,
    pub pricing_secs: f64,
    pub pricing_rounds: usize,
    pub incumbent_secs: f64,
}

impl SearchTimings {
    pub fn per_node(&self, stats: &SearchStats) -> f64 {
        self.total_secs / stats.nodes.max(1) as f64
    }

    pub fn per_pricing(&self) -> f64 {
        self.pricing_secs / self.pricing_rounds.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Solution>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub stats: SearchStats,
    pub timings: SearchTimings,
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|s| s.objective)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Feasibility(#[from] FeasError),
}

/// Relative gap with the denominator floored at one.
pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    if !upper.is_finite() {
        return f64::INFINITY;
    }
    ((upper - lower) / upper.abs().max(1.0)).max(0.0)
}

struct Node {
    parent_bound: f64,
    sibling: Option<usize>,
    rules: NodeRules,
    disaggregated: bool,
}

#[derive(PartialEq)]
struct Open {
    bound: f64,
    id: usize,
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // Smallest bound first, then smallest id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

enum Generation {
    Converged(MasterSolution),
    Interrupted,
}

enum NodeOutcome {
    Done,
    Branched(f64, Branching),
    Interrupted,
}

struct Search<'a> {
    inst: &'a Instance,
    config: &'a SearchConfig,
    pool: ColumnPool,
    cuts: Vec<Cut>,
    no_goods: Vec<Vec<ColumnKey>>,
    nodes: Vec<Node>,
    incumbent: Option<Solution>,
    stats: SearchStats,
    timings: SearchTimings,
    start: Instant,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn upper(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective)
    }

    fn prunable(&self, bound: f64) -> bool {
        let ub = self.upper();
        ub.is_finite() && bound >= ub - self.config.gap_tolerance * ub.abs().max(1.0)
    }

    /// Above this bound the node holds no plan at all: a cheapest plan keeps
    /// only routes that serve a task alone, are forced, or meet a tour-count
    /// lower bound.
    fn cost_cap(&self, id: usize) -> f64 {
        let rules = &self.nodes[id].rules;
        let kept = rules.forced.len()
            + rules
                .tour_counts
                .iter()
                .filter(|b| !b.upper)
                .map(|b| b.bound.max(0.0) as usize)
                .sum::<usize>();
        let cap = plan_cost_cap(self.inst, kept);
        cap + self.config.gap_tolerance * cap.max(1.0)
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn is_integral(&self, sol: &MasterSolution) -> bool {
        sol.values.iter().all(|&(_, v)| (v - v.round()).abs() <= self.config.integrality)
    }

    fn column_generation(&mut self, master: &mut RestrictedMaster) -> Result<Generation, SearchError> {
        let mut pricing = self.config.pricing.clone();
        pricing.deadline = self.deadline;
        if !self.no_goods.is_empty() {
            pricing.allow_split = false;
        }
        loop {
            let sol = master.solve(self.inst)?;
            self.stats.lp_solves += 1;
            if self.expired() {
                return Ok(Generation::Interrupted);
            }
            let t = Instant::now();
            let ctx = PricingContext {
                inst: self.inst,
                duals: &sol.duals,
                rules: master.rules(),
                cuts: master.cuts(),
            };
            let out = price(ctx, master.kind(), &pricing);
            self.timings.pricing_secs += t.elapsed().as_secs_f64();
            self.timings.pricing_rounds += 1;
            self.stats.pricing.merge(&out.stats);
            if !out.complete {
                return Ok(Generation::Interrupted);
            }
            let mut added = false;
            for pc in out.columns {
                if pc.reduced_cost >= -pricing.tolerance {
                    continue;
                }
                let (idx, _) = self.pool.insert(pc.column);
                added |= master.add_column(self.inst, &self.pool, idx);
            }
            if !added {
                return Ok(Generation::Converged(sol));
            }
        }
    }

    fn root_cuts(&mut self, master: &mut RestrictedMaster, mut sol: MasterSolution) -> Result<Generation, SearchError> {
        let opts = SeparationOptions {
            cover_rows: self.config.separation.cover_rows && shortcut_safe(self.inst),
            ..self.config.separation.clone()
        };
        while self.cuts.len() < self.config.max_cuts && !self.is_integral(&sol) {
            let support = aggregate_support(sol.values.iter().map(|&(idx, v)| (self.pool.get(idx), v)));
            let Some(cut) = separate(self.inst, &support, &opts) else {
                break;
            };
            master.add_cut(self.inst, &self.pool, cut.clone());
            self.cuts.push(cut);
            self.stats.cuts_added += 1;
            sol = match self.column_generation(master)? {
                Generation::Converged(s) => s,
                Generation::Interrupted => return Ok(Generation::Interrupted),
            };
        }
        Ok(Generation::Converged(sol))
    }

    fn accept(&mut self, sol: Solution) {
        if sol.objective < self.upper() - 1e-9 {
            self.stats.nodes_to_incumbent = self.stats.nodes;
            self.timings.incumbent_secs = self.start.elapsed().as_secs_f64();
            self.incumbent = Some(sol);
        }
    }

    fn selected(&self, sol: &MasterSolution) -> Vec<Column> {
        let mut out = Vec::new();
        for &(idx, v) in &sol.values {
            for _ in 0..v.round() as usize {
                out.push(self.pool.get(idx).clone());
            }
        }
        out
    }

    fn process(&mut self, id: usize) -> Result<NodeOutcome, SearchError> {
        let root = id == 0;
        loop {
            let kind = if self.nodes[id].disaggregated {
                MasterKind::Disaggregated
            } else {
                MasterKind::Aggregated
            };
            if kind == MasterKind::Disaggregated {
                self.pool.expand_compositions(self.inst);
            }
            let mut master = RestrictedMaster::new(self.inst, kind, &self.pool, &self.nodes[id].rules, &self.cuts, &self.no_goods);
            let mut sol = match self.column_generation(&mut master)? {
                Generation::Converged(s) => s,
                Generation::Interrupted => return Ok(NodeOutcome::Interrupted),
            };
            if root && self.stats.root_lb_before_cuts.is_none() {
                self.stats.root_lb_before_cuts = Some(sol.objective);
            }
            if root && self.config.features.cuts() {
                sol = match self.root_cuts(&mut master, sol)? {
                    Generation::Converged(s) => s,
                    Generation::Interrupted => return Ok(NodeOutcome::Interrupted),
                };
            }
            if root {
                self.stats.root_lb = Some(sol.objective);
                self.timings.root_secs = self.start.elapsed().as_secs_f64();
            }
            let count = |s: &mut SearchStats| match kind {
                MasterKind::Aggregated => s.armp_nodes += 1,
                MasterKind::Disaggregated => s.drmp_nodes += 1,
            };
            if self.prunable(sol.objective) || sol.objective > self.cost_cap(id) {
                count(&mut self.stats);
                return Ok(NodeOutcome::Done);
            }
            if !self.is_integral(&sol) {
                count(&mut self.stats);
                let b = branch(&self.pool, &self.nodes[id].rules, &sol.values, self.config.features.finish_branching(), self.config.integrality);
                return Ok(match b {
                    Some(b) => NodeOutcome::Branched(sol.objective, b),
                    // Only the artificial column is fractional: no real plan here.
                    None => NodeOutcome::Done,
                });
            }
            if sol.values.iter().any(|&(idx, _)| self.pool.get(idx).artificial) {
                count(&mut self.stats);
                return Ok(NodeOutcome::Done);
            }
            let mut columns = self.selected(&sol);
            sort_plan(&mut columns);
            match kind {
                MasterKind::Disaggregated => {
                    count(&mut self.stats);
                    if let Some(s) = Solution::assemble(self.inst, columns, None) {
                        self.accept(s);
                    }
                    return Ok(NodeOutcome::Done);
                }
                MasterKind::Aggregated => {
                    let routes: Vec<FlowRoute> = columns.iter().map(|c| FlowRoute::from_column(self.inst, c)).collect();
                    let res = feasibility_check(&routes, &self.inst.workforce.per_level, &MipOptions::default())?;
                    if res.feasible {
                        count(&mut self.stats);
                        if let Some(s) = Solution::assemble(self.inst, columns, Some(res.flows)) {
                            self.accept(s);
                        }
                        return Ok(NodeOutcome::Done);
                    }
                    self.stats.disaggregated_infeasible += 1;
                    if self.config.features.switch() {
                        self.nodes[id].disaggregated = true;
                        if let Some(sib) = self.nodes[id].sibling {
                            self.nodes[sib].disaggregated = true;
                        }
                    } else {
                        let mut keys: Vec<ColumnKey> = columns.iter().map(|c| c.key()).collect();
                        keys.sort();
                        keys.dedup();
                        self.no_goods.push(keys);
                        self.stats.no_goods += 1;
                    }
                }
            }
        }
    }

    fn run(&mut self) -> Result<SolveResult, SearchError> {
        self.nodes.push(Node {
            parent_bound: f64::NEG_INFINITY,
            sibling: None,
            rules: NodeRules::default(),
            disaggregated: false,
        });
        let mut open = BinaryHeap::new();
        open.push(Open {
            bound: f64::NEG_INFINITY,
            id: 0,
        });
        let mut interrupted: Option<f64> = None;
        while let Some(node) = open.pop() {
            if self.prunable(node.bound) {
                continue;
            }
            let over_nodes = self.config.node_limit.is_some_and(|n| self.stats.nodes >= n);
            if self.expired() || over_nodes {
                interrupted = Some(node.bound);
                break;
            }
            self.stats.nodes += 1;
            match self.process(node.id)? {
                NodeOutcome::Done => {}
                NodeOutcome::Interrupted => {
                    interrupted = Some(self.nodes[node.id].parent_bound);
                    break;
                }
                NodeOutcome::Branched(bound, b) => {
                    match b.rule {
                        BranchRule::FinishTime => self.stats.finish_branchings += 1,
                        BranchRule::TourCount => self.stats.tour_branchings += 1,
                        BranchRule::Variable => self.stats.variable_branchings += 1,
                    }
                    let disaggregated = self.nodes[node.id].disaggregated;
                    let l = self.nodes.len();
                    for (k, rules) in [b.left, b.right].into_iter().enumerate() {
                        self.nodes.push(Node {
                            parent_bound: bound,
                            sibling: Some(if k == 0 { l + 1 } else { l }),
                            rules,
                            disaggregated,
                        });
                        open.push(Open { bound, id: l + k });
                    }
                }
            }
        }
        let mut lower = match interrupted {
            Some(b) => open.iter().map(|o| o.bound).fold(b, f64::min),
            None => self.upper(),
        };
        if let Some(root) = self.stats.root_lb.or(self.stats.root_lb_before_cuts) {
            if interrupted.is_some() {
                lower = lower.max(root.min(self.upper()));
            }
        }
        if interrupted.is_some() {
            if let Some(h) = early_termination(self.inst, &mut self.pool, self.config.heuristic_limit) {
                if h.objective < self.upper() - 1e-9 {
                    self.stats.heuristic_used = true;
                }
                self.accept(h);
            }
        }
        let upper = self.upper();
        let lower = lower.min(upper);
        let gap = relative_gap(upper, lower);
        let status = match (&self.incumbent, interrupted) {
            (None, None) => SolveStatus::Infeasible,
            (Some(_), None) => SolveStatus::Optimal,
            (Some(_), Some(_)) if gap <= self.config.gap_tolerance => SolveStatus::Optimal,
            _ => SolveStatus::TimeLimit,
        };
        self.stats.solved_at_root = status == SolveStatus::Optimal && self.stats.nodes == 1;
        self.stats.columns = self.pool.len();
        self.timings.total_secs = self.start.elapsed().as_secs_f64();
        Ok(SolveResult {
            status,
            incumbent: self.incumbent.take(),
            upper_bound: upper,
            lower_bound: if status == SolveStatus::Infeasible { f64::INFINITY } else { lower },
            gap: if status == SolveStatus::Infeasible { 0.0 } else { gap },
            stats: std::mem::take(&mut self.stats),
            timings: std::mem::take(&mut self.timings),
        })
    }
}

/// Solves an instance to optimality or until the time limit, then falls
/// back to the early-termination heuristic.
pub fn solve(inst: &Instance, config: &SearchConfig) -> Result<SolveResult, SearchError> {
    let start = Instant::now();
    let mut search = Search {
        inst,
        config,
        pool: ColumnPool::initial(inst),
        cuts: Vec::new(),
        no_goods: Vec::new(),
        nodes: Vec::new(),
        incumbent: None,
        stats: SearchStats::default(),
        timings: SearchTimings::default(),
        start,
        deadline: config.time_limit.map(|d| start + d),
    };
    search.run()
}

/// Integer disaggregated master over every pooled route in every
/// composition of its profile.
pub fn early_termination(inst: &Instance, pool: &mut ColumnPool, limit: Duration) -> Option<Solution> {
    pool.expand_compositions(inst);
    let master = RestrictedMaster::new(inst, MasterKind::Disaggregated, pool, &NodeRules::default(), &[], &[]);
    let opts = MipOptions {
        time_limit: Some(limit),
        ..MipOptions::default()
    };
    let sol = master.solve_integer(&opts).ok()??;
    let columns: Vec<Column> = sol.columns.iter().map(|&idx| pool.get(idx).clone()).collect();
    if columns.iter().any(|c| c.artificial) {
        return None;
    }
    Solution::assemble(inst, columns, None)
}

use crate::distributions::Time;
use crate::model::{leave_time_range, propagate_finish, return_time, task_feasible, ColumnKey, Instance};
use crate::Distribution;

use super::graph::{build_graph, PricingGraph};
use super::label::{blocked_subset, Label, SinkLabel, TaskSet};
use super::PricingContext;

/// How workforce usage is charged and which dominance rule applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkMode {
    /// Cumulative requirements `ξ_q`; labels compare full reduced costs.
    Aggregated,
    /// Exact composition `s`. With `offset`, dominance compares costs net of
    /// the workforce charge and sink labels are re-priced for every
    /// composition of the profile; without it the network prices `s` alone.
    Composition { composition: usize, offset: bool },
}

/// Which cost comparison a dominance test uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominanceRule {
    /// Plain reduced cost.
    Plain,
    /// Reduced cost minus workforce charge, plus `tl1 >= tl2`.
    Offset,
}

#[derive(Clone, Debug)]
enum Special {
    Forbid(ColumnKey),
    Penalty(ColumnKey, f64),
}

impl Special {
    fn key(&self) -> &ColumnKey {
        match self {
            Special::Forbid(k) | Special::Penalty(k, _) => k,
        }
    }
}

/// A route candidate with its reduced cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub tl: Time,
    pub path: Vec<usize>,
    pub composition: Option<usize>,
    pub reduced_cost: f64,
}

/// Pricing network of one profile with the duals folded into arc weights.
pub struct Network<'a> {
    pub(crate) ctx: PricingContext<'a>,
    pub graph: PricingGraph,
    pub mode: NetworkMode,
    demand: Vec<u32>,
    strict: bool,
    reset: bool,
    specials: Vec<Special>,
    /// `min_k max T^k` between locations.
    reach: Vec<Vec<Time>>,
}

impl<'a> Network<'a> {
    pub fn new(ctx: PricingContext<'a>, profile: usize, mode: NetworkMode, allow_split: bool) -> Self {
        let inst = ctx.inst;
        let rules = ctx.rules;
        let has_lower_tours = rules.tour_counts.iter().any(|t| !t.upper);
        let mut specials: Vec<Special> = rules
            .forbidden
            .iter()
            .filter(|k| k.profile == profile)
            .cloned()
            .map(Special::Forbid)
            .collect();
        specials.extend(
            ctx.duals
                .special
                .iter()
                .filter(|(k, _)| k.profile == profile)
                .map(|(k, p)| Special::Penalty(k.clone(), *p)),
        );
        let split = allow_split && !has_lower_tours && specials.is_empty();
        let mut graph = build_graph(inst, profile, rules, split);
        graph.sort_successors_by(&ctx.duals.cover);
        let demand = match mode {
            NetworkMode::Aggregated => inst.profiles[profile].xi.clone(),
            NetworkMode::Composition { composition, .. } => inst.compositions(profile)[composition].0.clone(),
        };
        let windows_below = rules.finish_windows.values().any(|&(lo, _)| lo > Time::MIN);
        let tm = inst.travel();
        let l = tm.locations();
        let reach = (0..l)
            .map(|a| (0..l).map(|b| tm.over_bins(a, b, |e| e.max, Time::min)).collect())
            .collect();
        Self {
            ctx,
            graph,
            mode,
            demand,
            strict: !tm.bins_monotone() || windows_below || has_lower_tours,
            reset: tm.reset_safe(),
            specials,
            reach,
        }
    }

    pub fn profile(&self) -> usize {
        self.graph.profile
    }

    fn inst(&self) -> &'a Instance {
        self.ctx.inst
    }

    /// Whether dominance also requires identical finish distributions.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn rule(&self) -> DominanceRule {
        match self.mode {
            NetworkMode::Composition { offset: true, .. } => DominanceRule::Offset,
            _ => DominanceRule::Plain,
        }
    }

    /// Label serving `task` first after leaving the depot at `tl`.
    pub fn initial_label(&self, task: usize, tl: Time) -> Option<Label> {
        if !self.graph.contains(task) {
            return None;
        }
        self.step(None, tl, task)
    }

    /// Every feasible initial label, ordered by leave time then task.
    pub fn initial_labels(&self) -> Vec<Label> {
        let inst = self.inst();
        let mut out = Vec::new();
        for &i in &self.graph.nodes {
            let Some(exec) = inst.tasks[i].exec_time(self.profile()) else {
                continue;
            };
            let (mut lo, hi) = leave_time_range(inst, i, exec);
            // Leaving early only lengthens occupancy, unless that covers a
            // tour-count point with a rewarding dual.
            if let Some(tau) = self.ctx.rules.tour_counts.iter().filter(|t| !t.upper).map(|t| t.tau).min() {
                lo = lo.min(tau.max(0));
            }
            out.extend((lo..=hi).filter_map(|tl| self.step(None, tl, i)));
        }
        out.sort_by_key(|l| (l.tl, l.node()));
        out
    }

    /// Extends `label` along the arc to `task`. Elementarity is the
    /// caller's concern; unreachable tasks are rejected here.
    pub fn extend(&self, label: &Label, task: usize) -> Option<Label> {
        if !self.graph.has_arc(label.node(), task) || label.unreachable.contains(task) {
            return None;
        }
        self.step(Some(label), label.tl, task)
    }

    fn step(&self, prev: Option<&Label>, tl: Time, j: usize) -> Option<Label> {
        let inst = self.inst();
        let q = self.profile();
        let t = &inst.tasks[j];
        let exec = t.exec_time(q)?;
        let start = Distribution::point(tl);
        let (prev_f, prev_g, from) = match prev {
            Some(l) => (&l.finish, l.gamma_finish, inst.tasks[l.node()].location),
            None => (&start, tl, inst.depot),
        };
        let st = propagate_finish(inst, prev_f, prev_g, from, t.location, exec, t.es, t.lf_ext).ok()?;
        if !task_feasible(inst, j, &st.finish) {
            return None;
        }
        let (lo, hi) = self.ctx.rules.window(j);
        if st.gamma_finish < lo || st.gamma_finish > hi {
            return None;
        }
        let seg_from = prev.map_or(tl, |l| l.gamma_finish + 1);
        let mut carry = prev.map_or_else(|| vec![0.0; self.ctx.cuts.len()], |l| l.carry.clone());
        let charge = self.ctx.duals.workforce_charge(&self.demand, seg_from, st.gamma_finish);
        let cost = prev.map_or(0.0, |l| l.cost) + inst.task_cost(j, &st.finish) - self.ctx.duals.cover[j] + charge
            - self.tour_reward(seg_from, st.gamma_finish)
            + self.cut_step(&mut carry, Some(j), seg_from, st.gamma_finish);
        let n = inst.num_tasks();
        let mut visited = prev.map_or_else(|| TaskSet::new(n), |l| l.visited.clone());
        visited.insert(j);
        let mut unreachable = prev.map_or_else(|| TaskSet::new(n), |l| l.unreachable.clone());
        if self.reset {
            let q_alpha = (inst.alpha > 0.0).then(|| st.finish.quantile(inst.alpha).unwrap_or(Time::MAX));
            for &i in &self.graph.nodes {
                if !unreachable.contains(i) && self.unreachable_from(&st.finish, q_alpha, t.location, i) {
                    unreachable.insert(i);
                }
            }
        }
        let mut path = prev.map_or_else(Vec::new, |l| l.path.clone());
        path.push(j);
        let special_prefix = self
            .specials
            .iter()
            .any(|s| s.key().tl == tl && s.key().tasks.starts_with(&path));
        Some(Label {
            tl,
            path,
            median: st.finish.median(),
            finish: st.finish,
            gamma_finish: st.gamma_finish,
            cost,
            charge: prev.map_or(0.0, |l| l.charge) + charge,
            carry,
            visited,
            unreachable,
            special_prefix,
        })
    }

    /// The two reset clauses: even the direct trip to `i` overruns `LF_e`
    /// with positive probability, or misses the service level.
    fn unreachable_from(&self, f: &Distribution, q_alpha: Option<Time>, loc: usize, i: usize) -> bool {
        let inst = self.inst();
        let ti = &inst.tasks[i];
        let Some(p) = ti.exec_time(self.profile()) else {
            return true;
        };
        if f.max_time() + self.reach[loc][ti.location] > ti.lf_ext - p {
            return true;
        }
        match q_alpha {
            Some(qa) => qa.saturating_add(inst.spec().travel.det[loc][ti.location]) > ti.lf - p,
            None => false,
        }
    }

    /// Sum of tour-count duals whose `τ*` falls in `[from, to]`.
    fn tour_reward(&self, from: Time, to: Time) -> f64 {
        self.ctx
            .duals
            .tours
            .iter()
            .filter(|&&(tau, _)| from <= tau && tau <= to)
            .map(|&(_, rho)| rho)
            .sum()
    }

    /// Adds the cut-row weights of `task` and of `[from, to]` to the carries
    /// and returns the cost of the whole units that overflow.
    fn cut_step(&self, carry: &mut [f64], task: Option<usize>, from: Time, to: Time) -> f64 {
        let xi = &self.inst().profiles[self.profile()].xi;
        let mut cost = 0.0;
        for (g, cut) in self.ctx.cuts.iter().enumerate() {
            let mut w = task.map_or(0.0, |i| cut.task_u[i]);
            if from <= to {
                for (k, &x) in xi.iter().enumerate() {
                    let s: f64 = cut.workforce_u.range((k, from)..=(k, to)).map(|(_, u)| u).sum();
                    w += x as f64 * s;
                }
            }
            let total = carry[g] + w;
            let whole = (total + 1e-9).floor();
            carry[g] = (total - whole).max(0.0);
            cost += self.ctx.duals.cuts.get(g).copied().unwrap_or(0.0) * whole;
        }
        cost
    }

    /// Returns to the depot.
    pub fn close(&self, label: &Label) -> SinkLabel {
        let inst = self.inst();
        let loc = inst.tasks[label.node()].location;
        let tr = return_time(inst, loc, &label.finish, label.gamma_finish);
        let from = label.gamma_finish + 1;
        let charge = self.ctx.duals.workforce_charge(&self.demand, from, tr);
        let mut carry = label.carry.clone();
        let cost = label.cost + charge - self.tour_reward(from, tr) + self.cut_step(&mut carry, None, from, tr);
        SinkLabel {
            tl: label.tl,
            path: label.path.clone(),
            tr,
            cost,
            charge: label.charge + charge,
        }
    }

    /// Reduced cost of a sink label as a column with `composition`, or
    /// `None` when that column is forbidden.
    pub fn column_cost(&self, sink: &SinkLabel, composition: Option<usize>) -> Option<f64> {
        let mut rc = match (self.mode, composition) {
            (NetworkMode::Composition { composition: own, offset: true }, Some(s)) if s != own => {
                let demand = &self.inst().compositions(self.profile())[s].0;
                sink.cost - sink.charge + self.ctx.duals.workforce_charge(demand, sink.tl, sink.tr)
            }
            _ => sink.cost,
        };
        for sp in &self.specials {
            let k = sp.key();
            if k.tl != sink.tl || k.tasks != sink.path || k.composition.is_some_and(|c| Some(c) != composition) {
                continue;
            }
            match sp {
                Special::Forbid(_) => return None,
                Special::Penalty(_, p) => rc += p,
            }
        }
        Some(rc)
    }

    /// Cheapest column a sink label stands for in this network.
    pub fn best_column(&self, sink: &SinkLabel) -> Option<Candidate> {
        let compositions: Vec<Option<usize>> = match self.mode {
            NetworkMode::Aggregated => vec![None],
            NetworkMode::Composition { composition, offset: false } => vec![Some(composition)],
            NetworkMode::Composition { offset: true, .. } => {
                let per_level = &self.inst().workforce.per_level;
                self.inst()
                    .compositions(self.profile())
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.0.iter().zip(per_level).all(|(a, n)| a <= n))
                    .map(|(s, _)| Some(s))
                    .collect()
            }
        };
        let mut best: Option<Candidate> = None;
        for s in compositions {
            let Some(rc) = self.column_cost(sink, s) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| rc < b.reduced_cost - 1e-12) {
                best = Some(Candidate {
                    tl: sink.tl,
                    path: sink.path.clone(),
                    composition: s,
                    reduced_cost: rc,
                });
            }
        }
        best
    }

    /// Dominance under this network's rule, with every task critical.
    pub fn dominates(&self, a: &Label, b: &Label) -> bool {
        let all = TaskSet::full(self.inst().num_tasks());
        self.dominates_under(a, b, self.rule(), &all, false)
    }

    /// Dominance test. `critical` masks the task resources; with `relaxed`
    /// (state-space relaxation) the path length must not exceed `b`'s.
    pub fn dominates_under(&self, a: &Label, b: &Label, rule: DominanceRule, critical: &TaskSet, relaxed: bool) -> bool {
        if a.special_prefix || a.node() != b.node() || a.median != b.median || a.gamma_finish != b.gamma_finish {
            return false;
        }
        if rule == DominanceRule::Offset && a.tl < b.tl {
            return false;
        }
        if relaxed && a.path.len() > b.path.len() {
            return false;
        }
        if !blocked_subset(&a.visited, &a.unreachable, &b.visited, &b.unreachable, critical) {
            return false;
        }
        let mut ca = a.cost;
        let mut cb = b.cost;
        if rule == DominanceRule::Offset {
            ca -= a.charge;
            cb -= b.charge;
        }
        for (g, (x, y)) in a.carry.iter().zip(&b.carry).enumerate() {
            if x > &(y + 1e-12) {
                ca += self.ctx.duals.cuts.get(g).copied().unwrap_or(0.0);
            }
        }
        if ca > cb + 1e-9 {
            return false;
        }
        if self.strict {
            return a.finish.approx_eq(&b.finish);
        }
        let t = &self.inst().tasks[a.node()];
        let lo = t.es + t.exec_time(self.profile()).unwrap_or(0);
        a.finish.dominates_stochastically(&b.finish, lo, t.lf_ext)
    }
}

use crate::distributions::Time;
use crate::master::NodeRules;
use crate::model::Instance;

/// Task graph of one profile. Depot source and sink are implicit: every
/// task can start and end a route.
#[derive(Clone, Debug, PartialEq)]
pub struct PricingGraph {
    pub profile: usize,
    /// Tasks of the profile minus those fixed by forced routes.
    pub nodes: Vec<usize>,
    in_graph: Vec<bool>,
    succ: Vec<Vec<usize>>,
}

impl PricingGraph {
    pub fn contains(&self, task: usize) -> bool {
        self.in_graph.get(task).copied().unwrap_or(false)
    }

    pub fn successors(&self, task: usize) -> &[usize] {
        &self.succ[task]
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    pub fn num_arcs(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Reorders every successor list by decreasing `key`, ties by task id.
    pub(crate) fn sort_successors_by(&mut self, key: &[f64]) {
        for s in &mut self.succ {
            s.sort_by(|&a, &b| key[b].total_cmp(&key[a]).then(a.cmp(&b)));
        }
    }
}

/// Builds the graph of `profile` under the node's branching rules.
///
/// `split` enables the depot-split pruning. It must be off when splitting a
/// route could change feasibility in the master, i.e. with lower bounds on
/// tour counts or with forbidden or penalised routes.
pub fn build_graph(inst: &Instance, profile: usize, rules: &NodeRules, split: bool) -> PricingGraph {
    let n = inst.num_tasks();
    let forced = rules.forced_tasks();
    let nodes: Vec<usize> = inst
        .profile_tasks(profile)
        .iter()
        .copied()
        .filter(|i| !forced.contains(i))
        .collect();
    let mut in_graph = vec![false; n];
    for &i in &nodes {
        in_graph[i] = true;
    }
    let mut succ = vec![Vec::new(); n];
    for &i in &nodes {
        for &j in &nodes {
            if i != j && !never_feasible(inst, profile, i, j) && !(split && splittable(inst, i, j)) {
                succ[i].push(j);
            }
        }
    }
    PricingGraph {
        profile,
        nodes,
        in_graph,
        succ,
    }
}

/// No finish of `i` can be followed by a feasible start of `j`, whatever
/// the bin: even leaving `i` at its earliest finish, `j` misses its service
/// level or may overrun its extended window.
pub fn never_feasible(inst: &Instance, profile: usize, i: usize, j: usize) -> bool {
    let (ti, tj) = (&inst.tasks[i], &inst.tasks[j]);
    let (Some(pi), Some(pj)) = (ti.exec_time(profile), tj.exec_time(profile)) else {
        return true;
    };
    let ef = ti.es + pi;
    let tm = inst.travel();
    (0..tm.bins()).all(|b| {
        let e = tm.edge(b, ti.location, tj.location);
        (inst.alpha > 0.0 && ef + e.q_alpha > tj.lf - pj) || ef + e.max > tj.lf_ext - pj
    })
}

/// Any route using `(i, j)` can be split at the depot into two routes with
/// the same finishes: `j` is always waited for, even after a return trip.
pub fn splittable(inst: &Instance, i: usize, j: usize) -> bool {
    let (ti, tj) = (&inst.tasks[i], &inst.tasks[j]);
    let tm = inst.travel();
    let d = inst.depot;
    let direct = tm.over_bins(ti.location, tj.location, |e| e.max, Time::max);
    let home = tm.over_bins(ti.location, d, |e| e.q_gamma, Time::max);
    let out = tm.over_bins(d, tj.location, |e| e.max, Time::max);
    ti.lf_ext + direct <= tj.es && ti.lf_ext + home + 1 + out <= tj.es
}

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use crate::distributions::Time;

use super::label::{first_repeated, Label, SinkLabel, TaskSet};
use super::network::{Candidate, Network};
use super::PricingStats;

/// Settings of one labeling run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Only the first `n` successors of every node (sorted by dual value).
    pub arc_limit: Option<usize>,
    /// Tasks whose resources are enforced; the rest may repeat.
    pub critical: TaskSet,
    /// Whether `critical` is a proper relaxation (adds the path-length test).
    pub relaxed: bool,
    pub dominance: bool,
    pub deadline: Option<Instant>,
}

impl RunOptions {
    /// Exact run: all arcs, all tasks critical, dominance on.
    pub fn exact(n: usize) -> Self {
        Self {
            arc_limit: None,
            critical: TaskSet::full(n),
            relaxed: false,
            dominance: true,
            deadline: None,
        }
    }
}

impl Network<'_> {
    /// Forward labeling from `starts`, oldest label first. Every label that
    /// is still undominated when processed is closed at the depot and handed
    /// to `sink`. Returns false if the deadline cut the run short.
    pub fn run(&self, starts: &[Label], opts: &RunOptions, stats: &mut PricingStats, mut sink: impl FnMut(SinkLabel)) -> bool {
        stats.runs += 1;
        let mut arena: Vec<Label> = Vec::new();
        let mut alive: Vec<bool> = Vec::new();
        let mut buckets: HashMap<(usize, Time, Time), Vec<usize>> = HashMap::new();
        let mut queue = VecDeque::new();
        let rule = self.rule();
        let mut insert = |l: Label, arena: &mut Vec<Label>, alive: &mut Vec<bool>, queue: &mut VecDeque<usize>, stats: &mut PricingStats| {
            stats.labels_created += 1;
            if opts.dominance {
                let bucket = buckets.entry((l.node(), l.median, l.gamma_finish)).or_default();
                if bucket
                    .iter()
                    .any(|&id| self.dominates_under(&arena[id], &l, rule, &opts.critical, opts.relaxed))
                {
                    stats.labels_dominated += 1;
                    return;
                }
                for &id in bucket.iter() {
                    if self.dominates_under(&l, &arena[id], rule, &opts.critical, opts.relaxed) {
                        alive[id] = false;
                        stats.labels_dominated += 1;
                    }
                }
                bucket.retain(|&id| alive[id]);
                bucket.push(arena.len());
            }
            queue.push_back(arena.len());
            arena.push(l);
            alive.push(true);
        };
        for l in starts {
            insert(l.clone(), &mut arena, &mut alive, &mut queue, stats);
        }
        let mut popped = 0usize;
        while let Some(id) = queue.pop_front() {
            if !alive[id] {
                continue;
            }
            popped += 1;
            if popped % 256 == 0 && opts.deadline.is_some_and(|d| Instant::now() >= d) {
                stats.timed_out = true;
                return false;
            }
            stats.labels_extended += 1;
            let label = arena[id].clone();
            sink(self.close(&label));
            let succ = self.graph.successors(label.node());
            let succ = match opts.arc_limit {
                Some(n) => &succ[..n.min(succ.len())],
                None => succ,
            };
            for &j in succ {
                if label.visits(j) && opts.critical.contains(j) {
                    continue;
                }
                if let Some(next) = self.extend(&label, j) {
                    insert(next, &mut arena, &mut alive, &mut queue, stats);
                }
            }
        }
        true
    }

    /// Most negative column reachable from `starts`, by decremental state
    /// space relaxation when `dssr` is set. Returns the candidate (if any)
    /// and whether the search completed.
    pub fn best_from(
        &self,
        starts: &[Label],
        arc_limit: Option<usize>,
        dssr: bool,
        dominance: bool,
        deadline: Option<Instant>,
        tolerance: f64,
        stats: &mut PricingStats,
    ) -> (Option<Candidate>, bool) {
        let n = self.ctx.inst.num_tasks();
        let mut opts = RunOptions {
            arc_limit,
            critical: if dssr { TaskSet::new(n) } else { TaskSet::full(n) },
            relaxed: dssr,
            dominance,
            deadline,
        };
        loop {
            let mut best: Option<Candidate> = None;
            let done = self.run(starts, &opts, stats, |s| {
                if let Some(c) = self.best_column(&s) {
                    if c.reduced_cost < -tolerance && best.as_ref().is_none_or(|b| better(&c, b)) {
                        best = Some(c);
                    }
                }
            });
            if !done {
                return (best.filter(|c| first_repeated(&c.path).is_none()), false);
            }
            let Some(c) = best else {
                return (None, true);
            };
            match first_repeated(&c.path) {
                Some(v) if !opts.critical.contains(v) => {
                    stats.dssr_rounds += 1;
                    opts.critical.insert(v);
                }
                _ => return (Some(c), true),
            }
        }
    }
}

/// Strictly lower reduced cost, ties broken towards the smaller key.
fn better(a: &Candidate, b: &Candidate) -> bool {
    if (a.reduced_cost - b.reduced_cost).abs() > 1e-12 {
        return a.reduced_cost < b.reduced_cost;
    }
    (a.tl, &a.path, a.composition) < (b.tl, &b.path, b.composition)
}

/// Splits initial labels into groups of `size` consecutive leave times
/// (the last group takes what remains) ordered by their cheapest label.
pub fn containers(starts: &[Label], size: usize) -> Vec<Vec<Label>> {
    let mut tls: Vec<Time> = starts.iter().map(|l| l.tl).collect();
    tls.dedup();
    let mut groups: Vec<Vec<Label>> = tls
        .chunks(size.max(1))
        .map(|chunk| starts.iter().filter(|l| chunk.contains(&l.tl)).cloned().collect())
        .collect();
    let key = |g: &Vec<Label>| g.iter().map(|l| l.cost).fold(f64::INFINITY, f64::min);
    groups.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a[0].tl.cmp(&b[0].tl)));
    groups
}

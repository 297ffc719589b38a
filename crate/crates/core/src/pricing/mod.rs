//! Column generation subproblem: a resource-constrained elementary shortest
//! path per profile, solved by forward labeling over stochastic finish
//! times.
//!
//! Reduced costs are split into segments that never overlap: the first task
//! is charged from the leave time to its ω_γ finish, every later task from
//! one past its predecessor's ω_γ finish to its own, and the return trip up
//! to the return time. Summed, the workforce charge covers exactly the
//! column's occupancy `[tl, tr]`.
//!
//! For the disaggregated master one network per profile is solved with a
//! fixed composition and the sink labels are re-priced for every other
//! composition of that profile.

mod graph;
mod label;
mod labeling;
mod network;

use std::time::Instant;

use serde::Serialize;

use crate::cuts::Cut;
use crate::master::{Duals, MasterKind, NodeRules};
use crate::model::{Column, Instance};

pub use graph::{build_graph, never_feasible, splittable, PricingGraph};
pub use label::{first_repeated, Label, SinkLabel, TaskSet};
pub use labeling::{containers, RunOptions};
pub use network::{Candidate, DominanceRule, Network, NetworkMode};

/// Everything a pricing round reads. Shared between worker threads.
#[derive(Clone, Copy, Debug)]
pub struct PricingContext<'a> {
    pub inst: &'a Instance,
    pub duals: &'a Duals,
    pub rules: &'a NodeRules,
    pub cuts: &'a [Cut],
}

#[derive(Clone, Debug)]
pub struct PricingConfig {
    /// Container and limited-arc heuristics before the exact run.
    pub accelerate: bool,
    pub container_size: usize,
    pub arc_limit: usize,
    pub dssr: bool,
    /// Off only for testing.
    pub dominance: bool,
    /// Depot-split arc pruning; callers turn it off when the master holds
    /// rows that a split route could violate.
    pub allow_split: bool,
    pub tolerance: f64,
    pub threads: usize,
    pub deadline: Option<Instant>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            accelerate: true,
            container_size: 5,
            arc_limit: 4,
            dssr: true,
            dominance: true,
            allow_split: true,
            tolerance: 1e-6,
            threads: 1,
            deadline: None,
        }
    }
}

/// Labeling counters, summed over profiles and rounds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PricingStats {
    pub rounds: usize,
    pub runs: usize,
    pub labels_created: usize,
    pub labels_dominated: usize,
    pub labels_extended: usize,
    pub dssr_rounds: usize,
    pub heuristic_columns: usize,
    pub exact_columns: usize,
    pub timed_out: bool,
}

impl PricingStats {
    pub fn merge(&mut self, o: &PricingStats) {
        self.rounds += o.rounds;
        self.runs += o.runs;
        self.labels_created += o.labels_created;
        self.labels_dominated += o.labels_dominated;
        self.labels_extended += o.labels_extended;
        self.dssr_rounds += o.dssr_rounds;
        self.heuristic_columns += o.heuristic_columns;
        self.exact_columns += o.exact_columns;
        self.timed_out |= o.timed_out;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricedColumn {
    pub column: Column,
    pub reduced_cost: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PricingOutcome {
    /// At most one column per profile, in profile order.
    pub columns: Vec<PricedColumn>,
    pub stats: PricingStats,
    /// False when the deadline stopped an exact run; an empty `columns`
    /// then does not prove convergence.
    pub complete: bool,
}

/// Lexicographically smallest composition of a profile.
pub fn reference_composition(inst: &Instance, profile: usize) -> usize {
    let comps = inst.compositions(profile);
    (0..comps.len()).min_by(|&a, &b| comps[a].0.cmp(&comps[b].0)).unwrap_or(0)
}

/// A profile whose cumulative requirement exceeds the workforce at some
/// level can never be staffed.
pub fn profile_staffable(inst: &Instance, profile: usize) -> bool {
    let xi = &inst.profiles[profile].xi;
    (0..inst.levels()).all(|k| xi[k] <= inst.workforce.cumulative(k))
}

/// Network used for `kind`.
pub fn network_for<'a>(ctx: PricingContext<'a>, profile: usize, kind: MasterKind, config: &PricingConfig) -> Network<'a> {
    let mode = match kind {
        MasterKind::Aggregated => NetworkMode::Aggregated,
        MasterKind::Disaggregated => NetworkMode::Composition {
            composition: reference_composition(ctx.inst, profile),
            offset: true,
        },
    };
    Network::new(ctx, profile, mode, config.allow_split)
}

/// Prices one profile: heuristic phases first, then one exact run.
pub fn price_profile(ctx: PricingContext<'_>, profile: usize, kind: MasterKind, config: &PricingConfig) -> (Option<PricedColumn>, PricingStats, bool) {
    let mut stats = PricingStats::default();
    if !profile_staffable(ctx.inst, profile) {
        return (None, stats, true);
    }
    let net = network_for(ctx, profile, kind, config);
    let starts = net.initial_labels();
    if starts.is_empty() {
        return (None, stats, true);
    }
    let solve = |starts: &[Label], limit: Option<usize>, stats: &mut PricingStats| {
        net.best_from(starts, limit, config.dssr, config.dominance, config.deadline, config.tolerance, stats)
    };
    if config.accelerate {
        for group in containers(&starts, config.container_size) {
            let (found, _) = solve(&group, Some(config.arc_limit), &mut stats);
            if let Some(c) = found {
                stats.heuristic_columns += 1;
                return (to_column(ctx.inst, profile, c), stats, true);
            }
            if stats.timed_out {
                return (None, stats, false);
            }
        }
    }
    let (found, complete) = solve(&starts, None, &mut stats);
    if found.is_some() {
        stats.exact_columns += 1;
    }
    (found.and_then(|c| to_column(ctx.inst, profile, c)), stats, complete)
}

fn to_column(inst: &Instance, profile: usize, c: Candidate) -> Option<PricedColumn> {
    let col = Column::build(inst, c.path, profile, c.tl).ok()?;
    let column = match c.composition {
        Some(s) => col.with_composition(s),
        None => col,
    };
    Some(PricedColumn {
        column,
        reduced_cost: c.reduced_cost,
    })
}

/// One pricing round over all profiles, fanned out over `config.threads`.
pub fn price(ctx: PricingContext<'_>, kind: MasterKind, config: &PricingConfig) -> PricingOutcome {
    let q = ctx.inst.num_profiles();
    let threads = config.threads.clamp(1, q.max(1));
    let results: Vec<(Option<PricedColumn>, PricingStats, bool)> = if threads == 1 {
        (0..q).map(|p| price_profile(ctx, p, kind, config)).collect()
    } else {
        let mut slots: Vec<Option<(Option<PricedColumn>, PricingStats, bool)>> = vec![None; q];
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    s.spawn(move || {
                        (t..q)
                            .step_by(threads)
                            .map(|p| (p, price_profile(ctx, p, kind, config)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (p, r) in h.join().expect("pricing worker panicked") {
                    slots[p] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every profile priced")).collect()
    };
    let mut out = PricingOutcome {
        complete: true,
        ..PricingOutcome::default()
    };
    out.stats.rounds = 1;
    for (col, stats, complete) in results {
        out.stats.merge(&stats);
        out.complete &= complete;
        out.columns.extend(col);
    }
    out
}

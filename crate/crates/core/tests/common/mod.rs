//! Brute-force reference solver and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use bpcs_core::cuts::SeparationOptions;
use bpcs_core::instance_gen::{generate_with, GeneratorConfig, ModeSet};
use bpcs_core::model::{Column, Instance};
use bpcs_core::search::{Features, SearchConfig};
use bpcs_lp::{solve_mip, Lp, MipOptions, MipStatus, RowSense};

/// Search without wall-clock limits, so results do not depend on speed.
pub fn exact_config(features: Features) -> SearchConfig {
    SearchConfig {
        time_limit: None,
        separation: SeparationOptions {
            time_limit: None,
            ..SeparationOptions::default()
        },
        ..SearchConfig::with_features(features)
    }
}

/// Two profiles, two skill levels, two time bins, delay support of at most
/// three values.
pub fn tiny(seed: u64, tasks: usize, strength: f64) -> Instance {
    generate_with(&GeneratorConfig::tiny(), 30, tasks, strength, ModeSet::Sf, seed).unwrap()
}

/// Every feasible disaggregated column with at most `max_len` tasks.
pub fn all_columns(inst: &Instance, max_len: usize) -> Vec<Column> {
    let horizon = inst.tasks.iter().map(|t| t.lf_ext).max().unwrap();
    let mut out = Vec::new();
    for q in 0..inst.num_profiles() {
        let tasks = inst.profile_tasks(q).to_vec();
        let mut stack: Vec<Vec<usize>> = tasks.iter().map(|&i| vec![i]).collect();
        while let Some(route) = stack.pop() {
            for tl in 0..=horizon {
                if let Ok(c) = Column::build(inst, route.clone(), q, tl) {
                    for s in 0..inst.compositions(q).len() {
                        out.push(c.with_composition(s));
                    }
                }
            }
            if route.len() < max_len {
                for &j in &tasks {
                    if !route.contains(&j) {
                        let mut r = route.clone();
                        r.push(j);
                        stack.push(r);
                    }
                }
            }
        }
    }
    out
}

/// Optimum of the disaggregated integer program over enumerated columns:
/// cover every task, per-level occupancy within the workforce at every step.
pub fn oracle(inst: &Instance, max_len: usize) -> Option<f64> {
    let cols = all_columns(inst, max_len);
    let mut lp = Lp::new();
    let cover: Vec<usize> = (0..inst.num_tasks()).map(|_| lp.add_row(std::iter::empty(), RowSense::Ge, 1.0)).collect();
    let mut rows = BTreeMap::new();
    for c in &cols {
        let v = lp.add_int_var(0.0, 1.0, c.cost);
        for &i in &c.tasks {
            lp.add_coeff(cover[i], v, 1.0);
        }
        for k in 0..inst.levels() {
            let d = c.level_demand(inst, k);
            if d == 0 {
                continue;
            }
            for tau in c.tl..=c.tr {
                let row = *rows
                    .entry((k, tau))
                    .or_insert_with(|| lp.add_row(std::iter::empty(), RowSense::Le, inst.workforce.per_level[k] as f64));
                lp.add_coeff(row, v, d as f64);
            }
        }
    }
    let sol = solve_mip(&lp, &MipOptions::default(), None).unwrap();
    match sol.status {
        MipStatus::Optimal => sol.objective,
        MipStatus::Infeasible => None,
        s => panic!("oracle ended with {s:?}"),
    }
}

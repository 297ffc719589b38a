//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so the lines always reach the output.
//! A failing criterion is reported but only fails the run when
//! `ACCEPTANCE_STRICT=1` is set.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bpcs_core::feascheck::{construct_flows, feasibility_check, verify_flows, FlowRoute};
use bpcs_core::instance_gen::{generate, GeneratorParams, ModeSet};
use bpcs_core::master::{Duals, NodeRules};
use bpcs_core::model::{enumerate_skill_compositions, Instance, InstanceBuilder, ObjectiveBasis, TimeBins};
use bpcs_core::pricing::{DominanceRule, Network, NetworkMode, PricingContext, PricingStats, RunOptions, TaskSet};
use bpcs_core::search::{solve, Features, SearchConfig, Solution, SolveResult};
use bpcs_core::simulate::{chance_constraints_hold, compare, BinRule, CompareOptions, ComparisonRow};
use bpcs_core::{Distribution, Time};
use bpcs_lp::MipOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Objective agreement with the oracle.
const OBJ_TOL: f64 = 1e-6;
/// Slack below `α` allowed for simulated per-task service levels.
const SERVICE_SLACK: f64 = 0.03;
/// Lower-bound comparisons and value metrics.
const BOUND_TOL: f64 = 1e-6;
const SIM_SCENARIOS: usize = 500;
const PI_SCENARIOS: usize = 20;
const ORACLE_INSTANCES: u64 = 60;
const SIMULATION_INSTANCES: u64 = 30;
const CUT_INSTANCES: u64 = 90;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn example() -> Instance {
    let coin = Distribution::from_pairs([(0, 0.5), (1, 0.5)]).unwrap();
    let det = vec![vec![0, 1, 1, 2], vec![1, 0, 2, 1], vec![1, 2, 0, 3], vec![2, 1, 3, 0]];
    InstanceBuilder::new(det, 0, TimeBins { length: 6, count: 2 }, vec![1])
        .alpha(0.9)
        .gamma(0.95)
        .objective(ObjectiveBasis::Absolute)
        .profile("team", vec![1])
        .task("1", 1, 0, 10, 10, 1.0, vec![Some(3)])
        .task("2", 2, 0, 10, 10, 1.0, vec![Some(3)])
        .task("3", 3, 3, 15, 15, 1.0, vec![Some(3)])
        .delay_all_bins(0, 1, coin.clone())
        .delay_all_bins(2, 3, coin)
        .build()
        .unwrap()
}

/// Cover dual 2 on the first task, workforce duals -2 at times 0 and 1 and
/// -1 from 2 to 10.
fn example_duals(inst: &Instance) -> Duals {
    let mut d = Duals::zero(inst);
    d.cover = vec![2.0, 0.0, 0.0];
    d.workforce[0][0] = -2.0;
    d.workforce[0][1] = -2.0;
    for tau in 2..=10 {
        d.workforce[0][tau] = -1.0;
    }
    d
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = example();
    let duals = example_duals(&inst);
    let rules = NodeRules::default();
    let ctx = PricingContext { inst: &inst, duals: &duals, rules: &rules, cuts: &[] };
    let net = Network::new(ctx, 0, NetworkMode::Aggregated, true);
    let Some(l1) = net.initial_label(0, 2) else {
        return outcome(false, "no initial label");
    };
    let Some(l2) = net.extend(&l1, 2) else {
        return outcome(false, "extension rejected");
    };
    let finish = Distribution::from_pairs([(10, 0.5), (11, 0.5)]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = l1.cost == 10.5 && l2.cost == 24.0 && l2.finish == finish && l2.perf(0) && secs < 1.0;
    outcome(pass, format!("initial {} extended {} finish {:?} task 1 released {} in {secs:.3}s", l1.cost, l2.cost, l2.finish.iter().collect::<Vec<_>>(), l2.perf(0)))
}

/// Every vector with entries in `0..=xi[0]` meeting the two defining conditions.
fn brute_compositions(xi: &[u32]) -> BTreeSet<Vec<u32>> {
    let k = xi.len();
    let mut out = BTreeSet::new();
    let mut s = vec![0u32; k];
    loop {
        let total: u32 = s.iter().sum();
        if total == xi[0] && (0..k).all(|l| xi[l] <= s[l..].iter().sum()) {
            out.insert(s.clone());
        }
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            s[i] += 1;
            if s[i] <= xi[0] {
                break;
            }
            s[i] = 0;
            i += 1;
        }
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let table: BTreeSet<Vec<u32>> = [[1, 1, 1], [0, 2, 1], [0, 1, 2], [1, 0, 2], [0, 0, 3]].iter().map(|s| s.to_vec()).collect();
    let got: BTreeSet<Vec<u32>> = enumerate_skill_compositions(&[3, 2, 1]).into_iter().map(|s| s.0).collect();
    let table_ok = got == table;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let trials = 200;
    for _ in 0..trials {
        let levels = rng.gen_range(1..=4);
        let mut xi = vec![rng.gen_range(1..=6u32)];
        for _ in 1..levels {
            let last = *xi.last().unwrap();
            xi.push(rng.gen_range(0..=last));
        }
        let mine: Vec<Vec<u32>> = enumerate_skill_compositions(&xi).into_iter().map(|s| s.0).collect();
        let unique: BTreeSet<Vec<u32>> = mine.iter().cloned().collect();
        if unique.len() != mine.len() || unique != brute_compositions(&xi) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(table_ok && mismatches == 0 && secs < 1.0, format!("table {table_ok}, {mismatches}/{trials} random profiles differ, {secs:.3}s"))
}

fn criterion_3() -> Outcome {
    let inst = example();
    let duals = example_duals(&inst);
    let rules = NodeRules::default();
    let ctx = PricingContext { inst: &inst, duals: &duals, rules: &rules, cuts: &[] };
    let mode = NetworkMode::Composition { composition: 0, offset: true };
    let net = Network::new(ctx, 0, mode, true);
    let a = net.initial_label(0, 2).and_then(|l| net.extend(&l, 2));
    let b = net.initial_label(1, 0).and_then(|l| net.extend(&l, 2));
    let (Some(a), Some(b)) = (a, b) else {
        return outcome(false, "labels missing");
    };
    let all = TaskSet::full(3);
    let plain = net.dominates_under(&a, &b, DominanceRule::Plain, &all, false);
    let offset = net.dominates_under(&a, &b, DominanceRule::Offset, &all, false);
    let (oa, ob) = (a.cost - a.charge, b.cost - b.charge);
    outcome(plain && !offset && oa == 15.0 && ob == 14.5, format!("offset costs {oa} vs {ob}, plain dominates {plain}, offset dominates {offset}"))
}

struct OracleCase {
    inst: Instance,
    oracle: Option<f64>,
    results: Vec<(Features, SolveResult)>,
}

fn criterion_4(cases: &mut Vec<OracleCase>) -> Outcome {
    let start = Instant::now();
    let mut disagreements = Vec::new();
    for seed in 0..ORACLE_INSTANCES {
        let tasks = 4 + (seed % 3) as usize;
        let strength = [0.5, 0.6, 0.7, 0.8][(seed / 3 % 4) as usize];
        let inst = common::tiny(seed, tasks, strength);
        let oracle = common::oracle(&inst, tasks);
        let mut results = Vec::new();
        for features in Features::ALL {
            let res = solve(&inst, &common::exact_config(features)).unwrap();
            let agree = match (oracle, res.objective()) {
                (Some(a), Some(b)) => (a - b).abs() <= OBJ_TOL * a.abs().max(1.0),
                (None, None) => true,
                _ => false,
            };
            if !agree {
                disagreements.push(format!("seed {seed} {features}: {:?} vs {oracle:?}", res.objective()));
            }
            results.push((features, res));
        }
        cases.push(OracleCase { inst, oracle, results });
    }
    let feasible = cases.iter().filter(|c| c.oracle.is_some()).count();
    let secs = start.elapsed().as_secs_f64();
    let pass = disagreements.is_empty() && feasible >= 50 && secs < 600.0;
    let mut detail = format!("{} instances ({feasible} feasible) x 5 configs, {} disagreements, {secs:.1}s", cases.len(), disagreements.len());
    if let Some(first) = disagreements.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(pass, detail)
}

#[derive(Clone, Copy)]
struct Sample {
    seed: u64,
    profile: usize,
    composition: usize,
    reference: usize,
}

/// Minimum reduced cost over sink labels, ties by leave time then path.
fn network_min(net: &Network, inst: &Instance, price_as: usize) -> Option<(f64, Time, Vec<usize>)> {
    let starts = net.initial_labels();
    let mut stats = PricingStats::default();
    let mut best: Option<(f64, Time, Vec<usize>)> = None;
    net.run(&starts, &RunOptions::exact(inst.num_tasks()), &mut stats, |s| {
        let Some(rc) = net.column_cost(&s, Some(price_as)) else { return };
        let better = best
            .as_ref()
            .is_none_or(|b| rc < b.0 - 1e-12 || ((rc - b.0).abs() <= 1e-12 && (s.tl, &s.path) < (b.1, &b.2)));
        if better {
            best = Some((rc, s.tl, s.path.clone()));
        }
    });
    best
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    let mut failures: Vec<Sample> = Vec::new();
    let mut seed = 0;
    while checked < 120 {
        let inst = common::tiny(seed, 4 + (seed % 2) as usize, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xacce);
        let mut duals = Duals::zero(&inst);
        for mu in &mut duals.cover {
            *mu = rng.gen_range(0.0..40.0);
        }
        for row in &mut duals.workforce {
            for d in row.iter_mut() {
                if rng.gen_bool(0.4) {
                    *d = -rng.gen_range(0.0..3.0);
                }
            }
        }
        let rules = NodeRules::default();
        let ctx = PricingContext { inst: &inst, duals: &duals, rules: &rules, cuts: &[] };
        for q in 0..inst.num_profiles() {
            let n = inst.compositions(q).len();
            for _ in 0..3 {
                let (s, r) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let via = Network::new(ctx, q, NetworkMode::Composition { composition: r, offset: true }, true);
                let direct = Network::new(ctx, q, NetworkMode::Composition { composition: s, offset: false }, true);
                let same = match (network_min(&via, &inst, s), network_min(&direct, &inst, s)) {
                    (None, None) => true,
                    (Some(a), Some(b)) => (a.0 - b.0).abs() < 1e-9 && (a.1, &a.2) == (b.1, &b.2),
                    _ => false,
                };
                if !same {
                    failures.push(Sample { seed, profile: q, composition: s, reference: r });
                }
                checked += 1;
            }
        }
        seed += 1;
    }
    let mut detail = format!("{checked} (q, s, reference, duals) samples, {} mismatches", failures.len());
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first seed {} profile {} composition {} via {}", f.seed, f.profile, f.composition, f.reference));
    }
    outcome(failures.is_empty(), detail)
}

fn exact_routes(inst: &Instance, sol: &Solution) -> Vec<FlowRoute> {
    sol.routes
        .iter()
        .map(|r| FlowRoute {
            exact: Some(r.composition.clone()),
            ..FlowRoute::from_column(inst, &r.column)
        })
        .collect()
}

fn criterion_6(cases: &[OracleCase]) -> Outcome {
    let mut plans = 0;
    let mut failures = Vec::new();
    for (n, case) in cases.iter().enumerate() {
        for (features, res) in &case.results {
            let Some(sol) = &res.incumbent else { continue };
            plans += 1;
            let per_level = &case.inst.workforce.per_level;
            let routes = exact_routes(&case.inst, sol);
            let check = feasibility_check(&routes, per_level, &MipOptions::default()).unwrap();
            let flows = construct_flows(&routes, per_level);
            let own = verify_flows(&routes, per_level, &flows);
            if check.slack != 0 || own.is_err() {
                failures.push(format!("case {n} {features}: slack {} flows {own:?}", check.slack));
            }
        }
    }
    let mut detail = format!("{plans} integer plans, {} fail", failures.len());
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first {f}"));
    }
    outcome(failures.is_empty() && plans > 0, detail)
}

struct SimulationCase {
    inst: Instance,
    rows: Vec<ComparisonRow>,
    plans: Vec<Option<Solution>>,
    stochastic: SolveResult,
}

fn planning_config() -> SearchConfig {
    SearchConfig {
        time_limit: Some(Duration::from_secs(10)),
        ..SearchConfig::default()
    }
}

fn simulation_cases() -> Vec<SimulationCase> {
    let mut cases = Vec::new();
    for seed in 0..SIMULATION_INSTANCES {
        let params = GeneratorParams {
            horizon_minutes: 60,
            flights_per_hour: 10,
            worker_strength: [0.5, 0.6, 0.7, 0.8, 0.9][(seed % 5) as usize],
            modes: if seed % 2 == 0 { ModeSet::Sif } else { ModeSet::Sf },
            seed,
        };
        let inst = generate(&params).unwrap();
        let opts = CompareOptions {
            scenarios: SIM_SCENARIOS,
            pi_scenarios: PI_SCENARIOS,
            seed,
            rule: BinRule::Actual,
            search: planning_config(),
        };
        let (rows, plans) = compare(&inst, &opts).unwrap();
        let stochastic = solve(&inst, &planning_config()).unwrap();
        cases.push(SimulationCase { inst, rows, plans, stochastic });
    }
    cases
}

fn criterion_7(oracle: &[OracleCase], sims: &[SimulationCase]) -> Outcome {
    let mut in_model_checked = 0;
    let mut in_model_fail = 0;
    for case in oracle {
        for (_, res) in &case.results {
            if let Some(sol) = &res.incumbent {
                in_model_checked += 1;
                in_model_fail += usize::from(!chance_constraints_hold(&case.inst, sol));
            }
        }
    }
    let mut simulated = 0;
    let mut worst_gap = f64::INFINITY;
    let mut below = Vec::new();
    for (n, case) in sims.iter().enumerate() {
        let Some(sol) = &case.plans[0] else { continue };
        in_model_checked += 1;
        in_model_fail += usize::from(!chance_constraints_hold(&case.inst, sol));
        let ev = case.rows[0].evaluation.as_ref().unwrap();
        simulated += 1;
        for (i, &sl) in ev.service_per_task.iter().enumerate() {
            worst_gap = worst_gap.min(sl - case.inst.alpha);
            if sl < case.inst.alpha - SERVICE_SLACK {
                below.push(format!("instance {n} task {i}: {sl:.3}"));
            }
        }
    }
    let mut detail = format!(
        "{in_model_checked} plans checked in-model ({in_model_fail} violate), {simulated} simulated with {SIM_SCENARIOS} scenarios, min SL - alpha = {worst_gap:.3}, {} tasks below alpha - {SERVICE_SLACK}",
        below.len()
    );
    if let Some(b) = below.first() {
        detail.push_str(&format!("; first {b}"));
    }
    outcome(in_model_fail == 0 && below.is_empty() && simulated > 0, detail)
}

fn criterion_8(sims: &[SimulationCase]) -> Outcome {
    let row = |c: &SimulationCase, mode: &str| c.rows.iter().position(|r| r.mode == mode).unwrap();
    let feasible = |mode: &str| sims.iter().filter(|c| c.plans[row(c, mode)].is_some()).count();
    let (fb, fm, fmed, fw, fs) = (feasible("best"), feasible("mean"), feasible("median"), feasible("worst"), feasible("stochastic"));
    let a = fb >= fm && fm >= fw;

    let objective = |c: &SimulationCase, mode: &str| c.rows[row(c, mode)].evaluation.as_ref().map(|e| e.objective);
    let common: Vec<&SimulationCase> = sims
        .iter()
        .filter(|c| ["stochastic", "worst", "mean"].iter().all(|m| objective(c, m).is_some()))
        .collect();
    let avg = |mode: &str| common.iter().map(|c| objective(c, mode).unwrap()).sum::<f64>() / common.len().max(1) as f64;
    let (os, ow, om) = (avg("stochastic"), avg("worst"), avg("mean"));
    let b = !common.is_empty() && os <= ow && ow <= om;

    let mut values = 0;
    let (mut vss_neg, mut evpi_neg) = (0, 0);
    let mut negative = Vec::new();
    for (n, c) in sims.iter().enumerate() {
        let Some(v) = &c.rows[0].values else { continue };
        if let (Some(vss), Some(evpi)) = (v.vss, v.evpi) {
            values += 1;
            vss_neg += usize::from(vss < -BOUND_TOL);
            evpi_neg += usize::from(evpi < -BOUND_TOL);
            if vss < -BOUND_TOL || evpi < -BOUND_TOL {
                negative.push(format!("instance {n}: VSS {vss:.3} EVPI {evpi:.3}"));
            }
        }
    }
    let c_ok = values > 0 && negative.is_empty();

    let both: Vec<&SimulationCase> = sims
        .iter()
        .filter(|c| c.rows[0].evaluation.is_some() && c.rows[row(c, "best")].evaluation.is_some())
        .collect();
    let min_sl = |c: &SimulationCase, mode: &str| c.rows[row(c, mode)].evaluation.as_ref().unwrap().service_min;
    let sl_s = both.iter().map(|c| min_sl(c, "stochastic")).sum::<f64>() / both.len().max(1) as f64;
    let sl_b = both.iter().map(|c| min_sl(c, "best")).sum::<f64>() / both.len().max(1) as f64;
    let d = !both.is_empty() && sl_s > sl_b;

    let mut detail = format!(
        "(a) feasible best {fb} mean {fm} median {fmed} worst {fw} stochastic {fs}: {}; (b) mean simulated objective over {} instances: stochastic {os:.3} worst {ow:.3} mean {om:.3}: {}; (c) over {values} instances VSS < 0 on {vss_neg}, EVPI < 0 on {evpi_neg}: {}; (d) mean min SL stochastic {sl_s:.4} vs best {sl_b:.4}: {}",
        verdict(a),
        common.len(),
        verdict(b),
        verdict(c_ok),
        verdict(d)
    );
    if let Some(n) = negative.first() {
        detail.push_str(&format!("; first {n}"));
    }
    outcome(a && b && c_ok && d, detail)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "violated"
    }
}

fn criterion_9(oracle: &[OracleCase], sims: &[SimulationCase]) -> Outcome {
    let mut stats = Vec::new();
    for case in oracle {
        let (_, res) = &case.results[0];
        if res.incumbent.is_some() {
            stats.push(&res.stats);
        }
    }
    for case in sims {
        if case.stochastic.incumbent.is_some() {
            stats.push(&case.stochastic.stats);
        }
    }
    // Denser tiny instances, where fractional roots with violated cuts are common.
    let mut scan = Vec::new();
    for seed in 0..CUT_INSTANCES {
        let inst = common::tiny(seed, 5 + (seed % 3) as usize, [0.6, 0.7, 0.8][(seed / 3 % 3) as usize]);
        let res = solve(&inst, &common::exact_config(Features::Full)).unwrap();
        if res.incumbent.is_some() {
            scan.push(res.stats);
        }
    }
    stats.extend(scan.iter());
    let with_cuts: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.cuts_added > 0)
        .filter_map(|s| Some((s.root_lb_before_cuts?, s.root_lb?)))
        .collect();
    let lowered = with_cuts.iter().filter(|(b, a)| *a < b - BOUND_TOL * b.abs().max(1.0)).count();
    let lifted = with_cuts.iter().filter(|(b, a)| *a > b + BOUND_TOL * b.abs().max(1.0)).count();
    let best = with_cuts.iter().map(|(b, a)| a - b).fold(0.0, f64::max);
    outcome(
        lowered == 0 && lifted > 0,
        format!("{} solved instances with root cuts: {lifted} lifted, {lowered} lowered, largest lift {best:.4}", with_cuts.len()),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bpcs"))
        .args(args)
        .current_dir(dir)
        .status()
        .is_ok_and(|s| s.success())
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut ok = run_cli(d, &["generate", "--horizon", "60", "--fph", "10", "--strength", "0.7", "--modes", "sif", "--seed", "3", "--out", "inst.json"]);
    for run in ["1", "2"] {
        ok &= run_cli(
            d,
            &["solve", "--instance", "inst.json", "--features", "full", "--time-limit", "180", "--seed", "3", "--out", &format!("sol{run}.json"), "--stats", &format!("stats{run}.csv")],
        );
        ok &= run_cli(
            d,
            &["simulate", "--instance", "inst.json", "--scenarios", "200", "--seed", "3", "--out", &format!("sim{run}.csv"), "--histogram", &format!("hist{run}.csv")],
        );
    }
    if !ok {
        return outcome(false, "a command failed");
    }
    let same = |a: &str, b: &str| std::fs::read(d.join(a)).ok().zip(std::fs::read(d.join(b)).ok()).is_some_and(|(x, y)| x == y);
    let files = [("sol1.json", "sol2.json"), ("stats1.csv", "stats2.csv"), ("sim1.csv", "sim2.csv"), ("hist1.csv", "hist2.csv")];
    let differing: Vec<&str> = files.iter().filter(|(a, b)| !same(a, b)).map(|(a, _)| *a).collect();
    outcome(differing.is_empty(), format!("solution, stats, simulation and histogram files compared; differing: {differing:?}"))
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    let mut oracle = Vec::new();
    report(4, criterion_4(&mut oracle));
    report(5, criterion_5());
    report(6, criterion_6(&oracle));
    let sims = simulation_cases();
    report(7, criterion_7(&oracle, &sims));
    report(8, criterion_8(&sims));
    report(9, criterion_9(&oracle, &sims));
    report(10, criterion_10());
    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

use super::*;
use crate::instance_gen::{generate_with, GeneratorConfig, ModeSet};
use crate::cuts::SeparationOptions;
use crate::search::Features;
use crate::model::{InstanceBuilder, ObjectiveBasis, TimeBins};
use crate::test_support::{coin, example, example_builder, line};

fn exact_config() -> SearchConfig {
    SearchConfig {
        time_limit: None,
        separation: SeparationOptions {
            time_limit: None,
            ..SeparationOptions::default()
        },
        ..SearchConfig::with_features(Features::Full)
    }
}

fn tiny(seed: u64) -> Instance {
    let mut cfg = GeneratorConfig::tiny();
    cfg.bin_count = Some(2);
    generate_with(&cfg, 30, 4, 0.5, ModeSet::Sf, seed).unwrap()
}

fn plan(inst: &Instance) -> Solution {
    solve(inst, &exact_config()).unwrap().incumbent.unwrap()
}

#[test]
fn statistics_of_a_delay() {
    let d = Distribution::from_pairs([(0, 0.2), (1, 0.3), (3, 0.5)]).unwrap();
    assert_eq!(TravelStat::Best.of(&d), 0);
    assert_eq!(TravelStat::Worst.of(&d), 3);
    assert_eq!(TravelStat::Median.of(&d), 1);
    // Expectation 1.8 rounds to 2.
    assert_eq!(TravelStat::Mean.of(&d), 2);
    assert_eq!(TravelStat::Mean.of(&coin()), 1);
    for s in TravelStat::ALL {
        assert_eq!(s.name().parse::<TravelStat>().unwrap(), s);
    }
}

#[test]
fn point_modes_coincide_without_delays() {
    let inst = line(&[(0, 20, 25), (4, 20, 25)], 3, vec![1], vec![1]);
    let sols: Vec<f64> = TravelStat::ALL
        .iter()
        .map(|&s| solve_deterministic(&inst, s, &exact_config()).unwrap().objective().unwrap())
        .collect();
    assert!(sols.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-9));
    assert!((sols[0] - solve(&inst, &exact_config()).unwrap().objective().unwrap()).abs() < 1e-9);
}

#[test]
fn point_instance_has_no_randomness() {
    let inst = example();
    for stat in TravelStat::ALL {
        let p = point_instance(&inst, stat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = sample_scenario(&p, &mut rng);
        assert_eq!(a, Scenario::statistic(&inst, stat));
        assert_eq!(a, sample_scenario(&p, &mut rng));
    }
}

#[test]
fn equal_seeds_give_equal_scenarios() {
    let inst = example();
    let s = ScenarioSampler::new(&inst);
    let a: Vec<Scenario> = (0..5).scan(ChaCha8Rng::seed_from_u64(9), |r, _| Some(s.sample(r))).collect();
    let b: Vec<Scenario> = (0..5).scan(ChaCha8Rng::seed_from_u64(9), |r, _| Some(s.sample(r))).collect();
    assert_eq!(a, b);
    assert!(a.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn sampled_frequencies_match_the_pmf() {
    let d = Distribution::from_pairs([(0, 0.1), (2, 0.6), (5, 0.3)]).unwrap();
    let inst = example_builder().delay_all_bins(1, 2, d.clone()).build().unwrap();
    let sampler = ScenarioSampler::new(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let det = inst.travel.det[1][2];
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(sampler.sample(&mut rng).travel(1, 1, 2) - det).or_insert(0usize) += 1;
    }
    for (t, p) in d.iter() {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let got = counts.get(&t).copied().unwrap_or(0) as f64;
        assert!((got - n as f64 * p).abs() <= 3.0 * sigma, "t={t}: {got}");
    }
}

#[test]
fn quantile_scenario_reproduces_the_plan() {
    for seed in 0..4 {
        let inst = tiny(seed);
        let sol = plan(&inst);
        let ex = execute_plan(&inst, &sol, &Scenario::quantile(&inst), BinRule::Median);
        assert_eq!(ex.postponed(&sol), 0);
        for (r, route) in sol.routes.iter().enumerate() {
            assert_eq!(ex.starts[r], route.column.tl);
            assert_eq!(ex.visits[r], route.column.gamma_finishes);
            assert_eq!(ex.returns[r], route.column.tr);
        }
    }
}

fn two_tours() -> (Instance, Solution) {
    // One worker runs both tasks in separate back-to-back tours.
    let inst = line(&[(2, 6, 30), (8, 12, 30)], 2, vec![1], vec![1]);
    let sol = plan(&inst);
    assert_eq!(sol.routes.len(), 2, "{:?}", sol.routes);
    (inst, sol)
}

#[test]
fn overrun_postpones_the_next_tour() {
    let (inst, sol) = two_tours();
    let on_plan = execute_plan(&inst, &sol, &Scenario::quantile(&inst), BinRule::Actual);
    assert_eq!(on_plan.postponed(&sol), 0);
    // Three extra steps on every edge back to the depot.
    let late = Scenario::from_fn(&inst, |b, i, j| inst.travel().edge(b, i, j).q_gamma + if j == inst.depot { 3 } else { 0 });
    let ex = execute_plan(&inst, &sol, &late, BinRule::Actual);
    let (first, second) = if sol.routes[0].column.tl < sol.routes[1].column.tl { (0, 1) } else { (1, 0) };
    assert!(ex.returns[first] >= sol.routes[second].column.tl);
    assert_eq!(ex.starts[second], ex.returns[first] + 1);
    assert_eq!(ex.postponed(&sol), 1);
}

#[test]
fn busy_workers_never_exceed_the_workforce() {
    for seed in 0..4 {
        let inst = tiny(seed);
        let sol = plan(&inst);
        let sampler = ScenarioSampler::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let ex = execute_plan(&inst, &sol, &sampler.sample(&mut rng), BinRule::Actual);
            let end = ex.returns.iter().copied().max().unwrap_or(0);
            for tau in 0..=end {
                let busy = busy_workers(&sol, &ex, tau);
                for (k, b) in busy.iter().enumerate() {
                    assert!(*b <= inst.workforce.per_level[k], "seed {seed} tau {tau} level {k}");
                }
            }
        }
    }
}

#[test]
fn deterministic_instance_has_no_spread() {
    let inst = line(&[(0, 20, 25), (4, 20, 25), (6, 9, 25)], 3, vec![1], vec![2]);
    let sol = plan(&inst);
    let ev = evaluate(&inst, &sol, 40, 5, BinRule::Actual);
    assert_eq!(ev.objective_std, 0.0);
    assert!((ev.objective - sol.objective).abs() < 1e-9);
    assert_eq!(ev.postponed_tours, 0.0);
    for s in &ev.service_per_task {
        assert!(*s == 0.0 || *s == 1.0);
    }
    let mean = solve_deterministic(&inst, TravelStat::Mean, &exact_config()).unwrap().incumbent.unwrap();
    let v = vss_evpi(&inst, &sol, Some(&mean), 40, 5, 5, BinRule::Actual, &exact_config()).unwrap();
    assert!(v.vss.unwrap().abs() < 1e-9);
    assert!(v.evpi.unwrap().abs() < 1e-9);
}

#[test]
fn in_model_objective_matches_the_plan() {
    for seed in 0..4 {
        let inst = tiny(seed);
        let sol = plan(&inst);
        assert!((in_model_objective(&inst, &sol) - sol.objective).abs() < 1e-6);
        assert!(chance_constraints_hold(&inst, &sol));
    }
}

#[test]
fn single_route_simulation_converges_to_the_model() {
    let inst = example();
    let sol = plan(&inst);
    let single: Vec<_> = sol.routes.iter().filter(|r| r.column.tasks.len() > 1).collect();
    assert!(!single.is_empty());
    let one = Solution {
        routes: vec![single[0].clone()],
        objective: single[0].column.cost,
        flows: Default::default(),
    };
    let ev = evaluate(&inst, &one, 20_000, 2, BinRule::Median);
    let model = in_model_objective(&inst, &one);
    assert!((ev.objective - model).abs() <= 4.0 * ev.objective_std / (20_000f64).sqrt() + 1e-9);
}

#[test]
fn saa_stops_at_the_first_count_for_deterministic_plans() {
    let inst = line(&[(0, 20, 25), (4, 20, 25)], 3, vec![1], vec![2]);
    let sol = plan(&inst);
    let rep = saa_scenario_count(&[(&inst, &sol)], &SaaOptions::default(), 0);
    assert_eq!(rep.scenarios, Some(50));
}

#[test]
fn saa_needs_more_scenarios_for_wide_delays() {
    let wide = Distribution::from_pairs([(0, 0.5), (12, 0.5)]).unwrap();
    let det = vec![vec![0, 1, 1], vec![1, 0, 2], vec![1, 2, 0]];
    let inst = InstanceBuilder::new(det, 0, TimeBins { length: 10, count: 2 }, vec![1])
        .alpha(0.5)
        .gamma(0.5)
        .objective(ObjectiveBasis::Absolute)
        .profile("team", vec![1])
        .task("1", 1, 0, 4, 40, 1.0, vec![Some(2)])
        .task("2", 2, 0, 30, 60, 1.0, vec![Some(2)])
        .delay_all_bins(0, 1, wide.clone())
        .delay_all_bins(1, 2, wide)
        .build()
        .unwrap();
    let sol = plan(&inst);
    let opts = SaaOptions {
        max: 400,
        ..SaaOptions::default()
    };
    let rep = saa_scenario_count(&[(&inst, &sol)], &opts, 0);
    let first = &rep.history[0].1[0];
    assert!(!first.accepts(), "{first:?}");
    assert!(rep.scenarios.is_none_or(|n| n > 50));
}

#[test]
fn batch_statistics_use_the_normal_quantile() {
    let b = SaaBatch {
        mean: 100.0,
        std: 5.0,
        ci: Z_975 * 5.0 / 5.0,
    };
    assert!(b.accepts());
    let b = SaaBatch { std: 5.1, ..b };
    assert!(!b.accepts());
    let b = SaaBatch {
        mean: 1.0,
        std: 0.5,
        ci: 0.5,
    };
    assert!(b.accepts());
}

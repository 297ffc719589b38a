use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::instance_gen::{generate_with, GeneratorConfig, ModeSet};
use crate::test_support::line;

fn odd_cycle() -> (Instance, Vec<(Column, f64)>) {
    let inst = line(&[(0, 30, 40); 3], 2, vec![1], vec![5]);
    let support = [vec![0, 1], vec![1, 2], vec![0, 2]]
        .into_iter()
        .map(|r| (Column::build(&inst, r, 0, 0).unwrap(), 0.5))
        .collect();
    (inst, support)
}

#[test]
fn odd_cycle_of_pairs_is_cut_off() {
    let (inst, support) = odd_cycle();
    let cut = separate(&inst, &support, &SeparationOptions::default()).unwrap();
    // The best rank-1 cut here is the half-sum of the three covering rows.
    assert!((violation(&inst, &cut, &support) - 0.5).abs() < 1e-9);
    assert_eq!(cut.rhs, cut_rhs(&inst, &cut));
}

#[test]
fn no_cover_rows_without_permission() {
    let (inst, support) = odd_cycle();
    let opts = SeparationOptions {
        cover_rows: false,
        ..SeparationOptions::default()
    };
    if let Some(cut) = separate(&inst, &support, &opts) {
        assert!(cut.task_u.iter().all(|&u| u == 0.0));
    }
}

#[test]
fn integral_points_are_not_separated() {
    let (inst, support) = odd_cycle();
    let point = vec![(support[0].0.clone(), 1.0)];
    assert!(separate(&inst, &point, &SeparationOptions::default()).is_none());
}

#[test]
fn support_is_merged_over_compositions() {
    let inst = line(&[(0, 30, 40)], 2, vec![2, 1], vec![1, 2]);
    let c = Column::build(&inst, vec![0], 0, 0).unwrap();
    let (a, b) = (c.with_composition(0), c.with_composition(1));
    let merged = aggregate_support([(&a, 0.25), (&b, 0.5), (&c, 0.25)]);
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0].0.composition, None);
    assert!((merged[0].1 - 1.0).abs() < 1e-12);
}

#[test]
fn coefficient_rounds_down_the_weighted_sum() {
    let inst = line(&[(0, 30, 40), (0, 30, 40)], 2, vec![2], vec![3]);
    let c = Column::build(&inst, vec![0, 1], 0, 0).unwrap();
    let mut wu = BTreeMap::new();
    wu.insert((0, c.tl), 0.25);
    wu.insert((0, c.tr + 1), 0.5);
    let cut = Cut {
        task_u: vec![0.5, 0.25],
        workforce_u: wu,
        rhs: 0.0,
    };
    // 0.5 + 0.25 + 2 * 0.25; the slot after the return does not count.
    assert!((cut.fractional_sum(&inst, &c) - 1.25).abs() < 1e-12);
    assert_eq!(cut.coefficient(&inst, &c), 1.0);
    assert_eq!(cut_rhs(&inst, &cut), (0.75f64 + 3.0 * 0.75).floor());
}

fn enumerate(inst: &Instance) -> Vec<Column> {
    let mut out = Vec::new();
    let horizon = inst.tasks.iter().map(|t| t.lf_ext).max().unwrap();
    for q in 0..inst.num_profiles() {
        let tasks = inst.profile_tasks(q);
        let mut routes: Vec<Vec<usize>> = tasks.iter().map(|&i| vec![i]).collect();
        for &a in tasks {
            for &b in tasks {
                if a != b {
                    routes.push(vec![a, b]);
                }
            }
        }
        for r in routes {
            for tl in 0..=horizon {
                if let Ok(c) = Column::build(inst, r.clone(), q, tl) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Random integer points of the rows used in separation: each task at most
/// once, cumulative workforce within `N_k`.
fn random_packings(inst: &Instance, cols: &[Column], rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<usize>> {
    let horizon = inst.time_horizon() as usize + 1;
    (0..count)
        .map(|_| {
            let mut order: Vec<usize> = (0..cols.len()).collect();
            order.shuffle(rng);
            let mut covered = vec![false; inst.num_tasks()];
            let mut load = vec![vec![0u32; horizon]; inst.levels()];
            let mut chosen = Vec::new();
            for j in order {
                let c = &cols[j];
                if c.tasks.iter().any(|&i| covered[i]) {
                    continue;
                }
                let fits = (0..inst.levels()).all(|k| {
                    (c.tl..=c.tr).all(|t| load[k][t as usize] + c.level_demand(inst, k) <= inst.workforce.cumulative(k))
                });
                if !fits {
                    continue;
                }
                for &i in &c.tasks {
                    covered[i] = true;
                }
                for (k, row) in load.iter_mut().enumerate() {
                    for t in c.tl..=c.tr {
                        row[t as usize] += c.level_demand(inst, k);
                    }
                }
                chosen.push(j);
            }
            chosen
        })
        .collect()
}

#[test]
fn separated_cuts_hold_for_integer_packings() {
    let mut found = 0;
    for seed in 0..12u64 {
        let inst = generate_with(&GeneratorConfig::tiny(), 40, 5, 0.6, ModeSet::Sf, seed).unwrap();
        let cols = enumerate(&inst);
        if cols.len() < 3 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // A fractional point: random columns at random weights.
        let mut picks: Vec<usize> = (0..cols.len()).collect();
        picks.shuffle(&mut rng);
        let support: Vec<(Column, f64)> = picks.iter().take(6).map(|&j| (cols[j].clone(), 0.5)).collect();
        let Some(cut) = separate(&inst, &support, &SeparationOptions::default()) else {
            continue;
        };
        found += 1;
        for pack in random_packings(&inst, &cols, &mut rng, 300) {
            let lhs: f64 = pack.iter().map(|&j| cut.coefficient(&inst, &cols[j])).sum();
            assert!(lhs <= cut.rhs + 1e-9, "seed {seed}: packing {pack:?} gives {lhs} > {}", cut.rhs);
        }
    }
    assert!(found > 0);
}

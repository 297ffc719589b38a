use proptest::prelude::*;

use super::*;
use crate::model::enumerate_skill_compositions;

fn route(tl: Time, tr: Time, xi: &[u32]) -> FlowRoute {
    FlowRoute {
        tl,
        tr,
        xi: xi.to_vec(),
        exact: None,
    }
}

fn exact(tl: Time, tr: Time, s: &[u32]) -> FlowRoute {
    let xi: Vec<u32> = (0..s.len()).map(|k| s[k..].iter().sum()).collect();
    FlowRoute {
        tl,
        tr,
        xi,
        exact: Some(s.to_vec()),
    }
}

fn check(routes: &[FlowRoute], per_level: &[u32]) -> FeasibilityResult {
    feasibility_check(routes, per_level, &MipOptions::default()).unwrap()
}

/// Minimum slack by letting every worker pick a chain of tours; workers of
/// one level are interchangeable, so multisets of chains suffice.
fn exhaustive_slack(routes: &[FlowRoute], per_level: &[u32]) -> u32 {
    let n = routes.len();
    let chains: Vec<Vec<usize>> = (0u32..1 << n)
        .map(|m| (0..n).filter(|&r| m & (1 << r) != 0).collect::<Vec<_>>())
        .filter(|c| c.iter().all(|&a| c.iter().all(|&b| a == b || precedes(&routes[a], &routes[b]) || precedes(&routes[b], &routes[a]))))
        .collect();
    fn multisets(items: usize, count: u32, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if count == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..items {
            cur.push(i);
            multisets(items, count - 1, i, cur, out);
            cur.pop();
        }
    }
    let per: Vec<Vec<Vec<usize>>> = per_level
        .iter()
        .map(|&c| {
            let mut out = Vec::new();
            multisets(chains.len(), c, 0, &mut Vec::new(), &mut out);
            out
        })
        .collect();
    let levels = per_level.len();
    let mut best = u32::MAX;
    let mut idx = vec![0usize; levels];
    loop {
        // supply[r][k]: workers of exactly level k on tour r.
        let mut supply = vec![vec![0u32; levels]; n];
        for k in 0..levels {
            for &c in &per[k][idx[k]] {
                for &r in &chains[c] {
                    supply[r][k] += 1;
                }
            }
        }
        let slack: u32 = (0..n)
            .map(|r| {
                (0..levels)
                    .map(|k| routes[r].xi[k].saturating_sub(supply[r][k..].iter().sum()))
                    .sum::<u32>()
            })
            .sum();
        best = best.min(slack);
        let mut k = 0;
        loop {
            if k == levels {
                return best;
            }
            idx[k] += 1;
            if idx[k] < per[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn single_route_within_workforce() {
    let r = [route(0, 5, &[2, 1])];
    let res = check(&r, &[1, 1]);
    assert!(res.feasible);
    assert_eq!(res.slack, 0);
    verify_flows(&r, &[1, 1], &res.flows).unwrap();
}

#[test]
fn overlapping_routes_beyond_workforce() {
    let r = [route(0, 5, &[1, 1]), route(3, 8, &[1, 1])];
    let res = check(&r, &[3, 1]);
    assert!(!res.feasible);
    assert!(res.slack >= 1);
}

#[test]
fn equal_return_and_leave_times_overlap() {
    let r = [route(0, 5, &[1, 1]), route(5, 8, &[1, 1])];
    // The second tour lacks one worker, counted at both levels it covers.
    assert_eq!(check(&r, &[0, 1]).slack, 2);
    let r = [route(0, 5, &[1, 1]), route(6, 8, &[1, 1])];
    assert_eq!(check(&r, &[0, 1]).slack, 0);
}

/// Per-time cumulative counts fit, yet the expert would have to switch
/// tours mid-way: the novice must run A (C overlaps it and needs the
/// expert), so B gets the expert and D finds only the novice free.
#[test]
fn time_sliced_capacity_is_not_enough() {
    let r = [
        route(0, 6, &[1, 0]),
        route(4, 10, &[1, 0]),
        route(0, 2, &[1, 1]),
        route(8, 10, &[1, 1]),
    ];
    let per_level = [1, 1];
    for tau in 0..=10 {
        let active: Vec<&FlowRoute> = r.iter().filter(|x| x.tl <= tau && tau <= x.tr).collect();
        assert!(active.iter().map(|x| x.xi[0]).sum::<u32>() <= 2);
        assert!(active.iter().map(|x| x.xi[1]).sum::<u32>() <= 1);
    }
    let res = check(&r, &per_level);
    assert_eq!(res.slack, 1);
    assert_eq!(exhaustive_slack(&r, &per_level), 1);
}

#[test]
fn table_one_composition_from_depot() {
    let comps = enumerate_skill_compositions(&[3, 2, 1]);
    let s = comps.iter().position(|c| c.0 == vec![0, 2, 1]).unwrap();
    let r = [exact(0, 5, &comps[s].0)];
    let flows = construct_flows(&r, &[3, 2, 1]);
    assert_eq!(flows.from_depot[0], vec![0, 2, 1]);
    verify_flows(&r, &[3, 2, 1], &flows).unwrap();
}

#[test]
fn disjoint_routes_chain_through() {
    let r = [exact(0, 3, &[1, 1]), exact(5, 9, &[1, 1])];
    let flows = construct_flows(&r, &[1, 1]);
    assert_eq!(flows.from_depot, vec![vec![1, 1], vec![0, 0]]);
    assert_eq!(flows.between[&(0, 1)], vec![1, 1]);
    assert_eq!(flows.to_depot, vec![vec![0, 0], vec![1, 1]]);
    verify_flows(&r, &[1, 1], &flows).unwrap();
}

#[test]
fn composition_prefers_lower_levels() {
    let comps = enumerate_skill_compositions(&[2, 1]);
    let s = composition_from_inflow(&comps, &[1, 2]).unwrap();
    assert_eq!(comps[s].0, vec![1, 1]);
    let s = composition_from_inflow(&comps, &[0, 2]).unwrap();
    assert_eq!(comps[s].0, vec![0, 2]);
    assert!(composition_from_inflow(&comps, &[2, 0]).is_none());
}

fn arb_routes(max_routes: usize, levels: usize) -> impl Strategy<Value = Vec<(Time, Time, Vec<u32>)>> {
    prop::collection::vec((0..12i64, 0..6i64, prop::collection::vec(0..3u32, levels)), 1..=max_routes)
        .prop_map(|v| v.into_iter().map(|(tl, len, s)| (tl, tl + len, s)).collect())
}

/// Per-level occupancy stays within `per_level` at every time.
fn fits(routes: &[FlowRoute], per_level: &[u32]) -> bool {
    (0..20).all(|tau| {
        (0..per_level.len()).all(|k| {
            routes
                .iter()
                .filter(|r| r.tl <= tau && tau <= r.tr)
                .map(|r| r.exact.as_ref().unwrap()[k])
                .sum::<u32>()
                <= per_level[k]
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructed_flows_staff_every_exact_solution(raw in arb_routes(6, 2), extra in prop::collection::vec(0..2u32, 2)) {
        let mut routes: Vec<FlowRoute> = raw.iter().map(|(tl, tr, s)| exact(*tl, *tr, s)).collect();
        routes.retain(|r| r.xi[0] > 0);
        let per_level: Vec<u32> = (0..2)
            .map(|k| (0..20).map(|tau| routes.iter().filter(|r| r.tl <= tau && tau <= r.tr).map(|r| r.exact.as_ref().unwrap()[k]).sum::<u32>()).max().unwrap_or(0) + extra[k])
            .collect();
        prop_assert!(fits(&routes, &per_level));
        let flows = construct_flows(&routes, &per_level);
        prop_assert_eq!(verify_flows(&routes, &per_level, &flows), Ok(()));
        let res = check(&routes, &per_level);
        prop_assert_eq!(res.slack, 0);
        // The model only asks for the cumulative requirement.
        let relaxed: Vec<FlowRoute> = routes.iter().map(|r| FlowRoute { exact: None, ..r.clone() }).collect();
        prop_assert_eq!(verify_flows(&relaxed, &per_level, &res.flows), Ok(()));
    }

    #[test]
    fn staffing_model_matches_exhaustive_search(raw in arb_routes(3, 2), per_level in prop::collection::vec(0..=4u32, 2)) {
        let routes: Vec<FlowRoute> = raw
            .iter()
            .map(|(tl, tr, s)| route(*tl, *tr, &[s[0] + s[1], s[1]]))
            .collect();
        let res = check(&routes, &per_level);
        prop_assert!(res.optimal);
        prop_assert_eq!(res.slack, exhaustive_slack(&routes, &per_level));
    }
}

//! Shared fixtures for unit tests.

use crate::distributions::Time;
use crate::model::{Instance, InstanceBuilder, ObjectiveBasis, TimeBins};
use crate::Distribution;

pub fn coin() -> Distribution {
    Distribution::from_pairs([(0, 0.5), (1, 0.5)]).unwrap()
}

/// Depot plus three task locations, two 6-step bins, one skill level.
pub fn example_builder() -> InstanceBuilder {
    let det = vec![vec![0, 1, 1, 2], vec![1, 0, 2, 1], vec![1, 2, 0, 3], vec![2, 1, 3, 0]];
    InstanceBuilder::new(det, 0, TimeBins { length: 6, count: 2 }, vec![1])
        .alpha(0.9)
        .gamma(0.95)
        .objective(ObjectiveBasis::Absolute)
        .profile("team", vec![1])
        .task("1", 1, 0, 10, 10, 1.0, vec![Some(3)])
        .task("2", 2, 0, 10, 10, 1.0, vec![Some(3)])
        .task("3", 3, 3, 15, 15, 1.0, vec![Some(3)])
        .delay_all_bins(0, 1, coin())
        .delay_all_bins(2, 3, coin())
}

pub fn example() -> Instance {
    example_builder().build().unwrap()
}

/// Tasks on a line `depot - 1 - 2 - ...`, unit distance between neighbours,
/// no delays, one profile needing `xi` workers.
pub fn line(windows: &[(Time, Time, Time)], exec: Time, xi: Vec<u32>, workforce: Vec<u32>) -> Instance {
    let l = windows.len() + 1;
    let det = (0..l).map(|i| (0..l).map(|j| (i as Time - j as Time).abs()).collect()).collect();
    let mut b = InstanceBuilder::new(det, 0, TimeBins { length: 10, count: 3 }, workforce).profile("p", xi);
    for (n, &(es, lf, lfe)) in windows.iter().enumerate() {
        b = b.task(&format!("t{n}"), n + 1, es, lf, lfe, 1.0, vec![Some(exec)]);
    }
    b.build().unwrap()
}

//! Synthetic instances on a 2-minute time grid.
//!
//! Gates sit on an integer grid around a central depot; deterministic travel
//! is half the Manhattan distance, rounded up. Each edge gets a truncated
//! geometric delay whose mean grows from bin to bin, so later bins are
//! stochastically slower. Aircraft classes fix weights, execution times and
//! skill requirements; modes trade execution time against team size.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Time;
use crate::model::{earliest_singleton, Instance, InstanceError, InstanceSpec, ObjectiveBasis, Profile, Task, TimeBins, TravelData, Workforce};
use crate::Distribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("horizon must be 60, 90 or 120 minutes, got {0}")]
    Horizon(u32),
    #[error("flights per hour must be 10, 20 or 30, got {0}")]
    FlightsPerHour(u32),
    #[error("worker strength must lie in [0.1, 0.9], got {0}")]
    Strength(f64),
    #[error("unknown mode set {0:?}; expected i, sf or sif")]
    ModeSet(String),
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("generated instance is invalid: {0}")]
    Instance(#[from] InstanceError),
}

/// Execution modes offered for every aircraft class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSet {
    /// Intermediate only.
    I,
    /// Slow and fast.
    Sf,
    /// Slow, intermediate and fast.
    Sif,
}

impl ModeSet {
    /// Indices into `GeneratorConfig::modes`, ordered slow, intermediate, fast.
    pub fn mode_indices(self) -> &'static [usize] {
        match self {
            ModeSet::I => &[1],
            ModeSet::Sf => &[0, 2],
            ModeSet::Sif => &[0, 1, 2],
        }
    }
}

impl FromStr for ModeSet {
    type Err = GeneratorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "i" => Ok(ModeSet::I),
            "sf" => Ok(ModeSet::Sf),
            "sif" => Ok(ModeSet::Sif),
            other => Err(GeneratorError::ModeSet(other.into())),
        }
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeSet::I => "i",
            ModeSet::Sf => "sf",
            ModeSet::Sif => "sif",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassConfig {
    pub name: String,
    pub weight: f64,
    /// Execution time in steps at the intermediate mode.
    pub base_exec: Time,
    /// Cumulative skill requirement at the slow mode.
    pub base_xi: Vec<u32>,
    /// Relative frequency among tasks.
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig {
    pub name: String,
    /// Multiplier on the base execution time, rounded up.
    pub exec_factor: f64,
    /// Added to the class requirement level by level.
    pub xi_extra: Vec<u32>,
}

/// Generator constants. The defaults are the documented surrogate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub step_minutes: u32,
    pub bin_steps: Time,
    pub lf_ext_offset: Time,
    pub alpha: f64,
    pub gamma: f64,
    pub classes: Vec<ClassConfig>,
    /// Slow, intermediate and fast, in this order.
    pub modes: Vec<ModeConfig>,
    /// Gates are drawn from a `grid_size x grid_size` grid, depot in the middle.
    pub grid_size: i64,
    pub gates: usize,
    /// Latest finish is `ES + longest execution + U[min, max]`.
    pub slack_min: Time,
    pub slack_max: Time,
    /// Largest delay support per edge is drawn from `1..=max_delay`.
    pub max_delay: Time,
    /// Bin-to-bin relative growth of the mean delay.
    pub delay_growth: f64,
    /// Ratio range of the first bin's geometric delay pmf.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Fixed number of time bins; derived from the horizon when absent.
    #[serde(default)]
    pub bin_count: Option<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let class = |name: &str, weight, base_exec, base_xi: Vec<u32>| ClassConfig {
            name: name.into(),
            weight,
            base_exec,
            base_xi,
            share: 1.0,
        };
        let mode = |name: &str, exec_factor, xi_extra: Vec<u32>| ModeConfig {
            name: name.into(),
            exec_factor,
            xi_extra,
        };
        Self {
            step_minutes: 2,
            bin_steps: 8,
            lf_ext_offset: 5,
            alpha: 0.9,
            gamma: 0.9,
            classes: vec![
                class("A", 1.0, 8, vec![2, 1, 1]),
                class("B", 1.5, 10, vec![3, 2, 1]),
                class("C", 2.0, 12, vec![4, 2, 1]),
            ],
            modes: vec![
                mode("slow", 1.5, vec![0, 0, 0]),
                mode("intermediate", 1.0, vec![1, 0, 0]),
                mode("fast", 0.7, vec![2, 1, 0]),
            ],
            grid_size: 9,
            gates: 12,
            slack_min: 2,
            slack_max: 8,
            max_delay: 4,
            delay_growth: 0.2,
            ratio_min: 0.2,
            ratio_max: 0.6,
            bin_count: None,
        }
    }
}

impl GeneratorConfig {
    /// Small instances for exhaustive cross-checks: one class, two skill
    /// levels, two modes, two bins and delay supports of at most 3 values.
    pub fn tiny() -> Self {
        Self {
            step_minutes: 2,
            bin_steps: 10,
            lf_ext_offset: 3,
            alpha: 0.8,
            gamma: 0.8,
            classes: vec![ClassConfig {
                name: "T".into(),
                weight: 1.0,
                base_exec: 4,
                base_xi: vec![2, 1],
                share: 1.0,
            }],
            modes: vec![
                ModeConfig {
                    name: "slow".into(),
                    exec_factor: 1.5,
                    xi_extra: vec![0, 0],
                },
                ModeConfig {
                    name: "intermediate".into(),
                    exec_factor: 1.0,
                    xi_extra: vec![0, 0],
                },
                ModeConfig {
                    name: "fast".into(),
                    exec_factor: 0.75,
                    xi_extra: vec![1, 1],
                },
            ],
            grid_size: 4,
            gates: 4,
            slack_min: 1,
            slack_max: 4,
            max_delay: 2,
            delay_growth: 0.2,
            ratio_min: 0.2,
            ratio_max: 0.6,
            bin_count: Some(2),
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Config(m.into()));
        if self.classes.is_empty() || self.modes.len() != 3 {
            return bad("need at least one class and exactly three modes");
        }
        let levels = self.classes[0].base_xi.len();
        if levels == 0 {
            return bad("skill requirements must have at least one level");
        }
        if self.classes.iter().any(|c| c.base_xi.len() != levels || c.base_exec <= 0 || c.share <= 0.0)
            || self.modes.iter().any(|m| m.xi_extra.len() != levels || m.exec_factor <= 0.0)
        {
            return bad("classes and modes must agree on the number of skill levels");
        }
        if self.bin_steps <= 0 || self.bin_count == Some(0) || self.gates == 0 || self.grid_size < 1 {
            return bad("bins, gates and grid must be non-empty");
        }
        if self.slack_min < 0 || self.slack_max < self.slack_min || self.max_delay < 1 {
            return bad("slack and delay ranges must be non-empty");
        }
        if !(0.0 < self.ratio_min && self.ratio_min <= self.ratio_max) {
            return bad("geometric ratio range must be positive");
        }
        Ok(())
    }
}

/// One point of the instance grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub horizon_minutes: u32,
    pub flights_per_hour: u32,
    pub worker_strength: f64,
    pub modes: ModeSet,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if ![60, 90, 120].contains(&self.horizon_minutes) {
            return Err(GeneratorError::Horizon(self.horizon_minutes));
        }
        if ![10, 20, 30].contains(&self.flights_per_hour) {
            return Err(GeneratorError::FlightsPerHour(self.flights_per_hour));
        }
        if !(0.1 - 1e-12..=0.9 + 1e-12).contains(&self.worker_strength) {
            return Err(GeneratorError::Strength(self.worker_strength));
        }
        Ok(())
    }

    pub fn task_count(&self) -> usize {
        (self.flights_per_hour * self.horizon_minutes / 60) as usize
    }
}

/// Generates an instance with the default constants.
pub fn generate(params: &GeneratorParams) -> Result<Instance, GeneratorError> {
    params.validate()?;
    generate_with(&GeneratorConfig::default(), params.horizon_minutes, params.task_count(), params.worker_strength, params.modes, params.seed)
}

/// Generates an instance from explicit constants, task count and strength.
/// Strength is only required to be positive and at most 1; a strength of 1
/// gives exactly the workforce that serves every task at its earliest start.
pub fn generate_with(
    config: &GeneratorConfig,
    horizon_minutes: u32,
    tasks: usize,
    strength: f64,
    modes: ModeSet,
    seed: u64,
) -> Result<Instance, GeneratorError> {
    config.validate()?;
    if !(strength > 0.0 && strength <= 1.0) {
        return Err(GeneratorError::Strength(strength));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = (horizon_minutes / config.step_minutes.max(1)) as Time;
    let levels = config.classes[0].base_xi.len();
    let mode_ids = modes.mode_indices();

    let mut profiles = Vec::new();
    for class in &config.classes {
        for &m in mode_ids {
            let mode = &config.modes[m];
            let xi: Vec<u32> = class.base_xi.iter().zip(&mode.xi_extra).map(|(a, b)| a + b).collect();
            profiles.push(Profile {
                name: format!("{}-{}", class.name, mode.name),
                xi,
            });
        }
    }
    let exec_of = |class: &ClassConfig, mode: &ModeConfig| (class.base_exec as f64 * mode.exec_factor - 1e-9).ceil().max(1.0) as Time;

    // Locations: depot first, then distinct gates.
    let centre = config.grid_size / 2;
    let mut points = vec![(centre, centre)];
    let cells = (config.grid_size * config.grid_size - 1) as usize;
    let gates = config.gates.min(cells);
    while points.len() < gates + 1 {
        let p = (rng.gen_range(0..config.grid_size), rng.gen_range(0..config.grid_size));
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let l = points.len();
    let det: Vec<Vec<Time>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| {
                    let d = (a.0 - b.0).abs() + (a.1 - b.1).abs();
                    (d + 1) / 2
                })
                .collect()
        })
        .collect();

    let total_share: f64 = config.classes.iter().map(|c| c.share).sum();
    let mut task_list = Vec::with_capacity(tasks);
    for n in 0..tasks {
        let mut pick = rng.gen::<f64>() * total_share;
        let mut c = 0;
        while c + 1 < config.classes.len() && pick >= config.classes[c].share {
            pick -= config.classes[c].share;
            c += 1;
        }
        let class = &config.classes[c];
        let es = rng.gen_range(0..horizon.max(1));
        let longest = mode_ids.iter().map(|&m| exec_of(class, &config.modes[m])).max().unwrap_or(1);
        let lf = es + longest + rng.gen_range(config.slack_min..=config.slack_max);
        let exec = (0..config.classes.len())
            .flat_map(|k| mode_ids.iter().map(move |&m| (k, m)))
            .map(|(k, m)| (k == c).then(|| exec_of(class, &config.modes[m])))
            .collect();
        task_list.push(Task {
            name: format!("t{n}"),
            location: rng.gen_range(1..l),
            es,
            lf,
            lf_ext: lf + config.lf_ext_offset,
            weight: class.weight,
            exec,
        });
    }

    let last = task_list.iter().map(|t| t.lf_ext).max().unwrap_or(0);
    let max_det = det.iter().flatten().copied().max().unwrap_or(0);
    let span = (last + max_det + config.max_delay).max(horizon) + 1;
    let bin_count = config
        .bin_count
        .unwrap_or(((span + config.bin_steps - 1) / config.bin_steps).max(1) as usize);
    let delays = generate_delays(config, &mut rng, l, bin_count);

    let mut spec = InstanceSpec {
        name: format!("gen-h{horizon_minutes}-n{tasks}-s{strength}-{modes}-{seed}"),
        alpha: config.alpha,
        gamma: config.gamma,
        objective: ObjectiveBasis::RelativeToEarliest,
        bins: TimeBins {
            length: config.bin_steps,
            count: bin_count,
        },
        depot: 0,
        profiles,
        workforce: Workforce {
            per_level: vec![0; levels],
        },
        tasks: task_list,
        travel: TravelData { det, delays },
    };
    let required = sufficient_workforce(&Instance::new(spec.clone())?);
    spec.workforce = scale_workforce(&required, strength);
    Ok(Instance::new(spec)?)
}

fn generate_delays(config: &GeneratorConfig, rng: &mut ChaCha8Rng, l: usize, bins: usize) -> Vec<Vec<Vec<Distribution>>> {
    let mut delays = vec![vec![vec![Distribution::point(0); l]; l]; bins];
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            let m = rng.gen_range(1..=config.max_delay);
            let r0 = rng.gen_range(config.ratio_min..=config.ratio_max);
            let mean0 = geometric_mean(r0, m);
            for (b, table) in delays.iter_mut().enumerate() {
                let target = (mean0 * (1.0 + config.delay_growth).powi(b as i32)).min(0.95 * m as f64);
                let r = ratio_for_mean(target, m);
                table[i][j] = truncated_geometric(r, m);
            }
        }
    }
    delays
}

fn truncated_geometric(r: f64, m: Time) -> Distribution {
    Distribution::from_weights((0..=m).map(|d| (d, r.powi(d as i32)))).expect("positive weights")
}

fn geometric_mean(r: f64, m: Time) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for d in 0..=m {
        let w = r.powi(d as i32);
        num += d as f64 * w;
        den += w;
    }
    num / den
}

/// Ratio whose truncated geometric pmf on `0..=m` has the given mean. The mean
/// is increasing in the ratio, and larger ratios dominate stochastically.
fn ratio_for_mean(target: f64, m: Time) -> f64 {
    let (mut lo, mut hi) = (1e-6_f64, 1e3_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if geometric_mean(mid, m) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Per-level worker peak when every task runs as an earliest singleton with
/// its fastest profile and the canonical composition `s_k = xi_k - xi_{k+1}`.
pub fn sufficient_workforce(inst: &Instance) -> Vec<u32> {
    let levels = inst.levels();
    let mut intervals = Vec::new();
    for i in 0..inst.num_tasks() {
        let t = &inst.tasks[i];
        let best = (0..inst.num_profiles())
            .filter_map(|q| t.exec_time(q).map(|p| (p, std::cmp::Reverse(inst.profiles[q].xi[0]), q)))
            .min();
        let Some((_, _, q)) = best else { continue };
        let Some(col) = earliest_singleton(inst, i, q) else { continue };
        let xi = &inst.profiles[q].xi;
        let s: Vec<u32> = (0..levels).map(|k| xi[k] - xi.get(k + 1).copied().unwrap_or(0)).collect();
        intervals.push((col.tl, col.tr, s));
    }
    let mut peak = vec![0; levels];
    let times: Vec<Time> = intervals.iter().map(|iv| iv.0).collect();
    for &tau in &times {
        for (k, p) in peak.iter_mut().enumerate() {
            let load: u32 = intervals.iter().filter(|iv| iv.0 <= tau && tau <= iv.1).map(|iv| iv.2[k]).sum();
            *p = (*p).max(load);
        }
    }
    peak
}

/// Scales a per-level workforce: cumulative counts are multiplied by the
/// strength and rounded down, then differenced back to exact levels.
pub fn scale_workforce(per_level: &[u32], strength: f64) -> Workforce {
    let k = per_level.len();
    let cumulative: Vec<u32> = (0..k)
        .map(|l| {
            let c: u32 = per_level[l..].iter().sum();
            (strength * c as f64 + 1e-9).floor() as u32
        })
        .collect();
    let exact = (0..k)
        .map(|l| cumulative[l] - cumulative.get(l + 1).copied().unwrap_or(0))
        .collect();
    Workforce { per_level: exact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance_to_json;

    fn params(seed: u64) -> GeneratorParams {
        GeneratorParams {
            horizon_minutes: 60,
            flights_per_hour: 10,
            worker_strength: 0.5,
            modes: ModeSet::Sif,
            seed,
        }
    }

    #[test]
    fn task_count_follows_rate_and_horizon() {
        let inst = generate(&params(1)).unwrap();
        assert_eq!(inst.num_tasks(), 10);
        let p = GeneratorParams {
            horizon_minutes: 120,
            flights_per_hour: 30,
            ..params(1)
        };
        assert_eq!(generate(&p).unwrap().num_tasks(), 60);
    }

    #[test]
    fn same_seed_gives_identical_files() {
        let a = instance_to_json(generate(&params(7)).unwrap().spec());
        let b = instance_to_json(generate(&params(7)).unwrap().spec());
        assert_eq!(a, b);
        let c = instance_to_json(generate(&params(8)).unwrap().spec());
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(matches!(generate(&GeneratorParams { horizon_minutes: 45, ..params(1) }), Err(GeneratorError::Horizon(45))));
        assert!(matches!(generate(&GeneratorParams { flights_per_hour: 15, ..params(1) }), Err(GeneratorError::FlightsPerHour(15))));
        assert!(matches!(generate(&GeneratorParams { worker_strength: 0.95, ..params(1) }), Err(GeneratorError::Strength(_))));
        assert!("fs".parse::<ModeSet>().is_err());
    }

    #[test]
    fn windows_and_delays_follow_the_documented_family() {
        let inst = generate(&params(3)).unwrap();
        for t in &inst.tasks {
            assert_eq!(t.lf_ext, t.lf + 5);
            assert!(t.es < 30);
        }
        assert!(inst.travel().bins_monotone());
        assert!(inst.travel().reset_safe());
        for table in &inst.travel.delays {
            for (i, row) in table.iter().enumerate() {
                for (j, d) in row.iter().enumerate() {
                    if i != j {
                        assert!((2..=5).contains(&d.len()));
                        assert!(d.min_time() == 0 && d.max_time() <= 4);
                    }
                }
            }
        }
    }

    #[test]
    fn faster_modes_need_more_workers() {
        let inst = generate(&params(4)).unwrap();
        assert_eq!(inst.num_profiles(), 9);
        for class in 0..3 {
            let (slow, mid, fast) = (&inst.profiles[3 * class], &inst.profiles[3 * class + 1], &inst.profiles[3 * class + 2]);
            assert!(slow.xi[0] < mid.xi[0] && mid.xi[0] < fast.xi[0]);
        }
        for t in &inst.tasks {
            let ex: Vec<Time> = t.exec.iter().flatten().copied().collect();
            assert_eq!(ex.len(), 3);
            assert!(ex[0] > ex[1] && ex[1] > ex[2]);
        }
    }

    #[test]
    fn scaling_keeps_cumulative_counts_monotone() {
        let w = scale_workforce(&[3, 2, 4], 0.5);
        // cumulative 9, 6, 4 -> 4, 3, 2
        assert_eq!(w.per_level, vec![1, 1, 2]);
        assert_eq!(scale_workforce(&[3, 2, 4], 1.0).per_level, vec![3, 2, 4]);
    }

    #[test]
    fn geometric_ratio_inverts_the_mean() {
        for m in 1..=4 {
            for &target in &[0.1, 0.5, 0.9 * m as f64] {
                let r = ratio_for_mean(target, m);
                assert!((geometric_mean(r, m) - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tiny_config_produces_small_instances() {
        let cfg = GeneratorConfig::tiny();
        let inst = generate_with(&cfg, 40, 5, 0.7, ModeSet::Sf, 11).unwrap();
        assert_eq!(inst.num_profiles(), 2);
        assert_eq!(inst.levels(), 2);
        assert_eq!(inst.bins.count, 2);
        for table in &inst.travel.delays {
            assert!(table.iter().flatten().all(|d| d.len() <= 3));
        }
    }
}

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::compositions::{enumerate_skill_compositions, SkillComposition};
use super::travel::{EdgeTravel, TravelModel};
use crate::distributions::{DistributionError, Time};
use crate::Distribution;

/// Reference point of the finish-time part of the route cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveBasis {
    /// `w_i E[(F_i - EF_i) + P_i(F_i)]`, zero for a task finished at its earliest.
    #[default]
    RelativeToEarliest,
    /// `w_i E[F_i + P_i(F_i)]`.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub name: String,
    pub location: usize,
    pub es: Time,
    pub lf: Time,
    pub lf_ext: Time,
    pub weight: f64,
    /// Execution time per profile; `None` where the profile cannot serve the task.
    pub exec: Vec<Option<Time>>,
}

impl Task {
    pub fn exec_time(&self, profile: usize) -> Option<Time> {
        self.exec.get(profile).copied().flatten()
    }

    pub fn supports(&self, profile: usize) -> bool {
        self.exec_time(profile).is_some()
    }

    pub fn earliest_finish(&self) -> Time {
        self.es + self.exec.iter().flatten().min().copied().unwrap_or(0)
    }

    /// Quadratic lateness penalty `(f - LF)^2` for `f > LF`.
    pub fn penalty(&self, f: Time) -> f64 {
        if f > self.lf {
            let d = (f - self.lf) as f64;
            d * d
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    /// Cumulative requirement: `xi[k]` workers of level `k + 1` or higher.
    pub xi: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Workforce {
    /// Workers of exactly each level.
    pub per_level: Vec<u32>,
}

impl Workforce {
    pub fn levels(&self) -> usize {
        self.per_level.len()
    }

    /// Workers of level `k + 1` or higher.
    pub fn cumulative(&self, k: usize) -> u32 {
        self.per_level[k..].iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBins {
    pub length: Time,
    pub count: usize,
}

impl TimeBins {
    pub fn horizon(&self) -> Time {
        self.length * self.count as Time
    }

    /// Bin index of `t`; times outside the horizon fall into the first or last bin.
    pub fn bin_of(&self, t: Time) -> usize {
        if t < 0 {
            return 0;
        }
        ((t / self.length) as usize).min(self.count - 1)
    }
}

/// Raw travel data: deterministic part per location pair and delay pmfs per bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelData {
    /// `det[i][j]`, deterministic travel time between locations.
    pub det: Vec<Vec<Time>>,
    /// `delays[bin][i][j]`, nonnegative delay distribution.
    pub delays: Vec<Vec<Vec<Distribution>>>,
}

impl TravelData {
    pub fn locations(&self) -> usize {
        self.det.len()
    }
}

/// Plain instance data as stored in files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub name: String,
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub objective: ObjectiveBasis,
    pub bins: TimeBins,
    pub depot: usize,
    pub profiles: Vec<Profile>,
    pub workforce: Workforce,
    pub tasks: Vec<Task>,
    pub travel: TravelData,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("service level alpha = {0} must lie in (0, 1]")]
    Alpha(f64),
    #[error("workforce quantile gamma = {0} must lie in (0, 1]")]
    Gamma(f64),
    #[error("time bins must have positive length and count")]
    Bins,
    #[error("instance has no skill levels")]
    NoLevels,
    #[error("profile {0}: xi must have one entry per skill level")]
    ProfileLevels(usize),
    #[error("profile {0}: xi must be non-increasing with xi_1 >= 1")]
    ProfileRequirement(usize),
    #[error("task {0}: windows must satisfy ES <= LF <= LF_e")]
    Window(usize),
    #[error("task {0}: weight must be finite and nonnegative")]
    Weight(usize),
    #[error("task {0}: needs one execution-time entry per profile")]
    ExecLength(usize),
    #[error("task {0}: execution times must be positive")]
    ExecTime(usize),
    #[error("task {0}: no compatible profile")]
    NoProfile(usize),
    #[error("task {0}: location out of range")]
    TaskLocation(usize),
    #[error("depot location out of range")]
    DepotLocation,
    #[error("travel data must be square with one delay table per bin")]
    TravelShape,
    #[error("travel from {0} to {1}: deterministic time must be nonnegative")]
    NegativeTravel(usize, usize),
    #[error("travel from {from} to {to} in bin {bin}: delays must be nonnegative")]
    NegativeDelay { bin: usize, from: usize, to: usize },
    #[error("distribution: {0}")]
    Distribution(#[from] DistributionError),
}

/// Validated instance with derived data (skill compositions, travel quantiles).
#[derive(Clone, Debug)]
pub struct Instance {
    spec: InstanceSpec,
    compositions: Vec<Vec<SkillComposition>>,
    travel: TravelModel,
    profile_tasks: Vec<Vec<usize>>,
}

impl Deref for Instance {
    type Target = InstanceSpec;
    fn deref(&self) -> &InstanceSpec {
        &self.spec
    }
}

impl Instance {
    pub fn new(spec: InstanceSpec) -> Result<Self, InstanceError> {
        validate(&spec, false)?;
        Self::derive(spec)
    }

    /// Same instance without the service-level constraint: only the hard
    /// cap `F <= LF_e` remains. Used for perfect-information benchmarks.
    pub fn without_service_level(&self) -> Result<Self, InstanceError> {
        let mut spec = self.spec.clone();
        spec.alpha = 0.0;
        validate(&spec, true)?;
        Self::derive(spec)
    }

    fn derive(spec: InstanceSpec) -> Result<Self, InstanceError> {
        let compositions = spec
            .profiles
            .iter()
            .map(|p| enumerate_skill_compositions(&p.xi))
            .collect();
        let travel = TravelModel::new(&spec)?;
        let profile_tasks = (0..spec.profiles.len())
            .map(|q| (0..spec.tasks.len()).filter(|&i| spec.tasks[i].supports(q)).collect())
            .collect();
        Ok(Self {
            spec,
            compositions,
            travel,
            profile_tasks,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn into_spec(self) -> InstanceSpec {
        self.spec
    }

    /// Same instance with different service level and workforce quantile.
    pub fn with_levels(&self, alpha: f64, gamma: f64) -> Result<Self, InstanceError> {
        let mut spec = self.spec.clone();
        spec.alpha = alpha;
        spec.gamma = gamma;
        Self::new(spec)
    }

    /// Same instance with every edge distribution replaced.
    pub fn with_delays(&self, delays: Vec<Vec<Vec<Distribution>>>) -> Result<Self, InstanceError> {
        let mut spec = self.spec.clone();
        spec.travel.delays = delays;
        let hard = spec.alpha == 0.0;
        validate(&spec, hard)?;
        Self::derive(spec)
    }

    pub fn levels(&self) -> usize {
        self.spec.workforce.levels()
    }

    pub fn num_tasks(&self) -> usize {
        self.spec.tasks.len()
    }

    pub fn num_profiles(&self) -> usize {
        self.spec.profiles.len()
    }

    pub fn compositions(&self, profile: usize) -> &[SkillComposition] {
        &self.compositions[profile]
    }

    /// Tasks that profile `q` can serve.
    pub fn profile_tasks(&self, profile: usize) -> &[usize] {
        &self.profile_tasks[profile]
    }

    pub fn travel(&self) -> &TravelModel {
        &self.travel
    }

    /// Travel between two locations in the bin containing time `t`.
    pub fn edge_at(&self, t: Time, from: usize, to: usize) -> &EdgeTravel {
        self.travel.edge(self.spec.bins.bin_of(t), from, to)
    }

    /// An upper bound on every time a feasible column can occupy workers.
    pub fn time_horizon(&self) -> Time {
        let last = self.spec.tasks.iter().map(|t| t.lf_ext).max().unwrap_or(0);
        last + self.travel.max_travel() + 1
    }

    /// Cost of a task finishing with distribution `f`.
    pub fn task_cost(&self, task: usize, f: &Distribution) -> f64 {
        let t = &self.spec.tasks[task];
        let base = match self.spec.objective {
            ObjectiveBasis::RelativeToEarliest => t.earliest_finish() as f64,
            ObjectiveBasis::Absolute => 0.0,
        };
        t.weight * f.expect(|x| (x as f64 - base) + t.penalty(x))
    }
}

fn validate(spec: &InstanceSpec, allow_zero_alpha: bool) -> Result<(), InstanceError> {
    let alpha_ok = spec.alpha <= 1.0 && (spec.alpha > 0.0 || (allow_zero_alpha && spec.alpha == 0.0));
    if !alpha_ok {
        return Err(InstanceError::Alpha(spec.alpha));
    }
    if !(spec.gamma > 0.0 && spec.gamma <= 1.0) {
        return Err(InstanceError::Gamma(spec.gamma));
    }
    if spec.bins.length <= 0 || spec.bins.count == 0 {
        return Err(InstanceError::Bins);
    }
    let levels = spec.workforce.levels();
    if levels == 0 {
        return Err(InstanceError::NoLevels);
    }
    for (q, p) in spec.profiles.iter().enumerate() {
        if p.xi.len() != levels {
            return Err(InstanceError::ProfileLevels(q));
        }
        if p.xi[0] == 0 || p.xi.windows(2).any(|w| w[1] > w[0]) {
            return Err(InstanceError::ProfileRequirement(q));
        }
    }
    let locations = spec.travel.locations();
    if spec.depot >= locations {
        return Err(InstanceError::DepotLocation);
    }
    for (i, t) in spec.tasks.iter().enumerate() {
        if !(t.es <= t.lf && t.lf <= t.lf_ext) {
            return Err(InstanceError::Window(i));
        }
        if !(t.weight.is_finite() && t.weight >= 0.0) {
            return Err(InstanceError::Weight(i));
        }
        if t.exec.len() != spec.profiles.len() {
            return Err(InstanceError::ExecLength(i));
        }
        if t.exec.iter().flatten().any(|&p| p <= 0) {
            return Err(InstanceError::ExecTime(i));
        }
        if t.exec.iter().all(Option::is_none) {
            return Err(InstanceError::NoProfile(i));
        }
        if t.location >= locations {
            return Err(InstanceError::TaskLocation(i));
        }
    }
    let tr = &spec.travel;
    if tr.det.iter().any(|row| row.len() != locations) || tr.delays.len() != spec.bins.count {
        return Err(InstanceError::TravelShape);
    }
    for (b, table) in tr.delays.iter().enumerate() {
        if table.len() != locations || table.iter().any(|row| row.len() != locations) {
            return Err(InstanceError::TravelShape);
        }
        for (i, row) in table.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                if d.min_time() < 0 {
                    return Err(InstanceError::NegativeDelay { bin: b, from: i, to: j });
                }
            }
        }
    }
    for (i, row) in tr.det.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0 {
                return Err(InstanceError::NegativeTravel(i, j));
            }
        }
    }
    Ok(())
}

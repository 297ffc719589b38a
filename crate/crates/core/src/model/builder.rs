use super::instance::{Instance, InstanceError, InstanceSpec, ObjectiveBasis, Profile, Task, TimeBins, TravelData, Workforce};
use crate::distributions::Time;
use crate::Distribution;

/// Programmatic construction of small instances. Delays default to zero.
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    spec: InstanceSpec,
}

impl InstanceBuilder {
    /// `det` is the deterministic travel matrix; location `depot` hosts the depot.
    pub fn new(det: Vec<Vec<Time>>, depot: usize, bins: TimeBins, workforce: Vec<u32>) -> Self {
        let l = det.len();
        let delays = vec![vec![vec![Distribution::point(0); l]; l]; bins.count];
        Self {
            spec: InstanceSpec {
                name: "instance".into(),
                alpha: 0.9,
                gamma: 0.9,
                objective: ObjectiveBasis::RelativeToEarliest,
                bins,
                depot,
                profiles: Vec::new(),
                workforce: Workforce { per_level: workforce },
                tasks: Vec::new(),
                travel: TravelData { det, delays },
            },
        }
    }

    pub fn name(mut self, name: &str) -> Self {
        self.spec.name = name.into();
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.spec.alpha = alpha;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.spec.gamma = gamma;
        self
    }

    pub fn objective(mut self, objective: ObjectiveBasis) -> Self {
        self.spec.objective = objective;
        self
    }

    pub fn profile(mut self, name: &str, xi: Vec<u32>) -> Self {
        self.spec.profiles.push(Profile { name: name.into(), xi });
        self
    }

    #[allow(clippy::too_many_arguments)]
    pub fn task(mut self, name: &str, location: usize, es: Time, lf: Time, lf_ext: Time, weight: f64, exec: Vec<Option<Time>>) -> Self {
        self.spec.tasks.push(Task {
            name: name.into(),
            location,
            es,
            lf,
            lf_ext,
            weight,
            exec,
        });
        self
    }

    /// Delay distribution of `from -> to` in `bin`.
    pub fn delay(mut self, bin: usize, from: usize, to: usize, dist: Distribution) -> Self {
        self.spec.travel.delays[bin][from][to] = dist;
        self
    }

    /// Same delay in every bin.
    pub fn delay_all_bins(mut self, from: usize, to: usize, dist: Distribution) -> Self {
        for table in &mut self.spec.travel.delays {
            table[from][to] = dist.clone();
        }
        self
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn into_spec(self) -> InstanceSpec {
        self.spec
    }

    pub fn build(self) -> Result<Instance, InstanceError> {
        Instance::new(self.spec)
    }
}

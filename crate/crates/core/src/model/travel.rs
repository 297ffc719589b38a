use super::instance::{InstanceError, InstanceSpec};
use crate::distributions::Time;
use crate::Distribution;

/// Full travel-time distribution of one edge in one bin, with cached quantiles.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTravel {
    pub det: Time,
    /// `t^det + delay`.
    pub dist: Distribution,
    /// Travel time in the workforce scenario (gamma-quantile).
    pub q_gamma: Time,
    /// Travel time at the service level (alpha-quantile).
    pub q_alpha: Time,
    pub min: Time,
    pub max: Time,
}

#[derive(Clone, Debug)]
pub struct TravelModel {
    locations: usize,
    bins: usize,
    edges: Vec<EdgeTravel>,
    max_travel: Time,
    reset_safe: bool,
    bins_monotone: bool,
}

impl TravelModel {
    pub fn new(spec: &InstanceSpec) -> Result<Self, InstanceError> {
        let l = spec.travel.locations();
        let bins = spec.bins.count;
        let mut edges = Vec::with_capacity(bins * l * l);
        let mut max_travel = 0;
        let mut max_delay = 0;
        for b in 0..bins {
            for i in 0..l {
                for j in 0..l {
                    let det = spec.travel.det[i][j];
                    let delay = &spec.travel.delays[b][i][j];
                    max_delay = max_delay.max(delay.max_time());
                    let dist = delay.shift(det);
                    let e = EdgeTravel {
                        det,
                        q_gamma: dist.quantile(spec.gamma)?,
                        // Without a service level any realization is acceptable.
                        q_alpha: if spec.alpha > 0.0 { dist.quantile(spec.alpha)? } else { dist.min_time() },
                        min: dist.min_time(),
                        max: dist.max_time(),
                        dist,
                    };
                    max_travel = max_travel.max(e.max);
                    edges.push(e);
                }
            }
        }
        let det = &spec.travel.det;
        let metric = (0..l).all(|i| {
            (0..l).all(|j| (0..l).all(|k| det[i][j] <= det[i][k] + det[k][j]))
        });
        let min_exec = spec
            .tasks
            .iter()
            .flat_map(|t| t.exec.iter().flatten().copied())
            .min()
            .unwrap_or(0);
        let mut model = Self {
            locations: l,
            bins,
            edges,
            max_travel,
            reset_safe: metric && max_delay <= min_exec,
            bins_monotone: true,
        };
        model.bins_monotone = (0..l).all(|i| {
            (0..l).all(|j| {
                (0..bins.saturating_sub(1)).all(|b| {
                    let (a, c) = (&model.edge(b, i, j).dist, &model.edge(b + 1, i, j).dist);
                    let lo = a.min_time().min(c.min_time());
                    let hi = a.max_time().max(c.max_time());
                    a.dominates_stochastically(c, lo, hi)
                })
            })
        });
        Ok(model)
    }

    pub fn edge(&self, bin: usize, from: usize, to: usize) -> &EdgeTravel {
        &self.edges[(bin * self.locations + from) * self.locations + to]
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn locations(&self) -> usize {
        self.locations
    }

    pub fn max_travel(&self) -> Time {
        self.max_travel
    }

    /// Reduce a statistic over all bins of one edge.
    pub fn over_bins<F, G>(&self, from: usize, to: usize, stat: F, pick: G) -> Time
    where
        F: Fn(&EdgeTravel) -> Time,
        G: Fn(Time, Time) -> Time,
    {
        (1..self.bins).fold(stat(self.edge(0, from, to)), |acc, b| {
            pick(acc, stat(self.edge(b, from, to)))
        })
    }

    /// Deterministic times form a metric and no delay exceeds the shortest
    /// execution time. Under these conditions a task that cannot be reached
    /// directly cannot be reached through intermediate tasks either.
    pub fn reset_safe(&self) -> bool {
        self.reset_safe
    }

    /// Every edge's travel time is stochastically non-decreasing across bins.
    pub fn bins_monotone(&self) -> bool {
        self.bins_monotone
    }
}

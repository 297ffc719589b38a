//! Finite-support probability mass functions over integer time steps.

use std::fmt;

use bpcs_lp::Scalar;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Integer time step on the planning grid.
pub type Time = i64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("distribution has empty support")]
    Empty,
    #[error("probability {0} is negative or not finite")]
    BadProbability(f64),
    #[error("probabilities sum to {0}, expected 1")]
    MassNotOne(f64),
    #[error("quantile level {0} is outside (0, 1]")]
    BadLevel(f64),
}

/// Pmf with strictly increasing support times and positive probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<P = f64> {
    support: Vec<(Time, P)>,
}

fn mass_tol<P: Scalar>() -> P {
    P::feasibility_tol() * P::of(0.01)
}

fn prune_tol<P: Scalar>() -> P {
    mass_tol::<P>() * P::of(1e-3)
}

impl<P: Scalar> DiscreteDistribution<P> {
    pub fn point(t: Time) -> Self {
        Self {
            support: vec![(t, P::one())],
        }
    }

    /// Builds a distribution, merging repeated times and dropping zero masses.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (Time, P)>,
    {
        let mut v: Vec<(Time, P)> = pairs.into_iter().collect();
        for &(_, p) in &v {
            if !p.is_finite() || p < P::zero() {
                return Err(DistributionError::BadProbability(p.as_f64()));
            }
        }
        v.sort_by_key(|&(t, _)| t);
        let mut support: Vec<(Time, P)> = Vec::with_capacity(v.len());
        for (t, p) in v {
            match support.last_mut() {
                Some((lt, lp)) if *lt == t => *lp += p,
                _ => support.push((t, p)),
            }
        }
        support.retain(|&(_, p)| p > P::zero());
        if support.is_empty() {
            return Err(DistributionError::Empty);
        }
        let total = support.iter().fold(P::zero(), |a, &(_, p)| a + p);
        if (total - P::one()).abs() > mass_tol() {
            return Err(DistributionError::MassNotOne(total.as_f64()));
        }
        Ok(Self { support })
    }

    /// Normalizes arbitrary nonnegative weights into a distribution.
    pub fn from_weights<I>(weights: I) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (Time, P)>,
    {
        let v: Vec<(Time, P)> = weights.into_iter().collect();
        let total = v.iter().fold(P::zero(), |a, &(_, p)| a + p);
        if !(total > P::zero()) {
            return Err(DistributionError::Empty);
        }
        Self::from_pairs(v.into_iter().map(|(t, p)| (t, p / total)))
    }

    pub fn support(&self) -> &[(Time, P)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.support.len() == 1
    }

    pub fn min_time(&self) -> Time {
        self.support[0].0
    }

    pub fn max_time(&self) -> Time {
        self.support[self.support.len() - 1].0
    }

    pub fn total_mass(&self) -> P {
        self.support.iter().fold(P::zero(), |a, &(_, p)| a + p)
    }

    /// Distribution of the independent sum.
    pub fn convolve(&self, other: &Self) -> Self {
        if other.is_point() {
            return self.shift(other.min_time());
        }
        if self.is_point() {
            return other.shift(self.min_time());
        }
        let lo = self.min_time() + other.min_time();
        let width = (self.max_time() + other.max_time() - lo + 1) as usize;
        let mut dense = vec![P::zero(); width];
        for &(ta, pa) in &self.support {
            for &(tb, pb) in &other.support {
                dense[(ta + tb - lo) as usize] += pa * pb;
            }
        }
        Self::from_dense(lo, dense)
    }

    fn from_dense(lo: Time, dense: Vec<P>) -> Self {
        let cut = prune_tol::<P>();
        let mut support: Vec<(Time, P)> = dense
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p >= cut)
            .map(|(i, p)| (lo + i as Time, p))
            .collect();
        let total = support.iter().fold(P::zero(), |a, &(_, p)| a + p);
        for e in support.iter_mut() {
            e.1 /= total;
        }
        Self { support }
    }

    /// Moves all mass at or below `floor` onto `floor`.
    pub fn truncate_left(&self, floor: Time) -> Self {
        if self.min_time() >= floor {
            return self.clone();
        }
        let below = self
            .support
            .iter()
            .take_while(|&&(t, _)| t <= floor)
            .fold(P::zero(), |a, &(_, p)| a + p);
        let mut support = vec![(floor, below)];
        support.extend(self.support.iter().copied().filter(|&(t, _)| t > floor));
        Self { support }
    }

    pub fn shift(&self, dt: Time) -> Self {
        Self {
            support: self.support.iter().map(|&(t, p)| (t + dt, p)).collect(),
        }
    }

    /// Smallest support time whose cumulative probability reaches `gamma`.
    pub fn quantile(&self, gamma: P) -> Result<Time, DistributionError> {
        if !(gamma > P::zero()) || gamma > P::one() {
            return Err(DistributionError::BadLevel(gamma.as_f64()));
        }
        if gamma >= P::one() {
            return Ok(self.max_time());
        }
        let target = gamma - prune_tol::<P>();
        let mut cum = P::zero();
        for &(t, p) in &self.support {
            cum += p;
            if cum >= target {
                return Ok(t);
            }
        }
        Ok(self.max_time())
    }

    /// Lower median, `quantile(0.5)`.
    pub fn median(&self) -> Time {
        self.quantile(P::of(0.5)).expect("0.5 is a valid level")
    }

    pub fn expectation(&self) -> P {
        self.support
            .iter()
            .fold(P::zero(), |a, &(t, p)| a + P::of(t as f64) * p)
    }

    /// Expectation of `f` applied to the time.
    pub fn expect<F: Fn(Time) -> P>(&self, f: F) -> P {
        self.support.iter().fold(P::zero(), |a, &(t, p)| a + f(t) * p)
    }

    pub fn variance(&self) -> P {
        let m = self.expectation();
        self.expect(|t| {
            let d = P::of(t as f64) - m;
            d * d
        })
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: Time) -> P {
        self.support
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .fold(P::zero(), |a, &(_, p)| a + p)
    }

    /// `P(X > t)`, summed over the upper tail to avoid cancellation.
    pub fn tail_above(&self, t: Time) -> P {
        self.support
            .iter()
            .filter(|&&(s, _)| s > t)
            .fold(P::zero(), |a, &(_, p)| a + p)
    }

    /// True iff `P(self <= tau) >= P(other <= tau)` for every integer `tau`
    /// in `[lo, hi]`.
    pub fn dominates_stochastically(&self, other: &Self, lo: Time, hi: Time) -> bool {
        if lo > hi {
            return true;
        }
        let tol = prune_tol::<P>();
        let (mut ia, mut ib) = (0usize, 0usize);
        let (mut ca, mut cb) = (P::zero(), P::zero());
        let advance = |tau: Time, ia: &mut usize, ib: &mut usize, ca: &mut P, cb: &mut P| {
            while *ia < self.support.len() && self.support[*ia].0 <= tau {
                *ca += self.support[*ia].1;
                *ia += 1;
            }
            while *ib < other.support.len() && other.support[*ib].0 <= tau {
                *cb += other.support[*ib].1;
                *ib += 1;
            }
        };
        advance(lo, &mut ia, &mut ib, &mut ca, &mut cb);
        if ca < cb - tol {
            return false;
        }
        // The CDFs only change at support points, so checking those suffices.
        let mut points: Vec<Time> = self
            .support
            .iter()
            .chain(other.support.iter())
            .map(|&(t, _)| t)
            .filter(|&t| t > lo && t <= hi)
            .collect();
        points.sort_unstable();
        points.dedup();
        for tau in points {
            advance(tau, &mut ia, &mut ib, &mut ca, &mut cb);
            if ca < cb - tol {
                return false;
            }
        }
        true
    }

    /// Exact equality of support with probabilities equal within tolerance.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let tol = mass_tol::<P>();
        self.support.len() == other.support.len()
            && self
                .support
                .iter()
                .zip(&other.support)
                .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= tol)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Time, P)> + '_ {
        self.support.iter().copied()
    }
}

impl<P: Scalar> fmt::Display for DiscreteDistribution<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (t, p)) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", t, p)?;
        }
        write!(f, "}}")
    }
}

impl<P: Scalar> Serialize for DiscreteDistribution<P> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(Time, f64)> = self.support.iter().map(|&(t, p)| (t, p.as_f64())).collect();
        pairs.serialize(s)
    }
}

impl<'de, P: Scalar> Deserialize<'de> for DiscreteDistribution<P> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs: Vec<(Time, f64)> = Vec::deserialize(d)?;
        Self::from_pairs(pairs.into_iter().map(|(t, p)| (t, P::of(p)))).map_err(D::Error::custom)
    }
}

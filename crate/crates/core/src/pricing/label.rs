use crate::distributions::Time;
use crate::Distribution;

/// Fixed-size bit set over task ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TaskSet {
    words: Vec<u64>,
}

impl TaskSet {
    pub fn new(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::new(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

/// Whether `(a \ ra) ∩ mask ⊆ (b \ rb)`.
pub(crate) fn blocked_subset(a: &TaskSet, ra: &TaskSet, b: &TaskSet, rb: &TaskSet, mask: &TaskSet) -> bool {
    a.words
        .iter()
        .zip(&ra.words)
        .zip(b.words.iter().zip(&rb.words))
        .zip(&mask.words)
        .all(|(((a, ra), (b, rb)), m)| (a & !ra) & m & !(b & !rb) == 0)
}

/// A partial path from the depot.
#[derive(Clone, Debug)]
pub struct Label {
    pub tl: Time,
    pub path: Vec<usize>,
    pub finish: Distribution,
    pub gamma_finish: Time,
    pub median: Time,
    /// Reduced cost accumulated so far.
    pub cost: f64,
    /// Workforce part of `cost`, `-sum δ β` over `[tl, gamma_finish]`.
    pub charge: f64,
    /// Fractional cut resources, one per cut.
    pub carry: Vec<f64>,
    pub(crate) visited: TaskSet,
    /// Tasks proven unreachable from here; their resource is reset.
    pub(crate) unreachable: TaskSet,
    /// Equal to a prefix of a forbidden or penalised route.
    pub(crate) special_prefix: bool,
}

impl Label {
    pub fn node(&self) -> usize {
        *self.path.last().expect("labels are never empty")
    }

    /// Task resource: true while `task` may still be visited or after it
    /// has been reset as unreachable, false once visited.
    pub fn perf(&self, task: usize) -> bool {
        !self.visited.contains(task) || self.unreachable.contains(task)
    }

    pub fn visits(&self, task: usize) -> bool {
        self.visited.contains(task)
    }

    pub fn is_elementary(&self) -> bool {
        self.visited.len() == self.path.len()
    }
}

/// A label closed at the depot.
#[derive(Clone, Debug, PartialEq)]
pub struct SinkLabel {
    pub tl: Time,
    pub path: Vec<usize>,
    pub tr: Time,
    /// Reduced cost in the network, before route-specific penalties.
    pub cost: f64,
    /// Workforce part of `cost` over `[tl, tr]`.
    pub charge: f64,
}

/// First vertex whose second visit comes earliest along `path`.
pub fn first_repeated(path: &[usize]) -> Option<usize> {
    path.iter().enumerate().find(|&(p, v)| path[..p].contains(v)).map(|(_, &v)| v)
}

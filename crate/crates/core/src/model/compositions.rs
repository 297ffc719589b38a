use serde::{Deserialize, Serialize};

/// Workers of exactly each skill level (index 0 is level 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillComposition(pub Vec<u32>);

impl SkillComposition {
    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, k: usize) -> u32 {
        self.0[k]
    }

    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Checks `sum s = xi_1` and `sum_{k >= k'} s_k >= xi_{k'}` for all `k'`.
    pub fn realizes(&self, xi: &[u32]) -> bool {
        if self.0.len() != xi.len() || xi.is_empty() || self.size() != xi[0] {
            return false;
        }
        let mut tail = 0u32;
        for k in (0..xi.len()).rev() {
            tail += self.0[k];
            if tail < xi[k] {
                return false;
            }
        }
        true
    }
}

/// All skill compositions realizing the cumulative requirement `xi`, in
/// lexicographic order.
pub fn enumerate_skill_compositions(xi: &[u32]) -> Vec<SkillComposition> {
    let levels = xi.len();
    let mut out = Vec::new();
    if levels == 0 {
        return out;
    }
    let total = xi[0];
    let mut cur = vec![0u32; levels];
    // Fill from the top level down so the tail sums are known at each step.
    fn rec(k: usize, remaining: u32, tail: u32, xi: &[u32], cur: &mut Vec<u32>, out: &mut Vec<SkillComposition>) {
        if k == 0 {
            let s0 = remaining;
            if tail + s0 >= xi[0] {
                cur[0] = s0;
                out.push(SkillComposition(cur.clone()));
            }
            return;
        }
        for sk in 0..=remaining {
            if tail + sk < xi[k] {
                continue;
            }
            cur[k] = sk;
            rec(k - 1, remaining - sk, tail + sk, xi, cur, out);
        }
        cur[k] = 0;
    }
    rec(levels - 1, total, 0, xi, &mut cur, &mut out);
    out.sort();
    out
}

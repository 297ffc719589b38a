//! Best-first branch-and-bound on LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::problem::{LinearProgram, LpError};
use crate::scalar::Scalar;
use crate::simplex::{solve_lp_with, LpStatus, SimplexOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MipStatus {
    /// Search completed; the incumbent is optimal within the gap tolerance.
    Optimal,
    /// A limit was hit with an incumbent available.
    Feasible,
    Infeasible,
    Unbounded,
    /// A limit was hit before any integer solution was found.
    NoSolution,
}

#[derive(Clone, Debug)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub simplex: SimplexOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: 100_000,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MipSolution<T> {
    pub status: MipStatus,
    pub x: Option<Vec<T>>,
    pub objective: Option<T>,
    /// Best proven lower bound.
    pub bound: T,
    pub nodes: usize,
}

struct Node<T> {
    bound: T,
    id: usize,
    changes: Vec<(usize, T, T)>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Node<T> {
    // BinaryHeap is a max-heap: invert so the smallest bound, then id, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .as_f64()
            .total_cmp(&self.bound.as_f64())
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Callback invoked with each improving integer solution and its objective.
pub type IncumbentCallback<'a, T> = &'a mut dyn FnMut(&[T], T);

pub fn solve_mip<T: Scalar>(
    lp: &LinearProgram<T>,
    opts: &MipOptions,
    mut on_incumbent: Option<IncumbentCallback<'_, T>>,
) -> Result<MipSolution<T>, LpError> {
    lp.validate()?;
    let start = Instant::now();
    let int_tol = T::integrality_tol();
    let mut heap: BinaryHeap<Node<T>> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut incumbent: Option<(Vec<T>, T)> = None;
    let mut nodes = 0usize;
    let mut pending: Option<Node<T>> = Some(Node {
        bound: T::neg_infinity(),
        id: 0,
        changes: Vec::new(),
    });
    let mut limit_hit = false;
    let mut work = lp.clone();

    loop {
        let node = match pending.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if let Some((_, inc)) = &incumbent {
            if node.bound >= *inc - gap_allowance(*inc) {
                continue;
            }
        }
        if nodes >= opts.node_limit || opts.time_limit.is_some_and(|tl| start.elapsed() >= tl) {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;
        for (j, v) in lp.vars().iter().enumerate() {
            work.set_bounds(j, v.lower, v.upper);
        }
        let mut empty = false;
        for &(j, lo, up) in &node.changes {
            let v = work.var(j);
            let (nl, nu) = (v.lower.max(lo), v.upper.min(up));
            if nl > nu {
                empty = true;
            }
            work.set_bounds(j, nl, nu);
        }
        if empty {
            continue;
        }
        let sol = solve_lp_with(&work, &opts.simplex, None)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(MipSolution {
                        status: MipStatus::Unbounded,
                        x: None,
                        objective: None,
                        bound: T::neg_infinity(),
                        nodes,
                    });
                }
                continue;
            }
            LpStatus::IterationLimit => {
                limit_hit = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        let obj = sol.objective;
        if let Some((_, inc)) = &incumbent {
            if obj >= *inc - gap_allowance(*inc) {
                continue;
            }
        }
        let mut branch: Option<(usize, T, T)> = None;
        for (j, v) in lp.vars().iter().enumerate() {
            if !v.integer {
                continue;
            }
            let xj = sol.x[j];
            let frac = xj - xj.floor();
            if frac <= int_tol || frac >= T::one() - int_tol {
                continue;
            }
            let score = (frac - T::of(0.5)).abs();
            if branch.is_none_or(|(_, _, s)| score < s) {
                branch = Some((j, xj, score));
            }
        }
        match branch {
            None => {
                let mut x = sol.x.clone();
                for (j, v) in lp.vars().iter().enumerate() {
                    if v.integer {
                        x[j] = x[j].round();
                    }
                }
                let val = lp.objective_value(&x);
                if incumbent.as_ref().is_none_or(|(_, inc)| val < *inc) {
                    if let Some(cb) = on_incumbent.as_mut() {
                        cb(&x, val);
                    }
                    incumbent = Some((x, val));
                }
            }
            Some((j, xj, _)) => {
                let down = Node {
                    bound: obj,
                    id: next_id,
                    changes: with_change(&node.changes, (j, T::neg_infinity(), xj.floor())),
                };
                let up = Node {
                    bound: obj,
                    id: next_id + 1,
                    changes: with_change(&node.changes, (j, xj.ceil(), T::infinity())),
                };
                next_id += 2;
                if incumbent.is_none() {
                    // Plunge toward the nearer rounding until a first incumbent exists.
                    let (first, second) = if xj - xj.floor() >= T::of(0.5) {
                        (up, down)
                    } else {
                        (down, up)
                    };
                    heap.push(second);
                    pending = Some(first);
                } else {
                    heap.push(down);
                    heap.push(up);
                }
            }
        }
    }

    let open_bound = heap
        .iter()
        .map(|n| n.bound)
        .fold(T::infinity(), |a, b| a.min(b));
    let (status, x, objective, bound) = match incumbent {
        Some((x, val)) => {
            let proven = !limit_hit || open_bound >= val - gap_allowance(val);
            let status = if proven {
                MipStatus::Optimal
            } else {
                MipStatus::Feasible
            };
            let bound = if proven { val } else { open_bound.min(val) };
            (status, Some(x), Some(val), bound)
        }
        None => {
            if limit_hit {
                (MipStatus::NoSolution, None, None, open_bound)
            } else {
                (MipStatus::Infeasible, None, None, T::infinity())
            }
        }
    };
    Ok(MipSolution {
        status,
        x,
        objective,
        bound,
        nodes,
    })
}

fn gap_allowance<T: Scalar>(inc: T) -> T {
    T::gap_tol() * T::one().max(inc.abs())
}

fn with_change<T: Scalar>(base: &[(usize, T, T)], c: (usize, T, T)) -> Vec<(usize, T, T)> {
    let mut v = base.to_vec();
    v.push(c);
    v
}

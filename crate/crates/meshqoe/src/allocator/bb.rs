//! Exact best-first branch-and-bound over the LP relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::allocator::baselines::greedy_choice;
use crate::allocator::lp::{solve_lp_relaxation, LpAssign, PartialAssignment};
use crate::allocator::{
    result_from_choice, AllocationInstance, AllocationResult, GreedyOrder, Method,
};
use crate::Result;

struct BbNode {
    /// Upper bound inherited from the parent's LP value (the root carries
    /// +inf until solved).
    bound: f64,
    seq: u64,
    fixed: PartialAssignment,
}

impl PartialEq for BbNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for BbNode {}
impl PartialOrd for BbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BbNode {
    // Max-heap on bound; older nodes first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Solves the instance exactly. Nodes are expanded in decreasing
/// upper-bound order; subtrees are fathomed when their LP relaxation is
/// infeasible or cannot beat the incumbent. The incumbent is seeded with
/// the greedy solution, which tightens pruning without affecting the
/// optimum.
pub fn solve_bb(instance: &AllocationInstance) -> Result<AllocationResult> {
    instance.validate()?;
    let start = Instant::now();
    if instance.min_total_faces() > instance.budget {
        return Err(instance.infeasible_error());
    }

    let mut best_choice = greedy_choice(instance, GreedyOrder::InstanceOrder)?;
    let mut best_value = instance.total_qoe(&best_choice);

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(BbNode {
        bound: f64::INFINITY,
        seq,
        fixed: PartialAssignment::new(instance),
    });

    let mut nodes_explored = 0u64;
    while let Some(node) = heap.pop() {
        nodes_explored += 1;
        if node.bound <= best_value {
            // Every queued bound is only smaller; the search is done.
            break;
        }
        let Some(lp) = solve_lp_relaxation(instance, &node.fixed) else {
            continue; // fathom by infeasibility
        };
        if lp.value <= best_value {
            continue; // fathom by bound
        }
        if let Some(choice) = lp.integral_choice() {
            let value = instance.total_qoe(&choice);
            if value > best_value {
                best_value = value;
                best_choice = choice;
            }
            continue;
        }
        // Branch on the fractional mesh's upgrade-target option.
        let (mesh, option) = lp
            .assign
            .iter()
            .enumerate()
            .find_map(|(i, a)| match a {
                LpAssign::Fractional { upper, .. } => Some((i, *upper)),
                LpAssign::Integral(_) => None,
            })
            .expect("non-integral LP solution has a fractional mesh");
        for force in [false, true] {
            let mut fixed = node.fixed.clone();
            let ok = if force {
                fixed.force(mesh, option)
            } else {
                fixed.ban(mesh, option)
            };
            if ok.is_ok() {
                seq += 1;
                heap.push(BbNode {
                    bound: lp.value,
                    seq,
                    fixed,
                });
            }
        }
    }

    Ok(result_from_choice(
        instance,
        Method::Bb,
        &best_choice,
        nodes_explored,
        start.elapsed().as_micros() as u64,
        true,
    ))
}

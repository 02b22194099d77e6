//! Greedy sequential-upgrade and equal-distribution baselines.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::allocator::{result_from_choice, AllocationInstance, AllocationResult, Method};
use crate::Result;

/// Order in which the greedy pass visits meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyOrder {
    /// Visit meshes in instance order.
    #[default]
    InstanceOrder,
    /// Visit meshes by decreasing potential QoE gain per face.
    Efficiency,
}

/// Greedy selection: start every mesh at its fewest-faces option, then visit
/// each mesh once, upgrading it to the highest-QoE option that fits the
/// remaining budget. Ties break to fewer faces, then option order.
pub(crate) fn greedy_choice(
    instance: &AllocationInstance,
    order: GreedyOrder,
) -> Result<Vec<usize>> {
    let cheapest: Vec<usize> = instance
        .meshes
        .iter()
        .map(|m| {
            m.options
                .iter()
                .enumerate()
                .min_by_key(|(_, o)| o.faces)
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    let mut total: u64 = instance
        .meshes
        .iter()
        .zip(&cheapest)
        .map(|(m, &o)| m.options[o].faces)
        .sum();
    if total > instance.budget {
        return Err(instance.infeasible_error());
    }

    let mut visit: Vec<usize> = (0..instance.meshes.len()).collect();
    if order == GreedyOrder::Efficiency {
        let efficiency: Vec<f64> = instance
            .meshes
            .iter()
            .zip(&cheapest)
            .map(|(m, &base)| {
                let base_opt = &m.options[base];
                m.options
                    .iter()
                    .filter(|o| o.faces > base_opt.faces)
                    .map(|o| (o.qoe - base_opt.qoe) / (o.faces - base_opt.faces) as f64)
                    .fold(0.0f64, f64::max)
            })
            .collect();
        visit.sort_by(|&a, &b| efficiency[b].total_cmp(&efficiency[a]).then(a.cmp(&b)));
    }

    let mut choice = cheapest;
    for mesh_idx in visit {
        let mesh = &instance.meshes[mesh_idx];
        let current = mesh.options[choice[mesh_idx]].faces;
        let mut best = choice[mesh_idx];
        for (idx, opt) in mesh.options.iter().enumerate() {
            if total - current + opt.faces > instance.budget {
                continue;
            }
            let cur_best = &mesh.options[best];
            if opt.qoe > cur_best.qoe || (opt.qoe == cur_best.qoe && opt.faces < cur_best.faces) {
                best = idx;
            }
        }
        total = total - current + mesh.options[best].faces;
        choice[mesh_idx] = best;
    }
    Ok(choice)
}

/// Greedy baseline in instance order.
pub fn solve_greedy(instance: &AllocationInstance) -> Result<AllocationResult> {
    solve_greedy_ordered(instance, GreedyOrder::InstanceOrder)
}

/// Greedy baseline with an explicit visiting order.
pub fn solve_greedy_ordered(
    instance: &AllocationInstance,
    order: GreedyOrder,
) -> Result<AllocationResult> {
    instance.validate()?;
    let start = Instant::now();
    let choice = greedy_choice(instance, order)?;
    Ok(result_from_choice(
        instance,
        Method::Greedy,
        &choice,
        0,
        start.elapsed().as_micros() as u64,
        false,
    ))
}

/// Equal-distribution baseline: every mesh gets `floor(B / N)` faces and
/// independently takes its best option fitting that share. Meshes whose
/// cheapest option exceeds the share are excluded (contributing nothing)
/// and reported in `excluded`; such results violate the one-LoD-per-mesh
/// constraint.
pub fn solve_equal(instance: &AllocationInstance) -> Result<AllocationResult> {
    instance.validate()?;
    let start = Instant::now();
    let share = instance.budget / instance.meshes.len() as u64;

    let mut chosen = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut total_faces = 0u64;
    let mut total_qoe = 0.0f64;
    for mesh in &instance.meshes {
        let mut best: Option<usize> = None;
        for (idx, opt) in mesh.options.iter().enumerate() {
            if opt.faces > share {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &mesh.options[b];
                    opt.qoe > cur.qoe || (opt.qoe == cur.qoe && opt.faces < cur.faces)
                }
            };
            if better {
                best = Some(idx);
            }
        }
        match best {
            Some(idx) => {
                chosen.insert(mesh.id.clone(), mesh.options[idx].lod);
                total_faces += mesh.options[idx].faces;
                total_qoe += mesh.options[idx].qoe;
            }
            None => excluded.push(mesh.id.clone()),
        }
    }

    Ok(AllocationResult {
        method: Method::Equal,
        chosen,
        total_qoe,
        total_faces,
        utilization: total_faces as f64 / instance.budget as f64,
        nodes_explored: 0,
        wall_time_us: start.elapsed().as_micros() as u64,
        optimal: false,
        excluded,
    })
}

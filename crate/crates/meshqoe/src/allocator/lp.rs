//! LP relaxation of the allocation program, solved with the
//! multiple-choice-knapsack structure: per-mesh dominance reduction to a
//! concave faces-vs-qoe frontier, then greedy incremental upgrades in
//! decreasing efficiency order. The optimum has at most one fractional mesh.

use crate::allocator::AllocationInstance;
use crate::{Error, Result};

/// Branching state: per mesh, either a forced option or a set of banned
/// options. Construction methods keep the state consistent.
#[derive(Debug, Clone)]
pub struct PartialAssignment {
    per_mesh: Vec<MeshFix>,
}

#[derive(Debug, Clone)]
enum MeshFix {
    Free { banned: Vec<bool> },
    Forced(usize),
}

impl PartialAssignment {
    pub fn new(instance: &AllocationInstance) -> Self {
        PartialAssignment {
            per_mesh: instance
                .meshes
                .iter()
                .map(|m| MeshFix::Free {
                    banned: vec![false; m.options.len()],
                })
                .collect(),
        }
    }

    /// Pins `x[mesh][option] = 1`.
    pub fn force(&mut self, mesh: usize, option: usize) -> Result<()> {
        match &self.per_mesh[mesh] {
            MeshFix::Forced(cur) if *cur != option => Err(Error::invalid_argument(format!(
                "mesh {mesh} already forced to option {cur}"
            ))),
            MeshFix::Free { banned } if banned[option] => Err(Error::invalid_argument(format!(
                "option {option} of mesh {mesh} is banned"
            ))),
            _ => {
                self.per_mesh[mesh] = MeshFix::Forced(option);
                Ok(())
            }
        }
    }

    /// Pins `x[mesh][option] = 0`.
    pub fn ban(&mut self, mesh: usize, option: usize) -> Result<()> {
        match &mut self.per_mesh[mesh] {
            MeshFix::Forced(cur) if *cur == option => Err(Error::invalid_argument(format!(
                "option {option} of mesh {mesh} is forced"
            ))),
            MeshFix::Forced(_) => Ok(()),
            MeshFix::Free { banned } => {
                banned[option] = true;
                Ok(())
            }
        }
    }

    fn allowed(&self, mesh: usize, n_options: usize) -> Vec<usize> {
        match &self.per_mesh[mesh] {
            MeshFix::Forced(o) => vec![*o],
            MeshFix::Free { banned } => (0..n_options).filter(|&o| !banned[o]).collect(),
        }
    }

    fn is_forced(&self, mesh: usize) -> bool {
        matches!(self.per_mesh[mesh], MeshFix::Forced(_))
    }
}

/// LP value of one mesh: a single option, or a blend of two frontier
/// neighbors (`x[upper] = upper_frac`, `x[lower] = 1 - upper_frac`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpAssign {
    Integral(usize),
    Fractional {
        lower: usize,
        upper: usize,
        upper_frac: f64,
    },
}

/// Optimal LP relaxation value and per-mesh solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub assign: Vec<LpAssign>,
}

impl LpSolution {
    pub fn is_integral(&self) -> bool {
        self.assign
            .iter()
            .all(|a| matches!(a, LpAssign::Integral(_)))
    }

    /// The integral choice vector, if no mesh is fractional.
    pub fn integral_choice(&self) -> Option<Vec<usize>> {
        self.assign
            .iter()
            .map(|a| match a {
                LpAssign::Integral(o) => Some(*o),
                LpAssign::Fractional { .. } => None,
            })
            .collect()
    }
}

struct FrontierPoint {
    option: usize,
    faces: u64,
    qoe: f64,
}

/// Options that survive LP dominance: ascending faces, strictly ascending
/// qoe, strictly decreasing incremental slope.
fn reduced_frontier(options: &[(usize, u64, f64)]) -> Vec<FrontierPoint> {
    // Ascending faces; dominated points (no qoe gain for extra faces) drop.
    let mut sorted: Vec<&(usize, u64, f64)> = options.iter().collect();
    sorted.sort_by_key(|o| o.1);
    let mut kept: Vec<FrontierPoint> = Vec::with_capacity(sorted.len());
    for &&(option, faces, qoe) in &sorted {
        if kept.last().is_some_and(|last| qoe <= last.qoe) {
            continue;
        }
        // Concavity: drop previous points under the new chord.
        while kept.len() >= 2 {
            let a = &kept[kept.len() - 2];
            let b = &kept[kept.len() - 1];
            let slope_ab = (b.qoe - a.qoe) / (b.faces - a.faces) as f64;
            let slope_ap = (qoe - a.qoe) / (faces - a.faces) as f64;
            if slope_ab <= slope_ap {
                kept.pop();
            } else {
                break;
            }
        }
        kept.push(FrontierPoint { option, faces, qoe });
    }
    kept
}

/// Solves the LP relaxation under `fixed`; `None` signals infeasibility
/// (some mesh has no allowed option, or the cheapest allowed options
/// already exceed the budget).
pub fn solve_lp_relaxation(
    instance: &AllocationInstance,
    fixed: &PartialAssignment,
) -> Option<LpSolution> {
    let n = instance.meshes.len();
    let mut assign: Vec<LpAssign> = Vec::with_capacity(n);
    let mut frontiers: Vec<Option<Vec<FrontierPoint>>> = Vec::with_capacity(n);
    let mut used_faces: u64 = 0;
    let mut value: f64 = 0.0;

    for (mesh_idx, mesh) in instance.meshes.iter().enumerate() {
        let allowed = fixed.allowed(mesh_idx, mesh.options.len());
        if allowed.is_empty() {
            return None;
        }
        if fixed.is_forced(mesh_idx) {
            let o = allowed[0];
            used_faces += mesh.options[o].faces;
            value += mesh.options[o].qoe;
            assign.push(LpAssign::Integral(o));
            frontiers.push(None);
            continue;
        }
        let candidates: Vec<(usize, u64, f64)> = allowed
            .iter()
            .map(|&o| (o, mesh.options[o].faces, mesh.options[o].qoe))
            .collect();
        let frontier = reduced_frontier(&candidates);
        used_faces += frontier[0].faces;
        value += frontier[0].qoe;
        assign.push(LpAssign::Integral(frontier[0].option));
        frontiers.push(Some(frontier));
    }

    if used_faces > instance.budget {
        return None;
    }

    // Candidate upgrades across all free meshes, most efficient first; ties
    // break on (mesh, step). Frontier slopes decrease
    // within a mesh, so this global order never skips a mesh's earlier step.
    struct Step {
        mesh: usize,
        step: usize,
        delta_faces: u64,
        delta_qoe: f64,
        slope: f64,
    }
    let mut steps: Vec<Step> = Vec::new();
    for (mesh_idx, frontier) in frontiers.iter().enumerate() {
        if let Some(frontier) = frontier {
            for (k, pair) in frontier.windows(2).enumerate() {
                let delta_faces = pair[1].faces - pair[0].faces;
                let delta_qoe = pair[1].qoe - pair[0].qoe;
                steps.push(Step {
                    mesh: mesh_idx,
                    step: k,
                    delta_faces,
                    delta_qoe,
                    slope: delta_qoe / delta_faces as f64,
                });
            }
        }
    }
    steps.sort_by(|a, b| {
        b.slope
            .total_cmp(&a.slope)
            .then(a.mesh.cmp(&b.mesh))
            .then(a.step.cmp(&b.step))
    });

    let mut remaining = instance.budget - used_faces;
    let mut level = vec![0usize; n];
    for step in &steps {
        debug_assert_eq!(level[step.mesh], step.step);
        if step.delta_faces <= remaining {
            remaining -= step.delta_faces;
            value += step.delta_qoe;
            level[step.mesh] += 1;
            let frontier = frontiers[step.mesh].as_ref().unwrap();
            assign[step.mesh] = LpAssign::Integral(frontier[level[step.mesh]].option);
        } else {
            if remaining > 0 {
                let frac = remaining as f64 / step.delta_faces as f64;
                value += frac * step.delta_qoe;
                let frontier = frontiers[step.mesh].as_ref().unwrap();
                assign[step.mesh] = LpAssign::Fractional {
                    lower: frontier[step.step].option,
                    upper: frontier[step.step + 1].option,
                    upper_frac: frac,
                };
            }
            break;
        }
    }

    Some(LpSolution { value, assign })
}

//! Budget-constrained LoD selection: the binary-program instance, its LP
//! relaxation, an exact best-first branch-and-bound solver, greedy and
//! equal-distribution baselines, and an exhaustive test oracle.

mod baselines;
mod bb;
mod lp;
mod oracle;
#[cfg(test)]
mod simplex_oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{LodLevel, MeshDescriptor};
use crate::features::make_features;
use crate::forest::Forest;
use crate::{Error, Result};

pub use baselines::{solve_equal, solve_greedy, solve_greedy_ordered, GreedyOrder};
pub use bb::solve_bb;
pub use lp::{solve_lp_relaxation, LpAssign, LpSolution, PartialAssignment};
pub use oracle::{exhaustive_oracle, exhaustive_oracle_with_cap, DEFAULT_ENUM_CAP};

/// One selectable (LoD, face count, predicted QoE) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LodOption {
    #[serde(rename = "lod_index")]
    pub lod: LodLevel,
    pub faces: u64,
    pub qoe: f64,
}

/// A mesh together with its candidate options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshItem {
    pub id: String,
    pub options: Vec<LodOption>,
}

/// The allocation problem: pick exactly one option per mesh, maximizing
/// total QoE subject to the total face budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationInstance {
    pub meshes: Vec<MeshItem>,
    pub budget: u64,
}

impl AllocationInstance {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::validation("budget must be positive"));
        }
        if self.meshes.is_empty() {
            return Err(Error::validation("instance has no meshes"));
        }
        let mut ids = BTreeSet::new();
        for mesh in &self.meshes {
            if !ids.insert(&mesh.id) {
                return Err(Error::validation(format!("duplicate mesh id {}", mesh.id)));
            }
            if mesh.options.is_empty() {
                return Err(Error::validation(format!(
                    "mesh {} has no options",
                    mesh.id
                )));
            }
            let mut by_fraction: Vec<&LodOption> = mesh.options.iter().collect();
            by_fraction.sort_by(|a, b| {
                a.lod
                    .fraction_removed()
                    .total_cmp(&b.lod.fraction_removed())
            });
            for pair in by_fraction.windows(2) {
                if pair[0].lod == pair[1].lod {
                    return Err(Error::validation(format!(
                        "mesh {}: duplicate option for {}",
                        mesh.id, pair[0].lod
                    )));
                }
                if pair[1].faces >= pair[0].faces {
                    return Err(Error::validation(format!(
                        "mesh {}: faces must strictly decrease with fraction removed ({} vs {})",
                        mesh.id, pair[0].faces, pair[1].faces
                    )));
                }
            }
            for opt in &mesh.options {
                if opt.faces == 0 {
                    return Err(Error::validation(format!(
                        "mesh {}: zero-face option",
                        mesh.id
                    )));
                }
                if !opt.qoe.is_finite() {
                    return Err(Error::validation(format!(
                        "mesh {}: non-finite qoe",
                        mesh.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest total face count of any full assignment.
    pub fn min_total_faces(&self) -> u64 {
        self.meshes
            .iter()
            .map(|m| m.options.iter().map(|o| o.faces).min().unwrap_or(0))
            .sum()
    }

    /// Canonical objective of a full assignment (`choice[n]` indexes into
    /// `meshes[n].options`): mesh-order fold, so identical assignments
    /// always produce bit-identical totals.
    pub fn total_qoe(&self, choice: &[usize]) -> f64 {
        self.meshes
            .iter()
            .zip(choice)
            .map(|(m, &o)| m.options[o].qoe)
            .sum()
    }

    pub fn total_faces(&self, choice: &[usize]) -> u64 {
        self.meshes
            .iter()
            .zip(choice)
            .map(|(m, &o)| m.options[o].faces)
            .sum()
    }

    fn infeasible_error(&self) -> Error {
        Error::Infeasible {
            budget: self.budget,
            min_budget: self.min_total_faces(),
        }
    }
}

/// Solution method tag carried in results and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bb,
    Greedy,
    Equal,
    Exhaustive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Bb => "bb",
            Method::Greedy => "greedy",
            Method::Equal => "equal",
            Method::Exhaustive => "exhaustive",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb" => Ok(Method::Bb),
            "greedy" => Ok(Method::Greedy),
            "equal" => Ok(Method::Equal),
            "exhaustive" => Ok(Method::Exhaustive),
            other => Err(Error::invalid_argument(format!(
                "unknown method `{other}` (expected bb|greedy|equal|exhaustive)"
            ))),
        }
    }
}

/// A solver's output: the selected LoD per mesh plus diagnostics.
///
/// `excluded` is non-empty only for the equal-distribution baseline, whose
/// per-mesh budget share can be too small for a mesh's cheapest option; such
/// results violate the one-LoD-per-mesh constraint and are flagged here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub method: Method,
    pub chosen: BTreeMap<String, LodLevel>,
    pub total_qoe: f64,
    pub total_faces: u64,
    /// `total_faces / budget`, in [0, 1].
    pub utilization: f64,
    pub nodes_explored: u64,
    pub wall_time_us: u64,
    pub optimal: bool,
    pub excluded: Vec<String>,
}

impl AllocationResult {
    /// True when every mesh received exactly one LoD.
    pub fn one_lod_per_mesh(&self) -> bool {
        self.excluded.is_empty()
    }
}

pub(crate) fn result_from_choice(
    instance: &AllocationInstance,
    method: Method,
    choice: &[usize],
    nodes_explored: u64,
    wall_time_us: u64,
    optimal: bool,
) -> AllocationResult {
    let chosen = instance
        .meshes
        .iter()
        .zip(choice)
        .map(|(m, &o)| (m.id.clone(), m.options[o].lod))
        .collect();
    let total_faces = instance.total_faces(choice);
    AllocationResult {
        method,
        chosen,
        total_qoe: instance.total_qoe(choice),
        total_faces,
        utilization: total_faces as f64 / instance.budget as f64,
        nodes_explored,
        wall_time_us,
        optimal,
        excluded: Vec::new(),
    }
}

/// Builds an allocation instance by predicting the QoE of every (mesh, LoD)
/// pair with the trained forest at each mesh's viewing distance.
pub fn build_instance(
    meshes: &[MeshDescriptor],
    distances: &BTreeMap<String, f64>,
    forest: &Forest,
    lods: &[LodLevel],
    budget: u64,
) -> Result<AllocationInstance> {
    if lods.is_empty() {
        return Err(Error::invalid_argument("lod range must be non-empty"));
    }
    let mut items = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let distance = *distances.get(&mesh.id).ok_or_else(|| {
            Error::invalid_argument(format!("no viewing distance for mesh {}", mesh.id))
        })?;
        let options = lods
            .iter()
            .map(|&lod| {
                let x = make_features(mesh, lod, distance)?;
                Ok(LodOption {
                    lod,
                    faces: x.faces,
                    qoe: forest.predict(&x),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        items.push(MeshItem {
            id: mesh.id.clone(),
            options,
        });
    }
    let instance = AllocationInstance {
        meshes: items,
        budget,
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    /// Random instance honoring the invariants: distinct, strictly
    /// decreasing face counts per mesh; qoe in [1, 5].
    ///
    /// `budget_t` in [0, ~1.1] sweeps budgets from exactly feasible (0) to
    /// fully unconstrained (>= 1).
    pub fn random_instance(
        rng: &mut ChaCha8Rng,
        n_range: std::ops::RangeInclusive<usize>,
        m_range: std::ops::RangeInclusive<usize>,
        budget_t: f64,
    ) -> AllocationInstance {
        let n = rng.gen_range(n_range);
        let mut meshes = Vec::with_capacity(n);
        for mesh_idx in 0..n {
            let m = rng.gen_range(m_range.clone());
            let mut faces = std::collections::BTreeSet::new();
            while faces.len() < m {
                faces.insert(rng.gen_range(10..=1000u64));
            }
            // Descending faces assigned to ascending removed fraction.
            let faces: Vec<u64> = faces.into_iter().rev().collect();
            let options = faces
                .iter()
                .enumerate()
                .map(|(k, &f)| LodOption {
                    lod: LodLevel::new((k + 1) as u8).unwrap(),
                    faces: f,
                    qoe: rng.gen_range(1.0..=5.0),
                })
                .collect();
            meshes.push(MeshItem {
                id: format!("mesh{mesh_idx}"),
                options,
            });
        }
        let min: u64 = meshes
            .iter()
            .map(|m| m.options.iter().map(|o| o.faces).min().unwrap())
            .sum();
        let max: u64 = meshes
            .iter()
            .map(|m| m.options.iter().map(|o| o.faces).max().unwrap())
            .sum();
        let budget = (min as f64 + budget_t * (max - min) as f64).round() as u64;
        let instance = AllocationInstance {
            meshes,
            budget: budget.max(1),
        };
        instance.validate().unwrap();
        instance
    }
}

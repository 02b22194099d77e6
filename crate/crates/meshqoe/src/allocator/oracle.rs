//! Exhaustive enumeration oracle for cross-checking the exact solver.

use std::time::Instant;

use crate::allocator::{result_from_choice, AllocationInstance, AllocationResult, Method};
use crate::{Error, Result};

/// Default cap on the number of enumerated assignments.
pub const DEFAULT_ENUM_CAP: u128 = 20_000_000;

/// Enumerates every assignment and returns the feasible maximum, breaking
/// ties by fewer faces, then lexicographically smaller option indices.
pub fn exhaustive_oracle(instance: &AllocationInstance) -> Result<AllocationResult> {
    exhaustive_oracle_with_cap(instance, DEFAULT_ENUM_CAP)
}

pub fn exhaustive_oracle_with_cap(
    instance: &AllocationInstance,
    cap: u128,
) -> Result<AllocationResult> {
    instance.validate()?;
    let start = Instant::now();
    let mut assignments: u128 = 1;
    for mesh in &instance.meshes {
        assignments = assignments.saturating_mul(mesh.options.len() as u128);
        if assignments > cap {
            return Err(Error::EnumerationCap { assignments, cap });
        }
    }

    // Odometer increment; false once every assignment has been visited.
    fn advance(choice: &mut [usize], sizes: &[usize]) -> bool {
        for pos in (0..choice.len()).rev() {
            choice[pos] += 1;
            if choice[pos] < sizes[pos] {
                return true;
            }
            choice[pos] = 0;
        }
        false
    }

    let n = instance.meshes.len();
    let sizes: Vec<usize> = instance.meshes.iter().map(|m| m.options.len()).collect();
    let mut choice = vec![0usize; n];
    let mut best: Option<(f64, u64, Vec<usize>)> = None;
    let mut visited: u64 = 0;
    loop {
        visited += 1;
        let faces = instance.total_faces(&choice);
        if faces <= instance.budget {
            let qoe = instance.total_qoe(&choice);
            // Lexicographic enumeration makes the first tie the
            // lexicographically smallest, so ties never replace.
            let improves = match &best {
                None => true,
                Some((bq, bf, _)) => qoe > *bq || (qoe == *bq && faces < *bf),
            };
            if improves {
                best = Some((qoe, faces, choice.clone()));
            }
        }
        if !advance(&mut choice, &sizes) {
            break;
        }
    }

    match best {
        Some((_, _, choice)) => Ok(result_from_choice(
            instance,
            Method::Exhaustive,
            &choice,
            visited,
            start.elapsed().as_micros() as u64,
            true,
        )),
        None => Err(instance.infeasible_error()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{LodOption, MeshItem};
    use crate::dataset::LodLevel;

    fn opt(lod: u8, faces: u64, qoe: f64) -> LodOption {
        LodOption {
            lod: LodLevel::new(lod).unwrap(),
            faces,
            qoe,
        }
    }

    #[test]
    fn single_mesh_picks_best_feasible() {
        let instance = AllocationInstance {
            meshes: vec![MeshItem {
                id: "a".into(),
                options: vec![opt(1, 100, 5.0), opt(2, 50, 3.0), opt(3, 20, 1.0)],
            }],
            budget: 60,
        };
        let r = exhaustive_oracle(&instance).unwrap();
        assert_eq!(r.total_qoe, 3.0);
        assert_eq!(r.nodes_explored, 3);
    }

    #[test]
    fn two_by_two_hand_enumeration() {
        // Four cases: (1,1)=170 infeasible; (1,2)=5+1=6 @120; (2,1)=2+4=6 @100;
        // (2,2)=3 @50. Ties at 6 break to fewer faces -> (2,1).
        let instance = AllocationInstance {
            meshes: vec![
                MeshItem {
                    id: "a".into(),
                    options: vec![opt(1, 100, 5.0), opt(2, 30, 2.0)],
                },
                MeshItem {
                    id: "b".into(),
                    options: vec![opt(1, 70, 4.0), opt(2, 20, 1.0)],
                },
            ],
            budget: 120,
        };
        let r = exhaustive_oracle(&instance).unwrap();
        assert_eq!(r.total_qoe, 6.0);
        assert_eq!(r.total_faces, 100);
        assert_eq!(r.chosen["a"], LodLevel::new(2).unwrap());
        assert_eq!(r.chosen["b"], LodLevel::new(1).unwrap());
    }

    #[test]
    fn cap_refusal_and_infeasibility() {
        let instance = AllocationInstance {
            meshes: vec![
                MeshItem {
                    id: "a".into(),
                    options: vec![opt(1, 100, 5.0), opt(2, 30, 2.0)],
                },
                MeshItem {
                    id: "b".into(),
                    options: vec![opt(1, 70, 4.0), opt(2, 20, 1.0)],
                },
            ],
            budget: 120,
        };
        assert!(matches!(
            exhaustive_oracle_with_cap(&instance, 3),
            Err(Error::EnumerationCap {
                assignments: 4,
                cap: 3
            })
        ));

        let mut starved = instance;
        starved.budget = 10;
        assert!(matches!(
            exhaustive_oracle(&starved),
            Err(Error::Infeasible {
                budget: 10,
                min_budget: 50
            })
        ));
    }
}

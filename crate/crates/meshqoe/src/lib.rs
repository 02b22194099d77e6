//! QoE prediction and level-of-detail budgeting for dynamic 3D meshes.
//!
//! The crate has three layers:
//!
//! * data: stimulus datasets with per-LoD face counts, viewing distance,
//!   spatial-information (SI) complexity features and MOS labels
//!   ([`dataset`], [`features`]);
//! * models: a from-scratch bagged regression forest plus a linear baseline
//!   and the repeated-split evaluation protocol ([`forest`], [`stats`]);
//! * allocation: exact branch-and-bound LoD selection under a face budget,
//!   with greedy and equal-distribution baselines and a benchmark harness
//!   ([`allocator`], [`bench`](mod@bench)).
//!
//! [`geometry`] provides point-set distortion metrics (Hausdorff, RMSE,
//! Chamfer) for comparing mesh geometry directly.
//!
//! ```
//! use std::collections::BTreeMap;
//! use meshqoe::allocator::{build_instance, solve_bb};
//! use meshqoe::dataset::{builtin_lod_table_with_si, generate_synthetic, LodLevel};
//! use meshqoe::features::dataset_samples;
//! use meshqoe::forest::{train_forest, TrainConfig};
//!
//! # fn main() -> meshqoe::Result<()> {
//! let meshes = builtin_lod_table_with_si();
//! let data = generate_synthetic(&meshes, &[4.0, 8.0, 12.0, 16.0, 20.0], 7, 0.2)?;
//! let forest = train_forest(
//!     &dataset_samples(&data),
//!     &TrainConfig { n_trees: 10, ..TrainConfig::default() },
//! )?;
//!
//! let distances: BTreeMap<String, f64> =
//!     meshes.iter().map(|m| (m.id.clone(), 8.0)).collect();
//! let lods: Vec<LodLevel> = LodLevel::simplified().collect();
//! let instance = build_instance(&meshes, &distances, &forest, &lods, 150_000)?;
//! let best = solve_bb(&instance)?;
//! assert!(best.optimal && best.total_faces <= 150_000);
//! # Ok(())
//! # }
//! ```

pub mod allocator;
pub mod bench;
pub mod dataset;
mod error;
pub mod features;
pub mod forest;
pub mod geometry;
pub mod stats;

pub use error::{Error, Result};

/// Derives an independent stream seed from a base seed and a stream index.
///
/// Used wherever per-tree / per-run RNGs must be reproducible and order
/// independent, so serial and parallel execution produce identical output.
/// SplitMix64 finalizer over the combined words.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Point-set distortion metrics: symmetric Hausdorff distance, symmetrized
//! point-to-set RMSE, and squared-distance Chamfer distance.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A non-empty set of 3D points in consistent length units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<[f64; 3]>,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid_argument("point set must be non-empty"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid_argument("coordinates must be finite"));
        }
        Ok(PointSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads whitespace-separated `x y z` lines; blank lines and `#`
    /// comments are skipped.
    pub fn from_xyz(reader: impl Read) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: lineno as u64 + 1,
                    msg: e.to_string(),
                })?;
            if coords.len() != 3 {
                return Err(Error::Parse {
                    line: lineno as u64 + 1,
                    msg: format!("expected 3 coordinates, got {}", coords.len()),
                });
            }
            points.push([coords[0], coords[1], coords[2]]);
        }
        PointSet::new(points)
    }

    pub fn load_xyz(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        PointSet::from_xyz(file)
    }
}

fn dist_sq(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

fn nearest_sq(p: &[f64; 3], set: &PointSet) -> f64 {
    set.points
        .iter()
        .map(|q| dist_sq(p, q))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance:
/// `max(max_p min_q |p-q|, max_q min_p |p-q|)`.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    check(a, b)?;
    let directed = |from: &PointSet, to: &PointSet| {
        from.points
            .iter()
            .map(|p| nearest_sq(p, to))
            .fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

/// Symmetrized point-to-set RMS distance: the mean of both directions'
/// mean squared nearest-neighbor distances, square-rooted.
pub fn rmse_points(a: &PointSet, b: &PointSet) -> Result<f64> {
    check(a, b)?;
    let mean_sq = |from: &PointSet, to: &PointSet| {
        from.points.iter().map(|p| nearest_sq(p, to)).sum::<f64>() / from.len() as f64
    };
    Ok(((mean_sq(a, b) + mean_sq(b, a)) / 2.0).sqrt())
}

/// Chamfer distance in the squared-distance convention:
/// `mean_p min_q |p-q|^2 + mean_q min_p |p-q|^2`.
pub fn chamfer(a: &PointSet, b: &PointSet) -> Result<f64> {
    check(a, b)?;
    let mean_sq = |from: &PointSet, to: &PointSet| {
        from.points.iter().map(|p| nearest_sq(p, to)).sum::<f64>() / from.len() as f64
    };
    Ok(mean_sq(a, b) + mean_sq(b, a))
}

fn check(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid_argument("point sets must be non-empty"));
    }
    Ok(())
}

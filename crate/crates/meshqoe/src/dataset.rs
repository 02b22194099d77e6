//! Stimulus datasets: LoD levels, mesh descriptors, CSV ingestion and a
//! calibrated synthetic MOS generator for desk-scale experiments.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{derive_seed, Error, Result};

/// Fraction of faces removed at each LoD index (0 = original mesh).
const LOD_FRACTIONS: [f64; 9] = [0.0, 0.20, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95];

/// One level of detail, indexed 0 (original) through 8 (95% of faces removed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct LodLevel(u8);

impl LodLevel {
    pub const ORIGINAL: LodLevel = LodLevel(0);

    pub fn new(index: u8) -> Result<Self> {
        if index > 8 {
            return Err(Error::invalid_argument(format!(
                "LoD index {index} out of range 0..=8"
            )));
        }
        Ok(LodLevel(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn fraction_removed(self) -> f64 {
        LOD_FRACTIONS[self.0 as usize]
    }

    pub fn is_original(self) -> bool {
        self.0 == 0
    }

    /// All nine levels, original first.
    pub fn all() -> impl Iterator<Item = LodLevel> {
        (0..=8).map(LodLevel)
    }

    /// The eight simplified levels used in allocation (original excluded).
    pub fn simplified() -> impl Iterator<Item = LodLevel> {
        (1..=8).map(LodLevel)
    }
}

impl fmt::Display for LodLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "original")
        } else {
            write!(f, "LoD{}", self.0)
        }
    }
}

impl TryFrom<u8> for LodLevel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        LodLevel::new(v)
    }
}

impl From<LodLevel> for u8 {
    fn from(l: LodLevel) -> u8 {
        l.0
    }
}

/// A mesh's identity, per-LoD face counts and complexity features.
///
/// `si_geo`/`si_col` are optional because the built-in table ships without
/// them; they must be supplied (measured or assigned) before feature
/// assembly or synthetic generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub id: String,
    pub faces_per_lod: BTreeMap<LodLevel, u64>,
    pub si_geo: Option<f64>,
    pub si_col: Option<f64>,
}

impl MeshDescriptor {
    /// Builds a descriptor and checks the face-count invariants: entries for
    /// all nine levels, strictly decreasing as the removed fraction grows.
    pub fn new(id: impl Into<String>, faces_per_lod: BTreeMap<LodLevel, u64>) -> Result<Self> {
        let d = MeshDescriptor {
            id: id.into(),
            faces_per_lod,
            si_geo: None,
            si_col: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_si(mut self, si_geo: f64, si_col: f64) -> Self {
        self.si_geo = Some(si_geo);
        self.si_col = Some(si_col);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for lod in LodLevel::all() {
            if !self.faces_per_lod.contains_key(&lod) {
                return Err(Error::validation(format!(
                    "mesh {}: missing face count for {lod}",
                    self.id
                )));
            }
        }
        let mut prev: Option<u64> = None;
        for lod in LodLevel::all() {
            let f = self.faces_per_lod[&lod];
            if f == 0 {
                return Err(Error::validation(format!(
                    "mesh {}: zero faces at {lod}",
                    self.id
                )));
            }
            if let Some(p) = prev {
                if f >= p {
                    return Err(Error::validation(format!(
                        "mesh {}: face counts not strictly decreasing at {lod}",
                        self.id
                    )));
                }
            }
            prev = Some(f);
        }
        if let (Some(g), Some(c)) = (self.si_geo, self.si_col) {
            if !(g.is_finite() && c.is_finite()) || g < 0.0 || c < 0.0 {
                return Err(Error::validation(format!(
                    "mesh {}: SI values must be finite and non-negative",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Face count at `lod`, or a validation error for descriptors whose
    /// table is missing that level.
    pub fn faces_at(&self, lod: LodLevel) -> Result<u64> {
        self.faces_per_lod
            .get(&lod)
            .copied()
            .ok_or_else(|| Error::validation(format!("mesh {}: no face count for {lod}", self.id)))
    }

    pub fn si(&self) -> Result<(f64, f64)> {
        match (self.si_geo, self.si_col) {
            (Some(g), Some(c)) => Ok((g, c)),
            _ => Err(Error::validation(format!(
                "mesh {}: SI features not set",
                self.id
            ))),
        }
    }
}

/// One (mesh, LoD, distance) observation with its MOS label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub mesh_id: String,
    pub lod: LodLevel,
    pub faces: u64,
    pub distance_m: f64,
    pub si_geo: f64,
    pub si_col: f64,
    pub mos: f64,
}

impl StimulusRecord {
    pub fn validate(&self) -> Result<()> {
        if self.faces == 0 {
            return Err(Error::validation("faces must be >= 1"));
        }
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(Error::validation(format!(
                "distance_m must be > 0, got {}",
                self.distance_m
            )));
        }
        if !(1.0..=5.0).contains(&self.mos) || !self.mos.is_finite() {
            return Err(Error::validation(format!(
                "mos must lie in [1, 5], got {}",
                self.mos
            )));
        }
        if !(self.si_geo.is_finite() && self.si_geo >= 0.0)
            || !(self.si_col.is_finite() && self.si_col >= 0.0)
        {
            return Err(Error::validation("SI values must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    Synthetic,
}

/// An ordered collection of stimulus records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<StimulusRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks per-record ranges and the no-duplicate-key invariant.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.records {
            r.validate()?;
            if !seen.insert((r.mesh_id.clone(), r.lod, r.distance_m.to_bits())) {
                return Err(Error::validation(format!(
                    "duplicate record key ({}, {}, {})",
                    r.mesh_id, r.lod, r.distance_m
                )));
            }
        }
        Ok(())
    }
}

/// Expected CSV header, in order. Extra or renamed columns are rejected.
const CSV_HEADER: [&str; 8] = [
    "mesh_id",
    "lod_index",
    "fraction_removed",
    "faces",
    "distance_m",
    "si_geo",
    "si_col",
    "mos",
];

/// Supported dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
}

/// Loads a dataset file, validating every row.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    match format {
        DatasetFormat::Csv => {
            let file = std::fs::File::open(path)?;
            read_csv(file)
        }
    }
}

/// Reads the CSV schema `mesh_id,lod_index,fraction_removed,faces,distance_m,si_geo,si_col,mos`.
pub fn read_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.len() != CSV_HEADER.len()
        || headers.iter().zip(CSV_HEADER.iter()).any(|(h, e)| h != *e)
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unexpected header [{}]; expected [{}]",
                headers.iter().collect::<Vec<_>>().join(","),
                CSV_HEADER.join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(records.len() as u64 + 2);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
            });
        }
        let parse_f64 = |i: usize, name: &str| -> Result<f64> {
            row[i].parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("field `{name}`: cannot parse `{}` as a real", &row[i]),
            })
        };
        let lod_index: u8 = row[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("field `lod_index`: cannot parse `{}`", &row[1]),
        })?;
        let lod = LodLevel::new(lod_index).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let fraction: f64 = parse_f64(2, "fraction_removed")?;
        if (fraction - lod.fraction_removed()).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "line {line}: fraction_removed {fraction} does not match {lod} ({})",
                lod.fraction_removed()
            )));
        }
        let faces: u64 = row[3].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("field `faces`: cannot parse `{}`", &row[3]),
        })?;
        let record = StimulusRecord {
            mesh_id: row[0].to_string(),
            lod,
            faces,
            distance_m: parse_f64(4, "distance_m")?,
            si_geo: parse_f64(5, "si_geo")?,
            si_col: parse_f64(6, "si_col")?,
            mos: parse_f64(7, "mos")?,
        };
        record
            .validate()
            .map_err(|e| Error::validation(format!("line {line}: {e}")))?;
        records.push(record);
    }

    let dataset = Dataset {
        records,
        provenance: Provenance::Ingested,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes a dataset in the CSV schema; real values use 6 decimal places.
pub fn write_csv(dataset: &Dataset, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)
        .map_err(|e| Error::validation(e.to_string()))?;
    for r in &dataset.records {
        wtr.write_record([
            r.mesh_id.as_str(),
            &r.lod.index().to_string(),
            &format!("{:.6}", r.lod.fraction_removed()),
            &r.faces.to_string(),
            &format!("{:.6}", r.distance_m),
            &format!("{:.6}", r.si_geo),
            &format!("{:.6}", r.si_col),
            &format!("{:.6}", r.mos),
        ])
        .map_err(|e| Error::validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Saves a dataset to a file.
pub fn save_dataset(
    dataset: &Dataset,
    path: impl AsRef<Path>,
    format: DatasetFormat,
) -> Result<()> {
    match format {
        DatasetFormat::Csv => {
            let file = std::fs::File::create(path)?;
            write_csv(dataset, file)
        }
    }
}

/// Per-LoD face counts of the eight reference meshes (original first).
const BUILTIN_FACES: [(&str, [u64; 9]); 8] = [
    ("M1", [4063, 3250, 2436, 2030, 1625, 1218, 812, 406, 202]),
    (
        "M2",
        [25246, 20193, 15144, 12623, 10094, 7570, 5045, 2522, 1260],
    ),
    (
        "M3",
        [32720, 26149, 19606, 16361, 13063, 9826, 6526, 3326, 1703],
    ),
    ("M4", [6832, 5457, 4087, 3589, 2719, 2104, 1349, 790, 398]),
    (
        "M5",
        [
            77980, 65122, 52277, 46493, 39429, 33333, 26588, 20643, 11360,
        ],
    ),
    (
        "M6",
        [16556, 13237, 9928, 8277, 6620, 4963, 3307, 1646, 825],
    ),
    (
        "M7",
        [66776, 54106, 41547, 35144, 28805, 22482, 16159, 9832, 6775],
    ),
    (
        "M8",
        [
            221874, 169489, 127116, 105935, 84744, 63557, 42366, 21178, 10588,
        ],
    ),
];

/// Calibrated (si_geo, si_col) pairs for the built-in meshes, used by
/// synthetic experiments. Measured SI for these meshes is not available,
/// so these are plausible stand-ins spanning a wide complexity range:
/// M1 has the highest color complexity, M5 the lowest complexity overall.
const BUILTIN_SI: [(f64, f64); 8] = [
    (31.0, 60.0), // M1
    (38.0, 40.0), // M2
    (46.0, 35.0), // M3
    (27.0, 28.0), // M4
    (11.0, 6.0),  // M5
    (24.0, 30.0), // M6
    (42.0, 25.0), // M7
    (52.0, 15.0), // M8
];

/// The eight reference meshes M1..M8 with their per-LoD face counts.
///
/// SI features are left unset; supply them via [`MeshDescriptor::with_si`]
/// or use [`builtin_lod_table_with_si`] for synthetic runs.
pub fn builtin_lod_table() -> Vec<MeshDescriptor> {
    BUILTIN_FACES
        .iter()
        .map(|(id, faces)| {
            let map = LodLevel::all().zip(faces.iter().copied()).collect();
            MeshDescriptor::new(*id, map).expect("builtin table satisfies invariants")
        })
        .collect()
}

/// The built-in table with the calibrated SI assignment applied.
pub fn builtin_lod_table_with_si() -> Vec<MeshDescriptor> {
    builtin_lod_table()
        .into_iter()
        .zip(BUILTIN_SI.iter())
        .map(|(m, &(g, c))| m.with_si(g, c))
        .collect()
}

// Synthetic MOS generator constants. Chosen so that, noise-free, LoD1..LoD3
// stay above MOS 3.5 and LoD8 lands well below 3 at the nearest distance,
// with complex-colored meshes degrading faster.
const GEN_LOD_WEIGHT: f64 = 4.0;
const GEN_LOD_POWER: f64 = 1.6;
const GEN_DIST_WEIGHT: f64 = 0.8;

fn complexity_factor(si_col: f64, max_si_col: f64) -> f64 {
    if max_si_col > 0.0 {
        0.5 + si_col / (2.0 * max_si_col)
    } else {
        0.5
    }
}

/// Noise-free synthetic MOS for one (mesh, LoD, distance) cell.
///
/// `dist_norm` is the distance normalized to [0,1] over the distance list.
fn synthetic_mos_clean(lod: LodLevel, dist_norm: f64, complexity: f64) -> f64 {
    let l = lod.fraction_removed();
    5.0 - GEN_LOD_WEIGHT * l.powf(GEN_LOD_POWER) * complexity + GEN_DIST_WEIGHT * dist_norm * l
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Generates one record per (mesh, LoD1..LoD8, distance) with a calibrated
/// synthetic MOS; deterministic given `seed`.
///
/// MOS values are rounded to 6 decimals so the dataset survives CSV
/// round-trips bit-for-bit.
pub fn generate_synthetic(
    meshes: &[MeshDescriptor],
    distances: &[f64],
    seed: u64,
    noise_sigma: f64,
) -> Result<Dataset> {
    if distances.is_empty() {
        return Err(Error::invalid_argument("distance list must be non-empty"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::invalid_argument(format!(
            "noise_sigma must be >= 0, got {noise_sigma}"
        )));
    }
    for d in distances {
        if !(d.is_finite() && *d > 0.0) {
            return Err(Error::invalid_argument(format!(
                "distance must be > 0, got {d}"
            )));
        }
    }
    let mut max_si_col = 0.0f64;
    for m in meshes {
        let (_, c) = m.si()?;
        max_si_col = max_si_col.max(c);
    }
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_span = d_max - d_min;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::invalid_argument(format!("noise distribution: {e}")))?;

    let mut records = Vec::with_capacity(meshes.len() * 8 * distances.len());
    for mesh in meshes {
        let (si_geo, si_col) = mesh.si()?;
        let complexity = complexity_factor(si_col, max_si_col);
        for lod in LodLevel::simplified() {
            let faces = mesh.faces_at(lod)?;
            for &d in distances {
                let dist_norm = if d_span > 0.0 {
                    (d - d_min) / d_span
                } else {
                    0.0
                };
                let clean = synthetic_mos_clean(lod, dist_norm, complexity);
                let eps: f64 = noise.sample(&mut rng);
                let mos = round6((clean + eps).clamp(1.0, 5.0));
                records.push(StimulusRecord {
                    mesh_id: mesh.id.clone(),
                    lod,
                    faces,
                    distance_m: d,
                    si_geo,
                    si_col,
                    mos,
                });
            }
        }
    }
    let dataset = Dataset {
        records,
        provenance: Provenance::Synthetic,
    };
    dataset.validate()?;
    Ok(dataset)
}

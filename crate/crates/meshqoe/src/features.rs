//! Spatial-information extraction from grayscale frames and assembly of the
//! five-element feature vector (faces, distance, LoD fraction, SI).

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LodLevel, MeshDescriptor, StimulusRecord};
use crate::{Error, Result};

/// A grayscale frame with real-valued pixels in [0, 255], row major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid_argument("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid_argument(format!(
                "pixel buffer length {} != {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid_argument("pixels must be finite"));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Reads an 8-bit binary PGM (magic `P5`) frame.
    pub fn from_pgm(mut reader: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let mut pos = 0usize;

        // Header tokens are separated by whitespace; `#` starts a comment
        // that runs to end of line.
        let mut next_token = |bytes: &[u8]| -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse {
                    line: 0,
                    msg: "unexpected end of PGM header".into(),
                });
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };

        let magic = next_token(&bytes)?;
        if magic != "P5" {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected binary PGM magic `P5`, got `{magic}`"),
            });
        }
        let width: usize = next_token(&bytes)?.parse().map_err(|_| Error::Parse {
            line: 0,
            msg: "bad PGM width".into(),
        })?;
        let height: usize = next_token(&bytes)?.parse().map_err(|_| Error::Parse {
            line: 0,
            msg: "bad PGM height".into(),
        })?;
        let maxval: u32 = next_token(&bytes)?.parse().map_err(|_| Error::Parse {
            line: 0,
            msg: "bad PGM maxval".into(),
        })?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("only 8-bit PGM supported (maxval {maxval})"),
            });
        }
        // Exactly one whitespace byte separates the header from raster data.
        pos += 1;
        let needed = width.checked_mul(height).ok_or_else(|| Error::Parse {
            line: 0,
            msg: "PGM dimensions overflow".into(),
        })?;
        if bytes.len() < pos + needed {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "PGM raster truncated: need {needed} bytes, have {}",
                    bytes.len().saturating_sub(pos)
                ),
            });
        }
        let pixels = bytes[pos..pos + needed].iter().map(|&b| b as f64).collect();
        GrayImage::new(width, height, pixels)
    }
}

const SOBEL_GX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_GY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Gradient magnitude `sqrt(Gx^2 + Gy^2)` with the standard 3x3 Sobel
/// kernels, computed for interior pixels only. The output therefore has
/// dimensions `(w-2) x (h-2)` and the 1-pixel input border never enters any
/// downstream statistics.
pub fn sobel_magnitude(img: &GrayImage) -> Result<GrayImage> {
    if img.width < 3 || img.height < 3 {
        return Err(Error::invalid_argument(format!(
            "image must be at least 3x3 for Sobel, got {}x{}",
            img.width, img.height
        )));
    }
    let ow = img.width - 2;
    let oh = img.height - 2;
    let mut out = vec![0.0; ow * oh];
    for y in 1..img.height - 1 {
        for x in 1..img.width - 1 {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ky in 0..3 {
                for kx in 0..3 {
                    let p = img.get(x + kx - 1, y + ky - 1);
                    gx += SOBEL_GX[ky][kx] * p;
                    gy += SOBEL_GY[ky][kx] * p;
                }
            }
            out[(y - 1) * ow + (x - 1)] = (gx * gx + gy * gy).sqrt();
        }
    }
    GrayImage::new(ow, oh, out)
}

/// Population standard deviation of one frame's interior Sobel magnitudes.
pub fn frame_si(img: &GrayImage) -> Result<f64> {
    let mag = sobel_magnitude(img)?;
    let n = mag.pixels.len() as f64;
    let mean = mag.pixels.iter().sum::<f64>() / n;
    let var = mag
        .pixels
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

/// Spatial information of a sequence of frames: max over frames of
/// [`frame_si`]. Use [`frame_si`] directly when a single-frame SI is wanted.
pub fn spatial_information(frames: &[GrayImage]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::invalid_argument("at least one frame required"));
    }
    let mut si = f64::NEG_INFINITY;
    for frame in frames {
        si = si.max(frame_si(frame)?);
    }
    Ok(si)
}

/// The five model inputs: face count, viewing distance, fraction of faces
/// removed, geometry SI and color SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub faces: u64,
    pub distance_m: f64,
    pub lod_fraction: f64,
    pub si_geo: f64,
    pub si_col: f64,
}

impl FeatureVector {
    /// Feature order used across the forest and the linear baseline.
    pub const NAMES: [&'static str; 5] = ["faces", "distance", "lod", "si_geo", "si_col"];

    pub fn to_array(self) -> [f64; 5] {
        [
            self.faces as f64,
            self.distance_m,
            self.lod_fraction,
            self.si_geo,
            self.si_col,
        ]
    }
}

/// The feature vector of one stimulus record.
pub fn record_features(record: &StimulusRecord) -> FeatureVector {
    FeatureVector {
        faces: record.faces,
        distance_m: record.distance_m,
        lod_fraction: record.lod.fraction_removed(),
        si_geo: record.si_geo,
        si_col: record.si_col,
    }
}

/// (features, MOS) training pairs for every record of a dataset.
pub fn dataset_samples(dataset: &Dataset) -> Vec<(FeatureVector, f64)> {
    dataset
        .records
        .iter()
        .map(|r| (record_features(r), r.mos))
        .collect()
}

/// Assembles the feature vector for one (mesh, LoD, distance) query.
pub fn make_features(
    mesh: &MeshDescriptor,
    lod: LodLevel,
    distance_m: f64,
) -> Result<FeatureVector> {
    let (si_geo, si_col) = mesh.si()?;
    let faces = mesh.faces_at(lod)?;
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::invalid_argument(format!(
            "distance must be > 0, got {distance_m}"
        )));
    }
    Ok(FeatureVector {
        faces,
        distance_m,
        lod_fraction: lod.fraction_removed(),
        si_geo,
        si_col,
    })
}

//! Model-evaluation statistics (RMSE, PLCC, SROCC, KROCC), the linear
//! least-squares baseline and the repeated-holdout evaluation protocol.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::features::{dataset_samples, FeatureVector};
use crate::forest::{train_forest, TrainConfig};
use crate::{derive_seed, Error, Result};

/// Root mean squared error between predictions and ground truth.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::invalid_argument("rmse of empty vectors"));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Sample Pearson correlation coefficient.
pub fn plcc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid_argument("plcc needs at least 2 points"));
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "an input vector is constant".into(),
        ));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Spearman rank correlation: PLCC of fractional ranks, ties receiving the
/// average rank of their run.
pub fn srocc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    plcc(&fractional_ranks(a), &fractional_ranks(b))
}

fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end, averaged across the tie run.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Kendall tau-b (tie corrected), computed with sort-based counting.
pub fn krocc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid_argument("krocc needs at least 2 points"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let tie_pairs = |sorted_keys: &mut dyn Iterator<Item = f64>| -> u64 {
        // caller guarantees keys arrive grouped
        let mut pairs = 0u64;
        let mut prev = f64::NAN;
        let mut run = 0u64;
        for k in sorted_keys {
            if k == prev {
                run += 1;
            } else {
                pairs += run * run.saturating_sub(1) / 2;
                run = 1;
                prev = k;
            }
        }
        pairs + run * run.saturating_sub(1) / 2
    };

    let x_ties = tie_pairs(&mut order.iter().map(|&i| a[i]));
    let mut sorted_b: Vec<f64> = b.to_vec();
    sorted_b.sort_by(f64::total_cmp);
    let y_ties = tie_pairs(&mut sorted_b.iter().copied());

    // Joint (x, y) ties.
    let mut xy_ties = 0u64;
    let mut run = 1u64;
    for w in order.windows(2) {
        if a[w[0]] == a[w[1]] && b[w[0]] == b[w[1]] {
            run += 1;
        } else {
            xy_ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    xy_ties += run * (run - 1) / 2;

    // After sorting by (x, y), a strict descent in y marks a discordant
    // pair; x-tied pairs have ascending y and never count.
    let y_in_x_order: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let discordant = count_inversions(&y_in_x_order);

    let n0 = n as u64 * (n as u64 - 1) / 2;
    if n0 == x_ties || n0 == y_ties {
        return Err(Error::UndefinedCorrelation(
            "an input vector is constant".into(),
        ));
    }
    let num =
        n0 as i128 - x_ties as i128 - y_ties as i128 + xy_ties as i128 - 2 * discordant as i128;
    let denom = ((n0 - x_ties) as f64 * (n0 - y_ties) as f64).sqrt();
    Ok(num as f64 / denom)
}

/// Merge-sort count of pairs (i < j) with `values[i] > values[j]` strictly.
fn count_inversions(values: &[f64]) -> u64 {
    fn merge(buf: &mut [f64], tmp: &mut [f64]) -> u64 {
        let n = buf.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let mut inv = merge(&mut buf[..mid], tmp) + merge(&mut buf[mid..], tmp);
        let (mut i, mut j, mut k) = (0, mid, 0);
        while i < mid && j < n {
            if buf[i] <= buf[j] {
                tmp[k] = buf[i];
                i += 1;
            } else {
                tmp[k] = buf[j];
                j += 1;
                inv += (mid - i) as u64;
            }
            k += 1;
        }
        while i < mid {
            tmp[k] = buf[i];
            i += 1;
            k += 1;
        }
        while j < n {
            tmp[k] = buf[j];
            j += 1;
            k += 1;
        }
        buf.copy_from_slice(&tmp[..n]);
        inv
    }
    let mut buf = values.to_vec();
    let mut tmp = vec![0.0; values.len()];
    merge(&mut buf, &mut tmp)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid_argument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Ordinary-least-squares model over `[1, faces, distance, lod, si_geo, si_col]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coeffs: [f64; 6],
}

fn design_row(x: &FeatureVector) -> [f64; 6] {
    let a = x.to_array();
    [1.0, a[0], a[1], a[2], a[3], a[4]]
}

/// Fits the linear baseline by normal equations with a partial-pivot solve.
/// Columns are equilibrated internally to keep the solve well conditioned.
pub fn fit_linear(samples: &[(FeatureVector, f64)]) -> Result<LinearModel> {
    const P: usize = 6;
    if samples.len() < P {
        return Err(Error::invalid_argument(format!(
            "need at least {P} samples to fit the linear model, got {}",
            samples.len()
        )));
    }
    // Column scales for equilibration.
    let mut scale = [0.0f64; P];
    for (x, _) in samples {
        for (j, v) in design_row(x).iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    for s in &mut scale {
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let mut ata = [[0.0f64; P]; P];
    let mut atb = [0.0f64; P];
    for (x, y) in samples {
        let mut row = design_row(x);
        for (v, s) in row.iter_mut().zip(&scale) {
            *v /= s;
        }
        for i in 0..P {
            for j in 0..P {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }

    let z = solve_partial_pivot(&mut ata, &mut atb)?;
    let mut coeffs = [0.0; P];
    for j in 0..P {
        coeffs[j] = z[j] / scale[j];
    }
    Ok(LinearModel { coeffs })
}

#[allow(clippy::needless_range_loop)] // elimination reads a[col] while mutating a[row]
fn solve_partial_pivot<const P: usize>(
    a: &mut [[f64; P]; P],
    b: &mut [f64; P],
) -> Result<[f64; P]> {
    for col in 0..P {
        let pivot_row = (col..P)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 {
            return Err(Error::SingularDesign(format!(
                "pivot {} vanishes; design matrix is rank deficient",
                col
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..P {
            let factor = a[row][col] / a[col][col];
            for k in col..P {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; P];
    for col in (0..P).rev() {
        let mut acc = b[col];
        for k in col + 1..P {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

pub fn predict_linear(model: &LinearModel, x: &FeatureVector) -> f64 {
    design_row(x)
        .iter()
        .zip(&model.coeffs)
        .map(|(v, c)| v * c)
        .sum()
}

/// Which predictor the evaluation protocol trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Linear,
}

/// Repeated-holdout settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub n_runs: usize,
    /// Training fraction; the split takes `floor(split * n)` rows.
    pub split: f64,
    pub seed: u64,
    /// Test-sanity mode: score the model on its own training rows.
    pub eval_on_train: bool,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            n_runs: 10,
            split: 0.8,
            seed: 0,
            eval_on_train: false,
        }
    }
}

/// The four metrics of one holdout run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rmse: f64,
    pub plcc: f64,
    pub srocc: f64,
    pub krocc: f64,
}

/// Evaluation summary: arithmetic means over runs plus per-run values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub plcc: f64,
    pub srocc: f64,
    pub krocc: f64,
    pub per_run: Vec<RunMetrics>,
    pub n_runs: usize,
}

/// Runs the repeated shuffle/split/train/score protocol.
pub fn evaluate(
    dataset: &Dataset,
    kind: ModelKind,
    config: &TrainConfig,
    protocol: &EvalProtocol,
) -> Result<EvalReport> {
    evaluate_impl(dataset, kind, config, protocol, false)
}

/// Same as [`evaluate`] with runs executed across threads; per-run seeds are
/// derived from `(seed, run)`, so the report is identical to the serial one.
pub fn evaluate_parallel(
    dataset: &Dataset,
    kind: ModelKind,
    config: &TrainConfig,
    protocol: &EvalProtocol,
) -> Result<EvalReport> {
    evaluate_impl(dataset, kind, config, protocol, true)
}

fn evaluate_impl(
    dataset: &Dataset,
    kind: ModelKind,
    config: &TrainConfig,
    protocol: &EvalProtocol,
    parallel: bool,
) -> Result<EvalReport> {
    if protocol.n_runs == 0 {
        return Err(Error::invalid_argument("n_runs must be >= 1"));
    }
    if !(0.0 < protocol.split && protocol.split < 1.0) {
        return Err(Error::invalid_argument(format!(
            "split must lie in (0, 1), got {}",
            protocol.split
        )));
    }
    let samples = dataset_samples(dataset);
    let n = samples.len();
    let train_n = (protocol.split * n as f64).floor() as usize;
    let test_n = if protocol.eval_on_train {
        train_n
    } else {
        n - train_n
    };
    if train_n == 0 || test_n < 2 {
        return Err(Error::invalid_argument(format!(
            "dataset of {n} rows is too small for a {:.0}/{:.0} split",
            protocol.split * 100.0,
            (1.0 - protocol.split) * 100.0
        )));
    }

    let one_run = |run: usize| -> Result<RunMetrics> {
        let run_seed = derive_seed(protocol.seed, run as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (train_idx, test_idx) = order.split_at(train_n);
        let train: Vec<(FeatureVector, f64)> = train_idx.iter().map(|&i| samples[i]).collect();
        let test: Vec<(FeatureVector, f64)> = if protocol.eval_on_train {
            train.clone()
        } else {
            test_idx.iter().map(|&i| samples[i]).collect()
        };

        let predictions: Vec<f64> = match kind {
            ModelKind::Forest => {
                let run_config = TrainConfig {
                    seed: derive_seed(run_seed, 1),
                    ..config.clone()
                };
                let forest = train_forest(&train, &run_config)?;
                test.iter().map(|(x, _)| forest.predict(x)).collect()
            }
            ModelKind::Linear => {
                let model = fit_linear(&train)?;
                test.iter()
                    .map(|(x, _)| predict_linear(&model, x))
                    .collect()
            }
        };
        let truth: Vec<f64> = test.iter().map(|(_, y)| *y).collect();
        Ok(RunMetrics {
            rmse: rmse(&predictions, &truth)?,
            plcc: plcc(&predictions, &truth)?,
            srocc: srocc(&predictions, &truth)?,
            krocc: krocc(&predictions, &truth)?,
        })
    };

    let per_run: Vec<RunMetrics> = if parallel {
        (0..protocol.n_runs)
            .into_par_iter()
            .map(one_run)
            .collect::<Result<_>>()?
    } else {
        (0..protocol.n_runs).map(one_run).collect::<Result<_>>()?
    };

    let mean =
        |f: fn(&RunMetrics) -> f64| per_run.iter().map(f).sum::<f64>() / per_run.len() as f64;
    Ok(EvalReport {
        rmse: mean(|m| m.rmse),
        plcc: mean(|m| m.plcc),
        srocc: mean(|m| m.srocc),
        krocc: mean(|m| m.krocc),
        per_run,
        n_runs: protocol.n_runs,
    })
}

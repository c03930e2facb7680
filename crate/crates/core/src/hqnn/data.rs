//! Datasets: sklearn-style concentric circles, CSV tables and a synthetic
//! housing-like table.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{HqnnError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    MinMax,
    ZScore,
}

/// Per-feature affine map `x' = (x - offset) / scale`. A zero scale marks a
/// constant column, which maps to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub method: NormMethod,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: &[Vec<f64>], method: NormMethod) -> Result<Self> {
        let dim = features.first().map_or(0, Vec::len);
        if features.is_empty() || dim == 0 {
            return Err(HqnnError::InvalidConfig("cannot normalize an empty feature matrix".into()));
        }
        let n = features.len() as f64;
        let mut offset = Vec::with_capacity(dim);
        let mut scale = Vec::with_capacity(dim);
        for j in 0..dim {
            let col = features.iter().map(|r| r[j]);
            let (o, s) = match method {
                NormMethod::MinMax => {
                    let lo = col.clone().fold(f64::INFINITY, f64::min);
                    let hi = col.fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
                NormMethod::ZScore => {
                    let mean = col.clone().sum::<f64>() / n;
                    let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
            };
            offset.push(o);
            scale.push(s);
        }
        Ok(Self { method, offset, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| if *s > 0.0 { (v - o) / s } else { 0.0 })
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| v * s + o)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Set when `features` are stored normalized.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(HqnnError::Dimension {
                expected: features.len(),
                got: targets.len(),
            });
        }
        if let Some(first) = features.first() {
            if let Some(bad) = features.iter().find(|r| r.len() != first.len()) {
                return Err(HqnnError::Dimension {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(Self {
            features,
            targets,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            normalization: self.normalization.clone(),
        }
    }

    /// Shuffles with `seed`, then returns the first `train` rows and the
    /// following `test` rows.
    pub fn split(&self, train: usize, test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if train == 0 || train + test > self.len() {
            return Err(HqnnError::InvalidConfig(format!(
                "cannot split {} rows into {train} train and {test} test",
                self.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok((self.subset(&idx[..train]), self.subset(&idx[train..train + test])))
    }

    /// Returns copies normalized with statistics fitted on `self` only.
    pub fn normalize_with(&self, method: NormMethod, others: &[&Dataset]) -> Result<(Dataset, Vec<Dataset>)> {
        let norm = Normalization::fit(&self.features, method)?;
        let map = |d: &Dataset| Dataset {
            features: d.features.iter().map(|r| norm.apply(r)).collect(),
            targets: d.targets.clone(),
            normalization: Some(norm.clone()),
        };
        Ok((map(self), others.iter().map(|d| map(d)).collect()))
    }
}

/// Concentric circles in the plane: half the points on the unit circle with
/// label 0, half on the circle of radius `factor` with label 1, evenly spaced
/// in angle, shuffled, then perturbed by Gaussian noise of std `noise`.
pub fn make_circles(n: usize, noise: f64, factor: f64, seed: u64) -> Result<Dataset> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(HqnnError::InvalidConfig(format!("factor must lie in (0, 1), got {factor}")));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(HqnnError::InvalidConfig(format!("noise must be non-negative, got {noise}")));
    }
    if n < 2 || n % 2 != 0 {
        return Err(HqnnError::InvalidConfig(format!("n must be even and at least 2, got {n}")));
    }
    let half = n / 2;
    let mut rows = Vec::with_capacity(n);
    for (radius, label) in [(1.0, 0.0), (factor, 1.0)] {
        for k in 0..half {
            let t = std::f64::consts::TAU * k as f64 / half as f64;
            rows.push((vec![radius * t.cos(), radius * t.sin()], label));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    if noise > 0.0 {
        let gauss = Normal::new(0.0, noise).expect("noise checked");
        for (x, _) in &mut rows {
            for v in x.iter_mut() {
                *v += gauss.sample(&mut rng);
            }
        }
    }
    let (features, targets) = rows.into_iter().unzip();
    Dataset::new(features, targets)
}

/// Reads a headed CSV, picks `feature_cols` and `target_col` by name and
/// normalizes the features.
pub fn load_csv_dataset(
    path: impl AsRef<Path>,
    feature_cols: &[&str],
    target_col: &str,
    method: NormMethod,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| HqnnError::MissingColumn(name.to_string()))
    };
    let feat_idx = feature_cols.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let target_idx = find(target_col)?;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| HqnnError::Csv {
            row: row + 1,
            msg: e.to_string(),
        })?;
        let cell = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("").trim();
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| HqnnError::Csv {
                row: row + 1,
                msg: format!("column '{}': not a number: '{raw}'", &headers[i]),
            })
        };
        features.push(feat_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?);
        targets.push(cell(target_idx)?);
    }
    if features.is_empty() {
        return Err(HqnnError::Csv {
            row: 0,
            msg: "no data rows".into(),
        });
    }
    let norm = Normalization::fit(&features, method)?;
    let features = features.iter().map(|r| norm.apply(r)).collect();
    let mut d = Dataset::new(features, targets)?;
    d.normalization = Some(norm);
    Ok(d)
}

/// Housing-like table with columns `rooms`, `lstat` and `price` (in units of
/// 1e5, capped at 0.5). Price rises with rooms and falls, convexly, with
/// lstat; the two features are negatively correlated.
pub fn synthetic_housing(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(HqnnError::InvalidConfig(format!("need at least 2 rows, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rooms_dist = Normal::<f64>::new(6.28, 0.7).expect("valid");
    let noise = Normal::<f64>::new(0.0, 1.0).expect("valid");
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let rooms: f64 = rooms_dist.sample(&mut rng).clamp(3.5, 8.8);
        let lstat = (12.6 - 6.0 * (rooms - 6.28) + 5.0 * noise.sample(&mut rng)).clamp(1.7, 38.0);
        let price_k = 22.5 + 4.5 * (rooms - 6.28) - 0.9 * (lstat - 12.6) + 0.025 * (lstat - 12.6).powi(2)
            + 3.0 * noise.sample(&mut rng)
            + rng.random_range(-0.5..0.5);
        features.push(vec![rooms, lstat]);
        targets.push((price_k.clamp(5.0, 50.0) * 1e3) / 1e5);
    }
    Dataset::new(features, targets)
}

/// Writes `features` and `targets` as a headed CSV.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset, feature_names: &[&str], target_name: &str) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| HqnnError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<&str> = feature_names.to_vec();
    header.push(target_name);
    w.write_record(&header).map_err(io)?;
    for (x, y) in data.features.iter().zip(&data.targets) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))
}

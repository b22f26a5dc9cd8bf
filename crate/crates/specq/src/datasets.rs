//! Labeled point sets: the two-concentric-circles generator and CSV I/O.

use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::noise::KeyedRng;

/// Row-major point set with cached row norms and optional ground truth.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    pub points: DMatrix<f64>,
    pub row_norms: Vec<f64>,
    pub ground_truth: Option<Vec<usize>>,
}

impl DataMatrix {
    pub fn new(points: DMatrix<f64>, ground_truth: Option<Vec<usize>>) -> Result<Self> {
        let (n, d) = points.shape();
        if n < 2 || d < 1 {
            return Err(Error::invalid(format!("need n >= 2 and d >= 1, got {n}x{d}")));
        }
        let row_norms: Vec<f64> = (0..n).map(|i| points.row(i).norm()).collect();
        for (i, &nm) in row_norms.iter().enumerate() {
            if !nm.is_finite() || nm <= 0.0 {
                return Err(Error::invalid(format!("row {i} has norm {nm}; rows must be finite and nonzero")));
            }
        }
        if let Some(labels) = &ground_truth {
            if labels.len() != n {
                return Err(Error::invalid("label count does not match row count"));
            }
        }
        Ok(DataMatrix { points, row_norms, ground_truth })
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn min_norm(&self) -> f64 {
        self.row_norms.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_norm(&self) -> f64 {
        self.row_norms.iter().cloned().fold(0.0, f64::max)
    }
}

/// Two concentric circles: n/2 points at uniformly random angles on each,
/// with isotropic Gaussian coordinate noise. Inner circle gets label 0.
pub fn make_circles(
    n: usize,
    radius_inner: f64,
    radius_outer: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if n < 4 {
        return Err(Error::invalid("make_circles needs n >= 4 to form two clusters"));
    }
    if n % 2 != 0 {
        return Err(Error::invalid("make_circles needs an even n"));
    }
    if !(radius_inner > 0.0 && radius_inner < radius_outer) {
        return Err(Error::invalid("need 0 < radius_inner < radius_outer"));
    }
    if noise_sd < 0.0 {
        return Err(Error::invalid("noise_sd must be >= 0"));
    }
    let rng = KeyedRng::new(seed);
    let half = n / 2;
    let mut points = DMatrix::<f64>::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (circle, radius) = if i < half { (0usize, radius_inner) } else { (1, radius_outer) };
        let mut stream = rng.stream("circles", &[i as u64]);
        let angle = stream.unit() * std::f64::consts::TAU;
        let mut x = radius * angle.cos();
        let mut y = radius * angle.sin();
        if noise_sd > 0.0 {
            let gx: f64 = StandardNormal.sample(&mut stream);
            let gy: f64 = StandardNormal.sample(&mut stream);
            x += noise_sd * gx;
            y += noise_sd * gy;
        }
        points[(i, 0)] = x;
        points[(i, 1)] = y;
        labels.push(circle);
    }
    DataMatrix::new(points, Some(labels))
}

/// Divide every row by the smallest row norm, so min_i ||s_i|| = 1.
/// Pairwise distance ratios and labels are unchanged.
pub fn rescale_min_norm(data: &DataMatrix) -> Result<DataMatrix> {
    let m = data.min_norm();
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid(format!("cannot rescale: min row norm {m}")));
    }
    let points = &data.points / m;
    DataMatrix::new(points, data.ground_truth.clone())
}

/// Read points from CSV: comma-separated reals, optional header line,
/// optional integer label in the last column.
pub fn load_csv(path: &Path, has_labels: bool) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(_) if first => {} // header line
            Err(e) => return Err(Error::invalid(format!("bad CSV row {:?}: {e}", record))),
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(Error::invalid("CSV contains no data rows"));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::invalid("CSV rows have inconsistent widths"));
    }
    let d = if has_labels { width.checked_sub(1).filter(|&d| d > 0).ok_or_else(|| Error::invalid("CSV label column leaves no features"))? } else { width };
    let n = rows.len();
    let mut points = DMatrix::<f64>::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..d {
            points[(i, j)] = row[j];
        }
        if has_labels {
            let raw = row[width - 1];
            if raw < 0.0 || raw.fract() != 0.0 {
                return Err(Error::invalid(format!("row {i}: label {raw} is not a nonnegative integer")));
            }
            labels.push(raw as usize);
        }
    }
    DataMatrix::new(points, has_labels.then_some(labels))
}

/// Write points (and labels, when present) in the same format `load_csv` reads.
pub fn save_csv(data: &DataMatrix, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for i in 0..data.n() {
        let mut record: Vec<String> =
            (0..data.dim()).map(|j| format!("{}", data.points[(i, j)])).collect();
        if let Some(labels) = &data.ground_truth {
            record.push(labels[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

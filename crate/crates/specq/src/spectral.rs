//! Eigendecomposition of the normalized Laplacian, noisy singular-value
//! estimates, low-eigenpair selection, and the two spectral embeddings.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{bounded_uniform, KeyedRng, KeyedStream, SveMode};

/// Full spectrum of a symmetric PSD matrix, ascending, with a deterministic
/// eigenvector sign convention (first component above 1e-10 is positive).
#[derive(Debug, Clone)]
pub struct SpectralModel {
    /// Ascending eigenvalues of the decomposed matrix.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column j pairing with eigenvalues[j].
    pub eigenvectors: DMatrix<f64>,
    /// Noisy singular-value estimates of the normalized incidence matrix.
    pub noisy_singular: Option<Vec<f64>>,
    /// Squares of `noisy_singular`: the noisy eigenvalue estimates.
    pub noisy_eigenvalues: Option<Vec<f64>>,
}

impl SpectralModel {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Singular values of the normalized incidence: sqrt of the eigenvalues,
    /// clamped at zero to absorb -1e-16-scale roundoff.
    pub fn singular_values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect()
    }

    /// Active eigenvalue estimates: noisy when present, exact otherwise.
    pub fn effective_eigenvalues(&self) -> &[f64] {
        self.noisy_eigenvalues.as_deref().unwrap_or(&self.eigenvalues)
    }

    /// Max residual ||L u - lambda u|| and orthonormality defect, for tests.
    pub fn validate_against(&self, lap: &DMatrix<f64>) -> (f64, f64) {
        let n = self.n();
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let u = self.eigenvectors.column(j);
            let r = lap * u - self.eigenvalues[j] * u;
            residual = residual.max(r.norm());
        }
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        let ortho = (gram - DMatrix::<f64>::identity(n, n)).abs().max();
        (residual, ortho)
    }
}

/// Full dense symmetric eigendecomposition, ascending order.
pub fn eigendecompose(lap: &DMatrix<f64>) -> Result<SpectralModel> {
    let n = lap.nrows();
    if n == 0 || lap.ncols() != n {
        return Err(Error::invalid("eigendecompose needs a nonempty square matrix"));
    }
    let asym = (lap - lap.transpose()).abs().max();
    if asym > 1e-10 {
        return Err(Error::numerical(format!("matrix is not symmetric: max |L - L^T| = {asym:e}")));
    }
    let eig = nalgebra::SymmetricEigen::try_new(lap.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let flip = col.iter().find(|v| v.abs() > 1e-10).map_or(1.0, |v| v.signum());
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i] * flip;
        }
    }
    Ok(SpectralModel { eigenvalues, eigenvectors, noisy_singular: None, noisy_eigenvalues: None })
}

/// One noisy estimate of a singular value: bounded error, clamped at zero,
/// then squared into an eigenvalue estimate.
pub fn noisy_eigenvalue_draw(
    singular: f64,
    eps_lambda: f64,
    mode: SveMode,
    rng: &mut KeyedStream,
) -> f64 {
    let err = match mode {
        SveMode::Absolute => bounded_uniform(rng, eps_lambda),
        SveMode::Relative => singular * bounded_uniform(rng, eps_lambda),
    };
    let est = (singular + err).max(0.0);
    est * est
}

/// Attach noisy singular-value estimates to the model. The error is applied
/// on the singular values of the normalized incidence matrix and squared.
/// One independent draw per index, keyed so results are order-invariant.
pub fn estimate_singular_values(
    model: &SpectralModel,
    eps_lambda: f64,
    mode: SveMode,
    rng: &KeyedRng,
) -> Result<SpectralModel> {
    if eps_lambda < 0.0 {
        return Err(Error::invalid("eps_lambda must be >= 0"));
    }
    let singulars = model.singular_values();
    let mut noisy_singular = Vec::with_capacity(singulars.len());
    let mut noisy_eigenvalues = Vec::with_capacity(singulars.len());
    for (j, &s) in singulars.iter().enumerate() {
        let mut stream = rng.stream("sve", &[j as u64]);
        let lam = noisy_eigenvalue_draw(s, eps_lambda, mode, &mut stream);
        noisy_singular.push(lam.sqrt());
        noisy_eigenvalues.push(lam);
    }
    Ok(SpectralModel {
        eigenvalues: model.eigenvalues.clone(),
        eigenvectors: model.eigenvectors.clone(),
        noisy_singular: Some(noisy_singular),
        noisy_eigenvalues: Some(noisy_eigenvalues),
    })
}

/// Which eigenvalue set drives the selection of the k lowest pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionSource {
    /// Exact eigenvalues: the projector onto the k lowest true eigenpairs.
    Exact,
    /// The noisy estimates, thresholded as the emulated circuit would.
    Noisy,
}

/// Outcome of selecting the k lowest eigenpairs.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Selected eigenvalue indices, ordered by ascending selection value.
    pub indices: Vec<usize>,
    /// Separation threshold: every kept estimate is <= threshold.
    pub threshold: f64,
    /// Safety factor keeping the threshold above the largest kept estimate.
    pub margin: f64,
}

/// Select the k lowest eigenpairs using the model's active estimates
/// (noisy when attached, exact otherwise). Ties break by original index.
pub fn select_k_lowest(model: &SpectralModel, k: usize, margin: f64) -> Result<Selection> {
    let source =
        if model.noisy_eigenvalues.is_some() { SelectionSource::Noisy } else { SelectionSource::Exact };
    select_k_lowest_on(model, k, margin, source)
}

/// Selection with an explicit value source. The threshold is always computed
/// from the active (noisy when present) estimates: the smaller of
/// margin * max(kept) and the midpoint to the smallest excluded estimate
/// when the kept estimates separate cleanly, and margin * max(kept) otherwise.
pub fn select_k_lowest_on(
    model: &SpectralModel,
    k: usize,
    margin: f64,
    source: SelectionSource,
) -> Result<Selection> {
    let n = model.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if !(margin > 1.0) {
        return Err(Error::invalid(format!("selection margin must be > 1, got {margin}")));
    }
    let basis: &[f64] = match source {
        SelectionSource::Exact => &model.eigenvalues,
        SelectionSource::Noisy => model
            .noisy_eigenvalues
            .as_deref()
            .ok_or_else(|| Error::invalid("noisy selection requires noisy eigenvalue estimates"))?,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| basis[a].total_cmp(&basis[b]).then(a.cmp(&b)));
    let indices: Vec<usize> = order[..k].to_vec();
    let estimates = model.effective_eigenvalues();
    let kept_max =
        indices.iter().map(|&j| estimates[j]).fold(f64::NEG_INFINITY, f64::max);
    let excluded_min = order[k..]
        .iter()
        .map(|&j| estimates[j])
        .fold(f64::INFINITY, f64::min);
    let threshold = if kept_max < excluded_min {
        (margin * kept_max).min(0.5 * (kept_max + excluded_min))
    } else {
        margin * kept_max
    };
    Ok(Selection { indices, threshold, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingKind {
    #[serde(rename = "classical-columns")]
    ClassicalColumns,
    #[serde(rename = "quantum-lambda-scaled")]
    QuantumLambdaScaled,
}

/// Spectral-space coordinates handed to the clustering stage.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub kind: EmbeddingKind,
    /// n x k coordinates.
    pub rows: DMatrix<f64>,
    /// Reported row norms (noisy in the quantum embedding).
    pub row_norms: Vec<f64>,
    /// Probability of observing the kept branch per row: (||row|| / threshold)^2.
    pub keep_prob: Option<Vec<f64>>,
    /// Selection threshold the keep probabilities refer to.
    pub threshold: Option<f64>,
    /// Rows whose keep probability is below 1e-12 (unbounded amplification).
    pub flagged: Vec<usize>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.rows.ncols()
    }

    /// Unit-normalized copy of the rows; all-zero rows are left as zeros.
    pub fn normalized_rows(&self) -> DMatrix<f64> {
        let mut out = self.rows.clone();
        for i in 0..out.nrows() {
            let norm = out.row(i).norm();
            if norm > 0.0 {
                for j in 0..out.ncols() {
                    out[(i, j)] /= norm;
                }
            }
        }
        out
    }

    /// CSV export: k coordinate columns, a norm column, and a keep-probability
    /// column for the quantum embedding.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let k = self.k();
        let mut header: Vec<String> = (0..k).map(|j| format!("e{j}")).collect();
        header.push("norm".into());
        if self.keep_prob.is_some() {
            header.push("keep_prob".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.rows.nrows() {
            let mut fields: Vec<String> =
                (0..k).map(|j| format!("{}", self.rows[(i, j)])).collect();
            fields.push(format!("{}", self.row_norms[i]));
            if let Some(p) = &self.keep_prob {
                fields.push(format!("{}", p[i]));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Classical embedding: row i collects the i-th components of the k lowest
/// eigenvectors.
pub fn project_classical(model: &SpectralModel, k: usize) -> Result<Embedding> {
    let n = model.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k = {k}")));
    }
    let rows = DMatrix::from_fn(n, k, |i, j| model.eigenvectors[(i, j)]);
    let row_norms = (0..n).map(|i| rows.row(i).norm()).collect();
    Ok(Embedding {
        kind: EmbeddingKind::ClassicalColumns,
        rows,
        row_norms,
        keep_prob: None,
        threshold: None,
        flagged: Vec::new(),
    })
}

/// Quantum embedding: row i holds sigma_ij * lambda_j over the selected
/// eigenpairs, where lambda_j is the noisy estimate. Reported norms carry a
/// bounded relative error; keep probabilities and low-support flags are
/// exposed for the cost model.
pub fn project_quantum(
    model: &SpectralModel,
    selection: &Selection,
    norm_rel_err: f64,
    rng: &KeyedRng,
) -> Result<Embedding> {
    let noisy = model
        .noisy_eigenvalues
        .as_deref()
        .ok_or_else(|| Error::invalid("quantum projection requires noisy eigenvalue estimates"))?;
    let n = model.n();
    let k = selection.indices.len();
    let rows = DMatrix::from_fn(n, k, |i, jj| {
        let j = selection.indices[jj];
        model.eigenvectors[(i, j)] * noisy[j]
    });
    let nu = selection.threshold;
    let mut row_norms = Vec::with_capacity(n);
    let mut keep_prob = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for i in 0..n {
        let true_norm = rows.row(i).norm();
        let p = if nu > 0.0 { (true_norm / nu).powi(2) } else { 0.0 };
        if p < 1e-12 {
            flagged.push(i);
        }
        let mut stream = rng.stream("norm", &[i as u64]);
        row_norms.push(true_norm * (1.0 + bounded_uniform(&mut stream, norm_rel_err)));
        keep_prob.push(p);
    }
    Ok(Embedding {
        kind: EmbeddingKind::QuantumLambdaScaled,
        rows,
        row_norms,
        keep_prob: Some(keep_prob),
        threshold: Some(nu),
        flagged,
    })
}

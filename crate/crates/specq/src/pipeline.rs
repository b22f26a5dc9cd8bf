//! End-to-end pipeline: data -> graph -> incidence -> spectrum -> embedding
//! -> clustering -> scoring and cost report, plus the n-sweep study and
//! plot-data export.

use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    self, ClusteringConfig, ClusteringResult, Init, RowSource, SeparationParams, SeparationReport,
};
use crate::config::{Generator, RunConfig};
use crate::costmodel::{
    self, access_cost, classical_cost, condition_number, loglog_slope, mu_param,
    mu_param_incidence, quantum_cost, row_norm_ratio, CostConstants, CostReport,
    QuantumCostInputs,
};
use crate::datasets::{self, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::{build_adjacency, IncidenceView, SimilarityGraph};
use crate::noise::{KeyedRng, Mode, NoiseProfile, SveMode};
use crate::spectral::{
    self, noisy_eigenvalue_draw, project_classical, project_quantum, select_k_lowest_on,
    Embedding, SelectionSource,
};

/// Everything one pipeline execution produced.
pub struct RunOutcome {
    pub record: RunRecord,
    pub data: DataMatrix,
    pub graph: SimilarityGraph,
    pub embedding: Embedding,
    /// Rows the clustering stage consumed (normalized when configured).
    pub consumed: DMatrix<f64>,
}

/// Serialized run result; embeds the resolved configuration for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: Mode,
    pub seed: u64,
    pub config: RunConfig,
    pub d_min: f64,
    pub accuracy: Option<f64>,
    pub misclassified: Option<usize>,
    pub clustering: ClusteringResult,
    pub cost: CostReport,
    pub flagged_rows: usize,
    pub separation: SeparationReport,
}

/// Per-iteration re-preparation of the consumed rows: each clustering
/// iteration sees the eigenvector coordinates scaled by a fresh draw of the
/// noisy eigenvalue estimates (one coherent draw per iteration), while
/// centroid updates and final scoring use the exact-value base rows.
struct JitteredRows {
    base: DMatrix<f64>,
    coords: DMatrix<f64>,
    singulars: Vec<f64>,
    eps_lambda: f64,
    sve_mode: SveMode,
    normalize: bool,
    rng: KeyedRng,
}

impl RowSource for JitteredRows {
    fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    fn rows(&self, restart: u64, iteration: u64) -> Cow<'_, DMatrix<f64>> {
        if self.eps_lambda == 0.0 {
            return Cow::Borrowed(&self.base);
        }
        let scales: Vec<f64> = self
            .singulars
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                let mut stream = self.rng.stream("state", &[restart, iteration, j as u64]);
                noisy_eigenvalue_draw(s, self.eps_lambda, self.sve_mode, &mut stream)
            })
            .collect();
        let mut rows =
            DMatrix::from_fn(self.coords.nrows(), self.coords.ncols(), |i, j| {
                self.coords[(i, j)] * scales[j]
            });
        if self.normalize {
            for i in 0..rows.nrows() {
                let norm = rows.row(i).norm();
                if norm > 0.0 {
                    for j in 0..rows.ncols() {
                        rows[(i, j)] /= norm;
                    }
                }
            }
        }
        Cow::Owned(rows)
    }
}

fn scaled_rows(coords: &DMatrix<f64>, scales: &[f64], normalize: bool) -> DMatrix<f64> {
    let mut rows = DMatrix::from_fn(coords.nrows(), coords.ncols(), |i, j| {
        coords[(i, j)] * scales[j]
    });
    if normalize {
        for i in 0..rows.nrows() {
            let norm = rows.row(i).norm();
            if norm > 0.0 {
                for j in 0..rows.ncols() {
                    rows[(i, j)] /= norm;
                }
            }
        }
    }
    rows
}

fn positive_norms(rows: &DMatrix<f64>) -> Vec<f64> {
    (0..rows.nrows()).map(|i| rows.row(i).norm()).filter(|&v| v > 0.0).collect()
}

fn data_driven_separation(
    consumed: &DMatrix<f64>,
    result: &ClusteringResult,
) -> SeparationReport {
    let k = result.centroids.len();
    let dim = consumed.ncols();
    let centroids = DMatrix::from_fn(k, dim, |i, j| result.centroids[i][j]);
    let mut min_sep = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            min_sep = min_sep.min((centroids.row(i) - centroids.row(j)).norm());
        }
    }
    if !min_sep.is_finite() {
        min_sep = 0.0;
    }
    let mut dists: Vec<f64> = (0..consumed.nrows())
        .map(|i| (consumed.row(i) - centroids.row(result.labels[i])).norm())
        .collect();
    dists.sort_by(f64::total_cmp);
    let q95 = dists[(dists.len() * 95 / 100).min(dists.len() - 1)];
    let eta_bound = positive_norms(consumed)
        .iter()
        .fold(0.0f64, |a, &v| a.max(v * v))
        .min(1.0)
        .max(f64::MIN_POSITIVE);
    clustering::check_well_clusterable(
        consumed,
        &centroids,
        SeparationParams {
            xi: 0.5 * min_sep,
            beta: q95,
            lambda_frac: 0.95,
            eta_bound,
        },
    )
}

/// One full pipeline execution in the given mode with the given seed.
pub fn run_once(cfg: &RunConfig, mode: Mode, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    let profile = match mode {
        Mode::Classical => NoiseProfile::classical(seed),
        Mode::Quantum => NoiseProfile { mode: Mode::Quantum, seed, ..cfg.noise },
    };
    profile.validate()?;

    // dataset
    let raw = match cfg.data.generator {
        Generator::Circles => datasets::make_circles(
            cfg.data.n,
            cfg.data.radius_inner,
            cfg.data.radius_outer,
            cfg.data.noise_sd,
            seed,
        )?,
        Generator::Csv => {
            let path = cfg.data.csv_path.as_ref().ok_or_else(|| Error::config("missing csv path"))?;
            datasets::load_csv(path, cfg.data.csv_labels)?
        }
    };
    let data = if cfg.data.rescale { datasets::rescale_min_norm(&raw)? } else { raw };

    // graph and spectrum
    let d_min = cfg.d_min()?;
    let graph = build_adjacency(&data, d_min, Some(&profile))?;
    let view = IncidenceView::new(&graph, profile.eps_b)?;
    let lap = view.normalized_laplacian()?;
    let model = spectral::eigendecompose(&lap)?;

    let k = cfg.spectral.k;
    let margin = cfg.spectral.threshold_margin;
    let rng = profile.rng();

    let (embedding, selection, model) = match mode {
        Mode::Classical => {
            let selection = select_k_lowest_on(&model, k, margin, SelectionSource::Exact)?;
            let embedding = project_classical(&model, k)?;
            (embedding, selection, model)
        }
        Mode::Quantum => {
            let noisy =
                spectral::estimate_singular_values(&model, profile.eps_lambda, profile.sve_mode, &rng)?;
            let selection = select_k_lowest_on(&noisy, k, margin, cfg.spectral.selection)?;
            let embedding = project_quantum(&noisy, &selection, profile.norm_rel_err, &rng)?;
            (embedding, selection, noisy)
        }
    };

    // rows the clustering stage consumes: exact-eigenvalue scaling
    let normalize = cfg.spectral.normalize_rows;
    let coords = DMatrix::from_fn(data.n(), k, |i, jj| {
        model.eigenvectors[(i, selection.indices[jj])]
    });
    let selected_singulars: Vec<f64> = {
        let s = model.singular_values();
        selection.indices.iter().map(|&j| s[j]).collect()
    };
    let selected_true: Vec<f64> =
        selection.indices.iter().map(|&j| model.eigenvalues[j].max(0.0)).collect();
    let consumed = match mode {
        Mode::Classical => scaled_rows(&coords, &vec![1.0; k], normalize),
        Mode::Quantum => scaled_rows(&coords, &selected_true, normalize),
    };

    // clustering
    let ccfg = ClusteringConfig {
        k,
        delta: profile.delta,
        max_iters: cfg.cluster.max_iters,
        tol: cfg.cluster.tol,
        restarts: cfg.cluster.restarts,
        init: Init::KmeansPlusPlus,
        seed,
    };
    let result = match mode {
        Mode::Classical => clustering::kmeans(&consumed, &ccfg)?,
        Mode::Quantum => {
            let source = JitteredRows {
                base: consumed.clone(),
                coords,
                singulars: selected_singulars,
                eps_lambda: profile.eps_lambda,
                sve_mode: profile.sve_mode,
                normalize,
                rng: profile.rng(),
            };
            clustering::qmeans_from_source(&source, &ccfg)?
        }
    };

    // scoring
    let (accuracy, misclassified) = match &data.ground_truth {
        Some(truth) => {
            let (a, m) = clustering::accuracy_with_misclassified(&result.labels, truth)?;
            (Some(a), Some(m))
        }
        None => (None, None),
    };

    // cost report
    let consts = CostConstants {
        c_qram: cfg.cost.c_qram,
        c1: cfg.cost.c1,
        c2: cfg.cost.c2,
        c3: cfg.cost.c3,
        c4: cfg.cost.c4,
    };
    let eta_s = row_norm_ratio(&data.row_norms)?;
    let t_s = access_cost(data.n(), data.dim(), consts.c_qram);
    let classical = classical_cost(
        data.n(),
        data.dim(),
        graph.edge_count(),
        k,
        result.iterations_used,
        &consts,
    );
    let mut report = CostReport {
        n: data.n(),
        d: data.dim(),
        k,
        m: graph.edge_count(),
        mu_b: None,
        eta_s,
        eta_lk: None,
        kappa_lk: None,
        t_s,
        eps_dist: profile.eps_dist,
        eps_b: profile.eps_b,
        eps_lambda: profile.eps_lambda,
        delta: profile.delta,
        iterations_used: result.iterations_used,
        classical_cost: classical,
        quantum_cost: None,
        quantum_cost_total: None,
        kappa_lk_est: None,
        eta_lk_raw: None,
        quantum_cost_general: None,
    };
    if mode == Mode::Quantum {
        let mu_b = mu_param_incidence(&view)?;
        let kappa_lk = condition_number(&selected_true)?;
        let consumed_norms = positive_norms(&consumed);
        let eta_lk = row_norm_ratio(&consumed_norms)?;
        let inputs = QuantumCostInputs {
            t_s,
            eta_s,
            eps_dist: profile.eps_dist,
            eps_b: profile.eps_b,
            mu_b,
            kappa_lk,
            eps_lambda: profile.eps_lambda,
            k,
            eta_lk,
            delta: profile.delta,
        };
        let qc = quantum_cost(&inputs)?;
        report.mu_b = Some(mu_b);
        report.kappa_lk = Some(kappa_lk);
        report.eta_lk = Some(eta_lk);
        report.quantum_cost = Some(qc);
        report.quantum_cost_total = Some(qc * result.iterations_used as f64);
        if let Some(noisy) = &model.noisy_eigenvalues {
            let sel: Vec<f64> = selection.indices.iter().map(|&j| noisy[j]).collect();
            report.kappa_lk_est = condition_number(&sel).ok();
        }
        report.eta_lk_raw = {
            let raw = positive_norms(&embedding.rows);
            row_norm_ratio(&raw).ok()
        };
        report.quantum_cost_general = (|| {
            let svd = consumed.clone().svd(false, false);
            let singulars: Vec<f64> = svd.singular_values.iter().cloned().collect();
            let kappa_v = condition_number(&singulars).ok()?;
            let mu_v = mu_param(&consumed).ok()?;
            let general =
                costmodel::clustering_cost_general(k, eta_lk, profile.delta, kappa_v, mu_v).ok()?;
            Some(t_s * eta_s / (profile.eps_dist * profile.eps_b) * mu_b * kappa_lk
                / profile.eps_lambda
                * general)
        })();
    }

    let separation = data_driven_separation(&consumed, &result);
    let record = RunRecord {
        mode,
        seed,
        config: cfg.clone(),
        d_min,
        accuracy,
        misclassified,
        clustering: result,
        cost: report,
        flagged_rows: embedding.flagged.len(),
        separation,
    };
    Ok(RunOutcome { record, data, graph, embedding, consumed })
}

/// Single run using the configured mode and seed.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome> {
    run_once(cfg, cfg.noise.mode, cfg.noise.seed)
}

fn mode_tag(mode: Mode) -> &'static str {
    match mode {
        Mode::Classical => "classical",
        Mode::Quantum => "quantum",
    }
}

/// Write the per-run artifacts: JSON record, embedding CSV, input points
/// with predicted labels, and the graph edge list.
pub fn write_run_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let tag = format!("{}_{}", mode_tag(outcome.record.mode), outcome.record.seed);
    let mut written = Vec::new();

    let record_path = dir.join(format!("run_{tag}.json"));
    fs::write(&record_path, serde_json::to_string_pretty(&outcome.record)? .as_bytes())?;
    written.push(record_path);

    let emb_path = dir.join(format!("embedding_{tag}.csv"));
    let mut buf = Vec::new();
    outcome.embedding.write_csv(&mut buf)?;
    fs::write(&emb_path, buf)?;
    written.push(emb_path);

    let pts_path = dir.join(format!("points_{tag}.csv"));
    written.push(pts_path.clone());
    fs::write(&pts_path, points_csv(outcome))?;

    let edge_path = dir.join(format!("edges_{tag}.txt"));
    let mut ebuf = Vec::new();
    outcome.graph.write_edge_list(&mut ebuf)?;
    fs::write(&edge_path, ebuf)?;
    written.push(edge_path);

    Ok(written)
}

fn points_csv(outcome: &RunOutcome) -> String {
    let d = outcome.data.dim();
    let mut out = String::new();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("predicted".into());
    if outcome.data.ground_truth.is_some() {
        header.push("truth".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..outcome.data.n() {
        let mut fields: Vec<String> =
            (0..d).map(|j| format!("{}", outcome.data.points[(i, j)])).collect();
        fields.push(outcome.record.clustering.labels[i].to_string());
        if let Some(truth) = &outcome.data.ground_truth {
            fields.push(truth[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Spectral-space plot data: the consumed rows with predicted labels.
pub fn spectral_csv(outcome: &RunOutcome) -> String {
    let k = outcome.consumed.ncols();
    let mut out = String::new();
    let mut header: Vec<String> = (0..k).map(|j| format!("e{j}")).collect();
    header.push("predicted".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..outcome.consumed.nrows() {
        let mut fields: Vec<String> =
            (0..k).map(|j| format!("{}", outcome.consumed[(i, j)])).collect();
        fields.push(outcome.record.clustering.labels[i].to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Plot-data export for one run: input-space points with labels, the
/// spectral-space embedding with labels, and the adjacency edge list.
pub fn export_run_plotdata(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let tag = format!("{}_{}", mode_tag(outcome.record.mode), outcome.record.seed);
    let mut written = Vec::new();
    let pts = dir.join(format!("plot_points_{tag}.csv"));
    fs::write(&pts, points_csv(outcome))?;
    written.push(pts);
    let spec = dir.join(format!("plot_spectral_{tag}.csv"));
    fs::write(&spec, spectral_csv(outcome))?;
    written.push(spec);
    let edges = dir.join(format!("plot_edges_{tag}.txt"));
    let mut ebuf = Vec::new();
    outcome.graph.write_edge_list(&mut ebuf)?;
    fs::write(&edges, ebuf)?;
    written.push(edges);
    Ok(written)
}

/// One sweep cell: a (mode, n, repetition) execution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: Mode,
    pub n: usize,
    pub repetition: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub misclassified: Option<usize>,
    pub cost: CostReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracySummaryRow {
    pub n: usize,
    pub classical_mean: f64,
    pub classical_sd: f64,
    pub quantum_mean: f64,
    pub quantum_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostCurveRow {
    pub n: usize,
    pub classical: f64,
    pub quantum_mean: f64,
    pub quantum_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub classical_slope: f64,
    pub quantum_slope: f64,
    /// Smallest sweep n at which the quantum curve is below the classical.
    pub crossover_n: Option<usize>,
    pub accuracy: Vec<AccuracySummaryRow>,
    pub cost_curves: Vec<CostCurveRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run both modes over every (n, repetition) cell of the sweep. Cells run
/// in parallel; per-cell seeds derive from (seed, n, repetition), so the
/// outcome is independent of scheduling.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    if cfg.run.sweep.is_empty() {
        return Err(Error::config("run.sweep must not be empty"));
    }
    if cfg.data.generator != Generator::Circles {
        return Err(Error::config("sweeps vary n and require the circles generator"));
    }
    let base = KeyedRng::new(cfg.noise.seed);
    let cells: Vec<(usize, usize)> = cfg
        .run
        .sweep
        .iter()
        .flat_map(|&n| (0..cfg.run.repetitions).map(move |rep| (n, rep)))
        .collect();
    let results: Vec<Result<(SweepRow, SweepRow)>> = cells
        .par_iter()
        .map(|&(n, rep)| {
            let seed = base.stream("sweep", &[n as u64, rep as u64]).next_u64();
            let mut cell_cfg = cfg.clone();
            cell_cfg.data.n = n;
            let classical = run_once(&cell_cfg, Mode::Classical, seed)?;
            let quantum = run_once(&cell_cfg, Mode::Quantum, seed)?;
            let as_row = |o: &RunOutcome, rep: usize| SweepRow {
                mode: o.record.mode,
                n,
                repetition: rep,
                seed,
                accuracy: o.record.accuracy,
                misclassified: o.record.misclassified,
                cost: o.record.cost.clone(),
            };
            Ok((as_row(&classical, rep), as_row(&quantum, rep)))
        })
        .collect();
    let mut rows = Vec::with_capacity(cells.len() * 2);
    for r in results {
        let (c, q) = r?;
        rows.push(c);
        rows.push(q);
    }
    rows.sort_by_key(|r| (r.n, r.repetition, r.mode == Mode::Quantum));

    let mut accuracy = Vec::new();
    let mut cost_curves = Vec::new();
    for &n in &cfg.run.sweep {
        let of_mode = |mode: Mode| -> Vec<&SweepRow> {
            rows.iter().filter(|r| r.n == n && r.mode == mode).collect()
        };
        let cl = of_mode(Mode::Classical);
        let qu = of_mode(Mode::Quantum);
        let (cm, cs) = mean_sd(&cl.iter().filter_map(|r| r.accuracy).collect::<Vec<_>>());
        let (qm, qs) = mean_sd(&qu.iter().filter_map(|r| r.accuracy).collect::<Vec<_>>());
        accuracy.push(AccuracySummaryRow {
            n,
            classical_mean: cm,
            classical_sd: cs,
            quantum_mean: qm,
            quantum_sd: qs,
        });
        let (ccost, _) = mean_sd(&cl.iter().map(|r| r.cost.classical_cost).collect::<Vec<_>>());
        let (qcost, qsd) =
            mean_sd(&qu.iter().filter_map(|r| r.cost.quantum_cost).collect::<Vec<_>>());
        cost_curves.push(CostCurveRow { n, classical: ccost, quantum_mean: qcost, quantum_sd: qsd });
    }
    let ns: Vec<f64> = cost_curves.iter().map(|r| r.n as f64).collect();
    let classical_curve: Vec<f64> = cost_curves.iter().map(|r| r.classical).collect();
    let quantum_curve: Vec<f64> = cost_curves.iter().map(|r| r.quantum_mean).collect();
    let (classical_slope, _) = loglog_slope(&ns, &classical_curve)?;
    let (quantum_slope, _) = loglog_slope(&ns, &quantum_curve)?;
    let crossover_n = cost_curves.iter().find(|r| r.quantum_mean < r.classical).map(|r| r.n);
    Ok(SweepOutcome {
        rows,
        summary: SweepSummary {
            classical_slope,
            quantum_slope,
            crossover_n,
            accuracy,
            cost_curves,
        },
    })
}

/// Write sweep outputs: per-run CSV, summary JSON, and the cost-curve CSV.
pub fn write_sweep_outputs(outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let results = dir.join("results.csv");
    let mut text = String::from(CostReport::csv_header());
    text.push('\n');
    for row in &outcome.rows {
        text.push_str(&row.cost.csv_row(row.accuracy, row.seed));
        text.push('\n');
    }
    fs::write(&results, text)?;
    written.push(results);

    let summary = dir.join("summary.json");
    fs::write(&summary, serde_json::to_string_pretty(&outcome.summary)?)?;
    written.push(summary);

    written.extend(export_sweep_plotdata(outcome, dir)?);
    Ok(written)
}

/// Cost-vs-n curve export; warns and writes nothing when there are no rows.
pub fn export_sweep_plotdata(outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    if outcome.rows.is_empty() {
        eprintln!("warning: no sweep results, skipping plot-data export");
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir)?;
    let path = dir.join("cost_curves.csv");
    let mut text = String::from("n,classical,quantum_mean,quantum_sd\n");
    for row in &outcome.summary.cost_curves {
        text.push_str(&format!(
            "{},{},{},{}\n",
            row.n, row.classical, row.quantum_mean, row.quantum_sd
        ));
    }
    fs::write(&path, text)?;
    Ok(vec![path])
}

//! Lloyd's k-means, its bounded-noise emulation, the cluster-separation
//! checker, and permutation-matched accuracy scoring.

use std::borrow::Cow;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{bounded_uniform, uniform_in_ball, KeyedRng, KeyedStream};

#[derive(Debug, Clone)]
pub enum Init {
    KmeansPlusPlus,
    Provided(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct ClusteringConfig {
    pub k: usize,
    /// Distance-estimate and centroid-readout noise bound.
    pub delta: f64,
    pub max_iters: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    /// Independent seeded runs; the lowest-inertia run wins.
    pub restarts: usize,
    pub init: Init,
    pub seed: u64,
}

impl ClusteringConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ClusteringConfig {
            k,
            delta: 0.0,
            max_iters: 100,
            tol: 1e-4,
            restarts: 10,
            init: Init::KmeansPlusPlus,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if n < self.k {
            return Err(Error::invalid(format!("need at least k = {} points, got {n}", self.k)));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::invalid("max_iters and restarts must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be > 0"));
        }
        if self.delta < 0.0 {
            return Err(Error::invalid("delta must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Sum of squared point-to-assigned-centroid distances, exact.
    pub inertia: f64,
}

/// Rows consumed by the assignment step. The default source returns the
/// input matrix unchanged; the emulation re-prepares rows per iteration.
pub trait RowSource {
    /// Exact rows: centroid updates and final scoring use these.
    fn base(&self) -> &DMatrix<f64>;
    /// Rows visible to the assignment step of one iteration.
    fn rows(&self, restart: u64, iteration: u64) -> Cow<'_, DMatrix<f64>>;
}

pub struct FixedRows<'a>(pub &'a DMatrix<f64>);

impl RowSource for FixedRows<'_> {
    fn base(&self) -> &DMatrix<f64> {
        self.0
    }

    fn rows(&self, _restart: u64, _iteration: u64) -> Cow<'_, DMatrix<f64>> {
        Cow::Borrowed(self.0)
    }
}

#[inline]
fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..a.ncols() {
        let d = a[(i, c)] - b[(j, c)];
        acc += d * d;
    }
    acc
}

/// D^2-sampling initialization. Deterministic for a fixed stream.
pub fn kmeanspp_init(points: &DMatrix<f64>, k: usize, stream: &mut KeyedStream) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    if n < k || k == 0 {
        return Err(Error::invalid(format!("kmeans++ needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let dim = points.ncols();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let first = (stream.unit() * n as f64) as usize % n;
    chosen.push(first);
    let mut weights: Vec<f64> =
        (0..n).map(|i| sq_dist(points, i, points, first)).collect();
    while chosen.len() < k {
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut r = stream.unit() * total;
            let mut pick = n - 1;
            for (i, &w) in weights.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            // all remaining mass at distance zero: take the first unchosen index
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for i in 0..n {
            weights[i] = weights[i].min(sq_dist(points, i, points, next));
        }
    }
    let mut centroids = DMatrix::<f64>::zeros(k, dim);
    for (j, &i) in chosen.iter().enumerate() {
        centroids.set_row(j, &points.row(i));
    }
    Ok(centroids)
}

/// Read-out perturbation of one centroid: a uniform draw from the delta-ball.
pub(crate) fn perturb_centroid(c: &mut [f64], delta: f64, stream: &mut KeyedStream) {
    if delta == 0.0 {
        return;
    }
    let shift = uniform_in_ball(stream, c.len(), delta);
    for (x, s) in c.iter_mut().zip(shift) {
        *x += s;
    }
}

fn assign(
    rows: &DMatrix<f64>,
    centroids: &DMatrix<f64>,
    delta: f64,
    noise: Option<(&KeyedRng, u64, u64)>,
    labels: &mut [usize],
) {
    let k = centroids.nrows();
    for i in 0..rows.nrows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let mut d = sq_dist(rows, i, centroids, j);
            if let Some((rng, restart, iter)) = noise {
                let mut s = rng.stream("qmeans.dist", &[restart, iter, i as u64, j as u64]);
                d += bounded_uniform(&mut s, delta);
            }
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        labels[i] = best;
    }
}

fn update_centroids(base: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let dim = base.ncols();
    let mut sums = DMatrix::<f64>::zeros(k, dim);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..dim {
            sums[(l, j)] += base[(i, j)];
        }
    }
    for l in 0..k {
        if counts[l] > 0 {
            for j in 0..dim {
                sums[(l, j)] /= counts[l] as f64;
            }
        }
    }
    // empty-cluster repair: reseed at the point farthest from its centroid
    let empties: Vec<usize> = (0..k).filter(|&l| counts[l] == 0).collect();
    if !empties.is_empty() {
        let mut used = vec![false; base.nrows()];
        for l in empties {
            let far = (0..base.nrows())
                .filter(|&i| !used[i])
                .max_by(|&a, &b| {
                    let da = sq_dist(base, a, &sums, labels[a]);
                    let db = sq_dist(base, b, &sums, labels[b]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap_or(0);
            used[far] = true;
            sums.set_row(l, &base.row(far));
        }
    }
    sums
}

fn final_scoring(base: &DMatrix<f64>, centroids: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let mut labels = vec![0usize; base.nrows()];
    assign(base, centroids, 0.0, None, &mut labels);
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(base, i, centroids, l))
        .sum();
    (labels, inertia)
}

fn lloyd_once(
    source: &dyn RowSource,
    cfg: &ClusteringConfig,
    rng: &KeyedRng,
    restart: u64,
) -> Result<ClusteringResult> {
    let base = source.base();
    let n = base.nrows();
    let mut centroids = match &cfg.init {
        Init::KmeansPlusPlus => {
            let mut stream = rng.stream("kmeans.init", &[restart]);
            kmeanspp_init(base, cfg.k, &mut stream)?
        }
        Init::Provided(c) => {
            if c.nrows() != cfg.k || c.ncols() != base.ncols() {
                return Err(Error::invalid("provided centroids have the wrong shape"));
            }
            c.clone()
        }
    };
    let noisy = cfg.delta > 0.0;
    let mut labels = vec![usize::MAX; n];
    let mut new_labels = vec![0usize; n];
    let mut iterations = 0;
    let mut converged = false;
    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let rows = source.rows(restart, iter as u64);
        let noise = noisy.then_some((rng, restart, iter as u64));
        assign(rows.as_ref(), &centroids, cfg.delta, noise, &mut new_labels);
        let mut updated = update_centroids(base, &new_labels, cfg.k);
        if noisy {
            for j in 0..cfg.k {
                let mut stream = rng.stream("qmeans.cent", &[restart, iter as u64, j as u64]);
                let mut row: Vec<f64> = updated.row(j).iter().cloned().collect();
                perturb_centroid(&mut row, cfg.delta, &mut stream);
                for (jj, v) in row.into_iter().enumerate() {
                    updated[(j, jj)] = v;
                }
            }
        }
        let movement = (0..cfg.k)
            .map(|j| (updated.row(j) - centroids.row(j)).norm())
            .fold(0.0, f64::max);
        let stable = new_labels == labels;
        centroids = updated;
        std::mem::swap(&mut labels, &mut new_labels);
        if movement < cfg.tol || stable {
            converged = true;
            break;
        }
    }
    let (labels, inertia) = final_scoring(base, &centroids);
    Ok(ClusteringResult {
        centroids: (0..cfg.k).map(|j| centroids.row(j).iter().cloned().collect()).collect(),
        labels,
        iterations_used: iterations,
        converged,
        inertia,
    })
}

fn best_of_restarts(
    source: &dyn RowSource,
    cfg: &ClusteringConfig,
    rng: &KeyedRng,
) -> Result<ClusteringResult> {
    cfg.validate(source.base().nrows())?;
    let restarts = match cfg.init {
        Init::Provided(_) => 1, // a fixed init leaves nothing to restart
        Init::KmeansPlusPlus => cfg.restarts,
    };
    let mut best: Option<ClusteringResult> = None;
    for r in 0..restarts {
        let run = lloyd_once(source, cfg, rng, r as u64)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Exact Lloyd iterations; `delta` is ignored.
pub fn kmeans(points: &DMatrix<f64>, cfg: &ClusteringConfig) -> Result<ClusteringResult> {
    let exact = ClusteringConfig { delta: 0.0, ..cfg.clone() };
    best_of_restarts(&FixedRows(points), &exact, &KeyedRng::new(cfg.seed))
}

/// Noisy Lloyd iterations: bounded-error distance estimates per
/// (point, centroid, iteration) and a delta-ball read-out perturbation of
/// every updated centroid. With delta = 0 this is exactly `kmeans`.
pub fn qmeans(points: &DMatrix<f64>, cfg: &ClusteringConfig) -> Result<ClusteringResult> {
    qmeans_from_source(&FixedRows(points), cfg)
}

/// `qmeans` over a row source that may re-prepare rows each iteration.
pub fn qmeans_from_source(source: &dyn RowSource, cfg: &ClusteringConfig) -> Result<ClusteringResult> {
    best_of_restarts(source, cfg, &KeyedRng::new(cfg.seed))
}

/// Parameters of the three-part cluster-separation test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeparationParams {
    /// Minimum inter-centroid distance.
    pub xi: f64,
    /// Proximity radius around centroids.
    pub beta: f64,
    /// Required fraction of points within `beta` of their centroid.
    pub lambda_frac: f64,
    /// Norm-spread bound entering the third condition.
    pub eta_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    pub centroid_separation_ok: bool,
    pub min_centroid_distance: f64,
    pub proximity_ok: bool,
    pub fraction_within_beta: f64,
    pub intra_inter_ok: bool,
    pub intra_inter_lhs: f64,
    pub intra_inter_rhs: f64,
    pub all_ok: bool,
}

/// Evaluate the three separation conditions, reporting witnesses for each.
pub fn check_well_clusterable(
    points: &DMatrix<f64>,
    centroids: &DMatrix<f64>,
    params: SeparationParams,
) -> SeparationReport {
    let k = centroids.nrows();
    let mut min_sep = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            min_sep = min_sep.min((centroids.row(i) - centroids.row(j)).norm());
        }
    }
    if k < 2 {
        min_sep = f64::INFINITY;
    }
    let n = points.nrows();
    let within = (0..n)
        .filter(|&i| {
            let d = (0..k)
                .map(|j| (points.row(i) - centroids.row(j)).norm())
                .fold(f64::INFINITY, f64::min);
            d <= params.beta
        })
        .count();
    let fraction = within as f64 / n as f64;
    let eta = params.eta_bound;
    let lam = params.lambda_frac;
    let lhs = 4.0 * eta.sqrt() * (lam * params.beta * params.beta + (1.0 - lam) * 4.0 * eta).sqrt();
    let rhs = params.xi * params.xi - 2.0 * eta.sqrt() * params.beta;
    let cond1 = min_sep >= params.xi;
    let cond2 = fraction >= lam;
    let cond3 = lhs <= rhs;
    SeparationReport {
        centroid_separation_ok: cond1,
        min_centroid_distance: min_sep,
        proximity_ok: cond2,
        fraction_within_beta: fraction,
        intra_inter_ok: cond3,
        intra_inter_lhs: lhs,
        intra_inter_rhs: rhs,
        all_ok: cond1 && cond2 && cond3,
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for v in 0..k {
                if !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

/// Best label-agreement fraction over all renamings of the predicted labels.
/// Exact by enumeration for k <= 8.
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    accuracy_with_misclassified(predicted, truth).map(|(a, _)| a)
}

/// Accuracy plus the misclassified-point count of the best renaming.
pub fn accuracy_with_misclassified(predicted: &[usize], truth: &[usize]) -> Result<(f64, usize)> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid("label vectors have different lengths"));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("label vectors are empty"));
    }
    let k = predicted.iter().chain(truth).max().unwrap() + 1;
    if k > 8 {
        return Err(Error::invalid(format!("permutation matching supports k <= 8, got k = {k}")));
    }
    let n = predicted.len();
    let mut best = 0usize;
    for perm in permutations(k) {
        let matches = predicted.iter().zip(truth).filter(|&(&p, &t)| perm[p] == t).count();
        best = best.max(matches);
    }
    Ok((best as f64 / n as f64, n - best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let r = rows.len();
        let c = rows[0].len();
        DMatrix::from_fn(r, c, |i, j| rows[i][j])
    }

    #[test]
    fn two_tight_pairs_in_one_dimension() {
        let x = mat(&[&[0.0], &[0.1], &[10.0], &[10.1]]);
        let cfg = ClusteringConfig::new(2, 7);
        let res = kmeans(&x, &cfg).unwrap();
        let mut centers: Vec<f64> = res.centroids.iter().map(|c| c[0]).collect();
        centers.sort_by(f64::total_cmp);
        assert_relative_eq!(centers[0], 0.05, max_relative = 1e-12);
        assert_relative_eq!(centers[1], 10.05, max_relative = 1e-12);
        assert_eq!(res.labels[0], res.labels[1]);
        assert_eq!(res.labels[2], res.labels[3]);
        assert_ne!(res.labels[0], res.labels[2]);
        assert!(res.converged);
    }

    #[test]
    fn k1_centroid_is_the_mean() {
        let x = mat(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 0.0]]);
        let res = kmeans(&x, &ClusteringConfig::new(1, 1)).unwrap();
        assert_relative_eq!(res.centroids[0][0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(res.centroids[0][1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let x = mat(&[&[0.0], &[1.0], &[2.0], &[5.0]]);
        let res = kmeans(&x, &ClusteringConfig::new(4, 3)).unwrap();
        assert!(res.inertia < 1e-20);
        let mut sorted = res.labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
    }

    #[test]
    fn rejects_more_clusters_than_points() {
        let x = mat(&[&[0.0], &[1.0]]);
        assert!(kmeans(&x, &ClusteringConfig::new(3, 0)).is_err());
    }

    #[test]
    fn qmeans_delta_zero_is_bitwise_kmeans() {
        let x = mat(&[&[0.0, 0.0], &[0.2, 0.1], &[5.0, 5.0], &[5.1, 4.9], &[2.5, 2.5]]);
        let cfg = ClusteringConfig::new(2, 42);
        let a = kmeans(&x, &cfg).unwrap();
        let b = qmeans(&x, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.iterations_used, b.iterations_used);
        assert!(a.inertia.to_bits() == b.inertia.to_bits());
    }

    #[test]
    fn qmeans_large_gap_survives_noise() {
        let x = mat(&[&[0.0], &[0.1], &[10.0], &[10.1]]);
        let cfg = ClusteringConfig { delta: 0.9, ..ClusteringConfig::new(2, 11) };
        let res = qmeans(&x, &cfg).unwrap();
        assert_eq!(res.labels[0], res.labels[1]);
        assert_eq!(res.labels[2], res.labels[3]);
        assert_ne!(res.labels[0], res.labels[2]);
    }

    #[test]
    fn assignments_respect_margin_bound() {
        // points whose nearest/second-nearest squared-distance margin exceeds
        // 2*delta never flip under the bounded noise
        let centroids = mat(&[&[0.0], &[4.0]]);
        let rng = KeyedRng::new(5);
        for trial in 0..200 {
            let x = mat(&[&[0.5], &[3.4]]); // margins: |0.25-12.25|=12, |11.56-0.36|=11.2
            let mut labels = vec![0; 2];
            assign(&x, &centroids, 0.9, Some((&rng, trial, 0)), &mut labels);
            assert_eq!(labels, vec![0, 1]);
        }
    }

    #[test]
    fn qmeans_centroid_perturbation_respects_bound() {
        let mut stream = KeyedRng::new(8).stream("ball", &[]);
        for _ in 0..100_000 {
            let mut c = vec![1.0, -2.0, 0.5];
            let before = c.clone();
            perturb_centroid(&mut c, 0.9, &mut stream);
            let shift: f64 =
                c.iter().zip(&before).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!(shift <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn kmeanspp_k1_picks_an_input_point() {
        let x = mat(&[&[1.0], &[2.0], &[3.0]]);
        let mut stream = KeyedRng::new(0).stream("init", &[]);
        let c = kmeanspp_init(&x, 1, &mut stream).unwrap();
        assert!((0..3).any(|i| (c[(0, 0)] - x[(i, 0)]).abs() < 1e-15));
    }

    #[test]
    fn kmeanspp_k_equals_n_picks_every_point_once() {
        let x = mat(&[&[0.0], &[1.0], &[2.0], &[4.0]]);
        let mut stream = KeyedRng::new(3).stream("init", &[]);
        let c = kmeanspp_init(&x, 4, &mut stream).unwrap();
        let mut picked: Vec<f64> = (0..4).map(|j| c[(j, 0)]).collect();
        picked.sort_by(f64::total_cmp);
        assert_eq!(picked, vec![0.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn kmeanspp_spreads_across_far_blobs() {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut stream = KeyedRng::new(1).stream("blobs", &[]);
        for i in 0..40 {
            let center = if i < 20 { 0.0 } else { 100.0 };
            rows.push(vec![center + stream.unit(), center + stream.unit()]);
        }
        let x = DMatrix::from_fn(40, 2, |i, j| rows[i][j]);
        let mut opposite = 0;
        for seed in 0..200 {
            let mut s = KeyedRng::new(seed).stream("init", &[]);
            let c = kmeanspp_init(&x, 2, &mut s).unwrap();
            if (c[(0, 0)] < 50.0) != (c[(1, 0)] < 50.0) {
                opposite += 1;
            }
        }
        assert!(opposite as f64 / 200.0 > 0.95, "opposite-blob frequency {opposite}/200");
    }

    #[test]
    fn empty_cluster_repair_reseeds_farthest_point() {
        // provided init with a far-away dead centroid: it must be reseeded
        let x = mat(&[&[0.0], &[0.1], &[0.2], &[9.0]]);
        let init = mat(&[&[0.1], &[100.0]]);
        let cfg = ClusteringConfig {
            init: Init::Provided(init),
            ..ClusteringConfig::new(2, 0)
        };
        let res = kmeans(&x, &cfg).unwrap();
        assert_eq!(res.labels[3], 1 - res.labels[0]);
        assert!(res.inertia < 0.1);
    }

    #[test]
    fn noiseless_inertia_is_monotone_in_iterations() {
        let mut stream = KeyedRng::new(21).stream("pts", &[]);
        let x = DMatrix::from_fn(30, 2, |_, _| stream.unit() * 10.0);
        let mut prev = f64::INFINITY;
        for t in 1..8 {
            let cfg = ClusteringConfig {
                max_iters: t,
                restarts: 1,
                tol: 1e-300,
                ..ClusteringConfig::new(3, 5)
            };
            let res = kmeans(&x, &cfg).unwrap();
            assert!(res.inertia <= prev + 1e-12, "inertia rose at t = {t}");
            prev = res.inertia;
        }
    }

    #[test]
    fn well_clusterable_two_point_masses() {
        let x = mat(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]);
        let c = mat(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let report = check_well_clusterable(
            &x,
            &c,
            SeparationParams { xi: 0.5, beta: 0.01, lambda_frac: 1.0, eta_bound: 1.0 },
        );
        assert!(report.centroid_separation_ok);
        assert!(report.proximity_ok);
        assert_relative_eq!(report.min_centroid_distance, 1.0, max_relative = 1e-12);
        assert_relative_eq!(report.fraction_within_beta, 1.0, max_relative = 1e-12);
        // direct substitution of the third condition
        assert_relative_eq!(report.intra_inter_lhs, 0.04, max_relative = 1e-12);
        assert_relative_eq!(report.intra_inter_rhs, 0.23, max_relative = 1e-12);
        assert!(report.intra_inter_ok);
    }

    #[test]
    fn coincident_centroids_fail_separation() {
        let x = mat(&[&[0.0], &[1.0]]);
        let c = mat(&[&[0.5], &[0.5]]);
        let report = check_well_clusterable(
            &x,
            &c,
            SeparationParams { xi: 0.1, beta: 1.0, lambda_frac: 0.5, eta_bound: 1.0 },
        );
        assert!(!report.centroid_separation_ok);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(clustering_accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(clustering_accuracy(&[2, 0, 1], &[2, 0, 1]).unwrap(), 1.0);
        let (acc, miss) = accuracy_with_misclassified(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(acc, 0.75);
        assert_eq!(miss, 1);
        assert!(clustering_accuracy(&[0, 1], &[0]).is_err());
    }

    proptest! {
        #[test]
        fn accuracy_is_permutation_invariant(
            labels in proptest::collection::vec(0usize..4, 4..40),
            perm_seed in 0u64..32,
        ) {
            let truth: Vec<usize> = labels.iter().map(|&l| (l + 1) % 4).collect();
            let base = clustering_accuracy(&labels, &truth).unwrap();
            let perms = permutations(4);
            let p = &perms[(perm_seed as usize) % perms.len()];
            let renamed: Vec<usize> = labels.iter().map(|&l| p[l]).collect();
            let renamed_acc = clustering_accuracy(&renamed, &truth).unwrap();
            prop_assert!((base - renamed_acc).abs() < 1e-12);
        }
    }
}

//! Data parameters (generalized norm bound, row-norm spread, condition
//! number) and the step-count runtime expressions for both algorithm
//! families, plus the log-log slope fit used by the scaling study.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::IncidenceView;

/// max_i ||M_i||^2 / min_i ||M_i||^2 from precomputed row norms.
pub fn row_norm_ratio(row_norms: &[f64]) -> Result<f64> {
    if row_norms.is_empty() {
        return Err(Error::invalid("row-norm ratio of an empty matrix"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, &v) in row_norms.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::invalid(format!("row {i} has zero norm")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi / lo) * (hi / lo))
}

/// Row-norm spread of a dense matrix.
pub fn row_norm_ratio_of(m: &DMatrix<f64>) -> Result<f64> {
    let norms: Vec<f64> = (0..m.nrows()).map(|i| m.row(i).norm()).collect();
    row_norm_ratio(&norms)
}

/// Ratio of the largest to the smallest nonzero magnitude, where "nonzero"
/// means above 1e-10 times the largest.
pub fn condition_number(values: &[f64]) -> Result<f64> {
    let max = values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !(max > 0.0) {
        return Err(Error::invalid("condition number of an all-zero spectrum"));
    }
    let cutoff = 1e-10 * max;
    let min_nonzero =
        values.iter().map(|v| v.abs()).filter(|&v| v > cutoff).fold(f64::INFINITY, f64::min);
    Ok(max / min_nonzero)
}

/// Grid minimization over p in [0, 1] with local refinement until the
/// improvement falls below 1e-6.
fn minimize_over_p(f: impl Fn(f64) -> f64) -> f64 {
    let evaluate = |lo: f64, hi: f64| -> (f64, f64) {
        let mut best_p = lo;
        let mut best_v = f64::INFINITY;
        for i in 0..=20 {
            let p = lo + (hi - lo) * i as f64 / 20.0;
            let v = f(p);
            if v < best_v {
                best_v = v;
                best_p = p;
            }
        }
        (best_p, best_v)
    };
    let (mut p, mut v) = evaluate(0.0, 1.0);
    let mut radius = 0.05;
    for _ in 0..40 {
        let (np, nv) = evaluate((p - radius).max(0.0), (p + radius).min(1.0));
        let gain = v - nv;
        p = np;
        v = nv;
        radius /= 5.0;
        if gain < 1e-6 {
            break;
        }
    }
    v
}

#[inline]
fn pow_p(x: f64, p: f64) -> f64 {
    // |x|^p with the p = 0 convention 0^0 = 0 (nonzero counting)
    if p == 0.0 {
        if x != 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.abs().powf(p)
    }
}

/// Generalized norm parameter of a dense matrix: the smaller of the
/// Frobenius norm and min over p of sqrt(s_2p(M) s_{2(1-p)}(M^T)), with
/// s_p(M) = max_i sum_j |M_ij|^p.
pub fn mu_param(m: &DMatrix<f64>) -> Result<f64> {
    let fro = m.norm();
    if !(fro > 0.0) {
        return Err(Error::invalid("mu of an all-zero matrix"));
    }
    let s_rows = |p: f64| -> f64 {
        (0..m.nrows())
            .map(|i| m.row(i).iter().map(|&x| pow_p(x, p)).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let s_cols = |p: f64| -> f64 {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|&x| pow_p(x, p)).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let best = minimize_over_p(|p| (s_rows(2.0 * p) * s_cols(2.0 - 2.0 * p)).sqrt());
    Ok(fro.min(best))
}

/// Same parameter for the implicit substituted incidence matrix, computed
/// from degrees and eps_b without materializing the n(n-1)/2 columns.
///
/// Rows of the normalized incidence hold deg(i) entries of 1/||B_i||,
/// C-(n-1) entries of eps_b/||B_i||, and zeros; columns hold the two signed
/// endpoint entries plus eps_b entries at every other row.
pub fn mu_param_incidence(view: &IncidenceView<'_>) -> Result<f64> {
    let g = view.graph;
    let n = g.n();
    let eps = view.eps_b;
    let cols = view.n_cols() as f64;
    let z = view.eps_cols_per_row() as f64;
    if eps == 0.0 && g.edge_count() == 0 {
        return Err(Error::invalid("mu of an all-zero incidence matrix"));
    }
    let norms: Vec<f64> = (0..n).map(|i| view.row_norm_sq(i).sqrt()).collect();
    if let Some(i) = norms.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::invalid(format!("incidence row {i} has zero norm")));
    }
    let fro = (n as f64).sqrt(); // unit rows

    // Per-p column extremes need the smallest inverse-norm sum over
    // non-edges; for each node, walk the norm-sorted list past neighbors.
    let order = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        idx // descending norm = ascending inverse norm weight
    };

    let s_rows = |p: f64| -> f64 {
        (0..n)
            .map(|i| {
                let deg = g.degree(i) as f64;
                if p == 0.0 {
                    deg + if eps > 0.0 { z } else { 0.0 }
                } else {
                    (deg + z * pow_p(eps, p)) / norms[i].powf(p)
                }
            })
            .fold(0.0, f64::max)
    };

    let s_cols = |p: f64| -> f64 {
        if p == 0.0 {
            let eps_count = if eps > 0.0 { (n - 2) as f64 } else { 0.0 };
            let edge_col = if g.edge_count() > 0 { 2.0 + eps_count } else { 0.0 };
            let non_edge_col = if (g.edge_count() as f64) < cols { eps_count } else { 0.0 };
            return edge_col.max(non_edge_col);
        }
        let w: Vec<f64> = norms.iter().map(|&v| v.powf(-p)).collect();
        let total: f64 = w.iter().sum();
        let eps_p = pow_p(eps, p);
        let mut best = 0.0f64;
        if g.edge_count() > 0 {
            let coeff = 1.0 - eps_p;
            let endpoint_extreme = g
                .edges
                .iter()
                .map(|&(a, b)| w[a] + w[b])
                .fold(if coeff >= 0.0 { 0.0 } else { f64::INFINITY }, |acc, s| {
                    if coeff >= 0.0 {
                        acc.max(s)
                    } else {
                        acc.min(s)
                    }
                });
            best = best.max(eps_p * total + coeff * endpoint_extreme);
        }
        if (g.edge_count() as f64) < cols && eps_p > 0.0 {
            // non-edge column: eps_p * (total - w_a - w_b), maximized by the
            // smallest endpoint weights, i.e. the largest norms
            let mut smallest_pair = f64::INFINITY;
            for (pos, &a) in order.iter().enumerate() {
                if w[a] + w[*order.get(pos + 1).unwrap_or(&a)] >= smallest_pair {
                    break;
                }
                for &b in order.iter().skip(pos + 1) {
                    let s = w[a] + w[b];
                    if s >= smallest_pair {
                        break;
                    }
                    if !g.has_edge(a, b) {
                        smallest_pair = s;
                        break;
                    }
                }
            }
            if smallest_pair.is_finite() {
                best = best.max(eps_p * (total - smallest_pair));
            }
        }
        best
    };

    let best = minimize_over_p(|p| (s_rows(2.0 * p) * s_cols(2.0 - 2.0 * p)).sqrt());
    Ok(fro.min(best))
}

/// Data-access cost under the memory model: c_qram * log2(n d).
pub fn access_cost(n: usize, d: usize, c_qram: f64) -> f64 {
    c_qram * ((n * d) as f64).log2()
}

/// Inputs to the emulated-algorithm runtime expression.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantumCostInputs {
    pub t_s: f64,
    pub eta_s: f64,
    pub eps_dist: f64,
    pub eps_b: f64,
    pub mu_b: f64,
    pub kappa_lk: f64,
    pub eps_lambda: f64,
    pub k: usize,
    pub eta_lk: f64,
    pub delta: f64,
}

/// T_S * (eta_S / (eps_dist eps_B)) * (mu_B kappa / eps_lambda)
///     * (k^3 eta_Lk^2.5 / delta^3), in dimensionless step units.
pub fn quantum_cost(inp: &QuantumCostInputs) -> Result<f64> {
    for (name, v) in [
        ("eps_dist", inp.eps_dist),
        ("eps_b", inp.eps_b),
        ("eps_lambda", inp.eps_lambda),
        ("delta", inp.delta),
    ] {
        if !(v > 0.0) {
            return Err(Error::invalid(format!("quantum cost needs {name} > 0, got {v}")));
        }
    }
    let access = inp.t_s * inp.eta_s / (inp.eps_dist * inp.eps_b);
    let projection = inp.mu_b * inp.kappa_lk / inp.eps_lambda;
    let clustering = (inp.k as f64).powi(3) * inp.eta_lk.powf(2.5) / inp.delta.powi(3);
    Ok(access * projection * clustering)
}

/// General (not well-separated) clustering factor with data dimension k:
/// k*k*eta/delta^2*kappa*(mu + k*eta/delta) + k^2*eta^1.5/delta^2*kappa*mu.
pub fn clustering_cost_general(
    k: usize,
    eta: f64,
    delta: f64,
    kappa: f64,
    mu: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("general clustering cost needs delta > 0"));
    }
    let kf = k as f64;
    Ok(kf * kf * eta / (delta * delta) * kappa * (mu + kf * eta / delta)
        + kf * kf * eta.powf(1.5) / (delta * delta) * kappa * mu)
}

/// Unit constants of the classical step-count model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostConstants {
    pub c_qram: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants { c_qram: 1.0, c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0 }
    }
}

/// c1 d n^2 + c2 n m + c3 n^3 + c4 n k^2 iters.
pub fn classical_cost(
    n: usize,
    d: usize,
    m: usize,
    k: usize,
    iters: usize,
    consts: &CostConstants,
) -> f64 {
    let (nf, df, mf, kf, tf) = (n as f64, d as f64, m as f64, k as f64, iters as f64);
    consts.c1 * df * nf * nf + consts.c2 * nf * mf + consts.c3 * nf * nf * nf
        + consts.c4 * nf * kf * kf * tf
}

/// Ordinary least squares of ln y on ln x; returns (slope, intercept).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two matching points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("slope fit needs strictly positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Data parameters and evaluated runtime expressions for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub mu_b: Option<f64>,
    pub eta_s: f64,
    pub eta_lk: Option<f64>,
    pub kappa_lk: Option<f64>,
    pub t_s: f64,
    pub eps_dist: f64,
    pub eps_b: f64,
    pub eps_lambda: f64,
    pub delta: f64,
    pub iterations_used: usize,
    pub classical_cost: f64,
    pub quantum_cost: Option<f64>,
    /// quantum_cost times iterations_used (the per-iteration expression
    /// accumulated over the run).
    pub quantum_cost_total: Option<f64>,
    /// Condition number recomputed from the noisy estimates, for reference.
    pub kappa_lk_est: Option<f64>,
    /// Row-norm spread of the raw value-scaled embedding, for reference.
    pub eta_lk_raw: Option<f64>,
    /// General-branch clustering factor evaluated with dimension k.
    pub quantum_cost_general: Option<f64>,
}

impl CostReport {
    pub fn csv_header() -> &'static str {
        "n,d,k,m,mu,eta_s,eta_lk,kappa_lk,classical_cost,quantum_cost,accuracy,seed"
    }

    pub fn csv_row(&self, accuracy: Option<f64>, seed: u64) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.k,
            self.m,
            opt(self.mu_b),
            self.eta_s,
            opt(self.eta_lk),
            opt(self.kappa_lk),
            self.classical_cost,
            opt(self.quantum_cost),
            accuracy.map_or(String::new(), |a| format!("{a}")),
            seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SimilarityGraph;
    use crate::noise::KeyedRng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mu_of_identity_is_one() {
        for n in [2usize, 5, 9] {
            let mu = mu_param(&DMatrix::identity(n, n)).unwrap();
            assert_relative_eq!(mu, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn mu_of_all_ones_2x2_is_two() {
        let m = DMatrix::from_element(2, 2, 1.0);
        assert_relative_eq!(mu_param(&m).unwrap(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn mu_rejects_zero_matrix() {
        assert!(mu_param(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn analytic_incidence_mu_matches_dense_route() {
        let mut stream = KeyedRng::new(14).stream("mu", &[]);
        let mut tested = 0;
        while tested < 40 {
            let n = 3 + (stream.next_u64() % 10) as usize;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if stream.unit() < 0.45 {
                        edges.push((a, b));
                    }
                }
            }
            let g = SimilarityGraph::from_edges(n, &edges, 1.0).unwrap();
            for eps in [0.0, 0.1, 0.7] {
                if eps == 0.0 && (0..n).any(|i| g.degree(i) == 0) {
                    continue;
                }
                let view = IncidenceView::new(&g, eps).unwrap();
                let analytic = match mu_param_incidence(&view) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                // dense route: materialize and normalize rows
                let rows: Vec<Vec<f64>> =
                    (0..n).map(|i| view.incidence_row(i).unwrap()).collect();
                let mut dense = DMatrix::<f64>::zeros(n, rows[0].len());
                for (i, row) in rows.iter().enumerate() {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for (j, &v) in row.iter().enumerate() {
                        dense[(i, j)] = v / norm;
                    }
                }
                let reference = mu_param(&dense).unwrap();
                assert_relative_eq!(analytic, reference, max_relative = 1e-6);
                tested += 1;
            }
        }
    }

    #[test]
    fn incidence_mu_bounded_by_n() {
        let mut stream = KeyedRng::new(15).stream("bound", &[]);
        for _ in 0..20 {
            let n = 4 + (stream.next_u64() % 12) as usize;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if stream.unit() < 0.5 {
                        edges.push((a, b));
                    }
                }
            }
            let g = SimilarityGraph::from_edges(n, &edges, 1.0).unwrap();
            let view = IncidenceView::new(&g, 0.1).unwrap();
            let mu = mu_param_incidence(&view).unwrap();
            assert!(mu <= n as f64 + 1e-9, "mu = {mu} exceeds n = {n}");
            assert!(mu <= (n as f64).sqrt() + 1e-9, "mu above the Frobenius cap");
        }
    }

    #[test]
    fn eta_cases() {
        assert_relative_eq!(row_norm_ratio(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(row_norm_ratio(&[1.0, 2.0]).unwrap(), 4.0);
        assert!(row_norm_ratio(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn kappa_cases() {
        assert_relative_eq!(condition_number(&[3.0, 1.0]).unwrap(), 3.0);
        assert_relative_eq!(condition_number(&[5.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(condition_number(&[5.0, 5e-11 * 5.0]).unwrap(), 1.0);
        assert!(condition_number(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn quantum_cost_unit_and_scaling() {
        let unit = QuantumCostInputs {
            t_s: 1.0,
            eta_s: 1.0,
            eps_dist: 1.0,
            eps_b: 1.0,
            mu_b: 1.0,
            kappa_lk: 1.0,
            eps_lambda: 1.0,
            k: 1,
            eta_lk: 1.0,
            delta: 1.0,
        };
        assert_relative_eq!(quantum_cost(&unit).unwrap(), 1.0);
        let doubled = QuantumCostInputs { eps_lambda: 2.0, ..unit };
        assert_relative_eq!(quantum_cost(&doubled).unwrap(), 0.5);
        let zero = QuantumCostInputs { eps_dist: 0.0, ..unit };
        assert!(quantum_cost(&zero).is_err());
    }

    #[test]
    fn classical_cost_direct_substitution() {
        let c = CostConstants::default();
        assert_relative_eq!(classical_cost(1, 3, 5, 2, 7, &c), 3.0 + 5.0 + 1.0 + 28.0);
    }

    #[test]
    fn classical_cost_slope_is_cubic() {
        let ns: Vec<f64> = (3..11).map(|i| (i * 100) as f64).collect();
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n| classical_cost(n as usize, 2, (n as usize) * 20, 2, 10, &CostConstants::default()))
            .collect();
        let (slope, _) = loglog_slope(&ns, &ys).unwrap();
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn loglog_slope_recovers_exact_powers() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let cubes: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let (slope, intercept) = loglog_slope(&xs, &cubes).unwrap();
        assert_relative_eq!(slope, 3.0, max_relative = 1e-12);
        assert_relative_eq!(intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_row_shape() {
        let report = CostReport {
            n: 10,
            d: 2,
            k: 2,
            m: 5,
            mu_b: Some(3.0),
            eta_s: 4.0,
            eta_lk: Some(1.0),
            kappa_lk: Some(1.5),
            t_s: 4.3,
            eps_dist: 0.1,
            eps_b: 0.1,
            eps_lambda: 0.9,
            delta: 0.9,
            iterations_used: 7,
            classical_cost: 1000.0,
            quantum_cost: Some(500.0),
            quantum_cost_total: Some(3500.0),
            kappa_lk_est: None,
            eta_lk_raw: None,
            quantum_cost_general: None,
        };
        let row = report.csv_row(Some(1.0), 42);
        assert_eq!(row.split(',').count(), CostReport::csv_header().split(',').count());
        assert!(row.starts_with("10,2,2,5,3,4,1,1.5,1000,500,1,42"));
    }

    proptest! {
        #[test]
        fn mu_bounded_by_frobenius(vals in proptest::collection::vec(-3.0f64..3.0, 4..16)) {
            let n = (vals.len() as f64).sqrt() as usize;
            let m = DMatrix::from_fn(n, n, |i, j| vals[(i * n + j) % vals.len()]);
            if m.norm() > 0.0 {
                let mu = mu_param(&m).unwrap();
                prop_assert!(mu <= m.norm() + 1e-9);
            }
        }

        #[test]
        fn mu_eta_kappa_row_permutation_invariant(seed in 0u64..200) {
            let mut stream = KeyedRng::new(seed).stream("perm", &[]);
            let n = 4;
            let m = DMatrix::from_fn(n, n, |_, _| stream.unit() * 2.0 - 1.0);
            if m.norm() == 0.0 {
                return Ok(());
            }
            let mut rotated = DMatrix::zeros(n, n);
            for i in 0..n {
                rotated.set_row(i, &m.row((i + 1) % n));
            }
            prop_assert!((mu_param(&m).unwrap() - mu_param(&rotated).unwrap()).abs() < 1e-9);
            let norms: Vec<f64> = (0..n).map(|i| m.row(i).norm()).collect();
            let mut shifted = norms.clone();
            shifted.rotate_left(1);
            if let (Ok(a), Ok(b)) = (row_norm_ratio(&norms), row_norm_ratio(&shifted)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn quantum_cost_monotonicity(scale in 1.01f64..4.0) {
            let base = QuantumCostInputs {
                t_s: 2.0, eta_s: 3.0, eps_dist: 0.2, eps_b: 0.3, mu_b: 5.0,
                kappa_lk: 2.0, eps_lambda: 0.5, k: 3, eta_lk: 2.0, delta: 0.7,
            };
            let c0 = quantum_cost(&base).unwrap();
            for grow in [
                QuantumCostInputs { mu_b: base.mu_b * scale, ..base },
                QuantumCostInputs { kappa_lk: base.kappa_lk * scale, ..base },
                QuantumCostInputs { eta_s: base.eta_s * scale, ..base },
                QuantumCostInputs { eta_lk: base.eta_lk * scale, ..base },
                QuantumCostInputs { k: base.k + 1, ..base },
            ] {
                prop_assert!(quantum_cost(&grow).unwrap() >= c0);
            }
            for shrink in [
                QuantumCostInputs { eps_dist: base.eps_dist * scale, ..base },
                QuantumCostInputs { eps_b: base.eps_b * scale, ..base },
                QuantumCostInputs { eps_lambda: base.eps_lambda * scale, ..base },
                QuantumCostInputs { delta: base.delta * scale, ..base },
            ] {
                prop_assert!(quantum_cost(&shrink).unwrap() <= c0);
            }
        }
    }
}

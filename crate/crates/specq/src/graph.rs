//! Similarity graph, signed incidence structure, and the normalized
//! Laplacian Gram matrix.
//!
//! The incidence matrix has one column per unordered pair (p, q), p < q,
//! in lexicographic order. A column stores +a_pq at row p, -a_pq at row q,
//! and eps_b at every non-incident row. The Gram matrix of the row-normalized
//! incidence is computed by a closed form that never materializes the
//! n(n-1)/2 columns; materialization is reserved for small-n oracles.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::datasets::DataMatrix;
use crate::error::{Error, Result};
use crate::noise::{bounded_uniform, KeyedStream, Mode, NoiseProfile};

/// Largest column count for which incidence rows may be materialized.
pub const MATERIALIZE_GUARD: usize = 10_000_000;

/// Undirected 0/1 similarity graph from a distance threshold.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    n: usize,
    adj: Vec<bool>,
    degrees: Vec<usize>,
    /// Edges (p, q) with p < q, lexicographically sorted.
    pub edges: Vec<(usize, usize)>,
    pub d_min: f64,
}

impl SimilarityGraph {
    fn from_upper(n: usize, upper: &[bool], d_min: f64) -> Self {
        let mut adj = vec![false; n * n];
        let mut degrees = vec![0usize; n];
        let mut edges = Vec::new();
        let mut ix = 0;
        for p in 0..n {
            for q in (p + 1)..n {
                if upper[ix] {
                    adj[p * n + q] = true;
                    adj[q * n + p] = true;
                    degrees[p] += 1;
                    degrees[q] += 1;
                    edges.push((p, q));
                }
                ix += 1;
            }
        }
        SimilarityGraph { n, adj, degrees, edges, d_min }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, p: usize, q: usize) -> bool {
        p != q && self.adj[p * self.n + q]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Dense 0/1 adjacency with zero diagonal.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// Text export, one `p q` line per edge, zero-indexed.
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        for &(p, q) in &self.edges {
            writeln!(out, "{p} {q}")?;
        }
        Ok(())
    }

    /// Construct directly from an adjacency predicate (test helper).
    pub fn from_edges(n: usize, edges: &[(usize, usize)], d_min: f64) -> Result<Self> {
        let mut upper = vec![false; n * (n - 1) / 2];
        for &(p, q) in edges {
            if p >= q || q >= n {
                return Err(Error::invalid(format!("bad edge ({p}, {q}) for n = {n}")));
            }
            upper[pair_index(n, p, q)] = true;
        }
        Ok(SimilarityGraph::from_upper(n, &upper, d_min))
    }
}

#[inline]
fn pair_index(n: usize, p: usize, q: usize) -> usize {
    debug_assert!(p < q && q < n);
    p * (2 * n - p - 1) / 2 + (q - p - 1)
}

/// Squared distance with a bounded uniform estimation error.
/// The error is 0 when eps_dist = 0.
pub fn estimate_sq_distance(a: &[f64], b: &[f64], eps_dist: f64, rng: &mut KeyedStream) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let exact: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    exact + bounded_uniform(rng, eps_dist)
}

#[inline]
fn row_sq_dist(points: &DMatrix<f64>, p: usize, q: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..points.ncols() {
        let d = points[(p, j)] - points[(q, j)];
        acc += d * d;
    }
    acc
}

/// Threshold-rule adjacency: a_pq = 1 iff estimated d^2 <= d_min^2.
///
/// In quantum mode each unordered pair gets one independent error draw,
/// keyed by (seed, p, q), so the matrix is symmetric and the result does
/// not depend on evaluation order or thread count.
pub fn build_adjacency(
    data: &DataMatrix,
    d_min: f64,
    noise: Option<&NoiseProfile>,
) -> Result<SimilarityGraph> {
    if !(d_min > 0.0) {
        return Err(Error::invalid(format!("d_min must be > 0, got {d_min}")));
    }
    let n = data.n();
    let threshold = d_min * d_min;
    let (eps, rng) = match noise {
        Some(p) if p.mode == Mode::Quantum && p.eps_dist > 0.0 => (p.eps_dist, Some(p.rng())),
        _ => (0.0, None),
    };
    let rows: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|p| {
            ((p + 1)..n)
                .map(|q| {
                    let exact = row_sq_dist(&data.points, p, q);
                    let est = match &rng {
                        Some(kr) => {
                            let mut s = kr.stream("dist", &[p as u64, q as u64]);
                            exact + bounded_uniform(&mut s, eps)
                        }
                        None => exact,
                    };
                    est <= threshold
                })
                .collect()
        })
        .collect();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for row in rows {
        upper.extend(row);
    }
    Ok(SimilarityGraph::from_upper(n, &upper, d_min))
}

/// The eps_b-substituted incidence structure over a graph.
#[derive(Debug, Clone, Copy)]
pub struct IncidenceView<'a> {
    pub graph: &'a SimilarityGraph,
    pub eps_b: f64,
}

impl<'a> IncidenceView<'a> {
    pub fn new(graph: &'a SimilarityGraph, eps_b: f64) -> Result<Self> {
        if !(eps_b >= 0.0 && eps_b.is_finite()) {
            return Err(Error::invalid(format!("eps_b must be finite and >= 0, got {eps_b}")));
        }
        Ok(IncidenceView { graph, eps_b })
    }

    pub fn n_cols(&self) -> usize {
        let n = self.graph.n();
        n * (n - 1) / 2
    }

    /// Number of columns storing eps_b in any given row: all columns not
    /// incident to the row's node.
    pub fn eps_cols_per_row(&self) -> usize {
        self.n_cols() - (self.graph.n() - 1)
    }

    /// ||B_i||^2 = deg(i) + eps_cols * eps_b^2.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.graph.degree(i) as f64 + self.eps_cols_per_row() as f64 * self.eps_b * self.eps_b
    }

    /// Materialized row i of the substituted incidence matrix.
    /// Guarded: refuses matrices above `MATERIALIZE_GUARD` columns.
    pub fn incidence_row(&self, i: usize) -> Result<Vec<f64>> {
        let n = self.graph.n();
        if i >= n {
            return Err(Error::invalid(format!("row {i} out of range for n = {n}")));
        }
        if self.n_cols() > MATERIALIZE_GUARD {
            return Err(Error::invalid(format!(
                "refusing to materialize {} incidence columns (guard {})",
                self.n_cols(),
                MATERIALIZE_GUARD
            )));
        }
        let mut row = Vec::with_capacity(self.n_cols());
        for p in 0..n {
            for q in (p + 1)..n {
                let a = self.graph.has_edge(p, q);
                let v = if i == p {
                    if a { 1.0 } else { 0.0 }
                } else if i == q {
                    if a { -1.0 } else { 0.0 }
                } else {
                    self.eps_b
                };
                row.push(v);
            }
        }
        Ok(row)
    }

    /// Signed orientation surplus of node i: edges where i is the smaller
    /// endpoint count +1, edges where it is the larger endpoint count -1.
    fn orientation_surplus(&self) -> Vec<f64> {
        let n = self.graph.n();
        let mut t = vec![0.0; n];
        for &(p, q) in &self.graph.edges {
            t[p] += 1.0;
            t[q] -= 1.0;
        }
        t
    }

    /// Normalized Laplacian L_ij = <B_i, B_j> / (||B_i|| ||B_j||) by closed
    /// form, O(n^2 + m):
    ///
    ///   <B_i, B_j> = -a_ij + eps_b (t_i + t_j) + eps_b^2 (C - 2n + 3)
    ///   <B_i, B_i> = deg(i) + eps_b^2 (C - (n - 1))
    ///
    /// where C = n(n-1)/2 and t is the orientation surplus. The three terms
    /// come from partitioning columns into the pair column (i, j), columns
    /// incident to exactly one of i, j, and columns incident to neither.
    pub fn normalized_laplacian(&self) -> Result<DMatrix<f64>> {
        let n = self.graph.n();
        let c = self.n_cols() as f64;
        let eps = self.eps_b;
        let norms_sq: Vec<f64> = (0..n).map(|i| self.row_norm_sq(i)).collect();
        for (i, &ns) in norms_sq.iter().enumerate() {
            if ns <= 0.0 {
                return Err(Error::invalid(format!(
                    "row {i} of the incidence matrix has zero norm (isolated node with eps_b = 0)"
                )));
            }
        }
        let norms: Vec<f64> = norms_sq.iter().map(|v| v.sqrt()).collect();
        let t = self.orientation_surplus();
        let cross_const = eps * eps * (c - 2.0 * n as f64 + 3.0);
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            lap[(i, i)] = 1.0;
            for j in (i + 1)..n {
                let a = if self.graph.has_edge(i, j) { 1.0 } else { 0.0 };
                let dot = -a + eps * (t[i] + t[j]) + cross_const;
                let v = dot / (norms[i] * norms[j]);
                lap[(i, j)] = v;
                lap[(j, i)] = v;
            }
        }
        Ok(lap)
    }

    /// Brute-force Gram of materialized rows; the oracle the closed form
    /// is tested against. Same guard as `incidence_row`.
    pub fn materialized_laplacian(&self) -> Result<DMatrix<f64>> {
        let n = self.graph.n();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| self.incidence_row(i)).collect::<Result<_>>()?;
        let norms: Vec<f64> =
            rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        if let Some(i) = norms.iter().position(|&v| v <= 0.0) {
            return Err(Error::invalid(format!("row {i} of the incidence matrix has zero norm")));
        }
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let v = dot / (norms[i] * norms[j]);
                lap[(i, j)] = v;
                lap[(j, i)] = v;
            }
        }
        Ok(lap)
    }
}

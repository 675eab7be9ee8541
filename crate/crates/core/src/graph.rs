//! Weighted undirected communication graphs, their Laplacians and spectra.
//!
//! Vertices are 1-based at the API boundary (edge lists, JSON, errors) and
//! 0-based inside matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigen::{jacobi_eigen, normalise_signs};
use crate::error::{Error, Result};

/// A weighted edge between 1-based vertices `i` and `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl From<(usize, usize, f64)> for Edge {
    fn from((i, j, w): (usize, usize, f64)) -> Self {
        Edge { i, j, w }
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.i, e.j, e.w)
    }
}

/// Graph families with unit weights, plus arbitrary edge lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    Path,
    Complete,
    /// Ring where every vehicle talks to its `p` nearest neighbours on each side.
    Pcycle { p: usize },
    Custom { edges: Vec<Edge> },
}

impl GraphKind {
    pub fn is_standard(&self) -> bool {
        !matches!(self, GraphKind::Custom { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeAction {
    Add(f64),
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<Edge>,
}

/// A connected, simple, undirected, weighted graph on `n >= 2` vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct CommGraph {
    weights: DMatrix<f64>,
}

impl TryFrom<GraphJson> for CommGraph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        CommGraph::from_edges(g.n, &g.edges)
    }
}

impl From<CommGraph> for GraphJson {
    fn from(g: CommGraph) -> Self {
        GraphJson {
            n: g.n(),
            edges: g.edges(),
        }
    }
}

impl CommGraph {
    pub fn build(kind: &GraphKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("graph needs n >= 2 vertices, got {n}")));
        }
        match kind {
            GraphKind::Path => Ok(Self::path(n)),
            GraphKind::Complete => Ok(Self::complete(n)),
            GraphKind::Pcycle { p } => Self::pcycle(n, *p),
            GraphKind::Custom { edges } => Self::from_edges(n, edges),
        }
    }

    pub fn path(n: usize) -> Self {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            w[(i, i + 1)] = 1.0;
            w[(i + 1, i)] = 1.0;
        }
        CommGraph { weights: w }
    }

    pub fn complete(n: usize) -> Self {
        let mut w = DMatrix::from_element(n, n, 1.0);
        w.fill_diagonal(0.0);
        CommGraph { weights: w }
    }

    pub fn pcycle(n: usize, p: usize) -> Result<Self> {
        let p_max = (n.saturating_sub(1)) / 2;
        if p < 1 || p > p_max {
            return Err(Error::param(format!(
                "p-cycle needs 1 <= p <= {p_max} for n = {n}, got p = {p}"
            )));
        }
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for d in 1..=p {
                let j = (i + d) % n;
                w[(i, j)] = 1.0;
                w[(j, i)] = 1.0;
            }
        }
        Ok(CommGraph { weights: w })
    }

    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("graph needs n >= 2 vertices, got {n}")));
        }
        let mut w = DMatrix::zeros(n, n);
        for e in edges {
            if e.i < 1 || e.j < 1 || e.i > n || e.j > n {
                return Err(Error::param(format!("edge ({}, {}) outside vertices 1..={n}", e.i, e.j)));
            }
            if e.i == e.j {
                return Err(Error::param(format!("self-loop at vertex {}", e.i)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::param(format!("edge ({}, {}) has non-positive weight {}", e.i, e.j, e.w)));
            }
            w[(e.i - 1, e.j - 1)] = e.w;
            w[(e.j - 1, e.i - 1)] = e.w;
        }
        Self::from_weights(w)
    }

    /// Validates symmetry, zero diagonal, non-negativity and connectivity.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n != weights.ncols() || n < 2 {
            return Err(Error::param("weight matrix must be square with n >= 2"));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::param(format!("non-zero diagonal weight at vertex {}", i + 1)));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w.is_finite() && w >= 0.0) || w != weights[(j, i)] {
                    return Err(Error::param(format!(
                        "weights must be symmetric and non-negative; check ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let g = CommGraph { weights };
        let comps = g.components();
        if comps.len() > 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// 1-based vertices.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i - 1, j - 1)]
    }

    /// Edge list with 1-based vertices, `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push(Edge { i: i + 1, j: j + 1, w });
                }
            }
        }
        out
    }

    /// Connected components as sorted 1-based vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(u) = stack.pop() {
                members.push(u + 1);
                for v in 0..n {
                    if self.weights[(u, v)] > 0.0 && label[v] == usize::MAX {
                        label[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    /// Adds or removes the edge between 1-based vertices `i` and `j`.
    pub fn mutate_edge(&self, i: usize, j: usize, action: EdgeAction) -> Result<Self> {
        let n = self.n();
        if i == j || i < 1 || j < 1 || i > n || j > n {
            return Err(Error::param(format!("invalid edge ({i}, {j}) for n = {n}")));
        }
        let mut w = self.weights.clone();
        match action {
            EdgeAction::Add(weight) => {
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(Error::param(format!("added edge weight {weight} must be > 0")));
                }
                w[(i - 1, j - 1)] = weight;
                w[(j - 1, i - 1)] = weight;
            }
            EdgeAction::Remove => {
                if w[(i - 1, j - 1)] == 0.0 {
                    return Err(Error::param(format!("edge ({i}, {j}) does not exist")));
                }
                w[(i - 1, j - 1)] = 0.0;
                w[(j - 1, i - 1)] = 0.0;
            }
        }
        match Self::from_weights(w) {
            Err(Error::Disconnected { components }) => Err(Error::BridgeRemoval { i, j, components }),
            other => other,
        }
    }

    pub fn laplacian(&self) -> Laplacian {
        let n = self.n();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.weights.row(i).sum();
        }
        Laplacian(l)
    }
}

/// Graph Laplacian `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(pub DMatrix<f64>);

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Numeric,
    /// Analytic eigenvalues and eigenvectors.
    Analytic,
    /// Analytic eigenvalues; eigenvectors from the numeric solver.
    AnalyticValues,
}

/// Ordered Laplacian spectrum `L = Q diag(lambda) Q^T`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    source: SpectrumSource,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the orthonormal eigenvectors `q_k`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Algebraic connectivity `lambda_2`.
    pub fn fiedler_value(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * lambda * self.eigenvectors.transpose()
    }

    /// Projections of the pair-difference vectors on each mode:
    /// entry `(i, k)` is `(e_{i+1} - e_i)^T q_k`.
    pub fn pair_mode_weights(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n - 1, n, |i, k| self.eigenvectors[(i + 1, k)] - self.eigenvectors[(i, k)])
    }

    /// Largest `|L q_k - lambda_k q_k|` entry over all modes.
    pub fn residual(&self, lap: &Laplacian) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n() {
            let q = self.eigenvectors.column(k);
            let r = lap.matrix() * q - q * self.eigenvalues[k];
            worst = worst.max(r.amax());
        }
        worst
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::<f64>::identity(n, n)).amax()
    }
}

pub fn spectral_decomposition(lap: &Laplacian) -> Result<Spectrum> {
    let e = jacobi_eigen(lap.matrix())?;
    Ok(Spectrum {
        eigenvalues: e.values,
        eigenvectors: e.vectors,
        source: SpectrumSource::Numeric,
    })
}

/// Path eigenvalues `2 (1 - cos(pi (k-1) / n))`, `k = 1..n`.
pub fn path_eigenvalues(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * (1.0 - (PI * m as f64 / n as f64).cos())).collect()
}

/// Eigenvalue of the `p`-cycle Laplacian at Fourier frequency `m`:
/// `2p + 1 - sin((2p+1) m pi / n) / sin(m pi / n)`, and 0 at `m = 0`.
pub fn pcycle_eigenvalue(n: usize, p: usize, m: usize) -> f64 {
    if m % n == 0 {
        return 0.0;
    }
    let x = PI * m as f64 / n as f64;
    let k = (2 * p + 1) as f64;
    k - (k * x).sin() / x.sin()
}

fn path_vectors(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |l, k| {
        if k == 0 {
            1.0 / nf.sqrt()
        } else {
            (2.0 / nf).sqrt() * (PI * k as f64 * (2 * l + 1) as f64 / (2.0 * nf)).cos()
        }
    })
}

/// Real Fourier basis of a circulant graph, columns paired with frequencies.
fn fourier_basis(n: usize) -> (Vec<usize>, DMatrix<f64>) {
    let nf = n as f64;
    let mut freqs = vec![0usize];
    let mut cols: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / nf.sqrt())];
    for m in 1..=(n - 1) / 2 {
        let w = 2.0 * PI * m as f64 / nf;
        cols.push(DVector::from_fn(n, |l, _| (2.0 / nf).sqrt() * (w * l as f64).cos()));
        cols.push(DVector::from_fn(n, |l, _| (2.0 / nf).sqrt() * (w * l as f64).sin()));
        freqs.push(m);
        freqs.push(m);
    }
    if n % 2 == 0 {
        cols.push(DVector::from_fn(n, |l, _| if l % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt()));
        freqs.push(n / 2);
    }
    (freqs, DMatrix::from_columns(&cols))
}

const EIGENVALUE_TOL: f64 = 1e-9;
const VECTOR_TOL: f64 = 1e-8;

/// Spectrum of a standard family from analytic expressions.
///
/// The analytic eigenvalues are compared with the numeric solver; on a
/// mismatch beyond `1e-9` the numeric spectrum is returned instead. Analytic
/// eigenvectors are used only if they are orthonormal and satisfy
/// `L q = lambda q` to `1e-8`.
pub fn closed_form_spectrum(kind: &GraphKind, n: usize) -> Result<Spectrum> {
    let graph = CommGraph::build(kind, n)?;
    let lap = graph.laplacian();
    let numeric = spectral_decomposition(&lap)?;

    let (mut values, vectors): (Vec<f64>, Option<DMatrix<f64>>) = match kind {
        GraphKind::Complete => {
            let mut v = vec![n as f64; n];
            v[0] = 0.0;
            (v, None)
        }
        GraphKind::Path => (path_eigenvalues(n), Some(path_vectors(n))),
        GraphKind::Pcycle { p } => {
            let (freqs, basis) = fourier_basis(n);
            (freqs.iter().map(|&m| pcycle_eigenvalue(n, *p, m)).collect(), Some(basis))
        }
        GraphKind::Custom { .. } => {
            return Err(Error::param("closed-form spectrum needs a standard graph kind"))
        }
    };

    // sort analytic pairs ascending, stable on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let vectors = vectors.map(|v| {
        let mut sorted = DMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            sorted.set_column(col, &v.column(src));
        }
        sorted
    });
    values = order.iter().map(|&i| values[i]).collect();

    let deviation = values
        .iter()
        .zip(numeric.eigenvalues())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if deviation > EIGENVALUE_TOL {
        log::warn!(
            "analytic {kind:?} spectrum deviates from numeric by {deviation:e}; using numeric spectrum"
        );
        return Ok(numeric);
    }

    if let Some(mut q) = vectors {
        normalise_signs(&mut q);
        let candidate = Spectrum {
            eigenvalues: values.clone(),
            eigenvectors: q,
            source: SpectrumSource::Analytic,
        };
        let ortho = candidate.orthonormality_error();
        let resid = candidate.residual(&lap);
        if ortho <= VECTOR_TOL && resid <= VECTOR_TOL {
            return Ok(candidate);
        }
        log::warn!(
            "analytic {kind:?} eigenvectors rejected (orthonormality {ortho:e}, residual {resid:e})"
        );
    }
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: numeric.eigenvectors,
        source: SpectrumSource::AnalyticValues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_three_laplacian() {
        let l = CommGraph::complete(3).laplacian();
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(l.0, expected);
    }

    #[test]
    fn path_two_laplacian() {
        let l = CommGraph::path(2).laplacian();
        assert_eq!(l.0, DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
    }

    #[test]
    fn custom_with_isolated_vertex_is_rejected() {
        let err = CommGraph::from_edges(3, &[Edge { i: 1, j: 2, w: 1.0 }]).unwrap_err();
        match err {
            Error::Disconnected { components } => assert_eq!(components, vec![vec![1, 2], vec![3]]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn custom_rejects_non_positive_weight() {
        assert!(CommGraph::from_edges(2, &[Edge { i: 1, j: 2, w: 0.0 }]).is_err());
    }

    #[test]
    fn pcycle_rejects_large_p() {
        assert!(CommGraph::pcycle(6, 3).is_err());
        assert!(CommGraph::pcycle(6, 0).is_err());
        assert!(CommGraph::pcycle(7, 3).is_ok());
    }

    #[test]
    fn adding_edge_closes_path_into_cycle() {
        let g = CommGraph::path(3).mutate_edge(1, 3, EdgeAction::Add(1.0)).unwrap();
        assert_eq!(g, CommGraph::pcycle(3, 1).unwrap());
    }

    #[test]
    fn removing_edge_from_triangle_gives_path() {
        let g = CommGraph::complete(3).mutate_edge(1, 2, EdgeAction::Remove).unwrap();
        let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(edges, vec![(1, 3), (2, 3)]);
    }

    #[test]
    fn removing_bridge_names_the_cut() {
        let err = CommGraph::path(3).mutate_edge(1, 2, EdgeAction::Remove).unwrap_err();
        match err {
            Error::BridgeRemoval { i, j, components } => {
                assert_eq!((i, j), (1, 2));
                assert_eq!(components, vec![vec![1], vec![2, 3]]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn removing_missing_edge_is_an_error() {
        assert!(CommGraph::path(4).mutate_edge(1, 3, EdgeAction::Remove).is_err());
    }

    #[test]
    fn complete_spectrum_is_n() {
        let s = spectral_decomposition(&CommGraph::complete(6).laplacian()).unwrap();
        assert!(s.eigenvalues()[0].abs() < 1e-12);
        for &l in &s.eigenvalues()[1..] {
            assert!((l - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_three_spectrum() {
        let s = spectral_decomposition(&CommGraph::path(3).laplacian()).unwrap();
        for (a, b) in s.eigenvalues().iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let closed = path_eigenvalues(3);
        for (a, b) in closed.iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn first_mode_is_normalised_constant() {
        let g = CommGraph::from_edges(
            4,
            &[
                Edge { i: 1, j: 2, w: 0.5 },
                Edge { i: 2, j: 3, w: 2.0 },
                Edge { i: 3, j: 4, w: 1.5 },
                Edge { i: 1, j: 4, w: 0.2 },
            ],
        )
        .unwrap();
        let s = spectral_decomposition(&g.laplacian()).unwrap();
        assert!(s.eigenvalues()[0].abs() < 1e-12);
        for l in 0..4 {
            assert!((s.eigenvectors()[(l, 0)] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_of_four_closed_form() {
        let s = closed_form_spectrum(&GraphKind::Pcycle { p: 1 }, 4).unwrap();
        assert_eq!(s.source(), SpectrumSource::Analytic);
        for (a, b) in s.eigenvalues().iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_path_is_analytic() {
        let s = closed_form_spectrum(&GraphKind::Path, 20).unwrap();
        assert_eq!(s.source(), SpectrumSource::Analytic);
        assert!((s.fiedler_value() - 2.0 * (1.0 - (PI / 20.0).cos())).abs() < 1e-15);
    }

    #[test]
    fn closed_form_complete_uses_numeric_vectors() {
        let s = closed_form_spectrum(&GraphKind::Complete, 20).unwrap();
        assert_eq!(s.source(), SpectrumSource::AnalyticValues);
        assert!(s.eigenvalues()[1..].iter().all(|&l| l == 20.0));
    }

    #[test]
    fn closed_form_rejects_custom() {
        assert!(closed_form_spectrum(&GraphKind::Custom { edges: vec![] }, 3).is_err());
    }

    #[test]
    fn json_round_trip_uses_one_based_edges() {
        let g = CommGraph::path(3);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":3,"edges":[[1,2,1.0],[2,3,1.0]]}"#);
        let back: CommGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<CommGraph>(r#"{"n":3,"edges":[[1,2,1.0]]}"#).is_err());
    }
}

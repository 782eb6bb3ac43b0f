//! Graph containers, structure representations, node distributions and
//! synthetic generators.
//!
//! A graph is modelled as a structure matrix `C` (adjacency, shortest-path
//! distances or a heat kernel), a probability vector `h` over its nodes and
//! optional node features `F`. All structure matrices are dense row-major.

use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};

/// Tolerance used for simplex membership of node distributions.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub structure: Array2<f64>,
    pub distribution: Array1<f64>,
    pub features: Option<Array2<f64>>,
}

impl Graph {
    pub fn new(
        structure: Array2<f64>,
        distribution: Array1<f64>,
        features: Option<Array2<f64>>,
    ) -> Result<Self> {
        let n = structure.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("graph must have at least one node".into()));
        }
        if structure.ncols() != n {
            return Err(Error::Dimension(format!(
                "structure must be square, got {}x{}",
                n,
                structure.ncols()
            )));
        }
        if structure.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("structure matrix".into()));
        }
        if distribution.len() != n {
            return Err(Error::Dimension(format!(
                "distribution has length {}, expected {}",
                distribution.len(),
                n
            )));
        }
        check_simplex(distribution.view(), SIMPLEX_TOL)?;
        if let Some(f) = &features {
            if f.nrows() != n {
                return Err(Error::Dimension(format!(
                    "features have {} rows, expected {}",
                    f.nrows(),
                    n
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature matrix".into()));
            }
        }
        Ok(Self {
            structure,
            distribution,
            features,
        })
    }

    /// Graph with a uniform node distribution.
    pub fn uniform(structure: Array2<f64>) -> Result<Self> {
        let n = structure.nrows();
        let h = Array1::from_elem(n, 1.0 / n.max(1) as f64);
        Self::new(structure, h, None)
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.n() {
            return Err(Error::Dimension(format!(
                "features have {} rows, expected {}",
                features.nrows(),
                self.n()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.structure.nrows()
    }

    /// Applies a node permutation: node `i` of the result is node `perm[i]`
    /// of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let structure = Array2::from_shape_fn((n, n), |(i, j)| self.structure[[perm[i], perm[j]]]);
        let distribution = Array1::from_shape_fn(n, |i| self.distribution[perm[i]]);
        let features = self.features.as_ref().map(|f| {
            Array2::from_shape_fn((n, f.ncols()), |(i, k)| f[[perm[i], k]])
        });
        Self {
            structure,
            distribution,
            features,
        }
    }
}

pub(crate) fn check_simplex(h: ArrayView1<f64>, tol: f64) -> Result<()> {
    if h.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::NotOnSimplex("negative or non-finite entry".into()));
    }
    let s: f64 = h.sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::NotOnSimplex(format!("entries sum to {s}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GraphDataset {
    pub graphs: Vec<Graph>,
    pub labels: Option<Vec<i64>>,
}

impl GraphDataset {
    pub fn new(graphs: Vec<Graph>, labels: Option<Vec<i64>>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one graph".into()));
        }
        if let Some(l) = &labels {
            if l.len() != graphs.len() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} graphs",
                    l.len(),
                    graphs.len()
                )));
            }
        }
        Ok(Self { graphs, labels })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepresentationKind {
    Adjacency,
    ShortestPath,
    /// Heat kernel `exp(-t L)` of the normalized Laplacian.
    HeatKernel(f64),
}

fn check_adjacency(adjacency: ArrayView2<f64>) -> Result<()> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(Error::Dimension(format!(
            "adjacency must be square, got {}x{}",
            n,
            adjacency.ncols()
        )));
    }
    let dev = max_asymmetry(adjacency);
    if dev > 0.0 {
        return Err(Error::NotSymmetric(dev));
    }
    Ok(())
}

pub(crate) fn max_asymmetry(m: ArrayView2<f64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    dev
}

/// Builds the structure matrix used by the solvers from a symmetric 0/1
/// adjacency matrix.
pub fn build_representation(
    adjacency: ArrayView2<f64>,
    kind: RepresentationKind,
) -> Result<Array2<f64>> {
    check_adjacency(adjacency)?;
    match kind {
        RepresentationKind::Adjacency => Ok(adjacency.to_owned()),
        RepresentationKind::ShortestPath => Ok(shortest_path_matrix(adjacency)),
        RepresentationKind::HeatKernel(t) => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(param("t", format!("heat time must be positive, got {t}")));
            }
            Ok(heat_kernel(adjacency, t))
        }
    }
}

/// All-pairs hop distances by BFS. Unreachable pairs get the largest finite
/// distance plus one so that the matrix stays finite.
fn shortest_path_matrix(adjacency: ArrayView2<f64>) -> Array2<f64> {
    let n = adjacency.nrows();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && adjacency[[i, j]] != 0.0).collect())
        .collect();
    let mut dist = Array2::from_elem((n, n), f64::INFINITY);
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist[[s, s]] = 0.0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = dist[[s, u]];
            for &v in &neighbors[u] {
                if dist[[s, v]].is_infinite() {
                    dist[[s, v]] = du + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }
    let max_finite = dist
        .iter()
        .filter(|d| d.is_finite())
        .fold(0.0_f64, |a, &b| a.max(b));
    let cap = max_finite + 1.0;
    dist.mapv_inplace(|d| if d.is_finite() { d } else { cap });
    dist
}

fn heat_kernel(adjacency: ArrayView2<f64>, t: f64) -> Array2<f64> {
    let n = adjacency.nrows();
    let deg: Vec<f64> = (0..n).map(|i| adjacency.row(i).sum()).collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    // L = I - D^{-1/2} A D^{-1/2}; isolated nodes contribute a zero row/column
    // to the normalized adjacency.
    let lap = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let a = adjacency[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - a
        } else {
            -a
        }
    });
    let eig = lap.symmetric_eigen();
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let w = (-t * eig.eigenvalues[k]).exp();
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            let vi = w * v[i];
            for j in 0..n {
                out[[i, j]] += vi * v[j];
            }
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (out[[i, j]] + out[[j, i]]);
            out[[i, j]] = s;
            out[[j, i]] = s;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionMode {
    Uniform,
    Degree,
    /// `h_i ∝ (deg(i) + a)^b`
    PowerLaw { a: f64, b: f64 },
}

pub fn degrees(adjacency: ArrayView2<f64>) -> Array1<f64> {
    Array1::from_shape_fn(adjacency.nrows(), |i| {
        adjacency
            .row(i)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| *v)
            .sum()
    })
}

/// Node distribution from the degree sequence of `adjacency`.
///
/// For power-law modes with `a = 0` on a graph with isolated nodes, `a` is
/// switched to 1 so that every weight stays positive.
pub fn node_distribution(adjacency: ArrayView2<f64>, mode: DistributionMode) -> Result<Array1<f64>> {
    let n = adjacency.nrows();
    if n == 0 || adjacency.ncols() != n {
        return Err(Error::Dimension("adjacency must be a non-empty square matrix".into()));
    }
    let (a, b) = match mode {
        DistributionMode::Uniform => return Ok(Array1::from_elem(n, 1.0 / n as f64)),
        DistributionMode::Degree => (0.0, 1.0),
        DistributionMode::PowerLaw { a, b } => (a, b),
    };
    if !(0.0..=1.0).contains(&b) {
        return Err(param("b", format!("must lie in [0, 1], got {b}")));
    }
    let deg = degrees(adjacency);
    let a = if a == 0.0 && deg.iter().any(|&d| d == 0.0) { 1.0 } else { a };
    power_law_weights(deg.view(), a, b)
}

/// `p_i = (deg_i + a)^b`, normalized.
pub fn power_law_weights(deg: ArrayView1<f64>, a: f64, b: f64) -> Result<Array1<f64>> {
    let base: Vec<f64> = deg.iter().map(|&d| d + a).collect();
    if base.iter().any(|&x| !(x > 0.0)) {
        return Err(param("a", "every (deg + a) must be positive"));
    }
    let p = Array1::from_iter(base.iter().map(|&x| x.powf(b)));
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(param("b", "power-law weights must be positive"));
    }
    let s = p.sum();
    Ok(p / s)
}

/// Output of [`gen_sbm`].
#[derive(Debug, Clone)]
pub struct SbmSample {
    pub adjacency: Array2<f64>,
    pub graph: Graph,
    pub labels: Vec<usize>,
}

/// Samples an undirected simple graph from a stochastic block model.
pub fn gen_sbm(block_sizes: &[usize], connectivity: ArrayView2<f64>, seed: u64) -> Result<SbmSample> {
    let q = block_sizes.len();
    if q == 0 || block_sizes.iter().any(|&s| s == 0) {
        return Err(param("block_sizes", "need at least one non-empty block"));
    }
    if connectivity.dim() != (q, q) {
        return Err(Error::Dimension(format!(
            "connectivity must be {q}x{q}, got {:?}",
            connectivity.dim()
        )));
    }
    if connectivity.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(param("connectivity", "probabilities must lie in [0, 1]"));
    }
    let dev = max_asymmetry(connectivity);
    if dev > 0.0 {
        return Err(Error::NotSymmetric(dev));
    }
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let p = connectivity[[labels[i], labels[j]]];
            let u: f64 = rng.random();
            if u < p {
                adjacency[[i, j]] = 1.0;
                adjacency[[j, i]] = 1.0;
            }
        }
    }
    let graph = Graph::uniform(adjacency.clone())?;
    Ok(SbmSample {
        adjacency,
        graph,
        labels,
    })
}

/// `q x q` connectivity with `p_in` on the diagonal and `p_out` elsewhere.
pub fn planted_partition(q: usize, p_in: f64, p_out: f64) -> Array2<f64> {
    Array2::from_shape_fn((q, q), |(i, j)| if i == j { p_in } else { p_out })
}

/// `(A + Aᵀ)` clipped to {0, 1} with a zero diagonal.
pub fn symmetrize(adjacency: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(Error::Dimension("adjacency must be square".into()));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i != j && (adjacency[[i, j]] != 0.0 || adjacency[[j, i]] != 0.0) {
            1.0
        } else {
            0.0
        }
    }))
}

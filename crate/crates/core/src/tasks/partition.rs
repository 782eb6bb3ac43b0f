//! Community detection by matching a graph onto the identity structure `I_q`.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use super::metrics::modularity;
use crate::error::{param, Error, Result};
use crate::graph::{build_representation, degrees, node_distribution, DistributionMode, Graph, RepresentationKind};
use crate::solvers::{solve_srgw, InitStrategy, SolverConfig};

/// Clusters with `h̄_j ≤ COMPACTION_TOL · max h̄` are dropped.
pub const COMPACTION_TOL: f64 = 1e-9;

/// Default grid for the power-law exponent `b`.
pub const DEFAULT_B_GRID: [f64; 10] = [0.0, 0.0001, 0.005, 0.01, 0.025, 0.05, 0.075, 0.1, 0.5, 1.0];

/// Heat-time search range and its stopping rule.
pub const HEAT_RANGE: (f64, f64) = (1.0, 100.0);
const HEAT_POINTS: usize = 5;
const HEAT_REL_TOL: f64 = 1e-3;
const HEAT_MAX_ROUNDS: usize = 20;

/// Hyperparameters that produced a partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionSetting {
    pub representation: &'static str,
    pub heat_t: Option<f64>,
    pub b: f64,
    pub epsilon: Option<f64>,
}

impl PartitionSetting {
    pub fn new(kind: RepresentationKind, b: f64, epsilon: Option<f64>) -> Self {
        let (representation, heat_t) = match kind {
            RepresentationKind::Adjacency => ("adjacency", None),
            RepresentationKind::ShortestPath => ("sp", None),
            RepresentationKind::HeatKernel(t) => ("heat", Some(t)),
        };
        PartitionSetting { representation, heat_t, b, epsilon }
    }

    pub fn kind(&self) -> RepresentationKind {
        match (self.representation, self.heat_t) {
            ("sp", _) => RepresentationKind::ShortestPath,
            ("heat", Some(t)) => RepresentationKind::HeatKernel(t),
            _ => RepresentationKind::Adjacency,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub labels: Vec<usize>,
    /// Weights of the supported clusters, in label order.
    pub hbar: Array1<f64>,
    pub modularity: Option<f64>,
    pub coupling: Array2<f64>,
    pub loss: f64,
    pub setting: Option<PartitionSetting>,
}

impl PartitionResult {
    pub fn num_clusters(&self) -> usize {
        self.hbar.len()
    }
}

/// Solver defaults for partitioning: k-means hard assignments as start.
pub fn partition_solver_config() -> SolverConfig {
    SolverConfig { init: InitStrategy::KmeansHard, ..SolverConfig::default() }
}

/// Row-argmax labels of `coupling`, compacted to the supported columns.
pub fn labels_from_coupling(coupling: ArrayView2<f64>) -> (Vec<usize>, Array1<f64>) {
    let hbar = coupling.sum_axis(ndarray::Axis(0));
    let top = hbar.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..hbar.len()).filter(|&j| hbar[j] > COMPACTION_TOL * top).collect();
    let labels = coupling
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (pos, &j) in kept.iter().enumerate() {
                if row[j] > row[kept[best]] {
                    best = pos;
                }
            }
            best
        })
        .collect();
    (labels, Array1::from_iter(kept.iter().map(|&j| hbar[j])))
}

/// Partitions `graph` into at most `q` clusters.
pub fn partition(graph: &Graph, q: usize, config: &SolverConfig) -> Result<PartitionResult> {
    let n = graph.n();
    if q < 2 {
        return Err(param("q", format!("must be at least 2, got {q}")));
    }
    if q > n {
        return Err(param("q", format!("{q} clusters exceed {n} nodes")));
    }
    let target = Array2::<f64>::eye(q);
    let r = solve_srgw(graph.structure.view(), graph.distribution.view(), target.view(), config)?;
    let (labels, hbar) = labels_from_coupling(r.coupling.view());
    Ok(PartitionResult { labels, hbar, modularity: None, coupling: r.coupling, loss: r.loss, setting: None })
}

/// Builds the representation and the `(deg + a)^b` node distribution of
/// `adjacency` (`a = 1` only with isolated nodes), partitions it and scores
/// the result by modularity.
pub fn partition_adjacency(
    adjacency: ArrayView2<f64>,
    q: usize,
    setting: PartitionSetting,
    base: &SolverConfig,
) -> Result<PartitionResult> {
    let structure = build_representation(adjacency, setting.kind())?;
    let a = if degrees(adjacency).iter().any(|&d| d == 0.0) { 1.0 } else { 0.0 };
    let h = node_distribution(adjacency, DistributionMode::PowerLaw { a, b: setting.b })?;
    let graph = Graph::new(structure, h, None)?;
    let mut cfg = base.clone();
    cfg.epsilon = setting.epsilon;
    let mut r = partition(&graph, q, &cfg)?;
    r.modularity = Some(modularity(adjacency, &r.labels)?);
    r.setting = Some(setting);
    Ok(r)
}

/// Representation candidates for [`tune_partition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepresentationSearch {
    Fixed(RepresentationKind),
    /// Heat kernel with the time refined inside `[lo, hi]`.
    HeatRange(f64, f64),
}

fn better(a: &PartitionResult, b: &PartitionResult) -> bool {
    a.modularity.unwrap_or(f64::NEG_INFINITY) > b.modularity.unwrap_or(f64::NEG_INFINITY)
}

fn pick_best(results: Vec<Result<PartitionResult>>) -> Option<PartitionResult> {
    let mut best: Option<PartitionResult> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&r, b)) {
            best = Some(r);
        }
    }
    best
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// Refines the heat time by repeatedly evaluating 5 evenly spaced values and
/// zooming onto the neighbours of the best one.
fn heat_search(
    adjacency: ArrayView2<f64>,
    q: usize,
    range: (f64, f64),
    b: f64,
    epsilon: Option<f64>,
    base: &SolverConfig,
) -> Option<PartitionResult> {
    let (mut lo, mut hi) = range;
    let mut best: Option<PartitionResult> = None;
    for _ in 0..HEAT_MAX_ROUNDS {
        let ts = linspace(lo, hi, HEAT_POINTS);
        let runs: Vec<Result<PartitionResult>> = ts
            .iter()
            .map(|&t| {
                let setting = PartitionSetting::new(RepresentationKind::HeatKernel(t), b, epsilon);
                partition_adjacency(adjacency, q, setting, base)
            })
            .collect();
        let idx = runs
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().ok().and_then(|r| r.modularity).map(|m| (i, m)))
            .fold(None, |acc: Option<(usize, f64)>, (i, m)| match acc {
                Some((_, bm)) if bm >= m => acc,
                _ => Some((i, m)),
            });
        let Some((i, round_best)) = idx else { break };
        let candidate = runs.into_iter().nth(i).and_then(|r| r.ok());
        let previous = best.as_ref().and_then(|b| b.modularity);
        if let Some(c) = candidate {
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
        if let Some(prev) = previous {
            if (round_best - prev).abs() <= HEAT_REL_TOL * prev.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        lo = ts[i.saturating_sub(1)];
        hi = ts[(i + 1).min(HEAT_POINTS - 1)];
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    best
}

/// Selects `b`, the representation and `ε` by maximizing modularity. Ground
/// truth is never consulted.
pub fn tune_partition(
    adjacency: ArrayView2<f64>,
    q: usize,
    b_grid: &[f64],
    representation_grid: &[RepresentationSearch],
    epsilon_grid: &[Option<f64>],
    base: &SolverConfig,
) -> Result<PartitionResult> {
    if b_grid.is_empty() || representation_grid.is_empty() || epsilon_grid.is_empty() {
        return Err(Error::InvalidInput("tuning grids must be nonempty".into()));
    }
    let mut combos = Vec::new();
    for &rep in representation_grid {
        for &b in b_grid {
            for &eps in epsilon_grid {
                combos.push((rep, b, eps));
            }
        }
    }
    let results: Vec<Result<PartitionResult>> = combos
        .par_iter()
        .map(|&(rep, b, eps)| match rep {
            RepresentationSearch::Fixed(kind) => {
                partition_adjacency(adjacency, q, PartitionSetting::new(kind, b, eps), base)
            }
            RepresentationSearch::HeatRange(lo, hi) => heat_search(adjacency, q, (lo, hi), b, eps, base)
                .ok_or_else(|| Error::Solver("heat-time search found no valid partition".into())),
        })
        .collect();
    let first_err = results.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()));
    pick_best(results).ok_or_else(|| {
        Error::Solver(format!("every tuning run failed: {}", first_err.unwrap_or_default()))
    })
}

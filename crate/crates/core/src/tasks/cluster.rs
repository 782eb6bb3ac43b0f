//! Clustering of whole graphs through their embedding weights.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dictionary::{embed, item_config, DictionaryAtom};
use crate::error::{param, Error, Result};
use crate::graph::GraphDataset;
use crate::kmeans::kmeans;
use crate::solvers::SolverConfig;

const RESTARTS: usize = 10;

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    /// One embedding weight vector per row.
    pub embeddings: Array2<f64>,
    pub inertia: f64,
}

/// Embeds every graph onto `atom` and runs k-means on the weight vectors.
pub fn cluster_graphs(
    dataset: &GraphDataset,
    atom: &DictionaryAtom,
    k: usize,
    solver_config: &SolverConfig,
    seed: u64,
) -> Result<ClusterResult> {
    if k < 2 {
        return Err(param("k", format!("must be at least 2, got {k}")));
    }
    if dataset.len() < k {
        return Err(Error::InvalidInput(format!("{} graphs cannot form {k} clusters", dataset.len())));
    }
    solver_config.validate()?;
    let hbars: Vec<Result<ndarray::Array1<f64>>> = dataset
        .graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| embed(g, atom, &item_config(solver_config, i, None)).map(|e| e.hbar))
        .collect();
    let m = atom.m();
    let mut embeddings = Array2::zeros((dataset.len(), m));
    for (i, h) in hbars.into_iter().enumerate() {
        embeddings.row_mut(i).assign(&h?);
    }
    let km = kmeans(embeddings.view(), k, RESTARTS, seed)?;
    Ok(ClusterResult { labels: km.labels, embeddings, inertia: km.inertia })
}

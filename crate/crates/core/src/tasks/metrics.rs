//! Partition quality scores.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::max_asymmetry;

/// Newman modularity of an undirected, possibly weighted graph. Self-loops
/// are ignored.
pub fn modularity(adjacency: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n || labels.len() != n {
        return Err(Error::Dimension(format!(
            "adjacency {:?} with {} labels",
            adjacency.dim(),
            labels.len()
        )));
    }
    if max_asymmetry(adjacency) > 1e-12 {
        return Err(Error::InvalidInput("modularity needs an undirected graph".into()));
    }
    let k = labels.iter().copied().max().map_or(0, |v| v + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = adjacency[[i, j]];
            degree[labels[i]] += w;
            if j > i {
                total += w;
                if labels[i] == labels[j] {
                    internal[labels[i]] += w;
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidInput("modularity is undefined without edges".into()));
    }
    Ok((0..k)
        .map(|c| internal[c] / total - (degree[c] / (2.0 * total)).powi(2))
        .sum())
}

fn check_pair(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("label lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("labelings are empty".into()));
    }
    Ok(())
}

fn relabel(a: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = a
        .iter()
        .map(|v| {
            let next = map.len();
            *map.entry(*v).or_insert(next)
        })
        .collect();
    (out, map.len())
}

struct Contingency {
    table: Array2<f64>,
    rows: Vec<f64>,
    cols: Vec<f64>,
    n: f64,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    let (ra, ka) = relabel(a);
    let (rb, kb) = relabel(b);
    let mut table = Array2::zeros((ka, kb));
    for (&x, &y) in ra.iter().zip(rb.iter()) {
        table[[x, y]] += 1.0;
    }
    let rows = table.rows().into_iter().map(|r| r.sum()).collect();
    let cols = table.columns().into_iter().map(|c| c.sum()).collect();
    Contingency { table, rows, cols, n: a.len() as f64 }
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Pair counts `(same in both, same only in a, same only in b, different in both)`.
fn pair_counts(c: &Contingency) -> (f64, f64, f64, f64) {
    let both: f64 = c.table.iter().map(|&v| comb2(v)).sum();
    let in_a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let in_b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let total = comb2(c.n);
    (both, in_a - both, in_b - both, total - in_a - in_b + both)
}

pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    check_pair(a, b)?;
    if a.len() == 1 {
        return Ok(1.0);
    }
    let (tp, fa, fb, tn) = pair_counts(&contingency(a, b));
    Ok((tp + tn) / (tp + fa + fb + tn))
}

pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64> {
    check_pair(a, b)?;
    let (tp, fa, fb, tn) = pair_counts(&contingency(a, b));
    if fa == 0.0 && fb == 0.0 {
        return Ok(1.0);
    }
    Ok(2.0 * (tp * tn - fa * fb) / ((tp + fa) * (fa + tn) + (tp + fb) * (fb + tn)))
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(c: &Contingency) -> f64 {
    let mut mi = 0.0;
    for ((i, j), &nij) in c.table.indexed_iter() {
        if nij > 0.0 {
            mi += nij / c.n * (c.n * nij / (c.rows[i] * c.cols[j])).ln();
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with fixed cluster sizes.
fn expected_mutual_information(c: &Contingency) -> f64 {
    let n = c.n as usize;
    let mut log_fact = vec![0.0; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let nf = c.n;
    let mut emi = 0.0;
    for &ai in &c.rows {
        for &bj in &c.cols {
            let (a, b) = (ai as usize, bj as usize);
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (ai * bj)).ln();
                let log_p = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b]
                    - log_fact[n]
                    - log_fact[nij]
                    - log_fact[a - nij]
                    - log_fact[b - nij]
                    - log_fact[n + nij - a - b];
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with `max(H(a), H(b))` normalization.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    check_pair(a, b)?;
    let c = contingency(a, b);
    let (ka, kb) = c.table.dim();
    if (ka == 1 && kb == 1) || (ka == a.len() && kb == a.len()) {
        return Ok(1.0);
    }
    let mi = mutual_information(&c);
    let emi = expected_mutual_information(&c);
    let norm = entropy(&c.rows, c.n).max(entropy(&c.cols, c.n));
    let mut denom = norm - emi;
    denom = if denom < 0.0 { denom.min(-f64::EPSILON) } else { denom.max(f64::EPSILON) };
    Ok((mi - emi) / denom)
}

/// Accuracy of `pred` against `truth` over the entries with at least one
/// index `≥ observed`, plus the mean squared feature error on the imputed
/// rows when both feature matrices are given.
pub fn completion_metrics(
    truth: ArrayView2<f64>,
    pred: ArrayView2<f64>,
    observed: usize,
    features: Option<(ArrayView2<f64>, ArrayView2<f64>)>,
) -> Result<CompletionMetrics> {
    let n = truth.nrows();
    if truth.dim() != pred.dim() || truth.ncols() != n {
        return Err(Error::Dimension(format!("{:?} vs {:?}", truth.dim(), pred.dim())));
    }
    if observed > n {
        return Err(Error::InvalidInput(format!("{observed} observed nodes out of {n}")));
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i >= observed || j >= observed {
                total += 1;
                if truth[[i, j]] == pred[[i, j]] {
                    hits += 1;
                }
            }
        }
    }
    let accuracy = if total == 0 { 1.0 } else { hits as f64 / total as f64 };
    let feature_mse = match features {
        None => None,
        Some((ft, fp)) => {
            if ft.dim() != fp.dim() || ft.nrows() != n {
                return Err(Error::Dimension("feature matrices do not match".into()));
            }
            let rows = n - observed;
            if rows == 0 {
                Some(0.0)
            } else {
                let se: f64 = (observed..n)
                    .map(|i| ft.row(i).iter().zip(fp.row(i).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .sum();
                Some(se / (rows * ft.ncols()).max(1) as f64)
            }
        }
    };
    Ok(CompletionMetrics { accuracy, feature_mse })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionMetrics {
    pub accuracy: f64,
    pub feature_mse: Option<f64>,
}

//! Seeded Lloyd k-means with k-means++ seeding and restarts.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
}

const MAX_LLOYD: usize = 300;

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs `restarts` independent Lloyd runs and keeps the one with the lowest
/// inertia. Ties keep the earliest restart.
pub fn kmeans(data: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = data.nrows();
    if k == 0 {
        return Err(param("k", "must be at least 1"));
    }
    if n < k {
        return Err(Error::InvalidInput(format!("{n} points cannot form {k} clusters")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(data, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(data: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), data.row(pick)));
        }
    }
    centroids
}

fn assign(data: ArrayView2<f64>, centroids: &Array2<f64>, labels: &mut [usize]) -> (bool, Vec<f64>) {
    let mut changed = false;
    let mut dists = vec![0.0; data.nrows()];
    for (i, row) in data.axis_iter(Axis(0)).enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, cen) in centroids.axis_iter(Axis(0)).enumerate() {
            let d = sq_dist(row, cen);
            if d < best.1 {
                best = (c, d);
            }
        }
        if labels[i] != best.0 {
            labels[i] = best.0;
            changed = true;
        }
        dists[i] = best.1;
    }
    (changed, dists)
}

fn lloyd(data: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let (n, d) = data.dim();
    let mut centroids = plus_plus(data, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists;
    let mut iter = 0;
    loop {
        let (changed, dd) = assign(data, &centroids, &mut labels);
        dists = dd;
        iter += 1;
        if !changed || iter >= MAX_LLOYD {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &data.row(i));
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // steal the point currently worst served
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap();
                centroids.row_mut(c).assign(&data.row(far));
                dists[far] = 0.0;
            } else {
                let mean = sums.row(c).mapv(|v| v / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
    }
    let inertia = dists.iter().sum();
    KMeansResult { labels, centroids, inertia }
}

/// Squared distance of each row to its assigned centroid, summed.
pub fn inertia(data: ArrayView2<f64>, centroids: ArrayView2<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(data.row(i), centroids.row(l)))
        .sum()
}

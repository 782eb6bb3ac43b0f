//! Slow reference implementations used to cross-check the fast kernels.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

/// Quadruple loop over `Σ_jl (C_ij - C̄_kl)² T_jl`.
pub fn tensor_product(c: ArrayView2<f64>, cbar: ArrayView2<f64>, t: ArrayView2<f64>) -> Array2<f64> {
    let (n, m) = t.dim();
    Array2::from_shape_fn((n, m), |(i, k)| {
        let mut acc = 0.0;
        for j in 0..n {
            for l in 0..m {
                let d = c[[i, j]] - cbar[[k, l]];
                acc += d * d * t[[j, l]];
            }
        }
        acc
    })
}

/// Direct evaluation of `Σ_ijkl (C_ij - C̄_kl)² T_ik T_jl`.
pub fn loss(c: ArrayView2<f64>, cbar: ArrayView2<f64>, t: ArrayView2<f64>) -> f64 {
    let (n, m) = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..m {
            if t[[i, k]] == 0.0 {
                continue;
            }
            for j in 0..n {
                for l in 0..m {
                    let d = c[[i, j]] - cbar[[k, l]];
                    acc += d * d * t[[i, k]] * t[[j, l]];
                }
            }
        }
    }
    acc
}

/// Pairwise squared Euclidean distances by explicit loops.
pub fn pairwise_sq_distances(f: ArrayView2<f64>, fbar: ArrayView2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((f.nrows(), fbar.nrows()), |(i, k)| {
        f.row(i)
            .iter()
            .zip(fbar.row(k).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    })
}

pub fn fgw_loss(
    c: ArrayView2<f64>,
    f: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    fbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    alpha: f64,
) -> f64 {
    let m = pairwise_sq_distances(f, fbar);
    let lin: f64 = m.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
    (1.0 - alpha) * lin + alpha * loss(c, cbar, t)
}

/// Central finite differences of `f` at `x`, one coordinate at a time.
pub fn finite_difference<F>(x: &Array2<f64>, step: f64, f: F) -> Array2<f64>
where
    F: Fn(&Array2<f64>) -> f64,
{
    let mut probe = x.clone();
    Array2::from_shape_fn(x.dim(), |idx| {
        let orig = probe[idx];
        probe[idx] = orig + step;
        let up = f(&probe);
        probe[idx] = orig - step;
        let down = f(&probe);
        probe[idx] = orig;
        (up - down) / (2.0 * step)
    })
}

/// `‖a - b‖_F / max(‖b‖_F, 1e-12)`.
pub fn relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num = (a - b).mapv(|v| v * v).sum().sqrt();
    let den = b.mapv(|v| v * v).sum().sqrt().max(1e-12);
    num / den
}

/// Strictly positive coupling with rows summing to `h`.
pub fn random_coupling<R: Rng>(rng: &mut R, h: &Array1<f64>, m: usize) -> Array2<f64> {
    let mut t = Array2::from_shape_fn((h.len(), m), |_| 0.05 + rng.random::<f64>());
    for (mut row, &hi) in t.rows_mut().into_iter().zip(h.iter()) {
        let s = row.sum();
        row.mapv_inplace(|v| v * hi / s);
    }
    t
}

/// Random point in the interior of the simplex.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Array1<f64> {
    let v = Array1::from_shape_fn(n, |_| 0.1 + rng.random::<f64>());
    let s = v.sum();
    v / s
}

/// Independent shortest-path computation by Floyd-Warshall over unit edges.
/// Unreachable pairs are left as `f64::INFINITY`.
pub fn floyd_warshall(adj: ArrayView2<f64>) -> Array2<f64> {
    let n = adj.nrows();
    let mut d = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else if adj[[i, j]] != 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    });
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[[i, k]] + d[[k, j]];
                if via < d[[i, j]] {
                    d[[i, j]] = via;
                }
            }
        }
    }
    d
}

/// Pair-counting Rand index by explicit enumeration of all pairs.
pub fn rand_index_pairs(a: ArrayView1<usize>, b: ArrayView1<usize>) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::gw;
use crate::kmeans::kmeans;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// `h (1/m) 1ᵀ`.
    OuterUniform,
    /// `h rᵀ` with `r` drawn uniformly on the simplex.
    OuterRandom(u64),
    /// Hard k-means assignment of the rows of `diag(h) C`.
    KmeansHard,
    /// Each row sent to one uniformly drawn column, a random vertex of the
    /// feasible set. Suited to multi-restart searches.
    RandomAssignment(u64),
    Given(Array2<f64>),
}

const KMEANS_RESTARTS: usize = 10;

/// Builds the starting coupling. `seed` drives the k-means variant.
pub fn initial_coupling(
    init: &InitStrategy,
    c: ArrayView2<f64>,
    h: ArrayView1<f64>,
    m: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let n = h.len();
    match init {
        InitStrategy::OuterUniform => Ok(outer(h, &Array1::from_elem(m, 1.0 / m as f64))),
        InitStrategy::OuterRandom(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*s);
            let mut r = Array1::from_shape_fn(m, |_| {
                let v: f64 = Exp1.sample(&mut rng);
                v.max(f64::MIN_POSITIVE)
            });
            r /= r.sum();
            Ok(outer(h, &r))
        }
        InitStrategy::KmeansHard => {
            let k = m.min(n);
            let scaled = Array2::from_shape_fn((n, n), |(i, j)| h[i] * c[[i, j]]);
            let km = kmeans(scaled.view(), k, KMEANS_RESTARTS, seed)?;
            let mut t = Array2::zeros((n, m));
            for (i, &l) in km.labels.iter().enumerate() {
                t[[i, l]] = h[i];
            }
            Ok(t)
        }
        InitStrategy::RandomAssignment(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*s);
            let mut t = Array2::zeros((n, m));
            for i in 0..n {
                t[[i, rng.random_range(0..m)]] = h[i];
            }
            Ok(t)
        }
        InitStrategy::Given(t) => {
            if t.dim() != (n, m) {
                return Err(Error::Dimension(format!(
                    "initial coupling is {:?}, expected ({n}, {m})",
                    t.dim()
                )));
            }
            if t.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::Infeasible("initial coupling must be finite and nonnegative".into()));
            }
            let err = gw::max_row_violation(t.view(), h);
            if err > 1e-8 {
                return Err(Error::Infeasible(format!(
                    "initial coupling rows deviate from h by {err:e}"
                )));
            }
            Ok(t.clone())
        }
    }
}

fn outer(h: ArrayView1<f64>, r: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((h.len(), r.len()), |(i, k)| h[i] * r[k])
}

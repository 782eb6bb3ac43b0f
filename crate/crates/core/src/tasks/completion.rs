//! Completion of partially observed graphs from a learned atom.
//!
//! Observed nodes come first. The unknown entries are refined by projected
//! gradient steps on the srGW cost at the optimal coupling, alternating with
//! re-embedding, then thresholded.

use log::debug;
use ndarray::{s, Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dictionary::{embed, DictionaryAtom, DEFAULT_ALPHA};
use crate::error::{param, Error, Result};
use crate::graph::{max_asymmetry, Graph};
use crate::solvers::{InitStrategy, SolverConfig};

#[derive(Debug, Clone)]
pub struct CompletionProblem {
    pub observed: Array2<f64>,
    pub total_nodes: usize,
    pub observed_features: Option<Array2<f64>>,
    pub atom: DictionaryAtom,
}

impl CompletionProblem {
    pub fn n_obs(&self) -> usize {
        self.observed.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n_obs = self.n_obs();
        if self.observed.ncols() != n_obs {
            return Err(Error::Dimension(format!("observed block is {:?}", self.observed.dim())));
        }
        if n_obs == 0 {
            return Err(Error::InvalidInput("at least one node must be observed".into()));
        }
        if n_obs > self.total_nodes {
            return Err(Error::InvalidInput(format!(
                "{n_obs} observed nodes exceed the total of {}",
                self.total_nodes
            )));
        }
        if self.observed.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observed structure".into()));
        }
        match (&self.observed_features, &self.atom.features) {
            (Some(f), Some(fbar)) => {
                if f.nrows() != n_obs || f.ncols() != fbar.ncols() {
                    return Err(Error::Dimension(format!(
                        "observed features are {:?}, expected ({n_obs}, {})",
                        f.dim(),
                        fbar.ncols()
                    )));
                }
            }
            (None, None) => {}
            _ => return Err(Error::InvalidInput("observed features and atom features must both be present".into())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    /// Stop once the relative loss decrease falls below this.
    pub rel_tolerance: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig { step_size: 0.1, max_iterations: 200, rel_tolerance: 1e-6, threshold: 0.5, seed: 0 }
    }
}

impl CompletionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(param("step_size", "must be positive"));
        }
        if !(self.rel_tolerance >= 0.0) {
            return Err(param("rel_tolerance", "must be nonnegative"));
        }
        if !self.threshold.is_finite() {
            return Err(param("threshold", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    /// Thresholded full structure.
    pub structure: Array2<f64>,
    /// Continuous estimate before thresholding.
    pub relaxed: Array2<f64>,
    pub features: Option<Array2<f64>>,
    pub loss: f64,
    pub iterations: usize,
    pub loss_trajectory: Vec<f64>,
}

/// Maps continuous entries to `{0, 1}`; values at the threshold become 1.
pub fn threshold_binary(x: ArrayView2<f64>, threshold: f64) -> Array2<f64> {
    x.mapv(|v| if v >= threshold { 1.0 } else { 0.0 })
}

struct State {
    c: Array2<f64>,
    f: Option<Array2<f64>>,
    coupling: Array2<f64>,
    loss: f64,
}

fn solve(
    c: &Array2<f64>,
    f: &Option<Array2<f64>>,
    h: &Array1<f64>,
    atom: &DictionaryAtom,
    config: &SolverConfig,
) -> Result<(Array2<f64>, f64)> {
    let g = Graph::new(c.clone(), h.clone(), f.clone())?;
    let e = embed(&g, atom, config)?;
    Ok((e.coupling, e.loss))
}

fn initial_guess(problem: &CompletionProblem, rng: &mut ChaCha8Rng) -> (Array2<f64>, Option<Array2<f64>>) {
    let n = problem.total_nodes;
    let n_obs = problem.n_obs();
    let obs = &problem.observed;
    let zero_diag = (0..n_obs).all(|i| obs[[i, i]] == 0.0);
    let noise = Normal::new(0.0, 0.1).expect("valid normal");
    let deg: Vec<f64> = (0..n_obs).map(|i| (0..n_obs).filter(|&j| j != i).map(|j| obs[[i, j]]).sum()).collect();
    let max_deg = deg.iter().copied().fold(0.0, f64::max);

    let mut c = Array2::zeros((n, n));
    c.slice_mut(s![..n_obs, ..n_obs]).assign(obs);
    for i in n_obs..n {
        for j in 0..=i {
            if i == j && zero_diag {
                continue;
            }
            let mean = if j < n_obs {
                if max_deg > 0.0 {
                    deg[j] / max_deg
                } else {
                    0.5
                }
            } else {
                0.5
            };
            let v = (mean + noise.sample(rng)).clamp(0.0, 1.0);
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }

    let f = problem.observed_features.as_ref().map(|fo| {
        let d = fo.ncols();
        let mut f = Array2::zeros((n, d));
        f.slice_mut(s![..n_obs, ..]).assign(fo);
        for k in 0..d {
            let col = fo.column(k);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for i in n_obs..n {
                f[[i, k]] = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            }
        }
        f
    });
    (c, f)
}

/// Imputes the unobserved rows and columns of `problem.observed`.
pub fn complete_graph(
    problem: &CompletionProblem,
    solver_config: &SolverConfig,
    gd_config: &CompletionConfig,
) -> Result<CompletionResult> {
    problem.validate()?;
    solver_config.validate()?;
    gd_config.validate()?;
    let n = problem.total_nodes;
    let n_obs = problem.n_obs();
    if n_obs == n {
        let (_, loss) = solve(
            &problem.observed,
            &problem.observed_features,
            &Array1::from_elem(n, 1.0 / n as f64),
            &problem.atom,
            solver_config,
        )?;
        return Ok(CompletionResult {
            structure: problem.observed.clone(),
            relaxed: problem.observed.clone(),
            features: problem.observed_features.clone(),
            loss,
            iterations: 0,
            loss_trajectory: vec![loss],
        });
    }

    let zero_diag = (0..n_obs).all(|i| problem.observed[[i, i]] == 0.0);
    let symmetric = max_asymmetry(problem.observed.view()) == 0.0;
    let alpha = solver_config.alpha.unwrap_or(DEFAULT_ALPHA);
    let fused = problem.observed_features.is_some();
    let (w_struct, w_feat) = if fused { (alpha, 1.0 - alpha) } else { (1.0, 0.0) };
    let h = Array1::from_elem(n, 1.0 / n as f64);
    let warm = solver_config.epsilon.is_none();
    let cbar = &problem.atom.structure;

    let mut rng = ChaCha8Rng::seed_from_u64(gd_config.seed);
    let (c0, f0) = initial_guess(problem, &mut rng);
    let (t0, l0) = solve(&c0, &f0, &h, &problem.atom, solver_config)?;
    let mut state = State { c: c0, f: f0, coupling: t0, loss: l0 };
    let mut trajectory = vec![l0];
    let mut step = gd_config.step_size;
    let mut iterations = 0;

    while iterations < gd_config.max_iterations {
        iterations += 1;
        let t = &state.coupling;
        // C_ij is pulled towards (T C̄ Tᵀ)_ij / (h_i h_j), the minimizer at fixed T.
        let tct = t.dot(cbar).dot(&t.t());
        let mut c_new = state.c.clone();
        for i in 0..n {
            for j in 0..n {
                if i < n_obs && j < n_obs {
                    continue;
                }
                if i == j && zero_diag {
                    continue;
                }
                let grad = 2.0 * w_struct * (state.c[[i, j]] - tct[[i, j]] / (h[i] * h[j]));
                c_new[[i, j]] = (state.c[[i, j]] - step * grad).clamp(0.0, 1.0);
            }
        }
        if symmetric {
            for i in 0..n {
                for j in 0..i {
                    if i < n_obs && j < n_obs {
                        continue;
                    }
                    let v = 0.5 * (c_new[[i, j]] + c_new[[j, i]]);
                    c_new[[i, j]] = v;
                    c_new[[j, i]] = v;
                }
            }
        }
        let f_new = match (&state.f, &problem.atom.features) {
            (Some(f), Some(fbar)) => {
                let tf = t.dot(fbar);
                let mut f_new = f.clone();
                for i in n_obs..n {
                    for k in 0..f.ncols() {
                        let grad = 2.0 * w_feat * (f[[i, k]] - tf[[i, k]] / h[i]);
                        f_new[[i, k]] -= step * grad;
                    }
                }
                Some(f_new)
            }
            _ => None,
        };

        // The warm start keeps the loss monotone, the fresh solve can leave a
        // poor basin.
        let (mut t_new, mut loss_new) = solve(&c_new, &f_new, &h, &problem.atom, solver_config)?;
        if warm {
            let mut cfg = solver_config.clone();
            cfg.init = InitStrategy::Given(state.coupling.clone());
            let (t_warm, loss_warm) = solve(&c_new, &f_new, &h, &problem.atom, &cfg)?;
            if loss_warm < loss_new {
                (t_new, loss_new) = (t_warm, loss_warm);
            }
        }
        debug!("completion iteration {iterations}: loss {loss_new:e}, step {step:e}");
        if loss_new > state.loss {
            step *= 0.5;
            if step < 1e-10 {
                break;
            }
            continue;
        }
        let rel = (state.loss - loss_new) / state.loss.abs().max(f64::MIN_POSITIVE);
        state = State { c: c_new, f: f_new, coupling: t_new, loss: loss_new };
        trajectory.push(loss_new);
        if rel < gd_config.rel_tolerance {
            break;
        }
    }

    let mut structure = threshold_binary(state.c.view(), gd_config.threshold);
    structure.slice_mut(s![..n_obs, ..n_obs]).assign(&problem.observed);
    let mut relaxed = state.c;
    relaxed.slice_mut(s![..n_obs, ..n_obs]).assign(&problem.observed);
    Ok(CompletionResult {
        structure,
        relaxed,
        features: state.f,
        loss: state.loss,
        iterations,
        loss_trajectory: trajectory,
    })
}

/// Ideal block atom: ones inside blocks, zeros elsewhere, unit diagonal
/// removed when `zero_diag` is set.
pub fn block_atom(sizes: &[usize], zero_diag: bool) -> Result<DictionaryAtom> {
    let m: usize = sizes.iter().sum();
    let mut s = Array2::zeros((m, m));
    let mut start = 0;
    for &b in sizes {
        s.slice_mut(s![start..start + b, start..start + b]).fill(1.0);
        start += b;
    }
    if zero_diag {
        s.diag_mut().fill(0.0);
    }
    DictionaryAtom::new(s, None)
}

/// Keeps the first `n_obs` rows and columns of `c`.
pub fn observed_block(c: ArrayView2<f64>, n_obs: usize) -> Array2<f64> {
    c.slice(s![..n_obs, ..n_obs]).to_owned()
}

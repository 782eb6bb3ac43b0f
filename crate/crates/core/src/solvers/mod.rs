//! srGW solvers: conditional gradient, entropic mirror descent and the
//! sparsity-promoting majorization-minimization loop, plus the fused variant.
//!
//! All solvers minimize `w · ⟨L(C, C̄) ⊗ T, T⟩ + ⟨D, T⟩` over couplings whose
//! rows sum to `h`, where `w = 1` for plain srGW and `w = α` for srFGW.

mod brute;
mod cg;
mod entropic;
mod init;
mod sparse;

use std::time::Duration;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::graph::{check_simplex, SIMPLEX_TOL};
use crate::gw::{self, check_shapes, is_symmetric, SYMMETRY_TOL};

pub use brute::{brute_force_srgw, has_isometric_embedding};
pub use cg::{cg_direction, cg_linesearch, solve_srgw_cg};
pub use entropic::{scale_rows, solve_srgw_entropic};
pub use init::{initial_coupling, InitStrategy};
pub use sparse::{solve_srgw_sparse, sparsity_linearization, BaseSolver, ZERO_FLOOR, ZERO_FLOOR_CAP};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub epsilon: Option<f64>,
    pub lambda_g: Option<f64>,
    pub alpha: Option<f64>,
    pub init: InitStrategy,
    pub seed: u64,
    pub mm_max_outer: usize,
    pub mm_rel_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 1000,
            rel_tolerance: 1e-5,
            epsilon: None,
            lambda_g: None,
            alpha: None,
            init: InitStrategy::OuterRandom(0),
            seed: 0,
            mm_max_outer: 50,
            mm_rel_tolerance: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(param("max_iterations", "must be at least 1"));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(param("rel_tolerance", format!("must be positive, got {}", self.rel_tolerance)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(param("epsilon", format!("must be positive, got {eps}")));
            }
        }
        if let Some(l) = self.lambda_g {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(param("lambda_g", format!("must be nonnegative, got {l}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(param("alpha", format!("must lie in [0, 1], got {a}")));
            }
        }
        if self.mm_max_outer == 0 {
            return Err(param("mm_max_outer", "must be at least 1"));
        }
        if !(self.mm_rel_tolerance > 0.0) {
            return Err(param("mm_rel_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Accumulated wall time per solver phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub gradient: Duration,
    pub direction: Duration,
    pub linesearch: Duration,
    pub total: Duration,
}

impl PhaseTimings {
    fn absorb(&mut self, other: &PhaseTimings) {
        self.gradient += other.gradient;
        self.direction += other.direction;
        self.linesearch += other.linesearch;
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub coupling: Array2<f64>,
    pub hbar: Array1<f64>,
    /// GW (or FGW) part of the objective.
    pub loss: f64,
    /// Objective including the linear term or the sparsity penalty.
    pub regularized_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loss_trajectory: Vec<f64>,
    /// Largest `|T 1 - h|` over the stored iterates.
    pub max_marginal_error: f64,
    /// Smallest coupling entry over the stored iterates.
    pub min_entry: f64,
    pub timings: PhaseTimings,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    loss: f64,
    regularized_loss: f64,
    hbar: &'a [f64],
    support: Vec<usize>,
    iterations: usize,
    converged: bool,
}

impl SolveResult {
    /// JSON summary: loss, regularized_loss, hbar, support, iterations, converged.
    pub fn to_json(&self, support_tol: f64) -> serde_json::Value {
        let hbar = self.hbar.to_vec();
        let s = SolveSummary {
            loss: self.loss,
            regularized_loss: self.regularized_loss,
            hbar: &hbar,
            support: support(self.hbar.view(), support_tol),
            iterations: self.iterations,
            converged: self.converged,
        };
        serde_json::to_value(s).expect("summary serializes")
    }
}

/// `Tᵀ 1`.
pub fn second_marginal(t: ArrayView2<f64>) -> Array1<f64> {
    gw::column_sums(t)
}

/// Sorted indices `j` with `hbar[j] > tol`.
pub fn support(hbar: ArrayView1<f64>, tol: f64) -> Vec<usize> {
    hbar.iter().enumerate().filter(|(_, &v)| v > tol).map(|(j, _)| j).collect()
}

/// Validated problem data shared by every solver.
pub(crate) struct Problem<'a> {
    pub c: ArrayView2<'a, f64>,
    pub cbar: ArrayView2<'a, f64>,
    pub h: ArrayView1<'a, f64>,
    pub linear: Option<Array2<f64>>,
    pub weight: f64,
    pub symmetric: bool,
}

impl<'a> Problem<'a> {
    pub fn new(
        c: ArrayView2<'a, f64>,
        h: ArrayView1<'a, f64>,
        cbar: ArrayView2<'a, f64>,
        linear: Option<Array2<f64>>,
        weight: f64,
    ) -> Result<Self> {
        let (n, m) = (c.nrows(), cbar.nrows());
        check_shapes(c, cbar, Array2::<f64>::zeros((n, m)).view())?;
        if n == 0 || m == 0 {
            return Err(Error::Dimension("structures must be nonempty".into()));
        }
        if h.len() != n {
            return Err(Error::Dimension(format!("h has length {}, expected {n}", h.len())));
        }
        if c.iter().chain(cbar.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("structure matrix".into()));
        }
        check_simplex(h, SIMPLEX_TOL.max(1e-10))?;
        if let Some(d) = &linear {
            if d.dim() != (n, m) {
                return Err(Error::Dimension(format!(
                    "linear term is {:?}, expected ({n}, {m})",
                    d.dim()
                )));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("linear term".into()));
            }
        }
        let symmetric = is_symmetric(c, SYMMETRY_TOL) && is_symmetric(cbar, SYMMETRY_TOL);
        Ok(Problem { c, cbar, h, linear, weight, symmetric })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.c.nrows(), self.cbar.nrows())
    }

    /// `w ∇⟨L⊗T, T⟩ + D`.
    pub fn cost(&self, t: ArrayView2<f64>) -> Array2<f64> {
        let mut g = gw::gradient_unchecked(self.c, self.cbar, t, self.symmetric);
        if self.weight != 1.0 {
            g *= self.weight;
        }
        if let Some(d) = &self.linear {
            g += d;
        }
        g
    }

    /// Quadratic and linear parts of the objective, given the cost at `t`.
    /// Uses `⟨∇Q(T), T⟩ = 2 Q(T)`.
    pub fn parts_from_cost(&self, cost: &Array2<f64>, t: ArrayView2<f64>) -> (f64, f64) {
        let lin = self.linear_part(t);
        let quad = (gw::frobenius(cost.view(), t) - lin) / 2.0;
        (quad.max(0.0), lin)
    }

    pub fn linear_part(&self, t: ArrayView2<f64>) -> f64 {
        self.linear.as_ref().map_or(0.0, |d| gw::frobenius(d.view(), t))
    }

    /// `w ⟨L(C, C̄) ⊗ T, T⟩` recomputed from scratch.
    pub fn quadratic(&self, t: ArrayView2<f64>) -> f64 {
        self.weight * gw::gw_loss_unchecked(self.c, self.cbar, t)
    }

    pub fn check_coupling(&self, t: ArrayView2<f64>, tol: f64) -> Result<()> {
        let (n, m) = self.dims();
        if t.dim() != (n, m) {
            return Err(Error::Dimension(format!("coupling is {:?}, expected ({n}, {m})", t.dim())));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coupling".into()));
        }
        if t.iter().any(|&v| v < 0.0) {
            return Err(Error::Infeasible("coupling has negative entries".into()));
        }
        let err = gw::max_row_violation(t, self.h);
        if err > tol {
            return Err(Error::Infeasible(format!("row sums deviate from h by {err:e}")));
        }
        Ok(())
    }
}

pub(crate) fn relative_change(prev: f64, cur: f64) -> f64 {
    let diff = (prev - cur).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / prev.abs().max(f64::MIN_POSITIVE)
    }
}

/// Chooses the solver from the configuration: the MM loop when `lambda_g > 0`
/// (over mirror descent if `epsilon` is set), plain mirror descent when only
/// `epsilon` is set, conditional gradient otherwise.
pub fn solve_srgw(
    c: ArrayView2<f64>,
    h: ArrayView1<f64>,
    cbar: ArrayView2<f64>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let problem = Problem::new(c, h, cbar, None, 1.0)?;
    dispatch(&problem, config, false)
}

pub(crate) fn dispatch(problem: &Problem, config: &SolverConfig, linear_in_loss: bool) -> Result<SolveResult> {
    let base = if config.epsilon.is_some() { BaseSolver::Entropic } else { BaseSolver::Cg };
    match config.lambda_g {
        Some(l) if l > 0.0 => sparse::run(problem, config, base, linear_in_loss),
        _ => match base {
            BaseSolver::Cg => cg::run(problem, config, linear_in_loss),
            BaseSolver::Entropic => entropic::run(problem, config, linear_in_loss),
        },
    }
}

/// Fused srGW with quadratic term scaled by `alpha` and linear term
/// `(1 - alpha) M(F, F̄)`. The solver is chosen as in [`solve_srgw`].
#[allow(clippy::too_many_arguments)]
pub fn solve_srfgw(
    c: ArrayView2<f64>,
    f: ArrayView2<f64>,
    h: ArrayView1<f64>,
    cbar: ArrayView2<f64>,
    fbar: ArrayView2<f64>,
    alpha: f64,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    if f.nrows() != c.nrows() || fbar.nrows() != cbar.nrows() {
        return Err(Error::Dimension("feature rows do not match structures".into()));
    }
    let m = gw::feature_distance_matrix(f, fbar)? * (1.0 - alpha);
    let linear = if alpha == 1.0 { None } else { Some(m) };
    let problem = Problem::new(c, h, cbar, linear, alpha)?;
    dispatch(&problem, config, true)
}

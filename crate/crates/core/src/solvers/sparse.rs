use std::time::Instant;

use log::debug;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::init::initial_coupling;
use super::{cg, entropic, relative_change, PhaseTimings, Problem, SolveResult, SolverConfig};
use crate::error::{param, Result};

/// Target weights below this are treated as empty columns.
pub const ZERO_FLOOR: f64 = 1e-16;
/// Linearization entry used for empty columns.
pub const ZERO_FLOOR_CAP: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSolver {
    Cg,
    Entropic,
}

/// Tangent of `λ Σ_j √h̄_j` as an `n × m` linear cost: every row equals
/// `(λ/2) h̄_j^{-1/2}`, with empty columns set to [`ZERO_FLOOR_CAP`].
pub fn sparsity_linearization(hbar: ArrayView1<f64>, lambda_g: f64, n: usize) -> Array2<f64> {
    let col: Array1<f64> = hbar.mapv(|v| {
        if v < ZERO_FLOOR {
            ZERO_FLOOR_CAP
        } else {
            0.5 * lambda_g / v.sqrt()
        }
    });
    Array2::from_shape_fn((n, hbar.len()), |(_, j)| col[j])
}

fn penalty(hbar: ArrayView1<f64>) -> f64 {
    hbar.iter().map(|&v| v.max(0.0).sqrt()).sum()
}

/// Majorization-minimization for `GW(T) + λ_g Σ_j √h̄_j`.
///
/// Each outer step solves the base problem with the current linearization as
/// linear cost, warm-started from the previous coupling. `loss_trajectory`
/// holds the regularized objective after every outer step and `iterations`
/// counts outer steps.
pub fn solve_srgw_sparse(
    c: ArrayView2<f64>,
    h: ArrayView1<f64>,
    cbar: ArrayView2<f64>,
    config: &SolverConfig,
    base: BaseSolver,
) -> Result<SolveResult> {
    config.validate()?;
    if base == BaseSolver::Entropic && config.epsilon.is_none() {
        return Err(param("epsilon", "required by the entropic base solver"));
    }
    let problem = Problem::new(c, h, cbar, None, 1.0)?;
    run(&problem, config, base, false)
}

pub(crate) fn run(
    problem: &Problem,
    config: &SolverConfig,
    base: BaseSolver,
    linear_in_loss: bool,
) -> Result<SolveResult> {
    let start = Instant::now();
    let lambda = config.lambda_g.unwrap_or(0.0);
    let inner = |p: &Problem, t: Array2<f64>| match base {
        BaseSolver::Cg => cg::iterate(p, config, t, linear_in_loss),
        BaseSolver::Entropic => entropic::iterate(p, config, t, linear_in_loss),
    };
    if lambda == 0.0 {
        return match base {
            BaseSolver::Cg => cg::run(problem, config, linear_in_loss),
            BaseSolver::Entropic => entropic::run(problem, config, linear_in_loss),
        };
    }
    let (n, m) = problem.dims();
    let t0 = initial_coupling(&config.init, problem.c, problem.h, m, config.seed)?;

    let mut surrogate = Problem {
        c: problem.c,
        cbar: problem.cbar,
        h: problem.h,
        linear: problem.linear.clone(),
        weight: problem.weight,
        symmetric: problem.symmetric,
    };
    let mut current = inner(&surrogate, t0)?;
    let mut timings = PhaseTimings::default();
    timings.absorb(&current.timings);
    let base_loss = |r: &SolveResult| {
        let t = r.coupling.view();
        problem.quadratic(t) + if linear_in_loss { problem.linear_part(t) } else { 0.0 }
    };
    let objective = |r: &SolveResult| {
        let t = r.coupling.view();
        problem.quadratic(t) + problem.linear_part(t) + lambda * penalty(r.hbar.view())
    };
    let mut value = objective(&current);
    let mut trajectory = vec![value];
    let mut max_marginal_error = current.max_marginal_error;
    let mut min_entry = current.min_entry;
    let mut converged = false;
    let mut outer = 1;

    while outer < config.mm_max_outer {
        outer += 1;
        let reg = sparsity_linearization(current.hbar.view(), lambda, n);
        surrogate.linear = Some(match &problem.linear {
            Some(d) => d + &reg,
            None => reg,
        });
        let next = inner(&surrogate, current.coupling.clone())?;
        timings.absorb(&next.timings);
        max_marginal_error = max_marginal_error.max(next.max_marginal_error);
        min_entry = min_entry.min(next.min_entry);
        let next_value = objective(&next);
        if next_value > value {
            // keep the previous iterate; the majorizer cannot improve further
            converged = true;
            break;
        }
        let change = relative_change(value, next_value);
        trajectory.push(next_value);
        value = next_value;
        current = next;
        if change < config.mm_rel_tolerance {
            converged = true;
            break;
        }
    }
    debug!("sparse MM finished after {outer} outer steps, objective {value:e}");
    timings.total = start.elapsed();
    let loss = base_loss(&current);
    Ok(SolveResult {
        coupling: current.coupling,
        hbar: current.hbar,
        loss,
        regularized_loss: value,
        iterations: outer,
        converged,
        loss_trajectory: trajectory,
        max_marginal_error,
        min_entry,
        timings,
    })
}

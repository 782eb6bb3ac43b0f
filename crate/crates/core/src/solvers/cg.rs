use std::time::Instant;

use log::{debug, warn};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::init::initial_coupling;
use super::{relative_change, second_marginal, PhaseTimings, Problem, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::gw;

/// Row-wise linear minimization oracle: all of `h_i` goes to the cheapest
/// column of row `i`, lowest index on ties.
pub fn cg_direction(cost: ArrayView2<f64>, h: ArrayView1<f64>) -> Result<Array2<f64>> {
    if cost.nrows() != h.len() {
        return Err(Error::Dimension(format!(
            "cost has {} rows, h has length {}",
            cost.nrows(),
            h.len()
        )));
    }
    if cost.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("NaN in direction cost".into()));
    }
    Ok(direction_unchecked(cost, h))
}

fn direction_unchecked(cost: ArrayView2<f64>, h: ArrayView1<f64>) -> Array2<f64> {
    let mut x = Array2::zeros(cost.dim());
    for (i, row) in cost.axis_iter(Axis(0)).enumerate() {
        let mut best = 0;
        let mut best_v = row[0];
        for (k, &v) in row.iter().enumerate().skip(1) {
            if v < best_v {
                best = k;
                best_v = v;
            }
        }
        x[[i, best]] = h[i];
    }
    x
}

/// Exact minimizer over `[0, 1]` of `a γ² + b γ` for the step `T + γ (X - T)`.
pub fn cg_linesearch(
    c: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    x: ArrayView2<f64>,
    d: Option<ArrayView2<f64>>,
) -> Result<f64> {
    let h = t.sum_axis(Axis(1));
    let problem = Problem::new(c, h.view(), cbar, d.map(|d| d.to_owned()), 1.0)?;
    problem.check_coupling(t, 1e-10)?;
    problem.check_coupling(x, 1e-10)?;
    let cost = problem.cost(t);
    Ok(linesearch(&problem, &cost, t, x).0)
}

/// Returns `(γ, a, b)`.
pub(crate) fn linesearch(
    problem: &Problem,
    cost: &Array2<f64>,
    t: ArrayView2<f64>,
    x: ArrayView2<f64>,
) -> (f64, f64, f64) {
    let delta = &x - &t;
    let a = problem.weight
        * gw::frobenius(gw::tensor_product_raw(problem.c, problem.cbar, delta.view()).view(), delta.view());
    let b = gw::frobenius(cost.view(), delta.view());
    let gamma = if a > 0.0 {
        (-b / (2.0 * a)).clamp(0.0, 1.0)
    } else if a + b < 0.0 {
        1.0
    } else {
        0.0
    };
    (gamma, a, b)
}

/// Conditional-gradient srGW solver with an optional linear term `D`.
///
/// `loss` in the result is the GW part; `regularized_loss` adds `⟨D, T⟩`.
pub fn solve_srgw_cg(
    c: ArrayView2<f64>,
    h: ArrayView1<f64>,
    cbar: ArrayView2<f64>,
    d: Option<ArrayView2<f64>>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let problem = Problem::new(c, h, cbar, d.map(|d| d.to_owned()), 1.0)?;
    run(&problem, config, false)
}

pub(crate) fn run(problem: &Problem, config: &SolverConfig, linear_in_loss: bool) -> Result<SolveResult> {
    let (_, m) = problem.dims();
    let t = initial_coupling(&config.init, problem.c, problem.h, m, config.seed)?;
    iterate(problem, config, t, linear_in_loss)
}

pub(crate) fn iterate(
    problem: &Problem,
    config: &SolverConfig,
    mut t: Array2<f64>,
    linear_in_loss: bool,
) -> Result<SolveResult> {
    let start = Instant::now();
    problem.check_coupling(t.view(), 1e-8)?;
    let mut timings = PhaseTimings::default();

    let clock = Instant::now();
    let mut cost = problem.cost(t.view());
    timings.gradient += clock.elapsed();
    let (mut quad, mut lin) = problem.parts_from_cost(&cost, t.view());
    let mut objective = quad + lin;
    let mut trajectory = vec![objective];
    let mut max_marginal_error = gw::max_row_violation(t.view(), problem.h);
    let mut min_entry = t.iter().copied().fold(f64::INFINITY, f64::min);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let clock = Instant::now();
        let x = direction_unchecked(cost.view(), problem.h);
        timings.direction += clock.elapsed();
        if iterations == 1 && x.iter().zip(t.iter()).all(|(a, b)| (a - b).abs() <= 1e-15) {
            warn!("first conditional-gradient direction equals the initial coupling");
        }

        let clock = Instant::now();
        let (gamma, _, _) = linesearch(problem, &cost, t.view(), x.view());
        if gamma > 0.0 {
            Zip::from(&mut t).and(&x).for_each(|tv, &xv| *tv = (1.0 - gamma) * *tv + gamma * xv);
        }
        timings.linesearch += clock.elapsed();

        if gamma > 0.0 {
            let clock = Instant::now();
            cost = problem.cost(t.view());
            timings.gradient += clock.elapsed();
        }
        (quad, lin) = problem.parts_from_cost(&cost, t.view());
        let next = quad + lin;
        trajectory.push(next);
        max_marginal_error = max_marginal_error.max(gw::max_row_violation(t.view(), problem.h));
        min_entry = min_entry.min(t.iter().copied().fold(f64::INFINITY, f64::min));
        let change = relative_change(objective, next);
        objective = next;
        if gamma == 0.0 || change < config.rel_tolerance {
            converged = true;
            break;
        }
    }
    debug!("cg finished after {iterations} iterations, objective {objective:e}");
    timings.total = start.elapsed();
    let hbar = second_marginal(t.view());
    let loss = if linear_in_loss { quad + lin } else { quad };
    Ok(SolveResult {
        coupling: t,
        hbar,
        loss,
        regularized_loss: quad + lin,
        iterations,
        converged,
        loss_trajectory: trajectory,
        max_marginal_error,
        min_entry,
        timings,
    })
}

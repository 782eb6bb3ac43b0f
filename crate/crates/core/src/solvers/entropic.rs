use std::time::Instant;

use log::debug;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::init::{initial_coupling, InitStrategy};
use super::{relative_change, second_marginal, PhaseTimings, Problem, SolveResult, SolverConfig};
use crate::error::{param, Error, Result};
use crate::gw;

const LOG_FLOOR: f64 = 1e-300;

/// `diag(h / K 1) K`.
pub fn scale_rows(k: ArrayView2<f64>, h: ArrayView1<f64>) -> Result<Array2<f64>> {
    if k.nrows() != h.len() {
        return Err(Error::Dimension(format!("K has {} rows, h has length {}", k.nrows(), h.len())));
    }
    let mut t = k.to_owned();
    for (mut row, &hi) in t.axis_iter_mut(Axis(0)).zip(h.iter()) {
        let s = row.sum();
        if !(s > 0.0) {
            return Err(Error::InvalidInput("kernel row sums must be positive".into()));
        }
        row.mapv_inplace(|v| v * hi / s);
    }
    Ok(t)
}

/// Mirror-descent srGW solver in the KL geometry.
///
/// Each step sets `log K = log T - (∇ + D) / ε` and rescales the rows of `K`
/// to `h` in log space. The best iterate seen, including the initial one, is
/// returned.
pub fn solve_srgw_entropic(
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
    if config.epsilon.is_none() {
        return Err(param("epsilon", "required by the entropic solver"));
    }
    if let InitStrategy::Given(t0) = &config.init {
        if problem
            .h
            .iter()
            .zip(t0.axis_iter(Axis(0)))
            .any(|(&hi, row)| hi > 0.0 && row.iter().any(|&v| v == 0.0))
        {
            return Err(Error::Infeasible("entropic initialization has zero entries".into()));
        }
    }
    let (_, m) = problem.dims();
    let t = initial_coupling(&config.init, problem.c, problem.h, m, config.seed)?;
    iterate(problem, config, t, linear_in_loss)
}

/// Mirror-descent iterations from a feasible start; zeros are floored.
pub(crate) fn iterate(
    problem: &Problem,
    config: &SolverConfig,
    mut t: Array2<f64>,
    linear_in_loss: bool,
) -> Result<SolveResult> {
    let start = Instant::now();
    let eps = config
        .epsilon
        .ok_or_else(|| param("epsilon", "required by the entropic solver"))?;
    problem.check_coupling(t.view(), 1e-8)?;
    let mut log_t = t.mapv(|v| v.max(LOG_FLOOR).ln());
    let mut timings = PhaseTimings::default();

    let clock = Instant::now();
    let mut cost = problem.cost(t.view());
    timings.gradient += clock.elapsed();
    let (mut quad, mut lin) = problem.parts_from_cost(&cost, t.view());
    let mut objective = quad + lin;
    let mut trajectory = vec![objective];
    let mut best = (objective, quad, lin, t.clone());
    let mut max_marginal_error = gw::max_row_violation(t.view(), problem.h);
    let mut min_entry = t.iter().copied().fold(f64::INFINITY, f64::min);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let clock = Instant::now();
        Zip::from(&mut log_t).and(&cost).for_each(|l, &g| *l -= g / eps);
        for ((mut row, mut trow), &hi) in log_t
            .axis_iter_mut(Axis(0))
            .zip(t.axis_iter_mut(Axis(0)))
            .zip(problem.h.iter())
        {
            if hi == 0.0 {
                row.fill(f64::NEG_INFINITY);
                trow.fill(0.0);
                continue;
            }
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|&v| (v - mx).exp()).sum::<f64>().ln();
            let shift = hi.ln() - lse;
            row.mapv_inplace(|v| v + shift);
            Zip::from(&mut trow).and(&row).for_each(|tv, &lv| *tv = lv.exp());
        }
        timings.direction += clock.elapsed();
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("mirror descent produced non-finite entries".into()));
        }

        let clock = Instant::now();
        cost = problem.cost(t.view());
        timings.gradient += clock.elapsed();
        (quad, lin) = problem.parts_from_cost(&cost, t.view());
        let next = quad + lin;
        trajectory.push(next);
        max_marginal_error = max_marginal_error.max(gw::max_row_violation(t.view(), problem.h));
        min_entry = min_entry.min(t.iter().copied().fold(f64::INFINITY, f64::min));
        if next < best.0 {
            best = (next, quad, lin, t.clone());
        }
        let change = relative_change(objective, next);
        objective = next;
        if change < config.rel_tolerance {
            converged = true;
            break;
        }
    }
    debug!("mirror descent finished after {iterations} iterations, objective {objective:e}");
    timings.total = start.elapsed();
    let (_, quad, lin, t) = best;
    let hbar = second_marginal(t.view());
    Ok(SolveResult {
        coupling: t,
        hbar,
        loss: if linear_in_loss { quad + lin } else { quad },
        regularized_loss: quad + lin,
        iterations,
        converged,
        loss_trajectory: trajectory,
        max_marginal_error,
        min_entry,
        timings,
    })
}

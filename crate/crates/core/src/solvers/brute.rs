//! Exhaustive references for tiny instances.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{param, Error, Result};
use crate::gw;

const MAX_SIDE: usize = 4;
const MAX_RESOLUTION: usize = 21;

/// Estimates srGW as the minimum over a grid of target weights `h̄` of the
/// GW objective evaluated at every vertex of the transport polytope
/// `U(h, h̄)`.
///
/// `grid_resolution` is the number of grid points per simplex edge. The
/// result is an upper bound on the true value, tight up to the grid spacing
/// whenever the optimum is attained at a polytope vertex.
pub fn brute_force_srgw(
    c: ArrayView2<f64>,
    h: ArrayView1<f64>,
    cbar: ArrayView2<f64>,
    grid_resolution: usize,
) -> Result<f64> {
    let (n, m) = (c.nrows(), cbar.nrows());
    if n > MAX_SIDE || m > MAX_SIDE {
        return Err(Error::InvalidInput(format!(
            "brute force supports at most {MAX_SIDE} nodes per side, got {n} and {m}"
        )));
    }
    if !(2..=MAX_RESOLUTION).contains(&grid_resolution) {
        return Err(param("grid_resolution", format!("must lie in [2, {MAX_RESOLUTION}]")));
    }
    gw::check_shapes(c, cbar, Array2::<f64>::zeros((n, m)).view())?;
    if h.len() != n {
        return Err(Error::Dimension(format!("h has length {}, expected {n}", h.len())));
    }
    let trees = spanning_trees(n, m);
    let steps = grid_resolution - 1;
    let mut best = f64::INFINITY;
    for parts in compositions(steps, m) {
        let hbar = Array1::from_iter(parts.iter().map(|&p| p as f64 / steps as f64));
        for tree in &trees {
            if let Some(t) = tree_vertex(tree, h, hbar.view()) {
                best = best.min(gw::gw_loss_unchecked(c, cbar, t.view()));
            }
        }
    }
    Ok(best)
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative
/// integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Spanning trees of the complete bipartite graph `K_{n,m}` as edge lists.
fn spanning_trees(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |k| (i, k))).collect();
    let need = n + m - 1;
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(need);
    choose(&edges, 0, need, &mut chosen, &mut |sel| {
        if is_spanning_tree(sel, n, m) {
            out.push(sel.to_vec());
        }
    });
    out
}

fn choose<F: FnMut(&[(usize, usize)])>(
    edges: &[(usize, usize)],
    from: usize,
    left: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if left == 0 {
        visit(chosen);
        return;
    }
    for idx in from..=edges.len() - left {
        chosen.push(edges[idx]);
        choose(edges, idx + 1, left - 1, chosen, visit);
        chosen.pop();
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

fn is_spanning_tree(edges: &[(usize, usize)], n: usize, m: usize) -> bool {
    let mut parent: Vec<usize> = (0..n + m).collect();
    for &(i, k) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, n + k));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Solves the tree-supported transport plan by peeling leaves; `None` if some
/// flow is negative.
fn tree_vertex(tree: &[(usize, usize)], h: ArrayView1<f64>, hbar: ArrayView1<f64>) -> Option<Array2<f64>> {
    let (n, m) = (h.len(), hbar.len());
    let mut supply: Vec<f64> = h.iter().chain(hbar.iter()).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, k) in tree {
        degree[i] += 1;
        degree[n + k] += 1;
    }
    let mut alive = vec![true; tree.len()];
    let mut t = Array2::zeros((n, m));
    for _ in 0..tree.len() {
        let (e, leaf_is_row) = tree.iter().enumerate().filter(|(e, _)| alive[*e]).find_map(|(e, &(i, k))| {
            if degree[i] == 1 {
                Some((e, true))
            } else if degree[n + k] == 1 {
                Some((e, false))
            } else {
                None
            }
        })?;
        let (i, k) = tree[e];
        let (leaf, other) = if leaf_is_row { (i, n + k) } else { (n + k, i) };
        let flow = supply[leaf];
        if flow < -1e-12 {
            return None;
        }
        let flow = flow.max(0.0);
        t[[i, k]] = flow;
        supply[leaf] = 0.0;
        supply[other] -= flow;
        degree[i] -= 1;
        degree[n + k] -= 1;
        alive[e] = false;
    }
    Some(t)
}

/// Whether some map `σ: [n] → [m]` satisfies `C_ij = C̄_{σ(i) σ(j)}` for all
/// `i, j` within `tol`, which is exactly when srGW can vanish.
pub fn has_isometric_embedding(c: ArrayView2<f64>, cbar: ArrayView2<f64>, tol: f64) -> Result<bool> {
    let (n, m) = (c.nrows(), cbar.nrows());
    if (m as f64).powi(n as i32) > 1e7 {
        return Err(Error::InvalidInput(format!("{m}^{n} maps are too many to enumerate")));
    }
    let mut sigma = vec![0usize; n];
    Ok(extend(c, cbar, tol, &mut sigma, 0))
}

fn extend(c: ArrayView2<f64>, cbar: ArrayView2<f64>, tol: f64, sigma: &mut [usize], depth: usize) -> bool {
    if depth == sigma.len() {
        return true;
    }
    for k in 0..cbar.nrows() {
        sigma[depth] = k;
        let consistent = (0..=depth).all(|j| {
            (c[[depth, j]] - cbar[[k, sigma[j]]]).abs() <= tol
                && (c[[j, depth]] - cbar[[sigma[j], k]]).abs() <= tol
        });
        if consistent && extend(c, cbar, tol, sigma, depth + 1) {
            return true;
        }
    }
    false
}

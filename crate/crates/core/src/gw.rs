//! Squared-loss Gromov-Wasserstein kernels.
//!
//! Every quantity here is expressed through the tensor-matrix product
//! `(L(C, C̄) ⊗ T)_ik = Σ_jl (C_ij - C̄_kl)² T_jl`, evaluated with the
//! factorization `(C⊙C) p 1ᵀ + 1 qᵀ (C̄⊙C̄)ᵀ - 2 C T C̄ᵀ` where `p = T 1` and
//! `q = Tᵀ 1`. This costs `O(n²m + nm²)` instead of `O(n²m²)`.
//!
//! The asymmetric gradient needs two such products (one for `C`, `C̄` and one
//! for their transposes), so it is about twice as expensive as the symmetric
//! one.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{param, Error, Result};
use crate::graph::max_asymmetry;

/// Symmetry tolerance for `assume_symmetric` gradients.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn check_shapes(c: ArrayView2<f64>, cbar: ArrayView2<f64>, t: ArrayView2<f64>) -> Result<()> {
    let (n, n2) = c.dim();
    let (m, m2) = cbar.dim();
    if n != n2 || m != m2 {
        return Err(Error::Dimension(format!(
            "structures must be square, got {n}x{n2} and {m}x{m2}"
        )));
    }
    if t.dim() != (n, m) {
        return Err(Error::Dimension(format!(
            "coupling is {:?}, expected ({n}, {m})",
            t.dim()
        )));
    }
    Ok(())
}

/// Unclamped tensor product; linear in `t`, which the line search relies on.
pub(crate) fn tensor_product_raw(
    c: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
) -> Array2<f64> {
    let p = t.sum_axis(Axis(1));
    let q = t.sum_axis(Axis(0));
    let c2p: Array1<f64> = c.mapv(|x| x * x).dot(&p);
    let cbar2q: Array1<f64> = cbar.mapv(|x| x * x).dot(&q);
    let mut out = c.dot(&t).dot(&cbar.t());
    out *= -2.0;
    Zip::indexed(&mut out).for_each(|(i, k), v| *v += c2p[i] + cbar2q[k]);
    out
}

/// `L(C, C̄) ⊗ T` for the squared loss. Negative round-off is clamped to 0.
pub fn gw_tensor_product(
    c: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    check_shapes(c, cbar, t)?;
    let mut out = tensor_product_raw(c, cbar, t);
    out.mapv_inplace(|v| v.max(0.0));
    Ok(out)
}

pub(crate) fn frobenius(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

/// `⟨L(C, C̄) ⊗ T, T⟩ = Σ_ijkl (C_ij - C̄_kl)² T_ik T_jl`.
pub fn gw_loss(c: ArrayView2<f64>, cbar: ArrayView2<f64>, t: ArrayView2<f64>) -> Result<f64> {
    check_shapes(c, cbar, t)?;
    Ok(gw_loss_unchecked(c, cbar, t))
}

pub(crate) fn gw_loss_unchecked(c: ArrayView2<f64>, cbar: ArrayView2<f64>, t: ArrayView2<f64>) -> f64 {
    frobenius(tensor_product_raw(c, cbar, t).view(), t).max(0.0)
}

pub fn is_symmetric(m: ArrayView2<f64>, tol: f64) -> bool {
    m.nrows() == m.ncols() && max_asymmetry(m) <= tol
}

/// Gradient of [`gw_loss`] with respect to `T`.
///
/// With `assume_symmetric` the factored form `2 L(C, C̄) ⊗ T` is used, which
/// requires both structures to be symmetric; otherwise
/// `L(C, C̄) ⊗ T + L(Cᵀ, C̄ᵀ) ⊗ T`.
pub fn gw_gradient(
    c: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    assume_symmetric: bool,
) -> Result<Array2<f64>> {
    check_shapes(c, cbar, t)?;
    if assume_symmetric {
        let dev = max_asymmetry(c).max(max_asymmetry(cbar));
        if dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(dev));
        }
    }
    Ok(gradient_unchecked(c, cbar, t, assume_symmetric))
}

pub(crate) fn gradient_unchecked(
    c: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    symmetric: bool,
) -> Array2<f64> {
    if symmetric {
        let mut g = tensor_product_raw(c, cbar, t);
        g *= 2.0;
        g
    } else {
        tensor_product_raw(c, cbar, t) + tensor_product_raw(c.t(), cbar.t(), t)
    }
}

/// Squared Euclidean distances between the rows of `f` and `fbar`.
pub fn feature_distance_matrix(f: ArrayView2<f64>, fbar: ArrayView2<f64>) -> Result<Array2<f64>> {
    if f.ncols() != fbar.ncols() {
        return Err(Error::Dimension(format!(
            "feature dimensions differ: {} vs {}",
            f.ncols(),
            fbar.ncols()
        )));
    }
    let fn2: Array1<f64> = f.map_axis(Axis(1), |r| r.dot(&r));
    let fbn2: Array1<f64> = fbar.map_axis(Axis(1), |r| r.dot(&r));
    let mut m = f.dot(&fbar.t());
    m *= -2.0;
    Zip::indexed(&mut m).for_each(|(i, j), v| *v = (*v + fn2[i] + fbn2[j]).max(0.0));
    Ok(m)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// `⟨(1-α) M(F, F̄) + α L(C, C̄) ⊗ T, T⟩`.
pub fn fgw_loss(
    c: ArrayView2<f64>,
    f: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    fbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_shapes(c, cbar, t)?;
    check_feature_rows(f, fbar, t)?;
    let m = feature_distance_matrix(f, fbar)?;
    Ok((1.0 - alpha) * frobenius(m.view(), t) + alpha * gw_loss_unchecked(c, cbar, t))
}

/// `α G + (1-α) M(F, F̄)` with `G` the GW gradient.
pub fn fgw_gradient(
    c: ArrayView2<f64>,
    f: ArrayView2<f64>,
    cbar: ArrayView2<f64>,
    fbar: ArrayView2<f64>,
    t: ArrayView2<f64>,
    alpha: f64,
) -> Result<Array2<f64>> {
    check_alpha(alpha)?;
    check_shapes(c, cbar, t)?;
    check_feature_rows(f, fbar, t)?;
    let symmetric = is_symmetric(c, SYMMETRY_TOL) && is_symmetric(cbar, SYMMETRY_TOL);
    let g = gradient_unchecked(c, cbar, t, symmetric);
    let m = feature_distance_matrix(f, fbar)?;
    Ok(g * alpha + m * (1.0 - alpha))
}

fn check_feature_rows(f: ArrayView2<f64>, fbar: ArrayView2<f64>, t: ArrayView2<f64>) -> Result<()> {
    if f.nrows() != t.nrows() || fbar.nrows() != t.ncols() {
        return Err(Error::Dimension(format!(
            "features ({}, {}) do not match coupling {:?}",
            f.nrows(),
            fbar.nrows(),
            t.dim()
        )));
    }
    Ok(())
}

/// Generalized KL divergence `Σ T log(T / Tref) - T + Tref`, with `0 log 0 = 0`.
pub fn kl_divergence(t: ArrayView2<f64>, tref: ArrayView2<f64>) -> Result<f64> {
    if t.dim() != tref.dim() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", t.dim(), tref.dim())));
    }
    let mut acc = 0.0;
    for (&x, &r) in t.iter().zip(tref.iter()) {
        if x < 0.0 || r < 0.0 {
            return Err(Error::InvalidInput("KL arguments must be nonnegative".into()));
        }
        if x > 0.0 {
            if r == 0.0 {
                return Err(Error::InvalidInput(
                    "reference has a zero where the plan is positive".into(),
                ));
            }
            acc += x * (x / r).ln() - x + r;
        } else {
            acc += r;
        }
    }
    Ok(acc.max(0.0))
}

/// Second marginal `Tᵀ 1`.
pub(crate) fn column_sums(t: ArrayView2<f64>) -> Array1<f64> {
    t.sum_axis(Axis(0))
}

pub(crate) fn max_row_violation(t: ArrayView2<f64>, h: ArrayView1<f64>) -> f64 {
    t.axis_iter(Axis(0))
        .zip(h.iter())
        .map(|(r, &hi)| (r.sum() - hi).abs())
        .fold(0.0, f64::max)
}

//! Dense linear-algebra helpers used throughout: rank decisions, minimal-norm
//! solves, kernels, and singular values measured in non-Euclidean metrics.
//!
//! Everything here is a thin layer over dense factorizations; the numerical
//! conventions (relative rank cutoff [`crate::RANK_TOL`], minimal-norm
//! pseudoinverse solutions) are centralized so callers agree on them.
//!
//! Singular values and pseudoinverses are computed from the symmetric
//! eigendecomposition of the smaller Gram matrix (`aᵀa` or `a aᵀ`) instead of
//! a bidiagonal SVD: the eigensolver is dependable on the small integer
//! incidence matrices with tightly clustered singular values that dominate
//! this crate, where the bidiagonal iteration can silently lose accuracy.
//! The price is a resolution floor near the square root of machine epsilon,
//! so relative cutoffs are clamped to [`GRAM_SIGMA_FLOOR`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::RANK_TOL;

/// Smallest trustworthy relative singular value under the Gram-matrix route:
/// eigenvalues of `aᵀa` carry O(ε·λmax) noise, which reads as singular values
/// of order 1e-8·σmax. Cutoffs below this would count noise as rank.
pub const GRAM_SIGMA_FLOOR: f64 = 1e-7;

fn sigma_cutoff(rel_tol: f64) -> f64 {
    rel_tol.max(GRAM_SIGMA_FLOOR)
}

/// Eigenvalues (clamped at zero, descending) and matching eigenvectors of a
/// symmetric matrix.
fn gram_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = g.symmetric_eigen();
    let m = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut vecs = DMatrix::zeros(m, m);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Singular values of `a`, descending. Empty input gives an empty list.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let g = if a.nrows() >= a.ncols() { a.transpose() * a } else { a * a.transpose() };
    let (vals, _) = gram_eigen(g);
    vals.into_iter().map(f64::sqrt).collect()
}

/// Numerical rank with a relative cutoff (`rel_tol` times the largest
/// singular value, clamped to the Gram resolution floor).
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        None => 0,
        Some(&smax) if smax <= 0.0 => 0,
        Some(&smax) => sv.iter().filter(|&&s| s > sigma_cutoff(rel_tol) * smax).count(),
    }
}

/// Minimal-norm least-squares solution of `a x = b` via the pseudoinverse.
/// Returns `(x, residual_2norm)`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let (x, res) = pinv_solve_mat(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
    (DVector::from_column_slice(x.column(0).as_slice()), res)
}

/// Minimal-norm least-squares solution of `a X = B` (multiple right-hand
/// sides). Returns `(X, ||a X - B||_F)`.
pub fn pinv_solve_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    assert_eq!(a.nrows(), b.nrows(), "rhs row count must match matrix");
    if a.ncols() == 0 {
        return (DMatrix::zeros(0, b.ncols()), b.norm());
    }
    if a.nrows() == 0 {
        return (DMatrix::zeros(a.ncols(), b.ncols()), 0.0);
    }
    let tall = a.nrows() >= a.ncols();
    let g = if tall { a.transpose() * a } else { a * a.transpose() };
    let (vals, vecs) = gram_eigen(g);
    let lmax = vals.first().copied().unwrap_or(0.0);
    let cut = sigma_cutoff(RANK_TOL);
    let thresh = cut * cut * lmax;
    // A = UΣVᵀ: tall side uses x = V Λ⁺ Vᵀ (aᵀB), wide side x = aᵀ U Λ⁺ Uᵀ B;
    // both stay inside the row space, keeping the solution minimal-norm.
    let mut proj =
        if tall { vecs.transpose() * (a.transpose() * b) } else { vecs.transpose() * b };
    for (i, &l) in vals.iter().enumerate() {
        let f = if l > thresh && l > 0.0 { 1.0 / l } else { 0.0 };
        proj.row_mut(i).scale_mut(f);
    }
    let x = if tall { &vecs * proj } else { a.transpose() * (&vecs * proj) };
    let res = (a * &x - b).norm();
    (x, res)
}

/// Orthonormal basis of the (numerical) kernel of `a`, as columns. Uses the
/// symmetric eigendecomposition of `aᵀa` so wide matrices are handled.
pub fn kernel_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let lmax = eig.eigenvalues.max().max(0.0);
    let cut = sigma_cutoff(rel_tol);
    let thresh = cut * cut * lmax;
    let mut cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= thresh).collect();
    cols.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &eig.eigenvectors.column(i));
    }
    out
}

/// Cholesky factorization of a symmetric positive-definite Gram matrix, with
/// a descriptive error when the matrix is numerically indefinite.
pub fn cholesky_spd(g: &DMatrix<f64>, label: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(g.clone())
        .ok_or_else(|| Error::IllConditioned(format!("{label}: Gram matrix is not positive definite")))
}

/// Singular values of the linear map with coefficient matrix `a`, measured
/// from the metric `g_dom` on the domain to `g_cod` on the codomain:
/// the stationary values of sqrt((a x)ᵀ g_cod (a x) / xᵀ g_dom x).
pub fn metric_singular_values(
    a: &DMatrix<f64>,
    g_dom: &DMatrix<f64>,
    g_cod: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    assert_eq!(a.ncols(), g_dom.nrows(), "domain Gram size");
    assert_eq!(a.nrows(), g_cod.nrows(), "codomain Gram size");
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let l_dom = cholesky_spd(g_dom, "metric-singular-values domain")?;
    let l_cod = cholesky_spd(g_cod, "metric-singular-values codomain")?;
    // B = L_codᵀ · A · L_dom⁻ᵀ, computed via a triangular solve.
    let xt = l_dom
        .l()
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::Solve("triangular solve in metric SVD".into()))?;
    let b = l_cod.l().transpose() * xt.transpose();
    Ok(singular_values(&b))
}

/// Largest generalized eigenvalue of the SPD pencil `g_num x = λ g_den x`.
pub fn pencil_max(g_num: &DMatrix<f64>, g_den: &DMatrix<f64>) -> Result<f64> {
    assert_eq!(g_num.nrows(), g_den.nrows());
    if g_num.nrows() == 0 {
        return Ok(0.0);
    }
    let l = cholesky_spd(g_den, "pencil denominator")?;
    let y = l
        .l()
        .solve_lower_triangular(&g_num.clone())
        .ok_or_else(|| Error::Solve("pencil triangular solve".into()))?;
    let c = l
        .l()
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Solve("pencil triangular solve".into()))?;
    // c = L⁻¹ g_num L⁻ᵀ up to symmetrization noise.
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigen().eigenvalues.max())
}

/// Smallest and largest singular value of `a` above the relative rank cutoff
/// (clamped to the Gram resolution floor), together with the numerical rank:
/// `(s_min_nonzero, s_max, rank)`. Returns `None` when the matrix is zero or
/// empty.
pub fn extreme_singular_values(a: &DMatrix<f64>, rel_tol: f64) -> Option<(f64, f64, usize)> {
    let sv = singular_values(a);
    let &smax = sv.first()?;
    if smax <= 0.0 {
        return None;
    }
    let nonzero: Vec<f64> =
        sv.into_iter().filter(|&s| s > sigma_cutoff(rel_tol) * smax).collect();
    let rank = nonzero.len();
    let smin = *nonzero.last()?;
    Some((smin, smax, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_matches_direct_least_norm_oracle() {
        // Oracle: for full-row-rank A, the minimal-norm solution of Ax=b is
        // Aᵀ(AAᵀ)⁻¹b, computed here with a direct inverse.
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 3.0, 2.0]);
        let b = DVector::from_column_slice(&[1.0, -2.0]);
        let (x, res) = pinv_solve(&a, &b);
        assert!(res < 1e-12);
        let aat = &a * a.transpose();
        let oracle = a.transpose() * aat.try_inverse().unwrap() * &b;
        assert_relative_eq!(x, oracle, epsilon = 1e-12);
    }

    #[test]
    fn pinv_handles_clustered_singular_values() {
        // Incidence coboundaries carry repeated singular values (this one has
        // a triple and a quadruple); the solve must still hit exact ranges.
        let mesh = crate::meshgen::pyramid().unwrap();
        let complex = crate::topology::simplicial_complex(&mesh);
        let a = complex.boundary[2].transpose().to_dense();
        let x0 = DVector::from_fn(a.ncols(), |i, _| ((i * 7 + 3) % 5) as f64 - 2.0);
        let b = &a * &x0;
        let (x, res) = pinv_solve(&a, &b);
        assert!(res < 1e-10, "least-squares residual {res:.3e}");
        assert!((&a * &x - &b).amax() < 1e-10);
    }

    #[test]
    fn rank_and_kernel_agree() {
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 2.0, 0.0],
        );
        let r = rank(&a, 1e-10);
        assert_eq!(r, 2);
        let k = kernel_basis(&a, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).norm() < 1e-9);
    }

    #[test]
    fn metric_singular_values_reduce_to_plain_svd_with_identity_grams() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, -1.0, 1.0]);
        let id2 = DMatrix::identity(2, 2);
        let id3 = DMatrix::identity(3, 3);
        let mv = metric_singular_values(&a, &id3, &id2).unwrap();
        let sv = singular_values(&a);
        for (x, y) in mv.iter().zip(sv.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn pencil_max_matches_hand_value() {
        // pencil: diag(4,1) vs diag(1,1) → λmax = 4
        let gn = DMatrix::from_diagonal(&DVector::from_column_slice(&[4.0, 1.0]));
        let gd = DMatrix::identity(2, 2);
        assert_relative_eq!(pencil_max(&gn, &gd).unwrap(), 4.0, epsilon = 1e-12);
    }
}

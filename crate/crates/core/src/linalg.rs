//! Dense linear-algebra kernel.
//!
//! Everything is expressed on `nalgebra::DMatrix<f64>`. The routines here are
//! the building blocks for the dominance solver: orthonormal kernel bases,
//! right inverses of surjective maps, symmetric and generalized symmetric
//! eigenproblems, and SPD solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Relative singular-value cut used for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Smallest admissible Cholesky pivot, relative to the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-14;

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<DenseMatrix> {
    if rows * cols != entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// Gram matrix MᵀM, symmetrized against rounding.
pub fn gram(m: &DenseMatrix) -> DenseMatrix {
    symmetrize(&(m.transpose() * m))
}

/// Singular values and right singular vectors of `m`, with enough rows padded
/// in that Vᵀ is square (so the full kernel is available).
fn full_right_svd(m: &DenseMatrix) -> (DVector<f64>, DenseMatrix) {
    let (r, n) = m.shape();
    let padded = if r < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    (svd.singular_values, v_t)
}

/// Orthonormal basis (as columns) of `{x : M x = 0}`.
///
/// Singular values below `tol * σ_max` count as zero. An injective `M` yields
/// an `n x 0` matrix.
pub fn orthonormal_nullspace(m: &DenseMatrix, tol: f64) -> DenseMatrix {
    let (r, n) = m.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 || m.iter().all(|v| *v == 0.0) {
        return DMatrix::identity(n, n);
    }
    let (sv, v_t) = full_right_svd(m);
    let smax = sv.max();
    let cols: Vec<DVector<f64>> = (0..sv.len())
        .filter(|&i| sv[i] < tol * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the row space of `m` (orthogonal complement of its kernel).
pub fn orthonormal_rowspace(m: &DenseMatrix, tol: f64) -> DenseMatrix {
    let (r, n) = m.shape();
    if n == 0 || r == 0 || m.iter().all(|v| *v == 0.0) {
        return DMatrix::zeros(n, 0);
    }
    let (sv, v_t) = full_right_svd(m);
    let smax = sv.max();
    let cols: Vec<DVector<f64>> = (0..sv.len())
        .filter(|&i| sv[i] >= tol * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Numerical rank with the relative cut `tol`.
pub fn rank(m: &DenseMatrix, tol: f64) -> usize {
    orthonormal_rowspace(m, tol).ncols()
}

/// Minimal-norm right inverse Mᵀ(MMᵀ)⁻¹ of a surjective matrix.
pub fn pseudo_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (r, n) = m.shape();
    if r == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    if r > n {
        return Err(Error::RankDeficient(format!(
            "{r}x{n} map cannot be surjective"
        )));
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin < RANK_TOL * smax {
        return Err(Error::RankDeficient(format!(
            "observation map is not surjective (σ_min/σ_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut v_sinv = v_t.transpose();
    for (j, s) in svd.singular_values.iter().enumerate() {
        v_sinv.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(v_sinv * u.transpose())
}

/// Moore–Penrose pseudo-inverse for arbitrary shape and rank.
pub fn pinv(m: &DenseMatrix, tol: f64) -> DenseMatrix {
    let (r, n) = m.shape();
    if r == 0 || n == 0 || m.iter().all(|v| *v == 0.0) {
        return DMatrix::zeros(n, r);
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(n, r);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s >= tol * smax {
            out += (v_t.row(k).transpose() / *s) * u.column(k).transpose();
        }
    }
    out
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DenseMatrix,
}

pub fn sym_eig(a: &DenseMatrix) -> SymEigResult {
    let n = a.nrows();
    if n == 0 {
        return SymEigResult {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let cols: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    SymEigResult {
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&cols),
    }
}

/// Smallest eigenvalue of a symmetric matrix (0 for the empty matrix).
pub fn lambda_min(a: &DenseMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(a)).eigenvalues.min()
}

/// Largest eigenvalue of a symmetric matrix (0 for the empty matrix).
pub fn lambda_max(a: &DenseMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(a)).eigenvalues.max()
}

/// Cholesky factorization with a relative pivot floor.
pub fn cholesky(t: &DenseMatrix, pivot_tol: f64) -> Result<Cholesky<f64, Dyn>> {
    let scale = t.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let chol = Cholesky::new(symmetrize(t))
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..t.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if t.nrows() > 0 && !(min_pivot > pivot_tol * scale) {
        return Err(Error::NotPositiveDefinite(format!(
            "pivot {min_pivot:.3e} below floor relative to scale {scale:.3e}"
        )));
    }
    Ok(chol)
}

/// Solves T X = B for symmetric positive definite T.
pub fn solve_spd(t: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if t.nrows() != t.ncols() || t.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve_spd: T is {:?}, B is {:?}",
            t.shape(),
            b.shape()
        )));
    }
    Ok(cholesky(t, PIVOT_TOL)?.solve(b))
}

/// All generalized eigenpairs of C v = λ T v, descending, with vᵀ T v = 1.
pub fn gen_eig(c: &DenseMatrix, t: &DenseMatrix) -> Result<SymEigResult> {
    let n = t.nrows();
    if c.shape() != (n, n) || t.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "gen_eig: C is {:?}, T is {:?}",
            c.shape(),
            t.shape()
        )));
    }
    if n == 0 {
        return Ok(sym_eig(c));
    }
    let chol = Cholesky::new(symmetrize(t))
        .ok_or_else(|| Error::NotPositiveDefinite("pencil is not positive definite".into()))?;
    let l = chol.l();
    // L⁻¹ C L⁻ᵀ
    let x = l
        .solve_lower_triangular(c)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let std = sym_eig(&y);
    let vecs = l
        .transpose()
        .solve_upper_triangular(&std.eigenvectors)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    Ok(SymEigResult {
        eigenvalues: std.eigenvalues,
        eigenvectors: vecs,
    })
}

/// Largest generalized eigenvalue of (C, T) and its T-normalized eigenvector.
pub fn gen_eig_max(c: &DenseMatrix, t: &DenseMatrix) -> Result<(f64, DVector<f64>)> {
    let eig = gen_eig(c, t)?;
    if eig.eigenvalues.is_empty() {
        return Ok((0.0, DVector::zeros(0)));
    }
    Ok((eig.eigenvalues[0], eig.eigenvectors.column(0).into_owned()))
}

/// Splits a symmetric PSD form into orthonormal bases of its range and kernel.
pub fn psd_range_kernel(form: &DenseMatrix, tol: f64) -> (DenseMatrix, DenseMatrix) {
    let n = form.nrows();
    let eig = sym_eig(form);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut range = Vec::new();
    let mut kernel = Vec::new();
    for i in 0..n {
        let col = eig.eigenvectors.column(i).into_owned();
        if top > 0.0 && eig.eigenvalues[i] > tol * top {
            range.push(col);
        } else {
            kernel.push(col);
        }
    }
    let build = |cols: Vec<DVector<f64>>| {
        if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    (build(range), build(kernel))
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[&DenseMatrix]) -> DenseMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Places matrices with equal row counts side by side.
pub fn hstack(blocks: &[&DenseMatrix]) -> DenseMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn nullspace_of_coordinate_map() {
        let n = orthonormal_nullspace(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), RANK_TOL);
        assert_eq!(n.shape(), (2, 1));
        assert!(n[(0, 0)].abs() < 1e-14);
        assert!((n[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nullspace_of_invertible_is_empty() {
        let n = orthonormal_nullspace(&DMatrix::identity(2, 2), RANK_TOL);
        assert_eq!(n.shape(), (2, 0));
    }

    #[test]
    fn nullspace_of_sum_row() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let n = orthonormal_nullspace(&m, RANK_TOL);
        assert_eq!(n.ncols(), 1);
        assert!((&m * &n).norm() < 1e-14);
        assert!((n.norm() - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n[(0, 0)].abs() - s).abs() < 1e-14);
        assert!((n[(0, 0)] + n[(1, 0)]).abs() < 1e-14);
    }

    #[test]
    fn nullspace_random_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let r = 1 + trial % 5;
            let c = r + 1 + trial % 4;
            let m = random_matrix(&mut rng, r, c);
            let n = orthonormal_nullspace(&m, RANK_TOL);
            assert_eq!(n.ncols(), c - r);
            assert!((&m * &n).norm() <= 1e-10 * m.norm());
            let eye = DMatrix::<f64>::identity(n.ncols(), n.ncols());
            assert!((n.transpose() * &n - eye).norm() <= 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        assert_eq!(p.shape(), (2, 1));
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15 && p[(1, 0)].abs() < 1e-15);

        let p = pseudo_inverse(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap();
        assert!((p - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]))).norm() < 1e-15);

        // ΛΛᵀ = 2, so Λᵀ/2.
        let p = pseudo_inverse(&DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15 && (p[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pseudo_inverse_rejects_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(pseudo_inverse(&m), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn pseudo_inverse_moore_penrose_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let r = rng.gen_range(1..5);
            let c = r + rng.gen_range(0..4);
            let m = random_matrix(&mut rng, r, c);
            let p = pseudo_inverse(&m).unwrap();
            let mp = &m * &p;
            assert!((&mp * &m - &m).norm() < 1e-10);
            assert!((&mp - mp.transpose()).norm() < 1e-10);
            assert!((mp - DMatrix::<f64>::identity(r, r)).norm() < 1e-10);
            // agrees with Mᵀ(MMᵀ)⁻¹
            let alt = m.transpose() * (&m * m.transpose()).try_inverse().unwrap();
            assert!((alt - &p).norm() < 1e-9);
            // general pseudo-inverse agrees for full row rank
            assert!((pinv(&m, RANK_TOL) - &p).norm() < 1e-10);
        }
    }

    #[test]
    fn gen_eig_max_examples() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let (v, _) = gen_eig_max(&c, &DMatrix::identity(2, 2)).unwrap();
        assert!((v - 4.0).abs() < 1e-14);

        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (v, _) = gen_eig_max(&c, &DMatrix::identity(2, 2)).unwrap();
        assert!((v - 3.0).abs() < 1e-14);

        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let (v, x) = gen_eig_max(&DMatrix::identity(2, 2), &t).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(x[0].abs() < 1e-14 && (x[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gen_eig_rejects_indefinite_pencil() {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            gen_eig_max(&DMatrix::identity(2, 2), &t),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn gen_eig_max_matches_sampled_rayleigh_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.gen_range(1..=6);
            let g = random_matrix(&mut rng, n, n);
            let c = gram(&g);
            let h = random_matrix(&mut rng, n, n);
            let t = gram(&h) + DMatrix::identity(n, n) * 0.5;
            let (top, v) = gen_eig_max(&c, &t).unwrap();
            assert!(((v.transpose() * &t * &v)[0] - 1.0).abs() < 1e-10);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..10_000 {
                let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let q = (x.transpose() * &c * &x)[0] / (x.transpose() * &t * &x)[0];
                best = best.max(q);
            }
            // sampled maximum approaches from below; the eigenvector attains it
            assert!(best <= top * (1.0 + 1e-12));
            let q = (v.transpose() * &c * &v)[0];
            assert!((q - top).abs() <= 1e-6 * top.max(1.0));
            if n <= 2 {
                assert!(best >= top * (1.0 - 1e-6) - 1e-12);
            }
        }
    }

    #[test]
    fn solve_spd_examples() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!((solve_spd(&DMatrix::identity(2, 2), &b).unwrap() - &b).norm() < 1e-15);
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = solve_spd(&t, &DMatrix::identity(2, 2)).unwrap();
        assert!((x - DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]))).norm() < 1e-15);
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = solve_spd(&t, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15 && (x[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            solve_spd(&DMatrix::zeros(2, 2), &b),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn row_major_rejects_bad_input() {
        assert!(from_row_major(2, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(from_row_major(1, 2, &[1.0, f64::NAN]).is_err());
        let m = from_row_major(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m[(0, 1)], 2.0);
    }

    #[test]
    fn psd_split_separates_kernel() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0, 1.0]));
        let (r, k) = psd_range_kernel(&a, RANK_TOL);
        assert_eq!((r.ncols(), k.ncols()), (2, 1));
        assert!((k[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }
}

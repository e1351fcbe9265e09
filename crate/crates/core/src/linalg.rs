//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! Matrix variables are vectorized in column-major order, which is also the
//! storage order of [`nalgebra::DMatrix`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Column-major vectorization.
pub fn vec_of(x: &Mat) -> Vector {
    Vector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_of`].
pub fn mat_of(v: &Vector, rows: usize, cols: usize) -> Mat {
    assert_eq!(v.len(), rows * cols, "vector length does not match shape");
    Mat::from_column_slice(rows, cols, v.as_slice())
}

pub fn inner(x: &Mat, y: &Mat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

pub fn all_finite(x: &Mat) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Thin singular value decomposition `x = U Diag(sigma) V^T` by one-sided
/// Jacobi rotations. For an `m x n` input with `k = min(m, n)`, returns `U`
/// (`m x k`), `sigma` (length `k`, unsorted) and `V` (`n x k`). Columns of
/// `U` or `V` attached to numerically zero singular values are completed to
/// an orthonormal set.
pub fn thin_svd(x: &Mat) -> (Mat, Vec<f64>, Mat) {
    if x.nrows() > x.ncols() {
        let (u, s, v) = thin_svd(&x.transpose());
        return (v, s, u);
    }
    let m = x.nrows();
    // Orthogonalize the columns of G = X^T; then X = J W^T with G J = W.
    let mut g = x.transpose();
    let mut j = Mat::identity(m, m);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut g, p, q, c, s);
                rotate_columns(&mut j, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..m).map(|i| g.column(i).norm()).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let floor = (m.max(1) as f64) * f64::EPSILON * smax;
    let good: Vec<usize> = (0..m).filter(|&i| sigma[i] > floor && sigma[i] > 0.0).collect();
    let n = g.nrows();
    let mut v = Mat::zeros(n, m);
    for &i in &good {
        v.set_column(i, &(g.column(i) / sigma[i]));
    }
    if good.len() < m {
        let kept = columns(&v, &good);
        let fill = orth_complement(&kept);
        let mut next = 0;
        for i in 0..m {
            if !good.contains(&i) {
                v.set_column(i, &fill.column(next));
                next += 1;
            }
        }
    }
    (j, sigma, v)
}

fn rotate_columns(a: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let ap = a[(r, p)];
        let aq = a[(r, q)];
        a[(r, p)] = c * ap - s * aq;
        a[(r, q)] = s * ap + c * aq;
    }
}

pub fn singular_values(x: &Mat) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut s = thin_svd(x).1;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(x: &Mat) -> f64 {
    singular_values(x).first().cloned().unwrap_or(0.0)
}

pub fn nuclear_norm(x: &Mat) -> f64 {
    singular_values(x).iter().sum()
}

pub fn sym(x: &Mat) -> Mat {
    (x + x.transpose()) * 0.5
}

pub fn skew(x: &Mat) -> Mat {
    (x - x.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(x: &Mat) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(sym(x)).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue and a unit eigenvector for it.
pub fn min_eigenpair(x: &Mat) -> (f64, Vector) {
    let eig = SymmetricEigen::new(sym(x));
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Projection of the symmetric part of `x` onto the positive semidefinite cone.
pub fn psd_projection(x: &Mat) -> Mat {
    if x.is_empty() {
        return x.clone();
    }
    let eig = SymmetricEigen::new(sym(x));
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    q * Mat::from_diagonal(&clipped) * q.transpose()
}

/// Orthonormal basis for the orthogonal complement of the range of `q`,
/// whose columns must already be orthonormal.
///
/// Householder QR of `[q | I]`: the trailing columns of the square Q factor
/// complete the leading `k` columns to an orthonormal basis.
pub fn orth_complement(q: &Mat) -> Mat {
    let n = q.nrows();
    let k = q.ncols();
    if k >= n {
        return Mat::zeros(n, 0);
    }
    let mut aug = Mat::zeros(n, k + n);
    aug.columns_mut(0, k).copy_from(q);
    aug.columns_mut(k, n).fill_with_identity();
    let full = aug.qr().q();
    let mut out = full.columns(k, n - k).into_owned();
    for j in 0..out.ncols() {
        let mut c = out.column(j).into_owned();
        fix_sign(&mut c);
        out.set_column(j, &c);
    }
    out
}

/// Flip `v` so that its largest-magnitude entry (first one on ties) is nonnegative.
pub fn fix_sign(v: &mut Vector) -> bool {
    if let Some(idx) = argmax_abs(v.as_slice()) {
        if v[idx] < 0.0 {
            v.neg_mut();
            return true;
        }
    }
    false
}

pub fn argmax_abs(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if x.abs() > v[b].abs() => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Orthonormal basis of the null space of `a` (an `r x n` matrix); the
/// numerical rank uses the relative threshold `rel_tol * max(1, sigma_max)`.
pub fn null_space(a: &Mat, rel_tol: f64) -> Mat {
    let n = a.ncols();
    let range = row_space(a, rel_tol);
    if range.ncols() == 0 {
        return Mat::identity(n, n);
    }
    orth_complement(&range)
}

/// Orthonormal basis (as columns) of the row space of `a`.
pub fn row_space(a: &Mat, rel_tol: f64) -> Mat {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Mat::zeros(n, 0);
    }
    let (_, s, v) = thin_svd(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let thr = rel_tol * smax.max(1.0);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > thr).collect();
    columns(&v, &keep)
}

pub fn numerical_rank(a: &Mat, rel_tol: f64) -> usize {
    row_space(a, rel_tol).ncols()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Submatrix on the given row and column index lists.
pub fn submatrix(x: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| x[(rows[i], cols[j])])
}

/// Columns of `x` selected by `cols`.
pub fn columns(x: &Mat, cols: &[usize]) -> Mat {
    Mat::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vec_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian_matrix(&mut rng, 3, 5);
        assert_eq!(mat_of(&vec_of(&x), 3, 5), x);
        // column-major: entry (1, 0) is the second coordinate
        assert_eq!(vec_of(&x)[1], x[(1, 0)]);
    }

    #[test]
    fn complement_completes_an_orthonormal_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_orthogonal(&mut rng, 6);
        let part = q.columns(0, 2).into_owned();
        let comp = orth_complement(&part);
        assert_eq!(comp.ncols(), 4);
        let mut full = Mat::zeros(6, 6);
        full.columns_mut(0, 2).copy_from(&part);
        full.columns_mut(2, 4).copy_from(&comp);
        let err = (full.transpose() * &full - Mat::identity(6, 6)).abs().max();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn null_space_of_rank_deficient_matrix() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((a * ns).abs().max() < 1e-13);
    }

    #[test]
    fn jacobi_svd_reconstructs_rank_deficient_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..200 {
            let m = 2 + k % 3;
            let n = m + k % 4;
            let u = random_orthogonal(&mut rng, m);
            let v = random_orthogonal(&mut rng, n);
            let mut d = Mat::zeros(m, n);
            let planted = [3.1, 2.5, 0.0, 1.0, 0.0];
            for i in 0..m {
                d[(i, i)] = planted[i];
            }
            let x = &u * d * v.transpose();
            let (uu, s, vv) = thin_svd(&x);
            let back = &uu * Mat::from_diagonal(&Vector::from_vec(s)) * vv.transpose();
            assert!((back - &x).abs().max() < 1e-13);
            assert!((uu.transpose() * &uu - Mat::identity(m, m)).abs().max() < 1e-13);
            assert!((vv.transpose() * &vv - Mat::identity(m, m)).abs().max() < 1e-13);
        }
    }

    #[test]
    fn psd_projection_clips_negative_eigenvalues() {
        let x = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let p = psd_projection(&x);
        assert!((p - Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).abs().max() < 1e-15);
    }
}

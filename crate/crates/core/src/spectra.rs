//! Deterministic singular value decomposition, index-set partitioning of the
//! spectrum, frame rotations and the Hadamard coefficient matrices used by the
//! directional derivative of the singular value soft-threshold.
//!
//! Everything here assumes a "wide" orientation `m <= n`. Higher-level types
//! such as [`crate::nucops::ProxPair`] transpose tall inputs on entry.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

/// `X = U [Diag(sigma) 0] V^T` with `U` in O(m) and `V = [V1 V2]` in O(n).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub u: Mat,
    pub v: Mat,
    /// Nonincreasing, nonnegative.
    pub sigma: Vector,
}

impl SpectralDecomposition {
    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn v1(&self) -> Mat {
        self.v.columns(0, self.m()).into_owned()
    }

    pub fn v2(&self) -> Mat {
        self.v.columns(self.m(), self.n() - self.m()).into_owned()
    }

    pub fn sigma_max(&self) -> f64 {
        if self.sigma.is_empty() {
            0.0
        } else {
            self.sigma[0]
        }
    }

    /// `U Diag(s) V1^T` for an arbitrary spectrum `s` of length m.
    pub fn compose(&self, s: &[f64]) -> Mat {
        let m = self.m();
        let mut scaled = self.u.clone();
        for j in 0..m {
            let mut col = scaled.column_mut(j);
            col *= s[j];
        }
        scaled * self.v1().transpose()
    }

    pub fn reconstruct(&self) -> Mat {
        self.compose(self.sigma.as_slice())
    }

    /// Default classification tolerance `1e-8 * max(1, sigma_1)`.
    pub fn default_tol(&self) -> f64 {
        1e-8 * self.sigma_max().max(1.0)
    }
}

/// Singular value decomposition of an `m x n` matrix with `m <= n`.
///
/// Singular values are sorted nonincreasingly (ties keep the Jacobi column
/// order); each left singular vector has its
/// largest-magnitude entry nonnegative; `V2` is completed deterministically.
pub fn svd_decompose(x: &Mat) -> Result<SpectralDecomposition> {
    let (m, n) = x.shape();
    if m > n {
        return Err(Error::Shape(format!(
            "svd_decompose expects m <= n, got {m}x{n}; transpose first"
        )));
    }
    if !linalg::all_finite(x) {
        return Err(Error::NonFinite);
    }
    if m == 0 || x.iter().all(|v| *v == 0.0) {
        return Ok(SpectralDecomposition {
            u: Mat::identity(m, m),
            v: Mat::identity(n, n),
            sigma: Vector::zeros(m),
        });
    }

    let (u_raw, s_raw, v_raw) = linalg::thin_svd(x);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| s_raw[j].total_cmp(&s_raw[i]).then(i.cmp(&j)));

    let mut u = Mat::zeros(m, m);
    let mut v1 = Mat::zeros(n, m);
    let mut sigma = Vector::zeros(m);
    for (k, &i) in order.iter().enumerate() {
        let mut uc = u_raw.column(i).into_owned();
        let mut vc = v_raw.column(i).into_owned();
        if linalg::fix_sign(&mut uc) {
            vc.neg_mut();
        }
        u.set_column(k, &uc);
        v1.set_column(k, &vc);
        sigma[k] = s_raw[i];
    }

    let v2 = linalg::orth_complement(&v1);
    let mut v = Mat::zeros(n, n);
    v.columns_mut(0, m).copy_from(&v1);
    v.columns_mut(m, n - m).copy_from(&v2);
    Ok(SpectralDecomposition { u, v, sigma })
}

/// The index sets a, b, b1, b2, b3, c and the groups a_1..a_r of equal
/// singular values above 1. All indices are 0-based positions in `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPartition {
    pub m: usize,
    pub n: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub b3: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    /// Representative value of each group (its mean), strictly decreasing.
    pub nu: Vec<f64>,
    pub tol: f64,
}

impl IndexPartition {
    pub fn c(&self) -> std::ops::Range<usize> {
        self.m..self.n
    }

    pub fn r(&self) -> usize {
        self.groups.len()
    }

    /// Group number of an index in `a`.
    pub fn group_of(&self, i: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&i))
    }
}

/// Classify `sigma` around the value 1.
///
/// `i in a` iff `sigma_i > 1 + tol`; `i in b1` iff `|sigma_i - 1| <= tol`;
/// `i in b3` iff `sigma_i <= tol`; the remaining indices form `b2`.
/// Consecutive members of `a` closer than `tol` are merged into one group.
pub fn partition_indices(sigma: &[f64], n: usize, tol: f64) -> IndexPartition {
    let m = sigma.len();
    let mut part = IndexPartition {
        m,
        n,
        a: Vec::new(),
        b: Vec::new(),
        b1: Vec::new(),
        b2: Vec::new(),
        b3: Vec::new(),
        groups: Vec::new(),
        nu: Vec::new(),
        tol,
    };
    for (i, &s) in sigma.iter().enumerate() {
        if s > 1.0 + tol {
            part.a.push(i);
        } else {
            part.b.push(i);
            if (s - 1.0).abs() <= tol {
                part.b1.push(i);
            } else if s <= tol {
                part.b3.push(i);
            } else {
                part.b2.push(i);
            }
        }
    }
    for &i in &part.a {
        match part.groups.last_mut() {
            Some(g) if sigma[*g.last().unwrap()] - sigma[i] <= tol => g.push(i),
            _ => part.groups.push(vec![i]),
        }
    }
    part.nu = part
        .groups
        .iter()
        .map(|g| g.iter().map(|&i| sigma[i]).sum::<f64>() / g.len() as f64)
        .collect();
    part
}

/// Split positions into the support (`sigma_i > tol`) and the kernel.
pub fn support_split(sigma: &[f64], tol: f64) -> (Vec<usize>, Vec<usize>) {
    (0..sigma.len()).partition(|&i| sigma[i] > tol)
}

pub fn sym_part(x: &Mat) -> Result<Mat> {
    require_square(x)?;
    Ok(linalg::sym(x))
}

pub fn skew_part(x: &Mat) -> Result<Mat> {
    require_square(x)?;
    Ok(linalg::skew(x))
}

fn require_square(x: &Mat) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", x.nrows(), x.ncols())));
    }
    Ok(())
}

/// `H~ = U^T H V`.
pub fn rotate_to_frame(h: &Mat, dec: &SpectralDecomposition) -> Result<Mat> {
    if h.shape() != (dec.m(), dec.n()) {
        return Err(Error::Shape(format!(
            "direction is {}x{}, frame expects {}x{}",
            h.nrows(),
            h.ncols(),
            dec.m(),
            dec.n()
        )));
    }
    Ok(dec.u.transpose() * h * &dec.v)
}

/// `H = U H~ V^T`.
pub fn rotate_from_frame(ht: &Mat, dec: &SpectralDecomposition) -> Result<Mat> {
    if ht.shape() != (dec.m(), dec.n()) {
        return Err(Error::Shape(format!(
            "rotated matrix is {}x{}, frame expects {}x{}",
            ht.nrows(),
            ht.ncols(),
            dec.m(),
            dec.n()
        )));
    }
    Ok(&dec.u * ht * dec.v.transpose())
}

/// Hadamard coefficient matrices of the soft-threshold derivative, indexed
/// relative to `a` (rows) and `b` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct XiCoefficients {
    /// `(s_i + s_j - 2) / (s_i + s_j)` on a x a.
    pub xi2_aa: Mat,
    /// `(s_i - 1) / (s_i - s_j)` on a x b.
    pub xi1_ab: Mat,
    /// `(s_i - 1) / (s_i + s_j)` on a x b.
    pub xi2_ab: Mat,
    /// `(s_i - 1) / s_i` on a x (n - m).
    pub xi2_c: Mat,
}

pub fn xi_coefficients(sigma: &[f64], part: &IndexPartition) -> Result<XiCoefficients> {
    let na = part.a.len();
    let nb = part.b.len();
    let nc = part.n - part.m;
    let s = |k: usize| sigma[k];
    let xi2_aa = Mat::from_fn(na, na, |i, j| {
        let (si, sj) = (s(part.a[i]), s(part.a[j]));
        (si + sj - 2.0) / (si + sj)
    });
    let mut xi1_ab = Mat::zeros(na, nb);
    let mut xi2_ab = Mat::zeros(na, nb);
    for i in 0..na {
        for j in 0..nb {
            let (si, sj) = (s(part.a[i]), s(part.b[j]));
            let gap = si - sj;
            if gap <= 0.0 {
                return Err(Error::Internal(format!(
                    "singular value gap {gap:e} between a-index {} and b-index {}",
                    part.a[i], part.b[j]
                )));
            }
            xi1_ab[(i, j)] = (si - 1.0) / gap;
            xi2_ab[(i, j)] = (si - 1.0) / (si + sj);
        }
    }
    let xi2_c = Mat::from_fn(na, nc, |i, _| {
        let si = s(part.a[i]);
        (si - 1.0) / si
    });
    Ok(XiCoefficients { xi2_aa, xi1_ab, xi2_ab, xi2_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(m: usize, n: usize, d: &[f64]) -> Mat {
        let mut x = Mat::zeros(m, n);
        for (i, v) in d.iter().enumerate() {
            x[(i, i)] = *v;
        }
        x
    }

    #[test]
    fn diagonal_matrix_has_identity_frames() {
        let dec = svd_decompose(&diag(2, 2, &[3.0, 0.5])).unwrap();
        assert_eq!(dec.sigma.as_slice(), &[3.0, 0.5]);
        assert!((&dec.u - Mat::identity(2, 2)).abs().max() < 1e-15);
        assert!((&dec.v - Mat::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn zero_matrix_uses_identity_convention() {
        let dec = svd_decompose(&Mat::zeros(2, 2)).unwrap();
        assert_eq!(dec.sigma.as_slice(), &[0.0, 0.0]);
        assert_eq!(dec.u, Mat::identity(2, 2));
        assert_eq!(dec.v, Mat::identity(2, 2));
    }

    #[test]
    fn random_wide_matrix_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = gaussian_matrix(&mut rng, 4, 6);
            let dec = svd_decompose(&x).unwrap();
            let scale = dec.sigma_max().max(1.0);
            assert!((dec.reconstruct() - &x).abs().max() <= 1e-12 * scale);
            assert!((dec.u.transpose() * &dec.u - Mat::identity(4, 4)).abs().max() < 1e-12);
            assert!((dec.v.transpose() * &dec.v - Mat::identity(6, 6)).abs().max() < 1e-12);
            for w in dec.sigma.as_slice().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn rank_deficient_frames_stay_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = gaussian_matrix(&mut rng, 4, 2);
        let r = gaussian_matrix(&mut rng, 2, 5);
        let x = l * r;
        let dec = svd_decompose(&x).unwrap();
        assert!(dec.sigma[2] < 1e-12 && dec.sigma[3] < 1e-12);
        assert!((dec.u.transpose() * &dec.u - Mat::identity(4, 4)).abs().max() < 1e-12);
        assert!((dec.v.transpose() * &dec.v - Mat::identity(5, 5)).abs().max() < 1e-12);
        assert!((dec.reconstruct() - &x).abs().max() < 1e-12 * dec.sigma_max().max(1.0));
    }

    #[test]
    fn tall_and_nonfinite_inputs_are_rejected() {
        assert!(matches!(svd_decompose(&Mat::zeros(3, 2)), Err(Error::Shape(_))));
        let mut x = Mat::zeros(2, 2);
        x[(0, 1)] = f64::NAN;
        assert_eq!(svd_decompose(&x), Err(Error::NonFinite));
    }

    #[test]
    fn partition_examples() {
        let p = partition_indices(&[3.0, 0.5], 2, 1e-8);
        assert_eq!((p.a.clone(), p.b2.clone()), (vec![0], vec![1]));
        assert!(p.b1.is_empty() && p.b3.is_empty());
        assert_eq!(p.r(), 1);
        assert_eq!(p.nu, vec![3.0]);

        let p = partition_indices(&[3.0, 1.0, 0.2, 0.0], 4, 1e-8);
        assert_eq!(p.a, vec![0]);
        assert_eq!(p.b1, vec![1]);
        assert_eq!(p.b2, vec![2]);
        assert_eq!(p.b3, vec![3]);

        let p = partition_indices(&[1.0 + 5e-9], 1, 1e-8);
        assert_eq!(p.b1, vec![0]);
    }

    #[test]
    fn groups_merge_near_equal_values() {
        let p = partition_indices(&[4.0, 4.0 + 0.0, 2.0, 2.0 - 1e-10, 0.3], 5, 1e-8);
        assert_eq!(p.groups, vec![vec![0, 1], vec![2, 3]]);
        assert!(p.nu[0] > p.nu[1]);
    }

    #[test]
    fn sym_and_skew_parts() {
        let x = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(sym_part(&x).unwrap(), Mat::zeros(2, 2));
        let s = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(skew_part(&s).unwrap(), Mat::zeros(2, 2));
        assert!(sym_part(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn xi_examples() {
        let p = partition_indices(&[3.0, 0.5], 2, 1e-8);
        let xi = xi_coefficients(&[3.0, 0.5], &p).unwrap();
        assert!((xi.xi2_aa[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((xi.xi1_ab[(0, 0)] - 0.8).abs() < 1e-15);
        assert!((xi.xi2_ab[(0, 0)] - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(xi.xi2_c.shape(), (1, 0));

        let p = partition_indices(&[3.0], 2, 1e-8);
        let xi = xi_coefficients(&[3.0], &p).unwrap();
        assert!((xi.xi2_c[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(xi.xi1_ab.shape(), (1, 0));
        assert_eq!(xi.xi2_ab.shape(), (1, 0));
    }
}

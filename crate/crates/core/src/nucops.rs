//! Operator calculus of the nuclear norm: the norm and its directional
//! derivative, the subdifferential test, the proximal pair, the directional
//! derivative of the proximal mapping and the conjugate `psi*` of the second
//! order directional epiderivative.
//!
//! Tall inputs (`m > n`) are handled by transposition; every matrix accepted
//! or returned by this module is in the caller's orientation.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::spectra::{self, IndexPartition, SpectralDecomposition};

pub fn nuclear_norm(x: &Mat) -> f64 {
    linalg::nuclear_norm(x)
}

pub fn spectral_norm(x: &Mat) -> f64 {
    linalg::spectral_norm(x)
}

fn wide(x: &Mat) -> (Mat, bool) {
    if x.nrows() > x.ncols() {
        (x.transpose(), true)
    } else {
        (x.clone(), false)
    }
}

fn check_same_shape(x: &Mat, h: &Mat) -> Result<()> {
    if x.shape() != h.shape() {
        return Err(Error::Shape(format!(
            "expected {}x{}, got {}x{}",
            x.nrows(),
            x.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(())
}

/// Scalar functional of the rotated matrix `H~ = U^T H V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotatedEntry {
    /// `H~_ij`
    Plain(usize, usize),
    /// `S(H~_1)_ij`
    Sym(usize, usize),
    /// `T(H~_1)_ij`
    Skew(usize, usize),
}

impl RotatedEntry {
    pub fn eval(&self, ht: &Mat) -> f64 {
        match *self {
            RotatedEntry::Plain(i, j) => ht[(i, j)],
            RotatedEntry::Sym(i, j) => 0.5 * (ht[(i, j)] + ht[(j, i)]),
            RotatedEntry::Skew(i, j) => 0.5 * (ht[(i, j)] - ht[(j, i)]),
        }
    }
}

/// Output of [`subdiff_membership`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubdiffMembership {
    pub member: bool,
    /// The `|b| x (n - |a|)` block `U_b^T S [V_b V2]` when `member` holds.
    pub w: Option<Mat>,
}

/// Decide `S in dtheta(X)` using the support/kernel split of `sigma(X)`.
pub fn subdiff_membership(x: &Mat, s: &Mat, tol: f64) -> Result<SubdiffMembership> {
    check_same_shape(x, s)?;
    let (xw, transposed) = wide(x);
    let sw = if transposed { s.transpose() } else { s.clone() };
    let dec = spectra::svd_decompose(&xw)?;
    let (supp, ker) = spectra::support_split(dec.sigma.as_slice(), dec.default_tol());
    let st = dec.u.transpose() * &sw * &dec.v;
    let m = dec.m();
    let n = dec.n();
    let scale = tol * (1.0 + linalg::spectral_norm(s));
    let rest: Vec<usize> = ker.iter().cloned().chain(m..n).collect();

    let mut ok = true;
    for (ii, &i) in supp.iter().enumerate() {
        for (jj, &j) in supp.iter().enumerate() {
            let target = if ii == jj { 1.0 } else { 0.0 };
            ok &= (st[(i, j)] - target).abs() <= scale;
        }
        for &j in &rest {
            ok &= st[(i, j)].abs() <= scale;
        }
    }
    for &i in &ker {
        for &j in &supp {
            ok &= st[(i, j)].abs() <= scale;
        }
    }
    let w = linalg::submatrix(&st, &ker, &rest);
    ok &= linalg::spectral_norm(&w) <= 1.0 + tol;
    Ok(SubdiffMembership { member: ok, w: ok.then_some(w) })
}

/// `theta'(X; H) = tr(U_a^T H V_a) + ||U_b^T H [V_b V2]||_*` with `a` the
/// support of `sigma(X)`.
pub fn dir_deriv_nuclear(x: &Mat, h: &Mat) -> Result<f64> {
    check_same_shape(x, h)?;
    let (xw, transposed) = wide(x);
    let hw = if transposed { h.transpose() } else { h.clone() };
    let dec = spectra::svd_decompose(&xw)?;
    let (supp, ker) = spectra::support_split(dec.sigma.as_slice(), dec.default_tol());
    let ht = dec.u.transpose() * &hw * &dec.v;
    let trace: f64 = supp.iter().map(|&i| ht[(i, i)]).sum();
    let rest: Vec<usize> = ker.iter().cloned().chain(dec.m()..dec.n()).collect();
    let block = linalg::submatrix(&ht, &ker, &rest);
    Ok(trace + linalg::nuclear_norm(&block))
}

/// `A = Prox_theta(X)` and `B = Prox_theta*(X) = X - A` with the spectral
/// data of `X` they were built from.
///
/// Two partitions are kept side by side: `part` classifies `sigma(X)`
/// around 1, while `support`/`kernel` split `sigma(A)` around 0.
#[derive(Debug, Clone)]
pub struct ProxPair {
    pub x: Mat,
    /// `Prox_theta(X)`
    pub prox: Mat,
    /// `Prox_theta*(X)`, the projection onto the spectral-norm unit ball.
    pub proj: Mat,
    /// Decomposition of `X` (of `X^T` when `transposed`).
    pub dec: SpectralDecomposition,
    pub part: IndexPartition,
    pub support: Vec<usize>,
    pub kernel: Vec<usize>,
    pub transposed: bool,
}

pub fn prox_pair(x: &Mat) -> Result<ProxPair> {
    ProxPair::new(x)
}

impl ProxPair {
    pub fn new(x: &Mat) -> Result<Self> {
        let (xw, transposed) = wide(x);
        let dec = spectra::svd_decompose(&xw)?;
        let tol = dec.default_tol();
        Self::assemble(x.clone(), dec, tol, transposed)
    }

    /// Build from caller-supplied frames, e.g. to exercise the freedom
    /// inside groups of repeated singular values. `dec` refers to `X` when
    /// `m <= n` and to `X^T` otherwise.
    pub fn from_decomposition(x: &Mat, dec: SpectralDecomposition, tol: f64) -> Result<Self> {
        let (xw, transposed) = wide(x);
        if (dec.m(), dec.n()) != xw.shape() {
            return Err(Error::Shape("decomposition does not match the matrix".into()));
        }
        let err = (dec.reconstruct() - &xw).abs().max();
        if err > 1e-10 * dec.sigma_max().max(1.0) {
            return Err(Error::Input(format!("decomposition reconstructs with error {err:e}")));
        }
        Self::assemble(x.clone(), dec, tol, transposed)
    }

    fn assemble(x: Mat, dec: SpectralDecomposition, tol: f64, transposed: bool) -> Result<Self> {
        let part = spectra::partition_indices(dec.sigma.as_slice(), dec.n(), tol);
        let shrunk: Vec<f64> = dec.sigma.iter().map(|s| (s - 1.0).max(0.0)).collect();
        let (support, kernel) = spectra::support_split(&shrunk, tol);
        if support != part.a || kernel != part.b {
            return Err(Error::Internal(
                "support of Prox(X) does not coincide with the index set a".into(),
            ));
        }
        let prox_w = dec.compose(&shrunk);
        let prox = if transposed { prox_w.transpose() } else { prox_w };
        let proj = &x - &prox;
        Ok(ProxPair { x, prox, proj, dec, part, support, kernel, transposed })
    }

    pub fn m(&self) -> usize {
        self.dec.m()
    }

    pub fn n(&self) -> usize {
        self.dec.n()
    }

    /// Shape of matrices in the caller's orientation.
    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    /// `H~ = U^T H V` in the wide orientation.
    pub fn rotate(&self, h: &Mat) -> Result<Mat> {
        check_same_shape(&self.x, h)?;
        let hw = if self.transposed { h.transpose() } else { h.clone() };
        spectra::rotate_to_frame(&hw, &self.dec)
    }

    /// Inverse of [`ProxPair::rotate`].
    pub fn unrotate(&self, ht: &Mat) -> Mat {
        let hw = &self.dec.u * ht * self.dec.v.transpose();
        if self.transposed {
            hw.transpose()
        } else {
            hw
        }
    }

    /// Matrix `G` (caller orientation) with `<G, H> = H~_ij`.
    pub fn entry_functional(&self, i: usize, j: usize) -> Mat {
        let g = self.dec.u.column(i) * self.dec.v.column(j).transpose();
        if self.transposed {
            g.transpose()
        } else {
            g
        }
    }

    pub fn rotated_functional(&self, e: RotatedEntry) -> Mat {
        match e {
            RotatedEntry::Plain(i, j) => self.entry_functional(i, j),
            RotatedEntry::Sym(i, j) => (self.entry_functional(i, j) + self.entry_functional(j, i)) * 0.5,
            RotatedEntry::Skew(i, j) => (self.entry_functional(i, j) - self.entry_functional(j, i)) * 0.5,
        }
    }

    /// Nonzero singular values of `A`, one per group: `nu_l(A) = nu_l(X) - 1`.
    pub fn nu_prox(&self) -> Vec<f64> {
        self.part.nu.iter().map(|v| v - 1.0).collect()
    }

    /// `sigma(A)` with each group collapsed to its representative value.
    pub fn sigma_prox_grouped(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.m()];
        for (g, nu) in self.part.groups.iter().zip(self.nu_prox()) {
            for &i in g {
                s[i] = nu;
            }
        }
        s
    }

    /// `sigma(B) = min(sigma(X), 1)`.
    pub fn sigma_proj(&self) -> Vec<f64> {
        self.dec.sigma.iter().map(|s| s.min(1.0)).collect()
    }

    /// Directional derivative of `Prox_theta` at `X` along `H`.
    pub fn dir_deriv(&self, h: &Mat) -> Result<Mat> {
        let ht = self.rotate(h)?;
        let m = self.m();
        let n = self.n();
        let p = &self.part;
        let xi = spectra::xi_coefficients(self.dec.sigma.as_slice(), p)?;
        let h1 = ht.columns(0, m).into_owned();
        let s1 = linalg::sym(&h1);
        let t1 = linalg::skew(&h1);
        let mut out = Mat::zeros(m, n);
        for (ii, &i) in p.a.iter().enumerate() {
            for (jj, &j) in p.a.iter().enumerate() {
                out[(i, j)] = s1[(i, j)] + xi.xi2_aa[(ii, jj)] * t1[(i, j)];
            }
            for (jj, &j) in p.b.iter().enumerate() {
                out[(i, j)] = xi.xi1_ab[(ii, jj)] * s1[(i, j)] + xi.xi2_ab[(ii, jj)] * t1[(i, j)];
                out[(j, i)] = xi.xi1_ab[(ii, jj)] * s1[(j, i)] + xi.xi2_ab[(ii, jj)] * t1[(j, i)];
            }
            for c in m..n {
                out[(i, c)] = xi.xi2_c[(ii, c - m)] * ht[(i, c)];
            }
        }
        if !p.b1.is_empty() {
            let block = linalg::psd_projection(&linalg::submatrix(&s1, &p.b1, &p.b1));
            for (ii, &i) in p.b1.iter().enumerate() {
                for (jj, &j) in p.b1.iter().enumerate() {
                    out[(i, j)] = block[(ii, jj)];
                }
            }
        }
        Ok(self.unrotate(&out))
    }

    /// Weighted squares whose sum is `psi*_(A,H)(B)` in expanded form.
    /// All weights are negative.
    pub fn psi_star_terms(&self) -> Vec<(f64, RotatedEntry)> {
        use RotatedEntry::*;
        let p = &self.part;
        let nu = self.nu_prox();
        let sb = self.sigma_proj();
        let mut terms = Vec::new();
        for (l, gl) in p.groups.iter().enumerate() {
            for (t, gt) in p.groups.iter().enumerate() {
                let w = 2.0 / (-nu[t] - nu[l]);
                for &i in gl {
                    for &j in gt {
                        if i != j {
                            terms.push((w, Skew(i, j)));
                        }
                    }
                }
            }
            for &i in gl {
                for &j in &p.b1 {
                    terms.push((4.0 / -nu[l], Skew(i, j)));
                }
                for &j in &p.b2 {
                    terms.push((2.0 * (1.0 - sb[j]) / -nu[l], Sym(i, j)));
                    terms.push((2.0 * (sb[j] + 1.0) / -nu[l], Skew(i, j)));
                }
                for &j in &p.b3 {
                    terms.push((2.0 / -nu[l], Sym(i, j)));
                    terms.push((2.0 / -nu[l], Skew(i, j)));
                }
                for c in p.c() {
                    terms.push((1.0 / -nu[l], Plain(i, c)));
                }
            }
        }
        terms
    }

    fn psi_star_expanded(&self, ht: &Mat) -> f64 {
        self.psi_star_terms()
            .iter()
            .map(|(w, e)| {
                let v = e.eval(ht);
                w * v * v
            })
            .sum()
    }

    fn psi_star_omega(&self, ht: &Mat) -> f64 {
        let m = self.m();
        let n = self.n();
        let p = &self.part;
        let sa = self.sigma_prox_grouped();
        let thr = 1e-12 * self.dec.sigma_max().max(1.0);
        let pinv = |d: f64| if d.abs() <= thr { 0.0 } else { 1.0 / d };
        let h1 = ht.columns(0, m).into_owned();
        let s1 = linalg::sym(&h1);
        let t1 = linalg::skew(&h1);
        let h2 = ht.columns(m, n - m).into_owned();

        let mut total = 0.0;
        for (g, nu) in p.groups.iter().zip(self.nu_prox()) {
            let d_sym = Mat::from_diagonal(&Vector::from_iterator(m, sa.iter().map(|s| pinv(s - nu))));
            let d_skew = Mat::from_diagonal(&Vector::from_iterator(m, sa.iter().map(|s| pinv(-s - nu))));
            let sg = linalg::columns(&s1, g);
            let tg = linalg::columns(&t1, g);
            let hc = linalg::submatrix(&h2, g, &(0..n - m).collect::<Vec<_>>());
            let omega = sg.transpose() * d_sym * &sg - (&hc * hc.transpose()) / (2.0 * nu)
                + tg.transpose() * d_skew * &tg;
            total += 2.0 * omega.trace();
        }

        // 2 <Diag(sigma_b(B)), U_b^T H A^+ H V_b>, evaluated in the rotated frame
        // where A^+ = V [Diag(sigma(A))^+ ; 0] U^T.
        if !p.a.is_empty() {
            let mut a_pinv = Mat::zeros(n, m);
            for i in 0..m {
                a_pinv[(i, i)] = pinv(sa[i]);
            }
            let hah = ht * a_pinv * ht;
            let sb = self.sigma_proj();
            for &j in &p.b {
                total += 2.0 * sb[j] * hah[(j, j)];
            }
        }
        total
    }

    pub fn psi_star(&self, h: &Mat, mode: PsiMode) -> Result<f64> {
        let ht = self.rotate(h)?;
        Ok(match mode {
            PsiMode::OmegaForm => self.psi_star_omega(&ht),
            PsiMode::ExpandedForm => self.psi_star_expanded(&ht),
        })
    }
}

/// Which closed form evaluates `psi*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMode {
    /// Trace of the `Omega_{a_l}` blocks plus the `b`-coupling term.
    OmegaForm,
    /// Sum of weighted squared blocks of `S(H~_1)`, `T(H~_1)` and `H~_ac`.
    ExpandedForm,
}

pub fn prox_dir_deriv(x: &Mat, h: &Mat) -> Result<Mat> {
    ProxPair::new(x)?.dir_deriv(h)
}

pub fn psi_star(pp: &ProxPair, h: &Mat, mode: PsiMode) -> Result<f64> {
    pp.psi_star(h, mode)
}

/// Soft-threshold of the singular values at `tau` (the proximal mapping of
/// `tau * ||.||_*`).
pub fn svt(x: &Mat, tau: f64) -> Result<Mat> {
    let (xw, transposed) = wide(x);
    let dec = spectra::svd_decompose(&xw)?;
    let s: Vec<f64> = dec.sigma.iter().map(|v| (v - tau).max(0.0)).collect();
    let out = dec.compose(&s);
    Ok(if transposed { out.transpose() } else { out })
}

/// Projection onto the spectral-norm ball of radius `radius`.
pub fn project_spectral_ball(x: &Mat, radius: f64) -> Result<Mat> {
    let (xw, transposed) = wide(x);
    let dec = spectra::svd_decompose(&xw)?;
    let s: Vec<f64> = dec.sigma.iter().map(|v| v.min(radius)).collect();
    let out = dec.compose(&s);
    Ok(if transposed { out.transpose() } else { out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(rows, cols, v)
    }

    #[test]
    fn norms_of_small_matrices() {
        let x = m(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        assert!((nuclear_norm(&x) - 3.5).abs() < 1e-14);
        assert!((spectral_norm(&x) - 3.0).abs() < 1e-14);
        assert_eq!(nuclear_norm(&Mat::zeros(2, 3)), 0.0);
        let u = Vector::from_vec(vec![0.6, 0.8]);
        let v = Vector::from_vec(vec![0.0, 1.0, 0.0]);
        let r1 = &u * v.transpose();
        assert!((nuclear_norm(&r1) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&r1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn prox_of_diagonal_and_zero() {
        let pp = prox_pair(&m(2, 2, &[3.0, 0.0, 0.0, 0.5])).unwrap();
        assert!((&pp.prox - m(2, 2, &[2.0, 0.0, 0.0, 0.0])).abs().max() < 1e-15);
        assert!((&pp.proj - m(2, 2, &[1.0, 0.0, 0.0, 0.5])).abs().max() < 1e-15);
        let pp = prox_pair(&Mat::zeros(2, 2)).unwrap();
        assert_eq!(pp.prox, Mat::zeros(2, 2));
        assert_eq!(pp.proj, Mat::zeros(2, 2));
    }

    #[test]
    fn tall_input_is_handled_by_transposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian_matrix(&mut rng, 5, 3) * 2.0;
        let pp = prox_pair(&x).unwrap();
        let ppt = prox_pair(&x.transpose()).unwrap();
        assert!(pp.transposed);
        assert!((&pp.prox - ppt.prox.transpose()).abs().max() < 1e-12);
        let h = gaussian_matrix(&mut rng, 5, 3);
        let d = pp.dir_deriv(&h).unwrap();
        let dt = ppt.dir_deriv(&h.transpose()).unwrap();
        assert!((d - dt.transpose()).abs().max() < 1e-12);
        let p1 = pp.psi_star(&h, PsiMode::OmegaForm).unwrap();
        let p2 = ppt.psi_star(&h.transpose(), PsiMode::ExpandedForm).unwrap();
        assert!((p1 - p2).abs() < 1e-10 * (1.0 + p1.abs()));
    }

    #[test]
    fn subdiff_examples() {
        let x = m(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let r = subdiff_membership(&x, &m(2, 2, &[1.0, 0.0, 0.0, 0.5]), 1e-9).unwrap();
        assert!(r.member);
        // kernel frames are only defined up to independent rotations
        assert!((r.w.unwrap()[(0, 0)].abs() - 0.5).abs() < 1e-15);
        let r = subdiff_membership(&x, &m(2, 2, &[1.0, 0.0, 0.0, 1.5]), 1e-9).unwrap();
        assert!(!r.member && r.w.is_none());
        assert!(subdiff_membership(&x, &Mat::zeros(2, 3), 1e-9).is_err());
    }

    #[test]
    fn nuclear_dir_deriv_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = gaussian_matrix(&mut rng, 2, 3);
        let v = dir_deriv_nuclear(&Mat::zeros(2, 3), &h).unwrap();
        assert!((v - nuclear_norm(&h)).abs() < 1e-12);
        let h = gaussian_matrix(&mut rng, 2, 2);
        let v = dir_deriv_nuclear(&m(2, 2, &[3.0, 0.0, 0.0, 0.5]), &h).unwrap();
        assert!((v - h[(0, 0)] - h[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn prox_derivative_decouples_on_diagonal_points() {
        let x = m(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        let h = m(2, 2, &[0.7, 0.0, 0.0, -1.3]);
        let d = prox_dir_deriv(&x, &h).unwrap();
        assert!((d - m(2, 2, &[0.7, 0.0, 0.0, 0.0])).abs().max() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = gaussian_matrix(&mut rng, 2, 2);
        let d1 = prox_dir_deriv(&x, &(&h * 2.0)).unwrap();
        let d2 = prox_dir_deriv(&x, &h).unwrap() * 2.0;
        assert!((d1 - d2).abs().max() < 1e-14);
    }

    #[test]
    fn psi_star_hand_example() {
        let pp = prox_pair(&m(2, 2, &[3.0, 0.0, 0.0, 0.5])).unwrap();
        let h = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let a = pp.psi_star(&h, PsiMode::ExpandedForm).unwrap();
        let b = pp.psi_star(&h, PsiMode::OmegaForm).unwrap();
        assert!((a + 1.5).abs() < 1e-14, "{a}");
        assert!((b + 1.5).abs() < 1e-14, "{b}");
        // every term carries an a-index
        let h = m(2, 2, &[0.0, 0.0, 0.0, 4.0]);
        assert_eq!(pp.psi_star(&h, PsiMode::ExpandedForm).unwrap(), 0.0);
        assert_eq!(pp.psi_star(&h, PsiMode::OmegaForm).unwrap(), 0.0);
    }
}

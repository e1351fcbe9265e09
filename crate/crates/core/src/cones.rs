//! Computable cones: the critical cones of the nuclear norm and of its
//! conjugate, their polars, the coordinatewise calculus of the polyhedral
//! cone `Q`, and a decision procedure for `K ∩ L = {0}` with `L` a subspace.
//!
//! A [`ConeDescriptor`] lives in `R^N` and is cut out by linear equations,
//! sign conditions on linear functionals and at most one semidefinite block.
//! Matrix cones use `N = m n` with column-major vectorization of `H`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::nucops::{ProxPair, RotatedEntry};

/// Sign condition on one scalar functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Free,
    Zero,
    Nonneg,
    Nonpos,
}

impl Sign {
    /// The polar of the one-dimensional cone.
    pub fn polar(self) -> Sign {
        match self {
            Sign::Free => Sign::Zero,
            Sign::Zero => Sign::Free,
            Sign::Nonneg => Sign::Nonpos,
            Sign::Nonpos => Sign::Nonneg,
        }
    }

    pub fn admits(self, v: f64, tol: f64) -> bool {
        match self {
            Sign::Free => true,
            Sign::Zero => v.abs() <= tol,
            Sign::Nonneg => v >= -tol,
            Sign::Nonpos => v <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    Psd,
    Nsd,
}

/// `k x k` block of functionals; the constraint is on the symmetric matrix
/// `[<g_ij, x>]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdBlock {
    pub entries: Vec<Vec<Vector>>,
    pub sense: Definiteness,
}

impl SdBlock {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn eval(&self, x: &Vector) -> Mat {
        let k = self.size();
        linalg::sym(&Mat::from_fn(k, k, |i, j| self.entries[i][j].dot(x)))
    }

    /// Smallest eigenvalue of the block after orienting it as PSD.
    pub fn oriented_min_eig(&self, x: &Vector) -> f64 {
        let mut b = self.eval(x);
        if self.sense == Definiteness::Nsd {
            b.neg_mut();
        }
        linalg::sym_eigenvalues(&b).first().cloned().unwrap_or(0.0)
    }

    fn scale(&self) -> f64 {
        self.entries.iter().flatten().map(|g| g.norm()).fold(0.0, f64::max)
    }

    fn map(&self, f: impl Fn(&Vector) -> Vector) -> SdBlock {
        SdBlock {
            entries: self.entries.iter().map(|row| row.iter().map(&f).collect()).collect(),
            sense: self.sense,
        }
    }
}

/// A closed convex cone `{x in R^N : <g, x> = 0, sign(<g_i, x>), block ⪰ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescriptor {
    pub ambient_dim: usize,
    pub linear: Vec<Vector>,
    pub signs: Vec<(Vector, Sign)>,
    pub sd_block: Option<SdBlock>,
    /// Matrix shape when the ambient space is a vectorized matrix space.
    pub shape: Option<(usize, usize)>,
}

impl ConeDescriptor {
    /// The whole space.
    pub fn full(ambient_dim: usize) -> Self {
        ConeDescriptor { ambient_dim, linear: Vec::new(), signs: Vec::new(), sd_block: None, shape: None }
    }

    /// Coordinate cone `{y : sign_i(y_i)}`.
    pub fn from_signs(signs: &[Sign]) -> Self {
        let e = signs.len();
        let mut desc = Self::full(e);
        for (i, &s) in signs.iter().enumerate() {
            let mut g = Vector::zeros(e);
            g[i] = 1.0;
            desc.push_sign(g, s);
        }
        desc
    }

    pub fn push_sign(&mut self, g: Vector, s: Sign) {
        match s {
            Sign::Free => {}
            Sign::Zero => self.linear.push(g),
            _ => self.signs.push((g, s)),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.violation(x) <= tol * (1.0 + x.norm())
    }

    /// Largest constraint violation, each functional measured relative to its norm.
    pub fn violation(&self, x: &Vector) -> f64 {
        let mut worst: f64 = 0.0;
        for g in &self.linear {
            worst = worst.max(g.dot(x).abs() / g.norm().max(1e-300));
        }
        for (g, s) in &self.signs {
            let v = g.dot(x) / g.norm().max(1e-300);
            let bad = match s {
                Sign::Free => 0.0,
                Sign::Zero => v.abs(),
                Sign::Nonneg => (-v).max(0.0),
                Sign::Nonpos => v.max(0.0),
            };
            worst = worst.max(bad);
        }
        if let Some(block) = &self.sd_block {
            let scale = block.scale();
            if scale > 0.0 {
                worst = worst.max((-block.oriented_min_eig(x) / scale).max(0.0));
            }
        }
        worst
    }

    /// `{z : M z ∈ K}` for `M` an `N x k` matrix.
    pub fn pullback(&self, m: &Mat) -> ConeDescriptor {
        assert_eq!(m.nrows(), self.ambient_dim, "pullback matrix has the wrong number of rows");
        let mt = m.transpose();
        let map = |g: &Vector| &mt * g;
        ConeDescriptor {
            ambient_dim: m.ncols(),
            linear: self.linear.iter().map(map).collect(),
            signs: self.signs.iter().map(|(g, s)| (map(g), *s)).collect(),
            sd_block: self.sd_block.as_ref().map(|b| b.map(map)),
            shape: None,
        }
    }

    pub fn intersect(&self, other: &ConeDescriptor) -> Result<ConeDescriptor> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::Shape(format!(
                "cannot intersect cones in R^{} and R^{}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        let sd_block = match (&self.sd_block, &other.sd_block) {
            (Some(_), Some(_)) => {
                return Err(Error::Unsupported("intersection of two semidefinite blocks".into()))
            }
            (Some(b), None) | (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        Ok(ConeDescriptor {
            ambient_dim: self.ambient_dim,
            linear: self.linear.iter().chain(&other.linear).cloned().collect(),
            signs: self.signs.iter().chain(&other.signs).cloned().collect(),
            sd_block,
            shape: if self.shape == other.shape { self.shape } else { None },
        })
    }

    /// Number of sign-constrained functionals plus the block size.
    pub fn has_inequalities(&self) -> bool {
        !self.signs.is_empty() || self.sd_block.is_some()
    }
}

// ---------------------------------------------------------------------------
// Matrix cones in the frame of a prox pair

fn functional(pp: &ProxPair, e: RotatedEntry) -> Vector {
    linalg::vec_of(&pp.rotated_functional(e))
}

struct Builder<'a> {
    pp: &'a ProxPair,
    desc: ConeDescriptor,
}

impl<'a> Builder<'a> {
    fn new(pp: &'a ProxPair) -> Self {
        let (r, c) = pp.shape();
        let mut desc = ConeDescriptor::full(r * c);
        desc.shape = Some((r, c));
        Builder { pp, desc }
    }

    fn zero(&mut self, rows: &[usize], cols: &[usize]) {
        for &i in rows {
            for &j in cols {
                self.desc.linear.push(functional(self.pp, RotatedEntry::Plain(i, j)));
            }
        }
    }

    /// `S(H~)_ij = 0` (or `T(H~)_ij = 0`) for `i` in `rows`, `j` in `cols`,
    /// each unordered pair once.
    fn pairs(&mut self, rows: &[usize], cols: &[usize], skew: bool) {
        for &i in rows {
            for &j in cols {
                if skew && i == j {
                    continue;
                }
                if rows == cols && j < i {
                    continue;
                }
                let e = if skew { RotatedEntry::Skew(i, j) } else { RotatedEntry::Sym(i, j) };
                self.desc.linear.push(functional(self.pp, e));
            }
        }
    }

    fn block(&mut self, idx: &[usize], sense: Definiteness) {
        if idx.is_empty() {
            return;
        }
        let entries = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| functional(self.pp, RotatedEntry::Sym(i, j))).collect())
            .collect();
        self.desc.sd_block = Some(SdBlock { entries, sense });
    }

    fn finish(self) -> ConeDescriptor {
        self.desc
    }
}

fn rest_columns(pp: &ProxPair) -> Vec<usize> {
    pp.part.b.iter().cloned().chain(pp.part.c()).collect()
}

fn without(all: &[usize], drop: &[usize]) -> Vec<usize> {
    all.iter().cloned().filter(|i| !drop.contains(i)).collect()
}

/// `C_θ(A, B)`: the `b x (b ∪ c)` block vanishes except for `b1 x b1`, which
/// is symmetric positive semidefinite; the `a` rows and the `b x a` block are free.
pub fn critical_cone_theta(pp: &ProxPair) -> ConeDescriptor {
    let p = &pp.part;
    let mut bld = Builder::new(pp);
    let rest = rest_columns(pp);
    for &i in &p.b {
        let cols = if p.b1.contains(&i) { without(&rest, &p.b1) } else { rest.clone() };
        bld.zero(&[i], &cols);
    }
    bld.pairs(&p.b1, &p.b1, true);
    bld.block(&p.b1, Definiteness::Psd);
    bld.finish()
}

/// `C_θ*(B, A)`: `S(H~_aa) = 0`, `H~_ab1 = -H~_b1a^T`, `S(H~_b1b1)` negative
/// semidefinite, every other block free (including the `c` columns).
pub fn critical_cone_theta_conj(pp: &ProxPair) -> ConeDescriptor {
    let p = &pp.part;
    let mut bld = Builder::new(pp);
    bld.pairs(&p.a, &p.a, false);
    bld.pairs(&p.a, &p.b1, false);
    bld.block(&p.b1, Definiteness::Nsd);
    bld.finish()
}

/// `(C_θ(A, B))°`: `H~_aa`, `H~_ab`, `H~_ac`, `H~_ba` vanish and
/// `S(H~_b1b1)` is negative semidefinite.
pub fn polar_theta(pp: &ProxPair) -> ConeDescriptor {
    let p = &pp.part;
    let mut bld = Builder::new(pp);
    let all: Vec<usize> = (0..pp.n()).collect();
    bld.zero(&p.a, &all);
    bld.zero(&p.b, &p.a);
    bld.block(&p.b1, Definiteness::Nsd);
    bld.finish()
}

/// `(C_θ*(B, A))°`: `H~_aa` symmetric, `H~_ab1 = H~_b1a^T`, `H~_b1b1`
/// symmetric positive semidefinite, everything else zero.
pub fn polar_theta_conj(pp: &ProxPair) -> ConeDescriptor {
    let p = &pp.part;
    let mut bld = Builder::new(pp);
    let rest = rest_columns(pp);
    bld.pairs(&p.a, &p.a, true);
    bld.pairs(&p.a, &p.b1, true);
    let not_b1 = without(&rest, &p.b1);
    bld.zero(&p.a, &not_b1);
    bld.zero(&without(&p.b, &p.b1), &p.a);
    bld.zero(&p.b, &not_b1);
    bld.zero(&without(&p.b, &p.b1), &p.b1);
    bld.pairs(&p.b1, &p.b1, true);
    bld.block(&p.b1, Definiteness::Psd);
    bld.finish()
}

/// Linear equations cutting out `{ψ*_(A,H)(B) = 0}`. Every weight of the
/// expanded form is negative, so the zero set is the common kernel.
pub fn psi_star_kernel(pp: &ProxPair) -> ConeDescriptor {
    let mut bld = Builder::new(pp);
    for (_, e) in pp.psi_star_terms() {
        bld.desc.linear.push(functional(pp, e));
    }
    bld.finish()
}

/// Block equations describing where `φ*_(B,H)(A)` vanishes on `C_θ*(B, A)`:
/// `H~_aa`, `H~_ab`, `H~_ac` and `H~_ba` are zero.
pub fn phi_star_kernel(pp: &ProxPair) -> ConeDescriptor {
    let p = &pp.part;
    let mut bld = Builder::new(pp);
    let all: Vec<usize> = (0..pp.n()).collect();
    bld.zero(&p.a, &all);
    bld.zero(&p.b, &p.a);
    bld.finish()
}

fn matrix_membership(pp: &ProxPair, desc: &ConeDescriptor, h: &Mat, tol: f64) -> Result<bool> {
    if h.shape() != pp.shape() {
        return Err(Error::Shape(format!(
            "direction is {}x{}, expected {}x{}",
            h.nrows(),
            h.ncols(),
            pp.shape().0,
            pp.shape().1
        )));
    }
    Ok(desc.contains(&linalg::vec_of(h), tol))
}

pub fn critical_cone_theta_membership(pp: &ProxPair, h: &Mat, tol: f64) -> Result<bool> {
    matrix_membership(pp, &critical_cone_theta(pp), h, tol)
}

pub fn critical_cone_theta_conj_membership(pp: &ProxPair, h: &Mat, tol: f64) -> Result<bool> {
    matrix_membership(pp, &critical_cone_theta_conj(pp), h, tol)
}

pub fn polar_theta_membership(pp: &ProxPair, h: &Mat, tol: f64) -> Result<bool> {
    matrix_membership(pp, &polar_theta(pp), h, tol)
}

pub fn polar_theta_conj_membership(pp: &ProxPair, h: &Mat, tol: f64) -> Result<bool> {
    matrix_membership(pp, &polar_theta_conj(pp), h, tol)
}

/// The four matrix cones attached to a prox pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixCone {
    Theta,
    ThetaConj,
    PolarTheta,
    PolarThetaConj,
}

impl MatrixCone {
    pub fn descriptor(self, pp: &ProxPair) -> ConeDescriptor {
        match self {
            MatrixCone::Theta => critical_cone_theta(pp),
            MatrixCone::ThetaConj => critical_cone_theta_conj(pp),
            MatrixCone::PolarTheta => polar_theta(pp),
            MatrixCone::PolarThetaConj => polar_theta_conj(pp),
        }
    }

    /// Random element, generated block by block in the rotated frame without
    /// going through the descriptor.
    pub fn sample<R: rand::Rng + ?Sized>(self, pp: &ProxPair, rng: &mut R) -> Mat {
        let (m, n) = (pp.m(), pp.n());
        let p = &pp.part;
        let mut ht = linalg::gaussian_matrix(rng, m, n);
        let b1 = p.b1.len();
        let psd = |rng: &mut R| {
            let g = linalg::gaussian_matrix(rng, b1, b1);
            &g * g.transpose()
        };
        let put_b1 = |ht: &mut Mat, block: &Mat| {
            for (ii, &i) in p.b1.iter().enumerate() {
                for (jj, &j) in p.b1.iter().enumerate() {
                    ht[(i, j)] = block[(ii, jj)];
                }
            }
        };
        let in_b1 = |i: usize| p.b1.contains(&i);
        let in_a = |i: usize| p.a.contains(&i);
        match self {
            MatrixCone::Theta => {
                for &i in &p.b {
                    for j in p.b.iter().cloned().chain(m..n) {
                        ht[(i, j)] = 0.0;
                    }
                }
                let block = psd(rng);
                put_b1(&mut ht, &block);
            }
            MatrixCone::ThetaConj => {
                for &i in &p.a {
                    for &j in &p.a {
                        if j < i {
                            ht[(i, j)] = -ht[(j, i)];
                        } else if j == i {
                            ht[(i, i)] = 0.0;
                        }
                    }
                    for &j in &p.b1 {
                        ht[(j, i)] = -ht[(i, j)];
                    }
                }
                let mut block = -psd(rng);
                let skew = linalg::gaussian_matrix(rng, b1, b1);
                block += linalg::skew(&skew);
                put_b1(&mut ht, &block);
            }
            MatrixCone::PolarTheta => {
                for i in 0..m {
                    for j in 0..n {
                        if in_a(i) || (j < m && in_a(j)) {
                            ht[(i, j)] = 0.0;
                        }
                    }
                }
                let mut block = -psd(rng);
                let skew = linalg::gaussian_matrix(rng, b1, b1);
                block += linalg::skew(&skew);
                put_b1(&mut ht, &block);
            }
            MatrixCone::PolarThetaConj => {
                for i in 0..m {
                    for j in 0..n {
                        let keep = (in_a(i) || in_b1(i)) && j < m && (in_a(j) || in_b1(j));
                        if !keep {
                            ht[(i, j)] = 0.0;
                        }
                    }
                }
                let s = linalg::sym(&ht.columns(0, m).into_owned());
                ht.columns_mut(0, m).copy_from(&s);
                let block = psd(rng);
                put_b1(&mut ht, &block);
            }
        }
        pp.unrotate(&ht)
    }
}

// ---------------------------------------------------------------------------
// Polyhedral cones built from zero / nonnegative / free segments

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Zero,
    Nonneg,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub len: usize,
}

/// `Q = Q_1 x ... x Q_k` with each factor `{0}^l`, `R_+^l` or `R^l`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyhedralConeSpec {
    pub segments: Vec<Segment>,
}

impl PolyhedralConeSpec {
    /// Merges adjacent coordinates of the same kind into segments.
    pub fn from_kinds(kinds: &[SegmentKind]) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        for &k in kinds {
            match segments.last_mut() {
                Some(s) if s.kind == k => s.len += 1,
                _ => segments.push(Segment { kind: k, len: 1 }),
            }
        }
        PolyhedralConeSpec { segments }
    }

    pub fn dim(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn kinds(&self) -> Vec<SegmentKind> {
        self.segments.iter().flat_map(|s| std::iter::repeat(s.kind).take(s.len)).collect()
    }

    pub fn project(&self, q: &Vector) -> Vector {
        let kinds = self.kinds();
        Vector::from_fn(q.len(), |i, _| match kinds[i] {
            SegmentKind::Zero => 0.0,
            SegmentKind::Nonneg => q[i].max(0.0),
            SegmentKind::Free => q[i],
        })
    }

    /// Projection onto `Q° = {0}^l x R_-^l x ...` (zero and free swap roles).
    pub fn project_polar(&self, y: &Vector) -> Vector {
        let kinds = self.kinds();
        Vector::from_fn(y.len(), |i, _| match kinds[i] {
            SegmentKind::Zero => y[i],
            SegmentKind::Nonneg => y[i].min(0.0),
            SegmentKind::Free => 0.0,
        })
    }
}

fn check_dim(q: &PolyhedralConeSpec, v: &Vector) -> Result<()> {
    if v.len() != q.dim() {
        return Err(Error::Shape(format!("vector of length {} for a cone in R^{}", v.len(), q.dim())));
    }
    Ok(())
}

fn infeasible(coordinate: usize, detail: impl Into<String>) -> Error {
    Error::Infeasible { coordinate, detail: detail.into() }
}

/// Verify `q ∈ Q` to `tol`.
pub fn check_in_cone(qs: &PolyhedralConeSpec, q: &Vector, tol: f64) -> Result<()> {
    check_dim(qs, q)?;
    for (i, k) in qs.kinds().into_iter().enumerate() {
        match k {
            SegmentKind::Zero if q[i].abs() > tol => return Err(infeasible(i, format!("q = {} in a zero segment", q[i]))),
            SegmentKind::Nonneg if q[i] < -tol => return Err(infeasible(i, format!("q = {} < 0", q[i]))),
            _ => {}
        }
    }
    Ok(())
}

/// Verify `q ∈ Q` and `y ∈ N_Q(q)` to `tol`.
pub fn check_pair(qs: &PolyhedralConeSpec, q: &Vector, y: &Vector, tol: f64) -> Result<()> {
    check_in_cone(qs, q, tol)?;
    check_dim(qs, y)?;
    for (i, k) in qs.kinds().into_iter().enumerate() {
        match k {
            SegmentKind::Zero => {}
            SegmentKind::Free if y[i].abs() > tol => {
                return Err(infeasible(i, format!("y = {} on a free coordinate", y[i])))
            }
            SegmentKind::Nonneg if y[i] > tol => return Err(infeasible(i, format!("y = {} > 0", y[i]))),
            SegmentKind::Nonneg if q[i] > tol && y[i].abs() > tol => {
                return Err(infeasible(i, format!("q = {} > 0 with y = {}", q[i], y[i])))
            }
            _ => {}
        }
    }
    Ok(())
}

/// `T_Q(q)`, coordinatewise.
pub fn poly_tangent(qs: &PolyhedralConeSpec, q: &Vector, tol: f64) -> Result<Vec<Sign>> {
    check_in_cone(qs, q, tol)?;
    Ok(qs
        .kinds()
        .into_iter()
        .enumerate()
        .map(|(i, k)| match k {
            SegmentKind::Zero => Sign::Zero,
            SegmentKind::Free => Sign::Free,
            SegmentKind::Nonneg if q[i] > tol => Sign::Free,
            SegmentKind::Nonneg => Sign::Nonneg,
        })
        .collect())
}

/// `N_Q(q)`, coordinatewise.
pub fn poly_normal(qs: &PolyhedralConeSpec, q: &Vector, tol: f64) -> Result<Vec<Sign>> {
    check_in_cone(qs, q, tol)?;
    Ok(qs
        .kinds()
        .into_iter()
        .enumerate()
        .map(|(i, k)| match k {
            SegmentKind::Zero => Sign::Free,
            SegmentKind::Free => Sign::Zero,
            SegmentKind::Nonneg if q[i] > tol => Sign::Zero,
            SegmentKind::Nonneg => Sign::Nonpos,
        })
        .collect())
}

/// `C_Q(q, y) = T_Q(q) ∩ y^⊥`.
pub fn poly_critical(qs: &PolyhedralConeSpec, q: &Vector, y: &Vector, tol: f64) -> Result<Vec<Sign>> {
    check_pair(qs, q, y, tol)?;
    let tangent = poly_tangent(qs, q, tol)?;
    Ok(tangent
        .into_iter()
        .enumerate()
        .map(|(i, t)| match t {
            Sign::Nonneg if y[i] < -tol => Sign::Zero,
            Sign::Free if y[i].abs() > tol => Sign::Zero,
            other => other,
        })
        .collect())
}

/// `C_Q°(y, q) = T_Q°(y) ∩ q^⊥`, computed from the polar cone directly.
pub fn poly_critical_polar(qs: &PolyhedralConeSpec, y: &Vector, q: &Vector, tol: f64) -> Result<Vec<Sign>> {
    check_pair(qs, q, y, tol)?;
    Ok(qs
        .kinds()
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            // tangent cone of Q° at y
            let t = match k {
                SegmentKind::Zero => Sign::Free,
                SegmentKind::Free => Sign::Zero,
                SegmentKind::Nonneg if y[i] < -tol => Sign::Free,
                SegmentKind::Nonneg => Sign::Nonpos,
            };
            match t {
                Sign::Free if q[i].abs() > tol => Sign::Zero,
                Sign::Nonpos if q[i] > tol => Sign::Zero,
                other => other,
            }
        })
        .collect())
}

pub fn polar_signs(signs: &[Sign]) -> Vec<Sign> {
    signs.iter().map(|s| s.polar()).collect()
}

// ---------------------------------------------------------------------------
// Cone ∩ subspace

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrivialityStatus {
    Trivial,
    Nontrivial,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialityMethod {
    RankExact,
    LpExact,
    EigSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrivialityVerdict {
    pub status: TrivialityStatus,
    /// Unit-norm element of the intersection when `status` is nontrivial.
    pub witness: Option<Vector>,
    pub method: TrivialityMethod,
}

impl TrivialityVerdict {
    fn trivial(method: TrivialityMethod) -> Self {
        TrivialityVerdict { status: TrivialityStatus::Trivial, witness: None, method }
    }

    fn nontrivial(w: Vector, method: TrivialityMethod) -> Self {
        TrivialityVerdict { status: TrivialityStatus::Nontrivial, witness: Some(w), method }
    }

    pub fn is_trivial(&self) -> Option<bool> {
        match self.status {
            TrivialityStatus::Trivial => Some(true),
            TrivialityStatus::Nontrivial => Some(false),
            TrivialityStatus::Inconclusive => None,
        }
    }
}

const RANK_TOL: f64 = 1e-10;
const WITNESS_TOL: f64 = 1e-9;
const EIG_STARTS: usize = 50;
const EIG_STEPS: usize = 400;

/// Decide whether `desc ∩ range(basis) = {0}`. `basis` should have
/// orthonormal columns; `seed` drives the multi-start search used only when a
/// semidefinite block survives the exact reductions.
pub fn cone_subspace_trivial(desc: &ConeDescriptor, basis: &Mat, seed: u64) -> TrivialityVerdict {
    if basis.ncols() == 0 {
        return TrivialityVerdict::trivial(TrivialityMethod::RankExact);
    }
    let local = desc.pullback(basis);
    let mut verdict = decide(&local, seed);
    if let Some(w) = verdict.witness.take() {
        let mut full = basis * w;
        let norm = full.norm();
        full /= norm;
        if desc.contains(&full, WITNESS_TOL) {
            verdict.witness = Some(full);
        } else {
            verdict = TrivialityVerdict {
                status: TrivialityStatus::Inconclusive,
                witness: None,
                method: verdict.method,
            };
        }
    }
    verdict
}

fn stack_rows(rows: &[Vector], dim: usize) -> Mat {
    Mat::from_fn(rows.len(), dim, |i, j| rows[i][j])
}

/// Sign rows oriented as `g . w >= 0`, normalized, with vanishing rows dropped.
fn oriented_rows(signs: &[(Vector, Sign)]) -> Vec<Vector> {
    signs
        .iter()
        .filter_map(|(g, s)| {
            let n = g.norm();
            if n <= 1e-12 {
                return None;
            }
            match s {
                Sign::Nonneg => Some(g / n),
                Sign::Nonpos => Some(-g / n),
                _ => None,
            }
        })
        .collect()
}

fn decide(local: &ConeDescriptor, seed: u64) -> TrivialityVerdict {
    let k = local.ambient_dim;
    let eq = stack_rows(&local.linear, k);
    let n0 = if eq.nrows() == 0 { Mat::identity(k, k) } else { linalg::null_space(&eq, RANK_TOL) };
    if n0.ncols() == 0 {
        return TrivialityVerdict::trivial(TrivialityMethod::RankExact);
    }
    let red = local.pullback(&n0);
    let mut rows = oriented_rows(&red.signs);
    let mut block = red.sd_block.clone().filter(|b| b.scale() > 1e-12);
    if let Some(b) = &block {
        if b.size() == 1 {
            let g = b.entries[0][0].clone();
            let s = if b.sense == Definiteness::Psd { Sign::Nonneg } else { Sign::Nonpos };
            rows.extend(oriented_rows(&[(g, s)]));
            block = None;
        }
    }
    let lift = |v: Vector| &n0 * v;
    match block {
        None if rows.is_empty() => {
            TrivialityVerdict::nontrivial(n0.column(0).into_owned(), TrivialityMethod::RankExact)
        }
        None => {
            let v = sign_cone(&rows, n0.ncols());
            map_witness(v, lift)
        }
        Some(b) => {
            // the slice where the block vanishes
            let r = n0.ncols();
            let kb = b.size();
            let mut blk_rows = Vec::new();
            for i in 0..kb {
                for j in i..kb {
                    blk_rows.push((&b.entries[i][j] + &b.entries[j][i]) * 0.5);
                }
            }
            let n1 = linalg::null_space(&stack_rows(&blk_rows, r), RANK_TOL);
            if n1.ncols() > 0 {
                let sub: Vec<Vector> = rows.iter().map(|g| n1.transpose() * g).collect();
                let sub = oriented_rows(&sub.into_iter().map(|g| (g, Sign::Nonneg)).collect::<Vec<_>>());
                let v = if sub.is_empty() {
                    TrivialityVerdict::nontrivial(n1.column(0).into_owned(), TrivialityMethod::RankExact)
                } else {
                    sign_cone(&sub, n1.ncols())
                };
                if v.status == TrivialityStatus::Nontrivial {
                    return map_witness(v, |w| &n0 * (&n1 * w));
                }
            }
            let v = eig_search(&b, &rows, r, seed);
            map_witness(v, lift)
        }
    }
}

fn map_witness(mut v: TrivialityVerdict, f: impl Fn(Vector) -> Vector) -> TrivialityVerdict {
    v.witness = v.witness.map(f);
    v
}

/// `{w : G w >= 0} = {0}`? Exact up to the LP solver's tolerance.
fn sign_cone(rows: &[Vector], dim: usize) -> TrivialityVerdict {
    let g = stack_rows(rows, dim);
    let ker = linalg::null_space(&g, RANK_TOL);
    if ker.ncols() > 0 {
        return TrivialityVerdict::nontrivial(ker.column(0).into_owned(), TrivialityMethod::RankExact);
    }
    // With ker G = {0}, a nonzero element has G w >= 0 and 1^T G w > 0.
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..dim).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for i in 0..g.nrows() {
        let expr: Vec<_> = vars.iter().enumerate().map(|(j, &v)| (v, g[(i, j)])).collect();
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    let total = g.row_sum();
    let expr: Vec<_> = vars.iter().enumerate().map(|(j, &v)| (v, total[j])).collect();
    lp.add_constraint(expr, ComparisonOp::Eq, 1.0);
    match lp.solve() {
        Ok(sol) => {
            let w = Vector::from_iterator(dim, vars.iter().map(|&v| sol[v]));
            TrivialityVerdict::nontrivial(w, TrivialityMethod::LpExact)
        }
        Err(_) => TrivialityVerdict::trivial(TrivialityMethod::LpExact),
    }
}

/// Maximize `min(λ_min(Σ t_k M_k), min_i r_i . t)` over the unit sphere by
/// projected supergradient ascent from several random starts.
fn maximize_min_eig(mats: &[Mat], rows: &[Vector], dim: usize, seed: u64) -> (f64, Vector) {
    let eval = |t: &Vector| -> (f64, Vector) {
        let mut best = f64::INFINITY;
        let mut grad = Vector::zeros(dim);
        if !mats.is_empty() {
            let mut b = Mat::zeros(mats[0].nrows(), mats[0].ncols());
            for (k, mk) in mats.iter().enumerate() {
                b += mk * t[k];
            }
            let (lam, v) = linalg::min_eigenpair(&b);
            best = lam;
            grad = Vector::from_fn(dim, |k, _| (v.transpose() * &mats[k] * &v)[(0, 0)]);
        }
        for r in rows {
            let val = r.dot(t);
            if val < best {
                best = val;
                grad = r.clone();
            }
        }
        (best, grad)
    };
    let mut best = (f64::NEG_INFINITY, Vector::zeros(dim));
    for start in 0..EIG_STARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(start as u64);
        let mut t = linalg::gaussian_vector(&mut rng, dim);
        t /= t.norm();
        for step in 0..EIG_STEPS {
            let (val, g) = eval(&t);
            if val > best.0 {
                best = (val, t.clone());
            }
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            t += g * (0.5 / ((step + 1) as f64).sqrt() / gn);
            t /= t.norm();
        }
    }
    best
}

fn eig_search(block: &SdBlock, rows: &[Vector], dim: usize, seed: u64) -> TrivialityVerdict {
    let kb = block.size();
    let orient = if block.sense == Definiteness::Nsd { -1.0 } else { 1.0 };
    let mats: Vec<Mat> = (0..dim)
        .map(|k| linalg::sym(&Mat::from_fn(kb, kb, |i, j| orient * block.entries[i][j][k])))
        .collect();

    let (val, t) = maximize_min_eig(&mats, rows, dim, seed);
    if val >= -WITNESS_TOL * 1e-1 {
        return TrivialityVerdict::nontrivial(t, TrivialityMethod::EigSearch);
    }

    // Dual certificate: Y ≻ 0 and λ > 0 with Σ Y_ij g_ij + Σ λ_l r_l = 0.
    // Since the zero slice is trivial, such (Y, λ) proves the cone is {0}.
    let pairs: Vec<(usize, usize)> = (0..kb).flat_map(|i| (i..kb).map(move |j| (i, j))).collect();
    let nz = pairs.len() + rows.len();
    let mut lmap = Mat::zeros(dim, nz);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        let factor = if i == j { 1.0 } else { 2.0 };
        for k in 0..dim {
            lmap[(k, c)] = factor * mats[k][(i, j)];
        }
    }
    for (l, r) in rows.iter().enumerate() {
        lmap.set_column(pairs.len() + l, r);
    }
    let ker = linalg::null_space(&lmap, RANK_TOL);
    if ker.ncols() > 0 {
        let p = ker.ncols();
        let dual_mats: Vec<Mat> = (0..p)
            .map(|k| {
                let mut y = Mat::zeros(kb, kb);
                for (c, &(i, j)) in pairs.iter().enumerate() {
                    y[(i, j)] = ker[(c, k)];
                    y[(j, i)] = ker[(c, k)];
                }
                y
            })
            .collect();
        let dual_rows: Vec<Vector> = (0..rows.len())
            .map(|l| Vector::from_fn(p, |k, _| ker[(pairs.len() + l, k)]))
            .collect();
        let (dval, _) = maximize_min_eig(&dual_mats, &dual_rows, p, seed ^ 0x9e37_79b9_7f4a_7c15);
        if dval > 1e-8 {
            return TrivialityVerdict::trivial(TrivialityMethod::EigSearch);
        }
    }
    TrivialityVerdict { status: TrivialityStatus::Inconclusive, witness: None, method: TrivialityMethod::EigSearch }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_pp(d: &[f64], n: usize) -> ProxPair {
        let m = d.len();
        let mut x = Mat::zeros(m, n);
        for (i, v) in d.iter().enumerate() {
            x[(i, i)] = *v;
        }
        ProxPair::new(&x).unwrap()
    }

    #[test]
    fn running_fixture_memberships() {
        let pp = diag_pp(&[3.0, 0.5], 2);
        let h = Mat::from_row_slice(2, 2, &[5.0, 7.0, -2.0, 0.0]);
        assert!(critical_cone_theta_membership(&pp, &h, 1e-9).unwrap());
        let h = Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(!critical_cone_theta_membership(&pp, &h, 1e-9).unwrap());

        let h = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(critical_cone_theta_conj_membership(&pp, &h, 1e-9).unwrap());
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(!critical_cone_theta_conj_membership(&pp, &h, 1e-9).unwrap());
    }

    #[test]
    fn zero_belongs_to_every_cone() {
        let pp = diag_pp(&[3.0, 1.0, 0.2], 4);
        let z = Mat::zeros(3, 4);
        for kind in [MatrixCone::Theta, MatrixCone::ThetaConj, MatrixCone::PolarTheta, MatrixCone::PolarThetaConj] {
            assert!(matrix_membership(&pp, &kind.descriptor(&pp), &z, 1e-12).unwrap());
        }
    }

    #[test]
    fn polar_theta_conj_dimension_without_b1() {
        let pp = diag_pp(&[3.0, 2.0, 0.5], 4);
        let desc = polar_theta_conj(&pp);
        let eq = stack_rows(&desc.linear, 12);
        assert_eq!(12 - linalg::numerical_rank(&eq, 1e-10), 3);
    }

    #[test]
    fn polyhedral_example() {
        let qs = PolyhedralConeSpec::from_kinds(&[SegmentKind::Nonneg, SegmentKind::Nonneg]);
        let q = Vector::from_vec(vec![1.0, 0.0]);
        let y = Vector::from_vec(vec![0.0, -2.0]);
        assert_eq!(poly_critical(&qs, &q, &y, 1e-12).unwrap(), vec![Sign::Free, Sign::Zero]);
        assert_eq!(poly_critical_polar(&qs, &y, &q, 1e-12).unwrap(), vec![Sign::Zero, Sign::Free]);
        let bad = Vector::from_vec(vec![0.0, 2.0]);
        assert!(matches!(poly_critical(&qs, &q, &bad, 1e-12), Err(Error::Infeasible { coordinate: 1, .. })));
    }

    #[test]
    fn trivial_ladder_basic_cases() {
        let desc = ConeDescriptor::from_signs(&[Sign::Nonneg, Sign::Nonneg]);
        let v = cone_subspace_trivial(&desc, &Mat::zeros(2, 0), 0);
        assert_eq!(v.status, TrivialityStatus::Trivial);

        let line = Mat::from_column_slice(2, 1, &[1.0, -1.0]) / 2f64.sqrt();
        let v = cone_subspace_trivial(&desc, &line, 0);
        assert_eq!(v.status, TrivialityStatus::Trivial);
        assert_eq!(v.method, TrivialityMethod::LpExact);

        let diag = Mat::from_column_slice(2, 1, &[1.0, 1.0]) / 2f64.sqrt();
        let v = cone_subspace_trivial(&desc, &diag, 0);
        assert_eq!(v.status, TrivialityStatus::Nontrivial);
        assert!(desc.contains(v.witness.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn semidefinite_block_decided_both_ways() {
        // 2x2 symmetric matrices (a, b; b, c) as (a, b, c); PSD cone.
        let e = |i: usize| Vector::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
        let block = SdBlock { entries: vec![vec![e(0), e(1)], vec![e(1), e(2)]], sense: Definiteness::Psd };
        let desc = ConeDescriptor { sd_block: Some(block), ..ConeDescriptor::full(3) };
        // trace-zero diagonal line: (1, 0, -1) is indefinite
        let line = Mat::from_column_slice(3, 1, &[1.0, 0.0, -1.0]) / 2f64.sqrt();
        assert_eq!(cone_subspace_trivial(&desc, &line, 1).status, TrivialityStatus::Trivial);
        // plane of trace-zero matrices meets PSD only at 0
        let plane = Mat::from_column_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let plane = linalg::row_space(&plane.transpose(), 1e-12);
        assert_eq!(cone_subspace_trivial(&desc, &plane, 1).status, TrivialityStatus::Trivial);
        // diagonal plane contains the identity
        let diag = Mat::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let v = cone_subspace_trivial(&desc, &diag, 1);
        assert_eq!(v.status, TrivialityStatus::Nontrivial);
        assert_eq!(v.method, TrivialityMethod::EigSearch);
    }
}

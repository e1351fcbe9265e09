//! Problem data for
//!
//! ```text
//! min  h(F X) + <C, X> + ||X||_*   s.t.  A X - b ∈ Q
//! ```
//!
//! together with KKT residuals for the primal and dual systems and a
//! generator of instances with a known exact KKT point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cones::{self, PolyhedralConeSpec, SegmentKind};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::nucops::{self, ProxPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HKind {
    Quadratic,
}

/// `h(z) = 1/2 Σ w_i (z_i - t_i)^2` with `w > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSpec {
    pub kind: HKind,
    pub target: Vector,
    pub weight: Vector,
}

impl HSpec {
    pub fn quadratic(target: Vector, weight: Vector) -> Result<Self> {
        if target.len() != weight.len() {
            return Err(Error::Shape("h target and weight lengths differ".into()));
        }
        if weight.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Input("h weights must be positive and finite".into()));
        }
        Ok(HSpec { kind: HKind::Quadratic, target, weight })
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn value(&self, z: &Vector) -> f64 {
        0.5 * z.iter().zip(self.target.iter()).zip(self.weight.iter()).map(|((z, t), w)| w * (z - t).powi(2)).sum::<f64>()
    }

    pub fn grad(&self, z: &Vector) -> Vector {
        (z - &self.target).component_mul(&self.weight)
    }

    /// Diagonal of the Hessian.
    pub fn hess_diag(&self) -> &Vector {
        &self.weight
    }

    /// `∇h*(u) = u / w + t`.
    pub fn conj_grad(&self, u: &Vector) -> Vector {
        u.component_div(&self.weight) + &self.target
    }
}

/// Data `(h, F, A, C, b, Q)`. Linear maps act on the column-major
/// vectorization of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub m: usize,
    pub n: usize,
    pub f: Mat,
    pub amap: Mat,
    pub c: Mat,
    pub b: Vector,
    pub q: PolyhedralConeSpec,
    pub h: HSpec,
}

impl ProblemInstance {
    pub fn d(&self) -> usize {
        self.f.nrows()
    }

    pub fn e(&self) -> usize {
        self.amap.nrows()
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    pub fn validate(&self) -> Result<()> {
        let mn = self.mn();
        let shape = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Shape(format!("{what} is not conformable")))
            }
        };
        shape("F", self.f.ncols() == mn)?;
        shape("A", self.amap.ncols() == mn)?;
        shape("C", self.c.shape() == (self.m, self.n))?;
        shape("b", self.b.len() == self.e())?;
        shape("Q", self.q.dim() == self.e())?;
        shape("h", self.h.dim() == self.d())?;
        let finite = linalg::all_finite(&self.f)
            && linalg::all_finite(&self.amap)
            && linalg::all_finite(&self.c)
            && self.b.iter().all(|v| v.is_finite())
            && self.h.target.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn apply_f(&self, x: &Mat) -> Vector {
        &self.f * linalg::vec_of(x)
    }

    pub fn adjoint_f(&self, v: &Vector) -> Mat {
        linalg::mat_of(&(self.f.transpose() * v), self.m, self.n)
    }

    pub fn apply_a(&self, x: &Mat) -> Vector {
        &self.amap * linalg::vec_of(x)
    }

    pub fn adjoint_a(&self, y: &Vector) -> Mat {
        linalg::mat_of(&(self.amap.transpose() * y), self.m, self.n)
    }

    /// `A X - b`.
    pub fn constraint_value(&self, x: &Mat) -> Vector {
        self.apply_a(x) - &self.b
    }

    pub fn objective(&self, x: &Mat) -> f64 {
        self.h.value(&self.apply_f(x)) + linalg::inner(&self.c, x) + linalg::nuclear_norm(x)
    }

    /// Distance of `A X - b` to `Q`.
    pub fn infeasibility(&self, x: &Mat) -> f64 {
        let q = self.constraint_value(x);
        (&q - self.q.project(&q)).norm()
    }

    /// `S = -A*y - F*∇h(F X) - C`.
    pub fn dual_slack(&self, x: &Mat, y: &Vector) -> Mat {
        -self.adjoint_a(y) - self.adjoint_f(&self.h.grad(&self.apply_f(x))) - &self.c
    }

    fn check_point(&self, x: &Mat, y: &Vector) -> Result<()> {
        if x.shape() != (self.m, self.n) || y.len() != self.e() {
            return Err(Error::Shape("point does not match the instance".into()));
        }
        if !linalg::all_finite(x) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// A primal-dual point `(X, y, w, S)` with named residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct KKTPoint {
    pub x: Mat,
    pub y: Vector,
    pub w: Vector,
    pub s: Mat,
    pub residuals: BTreeMap<String, f64>,
}

impl KKTPoint {
    /// Fill `w` and `S` from `(X, y)` and compute every residual with zero
    /// perturbation.
    pub fn from_primal(inst: &ProblemInstance, x: Mat, y: Vector) -> Result<Self> {
        inst.check_point(&x, &y)?;
        let w = inst.h.grad(&inst.apply_f(&x));
        let s = inst.dual_slack(&x, &y);
        let mut pt = KKTPoint { x, y, w, s, residuals: BTreeMap::new() };
        pt.refresh(inst)?;
        Ok(pt)
    }

    pub fn refresh(&mut self, inst: &ProblemInstance) -> Result<()> {
        let e = inst.e();
        let mn = inst.mn();
        let p = kkt_residual_primal(inst, &self.x, &self.y, &Mat::zeros(inst.m, inst.n), &Vector::zeros(e))?;
        let d = kkt_residual_dual(inst, &self.y, &self.w, &self.s, &self.x)?;
        debug_assert_eq!(self.x.len(), mn);
        self.residuals = BTreeMap::from([
            ("stationarity".to_string(), p.stationarity),
            ("complementarity".to_string(), p.complementarity),
            ("dual_linear".to_string(), d.linear),
            ("dual_conjugate".to_string(), d.conjugate),
            ("dual_spectral".to_string(), d.spectral),
            ("dual_polar".to_string(), d.polar),
        ]);
        Ok(())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalResidual {
    pub stationarity: f64,
    pub complementarity: f64,
}

impl PrimalResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity)
    }
}

/// Residuals of `δ1 ∈ F*∇h(FX) + C + ∂θ(X) + A*y`, `y ∈ N_Q(AX - b + δ2)`.
///
/// Stationarity uses `S ∈ ∂θ(X) ⇔ X = Prox_θ(X + S)`; complementarity uses
/// `y ∈ N_Q(q) ⇔ q = Π_Q(q + y)`.
pub fn kkt_residual_primal(
    inst: &ProblemInstance,
    x: &Mat,
    y: &Vector,
    delta1: &Mat,
    delta2: &Vector,
) -> Result<PrimalResidual> {
    inst.check_point(x, y)?;
    if delta1.shape() != x.shape() || delta2.len() != y.len() {
        return Err(Error::Shape("perturbation does not match the instance".into()));
    }
    let s = inst.dual_slack(x, y) + delta1;
    let stationarity = (x - nucops::svt(&(x + &s), 1.0)?).norm();
    let q = inst.constraint_value(x) + delta2;
    let complementarity = (&q - inst.q.project(&(&q + y))).norm();
    Ok(PrimalResidual { stationarity, complementarity })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualResidual {
    /// `||A*y + F*w + S + C||`
    pub linear: f64,
    /// `||F X - ∇h*(w)||`
    pub conjugate: f64,
    /// `||S - Π_ball(S + X)||`, i.e. `X ∈ ∂θ*(S)`.
    pub spectral: f64,
    /// `||y - Π_Q°(y + A X - b)||`, i.e. `A X - b ∈ N_Q°(y)`.
    pub polar: f64,
}

impl DualResidual {
    pub fn max(&self) -> f64 {
        self.linear.max(self.conjugate).max(self.spectral).max(self.polar)
    }
}

pub fn kkt_residual_dual(inst: &ProblemInstance, y: &Vector, w: &Vector, s: &Mat, x: &Mat) -> Result<DualResidual> {
    inst.check_point(x, y)?;
    if w.len() != inst.d() || s.shape() != x.shape() {
        return Err(Error::Shape("dual point does not match the instance".into()));
    }
    let linear = (inst.adjoint_a(y) + inst.adjoint_f(w) + s + &inst.c).norm();
    let conjugate = (inst.apply_f(x) - inst.h.conj_grad(w)).norm();
    let spectral = (s - nucops::project_spectral_ball(&(s + x), 1.0)?).norm();
    let q = inst.constraint_value(x);
    let polar = (y - inst.q.project_polar(&(y + q))).norm();
    Ok(DualResidual { linear, conjugate, spectral, polar })
}

// ---------------------------------------------------------------------------
// Planted instances

/// Role of one constraint coordinate at the planted point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QRole {
    /// Equality row, multiplier free.
    Zero,
    /// Inequality active with a strictly negative multiplier.
    Active,
    /// Inequality inactive.
    Inactive,
    /// Inequality active with a zero multiplier.
    Degenerate,
    /// Unconstrained row.
    Free,
}

impl QRole {
    pub fn from_char(c: char) -> Result<Self> {
        Ok(match c {
            'z' => QRole::Zero,
            'a' => QRole::Active,
            'i' => QRole::Inactive,
            'd' => QRole::Degenerate,
            'f' => QRole::Free,
            _ => return Err(Error::Input(format!("unknown constraint role '{c}' (expected z/a/i/d/f)"))),
        })
    }

    pub fn kind(self) -> SegmentKind {
        match self {
            QRole::Zero => SegmentKind::Zero,
            QRole::Free => SegmentKind::Free,
            _ => SegmentKind::Nonneg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FMap {
    /// `F = I` (requires `d = m n`).
    Identity,
    /// Gaussian `d x mn`: injective iff `d >= mn`.
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AMap {
    Gaussian,
    Zero,
    /// Gaussian with the last row repeating the first one.
    Redundant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frames {
    Identity,
    Random,
}

/// Everything needed to build an instance around a chosen KKT point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    /// `(|a|, |b1|, |b2|, |b3|)`
    pub counts: [usize; 4],
    /// Nonzero singular values of `X̄`, one per index in `a`.
    pub sigma: Vec<f64>,
    /// Singular values of the `W` block strictly between 0 and 1, one per index in `b2`.
    pub w_interior: Vec<f64>,
    pub q_roles: Vec<QRole>,
    pub fmap: FMap,
    pub amap: AMap,
    pub frames: Frames,
    /// Rotate the diagonal `W` by random orthogonal factors on the `b` block.
    pub mix_w: bool,
}

impl PlantSpec {
    /// The `2 x 2` running example: `X̄ = diag(2, 0)`, `S̄ = diag(1, 0.5)`.
    pub fn running_example() -> Self {
        PlantSpec {
            m: 2,
            n: 2,
            d: 4,
            counts: [1, 0, 1, 0],
            sigma: vec![2.0],
            w_interior: vec![0.5],
            q_roles: Vec::new(),
            fmap: FMap::Identity,
            amap: AMap::Gaussian,
            frames: Frames::Identity,
            mix_w: false,
        }
    }

    pub fn e(&self) -> usize {
        self.q_roles.len()
    }

    pub fn validate(&self) -> Result<()> {
        let [na, nb1, nb2, nb3] = self.counts;
        let bad = |msg: String| Err(Error::Input(msg));
        if self.m > self.n {
            return bad(format!("planted instances use m <= n, got {}x{}", self.m, self.n));
        }
        if na + nb1 + nb2 + nb3 != self.m {
            return bad(format!("counts {:?} do not add up to m = {}", self.counts, self.m));
        }
        if self.sigma.len() != na || self.sigma.iter().any(|s| !(*s > 0.0)) {
            return bad(format!("need {na} positive singular values for a, got {:?}", self.sigma));
        }
        if self.w_interior.len() != nb2 || self.w_interior.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return bad(format!("need {nb2} values in (0, 1) for b2, got {:?}", self.w_interior));
        }
        if self.fmap == FMap::Identity && self.d != self.m * self.n {
            return bad(format!("identity F needs d = mn = {}, got {}", self.m * self.n, self.d));
        }
        if self.amap == AMap::Redundant && self.e() < 2 {
            return bad("a redundant A needs at least two rows".into());
        }
        Ok(())
    }

    /// Whether the cone data carry a semidefinite block of size at least 2.
    pub fn has_sd_block(&self) -> bool {
        self.counts[1] > 0
    }
}

/// Build `(instance, reference point)` such that the reference point satisfies
/// the primal and dual KKT systems exactly (up to rounding).
pub fn plant_instance(spec: &PlantSpec, seed: u64) -> Result<(ProblemInstance, KKTPoint)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n, d, e) = (spec.m, spec.n, spec.d, spec.e());
    let mn = m * n;
    let [na, nb1, nb2, _] = spec.counts;
    let nb = m - na;

    let (u, v) = match spec.frames {
        Frames::Identity => (Mat::identity(m, m), Mat::identity(n, n)),
        Frames::Random => (linalg::random_orthogonal(&mut rng, m), linalg::random_orthogonal(&mut rng, n)),
    };

    // X̄ = U_a diag(s) V_a^T
    let mut xt = Mat::zeros(m, n);
    for i in 0..na {
        xt[(i, i)] = spec.sigma[i];
    }
    // S̄ = U_a V_a^T + U_b W [V_b V2]^T
    let mut st = Mat::zeros(m, n);
    for i in 0..na {
        st[(i, i)] = 1.0;
    }
    let mut wdiag = Mat::zeros(nb, n - na);
    for k in 0..nb {
        wdiag[(k, k)] = if k < nb1 {
            1.0
        } else if k < nb1 + nb2 {
            spec.w_interior[k - nb1]
        } else {
            0.0
        };
    }
    let w_block = if spec.mix_w {
        let p = linalg::random_orthogonal(&mut rng, nb);
        let q = linalg::random_orthogonal(&mut rng, n - na);
        p * wdiag * q.transpose()
    } else {
        wdiag
    };
    st.view_mut((na, na), (nb, n - na)).copy_from(&w_block);
    let x_bar = &u * xt * v.transpose();
    let s_bar = &u * st * v.transpose();

    let f = match spec.fmap {
        FMap::Identity => Mat::identity(mn, mn),
        FMap::Gaussian => linalg::gaussian_matrix(&mut rng, d, mn),
        FMap::Zero => Mat::zeros(d, mn),
    };
    let mut amap = match spec.amap {
        AMap::Gaussian | AMap::Redundant => linalg::gaussian_matrix(&mut rng, e, mn),
        AMap::Zero => Mat::zeros(e, mn),
    };
    if spec.amap == AMap::Redundant {
        let first = amap.row(0).into_owned();
        amap.set_row(e - 1, &first);
    }

    let mut q_bar = Vector::zeros(e);
    let mut y_bar = Vector::zeros(e);
    for (i, role) in spec.q_roles.iter().enumerate() {
        match role {
            QRole::Zero => y_bar[i] = rng.sample::<f64, _>(rand_distr::StandardNormal),
            QRole::Active => y_bar[i] = -(0.5 + rng.gen::<f64>()),
            QRole::Inactive => q_bar[i] = 0.5 + rng.gen::<f64>(),
            QRole::Degenerate => {}
            QRole::Free => q_bar[i] = rng.sample::<f64, _>(rand_distr::StandardNormal),
        }
    }
    let q = PolyhedralConeSpec::from_kinds(&spec.q_roles.iter().map(|r| r.kind()).collect::<Vec<_>>());
    let b = &amap * linalg::vec_of(&x_bar) - &q_bar;

    let target = linalg::gaussian_vector(&mut rng, d);
    let weight = Vector::from_fn(d, |_, _| 0.5 + 1.5 * rng.gen::<f64>());
    let h = HSpec::quadratic(target, weight)?;
    let w_bar = h.grad(&(&f * linalg::vec_of(&x_bar)));
    let c = -linalg::mat_of(&(amap.transpose() * &y_bar), m, n)
        - linalg::mat_of(&(f.transpose() * &w_bar), m, n)
        - &s_bar;

    let inst = ProblemInstance { m, n, f, amap, c, b, q, h };
    inst.validate()?;
    let mut pt = KKTPoint { x: x_bar, y: y_bar, w: w_bar, s: s_bar, residuals: BTreeMap::new() };
    pt.refresh(&inst)?;
    Ok((inst, pt))
}

// ---------------------------------------------------------------------------
// Multiplier uniqueness probe

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierProbe {
    /// `Some(true)` when the multiplier system has no free directions,
    /// `Some(false)` when a second multiplier was found, `None` otherwise.
    pub unique: Option<bool>,
    /// A second multiplier `(y, W)`.
    pub second_point: Option<(Vector, Mat)>,
}

/// Look for a second multiplier at a stationary `X̄`: points `(y, W)` with
/// `A*y + F*∇h(F X̄) + C + U_a V_a^T + U_b W [V_b V2]^T = 0`,
/// `||W||_2 <= 1` and `y ∈ N_Q(A X̄ - b)`, other than the reference one.
pub fn multiplier_probe(inst: &ProblemInstance, x_bar: &Mat, y_bar: &Vector, probes: usize, seed: u64) -> Result<MultiplierProbe> {
    let s_bar = inst.dual_slack(x_bar, y_bar);
    let pp = ProxPair::new(&(x_bar + &s_bar))?;
    let p = &pp.part;
    let rest: Vec<usize> = p.b.iter().cloned().chain(p.c()).collect();
    let nb = p.b.len();
    let nr = rest.len();
    let e = inst.e();
    let q_bar = inst.constraint_value(x_bar);
    let tol = 1e-8 * (1.0 + q_bar.amax());
    let normal = cones::poly_normal(&inst.q, &q_bar, tol)?;

    // Unknowns (dy, vec(dW)); the equation is A*dy + U_b dW [V_b V2]^T = 0.
    // Coordinates of y fixed to zero by N_Q are dropped.
    let y_free: Vec<usize> = (0..e).filter(|&i| normal[i] != cones::Sign::Zero).collect();
    let unknowns = y_free.len() + nb * nr;
    if unknowns == 0 {
        return Ok(MultiplierProbe { unique: Some(true), second_point: None });
    }
    let mut map = Mat::zeros(inst.mn(), unknowns);
    for (k, &i) in y_free.iter().enumerate() {
        map.set_column(k, &inst.amap.row(i).transpose());
    }
    for (jj, &j) in rest.iter().enumerate() {
        for (ii, &i) in p.b.iter().enumerate() {
            let g = pp.entry_functional(i, j);
            map.set_column(y_free.len() + ii + jj * nb, &linalg::vec_of(&g));
        }
    }
    let ker = linalg::null_space(&map, 1e-10);
    if ker.ncols() == 0 {
        return Ok(MultiplierProbe { unique: Some(true), second_point: None });
    }

    let st = pp.rotate(&s_bar)?;
    let w_bar = linalg::submatrix(&st, &p.b, &rest);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes.max(1) {
        let dir = &ker * linalg::gaussian_vector(&mut rng, ker.ncols());
        let dir = dir.normalize();
        let candidate = |t: f64| -> (Vector, Mat) {
            let mut y = y_bar.clone();
            for (k, &i) in y_free.iter().enumerate() {
                y[i] += t * dir[k];
            }
            let dw = Mat::from_fn(nb, nr, |i, j| dir[y_free.len() + i + j * nb]);
            (y, &w_bar + dw * t)
        };
        let feasible = |t: f64| -> bool {
            let (y, w) = candidate(t);
            let y_ok = (0..e).all(|i| normal[i].admits(y[i], 1e-12));
            y_ok && (nb == 0 || nr == 0 || linalg::spectral_norm(&w) <= 1.0 + 1e-12)
        };
        // largest step in either direction that stays feasible
        for sign in [1.0, -1.0] {
            let mut t = 1.0;
            while t > 1e-6 && !feasible(sign * t) {
                t *= 0.5;
            }
            if t > 1e-6 {
                let (y, w) = candidate(sign * t);
                return Ok(MultiplierProbe { unique: Some(false), second_point: Some((y, w)) });
            }
        }
    }
    Ok(MultiplierProbe { unique: None, second_point: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_example_is_exact() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        assert_eq!(pt.x, Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        assert_eq!(pt.s, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]));
        assert!(pt.max_residual() <= 1e-12, "{:?}", pt.residuals);
        assert_eq!(inst.e(), 0);
    }

    #[test]
    fn conjugate_residual_closed_form() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 3).unwrap();
        let delta = Vector::from_vec(vec![0.1, -0.2, 0.0, 0.3]);
        let r = kkt_residual_dual(&inst, &pt.y, &(&pt.w + &delta), &pt.s, &pt.x).unwrap();
        let expect = delta.component_div(&inst.h.weight).norm();
        assert!((r.conjugate - expect).abs() < 1e-12);
    }

    #[test]
    fn complementarity_measures_sign_violation() {
        let mut spec = PlantSpec::running_example();
        spec.q_roles = vec![QRole::Degenerate];
        let (inst, pt) = plant_instance(&spec, 1).unwrap();
        let y = Vector::from_vec(vec![0.25]);
        let z = Mat::zeros(2, 2);
        let r = kkt_residual_primal(&inst, &pt.x, &y, &z, &Vector::zeros(1)).unwrap();
        assert!((r.complementarity - 0.25).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_counts_are_rejected() {
        let mut spec = PlantSpec::running_example();
        spec.counts = [1, 1, 1, 0];
        assert!(matches!(plant_instance(&spec, 0), Err(Error::Input(_))));
    }

    #[test]
    fn probe_finds_redundant_row_multiplier() {
        let spec = PlantSpec {
            m: 2,
            n: 3,
            d: 6,
            counts: [1, 0, 1, 0],
            sigma: vec![1.5],
            w_interior: vec![0.4],
            q_roles: vec![QRole::Zero, QRole::Active, QRole::Zero],
            fmap: FMap::Gaussian,
            amap: AMap::Redundant,
            frames: Frames::Random,
            mix_w: false,
        };
        let (inst, pt) = plant_instance(&spec, 5).unwrap();
        let probe = multiplier_probe(&inst, &pt.x, &pt.y, 20, 1).unwrap();
        assert_eq!(probe.unique, Some(false));
        let (y2, _) = probe.second_point.unwrap();
        assert!((&y2 - &pt.y).norm() > 1e-6);
    }

    #[test]
    fn probe_without_freedom_is_unique() {
        let mut spec = PlantSpec::running_example();
        spec.counts = [2, 0, 0, 0];
        spec.sigma = vec![2.0, 1.0];
        spec.w_interior = vec![];
        let (inst, pt) = plant_instance(&spec, 0).unwrap();
        assert_eq!(multiplier_probe(&inst, &pt.x, &pt.y, 5, 0).unwrap().unique, Some(true));
    }
}

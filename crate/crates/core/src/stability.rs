//! Constraint qualifications and second-order conditions at a KKT point, the
//! equivalence report tying them together, and an empirical test of robust
//! isolated calmness of the KKT solution mapping.
//!
//! Every check reduces to deciding `K ∩ L = {0}` for a computable cone `K`
//! and a subspace `L` (see [`crate::cones::cone_subspace_trivial`]).
//!
//! * primal SOSC: `{H ∈ ker F : A H ∈ C_Q, H ∈ C_θ, ψ*(H) = 0}`
//! * dual SRCQ: `{H ∈ ker F : A H ∈ (C_Q°)°, H ∈ (C_θ*)°}`
//! * primal SRCQ: `{y ∈ (C_Q)° : -A*y ∈ (C_θ)°}`
//! * dual SOSC: `{y ∈ C_Q° : -A*y ∈ C_θ*, φ*(-A*y) = 0}`
//!
//! The first two are built from different block descriptions, so their
//! agreement is a real test; the last two share the block structure of
//! `(C_θ)°` and their agreement is a weaker check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cones::{
    self, ConeDescriptor, TrivialityMethod, TrivialityStatus, TrivialityVerdict,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{self, HKind, KKTPoint, ProblemInstance};
use crate::nucops::ProxPair;
use crate::solver::{self, SolverConfig};

/// Residual level above which a point is not accepted as a KKT point.
pub const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    /// `Some(true)` when the condition holds, `None` when undecided.
    pub holds: Option<bool>,
    pub status: TrivialityStatus,
    pub method: TrivialityMethod,
    /// Nonzero element of the cone-subspace intersection, when one was found.
    pub witness: Option<Vec<f64>>,
}

impl From<TrivialityVerdict> for CheckResult {
    fn from(v: TrivialityVerdict) -> Self {
        CheckResult {
            holds: v.is_trivial(),
            status: v.status,
            method: v.method,
            witness: v.witness.map(|w| w.iter().cloned().collect()),
        }
    }
}

/// Data shared by the checkers at a KKT pair `(X̄, ȳ)`.
pub struct CheckContext<'a> {
    pub inst: &'a ProblemInstance,
    pub x_bar: Mat,
    pub y_bar: Vector,
    pub s_bar: Mat,
    /// Prox pair of `X̄ + S̄`.
    pub pp: ProxPair,
    pub q_bar: Vector,
    pub tol: f64,
    pub seed: u64,
}

impl<'a> CheckContext<'a> {
    pub fn new(inst: &'a ProblemInstance, x_bar: &Mat, y_bar: &Vector, seed: u64) -> Result<Self> {
        inst.validate()?;
        let zero_d1 = Mat::zeros(inst.m, inst.n);
        let r = model::kkt_residual_primal(inst, x_bar, y_bar, &zero_d1, &Vector::zeros(inst.e()))?;
        let scale = 1.0 + linalg::spectral_norm(x_bar) + y_bar.amax();
        if r.max() > KKT_TOL * scale {
            return Err(Error::NotKkt { residual: r.max(), tol: KKT_TOL * scale });
        }
        let s_bar = inst.dual_slack(x_bar, y_bar);
        let pp = ProxPair::new(&(x_bar + &s_bar))?;
        let q_bar = inst.constraint_value(x_bar);
        let tol = 1e-7 * (1.0 + q_bar.amax() + y_bar.amax());
        Ok(CheckContext { inst, x_bar: x_bar.clone(), y_bar: y_bar.clone(), s_bar, pp, q_bar, tol, seed })
    }

    pub fn from_point(inst: &'a ProblemInstance, pt: &KKTPoint, seed: u64) -> Result<Self> {
        Self::new(inst, &pt.x, &pt.y, seed)
    }

    fn ker_f(&self) -> Mat {
        let mn = self.inst.mn();
        if self.inst.d() == 0 {
            Mat::identity(mn, mn)
        } else {
            linalg::null_space(&self.inst.f, 1e-10)
        }
    }

    fn minus_a_adjoint(&self) -> Mat {
        -self.inst.amap.transpose()
    }

    fn signs_on_image(&self, signs: &[cones::Sign]) -> ConeDescriptor {
        ConeDescriptor::from_signs(signs).pullback(&self.inst.amap)
    }
}

/// `A R^{m×n} + T_Q(A X̄ - b) = R^e`, decided as `ker A* ∩ N_Q(A X̄ - b) = {0}`.
pub fn check_rcq(inst: &ProblemInstance, x_bar: &Mat, seed: u64) -> Result<CheckResult> {
    inst.validate()?;
    let q_bar = inst.constraint_value(x_bar);
    let tol = 1e-7 * (1.0 + q_bar.amax());
    cones::check_in_cone(&inst.q, &q_bar, tol)?;
    let normal = cones::poly_normal(&inst.q, &q_bar, tol)?;
    let desc = ConeDescriptor::from_signs(&normal);
    let e = inst.e();
    let basis = if e == 0 { Mat::zeros(0, 0) } else { linalg::null_space(&inst.amap.transpose(), 1e-10) };
    Ok(cones::cone_subspace_trivial(&desc, &basis, seed).into())
}

pub fn check_sosc_primal(ctx: &CheckContext) -> Result<CheckResult> {
    let crit_q = cones::poly_critical(&ctx.inst.q, &ctx.q_bar, &ctx.y_bar, ctx.tol)?;
    let desc = ctx
        .signs_on_image(&crit_q)
        .intersect(&cones::critical_cone_theta(&ctx.pp))?
        .intersect(&cones::psi_star_kernel(&ctx.pp))?;
    Ok(cones::cone_subspace_trivial(&desc, &ctx.ker_f(), ctx.seed).into())
}

pub fn check_srcq_dual(ctx: &CheckContext) -> Result<CheckResult> {
    let crit_polar = cones::poly_critical_polar(&ctx.inst.q, &ctx.y_bar, &ctx.q_bar, ctx.tol)?;
    let desc = ctx
        .signs_on_image(&cones::polar_signs(&crit_polar))
        .intersect(&cones::polar_theta_conj(&ctx.pp))?;
    Ok(cones::cone_subspace_trivial(&desc, &ctx.ker_f(), ctx.seed).into())
}

pub fn check_srcq_primal(ctx: &CheckContext) -> Result<CheckResult> {
    let crit_q = cones::poly_critical(&ctx.inst.q, &ctx.q_bar, &ctx.y_bar, ctx.tol)?;
    let desc = ConeDescriptor::from_signs(&cones::polar_signs(&crit_q))
        .intersect(&cones::polar_theta(&ctx.pp).pullback(&ctx.minus_a_adjoint()))?;
    let e = ctx.inst.e();
    Ok(cones::cone_subspace_trivial(&desc, &Mat::identity(e, e), ctx.seed).into())
}

/// The curvature term `<H_w, ∇²h*(w̄) H_w>` is positive definite for
/// quadratic `h`, which forces `H_w = 0`; other `h` are rejected.
pub fn check_sosc_dual(ctx: &CheckContext) -> Result<CheckResult> {
    match ctx.inst.h.kind {
        HKind::Quadratic => {}
    }
    let crit_polar = cones::poly_critical_polar(&ctx.inst.q, &ctx.y_bar, &ctx.q_bar, ctx.tol)?;
    let slack = cones::critical_cone_theta_conj(&ctx.pp).intersect(&cones::phi_star_kernel(&ctx.pp))?;
    let desc = ConeDescriptor::from_signs(&crit_polar).intersect(&slack.pullback(&ctx.minus_a_adjoint()))?;
    let e = ctx.inst.e();
    Ok(cones::cone_subspace_trivial(&desc, &Mat::identity(e, e), ctx.seed).into())
}

// ---------------------------------------------------------------------------
// Calmness

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalmnessEstimate {
    pub radii: Vec<f64>,
    /// Per radius: max of `||(X, y) - (X̄, ȳ)|| / ||(δ1, δ2)||` over retained trials.
    pub max_ratio: Vec<f64>,
    /// Per radius: max of `||y - ȳ|| / ||(δ1, δ2)||`.
    pub max_multiplier_drift: Vec<f64>,
    pub solvable_fraction: Vec<f64>,
    /// Largest solver residual among retained trials.
    pub max_residual: f64,
    pub kappa_hat: f64,
    /// `max_ratio` spread (largest over smallest) across radii.
    pub variation: f64,
    /// Every trial solved and `variation <= 3`.
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct CalmnessOptions {
    pub radii: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for CalmnessOptions {
    fn default() -> Self {
        CalmnessOptions { radii: vec![1e-2, 1e-3, 1e-4], trials: 50, seed: 0, solver: SolverConfig::default() }
    }
}

/// Perturb `(δ1, δ2)` uniformly on spheres of the given radii, re-solve from
/// the reference point and record how far the solution moves.
pub fn calmness_experiment(inst: &ProblemInstance, reference: &KKTPoint, opts: &CalmnessOptions) -> Result<CalmnessEstimate> {
    let (m, n, e) = (inst.m, inst.n, inst.e());
    let mn = inst.mn();
    let zero_d1 = Mat::zeros(m, n);
    let zero_d2 = Vector::zeros(e);
    let r0 = model::kkt_residual_primal(inst, &reference.x, &reference.y, &zero_d1, &zero_d2)?;
    if r0.max() > 1e-10 {
        return Err(Error::NotKkt { residual: r0.max(), tol: 1e-10 });
    }
    let mut cfg = opts.solver.clone();
    cfg.warm_start = Some(reference.clone());
    let base = solver::solve_perturbed(inst, &zero_d1, &zero_d2, &cfg)?;
    if !base.converged {
        return Err(Error::Input(format!("solver fails on the unperturbed instance (residual {:e})", base.residual)));
    }

    let mut est = CalmnessEstimate {
        radii: opts.radii.clone(),
        max_ratio: Vec::new(),
        max_multiplier_drift: Vec::new(),
        solvable_fraction: Vec::new(),
        max_residual: 0.0,
        kappa_hat: 0.0,
        variation: f64::INFINITY,
        stable: false,
    };
    for (ri, &radius) in opts.radii.iter().enumerate() {
        let mut ratio: f64 = 0.0;
        let mut drift: f64 = 0.0;
        let mut solved = 0;
        for t in 0..opts.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(((ri as u64) << 32) | t as u64);
            let g = linalg::gaussian_vector(&mut rng, mn + e);
            let scale = if radius == 0.0 { 0.0 } else { radius / g.norm() };
            let g = g * scale;
            let d1 = linalg::mat_of(&g.rows(0, mn).into_owned(), m, n);
            let d2 = g.rows(mn, e).into_owned();
            let out = solver::solve_perturbed(inst, &d1, &d2, &cfg)?;
            if !out.converged {
                continue;
            }
            solved += 1;
            est.max_residual = est.max_residual.max(out.residual);
            let size = g.norm();
            if size == 0.0 {
                continue;
            }
            let dx = (&out.point.x - &reference.x).norm_squared();
            let dy = (&out.point.y - &reference.y).norm();
            ratio = ratio.max((dx + dy * dy).sqrt() / size);
            drift = drift.max(dy / size);
        }
        est.max_ratio.push(ratio);
        est.max_multiplier_drift.push(drift);
        est.solvable_fraction.push(if opts.trials == 0 { 1.0 } else { solved as f64 / opts.trials as f64 });
    }
    est.kappa_hat = est.max_ratio.iter().cloned().fold(0.0, f64::max);
    let lo = est.max_ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    est.variation = if lo > 0.0 { est.kappa_hat / lo } else if est.kappa_hat == 0.0 { 1.0 } else { f64::INFINITY };
    est.stable = est.variation <= 3.0 && est.solvable_fraction.iter().all(|f| *f == 1.0);
    Ok(est)
}

// ---------------------------------------------------------------------------
// Equivalence report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rcq: CheckResult,
    pub sosc_primal: CheckResult,
    pub srcq_dual: CheckResult,
    pub srcq_primal: CheckResult,
    pub sosc_dual: CheckResult,
    /// `sosc_primal == srcq_dual`, undefined unless both are decided.
    pub thm51_consistent: Option<bool>,
    /// `sosc_dual == srcq_primal`, undefined unless both are decided.
    pub thm52_consistent: Option<bool>,
    /// All four conditions agree (and, when they hold, calmness is observed).
    pub thm53_consistent: Option<bool>,
    pub calmness: Option<CalmnessEstimate>,
    /// Whether the calmness experiment matches the verdicts. Only asserted when
    /// the four conditions hold; a stable ratio is not evidence either way otherwise.
    pub calmness_agrees: Option<bool>,
}

impl StabilityReport {
    /// A decided disagreement between conditions the theory says are equivalent.
    pub fn has_inconsistency(&self) -> bool {
        [self.thm51_consistent, self.thm52_consistent, self.thm53_consistent].contains(&Some(false))
    }

    pub fn has_inconclusive(&self) -> bool {
        [&self.sosc_primal, &self.srcq_dual, &self.srcq_primal, &self.sosc_dual].iter().any(|c| c.holds.is_none())
    }

    pub fn all_hold(&self) -> bool {
        [&self.sosc_primal, &self.srcq_dual, &self.srcq_primal, &self.sosc_dual].iter().all(|c| c.holds == Some(true))
    }
}

fn agree(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    Some(a? == b?)
}

/// Run every checker at the reference point. Refuses when RCQ fails, since
/// the equivalences are only claimed under RCQ.
pub fn theorem53_report(
    inst: &ProblemInstance,
    reference: &KKTPoint,
    calmness: Option<&CalmnessOptions>,
    seed: u64,
) -> Result<StabilityReport> {
    let rcq = check_rcq(inst, &reference.x, seed)?;
    if rcq.holds != Some(true) {
        return Err(Error::RcqViolated { witness: rcq.witness.unwrap_or_default() });
    }
    let ctx = CheckContext::from_point(inst, reference, seed)?;
    let sosc_primal = check_sosc_primal(&ctx)?;
    let srcq_dual = check_srcq_dual(&ctx)?;
    let srcq_primal = check_srcq_primal(&ctx)?;
    let sosc_dual = check_sosc_dual(&ctx)?;

    let thm51 = agree(sosc_primal.holds, srcq_dual.holds);
    let thm52 = agree(sosc_dual.holds, srcq_primal.holds);
    let all4 = [sosc_primal.holds, srcq_dual.holds, srcq_primal.holds, sosc_dual.holds];
    let mut thm53 = if all4.iter().all(|h| h.is_some()) { Some(all4.iter().all(|h| *h == all4[0])) } else { None };

    let calm = match calmness {
        Some(opts) => Some(calmness_experiment(inst, reference, opts)?),
        None => None,
    };
    let calmness_agrees = match (&calm, thm53) {
        (Some(c), Some(true)) if all4[0] == Some(true) => Some(c.stable),
        _ => None,
    };
    if calmness_agrees == Some(false) {
        thm53 = Some(false);
    }
    Ok(StabilityReport {
        rcq,
        sosc_primal,
        srcq_dual,
        srcq_primal,
        sosc_dual,
        thm51_consistent: thm51,
        thm52_consistent: thm52,
        thm53_consistent: thm53,
        calmness: calm,
        calmness_agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{PolyhedralConeSpec, Segment, SegmentKind};
    use crate::model::{plant_instance, AMap, FMap, Frames, PlantSpec, QRole};

    fn spec(counts: [usize; 4], d: usize, fmap: FMap, roles: Vec<QRole>) -> PlantSpec {
        let m: usize = counts.iter().sum();
        PlantSpec {
            m,
            n: m + 1,
            d,
            counts,
            sigma: (0..counts[0]).map(|i| 2.0 + i as f64).collect(),
            w_interior: (0..counts[2]).map(|i| 0.3 + 0.1 * i as f64).collect(),
            q_roles: roles,
            fmap,
            amap: AMap::Gaussian,
            frames: Frames::Random,
            mix_w: false,
        }
    }

    #[test]
    fn rcq_examples() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        assert_eq!(check_rcq(&inst, &pt.x, 0).unwrap().holds, Some(true));

        let mut bad = inst.clone();
        bad.amap = Mat::zeros(1, 4);
        bad.b = Vector::zeros(1);
        bad.q = PolyhedralConeSpec { segments: vec![Segment { kind: SegmentKind::Zero, len: 1 }] };
        let r = check_rcq(&bad, &pt.x, 0).unwrap();
        assert_eq!(r.holds, Some(false));
        assert!((r.witness.unwrap()[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn injective_f_gives_sosc() {
        let s = spec([1, 0, 1, 1], 12, FMap::Gaussian, vec![QRole::Active, QRole::Zero]);
        let (inst, pt) = plant_instance(&s, 2).unwrap();
        let ctx = CheckContext::from_point(&inst, &pt, 0).unwrap();
        assert_eq!(check_sosc_primal(&ctx).unwrap().holds, Some(true));
        assert_eq!(check_srcq_dual(&ctx).unwrap().holds, Some(true));
    }

    #[test]
    fn zero_f_without_constraints_fails_both() {
        let s = spec([1, 0, 1, 0], 3, FMap::Zero, vec![]);
        let (inst, pt) = plant_instance(&s, 2).unwrap();
        let ctx = CheckContext::from_point(&inst, &pt, 0).unwrap();
        assert_eq!(check_sosc_primal(&ctx).unwrap().holds, Some(false));
        assert_eq!(check_srcq_dual(&ctx).unwrap().holds, Some(false));
    }

    #[test]
    fn srcq_primal_fails_for_zero_a_with_equality() {
        let mut s = spec([1, 0, 1, 0], 6, FMap::Gaussian, vec![QRole::Zero]);
        s.amap = AMap::Zero;
        let (inst, pt) = plant_instance(&s, 2).unwrap();
        let ctx = CheckContext::from_point(&inst, &pt, 0).unwrap();
        assert_eq!(check_srcq_primal(&ctx).unwrap().holds, Some(false));
        assert_eq!(check_sosc_dual(&ctx).unwrap().holds, Some(false));
    }

    #[test]
    fn report_on_running_example() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        let rep = theorem53_report(&inst, &pt, None, 0).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
        assert_eq!(rep.thm53_consistent, Some(true));
    }
}

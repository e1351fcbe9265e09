//! ADMM for the canonically perturbed problem
//!
//! ```text
//! min h(F X) + <C - δ1, X> + ||Z||_* + δ_Q(s)   s.t.  X = Z,  A X - b + δ2 = s.
//! ```
//!
//! The `X` step is an exact quadratic solve with a cached Cholesky factor,
//! `Z` is a singular value soft-threshold and `s` a coordinatewise
//! projection. The multiplier of the `s` constraint is the `y` of the KKT
//! system and satisfies `y ∈ N_Q(A X - b + δ2)`.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{self, KKTPoint, ProblemInstance};
use crate::nucops;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Initial augmented-Lagrangian penalty.
    pub penalty: f64,
    pub tol_kkt: f64,
    pub max_iter: usize,
    pub warm_start: Option<KKTPoint>,
    /// Maximum number of penalty changes made by residual balancing.
    pub max_penalty_updates: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { penalty: 1.0, tol_kkt: 1e-10, max_iter: 20_000, warm_start: None, max_penalty_updates: 10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0) {
            return Err(Error::Input("penalty must be positive".into()));
        }
        if !(self.tol_kkt >= 1e-12) {
            return Err(Error::Input("tol_kkt must be at least 1e-12".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Best point found; residuals are with respect to the perturbed system.
    pub point: KKTPoint,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best-so-far residual, recorded every iteration.
    pub history: Vec<f64>,
}

/// Solve the perturbed problem. Returns the best iterate even when
/// `max_iter` is reached; `converged` says whether `tol_kkt` was met.
pub fn solve_perturbed(inst: &ProblemInstance, delta1: &Mat, delta2: &Vector, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    inst.validate()?;
    let (m, n, e) = (inst.m, inst.n, inst.e());
    if delta1.shape() != (m, n) || delta2.len() != e {
        return Err(Error::Shape("perturbation does not match the instance".into()));
    }
    let mn = inst.mn();
    let fw = {
        let mut fw = inst.f.clone();
        for (i, w) in inst.h.weight.iter().enumerate() {
            let mut row = fw.row_mut(i);
            row *= *w;
        }
        inst.f.transpose() * fw
    };
    let ata = inst.amap.transpose() * &inst.amap;
    let lin = inst.f.transpose() * inst.h.weight.component_mul(&inst.h.target) - linalg::vec_of(&(&inst.c - delta1));
    let shift = &inst.b - delta2;

    let factor = |rho: f64| -> Result<Cholesky<f64, nalgebra::Dyn>> {
        let k = &fw + Mat::identity(mn, mn) * rho + &ata * rho;
        Cholesky::new(k).ok_or_else(|| Error::Internal("X-step system is not positive definite".into()))
    };

    let (mut z, mut lam, mut mu) = match &cfg.warm_start {
        Some(ws) => {
            let mu = inst.dual_slack(&ws.x, &ws.y) + delta1;
            (linalg::vec_of(&ws.x), ws.y.clone(), linalg::vec_of(&mu))
        }
        None => (Vector::zeros(mn), Vector::zeros(e), Vector::zeros(mn)),
    };
    let mut rho = cfg.penalty;
    let mut chol = factor(rho)?;
    let mut s = inst.q.project(&(&inst.amap * &z - &shift + &lam / rho));

    let residual_of = |zv: &Vector, y: &Vector| -> Result<f64> {
        let zm = linalg::mat_of(zv, m, n);
        Ok(model::kkt_residual_primal(inst, &zm, y, delta1, delta2)?.max())
    };
    let mut best = (residual_of(&z, &lam)?, z.clone(), lam.clone());
    let mut history = vec![best.0];
    let mut updates = 0;
    let mut iterations = 0;

    while best.0 > cfg.tol_kkt && iterations < cfg.max_iter {
        iterations += 1;
        let rhs = &lin - &mu + &z * rho - inst.amap.transpose() * (&lam - (&shift + &s) * rho);
        let x = chol.solve(&rhs);

        let z_old = z.clone();
        let xm = linalg::mat_of(&(&x + &mu / rho), m, n);
        z = linalg::vec_of(&nucops::svt(&xm, 1.0 / rho)?);

        let ax = &inst.amap * &x - &shift;
        let s_old = s.clone();
        s = inst.q.project(&(&ax + &lam / rho));

        let r_z = &x - &z;
        let r_s = &ax - &s;
        mu += &r_z * rho;
        lam += &r_s * rho;

        let res = residual_of(&z, &lam)?;
        if res < best.0 {
            best = (res, z.clone(), lam.clone());
        }
        history.push(best.0);

        // residual balancing
        if updates < cfg.max_penalty_updates && iterations % 10 == 0 {
            let primal = (r_z.norm_squared() + r_s.norm_squared()).sqrt();
            let dual = rho * ((&z - &z_old).norm_squared() + (inst.amap.transpose() * (&s - &s_old)).norm_squared()).sqrt();
            let new_rho = if primal > 10.0 * dual {
                rho * 2.0
            } else if dual > 10.0 * primal {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                rho = new_rho;
                chol = factor(rho)?;
                updates += 1;
            }
        }
    }

    let (residual, zb, yb) = best;
    let x = linalg::mat_of(&zb, m, n);
    let w = inst.h.grad(&inst.apply_f(&x));
    let s_mat = inst.dual_slack(&x, &yb) + delta1;
    let p = model::kkt_residual_primal(inst, &x, &yb, delta1, delta2)?;
    let mut point = KKTPoint { x, y: yb, w, s: s_mat, residuals: Default::default() };
    point.residuals.insert("stationarity".into(), p.stationarity);
    point.residuals.insert("complementarity".into(), p.complementarity);
    Ok(SolveOutcome { point, residual, iterations, converged: residual <= cfg.tol_kkt, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{plant_instance, HSpec, PlantSpec};
    use crate::cones::PolyhedralConeSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn warm_start_at_reference_is_a_fixed_point() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        let cfg = SolverConfig { tol_kkt: 1e-12, warm_start: Some(pt.clone()), ..Default::default() };
        let out = solve_perturbed(&inst, &Mat::zeros(2, 2), &Vector::zeros(0), &cfg).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert!((&out.point.x - &pt.x).norm() < 1e-12);
    }

    #[test]
    fn prox_problem_recovers_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (m, n) = (3, 4);
        let target = linalg::gaussian_matrix(&mut rng, m, n) * 1.5;
        let inst = ProblemInstance {
            m,
            n,
            f: Mat::identity(m * n, m * n),
            amap: Mat::zeros(0, m * n),
            c: Mat::zeros(m, n),
            b: Vector::zeros(0),
            q: PolyhedralConeSpec::default(),
            h: HSpec::quadratic(linalg::vec_of(&target), Vector::repeat(m * n, 1.0)).unwrap(),
        };
        let out = solve_perturbed(&inst, &Mat::zeros(m, n), &Vector::zeros(0), &SolverConfig::default()).unwrap();
        assert!(out.converged, "residual {}", out.residual);
        let expect = nucops::svt(&target, 1.0).unwrap();
        assert!((&out.point.x - expect).abs().max() < 1e-10);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

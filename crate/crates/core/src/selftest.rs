//! Independent oracles and the randomized property suites behind
//! `nucstab selftest` and the acceptance test target.
//!
//! Each `criterion_*` function runs one suite and returns a pass/fail line.
//! Case counts come from [`SuiteConfig`] so the same code serves the quick
//! and the full runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{self, MatrixCone, PolyhedralConeSpec, SegmentKind, Sign};
use crate::io::{self, AnalyzeOptions, InstanceFile};
use crate::linalg::{self, Mat, Vector};
use crate::model::{self, plant_instance, AMap, FMap, Frames, HSpec, PlantSpec, ProblemInstance, QRole};
use crate::nucops::{self, ProxPair, PsiMode};
use crate::solver::{self, SolverConfig};
use crate::stability::{self, CalmnessOptions, CheckContext};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn new(id: u32, title: &str, passed: bool, detail: String) -> Self {
        CriterionOutcome { id, title: title.to_string(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("[{}] criterion {:>2}: {} ({})", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Random cases for the calculus suites (criteria 1 to 5).
    pub cases: usize,
    /// Instances checked against the factorization prox oracle.
    pub oracle_instances: usize,
    /// Planted instances in the equivalence corpus.
    pub corpus: usize,
    pub calm_instances: usize,
    pub calm_negative: usize,
    pub calm_trials: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn full() -> Self {
        SuiteConfig { cases: 1000, oracle_instances: 20, corpus: 120, calm_instances: 10, calm_negative: 3, calm_trials: 50, seed: 2024 }
    }

    pub fn fast() -> Self {
        SuiteConfig { cases: 100, oracle_instances: 3, corpus: 120, calm_instances: 2, calm_negative: 1, calm_trials: 10, seed: 2024 }
    }
}

// ---------------------------------------------------------------------------
// Generators

/// Singular values used by the random suites. Distinct values are at least
/// 0.3 apart and away from 1 unless equal to 1, so finite differences with
/// step 1e-6 stay well inside their band.
const GRID: [f64; 8] = [0.0, 0.0, 0.35, 0.7, 1.0, 1.6, 2.3, 3.1];

pub fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, k: usize, force_one: bool) -> Vec<f64> {
    let mut s: Vec<f64> = (0..k).map(|_| GRID[rng.gen_range(0..GRID.len())]).collect();
    if force_one && k > 0 {
        let i = rng.gen_range(0..k);
        s[i] = 1.0;
    }
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `U diag(sigma) V^T` with Haar-random `U`, `V`; `sigma` has `min(m, n)` entries.
pub fn planted_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, sigma: &[f64]) -> Mat {
    let u = linalg::random_orthogonal(rng, m);
    let v = linalg::random_orthogonal(rng, n);
    let mut d = Mat::zeros(m, n);
    for (i, s) in sigma.iter().enumerate() {
        d[(i, i)] = *s;
    }
    u * d * v.transpose()
}

/// Random size up to 10 x 14 (either orientation) and a planted matrix.
fn random_case<R: Rng + ?Sized>(rng: &mut R, force_one: bool) -> Mat {
    let m = rng.gen_range(1..=10);
    let n = rng.gen_range(m..=14);
    let sigma = random_spectrum(rng, m, force_one);
    let x = planted_matrix(rng, m, n, &sigma);
    if rng.gen_bool(0.25) {
        x.transpose()
    } else {
        x
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> Mat {
    let h = linalg::gaussian_matrix(rng, r, c);
    let norm = h.norm();
    h / norm
}

// ---------------------------------------------------------------------------
// Oracles

/// `Prox_θ(X)` without any SVD: minimize `1/2 ||P Q^T - X||^2 + 1/2 ||P||^2 +
/// 1/2 ||Q||^2` by alternating ridge regressions, using
/// `||Y||_* = min { (||P||^2 + ||Q||^2) / 2 : P Q^T = Y }`.
pub fn prox_by_factorization(x: &Mat, seed: u64, max_iter: usize) -> Mat {
    let (m, n) = x.shape();
    let k = m.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = linalg::gaussian_matrix(&mut rng, m, k);
    let mut q = linalg::gaussian_matrix(&mut rng, n, k);
    let ridge = |g: &Mat| (g.transpose() * g + Mat::identity(k, k)).try_inverse().expect("ridge system is positive definite");
    let mut last = &p * q.transpose();
    for _ in 0..max_iter {
        p = x * &q * ridge(&q);
        q = x.transpose() * &p * ridge(&p);
        let y = &p * q.transpose();
        let change = (&y - &last).abs().max();
        last = y;
        if change < 1e-15 {
            break;
        }
    }
    last
}

/// One-sided difference quotient of the nuclear norm.
fn fd_nuclear(x: &Mat, h: &Mat, t: f64) -> f64 {
    (linalg::nuclear_norm(&(x + h * t)) - linalg::nuclear_norm(x)) / t
}

fn fd_prox(x: &Mat, h: &Mat, t: f64) -> Mat {
    let p0 = nucops::svt(x, 1.0).expect("finite input");
    let p1 = nucops::svt(&(x + h * t), 1.0).expect("finite input");
    (p1 - p0) / t
}

/// `dist(B + t H, ball) / t` with the distance computed through the projection.
fn ball_tangent_quotient(b: &Mat, h: &Mat, t: f64) -> f64 {
    let y = b + h * t;
    let p = nucops::project_spectral_ball(&y, 1.0).expect("finite input");
    (y - p).norm() / t
}

/// The polar of a coordinatewise cone from its generators: coordinate `i` of
/// the polar admits `v` iff `v g <= 0` for every generator `g` of coordinate `i`.
pub fn polar_by_generators(signs: &[Sign]) -> Vec<Sign> {
    signs
        .iter()
        .map(|s| {
            let gens: &[f64] = match s {
                Sign::Zero => &[],
                Sign::Free => &[1.0, -1.0],
                Sign::Nonneg => &[1.0],
                Sign::Nonpos => &[-1.0],
            };
            let ok = |v: f64| gens.iter().all(|g| v * g <= 0.0);
            match (ok(-1.0), ok(1.0)) {
                (true, true) => Sign::Free,
                (false, false) => Sign::Zero,
                (false, true) => Sign::Nonneg,
                (true, false) => Sign::Nonpos,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Criteria

pub fn criterion_1(cfg: &SuiteConfig) -> CriterionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    // B is defined as fl(X - A); the sum A + B can only be exact up to one
    // rounding in the larger summand.
    let mut moreau_fail = 0;
    let mut worst_sigma: f64 = 0.0;
    let mut worst_ball: f64 = 0.0;
    let mut subdiff_fail = 0;
    for k in 0..cfg.cases {
        let m = rng.gen_range(1..=10);
        let n = rng.gen_range(m..=14);
        let sigma = random_spectrum(&mut rng, m, k % 2 == 0);
        let mut x = planted_matrix(&mut rng, m, n, &sigma);
        if k % 4 == 3 {
            x = x.transpose();
        }
        let pp = ProxPair::new(&x).expect("finite input");
        for ((a, b), xv) in pp.prox.iter().zip(pp.proj.iter()).zip(x.iter()) {
            let big = a.abs().max(b.abs());
            if *b != xv - a || (a + b - xv).abs() > big.next_up() - big {
                moreau_fail += 1;
            }
        }
        let got = linalg::singular_values(&pp.prox);
        for (g, s) in got.iter().zip(&sigma) {
            worst_sigma = worst_sigma.max((g - (s - 1.0).max(0.0)).abs());
        }
        worst_ball = worst_ball.max(linalg::spectral_norm(&pp.proj) - 1.0);
        if !nucops::subdiff_membership(&pp.prox, &pp.proj, 1e-9).map(|r| r.member).unwrap_or(false) {
            subdiff_fail += 1;
        }
    }
    let mut worst_oracle: f64 = 0.0;
    let mut done = 0;
    while done < cfg.oracle_instances {
        let m = rng.gen_range(2..=5);
        let n = rng.gen_range(m..=7);
        let x = linalg::gaussian_matrix(&mut rng, m, n) * 0.6;
        let s = linalg::singular_values(&x);
        if s.iter().any(|v| (v - 1.0).abs() < 0.05) {
            continue;
        }
        let oracle = prox_by_factorization(&x, cfg.seed + done as u64, 200_000);
        worst_oracle = worst_oracle.max((oracle - nucops::svt(&x, 1.0).unwrap()).abs().max());
        done += 1;
    }
    let passed = moreau_fail == 0 && worst_sigma <= 1e-10 && worst_ball <= 1e-10 && subdiff_fail == 0 && worst_oracle <= 1e-6;
    CriterionOutcome::new(
        1,
        "prox calculus",
        passed,
        format!(
            "{} cases: Moreau entries off by more than one rounding {moreau_fail}, sigma(A) {worst_sigma:.1e}, ||B||-1 {worst_ball:.1e}, subdifferential failures {subdiff_fail}; factorization oracle on {} instances {worst_oracle:.1e}",
            cfg.cases, cfg.oracle_instances
        ),
    )
}

pub fn criterion_2(cfg: &SuiteConfig) -> CriterionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 2);
    let t = 1e-6;
    let mut worst_theta: f64 = 0.0;
    let mut worst_prox: f64 = 0.0;
    let mut b1_cases = 0;
    for k in 0..cfg.cases {
        let x = random_case(&mut rng, k % 3 == 0);
        let (r, c) = x.shape();
        let h = unit_direction(&mut rng, r, c);
        let exact = nucops::dir_deriv_nuclear(&x, &h).unwrap();
        let err = (exact - fd_nuclear(&x, &h, t)).abs() / (1.0 + exact.abs());
        worst_theta = worst_theta.max(err);

        let pp = ProxPair::new(&x).unwrap();
        if !pp.part.b1.is_empty() {
            b1_cases += 1;
        }
        let d = pp.dir_deriv(&h).unwrap();
        let err = (d - fd_prox(&x, &h, t)).norm() / (1.0 + h.norm());
        worst_prox = worst_prox.max(err);
    }
    let passed = worst_theta <= 1e-4 && worst_prox <= 1e-4 && b1_cases > 0;
    CriterionOutcome::new(
        2,
        "directional derivatives vs finite differences",
        passed,
        format!("{} cases ({b1_cases} with b1 nonempty): theta' {worst_theta:.1e}, Prox' {worst_prox:.1e}", cfg.cases),
    )
}

/// ψ* checks with a pluggable evaluator so that a deliberately broken one can
/// be shown to fail.
pub fn psi_star_suite(cfg: &SuiteConfig, eval: impl Fn(&ProxPair, &Mat, PsiMode) -> f64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
    let mut worst_agree: f64 = 0.0;
    let mut worst_sign = f64::NEG_INFINITY;
    let mut worst_homog: f64 = 0.0;
    for k in 0..cfg.cases {
        let x = random_case(&mut rng, k % 3 == 0);
        let (r, c) = x.shape();
        let h = linalg::gaussian_matrix(&mut rng, r, c);
        let pp = ProxPair::new(&x).unwrap();
        let omega = eval(&pp, &h, PsiMode::OmegaForm);
        let expanded = eval(&pp, &h, PsiMode::ExpandedForm);
        worst_agree = worst_agree.max((omega - expanded).abs() / (1.0 + h.norm_squared()));
        worst_sign = worst_sign.max(omega).max(expanded);
        for s in [0.5, 2.0, 10.0] {
            let scaled = eval(&pp, &(&h * s), PsiMode::ExpandedForm);
            let target = s * s * expanded;
            worst_homog = worst_homog.max((scaled - target).abs() / target.abs().max(1e-300));
        }
    }
    let broken: Vec<&str> = [
        (worst_agree <= 1e-9, "form agreement"),
        (worst_sign <= 1e-12, "nonpositivity"),
        (worst_homog <= 1e-10, "homogeneity"),
    ]
    .iter()
    .filter(|(ok, _)| !ok)
    .map(|(_, name)| *name)
    .collect();
    let mut detail = format!(
        "{} cases: form agreement {worst_agree:.1e}, max psi* {worst_sign:.1e}, homogeneity {worst_homog:.1e}",
        cfg.cases
    );
    if !broken.is_empty() {
        detail = format!("{} violated; {detail}", broken.join(" and "));
    }
    (broken.is_empty(), detail)
}

pub fn criterion_3(cfg: &SuiteConfig) -> CriterionOutcome {
    let (passed, detail) = psi_star_suite(cfg, |pp, h, mode| pp.psi_star(h, mode).unwrap());
    CriterionOutcome::new(3, "psi* closed forms, sign and homogeneity", passed, detail)
}

pub fn criterion_4(cfg: &SuiteConfig) -> CriterionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 4);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for k in 0..cfg.cases {
        let x = random_case(&mut rng, k % 2 == 0);
        let (r, c) = x.shape();
        let mm = linalg::gaussian_matrix(&mut rng, r, c);
        let pp = ProxPair::new(&x).unwrap();
        let h = pp.dir_deriv(&mm).unwrap();
        let d = &mm - &h;
        let member = cones::critical_cone_theta_membership(&pp, &h, 1e-9).unwrap();
        let gap = (linalg::inner(&h, &d) + pp.psi_star(&h, PsiMode::OmegaForm).unwrap()).abs() / (1.0 + mm.norm_squared());
        worst = worst.max(gap);
        if !member || gap > 1e-8 {
            failures += 1;
        }
    }
    CriterionOutcome::new(
        4,
        "<H, D> = -psi*(H) with H = Prox'(X; M) in C_theta",
        failures == 0,
        format!("{} cases, {failures} failures, worst relative gap {worst:.1e}", cfg.cases),
    )
}

pub fn criterion_5(cfg: &SuiteConfig) -> CriterionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 5);
    let mut theta_q = (0, 0);
    let mut conj_q = (0, 0);
    let mut polarity_worst: f64 = 0.0;
    let mut sample_not_member = 0;
    let mut i = 0;
    while theta_q.0 < cfg.cases || conj_q.0 < cfg.cases {
        i += 1;
        let x = random_case(&mut rng, i % 2 == 0);
        let pp = ProxPair::new(&x).unwrap();
        let (r, c) = x.shape();
        let theta = cones::critical_cone_theta(&pp);
        let conj = cones::critical_cone_theta_conj(&pp);
        for trial in 0..4 {
            // members, perturbed members, random directions
            let noise = linalg::gaussian_matrix(&mut rng, r, c);
            let g = MatrixCone::Theta.sample(&pp, &mut rng);
            let h = match trial {
                0 | 1 => g,
                2 => g + noise,
                _ => noise,
            };
            let by_desc = theta.contains(&linalg::vec_of(&h), 1e-9);
            let lhs = nucops::dir_deriv_nuclear(&pp.prox, &h).unwrap();
            let by_def = (lhs - linalg::inner(&h, &pp.proj)).abs() <= 1e-8 * (1.0 + h.norm());
            theta_q.0 += 1;
            if by_desc != by_def {
                theta_q.1 += 1;
            }

            let noise = linalg::gaussian_matrix(&mut rng, r, c);
            let g = MatrixCone::ThetaConj.sample(&pp, &mut rng);
            let h = match trial {
                0 | 1 => g,
                2 => g + noise,
                _ => noise,
            };
            let by_desc = conj.contains(&linalg::vec_of(&h), 1e-9);
            let tangent = ball_tangent_quotient(&pp.proj, &h, 1e-6) <= 1e-4 * (1.0 + h.norm());
            let orth = linalg::inner(&h, &pp.prox).abs() <= 1e-8 * (1.0 + h.norm()) * (1.0 + pp.prox.norm());
            conj_q.0 += 1;
            if by_desc != (tangent && orth) {
                conj_q.1 += 1;
            }
        }
        // polarity of the sampled pairs
        for (cone, polar) in [(MatrixCone::Theta, MatrixCone::PolarTheta), (MatrixCone::ThetaConj, MatrixCone::PolarThetaConj)] {
            let g = cone.sample(&pp, &mut rng);
            let h = polar.sample(&pp, &mut rng);
            polarity_worst = polarity_worst.max(linalg::inner(&g, &h) / (g.norm() * h.norm()).max(1e-300));
            for (kind, s) in [(cone, &g), (polar, &h)] {
                if !kind.descriptor(&pp).contains(&linalg::vec_of(s), 1e-9) {
                    sample_not_member += 1;
                }
            }
        }
    }
    let (polar_cases, polar_fail) = polyhedral_polar_exhaustive();
    let passed = theta_q.1 == 0 && conj_q.1 == 0 && polarity_worst <= 1e-9 && sample_not_member == 0 && polar_fail == 0;
    CriterionOutcome::new(
        5,
        "cone block forms, polarity and polyhedral polars",
        passed,
        format!(
            "C_theta {} queries / {} disagreements; C_theta* {} / {}; polarity max {polarity_worst:.1e}; samples outside descriptor {sample_not_member}; polyhedral polar {polar_cases} cases / {polar_fail} failures",
            theta_q.0, theta_q.1, conj_q.0, conj_q.1
        ),
    )
}

/// All segment-kind patterns with up to three coordinates and all `(q, y)`
/// on the grid `{-1, 0, 1}` that form a complementary pair.
pub fn polyhedral_polar_exhaustive() -> (usize, usize) {
    let kinds = [SegmentKind::Zero, SegmentKind::Nonneg, SegmentKind::Free];
    let vals = [-1.0, 0.0, 1.0];
    let mut cases = 0;
    let mut failures = 0;
    for len in 1..=3usize {
        let patterns = 3usize.pow(len as u32);
        let grid = 3usize.pow(len as u32);
        for p in 0..patterns {
            let pat: Vec<SegmentKind> = (0..len).map(|i| kinds[(p / 3usize.pow(i as u32)) % 3]).collect();
            let qs = PolyhedralConeSpec::from_kinds(&pat);
            for gq in 0..grid {
                for gy in 0..grid {
                    let q = Vector::from_fn(len, |i, _| vals[(gq / 3usize.pow(i as u32)) % 3]);
                    let y = Vector::from_fn(len, |i, _| vals[(gy / 3usize.pow(i as u32)) % 3]);
                    if cones::check_pair(&qs, &q, &y, 0.0).is_err() {
                        continue;
                    }
                    cases += 1;
                    let crit = cones::poly_critical(&qs, &q, &y, 0.0).unwrap();
                    let direct = cones::poly_critical_polar(&qs, &y, &q, 0.0).unwrap();
                    if cones::polar_signs(&crit) != direct || polar_by_generators(&crit) != direct {
                        failures += 1;
                    }
                }
            }
        }
    }
    (cases, failures)
}

/// Planted instances spanning injective / rank-deficient / zero `F`, several
/// constraint patterns and `|b1| ∈ {0, 1}`.
pub fn equivalence_corpus(count: usize) -> Vec<(PlantSpec, u64)> {
    const COUNTS: [[usize; 4]; 10] = [
        [1, 0, 1, 0],
        [1, 0, 0, 1],
        [1, 1, 0, 0],
        [1, 1, 1, 0],
        [2, 0, 1, 0],
        [1, 0, 1, 1],
        [2, 1, 0, 0],
        [0, 1, 1, 0],
        [1, 1, 0, 1],
        [2, 0, 0, 1],
    ];
    const ROLES: [&str; 9] = ["", "a", "z", "ai", "ad", "zf", "ia", "d", "az"];
    (0..count)
        .map(|k| {
            let counts = COUNTS[k % COUNTS.len()];
            let m: usize = counts.iter().sum();
            let n = m + if k % 4 == 0 { 0 } else { 1 };
            let mn = m * n;
            let roles: Vec<QRole> = ROLES[(k / 3) % ROLES.len()].chars().map(|c| QRole::from_char(c).unwrap()).collect();
            let (fmap, d) = match k % 3 {
                0 => (FMap::Gaussian, mn),
                1 => (FMap::Gaussian, 1 + (k / 3) % 3),
                _ => (FMap::Zero, 1),
            };
            let spec = PlantSpec {
                m,
                n,
                d,
                counts,
                sigma: (0..counts[0]).map(|i| 1.5 + 0.8 * i as f64).collect(),
                w_interior: (0..counts[2]).map(|i| 0.45 + 0.2 * i as f64).collect(),
                q_roles: roles,
                fmap,
                amap: AMap::Gaussian,
                frames: Frames::Random,
                mix_w: k % 2 == 1,
            };
            (spec, 1000 + k as u64)
        })
        .collect()
}

struct CorpusStats {
    total: usize,
    b1: usize,
    b1_inconclusive: usize,
    holds: usize,
    fails: usize,
    decided_51: usize,
    disagree_51: usize,
    decided_52: usize,
    disagree_52: usize,
    errors: Vec<String>,
}

fn run_corpus(cfg: &SuiteConfig) -> CorpusStats {
    let mut st = CorpusStats {
        total: 0,
        b1: 0,
        b1_inconclusive: 0,
        holds: 0,
        fails: 0,
        decided_51: 0,
        disagree_51: 0,
        decided_52: 0,
        disagree_52: 0,
        errors: Vec::new(),
    };
    for (spec, seed) in equivalence_corpus(cfg.corpus) {
        let result = plant_instance(&spec, seed).and_then(|(inst, pt)| {
            let ctx = CheckContext::from_point(&inst, &pt, seed)?;
            Ok((
                stability::check_sosc_primal(&ctx)?.holds,
                stability::check_srcq_dual(&ctx)?.holds,
                stability::check_srcq_primal(&ctx)?.holds,
                stability::check_sosc_dual(&ctx)?.holds,
            ))
        });
        let (sp, sd, rp, od) = match result {
            Ok(v) => v,
            Err(e) => {
                st.errors.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        st.total += 1;
        if spec.counts[1] > 0 {
            st.b1 += 1;
            if sp.is_none() || sd.is_none() {
                st.b1_inconclusive += 1;
            }
        }
        match sp {
            Some(true) => st.holds += 1,
            Some(false) => st.fails += 1,
            None => {}
        }
        if let (Some(a), Some(b)) = (sp, sd) {
            st.decided_51 += 1;
            if a != b {
                st.disagree_51 += 1;
            }
        }
        if let (Some(a), Some(b)) = (od, rp) {
            st.decided_52 += 1;
            if a != b {
                st.disagree_52 += 1;
            }
        }
    }
    st
}

pub fn criterion_6(cfg: &SuiteConfig) -> CriterionOutcome {
    let st = run_corpus(cfg);
    let inconclusive_ok = st.b1_inconclusive * 5 <= st.b1;
    let passed = st.errors.is_empty()
        && st.total >= 100.min(cfg.corpus)
        && st.disagree_51 == 0
        && st.holds >= 30
        && st.fails >= 30
        && st.b1 >= 10
        && inconclusive_ok;
    CriterionOutcome::new(
        6,
        "primal SOSC <=> dual SRCQ",
        passed,
        format!(
            "{} instances ({} hold, {} fail, {} with |b1|=1, {} inconclusive there); {} decided pairs, {} disagreements{}",
            st.total,
            st.holds,
            st.fails,
            st.b1,
            st.b1_inconclusive,
            st.decided_51,
            st.disagree_51,
            if st.errors.is_empty() { String::new() } else { format!("; errors: {}", st.errors.join(", ")) }
        ),
    )
}

pub fn criterion_7(cfg: &SuiteConfig) -> CriterionOutcome {
    let st = run_corpus(cfg);
    let passed = st.errors.is_empty() && st.disagree_52 == 0 && st.decided_52 > 0;
    CriterionOutcome::new(
        7,
        "dual SOSC <=> primal SRCQ",
        passed,
        format!("{} instances; {} decided pairs, {} disagreements", st.total, st.decided_52, st.disagree_52),
    )
}

/// Instances where every condition holds, used by the calmness suite.
pub fn calm_spec(k: usize) -> PlantSpec {
    let roles = ["a", "az", "ai", "za", ""];
    let counts = [[1, 0, 1, 1], [2, 0, 1, 0], [1, 1, 1, 0], [1, 0, 2, 0], [2, 0, 0, 1]];
    let c = counts[k % counts.len()];
    let m: usize = c.iter().sum();
    PlantSpec {
        m,
        n: m + 1,
        d: m * (m + 1),
        counts: c,
        sigma: (0..c[0]).map(|i| 1.6 + 0.7 * i as f64).collect(),
        w_interior: (0..c[2]).map(|i| 0.4 + 0.2 * i as f64).collect(),
        q_roles: roles[k % roles.len()].chars().map(|ch| QRole::from_char(ch).unwrap()).collect(),
        fmap: FMap::Gaussian,
        amap: AMap::Gaussian,
        frames: Frames::Random,
        mix_w: k % 2 == 0,
    }
}

/// Instances with two identical active inequality rows: the multiplier can
/// move mass between the copies, so it is not unique.
pub fn second_multiplier_spec() -> PlantSpec {
    PlantSpec {
        m: 3,
        n: 4,
        d: 12,
        counts: [1, 0, 1, 1],
        sigma: vec![1.7],
        w_interior: vec![0.4],
        q_roles: vec![QRole::Active, QRole::Zero, QRole::Active],
        fmap: FMap::Gaussian,
        amap: AMap::Redundant,
        frames: Frames::Random,
        mix_w: false,
    }
}

/// Runs criterion 8 and also reports what criterion 9 needs from it.
pub fn calmness_suite(cfg: &SuiteConfig) -> (CriterionOutcome, f64) {
    let mut worst_var: f64 = 0.0;
    let mut min_solvable: f64 = 1.0;
    let mut worst_residual: f64 = 0.0;
    let mut problems = Vec::new();
    for k in 0..cfg.calm_instances {
        let spec = calm_spec(k);
        let seed = 500 + k as u64;
        let run = plant_instance(&spec, seed).and_then(|(inst, pt)| {
            let opts = CalmnessOptions { trials: cfg.calm_trials, seed, ..Default::default() };
            let rep = stability::theorem53_report(&inst, &pt, Some(&opts), seed)?;
            Ok(rep)
        });
        match run {
            Ok(rep) => {
                if !rep.all_hold() {
                    problems.push(format!("instance {k} is not certified"));
                }
                let c = rep.calmness.expect("calmness requested");
                worst_var = worst_var.max(c.variation);
                min_solvable = c.solvable_fraction.iter().cloned().fold(min_solvable, f64::min);
                worst_residual = worst_residual.max(c.max_residual);
            }
            Err(e) => problems.push(format!("instance {k}: {e}")),
        }
    }
    let mut drift_seen = 0;
    for k in 0..cfg.calm_negative {
        let seed = 900 + k as u64;
        if let Ok((inst, pt)) = plant_instance(&second_multiplier_spec(), seed) {
            let opts = CalmnessOptions { trials: cfg.calm_trials, seed, ..Default::default() };
            if let Ok(c) = stability::calmness_experiment(&inst, &pt, &opts) {
                if c.max_multiplier_drift.last().cloned().unwrap_or(0.0) > 10.0 {
                    drift_seen += 1;
                }
            }
        }
    }
    let passed = problems.is_empty() && worst_var <= 3.0 && min_solvable == 1.0;
    let outcome = CriterionOutcome::new(
        8,
        "robust isolated calmness on certified instances",
        passed,
        format!(
            "{} instances x {} trials x 3 radii: min solvable fraction {min_solvable}, worst ratio variation {worst_var:.2}; advisory: drift > 10x radius on {drift_seen}/{} second-multiplier instances{}",
            cfg.calm_instances,
            cfg.calm_trials,
            cfg.calm_negative,
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    );
    (outcome, worst_residual)
}

pub fn criterion_8(cfg: &SuiteConfig) -> CriterionOutcome {
    calmness_suite(cfg).0
}

pub fn prox_fixture_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (3, 5);
    let sigma = [2.3, 1.0, 0.35];
    let target = planted_matrix(&mut rng, m, n, &sigma);
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
    let cfg = SolverConfig { tol_kkt: 1e-12, ..Default::default() };
    match solver::solve_perturbed(&inst, &Mat::zeros(m, n), &Vector::zeros(0), &cfg) {
        Ok(out) => (out.point.x - nucops::svt(&target, 1.0).unwrap()).abs().max(),
        Err(_) => f64::INFINITY,
    }
}

pub fn criterion_9(cfg: &SuiteConfig) -> CriterionOutcome {
    let (_, worst_residual) = calmness_suite(cfg);
    let prox_err = prox_fixture_error(cfg.seed);
    CriterionOutcome::new(
        9,
        "solver certification",
        worst_residual <= 1e-10 && prox_err <= 1e-10,
        format!("worst retained KKT residual {worst_residual:.1e}; prox fixture error {prox_err:.1e}"),
    )
}

pub fn criterion_10(cfg: &SuiteConfig) -> CriterionOutcome {
    let (inst, pt) = match plant_instance(&calm_spec(0), 77) {
        Ok(v) => v,
        Err(e) => return CriterionOutcome::new(10, "determinism", false, e.to_string()),
    };
    let file = InstanceFile::from_instance(&inst, Some(&pt));
    let opts = AnalyzeOptions { seed: cfg.seed, calmness: true, trials: 5, ..Default::default() };
    let run = || io::analyze(&file, &opts).map(|r| r.to_json_without_timestamp());
    let passed;
    let detail;
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            passed = a == b;
            detail = format!("two analyses with seed {}: {} bytes, identical = {passed}", cfg.seed, a.len());
        }
        (Err(e), _) | (_, Err(e)) => {
            passed = false;
            detail = e.to_string();
        }
    }
    CriterionOutcome::new(10, "determinism of analysis reports", passed, detail)
}

/// Worked examples with known answers.
pub fn worked_examples() -> CriterionOutcome {
    let mut failures: Vec<&str> = Vec::new();
    let mut check = |ok: bool, name: &'static str| {
        if !ok {
            failures.push(name);
        }
    };
    let x = Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]);
    let pp = ProxPair::new(&x).unwrap();
    check((&pp.prox - Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])).abs().max() < 1e-15, "prox of diag(3, 0.5)");
    check((&pp.proj - Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5])).abs().max() < 1e-15, "projection of diag(3, 0.5)");
    check((linalg::nuclear_norm(&x) - 3.5).abs() < 1e-15, "nuclear norm");
    let h = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    for mode in [PsiMode::OmegaForm, PsiMode::ExpandedForm] {
        check((pp.psi_star(&h, mode).unwrap() + 1.5).abs() < 1e-14, "psi* hand value");
    }
    let hd = Mat::from_row_slice(2, 2, &[0.7, 0.0, 0.0, -0.4]);
    check((pp.dir_deriv(&hd).unwrap() - Mat::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 0.0])).abs().max() < 1e-15, "Prox' diagonal");
    check(
        cones::critical_cone_theta_membership(&pp, &Mat::from_row_slice(2, 2, &[5.0, 7.0, -2.0, 0.0]), 1e-9).unwrap(),
        "C_theta member",
    );
    check(
        !cones::critical_cone_theta_membership(&pp, &Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1e-9).unwrap(),
        "C_theta non-member",
    );
    check(cones::critical_cone_theta_conj_membership(&pp, &h, 1e-9).unwrap(), "C_theta* member");
    match plant_instance(&PlantSpec::running_example(), 0) {
        Ok((inst, pt)) => {
            check(pt.max_residual() <= 1e-12, "planted residuals");
            let rep = stability::theorem53_report(&inst, &pt, None, 0);
            check(rep.map(|r| r.all_hold()).unwrap_or(false), "running example report");
            let r = model::kkt_residual_primal(&inst, &pt.x, &pt.y, &Mat::zeros(2, 2), &Vector::zeros(0));
            check(r.map(|r| r.max() <= 1e-12).unwrap_or(false), "primal residual");
        }
        Err(_) => check(false, "running example plants"),
    }
    let (cases, fails) = polyhedral_polar_exhaustive();
    check(fails == 0 && cases > 0, "polyhedral polar identity");
    check(prox_fixture_error(1) <= 1e-10, "solver recovers the prox");
    let passed = failures.is_empty();
    CriterionOutcome::new(
        0,
        "worked examples",
        passed,
        if passed { "all hold".to_string() } else { format!("failed: {}", failures.join(", ")) },
    )
}

/// Worked examples followed by every criterion at the quick size.
pub fn run_fast() -> Vec<CriterionOutcome> {
    let mut out = vec![worked_examples()];
    out.extend(run_all(&SuiteConfig::fast()));
    out
}

pub fn run_all(cfg: &SuiteConfig) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(cfg),
        criterion_2(cfg),
        criterion_3(cfg),
        criterion_4(cfg),
        criterion_5(cfg),
        criterion_6(cfg),
        criterion_7(cfg),
        criterion_8(cfg),
        criterion_9(cfg),
        criterion_10(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_oracle_matches_on_a_small_case() {
        let x = Mat::from_row_slice(2, 3, &[1.8, 0.2, 0.0, -0.3, 0.4, 0.9]);
        let oracle = prox_by_factorization(&x, 0, 100_000);
        assert!((oracle - nucops::svt(&x, 1.0).unwrap()).abs().max() < 1e-8);
    }

    #[test]
    fn flipped_psi_star_sign_is_caught() {
        let cfg = SuiteConfig { cases: 30, ..SuiteConfig::fast() };
        let (ok, _) = psi_star_suite(&cfg, |pp, h, mode| pp.psi_star(h, mode).unwrap());
        assert!(ok);
        let (ok, detail) = psi_star_suite(&cfg, |pp, h, mode| -pp.psi_star(h, mode).unwrap());
        assert!(!ok);
        assert!(detail.starts_with("nonpositivity violated"), "{detail}");
    }

    #[test]
    fn generator_polar_agrees_with_flip() {
        let all = [Sign::Free, Sign::Zero, Sign::Nonneg, Sign::Nonpos];
        assert_eq!(polar_by_generators(&all), cones::polar_signs(&all));
    }

    #[test]
    fn worked_examples_pass() {
        let out = worked_examples();
        assert!(out.passed, "{}", out.detail);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nucstab::linalg::{self, Mat, Vector};
use nucstab::model::{self, plant_instance, AMap, FMap, Frames, PlantSpec, QRole};
use nucstab::selftest::{calm_spec, equivalence_corpus};
use nucstab::solver::{self, SolverConfig};

fn constrained_spec() -> PlantSpec {
    PlantSpec {
        m: 3,
        n: 4,
        d: 5,
        counts: [1, 1, 1, 0],
        sigma: vec![1.9],
        w_interior: vec![0.3],
        q_roles: "azid".chars().map(|c| QRole::from_char(c).unwrap()).collect(),
        fmap: FMap::Gaussian,
        amap: AMap::Gaussian,
        frames: Frames::Random,
        mix_w: true,
    }
}

#[test]
fn planted_points_satisfy_both_residual_forms() {
    for seed in 0..100 {
        let (inst, pt) = plant_instance(&constrained_spec(), seed).unwrap();
        let zero = Mat::zeros(inst.m, inst.n);
        let p = model::kkt_residual_primal(&inst, &pt.x, &pt.y, &zero, &Vector::zeros(inst.e())).unwrap();
        let d = model::kkt_residual_dual(&inst, &pt.y, &pt.w, &pt.s, &pt.x).unwrap();
        assert!(p.max() <= 1e-12 && d.max() <= 1e-12, "seed {seed}: {p:?} {d:?}");
    }
}

#[test]
fn planted_references_are_optimal_along_feasible_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (spec, seed) in equivalence_corpus(30).into_iter().chain([(constrained_spec(), 7)]) {
        let (inst, pt) = plant_instance(&spec, seed).unwrap();
        let f0 = inst.objective(&pt.x);
        // directions in ker A keep every constraint value unchanged
        let kernel = linalg::null_space(&inst.amap, 1e-12);
        if kernel.ncols() == 0 {
            continue;
        }
        for _ in 0..20 {
            let dir = &kernel * linalg::gaussian_vector(&mut rng, kernel.ncols());
            let y = &pt.x + linalg::mat_of(&dir, inst.m, inst.n);
            assert!(inst.infeasibility(&y) <= 1e-9);
            assert!(inst.objective(&y) >= f0 - 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn solver_matches_planted_reference_from_a_cold_start() {
    for k in 0..3 {
        let (inst, pt) = plant_instance(&calm_spec(k), 40 + k as u64).unwrap();
        let out = solver::solve_perturbed(&inst, &Mat::zeros(inst.m, inst.n), &Vector::zeros(inst.e()), &SolverConfig::default())
            .unwrap();
        assert!(out.converged, "instance {k}: residual {:e}", out.residual);
        assert!((&out.point.x - &pt.x).abs().max() <= 1e-7, "instance {k}");
        let f0 = inst.objective(&pt.x);
        assert!(inst.objective(&out.point.x) <= f0 + 1e-9);
    }
}

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nucstab::cones::{self, MatrixCone};
use nucstab::linalg::{self, Mat};
use nucstab::nucops::{self, ProxPair, PsiMode};
use nucstab::selftest::{planted_matrix, random_spectrum};

fn case(seed: u64, force_one: bool) -> (Mat, Mat, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1 + (seed % 5) as usize;
    let n = m + (seed / 5 % 4) as usize;
    let sigma = random_spectrum(&mut rng, m, force_one);
    let x = planted_matrix(&mut rng, m, n, &sigma);
    let h = linalg::gaussian_matrix(&mut rng, m, n);
    (x, h, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prox_is_firmly_nonexpansive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (3, 4);
        let x = linalg::gaussian_matrix(&mut rng, m, n) * 2.0;
        let y = linalg::gaussian_matrix(&mut rng, m, n) * 2.0;
        let px = nucops::svt(&x, 1.0).unwrap();
        let py = nucops::svt(&y, 1.0).unwrap();
        let d = &px - &py;
        prop_assert!(d.norm_squared() <= linalg::inner(&d, &(&x - &y)) + 1e-10);
    }

    #[test]
    fn prox_derivative_is_positively_homogeneous(seed in any::<u64>(), t in 0.01f64..50.0) {
        let (x, h, _) = case(seed, seed % 2 == 0);
        let pp = ProxPair::new(&x).unwrap();
        let d1 = pp.dir_deriv(&h).unwrap() * t;
        let d2 = pp.dir_deriv(&(&h * t)).unwrap();
        prop_assert!((d1 - d2).abs().max() <= 1e-10 * (1.0 + t));
    }

    #[test]
    fn prox_derivative_is_a_projection_like_map(seed in any::<u64>()) {
        // Prox' is the derivative of a firmly nonexpansive map.
        let (x, h, _) = case(seed, true);
        let pp = ProxPair::new(&x).unwrap();
        let d = pp.dir_deriv(&h).unwrap();
        prop_assert!(d.norm_squared() <= linalg::inner(&d, &h) + 1e-10);
    }

    #[test]
    fn results_transform_with_orthogonal_frames(seed in any::<u64>()) {
        let (x, h, mut rng) = case(seed, seed % 3 == 0);
        let (m, n) = x.shape();
        let p = linalg::random_orthogonal(&mut rng, m);
        let q = linalg::random_orthogonal(&mut rng, n);
        let xr = &p * &x * q.transpose();
        let hr = &p * &h * q.transpose();
        let a = ProxPair::new(&x).unwrap();
        let b = ProxPair::new(&xr).unwrap();
        prop_assert!((&p * &a.prox * q.transpose() - &b.prox).abs().max() <= 1e-10);
        let da = a.dir_deriv(&h).unwrap();
        let db = b.dir_deriv(&hr).unwrap();
        prop_assert!((&p * da * q.transpose() - db).abs().max() <= 1e-9);
        let sa = a.psi_star(&h, PsiMode::ExpandedForm).unwrap();
        let sb = b.psi_star(&hr, PsiMode::ExpandedForm).unwrap();
        prop_assert!((sa - sb).abs() <= 1e-9 * (1.0 + sa.abs()));
    }

    #[test]
    fn transposition_commutes_with_prox(seed in any::<u64>()) {
        let (x, h, _) = case(seed, true);
        let a = ProxPair::new(&x).unwrap();
        let b = ProxPair::new(&x.transpose()).unwrap();
        prop_assert!((a.prox.transpose() - &b.prox).abs().max() <= 1e-12);
        let da = a.dir_deriv(&h).unwrap();
        let db = b.dir_deriv(&h.transpose()).unwrap();
        prop_assert!((da.transpose() - db).abs().max() <= 1e-10);
    }

    #[test]
    fn sampled_cone_elements_are_members(seed in any::<u64>()) {
        let (x, _, mut rng) = case(seed, true);
        let pp = ProxPair::new(&x).unwrap();
        let g = MatrixCone::Theta.sample(&pp, &mut rng);
        prop_assert!(cones::critical_cone_theta_membership(&pp, &g, 1e-9).unwrap());
        let g = MatrixCone::ThetaConj.sample(&pp, &mut rng);
        prop_assert!(cones::critical_cone_theta_conj_membership(&pp, &g, 1e-9).unwrap());
    }
}

mod common;

use std::f64::consts::PI;

use common::{branch_fd_error, random_branch, sub_sector_angles};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_jacobians_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for n in 1..=4 {
        for ell in [1.0, 1.5, 2.0, 3.0] {
            for _ in 0..20 {
                let b = random_branch(n, ell, &mut rng);
                let (k, err) = branch_fd_error(&b, ell, &mut rng);
                assert!(err <= 1e-6, "n={n} ell={ell}: relative error {err:e} on {b:?}");
                worst = worst.max(err);
                checked += k;
            }
        }
    }
    assert!(checked >= 320);
    println!("{checked} pieces, worst relative error {worst:e}");
}

#[test]
fn jacobians_start_at_one_and_stay_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 1..=4 {
        let b = random_branch(n, 2.0, &mut rng);
        for k in 1..=b.n {
            let j = b.jacobians(k, 2.0).unwrap();
            assert_eq!(j[0], 1.0);
            assert!(j.iter().all(|v| *v > 0.0), "{j:?}");
        }
    }
}

#[test]
fn branches_cover_their_sector() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 1..=4 {
        let b = random_branch(n, 1.5, &mut rng);
        assert_eq!(b.rays.len(), b.n + 1);
        assert_eq!(b.dirs.len(), b.n + 1);
        for theta in sub_sector_angles(&b) {
            assert!(b.sub_sector(theta).is_ok());
        }
        let outside = b.rays[0].theta - b.orientation as f64 * 0.05;
        assert!(b.sub_sector(outside).is_err() || b.sector.width > PI);
    }
}

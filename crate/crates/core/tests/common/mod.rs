#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};

use qhcert::distgeo::*;
use qhcert::escape::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn width_for(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let cap = |k: usize| k as f64 * FRAC_PI_2 / (1.0 + DIRECTION_OFFSET);
    let (lo, hi) = match n {
        1 => (0.3, FRAC_PI_2 - 0.05),
        2 => (FRAC_PI_2 + 0.02, cap(2) - 0.02),
        k => (cap(k - 1) + 0.02, cap(k) - 0.02),
    };
    rng.gen_range(lo..hi)
}

pub fn random_branch(n: usize, ell: f64, rng: &mut ChaCha8Rng) -> Branch {
    loop {
        let width = width_for(n, rng);
        let c = CirclePoint::from_angle(rng.gen_range(0.0..TAU), ell);
        let o: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let zero = CirclePoint::from_angle(c.theta + o as f64 * width, ell);
        let escape = CirclePoint::from_angle(zero.theta + o as f64 * rng.gen_range(0.1..1.2), ell);
        if let Ok(b) = negative_branch(c, zero, o, escape, ell) {
            if b.n == n {
                return b;
            }
        }
    }
}

pub fn sub_sector_angles(b: &Branch) -> Vec<f64> {
    let o = b.orientation as f64;
    b.rays
        .windows(2)
        .map(|w| {
            let span = if o > 0.0 {
                (w[1].theta - w[0].theta).rem_euclid(TAU)
            } else {
                (w[0].theta - w[1].theta).rem_euclid(TAU)
            };
            w[0].theta + o * span * 0.5
        })
        .collect()
}

// Step ladder; keep the estimate where consecutive steps agree best, since
// near-parallel crossings make small steps lose digits to round-off.
pub fn stable_fd(b: &Branch, start: DistoPoint, tau: f64, ell: f64) -> f64 {
    let steps = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
    let vals: Vec<f64> = steps.iter().map(|&e| fd_jacobian(b, start, tau, e, ell).unwrap()).collect();
    let i = (0..vals.len() - 1)
        .min_by(|&i, &j| (vals[i] - vals[i + 1]).abs().total_cmp(&(vals[j] - vals[j + 1]).abs()))
        .unwrap();
    vals[i + 1]
}

/// Pieces checked and worst relative error of closed-form against
/// differenced Jacobians, one start per sub-sector.
pub fn branch_fd_error(b: &Branch, ell: f64, rng: &mut ChaCha8Rng) -> (usize, f64) {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for theta in sub_sector_angles(b) {
        let start = ray_point(&CirclePoint::from_angle(theta, ell), rng.gen_range(0.1..1.0), ell);
        let curve = build_branch_curve(b, start, ell).unwrap();
        let mut edges = vec![0.0];
        edges.extend(curve.breakpoints.iter().copied());
        let last = *edges.last().unwrap();
        edges.push(last + 0.2 * last.max(0.1));
        for w in edges.windows(2) {
            let tau = 0.5 * (w[0] + w[1]);
            let exact = curve.jacobian_at(tau);
            let fd = stable_fd(b, start, tau, ell);
            worst = worst.max((fd - exact).abs() / exact.abs());
            checked += 1;
        }
    }
    (checked, worst)
}

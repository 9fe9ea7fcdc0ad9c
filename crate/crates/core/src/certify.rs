//! Grid verification of the escape-curve criterion.
//!
//! For every start of the grid the escape curve must leave `D(omega)` by
//! `tau = 1`, have bounded speed, a Jacobian bounded below and an increment
//! `phi(gamma(tau)) - phi(start) >= tau^a / C3`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{check_h2, H2Verdict, DEFAULT_SAMPLES};
use crate::distgeo::{dressed_angle, normalize_angle, ray_point, rho, CirclePoint, DistoPoint};
use crate::error::{Error, Result};
use crate::escape::{
    all_boundary_angles, build_curve_any, distance_to_rays, fd_jacobian, plan_sectors, SectorPlan,
};
use crate::symbols::{rational_serde, QhSymbol, Rational, SymbolDescription};

pub const FD_FRACTION: f64 = 0.05;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Relative step of the finite-difference Jacobian.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub radial_points: usize,
    pub angular_points: usize,
    pub tau_points: usize,
    pub boundary_margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radial_points: 48,
            angular_points: 512,
            tau_points: 256,
            boundary_margin: 1e-9,
        }
    }
}

impl GridSpec {
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(2);
        Self {
            radial_points: s(self.radial_points),
            angular_points: s(self.angular_points),
            tau_points: s(self.tau_points),
            boundary_margin: self.boundary_margin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radial_points == 0 || self.angular_points == 0 || self.tau_points == 0 {
            return Err(Error::MalformedInput("grid sizes must be positive".into()));
        }
        if !(self.boundary_margin >= 1e-9) {
            return Err(Error::MalformedInput("boundary_margin must be >= 1e-9".into()));
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        (1..=self.tau_points).map(|j| j as f64 / self.tau_points as f64).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        let n = self.angular_points as f64;
        (0..self.angular_points)
            .map(|k| std::f64::consts::TAU * (k as f64 + 0.5) / n)
            .collect()
    }

    /// Radii in `[omega/8, omega)`.
    pub fn radii(&self, omega: f64) -> Vec<f64> {
        let n = self.radial_points as f64;
        (0..self.radial_points)
            .map(|i| omega / 8.0 + (omega - omega / 8.0) * (i as f64 + 0.5) / n)
            .collect()
    }
}

/// Uniform angles plus a geometric ladder `margin * 10^k` on both sides of
/// every boundary ray, out to the uniform spacing.
pub fn grid_angles(grid: &GridSpec, rays: &[f64]) -> Vec<f64> {
    let spacing = std::f64::consts::TAU / grid.angular_points as f64;
    let mut out = grid.angles();
    for &r in rays {
        let mut d = 10.0 * grid.boundary_margin;
        while d < 0.5 * spacing {
            out.push(normalize_angle(r - d));
            out.push(normalize_angle(r + d));
            d *= 10.0;
        }
    }
    out.retain(|&th| distance_to_rays(th, rays) >= grid.boundary_margin);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Grid starts in `D(omega)` minus the boundary-ray margin.
pub fn grid_starts(plans: &[SectorPlan], grid: &GridSpec, omega: f64, ell: f64) -> Vec<DistoPoint> {
    let rays = all_boundary_angles(plans);
    let radii = grid.radii(omega);
    let angles = grid_angles(grid, &rays);
    let mut out = Vec::with_capacity(radii.len() * angles.len());
    for theta in angles {
        let dir = CirclePoint::from_angle(theta, ell);
        for &r in &radii {
            out.push(ray_point(&dir, r, ell));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XiPositive,
    XiNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub escape: bool,
    pub dtau_bound: bool,
    pub jacobian_bound: bool,
    pub growth_bound: bool,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.escape && self.dtau_bound && self.jacobian_bound && self.growth_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Witness {
    Escape { t: f64, s: f64, radius: f64 },
    Growth { t: f64, s: f64, tau: f64, increment: f64 },
    Jacobian { t: f64, s: f64, closed: f64, numeric: f64 },
    Curve { t: f64, s: f64, error: String },
}

impl Witness {
    pub fn to_error(&self) -> Error {
        match self {
            Witness::Escape { t, s, radius } => Error::EscapeFailure { t: *t, s: *s, radius: *radius },
            Witness::Growth { t, s, tau, increment } => Error::GrowthViolation {
                t: *t,
                s: *s,
                tau: *tau,
                increment: *increment,
            },
            Witness::Jacobian { t, s, closed, numeric } => Error::JacobianMismatch {
                t: *t,
                s: *s,
                closed: *closed,
                numeric: *numeric,
            },
            Witness::Curve { t, s, .. } => Error::UncoveredStart { t: *t, s: *s },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub symbol: SymbolDescription,
    pub symbol_digest: String,
    pub direction: Direction,
    pub pass: bool,
    #[serde(with = "rational_serde")]
    pub a: Rational,
    #[serde(with = "rational_serde")]
    pub s_order: Rational,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    /// Grid node `(t, s, tau)` attaining `C2`.
    pub c2_node: [f64; 3],
    /// Grid node `(t, s, tau)` attaining `C3`.
    pub c3_node: [f64; 3],
    /// `max tau / rho(gamma(tau))` over the grid.
    #[serde(rename = "C_phi")]
    pub c_phi: f64,
    pub omega_radius: f64,
    pub grid: GridSpec,
    pub n_starts: usize,
    pub conditions: Conditions,
    pub witnesses: Vec<Witness>,
    pub seed: u64,
    pub fd_checks: usize,
    pub fd_max_rel_error: f64,
    pub plans: Vec<SectorPlan>,
}

impl Certificate {
    pub fn a_value(&self) -> f64 {
        crate::symbols::rational_to_f64(self.a)
    }

    /// `Err` with the first witness when any condition failed.
    pub fn check(&self) -> Result<()> {
        match self.witnesses.first() {
            Some(w) if !self.pass => Err(w.to_error()),
            _ if !self.pass => Err(Error::Precondition("certificate failed".into())),
            _ => Ok(()),
        }
    }
}

/// Growth exponent `max(m, p)`.
pub fn growth_exponent(sym: &QhSymbol, verdict: &H2Verdict) -> Rational {
    let m = sym.weights.m;
    match verdict.p_global {
        Some(p) if p > m => p,
        _ => m,
    }
}

#[derive(Debug, Clone, Default)]
struct StartStats {
    max_speed: f64,
    max_speed_tau: f64,
    min_jac: f64,
    min_ratio: f64,
    min_ratio_tau: f64,
    min_increment: f64,
    escape_radius: f64,
    max_tau_over_rho: f64,
    bad_increment: Option<(f64, f64)>,
    error: Option<String>,
}

fn start_stats(sym: &QhSymbol, plans: &[SectorPlan], start: DistoPoint, taus: &[f64], a: f64) -> StartStats {
    let ell = sym.ell();
    let curve = match build_curve_any(plans, start, ell) {
        Ok(c) => c,
        Err(e) => {
            return StartStats {
                error: Some(e.to_string()),
                ..Default::default()
            }
        }
    };
    let phi0 = sym.eval_at(start);
    let mut st = StartStats {
        min_jac: f64::INFINITY,
        min_ratio: f64::INFINITY,
        min_increment: f64::INFINITY,
        ..Default::default()
    };
    for (p, jac) in curve.pieces.iter().zip(&curve.jacobians) {
        if p.t0 <= 1.0 {
            st.min_jac = st.min_jac.min(jac.abs());
        }
    }
    (st.max_speed, st.max_speed_tau) = curve.max_speed(1.0);
    for &tau in taus {
        let g = curve.eval(tau);
        let inc = sym.eval_at(g) - phi0;
        let ratio = inc / tau.powf(a);
        if inc <= 0.0 && st.bad_increment.is_none() {
            st.bad_increment = Some((tau, inc));
        }
        if ratio < st.min_ratio {
            st.min_ratio = ratio;
            st.min_ratio_tau = tau;
        }
        st.min_increment = st.min_increment.min(inc);
        st.max_tau_over_rho = st.max_tau_over_rho.max(tau / rho(g, ell));
    }
    st.escape_radius = rho(curve.eval(1.0), ell);
    st
}

/// Verify the criterion for a passing verdict and its plans.
pub fn certify(
    sym: &QhSymbol,
    verdict: &H2Verdict,
    plans: &[SectorPlan],
    grid: &GridSpec,
    seed: u64,
    direction: Direction,
) -> Result<Certificate> {
    grid.validate()?;
    if !verdict.pass {
        return Err(Error::Precondition(format!(
            "(H2) fails at items {:?}",
            verdict.failed_items()
        )));
    }
    if plans.is_empty() {
        return Err(Error::Precondition("no plans".into()));
    }
    let ell = sym.ell();
    let a = growth_exponent(sym, verdict);
    let a_f = crate::symbols::rational_to_f64(a);
    let omega = plans.iter().map(|p| p.omega_radius).fold(f64::INFINITY, f64::min);
    let starts = grid_starts(plans, grid, omega, ell);
    let rays = all_boundary_angles(plans);
    let taus = grid.taus();

    let stats: Vec<StartStats> = starts
        .par_iter()
        .map(|&p| start_stats(sym, plans, p, &taus, a_f))
        .collect();

    let mut witnesses = Vec::new();
    let mut conditions = Conditions {
        escape: true,
        dtau_bound: true,
        jacobian_bound: true,
        growth_bound: true,
    };
    let (mut c2, mut min_jac, mut min_ratio, mut c_phi) = (0.0f64, f64::INFINITY, f64::INFINITY, 0.0f64);
    let (mut c2_node, mut c3_node) = ([f64::NAN; 3], [f64::NAN; 3]);
    for (p, st) in starts.iter().zip(&stats) {
        if let Some(e) = &st.error {
            conditions.escape = false;
            if witnesses.len() < 8 {
                witnesses.push(Witness::Curve { t: p.t, s: p.s, error: e.clone() });
            }
            continue;
        }
        if st.max_speed > c2 {
            c2 = st.max_speed;
            c2_node = [p.t, p.s, st.max_speed_tau];
        }
        min_jac = min_jac.min(st.min_jac);
        if st.min_ratio < min_ratio {
            min_ratio = st.min_ratio;
            c3_node = [p.t, p.s, st.min_ratio_tau];
        }
        c_phi = c_phi.max(st.max_tau_over_rho);
        if st.escape_radius <= omega {
            conditions.escape = false;
            if witnesses.len() < 8 {
                witnesses.push(Witness::Escape { t: p.t, s: p.s, radius: st.escape_radius });
            }
        }
        if let Some((tau, inc)) = st.bad_increment {
            conditions.growth_bound = false;
            if witnesses.len() < 8 {
                witnesses.push(Witness::Growth { t: p.t, s: p.s, tau, increment: inc });
            }
        }
    }

    let c1 = 1.0 / min_jac;
    let c3 = 1.0 / min_ratio;
    conditions.dtau_bound = c2.is_finite() && c2 > 0.0;
    conditions.jacobian_bound &= c1.is_finite() && c1 > 0.0;
    conditions.growth_bound &= c3.is_finite() && c3 > 0.0;

    // finite-difference cross-check of the closed-form Jacobians
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the stencil must not straddle a ray, so ladder starts are skipped
    let spacing = std::f64::consts::TAU / grid.angular_points as f64;
    let pool: Vec<usize> = (0..starts.len())
        .filter(|&i| {
            dressed_angle(starts[i], ell).is_ok_and(|th| distance_to_rays(th, &rays) >= 0.25 * spacing)
        })
        .collect();
    let n_fd = ((starts.len() as f64 * FD_FRACTION).ceil() as usize).min(pool.len());
    let picks: Vec<usize> = {
        let mut v: Vec<usize> = sample(&mut rng, pool.len(), n_fd).into_iter().map(|k| pool[k]).collect();
        v.sort_unstable();
        v
    };
    let fd: Vec<Option<(DistoPoint, f64, f64)>> = picks
        .par_iter()
        .map(|&i| {
            let p = starts[i];
            let theta = dressed_angle(p, ell).ok()?;
            let branch = plans.iter().find_map(|pl| pl.branch_for(theta))?;
            let curve = crate::escape::build_branch_curve(branch, p, ell).ok()?;
            let closed = curve.jacobian_at(1.0);
            let numeric = fd_jacobian(branch, p, 1.0, FD_STEP, ell).ok()?;
            Some((p, closed, numeric))
        })
        .collect();
    let mut fd_max = 0.0f64;
    for (p, closed, numeric) in fd.into_iter().flatten() {
        let rel = (closed - numeric).abs() / closed.abs();
        fd_max = fd_max.max(rel);
        if rel > FD_TOLERANCE {
            conditions.jacobian_bound = false;
            if witnesses.len() < 8 {
                witnesses.push(Witness::Jacobian { t: p.t, s: p.s, closed, numeric });
            }
        }
    }

    Ok(Certificate {
        symbol: sym.describe(),
        symbol_digest: sym.digest(),
        direction,
        pass: conditions.all(),
        a,
        s_order: Rational::from_integer(1) / a,
        c1,
        c2,
        c2_node,
        c3,
        c3_node,
        c_phi,
        omega_radius: omega,
        grid: *grid,
        n_starts: starts.len(),
        conditions,
        witnesses,
        seed,
        fd_checks: n_fd,
        fd_max_rel_error: fd_max,
        plans: plans.to_vec(),
    })
}

/// Verdict, plans and certificate for one microlocal direction.
#[derive(Debug, Clone)]
pub struct DirectionOutcome {
    pub direction: Direction,
    pub symbol: QhSymbol,
    pub verdict: H2Verdict,
    pub certificate: Option<Certificate>,
    /// Why no certificate was produced.
    pub refusal: Option<String>,
}

impl DirectionOutcome {
    pub fn pass(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.pass)
    }
}

/// `check_h2 -> plan_sectors -> certify` for `phi` (positive) or `-phi` (negative).
pub fn run_direction(sym: &QhSymbol, direction: Direction, grid: &GridSpec, seed: u64) -> Result<DirectionOutcome> {
    let sym = match direction {
        Direction::XiPositive => sym.clone(),
        Direction::XiNegative => sym.negate(),
    };
    let verdict = check_h2(&sym, DEFAULT_SAMPLES)?;
    if !verdict.pass {
        let failed = verdict.failed_items();
        let witness = verdict.item(failed[0]).detail.clone();
        return Ok(DirectionOutcome {
            direction,
            symbol: sym,
            verdict,
            certificate: None,
            refusal: Some(format!("(H2) item {} fails: {witness}", failed[0])),
        });
    }
    let plans = match plan_sectors(&verdict, sym.ell()) {
        Ok(p) => p,
        Err(e) => {
            return Ok(DirectionOutcome {
                direction,
                symbol: sym,
                verdict,
                certificate: None,
                refusal: Some(e.to_string()),
            })
        }
    };
    let cert = certify(&sym, &verdict, &plans, grid, seed, direction)?;
    Ok(DirectionOutcome {
        direction,
        symbol: sym,
        verdict,
        certificate: Some(cert),
        refusal: None,
    })
}

/// Certificate for the negative direction, i.e. for `-phi`.
pub fn certify_negative_direction(sym: &QhSymbol, grid: &GridSpec, seed: u64) -> Result<Certificate> {
    let out = run_direction(sym, Direction::XiNegative, grid, seed)?;
    out.certificate
        .ok_or_else(|| Error::Precondition(out.refusal.unwrap_or_default()))
}

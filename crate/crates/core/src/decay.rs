//! Kernel decay of the solution operator over a frequency sweep.
//!
//! `M(xi) = max_start int_0^1 exp(xi [phi(start) - phi(gamma(start, tau))]) dtau`
//! is evaluated in the log domain on graded Gauss-Legendre panels and fitted
//! against `xi` on a log-log scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::certify::{grid_angles, Certificate, Direction, GridSpec};
use crate::circle::loglog_fit;
use crate::distgeo::{ray_point, CirclePoint, DistoPoint};
use crate::error::{Error, Result};
use crate::escape::{all_boundary_angles, build_curve_any, EscapeCurve, SectorPlan};
use crate::quadrature::{log_sum_exp, GaussLegendre};
use crate::symbols::{rational_serde, QhSymbol, Rational, SymbolDescription};

/// Nodes per quadrature panel.
pub const PANEL_NODES: usize = 16;
/// Dyadic panels `[2^-k-1, 2^-k]` towards `tau = 0`.
pub const DYADIC_LEVELS: usize = 40;
/// Uniform panels on `[0, 1]` for the kernel.
pub const UNIFORM_PANELS: usize = 32;
/// Uniform panels for `solve_u_hat`, whose right-hand sides can be steep.
pub const SOLVE_PANELS: usize = 256;
/// Smallest start radius of the decay grid, relative to `omega`.
pub const RADIAL_FLOOR: f64 = 1e-6;
pub const MAX_FIT_RESIDUAL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { xi_min: 1e2, xi_max: 1e5, n_points: 16 }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi_min > 0.0 && self.xi_max.is_finite() && self.xi_min < self.xi_max) {
            return Err(Error::MalformedInput(format!(
                "sweep needs 0 < xi_min < xi_max, got [{}, {}]",
                self.xi_min, self.xi_max
            )));
        }
        if self.xi_max / self.xi_min < 1e2 {
            return Err(Error::MalformedInput("sweep must span at least two decades".into()));
        }
        if self.n_points < 8 {
            return Err(Error::MalformedInput("sweep needs at least 8 points".into()));
        }
        Ok(())
    }

    /// Geometric grid including both ends.
    pub fn xi_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.xi_min.ln(), self.xi_max.ln());
        let n = self.n_points - 1;
        (0..=n)
            .map(|i| match i {
                0 => self.xi_min,
                i if i == n => self.xi_max,
                _ => (lo + (hi - lo) * i as f64 / n as f64).exp(),
            })
            .collect()
    }
}

/// `int_0^1 exp(-xi tau^a / c3) dtau` via the regularized incomplete gamma.
pub fn bound_kernel(xi: f64, a: f64, c3: f64) -> f64 {
    let k = xi / c3;
    if k == 0.0 {
        return 1.0;
    }
    gamma(1.0 + 1.0 / a) * gamma_lr(1.0 / a, k) * k.powf(-1.0 / a)
}

/// Large-`xi` asymptote `Gamma(1 + 1/a) (c3 / xi)^(1/a)`.
pub fn watson_asymptote(xi: f64, a: f64, c3: f64) -> f64 {
    gamma(1.0 + 1.0 / a) * (c3 / xi).powf(1.0 / a)
}

/// Panel edges on `[0, 1]`: dyadic towards 0, uniform, and curve kinks.
pub fn panel_edges(breakpoints: &[f64], uniform: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=DYADIC_LEVELS).map(|k| 0.5f64.powi(k as i32)).collect();
    e.extend((1..uniform).map(|j| j as f64 / uniform as f64));
    e.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    e.push(0.0);
    e.sort_by(f64::total_cmp);
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    e
}

/// `(tau, weight)` nodes of the composite rule for one curve.
pub fn curve_nodes(gl: &GaussLegendre, curve: &EscapeCurve, uniform: usize) -> Vec<(f64, f64)> {
    let edges = panel_edges(&curve.kinks(), uniform);
    edges.windows(2).flat_map(|w| gl.mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// Decay starts: the certification angles on a geometric radial ladder
/// from `RADIAL_FLOOR * omega` up to `omega`.
pub fn decay_starts(plans: &[SectorPlan], grid: &GridSpec, omega: f64, ell: f64) -> Vec<DistoPoint> {
    let rays = all_boundary_angles(plans);
    let n = grid.radial_points as f64;
    let lo = (RADIAL_FLOOR * omega).ln();
    let hi = omega.ln();
    let radii: Vec<f64> = (0..grid.radial_points)
        .map(|i| (lo + (hi - lo) * (i as f64 + 0.5) / n).exp())
        .collect();
    let mut out = Vec::new();
    for theta in grid_angles(grid, &rays) {
        let dir = CirclePoint::from_angle(theta, ell);
        out.extend(radii.iter().map(|&r| ray_point(&dir, r, ell)));
    }
    out
}

/// Per-start `(log w, increment)` pairs; independent of `xi`.
fn increment_table(
    sym: &QhSymbol,
    plans: &[SectorPlan],
    start: DistoPoint,
    gl: &GaussLegendre,
) -> Result<Vec<(f64, f64)>> {
    let curve = build_curve_any(plans, start, sym.ell())?;
    let phi0 = sym.eval_at(start);
    curve_nodes(gl, &curve, UNIFORM_PANELS)
        .into_iter()
        .map(|(tau, w)| {
            let inc = sym.eval_at(curve.eval(tau)) - phi0;
            if !inc.is_finite() {
                return Err(Error::QuadratureUnstable(format!(
                    "non-finite increment at t={}, s={}, tau={tau}",
                    start.t, start.s
                )));
            }
            Ok((w.ln(), inc))
        })
        .collect()
}

fn log_kernel(table: &[(f64, f64)], xi: f64) -> Result<f64> {
    let terms: Vec<(f64, f64)> = table.iter().map(|&(lw, inc)| (lw - xi * inc, 1.0)).collect();
    let v = log_sum_exp(&terms);
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::QuadratureUnstable(format!("log kernel {v} at xi={xi}")));
    }
    Ok(v)
}

/// `M(xi)` for every `xi` in one pass over the starts.
pub fn kernel_norms(sym: &QhSymbol, plans: &[SectorPlan], xis: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    if xis.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Precondition("xi must be positive".into()));
    }
    let omega = plans.iter().map(|p| p.omega_radius).fold(f64::INFINITY, f64::min);
    let starts = decay_starts(plans, grid, omega, sym.ell());
    let gl = GaussLegendre::new(PANEL_NODES);
    let per_start: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&p| {
            let table = increment_table(sym, plans, p, &gl)?;
            xis.iter().map(|&xi| log_kernel(&table, xi)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..xis.len())
        .map(|j| per_start.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max).exp())
        .collect())
}

pub fn kernel_norm(sym: &QhSymbol, plans: &[SectorPlan], xi: f64, grid: &GridSpec) -> Result<f64> {
    Ok(kernel_norms(sym, plans, &[xi], grid)?[0])
}

/// `u(p) = -int_0^1 exp(xi [phi(p) - phi(gamma)]) f(gamma) . gamma' dtau`
/// for a right-hand side with components `(f_t, f_s)`.
pub fn solve_u_hat<F>(sym: &QhSymbol, plans: &[SectorPlan], f_hat: F, xi: f64, starts: &[DistoPoint]) -> Result<Vec<f64>>
where
    F: Fn(DistoPoint) -> [f64; 2] + Sync,
{
    let gl = GaussLegendre::new(PANEL_NODES);
    starts
        .par_iter()
        .map(|&p| {
            let curve = build_curve_any(plans, p, sym.ell())?;
            let phi0 = sym.eval_at(p);
            let mut acc = 0.0;
            for (tau, w) in curve_nodes(&gl, &curve, SOLVE_PANELS) {
                let g = curve.eval(tau);
                let v = curve.velocity(tau);
                let [ft, fs] = f_hat(g);
                let damp = (xi * (phi0 - sym.eval_at(g))).exp();
                acc += w * damp * (ft * v.t + fs * v.s);
            }
            if !acc.is_finite() {
                return Err(Error::QuadratureUnstable(format!("u_hat at t={}, s={}", p.t, p.s)));
            }
            Ok(-acc)
        })
        .collect()
}

/// Smooth bump `exp(1 - 1/(1 - psi/R^(2 ell)))` of `psi = t^(2 ell) + s^2`,
/// supported in `rho < radius`.
pub fn bump(p: DistoPoint, radius: f64, ell: f64) -> f64 {
    let q = bump_q(p, radius, ell);
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q)).exp()
    }
}

fn bump_q(p: DistoPoint, radius: f64, ell: f64) -> f64 {
    (p.t.abs().powf(2.0 * ell) + p.s * p.s) / radius.powf(2.0 * ell)
}

/// Right-hand side `(d_t u - xi phi_t u, d_s u - xi phi_s u)` of the bump.
pub fn bump_rhs(sym: &QhSymbol, radius: f64, xi: f64) -> impl Fn(DistoPoint) -> [f64; 2] + Sync + '_ {
    let ell = sym.ell();
    move |p| {
        let q = bump_q(p, radius, ell);
        if q >= 1.0 {
            return [0.0, 0.0];
        }
        let u = bump(p, radius, ell);
        let du_dq = -u / ((1.0 - q) * (1.0 - q));
        let r = radius.powf(2.0 * ell);
        let dq_dt = 2.0 * ell * p.t.abs().powf(2.0 * ell - 1.0) * p.t.signum() / r;
        let dq_ds = 2.0 * p.s / r;
        let (pt, ps) = sym.gradient(p.t, p.s);
        [du_dq * dq_dt - xi * pt * u, du_dq * dq_ds - xi * ps * u]
    }
}

/// Discrete `||u_hat|| / ||f_hat||` for the bump right-hand side.
pub fn operator_ratio(sym: &QhSymbol, plans: &[SectorPlan], xi: f64, starts: &[DistoPoint]) -> Result<f64> {
    let omega = plans.iter().map(|p| p.omega_radius).fold(f64::INFINITY, f64::min);
    let rhs = bump_rhs(sym, 0.9 * omega, xi);
    let u = solve_u_hat(sym, plans, &rhs, xi, starts)?;
    let nu: f64 = u.iter().map(|v| v * v).sum();
    let nf: f64 = starts
        .iter()
        .map(|&p| {
            let [a, b] = rhs(p);
            a * a + b * b
        })
        .sum();
    Ok((nu / nf).sqrt())
}

/// Grid used for sampled operator ratios.
pub fn ratio_grid() -> GridSpec {
    GridSpec { radial_points: 8, angular_points: 64, tau_points: 2, boundary_margin: 1e-9 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub symbol: SymbolDescription,
    pub symbol_digest: String,
    pub direction: Direction,
    #[serde(with = "rational_serde")]
    pub a: Rational,
    #[serde(rename = "C3")]
    pub c3: f64,
    pub omega_radius: f64,
    pub sweep: SweepSpec,
    pub grid: GridSpec,
    pub n_starts: usize,
    pub xi_grid: Vec<f64>,
    pub kernel_norm: Vec<f64>,
    /// `int_0^1 exp(-xi tau^a / C3) dtau`.
    pub kernel_bound: Vec<f64>,
    pub operator_ratio: Option<Vec<f64>>,
    /// `[xi_lo, xi_hi]` of the fitted decade.
    pub fit_window: [f64; 2],
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    pub fit_residual: f64,
    pub seed: u64,
}

impl DecayReport {
    pub fn check(&self) -> Result<()> {
        if !(self.fit_residual <= MAX_FIT_RESIDUAL) {
            return Err(Error::FitUnstable { residual: self.fit_residual });
        }
        Ok(())
    }

    pub fn relative_slope_error(&self) -> f64 {
        ((self.fitted_slope - self.predicted_slope) / self.predicted_slope).abs()
    }

    /// `max M / bound` over the sweep.
    pub fn sandwich_ratio(&self) -> f64 {
        self.kernel_norm
            .iter()
            .zip(&self.kernel_bound)
            .map(|(m, b)| m / b)
            .fold(0.0, f64::max)
    }
}

/// Rows `direction, xi, M, bound, operator_ratio` for each report.
pub fn write_decay_csv<W: std::io::Write>(reports: &[&DecayReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["direction", "xi", "M", "bound", "operator_ratio"])?;
    for r in reports {
        let dir = match r.direction {
            Direction::XiPositive => "xi_positive",
            Direction::XiNegative => "xi_negative",
        };
        for (i, xi) in r.xi_grid.iter().enumerate() {
            let ratio = r.operator_ratio.as_ref().map(|v| format!("{:e}", v[i])).unwrap_or_default();
            out.write_record([
                dir.to_string(),
                format!("{xi:e}"),
                format!("{:e}", r.kernel_norm[i]),
                format!("{:e}", r.kernel_bound[i]),
                ratio,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Least-squares slope of `log M` against `log xi` over the top decade.
pub fn fit_top_decade(xis: &[f64], ms: &[f64]) -> ([f64; 2], f64, f64) {
    let hi = xis.last().copied().unwrap_or(1.0);
    let lo = hi / 10.0 * (1.0 - 1e-12);
    let (x, y): (Vec<f64>, Vec<f64>) = xis
        .iter()
        .zip(ms)
        .filter(|(xi, _)| **xi >= lo)
        .map(|(xi, m)| (xi.ln(), m.ln()))
        .unzip();
    if x.len() < 2 {
        return ([lo, hi], f64::NAN, f64::INFINITY);
    }
    let (slope, res) = loglog_fit(&x, &y);
    ([x[0].exp(), hi], slope, res)
}

/// Sweep `xi` and fit the decay without judging the fit.
pub fn sweep(cert: &Certificate, sym: &QhSymbol, sweep: &SweepSpec, grid: &GridSpec, with_ratio: bool) -> Result<DecayReport> {
    sweep.validate()?;
    grid.validate()?;
    if !cert.pass {
        return Err(Error::Precondition("decay needs a passing certificate".into()));
    }
    let plans = &cert.plans;
    let xis = sweep.xi_grid();
    let ms = kernel_norms(sym, plans, &xis, grid)?;
    let a = cert.a_value();
    let bounds: Vec<f64> = xis.iter().map(|&xi| bound_kernel(xi, a, cert.c3)).collect();
    let operator_ratio = if with_ratio {
        let starts = crate::certify::grid_starts(plans, &ratio_grid(), cert.omega_radius, sym.ell());
        Some(
            xis.iter()
                .map(|&xi| operator_ratio(sym, plans, xi, &starts))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let (fit_window, fitted_slope, fit_residual) = fit_top_decade(&xis, &ms);
    let n_starts = decay_starts(plans, grid, cert.omega_radius, sym.ell()).len();
    Ok(DecayReport {
        symbol: sym.describe(),
        symbol_digest: sym.digest(),
        direction: cert.direction,
        a: cert.a,
        c3: cert.c3,
        omega_radius: cert.omega_radius,
        sweep: *sweep,
        grid: *grid,
        n_starts,
        xi_grid: xis,
        kernel_norm: ms,
        kernel_bound: bounds,
        operator_ratio,
        fit_window,
        fitted_slope,
        predicted_slope: -1.0 / a,
        fit_residual,
        seed: cert.seed,
    })
}

/// `sweep`, failing with `FitUnstable` when the fit residual exceeds 0.2.
pub fn sweep_and_fit(cert: &Certificate, sym: &QhSymbol, spec: &SweepSpec, grid: &GridSpec) -> Result<DecayReport> {
    let r = sweep(cert, sym, spec, grid, false)?;
    r.check()?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::run_direction;
    use crate::symbols::builtin;
    use approx::assert_relative_eq;

    fn small() -> GridSpec {
        GridSpec { radial_points: 8, angular_points: 64, tau_points: 32, boundary_margin: 1e-9 }
    }

    fn cert(name: &str) -> (QhSymbol, Certificate) {
        let sym = builtin(name).unwrap();
        let c = run_direction(&sym, Direction::XiPositive, &small(), 7).unwrap().certificate.unwrap();
        (sym, c)
    }

    fn midpoint(n: usize, f: impl Fn(f64) -> f64) -> f64 {
        (0..n).map(|i| f((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
    }

    #[test]
    fn bound_matches_reference_quadrature() {
        for (xi, a, c3) in [(1e4, 4.0, 16.0), (10.0, 3.0, 2.0), (1e3, 8.0, 1.5)] {
            let reference = midpoint(1_000_000, |t| (-xi * t.powf(a) / c3).exp());
            assert_relative_eq!(bound_kernel(xi, a, c3), reference, max_relative = 1e-8);
        }
    }

    #[test]
    fn quasielliptic_bound_value() {
        let b = bound_kernel(1e4, 4.0, 16.0);
        assert!((b - 0.1813).abs() < 1e-3, "{b}");
        assert_relative_eq!(b, watson_asymptote(1e4, 4.0, 16.0), max_relative = 1e-6);
    }

    #[test]
    fn kernel_tends_to_one_at_small_xi() {
        let (sym, c) = cert("maire-l1");
        let m = kernel_norm(&sym, &c.plans, 1e-9, &small()).unwrap();
        assert_relative_eq!(m, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn kernel_is_nonincreasing_and_below_bound() {
        let (sym, c) = cert("quasielliptic-l2-m4");
        let xis = [1.0, 10.0, 1e2, 1e3, 1e4];
        let ms = kernel_norms(&sym, &c.plans, &xis, &small()).unwrap();
        for w in ms.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for (xi, m) in xis.iter().zip(&ms) {
            assert!(*m > 0.0 && *m <= 1.0);
            assert!(*m <= bound_kernel(*xi, 4.0, c.c3) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (sym, c) = cert("maire-l1");
        let starts = crate::certify::grid_starts(&c.plans, &ratio_grid(), c.omega_radius, sym.ell());
        let u = solve_u_hat(&sym, &c.plans, |_| [0.0, 0.0], 10.0, &starts).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bump_is_reproduced() {
        let (sym, c) = cert("quasielliptic-l2-m4");
        let xi = 1e2;
        let radius = 0.9 * c.omega_radius;
        let starts = crate::certify::grid_starts(&c.plans, &ratio_grid(), c.omega_radius, sym.ell());
        let u = solve_u_hat(&sym, &c.plans, bump_rhs(&sym, radius, xi), xi, &starts).unwrap();
        for (p, v) in starts.iter().zip(&u) {
            let exact = bump(*p, radius, sym.ell());
            assert!((v - exact).abs() < 1e-8, "{p:?} {v} {exact}");
        }
    }

    #[test]
    fn sweep_grid_is_geometric() {
        let s = SweepSpec { xi_min: 1e2, xi_max: 1e5, n_points: 10 };
        let g = s.xi_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 1e2);
        assert_eq!(g[9], 1e5);
        assert_relative_eq!(g[2] / g[1], g[1] / g[0], max_relative = 1e-12);
        assert!(SweepSpec { xi_min: 1.0, xi_max: 10.0, n_points: 8 }.validate().is_err());
        assert!(SweepSpec { xi_min: 1.0, xi_max: 1e3, n_points: 4 }.validate().is_err());
    }

    #[test]
    fn fit_recovers_power_law() {
        let xis: Vec<f64> = (0..16).map(|i| 10f64.powf(2.0 + 3.0 * i as f64 / 15.0)).collect();
        let ms: Vec<f64> = xis.iter().map(|x| 3.0 * x.powf(-0.25)).collect();
        let (_, slope, res) = fit_top_decade(&xis, &ms);
        assert_relative_eq!(slope, -0.25, max_relative = 1e-10);
        assert!(res < 1e-10);
    }
}

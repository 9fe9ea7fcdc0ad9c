//! Escape curves: broken disto-lines leaving a neighbourhood of the origin
//! while `phi` grows.
//!
//! Positive sub-arcs use a single outgoing line aimed at the peak. Negative
//! components are split at their minimum; each half uses ingoing lines that
//! reflect off a fan of rays until the zero ray is reached, then one outgoing
//! line into the neighbouring positive arc.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::circle::{ComponentKind, H2Verdict, SignComponent};
use crate::distgeo::{
    ccw_offset, ddet, dressed_angle, dscalar, f_ell, f_ell_inv, line_step, line_velocity,
    normalize_angle, CirclePoint, DistoPoint, Heading, Sector, HALF_PI, VERTICAL_EPS,
};
use crate::error::{Error, Result};

/// Offset of the reflected directions, as a fraction of the sub-arc width.
pub const DIRECTION_OFFSET: f64 = 1.0 / 64.0;
/// Dressed-angle perturbation of directions with vanishing first coordinate.
pub const VERTICAL_PERTURBATION: f64 = 1.0 / 256.0;
/// Starts closer than this (dressed radians) to a boundary ray form the excluded set.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
pub const MAX_SEGMENTS: usize = 4;
const DET_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Positive,
    NegativeMain,
    NegativeGeneral,
}

/// Recipe for the starts of one sub-sector family.
///
/// For a negative half, `rays[0]` is the minimum direction and `rays[n]` the
/// zero ray; starts between `rays[k-1]` and `rays[k]` follow `dirs[k-1..]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub sector: Sector,
    pub dirs: Vec<CirclePoint>,
    pub rays: Vec<CirclePoint>,
    pub n: usize,
    /// `+1` when the rays advance anticlockwise, `-1` clockwise, `0` for positive arcs.
    pub orientation: i8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorPlan {
    pub sector: Sector,
    pub kind: PlanKind,
    pub branches: Vec<Branch>,
    pub n: usize,
    pub omega_radius: f64,
}

/// Number of reflecting segments for a half-arc of the given dressed width.
pub fn segment_count(width: f64) -> usize {
    if width < HALF_PI - 1e-9 {
        return 1;
    }
    let mut n = 2;
    while width / n as f64 * (1.0 + DIRECTION_OFFSET) >= HALF_PI {
        n += 1;
    }
    n
}

pub fn omega_for(kind: PlanKind, n: usize) -> f64 {
    match kind {
        PlanKind::Positive | PlanKind::NegativeMain => 0.25,
        PlanKind::NegativeGeneral => 1.0 / (8.0 * n as f64),
    }
}

fn vertical_angle(theta: f64) -> Option<f64> {
    [HALF_PI, 3.0 * HALF_PI]
        .into_iter()
        .find(|v| {
            let d = (normalize_angle(theta) - v).abs();
            d < VERTICAL_PERTURBATION
        })
}

impl Branch {
    fn ray_offset(&self, theta: f64) -> f64 {
        let base = self.rays[0].theta;
        if self.orientation > 0 {
            ccw_offset(base, theta)
        } else {
            ccw_offset(theta, base)
        }
    }

    /// Sub-sector index `k` in `1..=n` of a dressed angle (0 for positive branches).
    pub fn sub_sector(&self, theta: f64) -> Result<usize> {
        if !self.sector.contains_angle(theta) {
            return Err(Error::Precondition(format!("angle {theta} outside branch")));
        }
        if self.sector.boundary_distance(theta) < BOUNDARY_MARGIN {
            return Err(Error::Precondition(format!(
                "start at angle {theta} lies on a boundary ray"
            )));
        }
        if self.n == 0 {
            return Ok(0);
        }
        let d = self.ray_offset(theta);
        for k in 1..=self.n {
            let edge = self.ray_offset(self.rays[k].theta);
            if (d - edge).abs() < BOUNDARY_MARGIN {
                return Err(Error::Precondition(format!(
                    "start at angle {theta} lies on an internal ray"
                )));
            }
            if d < edge || k == self.n {
                return Ok(k);
            }
        }
        unreachable!()
    }

    /// Directions, crossing rays and headings used from sub-sector `k`.
    pub fn schedule(&self, k: usize) -> (Vec<CirclePoint>, Vec<CirclePoint>, Vec<Heading>) {
        if self.n == 0 {
            return (self.dirs.clone(), Vec::new(), vec![Heading::Outgoing]);
        }
        let dirs = self.dirs[k - 1..].to_vec();
        let rays = self.rays[k..].to_vec();
        let mut headings = vec![Heading::Ingoing; dirs.len()];
        *headings.last_mut().unwrap() = Heading::Outgoing;
        (dirs, rays, headings)
    }

    /// Closed-form Jacobians of every piece, for starts in sub-sector `k`.
    pub fn jacobians(&self, k: usize, ell: f64) -> Result<Vec<f64>> {
        let (dirs, rays, headings) = self.schedule(k);
        broken_line_jacobians(&dirs, &rays, &headings, ell)
    }

    pub fn boundary_angles(&self) -> Vec<f64> {
        let mut out = vec![self.sector.start.theta, self.sector.end.theta];
        out.extend(self.rays.iter().map(|r| r.theta));
        out
    }
}

/// `det d(gamma)/d(t, s)` on each piece of a broken line.
///
/// Piece 1 has Jacobian 1. Crossing ray `w_i` from direction `eta_i` to
/// `eta_{i+1}` multiplies it by
/// `sigma_i sigma_{i+1} |c_{i+1}|^(1-ell) |c_i|^(ell-1) Delta(eta_{i+1}; w_i) / Delta(eta_i; w_i)`.
pub fn broken_line_jacobians(
    dirs: &[CirclePoint],
    rays: &[CirclePoint],
    headings: &[Heading],
    ell: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![1.0];
    for i in 0..rays.len() {
        let den = ddet(dirs[i].point(), rays[i].point(), ell);
        let num = ddet(dirs[i + 1].point(), rays[i].point(), ell);
        if den.abs() < DET_EPS {
            return Err(Error::DegeneratePlan(format!(
                "Delta(eta_{}; ray_{}) = {den:e}",
                i + 1,
                i + 1
            )));
        }
        let ratio = if ell == 1.0 {
            1.0
        } else {
            let (c_next, c_here) = (dirs[i + 1].a.abs(), dirs[i].a.abs());
            if c_next < VERTICAL_EPS || c_here < VERTICAL_EPS {
                return Err(Error::DegeneratePlan(format!(
                    "vertical direction at reflection {} with ell > 1",
                    i + 1
                )));
            }
            (c_here / c_next).powf(ell - 1.0)
        };
        let sign = headings[i].sign() * headings[i + 1].sign();
        let delta = out[i] * sign * ratio * num / den;
        if !delta.is_finite() || delta == 0.0 {
            return Err(Error::DegeneratePlan(format!("jacobian of piece {} is {delta}", i + 2)));
        }
        out.push(delta);
    }
    Ok(out)
}

/// Jacobian of piece `piece` (1-based) for starts in the first sub-sector of the branch.
pub fn jacobian_closed_form(branch: &Branch, piece: usize, ell: f64) -> Result<f64> {
    let k = if branch.n == 0 { 0 } else { 1 };
    let jac = branch.jacobians(k, ell)?;
    jac.get(piece.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::Precondition(format!("branch has {} pieces", jac.len())))
}

impl SectorPlan {
    pub fn boundary_angles(&self) -> Vec<f64> {
        self.branches.iter().flat_map(|b| b.boundary_angles()).collect()
    }

    pub fn branch_for(&self, theta: f64) -> Option<&Branch> {
        self.branches.iter().find(|b| b.sector.contains_angle(theta))
    }
}

fn positive_plan(comp: &SignComponent) -> SectorPlan {
    let branches = comp
        .sub_arcs
        .iter()
        .map(|sub| Branch {
            sector: sub.sector,
            dirs: vec![sub.peak],
            rays: Vec::new(),
            n: 0,
            orientation: 0,
        })
        .collect();
    SectorPlan {
        sector: comp.arc,
        kind: PlanKind::Positive,
        branches,
        n: 0,
        omega_radius: omega_for(PlanKind::Positive, 0),
    }
}

/// Peak of the positive sub-arc that touches the given zero, moved off the vertical.
fn escape_direction(components: &[SignComponent], zero: usize, zero_theta: f64, ell: f64) -> Result<CirclePoint> {
    let sub = components
        .iter()
        .filter(|c| c.kind == ComponentKind::Positive)
        .find_map(|c| {
            if c.end_zero == Some(zero) {
                c.sub_arcs.last()
            } else if c.start_zero == Some(zero) {
                c.sub_arcs.first()
            } else {
                None
            }
        })
        .ok_or_else(|| Error::PlanInfeasible(format!("no positive arc beyond the zero at {zero_theta}")))?;
    let peak = sub.peak;
    if vertical_angle(peak.theta).is_none() {
        return Ok(peak);
    }
    // nudge toward the zero, which keeps the direction inside the sub-arc
    let toward = if ccw_offset(zero_theta, peak.theta) < PI { -1.0 } else { 1.0 };
    let gap = ccw_offset(zero_theta, peak.theta).min(ccw_offset(peak.theta, zero_theta));
    if gap <= 2.0 * VERTICAL_PERTURBATION {
        return Err(Error::PlanInfeasible(format!(
            "vertical escape direction at {} too close to its zero",
            peak.theta
        )));
    }
    let v = vertical_angle(peak.theta).unwrap();
    Ok(CirclePoint::from_angle(v + toward * VERTICAL_PERTURBATION, ell))
}

/// Half of a negative plan from the minimum direction `c` to `zero`, with
/// rays advancing anticlockwise for `orientation = 1` and clockwise for `-1`.
pub fn negative_branch(
    c: CirclePoint,
    zero: CirclePoint,
    orientation: i8,
    escape: CirclePoint,
    ell: f64,
) -> Result<Branch> {
    let o = orientation as f64;
    let width = if orientation > 0 {
        ccw_offset(c.theta, zero.theta)
    } else {
        ccw_offset(zero.theta, c.theta)
    };
    let mut n = segment_count(width);
    let mut first_dir = None;
    if n == 1 {
        if let Some(v) = vertical_angle(c.theta) {
            let eta = CirclePoint::from_angle(v - o * VERTICAL_PERTURBATION, ell);
            let reach = if orientation > 0 {
                ccw_offset(eta.theta, zero.theta)
            } else {
                ccw_offset(zero.theta, eta.theta)
            };
            if reach < HALF_PI - 1e-9 {
                first_dir = Some(eta);
            } else {
                n = 2;
            }
        } else {
            first_dir = Some(c);
        }
    }
    if n > MAX_SEGMENTS {
        return Err(Error::PlanInfeasible(format!(
            "negative half-arc of width {width:.6} needs {n} > {MAX_SEGMENTS} segments"
        )));
    }
    let step = width / n as f64;
    let mut rays: Vec<CirclePoint> = (0..n)
        .map(|j| CirclePoint::from_angle(c.theta + o * j as f64 * step, ell))
        .collect();
    rays.push(zero);
    let mut dirs: Vec<CirclePoint> = match first_dir {
        Some(eta) => vec![eta],
        None => (1..=n)
            .map(|j| CirclePoint::from_angle(rays[j - 1].theta - o * step * DIRECTION_OFFSET, ell))
            .collect(),
    };
    dirs.push(escape);

    for j in 1..=n {
        let eta = dirs[j - 1];
        if eta.is_vertical(ell) {
            return Err(Error::PlanInfeasible(format!("eta_{j} has vanishing first coordinate")));
        }
        let d_here = ddet(eta.point(), rays[j].point(), ell);
        let d_next = ddet(dirs[j].point(), rays[j].point(), ell);
        if d_here.abs() < DET_EPS || d_next.abs() < DET_EPS {
            return Err(Error::PlanInfeasible(format!(
                "Delta(eta_{j}; ray_{j}) = {d_here:e}, Delta(eta_{}; ray_{j}) = {d_next:e}",
                j + 1
            )));
        }
        // the ingoing line must reach the next ray at an acute disto-angle
        if dscalar(eta.point(), rays[j].point(), ell) <= 0.0 {
            return Err(Error::PlanInfeasible(format!("eta_{j} is not acute to ray_{j}")));
        }
        if j >= 2 {
            let arc = if orientation > 0 {
                Sector::between(rays[j - 2], rays[j - 1])
            } else {
                Sector::between(rays[j - 1], rays[j - 2])
            };
            if !arc.contains_angle(eta.theta) {
                return Err(Error::PlanInfeasible(format!("eta_{j} outside its arc")));
            }
        }
    }
    if dscalar(dirs[n].point(), zero.point(), ell) <= 0.0 {
        return Err(Error::PlanInfeasible("escape direction not acute to the zero ray".into()));
    }

    let sector = if orientation > 0 {
        Sector::between(c, zero)
    } else {
        Sector::between(zero, c)
    };
    Ok(Branch { sector, dirs, rays, n, orientation })
}

fn negative_plan(comp: &SignComponent, all: &[SignComponent], ell: f64) -> Result<SectorPlan> {
    let (Some(z1), Some(z2)) = (comp.start_zero, comp.end_zero) else {
        return Err(Error::PlanInfeasible("negative component covers the whole circle".into()));
    };
    let c = comp.extremum;
    let a1 = comp.arc.start;
    let a2 = comp.arc.end;
    let left = negative_branch(c, a1, -1, escape_direction(all, z1, a1.theta, ell)?, ell)?;
    let right = negative_branch(c, a2, 1, escape_direction(all, z2, a2.theta, ell)?, ell)?;
    let n = left.n.max(right.n);
    let kind = if n == 1 { PlanKind::NegativeMain } else { PlanKind::NegativeGeneral };
    Ok(SectorPlan {
        sector: comp.arc,
        kind,
        branches: vec![left, right],
        n,
        omega_radius: omega_for(kind, n),
    })
}

/// One plan per sign component of a passing verdict.
pub fn plan_sectors(verdict: &H2Verdict, ell: f64) -> Result<Vec<SectorPlan>> {
    if !verdict.pass {
        return Err(Error::Precondition(format!(
            "(H2) fails at items {:?}",
            verdict.failed_items()
        )));
    }
    verdict
        .components
        .iter()
        .map(|comp| match comp.kind {
            ComponentKind::Positive => Ok(positive_plan(comp)),
            ComponentKind::Negative => negative_plan(comp, &verdict.components, ell),
        })
        .collect()
}

/// Time and ray parameter `r = lambda^ell` where the line meets the line through `ray`.
fn ray_hit(start: DistoPoint, dir: &CirclePoint, ray: &CirclePoint, heading: Heading, ell: f64) -> Result<(f64, f64)> {
    let den = ddet(dir.point(), ray.point(), ell);
    if den.abs() < DET_EPS {
        return Err(Error::NotReached("line is parallel to the ray".into()));
    }
    let r = ddet(dir.point(), start, ell) / den;
    let sign = heading.sign();
    let tau = if dir.is_vertical(ell) {
        (r * ray.b - start.s) / (sign * dir.b)
    } else {
        let t1 = f_ell_inv(r * f_ell(ray.a, ell), ell);
        (t1 - start.t) / (sign * dir.a)
    };
    let slack = 1e-12 * (1.0 + start.norm());
    if tau < -slack || !tau.is_finite() {
        return Err(Error::NotReached(format!("intersection at tau = {tau}")));
    }
    Ok((tau.max(0.0), r))
}

/// Time at which the disto-line from `start` meets the line carrying `ray`.
pub fn tau_break(start: DistoPoint, dir: &CirclePoint, ray: &CirclePoint, heading: Heading, ell: f64) -> Result<f64> {
    ray_hit(start, dir, ray, heading, ell).map(|(tau, _)| tau)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Piece {
    pub origin: DistoPoint,
    pub dir: CirclePoint,
    pub heading: Heading,
    pub t0: f64,
}

#[derive(Debug, Clone)]
pub struct EscapeCurve {
    pub start: DistoPoint,
    pub ell: f64,
    pub pieces: Vec<Piece>,
    /// `tau_1 < ... < tau_n`, the start times of pieces `2..=n+1`.
    pub breakpoints: Vec<f64>,
    pub jacobians: Vec<f64>,
}

impl EscapeCurve {
    fn piece_at(&self, tau: f64) -> usize {
        self.pieces.iter().rposition(|p| p.t0 <= tau).unwrap_or(0)
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, tau: f64) -> DistoPoint {
        let p = &self.pieces[self.piece_at(tau)];
        line_step(p.origin, &p.dir, p.heading, tau - p.t0, self.ell)
    }

    pub fn dtau(&self, tau: f64) -> Result<DistoPoint> {
        if self.breakpoints.iter().any(|b| (tau - b).abs() < 1e-12) {
            return Err(Error::BreakpointDerivative { tau });
        }
        let p = &self.pieces[self.piece_at(tau)];
        Ok(line_velocity(p.origin, &p.dir, p.heading, tau - p.t0, self.ell))
    }

    /// Breakpoints plus the `tau` where a piece crosses `t = 0`, where
    /// `gamma'` loses smoothness when `ell > 1`.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = self.breakpoints.clone();
        for (i, p) in self.pieces.iter().enumerate() {
            if p.dir.is_vertical(self.ell) || p.dir.a == 0.0 {
                continue;
            }
            let tau = p.t0 - p.origin.t / (p.heading.sign() * p.dir.a);
            let end = self.pieces.get(i + 1).map_or(f64::INFINITY, |q| q.t0);
            if tau > p.t0 && tau < end {
                out.push(tau);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Right-continuous `gamma'`, also at breakpoints.
    pub fn velocity(&self, tau: f64) -> DistoPoint {
        let p = &self.pieces[self.piece_at(tau)];
        line_velocity(p.origin, &p.dir, p.heading, tau - p.t0, self.ell)
    }

    pub fn jacobian_at(&self, tau: f64) -> f64 {
        self.jacobians[self.piece_at(tau)]
    }

    /// `sup |gamma'|` over `(0, tau_max]` with the `tau` where it is reached.
    /// Along one piece `|t|` is convex in `tau`, so the speed peaks at an end.
    pub fn max_speed(&self, tau_max: f64) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        for (i, p) in self.pieces.iter().enumerate() {
            if p.t0 >= tau_max {
                break;
            }
            let end = self.pieces.get(i + 1).map_or(tau_max, |q| q.t0.min(tau_max));
            for tau in [p.t0, end] {
                let v = line_velocity(p.origin, &p.dir, p.heading, tau - p.t0, self.ell).norm();
                if v > best.0 {
                    best = (v, tau);
                }
            }
        }
        best
    }
}

pub fn curve_eval(curve: &EscapeCurve, tau: f64) -> DistoPoint {
    curve.eval(tau)
}

pub fn curve_dtau(curve: &EscapeCurve, tau: f64) -> Result<DistoPoint> {
    curve.dtau(tau)
}

/// Escape curve of a branch from a start strictly inside one of its sub-sectors.
pub fn build_branch_curve(branch: &Branch, start: DistoPoint, ell: f64) -> Result<EscapeCurve> {
    let theta = dressed_angle(start, ell)?;
    let k = branch.sub_sector(theta)?;
    let (dirs, rays, headings) = branch.schedule(k);
    let jacobians = broken_line_jacobians(&dirs, &rays, &headings, ell)?;
    let mut pieces = Vec::with_capacity(dirs.len());
    let mut breakpoints = Vec::with_capacity(rays.len());
    let mut origin = start;
    let mut t0 = 0.0;
    for (i, dir) in dirs.iter().enumerate() {
        pieces.push(Piece { origin, dir: *dir, heading: headings[i], t0 });
        if let Some(ray) = rays.get(i) {
            let (tau, r) = ray_hit(origin, dir, ray, headings[i], ell)?;
            if r < 0.0 {
                return Err(Error::NotReached(format!(
                    "piece {} meets the opposite ray",
                    i + 1
                )));
            }
            origin = line_step(origin, dir, headings[i], tau, ell);
            t0 += tau;
            breakpoints.push(t0);
        }
    }
    Ok(EscapeCurve { start, ell, pieces, breakpoints, jacobians })
}

pub fn build_curve(plan: &SectorPlan, start: DistoPoint, ell: f64) -> Result<EscapeCurve> {
    let theta = dressed_angle(start, ell)?;
    let branch = plan
        .branch_for(theta)
        .ok_or(Error::UncoveredStart { t: start.t, s: start.s })?;
    build_branch_curve(branch, start, ell)
}

/// Curve from whichever plan covers the start.
pub fn build_curve_any(plans: &[SectorPlan], start: DistoPoint, ell: f64) -> Result<EscapeCurve> {
    let theta = dressed_angle(start, ell)?;
    for plan in plans {
        if let Some(branch) = plan.branch_for(theta) {
            if branch.sector.boundary_distance(theta) >= BOUNDARY_MARGIN {
                return build_branch_curve(branch, start, ell);
            }
        }
    }
    Err(Error::UncoveredStart { t: start.t, s: start.s })
}

/// Five-point finite-difference Jacobian of `start -> gamma(start, tau)` for a
/// fixed branch, with steps `eps rho` in `t` and `eps rho^ell` in `s`.
pub fn fd_jacobian(branch: &Branch, start: DistoPoint, tau: f64, eps: f64, ell: f64) -> Result<f64> {
    let r = crate::distgeo::rho(start, ell);
    let (ht, hs) = (eps * r, eps * r.powf(ell));
    let at = |dt: f64, ds: f64| -> Result<DistoPoint> {
        Ok(build_branch_curve(branch, DistoPoint::new(start.t + dt, start.s + ds), ell)?.eval(tau))
    };
    let partial = |ut: f64, us: f64, h: f64| -> Result<(f64, f64)> {
        let p2 = at(2.0 * ut, 2.0 * us)?;
        let p1 = at(ut, us)?;
        let m1 = at(-ut, -us)?;
        let m2 = at(-2.0 * ut, -2.0 * us)?;
        let d = |a: f64, b: f64, c: f64, e: f64| (-a + 8.0 * b - 8.0 * c + e) / (12.0 * h);
        Ok((d(p2.t, p1.t, m1.t, m2.t), d(p2.s, p1.s, m1.s, m2.s)))
    };
    let (j11, j21) = partial(ht, 0.0, ht)?;
    let (j12, j22) = partial(0.0, hs, hs)?;
    Ok(j11 * j22 - j12 * j21)
}

/// Dressed angles of every boundary ray of a plan family, normalized to `[0, 2 pi)`.
pub fn all_boundary_angles(plans: &[SectorPlan]) -> Vec<f64> {
    let mut out: Vec<f64> = plans
        .iter()
        .flat_map(|p| p.boundary_angles())
        .map(normalize_angle)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

/// Dressed distance from `theta` to the nearest angle of a sorted list.
pub fn distance_to_rays(theta: f64, rays: &[f64]) -> f64 {
    rays.iter()
        .map(|r| {
            let d = (normalize_angle(theta) - r).abs();
            d.min(TAU - d)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{check_h2, DEFAULT_SAMPLES};
    use crate::distgeo::rho;
    use crate::symbols::builtin;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn plans(name: &str) -> (Vec<SectorPlan>, f64) {
        let sym = builtin(name).unwrap();
        let v = check_h2(&sym, DEFAULT_SAMPLES).unwrap();
        (plan_sectors(&v, sym.ell()).unwrap(), sym.ell())
    }

    #[test]
    fn quasielliptic_has_one_positive_plan() {
        let (ps, _) = plans("quasielliptic-l2-m4");
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].kind, PlanKind::Positive);
        assert_eq!(ps[0].n, 0);
    }

    #[test]
    fn maire_has_six_plans() {
        let (ps, _) = plans("maire-l1");
        assert_eq!(ps.len(), 6);
        let neg: Vec<_> = ps.iter().filter(|p| p.kind != PlanKind::Positive).collect();
        assert_eq!(neg.len(), 3);
        assert!(neg.iter().all(|p| p.kind == PlanKind::NegativeMain && p.n == 1));
        assert!(ps.iter().all(|p| p.omega_radius == 0.25));
    }

    #[test]
    fn wide_arc_segment_count() {
        assert_eq!(segment_count(3.0 * PI / 2.0), 4);
        assert_eq!(omega_for(PlanKind::NegativeGeneral, 4), 1.0 / 32.0);
        assert_eq!(segment_count(PI / 4.0), 1);
    }

    #[test]
    fn tau_break_examples() {
        let h = 2f64.sqrt() / 2.0;
        let dir = CirclePoint { theta: PI / 4.0, a: h, b: h };
        let up = CirclePoint { theta: HALF_PI, a: 0.0, b: 1.0 };
        let tau = tau_break(DistoPoint::new(0.2, 0.1), &dir, &up, Heading::Ingoing, 1.0).unwrap();
        assert_relative_eq!(tau, 0.2 * 2f64.sqrt(), max_relative = 1e-12);

        let on = tau_break(DistoPoint::new(0.0, 0.3), &dir, &up, Heading::Ingoing, 1.0).unwrap();
        assert_eq!(on, 0.0);

        let err = tau_break(DistoPoint::new(0.2, 0.1), &dir, &dir, Heading::Ingoing, 1.0);
        assert!(matches!(err, Err(Error::NotReached(_))));
    }

    #[test]
    fn jacobian_example() {
        let h = 2f64.sqrt() / 2.0;
        let c = CirclePoint { theta: 7.0 * PI / 4.0, a: h, b: -h };
        let ray = CirclePoint { theta: PI, a: -1.0, b: 0.0 };
        let esc = CirclePoint { theta: HALF_PI, a: 0.0, b: 1.0 };
        let jac =
            broken_line_jacobians(&[c, esc], &[ray], &[Heading::Ingoing, Heading::Outgoing], 1.0).unwrap();
        assert_eq!(jac[0], 1.0);
        assert_relative_eq!(jac[1], 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn curves_escape_and_stay_continuous() {
        for name in ["maire-l1", "maire-l2", "jt-q8", "quasielliptic-l2-m4"] {
            let (ps, ell) = plans(name);
            for plan in &ps {
                for branch in &plan.branches {
                    let theta = branch.sector.angle_at(0.37 * branch.sector.width);
                    let dir = CirclePoint::from_angle(theta, ell);
                    let start = crate::distgeo::ray_point(&dir, 0.8 * plan.omega_radius, ell);
                    let curve = build_branch_curve(branch, start, ell).unwrap();
                    assert!(rho(curve.eval(1.0), ell) > plan.omega_radius, "{name}");
                    for &b in &curve.breakpoints {
                        assert!(b <= 0.5 + 1e-12);
                        let left = curve.eval(b - 1e-13);
                        let right = curve.eval(b);
                        assert_abs_diff_eq!(left.t, right.t, epsilon = 1e-10);
                        assert_abs_diff_eq!(left.s, right.s, epsilon = 1e-10);
                    }
                    assert!(matches!(
                        curve.breakpoints.first().map(|&b| curve.dtau(b)),
                        None | Some(Err(Error::BreakpointDerivative { .. }))
                    ));
                }
            }
        }
    }

    #[test]
    fn positive_single_piece_is_line_step() {
        let (ps, ell) = plans("quasielliptic-l2-m4");
        let start = DistoPoint::new(0.1, 0.05);
        let curve = build_curve(&ps[0], start, ell).unwrap();
        assert_eq!(curve.pieces.len(), 1);
        for tau in [0.0, 0.3, 1.0] {
            let p = line_step(start, &curve.pieces[0].dir, Heading::Outgoing, tau, ell);
            assert_eq!(curve.eval(tau), p);
        }
        assert!(rho(curve.eval(1.0), ell) > 0.25);
    }
}

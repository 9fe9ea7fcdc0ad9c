//! Distorted plane geometry for the weights `(1, ell)`.
//!
//! The dressing map `(t, s) -> (f_ell(t), s)` turns every object here into
//! ordinary Euclidean geometry: the unit disto-circle becomes the unit circle,
//! disto-rays become rays, disto-lines become straight lines and the
//! disto-scalar product / disto-determinant become the usual dot product and
//! determinant. Most functions are thin wrappers around that observation.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|f_ell(c)|` below this is treated as a vertical direction.
pub const VERTICAL_EPS: f64 = 1e-9;

/// `f_ell(sigma) = sigma |sigma|^(ell - 1)`.
#[inline]
pub fn f_ell(sigma: f64, ell: f64) -> f64 {
    if ell == 1.0 {
        sigma
    } else {
        sigma * sigma.abs().powf(ell - 1.0)
    }
}

#[inline]
pub fn f_ell_prime(sigma: f64, ell: f64) -> f64 {
    if ell == 1.0 {
        1.0
    } else {
        ell * sigma.abs().powf(ell - 1.0)
    }
}

#[inline]
pub fn f_ell_inv(y: f64, ell: f64) -> f64 {
    if ell == 1.0 {
        y
    } else if y == 0.0 {
        0.0
    } else {
        y.signum() * y.abs().powf(1.0 / ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistoPoint {
    pub t: f64,
    pub s: f64,
}

impl DistoPoint {
    pub const ORIGIN: DistoPoint = DistoPoint { t: 0.0, s: 0.0 };

    pub fn new(t: f64, s: f64) -> Self {
        Self { t, s }
    }

    pub fn norm(&self) -> f64 {
        self.t.hypot(self.s)
    }
}

pub fn dressing(p: DistoPoint, ell: f64) -> DistoPoint {
    DistoPoint::new(f_ell(p.t, ell), p.s)
}

/// Quasihomogeneous radius, `rho^(2 ell) = t^(2 ell) + s^2`.
pub fn rho(p: DistoPoint, ell: f64) -> f64 {
    // rho^ell is the Euclidean norm of the dressed point.
    f_ell(p.t, ell).hypot(p.s).powf(1.0 / ell)
}

/// Disto-scalar product `t t' |t t'|^(ell-1) + s s'`.
pub fn dscalar(v: DistoPoint, w: DistoPoint, ell: f64) -> f64 {
    f_ell(v.t, ell) * f_ell(w.t, ell) + v.s * w.s
}

/// Disto-determinant `f_ell(v_1) w_2 - v_2 f_ell(w_1)`.
pub fn ddet(v: DistoPoint, w: DistoPoint, ell: f64) -> f64 {
    f_ell(v.t, ell) * w.s - v.s * f_ell(w.t, ell)
}

/// Dressed angle of a point, in `[0, 2 pi)`.
pub fn dressed_angle(p: DistoPoint, ell: f64) -> Result<f64> {
    if p.t == 0.0 && p.s == 0.0 {
        return Err(Error::OriginProjection);
    }
    Ok(normalize_angle(p.s.atan2(f_ell(p.t, ell))))
}

pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Anticlockwise angular distance from `from` to `to`, in `[0, 2 pi)`.
pub fn ccw_offset(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Which local coordinate parametrizes the circle well near a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// Parametrize by `s` (valid away from `t = 0`).
    S,
    /// Parametrize by `t` (valid away from `s = 0`).
    T,
}

/// A point of the unit disto-circle `t^(2 ell) + s^2 = 1`, carried with its
/// dressed angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
}

impl CirclePoint {
    pub fn from_angle(theta: f64, ell: f64) -> Self {
        let theta = normalize_angle(theta);
        let (sin, cos) = theta.sin_cos();
        Self {
            theta,
            a: f_ell_inv(cos, ell),
            b: sin,
        }
    }

    /// Point with the given `s` coordinate on the side `sign(a) = a_sign`.
    pub fn from_s_chart(s: f64, a_sign: f64, ell: f64) -> Self {
        let a = a_sign.signum() * (1.0 - s * s).max(0.0).powf(0.5 / ell);
        Self {
            theta: normalize_angle(s.atan2(f_ell(a, ell))),
            a,
            b: s,
        }
    }

    /// Point with the given `t` coordinate on the side `sign(b) = b_sign`.
    pub fn from_t_chart(t: f64, b_sign: f64, ell: f64) -> Self {
        let b = b_sign.signum() * (1.0 - t.abs().powf(2.0 * ell)).max(0.0).sqrt();
        Self {
            theta: normalize_angle(b.atan2(f_ell(t, ell))),
            a: t,
            b,
        }
    }

    pub fn point(&self) -> DistoPoint {
        DistoPoint::new(self.a, self.b)
    }

    /// Chart rule: the `s`-chart when `|a| > 2^(-1/(2 ell))`, else the `t`-chart.
    pub fn chart(&self, ell: f64) -> Chart {
        if self.a.abs() > 2f64.powf(-0.5 / ell) {
            Chart::S
        } else {
            Chart::T
        }
    }

    /// Whether `f_ell(a)` vanishes to working precision.
    pub fn is_vertical(&self, ell: f64) -> bool {
        f_ell(self.a, ell).abs() < VERTICAL_EPS
    }
}

/// Projection `(t / rho, s / rho^ell)` onto the unit disto-circle.
pub fn circle_point_from_xy(p: DistoPoint, ell: f64) -> Result<CirclePoint> {
    if p.t == 0.0 && p.s == 0.0 {
        return Err(Error::OriginProjection);
    }
    let r = rho(p, ell);
    let a = p.t / r;
    let b = p.s / r.powf(ell);
    Ok(CirclePoint {
        theta: normalize_angle(b.atan2(f_ell(a, ell))),
        a,
        b,
    })
}

/// `(lambda a, lambda^ell b)`: the point of radius `lambda` on the ray through `dir`.
pub fn ray_point(dir: &CirclePoint, lambda: f64, ell: f64) -> DistoPoint {
    DistoPoint::new(lambda * dir.a, lambda.powf(ell) * dir.b)
}

/// Anticlockwise arc of the disto-circle and the unit sector it spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub start: CirclePoint,
    pub end: CirclePoint,
    /// Anticlockwise dressed width, in `(0, 2 pi]`.
    pub width: f64,
}

impl Sector {
    pub fn new(start_theta: f64, width: f64, ell: f64) -> Self {
        debug_assert!(width > 0.0 && width <= TAU + 1e-12);
        let width = width.min(TAU);
        Self {
            start: CirclePoint::from_angle(start_theta, ell),
            end: CirclePoint::from_angle(start_theta + width, ell),
            width,
        }
    }

    pub fn full(start_theta: f64, ell: f64) -> Self {
        Self::new(start_theta, TAU, ell)
    }

    pub fn between(start: CirclePoint, end: CirclePoint) -> Self {
        let mut width = ccw_offset(start.theta, end.theta);
        if width == 0.0 {
            width = TAU;
        }
        Self { start, end, width }
    }

    pub fn is_full(&self) -> bool {
        self.width >= TAU
    }

    /// Offset of a dressed angle from the start, measured anticlockwise.
    pub fn offset_of(&self, theta: f64) -> f64 {
        ccw_offset(self.start.theta, theta)
    }

    /// Closed membership of a dressed angle, with a `1e-12` slack.
    pub fn contains_angle(&self, theta: f64) -> bool {
        if self.is_full() {
            return true;
        }
        let off = self.offset_of(theta);
        off <= self.width + 1e-12 || off >= TAU - 1e-12
    }

    /// Dressed angle at the given offset from the start.
    pub fn angle_at(&self, offset: f64) -> f64 {
        normalize_angle(self.start.theta + offset)
    }

    /// Dressed distance from a contained angle to the nearer boundary ray.
    pub fn boundary_distance(&self, theta: f64) -> f64 {
        if self.is_full() {
            return f64::INFINITY;
        }
        let off = self.offset_of(theta);
        off.min(self.width - off)
    }
}

/// Sector membership of a point, via its dressed angle. The origin belongs to
/// every sector.
pub fn in_sector(p: DistoPoint, sec: &Sector, ell: f64) -> bool {
    match dressed_angle(p, ell) {
        Ok(theta) => sec.contains_angle(theta),
        Err(_) => true,
    }
}

/// Sign of `varrho` relative to the first coordinate `c` of the direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    /// `varrho = +c`: the dressed point moves along `d_ell(c, d)`.
    Outgoing,
    /// `varrho = -c`: the dressed point moves along `-d_ell(c, d)`.
    Ingoing,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::Outgoing => 1.0,
            Heading::Ingoing => -1.0,
        }
    }
}

/// Point at time `tau` on the disto-line through `start`, disto-parallel to `dir`.
pub fn line_step(
    start: DistoPoint,
    dir: &CirclePoint,
    heading: Heading,
    tau: f64,
    ell: f64,
) -> DistoPoint {
    let sign = heading.sign();
    if dir.is_vertical(ell) {
        return DistoPoint::new(start.t, start.s + sign * dir.b * tau);
    }
    let c = dir.a;
    let t = start.t + sign * c * tau;
    let s = start.s + dir.b / f_ell(c, ell) * (f_ell(t, ell) - f_ell(start.t, ell));
    DistoPoint::new(t, s)
}

/// `d/dtau` of [`line_step`].
pub fn line_velocity(
    start: DistoPoint,
    dir: &CirclePoint,
    heading: Heading,
    tau: f64,
    ell: f64,
) -> DistoPoint {
    let sign = heading.sign();
    if dir.is_vertical(ell) {
        return DistoPoint::new(0.0, sign * dir.b);
    }
    let c = dir.a;
    let t = start.t + sign * c * tau;
    let ds = if ell == 1.0 {
        sign * dir.b
    } else {
        sign * dir.b * ell * (t.abs() / c.abs()).powf(ell - 1.0)
    };
    DistoPoint::new(sign * c, ds)
}

/// Whether `p` lies in the open disto-disk `D(radius)`.
pub fn disk_contains(p: DistoPoint, radius: f64, ell: f64) -> bool {
    rho(p, ell) < radius
}

/// Quasihomogeneous dilation `(lambda t, lambda^ell s)`.
pub fn dilate(p: DistoPoint, lambda: f64, ell: f64) -> DistoPoint {
    DistoPoint::new(lambda * p.t, lambda.powf(ell) * p.s)
}

pub(crate) const HALF_PI: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_ell_examples() {
        assert_eq!(f_ell(-3.0, 2.0), -9.0);
        for x in [-2.0, 0.0, 5.0] {
            assert_eq!(f_ell(x, 1.0), x);
        }
        assert_relative_eq!(f_ell_inv(-8.0, 3.0), -2.0, max_relative = 1e-14);
    }

    #[test]
    fn dressing_examples() {
        assert_eq!(dressing(DistoPoint::new(2.0, 5.0), 2.0), DistoPoint::new(4.0, 5.0));
        assert_eq!(dressing(DistoPoint::new(-1.0, 0.0), 2.0), DistoPoint::new(-1.0, 0.0));
    }

    #[test]
    fn rho_examples() {
        assert_relative_eq!(rho(DistoPoint::new(1.0, 1.0), 2.0), 2f64.powf(0.25), max_relative = 1e-14);
        assert_relative_eq!(rho(DistoPoint::new(3.0, 4.0), 1.0), 5.0, max_relative = 1e-14);
        assert_relative_eq!(
            rho(DistoPoint::new(3.0, 9.0), 2.0),
            3.0 * 2f64.powf(0.25),
            max_relative = 1e-14
        );
    }

    #[test]
    fn scalar_and_determinant_examples() {
        let v = DistoPoint::new(1.0, 2.0);
        let w = DistoPoint::new(3.0, 4.0);
        assert_eq!(dscalar(v, w, 1.0), 11.0);
        assert_eq!(dscalar(DistoPoint::new(2.0, 1.0), DistoPoint::new(3.0, 1.0), 2.0), 37.0);
        assert_eq!(ddet(v, w, 1.0), -2.0);
        for ell in [1.0, 1.5, 2.0] {
            assert_eq!(ddet(v, v, ell), 0.0);
        }
    }

    #[test]
    fn projection_examples() {
        let p = circle_point_from_xy(DistoPoint::new(3.0, 4.0), 1.0).unwrap();
        assert_relative_eq!(p.a, 0.6, max_relative = 1e-14);
        assert_relative_eq!(p.b, 0.8, max_relative = 1e-14);

        let q = CirclePoint::from_angle(1.1, 2.0);
        let r = circle_point_from_xy(ray_point(&q, 7.0, 2.0), 2.0).unwrap();
        assert_relative_eq!(r.a, q.a, max_relative = 1e-13);
        assert_relative_eq!(r.b, q.b, max_relative = 1e-13);

        assert!(matches!(
            circle_point_from_xy(DistoPoint::ORIGIN, 2.0),
            Err(Error::OriginProjection)
        ));
    }

    #[test]
    fn first_quadrant_membership() {
        let sec = Sector::new(0.0, HALF_PI, 1.0);
        assert!(in_sector(DistoPoint::new(0.5, 0.1), &sec, 1.0));
        assert!(!in_sector(DistoPoint::new(-0.5, 0.1), &sec, 1.0));
        assert!(!in_sector(DistoPoint::new(0.5, -0.1), &sec, 1.0));
    }

    #[test]
    fn line_step_examples() {
        let dir = CirclePoint::from_angle(0.0, 1.0);
        let p = line_step(DistoPoint::new(0.1, 0.2), &dir, Heading::Outgoing, 0.3, 1.0);
        assert_relative_eq!(p.t, 0.4, max_relative = 1e-14);
        assert_relative_eq!(p.s, 0.2, max_relative = 1e-14);

        let diag = CirclePoint::from_angle(PI / 4.0, 1.0);
        let q = line_step(DistoPoint::ORIGIN, &diag, Heading::Outgoing, 1.0, 1.0);
        let h = 2f64.sqrt() / 2.0;
        assert_relative_eq!(q.t, h, max_relative = 1e-14);
        assert_relative_eq!(q.s, h, max_relative = 1e-14);
    }

    #[test]
    fn vertical_line_uses_vertical_form() {
        let up = CirclePoint::from_angle(HALF_PI, 2.0);
        assert!(up.is_vertical(2.0));
        let p = line_step(DistoPoint::new(0.1, 0.2), &up, Heading::Outgoing, 0.5, 2.0);
        assert_relative_eq!(p.t, 0.1);
        assert_relative_eq!(p.s, 0.7, max_relative = 1e-14);
    }

    #[test]
    fn sector_wraps_through_zero() {
        let sec = Sector::new(7.0 * PI / 4.0, HALF_PI, 1.0);
        assert!(sec.contains_angle(0.1));
        assert!(sec.contains_angle(6.0));
        assert!(!sec.contains_angle(1.0));
        assert_relative_eq!(sec.boundary_distance(0.0), PI / 4.0, max_relative = 1e-14);
    }
}

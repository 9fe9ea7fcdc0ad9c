//! Analysis of `phi~`, the restriction of `phi` to the unit disto-circle.
//!
//! Everything is indexed by the dressed angle. Values are normalized by
//! `max |phi~|` before any tolerance is applied.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distgeo::{normalize_angle, CirclePoint, Sector, HALF_PI};
use crate::error::{Error, Result};
use crate::symbols::{nearest_rational, rational_serde, QhSymbol, Rational, SymbolDescription, SymbolForm};

pub const DEFAULT_SAMPLES: usize = 4096;
pub const MAX_SAMPLES: usize = 1 << 20;
/// Absolute zero tolerance on the normalized profile.
pub const ZERO_TOL: f64 = 1e-9;
/// Bisection stops at this dressed-angle width.
pub const BISECT_WIDTH: f64 = 1e-12;
/// Positive components are split into at most this many sub-arcs.
pub const MAX_SUB_ARCS: usize = 64;
const MONO_EPS: f64 = 1e-12;
const ACUTE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CircleProfile {
    pub ell: f64,
    pub step: f64,
    pub samples: Vec<(CirclePoint, f64)>,
    /// `max |phi~|` over the samples.
    pub scale: f64,
}

impl CircleProfile {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.samples[i % self.len()].0.theta
    }

    pub fn value(&self, i: usize) -> f64 {
        self.samples[i % self.len()].1
    }

    pub fn normalized(&self, i: usize) -> f64 {
        if self.scale > 0.0 {
            self.value(i) / self.scale
        } else {
            0.0
        }
    }

    pub fn max_normalized(&self) -> f64 {
        (0..self.len()).map(|i| self.normalized(i)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn sign(&self, i: usize) -> i8 {
        let u = self.normalized(i);
        if u.abs() < ZERO_TOL {
            0
        } else if u > 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn sample_profile(sym: &QhSymbol, n_samples: usize) -> Result<CircleProfile> {
    if n_samples < 64 {
        return Err(Error::Precondition(format!("n_samples = {n_samples} < 64")));
    }
    let ell = sym.ell();
    let step = TAU / n_samples as f64;
    let samples: Vec<(CirclePoint, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let p = CirclePoint::from_angle(i as f64 * step, ell);
            (p, sym.tilde(p.theta))
        })
        .collect();
    if let Some((p, v)) = samples.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::MalformedInput(format!(
            "non-finite value {v} at theta = {}",
            p.theta
        )));
    }
    let scale = samples.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    Ok(CircleProfile { ell, step, samples, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroKind {
    /// Sign change.
    Crossing,
    /// Touches zero without changing sign.
    Tangential,
    /// `phi~` vanishes on a whole arc.
    Flat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleZero {
    pub point: CirclePoint,
    /// Anticlockwise extent `(start, end)` of the zero set (a single point unless flat).
    pub extent: (f64, f64),
    /// Sampling bracket the zero was refined in.
    pub bracket: (f64, f64),
    pub kind: ZeroKind,
}

impl CircleZero {
    fn point_zero(theta: f64, bracket: (f64, f64), kind: ZeroKind, ell: f64) -> Self {
        let theta = normalize_angle(theta);
        Self {
            point: CirclePoint::from_angle(theta, ell),
            extent: (theta, theta),
            bracket: (normalize_angle(bracket.0), normalize_angle(bracket.1)),
            kind,
        }
    }
}

fn bisect_zero(sym: &QhSymbol, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = sym.tilde(lo);
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let f_mid = sym.tilde(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Zeros of `phi~`, sorted by dressed angle.
pub fn find_zeros(sym: &QhSymbol, profile: &CircleProfile) -> Result<Vec<CircleZero>> {
    let n = profile.len();
    let h = profile.step;
    let ell = profile.ell;
    let unresolved = |theta: f64| Error::UnresolvedZero {
        theta: normalize_angle(theta),
        n_samples: n,
    };

    let Some(first) = (0..n).find(|&i| profile.sign(i) != 0) else {
        return Ok(vec![CircleZero {
            point: CirclePoint::from_angle(0.0, ell),
            extent: (0.0, TAU),
            bracket: (0.0, TAU),
            kind: ZeroKind::Flat,
        }]);
    };
    let scale = profile.scale;
    let theta_of = |i: usize| profile.theta(first) + (i - first) as f64 * h;

    let mut zeros = Vec::new();
    let mut i = first;
    while i < first + n {
        let si = profile.sign(i);
        let mut j = i + 1;
        while profile.sign(j) == 0 {
            j += 1;
        }
        let sj = profile.sign(j);
        let (lo, hi) = (theta_of(i), theta_of(j));
        if j > i + 1 {
            let run_flat = (i + 1..j).all(|k| profile.normalized(k).abs() <= 1e-14);
            if run_flat && j - i > 3 {
                let (a, b) = (theta_of(i + 1), theta_of(j - 1));
                let mid = normalize_angle(0.5 * (a + b));
                zeros.push(CircleZero {
                    point: CirclePoint::from_angle(mid, ell),
                    extent: (normalize_angle(a), normalize_angle(b)),
                    bracket: (normalize_angle(lo), normalize_angle(hi)),
                    kind: ZeroKind::Flat,
                });
            } else if si != sj {
                let z = bisect_zero(sym, lo, hi);
                zeros.push(CircleZero::point_zero(z, (lo, hi), ZeroKind::Crossing, ell));
            } else {
                let side = si as f64;
                let (z, v) = golden_min(|x| side * sym.tilde(x) / scale, lo, hi, BISECT_WIDTH);
                if v < -ZERO_TOL {
                    return Err(unresolved(z));
                }
                zeros.push(CircleZero::point_zero(z, (lo, hi), ZeroKind::Tangential, ell));
            }
        } else if si != sj {
            let z = bisect_zero(sym, lo, hi);
            zeros.push(CircleZero::point_zero(z, (lo, hi), ZeroKind::Crossing, ell));
        } else {
            // A shallow dip may hide a tangential zero or a pair of crossings.
            let ui = profile.normalized(j).abs();
            if ui < 0.05
                && ui <= profile.normalized(j - 1).abs()
                && ui <= profile.normalized(j + 1).abs()
                && profile.sign(j + 1) == sj
            {
                let side = sj as f64;
                let (a, b) = (theta_of(j) - h, theta_of(j) + h);
                let (z, v) = golden_min(|x| side * sym.tilde(x) / scale, a, b, BISECT_WIDTH);
                if v < -ZERO_TOL {
                    return Err(unresolved(z));
                }
                if v < ZERO_TOL {
                    zeros.push(CircleZero::point_zero(z, (a, b), ZeroKind::Tangential, ell));
                }
            }
        }
        i = j;
    }

    zeros.sort_by(|a, b| a.extent.0.total_cmp(&b.extent.0));
    zeros.dedup_by(|a, b| {
        let d = (a.point.theta - b.point.theta).abs();
        d.min(TAU - d) < BISECT_WIDTH * 10.0
    });
    if zeros.len() > 1 {
        for k in 0..zeros.len() {
            let a = &zeros[k];
            let b = &zeros[(k + 1) % zeros.len()];
            if normalize_angle(b.extent.0 - a.extent.1) < 2.0 * h {
                return Err(unresolved(a.point.theta));
            }
        }
    }
    Ok(zeros)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Positive,
    Negative,
}

/// Arc of a positive component on which `phi~` increases to `peak` and then
/// decreases, with both ends within a right dressed angle of the peak.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubArc {
    pub sector: Sector,
    pub peak: CirclePoint,
    pub peak_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignComponent {
    pub kind: ComponentKind,
    pub arc: Sector,
    /// Maximizer (positive) or unique minimizer (negative).
    pub extremum: CirclePoint,
    pub extremum_value: f64,
    /// Indices into the zero list, `None` when the component is all of the circle.
    pub start_zero: Option<usize>,
    pub end_zero: Option<usize>,
    #[serde(with = "pair_opt")]
    pub endpoint_zero_orders: (Option<Rational>, Option<Rational>),
    pub sub_arcs: Vec<SubArc>,
}

mod pair_opt {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &(Option<Rational>, Option<Rational>), s: S) -> Result<S::Ok, S::Error> {
        (p.0.map(|r| r.to_string()), p.1.map(|r| r.to_string())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Option<Rational>, Option<Rational>), D::Error> {
        let (a, b): (Option<String>, Option<String>) = Deserialize::deserialize(d)?;
        let conv = |x: Option<String>| {
            x.map(|t| crate::symbols::rational_serde::parse_text(&t).map_err(serde::de::Error::custom))
                .transpose()
        };
        Ok((conv(a)?, conv(b)?))
    }
}

/// Samples of one component, with its end values: unwrapped angles and normalized values.
struct ArcSamples {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

struct RawComponent {
    kind: ComponentKind,
    arc: Sector,
    start_zero: Option<usize>,
    end_zero: Option<usize>,
    samples: ArcSamples,
}

fn raw_components(profile: &CircleProfile, zeros: &[CircleZero]) -> Vec<RawComponent> {
    let n = profile.len();
    let ell = profile.ell;
    let h = profile.step;
    if zeros.is_empty() {
        let positive = profile.max_normalized() > 0.0;
        let key = |i: usize| if positive { profile.normalized(i) } else { -profile.normalized(i) };
        let start = (0..n).min_by(|&a, &b| key(a).total_cmp(&key(b))).unwrap_or(0);
        let thetas: Vec<f64> = (0..=n).map(|k| profile.theta(start) + k as f64 * h).collect();
        let values: Vec<f64> = (0..=n).map(|k| profile.normalized(start + k)).collect();
        return vec![RawComponent {
            kind: if positive { ComponentKind::Positive } else { ComponentKind::Negative },
            arc: Sector::full(profile.theta(start), ell),
            start_zero: None,
            end_zero: None,
            samples: ArcSamples { thetas, values },
        }];
    }
    let mut out = Vec::new();
    let nz = zeros.len();
    for k in 0..nz {
        let a = zeros[k].extent.1;
        let b = zeros[(k + 1) % nz].extent.0;
        let mut width = normalize_angle(b - a);
        if width == 0.0 {
            width = TAU;
        }
        if zeros[k].kind == ZeroKind::Flat && nz == 1 && zeros[k].extent == (0.0, TAU) {
            continue;
        }
        let mut thetas = vec![a];
        let mut values = vec![0.0];
        let i0 = ((a / h).floor() as usize + 1) % n;
        let mut i = i0;
        let mut peak_abs = 0.0;
        let mut kind = ComponentKind::Positive;
        loop {
            let off = normalize_angle(profile.theta(i) - a);
            if off <= 0.0 || off >= width || thetas.len() > n {
                break;
            }
            let u = profile.normalized(i);
            if u.abs() > peak_abs {
                peak_abs = u.abs();
                kind = if u > 0.0 { ComponentKind::Positive } else { ComponentKind::Negative };
            }
            thetas.push(a + off);
            values.push(u);
            i = (i + 1) % n;
        }
        thetas.push(a + width);
        values.push(0.0);
        out.push(RawComponent {
            kind,
            arc: Sector::new(a, width, ell),
            start_zero: Some(k),
            end_zero: Some((k + 1) % nz),
            samples: ArcSamples { thetas, values },
        });
    }
    out
}

/// Middle index of the run of (near) maxima that contains the first maximizer.
fn peak_index(values: &[f64], lo: usize, hi: usize) -> usize {
    let max = values[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = (lo..=hi).find(|&i| values[i] >= max - MONO_EPS).unwrap_or(lo);
    let mut last = first;
    while last < hi && values[last + 1] >= max - MONO_EPS {
        last += 1;
    }
    (first + last) / 2
}

fn split_positive(arc: &ArcSamples, ell: f64) -> Result<Vec<SubArc>> {
    let v = &arc.values;
    let th = &arc.thetas;
    let failure = || Error::PropertyOneFailure {
        start: normalize_angle(th[0]),
        width: th[th.len() - 1] - th[0],
    };
    let mut out = Vec::new();
    let mut stack = vec![(0usize, v.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if out.len() + stack.len() >= MAX_SUB_ARCS {
            return Err(failure());
        }
        let k = peak_index(v, lo, hi);
        let monotone = (lo..k).all(|i| v[i + 1] >= v[i] - MONO_EPS)
            && (k..hi).all(|i| v[i + 1] <= v[i] + MONO_EPS);
        if !monotone {
            let valley = (lo + 1..hi)
                .filter(|&i| v[i] <= v[i - 1] + MONO_EPS && v[i] <= v[i + 1] + MONO_EPS)
                .filter(|&i| i != k)
                .min_by(|&a, &b| v[a].total_cmp(&v[b]));
            match valley {
                Some(m) => {
                    stack.push((m, hi));
                    stack.push((lo, m));
                }
                None => return Err(failure()),
            }
            continue;
        }
        let limit = HALF_PI - ACUTE_SLACK;
        if th[k] - th[lo] <= limit && th[hi] - th[k] <= limit {
            out.push((lo, hi, k));
        } else if lo < k && k < hi {
            stack.push((k, hi));
            stack.push((lo, k));
        } else if hi - lo >= 2 {
            let mid = (lo + hi) / 2;
            stack.push((mid, hi));
            stack.push((lo, mid));
        } else {
            return Err(failure());
        }
    }
    out.sort_by_key(|a| a.0);
    Ok(out
        .into_iter()
        .map(|(lo, hi, k)| SubArc {
            sector: Sector::new(th[lo], th[hi] - th[lo], ell),
            peak: CirclePoint::from_angle(th[k], ell),
            peak_value: v[k],
        })
        .collect())
}

/// Local-minimum plateaus of the arc values; returns the middle index of each.
fn local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut plateaus = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && (values[j + 1] - values[i]).abs() <= MONO_EPS {
            j += 1;
        }
        let left_higher = i > 0 && values[i - 1] > values[i] + MONO_EPS;
        let right_higher = j + 1 < n && values[j + 1] > values[j] + MONO_EPS;
        if left_higher && right_higher {
            plateaus.push((i + j) / 2);
        }
        i = j + 1;
    }
    plateaus
}

fn negative_minimum(arc: &ArcSamples) -> Result<usize> {
    let mins = local_minima(&arc.values);
    match mins.as_slice() {
        [only] => Ok(*only),
        [] => Err(Error::NonUniqueMinimum {
            first: normalize_angle(arc.thetas[0]),
            second: normalize_angle(arc.thetas[arc.thetas.len() / 2]),
        }),
        _ => {
            let mut sorted = mins.clone();
            sorted.sort_by(|&a, &b| arc.values[a].total_cmp(&arc.values[b]));
            Err(Error::NonUniqueMinimum {
                first: normalize_angle(arc.thetas[sorted[0]]),
                second: normalize_angle(arc.thetas[sorted[1]]),
            })
        }
    }
}

struct Analysed {
    component: SignComponent,
    failure: Option<Error>,
}

fn analyse_components(profile: &CircleProfile, zeros: &[CircleZero]) -> Vec<Analysed> {
    let ell = profile.ell;
    raw_components(profile, zeros)
        .into_iter()
        .map(|raw| {
            let values = &raw.samples.values;
            let (ext_idx, sub_arcs, failure) = match raw.kind {
                ComponentKind::Positive => {
                    let k = peak_index(values, 0, values.len() - 1);
                    match split_positive(&raw.samples, ell) {
                        Ok(subs) => (k, subs, None),
                        Err(e) => (k, Vec::new(), Some(e)),
                    }
                }
                ComponentKind::Negative => match negative_minimum(&raw.samples) {
                    Ok(k) => (k, Vec::new(), None),
                    Err(e) => {
                        let k = (0..values.len())
                            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
                            .unwrap_or(0);
                        (k, Vec::new(), Some(e))
                    }
                },
            };
            Analysed {
                component: SignComponent {
                    kind: raw.kind,
                    arc: raw.arc,
                    extremum: CirclePoint::from_angle(raw.samples.thetas[ext_idx], ell),
                    extremum_value: values[ext_idx] * profile.scale,
                    start_zero: raw.start_zero,
                    end_zero: raw.end_zero,
                    endpoint_zero_orders: (None, None),
                    sub_arcs,
                },
                failure,
            }
        })
        .collect()
}

/// Sign components in anticlockwise order, starting after the first zero.
pub fn decompose(profile: &CircleProfile, zeros: &[CircleZero]) -> Result<Vec<SignComponent>> {
    analyse_components(profile, zeros)
        .into_iter()
        .map(|a| match a.failure {
            Some(e) => Err(e),
            None => Ok(a.component),
        })
        .collect()
}

/// Least-squares slope and RMS residual of `y` against `x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (my + slope * (a - mx));
            r * r
        })
        .sum();
    (slope, (rss / n).sqrt())
}

fn one_sided_order<F: Fn(f64) -> f64>(g: &F, x0: f64, side: f64) -> Option<(f64, f64)> {
    let g0 = g(x0);
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for k in 0..=10 {
        let h = 1e-2 * 0.5f64.powi(k);
        let d = (g(x0 + side * h) - g0).abs();
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        lx.push(h.ln());
        ly.push(d.ln());
    }
    Some(loglog_fit(&lx, &ly))
}

/// Vanishing order `p` of `phi~` at a zero.
///
/// Zeros on the `s`-axis (`t = 0`) are measured in the `t` chart, every
/// other zero in the dressed angle.
pub fn estimate_p(sym: &QhSymbol, zero: &CirclePoint) -> Result<Rational> {
    if let SymbolForm::Callback(cb) = &sym.form {
        return cb.p_hint.ok_or(Error::MissingPHint);
    }
    let ell = sym.ell();
    let theta = zero.theta;
    let scale = (0..64)
        .map(|i| sym.tilde(i as f64 * TAU / 64.0).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let undetectable = |reason: String| Error::OrderUndetectable { theta, reason };

    let on_s_axis = zero.a.abs() < 1e-6 || (ell > 1.0 && zero.a.abs() < 1e-3);
    let fits: Vec<Option<(f64, f64)>> = if on_s_axis {
        let b_sign = if zero.b >= 0.0 { 1.0 } else { -1.0 };
        let chart = move |t: f64| {
            let b = b_sign * (1.0 - t.abs().powf(2.0 * ell)).max(0.0).sqrt();
            sym.evaluate(t, b) / scale
        };
        let x0 = if chart(0.0).abs() < 1e-12 {
            0.0
        } else {
            let (lo, hi) = (zero.a - 1e-3, zero.a + 1e-3);
            if (chart(lo) > 0.0) != (chart(hi) > 0.0) {
                let (mut lo, mut hi) = (lo, hi);
                while hi - lo > 1e-15 {
                    let mid = 0.5 * (lo + hi);
                    if (chart(mid) > 0.0) == (chart(lo) > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            } else {
                golden_min(|t| chart(t).abs(), lo, hi, 1e-15).0
            }
        };
        vec![one_sided_order(&chart, x0, -1.0), one_sided_order(&chart, x0, 1.0)]
    } else {
        let chart = |th: f64| sym.tilde(th) / scale;
        vec![one_sided_order(&chart, theta, -1.0), one_sided_order(&chart, theta, 1.0)]
    };

    let mut best: Option<Rational> = None;
    for fit in fits {
        let (slope, residual) = fit.ok_or_else(|| undetectable("profile is flat near the zero".into()))?;
        if residual >= 0.05 {
            return Err(undetectable(format!("log-log residual {residual:.3}")));
        }
        let p = nearest_rational(slope, sym.weights.l1 as i64);
        let gap = (slope - crate::symbols::rational_to_f64(p)).abs();
        if gap > 0.1 || p <= Rational::from_integer(0) {
            return Err(undetectable(format!("slope {slope:.4} is not near a small rational")));
        }
        best = Some(best.map_or(p, |b: Rational| b.max(p)));
    }
    best.ok_or_else(|| undetectable("no fit".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemResult {
    pub item: u8,
    pub pass: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_theta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroReport {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub kind: ZeroKind,
    #[serde(with = "rational_serde::opt")]
    pub p: Option<Rational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H2Verdict {
    pub symbol: SymbolDescription,
    pub pass: bool,
    pub items: Vec<ItemResult>,
    #[serde(with = "rational_serde::opt")]
    pub p_global: Option<Rational>,
    pub zeros: Vec<ZeroReport>,
    pub components: Vec<SignComponent>,
    pub n_samples: usize,
    /// Dressed-angle sampling step the verdict is certified at.
    pub resolution: f64,
    pub h1: bool,
}

impl H2Verdict {
    pub fn item(&self, k: u8) -> &ItemResult {
        &self.items[(k - 1) as usize]
    }

    pub fn failed_items(&self) -> Vec<u8> {
        self.items.iter().filter(|r| !r.pass).map(|r| r.item).collect()
    }
}

/// Finitely many monotone pieces at the sampling resolution.
pub fn check_h1(profile: &CircleProfile) -> bool {
    let n = profile.len();
    let mut changes = 0;
    let mut dir = 0i8;
    for i in 0..n {
        let d = profile.normalized(i + 1) - profile.normalized(i);
        let s = if d > MONO_EPS {
            1
        } else if d < -MONO_EPS {
            -1
        } else {
            0
        };
        if s != 0 && s != dir {
            if dir != 0 {
                changes += 1;
            }
            dir = s;
        }
    }
    changes <= n / 8
}

/// Check the five items of (H2), refining the sampling on unresolved zeros.
pub fn check_h2(sym: &QhSymbol, n_samples: usize) -> Result<H2Verdict> {
    let mut n = n_samples;
    loop {
        let profile = sample_profile(sym, n)?;
        match find_zeros(sym, &profile) {
            Ok(zeros) => return Ok(verdict_from(sym, &profile, zeros)),
            Err(Error::UnresolvedZero { .. }) if n * 4 <= MAX_SAMPLES => n *= 4,
            Err(e) => return Err(e),
        }
    }
}

fn verdict_from(sym: &QhSymbol, profile: &CircleProfile, zeros: Vec<CircleZero>) -> H2Verdict {
    let analysed = analyse_components(profile, &zeros);
    let mut items = Vec::new();

    let max = profile.max_normalized();
    let argmax = (0..profile.len())
        .max_by(|&a, &b| profile.normalized(a).total_cmp(&profile.normalized(b)))
        .map(|i| profile.theta(i));
    items.push(ItemResult {
        item: 1,
        pass: max > -ZERO_TOL,
        detail: format!("max of normalized phi~ = {max:.6}"),
        witness_theta: argmax,
    });

    // A zero is a local maximum when no adjacent component is positive.
    let mut bad_zero = None;
    for (zi, z) in zeros.iter().enumerate() {
        let adjacent_positive = analysed.iter().any(|a| {
            a.component.kind == ComponentKind::Positive
                && (a.component.start_zero == Some(zi) || a.component.end_zero == Some(zi))
        });
        if !adjacent_positive {
            bad_zero = Some(z);
            break;
        }
    }
    items.push(match bad_zero {
        None => ItemResult {
            item: 2,
            pass: true,
            detail: format!("{} zeros, none a local maximum", zeros.len()),
            witness_theta: None,
        },
        Some(z) => ItemResult {
            item: 2,
            pass: false,
            detail: if z.kind == ZeroKind::Flat {
                "flat zero arc without positive neighbour counts as a local maximum".into()
            } else {
                format!("zero at theta = {:.9} is a local maximum", z.point.theta)
            },
            witness_theta: Some(z.point.theta),
        },
    });

    let pos_fail = analysed.iter().find(|a| {
        a.component.kind == ComponentKind::Positive && a.failure.is_some()
    });
    let n_sub: usize = analysed.iter().map(|a| a.component.sub_arcs.len()).sum();
    items.push(match pos_fail {
        None => ItemResult {
            item: 3,
            pass: true,
            detail: format!("positive components split into {n_sub} Property-1 arcs"),
            witness_theta: None,
        },
        Some(a) => ItemResult {
            item: 3,
            pass: false,
            detail: a.failure.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            witness_theta: Some(a.component.arc.start.theta),
        },
    });

    let neg_fail = analysed.iter().find(|a| {
        a.component.kind == ComponentKind::Negative && a.failure.is_some()
    });
    items.push(match neg_fail {
        None => ItemResult {
            item: 4,
            pass: true,
            detail: "every negative component has a unique local minimum".into(),
            witness_theta: None,
        },
        Some(a) => ItemResult {
            item: 4,
            pass: false,
            detail: a.failure.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            witness_theta: match a.failure {
                Some(Error::NonUniqueMinimum { first, .. }) => Some(first),
                _ => None,
            },
        },
    });

    let mut reports = Vec::new();
    let mut p_fail: Option<(f64, String)> = None;
    for z in &zeros {
        let p = if z.kind == ZeroKind::Flat {
            p_fail.get_or_insert((z.point.theta, "flat zero arc has no finite order".into()));
            None
        } else {
            match estimate_p(sym, &z.point) {
                Ok(p) => Some(p),
                Err(e) => {
                    p_fail.get_or_insert((z.point.theta, e.to_string()));
                    None
                }
            }
        };
        reports.push(ZeroReport {
            theta: z.point.theta,
            a: z.point.a,
            b: z.point.b,
            kind: z.kind,
            p,
        });
    }
    let p_global = if p_fail.is_none() {
        reports.iter().filter_map(|r| r.p).max()
    } else {
        None
    };
    items.push(match &p_fail {
        None => ItemResult {
            item: 5,
            pass: true,
            detail: match p_global {
                Some(p) => format!("max zero order p = {p}"),
                None => "no zeros".into(),
            },
            witness_theta: None,
        },
        Some((theta, reason)) => ItemResult {
            item: 5,
            pass: false,
            detail: reason.clone(),
            witness_theta: Some(*theta),
        },
    });

    let mut components: Vec<SignComponent> = analysed.into_iter().map(|a| a.component).collect();
    for c in &mut components {
        c.endpoint_zero_orders = (
            c.start_zero.and_then(|i| reports[i].p),
            c.end_zero.and_then(|i| reports[i].p),
        );
    }

    H2Verdict {
        symbol: sym.describe(),
        pass: items.iter().all(|r| r.pass),
        items,
        p_global,
        zeros: reports,
        components,
        n_samples: profile.len(),
        resolution: profile.step,
        h1: check_h1(profile),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::builtin;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn quasielliptic_profile_is_constant() {
        let prof = sample_profile(&builtin("quasielliptic-l2-m4").unwrap(), 256).unwrap();
        for (_, v) in &prof.samples {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn maire_and_negmax_values() {
        let maire = builtin("maire-l1").unwrap();
        assert_abs_diff_eq!(maire.tilde(0.0), -1.0, epsilon = 1e-15);
        let negmax = builtin("negmax").unwrap();
        assert_abs_diff_eq!(negmax.tilde(PI / 2.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(negmax.tilde(0.0), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn maire_zeros() {
        let sym = builtin("maire-l1").unwrap();
        let prof = sample_profile(&sym, DEFAULT_SAMPLES).unwrap();
        let zeros = find_zeros(&sym, &prof).unwrap();
        let expected = [1.0, 2.0, 3.0, 5.0, 6.0, 7.0].map(|k| k * PI / 4.0);
        assert_eq!(zeros.len(), 6);
        for (z, e) in zeros.iter().zip(expected) {
            assert_abs_diff_eq!(z.point.theta, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn maire_components_alternate() {
        let sym = builtin("maire-l1").unwrap();
        let prof = sample_profile(&sym, DEFAULT_SAMPLES).unwrap();
        let zeros = find_zeros(&sym, &prof).unwrap();
        let comps = decompose(&prof, &zeros).unwrap();
        assert_eq!(comps.len(), 6);
        for w in comps.windows(2) {
            assert_ne!(w[0].kind, w[1].kind);
        }
        let neg = comps.iter().filter(|c| c.kind == ComponentKind::Negative).count();
        assert_eq!(neg, 3);
    }

    #[test]
    fn quasielliptic_single_component() {
        let sym = builtin("quasielliptic-l2-m4").unwrap();
        let prof = sample_profile(&sym, DEFAULT_SAMPLES).unwrap();
        let zeros = find_zeros(&sym, &prof).unwrap();
        assert!(zeros.is_empty());
        let comps = decompose(&prof, &zeros).unwrap();
        assert_eq!(comps.len(), 1);
        assert!(comps[0].arc.is_full());
        assert_eq!(comps[0].sub_arcs.len(), 4);
    }

    #[test]
    fn negmax_has_two_negative_components() {
        let sym = builtin("negmax").unwrap();
        let prof = sample_profile(&sym, DEFAULT_SAMPLES).unwrap();
        let zeros = find_zeros(&sym, &prof).unwrap();
        assert_eq!(zeros.len(), 2);
        assert_abs_diff_eq!(zeros[0].point.theta, PI / 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(zeros[1].point.theta, 3.0 * PI / 2.0, epsilon = 1e-6);
        let comps = decompose(&prof, &zeros).unwrap();
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.kind == ComponentKind::Negative));
    }

    #[test]
    fn p_at_maire_zeros() {
        for name in ["maire-l1", "maire-l2", "maire-l3"] {
            let sym = builtin(name).unwrap();
            let v = check_h2(&sym, DEFAULT_SAMPLES).unwrap();
            for z in &v.zeros {
                assert_eq!(z.p, Some(Rational::from_integer(1)), "{name} at {}", z.theta);
            }
        }
    }

    #[test]
    fn double_zero_order() {
        let sym = QhSymbol::polynomial("t2s", 1, 1, 3, &[(2, 1, 1.0)]).unwrap();
        let p = estimate_p(&sym, &CirclePoint::from_angle(PI / 2.0, 1.0)).unwrap();
        assert_eq!(p, Rational::from_integer(2));
    }

    #[test]
    fn verdicts() {
        let v = check_h2(&builtin("maire-l1").unwrap(), DEFAULT_SAMPLES).unwrap();
        assert!(v.pass, "{:?}", v.items);
        assert_eq!(v.p_global, Some(Rational::from_integer(1)));

        let v = check_h2(&builtin("negmax").unwrap(), DEFAULT_SAMPLES).unwrap();
        assert!(!v.pass);
        assert!(!v.item(2).pass);
        assert!(v.item(1).pass);

        let v = check_h2(&builtin("quasielliptic-l2-m4").unwrap().negate(), DEFAULT_SAMPLES).unwrap();
        assert!(!v.item(1).pass);
    }

    #[test]
    fn two_peaks_are_split_at_the_valley() {
        // phi~ with two maxima inside one positive arc
        let sym = QhSymbol::callback(
            "two-peaks",
            builtin("maire-l1").unwrap().weights,
            std::sync::Arc::new(|th: f64| {
                let x = normalize_angle(th);
                if x < PI {
                    (x * (PI - x)) * (1.2 + (4.0 * x).cos())
                } else {
                    -(x - PI) * (TAU - x)
                }
            }),
            Some(Rational::from_integer(1)),
        );
        let v = check_h2(&sym, DEFAULT_SAMPLES).unwrap();
        assert!(v.item(3).pass, "{:?}", v.items);
        let pos = v.components.iter().find(|c| c.kind == ComponentKind::Positive).unwrap();
        assert!(pos.sub_arcs.len() >= 3);
        for s in &pos.sub_arcs {
            let left = s.sector.offset_of(s.peak.theta);
            assert!(left < PI / 2.0 && s.sector.width - left < PI / 2.0);
        }
    }

    #[test]
    fn two_minima_fail_item_four() {
        let sym = QhSymbol::callback(
            "two-wells",
            builtin("maire-l1").unwrap().weights,
            std::sync::Arc::new(|th: f64| {
                let x = normalize_angle(th);
                if x < PI {
                    x * (PI - x)
                } else {
                    -(x - PI) * (TAU - x) * (1.2 + (4.0 * x).cos())
                }
            }),
            Some(Rational::from_integer(1)),
        );
        let v = check_h2(&sym, DEFAULT_SAMPLES).unwrap();
        assert!(!v.item(4).pass);
    }
}

//! Quasihomogeneous symbols `phi(lambda t, lambda^ell s) = lambda^m phi(t, s)`.
//!
//! Weights and degree are exact rationals; coefficients are `f64`.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distgeo::{dressed_angle, f_ell_inv, rho, DistoPoint};
use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Best rational with denominator at most `max_den` (ties go to the smaller denominator).
pub fn nearest_rational(x: f64, max_den: i64) -> Rational {
    let mut best = Rational::from_integer(x.round() as i64);
    let mut best_err = (x - x.round()).abs();
    for q in 2..=max_den.max(1) {
        let p = (x * q as f64).round() as i64;
        let err = (x - p as f64 / q as f64).abs();
        if err < best_err - 1e-15 {
            best = Rational::new(p, q);
            best_err = err;
        }
    }
    best
}

/// Weights `(1, ell)` with `ell = l2 / l1`, and the degree `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiWeights {
    pub l1: u32,
    pub l2: u32,
    #[serde(with = "rational_serde")]
    pub m: Rational,
}

impl QuasiWeights {
    /// Validated weights: `gcd(l1, l2) = 1`, `ell >= 1`, `m >= 2 ell`.
    pub fn new(l1: u32, l2: u32, m: Rational) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::MalformedInput("l1 and l2 must be positive".into()));
        }
        if l1.gcd(&l2) != 1 {
            return Err(Error::ConstraintViolation(format!(
                "l1 = {l1} and l2 = {l2} are not coprime"
            )));
        }
        let w = Self { l1, l2, m };
        w.check_constraints()?;
        Ok(w)
    }

    fn check_constraints(&self) -> Result<()> {
        if self.l2 < self.l1 {
            return Err(Error::ConstraintViolation(format!(
                "ell = {}/{} < 1",
                self.l2, self.l1
            )));
        }
        if self.m < self.ell_ratio() * 2 {
            return Err(Error::ConstraintViolation(format!(
                "m = {} < 2 ell = {}",
                self.m,
                self.ell_ratio() * 2
            )));
        }
        Ok(())
    }

    pub fn ell_ratio(&self) -> Rational {
        Rational::new(self.l2 as i64, self.l1 as i64)
    }

    pub fn ell(&self) -> f64 {
        self.l2 as f64 / self.l1 as f64
    }

    pub fn degree(&self) -> f64 {
        rational_to_f64(self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub j: u32,
    pub k: u32,
    pub coef: f64,
}

impl Monomial {
    pub fn new(j: u32, k: u32, coef: f64) -> Self {
        Self { j, k, coef }
    }
}

pub type CircleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `phi` given through its restriction to the disto-circle, as a function of
/// the dressed angle.
#[derive(Clone)]
pub struct CallbackForm {
    pub tilde_phi: CircleFn,
    pub p_hint: Option<Rational>,
}

impl fmt::Debug for CallbackForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackForm")
            .field("p_hint", &self.p_hint)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum SymbolForm {
    Polynomial(Vec<Monomial>),
    Callback(CallbackForm),
}

#[derive(Debug, Clone)]
pub struct QhSymbol {
    pub name: String,
    pub weights: QuasiWeights,
    pub form: SymbolForm,
}

/// Polynomial data whose weights have not been checked against `ell >= 1`
/// and `m >= 2 ell`. Input to [`swap_variables`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialData {
    pub l1: u32,
    pub l2: u32,
    #[serde(with = "rational_serde")]
    pub m: Rational,
    pub monomials: Vec<Monomial>,
}

impl PolynomialData {
    fn check_weights(&self) -> Result<()> {
        let rhs = self.m * self.l1 as i64;
        for mono in &self.monomials {
            let lhs = self.l1 as i64 * mono.j as i64 + self.l2 as i64 * mono.k as i64;
            if Rational::from_integer(lhs) != rhs {
                return Err(Error::WeightViolation {
                    j: mono.j,
                    k: mono.k,
                    lhs,
                    rhs: rhs.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Exchange the roles of `t` and `s` and renormalize the weights.
    pub fn swapped(&self) -> PolynomialData {
        // Integer weights (l1, l2) for (t, s); the total weight l1*m is preserved.
        let total = self.m * self.l1 as i64;
        PolynomialData {
            l1: self.l2,
            l2: self.l1,
            m: total / self.l2 as i64,
            monomials: self
                .monomials
                .iter()
                .map(|mono| Monomial::new(mono.k, mono.j, mono.coef))
                .collect(),
        }
    }

    pub fn into_symbol(self, name: impl Into<String>) -> Result<QhSymbol> {
        if self.monomials.is_empty() {
            return Err(Error::MalformedInput("empty monomial list".into()));
        }
        if self.monomials.iter().any(|m| !m.coef.is_finite()) {
            return Err(Error::MalformedInput("non-finite coefficient".into()));
        }
        self.check_weights()?;
        let weights = QuasiWeights::new(self.l1, self.l2, self.m)?;
        Ok(QhSymbol {
            name: name.into(),
            weights,
            form: SymbolForm::Polynomial(self.monomials),
        })
    }
}

/// Swap `t` and `s`. Fails with [`Error::SwapImpossible`] when the swapped
/// weights violate `ell >= 1` or `m >= 2 ell`.
pub fn swap_variables(data: &PolynomialData, name: &str) -> Result<QhSymbol> {
    let swapped = data.swapped();
    swapped.check_weights()?;
    match swapped.into_symbol(name) {
        Err(Error::ConstraintViolation(_)) => Err(Error::SwapImpossible),
        other => other,
    }
}

/// Accept the data as given if valid, otherwise try the swapped orientation.
pub fn normalize_orientation(data: &PolynomialData, name: &str) -> Result<QhSymbol> {
    data.check_weights()?;
    match data.clone().into_symbol(name) {
        Ok(sym) => Ok(sym),
        Err(Error::ConstraintViolation(_)) => swap_variables(data, name),
        Err(e) => Err(e),
    }
}

impl QhSymbol {
    pub fn polynomial(name: &str, l1: u32, l2: u32, m: i64, monomials: &[(u32, u32, f64)]) -> Result<Self> {
        PolynomialData {
            l1,
            l2,
            m: Rational::new(m, 1),
            monomials: monomials.iter().map(|&(j, k, c)| Monomial::new(j, k, c)).collect(),
        }
        .into_symbol(name)
    }

    pub fn callback(
        name: &str,
        weights: QuasiWeights,
        tilde_phi: CircleFn,
        p_hint: Option<Rational>,
    ) -> Self {
        Self {
            name: name.into(),
            weights,
            form: SymbolForm::Callback(CallbackForm { tilde_phi, p_hint }),
        }
    }

    pub fn ell(&self) -> f64 {
        self.weights.ell()
    }

    pub fn degree(&self) -> f64 {
        self.weights.degree()
    }

    pub fn monomials(&self) -> Option<&[Monomial]> {
        match &self.form {
            SymbolForm::Polynomial(m) => Some(m),
            SymbolForm::Callback(_) => None,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.form, SymbolForm::Polynomial(_))
    }

    pub fn evaluate(&self, t: f64, s: f64) -> f64 {
        match &self.form {
            SymbolForm::Polynomial(monos) => monos
                .iter()
                .map(|mono| mono.coef * t.powi(mono.j as i32) * s.powi(mono.k as i32))
                .sum(),
            SymbolForm::Callback(cb) => {
                let p = DistoPoint::new(t, s);
                match dressed_angle(p, self.ell()) {
                    Ok(theta) => rho(p, self.ell()).powf(self.degree()) * (cb.tilde_phi)(theta),
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn eval_at(&self, p: DistoPoint) -> f64 {
        self.evaluate(p.t, p.s)
    }

    /// `grad phi` at a point (analytic for polynomials, central differences otherwise).
    pub fn gradient(&self, t: f64, s: f64) -> (f64, f64) {
        match &self.form {
            SymbolForm::Polynomial(monos) => {
                let mut gt = 0.0;
                let mut gs = 0.0;
                for mono in monos {
                    if mono.j > 0 {
                        gt += mono.coef
                            * mono.j as f64
                            * t.powi(mono.j as i32 - 1)
                            * s.powi(mono.k as i32);
                    }
                    if mono.k > 0 {
                        gs += mono.coef
                            * mono.k as f64
                            * t.powi(mono.j as i32)
                            * s.powi(mono.k as i32 - 1);
                    }
                }
                (gt, gs)
            }
            SymbolForm::Callback(_) => {
                let h = 1e-6;
                (
                    (self.evaluate(t + h, s) - self.evaluate(t - h, s)) / (2.0 * h),
                    (self.evaluate(t, s + h) - self.evaluate(t, s - h)) / (2.0 * h),
                )
            }
        }
    }

    /// Restriction to the disto-circle, as a function of the dressed angle.
    pub fn tilde(&self, theta: f64) -> f64 {
        match &self.form {
            SymbolForm::Polynomial(_) => {
                let (sin, cos) = theta.sin_cos();
                self.evaluate(f_ell_inv(cos, self.ell()), sin)
            }
            SymbolForm::Callback(cb) => (cb.tilde_phi)(theta),
        }
    }

    pub fn negate(&self) -> QhSymbol {
        let form = match &self.form {
            SymbolForm::Polynomial(monos) => SymbolForm::Polynomial(
                monos.iter().map(|m| Monomial::new(m.j, m.k, -m.coef)).collect(),
            ),
            SymbolForm::Callback(cb) => {
                let inner = cb.tilde_phi.clone();
                SymbolForm::Callback(CallbackForm {
                    tilde_phi: Arc::new(move |theta| -inner(theta)),
                    p_hint: cb.p_hint,
                })
            }
        };
        QhSymbol {
            name: format!("neg({})", self.name),
            weights: self.weights.clone(),
            form,
        }
    }

    pub fn data(&self) -> Option<PolynomialData> {
        self.monomials().map(|monos| PolynomialData {
            l1: self.weights.l1,
            l2: self.weights.l2,
            m: self.weights.m,
            monomials: monos.to_vec(),
        })
    }

    /// Swap `t` and `s` of a polynomial symbol.
    pub fn swap_variables(&self) -> Result<QhSymbol> {
        let data = self
            .data()
            .ok_or_else(|| Error::Precondition("swap_variables needs a polynomial symbol".into()))?;
        swap_variables(&data, &format!("swap({})", self.name))
    }

    /// Serializable description of the symbol.
    pub fn describe(&self) -> SymbolDescription {
        SymbolDescription {
            name: self.name.clone(),
            l1: self.weights.l1,
            l2: self.weights.l2,
            m: self.weights.m.to_string(),
            ell: self.ell(),
            monomials: self
                .monomials()
                .map(|ms| ms.iter().map(|m| (m.j, m.k, m.coef)).collect()),
            p_hint: match &self.form {
                SymbolForm::Callback(cb) => cb.p_hint.map(|p| p.to_string()),
                SymbolForm::Polynomial(_) => None,
            },
        }
    }

    /// SHA-256 of the canonical JSON description.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(&self.describe()).expect("description serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolDescription {
    pub name: String,
    pub l1: u32,
    pub l2: u32,
    pub m: String,
    pub ell: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monomials: Option<Vec<(u32, u32, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_hint: Option<String>,
}

/// Built-in symbols: `(name, summary)`.
pub const BUILTINS: &[(&str, &str)] = &[
    ("maire-l1", "t (s^2 - t^2), ell = 1, m = 3"),
    ("maire-l2", "t (s^2 - t^4), ell = 2, m = 5"),
    ("maire-l3", "t (s^2 - t^6), ell = 3, m = 7"),
    ("jt-q8", "t^8 - t^4 s^2 - s^4, ell = 2, m = 8 (swap of -t^4 - t^2 s^4 + s^8)"),
    ("quasielliptic-l2-m4", "t^4 + s^2, ell = 2, m = 4"),
    ("negmax", "-t^2, ell = 1, m = 2"),
];

pub fn builtin(name: &str) -> Result<QhSymbol> {
    match name {
        "maire-l1" => QhSymbol::polynomial(name, 1, 1, 3, &[(1, 2, 1.0), (3, 0, -1.0)]),
        "maire-l2" => QhSymbol::polynomial(name, 1, 2, 5, &[(1, 2, 1.0), (5, 0, -1.0)]),
        "maire-l3" => QhSymbol::polynomial(name, 1, 3, 7, &[(1, 2, 1.0), (7, 0, -1.0)]),
        "jt-q8" => {
            // -t^4 - t^2 s^4 + s^8 has weights (1, 1/2); swapping restores ell >= 1.
            let raw = PolynomialData {
                l1: 2,
                l2: 1,
                m: Rational::from_integer(4),
                monomials: vec![
                    Monomial::new(4, 0, -1.0),
                    Monomial::new(2, 4, -1.0),
                    Monomial::new(0, 8, 1.0),
                ],
            };
            swap_variables(&raw, name)
        }
        "quasielliptic-l2-m4" => QhSymbol::polynomial(name, 1, 2, 4, &[(4, 0, 1.0), (0, 2, 1.0)]),
        "negmax" => QhSymbol::polynomial(name, 1, 1, 2, &[(2, 0, -1.0)]),
        other => Err(Error::MalformedInput(format!("unknown builtin {other:?}"))),
    }
}

/// JSON input: `{"builtin": name}` or `{"l1", "l2", "m", "monomials": [[j, k, coef], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Builtin {
        builtin: String,
    },
    Inline {
        l1: u32,
        l2: u32,
        m: DegreeValue,
        monomials: Vec<(u32, u32, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DegreeValue {
    Number(f64),
    Text(String),
}

impl DegreeValue {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            DegreeValue::Number(x) => {
                if !x.is_finite() {
                    return Err(Error::MalformedInput("non-finite degree".into()));
                }
                for q in 1..=1000i64 {
                    let p = x * q as f64;
                    if (p - p.round()).abs() < 1e-9 {
                        return Ok(Rational::new(p.round() as i64, q));
                    }
                }
                Err(Error::MalformedInput(format!("degree {x} is not a small rational")))
            }
            DegreeValue::Text(s) => {
                let parse = |v: &str| {
                    v.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::MalformedInput(format!("bad degree {s:?}")))
                };
                match s.split_once('/') {
                    Some((n, d)) => {
                        let d = parse(d)?;
                        if d == 0 {
                            return Err(Error::MalformedInput("zero denominator".into()));
                        }
                        Ok(Rational::new(parse(n)?, d))
                    }
                    None => Ok(Rational::from_integer(parse(s)?)),
                }
            }
        }
    }
}

impl SymbolSpec {
    pub fn build(&self) -> Result<QhSymbol> {
        match self {
            SymbolSpec::Builtin { builtin: name } => builtin(name),
            SymbolSpec::Inline { l1, l2, m, monomials, name } => PolynomialData {
                l1: *l1,
                l2: *l2,
                m: m.to_rational()?,
                monomials: monomials.iter().map(|&(j, k, c)| Monomial::new(j, k, c)).collect(),
            }
            .into_symbol(name.clone().unwrap_or_else(|| "inline".into())),
        }
    }
}

pub fn parse_symbol(text: &str) -> Result<QhSymbol> {
    let spec: SymbolSpec =
        serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
    spec.build()
}

pub mod rational_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        let parse = |v: &str| v.trim().parse::<i64>().map_err(serde::de::Error::custom);
        match text.split_once('/') {
            Some((n, den)) => Ok(Rational::new(parse(n)?, parse(den)?)),
            None => Ok(Rational::from_integer(parse(&text)?)),
        }
    }

    pub mod opt {
        use super::Rational;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&r.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let text: Option<String> = Option::deserialize(d)?;
            text.map(|t| super::parse_text(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub(crate) fn parse_text(text: &str) -> Result<Rational, String> {
        let parse = |v: &str| v.trim().parse::<i64>().map_err(|e| e.to_string());
        match text.split_once('/') {
            Some((n, den)) => {
                let den = parse(den)?;
                if den == 0 {
                    return Err("zero denominator".into());
                }
                Ok(Rational::new(parse(n)?, den))
            }
            None => Ok(Rational::from_integer(parse(text)?)),
        }
    }
}

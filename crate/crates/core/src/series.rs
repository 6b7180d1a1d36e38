//! Truncated Laurent series in `s = (-q)^(1/2)`, `q`, or `u`, and the change of
//! variables `s = e^{iu/2}` (equivalently `-q = e^{iu}`).
//!
//! Every series carries its truncation order explicitly: coefficients at
//! exponents `>= trunc` are unknown. A series with `trunc == None` is exact
//! (a Laurent polynomial).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{GaussianRational as GR, Rational};
use crate::ratfun::RationalFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    /// `s` with `q = -s^2`.
    S,
    /// The genus variable `u`.
    U,
    /// `q` itself; only used for rational-function expansion and reconstruction.
    Q,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::S => "s",
            Var::U => "u",
            Var::Q => "q",
        })
    }
}

pub(crate) fn check_var(expected: Var, found: Var) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::VariableMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

fn min_trunc(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct HalfSeries {
    var: Var,
    coeffs: BTreeMap<i64, GR>,
    trunc: Option<i64>,
}

impl HalfSeries {
    /// Builds a series, dropping zero coefficients and anything at or beyond
    /// the truncation order.
    pub fn new(var: Var, coeffs: impl IntoIterator<Item = (i64, GR)>, trunc: Option<i64>) -> Self {
        let mut map: BTreeMap<i64, GR> = BTreeMap::new();
        for (e, c) in coeffs {
            if trunc.is_some_and(|t| e >= t) {
                continue;
            }
            *map.entry(e).or_insert_with(GR::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Self {
            var,
            coeffs: map,
            trunc,
        }
    }

    pub fn exact(var: Var, coeffs: impl IntoIterator<Item = (i64, GR)>) -> Self {
        Self::new(var, coeffs, None)
    }

    /// Exact zero.
    pub fn zero(var: Var) -> Self {
        Self::new(var, [], None)
    }

    /// Zero known only below `trunc`.
    pub fn zero_to(var: Var, trunc: i64) -> Self {
        Self::new(var, [], Some(trunc))
    }

    pub fn one(var: Var) -> Self {
        Self::monomial(var, GR::one(), 0)
    }

    pub fn monomial(var: Var, c: GR, e: i64) -> Self {
        Self::exact(var, [(e, c)])
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn trunc(&self) -> Option<i64> {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.is_zero() && self.is_exact()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Lowest exponent that may be nonzero: the first stored exponent, or
    /// the truncation order for a series that is zero to known order.
    /// `None` for the exact zero.
    pub fn valuation(&self) -> Option<i64> {
        self.min_exp().or(self.trunc)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &GR)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, GR> {
        &self.coeffs
    }

    /// Coefficient at `e`, or an error if `e` is beyond the known order.
    pub fn coeff(&self, e: i64) -> Result<GR> {
        self.coeff_known(e).ok_or_else(|| {
            Error::precision(
                format!("coefficient of {}^{e} requested", self.var),
                self.trunc,
            )
        })
    }

    pub fn coeff_known(&self, e: i64) -> Option<GR> {
        if self.trunc.is_some_and(|t| e >= t) {
            None
        } else {
            Some(self.coeffs.get(&e).cloned().unwrap_or_else(GR::zero))
        }
    }

    /// Lowers the truncation order to `min(trunc, order)`.
    pub fn truncate(&self, order: i64) -> Self {
        let t = min_trunc(self.trunc, Some(order));
        Self::new(self.var, self.coeffs.clone(), t)
    }

    /// Forgets the truncation order, treating unknown coefficients as zero.
    /// Only meaningful when the caller knows the series is a polynomial.
    pub fn assume_exact(&self) -> Self {
        Self::new(self.var, self.coeffs.clone(), None)
    }

    /// Multiplies by `var^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self::new(
            self.var,
            self.coeffs.iter().map(|(e, c)| (e + k, c.clone())),
            self.trunc.map(|t| t + k),
        )
    }

    pub fn scale(&self, c: &GR) -> Self {
        if c.is_zero() {
            return Self::zero(self.var);
        }
        Self::new(
            self.var,
            self.coeffs.iter().map(|(e, x)| (*e, x * c)),
            self.trunc,
        )
    }

    pub fn neg(&self) -> Self {
        self.scale(&-GR::one())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_var(self.var, other.var)?;
        let trunc = min_trunc(self.trunc, other.trunc);
        Ok(Self::new(
            self.var,
            self.coeffs
                .iter()
                .chain(other.coeffs.iter())
                .map(|(e, c)| (*e, c.clone())),
            trunc,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_var(self.var, other.var)?;
        if self.is_exact_zero() || other.is_exact_zero() {
            return Ok(Self::zero(self.var));
        }
        let (va, vb) = (
            self.valuation().expect("nonzero"),
            other.valuation().expect("nonzero"),
        );
        let trunc = min_trunc(self.trunc.map(|t| t + vb), other.trunc.map(|t| t + va));
        let mut out: BTreeMap<i64, GR> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = ea + eb;
                if trunc.is_some_and(|t| e >= t) {
                    continue;
                }
                *out.entry(e).or_insert_with(GR::zero) += ca * cb;
            }
        }
        Ok(Self::new(self.var, out, trunc))
    }

    /// Multiplicative inverse, truncated at `order` (or earlier if the
    /// input's precision does not support `order`).
    ///
    /// Exact monomials invert exactly.
    pub fn inv(&self, order: i64) -> Result<Self> {
        let Some(v) = self.min_exp() else {
            return Err(Error::NotInvertible(format!(
                "series in {} is zero to order {:?}",
                self.var, self.trunc
            )));
        };
        let c0 = self.coeffs[&v].clone();
        let c0_inv = c0.inv()?;
        if self.is_exact() && self.coeffs.len() == 1 {
            return Ok(Self::monomial(self.var, c0_inv, -v));
        }
        let natural = self.trunc.map(|t| t - 2 * v);
        let trunc = min_trunc(natural, Some(order)).expect("finite");
        // result = x^{-v} * sum_k b_k x^k for k < trunc + v
        let n = trunc + v;
        let mut b: Vec<GR> = Vec::with_capacity(n.max(0) as usize);
        for k in 0..n.max(0) {
            if k == 0 {
                b.push(c0_inv.clone());
                continue;
            }
            let mut acc = GR::zero();
            for j in 1..=k {
                if let Some(a) = self.coeffs.get(&(v + j)) {
                    acc += a * &b[(k - j) as usize];
                }
            }
            b.push(-(&acc * &c0_inv));
        }
        Ok(Self::new(
            self.var,
            b.into_iter().enumerate().map(|(k, c)| (k as i64 - v, c)),
            Some(trunc),
        ))
    }

    /// Integer power; results are truncated at `order`.
    pub fn pow(&self, n: i64, order: i64) -> Result<Self> {
        let base = if n < 0 {
            // the inverse must be computed with enough room for the power
            let extra = self.valuation().unwrap_or(0).abs() * (n.abs() - 1);
            self.inv(order + extra)?
        } else {
            self.clone()
        };
        let mut acc = Self::one(self.var);
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(if acc.is_exact() && n >= 0 {
            acc
        } else {
            acc.truncate(order)
        })
    }

    /// True when both series agree at every exponent known in both.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.var != other.var {
            return false;
        }
        let t = min_trunc(self.trunc, other.trunc);
        let upto = |e: &i64| t.map_or(true, |t| *e < t);
        let keys: std::collections::BTreeSet<i64> = self
            .coeffs
            .keys()
            .chain(other.coeffs.keys())
            .copied()
            .filter(upto)
            .collect();
        keys.into_iter()
            .all(|e| self.coeff_known(e) == other.coeff_known(e))
    }

    /// Equality of all coefficients below `order`; errors if either series is
    /// not known that far.
    pub fn equal_to_order(&self, other: &Self, order: i64) -> Result<bool> {
        check_var(self.var, other.var)?;
        for s in [self, other] {
            if s.trunc.is_some_and(|t| t < order) {
                return Err(Error::precision(
                    format!("comparison to order {order}"),
                    s.trunc,
                ));
            }
        }
        Ok(self.truncate(order) == other.truncate(order))
    }

    /// Lowest exponent below `order` where the two series differ.
    pub fn first_difference(&self, other: &Self) -> Option<i64> {
        let t = min_trunc(self.trunc, other.trunc);
        self.coeffs
            .keys()
            .chain(other.coeffs.keys())
            .copied()
            .filter(|e| t.map_or(true, |t| *e < t))
            .filter(|e| self.coeff_known(*e) != other.coeff_known(*e))
            .min()
    }

    /// Re-tags the variable without touching coefficients.
    pub fn with_var(&self, var: Var) -> Self {
        Self {
            var,
            ..self.clone()
        }
    }

    /// Views an `s`-series as a series in `q = -s^2`.
    pub fn q_view(&self) -> Result<QView> {
        check_var(Var::S, self.var)?;
        let parity_ok = self.coeffs.keys().all(|e| e % 2 == 0);
        Ok(QView {
            series: self.clone(),
            parity_ok,
        })
    }

    /// Rewrites a `q`-series in `s` via `q^k = (-1)^k s^{2k}`.
    pub fn q_to_s(&self) -> Result<Self> {
        check_var(Var::Q, self.var)?;
        Ok(Self::new(
            Var::S,
            self.coeffs.iter().map(|(e, c)| {
                let sign = if e.rem_euclid(2) == 1 { -c.clone() } else { c.clone() };
                (2 * e, sign)
            }),
            self.trunc.map(|t| 2 * t),
        ))
    }

    /// Rewrites an `s`-series with only even exponents as a `q`-series.
    pub fn s_to_q(&self) -> Result<Self> {
        let view = self.q_view()?;
        if !view.parity_ok {
            return Err(Error::invalid(
                "series has odd powers of s and is not a Laurent series in q",
            ));
        }
        // trunc in s of 2t+1 still only determines q-coefficients below t+1
        let trunc = self.trunc.map(|t| (t + 1).div_euclid(2));
        Ok(Self::new(
            Var::Q,
            self.coeffs.iter().map(|(e, c)| {
                let k = e / 2;
                let sign = if k.rem_euclid(2) == 1 { -c.clone() } else { c.clone() };
                (k, sign)
            }),
            trunc,
        ))
    }
}

impl fmt::Display for HalfSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(e, c)| match e {
                0 => c.to_string(),
                _ => format!("({c})*{}^{e}", self.var),
            })
            .collect();
        if let Some(t) = self.trunc {
            parts.push(format!("O({}^{t})", self.var));
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for HalfSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {self}", self.var)
    }
}

/// An `s`-series together with whether it is a genuine Laurent series in `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QView {
    pub series: HalfSeries,
    pub parity_ok: bool,
}

/// `e^{iku/2} = sum_n (ik/2)^n u^n / n!` for `n < order`.
pub fn exp_i_half(k: i64, order: i64) -> HalfSeries {
    let half_k = Rational::new(k.into(), 2.into());
    let mut term = Rational::one();
    let mut coeffs = Vec::new();
    for n in 0..order.max(0) {
        if n > 0 {
            term = term * &half_k / Rational::from_integer(n.into());
        }
        coeffs.push((n, GR::i_pow(n).scale(&term)));
    }
    HalfSeries::new(Var::U, coeffs, Some(order))
}

/// Substitutes `s = e^{iu/2}` into an exact Laurent polynomial in `s`,
/// returning the `u`-series truncated at `order`.
///
/// Unknown `s`-coefficients would feed every `u`-order, so a truncated input
/// can only support order 0.
pub fn to_u(x: &HalfSeries, order: i64) -> Result<HalfSeries> {
    check_var(Var::S, x.var())?;
    if !x.is_exact() && order > 0 {
        return Err(Error::precision(
            "to_u of a truncated s-series: unknown coefficients contribute at u^0",
            Some(0),
        ));
    }
    let mut acc = HalfSeries::zero_to(Var::U, order);
    for (k, c) in x.iter() {
        acc = acc.add(&exp_i_half(k, order).scale(c))?;
    }
    Ok(acc)
}

/// Laurent expansion of `R(e^{iu/2})` at `u = 0` through `u^{order-1}`.
/// Rational functions in `q` are first rewritten in `s`.
pub fn ratfun_to_u(r: &RationalFunction, order: i64) -> Result<HalfSeries> {
    r.to_u(order)
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    var: Var,
    trunc: Option<i64>,
    coeffs: BTreeMap<String, GR>,
}

impl Serialize for HalfSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // keys sorted numerically would be nicer, but a JSON object with
        // string keys is what the format specifies; BTreeMap<String> sorts
        // lexicographically and stays deterministic
        SeriesRepr {
            var: self.var,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, c)| (e.to_string(), c.clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HalfSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(d)?;
        let mut coeffs = Vec::new();
        for (k, c) in repr.coeffs {
            let e: i64 = k
                .trim()
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("bad exponent {k:?}")))?;
            if repr.trunc.is_some_and(|t| e >= t) && !c.is_zero() {
                return Err(serde::de::Error::custom(format!(
                    "coefficient at exponent {e} lies beyond trunc {:?}",
                    repr.trunc
                )));
            }
            coeffs.push((e, c));
        }
        Ok(HalfSeries::new(repr.var, coeffs, repr.trunc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn g(s: &str) -> GR {
        s.parse().unwrap()
    }

    fn s_poly(terms: &[(i64, i64)]) -> HalfSeries {
        HalfSeries::exact(Var::S, terms.iter().map(|&(e, c)| (e, GR::from_int(c))))
    }

    #[test]
    fn product_of_binomials() {
        let a = s_poly(&[(0, 1), (1, 1)]).truncate(6);
        let b = s_poly(&[(0, 1), (1, -1)]).truncate(6);
        let p = a.mul(&b).unwrap();
        assert_eq!(p, HalfSeries::new(Var::S, [(0, g("1")), (2, g("-1"))], Some(6)));
    }

    #[test]
    fn geometric_inverse() {
        let a = s_poly(&[(0, 1), (1, -1)]);
        let inv = a.inv(8).unwrap();
        assert_eq!(inv, HalfSeries::new(Var::S, (0..8).map(|e| (e, g("1"))), Some(8)));
    }

    #[test]
    fn inverse_with_pole_multiplies_back() {
        // s^2 (1 + s)
        let a = s_poly(&[(2, 1), (3, 1)]);
        let inv = a.inv(6).unwrap();
        assert_eq!(inv.min_exp(), Some(-2));
        assert_eq!(inv.coeff(-1).unwrap(), g("-1"));
        assert_eq!(inv.coeff(0).unwrap(), g("1"));
        let back = a.mul(&inv).unwrap();
        assert!(back.agrees_with(&HalfSeries::one(Var::S)));
        assert_eq!(back.trunc(), Some(8));
    }

    #[test]
    fn truncation_propagates() {
        let a = HalfSeries::new(Var::U, [(0, g("1")), (1, g("2"))], Some(4));
        let b = HalfSeries::new(Var::U, [(-2, g("1"))], Some(3));
        assert_eq!(a.add(&b).unwrap().trunc(), Some(3));
        // a known to u^4, b has valuation -2: product known to u^2;
        // b known to u^3, a has valuation 0: known to u^3
        assert_eq!(a.mul(&b).unwrap().trunc(), Some(2));
        assert!(matches!(
            HalfSeries::zero_to(Var::U, 3).inv(5),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn variable_mismatch_rejected() {
        let a = HalfSeries::one(Var::U);
        let b = HalfSeries::one(Var::S);
        assert!(matches!(a.add(&b), Err(Error::VariableMismatch { .. })));
    }

    #[test]
    fn to_u_of_s() {
        let s = s_poly(&[(1, 1)]);
        let u = to_u(&s, 4).unwrap();
        let expect = HalfSeries::new(
            Var::U,
            [(0, g("1")), (1, g("1/2*i")), (2, g("-1/8")), (3, g("-1/48*i"))],
            Some(4),
        );
        assert_eq!(u, expect);
        let one = s_poly(&[(1, 1)]).mul(&s_poly(&[(-1, 1)])).unwrap();
        assert_eq!(to_u(&one, 5).unwrap(), HalfSeries::one(Var::U).truncate(5));
    }

    #[test]
    fn to_u_requires_exact_input() {
        let x = s_poly(&[(1, 1)]).truncate(3);
        match to_u(&x, 2) {
            Err(Error::InsufficientPrecision { achievable, .. }) => assert_eq!(achievable, Some(0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverse_sine_squared_via_s() {
        // -(s - 1/s)^{-2} = (2 sin(u/2))^{-2} = u^-2 + 1/12 + u^2/240 + ...
        let w = to_u(&s_poly(&[(1, 1), (-1, -1)]), 10).unwrap();
        let f = w.pow(-2, 4).unwrap().neg();
        assert_eq!(f.coeff(-2).unwrap(), g("1"));
        assert_eq!(f.coeff(-1).unwrap(), g("0"));
        assert_eq!(f.coeff(0).unwrap(), g("1/12"));
        assert_eq!(f.coeff(2).unwrap(), g("1/240"));
    }

    #[test]
    fn q_and_s_views() {
        let q = HalfSeries::new(Var::Q, [(1, g("1")), (2, g("-2"))], Some(3));
        let s = q.q_to_s().unwrap();
        assert_eq!(s.coeff(2).unwrap(), g("-1"));
        assert_eq!(s.coeff(4).unwrap(), g("-2"));
        assert!(s.q_view().unwrap().parity_ok);
        assert_eq!(s.s_to_q().unwrap(), q);
        let odd = s_poly(&[(1, 1)]);
        assert!(!odd.q_view().unwrap().parity_ok);
        assert!(odd.s_to_q().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let a = HalfSeries::new(Var::U, [(-2, g("1")), (0, g("1/12"))], Some(2));
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"var":"u","trunc":2,"coeffs":{"-2":"1","0":"1/12"}}"#);
        let back: HalfSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        let bad = r#"{"var":"u","trunc":1,"coeffs":{"3":"1"}}"#;
        assert!(serde_json::from_str::<HalfSeries>(bad).is_err());
    }

    #[test]
    fn exp_series_coefficients() {
        let e = exp_i_half(2, 4);
        // e^{iu} = 1 + iu - u^2/2 - i u^3/6
        assert_eq!(e.coeff(2).unwrap(), GR::from_rational(rat(-1, 2)));
        assert_eq!(e.coeff(3).unwrap(), g("-1/6*i"));
    }
}

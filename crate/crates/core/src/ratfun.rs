//! Rational functions in one variable over `Q[i]`: canonical form, the
//! `x <-> 1/x` symmetry test, Laurent expansion, the substitution
//! `s = e^{iu/2}`, and exact reconstruction from a truncated series.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::numeric::GaussianRational as GR;
use crate::poly::Poly;
use crate::series::{self, check_var, HalfSeries, Var};

/// `num / den` with `gcd(num, den) = 1` and `den` monic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    var: Var,
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(var: Var, num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero(var));
        }
        let g = Poly::gcd(&num, &den);
        let (n, _) = num.div_rem(&g)?;
        let (d, _) = den.div_rem(&g)?;
        let lead = d.leading().expect("nonzero").inv()?;
        Ok(Self {
            var,
            num: n.scale(&lead),
            den: d.scale(&lead),
        })
    }

    pub fn zero(var: Var) -> Self {
        Self {
            var,
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn constant(var: Var, c: GR) -> Self {
        Self::new(var, Poly::constant(c), Poly::one()).expect("unit denominator")
    }

    pub fn polynomial(var: Var, p: Poly) -> Self {
        Self::new(var, p, Poly::one()).expect("unit denominator")
    }

    /// `c * var^k` for any integer `k`.
    pub fn monomial(var: Var, c: GR, k: i64) -> Self {
        if k >= 0 {
            Self::polynomial(var, Poly::monomial(c, k as usize))
        } else {
            Self::new(var, Poly::constant(c), Poly::monomial(GR::one(), (-k) as usize))
                .expect("nonzero denominator")
        }
    }

    /// Builds from an exact Laurent polynomial.
    pub fn from_laurent(x: &HalfSeries) -> Result<Self> {
        if !x.is_exact() {
            return Err(Error::invalid("from_laurent needs an exact series"));
        }
        let low = x.min_exp().unwrap_or(0).min(0);
        let mut num = Poly::zero();
        for (e, c) in x.iter() {
            num = num.add(&Poly::monomial(c.clone(), (e - low) as usize));
        }
        Self::new(x.var(), num, Poly::monomial(GR::one(), (-low) as usize))
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_var(self.var, other.var)?;
        Self::new(
            self.var,
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_var(self.var, other.var)?;
        Self::new(self.var, self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn scale(&self, c: &GR) -> Self {
        Self::new(self.var, self.num.scale(c), self.den.clone()).expect("nonzero denominator")
    }

    pub fn inv(&self) -> Result<Self> {
        Self::new(self.var, self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let k = n.unsigned_abs() as u32;
        Self::new(self.var, base.num.pow(k), base.den.pow(k))
    }

    /// `R(1/x)`.
    pub fn invert_variable(&self) -> Self {
        let dn = self.num.degree().unwrap_or(0);
        let dd = self.den.degree().unwrap_or(0);
        // R(1/x) = x^{dd-dn} rev(num) / rev(den)
        let (mut n, mut d) = (self.num.reversed(dn), self.den.reversed(dd));
        if dd >= dn {
            n = n.shift(dd - dn);
        } else {
            d = d.shift(dn - dd);
        }
        Self::new(self.var, n, d).expect("nonzero denominator")
    }

    /// Rewrites a function of `q` as a function of `s` through `q = -s^2`.
    pub fn q_to_s(&self) -> Result<Self> {
        check_var(Var::Q, self.var)?;
        let m1 = -GR::one();
        Self::new(
            Var::S,
            self.num.substitute_monomial(&m1, 2),
            self.den.substitute_monomial(&m1, 2),
        )
    }

    /// Laurent expansion at 0, known through `var^{order-1}`.
    pub fn expand(&self, order: i64) -> Result<HalfSeries> {
        if self.is_zero() {
            return Ok(HalfSeries::zero_to(self.var, order));
        }
        let m = self.den.valuation().expect("nonzero") as i64;
        let (reduced, _) = self
            .den
            .div_rem(&Poly::monomial(GR::one(), m as usize))?;
        let num = poly_series(self.var, &self.num);
        let den = poly_series(self.var, &reduced);
        // R = x^{-m} num/den with den(0) != 0
        let body = num.mul(&den.inv(order + m)?)?;
        Ok(body.shift(-m).truncate(order))
    }

    /// Laurent expansion of `R(e^{iu/2})` at `u = 0` through `u^{order-1}`.
    /// A function of `q` is evaluated at `q = -e^{iu}`.
    pub fn to_u(&self, order: i64) -> Result<HalfSeries> {
        let r = match self.var {
            Var::S => self.clone(),
            Var::Q => self.q_to_s()?,
            Var::U => {
                return Err(Error::VariableMismatch {
                    expected: "s or q".into(),
                    found: "u".into(),
                })
            }
        };
        if r.is_zero() {
            return Ok(HalfSeries::zero_to(Var::U, order));
        }
        // the pole order in u is the multiplicity of s = 1 as a root of den
        let deg = r.den.degree().expect("nonzero") as i64;
        let probe = series::to_u(&poly_series(Var::S, &r.den), deg + 2)?;
        let m = probe.min_exp().ok_or_else(|| {
            Error::invalid("denominator vanishes identically after substitution")
        })?;
        let work = order + 2 * m + 1;
        let n_u = series::to_u(&poly_series(Var::S, &r.num), work)?;
        let d_u = series::to_u(&poly_series(Var::S, &r.den), work)?;
        let out = n_u.mul(&d_u.inv(work)?)?;
        if out.trunc().is_some_and(|t| t < order) {
            return Err(Error::precision(
                "pole structure not resolvable at requested order",
                out.trunc(),
            ));
        }
        Ok(out.truncate(order))
    }
}

fn poly_series(var: Var, p: &Poly) -> HalfSeries {
    HalfSeries::exact(
        var,
        p.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| (k as i64, c.clone())),
    )
}

/// True iff `R(x) = R(1/x)` as rational functions.
pub fn check_q_symmetry(r: &RationalFunction) -> bool {
    let flipped = r.invert_variable();
    // both sides are canonical, but compare by cross-multiplication so the
    // test does not depend on the normal form
    r.num.mul(&flipped.den) == flipped.num.mul(&r.den)
}

/// Outcome of [`reconstruct`].
#[derive(Clone, Debug, PartialEq)]
pub enum Reconstruction {
    Found(RationalFunction),
    NoSolution,
}

/// Finds the unique reduced `N/D` with `deg N <= max_num_deg`,
/// `deg D <= max_den_deg` whose Laurent expansion matches every known
/// coefficient of `x`, by an exact null-space computation on `D x - N = 0`.
pub fn reconstruct(x: &HalfSeries, max_num_deg: usize, max_den_deg: usize) -> Result<Reconstruction> {
    let (a, b) = (max_num_deg as i64, max_den_deg as i64);
    let needed = a + b + 1;
    let v = x.min_exp().unwrap_or(0).min(0);
    let t = match x.trunc() {
        Some(t) => t,
        None => x.max_exp().unwrap_or(0).max(0) + needed + 1,
    };
    if t < needed {
        return Err(Error::precision(
            format!(
                "reconstruction with bounds ({a},{b}) needs {needed} coefficients at exponents >= 0, have {}",
                t.max(0)
            ),
            Some(t),
        ));
    }
    let known = |e: i64| x.coeff_known(e).expect("below trunc");
    let cols = (a + 1 + b + 1) as usize;
    // unknowns: n_0..n_a, d_0..d_b
    let mut m: Matrix = Vec::new();
    for e in v..t {
        let mut row = vec![GR::zero(); cols];
        if (0..=a).contains(&e) {
            row[e as usize] = -GR::one();
        }
        for j in 0..=b {
            if e - j >= v {
                row[(a + 1 + j) as usize] = known(e - j);
            }
        }
        m.push(row);
    }
    let null = linalg::nullspace(&m);
    let mut candidate: Option<RationalFunction> = None;
    for vec in &null {
        let num = Poly::new(vec[..=a as usize].to_vec());
        let den = Poly::new(vec[(a + 1) as usize..].to_vec());
        if den.is_zero() {
            continue;
        }
        let r = RationalFunction::new(x.var(), num, den)?;
        match &candidate {
            None => candidate = Some(r),
            Some(c) if *c == r => {}
            Some(_) => {
                return Err(Error::precision(
                    "series too short to single out one rational function",
                    Some(t),
                ))
            }
        }
    }
    let Some(r) = candidate else {
        return Ok(Reconstruction::NoSolution);
    };
    // the linear system only pins coefficients up to t - val(D); check all
    let expansion = r.expand(t)?;
    if expansion.first_difference(&x.truncate(t)).is_some() {
        return Ok(Reconstruction::NoSolution);
    }
    Ok(Reconstruction::Found(r))
}

/// Doubles both degree bounds from `(1, 1)` until a solution appears or the
/// series is too short to test the next box.
pub fn reconstruct_auto(x: &HalfSeries) -> Result<(Reconstruction, (usize, usize))> {
    let mut bound = 1usize;
    let mut last = None;
    loop {
        match reconstruct(x, bound, bound) {
            Ok(Reconstruction::Found(r)) => return Ok((Reconstruction::Found(r), (bound, bound))),
            Ok(Reconstruction::NoSolution) => last = Some((bound, bound)),
            Err(Error::InsufficientPrecision { .. }) if last.is_some() => {
                return Ok((Reconstruction::NoSolution, last.expect("checked")))
            }
            Err(e) => return Err(e),
        }
        bound *= 2;
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.num.to_string().replace('x', &self.var.to_string());
        let d = self.den.to_string().replace('x', &self.var.to_string());
        write!(f, "({n}) / ({d})")
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct RatfunRepr {
    var: Var,
    num: Vec<GR>,
    den: Vec<GR>,
}

impl Serialize for RationalFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RatfunRepr {
            var: self.var,
            num: self.num.coeffs().to_vec(),
            den: self.den.coeffs().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RatfunRepr::deserialize(d)?;
        if r.var == Var::U {
            return Err(serde::de::Error::custom("rational functions live in s or q"));
        }
        RationalFunction::new(r.var, Poly::new(r.num), Poly::new(r.den))
            .map_err(serde::de::Error::custom)
    }
}

impl RationalFunction {
    /// `q/(1+q)^2`, the genus-0 primitive contribution.
    pub fn genus_zero_primitive() -> Self {
        Self::new(Var::Q, Poly::from_ints(&[0, 1]), Poly::from_ints(&[1, 2, 1]))
            .expect("nonzero denominator")
    }

    pub fn one(var: Var) -> Self {
        Self::constant(var, GR::one())
    }
}

impl Zero for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
}

impl std::ops::Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        Poly::add(&self, &rhs)
    }
}

impl One for Poly {
    fn one() -> Self {
        Poly::one()
    }
}

impl std::ops::Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        Poly::mul(&self, &rhs)
    }
}

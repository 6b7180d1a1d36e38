//! Dense univariate polynomials over `Q[i]`, lowest degree first.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::GaussianRational as GR;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly(Vec<GR>);

impl Poly {
    pub fn new(mut coeffs: Vec<GR>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| GR::from_int(c)).collect())
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn one() -> Self {
        Poly(vec![GR::one()])
    }

    pub fn constant(c: GR) -> Self {
        Self::new(vec![c])
    }

    /// `c * x^k`
    pub fn monomial(c: GR, k: usize) -> Self {
        let mut v = vec![GR::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[GR] {
        &self.0
    }

    pub fn coeff(&self, k: usize) -> GR {
        self.0.get(k).cloned().unwrap_or_else(GR::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&GR> {
        self.0.last()
    }

    /// Lowest index with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.0.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-GR::one()))
    }

    pub fn scale(&self, c: &GR) -> Self {
        Self::new(self.0.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![GR::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Multiplies by `x^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![GR::zero(); k];
        v.extend(self.0.iter().cloned());
        Self::new(v)
    }

    /// Euclidean division: `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = d.leading().expect("nonzero").inv()?;
        let mut r = self.0.clone();
        let mut q = vec![GR::zero(); self.0.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = &r[r.len() - 1] * &lead_inv;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    r[k + j] -= &(&c * dc);
                }
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Ok((Self::new(q), Self::new(r)))
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some(l) => self.scale(&l.inv().expect("nonzero leading coefficient")),
        }
    }

    /// Monic greatest common divisor (zero iff both inputs are zero).
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let (_, r) = x.div_rem(&y).expect("nonzero divisor");
            x = y;
            y = r;
        }
        x.monic()
    }

    pub fn eval(&self, x: &GR) -> GR {
        self.0
            .iter()
            .rev()
            .fold(GR::zero(), |acc, c| &acc * x + c)
    }

    /// `p(c * x^k)`
    pub fn substitute_monomial(&self, c: &GR, k: usize) -> Self {
        let mut out = Self::zero();
        let mut cp = GR::one();
        for (j, a) in self.0.iter().enumerate() {
            if !a.is_zero() {
                out = out.add(&Self::monomial(a * &cp, j * k));
            }
            cp = &cp * c;
        }
        out
    }

    /// Coefficients reversed against degree `n >= deg`: `x^n p(1/x)`.
    pub fn reversed(&self, n: usize) -> Self {
        Self::new((0..=n).map(|k| self.coeff(n - k)).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => c.to_string(),
                _ => format!("({c})*x^{k}"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

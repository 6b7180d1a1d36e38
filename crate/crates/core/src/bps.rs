//! Gopakumar-Vafa multiple-cover transform between connected Gromov-Witten
//! free energies and BPS counts, its closed form in `q`, and the
//! connected/disconnected exponential over a truncated effective-class monoid.
//!
//! Per class, the free energy is
//!
//! ```text
//! F_beta(u) = sum_g sum_{d beta' = beta} n_{g,beta'} / d * (2 sin(d u / 2))^{2g-2}
//! ```
//!
//! and with `s = e^{iu/2}` each summand is
//! `(-1)^{g-1} (s^d - s^{-d})^{2g-2}`, a Laurent polynomial in `q = -s^2`
//! for `g >= 1` and a rational function for `g = 0`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{rational_str, GaussianRational as GR, Rational};
use crate::ratfun::RationalFunction;
use crate::series::{self, HalfSeries, Var};

/// A curve class as an integer vector in a fixed lattice basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveClass(pub Vec<i64>);

impl CurveClass {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        CurveClass(coords.into())
    }

    pub fn zero(rank: usize) -> Self {
        CurveClass(vec![0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn is_effective(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    /// Sum of coordinates; positive on every nonzero effective class.
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        CurveClass(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        CurveClass(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, d: i64) -> Self {
        CurveClass(self.0.iter().map(|a| a * d).collect())
    }

    /// `self / d` when `d` divides every coordinate.
    pub fn divide(&self, d: i64) -> Option<Self> {
        self.0
            .iter()
            .all(|a| a % d == 0)
            .then(|| CurveClass(self.0.iter().map(|a| a / d).collect()))
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `(d, beta / d)` for every `d >= 1` dividing all coordinates.
    pub fn divisors(&self) -> Vec<(i64, CurveClass)> {
        let g = self.0.iter().fold(0i64, |acc, &a| num_integer::gcd(acc, a));
        (1..=g.max(1))
            .filter_map(|d| self.divide(d).map(|c| (d, c)))
            .filter(|(_, c)| !c.is_zero())
            .collect()
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl fmt::Debug for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The linear functional `beta -> d_beta = <c_1(T_X), beta>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreeFn(pub Vec<i64>);

impl DegreeFn {
    pub fn eval(&self, beta: &CurveClass) -> i64 {
        self.0.iter().zip(beta.coords()).map(|(a, b)| a * b).sum()
    }
}

/// Nonzero effective classes `0 <= beta <= upper` componentwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassBox(pub Vec<i64>);

impl ClassBox {
    pub fn contains(&self, beta: &CurveClass) -> bool {
        beta.rank() == self.0.len()
            && beta.is_effective()
            && !beta.is_zero()
            && beta.0.iter().zip(&self.0).all(|(a, b)| a <= b)
    }

    /// All classes in the box, ordered by total degree then lexicographically.
    pub fn classes(&self) -> Vec<CurveClass> {
        let mut out = vec![Vec::new()];
        for &bound in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<i64>| {
                    (0..=bound.max(0)).map(move |c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        let mut classes: Vec<CurveClass> = out
            .into_iter()
            .map(CurveClass)
            .filter(|c| !c.is_zero())
            .collect();
        sort_by_degree(&mut classes);
        classes
    }
}

pub(crate) fn sort_by_degree(classes: &mut [CurveClass]) {
    classes.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| a.cmp(b)));
}

/// BPS counts `n_{g,beta}`, stored as exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct BpsTable {
    pub rank: usize,
    pub degree_fn: DegreeFn,
    pub max_genus: u32,
    pub class_box: ClassBox,
    entries: BTreeMap<(u32, CurveClass), Rational>,
}

impl BpsTable {
    pub fn new(rank: usize, max_genus: u32, class_box: ClassBox) -> Self {
        Self {
            rank,
            degree_fn: DegreeFn(vec![0; rank]),
            max_genus,
            class_box,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_degree_fn(mut self, degree_fn: DegreeFn) -> Self {
        self.degree_fn = degree_fn;
        self
    }

    /// Sets `n_{g,beta}`; zero values are not stored.
    pub fn set(&mut self, g: u32, beta: CurveClass, n: Rational) -> Result<()> {
        if beta.rank() != self.rank {
            return Err(Error::invalid(format!(
                "class {beta} has rank {}, table rank is {}",
                beta.rank(),
                self.rank
            )));
        }
        if !self.class_box.contains(&beta) {
            return Err(Error::invalid(format!(
                "class {beta} is zero, not effective, or outside the box {:?}",
                self.class_box.0
            )));
        }
        if g > self.max_genus {
            return Err(Error::invalid(format!(
                "genus {g} exceeds max_genus {}",
                self.max_genus
            )));
        }
        if n.is_zero() {
            self.entries.remove(&(g, beta));
        } else {
            self.entries.insert((g, beta), n);
        }
        Ok(())
    }

    pub fn get(&self, g: u32, beta: &CurveClass) -> Rational {
        self.entries
            .get(&(g, beta.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Nonzero entries keyed by `(genus, class)`.
    pub fn entries(&self) -> &BTreeMap<(u32, CurveClass), Rational> {
        &self.entries
    }

    fn check_class(&self, beta: &CurveClass) -> Result<()> {
        if self.class_box.contains(beta) {
            Ok(())
        } else {
            Err(Error::MissingData(format!(
                "class {beta} (and possibly its divisors) lies outside the table box {:?}",
                self.class_box.0
            )))
        }
    }

    /// `d_beta`.
    pub fn degree(&self, beta: &CurveClass) -> i64 {
        self.degree_fn.eval(beta)
    }
}

/// `(2 sin(d u / 2))^{2g-2}` truncated at `u^order`, computed through
/// `s = e^{iu/2}` as `(-1)^{g-1} (s^d - s^{-d})^{2g-2}`.
pub fn cover_term(g: u32, d: i64, order: i64) -> Result<HalfSeries> {
    let m = 2 * g as i64 - 2;
    let diff = HalfSeries::exact(Var::S, [(d, GR::one()), (-d, -GR::one())]);
    let w = series::to_u(&diff, order + m.abs() + 3)?;
    let sign = if (g as i64 - 1).rem_euclid(2) == 0 {
        GR::one()
    } else {
        -GR::one()
    };
    Ok(w.pow(m, order)?.scale(&sign).truncate(order))
}

#[derive(Default)]
struct CoverCache {
    terms: HashMap<(u32, i64, i64), HalfSeries>,
}

impl CoverCache {
    fn get(&mut self, g: u32, d: i64, order: i64) -> Result<&HalfSeries> {
        if !self.terms.contains_key(&(g, d, order)) {
            let t = cover_term(g, d, order)?;
            self.terms.insert((g, d, order), t);
        }
        Ok(&self.terms[&(g, d, order)])
    }
}

fn forward_with(
    cache: &mut CoverCache,
    n: &BpsTable,
    beta: &CurveClass,
    u_order: i64,
) -> Result<HalfSeries> {
    n.check_class(beta)?;
    let mut acc = HalfSeries::zero_to(Var::U, u_order);
    for (d, base) in beta.divisors() {
        for g in 0..=n.max_genus {
            let coeff = n.get(g, &base);
            if coeff.is_zero() {
                continue;
            }
            let w = coeff / Rational::from_integer(d.into());
            let term = cache.get(g, d, u_order)?.scale(&GR::from_rational(w));
            acc = acc.add(&term)?;
        }
    }
    Ok(acc)
}

/// `F_beta(u)` through `u^{u_order - 1}`.
pub fn gv_forward(n: &BpsTable, beta: &CurveClass, u_order: i64) -> Result<HalfSeries> {
    forward_with(&mut CoverCache::default(), n, beta, u_order)
}

/// `F_beta` for every class in `classes`, computed in parallel.
pub fn gv_forward_all(
    n: &BpsTable,
    classes: &[CurveClass],
    u_order: i64,
) -> Result<BTreeMap<CurveClass, HalfSeries>> {
    classes
        .par_iter()
        .map_init(CoverCache::default, |cache, beta| {
            forward_with(cache, n, beta, u_order).map(|f| (beta.clone(), f))
        })
        .collect()
}

/// `(-1)^{g-1} ((-q)^d - 2 + (-q)^{-d})^{g-1}`, the closed form of
/// `(2 sin(du/2))^{2g-2}` in `q`.
pub fn cover_term_q(g: u32, d: i64) -> Result<RationalFunction> {
    let sd = if d % 2 == 0 { GR::one() } else { -GR::one() };
    let base = RationalFunction::monomial(Var::Q, sd.clone(), d)
        .add(&RationalFunction::constant(Var::Q, GR::from_int(-2)))?
        .add(&RationalFunction::monomial(Var::Q, sd, -d))?;
    let sign = if (g as i64 - 1).rem_euclid(2) == 0 {
        GR::one()
    } else {
        -GR::one()
    };
    Ok(base.pow(g as i64 - 1)?.scale(&sign))
}

/// `F_beta(q)` as a reduced rational function; no truncation.
pub fn gv_forward_q(n: &BpsTable, beta: &CurveClass) -> Result<RationalFunction> {
    n.check_class(beta)?;
    let mut acc = RationalFunction::zero(Var::Q);
    for (d, base) in beta.divisors() {
        for g in 0..=n.max_genus {
            let coeff = n.get(g, &base);
            if coeff.is_zero() {
                continue;
            }
            let w = GR::from_rational(coeff / Rational::from_integer(d.into()));
            acc = acc.add(&cover_term_q(g, d)?.scale(&w))?;
        }
    }
    Ok(acc)
}

/// Recovers `n_{g,beta}` for `g <= max_genus` from free energies given on a
/// divisor-closed list of classes.
///
/// Classes are processed by increasing degree; multiple-cover contributions
/// of already-solved divisors are subtracted, then genera are peeled off one
/// at a time using `(2 sin(u/2))^{2g-2} = u^{2g-2} (1 + O(u^2))`. Anything
/// left over is reported as an inconsistency.
pub fn gv_invert(
    f: &BTreeMap<CurveClass, HalfSeries>,
    ray: &[CurveClass],
    max_genus: u32,
) -> Result<BpsTable> {
    let Some(first) = ray.first() else {
        return Err(Error::invalid("empty class list"));
    };
    let rank = first.rank();
    let mut classes: Vec<CurveClass> = ray.to_vec();
    sort_by_degree(&mut classes);
    classes.dedup();
    let set: BTreeSet<&CurveClass> = classes.iter().collect();
    let mut upper = vec![0i64; rank];
    for c in &classes {
        if c.rank() != rank || !c.is_effective() || c.is_zero() {
            return Err(Error::invalid(format!("class {c} is not a nonzero effective class of rank {rank}")));
        }
        for (u, x) in upper.iter_mut().zip(c.coords()) {
            *u = (*u).max(*x);
        }
    }
    let mut table = BpsTable::new(rank, max_genus, ClassBox(upper));
    let need = 2 * max_genus as i64 - 1;
    let mut cache = CoverCache::default();
    for beta in &classes {
        let series = f
            .get(beta)
            .ok_or_else(|| Error::MissingData(format!("no free energy for class {beta}")))?;
        series::check_var(Var::U, series.var())?;
        let order = series.trunc().unwrap_or(need).max(need);
        if series.trunc().is_some_and(|t| t < need) {
            return Err(Error::precision(
                format!("class {beta} needs u-order {need} to certify genus {max_genus}"),
                series.trunc(),
            ));
        }
        let mut rest = series.truncate(order);
        for (d, base) in beta.divisors().into_iter().filter(|(d, _)| *d > 1) {
            if !set.contains(&base) {
                return Err(Error::MissingData(format!(
                    "divisor {base} of {beta} is not in the class list"
                )));
            }
            for g in 0..=max_genus {
                let n = table.get(g, &base);
                if n.is_zero() {
                    continue;
                }
                let w = GR::from_rational(n / Rational::from_integer(d.into()));
                rest = rest.sub(&cache.get(g, d, order)?.scale(&w))?;
            }
        }
        for g in 0..=max_genus {
            let e = 2 * g as i64 - 2;
            let c = rest.coeff(e)?;
            let n = c.to_rational().ok_or_else(|| {
                Error::Inconsistent(format!(
                    "class {beta}: coefficient of u^{e} is not real ({c})"
                ))
            })?;
            if !n.is_zero() {
                rest = rest.sub(&cache.get(g, 1, order)?.scale(&GR::from_rational(n.clone())))?;
                table.set(g, beta.clone(), n)?;
            }
        }
        let leftover = rest.iter().next().map(|(e, c)| (e, c.clone()));
        if let Some((e, c)) = leftover {
            return Err(Error::Inconsistent(format!(
                "class {beta}: leftover coefficient {c} at u^{e} is not spanned by genera <= {max_genus}"
            )));
        }
    }
    Ok(table)
}

/// Non-integral entries and, per class, the largest genus with a nonzero
/// count within the truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralityReport {
    pub violations: Vec<Violation>,
    pub top_genus: BTreeMap<String, u32>,
    pub genus_horizon: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub g: u32,
    pub class: CurveClass,
    #[serde(with = "rational_str")]
    pub n: Rational,
}

pub fn integrality_report(n: &BpsTable) -> IntegralityReport {
    let mut violations = Vec::new();
    let mut top: BTreeMap<String, u32> = BTreeMap::new();
    for ((g, beta), value) in n.entries() {
        if !value.is_integer() {
            violations.push(Violation {
                g: *g,
                class: beta.clone(),
                n: value.clone(),
            });
        }
        let e = top.entry(beta.to_string()).or_insert(*g);
        *e = (*e).max(*g);
    }
    IntegralityReport {
        violations,
        top_genus: top,
        genus_horizon: n.max_genus,
    }
}

fn subclasses(beta: &CurveClass) -> Vec<CurveClass> {
    ClassBox(beta.0.clone())
        .classes()
        .into_iter()
        .filter(|c| c != beta)
        .collect()
}

/// Coefficient of `v^beta` in `exp(sum_{beta' != 0} F_{beta'} v^{beta'})`.
///
/// Uses `w(beta) Z_beta = sum_{0 < beta' <= beta} w(beta') F_{beta'} Z_{beta - beta'}`
/// with `w` the coordinate sum, so no factorials of series are needed.
pub fn connected_to_disconnected(
    f: &BTreeMap<CurveClass, HalfSeries>,
    beta: &CurveClass,
) -> Result<HalfSeries> {
    if beta.is_zero() || !beta.is_effective() {
        return Err(Error::invalid(format!("class {beta} must be nonzero and effective")));
    }
    let mut z: BTreeMap<CurveClass, HalfSeries> = BTreeMap::new();
    let mut all = subclasses(beta);
    all.push(beta.clone());
    let var = f.values().next().map_or(Var::U, HalfSeries::var);
    let lookup = |c: &CurveClass| {
        f.get(c)
            .ok_or_else(|| Error::MissingData(format!("no series for subclass {c} of {beta}")))
    };
    for target in &all {
        let mut acc = HalfSeries::zero(var);
        for part in subclasses(target).into_iter().chain([target.clone()]) {
            let rest = target.sub(&part);
            let zr = if rest.is_zero() {
                HalfSeries::one(var)
            } else {
                z[&rest].clone()
            };
            let w = GR::from_int(part.total());
            acc = acc.add(&lookup(&part)?.mul(&zr)?.scale(&w))?;
        }
        let inv_w = GR::from_int(target.total()).inv()?;
        z.insert(target.clone(), acc.scale(&inv_w));
    }
    Ok(z.remove(beta).expect("computed"))
}

/// Inverse of [`connected_to_disconnected`]: recovers every `F_beta'` for
/// `0 < beta' <= beta` from the disconnected series.
pub fn disconnected_to_connected(
    z: &BTreeMap<CurveClass, HalfSeries>,
    beta: &CurveClass,
) -> Result<BTreeMap<CurveClass, HalfSeries>> {
    let mut all = subclasses(beta);
    all.push(beta.clone());
    let lookup = |c: &CurveClass| {
        z.get(c)
            .ok_or_else(|| Error::MissingData(format!("no series for subclass {c} of {beta}")))
    };
    let mut f: BTreeMap<CurveClass, HalfSeries> = BTreeMap::new();
    for target in &all {
        // w(t) Z_t = w(t) F_t + sum_{0 < p < t} w(p) F_p Z_{t-p}
        let mut acc = lookup(target)?.scale(&GR::from_int(target.total()));
        for part in subclasses(target) {
            let term = f[&part]
                .mul(lookup(&target.sub(&part))?)?
                .scale(&GR::from_int(part.total()));
            acc = acc.sub(&term)?;
        }
        let inv_w = GR::from_int(target.total()).inv()?;
        f.insert(target.clone(), acc.scale(&inv_w));
    }
    Ok(f)
}

#[derive(Serialize, Deserialize)]
struct BpsEntryRepr {
    g: u32,
    class: CurveClass,
    #[serde(with = "rational_str")]
    n: Rational,
}

#[derive(Serialize, Deserialize)]
struct BpsRepr {
    rank: usize,
    degree_fn: DegreeFn,
    bps: Vec<BpsEntryRepr>,
    max_genus: u32,
    #[serde(default)]
    class_box: Option<ClassBox>,
}

impl Serialize for BpsTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BpsRepr {
            rank: self.rank,
            degree_fn: self.degree_fn.clone(),
            bps: self
                .entries
                .iter()
                .map(|((g, c), n)| BpsEntryRepr {
                    g: *g,
                    class: c.clone(),
                    n: n.clone(),
                })
                .collect(),
            max_genus: self.max_genus,
            class_box: Some(self.class_box.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BpsTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = BpsRepr::deserialize(d)?;
        if r.degree_fn.0.len() != r.rank {
            return Err(D::Error::custom("degree_fn length must equal rank"));
        }
        // default box: componentwise maximum of the listed classes
        let class_box = match r.class_box {
            Some(b) => b,
            None => {
                let mut upper = vec![0i64; r.rank];
                for e in &r.bps {
                    for (u, x) in upper.iter_mut().zip(e.class.coords()) {
                        *u = (*u).max(*x);
                    }
                }
                ClassBox(upper)
            }
        };
        let mut t = BpsTable::new(r.rank, r.max_genus, class_box).with_degree_fn(r.degree_fn);
        for e in r.bps {
            if !t.get(e.g, &e.class).is_zero() {
                return Err(D::Error::custom(format!(
                    "duplicate entry for g={} class {}",
                    e.g, e.class
                )));
            }
            t.set(e.g, e.class, e.n).map_err(D::Error::custom)?;
        }
        Ok(t)
    }
}

/// True when every entry is an integer of absolute value at most `bound`.
pub fn entries_bounded(n: &BpsTable, bound: i64) -> bool {
    n.entries()
        .values()
        .all(|v| v.is_integer() && v.abs() <= Rational::from_integer(bound.into()))
}

impl BpsTable {
    /// Convenience for integer entries.
    pub fn set_int(&mut self, g: u32, beta: CurveClass, n: i64) -> Result<()> {
        self.set(g, beta, Rational::from_integer(n.into()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

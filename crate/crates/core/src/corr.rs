//! The descendent correspondence map `tau -> overline(tau)`.
//!
//! A monomial `tau_{k_1}(g_1) ... tau_{k_l}(g_l)` is expanded over set
//! partitions `P` of its factors. Each block `S` contributes
//! `sum_{alpha_hat} tau_{alpha_hat}(K_{alpha_S, alpha_hat} * g_S)` where
//! `alpha_S = (k_i + 1)_{i in S}`, `g_S` is the ordered product of the block's
//! classes and `tau_{alpha_hat}` is spread over factors with a diagonal tensor.
//! The matrix `K` is external data; its coefficients are polynomials in
//! `c1, c2, c3` that are evaluated in a graded ring.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cohring::{self, Element, GradedRing, Tensor, WeightedPartition};
use crate::error::{Error, ParseError, Result};
use crate::numeric::GaussianRational as GR;
use crate::ratfun::RationalFunction;
use crate::series::{self, HalfSeries, Var};

/// An ordinary partition, parts nonincreasing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(Vec<u32>);

impl Shape {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::invalid("shapes need at least one positive part"));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Shape(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::from(ParseError::new(format!("bad partition {s:?}"))))
            })
            .collect::<Result<Vec<_>>>()?;
        Shape::new(parts)
    }
}

/// Polynomial in `c1, c2, c3` with `Q[i]` coefficients, keyed by exponents.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ChernPoly(BTreeMap<[u32; 3], GR>);

impl ChernPoly {
    pub fn constant(c: GR) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert([0, 0, 0], c);
        }
        ChernPoly(m)
    }

    pub fn terms(&self) -> &BTreeMap<[u32; 3], GR> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut out: BTreeMap<[u32; 3], GR> = BTreeMap::new();
        for term in crate::expr::parse_terms(src, &["c1", "c2", "c3", "i"])? {
            let mut exps = [0u32; 3];
            let mut c = GR::from_rational(term.coeff.clone());
            for (sym, pow) in &term.powers {
                match sym.as_str() {
                    "i" => c = c * GR::i_pow(*pow as i64),
                    "c1" => exps[0] += pow,
                    "c2" => exps[1] += pow,
                    "c3" => exps[2] += pow,
                    _ => unreachable!("parser only yields known symbols"),
                }
            }
            *out.entry(exps).or_insert_with(GR::zero) += &c;
        }
        out.retain(|_, c| !c.is_zero());
        Ok(ChernPoly(out))
    }
}

impl fmt::Display for ChernPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (e, c) in &self.0 {
            let mut vars = String::new();
            for (k, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => vars.push_str(&format!("*c{}", k + 1)),
                    _ => vars.push_str(&format!("*c{}^{p}", k + 1)),
                }
            }
            for (r, imag) in [(c.re(), ""), (c.im(), "*i")] {
                if r.is_zero() {
                    continue;
                }
                let sign = if r.is_negative() { "-" } else { "+" };
                let mag = crate::numeric::rational_str::to_string(&r.abs());
                if out.is_empty() {
                    if sign == "-" {
                        out.push('-');
                    }
                } else {
                    out.push_str(&format!(" {sign} "));
                }
                out.push_str(&format!("{mag}{imag}{vars}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)
    }
}

/// A `u`-series whose coefficients are Chern polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrSeries {
    pub coeffs: BTreeMap<i64, ChernPoly>,
    pub trunc: Option<i64>,
}

impl CorrSeries {
    pub fn monomial(c: GR, e: i64) -> Self {
        Self {
            coeffs: [(e, ChernPoly::constant(c))].into(),
            trunc: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(ChernPoly::is_zero)
    }
}

#[derive(Serialize, Deserialize)]
struct CorrSeriesRepr {
    #[serde(default)]
    trunc: Option<i64>,
    coeffs: BTreeMap<String, String>,
}

impl Serialize for CorrSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CorrSeriesRepr {
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, p)| !p.is_zero())
                .map(|(e, p)| (e.to_string(), p.to_string()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CorrSeriesRepr::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for (e, p) in r.coeffs {
            let e: i64 = e
                .trim()
                .parse()
                .map_err(|_| D::Error::custom(format!("bad exponent {e:?}")))?;
            if r.trunc.is_some_and(|t| e >= t) {
                return Err(D::Error::custom(format!("coefficient at u^{e} lies beyond trunc")));
            }
            let p = ChernPoly::parse(&p).map_err(D::Error::custom)?;
            if !p.is_zero() {
                coeffs.insert(e, p);
            }
        }
        Ok(CorrSeries {
            coeffs,
            trunc: r.trunc,
        })
    }
}

/// The triangular correspondence matrix, loaded from data.
///
/// A row `alpha` is known when it has an explicit entry or
/// `|alpha| <= complete_through`; absent entries of known rows are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrMatrix {
    rows: BTreeMap<Shape, BTreeMap<Shape, CorrSeries>>,
    complete_through: u32,
}

impl CorrMatrix {
    pub fn new(complete_through: u32) -> Self {
        Self {
            rows: BTreeMap::new(),
            complete_through,
        }
    }

    /// Adds an entry, rejecting anything above the diagonal `|alpha| >= |alpha_hat|`.
    pub fn insert(&mut self, alpha: Shape, alpha_hat: Shape, value: CorrSeries) -> Result<()> {
        if alpha_hat.size() > alpha.size() && !value.is_zero() {
            return Err(Error::invalid(format!(
                "entry ({alpha}|{alpha_hat}) violates triangularity: |alpha_hat| > |alpha|"
            )));
        }
        let row = self.rows.entry(alpha).or_default();
        if !value.is_zero() {
            row.insert(alpha_hat, value);
        }
        Ok(())
    }

    /// Test fixture: `K_{(k+1),(k+1)} = (iu)^{-k}`, every other entry zero,
    /// rows complete through size `max_size`. Not the geometric matrix.
    pub fn stationary(max_size: u32) -> Self {
        let mut m = Self::new(max_size);
        for k in 0..max_size {
            let shape = Shape(vec![k + 1]);
            m.insert(
                shape.clone(),
                shape,
                CorrSeries::monomial(GR::i_pow(-(k as i64)), -(k as i64)),
            )
            .expect("diagonal entries are triangular");
        }
        m
    }

    pub fn row(&self, alpha: &Shape) -> Result<Vec<(&Shape, &CorrSeries)>> {
        match self.rows.get(alpha) {
            Some(r) => Ok(r.iter().collect()),
            None if alpha.size() <= self.complete_through => Ok(Vec::new()),
            None => Err(Error::MissingData(format!(
                "correspondence matrix data incomplete: no row for ({alpha})"
            ))),
        }
    }

    pub fn complete_through(&self) -> u32 {
        self.complete_through
    }
}

#[derive(Serialize, Deserialize)]
struct CorrMatrixRepr {
    #[serde(default)]
    complete_through: u32,
    entries: BTreeMap<String, CorrSeries>,
}

impl Serialize for CorrMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = BTreeMap::new();
        for (a, row) in &self.rows {
            for (b, v) in row {
                entries.insert(format!("{a}|{b}"), v.clone());
            }
        }
        CorrMatrixRepr {
            complete_through: self.complete_through,
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CorrMatrixRepr::deserialize(d)?;
        let mut m = CorrMatrix::new(r.complete_through);
        for (key, v) in r.entries {
            let (a, b) = key
                .split_once('|')
                .ok_or_else(|| D::Error::custom(format!("entry key {key:?} is not alpha|alpha_hat")))?;
            let a: Shape = a.parse().map_err(D::Error::custom)?;
            let b: Shape = b.parse().map_err(D::Error::custom)?;
            m.insert(a, b, v).map_err(D::Error::custom)?;
        }
        Ok(m)
    }
}

/// Values of `c1, c2, c3` in a graded ring.
#[derive(Clone, Debug, PartialEq)]
pub struct ChernParams {
    c: [Element; 3],
}

impl ChernParams {
    pub fn new(c1: Element, c2: Element, c3: Element, ring: &GradedRing) -> Result<Self> {
        let c = [c1, c2, c3];
        for (k, e) in c.iter().enumerate() {
            if e.len() != ring.rank() {
                return Err(Error::invalid(format!("c{} has the wrong length", k + 1)));
            }
            if let Some((j, _)) = e
                .iter()
                .enumerate()
                .find(|(j, x)| !x.is_zero() && (ring.deg(*j) != k as i64 + 1 || ring.is_odd(*j)))
            {
                return Err(Error::invalid(format!(
                    "c{} has a component along {} of degree {}",
                    k + 1,
                    ring.name(j),
                    ring.deg(j)
                )));
            }
        }
        Ok(Self { c })
    }

    pub fn zero(ring: &GradedRing) -> Self {
        Self {
            c: [ring.zero_element(), ring.zero_element(), ring.zero_element()],
        }
    }

    pub fn get(&self, k: usize) -> &Element {
        &self.c[k - 1]
    }

    /// `p(c1, c2, c3) * gamma` in the ring.
    pub fn evaluate(&self, p: &ChernPoly, gamma: &[GR], ring: &GradedRing) -> Element {
        let mut out = ring.zero_element();
        for (exps, coeff) in p.terms() {
            let mut v = gamma.to_vec();
            for (k, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    v = ring.mul(&self.c[k], &v);
                }
            }
            for (o, x) in out.iter_mut().zip(&v) {
                *o += &(x * coeff);
            }
        }
        out
    }
}

/// `tau_level(class)`
#[derive(Clone, Debug, PartialEq)]
pub struct Descendent {
    pub level: u32,
    pub class: Element,
}

/// Product of descendents, with an optional relative boundary condition.
#[derive(Clone, Debug, PartialEq)]
pub struct DescendentMonomial {
    pub factors: Vec<Descendent>,
    pub boundary: Option<WeightedPartition>,
}

impl DescendentMonomial {
    /// Parses `tau2(p)*tau0(H) | 2:p,1:1`; the empty product is `1`.
    pub fn parse(src: &str, ring: &GradedRing) -> Result<Self> {
        let (body, boundary) = match src.split_once('|') {
            Some((b, r)) => (b, Some(WeightedPartition::parse(r.trim(), ring)?)),
            None => (src, None),
        };
        let bad = |msg: String| Error::from(ParseError::new(msg));
        let mut factors = Vec::new();
        let mut rest = body.trim();
        if rest != "1" && !rest.is_empty() {
            loop {
                rest = rest
                    .strip_prefix("tau")
                    .ok_or_else(|| bad(format!("expected tau at {rest:?}")))?;
                let open = rest.find('(').ok_or_else(|| bad(format!("missing '(' in {src:?}")))?;
                let level: u32 = rest[..open]
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad descendent level in {src:?}")))?;
                let mut depth = 0;
                let mut close = None;
                for (i, ch) in rest[open..].char_indices() {
                    match ch {
                        '(' => depth += 1,
                        ')' => {
                            depth -= 1;
                            if depth == 0 {
                                close = Some(open + i);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                let close = close.ok_or_else(|| bad(format!("unbalanced parentheses in {src:?}")))?;
                let class = ring.parse_element(&rest[open + 1..close])?;
                factors.push(Descendent { level, class });
                rest = rest[close + 1..].trim_start();
                if rest.is_empty() {
                    break;
                }
                rest = rest
                    .strip_prefix('*')
                    .ok_or_else(|| bad(format!("expected '*' at {rest:?}")))?
                    .trim_start();
            }
        }
        Ok(Self { factors, boundary })
    }
}

/// A monomial in basis classes, in normal form: factors sorted by
/// `(level, basis index)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BasisMonomial {
    pub factors: Vec<(u32, usize)>,
    pub boundary: Option<WeightedPartition>,
}

impl BasisMonomial {
    pub fn format(&self, ring: &GradedRing) -> String {
        let mut s: String = self
            .factors
            .iter()
            .map(|(k, j)| format!("tau{k}({})", ring.name(*j)))
            .collect::<Vec<_>>()
            .join("*");
        if s.is_empty() {
            s.push('1');
        }
        if let Some(b) = &self.boundary {
            s.push_str(&format!(" | {}", b.format(ring)));
        }
        s
    }
}

/// Sorts factors, returning the Koszul sign, or `None` when a repeated odd
/// factor forces the product to vanish.
fn normalize(factors: &mut [(u32, usize)], ring: &GradedRing) -> Option<i8> {
    let mut sign = 1i8;
    for end in (1..factors.len()).rev() {
        for k in 0..end {
            if factors[k] > factors[k + 1] {
                if ring.is_odd(factors[k].1) && ring.is_odd(factors[k + 1].1) {
                    sign = -sign;
                }
                factors.swap(k, k + 1);
            }
        }
    }
    let repeated_odd = factors
        .windows(2)
        .any(|w| w[0] == w[1] && ring.is_odd(w[0].1));
    (!repeated_odd).then_some(sign)
}

/// Parity of a homogeneous element; `None` for zero.
fn parity(e: &[GR], ring: &GradedRing) -> Result<Option<bool>> {
    let mut seen = None;
    for (j, x) in e.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        match seen {
            None => seen = Some(ring.is_odd(j)),
            Some(p) if p != ring.is_odd(j) => {
                return Err(Error::invalid("descendent classes must have pure parity"))
            }
            _ => {}
        }
    }
    Ok(seen)
}

/// Decomposition of `gamma * Delta` into `l` factors.
pub trait Diagonal {
    fn decompose(&self, gamma: &[GR], l: usize, ring: &GradedRing) -> Result<Tensor>;
}

/// The absolute Kunneth small diagonal.
#[derive(Clone, Copy, Debug, Default)]
pub struct KunnethDiagonal;

impl Diagonal for KunnethDiagonal {
    fn decompose(&self, gamma: &[GR], l: usize, ring: &GradedRing) -> Result<Tensor> {
        cohring::small_diagonal(gamma, l, ring)
    }
}

/// Unnormalized factor lists of `tau_{alpha_hat}(gamma)`.
fn tau_hat_raw(
    alpha_hat: &Shape,
    gamma: &[GR],
    ring: &GradedRing,
    diag: &dyn Diagonal,
) -> Result<Vec<(Vec<(u32, usize)>, GR)>> {
    let t = diag.decompose(gamma, alpha_hat.len(), ring)?;
    Ok(t.into_iter()
        .map(|(idx, c)| {
            let factors = alpha_hat
                .parts()
                .iter()
                .zip(idx)
                .map(|(&a, j)| (a - 1, j))
                .collect();
            (factors, c)
        })
        .collect())
}

/// `tau_{alpha_hat}(gamma) = sum tau_{a_1 - 1}(theta_{j_1}) ... tau_{a_l - 1}(theta_{j_l})`.
pub fn tau_hat_expand(
    alpha_hat: &Shape,
    gamma: &[GR],
    ring: &GradedRing,
) -> Result<BTreeMap<BasisMonomial, GR>> {
    let mut out = BTreeMap::new();
    for (mut factors, c) in tau_hat_raw(alpha_hat, gamma, ring, &KunnethDiagonal)? {
        if let Some(sign) = normalize(&mut factors, ring) {
            let c = if sign < 0 { -c } else { c };
            *out.entry(BasisMonomial {
                factors,
                boundary: None,
            })
            .or_insert_with(GR::zero) += &c;
        }
    }
    out.retain(|_, c: &mut GR| !c.is_zero());
    Ok(out)
}

/// One set-partition term before ring evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlineTerm {
    pub sign: i8,
    /// Per block: `alpha_S` and the ordered product `gamma_S`.
    pub blocks: Vec<(Shape, Element)>,
}

/// The `B_l` set-partition terms of `overline(m)`.
pub fn overline_terms(m: &DescendentMonomial, ring: &GradedRing) -> Result<Vec<OverlineTerm>> {
    if m.factors.is_empty() {
        return Ok(vec![OverlineTerm {
            sign: 1,
            blocks: Vec::new(),
        }]);
    }
    let mut odd = Vec::with_capacity(m.factors.len());
    for f in &m.factors {
        if f.class.len() != ring.rank() {
            return Err(Error::invalid("descendent class length does not match ring rank"));
        }
        odd.push(parity(&f.class, ring)?.unwrap_or(false));
    }
    let partitions = cohring::enumerate_set_partitions(m.factors.len(), &odd)?;
    partitions
        .into_iter()
        .map(|p| {
            let blocks = p
                .blocks
                .iter()
                .map(|block| {
                    let shape = Shape::new(block.iter().map(|&i| m.factors[i].level + 1).collect())?;
                    let mut gamma = m.factors[block[0]].class.clone();
                    for &i in &block[1..] {
                        gamma = ring.mul(&gamma, &m.factors[i].class);
                    }
                    Ok((shape, gamma))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OverlineTerm { sign: p.sign, blocks })
        })
        .collect()
}

pub type SeriesCombination = BTreeMap<BasisMonomial, HalfSeries>;

/// Expansion of one block into factor lists with `u`-series coefficients.
fn block_expansion(
    shape: &Shape,
    gamma: &[GR],
    k: &CorrMatrix,
    c: &ChernParams,
    ring: &GradedRing,
    diag: &dyn Diagonal,
) -> Result<Vec<(Vec<(u32, usize)>, HalfSeries)>> {
    let mut acc: BTreeMap<Vec<(u32, usize)>, (BTreeMap<i64, GR>, Option<i64>)> = BTreeMap::new();
    let mut out_trunc: Option<i64> = None;
    for (alpha_hat, entry) in k.row(shape)? {
        out_trunc = match (out_trunc, entry.trunc) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for (e, poly) in &entry.coeffs {
            let theta = c.evaluate(poly, gamma, ring);
            if theta.iter().all(Zero::is_zero) {
                continue;
            }
            for (factors, w) in tau_hat_raw(alpha_hat, &theta, ring, diag)? {
                let slot = acc.entry(factors).or_default();
                *slot.0.entry(*e).or_insert_with(GR::zero) += &w;
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|(f, (coeffs, _))| (f, HalfSeries::new(Var::U, coeffs, out_trunc)))
        .filter(|(_, s)| !s.is_exact_zero())
        .collect())
}

/// `overline(m)` with a caller-supplied diagonal.
pub fn overline_with(
    m: &DescendentMonomial,
    k: &CorrMatrix,
    c: &ChernParams,
    ring: &GradedRing,
    diag: &dyn Diagonal,
) -> Result<SeriesCombination> {
    let mut out = SeriesCombination::new();
    for term in overline_terms(m, ring)? {
        let mut partial: Vec<(Vec<(u32, usize)>, HalfSeries)> = vec![(Vec::new(), HalfSeries::one(Var::U))];
        for (shape, gamma) in &term.blocks {
            if gamma.iter().all(Zero::is_zero) {
                partial.clear();
                break;
            }
            let block = block_expansion(shape, gamma, k, c, ring, diag)?;
            let mut next = Vec::with_capacity(partial.len() * block.len());
            for (f1, s1) in &partial {
                for (f2, s2) in &block {
                    let mut f = f1.clone();
                    f.extend_from_slice(f2);
                    next.push((f, s1.mul(s2)?));
                }
            }
            partial = next;
        }
        for (mut factors, s) in partial {
            let Some(sign) = normalize(&mut factors, ring) else {
                continue;
            };
            let s = if sign * term.sign < 0 { s.neg() } else { s };
            let key = BasisMonomial {
                factors,
                boundary: m.boundary.clone(),
            };
            let merged = match out.remove(&key) {
                Some(prev) => prev.add(&s)?,
                None => s,
            };
            out.insert(key, merged);
        }
    }
    out.retain(|_, s| !s.is_exact_zero());
    Ok(out)
}

/// `overline(m)` with the absolute Kunneth diagonal.
pub fn overline(
    m: &DescendentMonomial,
    k: &CorrMatrix,
    c: &ChernParams,
    ring: &GradedRing,
) -> Result<SeriesCombination> {
    overline_with(m, k, c, ring, &KunnethDiagonal)
}

/// `(-iu)^{d_beta} (iu)^{-sum k_j}` as `(coefficient, exponent of u)`.
pub fn stationary_prefactor(k_list: &[u32], d_beta: i64) -> (GR, i64) {
    let sum_k: i64 = k_list.iter().map(|&k| k as i64).sum();
    let minus_i_pow = if d_beta.rem_euclid(2) == 0 {
        GR::i_pow(d_beta)
    } else {
        -GR::i_pow(d_beta)
    };
    (minus_i_pow * GR::i_pow(-sum_k), d_beta - sum_k)
}

/// `(-iu)^n` as a one-term series.
fn minus_iu_pow(n: i64) -> HalfSeries {
    let (c, e) = stationary_prefactor(&[], n);
    HalfSeries::monomial(Var::U, c, e)
}

/// Checks `(-q)^{-d_beta/2} Z_P = (-iu)^{d_beta + l(mu) - |mu|} Z_GW` through
/// `u^{u_order - 1}` under `-q = e^{iu}`.
pub fn correspondence_predicate(
    zp: &RationalFunction,
    zgw: &HalfSeries,
    d_beta: i64,
    l_mu_minus_abs_mu: i64,
    u_order: i64,
) -> Result<bool> {
    series::check_var(Var::U, zgw.var())?;
    let zs = match zp.var() {
        Var::Q => zp.q_to_s()?,
        Var::S => zp.clone(),
        Var::U => {
            return Err(Error::VariableMismatch {
                expected: "q".into(),
                found: "u".into(),
            })
        }
    };
    let lhs = zs.mul(&RationalFunction::monomial(Var::S, GR::one(), -d_beta))?;
    let lhs = series::ratfun_to_u(&lhs, u_order)?;
    let rhs = zgw.mul(&minus_iu_pow(d_beta + l_mu_minus_abs_mu))?;
    if rhs.trunc().is_some_and(|t| t < u_order) {
        return Err(Error::precision(
            format!("Z_GW times the prefactor is known only below u^{:?}", rhs.trunc()),
            rhs.trunc(),
        ));
    }
    lhs.equal_to_order(&rhs, u_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bps::{gv_forward, BpsTable, ClassBox, CurveClass};
    use crate::cohring::{bell, enumerate_set_partitions};
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn g(s: &str) -> GR {
        s.parse().unwrap()
    }

    fn curve() -> GradedRing {
        GradedRing::projective_space(1)
    }

    #[test]
    fn parse_monomial() {
        let r = curve();
        let m = DescendentMonomial::parse("tau2(p) * tau0(1/2*p + 1) | 1:p", &r).unwrap();
        assert_eq!(m.factors.len(), 2);
        assert_eq!(m.factors[0].level, 2);
        assert_eq!(m.factors[1].class, vec![GR::one(), g("1/2")]);
        assert_eq!(m.boundary.unwrap().format(&r), "1:p");
        assert!(DescendentMonomial::parse("1", &r).unwrap().factors.is_empty());
        assert!(DescendentMonomial::parse("tau(p)", &r).is_err());
        assert!(DescendentMonomial::parse("tau1(p) tau0(p)", &r).is_err());
    }

    fn elliptic() -> GradedRing {
        let text = r#"{"basis":["1","a","b","pt"],"deg":[0,1,1,2],"parity":["even","odd","odd","even"],
          "pairing":[[0,0,0,1],[0,0,1,0],[0,-1,0,0],[1,0,0,0]],
          "mult":[[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
                  [[0,1,0,0],[0,0,0,0],[0,0,0,1],[0,0,0,0]],
                  [[0,0,1,0],[0,0,0,-1],[0,0,0,0],[0,0,0,0]],
                  [[0,0,0,1],[0,0,0,0],[0,0,0,0],[0,0,0,0]]]}"#;
        serde_json::from_str(text).unwrap()
    }

    fn mono(ring: &GradedRing, f: &[(u32, &str)]) -> DescendentMonomial {
        DescendentMonomial {
            factors: f
                .iter()
                .map(|(k, c)| Descendent {
                    level: *k,
                    class: ring.parse_element(c).unwrap(),
                })
                .collect(),
            boundary: None,
        }
    }

    #[test]
    fn shapes_parse() {
        let s: Shape = "1,3,2".parse().unwrap();
        assert_eq!(s.to_string(), "3,2,1");
        assert!("".parse::<Shape>().is_err());
        assert!("0".parse::<Shape>().is_err());
    }

    #[test]
    fn single_factor_identity() {
        let r = curve();
        let k = CorrMatrix::stationary(3);
        let out = overline(&mono(&r, &[(0, "p")]), &k, &ChernParams::zero(&r), &r).unwrap();
        assert_eq!(out.len(), 1);
        let (m, s) = out.into_iter().next().unwrap();
        assert_eq!(m.factors, vec![(0, 1)]);
        assert_eq!(s, HalfSeries::one(Var::U));
    }

    #[test]
    fn stationary_preset_gives_corollary_prefactor() {
        let r = curve();
        let k = CorrMatrix::stationary(4);
        let out = overline(&mono(&r, &[(1, "p"), (2, "p")]), &k, &ChernParams::zero(&r), &r).unwrap();
        // both single-block terms vanish: p * p = 0 and multi-part rows are zero
        let (c, e) = stationary_prefactor(&[1, 2], 0);
        assert_eq!(out.len(), 1);
        assert_eq!(out.values().next().unwrap(), &HalfSeries::monomial(Var::U, c, e));
    }

    #[test]
    fn two_even_factors_have_two_terms() {
        let r = curve();
        let m = mono(&r, &[(0, "1"), (1, "1")]);
        let terms = overline_terms(&m, &r).unwrap();
        assert_eq!(terms.len(), 2);
        let merged = terms.iter().find(|t| t.blocks.len() == 1).unwrap();
        assert_eq!(merged.blocks[0].0, "2,1".parse().unwrap());
    }

    #[test]
    fn merged_block_uses_diagonal() {
        // K_{(2,1),(1,1)} = 1 turns tau0(1) tau1(1) into tau0 tau0 of the diagonal
        let r = curve();
        let mut k = CorrMatrix::stationary(3);
        k.insert("2,1".parse().unwrap(), "1,1".parse().unwrap(), CorrSeries::monomial(g("1"), 0))
            .unwrap();
        let out = overline(&mono(&r, &[(0, "1"), (1, "1")]), &k, &ChernParams::zero(&r), &r).unwrap();
        let key = BasisMonomial {
            factors: vec![(0, 0), (0, 1)],
            boundary: None,
        };
        assert_eq!(out[&key], HalfSeries::exact(Var::U, [(0, g("2"))]));
        let key = BasisMonomial {
            factors: vec![(0, 0), (1, 0)],
            boundary: None,
        };
        assert_eq!(out[&key], HalfSeries::monomial(Var::U, g("-i"), -1));
    }

    #[test]
    fn triangular_range_entries_are_zero_and_missing_rows_fail() {
        let r = curve();
        let mut k = CorrMatrix::new(1);
        k.insert("1".parse().unwrap(), "1".parse().unwrap(), CorrSeries::monomial(g("1"), 0))
            .unwrap();
        assert!(k
            .insert("1".parse().unwrap(), "2".parse().unwrap(), CorrSeries::monomial(g("1"), 0))
            .is_err());
        let err = overline(&mono(&r, &[(1, "p")]), &k, &ChernParams::zero(&r), &r).unwrap_err();
        assert!(matches!(err, Error::MissingData(_)));
    }

    #[test]
    fn tau_hat_examples() {
        let r = curve();
        let p = r.parse_element("p").unwrap();
        let out = tau_hat_expand(&"3,2".parse().unwrap(), &p, &r).unwrap();
        let key = BasisMonomial {
            factors: vec![(1, 1), (2, 1)],
            boundary: None,
        };
        assert_eq!(out, BTreeMap::from([(key, g("1"))]));
        let one = r.parse_element("1").unwrap();
        let out = tau_hat_expand(&"1,1".parse().unwrap(), &one, &r).unwrap();
        let key = BasisMonomial {
            factors: vec![(0, 0), (0, 1)],
            boundary: None,
        };
        assert_eq!(out, BTreeMap::from([(key, g("2"))]));
        let out = tau_hat_expand(&"4".parse().unwrap(), &one, &r).unwrap();
        assert_eq!(out.keys().next().unwrap().factors, vec![(3, 0)]);
    }

    #[test]
    fn chern_substitution() {
        let r = GradedRing::projective_space(2);
        let c = ChernParams::new(
            r.parse_element("3*H").unwrap(),
            r.parse_element("3*H2").unwrap(),
            r.zero_element(),
            &r,
        )
        .unwrap();
        let p = ChernPoly::parse("c1^2 - c2 + 2i").unwrap();
        let v = c.evaluate(&p, &r.parse_element("1").unwrap(), &r);
        assert_eq!(v, vec![g("2i"), g("0"), g("6")]);
        assert!(ChernParams::new(r.parse_element("H2").unwrap(), r.zero_element(), r.zero_element(), &r).is_err());
    }

    #[test]
    fn odd_antisymmetry() {
        let r = elliptic();
        let mut k = CorrMatrix::stationary(6);
        k.insert("2,1".parse().unwrap(), "1".parse().unwrap(), CorrSeries::monomial(g("1/3"), 1))
            .unwrap();
        k.insert("1,1".parse().unwrap(), "2".parse().unwrap(), CorrSeries::monomial(g("5"), 0))
            .unwrap();
        let c = ChernParams::zero(&r);
        for (a, b) in [(0u32, 1u32), (0, 0), (1, 2)] {
            for (x, y) in [("a", "b"), ("b", "a"), ("a", "a")] {
                let fwd = overline(&mono(&r, &[(a, x), (b, y)]), &k, &c, &r).unwrap();
                let bwd = overline(&mono(&r, &[(b, y), (a, x)]), &k, &c, &r).unwrap();
                let neg: SeriesCombination = bwd.into_iter().map(|(m, s)| (m, s.neg())).collect();
                assert_eq!(fwd, neg, "tau{a}({x}) tau{b}({y})");
            }
        }
    }

    #[test]
    fn bell_counts() {
        let r = curve();
        for l in 1..=6usize {
            let m = mono(&r, &vec![(0u32, "1"); l]);
            let n = overline_terms(&m, &r).unwrap().len();
            assert_eq!(n, bell(l).to_usize().unwrap());
        }
    }

    #[test]
    fn prefactor_examples() {
        assert_eq!(stationary_prefactor(&[], 0), (g("1"), 0));
        assert_eq!(stationary_prefactor(&[1], 0), (g("-i"), -1));
        assert_eq!(stationary_prefactor(&[], 2), (g("-1"), 2));
        assert_eq!(stationary_prefactor(&[], 1), (g("-i"), 1));
    }

    fn primitive_pair(order: i64) -> (RationalFunction, HalfSeries) {
        let mut t = BpsTable::new(1, 0, ClassBox(vec![1]));
        t.set_int(0, CurveClass::new(vec![1]), 1).unwrap();
        let f = gv_forward(&t, &CurveClass::new(vec![1]), order).unwrap();
        (RationalFunction::genus_zero_primitive(), f)
    }

    #[test]
    fn predicate_examples() {
        let (zp, zgw) = primitive_pair(20);
        assert!(correspondence_predicate(&zp, &zgw, 0, 0, 20).unwrap());
        assert!(correspondence_predicate(
            &RationalFunction::zero(Var::Q),
            &HalfSeries::zero(Var::U),
            0,
            0,
            20
        )
        .unwrap());
        let short = HalfSeries::new(Var::U, [(-2, g("1"))], Some(-1));
        assert!(matches!(
            correspondence_predicate(&zp, &short, 0, 0, 20),
            Err(Error::InsufficientPrecision { .. })
        ));
        let mut bumped = zgw.coeffs().clone();
        *bumped.get_mut(&4).unwrap() += &g("1");
        let bumped = HalfSeries::new(Var::U, bumped, zgw.trunc());
        assert!(!correspondence_predicate(&zp, &bumped, 0, 0, 20).unwrap());
    }

    #[test]
    fn predicate_moves_prefactor() {
        // s^{-d} Z_P = (-iu)^d Z_GW  iff  (-iu)^{-d} s^{-d} Z_P = Z_GW
        let (zp, zgw) = primitive_pair(24);
        let d = 2;
        let lhs_u = series::ratfun_to_u(
            &zp.q_to_s().unwrap().mul(&RationalFunction::monomial(Var::S, GR::one(), -d)).unwrap(),
            30,
        )
        .unwrap();
        let zgw2 = lhs_u.mul(&minus_iu_pow(-d)).unwrap().truncate(22);
        assert!(correspondence_predicate(&zp, &zgw2, d, 0, 20).unwrap());
        assert!(!correspondence_predicate(&zp, &zgw, d, 0, 20).unwrap());
    }

    #[test]
    fn corr_matrix_json() {
        let text = r#"{"complete_through":2,"entries":{"1|1":{"coeffs":{"0":"1"}},
            "2|2":{"coeffs":{"-1":"-i"}},"1,1|2":{"trunc":4,"coeffs":{"0":"c1 + 1/2*c2*i"}}}}"#;
        let k: CorrMatrix = serde_json::from_str(text).unwrap();
        let back: CorrMatrix = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(k, back);
        let p = ChernPoly::parse("-3/2*c1^2*c3 + 1/2*i*c2 - i + 4").unwrap();
        assert_eq!(ChernPoly::parse(&p.to_string()).unwrap(), p);
        let bad = r#"{"entries":{"1|2":{"coeffs":{"0":"1"}}}}"#;
        assert!(serde_json::from_str::<CorrMatrix>(bad).is_err());
    }

    proptest! {
        #[test]
        fn set_partition_signs_track_odd_inversions(l in 1usize..6, mask in 0u32..64) {
            let odd: Vec<bool> = (0..l).map(|i| mask >> i & 1 == 1).collect();
            let even = enumerate_set_partitions(l, &vec![false; l]).unwrap();
            let signed = enumerate_set_partitions(l, &odd).unwrap();
            prop_assert_eq!(even.len(), signed.len());
            for (e, s) in even.iter().zip(&signed) {
                prop_assert_eq!(&e.blocks, &s.blocks);
                prop_assert_eq!(e.sign, 1);
            }
        }
    }
}

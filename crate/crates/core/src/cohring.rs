//! Finite graded rings with a pairing, cohomology-weighted partitions and the
//! bookkeeping around them: gluing factors, duals, codimensions, small
//! diagonals and signed set partitions.
//!
//! A weighted partition `mu` stands for the normalized Nakajima-type element
//! `(1 / |Aut mu|) prod_i p_{mu_i}(phi_{w_i})`. Linear maps on weights are
//! extended multiplicatively and re-expressed in that basis, which is what
//! makes `sum_mu z(mu) mu (x) mu^dual` independent of the chosen basis.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::linalg::{self, Matrix};
use crate::numeric::{GaussianRational as GR, Rational};

/// Coefficient vector over the basis of a [`GradedRing`].
pub type Element = Vec<GR>;

#[derive(Clone, Debug, PartialEq)]
pub struct GradedRing {
    names: Vec<String>,
    deg: Vec<i64>,
    odd: Vec<bool>,
    /// `pairing[i][j] = int phi_i phi_j`
    pairing: Matrix,
    /// `mult[i][j][k]` is the coefficient of `phi_k` in `phi_i phi_j`.
    mult: Vec<Vec<Vec<GR>>>,
    /// Column `j` holds `phi_j^dual` in the basis.
    dual: Matrix,
}

impl GradedRing {
    pub fn new(
        names: Vec<String>,
        deg: Vec<i64>,
        odd: Vec<bool>,
        pairing: Matrix,
        mult: Vec<Vec<Vec<GR>>>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::invalid("ring basis is empty"));
        }
        if deg.len() != n || odd.len() != n {
            return Err(Error::invalid("deg and parity must have one entry per basis element"));
        }
        let square = |m: &Matrix| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&pairing) {
            return Err(Error::invalid(format!("pairing must be {n}x{n}")));
        }
        if mult.len() != n || mult.iter().any(|r| !square(r)) {
            return Err(Error::invalid(format!("mult must be {n}x{n}x{n}")));
        }
        for (a, name) in names.iter().enumerate() {
            if names[..a].contains(name) {
                return Err(Error::invalid(format!("duplicate basis name {name:?}")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let swap_sign = if odd[i] && odd[j] { -GR::one() } else { GR::one() };
                for k in 0..n {
                    let c = &mult[i][j][k];
                    if c.is_zero() {
                        continue;
                    }
                    if deg[k] != deg[i] + deg[j] || odd[k] != (odd[i] ^ odd[j]) {
                        return Err(Error::invalid(format!(
                            "{} * {} has a component along {} of the wrong degree or parity",
                            names[i], names[j], names[k]
                        )));
                    }
                    if mult[j][i][k] != c * &swap_sign {
                        return Err(Error::invalid(format!(
                            "{} and {} do not (anti)commute as their parities require",
                            names[i], names[j]
                        )));
                    }
                }
            }
        }
        // columns of P^{-1}: int phi_i phi_j^dual = delta_ij
        let dual = linalg::inverse(&pairing)
            .map_err(|_| Error::Singular("ring pairing is degenerate".into()))?;
        Ok(Self {
            names,
            deg,
            odd,
            pairing,
            mult,
            dual,
        })
    }

    /// Cohomology of a point.
    pub fn point() -> Self {
        Self::projective_space(0)
    }

    /// `H^*(P^n)` with basis `1, H, ..., H^n` (named `1`, `H`, `H2`, ...),
    /// complex grading, and the point class for `n = 1` named `p`.
    pub fn projective_space(n: usize) -> Self {
        let names: Vec<String> = (0..=n)
            .map(|k| match (n, k) {
                (_, 0) => "1".to_string(),
                (1, 1) => "p".to_string(),
                (_, 1) => "H".to_string(),
                _ => format!("H{k}"),
            })
            .collect();
        let m = n + 1;
        let mut pairing = linalg::zeros(m, m);
        let mut mult = vec![linalg::zeros(m, m); m];
        for i in 0..m {
            pairing[i][n - i] = GR::one();
            for j in 0..m - i {
                mult[i][j][i + j] = GR::one();
            }
        }
        Self::new(names, (0..=n as i64).collect(), vec![false; m], pairing, mult)
            .expect("valid projective space ring")
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn deg(&self, i: usize) -> i64 {
        self.deg[i]
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.odd[i]
    }

    pub fn pairing(&self) -> &Matrix {
        &self.pairing
    }

    /// Matrix whose column `j` is `phi_j^dual`.
    pub fn dual_matrix(&self) -> &Matrix {
        &self.dual
    }

    pub fn mult(&self) -> &[Vec<Vec<GR>>] {
        &self.mult
    }

    pub fn basis_element(&self, i: usize) -> Element {
        let mut v = vec![GR::zero(); self.rank()];
        v[i] = GR::one();
        v
    }

    pub fn zero_element(&self) -> Element {
        vec![GR::zero(); self.rank()]
    }

    /// `phi_j^dual` as an element.
    pub fn dual_of(&self, j: usize) -> Element {
        self.dual.iter().map(|row| row[j].clone()).collect()
    }

    pub fn mul(&self, a: &[GR], b: &[GR]) -> Element {
        let n = self.rank();
        let mut out = self.zero_element();
        for i in (0..n).filter(|&i| !a[i].is_zero()) {
            for j in (0..n).filter(|&j| !b[j].is_zero()) {
                let ab = &a[i] * &b[j];
                for k in 0..n {
                    let c = &self.mult[i][j][k];
                    if !c.is_zero() {
                        out[k] += &ab * c;
                    }
                }
            }
        }
        out
    }

    /// `int a b` through the pairing matrix.
    pub fn pair(&self, a: &[GR], b: &[GR]) -> GR {
        let mut acc = GR::zero();
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                acc += &(x * y) * &self.pairing[i][j];
            }
        }
        acc
    }

    /// Parses `"name"`, `"3/2*H + i*p"` and similar sums over basis names.
    /// A basis element literally named `1` is written as a bare number.
    pub fn parse_element(&self, src: &str) -> Result<Element> {
        let symbols: Vec<&str> = self
            .names
            .iter()
            .map(String::as_str)
            .filter(|n| n.parse::<Rational>().is_err())
            .chain(["i"])
            .collect();
        let unit = self.index_of("1");
        let mut out = self.zero_element();
        for term in crate::expr::parse_terms(src, &symbols)? {
            let mut coeff = GR::from_rational(term.coeff.clone());
            let mut slot = None;
            for (sym, pow) in &term.powers {
                if sym == "i" {
                    coeff = coeff * GR::i_pow(*pow as i64);
                } else if *pow == 1 && slot.is_none() {
                    slot = self.index_of(sym);
                } else {
                    return Err(ParseError::new(format!(
                        "term in {src:?} is not linear in the basis"
                    ))
                    .into());
                }
            }
            let k = match (slot, unit) {
                (Some(k), _) | (None, Some(k)) => k,
                (None, None) => {
                    return Err(ParseError::new(format!(
                        "constant term in {src:?} but the ring has no basis element named 1"
                    ))
                    .into())
                }
            };
            out[k] += &coeff;
        }
        Ok(out)
    }

    pub fn format_element(&self, a: &[GR]) -> String {
        let parts: Vec<String> = a
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                if c.is_one() {
                    self.names[k].clone()
                } else {
                    format!("({c})*{}", self.names[k])
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParityRepr {
    Flag(bool),
    Int(u8),
    Name(String),
}

#[derive(Serialize, Deserialize)]
struct RingRepr {
    basis: Vec<String>,
    deg: Vec<i64>,
    #[serde(default, skip_serializing)]
    parity: Option<Vec<serde_json::Value>>,
    pairing: Vec<Vec<GR>>,
    mult: Vec<Vec<Vec<GR>>>,
}

impl Serialize for GradedRing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GradedRing", 5)?;
        st.serialize_field("basis", &self.names)?;
        st.serialize_field("deg", &self.deg)?;
        let parity: Vec<&str> = self
            .odd
            .iter()
            .map(|&o| if o { "odd" } else { "even" })
            .collect();
        st.serialize_field("parity", &parity)?;
        st.serialize_field("pairing", &self.pairing)?;
        st.serialize_field("mult", &self.mult)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for GradedRing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = RingRepr::deserialize(d)?;
        let odd = match r.parity {
            None => vec![false; r.basis.len()],
            Some(list) => list
                .into_iter()
                .map(|v| match serde_json::from_value::<ParityRepr>(v) {
                    Ok(ParityRepr::Flag(b)) => Ok(b),
                    Ok(ParityRepr::Int(0)) => Ok(false),
                    Ok(ParityRepr::Int(1)) => Ok(true),
                    Ok(ParityRepr::Name(s)) if s == "even" => Ok(false),
                    Ok(ParityRepr::Name(s)) if s == "odd" => Ok(true),
                    _ => Err(D::Error::custom("parity entries must be even/odd, 0/1 or booleans")),
                })
                .collect::<std::result::Result<_, _>>()?,
        };
        GradedRing::new(r.basis, r.deg, odd, r.pairing, r.mult).map_err(D::Error::custom)
    }
}

/// Multiset of `(size, weight index)` parts in canonical order: size
/// descending, then weight index ascending.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WeightedPartition {
    parts: Vec<(u32, usize)>,
}

impl WeightedPartition {
    pub fn new(mut parts: Vec<(u32, usize)>) -> Result<Self> {
        if parts.iter().any(|&(s, _)| s == 0) {
            return Err(Error::invalid("weighted partition parts must be positive"));
        }
        parts.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(Self { parts })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parts(&self) -> &[(u32, usize)] {
        &self.parts
    }

    /// `|mu|`
    pub fn size(&self) -> u32 {
        self.parts.iter().map(|p| p.0).sum()
    }

    /// `l(mu)`
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Disjoint union.
    pub fn union(&self, other: &Self) -> Self {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        Self::new(parts).expect("parts stay positive")
    }

    /// Order of the group permuting equal `(size, weight)` parts.
    pub fn aut_order(&self) -> BigInt {
        let mut out = BigInt::one();
        let mut run = 0u32;
        for (k, p) in self.parts.iter().enumerate() {
            run = if k > 0 && self.parts[k - 1] == *p { run + 1 } else { 1 };
            out *= run;
        }
        out
    }

    fn check_ring(&self, ring: &GradedRing) -> Result<()> {
        match self.parts.iter().find(|p| p.1 >= ring.rank()) {
            Some(p) => Err(Error::invalid(format!(
                "weight index {} outside ring of rank {}",
                p.1,
                ring.rank()
            ))),
            None => Ok(()),
        }
    }

    /// `"2:p,1:1"`; the empty partition is `"()"`.
    pub fn format(&self, ring: &GradedRing) -> String {
        if self.is_empty() {
            return "()".into();
        }
        self.parts
            .iter()
            .map(|&(s, w)| format!("{s}:{}", ring.name(w)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(src: &str, ring: &GradedRing) -> Result<Self> {
        let src = src.trim();
        if src.is_empty() || src == "()" {
            return Ok(Self::empty());
        }
        let parts = src
            .split(',')
            .map(|part| {
                let (size, name) = part
                    .split_once(':')
                    .ok_or_else(|| ParseError::new(format!("part {part:?} is not size:weight")))?;
                let size: u32 = size
                    .trim()
                    .parse()
                    .map_err(|_| ParseError::new(format!("bad part size in {part:?}")))?;
                let w = ring
                    .index_of(name.trim())
                    .ok_or_else(|| ParseError::new(format!("unknown weight {:?}", name.trim())))?;
                Ok((size, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts).map_err(|e| ParseError::new(e.to_string()).into())
    }
}

impl fmt::Debug for WeightedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|(s, w)| format!("{s}:#{w}")).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// `z(mu) = prod mu_i * |Aut mu|`.
pub fn gluing_factor(mu: &WeightedPartition) -> BigInt {
    mu.parts
        .iter()
        .fold(mu.aut_order(), |acc, &(s, _)| acc * BigInt::from(s))
}

pub fn gluing_factor_gr(mu: &WeightedPartition) -> GR {
    GR::from_rational(Rational::from_integer(gluing_factor(mu)))
}

/// `theta(mu) = |mu| - l(mu) + sum of weight degrees`.
pub fn codim(mu: &WeightedPartition, ring: &GradedRing) -> i64 {
    mu.size() as i64 - mu.len() as i64 + mu.parts.iter().map(|p| ring.deg(p.1)).sum::<i64>()
}

/// Linear combination of weighted partitions.
pub type PartitionCombination = BTreeMap<WeightedPartition, GR>;

/// Applies `phi_a -> sum_k m[k][a] phi_k` to every weight and re-expands in
/// the normalized partition basis. Weights are treated as commuting.
pub fn expand_weights(mu: &WeightedPartition, m: &Matrix) -> PartitionCombination {
    let mut acc: BTreeMap<Vec<(u32, usize)>, GR> = BTreeMap::new();
    acc.insert(Vec::new(), GR::one());
    for &(size, a) in &mu.parts {
        let mut next: BTreeMap<Vec<(u32, usize)>, GR> = BTreeMap::new();
        for (parts, c) in &acc {
            for (k, row) in m.iter().enumerate() {
                let mk = &row[a];
                if mk.is_zero() {
                    continue;
                }
                let mut p = parts.clone();
                let pos = p
                    .binary_search_by(|x| size.cmp(&x.0).then(x.1.cmp(&k)))
                    .unwrap_or_else(|e| e);
                p.insert(pos, (size, k));
                *next.entry(p).or_insert_with(GR::zero) += &(c * mk);
            }
        }
        acc = next;
    }
    let aut_mu = Rational::from_integer(mu.aut_order());
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(parts, c)| {
            let eta = WeightedPartition { parts };
            let ratio = Rational::from_integer(eta.aut_order()) / &aut_mu;
            let c = c.scale(&ratio);
            (eta, c)
        })
        .collect()
}

/// `mu^dual`: every weight replaced by its dual basis element.
pub fn dual_partition(mu: &WeightedPartition, ring: &GradedRing) -> Result<PartitionCombination> {
    mu.check_ring(ring)?;
    Ok(expand_weights(mu, ring.dual_matrix()))
}

/// Inverse of [`dual_partition`].
pub fn undual_partition(mu: &WeightedPartition, ring: &GradedRing) -> Result<PartitionCombination> {
    mu.check_ring(ring)?;
    Ok(expand_weights(mu, ring.pairing()))
}

/// Tensor in `R^{(x) l}` keyed by basis index tuples.
pub type Tensor = BTreeMap<Vec<usize>, GR>;

/// `x -> sum_i (x phi_i) (x) psi_i` with `int psi_i phi_j = delta_ij`; `psi_i`
/// agrees with `phi_i^dual` whenever the pairing is symmetric.
fn coproduct(ring: &GradedRing, k: usize) -> Vec<(usize, usize, GR)> {
    let n = ring.rank();
    let mut out = Vec::new();
    for i in 0..n {
        for (a, c) in ring.mult[k][i].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for b in 0..n {
                let d = &ring.dual[i][b];
                if !d.is_zero() {
                    out.push((a, b, c * d));
                }
            }
        }
    }
    out
}

fn apply_coproduct(t: &Tensor, slot: usize, ring: &GradedRing) -> Tensor {
    let cops: Vec<_> = (0..ring.rank()).map(|k| coproduct(ring, k)).collect();
    let mut out = Tensor::new();
    for (idx, c) in t {
        for (a, b, w) in &cops[idx[slot]] {
            let mut key = idx.clone();
            key[slot] = *a;
            key.insert(slot + 1, *b);
            *out.entry(key).or_insert_with(GR::zero) += &(c * w);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `gamma * Delta` in `R^{(x) l}`, with `Delta_2 = sum_i phi_i (x) phi_i^dual`,
/// higher diagonals by coassociativity and `gamma` in the first factor.
pub fn small_diagonal(gamma: &[GR], l: usize, ring: &GradedRing) -> Result<Tensor> {
    if l == 0 {
        return Err(Error::invalid("small diagonal needs at least one factor"));
    }
    if gamma.len() != ring.rank() {
        return Err(Error::invalid("element length does not match ring rank"));
    }
    let mut t: Tensor = gamma
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (vec![k], c.clone()))
        .collect();
    for slot in 0..l - 1 {
        t = apply_coproduct(&t, slot, ring);
    }
    Ok(t)
}

/// Applies the coproduct to slot `slot` of an existing tensor.
pub fn comultiply(t: &Tensor, slot: usize, ring: &GradedRing) -> Tensor {
    apply_coproduct(t, slot, ring)
}

/// A set partition of `{0, .., l-1}` with blocks ordered by minimal element
/// and ascending inside each block, plus the sign of reordering the odd
/// indices into that sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetPartitionSigned {
    pub blocks: Vec<Vec<usize>>,
    pub sign: i8,
}

/// Every set partition of `{0, .., l-1}` with its odd-class sign.
pub fn enumerate_set_partitions(l: usize, odd: &[bool]) -> Result<Vec<SetPartitionSigned>> {
    if l == 0 {
        return Err(Error::invalid("set partitions need at least one element"));
    }
    if odd.len() != l {
        return Err(Error::invalid("one parity flag per element"));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; l];
    loop {
        let nblocks = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        let order: Vec<usize> = blocks.iter().flatten().copied().filter(|&i| odd[i]).collect();
        let inversions: usize = (0..order.len())
            .map(|a| (a + 1..order.len()).filter(|&b| order[a] > order[b]).count())
            .sum();
        out.push(SetPartitionSigned {
            blocks,
            sign: if inversions % 2 == 0 { 1 } else { -1 },
        });
        // next restricted growth string
        let mut k = l - 1;
        loop {
            if k == 0 {
                return Ok(out);
            }
            let prefix_max = rgs[..k].iter().max().copied().unwrap_or(0);
            if rgs[k] <= prefix_max {
                rgs[k] += 1;
                for x in rgs.iter_mut().skip(k + 1) {
                    *x = 0;
                }
                break;
            }
            k -= 1;
        }
    }
}

fn integer_partitions(d: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if d == 0 {
        out.push(prefix.clone());
        return;
    }
    for p in (1..=d.min(max)).rev() {
        prefix.push(p);
        integer_partitions(d - p, p, prefix, out);
        prefix.pop();
    }
}

/// Partitions of `d` as nonincreasing part lists.
pub fn partitions(d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    integer_partitions(d, d, &mut Vec::new(), &mut out);
    out
}

fn multisets(len: usize, min: usize, rank: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for w in min..rank {
        prefix.push(w);
        multisets(len, w, rank, prefix, out);
        prefix.pop();
    }
}

/// All weighted partitions of size `d`, optionally restricted to codimension
/// `theta`, in a deterministic order.
pub fn enumerate_weighted_partitions(
    d: u32,
    ring: &GradedRing,
    theta: Option<i64>,
) -> Vec<WeightedPartition> {
    let mut out = Vec::new();
    for shape in partitions(d) {
        // group equal sizes; each group picks a multiset of weights
        let mut groups: Vec<(u32, usize)> = Vec::new();
        for &s in &shape {
            match groups.last_mut() {
                Some((size, count)) if *size == s => *count += 1,
                _ => groups.push((s, 1)),
            }
        }
        let mut acc: Vec<Vec<(u32, usize)>> = vec![Vec::new()];
        for &(size, count) in &groups {
            let mut choices = Vec::new();
            multisets(count, 0, ring.rank(), &mut Vec::new(), &mut choices);
            acc = acc
                .iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |ws| {
                        let mut p = prefix.clone();
                        p.extend(ws.iter().map(|&w| (size, w)));
                        p
                    })
                })
                .collect();
        }
        out.extend(acc.into_iter().map(|parts| WeightedPartition { parts }));
    }
    if let Some(t) = theta {
        out.retain(|mu| codim(mu, ring) == t);
    }
    out
}

/// Bell number `B_l` by the triangle recurrence.
pub fn bell(l: usize) -> BigInt {
    let mut row = vec![BigInt::one()];
    for _ in 0..l {
        let mut next = vec![row.last().cloned().expect("nonempty")];
        for x in &row {
            let v = next.last().expect("nonempty") + x;
            next.push(v);
        }
        row = next;
    }
    row[0].clone()
}

/// `z(mu)` as a machine integer when it fits.
pub fn gluing_factor_u64(mu: &WeightedPartition) -> Option<u64> {
    gluing_factor(mu).to_u64()
}

//! Degeneration-formula convolution of relative theory tables, capped edges,
//! inversion of the convolution and multi-step reduction pipelines.
//!
//! A [`TheoryTable`] stores relative series keyed by a curve class and one
//! weighted partition per relative slot. Gluing contracts the last slot of the
//! left table with the first slot of the right table:
//!
//! ```text
//! Z(beta)[o_L, o_R] = sum_{beta_1 + beta_2 = beta} sum_mu
//!     L(beta_1)[o_L, mu] * w(mu) * R(beta_2)[mu^dual, o_R]
//! ```
//!
//! with `w(mu) = z(mu) u^{2 l(mu)}` on the Gromov-Witten side and
//! `w(mu) = (-1)^{|mu| - l(mu)} z(mu) q^{-|mu|}` on the pairs side.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bps::{sort_by_degree, CurveClass};
use crate::cohring::{
    codim, dual_partition, enumerate_weighted_partitions, gluing_factor_gr, undual_partition,
    GradedRing, WeightedPartition,
};
use crate::error::{Error, ParseError, Result};
use crate::linalg::{self, Matrix};
use crate::numeric::GaussianRational as GR;
use crate::series::{HalfSeries, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Stable pairs; series in `s` with even exponents.
    Pairs,
    /// Gromov-Witten; series in `u`.
    Gw,
}

impl Side {
    pub fn var(self) -> Var {
        match self {
            Side::Pairs => Var::S,
            Side::Gw => Var::U,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Side::Pairs => "pairs",
            Side::Gw => "gw",
        }
    }
}

/// Size of a relative slot as an affine function of the curve class,
/// `sum_i coeffs[i] * beta_i + offset`. Missing coefficients count as zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSize {
    #[serde(default)]
    pub coeffs: Vec<i64>,
    #[serde(default)]
    pub offset: i64,
}

impl SlotSize {
    pub fn constant(d: i64) -> Self {
        Self { coeffs: Vec::new(), offset: d }
    }

    pub fn linear(coeffs: impl Into<Vec<i64>>) -> Self {
        Self { coeffs: coeffs.into(), offset: 0 }
    }

    pub fn eval(&self, beta: &CurveClass) -> i64 {
        self.coeffs
            .iter()
            .zip(beta.coords())
            .map(|(a, b)| a * b)
            .sum::<i64>()
            + self.offset
    }
}

type Key = Vec<WeightedPartition>;
type Slice = BTreeMap<Key, HalfSeries>;

/// Relative partition functions of one theory, basis-expanded in every slot.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryTable {
    side: Side,
    ring: GradedRing,
    rank: usize,
    slots: Vec<SlotSize>,
    entries: BTreeMap<CurveClass, Slice>,
}

impl TheoryTable {
    pub fn new(side: Side, ring: GradedRing, rank: usize, slots: Vec<SlotSize>) -> Self {
        Self { side, ring, rank, slots, entries: BTreeMap::new() }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn ring(&self) -> &GradedRing {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn slots(&self) -> &[SlotSize] {
        &self.slots
    }

    pub fn classes(&self) -> Vec<CurveClass> {
        let mut out: Vec<_> = self.entries.keys().cloned().collect();
        sort_by_degree(&mut out);
        out
    }

    pub fn has_class(&self, beta: &CurveClass) -> bool {
        self.entries.contains_key(beta)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CurveClass, &Key, &HalfSeries)> {
        self.entries
            .iter()
            .flat_map(|(b, slice)| slice.iter().map(move |(k, s)| (b, k, s)))
    }

    pub fn slice(&self, beta: &CurveClass) -> Option<&Slice> {
        self.entries.get(beta)
    }

    /// Slot sizes at `beta`, or `None` if some size is negative.
    pub fn slot_sizes(&self, beta: &CurveClass) -> Option<Vec<u32>> {
        sizes_at(&self.slots, beta)
    }

    /// Every key a complete slice at `beta` must carry.
    pub fn expected_keys(&self, beta: &CurveClass) -> Vec<Key> {
        match self.slot_sizes(beta) {
            Some(sizes) => tuples(&sizes, &self.ring),
            None => Vec::new(),
        }
    }

    fn check_key(&self, beta: &CurveClass, key: &[WeightedPartition]) -> Result<()> {
        if beta.rank() != self.rank {
            return Err(Error::invalid(format!(
                "class {beta} has rank {}, table rank is {}",
                beta.rank(),
                self.rank
            )));
        }
        if key.len() != self.slots.len() {
            return Err(Error::invalid(format!(
                "key has {} partitions, table has {} slots",
                key.len(),
                self.slots.len()
            )));
        }
        for (i, (mu, slot)) in key.iter().zip(&self.slots).enumerate() {
            let want = slot.eval(beta);
            if i64::from(mu.size()) != want {
                return Err(Error::invalid(format!(
                    "slot {i} at class {beta} needs size {want}, got {}",
                    mu.format(&self.ring)
                )));
            }
            if mu.parts().iter().any(|&(_, w)| w >= self.ring.rank()) {
                return Err(Error::invalid("partition weight outside the ring basis"));
            }
        }
        Ok(())
    }

    /// Inserts an entry; pairs tables accept `q` series and store them in `s`.
    pub fn insert(&mut self, beta: CurveClass, key: Key, series: HalfSeries) -> Result<()> {
        self.check_key(&beta, &key)?;
        let series = match (self.side, series.var()) {
            (Side::Pairs, Var::Q) => series.q_to_s()?,
            (Side::Pairs, Var::S) => {
                if series.iter().any(|(e, _)| e % 2 != 0) {
                    return Err(Error::invalid("pairs series must have even s exponents"));
                }
                series
            }
            (Side::Gw, Var::U) => series,
            (side, v) => {
                return Err(Error::VariableMismatch {
                    expected: side.var().to_string(),
                    found: v.to_string(),
                })
            }
        };
        self.entries.entry(beta).or_default().insert(key, series);
        Ok(())
    }

    /// Entry lookup. Absent classes read as `None` (the theory vanishes
    /// there); a present class with a missing key is an error.
    pub fn get(&self, beta: &CurveClass, key: &[WeightedPartition]) -> Result<Option<&HalfSeries>> {
        match self.entries.get(beta) {
            None => Ok(None),
            Some(slice) => slice
                .get(key)
                .map(Some)
                .ok_or_else(|| Error::MissingData(format!("table entry {}", self.format_key(beta, key)))),
        }
    }

    /// Checks that every present class carries all of its expected keys.
    pub fn validate(&self) -> Result<()> {
        for (beta, slice) in &self.entries {
            for key in self.expected_keys(beta) {
                if !slice.contains_key(&key) {
                    return Err(Error::MissingData(format!(
                        "table entry {}",
                        self.format_key(beta, &key)
                    )));
                }
            }
            if slice.len() != self.expected_keys(beta).len() {
                return Err(Error::invalid(format!("unexpected keys at class {beta}")));
            }
        }
        Ok(())
    }

    pub fn format_key(&self, beta: &CurveClass, key: &[WeightedPartition]) -> String {
        let mut s = beta.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        for mu in key {
            s.push('|');
            s.push_str(&mu.format(&self.ring));
        }
        s
    }

    fn parse_key(&self, src: &str) -> Result<(CurveClass, Key)> {
        let mut pieces = src.split('|');
        let class_src = pieces.next().unwrap_or("");
        let coords = class_src
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::from(ParseError::new(format!("bad class {class_src:?} in key {src:?}"))))
            })
            .collect::<Result<Vec<_>>>()?;
        let key = pieces
            .map(|p| WeightedPartition::parse(p, &self.ring))
            .collect::<Result<Vec<_>>>()?;
        Ok((CurveClass::new(coords), key))
    }

    fn var(&self) -> Var {
        self.side.var()
    }
}

fn sizes_at(slots: &[SlotSize], beta: &CurveClass) -> Option<Vec<u32>> {
    slots.iter().map(|s| u32::try_from(s.eval(beta)).ok()).collect()
}

fn tuples(sizes: &[u32], ring: &GradedRing) -> Vec<Key> {
    let mut acc: Vec<Key> = vec![Vec::new()];
    for &d in sizes {
        let parts = enumerate_weighted_partitions(d, ring, None);
        acc = acc
            .iter()
            .flat_map(|prefix| {
                parts.iter().map(move |mu| {
                    let mut k = prefix.clone();
                    k.push(mu.clone());
                    k
                })
            })
            .collect();
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    side: Side,
    ring: GradedRing,
    rank: usize,
    #[serde(default)]
    slots: Vec<SlotSize>,
    entries: BTreeMap<String, HalfSeries>,
}

impl Serialize for TheoryTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            side: self.side,
            ring: self.ring.clone(),
            rank: self.rank,
            slots: self.slots.clone(),
            entries: self
                .entries()
                .map(|(b, k, v)| (self.format_key(b, k), v.clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TheoryTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TableRepr::deserialize(d)?;
        let mut t = TheoryTable::new(repr.side, repr.ring, repr.rank, repr.slots);
        for (k, v) in repr.entries {
            let (beta, key) = t.parse_key(&k).map_err(D::Error::custom)?;
            if t.get(&beta, &key).ok().flatten().is_some() {
                return Err(D::Error::custom(format!("duplicate entry {k}")));
            }
            t.insert(beta, key, v).map_err(D::Error::custom)?;
        }
        t.validate().map_err(D::Error::custom)?;
        Ok(t)
    }
}

/// Which `(beta_1, beta_2)` pairs contribute to a glued class `beta`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplittingRule {
    /// `beta_1 + beta_2 = beta` over the classes present in both tables.
    #[default]
    Additive,
    /// `beta_1 = beta_2 = beta`, for classes pushed forward from a common lattice.
    Matching,
    /// A caller-supplied list.
    Explicit { splits: Vec<Split> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub class: CurveClass,
    pub left: CurveClass,
    pub right: CurveClass,
}

impl SplittingRule {
    pub fn splits(
        &self,
        beta: &CurveClass,
        left: &BTreeSet<CurveClass>,
        right: &BTreeSet<CurveClass>,
    ) -> Vec<(CurveClass, CurveClass)> {
        match self {
            SplittingRule::Additive => left
                .iter()
                .filter(|b1| b1.rank() == beta.rank())
                .filter_map(|b1| {
                    let b2 = beta.sub(b1);
                    right.contains(&b2).then(|| (b1.clone(), b2))
                })
                .collect(),
            SplittingRule::Matching => {
                if left.contains(beta) && right.contains(beta) {
                    vec![(beta.clone(), beta.clone())]
                } else {
                    Vec::new()
                }
            }
            SplittingRule::Explicit { splits } => splits
                .iter()
                .filter(|s| &s.class == beta && left.contains(&s.left) && right.contains(&s.right))
                .map(|s| (s.left.clone(), s.right.clone()))
                .collect(),
        }
    }

    /// Classes that receive at least one splitting.
    pub fn glued_classes(&self, left: &BTreeSet<CurveClass>, right: &BTreeSet<CurveClass>) -> Vec<CurveClass> {
        let mut out: BTreeSet<CurveClass> = BTreeSet::new();
        match self {
            SplittingRule::Additive => {
                for a in left {
                    for b in right {
                        if a.rank() == b.rank() {
                            out.insert(a.add(b));
                        }
                    }
                }
            }
            SplittingRule::Matching => out.extend(left.intersection(right).cloned()),
            SplittingRule::Explicit { splits } => {
                for s in splits {
                    if left.contains(&s.left) && right.contains(&s.right) {
                        out.insert(s.class.clone());
                    }
                }
            }
        }
        let mut v: Vec<_> = out.into_iter().collect();
        sort_by_degree(&mut v);
        v
    }
}

/// Two relative tables along a common divisor.
#[derive(Clone, Debug)]
pub struct DegenerationStep {
    pub left: TheoryTable,
    pub right: TheoryTable,
    pub rule: SplittingRule,
}

impl DegenerationStep {
    pub fn new(left: TheoryTable, right: TheoryTable, rule: SplittingRule) -> Result<Self> {
        check_compatible(&left, &right)?;
        Ok(Self { left, right, rule })
    }

    pub fn side(&self) -> Side {
        self.left.side
    }

    pub fn output_slots(&self) -> Vec<SlotSize> {
        output_slots(&self.left, &self.right)
    }
}

fn check_compatible(left: &TheoryTable, right: &TheoryTable) -> Result<()> {
    if left.side != right.side {
        return Err(Error::invalid("cannot glue tables from different sides"));
    }
    if left.ring != right.ring {
        return Err(Error::invalid("tables do not share the divisor ring"));
    }
    if left.rank != right.rank {
        return Err(Error::invalid("tables use different class lattices"));
    }
    if left.slots.is_empty() || right.slots.is_empty() {
        return Err(Error::invalid("gluing needs a relative slot on both tables"));
    }
    Ok(())
}

fn output_slots(left: &TheoryTable, right: &TheoryTable) -> Vec<SlotSize> {
    let n = left.slots.len();
    left.slots[..n - 1].iter().chain(&right.slots[1..]).cloned().collect()
}

/// `(coefficient, exponent)` of the gluing weight in the side's variable.
fn glue_weight(side: Side, mu: &WeightedPartition) -> (GR, i64) {
    let z = gluing_factor_gr(mu);
    let l = mu.len() as i64;
    match side {
        Side::Gw => (z, 2 * l),
        // (-1)^{|mu|-l} q^{-|mu|} = (-1)^l s^{-2|mu|}
        Side::Pairs => (if l % 2 == 0 { z } else { -z }, -2 * i64::from(mu.size())),
    }
}

/// Weighted partitions of one glued size with their dual expansions.
struct GluedBasis {
    parts: Vec<WeightedPartition>,
    /// `dual[mu] = [(eta, [eta] mu^dual)]`
    dual: Vec<Vec<(usize, GR)>>,
}

impl GluedBasis {
    fn new(d: u32, ring: &GradedRing) -> Result<Self> {
        let mut parts = enumerate_weighted_partitions(d, ring, None);
        // codimension strata first; the stable sort keeps the enumeration order inside each
        parts.sort_by_key(|mu| codim(mu, ring));
        let index: HashMap<_, _> = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let dual = parts
            .iter()
            .map(|mu| {
                Ok(dual_partition(mu, ring)?
                    .into_iter()
                    .map(|(eta, c)| (index[&eta], c))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { parts, dual })
    }
}

#[derive(Default)]
struct BasisCache {
    by_size: HashMap<u32, GluedBasis>,
}

impl BasisCache {
    fn get(&mut self, d: u32, ring: &GradedRing) -> Result<&GluedBasis> {
        if !self.by_size.contains_key(&d) {
            self.by_size.insert(d, GluedBasis::new(d, ring)?);
        }
        Ok(&self.by_size[&d])
    }
}

fn key_with(outer: &[WeightedPartition], mu: &WeightedPartition, at_end: bool) -> Key {
    let mut k = Vec::with_capacity(outer.len() + 1);
    if at_end {
        k.extend_from_slice(outer);
        k.push(mu.clone());
    } else {
        k.push(mu.clone());
        k.extend_from_slice(outer);
    }
    k
}

fn lookup_or_zero(t: &TheoryTable, beta: &CurveClass, key: &[WeightedPartition]) -> Result<HalfSeries> {
    Ok(t.get(beta, key)?.cloned().unwrap_or_else(|| HalfSeries::zero(t.var())))
}

fn weighted(s: &HalfSeries, c: &GR, e: i64) -> HalfSeries {
    s.scale(c).shift(e)
}

/// Glued slot size when both sides agree and it is nonnegative.
fn glued_size(left: &TheoryTable, b1: &CurveClass, right: &TheoryTable, b2: &CurveClass) -> Option<u32> {
    let dl = left.slots.last()?.eval(b1);
    let dr = right.slots.first()?.eval(b2);
    (dl == dr).then_some(dl).and_then(|d| u32::try_from(d).ok())
}

/// `B[mu][o_R] = w(mu) sum_eta [eta] mu^dual * R(beta_2)[eta, o_R]`.
fn right_factor(
    right: &TheoryTable,
    b2: &CurveClass,
    basis: &GluedBasis,
    side: Side,
) -> Result<(Vec<Key>, Vec<Vec<HalfSeries>>)> {
    let sizes = sizes_at(&right.slots[1..], b2).unwrap_or_default();
    let outer = tuples(&sizes, &right.ring);
    let mut out = Vec::with_capacity(basis.parts.len());
    for (m, mu) in basis.parts.iter().enumerate() {
        let (wc, we) = glue_weight(side, mu);
        let mut row = Vec::with_capacity(outer.len());
        for o in &outer {
            let mut acc = HalfSeries::zero(right.var());
            for (eta, c) in &basis.dual[m] {
                let r = lookup_or_zero(right, b2, &key_with(o, &basis.parts[*eta], false))?;
                acc = acc.add(&r.scale(c))?;
            }
            row.push(weighted(&acc, &wc, we));
        }
        out.push(row);
    }
    Ok((outer, out))
}

/// `A[o_L][eta] = sum_mu L(beta_1)[o_L, mu] w(mu) [eta] mu^dual`.
fn left_factor(
    left: &TheoryTable,
    b1: &CurveClass,
    basis: &GluedBasis,
    side: Side,
) -> Result<(Vec<Key>, Vec<Vec<HalfSeries>>)> {
    let n = left.slots.len();
    let sizes = sizes_at(&left.slots[..n - 1], b1).unwrap_or_default();
    let outer = tuples(&sizes, &left.ring);
    let mut out = Vec::with_capacity(outer.len());
    for o in &outer {
        let mut row = vec![HalfSeries::zero(left.var()); basis.parts.len()];
        for (m, mu) in basis.parts.iter().enumerate() {
            let l = lookup_or_zero(left, b1, &key_with(o, mu, true))?;
            if l.is_exact_zero() {
                continue;
            }
            let (wc, we) = glue_weight(side, mu);
            let lw = weighted(&l, &wc, we);
            for (eta, c) in &basis.dual[m] {
                row[*eta] = row[*eta].add(&lw.scale(c))?;
            }
        }
        out.push(row);
    }
    Ok((outer, out))
}

/// Contribution of one splitting, keyed by `o_L ++ o_R`.
fn convolve(
    left: &TheoryTable,
    right: &TheoryTable,
    b1: &CurveClass,
    b2: &CurveClass,
    cache: &mut BasisCache,
) -> Result<Option<Slice>> {
    if !left.has_class(b1) || !right.has_class(b2) {
        return Ok(None);
    }
    let Some(d) = glued_size(left, b1, right, b2) else {
        return Ok(None);
    };
    let basis = cache.get(d, &left.ring)?;
    let (outer_r, bm) = right_factor(right, b2, basis, left.side)?;
    let n = left.slots.len();
    let sizes_l = sizes_at(&left.slots[..n - 1], b1).unwrap_or_default();
    let mut out = Slice::new();
    for ol in tuples(&sizes_l, &left.ring) {
        let ls: Vec<HalfSeries> = basis
            .parts
            .iter()
            .map(|mu| lookup_or_zero(left, b1, &key_with(&ol, mu, true)))
            .collect::<Result<_>>()?;
        for (r, or) in outer_r.iter().enumerate() {
            let mut acc = HalfSeries::zero(left.var());
            for (m, l) in ls.iter().enumerate() {
                if l.is_exact_zero() || bm[m][r].is_exact_zero() {
                    continue;
                }
                acc = acc.add(&l.mul(&bm[m][r])?)?;
            }
            let mut key = ol.clone();
            key.extend(or.iter().cloned());
            out.insert(key, acc);
        }
    }
    Ok(Some(out))
}

/// Full glued slice at `beta`, zero-filled over the output keys.
fn glue_class(
    left: &TheoryTable,
    right: &TheoryTable,
    rule: &SplittingRule,
    beta: &CurveClass,
    out_slots: &[SlotSize],
) -> Result<Slice> {
    let lc: BTreeSet<_> = left.entries.keys().cloned().collect();
    let rc: BTreeSet<_> = right.entries.keys().cloned().collect();
    let var = left.var();
    let mut out: Slice = match sizes_at(out_slots, beta) {
        Some(sizes) => tuples(&sizes, &left.ring)
            .into_iter()
            .map(|k| (k, HalfSeries::zero(var)))
            .collect(),
        None => Slice::new(),
    };
    let mut cache = BasisCache::default();
    for (b1, b2) in rule.splits(beta, &lc, &rc) {
        let Some(part) = convolve(left, right, &b1, &b2, &mut cache)? else {
            continue;
        };
        for (k, v) in part {
            let slot = out.get_mut(&k).ok_or_else(|| {
                Error::invalid(format!(
                    "splitting ({b1}, {b2}) of {beta} produces outer slot sizes that differ from those at {beta}"
                ))
            })?;
            *slot = slot.add(&v)?;
        }
    }
    Ok(out)
}

/// All output entries of the glued theory at `beta`.
pub fn glue_entries(step: &DegenerationStep, beta: &CurveClass) -> Result<Slice> {
    glue_class(&step.left, &step.right, &step.rule, beta, &step.output_slots())
}

fn glue_absolute(step: &DegenerationStep, beta: &CurveClass, side: Side) -> Result<HalfSeries> {
    if step.side() != side {
        return Err(Error::invalid(format!("step is on the {} side", step.side().name())));
    }
    if !step.output_slots().is_empty() {
        return Err(Error::invalid("glued theory still has relative slots"));
    }
    let mut slice = glue_entries(step, beta)?;
    Ok(slice.remove(&Vec::new()).unwrap_or_else(|| HalfSeries::zero(side.var())))
}

/// Absolute Gromov-Witten series of the glued theory at `beta`.
pub fn glue_gw(step: &DegenerationStep, beta: &CurveClass) -> Result<HalfSeries> {
    glue_absolute(step, beta, Side::Gw)
}

/// Absolute pairs series (in `s`) of the glued theory at `beta`.
pub fn glue_pairs(step: &DegenerationStep, beta: &CurveClass) -> Result<HalfSeries> {
    glue_absolute(step, beta, Side::Pairs)
}

/// Glued table over `classes`, or over every class the rule reaches.
pub fn glue_table(step: &DegenerationStep, classes: Option<&[CurveClass]>) -> Result<TheoryTable> {
    let classes = match classes {
        Some(c) => c.to_vec(),
        None => {
            let lc: BTreeSet<_> = step.left.entries.keys().cloned().collect();
            let rc: BTreeSet<_> = step.right.entries.keys().cloned().collect();
            step.rule.glued_classes(&lc, &rc)
        }
    };
    let slices = classes
        .par_iter()
        .map(|b| glue_entries(step, b).map(|s| (b.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = TheoryTable::new(step.side(), step.left.ring.clone(), step.left.rank, step.output_slots());
    for (b, s) in slices {
        if !s.is_empty() {
            out.entries.insert(b, s);
        }
    }
    Ok(out)
}

/// Closed-form capped edge `delta_{nu,mu} c(nu)` with
/// `c = u^{-2 l(nu)} / z(nu)` on the GW side and
/// `c = (-1)^{|nu| - l(nu)} q^d / z(nu)` (returned in `s`) on the pairs side.
pub fn capped_edge(side: Side, d: u32, nu: &WeightedPartition, mu: &WeightedPartition) -> Result<HalfSeries> {
    if nu.size() != d || mu.size() != d {
        return Err(Error::invalid(format!(
            "capped edge of degree {d} needs partitions of size {d}, got {} and {}",
            nu.size(),
            mu.size()
        )));
    }
    if nu != mu {
        return Ok(HalfSeries::zero(side.var()));
    }
    Ok(edge_coefficient(side, nu))
}

fn edge_coefficient(side: Side, nu: &WeightedPartition) -> HalfSeries {
    let zinv = gluing_factor_gr(nu).inv().expect("gluing factor is positive");
    let l = nu.len() as i64;
    let d = i64::from(nu.size());
    match side {
        Side::Gw => HalfSeries::monomial(Var::U, zinv, -2 * l),
        Side::Pairs => {
            // (-1)^{d-l} q^d = (-1)^{d-l} (-1)^d s^{2d} = (-1)^l s^{2d}
            let c = if l % 2 == 0 { zinv } else { -zinv };
            HalfSeries::monomial(Var::S, c, 2 * d)
        }
    }
}

/// Capped edge as a two-slot table on a rank-1 lattice with slot size `d`,
/// stored basis-expanded: entry `[nu, lambda]` is `c(lambda)` times the
/// coefficient of `lambda` in the pairing transform of `nu`. Gluing this
/// table on either side of another table is the identity.
pub fn capped_edge_table(side: Side, ring: &GradedRing, max_degree: u32) -> Result<TheoryTable> {
    let mut t = TheoryTable::new(side, ring.clone(), 1, vec![SlotSize::linear([1]), SlotSize::linear([1])]);
    for d in 0..=max_degree {
        let beta = CurveClass::new(vec![i64::from(d)]);
        let parts = enumerate_weighted_partitions(d, ring, None);
        for nu in &parts {
            let und = undual_partition(nu, ring)?;
            for lambda in &parts {
                let s = match und.get(lambda) {
                    Some(c) => edge_coefficient(side, lambda).scale(c),
                    None => HalfSeries::zero(side.var()),
                };
                t.insert(beta.clone(), vec![nu.clone(), lambda.clone()], s)?;
            }
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// inversion

/// Which factor of the convolution is unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Left,
    Right,
}

/// Shape of the table an inversion solves for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownSpec {
    pub position: Position,
    pub slots: Vec<SlotSize>,
    /// Truncation box: classes outside it are taken to vanish.
    pub classes: Vec<CurveClass>,
    /// Cap on the order of the solved series.
    #[serde(default)]
    pub order: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub key: String,
    /// Lowest exponent at which re-gluing disagrees with the target.
    pub exponent: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub checked: usize,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct InvertOutcome {
    pub table: TheoryTable,
    pub residual: ResidualReport,
}

/// Solves `M X = B` for matrices of series in one variable.
///
/// Columns are normalized by their valuation; the constant matrix must have
/// full column rank, and a square set of independent rows drives the
/// recursion. Unused rows are left to the caller's residual check.
pub fn solve_series_system(
    m: &[Vec<HalfSeries>],
    b: &[Vec<HalfSeries>],
    var: Var,
    cap: Option<i64>,
) -> Result<Vec<Vec<HalfSeries>>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let rhs = b.first().map_or(0, Vec::len);
    if cols == 0 {
        return Ok(Vec::new());
    }
    if rows < cols || b.len() != rows {
        return Err(Error::Singular(format!("{rows} equations for {cols} unknowns")));
    }
    let mut vals = Vec::with_capacity(cols);
    for j in 0..cols {
        let v = (0..rows).filter_map(|i| m[i][j].min_exp()).min();
        match v {
            Some(v) => vals.push(v),
            None => return Err(Error::Singular(format!("column {j} of the gluing matrix vanishes"))),
        }
    }
    let mt: Vec<Vec<HalfSeries>> = m
        .iter()
        .map(|row| row.iter().zip(&vals).map(|(s, v)| s.shift(-v)).collect())
        .collect();
    let mut m0: Matrix = Vec::with_capacity(rows);
    for row in &mt {
        m0.push(row.iter().map(|s| s.coeff(0)).collect::<Result<_>>()?);
    }
    let sel = linalg::independent_rows(&m0)
        .ok_or_else(|| Error::Singular("leading coefficients of the gluing matrix are degenerate".into()))?;
    let n0 = linalg::inverse(&sel.iter().map(|&i| m0[i].clone()).collect())?;
    let ms: Vec<&Vec<HalfSeries>> = sel.iter().map(|&i| &mt[i]).collect();
    let bs: Vec<&Vec<HalfSeries>> = sel.iter().map(|&i| &b[i]).collect();

    let min_opt = |a: Option<i64>, b: Option<i64>| match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    let trunc_m = ms.iter().flat_map(|r| r.iter()).fold(None, |acc, s| min_opt(acc, s.trunc()));
    let trunc_b = bs.iter().flat_map(|r| r.iter()).fold(None, |acc, s| min_opt(acc, s.trunc()));
    let kb = bs.iter().flat_map(|r| r.iter()).filter_map(HalfSeries::valuation).min();
    let Some(kb) = kb else {
        // exactly zero right-hand side
        return Ok(vec![vec![HalfSeries::zero(var); rhs]; cols]);
    };
    let constant = trunc_m.is_none() && ms.iter().flat_map(|r| r.iter()).all(|s| s.max_exp().map_or(true, |e| e <= 0));
    let max_val = vals.iter().copied().max().unwrap_or(0);
    let mut stop = min_opt(trunc_b, trunc_m.map(|t| kb + t));
    if constant {
        stop = trunc_b;
    }
    if let Some(c) = cap {
        stop = Some(stop.map_or(c + max_val, |s| s.min(c + max_val)));
    }
    let Some(stop) = stop else {
        return Err(Error::precision(
            "inverting an exact, non-constant gluing matrix without an order cap",
            None,
        ));
    };

    // dense coefficients of the selected normalized rows
    let span = (stop - kb).max(0);
    let mcoef: Vec<Matrix> = (0..span)
        .map(|j| {
            ms.iter()
                .map(|row| row.iter().map(|s| s.coeff_known(j).unwrap_or_else(GR::zero)).collect())
                .collect()
        })
        .collect();
    let mut xt: Vec<Matrix> = Vec::with_capacity(span as usize); // xt[k - kb][col][rhs]
    for k in kb..stop {
        let mut r: Matrix = bs
            .iter()
            .map(|row| row.iter().map(|s| s.coeff_known(k).unwrap_or_else(GR::zero)).collect())
            .collect();
        for j in 1..=(k - kb) {
            let mj = &mcoef[j as usize];
            let xprev = &xt[(k - kb - j) as usize];
            for (i, ri) in r.iter_mut().enumerate() {
                for (c, mij) in mj[i].iter().enumerate() {
                    if mij.is_zero() {
                        continue;
                    }
                    for (t, rt) in ri.iter_mut().enumerate() {
                        *rt -= &(mij * &xprev[c][t]);
                    }
                }
            }
        }
        xt.push(linalg::mat_mul(&n0, &r));
    }
    let mut out = Vec::with_capacity(cols);
    for (j, v) in vals.iter().enumerate() {
        let row = (0..rhs)
            .map(|t| {
                let terms = xt.iter().enumerate().map(|(i, x)| (kb + i as i64 - v, x[j][t].clone()));
                let s = HalfSeries::new(var, terms, Some(stop - v));
                match cap {
                    Some(c) => s.truncate(c),
                    None => s,
                }
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

struct Candidate {
    target: CurveClass,
    known: CurveClass,
    others: Vec<(CurveClass, CurveClass)>,
}

/// Recovers the unknown factor of a convolution from the glued target and
/// the known factor, then re-glues everything as a residual check.
///
/// With an order cap, classes are solved with extra internal precision so
/// that truncating early classes does not starve later ones; the result is
/// truncated at the cap.
pub fn invert_step(
    target: &TheoryTable,
    known: &TheoryTable,
    unknown: &UnknownSpec,
    rule: &SplittingRule,
) -> Result<InvertOutcome> {
    if target.side != known.side || target.ring != known.ring || target.rank != known.rank {
        return Err(Error::invalid("target and known tables are incompatible"));
    }
    if known.slots.is_empty() || unknown.slots.is_empty() {
        return Err(Error::invalid("inversion needs a relative slot on both factors"));
    }
    let left_is_known = unknown.position == Position::Right;
    let out_slots: Vec<SlotSize> = if left_is_known {
        known.slots[..known.slots.len() - 1].iter().chain(&unknown.slots[1..]).cloned().collect()
    } else {
        unknown.slots[..unknown.slots.len() - 1].iter().chain(&known.slots[1..]).cloned().collect()
    };
    let solved = match unknown.order {
        None => solve_unknown(target, known, unknown, rule, &out_slots, None)?,
        Some(cap) => {
            let lowest = |t: &TheoryTable| t.entries().filter_map(|(_, _, s)| s.trunc()).min();
            let mut headroom = 0;
            let mut attempt = solve_unknown(target, known, unknown, rule, &out_slots, Some(cap))?;
            for _ in 0..6 {
                if lowest(&attempt).map_or(true, |t| t >= cap) {
                    break;
                }
                headroom = (2 * headroom).max(4);
                let next = solve_unknown(target, known, unknown, rule, &out_slots, Some(cap + headroom))?;
                // stop once the inputs, not the cap, limit the precision
                let stalled = lowest(&next) == lowest(&attempt);
                attempt = next;
                if stalled {
                    break;
                }
            }
            for slice in attempt.entries.values_mut() {
                for s in slice.values_mut() {
                    *s = s.truncate(cap);
                }
            }
            attempt
        }
    };
    let residual = residual_report(target, known, &solved, rule, left_is_known, &out_slots)?;
    Ok(InvertOutcome { table: solved, residual })
}

fn solve_unknown(
    target: &TheoryTable,
    known: &TheoryTable,
    unknown: &UnknownSpec,
    rule: &SplittingRule,
    out_slots: &[SlotSize],
    cap: Option<i64>,
) -> Result<TheoryTable> {
    let side = known.side;
    let var = side.var();
    let mut solved = TheoryTable::new(side, known.ring.clone(), known.rank, unknown.slots.clone());
    let mut order = unknown.classes.clone();
    sort_by_degree(&mut order);
    let boxed: BTreeSet<CurveClass> = order.iter().cloned().collect();
    let known_classes: BTreeSet<CurveClass> = known.entries.keys().cloned().collect();
    let targets = target.classes();
    let left_is_known = unknown.position == Position::Right;
    let mut cache = BasisCache::default();

    for bu in &order {
        let solved_set: BTreeSet<CurveClass> = solved.entries.keys().cloned().collect();
        let mut candidates = Vec::new();
        for beta in &targets {
            let splits = if left_is_known {
                rule.splits(beta, &known_classes, &boxed)
            } else {
                rule.splits(beta, &boxed, &known_classes)
            };
            let (mine, others): (Vec<_>, Vec<_>) = splits.into_iter().partition(|(b1, b2)| {
                if left_is_known { b2 == bu } else { b1 == bu }
            });
            let blocked = others.iter().any(|(b1, b2)| {
                let u = if left_is_known { b2 } else { b1 };
                !solved_set.contains(u)
            });
            if blocked {
                continue;
            }
            for (b1, b2) in mine {
                let bk = if left_is_known { b1 } else { b2 };
                candidates.push(Candidate { target: beta.clone(), known: bk, others: others.clone() });
            }
        }
        let mut last_err = None;
        let mut done = false;
        for cand in candidates {
            match solve_class(target, known, &solved, unknown, bu, &cand, out_slots, var, cap, &mut cache) {
                Ok(slice) => {
                    solved.entries.insert(bu.clone(), slice);
                    done = true;
                    break;
                }
                Err(e @ Error::Singular(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        if !done {
            return Err(last_err.unwrap_or_else(|| {
                Error::Singular(format!("no equation determines the unknown table at class {bu}"))
            }));
        }
    }
    Ok(solved)
}

#[allow(clippy::too_many_arguments)]
fn solve_class(
    target: &TheoryTable,
    known: &TheoryTable,
    solved: &TheoryTable,
    unknown: &UnknownSpec,
    bu: &CurveClass,
    cand: &Candidate,
    out_slots: &[SlotSize],
    var: Var,
    cap: Option<i64>,
    cache: &mut BasisCache,
) -> Result<Slice> {
    let side = known.side;
    let right_unknown = unknown.position == Position::Right;
    let (d_known, d_unknown) = if right_unknown {
        (known.slots.last().map(|s| s.eval(&cand.known)), unknown.slots[0].eval(bu))
    } else {
        (known.slots.first().map(|s| s.eval(&cand.known)), unknown.slots.last().map_or(-1, |s| s.eval(bu)))
    };
    let d = match (d_known, u32::try_from(d_unknown)) {
        (Some(a), Ok(b)) if a == i64::from(b) => b,
        _ => return Err(Error::Singular(format!("glued slot sizes disagree at class {bu}"))),
    };
    if sizes_at(out_slots, &cand.target).is_none() {
        return Err(Error::Singular(format!("no target entries at class {}", cand.target)));
    }

    // residual target after removing the already-known splittings
    let mut rest: Slice = target
        .slice(&cand.target)
        .cloned()
        .ok_or_else(|| Error::MissingData(format!("target class {}", cand.target)))?;
    for (b1, b2) in &cand.others {
        let part = if right_unknown {
            convolve(known, solved, b1, b2, cache)?
        } else {
            convolve(solved, known, b1, b2, cache)?
        };
        for (k, v) in part.into_iter().flatten() {
            let e = rest.get_mut(&k).ok_or_else(|| {
                Error::MissingData(format!("target entry {}", target.format_key(&cand.target, &k)))
            })?;
            *e = e.sub(&v)?;
        }
    }
    let fetch = |k: Key| -> Result<HalfSeries> {
        rest.get(&k)
            .cloned()
            .ok_or_else(|| Error::MissingData(format!("target entry {}", target.format_key(&cand.target, &k))))
    };

    let basis = cache.get(d, &known.ring)?;
    let mut slice = Slice::new();
    if right_unknown {
        // sum_eta A[o_L][eta] X[eta][o_R] = rest[o_L ++ o_R]
        let (outer_l, a) = left_factor(known, &cand.known, basis, side)?;
        let outer_r = tuples(&sizes_at(&unknown.slots[1..], bu).unwrap_or_default(), &known.ring);
        let b = outer_l
            .iter()
            .map(|ol| outer_r.iter().map(|or| fetch([ol.clone(), or.clone()].concat())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let x = solve_series_system(&a, &b, var, cap)?;
        for (eta, row) in x.into_iter().enumerate() {
            for (or, s) in outer_r.iter().zip(row) {
                slice.insert(key_with(or, &basis.parts[eta], false), s);
            }
        }
    } else {
        // sum_mu X[mu][o_L] B[mu][o_R] = rest[o_L ++ o_R]
        let (outer_r, bm) = right_factor(known, &cand.known, basis, side)?;
        let n = unknown.slots.len();
        let outer_l = tuples(&sizes_at(&unknown.slots[..n - 1], bu).unwrap_or_default(), &known.ring);
        let m: Vec<Vec<HalfSeries>> = (0..outer_r.len())
            .map(|r| bm.iter().map(|row| row[r].clone()).collect())
            .collect();
        let b = outer_r
            .iter()
            .map(|or| outer_l.iter().map(|ol| fetch([ol.clone(), or.clone()].concat())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let x = solve_series_system(&m, &b, var, cap)?;
        for (mu, row) in x.into_iter().enumerate() {
            for (ol, s) in outer_l.iter().zip(row) {
                slice.insert(key_with(ol, &basis.parts[mu], true), s);
            }
        }
    }
    Ok(slice)
}

fn residual_report(
    target: &TheoryTable,
    known: &TheoryTable,
    solved: &TheoryTable,
    rule: &SplittingRule,
    left_is_known: bool,
    out_slots: &[SlotSize],
) -> Result<ResidualReport> {
    let (l, r) = if left_is_known { (known, solved) } else { (solved, known) };
    let per_class = target
        .classes()
        .par_iter()
        .map(|beta| {
            let glued = glue_class(l, r, rule, beta, out_slots)?;
            let mut checked = 0;
            let mut bad = Vec::new();
            for (k, t) in target.slice(beta).into_iter().flatten() {
                checked += 1;
                let g = glued.get(k).cloned().unwrap_or_else(|| HalfSeries::zero(t.var()));
                if let Some(e) = g.first_difference(t) {
                    bad.push(ResidualEntry { key: target.format_key(beta, k), exponent: e });
                }
            }
            Ok((checked, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ResidualReport::default();
    for (c, bad) in per_class {
        report.checked += c;
        report.entries.extend(bad);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// pipelines

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    /// `inputs = [left, right]`
    Glue,
    /// `inputs = [target, known]`
    Invert,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineNode {
    pub op: Op,
    pub side: Side,
    pub inputs: Vec<String>,
    pub output: String,
    #[serde(default)]
    pub rule: SplittingRule,
    /// Output classes of a glue node; defaults to every reachable class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<CurveClass>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown: Option<UnknownSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub nodes: Vec<PipelineNode>,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// Node outputs in execution order.
    pub order: Vec<String>,
    pub tables: BTreeMap<String, TheoryTable>,
    pub residuals: BTreeMap<String, ResidualReport>,
}

impl PipelineSpec {
    /// Node indices in a topological order; ties follow the spec order.
    pub fn schedule(&self, leaves: &BTreeSet<String>) -> Result<Vec<usize>> {
        let mut producer: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if leaves.contains(&n.output) {
                return Err(Error::invalid(format!("node output {} shadows a leaf table", n.output)));
            }
            if producer.insert(&n.output, i).is_some() {
                return Err(Error::invalid(format!("two nodes produce {}", n.output)));
            }
        }
        let mut indeg = vec![0usize; self.nodes.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            let want = match n.op {
                Op::Glue | Op::Invert => 2,
            };
            if n.inputs.len() != want {
                return Err(Error::invalid(format!("node {} needs {want} inputs", n.output)));
            }
            for inp in &n.inputs {
                match producer.get(inp.as_str()) {
                    Some(&p) => {
                        indeg[i] += 1;
                        users[p].push(i);
                    }
                    None if leaves.contains(inp) => {}
                    None => return Err(Error::MissingData(format!("leaf table {inp}"))),
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_first() {
            out.push(i);
            for &u in &users[i] {
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    ready.insert(u);
                }
            }
        }
        if out.len() < self.nodes.len() {
            let stuck: Vec<&str> = (0..self.nodes.len())
                .filter(|i| indeg[*i] > 0)
                .map(|i| self.nodes[i].output.as_str())
                .collect();
            return Err(Error::Cycle(stuck.join(", ")));
        }
        Ok(out)
    }
}

/// Evaluates the spec bottom-up over the supplied leaf tables.
pub fn reduction_pipeline(spec: &PipelineSpec, leaves: &BTreeMap<String, TheoryTable>) -> Result<PipelineResult> {
    let names: BTreeSet<String> = leaves.keys().cloned().collect();
    let schedule = spec.schedule(&names)?;
    let mut tables: BTreeMap<String, TheoryTable> = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut order = Vec::new();
    for i in schedule {
        let node = &spec.nodes[i];
        let fetch = |name: &str| -> &TheoryTable {
            tables.get(name).or_else(|| leaves.get(name)).expect("scheduled inputs exist")
        };
        let a = fetch(&node.inputs[0]);
        let b = fetch(&node.inputs[1]);
        for t in [a, b] {
            if t.side != node.side {
                return Err(Error::invalid(format!(
                    "node {} is on the {} side but an input is on the {} side",
                    node.output,
                    node.side.name(),
                    t.side.name()
                )));
            }
        }
        let result = match node.op {
            Op::Glue => {
                let step = DegenerationStep::new(a.clone(), b.clone(), node.rule.clone())?;
                glue_table(&step, node.classes.as_deref())?
            }
            Op::Invert => {
                let unknown = node
                    .unknown
                    .as_ref()
                    .ok_or_else(|| Error::invalid(format!("invert node {} lacks an unknown spec", node.output)))?;
                let outcome = invert_step(a, b, unknown, &node.rule)?;
                residuals.insert(node.output.clone(), outcome.residual);
                outcome.table
            }
        };
        order.push(node.output.clone());
        tables.insert(node.output.clone(), result);
    }
    Ok(PipelineResult { order, tables, residuals })
}

/// The eight-step degree reduction `T_5 <- T_4 <- ... <- T_1` through the
/// surfaces `S_k`, alternating inversions against projective bundles and
/// gluings with the blown-up spaces `P3[k,k+1]`.
///
/// Classes are degrees on a rank-1 lattice and every slot has size equal to
/// the degree. Each `T_k` carries one slot of insertion labels, standing in
/// for the descendent insertions that make the inversions square; the
/// surface relative conditions live in the remaining slots. The unknown box
/// is `1..=max_degree`.
pub fn quintic_scheme(side: Side, max_degree: u32, order: Option<i64>) -> PipelineSpec {
    let mut nodes = Vec::new();
    let classes: Vec<CurveClass> = (1..=i64::from(max_degree)).map(|d| CurveClass::new(vec![d])).collect();
    for k in 1..=4 {
        nodes.push(PipelineNode {
            op: Op::Invert,
            side,
            inputs: vec![format!("T{k}"), format!("P_S{k}/S{k}")],
            output: format!("T{k}/S{k}"),
            rule: SplittingRule::Matching,
            classes: None,
            unknown: Some(UnknownSpec {
                position: Position::Right,
                slots: vec![SlotSize::linear([1])],
                classes: classes.clone(),
                order,
            }),
        });
        nodes.push(PipelineNode {
            op: Op::Glue,
            side,
            inputs: vec![format!("T{k}/S{k}"), format!("P3[{k},{}]/S{k}", k + 1)],
            output: format!("T{}", k + 1),
            rule: SplittingRule::Matching,
            classes: None,
            unknown: None,
        });
    }
    PipelineSpec { nodes }
}

// ---------------------------------------------------------------------------
// synthetic data

/// Random series with integer coefficients in `[-5, 5]` on exponents
/// `lo..trunc` (even exponents only on the pairs side).
pub fn random_series(rng: &mut ChaCha8Rng, side: Side, lo: i64, trunc: Option<i64>, terms: i64) -> HalfSeries {
    let step = if side == Side::Pairs { 2 } else { 1 };
    let hi = trunc.unwrap_or(lo + step * terms);
    let mut coeffs = Vec::new();
    let mut e = lo;
    while e < hi {
        if side == Side::Gw || e % 2 == 0 {
            let c: i64 = rng.gen_range(-5..=5);
            if c != 0 {
                coeffs.push((e, GR::from_int(c)));
            }
        }
        e += 1;
    }
    HalfSeries::new(side.var(), coeffs, trunc)
}

/// Random table with the given slots over `classes`.
pub fn random_table(
    rng: &mut ChaCha8Rng,
    side: Side,
    ring: &GradedRing,
    slots: Vec<SlotSize>,
    classes: &[CurveClass],
    lo: i64,
    trunc: Option<i64>,
) -> Result<TheoryTable> {
    let rank = classes.first().map_or(1, CurveClass::rank);
    let mut t = TheoryTable::new(side, ring.clone(), rank, slots);
    for beta in classes {
        for key in t.expected_keys(beta) {
            let s = random_series(rng, side, lo, trunc, 4);
            t.insert(beta.clone(), key, s)?;
        }
    }
    Ok(t)
}

/// A random two-slot table whose leading coefficients (at exponent `lo`)
/// form an invertible matrix between the slots at every class.
pub fn random_invertible_table(
    rng: &mut ChaCha8Rng,
    side: Side,
    ring: &GradedRing,
    slots: [SlotSize; 2],
    classes: &[CurveClass],
    lo: i64,
    trunc: Option<i64>,
) -> Result<TheoryTable> {
    let lead = if side == Side::Pairs && lo % 2 != 0 { lo + 1 } else { lo };
    loop {
        let t = random_table(rng, side, ring, slots.to_vec(), classes, lo, trunc)?;
        let ok = classes.iter().all(|beta| {
            let Some(sizes) = t.slot_sizes(beta) else { return true };
            let a = enumerate_weighted_partitions(sizes[0], ring, None);
            let b = enumerate_weighted_partitions(sizes[1], ring, None);
            if a.len() != b.len() {
                return true;
            }
            let m: Matrix = a
                .iter()
                .map(|x| {
                    b.iter()
                        .map(|y| {
                            t.get(beta, &[x.clone(), y.clone()])
                                .ok()
                                .flatten()
                                .and_then(|s| s.coeff_known(lead))
                                .unwrap_or_else(GR::zero)
                        })
                        .collect()
                })
                .collect();
            linalg::rank(&m) == a.len()
        });
        if ok {
            return Ok(t);
        }
    }
}

/// Deterministic synthetic leaves for [`quintic_scheme`] over `ring`:
/// `T1` with slot `[insertion]`, `P_Sk/Sk` with slots `[insertion, Sk]` and
/// invertible leading terms, `P3[k,k+1]/Sk` with slots `[Sk, insertion]`.
pub fn synthetic_quintic_leaves(
    side: Side,
    ring: &GradedRing,
    max_degree: u32,
    trunc: i64,
    seed: u64,
) -> Result<BTreeMap<String, TheoryTable>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<CurveClass> = (1..=i64::from(max_degree)).map(|d| CurveClass::new(vec![d])).collect();
    let deg = SlotSize::linear([1]);
    let lo = if side == Side::Pairs { 2 } else { -1 };
    let mut leaves = BTreeMap::new();
    leaves.insert("T1".to_string(), random_table(&mut rng, side, ring, vec![deg.clone()], &classes, lo, Some(trunc))?);
    for k in 1..=4 {
        leaves.insert(
            format!("P_S{k}/S{k}"),
            random_invertible_table(&mut rng, side, ring, [deg.clone(), deg.clone()], &classes, lo, Some(trunc))?,
        );
        leaves.insert(
            format!("P3[{k},{}]/S{k}", k + 1),
            random_table(&mut rng, side, ring, vec![deg.clone(), deg.clone()], &classes, lo, Some(trunc))?,
        );
    }
    Ok(leaves)
}

/// The gluing weight `w(mu)` as a one-term series.
pub fn gluing_weight(side: Side, mu: &WeightedPartition) -> HalfSeries {
    let (c, e) = glue_weight(side, mu);
    HalfSeries::monomial(side.var(), c, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use num_traits::One;

    fn wp(parts: &[(u32, usize)]) -> WeightedPartition {
        WeightedPartition::new(parts.to_vec()).unwrap()
    }

    fn cls(c: &[i64]) -> CurveClass {
        CurveClass::new(c.to_vec())
    }

    fn p2() -> GradedRing {
        GradedRing::projective_space(2)
    }

    #[test]
    fn capped_edge_examples() {
        let omega = wp(&[(1, 0)]);
        let q = capped_edge(Side::Pairs, 1, &omega, &omega).unwrap();
        // q = -s^2
        assert_eq!(q, HalfSeries::monomial(Var::S, GR::from_int(-1), 2));
        assert_eq!(q.s_to_q().unwrap(), HalfSeries::monomial(Var::Q, GR::one(), 1));
        let g = capped_edge(Side::Gw, 1, &omega, &omega).unwrap();
        assert_eq!(g, HalfSeries::monomial(Var::U, GR::one(), -2));
        let other = wp(&[(1, 1)]);
        assert!(capped_edge(Side::Gw, 1, &omega, &other).unwrap().is_exact_zero());
        assert!(capped_edge(Side::Gw, 2, &omega, &omega).is_err());
        // z({(1,a),(1,a)}) = 2, l = 2: q^2 / 2 with sign (-1)^0
        let two = wp(&[(1, 0), (1, 0)]);
        let e = capped_edge(Side::Pairs, 2, &two, &two).unwrap();
        assert_eq!(e.s_to_q().unwrap(), HalfSeries::monomial(Var::Q, GR::from_rational(rat(1, 2)), 2));
    }

    fn assert_same(a: &TheoryTable, b: &TheoryTable) {
        assert_eq!(a.classes(), b.classes());
        for (beta, k, s) in a.entries() {
            let t = b.get(beta, k).unwrap().unwrap();
            assert!(s.agrees_with(t) && s.trunc() == t.trunc(), "{}", a.format_key(beta, k));
            assert_eq!(s, t);
        }
    }

    #[test]
    fn edge_idempotent_both_sides() {
        for side in [Side::Gw, Side::Pairs] {
            let e = capped_edge_table(side, &p2(), 4).unwrap();
            let step = DegenerationStep::new(e.clone(), e.clone(), SplittingRule::Matching).unwrap();
            let g = glue_table(&step, None).unwrap();
            assert_same(&g, &e);
        }
    }

    #[test]
    fn edge_is_identity_on_random_tables() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for side in [Side::Gw, Side::Pairs] {
            let classes: Vec<_> = (0..=3).map(|d| cls(&[d])).collect();
            let t = random_table(&mut rng, side, &ring, vec![SlotSize::constant(1), SlotSize::linear([1])], &classes, 0, Some(6))
                .unwrap();
            let e = capped_edge_table(side, &ring, 3).unwrap();
            let right = glue_table(&DegenerationStep::new(t.clone(), e.clone(), SplittingRule::Matching).unwrap(), None)
                .unwrap();
            assert_same(&right, &t);
        }
    }

    fn single(side: Side, ring: &GradedRing, slots: Vec<SlotSize>, beta: CurveClass, key: Key, s: HalfSeries) -> TheoryTable {
        let mut t = TheoryTable::new(side, ring.clone(), beta.rank(), slots);
        for k in t.expected_keys(&beta) {
            let v = if k == key { s.clone() } else { HalfSeries::zero(side.var()) };
            t.insert(beta.clone(), k, v).unwrap();
        }
        t
    }

    #[test]
    fn single_term_gw_and_pairs() {
        let ring = GradedRing::point();
        let omega = wp(&[(1, 0)]);
        let one = vec![SlotSize::constant(1)];
        let a = HalfSeries::exact(Var::U, [(0, GR::from_int(3)), (1, GR::from_int(1))]);
        let b = HalfSeries::exact(Var::U, [(2, GR::from_int(5))]);
        let l = single(Side::Gw, &ring, one.clone(), cls(&[1]), vec![omega.clone()], a.clone());
        let r = single(Side::Gw, &ring, one.clone(), cls(&[0]), vec![omega.clone()], b.clone());
        let step = DegenerationStep::new(l, r, SplittingRule::Additive).unwrap();
        let got = glue_gw(&step, &cls(&[1])).unwrap();
        let want = a.mul(&b).unwrap().shift(2);
        assert_eq!(got, want);
        // no splitting reaches (5)
        assert!(glue_gw(&step, &cls(&[5])).unwrap().is_exact_zero());

        let a = HalfSeries::exact(Var::Q, [(1, GR::from_int(2))]).q_to_s().unwrap();
        let b = HalfSeries::exact(Var::Q, [(0, GR::from_int(7))]).q_to_s().unwrap();
        let l = single(Side::Pairs, &ring, one.clone(), cls(&[1]), vec![omega.clone()], a.clone());
        let r = single(Side::Pairs, &ring, one, cls(&[1]), vec![omega.clone()], b.clone());
        let step = DegenerationStep::new(l, r, SplittingRule::Matching).unwrap();
        let got = glue_pairs(&step, &cls(&[1])).unwrap().s_to_q().unwrap();
        // 2q * 7 * q^{-1}
        assert_eq!(got, HalfSeries::exact(Var::Q, [(0, GR::from_int(14))]));
    }

    #[test]
    fn empty_overlap_is_zero() {
        let ring = GradedRing::point();
        let one = vec![SlotSize::constant(1)];
        let omega = wp(&[(1, 0)]);
        let s = HalfSeries::one(Var::S);
        let l = single(Side::Pairs, &ring, one.clone(), cls(&[1]), vec![omega.clone()], s.clone());
        let r = single(Side::Pairs, &ring, one, cls(&[2]), vec![omega], s);
        let step = DegenerationStep::new(l, r, SplittingRule::Matching).unwrap();
        assert!(glue_pairs(&step, &cls(&[1])).unwrap().is_exact_zero());
    }

    #[test]
    fn missing_entry_names_key() {
        let ring = GradedRing::projective_space(1);
        let mut l = TheoryTable::new(Side::Gw, ring.clone(), 1, vec![SlotSize::constant(1)]);
        l.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::one(Var::U)).unwrap();
        let mut r1 = TheoryTable::new(Side::Gw, ring.clone(), 1, vec![SlotSize::constant(1)]);
        r1.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::one(Var::U)).unwrap();
        let step = DegenerationStep::new(l, r1, SplittingRule::Matching).unwrap();
        match glue_gw(&step, &cls(&[1])) {
            Err(Error::MissingData(m)) => assert!(m.contains("1|1:"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(l_incomplete_is_invalid(&ring));
    }

    fn l_incomplete_is_invalid(ring: &GradedRing) -> bool {
        let mut l = TheoryTable::new(Side::Gw, ring.clone(), 1, vec![SlotSize::constant(1)]);
        l.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::one(Var::U)).unwrap();
        l.validate().is_err()
    }

    #[test]
    fn bilinear() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let classes = [cls(&[0]), cls(&[1])];
        let slots = vec![SlotSize::constant(2)];
        for side in [Side::Gw, Side::Pairs] {
            let l1 = random_table(&mut rng, side, &ring, slots.clone(), &classes, 0, Some(5)).unwrap();
            let l2 = random_table(&mut rng, side, &ring, slots.clone(), &classes, 0, Some(5)).unwrap();
            let r = random_table(&mut rng, side, &ring, slots.clone(), &classes, 0, Some(5)).unwrap();
            let mut sum = l1.clone();
            for (b, k, s) in l2.entries() {
                let a = sum.get(b, k).unwrap().unwrap().scale(&GR::from_int(3));
                sum.insert(b.clone(), k.clone(), a.add(&s.scale(&GR::from_int(-2))).unwrap()).unwrap();
            }
            let g = |l: &TheoryTable| {
                let step = DegenerationStep::new(l.clone(), r.clone(), SplittingRule::Additive).unwrap();
                glue_entries(&step, &cls(&[1])).unwrap().remove(&Vec::new()).unwrap()
            };
            let lhs = g(&sum);
            let rhs = g(&l1).scale(&GR::from_int(3)).add(&g(&l2).scale(&GR::from_int(-2))).unwrap();
            assert!(lhs.agrees_with(&rhs));
        }
    }

    #[test]
    fn dual_consistency() {
        // sum_mu L[mu] w R[mu^dual] == sum_mu L[mu^dual] w R[mu]
        let ring = p2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let slots = vec![SlotSize::constant(2)];
        let l = random_table(&mut rng, Side::Gw, &ring, slots.clone(), &[cls(&[0])], 0, Some(4)).unwrap();
        let r = random_table(&mut rng, Side::Gw, &ring, slots, &[cls(&[0])], 0, Some(4)).unwrap();
        let step = DegenerationStep::new(l.clone(), r.clone(), SplittingRule::Matching).unwrap();
        let direct = glue_gw(&step, &cls(&[0])).unwrap();
        let mut swapped = HalfSeries::zero(Var::U);
        for mu in enumerate_weighted_partitions(2, &ring, None) {
            let w = gluing_weight(Side::Gw, &mu);
            for (eta, c) in dual_partition(&mu, &ring).unwrap() {
                let lv = l.get(&cls(&[0]), &[eta]).unwrap().unwrap();
                let rv = r.get(&cls(&[0]), &[mu.clone()]).unwrap().unwrap();
                swapped = swapped.add(&lv.mul(&w).unwrap().mul(rv).unwrap().scale(&c)).unwrap();
            }
        }
        assert!(direct.agrees_with(&swapped));
    }

    #[test]
    fn json_roundtrip_and_completeness() {
        let ring = GradedRing::projective_space(1);
        let e = capped_edge_table(Side::Pairs, &ring, 2).unwrap();
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"2|2:1|2:p\""), "{text}");
        let back: TheoryTable = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["entries"].as_object_mut().unwrap().remove("1|1:1|1:p");
        assert!(serde_json::from_value::<TheoryTable>(v).is_err());
    }

    #[test]
    fn insert_checks_sizes_and_vars() {
        let ring = GradedRing::point();
        let mut t = TheoryTable::new(Side::Pairs, ring, 1, vec![SlotSize::linear([1])]);
        let s = HalfSeries::one(Var::S);
        assert!(t.insert(cls(&[2]), vec![wp(&[(1, 0)])], s.clone()).is_err());
        assert!(t.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::one(Var::U)).is_err());
        assert!(t.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::monomial(Var::S, GR::one(), 1)).is_err());
        t.insert(cls(&[1]), vec![wp(&[(1, 0)])], HalfSeries::monomial(Var::Q, GR::one(), 1)).unwrap();
        let got = t.get(&cls(&[1]), &[wp(&[(1, 0)])]).unwrap().unwrap();
        assert_eq!(got, &HalfSeries::monomial(Var::S, GR::from_int(-1), 2));
    }

    #[test]
    fn invert_against_edge_returns_target() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let classes: Vec<_> = (1..=3).map(|d| cls(&[d])).collect();
        let t = random_table(&mut rng, Side::Gw, &ring, vec![SlotSize::linear([1])], &classes, -1, Some(5)).unwrap();
        let e = capped_edge_table(Side::Gw, &ring, 3).unwrap();
        let spec = UnknownSpec {
            position: Position::Left,
            slots: vec![SlotSize::linear([1])],
            classes: classes.clone(),
            order: None,
        };
        let out = invert_step(&t, &e, &spec, &SplittingRule::Matching).unwrap();
        assert!(out.residual.is_zero());
        assert_same(&out.table, &t);
    }

    fn roundtrip_case(side: Side, position: Position, seed: u64) {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let boxed: Vec<_> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|c| cls(c)).collect();
        let d = 2;
        let known = random_invertible_table(
            &mut rng,
            side,
            &ring,
            [SlotSize::constant(d), SlotSize::constant(d)],
            &boxed,
            0,
            Some(8),
        )
        .unwrap();
        let unknown = random_table(&mut rng, side, &ring, vec![SlotSize::constant(d)], &boxed, 0, Some(8)).unwrap();
        let (l, r) = match position {
            Position::Right => (known.clone(), unknown.clone()),
            Position::Left => (unknown.clone(), known.clone()),
        };
        let step = DegenerationStep::new(l, r, SplittingRule::Additive).unwrap();
        let target = glue_table(&step, None).unwrap();
        let spec = UnknownSpec { position, slots: vec![SlotSize::constant(d)], classes: boxed, order: None };
        let out = invert_step(&target, &known, &spec, &SplittingRule::Additive).unwrap();
        assert!(out.residual.is_zero(), "{:?}", out.residual);
        assert!(out.residual.checked > 0);
        for (b, k, s) in unknown.entries() {
            let got = out.table.get(b, k).unwrap().unwrap();
            assert!(got.agrees_with(s), "{}", unknown.format_key(b, k));
            assert!(got.trunc() >= Some(4), "{:?}", got.trunc());
        }
    }

    #[test]
    fn invert_roundtrip_right_and_left() {
        for (i, side) in [Side::Gw, Side::Pairs].into_iter().enumerate() {
            roundtrip_case(side, Position::Right, 100 + i as u64);
            roundtrip_case(side, Position::Left, 200 + i as u64);
        }
    }

    #[test]
    fn corrupted_target_leaves_residual() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let boxed: Vec<_> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|c| cls(c)).collect();
        let known = random_invertible_table(
            &mut rng,
            Side::Gw,
            &ring,
            [SlotSize::constant(1), SlotSize::constant(1)],
            &boxed,
            0,
            Some(6),
        )
        .unwrap();
        let unknown = random_table(&mut rng, Side::Gw, &ring, vec![SlotSize::constant(1)], &boxed, 0, Some(6)).unwrap();
        let step = DegenerationStep::new(known.clone(), unknown, SplittingRule::Additive).unwrap();
        let mut target = glue_table(&step, None).unwrap();
        let key = target.expected_keys(&cls(&[1, 0]))[0].clone();
        let s = target.get(&cls(&[1, 0]), &key).unwrap().unwrap().clone();
        target
            .insert(cls(&[1, 0]), key, s.add(&HalfSeries::monomial(Var::U, GR::one(), 2)).unwrap())
            .unwrap();
        let spec = UnknownSpec {
            position: Position::Right,
            slots: vec![SlotSize::constant(1)],
            classes: boxed,
            order: None,
        };
        let out = invert_step(&target, &known, &spec, &SplittingRule::Additive).unwrap();
        assert!(!out.residual.is_zero());
    }

    #[test]
    fn series_solver_exact_needs_cap() {
        let one = HalfSeries::one(Var::U);
        let m = vec![vec![HalfSeries::exact(Var::U, [(0, GR::one()), (1, GR::one())])]];
        let b = vec![vec![one.clone()]];
        assert!(matches!(solve_series_system(&m, &b, Var::U, None), Err(Error::InsufficientPrecision { .. })));
        let x = solve_series_system(&m, &b, Var::U, Some(4)).unwrap();
        // 1/(1+u) = 1 - u + u^2 - u^3 + ...
        let want = HalfSeries::new(Var::U, (0..4).map(|k| (k, GR::from_int(if k % 2 == 0 { 1 } else { -1 }))), Some(4));
        assert_eq!(x[0][0], want);
        let sing = vec![vec![HalfSeries::zero(Var::U)]];
        assert!(matches!(solve_series_system(&sing, &b, Var::U, Some(3)), Err(Error::Singular(_))));
    }

    #[test]
    fn pipeline_single_glue_matches_direct() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let classes: Vec<_> = (1..=2).map(|d| cls(&[d])).collect();
        let a = random_table(&mut rng, Side::Gw, &ring, vec![SlotSize::linear([1])], &classes, 0, Some(4)).unwrap();
        let b = random_table(&mut rng, Side::Gw, &ring, vec![SlotSize::linear([1])], &classes, 0, Some(4)).unwrap();
        let spec = PipelineSpec {
            nodes: vec![PipelineNode {
                op: Op::Glue,
                side: Side::Gw,
                inputs: vec!["A".into(), "B".into()],
                output: "C".into(),
                rule: SplittingRule::Matching,
                classes: None,
                unknown: None,
            }],
        };
        let leaves = BTreeMap::from([("A".to_string(), a.clone()), ("B".to_string(), b.clone())]);
        let res = reduction_pipeline(&spec, &leaves).unwrap();
        let step = DegenerationStep::new(a, b, SplittingRule::Matching).unwrap();
        for beta in &classes {
            let c = res.tables["C"].get(beta, &[]).unwrap().unwrap();
            assert_eq!(c, &glue_gw(&step, beta).unwrap());
        }
    }

    #[test]
    fn pipeline_glue_then_invert_composes() {
        let ring = GradedRing::projective_space(1);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let classes: Vec<_> = (1..=2).map(|d| cls(&[d])).collect();
        let deg = SlotSize::linear([1]);
        let x = random_table(&mut rng, Side::Pairs, &ring, vec![deg.clone()], &classes, 0, Some(8)).unwrap();
        let k = random_invertible_table(&mut rng, Side::Pairs, &ring, [deg.clone(), deg.clone()], &classes, 0, Some(8))
            .unwrap();
        let unknown = UnknownSpec { position: Position::Right, slots: vec![deg.clone()], classes: classes.clone(), order: None };
        let spec = PipelineSpec {
            nodes: vec![
                PipelineNode {
                    op: Op::Invert,
                    side: Side::Pairs,
                    inputs: vec!["Z".into(), "K".into()],
                    output: "U".into(),
                    rule: SplittingRule::Matching,
                    classes: None,
                    unknown: Some(unknown.clone()),
                },
                PipelineNode {
                    op: Op::Glue,
                    side: Side::Pairs,
                    inputs: vec!["X".into(), "K".into()],
                    output: "Z".into(),
                    rule: SplittingRule::Matching,
                    classes: None,
                    unknown: None,
                },
            ],
        };
        // X is one-slot; gluing with K (two slots) yields a one-slot Z
        let leaves = BTreeMap::from([("X".to_string(), x.clone()), ("K".to_string(), k.clone())]);
        let res = reduction_pipeline(&spec, &leaves).unwrap();
        assert_eq!(res.order, vec!["Z".to_string(), "U".to_string()]);
        let z = glue_table(&DegenerationStep::new(x, k.clone(), SplittingRule::Matching).unwrap(), None).unwrap();
        let u = invert_step(&z, &k, &unknown, &SplittingRule::Matching).unwrap();
        assert_same(&res.tables["U"], &u.table);
        assert!(res.residuals["U"].is_zero());
    }

    #[test]
    fn pipeline_errors() {
        let node = |i: &str, j: &str, o: &str| PipelineNode {
            op: Op::Glue,
            side: Side::Gw,
            inputs: vec![i.into(), j.into()],
            output: o.into(),
            rule: SplittingRule::Additive,
            classes: None,
            unknown: None,
        };
        let cyc = PipelineSpec { nodes: vec![node("B", "L", "A"), node("A", "L", "B")] };
        let leaves = BTreeSet::from(["L".to_string()]);
        assert!(matches!(cyc.schedule(&leaves), Err(Error::Cycle(_))));
        let missing = PipelineSpec { nodes: vec![node("L", "M", "A")] };
        match missing.schedule(&leaves) {
            Err(Error::MissingData(m)) => assert!(m.contains('M')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quintic_scheme_runs() {
        let ring = GradedRing::projective_space(1);
        for side in [Side::Gw, Side::Pairs] {
            let spec = quintic_scheme(side, 2, None);
            assert_eq!(spec.nodes.len(), 8);
            let leaves = synthetic_quintic_leaves(side, &ring, 2, 6, 1).unwrap();
            let res = reduction_pipeline(&spec, &leaves).unwrap();
            assert_eq!(res.order.last().map(String::as_str), Some("T5"));
            assert_eq!(res.residuals.len(), 4);
            assert!(res.residuals.values().all(ResidualReport::is_zero));
            assert_eq!(res.tables["T5"].classes().len(), 2);
        }
    }
}

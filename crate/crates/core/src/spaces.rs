//! Computable (extended) metric spaces given by an ideal-point indexing and
//! a distance oracle, plus point descriptions over them.
//!
//! Ideal ids are arbitrary naturals, so they are carried as [`BigUint`].
//! Every encoding below is a bijection between ids and the ideal objects:
//!
//! * pairs: Cantor pairing `⟨a, b⟩ = (a + b)(a + b + 1)/2 + b` when a factor
//!   is infinite, mixed radix when both are finite;
//! * lists over an infinite alphabet: `L([]) = 0`, `L(a :: r) = 1 + ⟨a, L(r)⟩`;
//! * lists over a finite alphabet of size `c`: bijective base `c`, first
//!   element least significant;
//! * finitely supported sequences in `ℕ^ℕ`: `0` is the zero sequence, `n ≥ 1`
//!   is the list `L⁻¹(n)` with its last entry incremented (so the last entry
//!   of the support is nonzero);
//! * finitely supported sequences in `2^ℕ`: the binary number with bit `i`
//!   equal to `s_i`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::{pow2_neg, DyadicInterval, ExactError, ExtendedClass, ExtendedReal, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("duplicate element {0} in discrete enumeration")]
    DuplicateElement(u64),
    #[error("distance did not resolve: {0}")]
    PrecisionExhausted(ExactError),
    #[error("distance between the described points is infinite")]
    InfiniteDistance,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdealId(pub BigUint);

impl IdealId {
    pub fn new(n: u64) -> Self {
        Self(BigUint::from(n))
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_usize(&self) -> Option<usize> {
        self.0.to_usize()
    }
}

impl From<u64> for IdealId {
    fn from(n: u64) -> Self {
        Self::new(n)
    }
}

impl From<BigUint> for IdealId {
    fn from(n: BigUint) -> Self {
        Self(n)
    }
}

impl fmt::Debug for IdealId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for IdealId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cantor pairing.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

/// Inverse of [`pair`].
pub fn unpair(n: &BigUint) -> (BigUint, BigUint) {
    let w = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = n - t;
    let a = w - &b;
    (a, b)
}

/// Cantor pairing on machine words; `None` on overflow.
pub fn pair_u64(a: u64, b: u64) -> Option<u64> {
    let s = a as u128 + b as u128;
    (s * (s + 1) / 2 + b as u128).try_into().ok()
}

pub fn unpair_u64(n: u64) -> (u64, u64) {
    let n = n as u128;
    let w = ((8 * n + 1).sqrt() - 1) / 2;
    let b = n - w * (w + 1) / 2;
    ((w - b) as u64, b as u64)
}

/// `L` code of a list over `ℕ`.
pub fn list_code(items: &[BigUint]) -> BigUint {
    items
        .iter()
        .rev()
        .fold(BigUint::zero(), |rest, a| pair(a, &rest) + 1u32)
}

pub fn list_decode(n: &BigUint) -> Vec<BigUint> {
    let mut out = Vec::new();
    let mut n = n.clone();
    while !n.is_zero() {
        let (a, rest) = unpair(&(n - 1u32));
        out.push(a);
        n = rest;
    }
    out
}

/// Bijective base-`c` code of a list over `[c]`; `c >= 1`.
pub fn bijective_code(items: &[BigUint], c: &BigUint) -> BigUint {
    items
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, d| acc * c + d + 1u32)
}

pub fn bijective_decode(n: &BigUint, c: &BigUint) -> Vec<BigUint> {
    let mut out = Vec::new();
    let mut n = n.clone();
    while !n.is_zero() {
        let (q, r) = (n - 1u32).div_rem(c);
        out.push(r);
        n = q;
    }
    out
}

fn trim_zeros(seq: &[u64]) -> &[u64] {
    let end = seq.iter().rposition(|&v| v != 0).map_or(0, |p| p + 1);
    &seq[..end]
}

/// Code of a finitely supported sequence in `ℕ^ℕ` (trailing zeros ignored).
///
/// After lowering the last nonzero entry by one, the list `a_0, .., a_k`
/// becomes the set of bit positions `p_j = a_0 + .. + a_j + j`. Code length
/// grows with the sum of the entries rather than doubling per entry.
pub fn baire_code(seq: &[u64]) -> BigUint {
    let seq = trim_zeros(seq);
    let mut code = BigUint::zero();
    let mut pos = 0u64;
    for (j, &v) in seq.iter().enumerate() {
        let a = if j + 1 == seq.len() { v - 1 } else { v };
        pos += a;
        code.set_bit(pos, true);
        pos += 1;
    }
    code
}

/// Support prefix of the sequence with the given code (no trailing zeros).
pub fn baire_decode(n: &BigUint) -> Vec<BigUint> {
    let mut items = Vec::new();
    let mut next = 0u64;
    for pos in 0..n.bits() {
        if n.bit(pos) {
            items.push(BigUint::from(pos - next));
            next = pos + 1;
        }
    }
    if let Some(last) = items.last_mut() {
        *last += 1u32;
    }
    items
}

pub fn cantor_code(bits: &[bool]) -> BigUint {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(BigUint::zero(), |acc, (i, _)| acc | (BigUint::one() << i))
}

pub fn cantor_bit(code: &BigUint, i: u64) -> bool {
    code.bit(i)
}

type DistanceFn = dyn Fn(&IdealId, &IdealId) -> ExtendedReal + Send + Sync;

/// A computable (extended) metric space: ideal points indexed by naturals
/// and a distance oracle returning extended-real presentations.
#[derive(Clone)]
pub struct MetricSpace {
    label: String,
    ideal_count: Option<BigUint>,
    distance: Arc<DistanceFn>,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace")
            .field("label", &self.label)
            .field("ideal_count", &self.ideal_count)
            .finish()
    }
}

impl MetricSpace {
    pub fn new(
        label: impl Into<String>,
        ideal_count: Option<BigUint>,
        distance: impl Fn(&IdealId, &IdealId) -> ExtendedReal + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            ideal_count,
            distance: Arc::new(distance),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `None` for countably infinite.
    pub fn ideal_count(&self) -> Option<&BigUint> {
        self.ideal_count.as_ref()
    }

    pub fn is_ideal(&self, id: &IdealId) -> bool {
        self.ideal_count.as_ref().is_none_or(|c| &id.0 < c)
    }

    pub fn distance(&self, a: &IdealId, b: &IdealId) -> ExtendedReal {
        (self.distance)(a, b)
    }

    pub fn distance_at(&self, a: &IdealId, b: &IdealId, depth: u32) -> Result<ExtendedClass, ExactError> {
        self.distance(a, b).classify(depth)
    }
}

fn exact_distance(q: Rational) -> ExtendedReal {
    ExtendedReal::finite(q)
}

fn zero_one(equal: bool) -> ExtendedReal {
    exact_distance(if equal { Rational::zero() } else { Rational::one() })
}

/// A discrete space over an injective finite list of naturals.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    elements: Vec<u64>,
    index: std::collections::HashMap<u64, u64>,
}

impl DiscreteSpace {
    pub fn new(elements: Vec<u64>) -> Result<Self, SpaceError> {
        let mut index = std::collections::HashMap::with_capacity(elements.len());
        for (i, &e) in elements.iter().enumerate() {
            if index.insert(e, i as u64).is_some() {
                return Err(SpaceError::DuplicateElement(e));
            }
        }
        Ok(Self { elements, index })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn element(&self, id: &IdealId) -> Option<u64> {
        self.elements.get(id.to_usize()?).copied()
    }

    pub fn id_of(&self, element: u64) -> Option<IdealId> {
        self.index.get(&element).map(|&i| IdealId::new(i))
    }

    pub fn metric(&self) -> MetricSpace {
        MetricSpace::new(
            "discrete",
            Some(BigUint::from(self.elements.len())),
            |a, b| zero_one(a == b),
        )
    }
}

/// Discrete metric on an injective list of naturals.
pub fn discrete_space(enumeration: Vec<u64>) -> Result<MetricSpace, SpaceError> {
    Ok(DiscreteSpace::new(enumeration)?.metric())
}

/// Discrete metric on all of `ℕ`, ideal `n` being `n`.
pub fn discrete_naturals() -> MetricSpace {
    MetricSpace::new("discrete-naturals", None, |a, b| zero_one(a == b))
}

fn first_disagreement<T: PartialEq + Zero>(a: &[T], b: &[T]) -> Option<usize> {
    let zero = T::zero();
    let n = a.len().max(b.len());
    (0..n).find(|&i| a.get(i).unwrap_or(&zero) != b.get(i).unwrap_or(&zero))
}

fn ultrametric(k: Option<usize>) -> ExtendedReal {
    match k {
        None => exact_distance(Rational::zero()),
        Some(k) => exact_distance(pow2_neg(k as u32)),
    }
}

pub fn baire_space() -> MetricSpace {
    MetricSpace::new("baire", None, |a, b| {
        ultrametric(first_disagreement(&baire_decode(&a.0), &baire_decode(&b.0)))
    })
}

pub fn cantor_space() -> MetricSpace {
    MetricSpace::new("cantor", None, |a, b| {
        let x = &a.0 ^ &b.0;
        ultrametric(x.trailing_zeros().map(|k| k as usize))
    })
}

/// How product ids split into coordinate ids.
#[derive(Debug, Clone)]
pub enum ProductCoding {
    Cantor,
    /// First factor finite with the given size.
    FirstFinite(BigUint),
    /// Second factor finite with the given size.
    SecondFinite(BigUint),
}

impl ProductCoding {
    fn for_counts(a: Option<&BigUint>, b: Option<&BigUint>) -> Self {
        match (a, b) {
            (_, Some(nb)) if !nb.is_zero() => Self::SecondFinite(nb.clone()),
            (Some(na), None) if !na.is_zero() => Self::FirstFinite(na.clone()),
            _ => Self::Cantor,
        }
    }

    pub fn decode(&self, id: &IdealId) -> (IdealId, IdealId) {
        let (a, b) = match self {
            Self::Cantor => unpair(&id.0),
            Self::FirstFinite(na) => {
                let (q, r) = id.0.div_rem(na);
                (r, q)
            }
            Self::SecondFinite(nb) => id.0.div_rem(nb),
        };
        (IdealId(a), IdealId(b))
    }

    pub fn encode(&self, a: &IdealId, b: &IdealId) -> IdealId {
        IdealId(match self {
            Self::Cantor => pair(&a.0, &b.0),
            Self::FirstFinite(na) => &b.0 * na + &a.0,
            Self::SecondFinite(nb) => &a.0 * nb + &b.0,
        })
    }
}

/// Product space with the max metric. Returns the space and its id coding.
pub fn product_space(a: &MetricSpace, b: &MetricSpace) -> (MetricSpace, ProductCoding) {
    let coding = ProductCoding::for_counts(a.ideal_count(), b.ideal_count());
    let count = match (a.ideal_count(), b.ideal_count()) {
        (Some(x), Some(y)) => Some(x * y),
        _ => None,
    };
    let (da, db, c) = (a.clone(), b.clone(), coding.clone());
    let space = MetricSpace::new(
        format!("{} x {}", a.label(), b.label()),
        count,
        move |x, y| {
            let (x0, x1) = c.decode(x);
            let (y0, y1) = c.decode(y);
            da.distance(&x0, &y0).max(&db.distance(&x1, &y1))
        },
    );
    (space, coding)
}

/// How finite-sequence ids map to lists of base ids.
#[derive(Debug, Clone)]
pub enum SeqCoding {
    Infinite,
    Finite(BigUint),
}

impl SeqCoding {
    pub fn decode(&self, id: &IdealId) -> Vec<IdealId> {
        let raw = match self {
            Self::Infinite => list_decode(&id.0),
            Self::Finite(c) => bijective_decode(&id.0, c),
        };
        raw.into_iter().map(IdealId).collect()
    }

    pub fn encode(&self, items: &[IdealId]) -> IdealId {
        let raw: Vec<BigUint> = items.iter().map(|i| i.0.clone()).collect();
        IdealId(match self {
            Self::Infinite => list_code(&raw),
            Self::Finite(c) => bijective_code(&raw, c),
        })
    }
}

/// Space of finite sequences: max metric on equal lengths, `∞` otherwise.
pub fn finseq_space(base: &MetricSpace) -> (MetricSpace, SeqCoding) {
    let coding = match base.ideal_count() {
        Some(c) if !c.is_zero() => SeqCoding::Finite(c.clone()),
        _ => SeqCoding::Infinite,
    };
    let (b, c) = (base.clone(), coding.clone());
    let space = MetricSpace::new(format!("seq({})", base.label()), None, move |x, y| {
        let (xs, ys) = (c.decode(x), c.decode(y));
        if xs.len() != ys.len() {
            return ExtendedReal::infinity();
        }
        xs.iter()
            .zip(&ys)
            .map(|(p, q)| b.distance(p, q))
            .reduce(|acc, d| acc.max(&d))
            .unwrap_or_else(ExtendedReal::zero)
    });
    (space, coding)
}

/// The real line with a finite list of distinct rationals as ideal points.
pub fn real_line(points: Vec<Rational>) -> MetricSpace {
    let count = BigUint::from(points.len());
    let points = Arc::new(points);
    MetricSpace::new("reals", Some(count), move |a, b| {
        let get = |id: &IdealId| id.to_usize().and_then(|i| points.get(i)).cloned();
        match (get(a), get(b)) {
            (Some(x), Some(y)) => exact_distance(num_traits::Signed::abs(&(x - y))),
            _ => ExtendedReal::infinity(),
        }
    })
}

type IdealAt = dyn Fn(u32) -> IdealId + Send + Sync;

/// A point given by a rapidly converging sequence of ideal ids.
#[derive(Clone)]
pub struct PointDescription {
    ideal_at: Arc<IdealAt>,
}

impl fmt::Debug for PointDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({:?}..)", self.ideal_at(4))
    }
}

impl PointDescription {
    pub fn from_fn(f: impl Fn(u32) -> IdealId + Send + Sync + 'static) -> Self {
        Self { ideal_at: Arc::new(f) }
    }

    pub fn constant(id: IdealId) -> Self {
        Self::from_fn(move |_| id.clone())
    }

    pub fn ideal_at(&self, i: u32) -> IdealId {
        (self.ideal_at)(i)
    }

    /// A point of `ℕ^ℕ`; precision `i` fixes the first `i + 1` coordinates.
    pub fn baire(seq: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        Self::from_fn(move |i| {
            let prefix: Vec<u64> = (0..=i as u64).map(&seq).collect();
            IdealId(baire_code(&prefix))
        })
    }

    /// A point of `2^ℕ`; precision `i` fixes the first `i + 1` bits.
    pub fn cantor(bits: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Self::from_fn(move |i| {
            let prefix: Vec<bool> = (0..=i as u64).map(&bits).collect();
            IdealId(cantor_code(&prefix))
        })
    }

    /// Coordinatewise description in a product space.
    pub fn product(coding: ProductCoding, a: PointDescription, b: PointDescription) -> Self {
        Self::from_fn(move |i| coding.encode(&a.ideal_at(i), &b.ideal_at(i)))
    }

    /// Coordinatewise description in a finite-sequence space.
    pub fn finseq(coding: SeqCoding, items: Vec<PointDescription>) -> Self {
        Self::from_fn(move |i| {
            let ids: Vec<IdealId> = items.iter().map(|p| p.ideal_at(i)).collect();
            coding.encode(&ids)
        })
    }
}

/// Interval of width at most `2^(2 - precision)` containing `d(p, q)`.
pub fn point_distance(
    space: &MetricSpace,
    p: &PointDescription,
    q: &PointDescription,
    precision: u32,
) -> Result<DyadicInterval, SpaceError> {
    // d(p, q) lies within 2 * 2^-(n) of d(p_n, q_n); the distance itself is
    // read at depth n, which adds another 2^-n
    let n = precision + 1;
    let class = space
        .distance_at(&p.ideal_at(n), &q.ideal_at(n), n)
        .map_err(SpaceError::PrecisionExhausted)?;
    match class {
        ExtendedClass::Infinite => Err(SpaceError::InfiniteDistance),
        ExtendedClass::Finite(iv) => {
            let widened = iv.widen(&pow2_neg(precision));
            let lo = widened.lo().clone().max(Rational::zero());
            let hi = widened.hi().clone().max(Rational::zero());
            Ok(DyadicInterval::new(lo, hi).expect("widened interval is ordered"))
        }
    }
}

/// Checks the rapid Cauchy condition on ideal ids for the given index pairs.
/// Returns the first pair whose distance is not certified below `2^-i`.
pub fn check_point_description(
    space: &MetricSpace,
    p: &PointDescription,
    pairs: &[(u32, u32)],
) -> Result<(), (u32, u32)> {
    for &(a, b) in pairs {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        if i == j {
            continue;
        }
        let bound = pow2_neg(i);
        let ok = match space.distance_at(&p.ideal_at(i), &p.ideal_at(j), j + 2) {
            Ok(ExtendedClass::Finite(iv)) => iv.hi() < &bound,
            _ => false,
        };
        if !ok {
            return Err((i, j));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricViolation {
    Identity,
    Symmetry,
    Triangle,
    Invalid(ExactError),
}

/// Identity, symmetry and the interval triangle inequality on one triple.
pub fn check_metric_triple(
    space: &MetricSpace,
    a: &IdealId,
    b: &IdealId,
    c: &IdealId,
    depth: u32,
) -> Result<(), MetricViolation> {
    let ids = [a, b, c];
    let mut memo: [[Option<ExtendedClass>; 3]; 3] = Default::default();
    let mut d = |x: usize, y: usize| -> Result<ExtendedClass, MetricViolation> {
        if memo[x][y].is_none() {
            memo[x][y] = Some(space.distance_at(ids[x], ids[y], depth).map_err(MetricViolation::Invalid)?);
        }
        Ok(memo[x][y].clone().unwrap())
    };
    for x in 0..3 {
        match d(x, x)? {
            ExtendedClass::Finite(iv) if iv.contains(&Rational::zero()) => {}
            _ => return Err(MetricViolation::Identity),
        }
    }
    for (x, y) in [(0, 1), (1, 2), (0, 2)] {
        let agree = match (d(x, y)?, d(y, x)?) {
            (ExtendedClass::Infinite, ExtendedClass::Infinite) => true,
            (ExtendedClass::Finite(u), ExtendedClass::Finite(v)) => u.intersects(&v),
            _ => false,
        };
        if !agree {
            return Err(MetricViolation::Symmetry);
        }
    }
    for (x, y, z) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let lhs = d(x, z)?;
        let (l, r) = (d(x, y)?, d(y, z)?);
        let holds = match (lhs, l, r) {
            (_, ExtendedClass::Infinite, _) | (_, _, ExtendedClass::Infinite) => true,
            // a finite d(x, z) <= u + v is seen as finite once depth >= u + v + 1
            (ExtendedClass::Infinite, ExtendedClass::Finite(u), ExtendedClass::Finite(v)) => {
                u.hi() + v.hi() + Rational::one() > Rational::from_integer(depth.into())
            }
            (ExtendedClass::Finite(s), ExtendedClass::Finite(u), ExtendedClass::Finite(v)) => {
                s.lo() <= &(u.hi() + v.hi())
            }
        };
        if !holds {
            return Err(MetricViolation::Triangle);
        }
    }
    Ok(())
}

/// A feature paired with a label bit.
#[derive(Debug, Clone)]
pub struct LabeledExample<F> {
    pub feature: F,
    pub label: bool,
}

impl<F> LabeledExample<F> {
    pub fn new(feature: F, label: bool) -> Self {
        Self { feature, label }
    }
}

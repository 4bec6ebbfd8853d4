//! Hypothesis-class presentations as monotone precision-query evaluators,
//! the concrete classes used by the learners, and brute-force behavior,
//! shattering and VC machinery.

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{rat, real_from_rational, Rational, RealStream};
use crate::machines::{
    execute, halt_time_equiv, HaltingEnumeration, MachineError, OracleTape, PartialOutcome,
    Program,
};
use crate::spaces::{
    baire_space, discrete_naturals, discrete_space, product_space, real_line, IdealId,
    MetricSpace, PointDescription, ProductCoding,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypothesisError {
    #[error("evaluation unresolved at precision cap {cap}")]
    PrecisionExhausted { cap: u32 },
    #[error(transparent)]
    IndexNotHalting(#[from] MachineError),
    #[error("enumeration repeats {0}")]
    DuplicateRational(String),
}

/// A presentation `h: I × X → {0, 1}` of a hypothesis class.
///
/// `query` answers for the ball of radius `2^-k` around the precision-`k`
/// approximations of both arguments: `Some(b)` when every pair of points in
/// the balls maps to `b`, `None` otherwise. [`Presentation::evaluate`] scans
/// precisions upward, so once it resolves the answer never changes.
pub trait Presentation: Send + Sync {
    type Index: Clone + Send + Sync;
    type Feature: Clone + Send + Sync;

    fn label(&self) -> &str;
    fn index_space(&self) -> &MetricSpace;
    fn sample_space(&self) -> &MetricSpace;

    /// Number of ideal index points available, `None` if unbounded.
    fn ideal_count(&self) -> Option<u64>;

    /// The index point with ideal id `id`.
    fn ideal_index(&self, id: u64) -> Self::Index;

    fn query(
        &self,
        index: &Self::Index,
        feature: &Self::Feature,
        k: u32,
    ) -> Result<Option<bool>, HypothesisError>;

    fn evaluate(
        &self,
        index: &Self::Index,
        feature: &Self::Feature,
        k: u32,
    ) -> Result<Option<bool>, HypothesisError> {
        for j in 0..=k {
            if let Some(b) = self.query(index, feature, j)? {
                return Ok(Some(b));
            }
        }
        Ok(None)
    }

    /// Ideal ids below `budget` (clipped to the class size).
    fn ideal_range(&self, budget: u64) -> std::ops::Range<u64> {
        0..self.ideal_count().map_or(budget, |c| c.min(budget))
    }
}

/// `h(i, x)`, refined up to `cap`.
pub fn eval<P: Presentation + ?Sized>(
    h: &P,
    index: &P::Index,
    feature: &P::Feature,
    cap: u32,
) -> Result<bool, HypothesisError> {
    h.evaluate(index, feature, cap)?
        .ok_or(HypothesisError::PrecisionExhausted { cap })
}

/// Rationals ordered by height `max(|p|, q)`; within a height positives
/// ascend and each is followed by its negation: `0, 1, -1, 1/2, -1/2, 2, -2,
/// 1/3, -1/3, 2/3, -2/3, 3/2, ...`.
pub fn rationals_by_height(max_height: u64) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    for h in 1..=max_height as i64 {
        let mut level: Vec<Rational> = Vec::new();
        for q in 1..=h {
            if q.gcd(&h) == 1 {
                level.push(rat(q, h));
                if q != h {
                    level.push(rat(h, q));
                }
            }
        }
        level.sort();
        for v in level {
            out.push(v.clone());
            out.push(-v);
        }
    }
    out
}

/// First `n` rationals of [`rationals_by_height`].
pub fn default_rationals(n: usize) -> Vec<Rational> {
    let mut h = 1;
    loop {
        let v = rationals_by_height(h);
        if v.len() >= n {
            return v.into_iter().take(n).collect();
        }
        h *= 2;
    }
}

/// Moves `1/3` to the front (inserting it if absent).
pub fn third_first(mut enumeration: Vec<Rational>) -> Vec<Rational> {
    let third = rat(1, 3);
    enumeration.retain(|q| q != &third);
    enumeration.insert(0, third);
    enumeration
}

/// Threshold class `x ↦ [x > c]` indexed by a list of distinct rationals.
pub struct StumpPresentation {
    cutoffs: Vec<Rational>,
    space: MetricSpace,
}

impl StumpPresentation {
    pub fn new(enumeration: Vec<Rational>) -> Result<Self, HypothesisError> {
        let mut seen = HashSet::with_capacity(enumeration.len());
        for q in &enumeration {
            if !seen.insert(q.clone()) {
                return Err(HypothesisError::DuplicateRational(q.to_string()));
            }
        }
        Ok(Self {
            space: real_line(enumeration.clone()),
            cutoffs: enumeration,
        })
    }

    pub fn cutoffs(&self) -> &[Rational] {
        &self.cutoffs
    }

    pub fn cutoff(&self, id: u64) -> &Rational {
        &self.cutoffs[id as usize]
    }
}

pub fn stump_presentation(enumeration: Vec<Rational>) -> Result<StumpPresentation, HypothesisError> {
    StumpPresentation::new(enumeration)
}

/// Resolution of `[x > c]` given precision-`k` approximants of both.
pub fn stump_query(c: &Rational, x: &Rational, k: u32) -> Option<bool> {
    // x_k - c_k against the combined radius 2^(1-k), cross-multiplied:
    // gap = (x_n c_d - c_n x_d) / (x_d c_d) with positive denominators
    let gap = x.numer() * c.denom() - c.numer() * x.denom();
    let scaled = gap << k;
    let bound = (x.denom() * c.denom()) << 1u32;
    if scaled > bound {
        Some(true)
    } else if scaled < -bound {
        Some(false)
    } else {
        None
    }
}

impl Presentation for StumpPresentation {
    type Index = RealStream;
    type Feature = RealStream;

    fn label(&self) -> &str {
        "stump"
    }

    fn index_space(&self) -> &MetricSpace {
        &self.space
    }

    fn sample_space(&self) -> &MetricSpace {
        &self.space
    }

    fn ideal_count(&self) -> Option<u64> {
        Some(self.cutoffs.len() as u64)
    }

    fn ideal_index(&self, id: u64) -> RealStream {
        real_from_rational(self.cutoff(id).clone())
    }

    fn query(&self, c: &RealStream, x: &RealStream, k: u32) -> Result<Option<bool>, HypothesisError> {
        Ok(stump_query(&c.approximant(k), &x.approximant(k), k))
    }
}

/// `h(x, n) = x(n)` with index space `2^ℕ`.
pub struct ApplyPresentation {
    index: MetricSpace,
    sample: MetricSpace,
}

pub fn apply_presentation() -> ApplyPresentation {
    ApplyPresentation {
        index: crate::spaces::cantor_space(),
        sample: discrete_naturals(),
    }
}

impl Presentation for ApplyPresentation {
    type Index = PointDescription;
    type Feature = u64;

    fn label(&self) -> &str {
        "apply"
    }

    fn index_space(&self) -> &MetricSpace {
        &self.index
    }

    fn sample_space(&self) -> &MetricSpace {
        &self.sample
    }

    fn ideal_count(&self) -> Option<u64> {
        None
    }

    /// The finitely supported sequence whose Cantor code is `id`.
    fn ideal_index(&self, id: u64) -> PointDescription {
        PointDescription::constant(IdealId::new(id))
    }

    fn query(&self, x: &PointDescription, n: &u64, k: u32) -> Result<Option<bool>, HypothesisError> {
        // the ball of radius 2^-k around x_k fixes coordinates 0..=k
        if *n > k as u64 {
            return Ok(None);
        }
        Ok(Some(x.ideal_at(k).0.bit(*n)))
    }
}

/// Programs with equal halt time on input 0, indexed by halting programs.
pub struct HaltingPresentation {
    programs: Vec<u64>,
    s_max: u64,
    index: MetricSpace,
    sample: MetricSpace,
}

pub fn halting_presentation(halting: &HaltingEnumeration) -> HaltingPresentation {
    let programs: Vec<u64> = halting.entries.iter().map(|e| e.program).collect();
    HaltingPresentation {
        index: discrete_space(programs.clone()).expect("enumeration has no repeats"),
        sample: discrete_space((0..=halting.p_max).collect()).expect("range has no repeats"),
        programs,
        s_max: halting.s_max,
    }
}

impl HaltingPresentation {
    pub fn programs(&self) -> &[u64] {
        &self.programs
    }

    pub fn s_max(&self) -> u64 {
        self.s_max
    }
}

impl Presentation for HaltingPresentation {
    type Index = u64;
    type Feature = u64;

    fn label(&self) -> &str {
        "halting"
    }

    fn index_space(&self) -> &MetricSpace {
        &self.index
    }

    fn sample_space(&self) -> &MetricSpace {
        &self.sample
    }

    fn ideal_count(&self) -> Option<u64> {
        Some(self.programs.len() as u64)
    }

    fn ideal_index(&self, id: u64) -> u64 {
        self.programs[id as usize]
    }

    fn query(&self, n0: &u64, n1: &u64, _k: u32) -> Result<Option<bool>, HypothesisError> {
        Ok(Some(halt_time_equiv(*n0, *n1, self.s_max)?))
    }
}

/// A program paired with a finite-support oracle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OraclePoint {
    pub program: u64,
    pub oracle: OracleTape,
}

impl OraclePoint {
    pub fn new(program: u64, oracle: OracleTape) -> Self {
        Self { program, oracle }
    }
}

#[derive(Debug, Clone)]
pub struct OracleIdeal {
    pub point: OraclePoint,
    pub oracle_code: u64,
    pub halt_steps: u64,
}

/// `(e0, z0) ~ (e1, z1)` iff `e0 = e1` and both halt on 0 in the same number
/// of steps. Ideal points are the halting pairs over the given programs and
/// oracle codes, ordered by halt time, then program, then oracle code.
pub struct OracleHaltingPresentation {
    ideals: Vec<OracleIdeal>,
    s_max: u64,
    index: MetricSpace,
    sample: MetricSpace,
    coding: ProductCoding,
}

pub fn oracle_halting_presentation(
    programs: &[u64],
    oracle_codes: u64,
    s_max: u64,
) -> OracleHaltingPresentation {
    let tapes: Vec<OracleTape> = (0..oracle_codes).map(OracleTape::nth).collect();
    let mut ideals: Vec<OracleIdeal> = programs
        .par_iter()
        .flat_map_iter(|&e| {
            let prog = Program::decode(e);
            tapes
                .iter()
                .enumerate()
                .filter_map(|(code, z)| {
                    match execute(&prog, 0, s_max, |c| Some(z.get(c))) {
                        PartialOutcome::Done(o) => o.steps().map(|halt_steps| OracleIdeal {
                            point: OraclePoint::new(e, z.clone()),
                            oracle_code: code as u64,
                            halt_steps,
                        }),
                        PartialOutcome::Blocked { .. } => None,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    ideals.sort_by_key(|d| (d.halt_steps, d.point.program, d.oracle_code));
    let (sample, coding) = product_space(&discrete_naturals(), &baire_space());
    let pairs: Vec<IdealId> = ideals
        .iter()
        .map(|d| coding.encode(&IdealId::new(d.point.program), &IdealId(d.point.oracle.baire_code())))
        .collect();
    let (metric, pairs) = (sample.clone(), std::sync::Arc::new(pairs));
    let index = MetricSpace::new(
        "oracle-halting-index",
        Some(pairs.len().into()),
        move |a, b| {
            let get = |id: &IdealId| pairs[id.to_usize().expect("ideal id in range")].clone();
            metric.distance(&get(a), &get(b))
        },
    );
    OracleHaltingPresentation {
        ideals,
        s_max,
        index,
        sample,
        coding,
    }
}

impl OracleHaltingPresentation {
    pub fn ideals(&self) -> &[OracleIdeal] {
        &self.ideals
    }

    pub fn s_max(&self) -> u64 {
        self.s_max
    }

    pub fn coding(&self) -> &ProductCoding {
        &self.coding
    }

    /// Halt time of `e` relative to `z`, or `IndexNotHalting`.
    pub fn halt_time(&self, p: &OraclePoint) -> Result<u64, HypothesisError> {
        crate::machines::run_oracle(p.program, &p.oracle, 0, self.s_max)
            .steps()
            .ok_or(HypothesisError::IndexNotHalting(MachineError::IndexNotHalting {
                program: p.program,
                budget: self.s_max,
            }))
    }
}

impl Presentation for OracleHaltingPresentation {
    type Index = OraclePoint;
    type Feature = OraclePoint;

    fn label(&self) -> &str {
        "oracle-halting"
    }

    fn index_space(&self) -> &MetricSpace {
        &self.index
    }

    fn sample_space(&self) -> &MetricSpace {
        &self.sample
    }

    fn ideal_count(&self) -> Option<u64> {
        Some(self.ideals.len() as u64)
    }

    fn ideal_index(&self, id: u64) -> OraclePoint {
        self.ideals[id as usize].point.clone()
    }

    /// The feature's oracle is known only on cells `< k` at precision `k`.
    fn query(&self, i: &OraclePoint, x: &OraclePoint, k: u32) -> Result<Option<bool>, HypothesisError> {
        if i.program != x.program {
            return Ok(Some(false));
        }
        let t = self.halt_time(i)?;
        let prog = Program::decode(x.program);
        let reveal = |c: u64| (c < k as u64).then(|| x.oracle.get(c));
        Ok(match execute(&prog, 0, t, reveal) {
            PartialOutcome::Blocked { .. } => None,
            PartialOutcome::Done(o) => Some(o.steps() == Some(t)),
        })
    }
}

/// Label matrix `rows[c][u] = h(c, U[u])` for ideal ids `0..budget`.
pub fn trace_matrix<P: Presentation>(
    h: &P,
    features: &[P::Feature],
    ideal_budget: u64,
    cap: u32,
) -> Result<Vec<Vec<bool>>, HypothesisError> {
    h.ideal_range(ideal_budget)
        .into_par_iter()
        .map(|c| {
            let idx = h.ideal_index(c);
            features.iter().map(|x| eval(h, &idx, x, cap)).collect()
        })
        .collect()
}

/// Distinct behaviors on `U` with the least ideal id realizing each.
pub fn behaviors_on<P: Presentation>(
    h: &P,
    features: &[P::Feature],
    ideal_budget: u64,
    cap: u32,
) -> Result<BTreeMap<Vec<bool>, u64>, HypothesisError> {
    let rows = trace_matrix(h, features, ideal_budget, cap)?;
    Ok(first_witnesses(rows.into_iter()))
}

fn first_witnesses(rows: impl Iterator<Item = Vec<bool>>) -> BTreeMap<Vec<bool>, u64> {
    let mut out = BTreeMap::new();
    for (c, row) in rows.enumerate() {
        out.entry(row).or_insert(c as u64);
    }
    out
}

fn projection_count(rows: &[Vec<bool>], cols: &[usize]) -> usize {
    rows.iter()
        .map(|r| cols.iter().map(|&j| r[j]).collect::<Vec<bool>>())
        .collect::<HashSet<_>>()
        .len()
}

pub fn shatters<P: Presentation>(
    h: &P,
    set: &[P::Feature],
    ideal_budget: u64,
    cap: u32,
) -> Result<bool, HypothesisError> {
    let n = behaviors_on(h, set, ideal_budget, cap)?.len();
    Ok(set.len() < usize::BITS as usize && n == 1usize << set.len())
}

/// Largest `d <= d_max` such that some `d`-subset of `pool` is shattered by
/// ideals below `ideal_budget`. Budget-relative lower bound.
pub fn vc_lower_bound<P: Presentation>(
    h: &P,
    pool: &[P::Feature],
    d_max: usize,
    ideal_budget: u64,
    cap: u32,
) -> Result<usize, HypothesisError> {
    let rows = trace_matrix(h, pool, ideal_budget, cap)?;
    Ok(vc_from_rows(&rows, pool.len(), d_max))
}

/// VC lower bound from a precomputed trace matrix.
pub fn vc_from_rows(rows: &[Vec<bool>], pool_len: usize, d_max: usize) -> usize {
    let mut best = 0;
    for d in 1..=d_max.min(pool_len) {
        let found = (0..pool_len)
            .combinations(d)
            .any(|cols| projection_count(rows, &cols) == 1 << d);
        if !found {
            break;
        }
        best = d;
    }
    best
}

/// Whether some `d`-subset of the pool is shattered, per the trace matrix.
pub fn some_subset_shattered(rows: &[Vec<bool>], pool_len: usize, d: usize) -> bool {
    (0..pool_len)
        .combinations(d)
        .any(|cols| projection_count(rows, &cols) == 1 << d)
}

/// `Σ_{i=0..d} C(m, i)`.
pub fn sauer_bound(d: u64, m: u64) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=d.min(m) {
        total += binom;
        binom = binom * (m - i) as u128 / (i + 1) as u128;
    }
    total
}

/// Whether `r` is the exact value `1/3` (used by enumeration checks).
pub fn is_third(r: &Rational) -> bool {
    r.numer() == &BigInt::one() && r.denom() == &BigInt::from(3) && r.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{generic_real, int, DyadicInterval};
    use crate::machines::{enumerate_halting, loop_program};

    #[test]
    fn rational_order() {
        let v = rationals_by_height(3);
        let expect = [
            int(0), int(1), int(-1), rat(1, 2), rat(-1, 2), int(2), int(-2), rat(1, 3),
            rat(-1, 3), rat(2, 3), rat(-2, 3), rat(3, 2), rat(-3, 2), int(3), int(-3),
        ];
        assert_eq!(v, expect);
        assert_eq!(third_first(v.clone())[0], rat(1, 3));
        assert_eq!(third_first(v.clone()).len(), v.len());
        assert!(StumpPresentation::new(vec![int(1), int(1)]).is_err());
    }

    #[test]
    fn stump_eval_examples() {
        let h = StumpPresentation::new(default_rationals(50)).unwrap();
        let half = real_from_rational(rat(1, 2));
        assert!(eval(&h, &half, &generic_real(rat(3, 4), 8), 64).unwrap());
        assert!(!eval(&h, &half, &generic_real(rat(1, 4), 8), 64).unwrap());
        // an x whose interval at the query precision is [1/4, 3/4]
        let wide = crate::exact::RealStream::from_fn(|_| rat(1, 2));
        assert_eq!(h.query(&half, &wide, 2).unwrap(), None);
        let narrow = DyadicInterval::new(rat(3, 4), rat(7, 8)).unwrap();
        assert_eq!(stump_query(&rat(1, 2), &((narrow.lo() + narrow.hi()) / int(2)), 5), Some(true));
    }

    #[test]
    fn apply_examples() {
        let h = apply_presentation();
        let ones = PointDescription::cantor(|_| true);
        let zeros = PointDescription::cantor(|_| false);
        assert!(eval(&h, &ones, &5, 64).unwrap());
        assert!(!eval(&h, &zeros, &0, 64).unwrap());
        let x = PointDescription::cantor(|i| i == 2 || i == 0);
        assert!(eval(&h, &x, &2, 64).unwrap());
        assert_eq!(h.query(&ones, &7, 3).unwrap(), None);
        let all = behaviors_on(&h, &[4], 64, 64).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(vc_lower_bound(&h, &[0, 1, 2], 3, 8, 16).unwrap(), 3);
    }

    #[test]
    fn halting_examples() {
        let en = enumerate_halting(256, 10_000);
        let h = halting_presentation(&en);
        assert!(eval(&h, &1, &1, 4).unwrap());
        assert!(!eval(&h, &1, &loop_program(), 4).unwrap());
        let two = en.entries.iter().find(|e| e.halt_steps == 2).unwrap().program;
        assert!(!eval(&h, &1, &two, 4).unwrap());
        assert!(matches!(eval(&h, &loop_program(), &1, 4), Err(HypothesisError::IndexNotHalting(_))));
    }

    #[test]
    fn oracle_halting_examples() {
        let progs = crate::machines::oracle_programs();
        let h = oracle_halting_presentation(&progs, 64, 500);
        let ideal = h.ideal_index(0);
        assert!(eval(&h, &ideal, &ideal, 64).unwrap());
        let other = h.ideals().iter().find(|d| d.point.program != ideal.program).unwrap();
        assert!(!eval(&h, &ideal, &other.point, 64).unwrap());
        // counts down z(0): oracles with different z(0) change the halt time
        let counter = progs[2];
        let a = OraclePoint::new(counter, OracleTape::from_pairs([(0, 2)]));
        let b = OraclePoint::new(counter, OracleTape::from_pairs([(0, 3)]));
        assert!(!eval(&h, &a, &b, 64).unwrap());
        assert_eq!(h.query(&a, &b, 0).unwrap(), None);
        let steps: Vec<u64> = h.ideals().iter().map(|d| d.halt_steps).collect();
        assert!(steps.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn stump_behaviors_match_sauer() {
        let h = StumpPresentation::new(default_rationals(200)).unwrap();
        let u: Vec<RealStream> = [1, 3, 5].iter().map(|&k| generic_real(rat(k, 8), 10)).collect();
        assert_eq!(behaviors_on(&h, &u, 200, 64).unwrap().len(), 4);
        assert!(behaviors_on(&h, &u[..1], 200, 64).unwrap().len() <= 2);
        assert!(!shatters(&h, &u[..2], 200, 64).unwrap());
        assert!(shatters(&h, &u[..1], 200, 64).unwrap());
    }

    #[test]
    fn sauer_examples() {
        assert_eq!(sauer_bound(1, 5), 6);
        assert_eq!(sauer_bound(0, 7), 1);
        assert_eq!(sauer_bound(9, 6), 64);
        assert_eq!(sauer_bound(2, 10), 1 + 10 + 45);
    }
}

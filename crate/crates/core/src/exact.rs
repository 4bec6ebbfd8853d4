//! Exact rational arithmetic, rational intervals and rapidly converging
//! Cauchy streams.
//!
//! Nothing in this module rounds. A [`RealStream`] is a pure function from a
//! precision index `i` to a rational `q_i` with `|q_i - q_j| < 2^-i` for all
//! `i < j`, so the closed interval `[q_i - 2^-i, q_i + 2^-i]` always contains
//! the limit.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number in canonical form (positive denominator, reduced).
pub type Rational = BigRational;

/// Default number of refinement steps for precision-capped comparisons.
pub const DEFAULT_CAP: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("invalid extended-real presentation: |q_{i} - q_{j}| >= 2^-{i} and q_{k} <= {k}")]
    InvalidPresentation { i: u32, j: u32, k: u32 },
    #[error("interval lower bound exceeds upper bound")]
    InvertedInterval,
    #[error("logarithm of a non-positive rational")]
    NonPositiveLogArgument,
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("value not resolved within {0} bits of precision")]
    Unresolved(u32),
}

/// `n/d` as a canonical rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-i`.
pub fn pow2_neg(i: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << i)
}

/// `floor(2^l * q) / 2^l`, the largest dyadic of precision `l` not above `q`.
pub fn floor_dyadic(q: &Rational, l: u32) -> Rational {
    let scale = BigInt::one() << l;
    let scaled = q * Rational::from_integer(scale.clone());
    Rational::new(scaled.floor().to_integer(), scale)
}

/// Parse `"p/q"` or `"p"` into a rational. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let valid_int = |t: &str| {
        let digits = t.strip_prefix('-').unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    match s.split_once('/') {
        Some((n, d)) => {
            if !valid_int(n) || d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => {
            if !valid_int(s) {
                return None;
            }
            Some(Rational::from_integer(s.parse().ok()?))
        }
    }
}

/// Render as `"p/q"` (always with an explicit denominator).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    lo: Rational,
    hi: Rational,
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl DyadicInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, ExactError> {
        if lo > hi {
            return Err(ExactError::InvertedInterval);
        }
        Ok(Self { lo, hi })
    }

    pub fn point(q: Rational) -> Self {
        Self {
            lo: q.clone(),
            hi: q,
        }
    }

    /// `[c - 2^-i, c + 2^-i]`.
    pub fn ball(center: &Rational, i: u32) -> Self {
        let r = pow2_neg(i);
        Self {
            lo: center - &r,
            hi: center + &r,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Widen both endpoints by `slack`.
    pub fn widen(&self, slack: &Rational) -> Self {
        Self {
            lo: &self.lo - slack,
            hi: &self.hi + slack,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap_or_else(Rational::zero);
        let hi = products.iter().max().cloned().unwrap_or_else(Rational::zero);
        Self { lo, hi }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        self.mul(&Self::point(k.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        if other.contains(&Rational::zero()) {
            return Err(ExactError::DivisionByZeroInterval);
        }
        let inv = Self {
            lo: other.hi.recip(),
            hi: other.lo.recip(),
        };
        Ok(self.mul(&inv))
    }
}

type Approximant = dyn Fn(u32) -> Rational + Send + Sync;

/// A rapidly converging Cauchy sequence of rationals, evaluated lazily.
#[derive(Clone)]
pub struct RealStream {
    approx: Arc<Approximant>,
}

impl fmt::Debug for RealStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealStream(q_8 = {})", self.approximant(8))
    }
}

impl RealStream {
    /// Wrap an approximant. The caller is responsible for the rapid Cauchy
    /// condition; see [`RealStream::check_rapid_cauchy`].
    pub fn from_fn(f: impl Fn(u32) -> Rational + Send + Sync + 'static) -> Self {
        Self { approx: Arc::new(f) }
    }

    pub fn approximant(&self, i: u32) -> Rational {
        (self.approx)(i)
    }

    /// `[q_i - 2^-i, q_i + 2^-i]`, which contains the limit.
    pub fn interval(&self, i: u32) -> DyadicInterval {
        DyadicInterval::ball(&self.approximant(i), i)
    }

    /// Checks `|q_i - q_j| < 2^-i` on the given index pairs; returns the first
    /// violating pair.
    pub fn check_rapid_cauchy(&self, pairs: &[(u32, u32)]) -> Result<(), (u32, u32)> {
        for &(a, b) in pairs {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if i == j {
                continue;
            }
            if (self.approximant(i) - self.approximant(j)).abs() >= pow2_neg(i) {
                return Err((i, j));
            }
        }
        Ok(())
    }
}

/// Constant stream at `q`.
pub fn real_from_rational(q: Rational) -> RealStream {
    RealStream::from_fn(move |_| q.clone())
}

const XI_TABLE_LEN: u32 = 256;

/// Numerator of `xi_k = (floor(sqrt(2) * 2^k) - 2^k) / 2^k`, the `k`-bit
/// truncation of `sqrt(2) - 1`.
fn xi_numerator(k: u32) -> BigInt {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    let compute = |k: u32| -> BigInt {
        let two_scaled = BigInt::from(2) << (2 * k);
        two_scaled.sqrt() - (BigInt::one() << k)
    };
    if k < XI_TABLE_LEN {
        TABLE.get_or_init(|| (0..XI_TABLE_LEN).map(compute).collect())[k as usize].clone()
    } else {
        compute(k)
    }
}

/// `q + xi * 2^-s` with `xi = sqrt(2) - 1`. Never equal to a rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericReal {
    pub base: Rational,
    pub scale_exp: u32,
}

impl GenericReal {
    pub fn new(base: Rational, scale_exp: u32) -> Self {
        Self { base, scale_exp }
    }

    pub fn stream(&self) -> RealStream {
        let base = self.base.clone();
        let s = self.scale_exp;
        RealStream::from_fn(move |i| {
            let k = i + 1;
            let offset = Rational::new(xi_numerator(k), BigInt::one() << (k + s));
            &base + offset
        })
    }

    /// Exact sign of `self - r`, decided by squaring rather than refinement.
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        // the offset lies in (0, 2^-s); only thresholds in that window
        // need the square test
        if r <= &self.base {
            return Ordering::Greater;
        }
        if r >= &(&self.base + pow2_neg(self.scale_exp)) {
            return Ordering::Less;
        }
        // self > r  <=>  sqrt(2) > (r - base) * 2^s + 1 =: t
        let t = (r - &self.base) * Rational::from_integer(BigInt::one() << self.scale_exp)
            + Rational::one();
        if t.is_negative() {
            return Ordering::Greater;
        }
        if &t * &t < int(2) {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

/// Stream for `q + xi * 2^-scale_exp`, `xi = sqrt(2) - 1`.
pub fn generic_real(q: Rational, scale_exp: u32) -> RealStream {
    GenericReal::new(q, scale_exp).stream()
}

/// Decide `x > q` by refining `x` through precisions `0..=cap`.
///
/// `None` means `q` was still inside the interval at the cap. A resolved
/// answer is the true sign, so raising the cap never changes it.
pub fn compare_gt(x: &RealStream, q: &Rational, cap: u32) -> Option<bool> {
    (0..=cap).find_map(|i| {
        let iv = x.interval(i);
        if iv.lo() > q {
            Some(true)
        } else if iv.hi() < q {
            Some(false)
        } else {
            None
        }
    })
}

/// Presentation of an element of `R ∪ {∞}`: either `q_i > i` for all `i`
/// (infinity) or the rapid Cauchy condition holds.
#[derive(Clone)]
pub struct ExtendedReal {
    approx: Arc<Approximant>,
}

impl fmt::Debug for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtendedReal(q_0 = {})", self.approximant(0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtendedClass {
    Finite(DyadicInterval),
    Infinite,
}

impl ExtendedReal {
    pub fn from_fn(f: impl Fn(u32) -> Rational + Send + Sync + 'static) -> Self {
        Self { approx: Arc::new(f) }
    }

    pub fn finite(q: Rational) -> Self {
        Self::from_fn(move |_| q.clone())
    }

    pub fn zero() -> Self {
        Self::finite(Rational::zero())
    }

    /// The canonical presentation of infinity, `q_i = i + 1`.
    pub fn infinity() -> Self {
        Self::from_fn(|i| Rational::from_integer(BigInt::from(i) + 1))
    }

    pub fn from_stream(s: RealStream) -> Self {
        Self { approx: s.approx }
    }

    pub fn approximant(&self, i: u32) -> Rational {
        (self.approx)(i)
    }

    /// Pointwise maximum of approximants. Presents `max(a, b)`: both
    /// disjuncts of the presentation condition are preserved by `max`.
    pub fn max(&self, other: &Self) -> Self {
        let (a, b) = (self.approx.clone(), other.approx.clone());
        Self::from_fn(move |i| {
            let (x, y) = (a(i), b(i));
            if x >= y {
                x
            } else {
                y
            }
        })
    }

    /// Classify from the approximants `q_0..=q_depth`.
    pub fn classify(&self, depth: u32) -> Result<ExtendedClass, ExactError> {
        let qs: Vec<Rational> = (0..=depth).map(|i| self.approximant(i)).collect();
        let first_small = qs
            .iter()
            .enumerate()
            .find(|(i, q)| **q <= Rational::from_integer(BigInt::from(*i as u64)))
            .map(|(i, _)| i as u32);
        let Some(k) = first_small else {
            return Ok(ExtendedClass::Infinite);
        };
        // |q_i - q_j| < 2^-i for all j > i iff the extremes of the tail
        // after i are that close; report the least offending i
        let mut lo = qs.len() - 1;
        let mut hi = qs.len() - 1;
        let mut bad = None;
        for i in (0..qs.len().saturating_sub(1)).rev() {
            let radius = pow2_neg(i as u32);
            let next = i + 1;
            if qs[next] < qs[lo] {
                lo = next;
            }
            if qs[next] > qs[hi] {
                hi = next;
            }
            if [lo, hi].iter().any(|&j| (&qs[i] - &qs[j]).abs() >= radius) {
                bad = Some(i);
            }
        }
        if let Some(i) = bad {
            let radius = pow2_neg(i as u32);
            let j = (i + 1..qs.len()).find(|&j| (&qs[i] - &qs[j]).abs() >= radius).unwrap();
            return Err(ExactError::InvalidPresentation { i: i as u32, j: j as u32, k });
        }
        Ok(ExtendedClass::Finite(DyadicInterval::ball(
            &qs[depth as usize],
            depth,
        )))
    }
}

/// `extended_real_classify` in free-function form.
pub fn extended_real_classify(e: &ExtendedReal, depth: u32) -> Result<ExtendedClass, ExactError> {
    e.classify(depth)
}

/// Enclosure of `atanh(t)` for `0 <= t <= 1/3`, as scaled integers over
/// `2^bits`.
fn atanh_enclosure(t: &Rational, bits: u32) -> (BigInt, BigInt) {
    debug_assert!(!t.is_negative() && t <= &rat(1, 3));
    let scale = BigInt::one() << bits;
    let t2 = t * t;
    let (a, b) = (t2.numer().clone(), t2.denom().clone());
    let scaled_t = t * Rational::from_integer(scale.clone());
    let mut p_lo = scaled_t.floor().to_integer();
    let mut p_hi = scaled_t.ceil().to_integer();
    let (mut s_lo, mut s_hi) = (BigInt::zero(), BigInt::zero());
    let mut n: u64 = 0;
    loop {
        let d = BigInt::from(2 * n + 1);
        s_lo += p_lo.div_floor(&d);
        s_hi += p_hi.div_ceil(&d);
        // p <- p * t^2, rounded outward
        p_lo = (&p_lo * &a).div_floor(&b);
        p_hi = (&p_hi * &a).div_ceil(&b);
        n += 1;
        // tail <= p_{n} / ((2n+1) * (1 - t^2)) <= p_n * 9 / (8 (2n+1))
        let tail: BigInt = (&p_hi * BigInt::from(9)).div_ceil(&(BigInt::from(2 * n + 1) * 8));
        if tail <= BigInt::one() || p_hi.is_zero() {
            s_hi += tail + 1;
            return (s_lo, s_hi);
        }
    }
}

/// Rational enclosure of `ln(x)` of width roughly `2^-bits`.
pub fn ln_interval(x: &Rational, bits: u32) -> Result<DyadicInterval, ExactError> {
    if !x.is_positive() {
        return Err(ExactError::NonPositiveLogArgument);
    }
    let work = bits + 16;
    // x = 2^k * y with y in [1, 2)
    let mut k: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let pow = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(BigInt::one() << k as u32)
        } else {
            Rational::new(BigInt::one(), BigInt::one() << (-k) as u32)
        }
    };
    let mut y = x / pow(k);
    while y >= int(2) {
        k += 1;
        y = x / pow(k);
    }
    while y < Rational::one() {
        k -= 1;
        y = x / pow(k);
    }
    let t = (&y - Rational::one()) / (&y + Rational::one());
    let scale = Rational::from_integer(BigInt::one() << work);
    let two = int(2);
    let (y_lo, y_hi) = atanh_enclosure(&t, work);
    let ln_y = DyadicInterval {
        lo: Rational::from_integer(y_lo) / &scale * &two,
        hi: Rational::from_integer(y_hi) / &scale * &two,
    };
    let (l2_lo, l2_hi) = atanh_enclosure(&rat(1, 3), work);
    let ln2 = DyadicInterval {
        lo: Rational::from_integer(l2_lo) / &scale * &two,
        hi: Rational::from_integer(l2_hi) / &scale * &two,
    };
    Ok(ln2.scale(&int(k)).add(&ln_y))
}

/// Ceiling of a value enclosed by `iv`, if the enclosure determines it.
pub fn ceil_of(iv: &DyadicInterval) -> Option<BigInt> {
    let lo = iv.lo().ceil().to_integer();
    let hi = iv.hi().ceil().to_integer();
    // lo == hi alone is not enough when lo is itself an integer hit exactly
    if lo == hi && !(iv.lo().is_integer() && iv.lo() != iv.hi()) {
        Some(lo)
    } else {
        None
    }
}

/// Integer square root of a big unsigned integer (exact floor).
pub fn isqrt(n: &BigUint) -> BigUint {
    n.sqrt()
}

/// Lossy conversion for reporting only.
pub fn approx_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

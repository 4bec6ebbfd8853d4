//! Losses, distributions, sampling, sample functions, Monte Carlo PAC
//! validation and the extraction procedures that read halting information
//! off proper learners and sample functions.
//!
//! Every loss is an exact rational. Halting facts are relative to the
//! `(p_max, s_max)` budgets of the enumerations passed in.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{
    ceil_of, compare_gt, format_rational, int, ln_interval, pow2_neg, rat,
    DyadicInterval, ExactError, GenericReal, Rational, RealStream,
};
use crate::hypotheses::{
    default_rationals, eval, third_first, HaltingPresentation, HypothesisError,
    OracleHaltingPresentation, OraclePoint, Presentation,
};
use crate::learners::{alpha, least_consistent_cutoff, stump_proper_learner, LearnError, ProperLearner};
use crate::machines::{halt_time_equiv, run_oracle, HaltingEnumeration, OracleTape};
use crate::spaces::LabeledExample;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacError {
    #[error("empirical error of an empty sample")]
    EmptySample,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("sample bound is not positive for d = {d}, epsilon = {epsilon}, delta = {delta}")]
    NonpositiveBound { d: u64, epsilon: String, delta: String },
    #[error("sample function undefined at ({epsilon}, {delta})")]
    Undefined { epsilon: String, delta: String },
    #[error("no rectangle of a level set reaches grid point ({epsilon}, {delta})")]
    CoverGap { epsilon: String, delta: String },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
}

/// `L_S(h)`: fraction of examples mislabeled by `h`.
pub fn empirical_error<F, E>(
    h: impl Fn(&F) -> Result<bool, E>,
    sample: &[LabeledExample<F>],
) -> Result<Rational, PacError>
where
    PacError: From<E>,
{
    if sample.is_empty() {
        return Err(PacError::EmptySample);
    }
    let mut wrong = 0i64;
    for ex in sample {
        if h(&ex.feature)? != ex.label {
            wrong += 1;
        }
    }
    Ok(rat(wrong, sample.len() as i64))
}

/// Finite-support distribution over labeled features.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution<F> {
    atoms: Vec<(F, bool, Rational)>,
}

impl<F: Clone> DiscreteDistribution<F> {
    pub fn new(atoms: Vec<(F, bool, Rational)>) -> Result<Self, PacError> {
        if atoms.is_empty() {
            return Err(PacError::InvalidDistribution("no atoms".into()));
        }
        if atoms.iter().any(|(_, _, w)| !w.is_positive()) {
            return Err(PacError::InvalidDistribution("non-positive weight".into()));
        }
        let total: Rational = atoms.iter().map(|(_, _, w)| w).sum();
        if !total.is_one() {
            return Err(PacError::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(feature: F, label: bool) -> Self {
        Self {
            atoms: vec![(feature, label, Rational::one())],
        }
    }

    pub fn atoms(&self) -> &[(F, bool, Rational)] {
        &self.atoms
    }
}

/// `L_D(h) = Σ w · [h(x) ≠ y]`.
pub fn true_error_discrete<F, E>(
    h: impl Fn(&F) -> Result<bool, E>,
    d: &DiscreteDistribution<F>,
) -> Result<Rational, PacError>
where
    PacError: From<E>,
{
    let mut total = Rational::zero();
    for (x, y, w) in &d.atoms {
        if h(x)? != *y {
            total += w;
        }
    }
    Ok(total)
}

/// Minimum true error over ideal ids below `budget`. Budget-relative.
pub fn best_in_class_discrete<P: Presentation>(
    class: &P,
    d: &DiscreteDistribution<P::Feature>,
    ideal_budget: u64,
    cap: u32,
) -> Result<Rational, PacError> {
    let mut best = Rational::one();
    for c in class.ideal_range(ideal_budget) {
        let idx = class.ideal_index(c);
        let e = true_error_discrete(|x| eval(class, &idx, x, cap), d)?;
        if e < best {
            best = e;
        }
        if best.is_zero() {
            break;
        }
    }
    Ok(best)
}

/// Piecewise-uniform feature density with labels `[x > cutoff]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseUniform {
    pieces: Vec<(Rational, Rational, Rational)>,
    cutoff: Rational,
    bound: Rational,
}

impl PiecewiseUniform {
    /// Pieces are `[a, b)` with a density; they must be disjoint, have
    /// densities in `[0, bound]` and total mass exactly 1.
    pub fn new(
        mut pieces: Vec<(Rational, Rational, Rational)>,
        cutoff: Rational,
        bound: Rational,
    ) -> Result<Self, PacError> {
        pieces.sort_by(|x, y| x.0.cmp(&y.0));
        for (a, b, dens) in &pieces {
            if a >= b {
                return Err(PacError::InvalidDistribution(format!("empty piece [{a}, {b})")));
            }
            if dens.is_negative() || dens > &bound {
                return Err(PacError::InvalidDistribution(format!("density {dens} outside [0, {bound}]")));
            }
        }
        if pieces.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(PacError::InvalidDistribution("overlapping pieces".into()));
        }
        let mass: Rational = pieces.iter().map(|(a, b, d)| (b - a) * d).sum();
        if !mass.is_one() {
            return Err(PacError::InvalidDistribution(format!("total mass {mass}")));
        }
        Ok(Self {
            pieces,
            cutoff,
            bound,
        })
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(cutoff: Rational) -> Self {
        Self::new(vec![(int(0), int(1), int(1))], cutoff, int(1)).expect("valid")
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn pieces(&self) -> &[(Rational, Rational, Rational)] {
        &self.pieces
    }

    /// Mass of `[lo, hi)`.
    pub fn mass_between(&self, lo: &Rational, hi: &Rational) -> Rational {
        self.pieces
            .iter()
            .map(|(a, b, d)| {
                let l = a.max(lo);
                let h = b.min(hi);
                if l < h {
                    (h - l) * d
                } else {
                    Rational::zero()
                }
            })
            .sum()
    }
}

/// Exact mass where `[x > q]` and `[x > cutoff]` disagree.
pub fn true_error_stump(q: &Rational, d: &PiecewiseUniform) -> Rational {
    let (lo, hi) = if q <= &d.cutoff {
        (q, &d.cutoff)
    } else {
        (&d.cutoff, q)
    };
    d.mass_between(lo, hi)
}

/// Infimum of stump true error over rational cutoffs, scanning the
/// breakpoints (cutoff and piece endpoints) where the minimum is attained.
pub fn best_in_class_stump(d: &PiecewiseUniform) -> Rational {
    std::iter::once(&d.cutoff)
        .chain(d.pieces.iter().flat_map(|(a, b, _)| [a, b]))
        .map(|q| true_error_stump(q, d))
        .min()
        .unwrap_or_else(Rational::zero)
}

/// Base of the logarithm in the sample bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogBase {
    Natural,
    Rational(Rational),
}

const BOUND_MAX_BITS: u32 = 1024;

fn log_interval(x: &Rational, base: &LogBase, bits: u32) -> Result<DyadicInterval, ExactError> {
    let ln = ln_interval(x, bits)?;
    match base {
        LogBase::Natural => Ok(ln),
        LogBase::Rational(b) => ln.div(&ln_interval(b, bits)?),
    }
}

fn sample_bound_interval(
    d: u64,
    eps: &Rational,
    delta: &Rational,
    base: &LogBase,
    bits: u32,
) -> Result<DyadicInterval, ExactError> {
    let d = int(d as i64);
    let e2 = eps * eps;
    let first_coef = int(4) * int(32) * &d / &e2;
    let first = log_interval(&(int(64) * &d / &e2), base, bits)?.scale(&first_coef);
    let inner = log_interval(&(eps / &d), base, bits)?
        .scale(&(int(8) * &d))
        .add(&log_interval(&(int(4) / delta), base, bits)?.scale(&int(2)));
    Ok(first.add(&inner.scale(&(int(8) / &e2))))
}

/// `⌈4(32d/ε²)log(64d/ε²) + (8/ε²)(8d log(ε/d) + 2 log(4/δ))⌉` with the
/// natural logarithm.
pub fn erm_sample_bound(d: u64, eps: &Rational, delta: &Rational) -> Result<u64, PacError> {
    erm_sample_bound_with_base(d, eps, delta, &LogBase::Natural)
}

pub fn erm_sample_bound_with_base(
    d: u64,
    eps: &Rational,
    delta: &Rational,
    base: &LogBase,
) -> Result<u64, PacError> {
    let nonpositive = || PacError::NonpositiveBound {
        d,
        epsilon: format_rational(eps),
        delta: format_rational(delta),
    };
    let mut bits = 64;
    while bits <= BOUND_MAX_BITS {
        let iv = sample_bound_interval(d, eps, delta, base, bits)?;
        if !iv.hi().is_positive() {
            return Err(nonpositive());
        }
        if iv.lo().is_positive() {
            if let Some(c) = ceil_of(&iv) {
                return u64::try_from(c).map_err(|_| nonpositive());
            }
        }
        bits *= 2;
    }
    Err(ExactError::Unresolved(BOUND_MAX_BITS).into())
}

type SampleFn = dyn Fn(&Rational, &Rational) -> Result<u64, PacError> + Send + Sync;

/// A sample function `m(ε, δ)`.
#[derive(Clone)]
pub struct SampleFunction {
    label: String,
    f: Arc<SampleFn>,
}

impl fmt::Debug for SampleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SampleFunction({})", self.label)
    }
}

impl SampleFunction {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(&Rational, &Rational) -> Result<u64, PacError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, eps: &Rational, delta: &Rational) -> Result<u64, PacError> {
        (self.f)(eps, delta)
    }

    pub fn constant(n: u64) -> Self {
        Self::from_fn(format!("constant({n})"), move |_, _| Ok(n))
    }

    /// The ERM bound for VC dimension `d`.
    pub fn closed_form(d: u64) -> Self {
        Self::closed_form_with_base(d, LogBase::Natural)
    }

    pub fn closed_form_with_base(d: u64, base: LogBase) -> Self {
        Self::from_fn(format!("closed-form(d={d})"), move |e, dl| {
            erm_sample_bound_with_base(d, e, dl, &base)
        })
    }

    /// Sample function for the coarsened threshold learner over densities
    /// bounded by `m_bound`, built from the budgeted halting enumeration:
    /// `max(erm_sample_bound(1, ε/2, δ), N(ℓ))` where `2^-ℓ · m_bound <= ε/2`
    /// and every sample size from `N(ℓ)` on coarsens to accuracy at least
    /// `2^-ℓ`.
    pub fn budgeted_halting(halting: Arc<HaltingEnumeration>, m_bound: Rational) -> Self {
        Self::from_fn("budgeted-halting", move |e, dl| {
            let half = e / int(2);
            let base = erm_sample_bound(1, &half, dl)?;
            let mut l = 0u32;
            while pow2_neg(l) * &m_bound > half {
                l += 1;
            }
            Ok(base.max(settled_size(&halting, l as u64)))
        })
    }
}

/// `1 + max{i : e_i < l}`, or 0 if no entry is below `l`.
pub fn settled_size(halting: &HaltingEnumeration, l: u64) -> u64 {
    halting
        .entries
        .iter()
        .rposition(|e| e.program < l)
        .map_or(0, |i| i as u64 + 1)
}

/// A labeled distribution that can be sampled.
pub trait LabeledDistribution: Sync {
    type Feature: Clone + Send + Sync;
    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledExample<Self::Feature>;
}

fn unit_dyadic(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(BigInt::from(rng.random::<u64>()), BigInt::one() << 64)
}

impl<F: Clone + Send + Sync> LabeledDistribution for DiscreteDistribution<F> {
    type Feature = F;

    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledExample<F> {
        let u = unit_dyadic(rng);
        let mut acc = Rational::zero();
        for (x, y, w) in &self.atoms {
            acc += w;
            if u < acc {
                return LabeledExample::new(x.clone(), *y);
            }
        }
        let (x, y, _) = self.atoms.last().expect("non-empty");
        LabeledExample::new(x.clone(), *y)
    }
}

/// Offset exponent of generic features drawn from piecewise densities.
pub const FEATURE_OFFSET_EXP: u32 = 40;
const FEATURE_GRID_BITS: u32 = 32;

impl PiecewiseUniform {
    /// A draw as an exact generic point, before wrapping it in a stream.
    pub fn draw_generic(&self, rng: &mut ChaCha8Rng) -> GenericReal {
        let u = unit_dyadic(rng);
        let mut acc = Rational::zero();
        let live: Vec<_> = self.pieces.iter().filter(|p| p.2.is_positive()).collect();
        let mut chosen = live[live.len() - 1];
        for p in &live {
            acc += (&p.1 - &p.0) * &p.2;
            if u < acc {
                chosen = p;
                break;
            }
        }
        let v = Rational::new(
            BigInt::from(rng.random::<u32>()),
            BigInt::one() << FEATURE_GRID_BITS,
        );
        let x = &chosen.0 + (&chosen.1 - &chosen.0) * v;
        GenericReal::new(x, FEATURE_OFFSET_EXP)
    }
}

impl LabeledDistribution for PiecewiseUniform {
    type Feature = RealStream;

    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledExample<RealStream> {
        let g = self.draw_generic(rng);
        let label = g.cmp_rational(&self.cutoff) == std::cmp::Ordering::Greater;
        LabeledExample::new(g.stream(), label)
    }
}

/// `m` i.i.d. draws; deterministic in `seed`.
pub fn draw_sample<D: LabeledDistribution>(d: &D, m: usize, seed: u64) -> Vec<LabeledExample<D::Feature>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| d.draw(&mut rng)).collect()
}

/// Generator for trial `trial` of a run with master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A learner, a class and a distribution with exact true errors.
pub trait PacSetting: Sync {
    type Feature: Clone + Send + Sync;
    type Hypothesis: Send;

    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledExample<Self::Feature>;
    fn train(&self, sample: &[LabeledExample<Self::Feature>]) -> Result<Self::Hypothesis, PacError>;
    fn empirical_error(
        &self,
        h: &Self::Hypothesis,
        sample: &[LabeledExample<Self::Feature>],
    ) -> Result<Rational, PacError>;
    fn true_error(&self, h: &Self::Hypothesis) -> Result<Rational, PacError>;
    fn best_in_class(&self) -> Rational;
}

/// Learners compared on threshold distributions.
#[derive(Debug, Clone)]
pub enum StumpLearner {
    /// `A_step` over the given enumeration.
    AStep { enumeration: Vec<Rational>, cap: u32 },
    /// Always outputs this cutoff.
    Constant(Rational),
    /// Outputs the distribution's own cutoff.
    BestInClass,
}

#[derive(Debug, Clone)]
pub struct StumpSetting {
    pub distribution: PiecewiseUniform,
    pub learner: StumpLearner,
    pub cap: u32,
}

impl PacSetting for StumpSetting {
    type Feature = RealStream;
    type Hypothesis = Rational;

    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledExample<RealStream> {
        self.distribution.draw(rng)
    }

    fn train(&self, sample: &[LabeledExample<RealStream>]) -> Result<Rational, PacError> {
        Ok(match &self.learner {
            StumpLearner::AStep { enumeration, cap } => {
                let out = stump_proper_learner(sample, enumeration, *cap)?;
                enumeration[out.ideal as usize].clone()
            }
            StumpLearner::Constant(q) => q.clone(),
            StumpLearner::BestInClass => self.distribution.cutoff.clone(),
        })
    }

    fn empirical_error(&self, q: &Rational, sample: &[LabeledExample<RealStream>]) -> Result<Rational, PacError> {
        let cap = self.cap;
        empirical_error(
            |x: &RealStream| compare_gt(x, q, cap).ok_or(HypothesisError::PrecisionExhausted { cap }),
            sample,
        )
    }

    fn true_error(&self, q: &Rational) -> Result<Rational, PacError> {
        Ok(true_error_stump(q, &self.distribution))
    }

    fn best_in_class(&self) -> Rational {
        best_in_class_stump(&self.distribution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictRule {
    /// `failure_rate <= δ + 3 sqrt(δ(1 - δ)/T)`.
    ThreeSigma,
    /// Fail only if `P[Bin(T, δ) >= failures] < 1/100`.
    ExactBinomial99,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRow {
    pub trial_id: u64,
    pub m: u64,
    pub epsilon: Rational,
    pub delta: Rational,
    pub empirical_error: Option<Rational>,
    pub true_error: Option<Rational>,
    pub best_in_class: Rational,
    pub pass: bool,
    pub error: Option<String>,
}

impl TrialRow {
    pub const HEADER: &'static str =
        "trial_id,m,epsilon,delta,empirical_error,true_error,best_in_class,pass";

    pub fn csv(&self) -> String {
        let opt = |q: &Option<Rational>| q.as_ref().map_or_else(|| "NA".to_string(), format_rational);
        format!(
            "{},{},{},{},{},{},{},{}",
            self.trial_id,
            self.m,
            format_rational(&self.epsilon),
            format_rational(&self.delta),
            opt(&self.empirical_error),
            opt(&self.true_error),
            format_rational(&self.best_in_class),
            self.pass as u8
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacReport {
    pub rows: Vec<TrialRow>,
    pub failures: u64,
    pub learner_errors: u64,
    pub failure_rate: Rational,
    pub rule: VerdictRule,
    pub verdict: bool,
}

/// Runs `trials` independent trials of size `m`; trial `t` draws from
/// stream `t` of the master seed, so results do not depend on scheduling.
pub fn pac_validate<S: PacSetting>(
    setting: &S,
    eps: &Rational,
    delta: &Rational,
    m: u64,
    trials: u64,
    seed: u64,
    rule: VerdictRule,
) -> PacReport {
    let best = setting.best_in_class();
    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let sample: Vec<_> = (0..m).map(|_| setting.draw(&mut rng)).collect();
            let mut row = TrialRow {
                trial_id: t,
                m,
                epsilon: eps.clone(),
                delta: delta.clone(),
                empirical_error: None,
                true_error: None,
                best_in_class: best.clone(),
                pass: false,
                error: None,
            };
            let outcome = setting.train(&sample).and_then(|h| {
                let emp = if sample.is_empty() {
                    None
                } else {
                    Some(setting.empirical_error(&h, &sample)?)
                };
                Ok((emp, setting.true_error(&h)?))
            });
            match outcome {
                Ok((emp, tru)) => {
                    row.pass = tru <= &best + eps;
                    row.empirical_error = emp;
                    row.true_error = Some(tru);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    let failures = rows.iter().filter(|r| !r.pass).count() as u64;
    let learner_errors = rows.iter().filter(|r| r.error.is_some()).count() as u64;
    let verdict = verdict(failures, trials, delta, rule);
    PacReport {
        rows,
        failures,
        learner_errors,
        failure_rate: if trials == 0 {
            Rational::zero()
        } else {
            rat(failures as i64, trials as i64)
        },
        rule,
        verdict,
    }
}

/// Decision rule on `failures` out of `trials` at confidence parameter `δ`.
pub fn verdict(failures: u64, trials: u64, delta: &Rational, rule: VerdictRule) -> bool {
    if trials == 0 {
        return true;
    }
    let rate = rat(failures as i64, trials as i64);
    match rule {
        VerdictRule::ThreeSigma => {
            // rate - δ <= 3 sqrt(δ(1-δ)/T), squared when the left side is positive
            let excess = &rate - delta;
            !excess.is_positive()
                || &excess * &excess
                    <= int(9) * delta * (Rational::one() - delta) / int(trials as i64)
        }
        VerdictRule::ExactBinomial99 => binomial_upper_tail(trials, failures, delta) >= rat(1, 100),
    }
}

/// `P[Bin(n, p) >= k]`, exact.
pub fn binomial_upper_tail(n: u64, k: u64, p: &Rational) -> Rational {
    let q = Rational::one() - p;
    let mut total = Rational::zero();
    let mut binom = BigInt::one();
    for i in 0..=n {
        if i >= k {
            total += Rational::from_integer(binom.clone()) * pow(p, i) * pow(&q, n - i);
        }
        binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    total
}

fn pow(x: &Rational, e: u64) -> Rational {
    num_traits::pow::pow(x.clone(), e as usize)
}

/// For each `k < n`, trains on `M = m(ε, δ)` copies of `(k, 1)` and reads
/// off whether the returned index takes as many steps as `k`.
pub fn extract_halting_prefix<L: ProperLearner<u64>>(
    learner: &L,
    class: &HaltingPresentation,
    m: &SampleFunction,
    n: u64,
    eps: &Rational,
    delta: &Rational,
) -> Result<Vec<bool>, PacError> {
    let copies = m.eval(eps, delta)? as usize;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let sample = vec![LabeledExample::new(k, true); copies];
            let z = learner.learn(&sample)?;
            let c = class.ideal_index(z.ideal);
            Ok(halt_time_equiv(c, k, class.s_max()).map_err(HypothesisError::from)?)
        })
        .collect()
}

/// Jump bits of `z` for the given programs, one learner call per program.
/// The learner sees `M` copies of `((e, z), 1)` and returns `(ℓ, s)`; the bit
/// is 0 if `ℓ ≠ e`, and otherwise whether `e` relative to `z` halts within
/// the `t` steps that `e` takes relative to `s`.
pub fn extract_jump_bits<L: ProperLearner<OraclePoint>>(
    learner: &L,
    class: &OracleHaltingPresentation,
    m: &SampleFunction,
    z: &OracleTape,
    programs: &[u64],
    eps: &Rational,
    delta: &Rational,
) -> Result<Vec<bool>, PacError> {
    let copies = m.eval(eps, delta)? as usize;
    programs
        .par_iter()
        .map(|&e| {
            let sample = vec![LabeledExample::new(OraclePoint::new(e, z.clone()), true); copies];
            let out = learner.learn(&sample)?;
            let lz = class.ideal_index(out.ideal);
            if lz.program != e {
                return Ok(false);
            }
            let t = class.halt_time(&lz)?;
            Ok(run_oracle(e, z, 0, t).halted())
        })
        .collect()
}

/// [`extract_jump_bits`] on programs `0..n`.
pub fn extract_jump_prefix<L: ProperLearner<OraclePoint>>(
    learner: &L,
    class: &OracleHaltingPresentation,
    m: &SampleFunction,
    z: &OracleTape,
    n: u64,
    eps: &Rational,
    delta: &Rational,
) -> Result<Vec<bool>, PacError> {
    let programs: Vec<u64> = (0..n).collect();
    extract_jump_bits(learner, class, m, z, &programs, eps, delta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadSampleReport {
    pub bits: Vec<bool>,
    /// `m_k = m(2^-(k+2), δ)` for `k = 1..=n` (index `k - 1`).
    pub m_values: Vec<u64>,
    /// Coarsening violations `α(c(S), e_|S|) > c(S) - 2^-(e_|S| + 2)` with
    /// `1/3` enumerated first.
    pub control_third_first: u64,
    /// The same count with the default enumeration.
    pub control_default: u64,
    pub control_samples: u64,
}

/// Reads `∅'` on `[n]` off the budgeted sample function of the coarsened
/// learner: program `p < n` halts iff `p = e_i` for some `i <= m_n`.
/// The control counts, over random samples from the uniform distribution
/// labeled by `[x > 1/3]`, how often the coarsened cutoff fails to sit at
/// least `2^-(k+2)` below `c(S)`, with and without `1/3` first.
pub fn bad_sample_fn_demo(
    n: u64,
    delta: &Rational,
    halting: Arc<HaltingEnumeration>,
    m_bound: Rational,
    control_seed: u64,
) -> Result<BadSampleReport, PacError> {
    let m = SampleFunction::budgeted_halting(halting.clone(), m_bound);
    let m_n = m.eval(&pow2_neg(n as u32 + 2), delta)?;
    let mut bits = vec![false; n as usize];
    for (i, e) in halting.entries.iter().enumerate() {
        if i as u64 <= m_n && e.program < n {
            bits[e.program as usize] = true;
        }
    }
    let m_values = (1..=n)
        .map(|k| m.eval(&pow2_neg(k as u32 + 2), delta))
        .collect::<Result<Vec<_>, _>>()?;

    let uniform = PiecewiseUniform::uniform(rat(1, 3));
    let third = third_first(default_rationals(1000));
    let plain = default_rationals(1000);
    let sizes = halting.len().min(24);
    let per_size = 8u64;
    let mut violations = [0u64; 2];
    let mut total = 0u64;
    for size in 0..sizes {
        let l = halting.entries[size].program as u32;
        for rep in 0..per_size {
            let sample = draw_sample(&uniform, size, control_seed ^ ((size as u64) << 32 | rep));
            for (slot, en) in [&third, &plain].into_iter().enumerate() {
                let c = least_consistent_cutoff(&sample, en, 64)?;
                if alpha(&c, l) > c - pow2_neg(l + 2) {
                    violations[slot] += 1;
                }
            }
            total += 1;
        }
    }
    Ok(BadSampleReport {
        bits,
        m_values,
        control_third_first: violations[0],
        control_default: violations[1],
        control_samples: total,
    })
}

/// Axis-aligned rational rectangle in `(ε, δ)` space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rect {
    pub eps: (Rational, Rational),
    pub delta: (Rational, Rational),
}

impl Rect {
    fn contains(&self, e: &Rational, d: &Rational) -> bool {
        &self.eps.0 <= e && e <= &self.eps.1 && &self.delta.0 <= d && d <= &self.delta.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub depth: u32,
    /// Rectangles grouped by the value of `m` on them.
    pub rectangles: BTreeMap<u64, Vec<Rect>>,
    pub grid_points: u64,
}

impl CoverReport {
    pub fn rectangle_count(&self) -> usize {
        self.rectangles.values().map(Vec::len).sum()
    }
}

const COVER_MAX_SHRINK: u32 = 48;

/// Builds rectangles inside level sets of a sample function and checks that
/// the closure of their union contains every point of the grid
/// `{i/2^depth : 0 < i < 2^depth}²`.
///
/// Relies on `m` being non-increasing in each coordinate: a rectangle on
/// which the two extreme corners agree lies inside a single level set.
pub fn rect_cover_check(m: &SampleFunction, depth: u32) -> Result<CoverReport, PacError> {
    let side = 1u64 << depth;
    let g = |i: u64| rat(i as i64, side as i64);
    let mut rectangles: BTreeMap<u64, Vec<Rect>> = BTreeMap::new();
    let gap = |e: &Rational, d: &Rational| PacError::CoverGap {
        epsilon: format_rational(e),
        delta: format_rational(d),
    };
    let defined = |e: &Rational, d: &Rational| match m.eval(e, d) {
        Ok(v) => Ok(Some(v)),
        Err(PacError::Undefined { .. }) => Ok(None),
        Err(err) => Err(err),
    };
    let (lo, hi) = (g(1), g(side - 1));
    if let (Some(a), Some(b)) = (defined(&lo, &lo)?, defined(&hi, &hi)?) {
        if a == b {
            rectangles.insert(
                a,
                vec![Rect {
                    eps: (lo.clone(), hi.clone()),
                    delta: (lo, hi),
                }],
            );
            return Ok(CoverReport {
                depth,
                rectangles,
                grid_points: (side - 1) * (side - 1),
            });
        }
    }
    let points: Vec<(u64, u64)> = (1..side).flat_map(|i| (1..side).map(move |j| (i, j))).collect();
    let found: Vec<Result<(u64, Rect), PacError>> = points
        .par_iter()
        .map(|&(i, j)| {
            let (e, d) = (g(i), g(j));
            let v = defined(&e, &d)?.ok_or_else(|| gap(&e, &d))?;
            for shrink in depth + 1..=depth + COVER_MAX_SHRINK {
                let r = pow2_neg(shrink);
                // upper-right quadrant: m(e + r, d + r) == m(e, d)
                let (e1, d1) = (&e + &r, &d + &r);
                if e1 < int(1) && d1 < int(1) && defined(&e1, &d1)? == Some(v) {
                    return Ok((v, Rect { eps: (e.clone(), e1), delta: (d.clone(), d1) }));
                }
                // lower-left quadrant: m(e - r, d - r) == m(e, d)
                let (e0, d0) = (&e - &r, &d - &r);
                if defined(&e0, &d0)? == Some(v) {
                    return Ok((v, Rect { eps: (e0, e.clone()), delta: (d0, d.clone()) }));
                }
            }
            Err(gap(&e, &d))
        })
        .collect();
    for item in found {
        let (v, rect) = item?;
        rectangles.entry(v).or_default().push(rect);
    }
    // corners of each rectangle must share its level
    for (v, rects) in &rectangles {
        for r in rects {
            for (e, d) in [(&r.eps.0, &r.delta.0), (&r.eps.1, &r.delta.1)] {
                if defined(e, d)? != Some(*v) {
                    return Err(gap(e, d));
                }
            }
            debug_assert!(r.contains(&r.eps.0, &r.delta.0));
        }
    }
    Ok(CoverReport {
        depth,
        rectangles,
        grid_points: points.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::generic_real;
    use crate::hypotheses::{halting_presentation, oracle_halting_presentation};
    use crate::learners::{erm_realizable, TotalErm};
    use crate::machines::{enumerate_halting, halt_program, jump_bit, loop_program, oracle_programs};

    #[test]
    fn empirical_error_examples() {
        let h = |x: &RealStream| Ok::<_, PacError>(compare_gt(x, &rat(1, 2), 64).unwrap());
        let s = vec![
            LabeledExample::new(generic_real(rat(9, 10), 10), true),
            LabeledExample::new(generic_real(rat(1, 10), 10), true),
        ];
        assert_eq!(empirical_error(h, &s).unwrap(), rat(1, 2));
        let all: Vec<_> = (0..4).map(|i| LabeledExample::new(i, i % 2 == 0)).collect();
        assert_eq!(empirical_error(|x: &i32| Ok::<_, PacError>(x % 2 == 0), &all).unwrap(), int(0));
        assert_eq!(empirical_error(|x: &i32| Ok::<_, PacError>(x % 2 != 0), &all).unwrap(), int(1));
        assert_eq!(empirical_error(|_: &i32| Ok::<_, PacError>(true), &[]), Err(PacError::EmptySample));
    }

    #[test]
    fn true_error_examples() {
        let pm = DiscreteDistribution::point_mass(7u64, true);
        assert_eq!(true_error_discrete(|_| Ok::<_, PacError>(false), &pm).unwrap(), int(1));
        assert_eq!(true_error_discrete(|_| Ok::<_, PacError>(true), &pm).unwrap(), int(0));
        let two = DiscreteDistribution::new(vec![(1u64, true, rat(1, 2)), (2, true, rat(1, 2))]).unwrap();
        assert_eq!(true_error_discrete(|x| Ok::<_, PacError>(*x == 1), &two).unwrap(), rat(1, 2));
        assert!(DiscreteDistribution::new(vec![(1u64, true, rat(1, 3))]).is_err());

        let u = PiecewiseUniform::uniform(rat(1, 3));
        assert_eq!(true_error_stump(&rat(1, 2), &u), rat(1, 6));
        assert_eq!(true_error_stump(&rat(1, 3), &u), int(0));
        let dense = PiecewiseUniform::new(
            vec![(int(0), rat(1, 4), rat(4, 3)), (rat(1, 4), rat(1, 2), int(4)), (rat(1, 2), int(1), rat(-1, 1) * int(0))],
            rat(1, 3),
            int(4),
        );
        assert!(dense.is_err());
        let dense = PiecewiseUniform::new(
            vec![(int(0), rat(1, 4), rat(4, 3)), (rat(1, 4), rat(1, 2), int(2)), (rat(1, 2), int(1), rat(1, 3))],
            rat(1, 3),
            int(4),
        )
        .unwrap();
        assert!(true_error_stump(&rat(1, 2), &dense) <= int(4) * rat(1, 6));
        assert_eq!(best_in_class_stump(&dense), int(0));
    }

    #[test]
    fn best_in_class_halting() {
        let en = enumerate_halting(64, 1000);
        let h = halting_presentation(&en);
        let pm = DiscreteDistribution::point_mass(en.entries[3].program, true);
        assert_eq!(best_in_class_discrete(&h, &pm, u64::MAX, 1).unwrap(), int(0));
        let pm = DiscreteDistribution::point_mass(loop_program(), true);
        assert_eq!(best_in_class_discrete(&h, &pm, u64::MAX, 1).unwrap(), int(1));
    }

    #[test]
    fn sample_bound_pinned() {
        // independent 60-digit evaluation: 103345.544...
        assert_eq!(erm_sample_bound(1, &rat(1, 10), &rat(1, 10)).unwrap(), 103_346);
        assert_eq!(erm_sample_bound(1, &rat(1, 5), &rat(1, 10)).unwrap(), 22_510);
        assert_eq!(erm_sample_bound(2, &rat(1, 10), &rat(1, 10)).unwrap(), 209_662);
        let b2 = erm_sample_bound_with_base(1, &rat(1, 10), &rat(1, 10), &LogBase::Rational(int(2))).unwrap();
        assert!(b2 > 103_346);
    }

    #[test]
    fn draw_examples() {
        let pm = DiscreteDistribution::point_mass(5u64, true);
        assert!(draw_sample(&pm, 0, 1).is_empty());
        let s = draw_sample(&pm, 20, 1);
        assert!(s.iter().all(|e| e.feature == 5 && e.label));
        let u = PiecewiseUniform::uniform(rat(1, 3));
        let a: Vec<Rational> = draw_sample(&u, 5, 9).iter().map(|e| e.feature.approximant(30)).collect();
        let b: Vec<Rational> = draw_sample(&u, 5, 9).iter().map(|e| e.feature.approximant(30)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn pac_examples() {
        let u = PiecewiseUniform::uniform(rat(1, 3));
        let oracle = StumpSetting { distribution: u.clone(), learner: StumpLearner::BestInClass, cap: 64 };
        let r = pac_validate(&oracle, &rat(1, 10), &rat(1, 10), 50, 20, 3, VerdictRule::ThreeSigma);
        assert_eq!(r.failures, 0);
        assert!(r.verdict);
        let constant = StumpSetting { distribution: u, learner: StumpLearner::Constant(int(2)), cap: 64 };
        let r = pac_validate(&constant, &rat(1, 10), &rat(1, 10), 10, 20, 3, VerdictRule::ThreeSigma);
        assert!(!r.verdict);
        assert!(r.rows.iter().all(|row| row.true_error.as_ref().unwrap() >= &rat(1, 2)));
    }

    #[test]
    fn verdict_rules() {
        assert!(verdict(0, 500, &rat(1, 10), VerdictRule::ThreeSigma));
        // 3 sigma at T = 500, δ = 1/10 is about 0.0402
        assert!(verdict(70, 500, &rat(1, 10), VerdictRule::ThreeSigma));
        assert!(!verdict(71, 500, &rat(1, 10), VerdictRule::ThreeSigma));
        assert!(verdict(50, 500, &rat(1, 10), VerdictRule::ExactBinomial99));
        assert!(!verdict(90, 500, &rat(1, 10), VerdictRule::ExactBinomial99));
        assert_eq!(binomial_upper_tail(2, 1, &rat(1, 2)), rat(3, 4));
    }

    #[test]
    fn halting_extraction_small() {
        let en = enumerate_halting(256, 10_000);
        let h = halting_presentation(&en);
        let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 1 };
        let bits = extract_halting_prefix(&learner, &h, &SampleFunction::constant(3), 12, &rat(1, 2), &rat(1, 2)).unwrap();
        assert_eq!(bits, en.table(12));
        assert!(bits[halt_program() as usize]);
        assert!(!bits[loop_program() as usize]);
        let _ = erm_realizable(&h, &[], 1, 1);
    }

    #[test]
    fn jump_extraction_small() {
        let programs = oracle_programs();
        let h = oracle_halting_presentation(&programs, 256, 500);
        let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 64 };
        let m = SampleFunction::constant(2);
        for z in [OracleTape::empty(), OracleTape::from_pairs([(0, 1)]), OracleTape::from_pairs([(0, 2), (2, 5)])] {
            let bits = extract_jump_bits(&learner, &h, &m, &z, &programs, &rat(1, 2), &rat(1, 2)).unwrap();
            let expect: Vec<bool> = programs.iter().map(|&e| jump_bit(&z, e, 500)).collect();
            assert_eq!(bits, expect);
        }
        let z = OracleTape::from_pairs([(0, 1)]);
        let bits = extract_jump_bits(&learner, &h, &m, &z, &programs[..1], &rat(1, 2), &rat(1, 2)).unwrap();
        assert_eq!(bits, vec![false]);
    }

    #[test]
    fn bad_sample_small() {
        let en = Arc::new(enumerate_halting(256, 10_000));
        let r = bad_sample_fn_demo(6, &rat(1, 10), en.clone(), int(4), 11).unwrap();
        assert_eq!(r.bits, en.table(6));
        assert_eq!(r.control_third_first, 0);
        assert!(r.control_default > 0);
    }

    #[test]
    fn cover_examples() {
        let r = rect_cover_check(&SampleFunction::constant(5), 4).unwrap();
        assert_eq!(r.rectangle_count(), 1);
        let r = rect_cover_check(&SampleFunction::closed_form(1), 3).unwrap();
        assert_eq!(r.grid_points, 49);
        let irrational_only = SampleFunction::from_fn("irrational-only", |e, d| {
            Err(PacError::Undefined { epsilon: format_rational(e), delta: format_rational(d) })
        });
        assert!(matches!(rect_cover_check(&irrational_only, 3), Err(PacError::CoverGap { .. })));
    }
}

//! Proper learners over a [`Presentation`]: realizable ERM search, the staged
//! anytime ERM, behavior-count ERM, the threshold learner `A_step`, the
//! coarsened threshold learner and the induced-learner adapter.
//!
//! All ties are broken toward the least ideal (or enumeration) index.

use std::collections::HashSet;

use thiserror::Error;

use crate::exact::{compare_gt, floor_dyadic, Rational, RealStream};
use crate::hypotheses::{eval, HypothesisError, Presentation};
use crate::machines::HaltingEnumeration;
use crate::spaces::LabeledExample;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("no zero-error hypothesis among the first {budget} ideal points")]
    NotRealizableWithinBudget { budget: u64 },
    #[error("found {found} of {wanted} behaviors before the ideal budget ran out")]
    BudgetExhaustedBeforeCount { found: u64, wanted: u64 },
    #[error("halting enumeration has {available} entries, needed index {needed}")]
    EnumerationTooShort { needed: usize, available: usize },
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
}

pub type Sample<F> = Vec<LabeledExample<F>>;

/// An ideal id of the index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProperOutput {
    pub ideal: u64,
}

/// Diagonal `z_1^1, z_2^2, ...` of the staged ERM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedOutput {
    /// `stages[t - 1]` is the stage-`t` output.
    pub stages: Vec<u64>,
    /// 0-based position where the constant tail starts, reported only when
    /// the tail spans at least the final quarter of the stages.
    pub stabilized_at: Option<usize>,
}

impl StagedOutput {
    pub fn last(&self) -> Option<u64> {
        self.stages.last().copied()
    }
}

/// Number of examples of `sample` that hypothesis `index` mislabels.
pub fn mistakes<P: Presentation>(
    h: &P,
    index: &P::Index,
    sample: &[LabeledExample<P::Feature>],
    cap: u32,
) -> Result<usize, HypothesisError> {
    let mut n = 0;
    for ex in sample {
        if eval(h, index, &ex.feature, cap)? != ex.label {
            n += 1;
        }
    }
    Ok(n)
}

fn consistent<P: Presentation>(
    h: &P,
    index: &P::Index,
    sample: &[LabeledExample<P::Feature>],
    cap: u32,
) -> Result<bool, HypothesisError> {
    for ex in sample {
        if eval(h, index, &ex.feature, cap)? != ex.label {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least ideal id with zero empirical error.
pub fn erm_realizable<P: Presentation>(
    h: &P,
    sample: &[LabeledExample<P::Feature>],
    ideal_budget: u64,
    cap: u32,
) -> Result<ProperOutput, LearnError> {
    for c in h.ideal_range(ideal_budget) {
        if consistent(h, &h.ideal_index(c), sample, cap)? {
            return Ok(ProperOutput { ideal: c });
        }
    }
    Err(LearnError::NotRealizableWithinBudget {
        budget: ideal_budget,
    })
}

/// Staged ERM. Stage `t` in `1..=K` looks at the first `t` ideal points and
/// evaluates every example at precision `min(t, cap)`. Among ideal points
/// whose labels on the whole sample are determined at that precision, the
/// first with minimal empirical error wins; if there are none, ideal 0.
pub fn erm_anytime<P: Presentation>(
    h: &P,
    sample: &[LabeledExample<P::Feature>],
    stages: u32,
    cap: u32,
) -> Result<StagedOutput, LearnError> {
    // labels[c][u]: resolved value, None until resolved; resolved values are
    // final because evaluation is monotone in precision
    let mut labels: Vec<Vec<Option<bool>>> = Vec::new();
    let mut indices: Vec<P::Index> = Vec::new();
    let mut out = Vec::with_capacity(stages as usize);
    let count = h.ideal_count();
    for t in 1..=stages {
        let k = t.min(cap);
        let width = count.map_or(t as u64, |c| c.min(t as u64)) as usize;
        while indices.len() < width {
            let c = indices.len() as u64;
            indices.push(h.ideal_index(c));
            let idx = &indices[c as usize];
            let row = sample
                .iter()
                .map(|ex| h.evaluate(idx, &ex.feature, k))
                .collect::<Result<Vec<_>, _>>()?;
            labels.push(row);
        }
        for (c, row) in labels.iter_mut().enumerate() {
            for (u, slot) in row.iter_mut().enumerate() {
                if slot.is_none() {
                    *slot = h.query(&indices[c], &sample[u].feature, k)?;
                }
            }
        }
        let mut best: Option<(usize, u64)> = None;
        for (c, row) in labels.iter().enumerate() {
            let err: Option<usize> = row
                .iter()
                .zip(sample)
                .map(|(v, ex)| v.map(|b| (b != ex.label) as usize))
                .sum();
            if let Some(e) = err {
                if best.is_none_or(|(b, _)| e < b) {
                    best = Some((e, c as u64));
                }
            }
        }
        out.push(best.map_or(0, |(_, c)| c));
    }
    let stabilized_at = constant_tail(&out);
    Ok(StagedOutput {
        stages: out,
        stabilized_at,
    })
}

fn constant_tail(stages: &[u64]) -> Option<usize> {
    let last = *stages.last()?;
    let start = stages.iter().rposition(|&v| v != last).map_or(0, |p| p + 1);
    let need = stages.len().div_ceil(4);
    (stages.len() - start >= need).then_some(start)
}

/// Scans ideal points until `count_oracle(U)` distinct behaviors on the
/// sample's features have appeared, then returns the scanned point of least
/// empirical error.
pub fn erm_behavior_count<P: Presentation>(
    h: &P,
    sample: &[LabeledExample<P::Feature>],
    count_oracle: impl Fn(&[P::Feature]) -> u64,
    ideal_budget: u64,
    cap: u32,
) -> Result<ProperOutput, LearnError> {
    let features: Vec<P::Feature> = sample.iter().map(|e| e.feature.clone()).collect();
    let wanted = count_oracle(&features);
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut best: Option<(usize, u64)> = None;
    for c in h.ideal_range(ideal_budget) {
        if seen.len() as u64 >= wanted {
            break;
        }
        let idx = h.ideal_index(c);
        let row = features
            .iter()
            .map(|x| eval(h, &idx, x, cap))
            .collect::<Result<Vec<bool>, _>>()?;
        let err = row.iter().zip(sample).filter(|(b, ex)| **b != ex.label).count();
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, c));
        }
        seen.insert(row);
    }
    if (seen.len() as u64) < wanted {
        return Err(LearnError::BudgetExhaustedBeforeCount {
            found: seen.len() as u64,
            wanted,
        });
    }
    Ok(ProperOutput {
        ideal: best.map_or(0, |(_, c)| c),
    })
}

/// `A_step`: least `i` with `[· > q_i]` consistent with the sample, each
/// comparison decided by [`compare_gt`].
pub fn stump_proper_learner(
    sample: &[LabeledExample<RealStream>],
    enumeration: &[Rational],
    cap: u32,
) -> Result<ProperOutput, LearnError> {
    'scan: for (i, q) in enumeration.iter().enumerate() {
        for ex in sample {
            let above = compare_gt(&ex.feature, q, cap)
                .ok_or(HypothesisError::PrecisionExhausted { cap })?;
            if above != ex.label {
                continue 'scan;
            }
        }
        return Ok(ProperOutput { ideal: i as u64 });
    }
    Err(LearnError::NotRealizableWithinBudget {
        budget: enumeration.len() as u64,
    })
}

/// `α(q, ℓ) = ⌊2^ℓ q⌋ / 2^ℓ`.
pub fn alpha(q: &Rational, l: u32) -> Rational {
    floor_dyadic(q, l)
}

/// `c(S)`: the least-index rational consistent with `S`, and 0 otherwise.
pub fn least_consistent_cutoff(
    sample: &[LabeledExample<RealStream>],
    enumeration: &[Rational],
    cap: u32,
) -> Result<Rational, LearnError> {
    match stump_proper_learner(sample, enumeration, cap) {
        Ok(out) => Ok(enumeration[out.ideal as usize].clone()),
        Err(LearnError::NotRealizableWithinBudget { .. }) => Ok(Rational::default()),
        Err(e) => Err(e),
    }
}

/// `c*(S) = α(c(S), e_{|S|})` where `e` is the halting enumeration.
pub fn coarsened_cutoff(
    sample: &[LabeledExample<RealStream>],
    halting: &HaltingEnumeration,
    enumeration: &[Rational],
    cap: u32,
) -> Result<Rational, LearnError> {
    let entry = halting
        .entries
        .get(sample.len())
        .ok_or(LearnError::EnumerationTooShort {
            needed: sample.len(),
            available: halting.len(),
        })?;
    let c = least_consistent_cutoff(sample, enumeration, cap)?;
    let l = u32::try_from(entry.program).expect("program index fits a precision");
    Ok(alpha(&c, l))
}

/// `A(S, x) = [x > c*(S)]`.
pub fn coarsened_stump_learner(
    sample: &[LabeledExample<RealStream>],
    x: &RealStream,
    halting: &HaltingEnumeration,
    enumeration: &[Rational],
    cap: u32,
) -> Result<bool, LearnError> {
    let c = coarsened_cutoff(sample, halting, enumeration, cap)?;
    Ok(compare_gt(x, &c, cap).ok_or(HypothesisError::PrecisionExhausted { cap })?)
}

/// A map from samples to ideal ids.
pub trait ProperLearner<F>: Send + Sync {
    fn learn(&self, sample: &[LabeledExample<F>]) -> Result<ProperOutput, LearnError>;
}

impl<F, T> ProperLearner<F> for T
where
    T: Fn(&[LabeledExample<F>]) -> Result<ProperOutput, LearnError> + Send + Sync,
{
    fn learn(&self, sample: &[LabeledExample<F>]) -> Result<ProperOutput, LearnError> {
        self(sample)
    }
}

/// Realizable ERM that answers ideal 0 when no consistent point exists
/// within budget, making it total.
pub struct TotalErm<'a, P> {
    pub class: &'a P,
    pub ideal_budget: u64,
    pub cap: u32,
}

impl<P: Presentation> ProperLearner<P::Feature> for TotalErm<'_, P> {
    fn learn(&self, sample: &[LabeledExample<P::Feature>]) -> Result<ProperOutput, LearnError> {
        match erm_realizable(self.class, sample, self.ideal_budget, self.cap) {
            Err(LearnError::NotRealizableWithinBudget { .. }) => Ok(ProperOutput { ideal: 0 }),
            other => other,
        }
    }
}

/// The learner induced by a proper learner: `A(S, x) = h(P(S), x)`.
pub struct InducedLearner<'a, P, L> {
    pub class: &'a P,
    pub proper: L,
    pub cap: u32,
}

pub fn induced_learner<P, L>(class: &P, proper: L, cap: u32) -> InducedLearner<'_, P, L> {
    InducedLearner { class, proper, cap }
}

impl<P: Presentation, L: ProperLearner<P::Feature>> InducedLearner<'_, P, L> {
    pub fn predict(
        &self,
        sample: &[LabeledExample<P::Feature>],
        x: &P::Feature,
    ) -> Result<bool, LearnError> {
        let out = self.proper.learn(sample)?;
        Ok(eval(self.class, &self.class.ideal_index(out.ideal), x, self.cap)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{generic_real, int, pow2_neg, rat};
    use crate::hypotheses::{default_rationals, halting_presentation, StumpPresentation};
    use crate::machines::{enumerate_halting, halt_time_equiv};

    fn ex(base: Rational, label: bool) -> LabeledExample<RealStream> {
        LabeledExample::new(generic_real(base, 10), label)
    }

    fn two_point() -> Sample<RealStream> {
        vec![ex(rat(9, 10), true), ex(rat(1, 10), false)]
    }

    #[test]
    fn realizable_examples() {
        let q = default_rationals(100);
        let h = StumpPresentation::new(q.clone()).unwrap();
        let out = erm_realizable(&h, &two_point(), 100, 64).unwrap();
        assert_eq!(q[out.ideal as usize], rat(1, 2));
        assert_eq!(out.ideal, 3);
        assert_eq!(erm_realizable(&h, &[], 100, 64).unwrap().ideal, 0);
        assert_eq!(stump_proper_learner(&two_point(), &q, 64).unwrap().ideal, 3);
        assert_eq!(stump_proper_learner(&[], &q, 64).unwrap().ideal, 0);
        // all labels 1 with features above 0: 0 itself is below every feature
        let ones = vec![ex(rat(1, 5), true), ex(rat(3, 5), true)];
        assert_eq!(stump_proper_learner(&ones, &q, 64).unwrap().ideal, 0);
    }

    #[test]
    fn halting_realizable() {
        let en = enumerate_halting(64, 1000);
        let h = halting_presentation(&en);
        let p = en.entries[5].program;
        let s = vec![LabeledExample::new(p, true)];
        let out = erm_realizable(&h, &s, u64::MAX, 1).unwrap();
        assert!(halt_time_equiv(h.programs()[out.ideal as usize], p, 1000).unwrap());
    }

    #[test]
    fn anytime_examples() {
        let q = default_rationals(40);
        let h = StumpPresentation::new(q.clone()).unwrap();
        let staged = erm_anytime(&h, &two_point(), 40, 64).unwrap();
        assert_eq!(staged.last(), Some(3));
        assert!(staged.stabilized_at.is_some());
        let empty = erm_anytime(&h, &[], 12, 64).unwrap();
        assert!(empty.stages.iter().all(|&s| s == 0));
        // min error 1/2, first attained by cutoff 0 (labels x > 0 for both)
        let noisy = vec![ex(rat(1, 2), true), ex(rat(3, 5), false)];
        let staged = erm_anytime(&h, &noisy, 40, 64).unwrap();
        let best = staged.last().unwrap();
        let e = mistakes(&h, &h.ideal_index(best), &noisy, 64).unwrap();
        assert_eq!(e, 1);
        for c in 0..best {
            assert!(mistakes(&h, &h.ideal_index(c), &noisy, 64).unwrap() > 1);
        }
    }

    #[test]
    fn behavior_count_examples() {
        let q = default_rationals(200);
        let h = StumpPresentation::new(q).unwrap();
        let s = two_point();
        let out = erm_behavior_count(&h, &s, |u| u.len() as u64 + 1, 200, 64).unwrap();
        assert_eq!(out, erm_realizable(&h, &s, 200, 64).unwrap());
        let single = vec![ex(rat(1, 4), false)];
        let out = erm_behavior_count(&h, &single, |_| 2, 200, 64).unwrap();
        assert_eq!(mistakes(&h, &h.ideal_index(out.ideal), &single, 64).unwrap(), 0);
        assert!(matches!(
            erm_behavior_count(&h, &s, |u| u.len() as u64 + 2, 200, 64),
            Err(LearnError::BudgetExhaustedBeforeCount { found: 3, wanted: 4 })
        ));
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(&rat(1, 3), 2), rat(1, 4));
        assert_eq!(alpha(&rat(3, 4), 2), rat(3, 4));
        for k in 1..=20 {
            assert!(alpha(&rat(1, 3), k) <= rat(1, 3) - pow2_neg(k + 2));
        }
    }

    #[test]
    fn coarsened_learner() {
        let en = enumerate_halting(256, 10_000);
        let q = crate::hypotheses::third_first(default_rationals(100));
        let s = vec![ex(rat(1, 10), false), ex(rat(9, 10), true)];
        let c = coarsened_cutoff(&s, &en, &q, 64).unwrap();
        let l = en.entries[2].program as u32;
        assert_eq!(c, alpha(&rat(1, 3), l));
        assert!(coarsened_stump_learner(&s, &generic_real(rat(1, 3), 20), &en, &q, 64).unwrap());
        let short = enumerate_halting(1, 10);
        let long: Vec<_> = (0..5).map(|_| ex(int(0), false)).collect();
        assert!(matches!(
            coarsened_cutoff(&long, &short, &q, 64),
            Err(LearnError::EnumerationTooShort { .. })
        ));
    }

    #[test]
    fn induced_examples() {
        let q = default_rationals(100);
        let h = StumpPresentation::new(q.clone()).unwrap();
        let qq = q.clone();
        let a = induced_learner(&h, move |s: &[LabeledExample<RealStream>]| stump_proper_learner(s, &qq, 64), 64);
        assert!(a.predict(&two_point(), &generic_real(int(5), 8)).unwrap());
        let zero = induced_learner(&h, |_: &[LabeledExample<RealStream>]| Ok(ProperOutput { ideal: 0 }), 64);
        assert!(!zero.predict(&[], &generic_real(int(-1), 8)).unwrap());
    }
}

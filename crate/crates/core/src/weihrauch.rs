//! Realizers as monotone prefix transducers on `ℕ^ℕ` names, strong
//! reductions `F = H ∘ G ∘ K`, parallelization and a limit operator that is
//! handed its modulus of convergence as a witness.
//!
//! A transducer maps every finite input prefix to the output prefix it has
//! committed to. Extending the input never retracts output.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{pow2_neg, Rational};
use crate::spaces::{pair_u64, point_distance, unpair_u64, MetricSpace, PointDescription};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeihrauchError {
    #[error("witness claims stabilization by index {claimed} at precision {precision}, but element {offender} is too far")]
    WitnessViolation {
        precision: u32,
        claimed: usize,
        offender: usize,
    },
    #[error("witness index {index} is past the end of a sequence of length {len}")]
    WitnessOutOfRange { index: usize, len: usize },
}

type Step = dyn Fn(&[u64]) -> Vec<u64> + Send + Sync;

#[derive(Clone)]
pub struct Transducer {
    label: String,
    step: Arc<Step>,
}

impl fmt::Debug for Transducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Transducer({})", self.label)
    }
}

impl Transducer {
    pub fn new(label: impl Into<String>, step: impl Fn(&[u64]) -> Vec<u64> + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            step: Arc::new(step),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, input: &[u64]) -> Vec<u64> {
        (self.step)(input)
    }

    pub fn identity() -> Self {
        Self::new("id", |p| p.to_vec())
    }

    /// Symbolwise map.
    pub fn map(label: impl Into<String>, f: impl Fn(usize, u64) -> u64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |p| p.iter().enumerate().map(|(i, &v)| f(i, v)).collect())
    }
}

/// `H ∘ G ∘ K`.
pub fn compose(h: &Transducer, g: &Transducer, k: &Transducer) -> Transducer {
    let (h, g, k) = (h.clone(), g.clone(), k.clone());
    let label = format!("{} . {} . {}", h.label, g.label, k.label);
    Transducer::new(label, move |p| h.apply(&g.apply(&k.apply(p))))
}

/// Whether `a` is a prefix of `b`.
pub fn is_prefix(a: &[u64], b: &[u64]) -> bool {
    a.len() <= b.len() && a == &b[..a.len()]
}

/// Checks `T(p) ⊑ T(p')` for the prefix `p = p'[..cut]`.
pub fn check_monotone(t: &Transducer, input: &[u64], cut: usize) -> bool {
    let cut = cut.min(input.len());
    is_prefix(&t.apply(&input[..cut]), &t.apply(input))
}

/// Coordinate `i` of an interleaved stream: positions `⟨i, 0⟩, ⟨i, 1⟩, ...`
/// up to the first one not yet present.
pub fn deinterleave(p: &[u64], i: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for j in 0.. {
        match pair_u64(i, j) {
            Some(n) if (n as usize) < p.len() => out.push(p[n as usize]),
            _ => break,
        }
    }
    out
}

/// Longest prefix of the interleaving whose every position is available.
pub fn interleave(coords: &[Vec<u64>]) -> Vec<u64> {
    let mut out = Vec::new();
    for n in 0u64.. {
        let (i, j) = unpair_u64(n);
        match coords.get(i as usize).and_then(|c| c.get(j as usize)) {
            Some(&v) => out.push(v),
            None => break,
        }
    }
    out
}

/// Number of coordinates that have at least one symbol in a prefix of
/// length `len`.
fn live_coordinates(len: usize) -> u64 {
    (0u64..)
        .take_while(|&i| pair_u64(i, 0).is_some_and(|n| (n as usize) < len))
        .count() as u64
}

/// Per-coordinate outputs of the parallelization on an interleaved input.
pub fn parallel_outputs(g: &Transducer, input: &[u64]) -> Vec<Vec<u64>> {
    (0..live_coordinates(input.len()))
        .into_par_iter()
        .map(|i| g.apply(&deinterleave(input, i)))
        .collect()
}

/// `Ĝ`: an independent copy of `G` on each coordinate of the interleaved
/// input (Cantor pairing), outputs interleaved the same way.
pub fn parallelize(g: &Transducer) -> Transducer {
    let g = g.clone();
    let label = format!("parallel({})", g.label);
    Transducer::new(label, move |p| interleave(&parallel_outputs(&g, p)))
}

/// The limit of `seq` given a modulus: for every `n >= modulus(k)`,
/// `d(seq[n], lim) < 2^-k`. Precision `i` of the result reads element
/// `modulus(i + 2)` at precision `i + 2`.
///
/// The witness is checked against every element up to `lookahead` past
/// each claimed index for precisions `< check_depth`.
pub fn lim_with_witness(
    space: &MetricSpace,
    seq: &[PointDescription],
    modulus: impl Fn(u32) -> usize + Send + Sync + 'static,
    check_depth: u32,
    lookahead: usize,
) -> Result<PointDescription, WeihrauchError> {
    for k in 0..check_depth {
        let anchor = modulus(k);
        if anchor >= seq.len() {
            return Err(WeihrauchError::WitnessOutOfRange {
                index: anchor,
                len: seq.len(),
            });
        }
        // both within 2^-k of the limit, so within 2^(1-k) of each other
        let bound: Rational = pow2_neg(k) * Rational::from_integer(2.into());
        let end = (anchor + lookahead).min(seq.len() - 1);
        for n in anchor + 1..=end {
            let precision = k + 4;
            let violated = match point_distance(space, &seq[n], &seq[anchor], precision) {
                Ok(iv) => iv.lo() >= &bound,
                Err(_) => true,
            };
            if violated {
                return Err(WeihrauchError::WitnessViolation {
                    precision: k,
                    claimed: anchor,
                    offender: n,
                });
            }
        }
    }
    let seq: Vec<PointDescription> = seq.to_vec();
    let last = seq.len() - 1;
    Ok(PointDescription::from_fn(move |i| {
        seq[modulus(i + 2).min(last)].ideal_at(i + 2)
    }))
}

/// Limit realizer on streams of discrete ideal ids: output symbol `i` is
/// `p[modulus(i + 2)]`, emitted once available and at most one symbol per
/// input symbol.
pub fn lim_transducer(modulus: impl Fn(u32) -> usize + Send + Sync + 'static) -> Transducer {
    Transducer::new("lim", move |p| {
        let mut out = Vec::new();
        for i in 0..p.len() as u32 {
            match p.get(modulus(i + 2)) {
                Some(&v) => out.push(v),
                None => break,
            }
        }
        out
    })
}

/// Pre- and post-processors of a strong reduction.
#[derive(Debug, Clone)]
pub struct StrongReduction {
    pub pre: Transducer,
    pub post: Transducer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub input: usize,
    pub position: usize,
    pub expected: u64,
    pub got: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub agree: bool,
    pub compared: usize,
    pub first_divergence: Option<Divergence>,
}

/// Compares `post ∘ G ∘ pre` with `target` on each input, on every output
/// position below `depth` that both have produced.
pub fn check_reduction(
    target: &Transducer,
    g: &Transducer,
    r: &StrongReduction,
    inputs: &[Vec<u64>],
    depth: usize,
) -> ReductionReport {
    let composed = compose(&r.post, g, &r.pre);
    let mut compared = 0;
    for (n, p) in inputs.iter().enumerate() {
        let (want, got) = (target.apply(p), composed.apply(p));
        for (pos, (&w, &v)) in want.iter().zip(&got).take(depth).enumerate() {
            if w != v {
                return ReductionReport {
                    agree: false,
                    compared,
                    first_divergence: Some(Divergence {
                        input: n,
                        position: pos,
                        expected: w,
                        got: v,
                    }),
                };
            }
            compared += 1;
        }
    }
    ReductionReport {
        agree: true,
        compared,
        first_divergence: None,
    }
}

/// Emits `stages[..|p|]`: one staged ERM output per input symbol.
pub fn stage_builder(stages: Vec<u64>) -> Transducer {
    Transducer::new("stages", move |p| stages[..p.len().min(stages.len())].to_vec())
}

/// Emits `id` once per input symbol.
pub fn constant_stream(id: u64) -> Transducer {
    Transducer::new(format!("const({id})"), move |p| vec![id; p.len()])
}

//! Gaussian feature fitness and the cross-track interval score.

use super::FitnessSpec;
use crate::notation::{extract_features, FeatureVector, HarmonicContext, NoteSeq};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tracks differ in length ({0} vs {1} steps)")]
pub struct LengthMismatch(pub usize, pub usize);

/// Weighted sum of Gaussian bumps, one per feature:
/// `Σ w·exp(-(r - μ)² / 2σ²)`.
pub fn feature_fitness(features: &FeatureVector, spec: &FitnessSpec) -> f64 {
    spec.targets
        .iter()
        .zip(features.0.iter())
        .filter(|(t, _)| t.weight > 0.0)
        .map(|(t, &r)| {
            let d = r - t.mean;
            t.weight * (-(d * d) / (2.0 * t.deviation * t.deviation)).exp()
        })
        .sum()
}

/// Score for one pair of simultaneously sounding pitches (or silences).
pub fn interval_score(a: Option<u8>, b: Option<u8>) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (None, Some(_)) | (Some(_), None) => 10.0,
        (Some(x), Some(y)) => match x.abs_diff(y) % 12 {
            0 | 3 | 4 | 8 | 9 => 8.0,
            5 | 7 => 15.0,
            6 => -30.0,
            _ => -20.0,
        },
    }
}

/// `tanh(mean / 10)` of the per-step interval scores of two aligned pitch streams.
pub fn harmony_of_sounding(a: &[Option<u8>], b: &[Option<u8>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let total: f64 = a.iter().zip(b).map(|(&x, &y)| interval_score(x, y)).sum();
    (total / a.len() as f64 / 10.0).tanh()
}

/// Harmonic agreement of two equally long tracks, in `[-1, 1]`.
pub fn harmony_score(a: &NoteSeq, b: &NoteSeq) -> Result<f64, LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch(a.len(), b.len()));
    }
    Ok(harmony_of_sounding(&a.sounding(), &b.sounding()))
}

/// Reference tracks with their sounding pitches precomputed, shared by every
/// individual of a population.
#[derive(Clone, Debug, Default)]
pub struct References {
    sounding: Vec<Vec<Option<u8>>>,
}

impl References {
    pub fn new(refs: &[NoteSeq]) -> Self {
        References {
            sounding: refs.iter().map(|r| r.sounding()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sounding.is_empty()
    }

    /// Mean harmony score of `seq` against every reference, or `None` without references.
    pub fn mean_harmony(&self, seq: &NoteSeq) -> Option<f64> {
        if self.sounding.is_empty() {
            return None;
        }
        let own = seq.sounding();
        let sum: f64 = self
            .sounding
            .iter()
            .map(|r| {
                assert_eq!(r.len(), own.len(), "reference length mismatch");
                harmony_of_sounding(&own, r)
            })
            .sum();
        Some(sum / self.sounding.len() as f64)
    }
}

/// Fitness of `seq`: the Gaussian feature sum plus, when references exist,
/// `harmony_weight × (h + 1) / 2` for the mean harmony score `h`.
/// The result lies in `[0, Σw + harmony_weight]`.
pub fn fitness(seq: &NoteSeq, spec: &FitnessSpec, ctx: &HarmonicContext, refs: &[NoteSeq]) -> f64 {
    fitness_with(seq, spec, ctx, &References::new(refs))
}

pub(crate) fn fitness_with(
    seq: &NoteSeq,
    spec: &FitnessSpec,
    ctx: &HarmonicContext,
    refs: &References,
) -> f64 {
    let features = extract_features(seq, ctx);
    let harmony = refs
        .mean_harmony(seq)
        .map_or(0.0, |h| spec.harmony_weight * (h + 1.0) / 2.0);
    feature_fitness(&features, spec) + harmony
}

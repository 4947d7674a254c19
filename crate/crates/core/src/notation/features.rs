//! Melodic features measured on a [`NoteSeq`], each normalized to `[0, 1]`.
//!
//! Conventions shared by all features:
//! - an *interval* is the signed pitch difference between two consecutive
//!   sounded notes, whatever rests lie between them; it belongs to the
//!   measure holding the onset of its second note;
//! - a note belongs to the measure holding its onset;
//! - a ratio whose denominator is empty (no notes, no intervals) is 0.

use super::{sounded_notes, HarmonicContext, Note, NoteSeq, HOLD, REST};
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// Semitone classes (mod 12) counted as dissonant.
pub const DISSONANT_INTERVALS: [u8; 5] = [1, 2, 6, 10, 11];

const PITCH_RANGE_SPAN: f64 = 48.0;
const OCTAVE: f64 = 12.0;
/// Notes of this many steps or fewer (an eighth) count as short.
const SHORT_NOTE_STEPS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    UniqueNotesPerMeasure,
    UniqueIntervalsPerMeasure,
    DissonantIntervalRatio,
    OverOctaveIntervalRatio,
    InScaleRatio,
    InChordRatio,
    PitchRange,
    RestRatio,
    UniqueLengthsPerMeasure,
    AvgPitch,
    PitchDeviation,
    StrongBeatLength,
    MelodicContour,
    OffbeatRatio,
    AvgIntervalSize,
    LogAvgNoteLength,
    LogLengthDeviation,
    StepwiseIntervalRuns,
    ShortNoteRuns,
    RepeatedFragmentLength,
    RootNoteMeasureStarts,
}

impl Feature {
    pub const COUNT: usize = 21;

    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::UniqueNotesPerMeasure,
        Feature::UniqueIntervalsPerMeasure,
        Feature::DissonantIntervalRatio,
        Feature::OverOctaveIntervalRatio,
        Feature::InScaleRatio,
        Feature::InChordRatio,
        Feature::PitchRange,
        Feature::RestRatio,
        Feature::UniqueLengthsPerMeasure,
        Feature::AvgPitch,
        Feature::PitchDeviation,
        Feature::StrongBeatLength,
        Feature::MelodicContour,
        Feature::OffbeatRatio,
        Feature::AvgIntervalSize,
        Feature::LogAvgNoteLength,
        Feature::LogLengthDeviation,
        Feature::StepwiseIntervalRuns,
        Feature::ShortNoteRuns,
        Feature::RepeatedFragmentLength,
        Feature::RootNoteMeasureStarts,
    ];

    /// 1-based feature id.
    pub fn id(self) -> usize {
        self as usize + 1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Feature> {
        Feature::ALL.get(id.checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        use Feature::*;
        match self {
            UniqueNotesPerMeasure => "unique_notes_per_measure",
            UniqueIntervalsPerMeasure => "unique_intervals_per_measure",
            DissonantIntervalRatio => "dissonant_interval_ratio",
            OverOctaveIntervalRatio => "over_octave_interval_ratio",
            InScaleRatio => "in_scale_ratio",
            InChordRatio => "in_chord_ratio",
            PitchRange => "pitch_range",
            RestRatio => "rest_ratio",
            UniqueLengthsPerMeasure => "unique_lengths_per_measure",
            AvgPitch => "avg_pitch",
            PitchDeviation => "pitch_deviation",
            StrongBeatLength => "strong_beat_length",
            MelodicContour => "melodic_contour",
            OffbeatRatio => "offbeat_ratio",
            AvgIntervalSize => "avg_interval_size",
            LogAvgNoteLength => "log_avg_note_length",
            LogLengthDeviation => "log_length_deviation",
            StepwiseIntervalRuns => "stepwise_interval_runs",
            ShortNoteRuns => "short_note_runs",
            RepeatedFragmentLength => "repeated_fragment_length",
            RootNoteMeasureStarts => "root_note_measure_starts",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// One normalized value per [`Feature`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FeatureVector(pub [f64; Feature::COUNT]);

impl Index<Feature> for FeatureVector {
    type Output = f64;
    fn index(&self, f: Feature) -> &f64 {
        &self.0[f.index()]
    }
}

impl IndexMut<Feature> for FeatureVector {
    fn index_mut(&mut self, f: Feature) -> &mut f64 {
        &mut self.0[f.index()]
    }
}

impl FeatureVector {
    pub fn iter(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        Feature::ALL.into_iter().map(move |f| (f, self[f]))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Mean over measures of (distinct items / items), skipping empty measures.
fn mean_unique_per_measure<T: Ord + Copy>(items: &[(usize, T)], measures: usize) -> f64 {
    let mut buckets: Vec<Vec<T>> = vec![Vec::new(); measures];
    for &(m, v) in items {
        buckets[m].push(v);
    }
    let per: Vec<f64> = buckets
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|mut b| {
            let n = b.len();
            b.sort_unstable();
            b.dedup();
            b.len() as f64 / n as f64
        })
        .collect();
    mean(&per)
}

/// Length of the longest run of codes appearing at least twice without overlap.
pub(crate) fn longest_repeat(codes: &[i16]) -> usize {
    let n = codes.len();
    let mut prev = vec![0usize; n + 1];
    let mut cur = vec![0usize; n + 1];
    let mut best = 0;
    for i in 1..=n {
        for j in (i + 1)..=n {
            cur[j] = if codes[i - 1] == codes[j - 1] && prev[j - 1] < j - i {
                prev[j - 1] + 1
            } else {
                0
            };
            best = best.max(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Measures all features of `seq` against `ctx`.
///
/// `ctx` must cover at least `seq.len()` steps.
pub fn extract_features(seq: &NoteSeq, ctx: &HarmonicContext) -> FeatureVector {
    let codes = seq.codes();
    let spm = seq.steps_per_measure();
    let measures = seq.measures();
    let len = codes.len();
    let notes: Vec<Note> = sounded_notes(codes);
    let mut fv = FeatureVector::default();

    let intervals: Vec<(usize, i32)> = notes
        .windows(2)
        .map(|w| (w[1].onset / spm, w[1].pitch as i32 - w[0].pitch as i32))
        .collect();
    let n_notes = notes.len();
    let n_int = intervals.len();

    let note_pitches: Vec<(usize, u8)> = notes.iter().map(|n| (n.onset / spm, n.pitch)).collect();
    fv[Feature::UniqueNotesPerMeasure] = mean_unique_per_measure(&note_pitches, measures);
    fv[Feature::UniqueIntervalsPerMeasure] = mean_unique_per_measure(&intervals, measures);

    let dissonant = intervals
        .iter()
        .filter(|(_, i)| DISSONANT_INTERVALS.contains(&((i.unsigned_abs() % 12) as u8)))
        .count();
    fv[Feature::DissonantIntervalRatio] = ratio(dissonant, n_int);
    fv[Feature::OverOctaveIntervalRatio] = ratio(
        intervals.iter().filter(|(_, i)| i.abs() > 12).count(),
        n_int,
    );

    fv[Feature::InScaleRatio] = ratio(
        notes.iter().filter(|n| ctx.in_scale(n.pitch)).count(),
        n_notes,
    );
    fv[Feature::InChordRatio] = ratio(
        notes
            .iter()
            .filter(|n| ctx.in_chord(n.onset, n.pitch))
            .count(),
        n_notes,
    );

    let pitches: Vec<f64> = notes.iter().map(|n| n.pitch as f64).collect();
    if let (Some(lo), Some(hi)) = (
        notes.iter().map(|n| n.pitch).min(),
        notes.iter().map(|n| n.pitch).max(),
    ) {
        fv[Feature::PitchRange] = ((hi - lo) as f64 / PITCH_RANGE_SPAN).min(1.0);
    }

    // Rest steps: every REST plus the extensions that prolong it.
    let mut rest_steps = 0;
    let mut resting = false;
    for &c in codes {
        match c {
            REST => {
                resting = true;
                rest_steps += 1;
            }
            HOLD if resting => rest_steps += 1,
            HOLD => {}
            _ => resting = false,
        }
    }
    fv[Feature::RestRatio] = ratio(rest_steps, len);

    let lengths: Vec<(usize, usize)> = notes.iter().map(|n| (n.onset / spm, n.duration)).collect();
    fv[Feature::UniqueLengthsPerMeasure] = mean_unique_per_measure(&lengths, measures);

    fv[Feature::AvgPitch] = mean(&pitches) / 127.0;
    fv[Feature::PitchDeviation] = (std_dev(&pitches) / OCTAVE).min(1.0);

    let strong: Vec<f64> = notes
        .iter()
        .filter(|n| ctx.strong_beats.contains(&(n.onset % spm)))
        .map(|n| n.duration as f64)
        .collect();
    fv[Feature::StrongBeatLength] = (mean(&strong) / spm as f64).min(1.0);

    fv[Feature::MelodicContour] = ratio(intervals.iter().filter(|(_, i)| *i > 0).count(), n_int);
    fv[Feature::OffbeatRatio] = ratio(notes.iter().filter(|n| n.onset % 2 == 1).count(), n_notes);

    let abs_int: Vec<f64> = intervals.iter().map(|(_, i)| i.abs() as f64).collect();
    fv[Feature::AvgIntervalSize] = (mean(&abs_int) / OCTAVE).min(1.0);

    if n_notes > 0 && spm > 1 {
        let ln_max = (spm as f64).ln();
        let durations: Vec<f64> = notes.iter().map(|n| n.duration as f64).collect();
        fv[Feature::LogAvgNoteLength] = (mean(&durations).ln() / ln_max).clamp(0.0, 1.0);
        let logs: Vec<f64> = durations.iter().map(|d| d.ln()).collect();
        fv[Feature::LogLengthDeviation] = (std_dev(&logs) / ln_max).clamp(0.0, 1.0);
    }

    fv[Feature::StepwiseIntervalRuns] = ratio(
        intervals
            .iter()
            .filter(|(_, i)| (1..=3).contains(&i.abs()))
            .count(),
        n_int,
    );
    fv[Feature::ShortNoteRuns] = ratio(
        notes
            .windows(2)
            .filter(|w| w[0].duration <= SHORT_NOTE_STEPS && w[1].duration <= SHORT_NOTE_STEPS)
            .count(),
        n_notes.saturating_sub(1),
    );

    fv[Feature::RepeatedFragmentLength] = ratio(longest_repeat(codes), len);

    let root_starts = (0..measures)
        .filter(|&m| {
            let step = m * spm;
            let c = codes[step];
            c >= 0 && (c as u8) % 12 == ctx.chord_at(step).root.get()
        })
        .count();
    fv[Feature::RootNoteMeasureStarts] = ratio(root_starts, measures);

    fv
}

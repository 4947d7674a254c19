//! Sixteenth-grid note sequences.
//!
//! A melodic track is a vector of codes, one per sixteenth-note step:
//! `0..=127` starts a note at that MIDI pitch, [`REST`] starts a rest, and
//! [`HOLD`] prolongs whatever note or rest precedes it by one more step.

mod features;

pub use features::{extract_features, Feature, FeatureVector, DISSONANT_INTERVALS};

use crate::schema::{ChordSymbol, Scale, Section, TimeSignature};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Code = i16;

pub const REST: Code = -1;
pub const HOLD: Code = -2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotationError {
    #[error("sequence length {len} is not a positive multiple of {steps_per_measure} steps")]
    Length {
        len: usize,
        steps_per_measure: usize,
    },
    #[error("code {code} at step {step} is outside -2..=127")]
    Code { step: usize, code: Code },
    #[error("a sequence cannot open with an extension")]
    LeadingHold,
}

/// A melodic track on the sixteenth grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSeq")]
pub struct NoteSeq {
    codes: Vec<Code>,
    steps_per_measure: usize,
}

impl NoteSeq {
    pub fn new(codes: Vec<Code>, steps_per_measure: usize) -> Result<Self, NotationError> {
        if steps_per_measure == 0
            || codes.is_empty()
            || !codes.len().is_multiple_of(steps_per_measure)
        {
            return Err(NotationError::Length {
                len: codes.len(),
                steps_per_measure,
            });
        }
        if let Some((step, &code)) = codes
            .iter()
            .enumerate()
            .find(|(_, &c)| !(HOLD..=127).contains(&c))
        {
            return Err(NotationError::Code { step, code });
        }
        if codes[0] == HOLD {
            return Err(NotationError::LeadingHold);
        }
        Ok(NoteSeq {
            codes,
            steps_per_measure,
        })
    }

    /// Builds a sequence from operator output: out-of-range pitches are
    /// clamped and a leading extension becomes a rest.
    ///
    /// Panics if the length is not a positive multiple of `steps_per_measure`.
    pub fn repaired(mut codes: Vec<Code>, steps_per_measure: usize) -> Self {
        for c in codes.iter_mut() {
            *c = (*c).clamp(HOLD, 127);
        }
        if let Some(first) = codes.first_mut() {
            if *first == HOLD {
                *first = REST;
            }
        }
        NoteSeq::new(codes, steps_per_measure).expect("repaired sequence has a valid shape")
    }

    pub fn rests(measures: usize, steps_per_measure: usize) -> Self {
        NoteSeq::repaired(vec![REST; measures * steps_per_measure], steps_per_measure)
    }

    pub fn codes(&self) -> &[Code] {
        &self.codes
    }

    pub fn into_codes(self) -> Vec<Code> {
        self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn steps_per_measure(&self) -> usize {
        self.steps_per_measure
    }

    pub fn measures(&self) -> usize {
        self.codes.len() / self.steps_per_measure
    }

    pub fn notes(&self) -> Vec<Note> {
        sounded_notes(&self.codes)
    }

    /// The pitch sounding at every step, following extensions back to their note.
    pub fn sounding(&self) -> Vec<Option<u8>> {
        sounding_pitches(&self.codes)
    }
}

#[derive(Deserialize)]
struct RawSeq {
    codes: Vec<Code>,
    steps_per_measure: usize,
}

impl TryFrom<RawSeq> for NoteSeq {
    type Error = NotationError;

    fn try_from(raw: RawSeq) -> Result<Self, Self::Error> {
        NoteSeq::new(raw.codes, raw.steps_per_measure)
    }
}

/// One sounded note: pitch, onset step and length in steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Note {
    pub pitch: u8,
    pub onset: usize,
    pub duration: usize,
}

/// Extracts the sounded notes; each lasts one step plus its trailing extensions.
pub fn sounded_notes(codes: &[Code]) -> Vec<Note> {
    let mut notes: Vec<Note> = Vec::new();
    let mut in_note = false;
    for (step, &code) in codes.iter().enumerate() {
        match code {
            HOLD if in_note => {
                if let Some(last) = notes.last_mut() {
                    last.duration += 1;
                }
            }
            HOLD => {}
            REST => in_note = false,
            pitch => {
                notes.push(Note {
                    pitch: pitch as u8,
                    onset: step,
                    duration: 1,
                });
                in_note = true;
            }
        }
    }
    notes
}

pub fn sounding_pitches(codes: &[Code]) -> Vec<Option<u8>> {
    let mut current = None;
    codes
        .iter()
        .map(|&c| {
            match c {
                HOLD => {}
                REST => current = None,
                p => current = Some(p as u8),
            }
            current
        })
        .collect()
}

/// Scale and per-step chords a melodic track is measured against.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicContext {
    pub scale: Scale,
    pub chord_per_step: Vec<ChordSymbol>,
    /// Step offsets within a measure that count as strong beats.
    pub strong_beats: Vec<usize>,
    scale_mask: u16,
    chord_masks: Vec<u16>,
}

impl HarmonicContext {
    pub fn new(scale: Scale, chord_per_step: Vec<ChordSymbol>, strong_beats: Vec<usize>) -> Self {
        let chord_masks = chord_per_step.iter().map(|c| c.mask()).collect();
        HarmonicContext {
            scale_mask: scale.mask(),
            scale,
            chord_per_step,
            strong_beats,
            chord_masks,
        }
    }

    /// Context for `measures` measures of `section`, one chord per measure.
    pub fn for_section(section: &Section, measures: usize) -> Self {
        let spm = section.steps_per_measure();
        let chords = (0..measures * spm)
            .map(|step| *section.chord_at_measure(step / spm))
            .collect();
        HarmonicContext::new(section.scale, chords, strong_beats(section.time_signature))
    }

    /// A sub-span of this context, for evolving units shorter than the track.
    pub fn slice(&self, start: usize, len: usize, unit_steps: usize) -> Self {
        let chords = self.chord_per_step[start..start + len].to_vec();
        let beats = self
            .strong_beats
            .iter()
            .copied()
            .filter(|&b| b < unit_steps)
            .collect();
        HarmonicContext::new(self.scale, chords, beats)
    }

    pub fn len(&self) -> usize {
        self.chord_per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chord_per_step.is_empty()
    }

    pub fn in_scale(&self, pitch: u8) -> bool {
        self.scale_mask & (1 << (pitch % 12)) != 0
    }

    pub fn in_chord(&self, step: usize, pitch: u8) -> bool {
        self.chord_masks[step] & (1 << (pitch % 12)) != 0
    }

    pub fn chord_at(&self, step: usize) -> &ChordSymbol {
        &self.chord_per_step[step]
    }
}

/// Downbeat, plus the third beat in four-beat measures.
pub fn strong_beats(ts: TimeSignature) -> Vec<usize> {
    if ts.numerator == 4 {
        vec![0, 2 * ts.steps_per_beat()]
    } else {
        vec![0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn held_note() {
        assert_eq!(
            sounded_notes(&[60, -2, -2, -2]),
            vec![Note {
                pitch: 60,
                onset: 0,
                duration: 4
            }]
        );
    }

    #[test]
    fn rest_splits_notes() {
        assert_eq!(
            sounded_notes(&[60, -1, 62, -2]),
            vec![
                Note {
                    pitch: 60,
                    onset: 0,
                    duration: 1
                },
                Note {
                    pitch: 62,
                    onset: 2,
                    duration: 2
                }
            ]
        );
    }

    #[test]
    fn extended_note_from_mutation_table() {
        let notes = sounded_notes(&[81, 58, 46, 58, 46, -2, 61, -2]);
        let last = notes.last().unwrap();
        assert_eq!((last.pitch, last.duration), (61, 2));
    }

    #[test]
    fn hold_after_rest_prolongs_rest() {
        let notes = sounded_notes(&[-1, -2, 60, -2]);
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].duration, 2);
    }

    #[test]
    fn construction_checks() {
        assert_eq!(
            NoteSeq::new(vec![-2, 60], 2),
            Err(NotationError::LeadingHold)
        );
        assert!(matches!(
            NoteSeq::new(vec![60, 60, 60], 2),
            Err(NotationError::Length { .. })
        ));
        assert!(matches!(
            NoteSeq::new(vec![60, 128], 2),
            Err(NotationError::Code { step: 1, .. })
        ));
        let r = NoteSeq::repaired(vec![-2, 200, -5, 3], 4);
        assert_eq!(r.codes(), &[-1, 127, -2, 3]);
    }

    #[test]
    fn sounding_follows_holds() {
        assert_eq!(
            sounding_pitches(&[60, -2, -1, -2, 62]),
            vec![Some(60), Some(60), None, None, Some(62)]
        );
    }
}

//! The ten musically meaningful mutation operators.
//!
//! Each operator is split in two: [`sample`] draws a concrete [`Mutation`]
//! (sites and amounts) from the random stream, and [`Mutation::apply`] is a
//! pure edit. Tests pin sites by constructing a `Mutation` directly.

use crate::notation::{sounded_notes, Code, NoteSeq, HOLD, REST};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Note length treated as "normal" by [`MutationKind::LengthNormalize`], in steps.
pub const NORMAL_NOTE_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    /// Re-pitch a note to a random interval (±12) from its predecessor.
    Interval,
    /// Shift a segment by a random interval in ±12.
    Transpose,
    /// Move a note's onset one step earlier, shortening or removing what preceded it.
    Extend,
    /// Turn a note into a rest, or a rest into a note.
    Rest,
    /// Turn a run of codes into extensions.
    LongNote,
    /// Turn an extension into a new note.
    ExtensionToNote,
    /// Split notes longer than a quarter, lengthen shorter ones.
    LengthNormalize,
    /// Sort the pitches in a slice, ascending or descending.
    Sort,
    /// Copy a fragment to the same offset of another measure.
    RepeatPaste,
    /// Copy a fragment to the steps right after it.
    RepeatAdjacent,
}

impl MutationKind {
    pub const ALL: [MutationKind; 10] = [
        MutationKind::Interval,
        MutationKind::Transpose,
        MutationKind::Extend,
        MutationKind::Rest,
        MutationKind::LongNote,
        MutationKind::ExtensionToNote,
        MutationKind::LengthNormalize,
        MutationKind::Sort,
        MutationKind::RepeatPaste,
        MutationKind::RepeatAdjacent,
    ];
}

/// A fully determined edit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    Interval {
        index: usize,
        interval: i32,
    },
    Transpose {
        start: usize,
        end: usize,
        shift: i32,
    },
    Extend {
        index: usize,
    },
    Rest {
        index: usize,
        pitch: u8,
    },
    LongNote {
        start: usize,
        len: usize,
    },
    ExtensionToNote {
        index: usize,
        pitch: u8,
    },
    Split {
        at: usize,
    },
    Lengthen {
        onset: usize,
    },
    Sort {
        start: usize,
        end: usize,
        ascending: bool,
    },
    RepeatPaste {
        src: usize,
        len: usize,
        dst: usize,
    },
    RepeatAdjacent {
        src: usize,
        len: usize,
    },
}

fn clamp_pitch(p: i32) -> Code {
    p.clamp(0, 127) as Code
}

/// Nearest sounded pitch at or before `index`, else after it.
fn nearby_pitch(codes: &[Code], index: usize) -> Option<i32> {
    let mut current = None;
    for &c in &codes[..=index.min(codes.len() - 1)] {
        if c >= 0 {
            current = Some(c as i32);
        }
    }
    current.or_else(|| codes[index..].iter().find(|&&c| c >= 0).map(|&c| c as i32))
}

impl Mutation {
    /// Applies the edit. Codes stay in range and a sequence never opens with an extension.
    pub fn apply(&self, seq: &NoteSeq) -> NoteSeq {
        let spm = seq.steps_per_measure();
        let mut codes = seq.codes().to_vec();
        let len = codes.len();
        match *self {
            Mutation::Interval { index, interval } => {
                if let Some(prev) = codes[..index].iter().rev().find(|&&c| c >= 0) {
                    codes[index] = clamp_pitch(*prev as i32 + interval);
                }
            }
            Mutation::Transpose { start, end, shift } => {
                for c in codes[start..end.min(len)].iter_mut().filter(|c| **c >= 0) {
                    *c = clamp_pitch(*c as i32 + shift);
                }
            }
            Mutation::Extend { index } => {
                if index >= 1 && codes[index] >= 0 {
                    codes[index - 1] = codes[index];
                    codes[index] = HOLD;
                }
            }
            Mutation::Rest { index, pitch } => {
                codes[index] = if codes[index] >= 0 {
                    REST
                } else {
                    pitch as Code
                };
            }
            Mutation::LongNote { start, len: n } => {
                for c in codes[start.max(1)..(start + n).min(len)].iter_mut() {
                    *c = HOLD;
                }
            }
            Mutation::ExtensionToNote { index, pitch } => {
                if index >= 1 && codes[index] == HOLD {
                    codes[index] = pitch as Code;
                }
            }
            Mutation::Split { at } => {
                if let Some(p) = nearby_pitch(&codes, at) {
                    if codes[at] == HOLD {
                        codes[at] = p as Code;
                    }
                }
            }
            Mutation::Lengthen { onset } => {
                let end = onset
                    + 1
                    + codes[onset + 1..]
                        .iter()
                        .take_while(|&&c| c == HOLD)
                        .count();
                if end < len {
                    let next = codes[end];
                    codes[end] = HOLD;
                    // The following event survives, one step shorter, if it was held.
                    if end + 1 < len && codes[end + 1] == HOLD {
                        codes[end + 1] = next;
                    }
                }
            }
            Mutation::Sort {
                start,
                end,
                ascending,
            } => {
                let end = end.min(len);
                let mut pitches: Vec<Code> = codes[start..end]
                    .iter()
                    .copied()
                    .filter(|&c| c >= 0)
                    .collect();
                pitches.sort_unstable();
                if !ascending {
                    pitches.reverse();
                }
                let mut it = pitches.into_iter();
                for c in codes[start..end].iter_mut().filter(|c| **c >= 0) {
                    *c = it.next().expect("same number of onsets");
                }
            }
            Mutation::RepeatPaste { src, len: n, dst } => {
                let n = n.min(len - src).min(len - dst);
                let fragment = codes[src..src + n].to_vec();
                codes[dst..dst + n].copy_from_slice(&fragment);
            }
            Mutation::RepeatAdjacent { src, len: n } => {
                let dst = src + n;
                if dst < len {
                    let n = n.min(len - dst);
                    let fragment = codes[src..src + n].to_vec();
                    codes[dst..dst + n].copy_from_slice(&fragment);
                }
            }
        }
        NoteSeq::repaired(codes, spm)
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, candidates: &[usize]) -> Option<usize> {
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

fn nonzero_shift<R: Rng + ?Sized>(rng: &mut R) -> i32 {
    let s = rng.gen_range(1..=12);
    if rng.gen_bool(0.5) {
        s
    } else {
        -s
    }
}

/// Pitch for a newly created note: a fifth or less away from the nearest sounded note.
fn fresh_pitch<R: Rng + ?Sized>(rng: &mut R, codes: &[Code], index: usize) -> u8 {
    let anchor = nearby_pitch(codes, index).unwrap_or(60);
    clamp_pitch(anchor + rng.gen_range(-7..=7)) as u8
}

/// Draws a concrete mutation of `kind`, or `None` when the sequence offers no site.
pub fn sample<R: Rng + ?Sized>(kind: MutationKind, seq: &NoteSeq, rng: &mut R) -> Option<Mutation> {
    let codes = seq.codes();
    let len = codes.len();
    let spm = seq.steps_per_measure();
    let onsets: Vec<usize> = (0..len).filter(|&i| codes[i] >= 0).collect();
    match kind {
        MutationKind::Interval => {
            let index = pick(rng, onsets.get(1..).unwrap_or(&[]))?;
            Some(Mutation::Interval {
                index,
                interval: rng.gen_range(-12..=12),
            })
        }
        MutationKind::Transpose => {
            if onsets.is_empty() {
                return None;
            }
            let start = rng.gen_range(0..len);
            let end = rng.gen_range(start + 1..=len);
            Some(Mutation::Transpose {
                start,
                end,
                shift: nonzero_shift(rng),
            })
        }
        MutationKind::Extend => {
            let candidates: Vec<usize> = onsets.iter().copied().filter(|&i| i >= 1).collect();
            pick(rng, &candidates).map(|index| Mutation::Extend { index })
        }
        MutationKind::Rest => {
            let candidates: Vec<usize> = (0..len).filter(|&i| codes[i] != HOLD).collect();
            let index = pick(rng, &candidates)?;
            let pitch = fresh_pitch(rng, codes, index);
            Some(Mutation::Rest { index, pitch })
        }
        MutationKind::LongNote => {
            if len < 2 {
                return None;
            }
            let start = rng.gen_range(1..len);
            let n = rng.gen_range(1..=(len - start).min(4));
            Some(Mutation::LongNote { start, len: n })
        }
        MutationKind::ExtensionToNote => {
            let holds: Vec<usize> = (1..len).filter(|&i| codes[i] == HOLD).collect();
            let index = pick(rng, &holds)?;
            let pitch = fresh_pitch(rng, codes, index);
            Some(Mutation::ExtensionToNote { index, pitch })
        }
        MutationKind::LengthNormalize => {
            let notes: Vec<_> = sounded_notes(codes)
                .into_iter()
                .filter(|n| {
                    n.duration > NORMAL_NOTE_STEPS
                        || (n.duration < NORMAL_NOTE_STEPS && n.onset + n.duration < len)
                })
                .collect();
            if notes.is_empty() {
                return None;
            }
            let note = notes[rng.gen_range(0..notes.len())];
            if note.duration > NORMAL_NOTE_STEPS {
                Some(Mutation::Split {
                    at: note.onset + rng.gen_range(1..note.duration),
                })
            } else {
                Some(Mutation::Lengthen { onset: note.onset })
            }
        }
        MutationKind::Sort => {
            if len < 2 || onsets.len() < 2 {
                return None;
            }
            let start = rng.gen_range(0..len - 1);
            let end = rng.gen_range(start + 2..=(start + spm.max(2)).min(len));
            Some(Mutation::Sort {
                start,
                end,
                ascending: rng.gen_bool(0.5),
            })
        }
        MutationKind::RepeatPaste => {
            let measures = seq.measures();
            if measures < 2 {
                return None;
            }
            let n = rng.gen_range(1..=spm);
            let offset = rng.gen_range(0..=spm - n);
            let from = rng.gen_range(0..measures);
            let mut to = rng.gen_range(0..measures - 1);
            if to >= from {
                to += 1;
            }
            Some(Mutation::RepeatPaste {
                src: from * spm + offset,
                len: n,
                dst: to * spm + offset,
            })
        }
        MutationKind::RepeatAdjacent => {
            if len < 2 {
                return None;
            }
            let n = rng.gen_range(1..=(spm / 2).max(1).min(len - 1));
            let src = rng.gen_range(0..len - n);
            Some(Mutation::RepeatAdjacent { src, len: n })
        }
    }
}

/// Applies a randomly sited mutation of `kind`; unchanged when no site exists.
pub fn apply_mutation<R: Rng + ?Sized>(kind: MutationKind, seq: &NoteSeq, rng: &mut R) -> NoteSeq {
    match sample(kind, seq, rng) {
        Some(m) => m.apply(seq),
        None => seq.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const ORIGINAL: [Code; 8] = [81, 58, 46, 58, 46, -2, -2, 61];

    fn table_seq() -> NoteSeq {
        // The worked examples treat a measure as four codes.
        NoteSeq::new(ORIGINAL.to_vec(), 4).unwrap()
    }

    fn applied(m: Mutation) -> Vec<Code> {
        m.apply(&table_seq()).into_codes()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(
            applied(Mutation::Interval {
                index: 1,
                interval: 8
            }),
            [81, 89, 46, 58, 46, -2, -2, 61]
        );
        assert_eq!(
            applied(Mutation::Transpose {
                start: 3,
                end: 8,
                shift: 3
            }),
            [81, 58, 46, 61, 49, -2, -2, 64]
        );
        assert_eq!(
            applied(Mutation::Extend { index: 7 }),
            [81, 58, 46, 58, 46, -2, 61, -2]
        );
        assert_eq!(
            applied(Mutation::Rest { index: 4, pitch: 0 }),
            [81, 58, 46, 58, -1, -2, -2, 61]
        );
        assert_eq!(
            applied(Mutation::LongNote { start: 2, len: 2 }),
            [81, 58, -2, -2, 46, -2, -2, 61]
        );
        assert_eq!(
            applied(Mutation::ExtensionToNote {
                index: 6,
                pitch: 41
            }),
            [81, 58, 46, 58, 46, -2, 41, 61]
        );
        assert_eq!(
            applied(Mutation::Split { at: 5 }),
            [81, 58, 46, 58, 46, 46, -2, 61]
        );
        assert_eq!(
            applied(Mutation::Sort {
                start: 0,
                end: 5,
                ascending: true
            }),
            [46, 46, 58, 58, 81, -2, -2, 61]
        );
        assert_eq!(
            applied(Mutation::RepeatPaste {
                src: 0,
                len: 2,
                dst: 4
            }),
            [81, 58, 46, 58, 81, 58, -2, 61]
        );
        assert_eq!(
            applied(Mutation::RepeatAdjacent { src: 0, len: 2 }),
            [81, 58, 81, 58, 46, -2, -2, 61]
        );
    }

    #[test]
    fn lengthen_keeps_following_note() {
        let seq = NoteSeq::new(vec![60, 62, -2, -2], 4).unwrap();
        let out = Mutation::Lengthen { onset: 0 }.apply(&seq);
        assert_eq!(out.codes(), &[60, -2, 62, -2]);
        let seq = NoteSeq::new(vec![60, 62, 64, -1], 4).unwrap();
        let out = Mutation::Lengthen { onset: 0 }.apply(&seq);
        assert_eq!(out.codes(), &[60, -2, 64, -1]);
    }

    #[test]
    fn transpose_clamps() {
        let seq = NoteSeq::new(vec![120, 5, -1, 126], 4).unwrap();
        let up = Mutation::Transpose {
            start: 0,
            end: 4,
            shift: 12,
        }
        .apply(&seq);
        assert_eq!(up.codes(), &[127, 17, -1, 127]);
        let down = Mutation::Transpose {
            start: 0,
            end: 4,
            shift: -12,
        }
        .apply(&seq);
        assert_eq!(down.codes(), &[108, 0, -1, 114]);
    }

    #[test]
    fn rest_on_silence_creates_a_note() {
        let seq = NoteSeq::rests(1, 16);
        let mut r = rng::stream(1, &[]);
        let out = apply_mutation(MutationKind::Rest, &seq, &mut r);
        assert_eq!(out.codes().iter().filter(|&&c| c >= 0).count(), 1);
        assert_eq!(out.len(), 16);
    }

    #[test]
    fn no_site_leaves_sequence_unchanged() {
        let seq = NoteSeq::rests(1, 16);
        let mut r = rng::stream(2, &[]);
        for kind in [
            MutationKind::Interval,
            MutationKind::Extend,
            MutationKind::ExtensionToNote,
            MutationKind::RepeatPaste,
            MutationKind::Sort,
        ] {
            assert_eq!(apply_mutation(kind, &seq, &mut r), seq, "{kind:?}");
        }
    }

    #[test]
    fn extension_to_note_never_touches_first_code() {
        let seq = NoteSeq::new(vec![-1, -2, -2, -2], 4).unwrap();
        let out = Mutation::ExtensionToNote {
            index: 0,
            pitch: 60,
        }
        .apply(&seq);
        assert_eq!(out, seq);
    }
}

//! Chord accompaniment: voicing size from arousal, register from valence,
//! and the three playback modes.

use crate::notation::{Code, NoteSeq, HOLD, REST};
use crate::schema::{ChordMode, ChordSymbol, Emotion, PitchClass};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Center of gravity at the lowest valence (A2) and the highest (A4).
pub const REGISTER_LOW: f64 = 45.0;
pub const REGISTER_HIGH: f64 = 69.0;
pub const MAX_VOICES: usize = 6;
/// Octave shifts tried per note when placing a voicing.
const SHIFTS: [i32; 5] = [-24, -12, 0, 12, 24];

/// Concrete chord pitches, strictly ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Voicing {
    pub pitches: Vec<u8>,
    pub center_of_gravity: f64,
}

impl Voicing {
    pub fn new(mut pitches: Vec<u8>) -> Self {
        pitches.sort_unstable();
        pitches.dedup();
        let center_of_gravity = if pitches.is_empty() {
            0.0
        } else {
            pitches.iter().map(|&p| p as f64).sum::<f64>() / pitches.len() as f64
        };
        Voicing {
            pitches,
            center_of_gravity,
        }
    }

    pub fn span(&self) -> u8 {
        match (self.pitches.first(), self.pitches.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }
}

/// Semitone offsets above the root after the arousal rules, applied in order:
/// low arousal or more than four notes drops the fifth, high arousal adds the
/// root an octave up, very high arousal adds the fifth an octave up.
pub fn size_voicing(chord: &ChordSymbol, arousal: f64) -> Vec<i32> {
    let mut offsets: Vec<i32> = chord
        .quality
        .intervals()
        .iter()
        .map(|&i| i as i32)
        .collect();
    let fifth = chord.fifth_interval().map_or(7, i32::from);
    if arousal < 0.3 || offsets.len() > 4 {
        if let Some(i) = offsets.iter().position(|&o| o == fifth) {
            offsets.remove(i);
        }
    }
    if arousal > 0.7 && offsets.len() < 5 {
        offsets.push(12);
    }
    if arousal > 0.9 && offsets.len() < 6 {
        offsets.push(12 + fifth);
    }
    offsets
}

/// Target center of gravity for a valence in `[-1, 1]`.
pub fn register_target(valence: f64) -> f64 {
    REGISTER_LOW + (valence.clamp(-1.0, 1.0) + 1.0) / 2.0 * (REGISTER_HIGH - REGISTER_LOW)
}

/// Root pitch of class `root` nearest to `target`, the lower one on a tie.
fn anchor(root: PitchClass, target: f64) -> i32 {
    let r = root.get() as i32;
    let k = ((target - r as f64) / 12.0).floor() as i32;
    let below = r + 12 * k;
    if target - below as f64 <= (below + 12) as f64 - target {
        below
    } else {
        below + 12
    }
}

/// Octave placement of `offsets` above `root` whose center of gravity is
/// closest to the valence target. Each note may move up to two octaves from
/// the root-anchored position; ties go to the narrower, then the lower
/// voicing.
pub fn place_voicing(root: PitchClass, offsets: &[i32], valence: f64) -> Voicing {
    let target = register_target(valence);
    let base = anchor(root, target);
    let n = offsets.len();
    let mut best: Option<(f64, u8, Vec<u8>)> = None;
    let mut choice = vec![0usize; n];
    let combos = SHIFTS.len().pow(n as u32);
    let mut pitches = Vec::with_capacity(n);
    for _ in 0..combos {
        pitches.clear();
        let ok = offsets.iter().zip(&choice).all(|(&o, &c)| {
            let p = base + o + SHIFTS[c];
            pitches.push(p.clamp(0, 127) as u8);
            (0..=127).contains(&p)
        });
        if ok {
            pitches.sort_unstable();
            if pitches.windows(2).all(|w| w[0] < w[1]) {
                let cog = pitches.iter().map(|&p| p as f64).sum::<f64>() / n as f64;
                let key = ((cog - target).abs(), pitches[n - 1] - pitches[0]);
                let better = match &best {
                    None => true,
                    Some((d, s, p)) => {
                        key.0 < *d - 1e-12
                            || ((key.0 - *d).abs() <= 1e-12
                                && (key.1 < *s || (key.1 == *s && pitches < *p)))
                    }
                };
                if better {
                    best = Some((key.0, key.1, pitches.clone()));
                }
            }
        }
        // Odometer over the shift choices.
        for c in choice.iter_mut() {
            *c += 1;
            if *c < SHIFTS.len() {
                break;
            }
            *c = 0;
        }
    }
    Voicing::new(best.map(|b| b.2).unwrap_or_default())
}

pub fn voice_chord(chord: &ChordSymbol, emotion: Emotion) -> Voicing {
    place_voicing(
        chord.root,
        &size_voicing(chord, emotion.arousal),
        emotion.valence,
    )
}

/// Chord track as parallel voices on the step grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChordTrack {
    pub voices: Vec<NoteSeq>,
}

/// Playback settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChordParams {
    /// Probability of dropping a repeated strike; `0.4 × (1 − arousal)` when unset.
    pub omission_probability: Option<f64>,
}

/// Arpeggio note length in steps.
pub fn arpeggio_steps(arousal: f64) -> usize {
    if arousal > 0.75 {
        1
    } else if arousal > 0.5 {
        2
    } else if arousal > 0.25 {
        4
    } else {
        8
    }
}

/// Strike period and sounding length in steps for repeated chords.
pub fn repeat_pattern(arousal: f64) -> (usize, usize) {
    let period = if arousal > 0.7 {
        2
    } else if arousal > 0.3 {
        4
    } else {
        8
    };
    let length = ((period as f64 * (1.0 - 0.5 * arousal)).round() as usize).clamp(1, period);
    (period, length)
}

fn write_note(codes: &mut [Code], at: usize, len: usize, pitch: u8) {
    codes[at] = pitch as Code;
    for c in &mut codes[at + 1..at + len] {
        *c = HOLD;
    }
}

/// Lays one voicing per measure out in `mode`.
pub fn realize_mode<R: Rng + ?Sized>(
    voicings: &[Voicing],
    mode: ChordMode,
    arousal: f64,
    steps_per_measure: usize,
    params: &ChordParams,
    rng: &mut R,
) -> ChordTrack {
    let spm = steps_per_measure;
    let len = voicings.len() * spm;
    let width = match mode {
        ChordMode::Arpeggio => 1,
        _ => voicings
            .iter()
            .map(|v| v.pitches.len())
            .max()
            .unwrap_or(0)
            .max(1),
    };
    let mut voices = vec![vec![REST; len]; width];
    let omit = params
        .omission_probability
        .unwrap_or(0.4 * (1.0 - arousal))
        .clamp(0.0, 1.0);
    for (m, v) in voicings.iter().enumerate() {
        let start = m * spm;
        if v.pitches.is_empty() {
            continue;
        }
        match mode {
            ChordMode::Continuous => {
                for (voice, &p) in voices.iter_mut().zip(&v.pitches) {
                    write_note(voice, start, spm, p);
                }
            }
            ChordMode::Repeated => {
                let (period, length) = repeat_pattern(arousal);
                for (k, at) in (0..spm).step_by(period).enumerate() {
                    if k > 0 && omit > 0.0 && rng.gen_bool(omit) {
                        continue;
                    }
                    let l = length.min(spm - at);
                    for (voice, &p) in voices.iter_mut().zip(&v.pitches) {
                        write_note(voice, start + at, l, p);
                    }
                }
            }
            ChordMode::Arpeggio => {
                let d = arpeggio_steps(arousal);
                let k = v.pitches.len();
                let cycle: Vec<u8> = if k == 1 {
                    v.pitches.clone()
                } else {
                    v.pitches
                        .iter()
                        .copied()
                        .chain(v.pitches[1..k - 1].iter().rev().copied())
                        .collect()
                };
                for (i, at) in (0..spm).step_by(d).enumerate() {
                    write_note(
                        &mut voices[0],
                        start + at,
                        d.min(spm - at),
                        cycle[i % cycle.len()],
                    );
                }
            }
        }
    }
    ChordTrack {
        voices: voices
            .into_iter()
            .map(|codes| NoteSeq::repaired(codes, spm))
            .collect(),
    }
}

/// Voices every chord and realizes the track; one chord per measure.
pub fn chord_track<R: Rng + ?Sized>(
    chords: &[ChordSymbol],
    emotion: Emotion,
    mode: ChordMode,
    steps_per_measure: usize,
    params: &ChordParams,
    rng: &mut R,
) -> ChordTrack {
    let voicings: Vec<Voicing> = chords.iter().map(|c| voice_chord(c, emotion)).collect();
    realize_mode(
        &voicings,
        mode,
        emotion.arousal,
        steps_per_measure,
        params,
        rng,
    )
}

//! Emotion-conditioned fitness targets and the structural rules of the eleven
//! melodic playing modes.

mod targets;

pub use targets::{
    build_fitness_spec, build_fitness_spec_with, Direction, Family, Impact, Level, LevelValues,
    TableError, TableRow, TargetTable, DEFAULT_TABLE_CSV,
};

use crate::evolution::{evolve, evolve_from, FitnessSpec, GaConfig, GenerationStats, PitchBand};
use crate::notation::{Code, HarmonicContext, NoteSeq, HOLD, REST};
use crate::rng;
use crate::schema::{Emotion, MelodicMode};
use rand::Rng;

/// Stream tag for the bass line's transition notes.
const BASS_LINE_STREAM: u64 = 0x3;

/// MIDI pitch of C in octave 2, the bass line's root octave.
const BASS_ROOT_C: i32 = 36;

#[derive(Clone, Debug, PartialEq)]
pub struct MelodicTrack {
    pub seq: NoteSeq,
    /// Fitness of the evolved unit (the whole track for unstructured modes).
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
}

/// Generates one melodic track of `ctx.len()` steps.
///
/// `refs` are the already generated tracks this one is harmonized against;
/// they must be as long as `ctx`.
pub fn generate_track(
    mode: MelodicMode,
    spec: &FitnessSpec,
    emotion: Emotion,
    ctx: &HarmonicContext,
    refs: &[NoteSeq],
    steps_per_measure: usize,
    cfg: &GaConfig,
) -> MelodicTrack {
    let spm = steps_per_measure;
    assert!(
        spm > 0 && !ctx.is_empty() && ctx.len().is_multiple_of(spm),
        "context is not whole measures"
    );
    let measures = ctx.len() / spm;
    let band = spec.register;
    use MelodicMode::*;
    match mode {
        Melody | Solo => {
            let evo = evolve(spec, cfg, ctx, refs, measures);
            finish(
                fold_into(evo.best.codes(), band),
                spm,
                evo.best_fitness,
                evo.history,
            )
        }
        ShortRiff | LongRiff | LongMotif => {
            let unit_measures = if mode == LongRiff { 2.min(measures) } else { 1 };
            let unit_len = unit_measures * spm;
            let (uctx, urefs) = unit_context(ctx, refs, 0, unit_len, spm);
            let evo = evolve(spec, cfg, &uctx, &urefs, unit_measures);
            let codes = if mode == LongMotif {
                tile(evo.best.codes(), ctx.len())
            } else {
                tile_following_roots(evo.best.codes(), ctx, spm, band)
            };
            finish(codes, spm, evo.best_fitness, evo.history)
        }
        Bassline => {
            let line = bass_line(ctx, spm, emotion, cfg.rng_seed);
            let seed = NoteSeq::repaired(line, spm);
            let evo = evolve_from(spec, cfg, ctx, refs, &[seed]);
            finish(
                fold_into(evo.best.codes(), band),
                spm,
                evo.best_fitness,
                evo.history,
            )
        }
        RepetitiveBassline => {
            let line = bass_line(ctx, spm, emotion, cfg.rng_seed);
            let seed = NoteSeq::repaired(line[..spm].to_vec(), spm);
            let (uctx, urefs) = unit_context(ctx, refs, 0, spm, spm);
            let evo = evolve_from(spec, cfg, &uctx, &urefs, &[seed]);
            let codes = tile_following_roots(evo.best.codes(), ctx, spm, band);
            finish(codes, spm, evo.best_fitness, evo.history)
        }
        OpeningMotif | ClosingMotif => {
            let half = (spm / 2).max(1);
            let start = if mode == OpeningMotif { 0 } else { spm - half };
            let (uctx, urefs) = unit_context(ctx, refs, start, half, half);
            let evo = evolve(spec, cfg, &uctx, &urefs, 1);
            let unit = fold_into(evo.best.codes(), band);
            let mut codes = vec![REST; ctx.len()];
            for m in 0..measures {
                let at = m * spm + start;
                codes[at..at + half].copy_from_slice(&unit);
            }
            finish(codes, spm, evo.best_fitness, evo.history)
        }
        RepeatedMotif | ShortRepeatedMotif => {
            let unit_len = if mode == RepeatedMotif {
                (spm / 2).max(1)
            } else {
                4.min(spm)
            };
            let (uctx, urefs) = unit_context(ctx, refs, 0, unit_len, unit_len);
            let evo = evolve(spec, cfg, &uctx, &urefs, 1);
            let unit = fold_into(evo.best.codes(), band);
            let bar = tile(&unit, spm);
            finish(tile(&bar, ctx.len()), spm, evo.best_fitness, evo.history)
        }
    }
}

fn finish(
    codes: Vec<Code>,
    spm: usize,
    best_fitness: f64,
    history: Vec<GenerationStats>,
) -> MelodicTrack {
    MelodicTrack {
        seq: NoteSeq::repaired(codes, spm),
        best_fitness,
        history,
    }
}

/// The context and reference excerpts for a unit spanning `start..start+len`.
fn unit_context(
    ctx: &HarmonicContext,
    refs: &[NoteSeq],
    start: usize,
    len: usize,
    unit_steps: usize,
) -> (HarmonicContext, Vec<NoteSeq>) {
    let uctx = ctx.slice(start, len, unit_steps);
    let urefs = refs.iter().map(|r| excerpt(r, start, len, len)).collect();
    (uctx, urefs)
}

/// Steps `start..start+len` of `seq`; an excerpt opening inside a held note
/// restrikes it.
pub fn excerpt(seq: &NoteSeq, start: usize, len: usize, steps_per_measure: usize) -> NoteSeq {
    let mut codes = seq.codes()[start..start + len].to_vec();
    if codes[0] == HOLD {
        codes[0] = seq.sounding()[start].map_or(REST, Code::from);
    }
    NoteSeq::repaired(codes, steps_per_measure)
}

/// Repeats `unit` to exactly `len` steps, cutting the last copy short.
pub fn tile(unit: &[Code], len: usize) -> Vec<Code> {
    unit.iter().copied().cycle().take(len).collect()
}

fn fold_into(codes: &[Code], band: PitchBand) -> Vec<Code> {
    codes
        .iter()
        .map(|&c| {
            if c >= 0 {
                band.fold(c as i32) as Code
            } else {
                c
            }
        })
        .collect()
}

/// Maps a pitch-class difference into `-6..=5`.
fn wrap(d: i32) -> i32 {
    (d + 6).rem_euclid(12) - 6
}

fn transpose(codes: &[Code], shift: i32) -> Vec<Code> {
    codes
        .iter()
        .map(|&c| {
            if c >= 0 {
                (c as i32 + shift) as Code
            } else {
                c
            }
        })
        .collect()
}

/// Tiles `unit` over the track, transposing every copy so that the unit's
/// lowest sounded pitch class lands on the root of the chord under the copy.
/// Copies leaving `band` move by whole octaves, or note by note if no octave
/// fits.
fn tile_following_roots(
    unit: &[Code],
    ctx: &HarmonicContext,
    spm: usize,
    band: PitchBand,
) -> Vec<Code> {
    let lowest = unit.iter().copied().filter(|&c| c >= 0).min();
    let Some(lowest) = lowest else {
        return tile(unit, ctx.len());
    };
    let root_at = |step: usize| ctx.chord_at(step).root.get() as i32;
    let base = wrap(root_at(0) - lowest as i32 % 12);
    let mut out = Vec::with_capacity(ctx.len());
    let mut step = 0;
    while step < ctx.len() {
        let take = unit.len().min(ctx.len() - step);
        let shift = base + wrap(root_at(step) - root_at(0));
        let copy = transpose(&unit[..take], shift);
        out.extend(fit_octave(copy, band));
        step += take;
    }
    debug_assert_eq!(step % spm, 0);
    out
}

fn fit_octave(copy: Vec<Code>, band: PitchBand) -> Vec<Code> {
    let inside = |codes: &[Code]| {
        codes
            .iter()
            .all(|&c| c < 0 || (band.low as Code..=band.high as Code).contains(&c))
    };
    for shift in [0, -12, 12, -24, 24] {
        let moved = transpose(&copy, shift);
        if inside(&moved) {
            return moved;
        }
    }
    fold_into(&copy, band)
}

/// Chord roots in octave 2, struck on the downbeat (and mid-measure in longer
/// measures), with a passing note on the last beat leading stepwise into the
/// next root. Passing notes get likelier with arousal.
fn bass_line(ctx: &HarmonicContext, spm: usize, emotion: Emotion, seed: u64) -> Vec<Code> {
    let measures = ctx.len() / spm;
    let mut r = rng::stream(seed, &[BASS_LINE_STREAM]);
    let passing = (0.15 + 0.5 * emotion.arousal).clamp(0.0, 1.0);
    let scale_pitches = ctx.scale.pitches_in(24, 59);
    let root = |m: usize| BASS_ROOT_C + ctx.chord_at(m * spm).root.get() as i32;
    let mut codes = vec![HOLD; ctx.len()];
    for m in 0..measures {
        let at = m * spm;
        codes[at] = root(m) as Code;
        if spm >= 8 {
            codes[at + spm / 2] = root(m) as Code;
        }
        if m + 1 < measures && spm >= 4 && r.gen_bool(passing) {
            let next = root(m + 1);
            let above = r.gen_bool(0.5);
            let neighbour = if above {
                scale_pitches.iter().copied().find(|&p| p as i32 > next)
            } else {
                scale_pitches
                    .iter()
                    .copied()
                    .rev()
                    .find(|&p| (p as i32) < next)
            };
            if let Some(p) = neighbour {
                let beat = (spm / 4).max(1);
                codes[at + spm - beat] = p as Code;
            }
        }
    }
    codes
}

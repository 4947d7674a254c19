//! Objective metrics over rendered MIDI and the three evaluation scenarios.
//!
//! Files are read back with an independent parser. Pitch metrics skip the
//! drum channel; groove onsets include it. Onsets are quantized to 12 ticks
//! per quarter note before the groove comparison.

use crate::pipeline::{render, GenerationConfig, PipelineError};
use crate::rng;
use crate::schema::{
    parse_composition, ArrangementEntry, ChordMode, ChordQuality, ChordSymbol, Composition,
    DrumMode, Emotion, Instrument, Kit, MelodicMode, PitchClass, Role, Scale, ScaleKind,
    SchemaError, Section, TimeSignature, TrackMode, TrackSpec,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const GROOVE_TICKS_PER_QUARTER: u64 = 12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no pitched notes to evaluate")]
    NoNotes,
    #[error("groove needs at least two measures, found {0}")]
    TooShort(u64),
    #[error("measure resolution must be positive")]
    Resolution,
    #[error("unreadable MIDI: {0}")]
    Midi(String),
    #[error("the prompt-driven scenario needs a composition source")]
    MissingSource,
    #[error("song {index}: {message}")]
    Source { index: usize, message: String },
    #[error("song {index}: {source}")]
    Schema { index: usize, source: SchemaError },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Shannon entropy in bits of the pitch-class histogram.
pub fn pitch_class_entropy(pitches: &[u8]) -> Result<f64, EvalError> {
    if pitches.is_empty() {
        return Err(EvalError::NoNotes);
    }
    let mut hist = [0usize; 12];
    for &p in pitches {
        hist[(p % 12) as usize] += 1;
    }
    let n = pitches.len() as f64;
    Ok(hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

const MAJOR_STEPS: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];
const MINOR_STEPS: [u8; 7] = [0, 2, 3, 5, 7, 8, 10];

/// Best percentage of notes inside one of the 24 major and natural minor scales.
pub fn scale_consistency(pitches: &[u8]) -> Result<f64, EvalError> {
    if pitches.is_empty() {
        return Err(EvalError::NoNotes);
    }
    let mut hist = [0usize; 12];
    for &p in pitches {
        hist[(p % 12) as usize] += 1;
    }
    let mut best = 0;
    for steps in [MAJOR_STEPS, MINOR_STEPS] {
        for root in 0..12 {
            let inside: usize = steps.iter().map(|s| hist[((root + s) % 12) as usize]).sum();
            best = best.max(inside);
        }
    }
    Ok(100.0 * best as f64 / pitches.len() as f64)
}

/// Mean similarity of onset patterns of consecutive measures, in percent.
/// Measures run from the first up to the one holding the last onset.
pub fn groove_consistency(onsets: &[u64], measure_resolution: u64) -> Result<f64, EvalError> {
    if measure_resolution == 0 {
        return Err(EvalError::Resolution);
    }
    let last = onsets.iter().copied().max().unwrap_or(0);
    let measures = last / measure_resolution + 1;
    if measures < 2 {
        return Err(EvalError::TooShort(measures));
    }
    let r = measure_resolution as usize;
    let mut pattern = vec![false; measures as usize * r];
    for &t in onsets {
        pattern[t as usize] = true;
    }
    let distance = (0..pattern.len() - r)
        .filter(|&i| pattern[i] != pattern[i + r])
        .count();
    Ok(100.0 * (1.0 - distance as f64 / (r as f64 * (measures - 1) as f64)))
}

/// Notes as read back from a file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MidiNotes {
    pub ticks_per_quarter: u64,
    /// First time signature in the file, 4/4 when absent.
    pub time_signature: (u8, u8),
    /// `(tick, key)` of pitched note-ons.
    pub pitched: Vec<(u64, u8)>,
    /// `(tick, key)` of drum-channel note-ons.
    pub drums: Vec<(u64, u8)>,
}

impl MidiNotes {
    pub fn parse(bytes: &[u8]) -> Result<Self, EvalError> {
        let smf = midly::Smf::parse(bytes).map_err(|e| EvalError::Midi(e.to_string()))?;
        let tpq = match smf.header.timing {
            midly::Timing::Metrical(t) => t.as_int() as u64,
            midly::Timing::Timecode(..) => {
                return Err(EvalError::Midi("timecode division is not supported".into()))
            }
        };
        let mut out = MidiNotes {
            ticks_per_quarter: tpq,
            time_signature: (4, 4),
            ..MidiNotes::default()
        };
        let mut first_ts: Option<(u64, (u8, u8))> = None;
        for track in &smf.tracks {
            let mut tick = 0u64;
            for ev in track {
                tick += ev.delta.as_int() as u64;
                match ev.kind {
                    midly::TrackEventKind::Meta(midly::MetaMessage::TimeSignature(n, d, _, _)) => {
                        if first_ts.is_none_or(|(t, _)| tick < t) {
                            first_ts = Some((tick, (n, 1u8 << d)));
                        }
                    }
                    midly::TrackEventKind::Midi {
                        channel,
                        message: midly::MidiMessage::NoteOn { key, vel },
                    } if vel.as_int() > 0 => {
                        let note = (tick, key.as_int());
                        if channel.as_int() == 9 {
                            out.drums.push(note);
                        } else {
                            out.pitched.push(note);
                        }
                    }
                    _ => {}
                }
            }
        }
        if let Some((_, ts)) = first_ts {
            out.time_signature = ts;
        }
        out.pitched.sort_unstable();
        out.drums.sort_unstable();
        Ok(out)
    }

    pub fn pitches(&self) -> Vec<u8> {
        self.pitched.iter().map(|&(_, k)| k).collect()
    }

    /// Distinct quantized onsets of all notes, drums included.
    pub fn groove_onsets(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .pitched
            .iter()
            .chain(&self.drums)
            .map(|&(t, _)| t * GROOVE_TICKS_PER_QUARTER / self.ticks_per_quarter)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn measure_resolution(&self) -> u64 {
        let (n, d) = self.time_signature;
        GROOVE_TICKS_PER_QUARTER * 4 * n as u64 / d as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SongMetrics {
    pub pitch_class_entropy: f64,
    pub scale_consistency: f64,
    pub groove_consistency: f64,
}

pub fn song_metrics(midi: &[u8]) -> Result<SongMetrics, EvalError> {
    let notes = MidiNotes::parse(midi)?;
    let pitches = notes.pitches();
    Ok(SongMetrics {
        pitch_class_entropy: pitch_class_entropy(&pitches)?,
        scale_consistency: scale_consistency(&pitches)?,
        groove_consistency: groove_consistency(&notes.groove_onsets(), notes.measure_resolution())?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PromptDriven,
    Focused,
    Randomized,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::PromptDriven,
        Scenario::Focused,
        Scenario::Randomized,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Scenario::PromptDriven => "prompt_driven",
            Scenario::Focused => "focused",
            Scenario::Randomized => "randomized",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        Scenario::ALL
            .into_iter()
            .find(|k| k.token() == t)
            .ok_or_else(|| {
                format!("unknown scenario `{s}` (expected prompt_driven, focused or randomized)")
            })
    }
}

/// Mean and half-width of the 95% confidence interval (Student t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            ci95: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { mean, ci95: 0.0, n };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    Summary {
        mean,
        ci95: t * (var / n as f64).sqrt(),
        n,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub n_songs: usize,
    pub seed: u64,
    pub songs: Vec<SongMetrics>,
    pub pitch_class_entropy: Summary,
    pub scale_consistency: Summary,
    pub groove_consistency: Summary,
}

impl ScenarioReport {
    fn new(scenario: Scenario, seed: u64, songs: Vec<SongMetrics>) -> Self {
        let col = |f: fn(&SongMetrics) -> f64| summarize(&songs.iter().map(f).collect::<Vec<_>>());
        ScenarioReport {
            scenario,
            n_songs: songs.len(),
            seed,
            pitch_class_entropy: col(|m| m.pitch_class_entropy),
            scale_consistency: col(|m| m.scale_consistency),
            groove_consistency: col(|m| m.groove_consistency),
            songs,
        }
    }

    /// One line per song plus a header.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("song,pitch_class_entropy,scale_consistency,groove_consistency\n");
        for (i, s) in self.songs.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{}\n",
                s.pitch_class_entropy, s.scale_consistency, s.groove_consistency
            ));
        }
        out
    }
}

/// Focused structure: C-F-Am-F in C major, 4/4 at 120 bpm, neutral valence
/// and medium arousal, eight measures.
pub fn focused_composition() -> Composition {
    let chord = |root: u8, quality| ChordSymbol::new(PitchClass::new(root as i32), quality);
    let track = |role, instrument, mode| TrackSpec {
        role,
        instrument,
        mode,
    };
    let section = Section {
        bpm: 120.0,
        time_signature: TimeSignature::COMMON,
        scale: Scale::new(PitchClass::C, ScaleKind::Major),
        chord_progression: vec![
            chord(0, ChordQuality::Maj),
            chord(5, ChordQuality::Maj),
            chord(9, ChordQuality::Min),
            chord(5, ChordQuality::Maj),
        ],
        measures: 8,
        repeats: 1,
        tracks: vec![
            track(
                Role::Melody,
                Instrument::Program(0),
                TrackMode::Melodic(MelodicMode::Melody),
            ),
            track(
                Role::Bass,
                Instrument::Program(33),
                TrackMode::Melodic(MelodicMode::Bassline),
            ),
            track(
                Role::Chords,
                Instrument::Program(48),
                TrackMode::Chords(ChordMode::Continuous),
            ),
            track(
                Role::Drums,
                Instrument::Kit(Kit::Standard),
                TrackMode::Drums(DrumMode::Standard),
            ),
        ],
    };
    Composition {
        name: "focused".into(),
        sections: BTreeMap::from([("main".to_string(), section)]),
        arrangement: vec![ArrangementEntry {
            section_id: "main".into(),
            emotion: Emotion::new(0.0, 0.5),
        }],
        composer_note: String::new(),
    }
}

/// Catalog chords built entirely from notes of the scale.
pub fn diatonic_chords(scale: &Scale) -> Vec<ChordSymbol> {
    let mut out = Vec::new();
    for root in scale.pitch_classes() {
        for q in ChordQuality::ALL {
            let c = ChordSymbol::new(root, q);
            if c.mask() & !scale.mask() == 0 {
                out.push(c);
            }
        }
    }
    out
}

const RANDOM_SIGNATURES: [(u8, u8); 7] = [(4, 4), (3, 4), (2, 4), (6, 8), (5, 4), (7, 8), (12, 8)];

/// Random song whose chords all belong to one scale.
pub fn randomized_composition<R: Rng + ?Sized>(rng: &mut R) -> Composition {
    let scale = loop {
        let s = Scale::new(
            PitchClass::new(rng.gen_range(0..12)),
            *ScaleKind::ALL.choose(rng).expect("scale kinds"),
        );
        if diatonic_chords(&s).len() >= 2 {
            break s;
        }
    };
    let palette = diatonic_chords(&scale);
    let (n, d) = *RANDOM_SIGNATURES.choose(rng).expect("signatures");
    let time_signature = TimeSignature::new(n, d).expect("listed signatures are valid");
    let pick = |rng: &mut R, modes: &[MelodicMode]| *modes.choose(rng).expect("modes");

    let n_sections = rng.gen_range(1..=3);
    let mut sections = BTreeMap::new();
    for k in 0..n_sections {
        let progression: Vec<ChordSymbol> = (0..rng.gen_range(2..=4))
            .map(|_| *palette.choose(rng).expect("palette"))
            .collect();
        let mut tracks = vec![
            TrackSpec {
                role: Role::Melody,
                instrument: Instrument::Program(rng.gen_range(0..96)),
                mode: TrackMode::Melodic(pick(rng, &[MelodicMode::Melody, MelodicMode::Solo])),
            },
            TrackSpec {
                role: Role::Bass,
                instrument: Instrument::Program(rng.gen_range(32..40)),
                mode: TrackMode::Melodic(pick(
                    rng,
                    &[
                        MelodicMode::Bassline,
                        MelodicMode::RepetitiveBassline,
                        MelodicMode::ShortRiff,
                        MelodicMode::LongRiff,
                    ],
                )),
            },
            TrackSpec {
                role: Role::Chords,
                instrument: Instrument::Program(rng.gen_range(0..96)),
                mode: TrackMode::Chords(
                    *[
                        ChordMode::Continuous,
                        ChordMode::Repeated,
                        ChordMode::Arpeggio,
                    ]
                    .choose(rng)
                    .expect("modes"),
                ),
            },
        ];
        if rng.gen_bool(0.5) {
            tracks.push(TrackSpec {
                role: Role::Motif,
                instrument: Instrument::Program(rng.gen_range(0..96)),
                mode: TrackMode::Melodic(pick(
                    rng,
                    &[
                        MelodicMode::LongMotif,
                        MelodicMode::OpeningMotif,
                        MelodicMode::ClosingMotif,
                        MelodicMode::RepeatedMotif,
                        MelodicMode::ShortRepeatedMotif,
                    ],
                )),
            });
        }
        tracks.push(TrackSpec {
            role: Role::Drums,
            instrument: Instrument::Kit(*Kit::ALL.choose(rng).expect("kits")),
            mode: TrackMode::Drums(
                *[DrumMode::Standard, DrumMode::OnlyBeat, DrumMode::DrumSolo]
                    .choose(rng)
                    .expect("modes"),
            ),
        });
        let measures = progression.len() * rng.gen_range(1..=2);
        sections.insert(
            format!("part{k}"),
            Section {
                bpm: rng.gen_range(60..=180) as f64,
                time_signature,
                scale,
                chord_progression: progression,
                measures,
                repeats: rng.gen_range(1..=2),
                tracks,
            },
        );
    }
    let ids: Vec<String> = sections.keys().cloned().collect();
    let arrangement = (0..rng.gen_range(2..=5))
        .map(|i| ArrangementEntry {
            section_id: if i < ids.len() {
                ids[i].clone()
            } else {
                ids.choose(rng).expect("ids").clone()
            },
            emotion: Emotion::new(rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..=1.0)),
        })
        .collect();
    Composition {
        name: "randomized".into(),
        sections,
        arrangement,
        composer_note: String::new(),
    }
}

/// Supplies composition JSON for song `index` of the prompt-driven scenario.
pub type CompositionSource<'a> = dyn FnMut(usize) -> Result<String, String> + 'a;

fn song_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, &[index as u64])
}

/// Renders `n_songs` songs and measures them. Songs are rendered in parallel
/// except in the prompt-driven scenario, whose compositions come from `source`.
pub fn run_scenario(
    scenario: Scenario,
    n_songs: usize,
    seed: u64,
    config: &GenerationConfig,
    source: Option<&mut CompositionSource<'_>>,
) -> Result<ScenarioReport, EvalError> {
    let compositions: Vec<Composition> = match scenario {
        Scenario::Focused => vec![focused_composition(); n_songs],
        Scenario::Randomized => (0..n_songs)
            .map(|i| randomized_composition(&mut rng::stream(seed, &[i as u64, 0x20])))
            .collect(),
        Scenario::PromptDriven => {
            let source = source.ok_or(EvalError::MissingSource)?;
            let mut out = Vec::with_capacity(n_songs);
            for index in 0..n_songs {
                let text = source(index).map_err(|message| EvalError::Source { index, message })?;
                out.push(
                    parse_composition(&text)
                        .map_err(|source| EvalError::Schema { index, source })?,
                );
            }
            out
        }
    };
    let songs = compositions
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let r = render(c, song_seed(seed, i), config, None)?;
            song_metrics(&r.midi)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(ScenarioReport::new(scenario, seed, songs))
}

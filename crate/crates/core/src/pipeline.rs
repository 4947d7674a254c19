//! From a validated composition to MIDI bytes.
//!
//! Each arrangement entry is rendered as one pass over its section. Every
//! random stream of a pass is derived from the seed, the section id, the
//! occurrence of that section in the arrangement and the track index, so
//! editing one section leaves the notes of all others untouched. Rendered
//! passes can be cached across runs.

use crate::assembler::{
    assemble, drum_events, merge_voices, AssembleError, Part, TrackSet, DRUM_CHANNEL,
    MELODIC_VELOCITY,
};
use crate::evolution::{GaConfig, GenerationStats, SpecError};
use crate::harmony_tracks::{chord_track, ChordParams};
use crate::melodic_tracks::{build_fitness_spec_with, generate_track, LevelValues, TargetTable};
use crate::notation::{HarmonicContext, NoteSeq};
use crate::percussion::{DrumGrid, DrumParams, DrumTables, Drummer, PercussionError};
use crate::rng;
use crate::schema::{Composition, Emotion, Instrument, Kit, Role, Section, TrackMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Seed-path tags for the kinds of generator within a pass.
const CHORD_STREAM: u64 = 0x10;
const MELODIC_STREAM: u64 = 0x11;
const DRUM_STREAM: u64 = 0x12;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Spec(#[from] SpecError),
    #[error("invalid drum configuration: {0}")]
    Drums(#[from] PercussionError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error("arrangement refers to unknown section `{0}`")]
    UnknownSection(String),
}

/// Every tunable of a rendering.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub ga: GaConfig,
    pub targets: LevelValues,
    pub drums: DrumParams,
    pub chords: ChordParams,
    /// Generate every repeat of a section anew instead of copying the first.
    pub vary_repeats: bool,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.ga.validate()?;
        self.drums.validate()?;
        let t = &self.targets;
        for (name, v) in [
            ("targets.zero", t.zero),
            ("targets.low", t.low),
            ("targets.med", t.med),
            ("targets.high", t.high),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SpecError::Config(format!("{name} = {v} is outside [0, 1]")).into());
            }
        }
        let finite = [t.deviation, t.weight, t.harmony_weight]
            .iter()
            .all(|x| x.is_finite());
        if !finite || t.deviation < 0.01 || t.weight < 0.0 || t.harmony_weight < 0.0 {
            return Err(SpecError::Config(
                "targets need deviation >= 0.01 and non-negative weights".into(),
            )
            .into());
        }
        if let Some(p) = self.chords.omission_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(SpecError::Config(format!(
                    "chords.omission_probability = {p} is outside [0, 1]"
                ))
                .into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackContent {
    Melodic {
        seq: NoteSeq,
        best_fitness: f64,
        history: Vec<GenerationStats>,
    },
    Chords {
        voices: Vec<NoteSeq>,
    },
    Drums {
        grid: DrumGrid,
    },
}

/// One playthrough of a section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedPass {
    pub section_id: String,
    /// How many earlier arrangement entries name the same section.
    pub occurrence: usize,
    pub repeat: u32,
    pub emotion: Emotion,
    /// Parallel to the section's track list.
    pub tracks: Vec<TrackContent>,
}

/// Rendered passes keyed by everything that influenced them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderCache {
    entries: BTreeMap<String, Vec<TrackContent>>,
}

impl RenderCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendering {
    pub passes: Vec<RenderedPass>,
    pub midi: Vec<u8>,
    /// `(section id, occurrence)` of every pass that was generated rather
    /// than taken from the cache.
    pub regenerated: Vec<(String, usize)>,
}

#[derive(Clone, Debug)]
struct Job<'a> {
    section_id: &'a str,
    section: &'a Section,
    occurrence: usize,
    repeat: u32,
    emotion: Emotion,
}

impl Job<'_> {
    fn path(&self, track: usize, tag: u64) -> [u64; 5] {
        [
            rng::label(self.section_id),
            self.occurrence as u64,
            self.repeat as u64,
            track as u64,
            tag,
        ]
    }

    fn cache_key(&self, seed: u64, config: &GenerationConfig) -> String {
        let text = format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.section.to_json(),
            self.emotion.valence.to_bits(),
            self.emotion.arousal.to_bits(),
            self.occurrence,
            self.repeat,
            seed,
            serde_json::to_string(config).expect("config serializes"),
        );
        // Two independent 64-bit hashes keep accidental collisions out of reach.
        format!(
            "{:016x}{:016x}",
            rng::label(&text),
            rng::derive_seed(rng::label(&text), &[text.len() as u64])
        )
    }
}

fn kit_of(instrument: Instrument) -> Kit {
    match instrument {
        Instrument::Kit(k) => k,
        Instrument::Program(_) => Kit::Standard,
    }
}

/// Generation order: chords, then bass, then melody and motif, then drums.
fn stage(mode: TrackMode, role: Role) -> u8 {
    match (mode, role) {
        (TrackMode::Chords(_), _) => 0,
        (TrackMode::Melodic(_), Role::Bass) => 1,
        (TrackMode::Melodic(_), _) => 2,
        (TrackMode::Drums(_), _) => 3,
    }
}

fn render_pass(job: &Job, seed: u64, config: &GenerationConfig) -> Vec<TrackContent> {
    let section = job.section;
    let spm = section.steps_per_measure();
    let measures = section.measures;
    let ctx = HarmonicContext::for_section(section, measures);
    let chords: Vec<_> = (0..measures)
        .map(|m| *section.chord_at_measure(m))
        .collect();
    let emotion = job.emotion;

    let mut out: Vec<Option<TrackContent>> = vec![None; section.tracks.len()];
    let mut order: Vec<usize> = (0..section.tracks.len()).collect();
    order.sort_by_key(|&i| (stage(section.tracks[i].mode, section.tracks[i].role), i));

    let mut chord_refs: Vec<NoteSeq> = Vec::new();
    let mut bass_refs: Vec<NoteSeq> = Vec::new();
    for i in order {
        let track = &section.tracks[i];
        let content = match track.mode {
            TrackMode::Chords(mode) => {
                let mut r = rng::stream(seed, &job.path(i, CHORD_STREAM));
                let t = chord_track(&chords, emotion, mode, spm, &config.chords, &mut r);
                chord_refs.extend(t.voices.iter().cloned());
                TrackContent::Chords { voices: t.voices }
            }
            TrackMode::Melodic(mode) => {
                let spec =
                    build_fitness_spec_with(TargetTable::shipped(), &config.targets, mode, emotion);
                let ga = config
                    .ga
                    .clone()
                    .with_seed(rng::derive_seed(seed, &job.path(i, MELODIC_STREAM)));
                let mut refs = chord_refs.clone();
                if track.role == Role::Melody {
                    refs.extend(bass_refs.iter().cloned());
                }
                let t = generate_track(mode, &spec, emotion, &ctx, &refs, spm, &ga);
                if track.role == Role::Bass {
                    bass_refs.push(t.seq.clone());
                }
                TrackContent::Melodic {
                    seq: t.seq,
                    best_fitness: t.best_fitness,
                    history: t.history,
                }
            }
            TrackMode::Drums(mode) => {
                let drummer = Drummer {
                    tables: DrumTables::shipped(),
                    params: &config.drums,
                    time_signature: section.time_signature,
                    emotion,
                    mode,
                };
                let mut r = rng::stream(seed, &job.path(i, DRUM_STREAM));
                TrackContent::Drums {
                    grid: drummer.track(measures, &mut r),
                }
            }
        };
        out[i] = Some(content);
    }
    out.into_iter()
        .map(|c| c.expect("every track rendered"))
        .collect()
}

/// Builds the MIDI parts of one pass. Pitched tracks take channels 0–8 in
/// listing order; drums share channel 9.
pub fn track_set(
    section_id: &str,
    section: &Section,
    tracks: &[TrackContent],
    kits: &DrumTables,
) -> TrackSet {
    let mut set = TrackSet::new(
        section_id,
        section.bpm,
        section.time_signature,
        section.total_steps(),
    );
    let mut channel = 0u8;
    for (spec, content) in section.tracks.iter().zip(tracks) {
        let name = format!("{} {}", spec.role.token(), spec.mode.token());
        let part = match content {
            TrackContent::Drums { grid } => Part {
                name,
                channel: DRUM_CHANNEL,
                program: None,
                events: drum_events(grid, kits.kits.kit(kit_of(spec.instrument))),
            },
            TrackContent::Melodic { seq, .. } => {
                let c = channel;
                channel += 1;
                Part {
                    name,
                    channel: c,
                    program: Some(spec.program().unwrap_or(0)),
                    events: merge_voices(std::slice::from_ref(seq), c, MELODIC_VELOCITY),
                }
            }
            TrackContent::Chords { voices } => {
                let c = channel;
                channel += 1;
                Part {
                    name,
                    channel: c,
                    program: Some(spec.program().unwrap_or(0)),
                    events: merge_voices(voices, c, MELODIC_VELOCITY),
                }
            }
        };
        set.parts.push(part);
    }
    set
}

/// Renders every arrangement entry, reusing cached passes, and assembles the file.
pub fn render(
    composition: &Composition,
    seed: u64,
    config: &GenerationConfig,
    cache: Option<&mut RenderCache>,
) -> Result<Rendering, PipelineError> {
    config.validate()?;
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut jobs = Vec::new();
    for entry in &composition.arrangement {
        let section = composition
            .section(&entry.section_id)
            .ok_or_else(|| PipelineError::UnknownSection(entry.section_id.clone()))?;
        let occurrence = seen.entry(&entry.section_id).or_insert(0);
        let repeats = if config.vary_repeats {
            section.repeats
        } else {
            1
        };
        for repeat in 0..repeats {
            jobs.push(Job {
                section_id: &entry.section_id,
                section,
                occurrence: *occurrence,
                repeat,
                emotion: entry.emotion,
            });
        }
        *occurrence += 1;
    }

    let keys: Vec<String> = jobs.iter().map(|j| j.cache_key(seed, config)).collect();
    let cached: Vec<Option<Vec<TrackContent>>> = keys
        .iter()
        .map(|k| cache.as_ref().and_then(|c| c.entries.get(k).cloned()))
        .collect();
    let fresh: Vec<Option<Vec<TrackContent>>> = jobs
        .par_iter()
        .zip(&cached)
        .map(|(job, hit)| match hit {
            Some(_) => None,
            None => Some(render_pass(job, seed, config)),
        })
        .collect();

    let mut regenerated = BTreeSet::new();
    let mut passes = Vec::with_capacity(jobs.len());
    let mut used = BTreeMap::new();
    for ((job, key), (hit, new)) in jobs.iter().zip(&keys).zip(cached.into_iter().zip(fresh)) {
        if new.is_some() {
            regenerated.insert((job.section_id.to_string(), job.occurrence));
        }
        let tracks = hit.or(new).expect("pass is cached or fresh");
        used.insert(key.clone(), tracks.clone());
        passes.push(RenderedPass {
            section_id: job.section_id.to_string(),
            occurrence: job.occurrence,
            repeat: job.repeat,
            emotion: job.emotion,
            tracks,
        });
    }
    if let Some(c) = cache {
        c.entries = used;
    }

    let tables = DrumTables::shipped();
    let mut sets = Vec::new();
    for pass in &passes {
        let section = &composition.sections[&pass.section_id];
        let set = track_set(&pass.section_id, section, &pass.tracks, tables);
        let copies = if config.vary_repeats {
            1
        } else {
            section.repeats
        };
        for _ in 0..copies {
            sets.push(set.clone());
        }
    }
    let midi = assemble(composition, &sets)?;
    Ok(Rendering {
        passes,
        midi,
        regenerated: regenerated.into_iter().collect(),
    })
}

/// Ids of sections whose definition differs between two compositions,
/// including sections present in only one of them.
pub fn diff_sections(old: &Composition, new: &Composition) -> Vec<String> {
    let ids: BTreeSet<&String> = old.sections.keys().chain(new.sections.keys()).collect();
    ids.into_iter()
        .filter(|id| old.sections.get(*id) != new.sections.get(*id))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_composition;

    const SONG: &str = r#"{
      "schema_version": 1, "name": "two parts",
      "sections": {
        "verse": {"bpm": 100, "time_signature": "4/4", "scale": {"root": "C", "kind": "major"},
          "chord_progression": ["C", "F"], "measures": 2,
          "tracks": [{"role": "chords", "instrument": 0},
                     {"role": "bass", "instrument": 33},
                     {"role": "melody", "instrument": 73},
                     {"role": "drums", "instrument": "standard"}]},
        "bridge": {"bpm": 90, "time_signature": "7/8", "scale": {"root": "A", "kind": "natural_minor"},
          "chord_progression": ["Am", "Dm"], "measures": 2, "repeats": 2,
          "tracks": [{"role": "chords", "instrument": 48, "mode": "arpeggio"},
                     {"role": "motif", "instrument": 11, "mode": "short_repeated_motif"},
                     {"role": "drums", "instrument": "ethnic", "mode": "only_beat"}]}
      },
      "arrangement": [{"section": "verse", "valence": 0.2, "arousal": 0.4},
                      {"section": "bridge", "valence": -0.3, "arousal": 0.7},
                      {"section": "verse", "valence": 0.2, "arousal": 0.6}]
    }"#;

    fn quick() -> GenerationConfig {
        GenerationConfig {
            ga: GaConfig {
                population_size: 16,
                generations: 3,
                ..GaConfig::default()
            },
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn renders_deterministically() {
        let c = parse_composition(SONG).unwrap();
        let a = render(&c, 42, &quick(), None).unwrap();
        let b = render(&c, 42, &quick(), None).unwrap();
        assert_eq!(a.midi, b.midi);
        assert_eq!(a.passes.len(), 3);
        let other = render(&c, 43, &quick(), None).unwrap();
        assert_ne!(a.midi, other.midi);
    }

    #[test]
    fn editing_one_section_keeps_the_others() {
        let c = parse_composition(SONG).unwrap();
        let mut cache = RenderCache::default();
        let first = render(&c, 7, &quick(), Some(&mut cache)).unwrap();
        assert_eq!(first.regenerated.len(), 3);

        let again = render(&c, 7, &quick(), Some(&mut cache)).unwrap();
        assert!(again.regenerated.is_empty());
        assert_eq!(again.midi, first.midi);

        let edited = SONG.replace("\"bpm\": 90", "\"bpm\": 140");
        let e = parse_composition(&edited).unwrap();
        assert_eq!(diff_sections(&c, &e), ["bridge"]);
        let third = render(&e, 7, &quick(), Some(&mut cache)).unwrap();
        assert_eq!(third.regenerated, [("bridge".to_string(), 0)]);
        for (old, new) in first.passes.iter().zip(&third.passes) {
            assert_eq!(old.tracks, new.tracks);
        }
        let cold = render(&e, 7, &quick(), None).unwrap();
        assert_eq!(cold.midi, third.midi);
    }

    #[test]
    fn invalid_config_rejected() {
        let c = parse_composition(SONG).unwrap();
        let mut cfg = quick();
        cfg.drums.sparsity = 2.0;
        assert!(matches!(
            render(&c, 1, &cfg, None),
            Err(PipelineError::Drums(_))
        ));
    }
}

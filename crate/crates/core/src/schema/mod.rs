//! The composition document: a song's sections, their arrangement and the
//! emotional trajectory, as emitted by a language model or written by hand.
//!
//! Parsing runs in two passes. The JSON is first deserialized into loosely
//! typed raw structs (type errors carry their JSON path), then every field is
//! validated and resolved into the strongly typed [`Composition`].

mod gm;
mod theory;

pub use gm::{program_by_name, PROGRAM_NAMES};
pub use theory::{ChordQuality, ChordSymbol, PitchClass, Scale, ScaleKind};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Version tag every composition document must carry.
pub const SCHEMA_VERSION: u32 = 1;

/// Most melodic (non-percussion) tracks a section may hold; one MIDI channel each.
pub const MAX_MELODIC_TRACKS: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaErrorKind {
    Syntax,
    Version,
    UnknownScale,
    UnknownChord,
    UnknownInstrument,
    UnknownMode,
    Range,
    Reference,
    Structure,
}

/// A validation failure, anchored at a JSON path such as `.arrangement[0].valence`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub kind: SchemaErrorKind,
    pub message: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, kind: SchemaErrorKind, message: impl Into<String>) -> Self {
        SchemaError {
            path: path.into(),
            kind,
            message: message.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Typed model
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    pub const COMMON: TimeSignature = TimeSignature {
        numerator: 4,
        denominator: 4,
    };

    pub fn new(numerator: u8, denominator: u8) -> Result<Self, String> {
        if !(1..=32).contains(&numerator) {
            return Err(format!("numerator {numerator} outside 1..=32"));
        }
        if ![1, 2, 4, 8, 16].contains(&denominator) {
            return Err(format!(
                "denominator {denominator} is not one of 1, 2, 4, 8, 16"
            ));
        }
        Ok(TimeSignature {
            numerator,
            denominator,
        })
    }

    /// Sixteenth-note steps in one measure.
    pub fn steps_per_measure(&self) -> usize {
        self.numerator as usize * (16 / self.denominator as usize)
    }

    /// Sixteenth-note steps in one beat.
    pub fn steps_per_beat(&self) -> usize {
        16 / self.denominator as usize
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl std::str::FromStr for TimeSignature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| format!("time signature `{s}` is not of the form N/D"))?;
        let n: u8 = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let d: u8 = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        TimeSignature::new(n, d)
    }
}

/// A point on the valence-arousal plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Emotion {
    /// Pleasantness, -1..=1.
    pub valence: f64,
    /// Energy, 0..=1.
    pub arousal: f64,
}

impl Emotion {
    pub const NEUTRAL: Emotion = Emotion {
        valence: 0.0,
        arousal: 0.5,
    };

    pub fn new(valence: f64, arousal: f64) -> Self {
        Emotion { valence, arousal }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Melody,
    Bass,
    Motif,
    Chords,
    Drums,
}

impl Role {
    pub fn token(self) -> &'static str {
        match self {
            Role::Melody => "melody",
            Role::Bass => "bass",
            Role::Motif => "motif",
            Role::Chords => "chords",
            Role::Drums => "drums",
        }
    }

    fn from_token(t: &str) -> Option<Role> {
        Some(match t.trim().to_ascii_lowercase().as_str() {
            "melody" | "lead" => Role::Melody,
            "bass" => Role::Bass,
            "motif" => Role::Motif,
            "chords" | "chord" | "harmony" => Role::Chords,
            "drums" | "drum" | "percussion" => Role::Drums,
            _ => return None,
        })
    }
}

/// The eleven playing modes of evolved melodic tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelodicMode {
    Melody,
    Solo,
    ShortRiff,
    LongRiff,
    Bassline,
    RepetitiveBassline,
    LongMotif,
    OpeningMotif,
    ClosingMotif,
    RepeatedMotif,
    ShortRepeatedMotif,
}

impl MelodicMode {
    pub const ALL: [MelodicMode; 11] = [
        MelodicMode::Melody,
        MelodicMode::Solo,
        MelodicMode::ShortRiff,
        MelodicMode::LongRiff,
        MelodicMode::Bassline,
        MelodicMode::RepetitiveBassline,
        MelodicMode::LongMotif,
        MelodicMode::OpeningMotif,
        MelodicMode::ClosingMotif,
        MelodicMode::RepeatedMotif,
        MelodicMode::ShortRepeatedMotif,
    ];

    pub fn role(self) -> Role {
        use MelodicMode::*;
        match self {
            Melody | Solo => Role::Melody,
            ShortRiff | LongRiff | Bassline | RepetitiveBassline => Role::Bass,
            LongMotif | OpeningMotif | ClosingMotif | RepeatedMotif | ShortRepeatedMotif => {
                Role::Motif
            }
        }
    }

    pub fn token(self) -> &'static str {
        use MelodicMode::*;
        match self {
            Melody => "melody",
            Solo => "solo",
            ShortRiff => "short_riff",
            LongRiff => "long_riff",
            Bassline => "bassline",
            RepetitiveBassline => "repetitive_bassline",
            LongMotif => "long_motif",
            OpeningMotif => "opening_motif",
            ClosingMotif => "closing_motif",
            RepeatedMotif => "repeated_motif",
            ShortRepeatedMotif => "short_repeated_motif",
        }
    }
}

/// Chord track playback modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChordMode {
    Continuous,
    Repeated,
    Arpeggio,
}

impl ChordMode {
    pub fn token(self) -> &'static str {
        match self {
            ChordMode::Continuous => "continuous",
            ChordMode::Repeated => "repeated",
            ChordMode::Arpeggio => "arpeggio",
        }
    }
}

/// Percussion playing modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrumMode {
    OnlyBeat,
    DrumSolo,
    Standard,
}

impl DrumMode {
    pub fn token(self) -> &'static str {
        match self {
            DrumMode::OnlyBeat => "only_beat",
            DrumMode::DrumSolo => "drum_solo",
            DrumMode::Standard => "standard",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kit {
    Standard,
    Ethnic,
    Orchestral,
}

impl Kit {
    pub const ALL: [Kit; 3] = [Kit::Standard, Kit::Ethnic, Kit::Orchestral];

    pub fn token(self) -> &'static str {
        match self {
            Kit::Standard => "standard",
            Kit::Ethnic => "ethnic",
            Kit::Orchestral => "orchestral",
        }
    }

    pub fn from_token(t: &str) -> Option<Kit> {
        Kit::ALL
            .into_iter()
            .find(|k| k.token().eq_ignore_ascii_case(t.trim()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instrument {
    /// General MIDI program number.
    Program(u8),
    Kit(Kit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrackMode {
    Melodic(MelodicMode),
    Chords(ChordMode),
    Drums(DrumMode),
}

impl TrackMode {
    pub fn token(self) -> &'static str {
        match self {
            TrackMode::Melodic(m) => m.token(),
            TrackMode::Chords(m) => m.token(),
            TrackMode::Drums(m) => m.token(),
        }
    }

    fn parse(role: Role, token: Option<&str>) -> Option<TrackMode> {
        let token = token.map(|t| t.trim().to_ascii_lowercase().replace([' ', '-'], "_"));
        let Some(token) = token else {
            return Some(match role {
                Role::Melody => TrackMode::Melodic(MelodicMode::Melody),
                Role::Bass => TrackMode::Melodic(MelodicMode::Bassline),
                Role::Motif => TrackMode::Melodic(MelodicMode::LongMotif),
                Role::Chords => TrackMode::Chords(ChordMode::Continuous),
                Role::Drums => TrackMode::Drums(DrumMode::Standard),
            });
        };
        match role {
            Role::Melody | Role::Bass | Role::Motif => MelodicMode::ALL
                .into_iter()
                .find(|m| m.token() == token && m.role() == role)
                .map(TrackMode::Melodic),
            Role::Chords => [
                ChordMode::Continuous,
                ChordMode::Repeated,
                ChordMode::Arpeggio,
            ]
            .into_iter()
            .find(|m| m.token() == token)
            .map(TrackMode::Chords),
            Role::Drums => [DrumMode::OnlyBeat, DrumMode::DrumSolo, DrumMode::Standard]
                .into_iter()
                .find(|m| m.token() == token)
                .map(TrackMode::Drums),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackSpec {
    pub role: Role,
    pub instrument: Instrument,
    pub mode: TrackMode,
}

impl TrackSpec {
    pub fn program(&self) -> Option<u8> {
        match self.instrument {
            Instrument::Program(p) => Some(p),
            Instrument::Kit(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub bpm: f64,
    pub time_signature: TimeSignature,
    pub scale: Scale,
    /// One chord per measure, cycled when shorter than the section.
    pub chord_progression: Vec<ChordSymbol>,
    pub measures: usize,
    pub repeats: u32,
    pub tracks: Vec<TrackSpec>,
}

impl Section {
    pub fn steps_per_measure(&self) -> usize {
        self.time_signature.steps_per_measure()
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_measure() * self.measures
    }

    /// Canonical JSON of this section alone.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawSection::from(self)).expect("section serialization is infallible")
    }

    /// The chord sounding in measure `m` (0-based within one repeat).
    pub fn chord_at_measure(&self, m: usize) -> &ChordSymbol {
        &self.chord_progression[m % self.chord_progression.len()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrangementEntry {
    pub section_id: String,
    pub emotion: Emotion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Composition {
    pub name: String,
    pub sections: BTreeMap<String, Section>,
    pub arrangement: Vec<ArrangementEntry>,
    pub composer_note: String,
}

impl Composition {
    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections.get(id)
    }

    /// Serializes to the canonical JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawComposition::from(self))
            .expect("composition serialization is infallible")
    }
}

// ---------------------------------------------------------------------------
// Raw wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawComposition {
    schema_version: u32,
    name: String,
    sections: BTreeMap<String, RawSection>,
    arrangement: Vec<RawEntry>,
    #[serde(default)]
    composer_note: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSection {
    bpm: f64,
    time_signature: String,
    scale: RawScale,
    chord_progression: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measures: Option<u32>,
    #[serde(default = "one")]
    repeats: u32,
    tracks: Vec<RawTrack>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct RawScale {
    root: String,
    kind: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawInstrument {
    Number(i64),
    Name(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTrack {
    role: String,
    instrument: RawInstrument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    section: String,
    valence: f64,
    arousal: f64,
}

impl From<&Section> for RawSection {
    fn from(s: &Section) -> Self {
        RawSection {
            bpm: s.bpm,
            time_signature: s.time_signature.to_string(),
            scale: RawScale {
                root: s.scale.root.name().to_string(),
                kind: s.scale.kind.token().to_string(),
            },
            chord_progression: s.chord_progression.iter().map(|c| c.name()).collect(),
            measures: Some(s.measures as u32),
            repeats: s.repeats,
            tracks: s
                .tracks
                .iter()
                .map(|t| RawTrack {
                    role: t.role.token().to_string(),
                    instrument: match t.instrument {
                        Instrument::Program(p) => RawInstrument::Number(p as i64),
                        Instrument::Kit(k) => RawInstrument::Name(k.token().to_string()),
                    },
                    mode: Some(t.mode.token().to_string()),
                })
                .collect(),
        }
    }
}

impl From<&Composition> for RawComposition {
    fn from(c: &Composition) -> Self {
        RawComposition {
            schema_version: SCHEMA_VERSION,
            name: c.name.clone(),
            sections: c
                .sections
                .iter()
                .map(|(id, s)| (id.clone(), RawSection::from(s)))
                .collect(),
            arrangement: c
                .arrangement
                .iter()
                .map(|e| RawEntry {
                    section: e.section_id.clone(),
                    valence: e.emotion.valence,
                    arousal: e.emotion.arousal,
                })
                .collect(),
            composer_note: c.composer_note.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing and validation
// ---------------------------------------------------------------------------

/// Parses a chord name of the form `<root><accidental?><quality?>`, e.g. `F#m7`.
pub fn resolve_chord(symbol: &str) -> Result<ChordSymbol, String> {
    let trimmed = symbol.trim();
    let (root, rest) = PitchClass::parse_prefix(trimmed)
        .ok_or_else(|| format!("chord `{symbol}` does not start with a note name"))?;
    let quality = ChordQuality::from_suffix(rest)
        .ok_or_else(|| format!("unknown chord quality `{rest}` in `{symbol}`"))?;
    Ok(ChordSymbol::new(root, quality))
}

/// Parses and validates a composition document.
pub fn parse_composition(json_text: &str) -> Result<Composition, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(json_text);
    let raw: RawComposition = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            String::new()
        } else {
            format!(".{path}")
        };
        SchemaError::new(path, SchemaErrorKind::Syntax, e.into_inner().to_string())
    })?;
    validate(raw)
}

fn range_err(path: String, what: &str) -> SchemaError {
    SchemaError::new(path, SchemaErrorKind::Range, what.to_string())
}

fn validate(raw: RawComposition) -> Result<Composition, SchemaError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(SchemaError::new(
            ".schema_version",
            SchemaErrorKind::Version,
            format!("expected {SCHEMA_VERSION}, found {}", raw.schema_version),
        ));
    }
    if raw.sections.is_empty() {
        return Err(SchemaError::new(
            ".sections",
            SchemaErrorKind::Structure,
            "at least one section is required",
        ));
    }
    let mut sections = BTreeMap::new();
    for (id, rs) in raw.sections {
        let section = validate_section(&format!(".sections.{id}"), rs)?;
        sections.insert(id, section);
    }

    if raw.arrangement.is_empty() {
        return Err(SchemaError::new(
            ".arrangement",
            SchemaErrorKind::Structure,
            "arrangement must not be empty",
        ));
    }
    let mut arrangement = Vec::with_capacity(raw.arrangement.len());
    for (i, e) in raw.arrangement.into_iter().enumerate() {
        let path = format!(".arrangement[{i}]");
        if !sections.contains_key(&e.section) {
            return Err(SchemaError::new(
                format!("{path}.section"),
                SchemaErrorKind::Reference,
                format!("unknown section `{}`", e.section),
            ));
        }
        if !(-1.0..=1.0).contains(&e.valence) {
            return Err(range_err(
                format!("{path}.valence"),
                &format!("valence {} outside [-1, 1]", e.valence),
            ));
        }
        if !(0.0..=1.0).contains(&e.arousal) {
            return Err(range_err(
                format!("{path}.arousal"),
                &format!("arousal {} outside [0, 1]", e.arousal),
            ));
        }
        arrangement.push(ArrangementEntry {
            section_id: e.section,
            emotion: Emotion::new(e.valence, e.arousal),
        });
    }

    Ok(Composition {
        name: raw.name,
        sections,
        arrangement,
        composer_note: raw.composer_note,
    })
}

fn validate_section(path: &str, rs: RawSection) -> Result<Section, SchemaError> {
    if !(20.0..=300.0).contains(&rs.bpm) {
        return Err(range_err(
            format!("{path}.bpm"),
            &format!("bpm {} outside 20..=300", rs.bpm),
        ));
    }
    let time_signature: TimeSignature = rs
        .time_signature
        .parse()
        .map_err(|m: String| range_err(format!("{path}.time_signature"), &m))?;

    let root: PitchClass = rs.scale.root.parse().map_err(|m: String| {
        SchemaError::new(
            format!("{path}.scale.root"),
            SchemaErrorKind::UnknownScale,
            m,
        )
    })?;
    let kind = ScaleKind::from_token(&rs.scale.kind).ok_or_else(|| {
        SchemaError::new(
            format!("{path}.scale.kind"),
            SchemaErrorKind::UnknownScale,
            format!("unknown scale kind `{}`", rs.scale.kind),
        )
    })?;

    if rs.chord_progression.is_empty() {
        return Err(SchemaError::new(
            format!("{path}.chord_progression"),
            SchemaErrorKind::Structure,
            "chord progression must not be empty",
        ));
    }
    let chord_progression = rs
        .chord_progression
        .iter()
        .enumerate()
        .map(|(i, c)| {
            resolve_chord(c).map_err(|m| {
                SchemaError::new(
                    format!("{path}.chord_progression[{i}]"),
                    SchemaErrorKind::UnknownChord,
                    m,
                )
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let measures = rs.measures.unwrap_or(chord_progression.len() as u32);
    if !(1..=512).contains(&measures) {
        return Err(range_err(
            format!("{path}.measures"),
            &format!("measures {measures} outside 1..=512"),
        ));
    }
    if !(1..=64).contains(&rs.repeats) {
        return Err(range_err(
            format!("{path}.repeats"),
            &format!("repeats {} outside 1..=64", rs.repeats),
        ));
    }

    let mut tracks = Vec::with_capacity(rs.tracks.len());
    for (i, rt) in rs.tracks.into_iter().enumerate() {
        tracks.push(validate_track(&format!("{path}.tracks[{i}]"), rt)?);
    }
    if tracks.is_empty() {
        return Err(SchemaError::new(
            format!("{path}.tracks"),
            SchemaErrorKind::Structure,
            "a section needs at least one track",
        ));
    }
    let melodic = tracks.iter().filter(|t| t.role != Role::Drums).count();
    if melodic > MAX_MELODIC_TRACKS {
        return Err(SchemaError::new(
            format!("{path}.tracks"),
            SchemaErrorKind::Structure,
            format!("{melodic} pitched tracks exceed the {MAX_MELODIC_TRACKS} available channels"),
        ));
    }

    Ok(Section {
        bpm: rs.bpm,
        time_signature,
        scale: Scale::new(root, kind),
        chord_progression,
        measures: measures as usize,
        repeats: rs.repeats,
        tracks,
    })
}

fn validate_track(path: &str, rt: RawTrack) -> Result<TrackSpec, SchemaError> {
    let role = Role::from_token(&rt.role).ok_or_else(|| {
        SchemaError::new(
            format!("{path}.role"),
            SchemaErrorKind::Structure,
            format!("unknown role `{}`", rt.role),
        )
    })?;
    let instrument = match (role, &rt.instrument) {
        (Role::Drums, RawInstrument::Name(n)) => Kit::from_token(n).map(Instrument::Kit),
        (Role::Drums, RawInstrument::Number(_)) => None,
        (_, RawInstrument::Number(n)) => (0..=127)
            .contains(n)
            .then_some(Instrument::Program(*n as u8)),
        (_, RawInstrument::Name(n)) => program_by_name(n).map(Instrument::Program),
    }
    .ok_or_else(|| {
        let shown = match &rt.instrument {
            RawInstrument::Number(n) => n.to_string(),
            RawInstrument::Name(s) => s.clone(),
        };
        let expected = if role == Role::Drums {
            "one of the kits standard, ethnic, orchestral"
        } else {
            "a General MIDI program 0..=127 or its name"
        };
        SchemaError::new(
            format!("{path}.instrument"),
            SchemaErrorKind::UnknownInstrument,
            format!("unknown instrument `{shown}`, expected {expected}"),
        )
    })?;
    let mode = TrackMode::parse(role, rt.mode.as_deref()).ok_or_else(|| {
        SchemaError::new(
            format!("{path}.mode"),
            SchemaErrorKind::UnknownMode,
            format!(
                "mode `{}` is not valid for role {}",
                rt.mode.as_deref().unwrap_or(""),
                role.token()
            ),
        )
    })?;
    Ok(TrackSpec {
        role,
        instrument,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal(ts: &str, extra: &str) -> String {
        format!(
            r#"{{
              "schema_version": 1,
              "name": "t",
              "sections": {{
                "a": {{
                  "bpm": 120,
                  "time_signature": "{ts}",
                  "scale": {{"root": "C", "kind": "major"}},
                  "chord_progression": ["C", "F", "Am", "F"],
                  "tracks": [{{"role": "melody", "instrument": 0, "mode": "melody"}}]
                }}
              }},
              "arrangement": [{{"section": "a", "valence": 0.0, "arousal": 0.5}}]
              {extra}
            }}"#
        )
    }

    #[test]
    fn minimal_four_four() {
        let c = parse_composition(&minimal("4/4", "")).unwrap();
        let s = c.section("a").unwrap();
        assert_eq!(s.steps_per_measure(), 16);
        assert_eq!(s.measures, 4);
        assert_eq!(s.repeats, 1);
    }

    #[test]
    fn seven_eight_steps() {
        let c = parse_composition(&minimal("7/8", "")).unwrap();
        assert_eq!(c.section("a").unwrap().steps_per_measure(), 14);
    }

    #[test]
    fn valence_out_of_range_names_path() {
        let text = minimal("4/4", "").replace("\"valence\": 0.0", "\"valence\": 1.5");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.path, ".arrangement[0].valence");
        assert_eq!(err.kind, SchemaErrorKind::Range);
    }

    #[test]
    fn chord_examples() {
        let pcs = |s: &str| -> Vec<u8> {
            resolve_chord(s)
                .unwrap()
                .pitch_classes()
                .iter()
                .map(|p| p.get())
                .collect()
        };
        assert_eq!(pcs("C"), vec![0, 4, 7]);
        assert_eq!(pcs("Am"), vec![9, 0, 4]);
        assert_eq!(pcs("G7"), vec![7, 11, 2, 5]);
        assert_eq!(pcs("Bbmaj7"), vec![10, 2, 5, 9]);
        assert!(resolve_chord("Cxyz").is_err());
        assert!(resolve_chord("7").is_err());
    }

    #[test]
    fn unknown_chord_path() {
        let text = minimal("4/4", "").replace("\"Am\"", "\"Aq\"");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.path, ".sections.a.chord_progression[2]");
        assert_eq!(err.kind, SchemaErrorKind::UnknownChord);
    }

    #[test]
    fn unknown_scale_and_instrument() {
        let text = minimal("4/4", "").replace("\"major\"", "\"bebop\"");
        assert_eq!(
            parse_composition(&text).unwrap_err().kind,
            SchemaErrorKind::UnknownScale
        );
        let text = minimal("4/4", "").replace("\"instrument\": 0", "\"instrument\": 200");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.path, ".sections.a.tracks[0].instrument");
        assert_eq!(err.kind, SchemaErrorKind::UnknownInstrument);
    }

    #[test]
    fn mode_must_match_role() {
        let text = minimal("4/4", "").replace("\"mode\": \"melody\"", "\"mode\": \"short_riff\"");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.kind, SchemaErrorKind::UnknownMode);
        assert_eq!(err.path, ".sections.a.tracks[0].mode");
    }

    #[test]
    fn bad_time_signatures() {
        for ts in ["4/3", "0/4", "33/4", "4/32", "x"] {
            let err = parse_composition(&minimal(ts, "")).unwrap_err();
            assert_eq!(err.path, ".sections.a.time_signature", "{ts}");
        }
    }

    #[test]
    fn syntax_and_type_errors() {
        assert_eq!(
            parse_composition("{").unwrap_err().kind,
            SchemaErrorKind::Syntax
        );
        let text = minimal("4/4", "").replace("\"bpm\": 120", "\"bpm\": \"fast\"");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.path, ".sections.a.bpm");
    }

    #[test]
    fn missing_section_reference() {
        let text = minimal("4/4", "").replace("\"section\": \"a\"", "\"section\": \"b\"");
        let err = parse_composition(&text).unwrap_err();
        assert_eq!(err.kind, SchemaErrorKind::Reference);
        assert_eq!(err.path, ".arrangement[0].section");
    }

    #[test]
    fn wrong_version() {
        let text = minimal("4/4", "").replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert_eq!(
            parse_composition(&text).unwrap_err().kind,
            SchemaErrorKind::Version
        );
    }

    #[test]
    fn roundtrip() {
        let c = parse_composition(&minimal("13/8", "")).unwrap();
        let again = parse_composition(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn time_signature_step_identity() {
        for n in 1..=32u8 {
            for d in [1u8, 2, 4, 8, 16] {
                let ts = TimeSignature::new(n, d).unwrap();
                assert_eq!(ts.steps_per_measure() * d as usize, 16 * n as usize);
            }
        }
    }
}

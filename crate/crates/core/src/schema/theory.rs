//! Pitch classes, scale catalog and chord qualities.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A pitch class, 0 = C through 11 = B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);

    /// Wraps any integer into 0..12.
    pub fn new(value: i32) -> Self {
        PitchClass(value.rem_euclid(12) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn of_pitch(pitch: u8) -> Self {
        PitchClass(pitch % 12)
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Self::new(self.0 as i32 + semitones)
    }

    pub fn name(self) -> &'static str {
        SHARP_NAMES[self.0 as usize]
    }

    /// Parses a leading note name (`C`, `F#`, `Bb`, `Cb`...) and returns the
    /// pitch class together with the unparsed remainder.
    pub fn parse_prefix(text: &str) -> Option<(PitchClass, &str)> {
        let mut chars = text.chars();
        let letter = chars.next()?.to_ascii_uppercase();
        let base = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let rest = &text[1..];
        let (shift, rest) = match rest.chars().next() {
            Some('#') | Some('♯') => (1, &rest[rest.chars().next().unwrap().len_utf8()..]),
            Some('b') | Some('♭') => (-1, &rest[rest.chars().next().unwrap().len_utf8()..]),
            _ => (0, rest),
        };
        Some((PitchClass::new(base + shift), rest))
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match PitchClass::parse_prefix(s.trim()) {
            Some((pc, "")) => Ok(pc),
            _ => Err(format!("unknown pitch class `{s}`")),
        }
    }
}

/// The fixed scale catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Major,
    NaturalMinor,
    HarmonicMinor,
    MelodicMinor,
    Dorian,
    Phrygian,
    Lydian,
    Mixolydian,
    Locrian,
    MajorPentatonic,
    MinorPentatonic,
    Blues,
}

impl ScaleKind {
    pub const ALL: [ScaleKind; 12] = [
        ScaleKind::Major,
        ScaleKind::NaturalMinor,
        ScaleKind::HarmonicMinor,
        ScaleKind::MelodicMinor,
        ScaleKind::Dorian,
        ScaleKind::Phrygian,
        ScaleKind::Lydian,
        ScaleKind::Mixolydian,
        ScaleKind::Locrian,
        ScaleKind::MajorPentatonic,
        ScaleKind::MinorPentatonic,
        ScaleKind::Blues,
    ];

    /// Semitone offsets above the root, ascending.
    pub fn intervals(self) -> &'static [u8] {
        match self {
            ScaleKind::Major => &[0, 2, 4, 5, 7, 9, 11],
            ScaleKind::NaturalMinor => &[0, 2, 3, 5, 7, 8, 10],
            ScaleKind::HarmonicMinor => &[0, 2, 3, 5, 7, 8, 11],
            ScaleKind::MelodicMinor => &[0, 2, 3, 5, 7, 9, 11],
            ScaleKind::Dorian => &[0, 2, 3, 5, 7, 9, 10],
            ScaleKind::Phrygian => &[0, 1, 3, 5, 7, 8, 10],
            ScaleKind::Lydian => &[0, 2, 4, 6, 7, 9, 11],
            ScaleKind::Mixolydian => &[0, 2, 4, 5, 7, 9, 10],
            ScaleKind::Locrian => &[0, 1, 3, 5, 6, 8, 10],
            ScaleKind::MajorPentatonic => &[0, 2, 4, 7, 9],
            ScaleKind::MinorPentatonic => &[0, 3, 5, 7, 10],
            ScaleKind::Blues => &[0, 3, 5, 6, 7, 10],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ScaleKind::Major => "major",
            ScaleKind::NaturalMinor => "natural_minor",
            ScaleKind::HarmonicMinor => "harmonic_minor",
            ScaleKind::MelodicMinor => "melodic_minor",
            ScaleKind::Dorian => "dorian",
            ScaleKind::Phrygian => "phrygian",
            ScaleKind::Lydian => "lydian",
            ScaleKind::Mixolydian => "mixolydian",
            ScaleKind::Locrian => "locrian",
            ScaleKind::MajorPentatonic => "major_pentatonic",
            ScaleKind::MinorPentatonic => "minor_pentatonic",
            ScaleKind::Blues => "blues",
        }
    }

    /// Accepts the canonical token plus a few spellings language models like
    /// to produce (`minor`, `aeolian`, `ionian`, `Harmonic Minor`).
    pub fn from_token(token: &str) -> Option<ScaleKind> {
        let norm: String = token
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        let kind = match norm.as_str() {
            "major" | "ionian" => ScaleKind::Major,
            "minor" | "natural_minor" | "aeolian" => ScaleKind::NaturalMinor,
            "harmonic_minor" => ScaleKind::HarmonicMinor,
            "melodic_minor" => ScaleKind::MelodicMinor,
            "dorian" => ScaleKind::Dorian,
            "phrygian" => ScaleKind::Phrygian,
            "lydian" => ScaleKind::Lydian,
            "mixolydian" => ScaleKind::Mixolydian,
            "locrian" => ScaleKind::Locrian,
            "major_pentatonic" | "pentatonic_major" => ScaleKind::MajorPentatonic,
            "minor_pentatonic" | "pentatonic_minor" => ScaleKind::MinorPentatonic,
            "blues" => ScaleKind::Blues,
            _ => return None,
        };
        Some(kind)
    }
}

/// A concrete scale: root plus catalog kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scale {
    pub root: PitchClass,
    pub kind: ScaleKind,
}

impl Scale {
    pub fn new(root: PitchClass, kind: ScaleKind) -> Self {
        Scale { root, kind }
    }

    /// Member pitch classes in ascending degree order starting at the root.
    pub fn pitch_classes(&self) -> Vec<PitchClass> {
        self.kind
            .intervals()
            .iter()
            .map(|&i| self.root.transpose(i as i32))
            .collect()
    }

    /// 12-bit membership mask, bit `pc` set for each member.
    pub fn mask(&self) -> u16 {
        self.pitch_classes()
            .iter()
            .fold(0u16, |m, pc| m | (1 << pc.get()))
    }

    pub fn contains(&self, pc: PitchClass) -> bool {
        self.mask() & (1 << pc.get()) != 0
    }

    /// All MIDI pitches of the scale within `[low, high]`.
    pub fn pitches_in(&self, low: u8, high: u8) -> Vec<u8> {
        let mask = self.mask();
        (low..=high)
            .filter(|p| mask & (1 << (p % 12)) != 0)
            .collect()
    }
}

/// Chord qualities understood by the chord-name grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChordQuality {
    Maj,
    Min,
    Dim,
    Aug,
    Maj7,
    Min7,
    Dom7,
    Sus2,
    Sus4,
    Maj9,
    Min9,
}

impl ChordQuality {
    pub const ALL: [ChordQuality; 11] = [
        ChordQuality::Maj,
        ChordQuality::Min,
        ChordQuality::Dim,
        ChordQuality::Aug,
        ChordQuality::Maj7,
        ChordQuality::Min7,
        ChordQuality::Dom7,
        ChordQuality::Sus2,
        ChordQuality::Sus4,
        ChordQuality::Maj9,
        ChordQuality::Min9,
    ];

    /// Chord tones as semitones above the root, in stacking order.
    pub fn intervals(self) -> &'static [u8] {
        match self {
            ChordQuality::Maj => &[0, 4, 7],
            ChordQuality::Min => &[0, 3, 7],
            ChordQuality::Dim => &[0, 3, 6],
            ChordQuality::Aug => &[0, 4, 8],
            ChordQuality::Maj7 => &[0, 4, 7, 11],
            ChordQuality::Min7 => &[0, 3, 7, 10],
            ChordQuality::Dom7 => &[0, 4, 7, 10],
            ChordQuality::Sus2 => &[0, 2, 7],
            ChordQuality::Sus4 => &[0, 5, 7],
            ChordQuality::Maj9 => &[0, 4, 7, 11, 14],
            ChordQuality::Min9 => &[0, 3, 7, 10, 14],
        }
    }

    /// Canonical suffix used when printing chord names.
    pub fn suffix(self) -> &'static str {
        match self {
            ChordQuality::Maj => "",
            ChordQuality::Min => "m",
            ChordQuality::Dim => "dim",
            ChordQuality::Aug => "aug",
            ChordQuality::Maj7 => "maj7",
            ChordQuality::Min7 => "m7",
            ChordQuality::Dom7 => "7",
            ChordQuality::Sus2 => "sus2",
            ChordQuality::Sus4 => "sus4",
            ChordQuality::Maj9 => "maj9",
            ChordQuality::Min9 => "m9",
        }
    }

    pub fn from_suffix(suffix: &str) -> Option<ChordQuality> {
        let q = match suffix {
            "" | "maj" | "M" | "major" => ChordQuality::Maj,
            "m" | "min" | "minor" | "-" => ChordQuality::Min,
            "dim" | "o" | "°" => ChordQuality::Dim,
            "aug" | "+" => ChordQuality::Aug,
            "maj7" | "M7" | "Δ7" | "Δ" => ChordQuality::Maj7,
            "m7" | "min7" | "-7" => ChordQuality::Min7,
            "7" | "dom7" => ChordQuality::Dom7,
            "sus2" => ChordQuality::Sus2,
            "sus4" | "sus" => ChordQuality::Sus4,
            "maj9" | "M9" => ChordQuality::Maj9,
            "m9" | "min9" | "-9" => ChordQuality::Min9,
            _ => return None,
        };
        Some(q)
    }
}

/// A resolved chord symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChordSymbol {
    pub root: PitchClass,
    pub quality: ChordQuality,
}

impl ChordSymbol {
    pub fn new(root: PitchClass, quality: ChordQuality) -> Self {
        ChordSymbol { root, quality }
    }

    /// Chord tones in root position, root first.
    pub fn pitch_classes(&self) -> Vec<PitchClass> {
        self.quality
            .intervals()
            .iter()
            .map(|&i| self.root.transpose(i as i32))
            .collect()
    }

    pub fn mask(&self) -> u16 {
        self.pitch_classes()
            .iter()
            .fold(0u16, |m, pc| m | (1 << pc.get()))
    }

    pub fn contains(&self, pc: PitchClass) -> bool {
        self.mask() & (1 << pc.get()) != 0
    }

    /// Semitone offset of the chord's fifth (perfect, diminished or augmented).
    pub fn fifth_interval(&self) -> Option<u8> {
        self.quality
            .intervals()
            .iter()
            .copied()
            .find(|i| (6..=8).contains(i))
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.root.name(), self.quality.suffix())
    }
}

impl fmt::Display for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

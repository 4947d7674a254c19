//! The feature target table and its mapping to numeric fitness targets.

use crate::evolution::{FeatureTarget, FitnessSpec, PitchBand};
use crate::notation::Feature;
use crate::schema::{Emotion, MelodicMode, Role};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// The table shipped with the crate.
pub const DEFAULT_TABLE_CSV: &str = include_str!("../../data/target_table.csv");

#[derive(Debug, Error)]
pub enum TableError {
    #[error("target table: {0}")]
    Csv(#[from] csv::Error),
    #[error("target table row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("target table is missing feature `{0}`")]
    Missing(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Melody,
    Solo,
    Bass,
    Motif,
}

impl Family {
    pub fn of(mode: MelodicMode) -> Family {
        match mode {
            MelodicMode::Melody => Family::Melody,
            MelodicMode::Solo => Family::Solo,
            m if m.role() == Role::Bass => Family::Bass,
            _ => Family::Motif,
        }
    }

    /// Register band: bass octaves 1–3, melody 3–6, solo 3–7, motif 5–7.
    pub fn register(self) -> PitchBand {
        match self {
            Family::Bass => PitchBand::new(24, 59),
            Family::Melody => PitchBand::new(48, 95),
            Family::Solo => PitchBand::new(48, 107),
            Family::Motif => PitchBand::new(72, 107),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Zero,
    Low,
    Med,
    High,
    Unused,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Impact {
    None,
    Low,
    Med,
    High,
}

/// Direction in which an emotion axis moves a target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Flat,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
            Direction::Flat => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub melody: Level,
    pub solo: Level,
    pub bass: Level,
    pub motif: Level,
    pub impact: Impact,
    pub valence: Direction,
    pub arousal: Direction,
}

impl TableRow {
    pub fn level(&self, family: Family) -> Level {
        match family {
            Family::Melody => self.melody,
            Family::Solo => self.solo,
            Family::Bass => self.bass,
            Family::Motif => self.motif,
        }
    }
}

/// Ordinal targets per feature and family, with emotion impact.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetTable {
    rows: HashMap<Feature, TableRow>,
}

#[derive(Deserialize)]
struct CsvRow {
    feature: String,
    melody: String,
    solo: String,
    bass: String,
    motif: String,
    ei: String,
    valence: String,
    arousal: String,
}

fn level(s: &str) -> Option<Level> {
    Some(match s.trim() {
        "zero" => Level::Zero,
        "low" => Level::Low,
        "med" => Level::Med,
        "high" => Level::High,
        "-" => Level::Unused,
        _ => return None,
    })
}

fn impact(s: &str) -> Option<Impact> {
    Some(match s.trim() {
        "none" => Impact::None,
        "low" => Impact::Low,
        "med" => Impact::Med,
        "high" => Impact::High,
        _ => return None,
    })
}

fn direction(s: &str) -> Option<Direction> {
    Some(match s.trim() {
        "up" => Direction::Up,
        "down" => Direction::Down,
        "-" => Direction::Flat,
        _ => return None,
    })
}

impl TargetTable {
    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = HashMap::new();
        for (i, rec) in reader.deserialize::<CsvRow>().enumerate() {
            let rec = rec?;
            let bad = |message: String| TableError::Row {
                row: i + 1,
                message,
            };
            let feature = Feature::from_name(&rec.feature)
                .ok_or_else(|| bad(format!("unknown feature `{}`", rec.feature)))?;
            let lv = |s: &str| level(s).ok_or_else(|| bad(format!("bad level `{s}`")));
            let row = TableRow {
                melody: lv(&rec.melody)?,
                solo: lv(&rec.solo)?,
                bass: lv(&rec.bass)?,
                motif: lv(&rec.motif)?,
                impact: impact(&rec.ei).ok_or_else(|| bad(format!("bad impact `{}`", rec.ei)))?,
                valence: direction(&rec.valence)
                    .ok_or_else(|| bad(format!("bad direction `{}`", rec.valence)))?,
                arousal: direction(&rec.arousal)
                    .ok_or_else(|| bad(format!("bad direction `{}`", rec.arousal)))?,
            };
            rows.insert(feature, row);
        }
        if let Some(f) = Feature::ALL.into_iter().find(|f| !rows.contains_key(f)) {
            return Err(TableError::Missing(f.name()));
        }
        Ok(TargetTable { rows })
    }

    pub fn row(&self, feature: Feature) -> &TableRow {
        &self.rows[&feature]
    }
}

impl TargetTable {
    /// The shipped table, parsed once.
    pub fn shipped() -> &'static TargetTable {
        static TABLE: std::sync::OnceLock<TargetTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(TargetTable::default)
    }
}

impl Default for TargetTable {
    fn default() -> Self {
        TargetTable::from_csv(DEFAULT_TABLE_CSV).expect("shipped target table is valid")
    }
}

/// Numeric values behind the ordinal levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelValues {
    pub zero: f64,
    pub low: f64,
    pub med: f64,
    pub high: f64,
    pub impact_low: f64,
    pub impact_med: f64,
    pub impact_high: f64,
    /// σ for every used feature.
    pub deviation: f64,
    /// w for every used feature.
    pub weight: f64,
    pub harmony_weight: f64,
}

impl Default for LevelValues {
    fn default() -> Self {
        LevelValues {
            zero: 0.0,
            low: 0.2,
            med: 0.5,
            high: 0.8,
            impact_low: 0.1,
            impact_med: 0.2,
            impact_high: 0.3,
            deviation: 0.15,
            weight: 1.0,
            harmony_weight: 2.0,
        }
    }
}

impl LevelValues {
    fn base(&self, level: Level) -> Option<f64> {
        match level {
            Level::Zero => Some(self.zero),
            Level::Low => Some(self.low),
            Level::Med => Some(self.med),
            Level::High => Some(self.high),
            Level::Unused => None,
        }
    }

    fn magnitude(&self, impact: Impact) -> f64 {
        match impact {
            Impact::None => 0.0,
            Impact::Low => self.impact_low,
            Impact::Med => self.impact_med,
            Impact::High => self.impact_high,
        }
    }
}

/// Fitness targets for `mode` at the given emotion, using the shipped table
/// and default level values.
pub fn build_fitness_spec(mode: MelodicMode, emotion: Emotion) -> FitnessSpec {
    build_fitness_spec_with(
        TargetTable::shipped(),
        &LevelValues::default(),
        mode,
        emotion,
    )
}

/// `μ = base + EI·(dir_v·valence + dir_a·(2·arousal − 1))`, clamped to `[0, 1]`.
/// Unused cells get zero weight.
pub fn build_fitness_spec_with(
    table: &TargetTable,
    values: &LevelValues,
    mode: MelodicMode,
    emotion: Emotion,
) -> FitnessSpec {
    let family = Family::of(mode);
    let mut spec = FitnessSpec::unused();
    spec.harmony_weight = values.harmony_weight;
    spec.register = family.register();
    let arousal = 2.0 * emotion.arousal - 1.0;
    for f in Feature::ALL {
        let row = table.row(f);
        let Some(base) = values.base(row.level(family)) else {
            continue;
        };
        let shift = values.magnitude(row.impact)
            * (row.valence.sign() * emotion.valence + row.arousal.sign() * arousal);
        *spec.target_mut(f) = FeatureTarget::new(
            (base + shift).clamp(0.0, 1.0),
            values.deviation,
            values.weight,
        );
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_parses() {
        let t = TargetTable::default();
        let row = t.row(Feature::DissonantIntervalRatio);
        assert_eq!(row.valence, Direction::Down);
        assert_eq!(row.arousal, Direction::Flat);
        assert_eq!(t.row(Feature::RootNoteMeasureStarts).melody, Level::Unused);
    }

    #[test]
    fn neutral_melody_unique_notes_is_low() {
        let spec = build_fitness_spec(MelodicMode::Melody, Emotion::new(0.0, 0.5));
        assert!((spec.target(Feature::UniqueNotesPerMeasure).mean - 0.2).abs() < 1e-12);
        assert_eq!(spec.target(Feature::RootNoteMeasureStarts).weight, 0.0);
        assert_eq!(spec.harmony_weight, 2.0);
    }

    #[test]
    fn solo_ranges_wider_than_melody() {
        let e = Emotion::new(0.3, 0.7);
        let solo = build_fitness_spec(MelodicMode::Solo, e);
        let melody = build_fitness_spec(MelodicMode::Melody, e);
        assert!(solo.target(Feature::PitchRange).mean > melody.target(Feature::PitchRange).mean);
    }

    #[test]
    fn dissonance_falls_with_valence() {
        let lo = build_fitness_spec(MelodicMode::Melody, Emotion::new(-0.5, 0.5));
        let hi = build_fitness_spec(MelodicMode::Melody, Emotion::new(0.5, 0.5));
        assert!(
            hi.target(Feature::DissonantIntervalRatio).mean
                < lo.target(Feature::DissonantIntervalRatio).mean
        );
    }

    #[test]
    fn missing_rows_rejected() {
        let truncated: String = DEFAULT_TABLE_CSV
            .lines()
            .take(6)
            .collect::<Vec<_>>()
            .join("\n");
        assert!(matches!(
            TargetTable::from_csv(&truncated),
            Err(TableError::Missing(_))
        ));
        let bad = DEFAULT_TABLE_CSV.replace("low,high,med,high,none", "lo,high,med,high,none");
        assert!(matches!(
            TargetTable::from_csv(&bad),
            Err(TableError::Row { .. })
        ));
    }
}

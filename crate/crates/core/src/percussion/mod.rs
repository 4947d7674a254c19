//! Drum tracks for any time signature.
//!
//! A drum state is a 12-bit word, one per sixteenth step. Kick and snare come
//! from per-beat probability tables (odd meters are split into table-sized
//! groups), hi-hats and cymbals follow arousal, fills walk a Markov chain
//! over tom activations, and a final pass adds echoes and removes hand
//! collisions.

mod tables;

pub use tables::{
    fill_state_name, parse_fill_state, BeatRow, BeatTable, FillChain, KitMap, KitMaps,
    DEFAULT_BEAT_TABLE_JSON, DEFAULT_FILL_CHAIN_JSON, DEFAULT_KITS_JSON, FILL_STATES,
    MAX_TABLE_BEATS, MIN_TABLE_BEATS, TABLE_UNITS,
};

use crate::schema::{DrumMode, Emotion, TimeSignature};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

pub const TOM_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PercussionError {
    #[error("time signature numerator {0} cannot be decomposed (need at least 2)")]
    NumeratorTooSmall(u8),
    #[error("{file}: {message}")]
    Data { file: String, message: String },
    #[error("unknown drum kit `{0}`")]
    UnknownKit(String),
    #[error("drum parameter {0}")]
    Param(String),
}

/// Drum components in bit order.
pub mod component {
    pub const CLOSED_HIHAT: usize = 0;
    pub const OPEN_HIHAT: usize = 1;
    pub const KICK: usize = 2;
    pub const SNARE: usize = 3;
    /// Lowest tom; the others follow upwards.
    pub const TOM: usize = 4;
    pub const CRASH: usize = 9;
    pub const RIDE: usize = 10;
    pub const BELL: usize = 11;
}

use component::*;

/// Active drum components at one sixteenth step. Bit `i` is component `i + 1`
/// in the usual 1-based numbering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DrumState(pub u16);

impl DrumState {
    pub const COMPONENTS: usize = 12;
    pub const EMPTY: DrumState = DrumState(0);
    /// Components struck by the hands: both hi-hats, toms and cymbals.
    pub const HAND_MASK: u16 = 0b1111_1111_0011;
    pub const TOM_MASK: u16 = 0b1_1111 << TOM;
    /// Components 5–12, subject to random thinning.
    pub const UPPER_MASK: u16 = 0b1111_1111 << TOM;

    pub fn has(self, c: usize) -> bool {
        self.0 >> c & 1 == 1
    }

    pub fn set(&mut self, c: usize) {
        self.0 |= 1 << c;
    }

    pub fn clear(&mut self, c: usize) {
        self.0 &= !(1 << c);
    }

    pub fn hand_count(self) -> u32 {
        (self.0 & Self::HAND_MASK).count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Written component 1 first, e.g. `101000000000` for hi-hat plus kick.
impl fmt::Display for DrumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in 0..Self::COMPONENTS {
            f.write_str(if self.has(c) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrumGrid {
    pub states: Vec<DrumState>,
    pub steps_per_measure: usize,
}

impl DrumGrid {
    pub fn measures(&self) -> usize {
        self.states.len() / self.steps_per_measure
    }

    pub fn measure(&self, m: usize) -> &[DrumState] {
        &self.states[m * self.steps_per_measure..(m + 1) * self.steps_per_measure]
    }
}

/// A run of equal beats looked up in the beat table as one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeatGroup {
    pub beats: u8,
    /// Table unit, 4 or 8.
    pub unit: u8,
}

impl fmt::Display for BeatGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.beats, self.unit)
    }
}

fn split_beats(n: u8, out: &mut Vec<u8>) {
    if n <= MAX_TABLE_BEATS {
        out.push(n);
    } else {
        split_beats(n.div_ceil(2), out);
        split_beats(n / 2, out);
    }
}

/// Splits a meter into beat-table groups. Numerators above 9 are halved
/// recursively, larger half first; sixteenth meters use the eighth table and
/// whole/half meters the quarter table.
pub fn decompose_signature(ts: TimeSignature) -> Result<Vec<BeatGroup>, PercussionError> {
    if ts.numerator < MIN_TABLE_BEATS {
        return Err(PercussionError::NumeratorTooSmall(ts.numerator));
    }
    let unit = if ts.denominator >= 8 { 8 } else { 4 };
    let mut parts = Vec::new();
    split_beats(ts.numerator, &mut parts);
    Ok(parts
        .into_iter()
        .map(|beats| BeatGroup { beats, unit })
        .collect())
}

/// Silent sixteenth states after each beat of a `denominator` meter.
pub fn pad_interval(denominator: u8) -> usize {
    assert!(
        matches!(denominator, 1 | 2 | 4 | 8 | 16),
        "denominator {denominator} is not a power of two up to 16"
    );
    16 / denominator as usize - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HatRate {
    Quarter,
    Eighth,
    Sixteenth,
}

impl HatRate {
    pub fn interval(self) -> usize {
        match self {
            HatRate::Quarter => 4,
            HatRate::Eighth => 2,
            HatRate::Sixteenth => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cymbal {
    None,
    Ride,
    Bell,
}

/// Choices held for a whole track.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrumStyle {
    pub hats: HatRate,
    pub cymbal: Cymbal,
}

/// Position of a measure within its section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurePlace {
    pub index: usize,
    pub count: usize,
    pub after_fill: bool,
}

impl MeasurePlace {
    pub const SINGLE: MeasurePlace = MeasurePlace {
        index: 0,
        count: 1,
        after_fill: false,
    };

    pub fn is_last(&self) -> bool {
        self.index + 1 == self.count
    }
}

/// Probabilities and thresholds of the drum generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrumParams {
    /// Arousal below which hi-hats play quarters.
    pub hat_quarter_below: f64,
    /// Arousal below which hi-hats play eighths (sixteenths above).
    pub hat_eighth_below: f64,
    /// The last closed hi-hat opens with probability `open_hat_scale × arousal`.
    pub open_hat_scale: f64,
    pub ride_base: f64,
    pub ride_arousal: f64,
    pub bell_base: f64,
    pub bell_arousal: f64,
    /// Crash on the first downbeat of a section, and after a fill.
    pub crash_section_start: f64,
    pub crash_downbeat_base: f64,
    pub crash_downbeat_arousal: f64,
    /// Crash on any later beat.
    pub crash_elsewhere: f64,
    pub fill_base: f64,
    pub fill_arousal: f64,
    pub final_measure_factor: f64,
    /// Probability that a fill lasts two beats instead of one, times arousal.
    pub long_fill_arousal: f64,
    pub echo_probability: f64,
    pub sparsity: f64,
    pub hand_limit: u32,
}

impl Default for DrumParams {
    fn default() -> Self {
        DrumParams {
            hat_quarter_below: 0.33,
            hat_eighth_below: 0.75,
            open_hat_scale: 0.5,
            ride_base: 0.1,
            ride_arousal: 0.3,
            bell_base: 0.05,
            bell_arousal: 0.15,
            crash_section_start: 0.9,
            crash_downbeat_base: 0.1,
            crash_downbeat_arousal: 0.3,
            crash_elsewhere: 0.01,
            fill_base: 0.1,
            fill_arousal: 0.4,
            final_measure_factor: 2.0,
            long_fill_arousal: 0.5,
            echo_probability: 0.08,
            sparsity: 0.05,
            hand_limit: 2,
        }
    }
}

impl DrumParams {
    pub fn validate(&self) -> Result<(), PercussionError> {
        let probabilities = [
            ("hat_quarter_below", self.hat_quarter_below),
            ("hat_eighth_below", self.hat_eighth_below),
            ("open_hat_scale", self.open_hat_scale),
            ("ride_base", self.ride_base),
            ("ride_arousal", self.ride_arousal),
            ("bell_base", self.bell_base),
            ("bell_arousal", self.bell_arousal),
            ("crash_section_start", self.crash_section_start),
            ("crash_downbeat_base", self.crash_downbeat_base),
            ("crash_downbeat_arousal", self.crash_downbeat_arousal),
            ("crash_elsewhere", self.crash_elsewhere),
            ("fill_base", self.fill_base),
            ("fill_arousal", self.fill_arousal),
            ("long_fill_arousal", self.long_fill_arousal),
            ("echo_probability", self.echo_probability),
            ("sparsity", self.sparsity),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(PercussionError::Param(format!(
                    "{name} = {p} is outside [0, 1]"
                )));
            }
        }
        if !self.final_measure_factor.is_finite() || self.final_measure_factor < 0.0 {
            return Err(PercussionError::Param(
                "final_measure_factor must be non-negative".into(),
            ));
        }
        if self.hat_quarter_below > self.hat_eighth_below {
            return Err(PercussionError::Param(
                "hi-hat thresholds are out of order".into(),
            ));
        }
        Ok(())
    }

    pub fn hat_rate(&self, arousal: f64) -> HatRate {
        if arousal < self.hat_quarter_below {
            HatRate::Quarter
        } else if arousal < self.hat_eighth_below {
            HatRate::Eighth
        } else {
            HatRate::Sixteenth
        }
    }

    pub fn fill_probability(&self, arousal: f64, last_measure: bool) -> f64 {
        let p = self.fill_base + self.fill_arousal * arousal;
        if last_measure {
            (p * self.final_measure_factor).min(1.0)
        } else {
            p.min(1.0)
        }
    }
}

/// The data files a drum generator draws from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrumTables {
    pub beats: BeatTable,
    pub fills: FillChain,
    pub kits: KitMaps,
}

impl DrumTables {
    /// The shipped tables, parsed once.
    pub fn shipped() -> &'static DrumTables {
        static TABLES: OnceLock<DrumTables> = OnceLock::new();
        TABLES.get_or_init(DrumTables::default)
    }
}

/// Walks `chain` for `length` steps. Each state sounds its toms; the snare
/// joins whenever the lowest tom does.
pub fn generate_fill<R: Rng + ?Sized>(
    length: usize,
    chain: &FillChain,
    rng: &mut R,
) -> Vec<DrumState> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut s = chain.first(rng);
    for i in 0..length {
        out.push(fill_to_drums(s));
        if i + 1 < length {
            s = chain.next(s, rng);
        }
    }
    out
}

fn fill_to_drums(fill: usize) -> DrumState {
    let mut d = DrumState((fill as u16) << TOM);
    if fill & 1 == 1 {
        d.set(SNARE);
    }
    d
}

/// One drum part: meter, emotion and mode fixed, measures generated in order.
#[derive(Clone, Copy, Debug)]
pub struct Drummer<'a> {
    pub tables: &'a DrumTables,
    pub params: &'a DrumParams,
    pub time_signature: TimeSignature,
    pub emotion: Emotion,
    pub mode: DrumMode,
}

impl<'a> Drummer<'a> {
    pub fn steps_per_measure(&self) -> usize {
        self.time_signature.steps_per_measure()
    }

    pub fn style<R: Rng + ?Sized>(&self, rng: &mut R) -> DrumStyle {
        let a = self.emotion.arousal;
        let p = self.params;
        let u: f64 = rng.gen();
        let ride = (p.ride_base + p.ride_arousal * a).min(1.0);
        let bell = (p.bell_base + p.bell_arousal * a).min(1.0 - ride);
        let cymbal = if u < ride {
            Cymbal::Ride
        } else if u < ride + bell {
            Cymbal::Bell
        } else {
            Cymbal::None
        };
        DrumStyle {
            hats: p.hat_rate(a),
            cymbal,
        }
    }

    /// One measure before post-processing, and whether it ends in a fill.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        style: DrumStyle,
        place: MeasurePlace,
        rng: &mut R,
    ) -> (Vec<DrumState>, bool) {
        let ts = self.time_signature;
        let spm = self.steps_per_measure();
        let a = self.emotion.arousal;
        let p = self.params;
        let mut states = vec![DrumState::EMPTY; spm];

        // Kick and snare per beat, then the silent padding of the grid.
        let beat_steps = pad_interval(ts.denominator) + 1;
        match decompose_signature(ts) {
            Ok(groups) => {
                let mut beat = 0;
                for g in groups {
                    let row = self.tables.beats.row(g.beats, g.unit);
                    for k in 0..g.beats as usize {
                        let step = (beat + k) * beat_steps;
                        if rng.gen_bool(row.kick[k]) {
                            states[step].set(KICK);
                        }
                        if rng.gen_bool(row.snare[k]) {
                            states[step].set(SNARE);
                        }
                    }
                    beat += g.beats as usize;
                }
            }
            // A one-beat measure has nothing to look up.
            Err(_) => {
                if rng.gen_bool(self.tables.beats.row(2, 4).kick[0]) {
                    states[0].set(KICK);
                }
            }
        }

        if self.mode != DrumMode::DrumSolo {
            let mut last_hat = None;
            for step in (0..spm).step_by(style.hats.interval()) {
                states[step].set(CLOSED_HIHAT);
                last_hat = Some(step);
            }
            if let Some(step) = last_hat {
                if rng.gen_bool((p.open_hat_scale * a).clamp(0.0, 1.0)) {
                    states[step].clear(CLOSED_HIHAT);
                    states[step].set(OPEN_HIHAT);
                }
            }
            let cymbal = match style.cymbal {
                Cymbal::Ride => Some(RIDE),
                Cymbal::Bell => Some(BELL),
                Cymbal::None => None,
            };
            if let Some(c) = cymbal {
                for step in (2..spm).step_by(4) {
                    states[step].set(c);
                }
            }
        }

        let downbeat = if place.index == 0 || place.after_fill {
            p.crash_section_start
        } else {
            (p.crash_downbeat_base + p.crash_downbeat_arousal * a).min(1.0)
        };
        if rng.gen_bool(downbeat) {
            states[0].set(CRASH);
        }
        for step in (4..spm).step_by(4) {
            if rng.gen_bool(p.crash_elsewhere) {
                states[step].set(CRASH);
            }
        }

        let keep = (1 << KICK) | (1 << CRASH);
        let filled = match self.mode {
            DrumMode::OnlyBeat => false,
            DrumMode::DrumSolo => {
                let fill = generate_fill(spm, &self.tables.fills, rng);
                for (s, f) in states.iter_mut().zip(fill) {
                    s.0 = (s.0 & keep) | f.0;
                }
                true
            }
            DrumMode::Standard => {
                let chance = p.fill_probability(a, place.is_last());
                if rng.gen_bool(chance) {
                    let beats = if rng.gen_bool((p.long_fill_arousal * a).clamp(0.0, 1.0)) {
                        2
                    } else {
                        1
                    };
                    let len = (4 * beats).min(spm);
                    let fill = generate_fill(len, &self.tables.fills, rng);
                    for (s, f) in states[spm - len..].iter_mut().zip(fill) {
                        s.0 = (s.0 & keep) | f.0;
                    }
                    true
                } else {
                    false
                }
            }
        };
        (states, filled)
    }

    /// A post-processed drum track of `measures` measures.
    pub fn track<R: Rng + ?Sized>(&self, measures: usize, rng: &mut R) -> DrumGrid {
        let style = self.style(rng);
        let mut states = Vec::with_capacity(measures * self.steps_per_measure());
        let mut after_fill = false;
        for index in 0..measures {
            let place = MeasurePlace {
                index,
                count: measures,
                after_fill,
            };
            let (m, filled) = self.measure(style, place, rng);
            states.extend(m);
            after_fill = filled && self.mode == DrumMode::Standard;
        }
        let grid = DrumGrid {
            states,
            steps_per_measure: self.steps_per_measure(),
        };
        post_process(grid, self.params, rng)
    }
}

/// One raw measure from the shipped tables and default parameters.
pub fn generate_measure<R: Rng + ?Sized>(
    ts: TimeSignature,
    emotion: Emotion,
    mode: DrumMode,
    rng: &mut R,
) -> DrumGrid {
    static PARAMS: OnceLock<DrumParams> = OnceLock::new();
    let drummer = Drummer {
        tables: DrumTables::shipped(),
        params: PARAMS.get_or_init(DrumParams::default),
        time_signature: ts,
        emotion,
        mode,
    };
    let style = drummer.style(rng);
    let (states, _) = drummer.measure(style, MeasurePlace::SINGLE, rng);
    DrumGrid {
        states,
        steps_per_measure: ts.steps_per_measure(),
    }
}

/// Echoes kicks and snares into the next step, caps the hand components of
/// every state at `hand_limit`, then thins components 5–12.
pub fn post_process<R: Rng + ?Sized>(
    mut grid: DrumGrid,
    params: &DrumParams,
    rng: &mut R,
) -> DrumGrid {
    let original = grid.states.clone();
    for (t, s) in original
        .iter()
        .enumerate()
        .take(original.len().saturating_sub(1))
    {
        for c in [KICK, SNARE] {
            if s.has(c) && rng.gen_bool(params.echo_probability) {
                grid.states[t + 1].set(c);
            }
        }
    }
    let mut set_bits = Vec::with_capacity(DrumState::COMPONENTS);
    for s in grid.states.iter_mut() {
        while s.hand_count() > params.hand_limit {
            set_bits.clear();
            set_bits.extend(
                (0..DrumState::COMPONENTS)
                    .filter(|&c| DrumState::HAND_MASK >> c & 1 == 1 && s.has(c)),
            );
            let &c = set_bits.choose(rng).expect("hand count is positive");
            s.clear(c);
        }
        for c in TOM..DrumState::COMPONENTS {
            if s.has(c) && rng.gen_bool(params.sparsity) {
                s.clear(c);
            }
        }
    }
    grid
}

/// `(gm_note, step)` for every set component, in step order.
pub fn map_to_kit(grid: &DrumGrid, kit: &KitMap) -> Vec<(u8, usize)> {
    grid.states
        .iter()
        .enumerate()
        .flat_map(|(step, &s)| kit.notes(s).map(move |n| (n, step)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::schema::Kit;

    fn ts(n: u8, d: u8) -> TimeSignature {
        TimeSignature::new(n, d).unwrap()
    }

    fn groups(n: u8, d: u8) -> Vec<String> {
        decompose_signature(ts(n, d))
            .unwrap()
            .iter()
            .map(|g| g.to_string())
            .collect()
    }

    #[test]
    fn decomposition_examples() {
        assert_eq!(groups(13, 8), ["7/8", "6/8"]);
        assert_eq!(groups(25, 4), ["7/4", "6/4", "6/4", "6/4"]);
        assert_eq!(groups(11, 16), ["6/8", "5/8"]);
        assert_eq!(groups(4, 4), ["4/4"]);
        assert_eq!(groups(3, 2), ["3/4"]);
        assert!(matches!(
            decompose_signature(ts(1, 4)),
            Err(PercussionError::NumeratorTooSmall(1))
        ));
    }

    #[test]
    fn padding() {
        let got: Vec<usize> = [1, 2, 4, 8, 16].into_iter().map(pad_interval).collect();
        assert_eq!(got, [15, 7, 3, 1, 0]);
    }

    fn drummer<'a>(
        params: &'a DrumParams,
        t: TimeSignature,
        a: f64,
        mode: DrumMode,
    ) -> Drummer<'a> {
        Drummer {
            tables: DrumTables::shipped(),
            params,
            time_signature: t,
            emotion: Emotion::new(0.0, a),
            mode,
        }
    }

    #[test]
    fn high_arousal_hats_every_step() {
        let p = DrumParams::default();
        let d = drummer(&p, TimeSignature::COMMON, 1.0, DrumMode::OnlyBeat);
        let mut r = rng::stream(1, &[]);
        for _ in 0..20 {
            let style = d.style(&mut r);
            let (m, _) = d.measure(style, MeasurePlace::SINGLE, &mut r);
            assert!(m.iter().all(|s| s.has(CLOSED_HIHAT) || s.has(OPEN_HIHAT)));
        }
    }

    #[test]
    fn forced_kick_on_downbeat() {
        let mut tables = DrumTables::default();
        let mut doc: serde_json::Value = serde_json::from_str(DEFAULT_BEAT_TABLE_JSON).unwrap();
        for e in doc["entries"].as_array_mut().unwrap() {
            if e["beats"] == 4 && e["unit"] == 4 {
                e["kick"][0] = serde_json::json!(1.0);
            }
        }
        tables.beats = BeatTable::from_json(&doc.to_string()).unwrap();
        let p = DrumParams::default();
        let d = Drummer {
            tables: &tables,
            ..drummer(&p, TimeSignature::COMMON, 0.5, DrumMode::Standard)
        };
        for seed in 0..50 {
            let mut r = rng::stream(seed, &[]);
            let (m, _) = d.measure(d.style(&mut r), MeasurePlace::SINGLE, &mut r);
            assert!(m[0].has(KICK));
        }
    }

    #[test]
    fn only_beat_has_no_toms_and_solo_no_ride() {
        let p = DrumParams::default();
        for (n, den) in [(4, 4), (7, 8), (13, 8), (25, 4), (11, 16), (1, 4)] {
            let mut r = rng::stream(3, &[n as u64]);
            let beat = drummer(&p, ts(n, den), 0.9, DrumMode::OnlyBeat).track(8, &mut r);
            assert_eq!(beat.states.len(), 8 * ts(n, den).steps_per_measure());
            assert!(beat.states.iter().all(|s| s.0 & DrumState::TOM_MASK == 0));
            let solo = drummer(&p, ts(n, den), 0.9, DrumMode::DrumSolo).track(8, &mut r);
            assert!(solo.states.iter().all(|s| !s.has(RIDE) && !s.has(BELL)));
        }
    }

    #[test]
    fn hand_limit_and_sparsity() {
        let mut s = DrumState::EMPTY;
        for c in [CLOSED_HIHAT, CRASH, RIDE] {
            s.set(c);
        }
        let grid = DrumGrid {
            states: vec![s; 4],
            steps_per_measure: 4,
        };
        let mut p = DrumParams {
            echo_probability: 0.0,
            sparsity: 0.0,
            ..DrumParams::default()
        };
        let out = post_process(grid.clone(), &p, &mut rng::stream(5, &[]));
        assert!(out.states.iter().all(|s| s.hand_count() == 2));

        let mut ks = DrumState::EMPTY;
        ks.set(KICK);
        ks.set(SNARE);
        let plain = DrumGrid {
            states: vec![ks],
            steps_per_measure: 1,
        };
        assert_eq!(
            post_process(plain.clone(), &p, &mut rng::stream(5, &[])),
            plain
        );

        p.sparsity = 1.0;
        let out = post_process(grid, &p, &mut rng::stream(5, &[]));
        assert!(out.states.iter().all(|s| s.0 & DrumState::UPPER_MASK == 0));
    }

    #[test]
    fn absorbing_fill_states() {
        let mut start = vec![0.0; FILL_STATES];
        start[parse_fill_state("00001").unwrap()] = 1.0;
        let uniform = vec![1.0 / FILL_STATES as f64; FILL_STATES];
        let mut matrix = vec![uniform; FILL_STATES];
        let high = parse_fill_state("00001").unwrap();
        matrix[high] = (0..FILL_STATES)
            .map(|j| if j == high { 1.0 } else { 0.0 })
            .collect();
        let chain = FillChain::new(start, matrix.clone()).unwrap();
        let fill = generate_fill(12, &chain, &mut rng::stream(0, &[]));
        assert!(fill.iter().all(|s| s.0 == 1 << (TOM + 4)));

        let mut silent_start = vec![0.0; FILL_STATES];
        silent_start[0] = 1.0;
        matrix[0] = silent_start.clone();
        let chain = FillChain::new(silent_start, matrix).unwrap();
        assert!(generate_fill(9, &chain, &mut rng::stream(0, &[]))
            .iter()
            .all(|s| s.is_empty()));
    }

    #[test]
    fn lowest_tom_brings_snare() {
        let d = fill_to_drums(parse_fill_state("10100").unwrap());
        assert!(d.has(SNARE) && d.has(TOM) && d.has(TOM + 2));
        assert!(!fill_to_drums(parse_fill_state("01000").unwrap()).has(SNARE));
    }

    #[test]
    fn kits_change_notes_not_rhythm() {
        let p = DrumParams::default();
        let grid = drummer(&p, TimeSignature::COMMON, 0.6, DrumMode::Standard)
            .track(4, &mut rng::stream(8, &[]));
        let kits = &DrumTables::shipped().kits;
        let std_events = map_to_kit(&grid, kits.kit(Kit::Standard));
        let eth_events = map_to_kit(&grid, kits.kit(Kit::Ethnic));
        assert_eq!(
            std_events.iter().map(|e| e.1).collect::<Vec<_>>(),
            eth_events.iter().map(|e| e.1).collect::<Vec<_>>()
        );
        assert_ne!(std_events, eth_events);
        let mut kick_only = DrumState::EMPTY;
        kick_only.set(KICK);
        let g = DrumGrid {
            states: vec![kick_only],
            steps_per_measure: 1,
        };
        assert_eq!(map_to_kit(&g, kits.kit(Kit::Standard)), [(36, 0)]);
        let empty = DrumGrid {
            states: vec![DrumState::EMPTY; 16],
            steps_per_measure: 16,
        };
        assert!(map_to_kit(&empty, kits.kit(Kit::Orchestral)).is_empty());
    }

    #[test]
    fn display_form() {
        let mut s = DrumState::EMPTY;
        s.set(CLOSED_HIHAT);
        s.set(KICK);
        assert_eq!(s.to_string(), "101000000000");
    }

    #[test]
    fn deterministic_tracks() {
        let p = DrumParams::default();
        let d = drummer(&p, ts(7, 8), 0.7, DrumMode::Standard);
        assert_eq!(
            d.track(6, &mut rng::stream(2, &[])),
            d.track(6, &mut rng::stream(2, &[]))
        );
    }
}

//! Drum data files: kick/snare beat table, fill Markov chain and kit maps.

use super::{DrumState, PercussionError, TOM_COUNT};
use crate::schema::Kit;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_BEAT_TABLE_JSON: &str = include_str!("../../data/beat_table.json");
pub const DEFAULT_FILL_CHAIN_JSON: &str = include_str!("../../data/fill_chain.json");
pub const DEFAULT_KITS_JSON: &str = include_str!("../../data/kits.json");

const DATA_VERSION: u32 = 1;

/// Beat units with their own probability rows.
pub const TABLE_UNITS: [u8; 2] = [4, 8];
pub const MIN_TABLE_BEATS: u8 = 2;
pub const MAX_TABLE_BEATS: u8 = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatRow {
    pub beats: u8,
    pub unit: u8,
    pub kick: Vec<f64>,
    pub snare: Vec<f64>,
}

#[derive(Deserialize, Serialize)]
struct BeatTableFile {
    version: u32,
    entries: Vec<BeatRow>,
}

/// Per-beat kick and snare probabilities for 2 to 9 beats of quarters or eighths.
#[derive(Clone, Debug, PartialEq)]
pub struct BeatTable {
    rows: BTreeMap<(u8, u8), BeatRow>,
}

fn data_error(file: &str, message: impl Into<String>) -> PercussionError {
    PercussionError::Data {
        file: file.to_string(),
        message: message.into(),
    }
}

fn check_version(file: &str, version: u32) -> Result<(), PercussionError> {
    if version != DATA_VERSION {
        return Err(data_error(file, format!("unsupported version {version}")));
    }
    Ok(())
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl BeatTable {
    pub fn from_json(text: &str) -> Result<Self, PercussionError> {
        const FILE: &str = "beat table";
        let file: BeatTableFile =
            serde_json::from_str(text).map_err(|e| data_error(FILE, e.to_string()))?;
        check_version(FILE, file.version)?;
        let mut rows = BTreeMap::new();
        for row in file.entries {
            let key = (row.beats, row.unit);
            if !TABLE_UNITS.contains(&row.unit)
                || !(MIN_TABLE_BEATS..=MAX_TABLE_BEATS).contains(&row.beats)
            {
                return Err(data_error(
                    FILE,
                    format!("unexpected entry {}/{}", row.beats, row.unit),
                ));
            }
            if row.kick.len() != row.beats as usize || row.snare.len() != row.beats as usize {
                return Err(data_error(
                    FILE,
                    format!("entry {}/{} has wrong row length", row.beats, row.unit),
                ));
            }
            if !row
                .kick
                .iter()
                .chain(&row.snare)
                .all(|&p| is_probability(p))
            {
                return Err(data_error(
                    FILE,
                    format!(
                        "entry {}/{} has a value outside [0, 1]",
                        row.beats, row.unit
                    ),
                ));
            }
            if rows.insert(key, row).is_some() {
                return Err(data_error(
                    FILE,
                    format!("duplicate entry {}/{}", key.0, key.1),
                ));
            }
        }
        for unit in TABLE_UNITS {
            for beats in MIN_TABLE_BEATS..=MAX_TABLE_BEATS {
                if !rows.contains_key(&(beats, unit)) {
                    return Err(data_error(FILE, format!("missing entry {beats}/{unit}")));
                }
            }
        }
        Ok(BeatTable { rows })
    }

    /// Row for `beats` beats of `unit` (4 or 8); both must be inside the table.
    pub fn row(&self, beats: u8, unit: u8) -> &BeatRow {
        &self.rows[&(beats, unit)]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Default for BeatTable {
    fn default() -> Self {
        BeatTable::from_json(DEFAULT_BEAT_TABLE_JSON).expect("shipped beat table is valid")
    }
}

pub const FILL_STATES: usize = 1 << TOM_COUNT;

#[derive(Deserialize, Serialize)]
struct FillChainFile {
    version: u32,
    states: Vec<String>,
    start: Vec<f64>,
    matrix: Vec<Vec<f64>>,
}

/// Markov chain over tom activations.
///
/// State `s` has bit `i` set when tom `i` (counted from the lowest) sounds;
/// its written form lists the toms lowest first, so `"00001"` is the high tom.
#[derive(Clone, Debug, PartialEq)]
pub struct FillChain {
    pub start: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

pub fn fill_state_name(state: usize) -> String {
    (0..TOM_COUNT)
        .map(|b| if state >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_fill_state(name: &str) -> Option<usize> {
    if name.len() != TOM_COUNT {
        return None;
    }
    name.chars().enumerate().try_fold(0, |acc, (i, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | 1 << i),
        _ => None,
    })
}

fn check_distribution(row: &[f64]) -> bool {
    row.len() == FILL_STATES
        && row.iter().all(|&p| is_probability(p))
        && (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

impl FillChain {
    pub fn new(start: Vec<f64>, matrix: Vec<Vec<f64>>) -> Result<Self, PercussionError> {
        const FILE: &str = "fill chain";
        if !check_distribution(&start) {
            return Err(data_error(
                FILE,
                "start distribution must hold 32 probabilities summing to 1",
            ));
        }
        if matrix.len() != FILL_STATES {
            return Err(data_error(FILE, "transition matrix must have 32 rows"));
        }
        if let Some(i) = matrix.iter().position(|r| !check_distribution(r)) {
            return Err(data_error(
                FILE,
                format!("row {} is not a distribution", fill_state_name(i)),
            ));
        }
        Ok(FillChain { start, matrix })
    }

    pub fn from_json(text: &str) -> Result<Self, PercussionError> {
        const FILE: &str = "fill chain";
        let file: FillChainFile =
            serde_json::from_str(text).map_err(|e| data_error(FILE, e.to_string()))?;
        check_version(FILE, file.version)?;
        // Rows may be listed in any order; the state labels say which is which.
        if file.states.len() != FILL_STATES || file.matrix.len() != FILL_STATES {
            return Err(data_error(FILE, "expected 32 states"));
        }
        let mut start = vec![0.0; FILL_STATES];
        let mut matrix = vec![Vec::new(); FILL_STATES];
        for (k, label) in file.states.iter().enumerate() {
            let s = parse_fill_state(label)
                .ok_or_else(|| data_error(FILE, format!("bad state label `{label}`")))?;
            if !matrix[s].is_empty() {
                return Err(data_error(FILE, format!("state `{label}` listed twice")));
            }
            start[s] = file.start.get(k).copied().unwrap_or(f64::NAN);
            let mut row = vec![0.0; FILL_STATES];
            let given = &file.matrix[k];
            if given.len() != FILL_STATES {
                return Err(data_error(
                    FILE,
                    format!("row `{label}` must have 32 entries"),
                ));
            }
            for (j, to) in file.states.iter().enumerate() {
                row[parse_fill_state(to).unwrap_or(0)] = given[j];
            }
            matrix[s] = row;
        }
        FillChain::new(start, matrix)
    }

    fn draw<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding left a sliver above the last nonzero entry.
        dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    pub fn first<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        Self::draw(&self.start, rng)
    }

    pub fn next<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        Self::draw(&self.matrix[state], rng)
    }
}

impl Default for FillChain {
    fn default() -> Self {
        FillChain::from_json(DEFAULT_FILL_CHAIN_JSON).expect("shipped fill chain is valid")
    }
}

/// GM percussion notes for the twelve drum components of one kit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KitMap {
    pub closed_hihat: u8,
    pub open_hihat: u8,
    pub kick: u8,
    pub snare: u8,
    pub toms: [u8; TOM_COUNT],
    pub crash: u8,
    pub ride: u8,
    pub bell: u8,
}

impl KitMap {
    /// GM note for component `index` (0-based bit position of a [`DrumState`]).
    pub fn note(&self, index: usize) -> u8 {
        match index {
            0 => self.closed_hihat,
            1 => self.open_hihat,
            2 => self.kick,
            3 => self.snare,
            4..=8 => self.toms[index - 4],
            9 => self.crash,
            10 => self.ride,
            11 => self.bell,
            _ => panic!("drum component {index} out of range"),
        }
    }

    /// Notes for every set component of `state`, in component order.
    pub fn notes(&self, state: DrumState) -> impl Iterator<Item = u8> + '_ {
        (0..DrumState::COMPONENTS)
            .filter(move |&i| state.0 >> i & 1 == 1)
            .map(|i| self.note(i))
    }
}

#[derive(Deserialize, Serialize)]
struct KitsFile {
    version: u32,
    kits: BTreeMap<String, KitMap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KitMaps {
    kits: BTreeMap<String, KitMap>,
}

impl KitMaps {
    pub fn from_json(text: &str) -> Result<Self, PercussionError> {
        const FILE: &str = "kits";
        let file: KitsFile =
            serde_json::from_str(text).map_err(|e| data_error(FILE, e.to_string()))?;
        check_version(FILE, file.version)?;
        let maps = KitMaps { kits: file.kits };
        for kit in Kit::ALL {
            maps.get(kit.token())?;
        }
        for (name, map) in &maps.kits {
            let notes: Vec<u8> = (0..DrumState::COMPONENTS).map(|i| map.note(i)).collect();
            if notes.iter().any(|&n| n > 127) {
                return Err(data_error(
                    FILE,
                    format!("kit `{name}` has a note above 127"),
                ));
            }
        }
        Ok(maps)
    }

    pub fn get(&self, name: &str) -> Result<&KitMap, PercussionError> {
        self.kits
            .get(&name.trim().to_ascii_lowercase())
            .ok_or_else(|| PercussionError::UnknownKit(name.to_string()))
    }

    pub fn kit(&self, kit: Kit) -> &KitMap {
        self.get(kit.token()).expect("kit maps cover every kit")
    }
}

impl Default for KitMaps {
    fn default() -> Self {
        KitMaps::from_json(DEFAULT_KITS_JSON).expect("shipped kit maps are valid")
    }
}

//! Turns rendered sections into one Standard MIDI File.
//!
//! Track 0 carries tempo and meter changes; every used channel gets its own
//! track. Ticks are 480 per quarter, so one sixteenth step is 120 ticks.

mod smf;

use crate::notation::NoteSeq;
use crate::percussion::{component, DrumGrid, KitMap};
use crate::schema::{Composition, TimeSignature};
use std::collections::BTreeMap;
use thiserror::Error;

pub const TICKS_PER_QUARTER: u16 = 480;
pub const TICKS_PER_STEP: u64 = TICKS_PER_QUARTER as u64 / 4;
pub const DRUM_CHANNEL: u8 = 9;
pub const MELODIC_VELOCITY: u8 = 96;
pub const ACCENT_VELOCITY: u8 = 110;
pub const DRUM_VELOCITY: u8 = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssembleError {
    #[error("section `{section}`: event at tick {tick} lies beyond the section end ({length})")]
    Overflow {
        section: String,
        tick: u64,
        length: u64,
    },
    #[error("section `{section}`: channel {channel} is not usable for this part")]
    Channel { section: String, channel: u8 },
    #[error("nothing to assemble")]
    Empty,
}

/// Note-offs sort before note-ons at the same tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    NoteOff,
    NoteOn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub key: u8,
    pub channel: u8,
    pub velocity: u8,
}

/// One instrument's events within a section, ticks relative to the section start.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub name: String,
    pub channel: u8,
    pub program: Option<u8>,
    pub events: Vec<ChannelEvent>,
}

/// Everything one arrangement entry contributes to the file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackSet {
    pub section_id: String,
    pub bpm: f64,
    pub time_signature: TimeSignature,
    pub length_ticks: u64,
    pub parts: Vec<Part>,
}

impl TrackSet {
    pub fn new(section_id: &str, bpm: f64, time_signature: TimeSignature, steps: usize) -> Self {
        TrackSet {
            section_id: section_id.to_string(),
            bpm,
            time_signature,
            length_ticks: steps as u64 * TICKS_PER_STEP,
            parts: Vec::new(),
        }
    }
}

fn sort_events(events: &mut [ChannelEvent]) {
    events.sort_by_key(|e| (e.tick, e.kind, e.key, e.channel, e.velocity));
}

/// Note events of parallel voices on one channel, offs first at equal ticks
/// and then by key.
pub fn merge_voices(voices: &[NoteSeq], channel: u8, velocity: u8) -> Vec<ChannelEvent> {
    let mut events = Vec::new();
    for voice in voices {
        for n in voice.notes() {
            let on = n.onset as u64 * TICKS_PER_STEP;
            let off = (n.onset + n.duration) as u64 * TICKS_PER_STEP;
            events.push(ChannelEvent {
                tick: on,
                kind: EventKind::NoteOn,
                key: n.pitch,
                channel,
                velocity,
            });
            events.push(ChannelEvent {
                tick: off,
                kind: EventKind::NoteOff,
                key: n.pitch,
                channel,
                velocity: 0,
            });
        }
    }
    sort_events(&mut events);
    events
}

/// One-step hits for every drum component, accented on kick and crash.
pub fn drum_events(grid: &DrumGrid, kit: &KitMap) -> Vec<ChannelEvent> {
    let mut events = Vec::new();
    for (step, s) in grid.states.iter().enumerate() {
        // The same GM note may serve two components in a custom kit.
        let mut keys: BTreeMap<u8, u8> = BTreeMap::new();
        for c in 0..crate::percussion::DrumState::COMPONENTS {
            if s.has(c) {
                let velocity = if c == component::KICK || c == component::CRASH {
                    ACCENT_VELOCITY
                } else {
                    DRUM_VELOCITY
                };
                let entry = keys.entry(kit.note(c)).or_insert(velocity);
                *entry = (*entry).max(velocity);
            }
        }
        let tick = step as u64 * TICKS_PER_STEP;
        for (key, velocity) in keys {
            events.push(ChannelEvent {
                tick,
                kind: EventKind::NoteOn,
                key,
                channel: DRUM_CHANNEL,
                velocity,
            });
            events.push(ChannelEvent {
                tick: tick + TICKS_PER_STEP,
                kind: EventKind::NoteOff,
                key,
                channel: DRUM_CHANNEL,
                velocity: 0,
            });
        }
    }
    sort_events(&mut events);
    events
}

fn micros_per_quarter(bpm: f64) -> u32 {
    (60_000_000.0 / bpm).round() as u32
}

/// Encodes the track sets in order as one format-1 file.
pub fn assemble(
    composition: &Composition,
    tracksets: &[TrackSet],
) -> Result<Vec<u8>, AssembleError> {
    if tracksets.is_empty() {
        return Err(AssembleError::Empty);
    }
    for set in tracksets {
        for part in &set.parts {
            let drum_ok = (part.channel == DRUM_CHANNEL) == part.program.is_none();
            if part.channel > 15
                || !drum_ok
                || part.events.iter().any(|e| e.channel != part.channel)
            {
                return Err(AssembleError::Channel {
                    section: set.section_id.clone(),
                    channel: part.channel,
                });
            }
            if let Some(e) = part.events.iter().find(|e| e.tick > set.length_ticks) {
                return Err(AssembleError::Overflow {
                    section: set.section_id.clone(),
                    tick: e.tick,
                    length: set.length_ticks,
                });
            }
        }
    }

    let mut conductor = smf::TrackWriter::new();
    conductor.track_name(0, &composition.name);
    // Per channel: (absolute tick, program) changes and events.
    let mut programs: BTreeMap<u8, Vec<(u64, u8)>> = BTreeMap::new();
    let mut events: BTreeMap<u8, Vec<ChannelEvent>> = BTreeMap::new();
    let mut names: BTreeMap<u8, String> = BTreeMap::new();
    let mut offset = 0u64;
    for set in tracksets {
        conductor.tempo(offset, micros_per_quarter(set.bpm));
        conductor.time_signature(
            offset,
            set.time_signature.numerator,
            set.time_signature.denominator,
        );
        for part in &set.parts {
            names
                .entry(part.channel)
                .or_insert_with(|| part.name.clone());
            if let Some(p) = part.program {
                programs.entry(part.channel).or_default().push((offset, p));
            }
            events
                .entry(part.channel)
                .or_default()
                .extend(part.events.iter().map(|e| ChannelEvent {
                    tick: e.tick + offset,
                    ..*e
                }));
        }
        offset += set.length_ticks;
    }
    let total = offset;

    let mut chunks = vec![conductor.end(total)];
    for (channel, mut evs) in events {
        sort_events(&mut evs);
        let mut w = smf::TrackWriter::new();
        w.track_name(0, &names[&channel]);
        let mut changes = programs
            .remove(&channel)
            .unwrap_or_default()
            .into_iter()
            .peekable();
        for e in evs {
            while let Some(&(tick, program)) = changes.peek() {
                if tick > e.tick {
                    break;
                }
                w.program_change(tick, channel, program);
                changes.next();
            }
            match e.kind {
                EventKind::NoteOn => w.note_on(e.tick, channel, e.key, e.velocity),
                EventKind::NoteOff => w.note_off(e.tick, channel, e.key),
            }
        }
        for (tick, program) in changes {
            w.program_change(tick, channel, program);
        }
        chunks.push(w.end(total));
    }
    Ok(smf::write_file(TICKS_PER_QUARTER, &chunks))
}

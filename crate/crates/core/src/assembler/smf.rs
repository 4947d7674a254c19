//! Minimal Standard MIDI File writer (format 1, no running status).

pub struct TrackWriter {
    data: Vec<u8>,
    last_tick: u64,
}

fn push_vlq(out: &mut Vec<u8>, mut value: u64) {
    assert!(
        value < 1 << 28,
        "delta time {value} exceeds the variable-length range"
    );
    let mut bytes = [0u8; 4];
    let mut n = 0;
    loop {
        bytes[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let continuation = if i > 0 { 0x80 } else { 0 };
        out.push(bytes[i] | continuation);
    }
}

impl TrackWriter {
    pub fn new() -> Self {
        TrackWriter {
            data: Vec::new(),
            last_tick: 0,
        }
    }

    fn delta(&mut self, tick: u64) {
        assert!(
            tick >= self.last_tick,
            "events must be written in tick order"
        );
        push_vlq(&mut self.data, tick - self.last_tick);
        self.last_tick = tick;
    }

    fn meta(&mut self, tick: u64, kind: u8, payload: &[u8]) {
        self.delta(tick);
        self.data.extend_from_slice(&[0xff, kind]);
        push_vlq(&mut self.data, payload.len() as u64);
        self.data.extend_from_slice(payload);
    }

    pub fn track_name(&mut self, tick: u64, name: &str) {
        self.meta(tick, 0x03, name.as_bytes());
    }

    pub fn tempo(&mut self, tick: u64, micros_per_quarter: u32) {
        let b = micros_per_quarter.to_be_bytes();
        self.meta(tick, 0x51, &b[1..]);
    }

    pub fn time_signature(&mut self, tick: u64, numerator: u8, denominator: u8) {
        let exponent = denominator.trailing_zeros() as u8;
        let clocks = (96 / denominator as u32) as u8;
        self.meta(tick, 0x58, &[numerator, exponent, clocks, 8]);
    }

    pub fn program_change(&mut self, tick: u64, channel: u8, program: u8) {
        self.delta(tick);
        self.data.extend_from_slice(&[0xc0 | channel, program]);
    }

    pub fn note_on(&mut self, tick: u64, channel: u8, key: u8, velocity: u8) {
        self.delta(tick);
        self.data
            .extend_from_slice(&[0x90 | channel, key, velocity]);
    }

    pub fn note_off(&mut self, tick: u64, channel: u8, key: u8) {
        self.delta(tick);
        self.data.extend_from_slice(&[0x80 | channel, key, 0]);
    }

    pub fn end(mut self, tick: u64) -> Vec<u8> {
        let tick = tick.max(self.last_tick);
        self.meta(tick, 0x2f, &[]);
        self.data
    }
}

/// Header plus track chunks.
pub fn write_file(division: u16, tracks: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
    out.extend_from_slice(&division.to_be_bytes());
    for t in tracks {
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(t.len() as u32).to_be_bytes());
        out.extend_from_slice(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vlq_examples() {
        for (v, bytes) in [
            (0u64, vec![0x00]),
            (0x40, vec![0x40]),
            (0x7f, vec![0x7f]),
            (0x80, vec![0x81, 0x00]),
            (0x2000, vec![0xc0, 0x00]),
            (0x3fff, vec![0xff, 0x7f]),
            (0x0fff_ffff, vec![0xff, 0xff, 0xff, 0x7f]),
        ] {
            let mut out = Vec::new();
            push_vlq(&mut out, v);
            assert_eq!(out, bytes, "{v:#x}");
        }
    }

    #[test]
    fn meta_encodings() {
        let mut w = TrackWriter::new();
        w.tempo(0, 500_000);
        w.time_signature(0, 7, 8);
        let data = w.end(0);
        assert_eq!(
            data,
            [0, 0xff, 0x51, 3, 0x07, 0xa1, 0x20, 0, 0xff, 0x58, 4, 7, 3, 12, 8, 0, 0xff, 0x2f, 0]
        );
    }
}

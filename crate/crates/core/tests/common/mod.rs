#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rhythmc_core::score::{NoteEvent, RhythmSequence, DEFAULT_GRID};
use rhythmc_core::Duration;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn sixteenths(units: u64) -> Duration {
    Duration::new(units, 16).unwrap()
}

/// Rhythm on a sixteenth grid whose total is `2^k` units with `k <= max_log2`. Spans split in
/// half with probability `split_p`, so every leaf holds exactly one event.
pub fn power_of_two_rhythm(rng: &mut impl Rng, max_log2: u32, split_p: f64) -> RhythmSequence {
    let total = 1u64 << rng.gen_range(0..=max_log2);
    let mut spans = Vec::new();
    subdivide(rng, total, split_p, &mut spans);
    let mut events = Vec::with_capacity(spans.len());
    for (i, units) in spans.into_iter().enumerate() {
        let d = sixteenths(units);
        events.push(if i > 0 && rng.gen_bool(0.15) {
            NoteEvent::rest(d)
        } else {
            NoteEvent::sounded(d)
        });
    }
    RhythmSequence::new(events, DEFAULT_GRID)
}

fn subdivide(rng: &mut impl Rng, units: u64, split_p: f64, out: &mut Vec<u64>) {
    if units > 1 && rng.gen_bool(split_p) {
        subdivide(rng, units / 2, split_p, out);
        subdivide(rng, units / 2, split_p, out);
    } else {
        out.push(units);
    }
}

/// Unquantized sequence with durations in 1/96 units, leading tie-free.
pub fn raw_sequence(rng: &mut impl Rng, max_len: usize) -> RhythmSequence {
    let n = rng.gen_range(1..=max_len);
    let events = (0..n)
        .map(|i| {
            let d = Duration::new(rng.gen_range(1..=96), 96).unwrap();
            if i > 0 && rng.gen_bool(0.2) {
                NoteEvent::rest(d)
            } else {
                NoteEvent::sounded(d)
            }
        })
        .collect();
    RhythmSequence::new(events, DEFAULT_GRID)
}

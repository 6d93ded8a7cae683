//! Minimal Standard MIDI File reader for monophonic lines.
//!
//! Supports formats 0 and 1 with ticks-per-quarter division. Exactly one track may carry
//! note events; everything else (meta, sysex, controllers) is skipped.

use thiserror::Error;

use crate::duration::Duration;
use crate::score::{quantize, NoteEvent, RhythmSequence, DEFAULT_GRID};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MidiError {
    #[error("unexpected end of data at byte {offset}")]
    Truncated { offset: usize },
    #[error("missing MThd header")]
    MissingHeader,
    #[error("header chunk too short ({0} bytes)")]
    ShortHeader(u32),
    #[error("unsupported SMF format {0}")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
    #[error("division of zero ticks per quarter")]
    ZeroDivision,
    #[error("data byte {byte:#04x} at byte {offset} with no running status")]
    RunningStatus { offset: usize, byte: u8 },
    #[error("invalid status byte {byte:#04x} at byte {offset}")]
    InvalidStatus { offset: usize, byte: u8 },
    #[error("variable-length quantity too long at byte {offset}")]
    VarLen { offset: usize },
    #[error("overlapping notes at tick {tick}: input must be monophonic")]
    Polyphony { tick: u64 },
    #[error("note events found in more than one track")]
    MultipleNoteTracks,
    #[error("no note events")]
    NoNotes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NoteMsg {
    On(u8),
    Off(u8),
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    // absolute offset of data[0] in the file
    base: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], base: usize) -> Self {
        Self { data, pos: 0, base }
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn is_empty(&self) -> bool {
        self.pos >= self.data.len()
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        let b = *self.data.get(self.pos).ok_or(MidiError::Truncated {
            offset: self.offset(),
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn peek(&self) -> Result<u8, MidiError> {
        self.data.get(self.pos).copied().ok_or(MidiError::Truncated {
            offset: self.offset(),
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(MidiError::Truncated {
                offset: self.base + self.data.len(),
            }),
        }
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn varlen(&mut self) -> Result<u32, MidiError> {
        let start = self.offset();
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::VarLen { offset: start })
    }
}

struct Track {
    notes: Vec<(u64, NoteMsg)>,
    end_tick: u64,
}

/// Reads note on/off events (with absolute ticks) from one track chunk.
fn read_track(body: &[u8], base: usize) -> Result<Track, MidiError> {
    let mut r = Reader::new(body, base);
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    let mut notes = Vec::new();

    while !r.is_empty() {
        tick += u64::from(r.varlen()?);
        let offset = r.offset();
        let first = r.peek()?;
        let status = if first & 0x80 != 0 {
            r.u8()?;
            first
        } else {
            match running {
                Some(s) => s,
                None => return Err(MidiError::RunningStatus { offset, byte: first }),
            }
        };

        match status {
            0x80..=0xef => {
                running = Some(status);
                let d1 = data_byte(&mut r)?;
                let d2 = match status & 0xf0 {
                    0xc0 | 0xd0 => None,
                    _ => Some(data_byte(&mut r)?),
                };
                match (status & 0xf0, d2) {
                    (0x90, Some(vel)) if vel > 0 => notes.push((tick, NoteMsg::On(d1))),
                    (0x90, Some(_)) | (0x80, Some(_)) => notes.push((tick, NoteMsg::Off(d1))),
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.varlen()? as usize;
                r.take(len)?;
            }
            0xff => {
                running = None;
                let kind = r.u8()?;
                let len = r.varlen()? as usize;
                r.take(len)?;
                if kind == 0x2f {
                    break;
                }
            }
            byte => return Err(MidiError::InvalidStatus { offset, byte }),
        }
    }
    Ok(Track {
        notes,
        end_tick: tick,
    })
}

fn data_byte(r: &mut Reader<'_>) -> Result<u8, MidiError> {
    let offset = r.offset();
    let b = r.u8()?;
    if b & 0x80 != 0 {
        return Err(MidiError::InvalidStatus { offset, byte: b });
    }
    Ok(b)
}

/// Raw, unquantized event list at the file's own tick resolution.
pub fn read_events(bytes: &[u8]) -> Result<Vec<NoteEvent>, MidiError> {
    let mut r = Reader::new(bytes, 0);
    if bytes.len() < 4 || &bytes[..4] != b"MThd" {
        return Err(MidiError::MissingHeader);
    }
    r.take(4)?;
    let header_len = r.u32()?;
    if header_len < 6 {
        return Err(MidiError::ShortHeader(header_len));
    }
    let header = r.take(header_len as usize)?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    let division = u16::from_be_bytes([header[4], header[5]]);
    if format > 1 {
        return Err(MidiError::UnsupportedFormat(format));
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision);
    }
    if division == 0 {
        return Err(MidiError::ZeroDivision);
    }

    let mut note_track: Option<Track> = None;
    while !r.is_empty() {
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        let base = r.offset();
        let body = r.take(len)?;
        if id != b"MTrk" {
            continue;
        }
        let track = read_track(body, base)?;
        if track.notes.is_empty() {
            continue;
        }
        if note_track.is_some() {
            return Err(MidiError::MultipleNoteTracks);
        }
        note_track = Some(track);
    }
    let track = note_track.ok_or(MidiError::NoNotes)?;
    let whole = u64::from(division) * 4;
    notes_to_events(&track, whole)
}

fn notes_to_events(track: &Track, ticks_per_whole: u64) -> Result<Vec<NoteEvent>, MidiError> {
    let dur = |ticks: u64| Duration::new(ticks, ticks_per_whole).expect("nonzero division");
    let mut events = Vec::new();
    let mut sounding: Option<(u8, u64)> = None;
    let mut last_off: u64 = 0;

    for &(tick, msg) in &track.notes {
        match msg {
            NoteMsg::On(key) => {
                if sounding.is_some() {
                    return Err(MidiError::Polyphony { tick });
                }
                if tick > last_off {
                    events.push(NoteEvent::rest(dur(tick - last_off)));
                }
                sounding = Some((key, tick));
            }
            NoteMsg::Off(key) => {
                if let Some((k, start)) = sounding {
                    if k == key {
                        // zero-length notes keep one tick so they survive as leaves
                        let len = (tick - start).max(1);
                        events.push(NoteEvent::sounded(dur(len)));
                        last_off = start + len;
                        sounding = None;
                    }
                }
            }
        }
    }
    if let Some((_, start)) = sounding {
        let end = track.end_tick.max(start);
        events.push(NoteEvent::sounded(dur((end - start).max(1))));
    }
    if events.iter().all(|e| e.is_rest()) {
        return Err(MidiError::NoNotes);
    }
    Ok(events)
}

/// Parses a monophonic SMF and quantizes it to the default sixteenth-note grid.
pub fn parse_midi(bytes: &[u8]) -> Result<RhythmSequence, MidiError> {
    parse_midi_with_grid(bytes, DEFAULT_GRID)
}

pub fn parse_midi_with_grid(bytes: &[u8], grid: Duration) -> Result<RhythmSequence, MidiError> {
    let events = read_events(bytes)?;
    Ok(quantize(&RhythmSequence::new(events, grid), grid))
}

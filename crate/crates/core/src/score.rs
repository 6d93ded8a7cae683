//! Note/rest event sequences, the `.rtm` rhythm-text format and grid quantization.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::duration::Duration;

/// Default quantization grid: a sixteenth note.
pub const DEFAULT_GRID: Duration = match Duration::new_const(1, 16) {
    Some(d) => d,
    None => unreachable!(),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NoteKind {
    Sounded,
    Rest,
    /// The later portion of a note carried over from the preceding event.
    TiedContinuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct NoteEvent {
    pub duration: Duration,
    pub kind: NoteKind,
}

impl NoteEvent {
    pub fn new(duration: Duration, kind: NoteKind) -> Self {
        debug_assert!(!duration.is_zero(), "events must have positive duration");
        Self { duration, kind }
    }

    pub fn sounded(duration: Duration) -> Self {
        Self::new(duration, NoteKind::Sounded)
    }

    pub fn rest(duration: Duration) -> Self {
        Self::new(duration, NoteKind::Rest)
    }

    pub fn tied(duration: Duration) -> Self {
        Self::new(duration, NoteKind::TiedContinuation)
    }

    pub fn is_rest(&self) -> bool {
        self.kind == NoteKind::Rest
    }
}

/// An ordered list of events together with the grid they are (or will be) quantized to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RhythmSequence {
    pub events: Vec<NoteEvent>,
    pub grid: Duration,
}

impl RhythmSequence {
    pub fn new(events: Vec<NoteEvent>, grid: Duration) -> Self {
        Self { events, grid }
    }

    pub fn total(&self) -> Duration {
        self.events.iter().map(|e| e.duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// True when every event is a whole multiple of the grid.
    pub fn is_on_grid(&self) -> bool {
        self.events
            .iter()
            .all(|e| e.duration.units_of(self.grid).is_some())
    }

    /// Total length in grid units, if the sequence is on its grid.
    pub fn total_units(&self) -> Option<u64> {
        self.events.iter().map(|e| e.duration.units_of(self.grid)).sum()
    }

    pub fn sounded_count(&self) -> usize {
        self.events.iter().filter(|e| !e.is_rest()).count()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("line {line}, column {column}: malformed token `{token}`")]
    Token {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: zero-length duration")]
    ZeroDuration { line: usize, column: usize },
    #[error("line {line}, column {column}: tie cannot start a sequence")]
    LeadingTie { line: usize, column: usize },
    #[error("line {line}: malformed grid header `{text}`")]
    Grid { line: usize, text: String },
    #[error("no events in input")]
    Empty,
}

/// Parses the rhythm-text format.
///
/// `#` starts a comment, an optional first line `grid=<p>/<q>` sets the grid, and every other
/// token is `<p>/<q>` (sounded), `r<p>/<q>` (rest) or `~<p>/<q>` (tied continuation).
pub fn parse_text(source: &str) -> Result<RhythmSequence, TextError> {
    let mut grid = DEFAULT_GRID;
    let mut events = Vec::new();
    let mut seen_content = false;

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if let Some(rest) = trimmed.strip_prefix("grid=") {
                grid = match rest.trim().parse::<Duration>() {
                    Ok(g) if !g.is_zero() => g,
                    _ => {
                        return Err(TextError::Grid {
                            line: line_no,
                            text: trimmed.to_string(),
                        })
                    }
                };
                continue;
            }
        }

        for (column, token) in tokens_with_columns(line) {
            let (kind, body) = match token.as_bytes()[0] {
                b'r' => (NoteKind::Rest, &token[1..]),
                b'~' => (NoteKind::TiedContinuation, &token[1..]),
                _ => (NoteKind::Sounded, token),
            };
            let duration = body.parse::<Duration>().map_err(|_| TextError::Token {
                line: line_no,
                column,
                token: token.to_string(),
            })?;
            if duration.is_zero() {
                return Err(TextError::ZeroDuration {
                    line: line_no,
                    column,
                });
            }
            if events.is_empty() && kind == NoteKind::TiedContinuation {
                return Err(TextError::LeadingTie {
                    line: line_no,
                    column,
                });
            }
            events.push(NoteEvent::new(duration, kind));
        }
    }

    if events.is_empty() {
        return Err(TextError::Empty);
    }
    Ok(RhythmSequence::new(events, grid))
}

// 1-based columns counted in characters.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((c, b)) = start.take() {
                out.push((c + 1, &line[b..byte]));
            }
        } else if start.is_none() {
            start = Some((col, byte));
        }
    }
    if let Some((c, b)) = start {
        out.push((c + 1, &line[b..]));
    }
    out.into_iter()
}

/// Writes a sequence in the normalized rhythm-text form: a grid header and one line of tokens.
pub fn format_text(seq: &RhythmSequence) -> String {
    let mut out = format!("grid={}\n", seq.grid);
    for (i, e) in seq.events.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let prefix = match e.kind {
            NoteKind::Sounded => "",
            NoteKind::Rest => "r",
            NoteKind::TiedContinuation => "~",
        };
        let _ = write!(out, "{prefix}{}", e.duration);
    }
    out.push('\n');
    out
}

/// Outcome of [`quantize_with_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantized {
    pub sequence: RhythmSequence,
    /// Sum of absolute per-event rounding errors.
    pub abs_error: Duration,
    pub dropped_rests: usize,
    pub promoted: usize,
}

/// Rounds every event to the nearest multiple of `grid` (halves round up).
pub fn quantize(seq: &RhythmSequence, grid: Duration) -> RhythmSequence {
    quantize_with_report(seq, grid).sequence
}

pub fn quantize_with_report(seq: &RhythmSequence, grid: Duration) -> Quantized {
    assert!(!grid.is_zero(), "grid must be positive");
    let mut events = Vec::with_capacity(seq.events.len());
    let mut abs_error = Duration::ZERO;
    let mut dropped_rests = 0;
    let mut promoted = 0;

    for e in &seq.events {
        let mut units = e.duration.round_to_units(grid);
        if units == 0 {
            if e.is_rest() {
                dropped_rests += 1;
                abs_error = abs_error + e.duration;
                continue;
            }
            promoted += 1;
            units = 1;
        }
        let q = grid.checked_mul_int(units).expect("quantized duration overflow");
        abs_error = abs_error + q.abs_diff(e.duration);
        events.push(NoteEvent::new(q, e.kind));
    }

    // A dropped leading rest can expose a tie; it then starts the note.
    if let Some(first) = events.first_mut() {
        if first.kind == NoteKind::TiedContinuation {
            first.kind = NoteKind::Sounded;
        }
    }

    Quantized {
        sequence: RhythmSequence::new(events, grid),
        abs_error,
        dropped_rests,
        promoted,
    }
}

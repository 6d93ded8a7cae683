//! Binary rhythmic trees built by repeated equal-duration halving.

use thiserror::Error;

use crate::duration::Duration;
use crate::score::{NoteEvent, NoteKind, RhythmSequence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Leaf(NoteEvent),
    Internal(Box<RhythmTree>, Box<RhythmTree>),
}

/// A node spanning `duration`; internal nodes split it into two equal halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhythmTree {
    pub duration: Duration,
    pub content: Content,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("cannot build a tree from an empty sequence")]
    Empty,
    #[error("event {index} ({duration}) is not a whole multiple of the grid {grid}")]
    OffGrid {
        index: usize,
        duration: Duration,
        grid: Duration,
    },
    #[error("total length of {units} grid units is not a power of two; pad the sequence first")]
    NotPowerOfTwo { units: u64 },
}

impl RhythmTree {
    pub fn leaf(event: NoteEvent) -> Self {
        Self {
            duration: event.duration,
            content: Content::Leaf(event),
        }
    }

    /// Joins two equal-length subtrees under a new parent.
    pub fn internal(left: RhythmTree, right: RhythmTree) -> Self {
        assert_eq!(left.duration, right.duration, "siblings must have equal duration");
        Self {
            duration: left.duration + right.duration,
            content: Content::Internal(Box::new(left), Box::new(right)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.content, Content::Leaf(_))
    }

    pub fn children(&self) -> Option<(&RhythmTree, &RhythmTree)> {
        match &self.content {
            Content::Leaf(_) => None,
            Content::Internal(l, r) => Some((l, r)),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match &self.content {
            Content::Leaf(_) => 1,
            Content::Internal(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match &self.content {
            Content::Leaf(_) => 0,
            Content::Internal(l, r) => 1 + l.internal_count() + r.internal_count(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.leaf_count() + self.internal_count()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        match &self.content {
            Content::Leaf(_) => 0,
            Content::Internal(l, r) => 1 + l.height().max(r.height()),
        }
    }

    /// True when `self` and `other` have the same branching structure, ignoring durations and events.
    pub fn same_shape(&self, other: &RhythmTree) -> bool {
        match (&self.content, &other.content) {
            (Content::Leaf(_), Content::Leaf(_)) => true,
            (Content::Internal(a, b), Content::Internal(c, d)) => a.same_shape(c) && b.same_shape(d),
            _ => false,
        }
    }
}

/// Left-to-right leaf events.
pub fn leaf_events(tree: &RhythmTree) -> Vec<NoteEvent> {
    let mut out = Vec::with_capacity(tree.leaf_count());
    collect_leaves(tree, &mut out);
    out
}

fn collect_leaves(tree: &RhythmTree, out: &mut Vec<NoteEvent>) {
    match &tree.content {
        Content::Leaf(e) => out.push(*e),
        Content::Internal(l, r) => {
            collect_leaves(l, out);
            collect_leaves(r, out);
        }
    }
}

/// Folds every tied continuation into the event before it.
pub fn merge_ties(events: &[NoteEvent]) -> Vec<NoteEvent> {
    let mut out: Vec<NoteEvent> = Vec::with_capacity(events.len());
    for e in events {
        match (e.kind, out.last_mut()) {
            (NoteKind::TiedContinuation, Some(prev)) => prev.duration = prev.duration + e.duration,
            _ => out.push(*e),
        }
    }
    out
}

/// Merges ties and joins runs of adjacent rests, the form in which a sequence and the leaves
/// of its tree coincide.
pub fn normalize_events(events: &[NoteEvent]) -> Vec<NoteEvent> {
    let mut out: Vec<NoteEvent> = Vec::with_capacity(events.len());
    for e in merge_ties(events) {
        match out.last_mut() {
            Some(prev) if prev.is_rest() && e.is_rest() => prev.duration = prev.duration + e.duration,
            _ => out.push(e),
        }
    }
    out
}

/// Appends one trailing rest so the total length in grid units becomes a power of two.
///
/// Returns the padded sequence and the number of grid units added. The sequence must be on
/// its grid.
pub fn pad_to_power_of_two(seq: &RhythmSequence) -> Result<(RhythmSequence, u64), TreeError> {
    let units = grid_units(seq)?.iter().sum::<u64>();
    if units == 0 {
        return Err(TreeError::Empty);
    }
    let target = units.next_power_of_two();
    let pad = target - units;
    let mut out = seq.clone();
    if pad > 0 {
        let d = seq.grid.checked_mul_int(pad).expect("pad overflow");
        out.events.push(NoteEvent::rest(d));
    }
    Ok((out, pad))
}

fn grid_units(seq: &RhythmSequence) -> Result<Vec<u64>, TreeError> {
    seq.events
        .iter()
        .enumerate()
        .map(|(index, e)| {
            e.duration
                .units_of(seq.grid)
                .filter(|&u| u > 0)
                .ok_or(TreeError::OffGrid {
                    index,
                    duration: e.duration,
                    grid: seq.grid,
                })
        })
        .collect()
}

/// Builds the rhythmic tree of an on-grid sequence whose length is a power-of-two number of
/// grid units.
///
/// A span holding a single event becomes a leaf. Otherwise the span is halved; an event
/// crossing the midpoint is cut in two, the first part staying with the left half and the
/// remainder continuing into the right half as a tie (or as a plain rest, for silence).
pub fn build_tree(seq: &RhythmSequence) -> Result<RhythmTree, TreeError> {
    if seq.is_empty() {
        return Err(TreeError::Empty);
    }
    let units = grid_units(seq)?;
    let total: u64 = units.iter().sum();
    if !total.is_power_of_two() {
        return Err(TreeError::NotPowerOfTwo { units: total });
    }
    let span: Vec<(u64, NoteKind)> = units.into_iter().zip(seq.events.iter().map(|e| e.kind)).collect();
    Ok(build_span(&span, total, seq.grid))
}

fn build_span(events: &[(u64, NoteKind)], len: u64, grid: Duration) -> RhythmTree {
    if let [(units, kind)] = events {
        debug_assert_eq!(*units, len);
        let d = grid.checked_mul_int(*units).expect("duration overflow");
        return RhythmTree::leaf(NoteEvent::new(d, *kind));
    }
    // more than one event in a span implies len >= 2
    let half = len / 2;
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut pos = 0;
    for &(units, kind) in events {
        let end = pos + units;
        if end <= half {
            left.push((units, kind));
        } else if pos >= half {
            right.push((units, kind));
        } else {
            left.push((half - pos, kind));
            let carried = match kind {
                NoteKind::Rest => NoteKind::Rest,
                NoteKind::Sounded | NoteKind::TiedContinuation => NoteKind::TiedContinuation,
            };
            right.push((end - half, carried));
        }
        pos = end;
    }
    RhythmTree::internal(build_span(&left, half, grid), build_span(&right, half, grid))
}

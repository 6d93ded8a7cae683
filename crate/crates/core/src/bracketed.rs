//! Bracketed-string encoding of rhythmic trees and their turtle rendering.
//!
//! The canonical form follows `B := "F" | "[-" B "][+" B "]"`: a leaf is a bare `F` and an
//! internal node lists its left child under `-` and its right child under `+`.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::duration::Duration;
use crate::score::NoteEvent;
use crate::tree::{Content, RhythmTree};

/// A string over the turtle alphabet `F f + - [ ]` with balanced brackets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BracketedString(String);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BracketError {
    #[error("unbalanced bracket at position {pos}")]
    Unbalanced { pos: usize },
    #[error("stray symbol `{symbol}` at position {pos}")]
    StraySymbol { pos: usize, symbol: char },
    #[error("non-canonical form at position {pos}: expected {expected}")]
    NonCanonical { pos: usize, expected: &'static str },
}

impl BracketedString {
    /// Validates the alphabet and bracket balance. Positions are character offsets.
    pub fn new(s: impl Into<String>) -> Result<Self, BracketError> {
        let s = s.into();
        let mut depth: usize = 0;
        for (pos, symbol) in s.chars().enumerate() {
            match symbol {
                'F' | 'f' | '+' | '-' => {}
                '[' => depth += 1,
                ']' => depth = depth.checked_sub(1).ok_or(BracketError::Unbalanced { pos })?,
                _ => return Err(BracketError::StraySymbol { pos, symbol }),
            }
        }
        if depth != 0 {
            return Err(BracketError::Unbalanced {
                pos: s.chars().count(),
            });
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BracketedString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Output layout for [`encode_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodeStyle {
    /// `[-L][+R]`, leaves as `F`, no segment for the node itself.
    #[default]
    Canonical,
    /// Every node draws its own `F`; children follow as `[+L][-R]`, the drawing layout.
    ExplicitRoot,
}

pub fn encode(tree: &RhythmTree) -> BracketedString {
    encode_with(tree, EncodeStyle::Canonical)
}

pub fn encode_with(tree: &RhythmTree, style: EncodeStyle) -> BracketedString {
    let mut out = String::new();
    match style {
        EncodeStyle::Canonical => write_canonical(tree, &mut out),
        EncodeStyle::ExplicitRoot => write_explicit(tree, &mut out),
    }
    BracketedString(out)
}

fn write_canonical(tree: &RhythmTree, out: &mut String) {
    match &tree.content {
        Content::Leaf(_) => out.push('F'),
        Content::Internal(l, r) => {
            out.push_str("[-");
            write_canonical(l, out);
            out.push_str("][+");
            write_canonical(r, out);
            out.push(']');
        }
    }
}

fn write_explicit(tree: &RhythmTree, out: &mut String) {
    out.push('F');
    if let Content::Internal(l, r) = &tree.content {
        out.push_str("[+");
        write_explicit(l, out);
        out.push_str("][-");
        write_explicit(r, out);
        out.push(']');
    }
}

/// Branching structure recovered from a bracketed string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn of(tree: &RhythmTree) -> Shape {
        match &tree.content {
            Content::Leaf(_) => Shape::Leaf,
            Content::Internal(l, r) => Shape::Node(Box::new(Shape::of(l)), Box::new(Shape::of(r))),
        }
    }

    /// Assigns durations by halving from `root`; every leaf becomes a sounded note.
    pub fn with_durations(&self, root: Duration) -> RhythmTree {
        match self {
            Shape::Leaf => RhythmTree::leaf(NoteEvent::sounded(root)),
            Shape::Node(l, r) => {
                let half = root.halve();
                RhythmTree::internal(l.with_durations(half), r.with_durations(half))
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }
}

/// Parses a canonical bracketed string into a tree shape.
pub fn parse(s: &BracketedString) -> Result<Shape, BracketError> {
    let chars: Vec<char> = s.0.chars().collect();
    let mut pos = 0;
    let shape = parse_node(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(BracketError::NonCanonical {
            pos,
            expected: "end of string",
        });
    }
    Ok(shape)
}

/// Validates then parses in one step.
pub fn parse_str(s: &str) -> Result<Shape, BracketError> {
    parse(&BracketedString::new(s)?)
}

fn expect(chars: &[char], pos: &mut usize, want: char, expected: &'static str) -> Result<(), BracketError> {
    if chars.get(*pos) == Some(&want) {
        *pos += 1;
        Ok(())
    } else {
        Err(BracketError::NonCanonical { pos: *pos, expected })
    }
}

fn parse_node(chars: &[char], pos: &mut usize) -> Result<Shape, BracketError> {
    match chars.get(*pos) {
        Some('F') => {
            *pos += 1;
            Ok(Shape::Leaf)
        }
        Some('[') => {
            *pos += 1;
            expect(chars, pos, '-', "`-` opening the left branch")?;
            let left = parse_node(chars, pos)?;
            expect(chars, pos, ']', "`]` closing the left branch")?;
            expect(chars, pos, '[', "`[` opening the right branch")?;
            expect(chars, pos, '+', "`+` opening the right branch")?;
            let right = parse_node(chars, pos)?;
            expect(chars, pos, ']', "`]` closing the right branch")?;
            Ok(Shape::Node(Box::new(left), Box::new(right)))
        }
        _ => Err(BracketError::NonCanonical {
            pos: *pos,
            expected: "`F` or `[`",
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurtleState {
    pub x: f64,
    pub y: f64,
    /// Degrees, counterclockwise from the positive x axis.
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: (f64, f64),
    pub to: (f64, f64),
}

/// Result of running the turtle over a string.
#[derive(Debug, Clone, PartialEq)]
pub struct TurtleRun {
    pub segments: Vec<Segment>,
    pub final_state: TurtleState,
    pub final_stack_depth: usize,
}

/// Interprets a string with the standard turtle rules: `F` draws a step forward, `f` moves
/// without drawing, `+`/`-` turn counterclockwise/clockwise by `angle`, `[`/`]` push/pop.
pub fn interpret(s: &BracketedString, start: TurtleState, step: f64, angle: f64) -> TurtleRun {
    let mut state = start;
    let mut stack = Vec::new();
    let mut segments = Vec::new();
    for c in s.0.chars() {
        match c {
            'F' | 'f' => {
                let rad = state.heading.to_radians();
                let next = (state.x + step * rad.cos(), state.y + step * rad.sin());
                if c == 'F' {
                    segments.push(Segment {
                        from: (state.x, state.y),
                        to: next,
                    });
                }
                state.x = next.0;
                state.y = next.1;
            }
            '+' => state.heading += angle,
            '-' => state.heading -= angle,
            '[' => stack.push(state),
            ']' => state = stack.pop().expect("validated brackets"),
            _ => unreachable!("validated alphabet"),
        }
    }
    TurtleRun {
        segments,
        final_state: state,
        final_stack_depth: stack.len(),
    }
}

pub const DEFAULT_STEP: f64 = 20.0;
pub const DEFAULT_ANGLE: f64 = 25.0;

/// The turtle start state used by [`render_svg`]: origin, facing up.
pub const ROOT_STATE: TurtleState = TurtleState {
    x: 0.0,
    y: 0.0,
    heading: 90.0,
};

/// Segments drawn for `tree`: one per node, left children turned by `+angle`.
pub fn turtle_segments(tree: &RhythmTree, step: f64, angle: f64) -> TurtleRun {
    interpret(
        &encode_with(tree, EncodeStyle::ExplicitRoot),
        ROOT_STATE,
        step,
        angle,
    )
}

/// Renders `tree` as an SVG 1.1 line drawing.
pub fn render_svg(tree: &RhythmTree, step: f64, angle: f64) -> String {
    assert!(step > 0.0, "step must be positive");
    assert!(angle > 0.0 && angle < 90.0, "angle must lie in (0, 90) degrees");
    let run = turtle_segments(tree, step, angle);

    // SVG y grows downward.
    let pts = run.segments.iter().flat_map(|s| [s.from, s.to]);
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (x, y) in pts {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(-y);
        max_y = max_y.max(-y);
    }
    let margin = step / 2.0;
    let (vx, vy) = (min_x - margin, min_y - margin);
    let (w, h) = (max_x - min_x + 2.0 * margin, max_y - min_y + 2.0 * margin);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        fmt3(vx),
        fmt3(vy),
        fmt3(w),
        fmt3(h),
        fmt3(w),
        fmt3(h)
    );
    let _ = writeln!(
        out,
        r#"<g stroke="black" stroke-width="1" stroke-linecap="round">"#
    );
    for s in &run.segments {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            fmt3(s.from.0),
            fmt3(-s.from.1),
            fmt3(s.to.0),
            fmt3(-s.to.1)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

// fixed precision, with negative zero folded to zero
fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::parse_text;
    use crate::tree::build_tree;

    fn tree_of(src: &str) -> RhythmTree {
        build_tree(&parse_text(src).unwrap()).unwrap()
    }

    fn bs(s: &str) -> BracketedString {
        BracketedString::new(s).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&tree_of("1/2")).as_str(), "F");
        assert_eq!(encode(&tree_of("1/4 1/4")).as_str(), "[-F][+F]");
        assert_eq!(encode(&tree_of("1/4 1/8 1/8")).as_str(), "[-F][+[-F][+F]]");
    }

    #[test]
    fn explicit_root_style() {
        assert_eq!(
            encode_with(&tree_of("1/4 1/4"), EncodeStyle::ExplicitRoot).as_str(),
            "F[+F][-F]"
        );
        assert_eq!(
            encode_with(&tree_of("1/2"), EncodeStyle::ExplicitRoot).as_str(),
            "F"
        );
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse(&bs("F")).unwrap(), Shape::Leaf);
        let one = Shape::Node(Box::new(Shape::Leaf), Box::new(Shape::Leaf));
        assert_eq!(parse(&bs("[-F][+F]")).unwrap(), one);
        assert_eq!(
            parse(&bs("[-F][+[-F][+F]]")).unwrap(),
            Shape::Node(Box::new(Shape::Leaf), Box::new(one))
        );
    }

    #[test]
    fn parse_assigns_halved_durations() {
        let shape = parse(&bs("[-F][+[-F][+F]]")).unwrap();
        let t = shape.with_durations(Duration::new(1, 2).unwrap());
        assert!(t.same_shape(&tree_of("1/4 1/8 1/8")));
        assert_eq!(t, tree_of("1/4 1/8 1/8"));
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            BracketedString::new("[-F"),
            Err(BracketError::Unbalanced { pos: 3 })
        );
        assert_eq!(
            BracketedString::new("F]"),
            Err(BracketError::Unbalanced { pos: 1 })
        );
        assert_eq!(
            BracketedString::new("[-X][+F]"),
            Err(BracketError::StraySymbol { pos: 2, symbol: 'X' })
        );
    }

    #[test]
    fn non_canonical_forms() {
        assert!(matches!(
            parse_str("[+F][-F]"),
            Err(BracketError::NonCanonical { pos: 1, .. })
        ));
        assert!(matches!(
            parse_str("F[+F][-F]"),
            Err(BracketError::NonCanonical { pos: 1, .. })
        ));
        assert!(matches!(
            parse_str("[-F]"),
            Err(BracketError::NonCanonical { pos: 4, .. })
        ));
        assert!(matches!(
            parse_str("[-f][+F]"),
            Err(BracketError::NonCanonical { pos: 2, .. })
        ));
        assert!(matches!(
            parse_str(""),
            Err(BracketError::NonCanonical { pos: 0, .. })
        ));
    }

    #[test]
    fn leaf_renders_one_segment() {
        let run = turtle_segments(&tree_of("1/2"), 10.0, 25.0);
        assert_eq!(run.segments.len(), 1);
        let s = run.segments[0];
        assert!((s.to.1 - 10.0).abs() < 1e-12 && s.to.0.abs() < 1e-12);
    }

    #[test]
    fn one_split_renders_three_segments() {
        let run = turtle_segments(&tree_of("1/4 1/4"), 10.0, 25.0);
        assert_eq!(run.segments.len(), 3);
        let tip = run.segments[0].to;
        // both branches start at the tip of the root segment
        assert_eq!(run.segments[1].from, tip);
        assert_eq!(run.segments[2].from, tip);
        // left branch turned counterclockwise (+25 deg from vertical), right clockwise
        let dir = |s: &Segment| (s.to.1 - s.from.1).atan2(s.to.0 - s.from.0).to_degrees();
        assert!((dir(&run.segments[1]) - 115.0).abs() < 1e-9);
        assert!((dir(&run.segments[2]) - 65.0).abs() < 1e-9);
        assert_eq!(run.final_stack_depth, 0);
        assert_eq!(
            run.final_state,
            TurtleState {
                x: tip.0,
                y: tip.1,
                heading: 90.0
            }
        );
    }

    #[test]
    fn move_without_drawing() {
        let run = interpret(&bs("fF"), ROOT_STATE, 1.0, 30.0);
        assert_eq!(run.segments.len(), 1);
        assert!((run.segments[0].from.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svg_has_one_line_per_node() {
        let t = tree_of("1/4 1/8 1/8");
        let svg = render_svg(&t, DEFAULT_STEP, DEFAULT_ANGLE);
        assert_eq!(svg.matches("<line ").count(), 5);
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg, render_svg(&t, DEFAULT_STEP, DEFAULT_ANGLE));
    }
}

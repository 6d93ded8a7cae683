//! Rhythmic complexity of monophonic scores.
//!
//! A score becomes a binary rhythmic tree by repeatedly halving its span ([`tree`]). Every
//! internal node contributes a rewriting rule ([`rules`]); rules that are isomorphic up to a
//! chosen depth are merged into classes, giving a context-free grammar ([`mod@classify`]). The
//! radius of convergence `R` of that grammar's generating function gives the complexity
//! `K0 = -ln R` ([`entropy`]).

pub mod analysis;
pub mod bracketed;
pub mod classify;
pub mod duration;
pub mod entropy;
pub mod midi;
pub mod rules;
pub mod score;
pub mod tree;

pub use analysis::{analyze_file, analyze_sequence, corpus, AnalysisConfig, AnalysisError, OutputFormat};
pub use bracketed::{encode, parse, render_svg, BracketedString, Shape};
pub use classify::{classify, homomorphic, isomorphic_at, to_grammar, ClassifiedGrammar, Partition};
pub use duration::Duration;
pub use entropy::{
    complexity, eval_fixed_point, radius_of_convergence, ComplexityReport, EvalParams, Evaluation,
};
pub use midi::parse_midi;
pub use rules::{extract_rules, rules_to_productions, RuleSet};
pub use score::{format_text, parse_text, quantize, NoteEvent, NoteKind, RhythmSequence};
pub use tree::{build_tree, leaf_events, pad_to_power_of_two, RhythmTree};

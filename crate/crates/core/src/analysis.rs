//! End-to-end pipeline: ingest, pad, build the tree, extract and classify rules, and measure
//! complexity for each requested isomorphism depth. Also runs whole directories as a corpus.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{classify, to_grammar, ClassifiedGrammar, GrammarError};
use crate::duration::Duration;
use crate::entropy::{complexity, EntropyError, EvalParams};
use crate::midi::{parse_midi_with_grid, MidiError};
use crate::rules::{extract_rules, RuleSet};
use crate::score::{parse_text, quantize_with_report, RhythmSequence, TextError, DEFAULT_GRID};
use crate::tree::{build_tree, pad_to_power_of_two, RhythmTree, TreeError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Text {
        path: PathBuf,
        #[source]
        source: TextError,
    },
    #[error("{path}: {source}")]
    Midi {
        path: PathBuf,
        #[source]
        source: MidiError,
    },
    #[error("{path}: unsupported file type (expected .rtm or .mid)")]
    Extension { path: PathBuf },
    #[error("no .rtm or .mid files in {0}")]
    EmptyCorpus(PathBuf),
    #[error("at least one depth is required")]
    NoDepths,
    #[error("unknown output format `{0}` (expected json, csv or text)")]
    Format(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(AnalysisError::Format(other.to_string())),
        }
    }
}

pub const DEFAULT_DEPTHS: [usize; 4] = [0, 1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    /// Overrides the grid given by a file header (or the sixteenth-note default).
    pub grid: Option<Duration>,
    depths: Vec<usize>,
    pub format: OutputFormat,
    pub params: EvalParams,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid: None,
            depths: DEFAULT_DEPTHS.to_vec(),
            format: OutputFormat::default(),
            params: EvalParams::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn new(
        grid: Option<Duration>,
        depths: Vec<usize>,
        format: OutputFormat,
        params: EvalParams,
    ) -> Result<Self, AnalysisError> {
        let mut cfg = Self {
            grid,
            depths: Vec::new(),
            format,
            params,
        };
        cfg.set_depths(depths)?;
        params.validate()?;
        Ok(cfg)
    }

    /// Replaces the depth list, sorted ascending without duplicates.
    pub fn set_depths(&mut self, mut depths: Vec<usize>) -> Result<(), AnalysisError> {
        if depths.is_empty() {
            return Err(AnalysisError::NoDepths);
        }
        depths.sort_unstable();
        depths.dedup();
        self.depths = depths;
        Ok(())
    }

    pub fn depths(&self) -> &[usize] {
        &self.depths
    }
}

/// Tree and rules for one score, ready for classification at any depth.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sequence: RhythmSequence,
    pub tree: RhythmTree,
    pub rules: RuleSet,
    pub pad_units: u64,
    pub quantization_error: Duration,
    pub dropped_rests: usize,
    pub promoted: usize,
}

/// Quantizes to `grid` (or the sequence's own grid), pads and builds the tree.
pub fn prepare(seq: &RhythmSequence, grid: Option<Duration>) -> Result<Prepared, AnalysisError> {
    let grid = grid.unwrap_or(seq.grid);
    let q = quantize_with_report(seq, grid);
    if q.sequence.is_empty() {
        return Err(TreeError::Empty.into());
    }
    let (padded, pad_units) = pad_to_power_of_two(&q.sequence)?;
    let tree = build_tree(&padded)?;
    let rules = extract_rules(&tree);
    Ok(Prepared {
        sequence: padded,
        tree,
        rules,
        pad_units,
        quantization_error: q.abs_error,
        dropped_rests: q.dropped_rests,
        promoted: q.promoted,
    })
}

impl Prepared {
    pub fn grammar_at(&self, depth: usize) -> Result<ClassifiedGrammar, AnalysisError> {
        Ok(to_grammar(&self.rules, &classify(&self.rules, depth))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthReport {
    pub depth: usize,
    pub classes: usize,
    pub rules: usize,
    pub radius: f64,
    pub k0: f64,
    pub converged_everywhere: bool,
    pub probes: usize,
    pub inconclusive_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreAnalysis {
    pub source: String,
    pub grid: Duration,
    pub events: usize,
    pub pad_units: u64,
    pub quantization_error: Duration,
    pub dropped_rests: usize,
    pub promoted_notes: usize,
    pub leaves: usize,
    pub internal_nodes: usize,
    pub tree_height: usize,
    pub reports: Vec<DepthReport>,
}

pub fn analyze_sequence(
    source: &str,
    seq: &RhythmSequence,
    config: &AnalysisConfig,
) -> Result<ScoreAnalysis, AnalysisError> {
    let prepared = prepare(seq, config.grid)?;
    let mut reports = Vec::with_capacity(config.depths.len());
    for &depth in &config.depths {
        let grammar = prepared.grammar_at(depth)?;
        let c = complexity(&grammar, &config.params)?;
        reports.push(DepthReport {
            depth,
            classes: grammar.n,
            rules: prepared.rules.len(),
            radius: c.radius,
            k0: c.k0,
            converged_everywhere: c.converged_everywhere,
            probes: c.probes,
            inconclusive_probes: c.inconclusive_probes,
        });
    }
    Ok(ScoreAnalysis {
        source: source.to_string(),
        grid: prepared.sequence.grid,
        events: prepared.sequence.events.len(),
        pad_units: prepared.pad_units,
        quantization_error: prepared.quantization_error,
        dropped_rests: prepared.dropped_rests,
        promoted_notes: prepared.promoted,
        leaves: prepared.rules.null_count,
        internal_nodes: prepared.rules.len(),
        tree_height: prepared.tree.height(),
        reports,
    })
}

fn is_ingestible(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("rtm" | "mid" | "midi")
    )
}

/// Reads a `.rtm` or `.mid` file. MIDI input is quantized to `grid` (default a sixteenth) on
/// load; text input keeps its own header grid.
pub fn load_score(path: &Path, grid: Option<Duration>) -> Result<RhythmSequence, AnalysisError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let io = |source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    };
    match ext.as_deref() {
        Some("rtm") => {
            let text = std::fs::read_to_string(path).map_err(io)?;
            parse_text(&text).map_err(|source| AnalysisError::Text {
                path: path.to_path_buf(),
                source,
            })
        }
        Some("mid" | "midi") => {
            let bytes = std::fs::read(path).map_err(io)?;
            parse_midi_with_grid(&bytes, grid.unwrap_or(DEFAULT_GRID)).map_err(|source| AnalysisError::Midi {
                path: path.to_path_buf(),
                source,
            })
        }
        _ => Err(AnalysisError::Extension {
            path: path.to_path_buf(),
        }),
    }
}

pub fn analyze_file(path: &Path, config: &AnalysisConfig) -> Result<ScoreAnalysis, AnalysisError> {
    let seq = load_score(path, config.grid)?;
    analyze_sequence(&path.display().to_string(), &seq, config)
}

impl ScoreAnalysis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: {} events on grid {}, {} leaves, {} internal nodes, height {}, padded {} units",
            self.source,
            self.events,
            self.grid,
            self.leaves,
            self.internal_nodes,
            self.tree_height,
            self.pad_units
        );
        for r in &self.reports {
            let _ = writeln!(
                out,
                "depth {}: {} classes, R = {:.6}, K0 = {:.6}{}",
                r.depth,
                r.classes,
                r.radius,
                r.k0,
                if r.converged_everywhere {
                    " (converges on (0,1))"
                } else {
                    ""
                }
            );
        }
        out
    }

    /// Corpus-style rows for this score.
    pub fn rows(&self, file: &str) -> Vec<CorpusRow> {
        self.reports
            .iter()
            .map(|r| CorpusRow {
                file: file.to_string(),
                depth: Some(r.depth),
                classes: Some(r.classes),
                rules: Some(r.rules),
                radius: Some(r.radius),
                k0: Some(r.k0),
                pad_units: Some(self.pad_units),
                inconclusive_probes: Some(r.inconclusive_probes),
                error: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRow {
    pub file: String,
    pub depth: Option<usize>,
    pub classes: Option<usize>,
    pub rules: Option<usize>,
    pub radius: Option<f64>,
    pub k0: Option<f64>,
    pub pad_units: Option<u64>,
    pub inconclusive_probes: Option<usize>,
    pub error: Option<String>,
}

pub const CSV_HEADER: [&str; 9] = [
    "file",
    "depth",
    "classes",
    "rules",
    "radius",
    "k0",
    "pad_units",
    "inconclusive_probes",
    "error",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CorpusResult {
    pub rows: Vec<CorpusRow>,
}

impl CorpusResult {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.file.clone(),
                opt(r.depth.map(|v| v.to_string())),
                opt(r.classes.map(|v| v.to_string())),
                opt(r.rules.map(|v| v.to_string())),
                opt(r.radius.map(|v| format!("{v:.9}"))),
                opt(r.k0.map(|v| format!("{v:.9}"))),
                opt(r.pad_units.map(|v| v.to_string())),
                opt(r.inconclusive_probes.map(|v| v.to_string())),
                opt(r.error.clone()),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}

/// Analyzes every `.rtm`/`.mid` file directly inside `dir` at every configured depth.
///
/// Rows are ordered by file name, then depth. A file that fails becomes a single error row.
pub fn corpus(dir: &Path, config: &AnalysisConfig) -> Result<CorpusResult, AnalysisError> {
    let entries = std::fs::read_dir(dir).map_err(|source| AnalysisError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_ingestible(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AnalysisError::EmptyCorpus(dir.to_path_buf()));
    }

    let per_file: Vec<Vec<CorpusRow>> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            match analyze_file(path, config) {
                Ok(a) => a.rows(&name),
                Err(e) => vec![CorpusRow {
                    file: name,
                    depth: None,
                    classes: None,
                    rules: None,
                    radius: None,
                    k0: None,
                    pad_units: None,
                    inconclusive_probes: None,
                    error: Some(e.to_string()),
                }],
            }
        })
        .collect();
    Ok(CorpusResult {
        rows: per_file.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sorts_depths() {
        let cfg =
            AnalysisConfig::new(None, vec![3, 1, 1, 0], OutputFormat::Csv, EvalParams::default()).unwrap();
        assert_eq!(cfg.depths(), &[0, 1, 3]);
        assert!(matches!(
            AnalysisConfig::new(None, vec![], OutputFormat::Json, EvalParams::default()),
            Err(AnalysisError::NoDepths)
        ));
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn trivial_score() {
        let seq = parse_text("1/2").unwrap();
        let a = analyze_sequence("t", &seq, &AnalysisConfig::default()).unwrap();
        assert_eq!(a.leaves, 1);
        assert_eq!(a.internal_nodes, 0);
        assert!(a.reports.iter().all(|r| r.k0 == 0.0 && r.classes == 1));
    }

    #[test]
    fn pads_ragged_totals() {
        // 5 sixteenths -> padded to 8
        let seq = parse_text("1/4 1/16").unwrap();
        let a = analyze_sequence("t", &seq, &AnalysisConfig::default()).unwrap();
        assert_eq!(a.pad_units, 3);
        assert_eq!(a.events, 3);
    }

    #[test]
    fn grid_override_requantizes() {
        let seq = parse_text("grid=1/32\n3/32 5/32").unwrap();
        let cfg = AnalysisConfig {
            grid: Some(Duration::new(1, 16).unwrap()),
            ..AnalysisConfig::default()
        };
        let a = analyze_sequence("t", &seq, &cfg).unwrap();
        assert_eq!(a.grid, Duration::new(1, 16).unwrap());
        assert_eq!(a.quantization_error, Duration::new(2, 32).unwrap());
    }

    #[test]
    fn csv_error_rows() {
        let r = CorpusResult {
            rows: vec![CorpusRow {
                file: "bad.rtm".into(),
                depth: None,
                classes: None,
                rules: None,
                radius: None,
                k0: None,
                pad_units: None,
                inconclusive_probes: None,
                error: Some("line 1, column 1: malformed token `x`".into()),
            }],
        };
        assert!(r.has_errors());
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("file,depth,classes,rules,radius,k0,pad_units,inconclusive_probes,error")
        );
        assert_eq!(
            lines.next(),
            Some("bad.rtm,,,,,,,,\"line 1, column 1: malformed token `x`\"")
        );
    }
}

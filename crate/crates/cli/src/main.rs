use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rhythmc_core::analysis::{self, prepare, AnalysisConfig, CorpusResult, OutputFormat};
use rhythmc_core::bracketed::{encode, render_svg, DEFAULT_ANGLE, DEFAULT_STEP};
use rhythmc_core::entropy::EvalParams;
use rhythmc_core::rules::rules_to_productions;
use rhythmc_core::Duration;

const MMAX_VAR: &str = "RHYTHMC_EVAL_MMAX";

#[derive(Parser)]
#[command(
    name = "rhythmc",
    version,
    about = "Rhythmic tree complexity of monophonic scores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Quantization grid as a fraction of a whole note (default: file header, else 1/16).
    #[arg(long, value_name = "p/q")]
    grid: Option<Duration>,
}

#[derive(Subcommand)]
enum Command {
    /// Complexity report for one score at each depth.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        depths: Vec<usize>,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        format: OutputFormat,
    },
    /// Analyze every .rtm/.mid file in a directory and emit CSV.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        depths: Vec<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the bracketed string of a score's rhythmic tree.
    Tree {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write a turtle rendering as SVG.
        #[arg(long, value_name = "out.svg")]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Branch angle in degrees, strictly between 0 and 90.
        #[arg(long, default_value_t = DEFAULT_ANGLE)]
        angle: f64,
    },
    /// List rewriting rules and the classified grammar at one depth.
    Rules {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: usize,
        /// Print the grammar as JSON instead of the tables.
        #[arg(long)]
        json: bool,
    },
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: analysis::AnalysisError| e.to_string())
}

fn eval_params() -> Result<EvalParams> {
    let mut params = EvalParams::default();
    if let Ok(raw) = std::env::var(MMAX_VAR) {
        params.m_max = raw
            .trim()
            .parse()
            .with_context(|| format!("{MMAX_VAR}={raw:?} is not a non-negative integer"))?;
    }
    params.validate()?;
    Ok(params)
}

fn config(grid: Option<Duration>, depths: Vec<usize>, format: OutputFormat) -> Result<AnalysisConfig> {
    Ok(AnalysisConfig::new(grid, depths, format, eval_params()?)?)
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analyze {
            file,
            common,
            depths,
            format,
        } => {
            let cfg = config(common.grid, depths, format)?;
            let report = analysis::analyze_file(&file, &cfg)?;
            match cfg.format {
                OutputFormat::Json => println!("{}", report.to_json()),
                OutputFormat::Text => print!("{}", report.to_text()),
                OutputFormat::Csv => {
                    let rows = CorpusResult {
                        rows: report.rows(&file.display().to_string()),
                    };
                    print!("{}", rows.to_csv());
                }
            }
            Ok(true)
        }
        Command::Corpus {
            dir,
            common,
            depths,
            out,
        } => {
            let cfg = config(common.grid, depths, OutputFormat::Csv)?;
            let result = analysis::corpus(&dir, &cfg)?;
            let csv = result.to_csv();
            match out {
                Some(path) => write_output(&path, &csv)?,
                None => print!("{csv}"),
            }
            for row in result.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("error: {}", row.error.as_deref().unwrap_or_default());
            }
            Ok(!result.has_errors())
        }
        Command::Tree {
            file,
            common,
            svg,
            step,
            angle,
        } => {
            if !(step > 0.0 && step.is_finite()) {
                bail!("--step must be positive");
            }
            if !(angle > 0.0 && angle < 90.0) {
                bail!("--angle must lie strictly between 0 and 90 degrees");
            }
            let seq = analysis::load_score(&file, common.grid)?;
            let prepared = prepare(&seq, common.grid)?;
            println!("{}", encode(&prepared.tree));
            if let Some(path) = svg {
                write_output(&path, &render_svg(&prepared.tree, step, angle))?;
            }
            Ok(true)
        }
        Command::Rules {
            file,
            common,
            depth,
            json,
        } => {
            let seq = analysis::load_score(&file, common.grid)?;
            let prepared = prepare(&seq, common.grid)?;
            let grammar = prepared.grammar_at(depth)?;
            if json {
                println!("{}", grammar.to_json());
                return Ok(true);
            }
            println!(
                "rules ({} internal, {} leaves)",
                prepared.rules.len(),
                prepared.rules.null_count
            );
            for line in rules_to_productions(&prepared.rules) {
                println!("  {line}");
            }
            println!("  ({}) Other → null", prepared.rules.null_count);
            let sizes: Vec<String> = grammar.classes.iter().map(|c| c.size.to_string()).collect();
            println!(
                "classes at depth {depth} ({}), sizes {}",
                grammar.n,
                sizes.join(", ")
            );
            for line in grammar.table_lines() {
                println!("  {line}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

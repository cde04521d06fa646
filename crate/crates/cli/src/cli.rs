use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use onoma::dataset::{
    audit_with_llm, compute_stats, gender_conflicts, load_records, merge_and_dedupe, AuditConfig, AuditError, Format,
    LoadOptions, NameRecord,
};
use onoma::normalize::{detect_script, normalize_for, Script};
use onoma::{GenderEstimate, NameIndex};
use serde::Serialize;

use crate::config::{AppConfig, Overrides};
use crate::services::{build_llm, is_index_file, Services};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "onoma", version, about = "Persian name normalization, gender inference and username suggestion")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScriptArg {
    Auto,
    Persian,
    Latin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a name
    Normalize {
        text: String,
        #[arg(long, value_enum, default_value_t = ScriptArg::Auto)]
        script: ScriptArg,
    },
    /// Merge and deduplicate datasets into one file (.csv, .tsv, .jsonl or a .onix index)
    Compile {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Dataset statistics
    Stats {
        /// Dataset file; defaults to the configured dataset
        dataset: Option<PathBuf>,
        /// Characters listed per gender and script
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Ask the llm to flag suspicious records
    Audit {
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        batch_size: usize,
    },
    /// Estimate gender from a name and optional images
    Gender {
        name: String,
        /// Image references passed to the image scorer
        #[arg(long, num_args = 1..)]
        images: Vec<String>,
    },
    /// Suggest usernames for a name
    Suggest {
        name: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        birth_year: Option<u32>,
    },
    /// Run the HTTP service
    Serve,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(out: &mut dyn Write, format: OutputFormat, value: &T, text: impl FnOnce() -> String) -> Outcome {
    match format {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(value)?)?,
        OutputFormat::Text => writeln!(out, "{}", text().trim_end())?,
    }
    Ok(())
}

fn load_dataset(path: Option<&Path>, cfg: &AppConfig) -> Result<Vec<NameRecord>, Failure> {
    let path = path.or(cfg.dataset_path.as_deref());
    match path {
        None => Ok(onoma::dataset::bundled_sample()),
        Some(p) if is_index_file(p) => Ok(crate::services::load_index(Some(p))?.records().to_vec()),
        Some(p) => {
            let loaded = load_records(p, Format::from_path(p), &LoadOptions::default())?;
            for row in &loaded.rejected {
                tracing::warn!(line = row.line, reason = %row.reason, "rejected row");
            }
            Ok(loaded.records)
        }
    }
}

fn write_records(path: &Path, records: Vec<NameRecord>) -> Outcome {
    if is_index_file(path) {
        let index = NameIndex::build(records)?;
        let mut w = BufWriter::new(File::create(path)?);
        index.save(&mut w)?;
        w.flush()?;
        return Ok(());
    }
    let format = Format::from_path(path);
    let mut w = BufWriter::new(File::create(path)?);
    if format == Format::Jsonl {
        for r in &records {
            writeln!(w, "{}", serde_json::to_string(r)?)?;
        }
    } else {
        let delim = if format == Format::Tsv { b'\t' } else { b',' };
        let mut csv = csv::WriterBuilder::new().delimiter(delim).from_writer(&mut w);
        csv.write_record(["persian", "latin", "gender"])?;
        for r in &records {
            csv.write_record([r.persian().as_str(), r.latin().as_str(), r.gender().as_str()])?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

fn gender_line(est: &GenderEstimate) -> String {
    let mut line = format!("{} {:.2}", est.gender.as_str(), est.probability);
    if est.low_confidence {
        line.push_str(" (low confidence)");
    }
    if est.degraded {
        line.push_str(" (degraded)");
    }
    line
}

#[derive(Serialize)]
struct NormalizeOutput<'a> {
    input: &'a str,
    script: Script,
    normalized: String,
}

#[derive(Serialize)]
struct CompileOutput {
    inputs: usize,
    records: usize,
    rejected: usize,
    gender_conflicts: usize,
    output: PathBuf,
}

fn run_command(cli: Cli, cfg: AppConfig, out: &mut dyn Write) -> Outcome {
    let format = cli.format;
    match cli.command {
        Command::Normalize { text, script } => {
            let script = match script {
                ScriptArg::Auto => detect_script(&text),
                ScriptArg::Persian => Script::Persian,
                ScriptArg::Latin => Script::Latin,
            };
            let normalized = normalize_for(script, &text).into_string();
            let doc = NormalizeOutput {
                input: &text,
                script,
                normalized: normalized.clone(),
            };
            emit(out, format, &doc, || normalized)
        }
        Command::Compile { inputs, output } => {
            let mut collections = Vec::new();
            let mut rejected = 0;
            for path in &inputs {
                let loaded = load_records(path, Format::from_path(path), &LoadOptions::default())?;
                rejected += loaded.rejected.len();
                collections.push(loaded.records);
            }
            let merged = merge_and_dedupe(collections);
            let doc = CompileOutput {
                inputs: inputs.len(),
                records: merged.len(),
                rejected,
                gender_conflicts: gender_conflicts(&merged).len(),
                output: output.clone(),
            };
            write_records(&output, merged)?;
            emit(out, format, &doc, || {
                format!(
                    "{} records from {} inputs ({} rejected rows, {} gender conflicts) -> {}",
                    doc.records,
                    doc.inputs,
                    doc.rejected,
                    doc.gender_conflicts,
                    doc.output.display()
                )
            })
        }
        Command::Stats { dataset, top } => {
            let records = load_dataset(dataset.as_deref(), &cfg)?;
            let stats = compute_stats(&records)?;
            emit(out, format, &stats, || stats.render_text(top))
        }
        Command::Audit { dataset, batch_size } => {
            let records = load_dataset(dataset.as_deref(), &cfg)?;
            let llm = build_llm(&cfg);
            let audit_cfg = AuditConfig {
                batch_size,
                ..Default::default()
            };
            let report = match audit_with_llm(&records, &*llm, &audit_cfg) {
                Ok(r) => r,
                Err(AuditError::LlmUnavailable { reason, partial }) => {
                    emit(out, format, &partial, String::new)?;
                    return Err(Failure(format!("llm unavailable: {reason}")));
                }
                Err(e) => return Err(e.into()),
            };
            emit(out, format, &report, || {
                let mut s = String::new();
                for f in &report.flags {
                    s.push_str(&format!(
                        "{} | {} | {}: {}\n",
                        f.record.persian(),
                        f.record.latin(),
                        f.record.gender().as_str(),
                        f.reason
                    ));
                }
                s.push_str(&format!(
                    "{} flagged, {}/{} batches audited",
                    report.flags.len(),
                    report.batches_done,
                    report.batches_total
                ));
                s
            })
        }
        Command::Gender { name, images } => {
            let svc = Services::build(cfg)?;
            let est = svc.gender(&name, &images)?;
            emit(out, format, &est, || gender_line(&est))
        }
        Command::Suggest { name, k, birth_year } => {
            let svc = Services::build(cfg)?;
            let suggestions = svc.usernames(&name, birth_year, k, None)?;
            for w in &suggestions.warnings {
                tracing::warn!("{w}");
            }
            emit(out, format, &suggestions, || {
                suggestions
                    .candidates
                    .iter()
                    .map(|c| format!("{}\t{:.3}\n", c.value(), c.final_score()))
                    .collect()
            })
        }
        Command::Serve => {
            let addr = format!("{}:{}", cfg.server.bind, cfg.server.port);
            let svc = Services::build(cfg)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                crate::server::serve(listener, svc).await
            })?;
            Ok(())
        }
    }
}

pub fn init_logging(level: &str) {
    let filter = tracing_subscriber::EnvFilter::try_from_env("ONOMA_LOG_FILTER")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Parses `argv` and runs it. Returns 0 on success, 1 on a domain error and
/// 2 on a usage error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    let cfg = match AppConfig::resolve(&cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    init_logging(&cfg.log_level);
    match run_command(cli, cfg, out) {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

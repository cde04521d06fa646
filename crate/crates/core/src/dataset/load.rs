use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Gender, NameRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Tsv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("tsv") | Some("tab") => Format::Tsv,
            Some("jsonl") | Some("ndjson") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "tsv" => Ok(Format::Tsv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// Accepted column names for each field, matched case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnNames {
    pub persian: Vec<String>,
    pub latin: Vec<String>,
    pub gender: Vec<String>,
}

impl Default for ColumnNames {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            persian: v(&["persian", "persian_name", "persian_names", "name_fa", "fa", "name"]),
            latin: v(&[
                "latin",
                "english",
                "english_name",
                "english_names",
                "transliteration",
                "name_en",
                "en",
            ]),
            gender: v(&["gender", "sex", "label"]),
        }
    }
}

impl ColumnNames {
    fn position(aliases: &[String], header: &[String]) -> Option<usize> {
        aliases
            .iter()
            .find_map(|a| header.iter().position(|h| h.eq_ignore_ascii_case(a)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub columns: ColumnNames,
    /// Fail on the first bad row instead of collecting it.
    pub strict: bool,
}

impl LoadOptions {
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub records: Vec<NameRecord>,
    pub rejected: Vec<RowError>,
}

pub fn load_records(path: &Path, format: Format, opts: &LoadOptions) -> Result<Loaded, DatasetError> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::FileNotFound(path.display().to_string()),
        _ => DatasetError::Io(e),
    })?;
    parse_records(file, format, opts)
}

pub fn parse_records<R: Read>(mut reader: R, format: Format, opts: &LoadOptions) -> Result<Loaded, DatasetError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| DatasetError::Encoding {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
    })?;
    let text = text.strip_prefix('\u{FEFF}').unwrap_or(text);

    let rows = match format {
        Format::Csv => delimited_rows(text, b',', &opts.columns)?,
        Format::Tsv => delimited_rows(text, b'\t', &opts.columns)?,
        Format::Jsonl => jsonl_rows(text, &opts.columns),
    };

    let mut loaded = Loaded::default();
    for (line, row) in rows {
        match row.and_then(|(p, l, g)| build_record(&p, &l, &g)) {
            Ok(record) => loaded.records.push(record),
            Err(reason) if opts.strict => return Err(DatasetError::Parse { line, reason }),
            Err(reason) => {
                tracing::warn!(line, %reason, "rejected row");
                loaded.rejected.push(RowError { line, reason });
            }
        }
    }
    Ok(loaded)
}

type RawRow = Result<(String, String, String), String>;

fn build_record(persian: &str, latin: &str, gender: &str) -> Result<NameRecord, String> {
    if gender.trim().is_empty() {
        return Err("empty gender".into());
    }
    let gender = gender.parse::<Gender>().map_err(|e| e.to_string())?;
    NameRecord::new(persian, latin, gender).map_err(|e| e.to_string())
}

fn delimited_rows(text: &str, delimiter: u8, columns: &ColumnNames) -> Result<Vec<(usize, RawRow)>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());

    let mut out = Vec::new();
    let mut positions: Option<[usize; 3]> = None;
    for (idx, result) in rdr.records().enumerate() {
        let record = result.map_err(|e| DatasetError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        if idx == 0 {
            if let Some(header) = header_positions(&fields, columns) {
                positions = Some(header);
                continue;
            }
        }
        let [pi, li, gi] = positions.unwrap_or([0, 1, 2]);
        let get = |i: usize, name: &str| {
            fields
                .get(i)
                .cloned()
                .ok_or_else(|| format!("missing {name} column"))
        };
        let row = (|| Ok((get(pi, "persian")?, get(li, "transliteration")?, get(gi, "gender")?)))();
        out.push((line, row));
    }
    Ok(out)
}

fn header_positions(fields: &[String], columns: &ColumnNames) -> Option<[usize; 3]> {
    let p = ColumnNames::position(&columns.persian, fields)?;
    let l = ColumnNames::position(&columns.latin, fields)?;
    let g = ColumnNames::position(&columns.gender, fields)?;
    Some([p, l, g])
}

fn jsonl_rows(text: &str, columns: &ColumnNames) -> Vec<(usize, RawRow)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| (idx + 1, jsonl_row(l, columns)))
        .collect()
}

fn jsonl_row(line: &str, columns: &ColumnNames) -> RawRow {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    let field = |aliases: &[String], name: &str| -> Result<String, String> {
        let v = aliases
            .iter()
            .find_map(|a| obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(a)).map(|(_, v)| v))
            .ok_or_else(|| format!("missing {name} field"))?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("{name} field is not a string"))
    };
    Ok((
        field(&columns.persian, "persian")?,
        field(&columns.latin, "transliteration")?,
        field(&columns.gender, "gender")?,
    ))
}

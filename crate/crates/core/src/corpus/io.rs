//! Input formats.
//!
//! JSON lines, one object per line:
//!
//! ```text
//! {"id":"p1","year":2001,"field":"physics","pub_type":"article",
//!  "authors":["J.Smith","A.Doe"],"references":["p0"],"venue":"PRL"}
//! ```
//!
//! `field`, `pub_type`, `authors`, `references`, `venue` and `team_size` are
//! optional; a missing `pub_type` reads as `article`, a missing field as
//! `unknown`.
//!
//! TSV: a header line `id year field pub_type authors references [venue]`
//! (tab separated), then one paper per line with `;`-separated lists.
//! Blank lines and lines starting with `#` are ignored in both formats.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{Author, Corpus, IngestConfig, PaperRecord, PubType, UNKNOWN_FIELD};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Jsonl,
    Tsv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(Error::InvalidArgument(format!("unknown input format `{other}`"))),
        }
    }
}

impl InputFormat {
    /// Guesses from the file extension, defaulting to JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => InputFormat::Tsv,
            _ => InputFormat::Jsonl,
        }
    }
}

#[derive(Deserialize, Serialize)]
struct JsonRecord {
    id: String,
    year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub_type: Option<String>,
    #[serde(default)]
    authors: Vec<String>,
    #[serde(default)]
    references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    team_size: Option<u32>,
}

fn parse_authors<'a>(items: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<Author>> {
    items
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            Author::parse(s).ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed author `{s}` (expected Initial.LastName)"),
            })
        })
        .collect()
}

fn normalize_field(f: Option<String>) -> String {
    match f {
        Some(f) if !f.trim().is_empty() => f.trim().to_string(),
        _ => UNKNOWN_FIELD.to_string(),
    }
}

fn parse_json_line(text: &str, line: usize) -> Result<PaperRecord> {
    let raw: JsonRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    if raw.id.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty id".into(),
        });
    }
    Ok(PaperRecord {
        id: raw.id,
        year: raw.year,
        field: normalize_field(raw.field),
        venue: raw.venue.filter(|v| !v.is_empty()),
        pub_type: raw.pub_type.as_deref().map(PubType::parse).unwrap_or(PubType::Article),
        authors: parse_authors(raw.authors.iter().map(String::as_str), line)?,
        team_size: raw.team_size,
        references: raw.references,
    })
}

const TSV_COLUMNS: [&str; 6] = ["id", "year", "field", "pub_type", "authors", "references"];

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_tsv_line(text: &str, line: usize, has_venue: bool) -> Result<PaperRecord> {
    let cols: Vec<&str> = text.split('\t').collect();
    let want = if has_venue { 7 } else { 6 };
    if cols.len() != want {
        return Err(Error::Parse {
            line,
            message: format!("expected {want} tab-separated columns, found {}", cols.len()),
        });
    }
    let id = cols[0].trim();
    if id.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty id".into(),
        });
    }
    let year = cols[1].trim().parse::<i32>().map_err(|e| Error::Parse {
        line,
        message: format!("bad year `{}`: {e}", cols[1]),
    })?;
    let pub_type = if cols[3].trim().is_empty() {
        PubType::Article
    } else {
        PubType::parse(cols[3])
    };
    Ok(PaperRecord {
        id: id.to_string(),
        year,
        field: normalize_field(Some(cols[2].to_string())),
        venue: has_venue
            .then(|| cols[6].trim().to_string())
            .filter(|v| !v.is_empty()),
        pub_type,
        authors: parse_authors(split_list(cols[4]), line)?,
        team_size: None,
        references: split_list(cols[5]).map(str::to_string).collect(),
    })
}

/// Reads every record, rejecting malformed lines and duplicate ids with the
/// offending line number.
pub fn read_records(reader: impl BufRead, format: InputFormat) -> Result<Vec<PaperRecord>> {
    let mut out = Vec::new();
    let mut seen: FxHashMap<String, usize> = FxHashMap::default();
    let mut tsv_venue: Option<bool> = None;
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let trimmed = text.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec = match format {
            InputFormat::Jsonl => parse_json_line(trimmed, line)?,
            InputFormat::Tsv => match tsv_venue {
                None => {
                    let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
                    let base_ok = cols.len() >= 6 && cols[..6] == TSV_COLUMNS;
                    let venue_ok = cols.len() == 6 || (cols.len() == 7 && cols[6] == "venue");
                    if !(base_ok && venue_ok) {
                        return Err(Error::Parse {
                            line,
                            message: format!("expected TSV header `{}[\tvenue]`", TSV_COLUMNS.join("\t")),
                        });
                    }
                    tsv_venue = Some(cols.len() == 7);
                    continue;
                }
                Some(has_venue) => parse_tsv_line(trimmed, line, has_venue)?,
            },
        };
        if seen.insert(rec.id.clone(), line).is_some() {
            return Err(Error::DuplicateId { id: rec.id, line });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path, config: &IngestConfig) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_records(BufReader::new(file), config.format)?;
    Corpus::from_records(records, config)
}

/// Writes records in the given input format.
pub fn write_records<'a>(
    records: impl IntoIterator<Item = &'a PaperRecord>,
    mut w: impl Write,
    format: InputFormat,
) -> std::io::Result<()> {
    match format {
        InputFormat::Jsonl => {
            for p in records {
                let raw = JsonRecord {
                    id: p.id.clone(),
                    year: p.year,
                    field: Some(p.field.clone()),
                    pub_type: Some(p.pub_type.as_str().to_string()),
                    authors: p.authors.iter().map(ToString::to_string).collect(),
                    references: p.references.clone(),
                    venue: p.venue.clone(),
                    team_size: if p.authors.is_empty() { p.team_size } else { None },
                };
                serde_json::to_writer(&mut w, &raw)?;
                w.write_all(b"\n")?;
            }
        }
        InputFormat::Tsv => {
            writeln!(w, "{}\tvenue", TSV_COLUMNS.join("\t"))?;
            for p in records {
                let authors: Vec<String> = p.authors.iter().map(ToString::to_string).collect();
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    p.id,
                    p.year,
                    p.field,
                    p.pub_type.as_str(),
                    authors.join(";"),
                    p.references.join(";"),
                    p.venue.as_deref().unwrap_or("")
                )?;
            }
        }
    }
    w.flush()
}

//! File formats: tab-delimited tagging data, problem-spec configuration
//! files, and precomputed signature files.
//!
//! Data files are UTF-8 TSV. The header names the columns: user
//! attributes are prefixed `u:`, item attributes `i:`, and a single
//! `tags` column holds the tag strings joined by `|`. Example header:
//! `u:gender<TAB>u:age<TAB>i:genre<TAB>tags`.

use std::path::Path;

use crate::error::{Result, TagdmError};
use crate::model::{Dataset, RawRow};
use crate::problem::ProblemSpec;
use crate::signature::TagSignature;

/// Column layout parsed from a data-file header.
#[derive(Debug, Clone)]
struct Header {
    user_attrs: Vec<String>,
    item_attrs: Vec<String>,
    /// For each column: destination (user idx / item idx / tags).
    columns: Vec<ColumnKind>,
}

#[derive(Debug, Clone, Copy)]
enum ColumnKind {
    User(usize),
    Item(usize),
    Tags,
}

fn parse_header(fields: &[&str]) -> Result<Header> {
    let mut user_attrs = Vec::new();
    let mut item_attrs = Vec::new();
    let mut columns = Vec::with_capacity(fields.len());
    let mut tags_seen = false;
    for field in fields {
        if let Some(name) = field.strip_prefix("u:") {
            columns.push(ColumnKind::User(user_attrs.len()));
            user_attrs.push(name.to_string());
        } else if let Some(name) = field.strip_prefix("i:") {
            columns.push(ColumnKind::Item(item_attrs.len()));
            item_attrs.push(name.to_string());
        } else if *field == "tags" {
            if tags_seen {
                return Err(TagdmError::Parse {
                    line: 1,
                    msg: "duplicate tags column".into(),
                });
            }
            tags_seen = true;
            columns.push(ColumnKind::Tags);
        } else {
            return Err(TagdmError::Parse {
                line: 1,
                msg: format!("unknown column {field:?} (expected u:*, i:*, or tags)"),
            });
        }
    }
    if !tags_seen {
        return Err(TagdmError::Parse {
            line: 1,
            msg: "missing tags column".into(),
        });
    }
    Ok(Header {
        user_attrs,
        item_attrs,
        columns,
    })
}

/// Parse a data file into attribute names and raw rows, before any
/// interning. Useful when rows are filtered or sampled prior to building
/// the tuple store.
pub fn read_rows<R: std::io::Read>(reader: R) -> Result<(Vec<String>, Vec<String>, Vec<RawRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .from_reader(reader);
    let header_fields = rdr
        .headers()
        .map_err(|e| TagdmError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let header = parse_header(&header_fields.iter().collect::<Vec<_>>())?;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| TagdmError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if record.len() != header.columns.len() {
            return Err(TagdmError::Parse {
                line,
                msg: format!(
                    "expected {} fields, got {}",
                    header.columns.len(),
                    record.len()
                ),
            });
        }
        let mut row = RawRow {
            user_values: vec![String::new(); header.user_attrs.len()],
            item_values: vec![String::new(); header.item_attrs.len()],
            tags: Vec::new(),
        };
        for (kind, value) in header.columns.iter().zip(record.iter()) {
            match kind {
                ColumnKind::User(a) => row.user_values[*a] = value.to_string(),
                ColumnKind::Item(a) => row.item_values[*a] = value.to_string(),
                ColumnKind::Tags => {
                    row.tags = value.split('|').map(str::to_string).collect();
                }
            }
        }
        rows.push(row);
    }
    Ok((header.user_attrs, header.item_attrs, rows))
}

/// Parse a data file from any reader.
pub fn read_dataset<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let (user_attrs, item_attrs, rows) = read_rows(reader)?;
    Dataset::from_raw(user_attrs, item_attrs, rows)
}

/// Load a data file from disk.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}

/// Load a data file as raw rows.
pub fn load_rows(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<RawRow>)> {
    let file = std::fs::File::open(path)?;
    read_rows(std::io::BufReader::new(file))
}

/// Write rows as a data file (header first, tags joined by `|`).
pub fn write_dataset<W: std::io::Write>(
    mut w: W,
    user_attrs: &[String],
    item_attrs: &[String],
    rows: &[RawRow],
) -> Result<()> {
    let mut header: Vec<String> = Vec::new();
    header.extend(user_attrs.iter().map(|a| format!("u:{a}")));
    header.extend(item_attrs.iter().map(|a| format!("i:{a}")));
    header.push("tags".into());
    writeln!(w, "{}", header.join("\t"))?;
    for row in rows {
        let mut fields: Vec<String> = Vec::new();
        fields.extend(row.user_values.iter().cloned());
        fields.extend(row.item_values.iter().cloned());
        fields.push(row.tags.join("|"));
        writeln!(w, "{}", fields.join("\t"))?;
    }
    Ok(())
}

/// Load a problem spec from a TOML configuration file.
pub fn load_problem_spec(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_problem_spec(&text)
}

/// Parse a problem spec from TOML text and validate it.
pub fn parse_problem_spec(text: &str) -> Result<ProblemSpec> {
    let spec: ProblemSpec = toml::from_str(text).map_err(|e| TagdmError::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Load precomputed signatures: one line per group, `index<TAB>w1,w2,...`
/// with `expected` entries of `dim` comma-separated weights. Every group
/// index in `0..expected` must appear exactly once.
pub fn load_signatures(path: &Path, expected: usize, dim: usize) -> Result<Vec<TagSignature>> {
    let text = std::fs::read_to_string(path)?;
    let mut out: Vec<Option<TagSignature>> = vec![None; expected];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx_str, weights_str) = line.split_once('\t').ok_or_else(|| TagdmError::Parse {
            line: line_no,
            msg: "expected index<TAB>weights".into(),
        })?;
        let idx: usize = idx_str.trim().parse().map_err(|_| TagdmError::Parse {
            line: line_no,
            msg: format!("bad group index {idx_str:?}"),
        })?;
        if idx >= expected {
            return Err(TagdmError::Parse {
                line: line_no,
                msg: format!("group index {idx} out of range (n = {expected})"),
            });
        }
        let weights: Vec<f64> = weights_str
            .split(',')
            .map(|w| {
                w.trim().parse::<f64>().map_err(|_| TagdmError::Parse {
                    line: line_no,
                    msg: format!("bad weight {w:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if weights.len() != dim {
            return Err(TagdmError::Parse {
                line: line_no,
                msg: format!("expected {dim} weights, got {}", weights.len()),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TagdmError::Parse {
                line: line_no,
                msg: "weights must be finite and non-negative".into(),
            });
        }
        if out[idx].is_some() {
            return Err(TagdmError::Parse {
                line: line_no,
                msg: format!("duplicate signature for group {idx}"),
            });
        }
        out[idx] = Some(TagSignature::new(weights));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| TagdmError::Parse {
                line: 0,
                msg: format!("missing signature for group {i}"),
            })
        })
        .collect()
}

//! Corpus ingestion: JSONL function records, source normalization and
//! grouping by function type.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::inject::AttackType;
use crate::io;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no records in {0}")]
    Empty(String),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("source is not valid UTF-8: {0}")]
    NotUtf8(#[from] std::str::Utf8Error),
    #[error("record {id:?}: label and attack_type disagree")]
    LabelMismatch { id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: String,
    pub function_name: String,
    pub source: String,
    pub normalized_source: String,
    pub origin: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_type: Option<AttackType>,
    /// Set when a distributed payload had to be placed as a prologue.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback_prologue: bool,
}

impl FunctionRecord {
    pub fn benign(id: impl Into<String>, name: impl Into<String>, source: impl Into<String>) -> Self {
        let source = source.into();
        FunctionRecord {
            id: id.into(),
            function_name: name.into(),
            normalized_source: normalize_source(&source),
            source,
            origin: String::new(),
            label: Label::Benign,
            attack_type: None,
            fallback_prologue: false,
        }
    }

    pub fn is_injected(&self) -> bool {
        self.label == Label::Injected
    }
}

/// Immutable set of records grouped by function name.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    records: Vec<FunctionRecord>,
    by_type: BTreeMap<String, Vec<String>>,
    positions: HashMap<String, usize>,
}

impl CorpusIndex {
    pub fn new(records: Vec<FunctionRecord>) -> Result<Self, CorpusError> {
        let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut positions = HashMap::with_capacity(records.len());
        for (pos, rec) in records.iter().enumerate() {
            if rec.is_injected() != rec.attack_type.is_some() {
                return Err(CorpusError::LabelMismatch { id: rec.id.clone() });
            }
            if positions.insert(rec.id.clone(), pos).is_some() {
                return Err(CorpusError::DuplicateId(rec.id.clone()));
            }
            by_type
                .entry(rec.function_name.clone())
                .or_default()
                .push(rec.id.clone());
        }
        Ok(CorpusIndex {
            records,
            by_type,
            positions,
        })
    }

    pub fn records(&self) -> &[FunctionRecord] {
        &self.records
    }

    pub fn by_type(&self) -> &BTreeMap<String, Vec<String>> {
        &self.by_type
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FunctionRecord> {
        self.positions.get(id).map(|&p| &self.records[p])
    }

    /// Records of one function type, in corpus order.
    pub fn records_of(&self, function_name: &str) -> Vec<&FunctionRecord> {
        self.by_type
            .get(function_name)
            .map(|ids| ids.iter().filter_map(|id| self.get(id)).collect())
            .unwrap_or_default()
    }

    /// Number of records whose normalized source repeats an earlier record
    /// of the same function type.
    pub fn duplicate_count(&self) -> usize {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| !seen.insert((r.function_name.as_str(), r.normalized_source.as_str())))
            .count()
    }

    pub fn into_records(self) -> Vec<FunctionRecord> {
        self.records
    }

    /// Serializes back into the corpus JSONL format accepted by [`load_corpus`].
    pub fn to_jsonl(&self) -> String {
        io::to_jsonl(self.records.iter().map(CorpusLine::from_record))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub entries: Vec<SkipEntry>,
}

impl SkipReport {
    pub fn push(&mut self, stage: &str, line: Option<usize>, id: Option<&str>, reason: impl Into<String>) {
        self.entries.push(SkipEntry {
            stage: stage.to_string(),
            line,
            id: id.map(str::to_string),
            reason: reason.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: SkipReport) {
        self.entries.extend(other.entries);
    }

    pub fn to_jsonl(&self) -> String {
        io::to_jsonl(&self.entries)
    }

    /// Path of the report written beside an input file (`<input>.skipped`).
    pub fn beside(input: &Path) -> PathBuf {
        let mut name = input.as_os_str().to_owned();
        name.push(".skipped");
        PathBuf::from(name)
    }
}

/// One line of the corpus file.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    name: String,
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attack_type: Option<AttackType>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    fallback_prologue: bool,
}

impl CorpusLine {
    fn from_record(r: &FunctionRecord) -> Self {
        CorpusLine {
            id: Some(r.id.clone()),
            name: r.function_name.clone(),
            source: r.source.clone(),
            origin: (!r.origin.is_empty()).then(|| r.origin.clone()),
            label: r.is_injected().then_some(Label::Injected),
            attack_type: r.attack_type,
            fallback_prologue: r.fallback_prologue,
        }
    }
}

/// Loads a JSONL corpus. Malformed lines are skipped and reported; I/O
/// failures and empty results are fatal.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(CorpusIndex, SkipReport), CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, &path.display().to_string(), format)
}

/// Same as [`load_corpus`] over in-memory text; `default_origin` fills
/// records without an `origin` field.
pub fn parse_corpus(
    text: &str,
    default_origin: &str,
    format: CorpusFormat,
) -> Result<(CorpusIndex, SkipReport), CorpusError> {
    let CorpusFormat::Jsonl = format;
    let mut skips = SkipReport::default();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                skips.push("corpus", Some(lineno), None, format!("malformed line: {e}"));
                continue;
            }
        };
        let id = parsed.id.unwrap_or_else(|| format!("{lineno}:{}", parsed.name));
        let label = parsed.label.unwrap_or(Label::Benign);
        if (label == Label::Injected) != parsed.attack_type.is_some() {
            skips.push("corpus", Some(lineno), Some(&id), "label and attack_type disagree");
            continue;
        }
        if !seen.insert(id.clone()) {
            skips.push("corpus", Some(lineno), Some(&id), "duplicate id");
            continue;
        }
        let normalized = normalize_source(&parsed.source);
        if normalized.is_empty() {
            skips.push("corpus", Some(lineno), Some(&id), "empty after normalization");
            continue;
        }
        records.push(FunctionRecord {
            id,
            function_name: parsed.name,
            source: parsed.source,
            normalized_source: normalized,
            origin: parsed.origin.unwrap_or_else(|| default_origin.to_string()),
            label,
            attack_type: parsed.attack_type,
            fallback_prologue: parsed.fallback_prologue,
        });
    }
    if records.is_empty() {
        return Err(CorpusError::Empty(default_origin.to_string()));
    }
    Ok((CorpusIndex::new(records)?, skips))
}

/// Normalizes raw bytes; fails on invalid UTF-8.
pub fn normalize_bytes(source: &[u8]) -> Result<String, CorpusError> {
    Ok(normalize_source(std::str::from_utf8(source)?))
}

/// Canonical text form of a function: `#` comments removed, CRLF/CR turned
/// into LF, tabs expanded to four spaces, trailing whitespace stripped and
/// blank lines dropped. String literal contents are left untouched (apart
/// from line endings).
pub fn normalize_source(source: &str) -> String {
    let text = source.strip_prefix('\u{feff}').unwrap_or(source);
    let text = text.replace("\r\n", "\n").replace('\r', "\n");

    let mut out = String::with_capacity(text.len());
    let mut line = String::new();
    // (quote char, triple-quoted)
    let mut in_string: Option<(char, bool)> = None;
    let mut chars = text.chars().peekable();

    let flush = |line: &mut String, out: &mut String| {
        let trimmed = line.trim_end_matches([' ', '\t', '\x0c']);
        if !trimmed.trim().is_empty() {
            out.push_str(trimmed);
            out.push('\n');
        }
        line.clear();
    };

    while let Some(c) = chars.next() {
        match in_string {
            Some((quote, triple)) => {
                line.push(c);
                if c == '\\' {
                    if let Some(next) = chars.next() {
                        line.push(next);
                    }
                } else if c == quote {
                    if !triple {
                        in_string = None;
                    } else if chars.peek() == Some(&quote) {
                        line.push(chars.next().unwrap());
                        if chars.peek() == Some(&quote) {
                            line.push(chars.next().unwrap());
                            in_string = None;
                        }
                    }
                } else if c == '\n' && !triple {
                    // unterminated single-quoted string; resynchronize at EOL
                    line.pop();
                    in_string = None;
                    flush(&mut line, &mut out);
                }
            }
            None => match c {
                '#' => {
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        chars.next();
                    }
                }
                '\'' | '"' => {
                    line.push(c);
                    let mut triple = false;
                    if chars.peek() == Some(&c) {
                        line.push(chars.next().unwrap());
                        if chars.peek() == Some(&c) {
                            line.push(chars.next().unwrap());
                            triple = true;
                        } else {
                            // empty string literal
                            continue;
                        }
                    }
                    in_string = Some((c, triple));
                }
                '\t' => line.push_str("    "),
                '\n' => flush(&mut line, &mut out),
                _ => line.push(c),
            },
        }
    }
    flush(&mut line, &mut out);
    out
}

/// The `k` most common function types, by count descending then name.
pub fn top_k_function_types(index: &CorpusIndex, k: usize) -> Vec<(String, usize)> {
    let mut counts: Vec<(String, usize)> = index
        .by_type()
        .iter()
        .map(|(name, ids)| (name.clone(), ids.len()))
        .collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counts.truncate(k);
    counts
}

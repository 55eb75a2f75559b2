//! Garden-path stimuli: the five-chunk data model, the line-delimited JSON
//! corpus format and the comma-absent / comma-present renderings.
//!
//! Word indices are positions in the whitespace tokenization of the
//! comma-absent sentence. Punctuation stays attached to its word, so the
//! comma-present rendering ("hunted,") has the same word indices.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::N_CHUNKS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerbClass {
    /// Optionally transitive.
    #[serde(rename = "OT")]
    Ot,
    /// Reflexive absolute transitive.
    #[serde(rename = "RAT")]
    Rat,
}

impl VerbClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VerbClass::Ot => "OT",
            VerbClass::Rat => "RAT",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "OT" => Some(VerbClass::Ot),
            "RAT" => Some(VerbClass::Rat),
            _ => None,
        }
    }
}

/// Whether the disambiguating comma follows chunk 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CommaAbsent,
    CommaPresent,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::CommaAbsent, Variant::CommaPresent];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::CommaAbsent => "comma_absent",
            Variant::CommaPresent => "comma_present",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "comma_absent" => Some(Variant::CommaAbsent),
            "comma_present" => Some(Variant::CommaPresent),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Word indices of the three words whose attachment decides the parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldRoles {
    pub verb1_word: usize,
    pub np_head_word: usize,
    pub verb2_word: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GardenPathItem {
    id: String,
    verb_class: VerbClass,
    chunks: [String; N_CHUNKS],
    question_misinterpretation: String,
    question_correct: String,
    gold_roles: GoldRoles,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StimulusVariant {
    pub item_id: String,
    pub comma_present: bool,
    pub full_text: String,
    pub prefixes: [String; N_CHUNKS],
}

impl StimulusVariant {
    pub fn variant(&self) -> Variant {
        if self.comma_present {
            Variant::CommaPresent
        } else {
            Variant::CommaAbsent
        }
    }

    /// Prefix text for a 1-based prefix index.
    pub fn prefix(&self, prefix_index: usize) -> Option<&str> {
        prefix_index
            .checked_sub(1)
            .and_then(|k| self.prefixes.get(k))
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusErrorKind {
    /// JSON syntax error or a field with the wrong type.
    Malformed { field: String, message: String },
    ChunkCount(usize),
    EmptyChunk(usize),
    /// Chunk 1 already ends in a comma, so the comma variant cannot be rendered.
    TrailingComma,
    RoleOrder,
    RoleOutsideChunk {
        role: &'static str,
        word: usize,
        chunk: usize,
    },
    SentenceMismatch,
    DuplicateId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("corpus line {line}, item {id}: {kind}")]
pub struct CorpusError {
    pub line: usize,
    pub id: String,
    pub kind: CorpusErrorKind,
}

impl fmt::Display for CorpusErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusErrorKind::Malformed { field, message } => {
                write!(f, "malformed field `{field}`: {message}")
            }
            CorpusErrorKind::ChunkCount(n) => write!(f, "chunk-count: expected 5 chunks, found {n}"),
            CorpusErrorKind::EmptyChunk(k) => write!(f, "chunk {} is empty", k + 1),
            CorpusErrorKind::TrailingComma => write!(f, "chunk 1 must not end with a comma"),
            CorpusErrorKind::RoleOrder => {
                write!(f, "role order: expected verb1 < np_head < verb2")
            }
            CorpusErrorKind::RoleOutsideChunk { role, word, chunk } => write!(
                f,
                "role outside chunk: {role} word {word} is not in chunk {chunk}"
            ),
            CorpusErrorKind::SentenceMismatch => {
                write!(f, "stored sentence differs from the space-joined chunks")
            }
            CorpusErrorKind::DuplicateId => write!(f, "duplicate id"),
        }
    }
}

/// On-disk record shape; `sentence` is optional and checked when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub verb_class: VerbClass,
    pub chunks: Vec<String>,
    pub q_mis: String,
    pub q_correct: String,
    pub roles: RecordRoles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRoles {
    pub verb1: usize,
    pub np_head: usize,
    pub verb2: usize,
}

impl GardenPathItem {
    /// Validates and builds an item. `line` is only used for error reports.
    pub fn from_record(record: CorpusRecord, line: usize) -> Result<Self, CorpusError> {
        let err = |kind| CorpusError {
            line,
            id: record.id.clone(),
            kind,
        };
        if record.chunks.len() != N_CHUNKS {
            return Err(err(CorpusErrorKind::ChunkCount(record.chunks.len())));
        }
        let mut chunks: [String; N_CHUNKS] = Default::default();
        for (k, chunk) in record.chunks.iter().enumerate() {
            let normalized = chunk.split_whitespace().collect::<Vec<_>>().join(" ");
            if normalized.is_empty() {
                return Err(err(CorpusErrorKind::EmptyChunk(k)));
            }
            chunks[k] = normalized;
        }
        if chunks[0].ends_with(',') {
            return Err(err(CorpusErrorKind::TrailingComma));
        }
        let roles = GoldRoles {
            verb1_word: record.roles.verb1,
            np_head_word: record.roles.np_head,
            verb2_word: record.roles.verb2,
        };
        if !(roles.verb1_word < roles.np_head_word && roles.np_head_word < roles.verb2_word) {
            return Err(err(CorpusErrorKind::RoleOrder));
        }
        let item = GardenPathItem {
            id: record.id.clone(),
            verb_class: record.verb_class,
            chunks,
            question_misinterpretation: record.q_mis.clone(),
            question_correct: record.q_correct.clone(),
            gold_roles: roles,
        };
        for (role, word, chunk) in [
            ("verb1", roles.verb1_word, 0),
            ("np_head", roles.np_head_word, 1),
            ("verb2", roles.verb2_word, 3),
        ] {
            if !item.chunk_word_span(chunk).contains(&word) {
                return Err(err(CorpusErrorKind::RoleOutsideChunk {
                    role,
                    word,
                    chunk: chunk + 1,
                }));
            }
        }
        if let Some(sentence) = &record.sentence {
            if *sentence != item.sentence() {
                return Err(err(CorpusErrorKind::SentenceMismatch));
            }
        }
        Ok(item)
    }

    pub fn to_record(&self) -> CorpusRecord {
        CorpusRecord {
            id: self.id.clone(),
            verb_class: self.verb_class,
            chunks: self.chunks.to_vec(),
            q_mis: self.question_misinterpretation.clone(),
            q_correct: self.question_correct.clone(),
            roles: RecordRoles {
                verb1: self.gold_roles.verb1_word,
                np_head: self.gold_roles.np_head_word,
                verb2: self.gold_roles.verb2_word,
            },
            sentence: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn verb_class(&self) -> VerbClass {
        self.verb_class
    }

    pub fn chunks(&self) -> &[String; N_CHUNKS] {
        &self.chunks
    }

    pub fn question_misinterpretation(&self) -> &str {
        &self.question_misinterpretation
    }

    pub fn question_correct(&self) -> &str {
        &self.question_correct
    }

    pub fn gold_roles(&self) -> GoldRoles {
        self.gold_roles
    }

    /// The comma-absent sentence.
    pub fn sentence(&self) -> String {
        self.chunks.join(" ")
    }

    pub fn words(&self) -> Vec<&str> {
        self.chunks.iter().flat_map(|c| c.split_whitespace()).collect()
    }

    pub fn n_words(&self) -> usize {
        self.chunks.iter().map(|c| c.split_whitespace().count()).sum()
    }

    /// Word-index range covered by a 0-based chunk.
    pub fn chunk_word_span(&self, chunk: usize) -> Range<usize> {
        let start: usize = self.chunks[..chunk]
            .iter()
            .map(|c| c.split_whitespace().count())
            .sum();
        start..start + self.chunks[chunk].split_whitespace().count()
    }

    /// 0-based chunk containing a word, if the word exists.
    pub fn chunk_of_word(&self, word: usize) -> Option<usize> {
        (0..N_CHUNKS).find(|&k| self.chunk_word_span(k).contains(&word))
    }

    /// Number of words in the cumulative prefix ending at 1-based `prefix_index`.
    pub fn prefix_word_count(&self, prefix_index: usize) -> usize {
        self.chunks[..prefix_index.min(N_CHUNKS)]
            .iter()
            .map(|c| c.split_whitespace().count())
            .sum()
    }

    /// The head noun of the ambiguous noun phrase.
    pub fn np_head_text(&self) -> &str {
        self.words()[self.gold_roles.np_head_word]
    }

    pub fn render(&self, variant: Variant) -> StimulusVariant {
        let comma_present = variant == Variant::CommaPresent;
        let mut rendered: Vec<String> = self.chunks.to_vec();
        if comma_present {
            rendered[0].push(',');
        }
        let mut prefixes: [String; N_CHUNKS] = Default::default();
        for k in 0..N_CHUNKS {
            prefixes[k] = rendered[..=k].join(" ");
        }
        StimulusVariant {
            item_id: self.id.clone(),
            comma_present,
            full_text: prefixes[N_CHUNKS - 1].clone(),
            prefixes,
        }
    }
}

/// Returns the (comma_absent, comma_present) renderings of an item.
pub fn render_variants(item: &GardenPathItem) -> (StimulusVariant, StimulusVariant) {
    (
        item.render(Variant::CommaAbsent),
        item.render(Variant::CommaPresent),
    )
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<GardenPathItem>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file)).map_err(|e| match e {
        ParseFailure::Io(e) => Error::io(path, e),
        ParseFailure::Corpus(e) => Error::Corpus(e),
    })
}

enum ParseFailure {
    Io(std::io::Error),
    Corpus(CorpusError),
}

fn parse_corpus(reader: impl BufRead) -> std::result::Result<Vec<GardenPathItem>, ParseFailure> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(ParseFailure::Io)?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line, line_no).map_err(ParseFailure::Corpus)?;
        let item = GardenPathItem::from_record(record, line_no).map_err(ParseFailure::Corpus)?;
        if !seen.insert(item.id.clone()) {
            return Err(ParseFailure::Corpus(CorpusError {
                line: line_no,
                id: item.id,
                kind: CorpusErrorKind::DuplicateId,
            }));
        }
        items.push(item);
    }
    Ok(items)
}

/// Parses a corpus held in memory.
pub fn parse_corpus_str(text: &str) -> Result<Vec<GardenPathItem>, CorpusError> {
    match parse_corpus(text.as_bytes()) {
        Ok(items) => Ok(items),
        Err(ParseFailure::Corpus(e)) => Err(e),
        Err(ParseFailure::Io(_)) => unreachable!("reading from memory"),
    }
}

fn parse_record(line: &str, line_no: usize) -> Result<CorpusRecord, CorpusError> {
    let malformed = |id: &str, field: &str, message: String| CorpusError {
        line: line_no,
        id: id.to_string(),
        kind: CorpusErrorKind::Malformed {
            field: field.to_string(),
            message,
        },
    };
    let value: Value =
        serde_json::from_str(line).map_err(|e| malformed("<unknown>", "<record>", e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(malformed("<unknown>", "<record>", "not a JSON object".into()));
    };
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(_) => return Err(malformed("<unknown>", "id", "expected a non-empty string".into())),
        None => return Err(malformed("<unknown>", "id", "missing".into())),
    };
    let string_field = |key: &str| -> Result<String, CorpusError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(malformed(&id, key, "expected a string".into())),
            None => Err(malformed(&id, key, "missing".into())),
        }
    };
    let verb_class_raw = string_field("verb_class")?;
    let verb_class = VerbClass::parse(&verb_class_raw)
        .ok_or_else(|| malformed(&id, "verb_class", format!("expected \"OT\" or \"RAT\", got {verb_class_raw:?}")))?;
    let chunks = match obj.get("chunks") {
        Some(Value::Array(arr)) => arr
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| malformed(&id, "chunks", "expected an array of strings".into()))?,
        Some(_) => return Err(malformed(&id, "chunks", "expected an array of strings".into())),
        None => return Err(malformed(&id, "chunks", "missing".into())),
    };
    let q_mis = string_field("q_mis")?;
    let q_correct = string_field("q_correct")?;
    let roles = match obj.get("roles") {
        Some(Value::Object(r)) => parse_roles(r).map_err(|(field, msg)| malformed(&id, &field, msg))?,
        Some(_) => return Err(malformed(&id, "roles", "expected an object".into())),
        None => return Err(malformed(&id, "roles", "missing".into())),
    };
    let sentence = match obj.get("sentence") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(malformed(&id, "sentence", "expected a string".into())),
    };
    Ok(CorpusRecord {
        id,
        verb_class,
        chunks,
        q_mis,
        q_correct,
        roles,
        sentence,
    })
}

fn parse_roles(obj: &Map<String, Value>) -> std::result::Result<RecordRoles, (String, String)> {
    let get = |key: &str| -> std::result::Result<usize, (String, String)> {
        let field = format!("roles.{key}");
        match obj.get(key) {
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or((field, "expected a non-negative integer".into())),
            None => Err((field, "missing".into())),
        }
    };
    Ok(RecordRoles {
        verb1: get("verb1")?,
        np_head: get("np_head")?,
        verb2: get("verb2")?,
    })
}

/// Writes items in the line-delimited JSON corpus format.
pub fn write_corpus(items: &[GardenPathItem], mut out: impl Write) -> std::io::Result<()> {
    for item in items {
        let line = serde_json::to_string(&item.to_record()).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

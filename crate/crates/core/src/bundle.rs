//! Activation bundles: the on-disk interchange between model inference and
//! analysis.
//!
//! Layout: `root/<item_id>/<variant>/prefix_<k>/` holding `manifest.json`,
//! `hidden.f32` `[n_layers+1, T, hidden_dim]`, `attn.f32`
//! `[n_layers, n_heads, T, T]`, optional `token_logprob.f32` `[T]` and
//! `answer.json`. Tensors are raw little-endian row-major `f32`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{GardenPathItem, Variant};
use crate::error::{Error, Result};
use crate::tensor::{f32_from_le_bytes, Tensor};
use crate::N_CHUNKS;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HIDDEN_FILE: &str = "hidden.f32";
pub const ATTN_FILE: &str = "attn.f32";
pub const LOGPROB_FILE: &str = "token_logprob.f32";
pub const ANSWER_FILE: &str = "answer.json";

/// Tolerance on attention row sums.
pub const ROW_SUM_TOL: f64 = 1e-3;
/// Tolerance on `p_yes + p_no <= 1`.
pub const ANSWER_SUM_TOL: f64 = 1e-6;
/// Largest attention weight tolerated above the diagonal of a causal model.
pub const CAUSAL_TOL: f32 = 1e-6;

/// Half-open token range `[start, end)`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn tokens(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<[usize; 2]> for TokenSpan {
    fn from([start, end]: [usize; 2]) -> Self {
        TokenSpan { start, end }
    }
}

impl From<TokenSpan> for [usize; 2] {
    fn from(s: TokenSpan) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpans {
    #[serde(default)]
    pub verb1: Option<TokenSpan>,
    #[serde(default)]
    pub np_head: Option<TokenSpan>,
    #[serde(default)]
    pub verb2: Option<TokenSpan>,
}

impl RoleSpans {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Option<TokenSpan>)> {
        [
            ("verb1", self.verb1),
            ("np_head", self.np_head),
            ("verb2", self.verb2),
        ]
        .into_iter()
    }

    fn non_empty(span: Option<TokenSpan>) -> Option<TokenSpan> {
        span.filter(|s| !s.is_empty())
    }
}

/// Gold word index of each role, when the exporter records it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleWords {
    pub verb1: usize,
    pub np_head: usize,
    pub verb2: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shapes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attn: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprob: Option<Vec<usize>>,
}

/// Which payload files the exporter wrote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub hidden: bool,
    pub attn: bool,
    pub token_logprob: bool,
    pub answer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub model_id: String,
    pub item_id: String,
    pub variant: Variant,
    pub prefix_index: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_dim: usize,
    #[serde(default)]
    pub causal: bool,
    pub tokens: Vec<String>,
    pub word_of_token: Vec<usize>,
    #[serde(default)]
    pub role_token_spans: RoleSpans,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_words: Option<RoleWords>,
    pub shapes: Shapes,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<String>,
}

impl BundleManifest {
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_words(&self) -> usize {
        self.word_of_token.last().map_or(0, |w| w + 1)
    }

    /// Tokens belonging to one word.
    pub fn tokens_of_word(&self, word: usize) -> std::ops::Range<usize> {
        let start = self.word_of_token.partition_point(|&w| w < word);
        let end = self.word_of_token.partition_point(|&w| w <= word);
        start..end
    }

    pub fn hidden_shape(&self) -> [usize; 3] {
        [self.n_layers + 1, self.n_tokens(), self.hidden_dim]
    }

    pub fn attn_shape(&self) -> [usize; 4] {
        [self.n_layers, self.n_heads, self.n_tokens(), self.n_tokens()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YesNo {
    pub p_yes: f64,
    pub p_no: f64,
}

/// `answer.json`: probabilities for probe question (1), plus probe (2) when exported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerProbs {
    pub p_yes: f64,
    pub p_no: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_correct: Option<YesNo>,
}

impl AnswerProbs {
    pub fn misinterpretation(&self) -> YesNo {
        YesNo {
            p_yes: self.p_yes,
            p_no: self.p_no,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrefixActivations {
    /// `[n_layers + 1, T, hidden_dim]`, layer 0 is the embedding layer.
    pub hidden: Option<Tensor>,
    /// `[n_layers, n_heads, T, T]`, row `i` is the distribution of token `i`.
    pub attention: Option<Tensor>,
    /// Natural-log probability of each token given its left context.
    pub token_logprob: Option<Vec<f32>>,
    pub answer: Option<AnswerProbs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub path: PathBuf,
    pub manifest: BundleManifest,
    pub activations: PrefixActivations,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: missing file")]
    MissingFile { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: shape mismatch for {tensor}: declared {declared:?}, expected {expected:?}")]
    ShapeMismatch {
        path: PathBuf,
        tensor: &'static str,
        declared: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("{path}: byte length {actual}, expected {expected} for declared shape")]
    ByteLength {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{path}: non-finite value in {tensor} at flat index {index}")]
    NonFinite {
        path: PathBuf,
        tensor: &'static str,
        index: usize,
    },
    #[error("{path}: attention row not normalized (layer {layer}, head {head}, row {row}: sum {sum})")]
    RowNotNormalized {
        path: PathBuf,
        layer: usize,
        head: usize,
        row: usize,
        sum: f64,
    },
    #[error("{path}: causal attention has mass above the diagonal (layer {layer}, head {head}, row {row}, col {col})")]
    NotCausal {
        path: PathBuf,
        layer: usize,
        head: usize,
        row: usize,
        col: usize,
    },
    #[error("{path}: answer probabilities exceed 1 (p_yes {p_yes} + p_no {p_no})")]
    AnswerSum { path: PathBuf, p_yes: f64, p_no: f64 },
    #[error("{path}: answer probability out of range (p_yes {p_yes}, p_no {p_no})")]
    AnswerRange { path: PathBuf, p_yes: f64, p_no: f64 },
    #[error("{path}: token log-probability {value} at token {index} is positive")]
    PositiveLogprob {
        path: PathBuf,
        index: usize,
        value: f32,
    },
    #[error("{path}: word alignment invalid: {message}")]
    Alignment { path: PathBuf, message: String },
    #[error("{path}: role span inconsistent for {role}: {message}")]
    RoleSpan {
        path: PathBuf,
        role: &'static str,
        message: String,
    },
    #[error("{path}: {tensor} payload not present in bundle")]
    MissingPayload { path: PathBuf, tensor: &'static str },
    #[error("surprisal unavailable for this model ({model_id}): bundle carries no token log-probabilities")]
    SurprisalUnavailable { model_id: String },
    #[error("{root}: no bundles matched the selection")]
    NoBundlesMatched { root: PathBuf },
}

fn read_file(path: &Path) -> Result<Vec<u8>, BundleError> {
    std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            BundleError::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            BundleError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

fn read_tensor(
    dir: &Path,
    file: &str,
    name: &'static str,
    declared: Option<&Vec<usize>>,
    expected: &[usize],
) -> Result<Tensor, BundleError> {
    let path = dir.join(file);
    let declared = declared.ok_or_else(|| BundleError::Manifest {
        path: dir.join(MANIFEST_FILE),
        message: format!("shapes.{name} missing for a present payload"),
    })?;
    if declared.as_slice() != expected {
        return Err(BundleError::ShapeMismatch {
            path: dir.join(MANIFEST_FILE),
            tensor: name,
            declared: declared.clone(),
            expected: expected.to_vec(),
        });
    }
    let bytes = read_file(&path)?;
    let expected_len = declared.iter().product::<usize>() as u64 * 4;
    if bytes.len() as u64 != expected_len {
        return Err(BundleError::ByteLength {
            path,
            expected: expected_len,
            actual: bytes.len() as u64,
        });
    }
    let data = f32_from_le_bytes(&bytes);
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(BundleError::NonFinite {
            path,
            tensor: name,
            index,
        });
    }
    Ok(Tensor::new(declared.clone(), data))
}

/// Reads and validates one bundle directory.
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<Bundle> {
    read_bundle_inner(dir.as_ref()).map_err(Error::from)
}

fn read_bundle_inner(dir: &Path) -> Result<Bundle, BundleError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let bytes = read_file(&manifest_path)?;
    let manifest: BundleManifest =
        serde_json::from_slice(&bytes).map_err(|e| BundleError::Json {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
    validate_manifest(&manifest, &manifest_path)?;

    let mut activations = PrefixActivations::default();
    if manifest.payload.hidden {
        activations.hidden = Some(read_tensor(
            dir,
            HIDDEN_FILE,
            "hidden",
            manifest.shapes.hidden.as_ref(),
            &manifest.hidden_shape(),
        )?);
    }
    if manifest.payload.attn {
        let attn = read_tensor(
            dir,
            ATTN_FILE,
            "attn",
            manifest.shapes.attn.as_ref(),
            &manifest.attn_shape(),
        )?;
        validate_attention(&attn, manifest.causal, &dir.join(ATTN_FILE))?;
        activations.attention = Some(attn);
    }
    if manifest.payload.token_logprob {
        let lp = read_tensor(
            dir,
            LOGPROB_FILE,
            "token_logprob",
            manifest.shapes.token_logprob.as_ref(),
            &[manifest.n_tokens()],
        )?;
        if let Some((index, &value)) = lp.data().iter().enumerate().find(|(_, &v)| v > 0.0) {
            return Err(BundleError::PositiveLogprob {
                path: dir.join(LOGPROB_FILE),
                index,
                value,
            });
        }
        activations.token_logprob = Some(lp.data().to_vec());
    }
    if manifest.payload.answer {
        let path = dir.join(ANSWER_FILE);
        let bytes = read_file(&path)?;
        let answer: AnswerProbs = serde_json::from_slice(&bytes).map_err(|e| BundleError::Json {
            path: path.clone(),
            message: e.to_string(),
        })?;
        validate_answer(answer.misinterpretation(), &path)?;
        if let Some(q) = answer.q_correct {
            validate_answer(q, &path)?;
        }
        activations.answer = Some(answer);
    }
    Ok(Bundle {
        path: dir.to_path_buf(),
        manifest,
        activations,
    })
}

fn validate_manifest(m: &BundleManifest, path: &Path) -> Result<(), BundleError> {
    let bad = |message: String| BundleError::Manifest {
        path: path.to_path_buf(),
        message,
    };
    if m.n_layers == 0 || m.n_heads == 0 || m.hidden_dim == 0 {
        return Err(bad("n_layers, n_heads and hidden_dim must be positive".into()));
    }
    if !(1..=N_CHUNKS).contains(&m.prefix_index) {
        return Err(bad(format!("prefix_index {} outside 1..=5", m.prefix_index)));
    }
    if m.tokens.is_empty() {
        return Err(bad("no tokens".into()));
    }
    let alignment = |message: String| BundleError::Alignment {
        path: path.to_path_buf(),
        message,
    };
    if m.word_of_token.len() != m.tokens.len() {
        return Err(alignment(format!(
            "{} word indices for {} tokens",
            m.word_of_token.len(),
            m.tokens.len()
        )));
    }
    if m.word_of_token[0] != 0 {
        return Err(alignment("word_of_token must start at 0".into()));
    }
    for (t, pair) in m.word_of_token.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(alignment(format!("decreasing word index at token {}", t + 1)));
        }
        if pair[1] > pair[0] + 1 {
            return Err(alignment(format!("word {} owns no token", pair[0] + 1)));
        }
    }
    let gold = m.role_words.map(|w| [w.verb1, w.np_head, w.verb2]);
    for (k, (role, span)) in m.role_token_spans.iter().enumerate() {
        let Some(span) = RoleSpans::non_empty(span) else {
            continue;
        };
        let role_err = |message: String| BundleError::RoleSpan {
            path: path.to_path_buf(),
            role,
            message,
        };
        if span.end > m.n_tokens() {
            return Err(role_err(format!(
                "span {:?} exceeds {} tokens",
                [span.start, span.end],
                m.n_tokens()
            )));
        }
        let word = m.word_of_token[span.start];
        if m.word_of_token[span.tokens()].iter().any(|&w| w != word) {
            return Err(role_err("span covers more than one word".into()));
        }
        if m.tokens_of_word(word) != span.tokens() {
            return Err(role_err(format!("span does not cover exactly the tokens of word {word}")));
        }
        if let Some(gold) = gold {
            if gold[k] != word {
                return Err(role_err(format!(
                    "span maps to word {word}, gold role word is {}",
                    gold[k]
                )));
            }
        }
    }
    Ok(())
}

fn validate_attention(attn: &Tensor, causal: bool, path: &Path) -> Result<(), BundleError> {
    let [n_layers, n_heads, t, _] = [attn.shape()[0], attn.shape()[1], attn.shape()[2], attn.shape()[3]];
    for layer in 0..n_layers {
        for head in 0..n_heads {
            for row in 0..t {
                let weights = attn.row(&[layer, head, row]);
                let sum: f64 = weights.iter().map(|&w| w as f64).sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL || weights.iter().any(|&w| w < 0.0) {
                    return Err(BundleError::RowNotNormalized {
                        path: path.to_path_buf(),
                        layer,
                        head,
                        row,
                        sum,
                    });
                }
                if causal {
                    if let Some(col) = (row + 1..t).find(|&c| weights[c] > CAUSAL_TOL) {
                        return Err(BundleError::NotCausal {
                            path: path.to_path_buf(),
                            layer,
                            head,
                            row,
                            col,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn validate_answer(p: YesNo, path: &Path) -> Result<(), BundleError> {
    let in_unit = |v: f64| v.is_finite() && (0.0..=1.0 + ANSWER_SUM_TOL).contains(&v);
    if !in_unit(p.p_yes) || !in_unit(p.p_no) {
        return Err(BundleError::AnswerRange {
            path: path.to_path_buf(),
            p_yes: p.p_yes,
            p_no: p.p_no,
        });
    }
    if p.p_yes + p.p_no > 1.0 + ANSWER_SUM_TOL {
        return Err(BundleError::AnswerSum {
            path: path.to_path_buf(),
            p_yes: p.p_yes,
            p_no: p.p_no,
        });
    }
    Ok(())
}

impl Bundle {
    pub fn hidden(&self) -> Result<&Tensor, BundleError> {
        self.activations
            .hidden
            .as_ref()
            .ok_or_else(|| BundleError::MissingPayload {
                path: self.path.clone(),
                tensor: "hidden",
            })
    }

    pub fn attention(&self) -> Result<&Tensor, BundleError> {
        self.activations
            .attention
            .as_ref()
            .ok_or_else(|| BundleError::MissingPayload {
                path: self.path.clone(),
                tensor: "attn",
            })
    }

    pub fn answer(&self) -> Result<&AnswerProbs, BundleError> {
        self.activations
            .answer
            .as_ref()
            .ok_or_else(|| BundleError::MissingPayload {
                path: self.path.clone(),
                tensor: "answer",
            })
    }

    /// Checks the bundle against the corpus item it claims to describe.
    pub fn check_item(&self, item: &GardenPathItem) -> Result<(), BundleError> {
        let m = &self.manifest;
        let manifest_path = self.path.join(MANIFEST_FILE);
        if m.item_id != item.id() {
            return Err(BundleError::Manifest {
                path: manifest_path,
                message: format!("bundle is for item {}, not {}", m.item_id, item.id()),
            });
        }
        let expected_words = item.prefix_word_count(m.prefix_index);
        if m.n_words() != expected_words {
            return Err(BundleError::Alignment {
                path: manifest_path,
                message: format!(
                    "{} aligned words, prefix {} has {expected_words}",
                    m.n_words(),
                    m.prefix_index
                ),
            });
        }
        let roles = item.gold_roles();
        let gold = [roles.verb1_word, roles.np_head_word, roles.verb2_word];
        for (k, (role, span)) in m.role_token_spans.iter().enumerate() {
            let present = gold[k] < expected_words;
            match RoleSpans::non_empty(span) {
                Some(span) => {
                    let word = m.word_of_token[span.start];
                    if word != gold[k] {
                        return Err(BundleError::RoleSpan {
                            path: manifest_path,
                            role,
                            message: format!("span maps to word {word}, gold role word is {}", gold[k]),
                        });
                    }
                }
                None if present => {
                    return Err(BundleError::RoleSpan {
                        path: manifest_path,
                        role,
                        message: format!("gold word {} is in the prefix but the span is empty", gold[k]),
                    });
                }
                None => {}
            }
        }
        Ok(())
    }
}

/// Selects bundles by item, variant and prefix. Empty fields match everything.
#[derive(Debug, Clone, Default)]
pub struct BundleFilter {
    pub items: Option<BTreeSet<String>>,
    pub variant: Option<Variant>,
    pub prefix_index: Option<usize>,
}

impl BundleFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn item(mut self, id: impl Into<String>) -> Self {
        self.items.get_or_insert_with(BTreeSet::new).insert(id.into());
        self
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = Some(variant);
        self
    }

    pub fn prefix(mut self, prefix_index: usize) -> Self {
        self.prefix_index = Some(prefix_index);
        self
    }

    fn matches(&self, item: &str, variant: Variant, prefix: usize) -> bool {
        self.items.as_ref().is_none_or(|s| s.contains(item))
            && self.variant.is_none_or(|v| v == variant)
            && self.prefix_index.is_none_or(|p| p == prefix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// The first invalid bundle aborts the iteration.
    #[default]
    Strict,
    /// Invalid bundles are logged and skipped.
    Lenient,
}

/// A selected bundle location, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BundleKey {
    pub item_id: String,
    pub variant: Variant,
    pub prefix_index: usize,
}

pub fn bundle_dir(root: &Path, key: &BundleKey) -> PathBuf {
    root.join(&key.item_id)
        .join(key.variant.as_str())
        .join(format!("prefix_{}", key.prefix_index))
}

/// Lists bundle directories under `root` matching `filter`, sorted by
/// (item_id, variant, prefix_index).
pub fn scan_bundles(root: &Path, filter: &BundleFilter) -> Result<Vec<BundleKey>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut keys = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if !entry.path().is_dir() {
            continue;
        }
        let Some(item_id) = entry.file_name().to_str().map(str::to_string) else {
            continue;
        };
        for variant in Variant::ALL {
            for prefix_index in 1..=N_CHUNKS {
                let key = BundleKey {
                    item_id: item_id.clone(),
                    variant,
                    prefix_index,
                };
                if filter.matches(&key.item_id, variant, prefix_index) && bundle_dir(root, &key).is_dir() {
                    keys.push(key);
                }
            }
        }
    }
    keys.sort();
    if keys.is_empty() {
        return Err(BundleError::NoBundlesMatched {
            root: root.to_path_buf(),
        }
        .into());
    }
    Ok(keys)
}

/// Lazily reads bundles in canonical order.
pub struct BundleIter {
    root: PathBuf,
    keys: std::vec::IntoIter<BundleKey>,
    strictness: Strictness,
    failed: bool,
    skipped: usize,
}

impl BundleIter {
    /// Number of invalid bundles skipped so far in lenient mode.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl Iterator for BundleIter {
    type Item = Result<Bundle>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        for key in self.keys.by_ref() {
            let dir = bundle_dir(&self.root, &key);
            match read_bundle(&dir).and_then(|b| check_location(b, &key)) {
                Ok(bundle) => return Some(Ok(bundle)),
                Err(e) if self.strictness == Strictness::Lenient => {
                    log::warn!("skipping invalid bundle {}: {e}", dir.display());
                    self.skipped += 1;
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

fn check_location(bundle: Bundle, key: &BundleKey) -> Result<Bundle> {
    let m = &bundle.manifest;
    if m.item_id != key.item_id || m.variant != key.variant || m.prefix_index != key.prefix_index {
        return Err(BundleError::Manifest {
            path: bundle.path.join(MANIFEST_FILE),
            message: format!(
                "manifest says ({}, {}, {}) but directory is ({}, {}, {})",
                m.item_id, m.variant, m.prefix_index, key.item_id, key.variant, key.prefix_index
            ),
        }
        .into());
    }
    Ok(bundle)
}

pub fn iterate_bundles(root: impl AsRef<Path>, filter: &BundleFilter, strictness: Strictness) -> Result<BundleIter> {
    let root = root.as_ref();
    let keys = scan_bundles(root, filter)?;
    Ok(BundleIter {
        root: root.to_path_buf(),
        keys: keys.into_iter(),
        strictness,
        failed: false,
        skipped: 0,
    })
}

/// Reads every selected bundle, failing on the first error in strict mode.
pub fn load_bundles(root: impl AsRef<Path>, filter: &BundleFilter, strictness: Strictness) -> Result<Vec<Bundle>> {
    iterate_bundles(root, filter, strictness)?.collect()
}

//! Deterministic synthetic data: a corpus, a treebank, and activation
//! bundles from a toy "model" whose hidden states embed known trees.
//!
//! Word vectors are sums of orthonormal edge vectors along the path from the
//! root, so squared distances in the signal subspace equal tree path lengths
//! exactly; the remaining dimensions carry noise. Everything is seeded and
//! reproducible bit for bit.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bundle::{
    AnswerProbs, BundleManifest, Payload, PrefixActivations, RoleSpans, RoleWords, Shapes, TokenSpan, YesNo, ANSWER_FILE,
    ATTN_FILE, HIDDEN_FILE, LOGPROB_FILE, MANIFEST_FILE,
};
use crate::corpus::{CorpusRecord, GardenPathItem, RecordRoles, Variant, VerbClass};
use crate::error::{Error, Result};
use crate::probe::{decode_mst, DistanceMatrix, Edge, TrainingSentence};
use crate::tensor::{write_f32_file, Tensor};
use crate::treebank::AnnotatedSentence;
use crate::N_CHUNKS;

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain([0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Independent stream for one labelled purpose.
pub fn rng_for(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(parts))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

// ---- corpus ----

const SUBJECTS: [&str; 12] = [
    "man", "woman", "hunter", "girl", "boy", "nurse", "doctor", "farmer", "teacher", "sailor", "painter", "cook",
];
const OT_VERBS: [(&str, &str); 6] = [
    ("hunted", "hunt"),
    ("paid", "pay"),
    ("visited", "visit"),
    ("attacked", "attack"),
    ("called", "call"),
    ("followed", "follow"),
];
const RAT_VERBS: [(&str, &str); 6] = [
    ("washed", "wash"),
    ("dressed", "dress"),
    ("bathed", "bathe"),
    ("shaved", "shave"),
    ("scratched", "scratch"),
    ("hid", "hide"),
];
const NOUNS: [&str; 8] = ["deer", "child", "baby", "dog", "horse", "cat", "friend", "neighbour"];
const ADJECTIVES: [(&str, &str); 4] = [("brown", "graceful"), ("small", "quiet"), ("tired", "hungry"), ("old", "gentle")];
const SECOND_VERBS: [(&str, &str); 6] = [
    ("ran", "run"),
    ("laughed", "laugh"),
    ("stood", "stand"),
    ("waited", "wait"),
    ("left", "leave"),
    ("smiled", "smile"),
];
const ENDINGS: [&str; 4] = ["into the woods.", "near the door.", "in the garden.", "by the river."];

/// The canonical hunting example.
pub fn example_item() -> GardenPathItem {
    GardenPathItem::from_record(
        CorpusRecord {
            id: "fig1".into(),
            verb_class: VerbClass::Ot,
            chunks: vec![
                "While the man hunted".into(),
                "the deer".into(),
                "that was brown and graceful".into(),
                "ran".into(),
                "into the woods.".into(),
            ],
            q_mis: "Did the man hunt the deer?".into(),
            q_correct: "Did the deer run into the woods?".into(),
            roles: RecordRoles {
                verb1: 3,
                np_head: 5,
                verb2: 11,
            },
            sentence: None,
        },
        0,
    )
    .expect("example item is valid")
}

/// `n` items alternating OT / RAT, all with the same chunk layout:
/// verb1 at word 3, NP head at word 5, verb2 at word 11.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<GardenPathItem> {
    let mut rng = rng_for(seed, &["corpus"]);
    (0..n)
        .map(|i| {
            let class = if i % 2 == 0 { VerbClass::Ot } else { VerbClass::Rat };
            let verbs = if class == VerbClass::Ot { &OT_VERBS } else { &RAT_VERBS };
            let subj = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
            let (v1, v1_base) = verbs[(i / 2) % verbs.len()];
            let np = NOUNS[rng.random_range(0..NOUNS.len())];
            let (a1, a2) = ADJECTIVES[rng.random_range(0..ADJECTIVES.len())];
            let (v2, v2_base) = SECOND_VERBS[rng.random_range(0..SECOND_VERBS.len())];
            let ending = ENDINGS[rng.random_range(0..ENDINGS.len())];
            let record = CorpusRecord {
                id: format!("item{:02}", i + 1),
                verb_class: class,
                chunks: vec![
                    format!("While the {subj} {v1}"),
                    format!("the {np}"),
                    format!("that was {a1} and {a2}"),
                    v2.to_string(),
                    ending.to_string(),
                ],
                q_mis: format!("Did the {subj} {v1_base} the {np}?"),
                q_correct: format!("Did the {np} {v2_base}?"),
                roles: RecordRoles {
                    verb1: 3,
                    np_head: 5,
                    verb2: 11,
                },
                sentence: None,
            };
            GardenPathItem::from_record(record, i + 1).expect("synthetic item is valid")
        })
        .collect()
}

/// Tree over the words of a prefix.
///
/// Words inside a chunk form a chain; chunk 3 hangs off the NP head, chunk 5
/// off verb2, and verb1 attaches to verb2. The NP head attaches to verb2 when
/// `correct` (and verb2 is present), otherwise to verb1.
pub fn item_tree(item: &GardenPathItem, prefix_index: usize, correct: bool) -> Vec<Edge> {
    let roles = item.gold_roles();
    let mut edges = Vec::new();
    for k in 0..prefix_index {
        let span = item.chunk_word_span(k);
        edges.extend(span.clone().zip(span.clone().skip(1)).map(|(a, b)| Edge::new(a, b)));
        let first = span.start;
        match k {
            1 => {
                let head = if correct && prefix_index >= 4 {
                    roles.verb2_word
                } else {
                    roles.verb1_word
                };
                edges.push(Edge::new(roles.np_head_word, head));
            }
            2 => edges.push(Edge::new(first, roles.np_head_word)),
            3 => edges.push(Edge::new(roles.verb1_word, roles.verb2_word)),
            4 => edges.push(Edge::new(first, roles.verb2_word)),
            _ => {}
        }
    }
    edges.sort();
    edges
}

// ---- treebank ----

const VOCAB: [&str; 16] = [
    "the", "a", "dog", "saw", "old", "river", "quickly", "man", "gave", "book", "to", "her", "small", "house", "ran", "and",
];

/// Random projective-ish trees: each word attaches to a recent word.
pub fn synthetic_treebank(n: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<AnnotatedSentence> {
    let mut rng = rng_for(seed, &["treebank"]);
    (0..n)
        .map(|s| {
            let len = rng.random_range(min_len..=max_len);
            let words: Vec<String> = (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect();
            let root = rng.random_range(0..len);
            // parent[i] for i != root: a word already in the tree, biased to neighbours
            let mut order: Vec<usize> = vec![root];
            let mut heads = vec![0usize; len];
            let mut remaining: Vec<usize> = (0..len).filter(|&i| i != root).collect();
            while !remaining.is_empty() {
                let pick = rng.random_range(0..remaining.len());
                let w = remaining.swap_remove(pick);
                let head = *order
                    .iter()
                    .min_by_key(|&&h| (h.abs_diff(w), h))
                    .filter(|_| rng.random_bool(0.6))
                    .unwrap_or(&order[rng.random_range(0..order.len())]);
                heads[w] = head + 1;
                order.push(w);
            }
            AnnotatedSentence::new(sentence_id(s), s, words, heads).expect("generated tree is valid")
        })
        .collect()
}

/// Directory / item name of treebank sentence `index` in an activation root.
pub fn sentence_id(index: usize) -> String {
    format!("sent_{index:05}")
}

// ---- planted metric ----

/// Gaussian embeddings with distances defined by a hidden rank-`rank` map.
pub struct PlantedMetric {
    /// `B*`, row-major `[rank, hidden_dim]`.
    pub b_star: Vec<f64>,
    pub train: Vec<TrainingSentence>,
    pub test_vectors: Vec<Vec<Vec<f64>>>,
    /// MST of `B*` distances for each test sentence.
    pub test_trees: Vec<Vec<Edge>>,
}

pub fn planted_metric(n_train: usize, n_test: usize, n_words: usize, hidden_dim: usize, rank: usize, seed: u64) -> PlantedMetric {
    let mut rng = rng_for(seed, &["planted"]);
    let scale = 1.0 / (hidden_dim as f64).sqrt();
    let b_star: Vec<f64> = (0..rank * hidden_dim).map(|_| gaussian(&mut rng) * scale).collect();
    let project = |v: &[f64]| -> Vec<f64> {
        (0..rank)
            .map(|r| (0..hidden_dim).map(|c| b_star[r * hidden_dim + c] * v[c]).sum())
            .collect()
    };
    let sentence = |rng: &mut ChaCha8Rng| -> (Vec<Vec<f64>>, DistanceMatrix) {
        let vectors: Vec<Vec<f64>> = (0..n_words)
            .map(|_| (0..hidden_dim).map(|_| gaussian(rng)).collect())
            .collect();
        let projected: Vec<Vec<f64>> = vectors.iter().map(|v| project(v)).collect();
        let dist = DistanceMatrix::from_fn(n_words, |i, j| {
            projected[i].iter().zip(&projected[j]).map(|(a, b)| (a - b) * (a - b)).sum()
        });
        (vectors, dist)
    };
    let train = (0..n_train)
        .map(|_| {
            let (vectors, target) = sentence(&mut rng);
            TrainingSentence { vectors, target }
        })
        .collect();
    let mut test_vectors = Vec::new();
    let mut test_trees = Vec::new();
    for _ in 0..n_test {
        let (vectors, dist) = sentence(&mut rng);
        test_trees.push(decode_mst(&dist).expect("valid distances"));
        test_vectors.push(vectors);
    }
    PlantedMetric {
        b_star,
        train,
        test_vectors,
        test_trees,
    }
}

// ---- synthetic model ----

/// Whitespace words → tokens. Trailing punctuation becomes its own token and
/// words longer than six characters split after the fourth.
pub fn tokenize(words: &[&str]) -> (Vec<String>, Vec<usize>) {
    let mut tokens = Vec::new();
    let mut word_of_token = Vec::new();
    for (w, word) in words.iter().enumerate() {
        let core = word.trim_end_matches([',', '.', '?', '!']);
        let punct = &word[core.len()..];
        let mut push = |t: &str| {
            tokens.push(t.to_string());
            word_of_token.push(w);
        };
        if core.is_empty() {
            push(word);
            continue;
        }
        if core.chars().count() > 6 {
            let cut = core.char_indices().nth(4).map(|(i, _)| i).unwrap();
            push(&core[..cut]);
            push(&core[cut..]);
        } else {
            push(core);
        }
        if !punct.is_empty() {
            push(punct);
        }
    }
    (tokens, word_of_token)
}

fn spans(word_of_token: &[usize], word: usize) -> Option<TokenSpan> {
    let start = word_of_token.iter().position(|&w| w == word)?;
    let end = word_of_token.iter().rposition(|&w| w == word)? + 1;
    Some(TokenSpan::new(start, end))
}

/// A bundle held in memory, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub manifest: BundleManifest,
    pub activations: PrefixActivations,
}

impl SyntheticBundle {
    /// Prefix 1 of the hunting example from a tiny causal model.
    pub fn small(seed: u64) -> Self {
        let model = SyntheticModel {
            n_layers: 2,
            n_heads: 2,
            hidden_dim: 8,
            signal_dim: 4,
            seed,
            ..SyntheticModel::default()
        };
        model
            .item_bundle(&example_item(), Variant::CommaAbsent, 1)
            .expect("small bundle")
    }
}

/// Writes manifest and whichever payloads are present.
pub fn write_bundle(dir: &Path, bundle: &SyntheticBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest + "\n").map_err(|e| Error::io(&path, e))?;
    let a = &bundle.activations;
    let write = |file: &str, values: &[f32]| {
        let path = dir.join(file);
        write_f32_file(&path, values).map_err(|e| Error::io(&path, e))
    };
    if let Some(h) = &a.hidden {
        write(HIDDEN_FILE, h.data())?;
    }
    if let Some(t) = &a.attention {
        write(ATTN_FILE, t.data())?;
    }
    if let Some(lp) = &a.token_logprob {
        write(LOGPROB_FILE, lp)?;
    }
    if let Some(ans) = &a.answer {
        let path = dir.join(ANSWER_FILE);
        let text = serde_json::to_string_pretty(ans).expect("answer serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Probability that the planted parse attaches the NP correctly, by variant
/// and prefix (4 or 5). Monotone in the prefix, higher with the comma.
const CORRECT_RATE: [[f64; 2]; 2] = [[0.15, 0.25], [0.45, 0.55]];

/// Mean misinterpretation probability per prefix before item offsets.
const MISREAD_CURVE: [[f64; N_CHUNKS]; 2] = [[0.55, 0.70, 0.75, 0.62, 0.60], [0.55, 0.70, 0.75, 0.42, 0.38]];

/// A toy causal language model with planted structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pub model_id: String,
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_dim: usize,
    /// Leading dimensions that carry the tree embedding.
    pub signal_dim: usize,
    /// Standard deviation of the noise in the other dimensions.
    pub noise: f64,
    pub with_logprobs: bool,
    pub seed: u64,
}

impl Default for SyntheticModel {
    fn default() -> Self {
        SyntheticModel {
            model_id: "synthetic-lm".into(),
            n_layers: 4,
            n_heads: 4,
            hidden_dim: 32,
            signal_dim: 16,
            noise: 0.3,
            with_logprobs: true,
            seed: 0,
        }
    }
}

fn variant_row(v: Variant) -> usize {
    match v {
        Variant::CommaAbsent => 0,
        Variant::CommaPresent => 1,
    }
}

impl SyntheticModel {
    /// Strength of the tree signal in layer `l` (0 is the embedding layer):
    /// zero at the embeddings, peaking in the middle of the stack.
    pub fn signal_strength(&self, layer: usize) -> f64 {
        (std::f64::consts::PI * layer as f64 / (self.n_layers + 1) as f64).sin()
    }

    /// Whether the planted parse of this prefix attaches the NP to verb2.
    pub fn parses_correctly(&self, item: &GardenPathItem, variant: Variant, prefix_index: usize) -> bool {
        if prefix_index < 4 {
            return false;
        }
        let u: f64 = rng_for(self.seed, &["attach", &self.model_id, item.id(), variant.as_str()]).random();
        u < CORRECT_RATE[variant_row(variant)][prefix_index - 4]
    }

    fn hidden(&self, rng: &mut ChaCha8Rng, n_words: usize, edges: &[Edge], word_of_token: &[usize]) -> Result<Tensor> {
        if edges.len() > self.signal_dim {
            return Err(Error::Analysis(format!(
                "{} tree edges do not fit a {}-dimensional signal subspace",
                edges.len(),
                self.signal_dim
            )));
        }
        // orthonormal edge directions (Gram–Schmidt on Gaussian draws)
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(edges.len());
        while basis.len() < edges.len() {
            let mut v: Vec<f64> = (0..self.signal_dim).map(|_| gaussian(rng)).collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        // position of each word = sum of edge vectors on its path from word 0
        let mut pos = vec![vec![0.0; self.signal_dim]; n_words];
        let mut seen = vec![false; n_words];
        let mut stack = vec![0usize];
        if n_words > 0 {
            seen[0] = true;
        }
        while let Some(u) = stack.pop() {
            for (e, edge) in edges.iter().enumerate() {
                let v = match *edge {
                    Edge(a, b) if a == u => b,
                    Edge(a, b) if b == u => a,
                    _ => continue,
                };
                if !seen[v] {
                    seen[v] = true;
                    pos[v] = pos[u].iter().zip(&basis[e]).map(|(x, y)| x + y).collect();
                    stack.push(v);
                }
            }
        }
        let t = word_of_token.len();
        let d = self.hidden_dim;
        let mut out = Tensor::zeros(vec![self.n_layers + 1, t, d]);
        let data = out.data_mut();
        for layer in 0..=self.n_layers {
            let alpha = self.signal_strength(layer);
            for (tok, &w) in word_of_token.iter().enumerate() {
                let row = &mut data[(layer * t + tok) * d..(layer * t + tok + 1) * d];
                for (c, x) in row.iter_mut().enumerate() {
                    *x = if c < self.signal_dim {
                        alpha * pos[w][c] + 0.02 * gaussian(rng)
                    } else {
                        self.noise * gaussian(rng)
                    } as f32;
                }
            }
        }
        Ok(out)
    }

    fn attention(&self, rng: &mut ChaCha8Rng, t: usize, roles: &RoleSpans, variant: Variant) -> Tensor {
        let mut out = Tensor::zeros(vec![self.n_layers, self.n_heads, t, t]);
        let present = variant == Variant::CommaPresent;
        for layer in 0..self.n_layers {
            for head in 0..self.n_heads {
                for i in 0..t {
                    let mut logits: Vec<f64> = (0..=i).map(|_| gaussian(rng)).collect();
                    let in_span = |s: Option<TokenSpan>, x: usize| s.is_some_and(|s| s.tokens().contains(&x));
                    // planted heads: last layer head 0 links verb2 to the NP,
                    // first layer head 1 links the NP to verb1
                    if layer + 1 == self.n_layers && head == 0 && in_span(roles.verb2, i) {
                        for (j, l) in logits.iter_mut().enumerate() {
                            if in_span(roles.np_head, j) {
                                *l += if present { 5.0 } else { 2.5 };
                            }
                        }
                    }
                    if layer == 0 && head == 1 % self.n_heads && in_span(roles.np_head, i) {
                        for (j, l) in logits.iter_mut().enumerate() {
                            if in_span(roles.verb1, j) {
                                *l += if present { 1.0 } else { 3.5 };
                            }
                        }
                    }
                    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                    let z: f64 = exp.iter().sum();
                    for (j, e) in exp.iter().enumerate() {
                        out.set(&[layer, head, i, j], (e / z) as f32);
                    }
                }
            }
        }
        out
    }

    /// Natural-log token probabilities for the full sentence of a variant;
    /// shorter prefixes use a leading slice, so passes agree on shared tokens.
    fn full_logprobs(&self, item: &GardenPathItem, variant: Variant) -> Vec<f32> {
        let full = item.render(variant).full_text;
        let words: Vec<&str> = full.split_whitespace().collect();
        let (tokens, word_of_token) = tokenize(&words);
        let mut rng = rng_for(self.seed, &["logprob", &self.model_id, item.id(), variant.as_str()]);
        let verb2 = item.gold_roles().verb2_word;
        tokens
            .iter()
            .zip(&word_of_token)
            .map(|(tok, &w)| {
                let mut bits = 2.0 + 4.0 * rng.random::<f64>();
                if tok == "," {
                    bits = 3.0;
                }
                if w == verb2 {
                    bits += if variant == Variant::CommaAbsent { 6.0 } else { 2.0 };
                }
                (-bits * std::f64::consts::LN_2) as f32
            })
            .collect()
    }

    fn answer(&self, item: &GardenPathItem, variant: Variant, prefix_index: usize) -> AnswerProbs {
        let mut item_rng = rng_for(self.seed, &["answer", &self.model_id, item.id(), variant.as_str()]);
        let offset = 0.15 * gaussian(&mut item_rng);
        let mut rng = rng_for(
            self.seed,
            &["answer", &self.model_id, item.id(), variant.as_str(), &prefix_index.to_string()],
        );
        let m = (MISREAD_CURVE[variant_row(variant)][prefix_index - 1] + offset + 0.02 * gaussian(&mut rng)).clamp(0.02, 0.98);
        let mass = 0.5 + 0.3 * rng.random::<f64>();
        let c = (1.0 - m + 0.05 * gaussian(&mut rng)).clamp(0.02, 0.98);
        let mass2 = 0.5 + 0.3 * rng.random::<f64>();
        AnswerProbs {
            p_yes: m * mass,
            p_no: (1.0 - m) * mass,
            q_correct: Some(YesNo {
                p_yes: c * mass2,
                p_no: (1.0 - c) * mass2,
            }),
        }
    }

    fn manifest(&self, item_id: &str, variant: Variant, prefix_index: usize, tokens: Vec<String>, word_of_token: Vec<usize>) -> BundleManifest {
        let t = tokens.len();
        BundleManifest {
            model_id: self.model_id.clone(),
            item_id: item_id.into(),
            variant,
            prefix_index,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            hidden_dim: self.hidden_dim,
            causal: true,
            tokens,
            word_of_token,
            role_token_spans: RoleSpans::default(),
            role_words: None,
            shapes: Shapes {
                hidden: Some(vec![self.n_layers + 1, t, self.hidden_dim]),
                attn: None,
                token_logprob: None,
            },
            payload: Payload {
                hidden: true,
                attn: false,
                token_logprob: false,
                answer: false,
            },
            revision: Some(format!("synthetic-seed-{}", self.seed)),
        }
    }

    /// Bundle for one prefix of one stimulus variant.
    pub fn item_bundle(&self, item: &GardenPathItem, variant: Variant, prefix_index: usize) -> Result<SyntheticBundle> {
        let rendered = item.render(variant);
        let text = rendered
            .prefix(prefix_index)
            .ok_or_else(|| Error::Analysis(format!("prefix {prefix_index} out of range")))?;
        let words: Vec<&str> = text.split_whitespace().collect();
        let (tokens, word_of_token) = tokenize(&words);
        let t = tokens.len();
        let roles = item.gold_roles();
        let role_token_spans = RoleSpans {
            verb1: spans(&word_of_token, roles.verb1_word),
            np_head: spans(&word_of_token, roles.np_head_word),
            verb2: spans(&word_of_token, roles.verb2_word),
        };
        let mut rng = rng_for(
            self.seed,
            &["bundle", &self.model_id, item.id(), variant.as_str(), &prefix_index.to_string()],
        );
        let correct = self.parses_correctly(item, variant, prefix_index);
        let edges = item_tree(item, prefix_index, correct);
        let hidden = self.hidden(&mut rng, words.len(), &edges, &word_of_token)?;
        let attention = self.attention(&mut rng, t, &role_token_spans, variant);
        let token_logprob = self.with_logprobs.then(|| self.full_logprobs(item, variant)[..t].to_vec());

        let mut manifest = self.manifest(item.id(), variant, prefix_index, tokens, word_of_token);
        manifest.role_token_spans = role_token_spans;
        manifest.role_words = Some(RoleWords {
            verb1: roles.verb1_word,
            np_head: roles.np_head_word,
            verb2: roles.verb2_word,
        });
        manifest.shapes.attn = Some(vec![self.n_layers, self.n_heads, t, t]);
        manifest.shapes.token_logprob = token_logprob.as_ref().map(|_| vec![t]);
        manifest.payload = Payload {
            hidden: true,
            attn: true,
            token_logprob: token_logprob.is_some(),
            answer: true,
        };
        Ok(SyntheticBundle {
            manifest,
            activations: PrefixActivations {
                hidden: Some(hidden),
                attention: Some(attention),
                token_logprob,
                answer: Some(self.answer(item, variant, prefix_index)),
            },
        })
    }

    /// Hidden states only, for probe training on a treebank sentence.
    pub fn sentence_bundle(&self, sentence: &AnnotatedSentence) -> Result<SyntheticBundle> {
        let words: Vec<&str> = sentence.words.iter().map(String::as_str).collect();
        let (tokens, word_of_token) = tokenize(&words);
        let id = &sentence.tree.sentence_id;
        let mut rng = rng_for(self.seed, &["sentence", &self.model_id, id]);
        let hidden = self.hidden(&mut rng, words.len(), sentence.tree.edges(), &word_of_token)?;
        Ok(SyntheticBundle {
            manifest: self.manifest(id, Variant::CommaAbsent, N_CHUNKS, tokens, word_of_token),
            activations: PrefixActivations {
                hidden: Some(hidden),
                ..PrefixActivations::default()
            },
        })
    }

    /// Writes every (item, variant, prefix) bundle under `root`; returns the count.
    pub fn write_corpus_bundles(&self, root: &Path, items: &[GardenPathItem]) -> Result<usize> {
        let mut n = 0;
        for item in items {
            for variant in Variant::ALL {
                for k in 1..=N_CHUNKS {
                    let dir = root.join(item.id()).join(variant.as_str()).join(format!("prefix_{k}"));
                    write_bundle(&dir, &self.item_bundle(item, variant, k)?)?;
                    n += 1;
                }
            }
        }
        Ok(n)
    }

    /// Writes `root/sent_XXXXX/` for each treebank sentence, in order.
    pub fn write_treebank_bundles(&self, root: &Path, sentences: &[AnnotatedSentence]) -> Result<usize> {
        for (i, s) in sentences.iter().enumerate() {
            write_bundle(&root.join(sentence_id(i)), &self.sentence_bundle(s)?)?;
        }
        Ok(sentences.len())
    }
}

/// Paths of a complete synthetic workspace.
#[derive(Debug, Clone)]
pub struct SyntheticWorkspace {
    pub corpus: PathBuf,
    pub treebank: PathBuf,
    pub bundle_root: PathBuf,
    pub treebank_activations: PathBuf,
}

/// Corpus, treebank, and bundles for both under `dir`.
pub fn write_synthetic_workspace(dir: &Path, model: &SyntheticModel, n_items: usize, n_sentences: usize) -> Result<SyntheticWorkspace> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let items = synthetic_corpus(n_items, model.seed);
    let corpus = dir.join("corpus.jsonl");
    let mut buf = Vec::new();
    crate::corpus::write_corpus(&items, &mut buf).map_err(|e| Error::io(&corpus, e))?;
    std::fs::write(&corpus, buf).map_err(|e| Error::io(&corpus, e))?;

    let sentences = synthetic_treebank(n_sentences, 4, 15, model.seed);
    let treebank = dir.join("treebank.conllu");
    std::fs::write(&treebank, crate::treebank::write_treebank(&sentences)).map_err(|e| Error::io(&treebank, e))?;

    let ws = SyntheticWorkspace {
        corpus,
        treebank,
        bundle_root: dir.join("bundles").join(&model.model_id),
        treebank_activations: dir.join("treebank_activations").join(&model.model_id),
    };
    model.write_corpus_bundles(&ws.bundle_root, &items)?;
    model.write_treebank_bundles(&ws.treebank_activations, &sentences)?;
    Ok(ws)
}

//! Gold dependency trees for probe supervision, read from a CoNLL-U subset
//! (ID, FORM and HEAD columns; other columns are ignored).

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{DistanceMatrix, Edge};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreebankError {
    #[error("sentence {sentence}, line {line}: {message}")]
    Format {
        sentence: usize,
        line: usize,
        message: String,
    },
    #[error("sentence {sentence}: no root")]
    NoRoot { sentence: usize },
    #[error("sentence {sentence}: multiple roots (words {first} and {second})")]
    MultipleRoots {
        sentence: usize,
        first: usize,
        second: usize,
    },
    #[error("sentence {sentence}: word {word} has dangling head {head}")]
    DanglingHead {
        sentence: usize,
        word: usize,
        head: usize,
    },
    #[error("sentence {sentence}: cycle through word {word}")]
    Cycle { sentence: usize, word: usize },
    #[error("tree over {n_words} words is not a spanning tree: {message}")]
    NotATree { n_words: usize, message: String },
}

/// Undirected gold tree with its pairwise path-length matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTree {
    pub sentence_id: String,
    n_words: usize,
    edges: Vec<Edge>,
    path_lengths: Vec<u32>,
}

impl GoldTree {
    /// Builds a tree from undirected edges over `0..n_words`.
    pub fn from_edges(sentence_id: impl Into<String>, n_words: usize, edges: &[Edge]) -> Result<Self, TreebankError> {
        let not_tree = |message: String| TreebankError::NotATree { n_words, message };
        if n_words == 0 {
            return Err(not_tree("no words".into()));
        }
        if edges.len() != n_words - 1 {
            return Err(not_tree(format!("{} edges, expected {}", edges.len(), n_words - 1)));
        }
        let mut normalized: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            if e.0 == e.1 || e.0.max(e.1) >= n_words {
                return Err(not_tree(format!("invalid edge {e:?}")));
            }
            normalized.push(Edge::new(e.0, e.1));
        }
        normalized.sort();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(not_tree("duplicate edge".into()));
        }
        let path_lengths = all_pairs_path_lengths(n_words, &normalized);
        if path_lengths.contains(&u32::MAX) {
            return Err(not_tree("disconnected".into()));
        }
        Ok(GoldTree {
            sentence_id: sentence_id.into(),
            n_words,
            edges: normalized,
            path_lengths,
        })
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    /// Edges as sorted `(min, max)` pairs.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn path_length(&self, i: usize, j: usize) -> u32 {
        self.path_lengths[i * self.n_words + j]
    }

    /// Path lengths as a real-valued distance target.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::from_fn(self.n_words, |i, j| self.path_length(i, j) as f64)
    }
}

/// BFS from every node; unreachable pairs are `u32::MAX`.
pub(crate) fn all_pairs_path_lengths(n: usize, edges: &[Edge]) -> Vec<u32> {
    let adjacency = adjacency(n, edges);
    let mut out = vec![u32::MAX; n * n];
    for source in 0..n {
        let row = &mut out[source * n..(source + 1) * n];
        bfs(&adjacency, source, row);
    }
    out
}

pub(crate) fn adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.0].push(e.1);
        adj[e.1].push(e.0);
    }
    adj
}

pub(crate) fn bfs(adjacency: &[Vec<usize>], source: usize, dist: &mut [u32]) {
    dist.fill(u32::MAX);
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

/// A sentence from the treebank. `heads[i]` is 0 for the root, otherwise the
/// 1-based index of word `i`'s head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub words: Vec<String>,
    pub heads: Vec<usize>,
    pub tree: GoldTree,
}

impl AnnotatedSentence {
    pub fn new(id: impl Into<String>, index: usize, words: Vec<String>, heads: Vec<usize>) -> Result<Self, TreebankError> {
        let n = heads.len();
        let mut root = None;
        for (i, &h) in heads.iter().enumerate() {
            if h == 0 {
                if let Some(first) = root {
                    return Err(TreebankError::MultipleRoots {
                        sentence: index,
                        first: first + 1,
                        second: i + 1,
                    });
                }
                root = Some(i);
            } else if h > n || h == i + 1 {
                return Err(TreebankError::DanglingHead {
                    sentence: index,
                    word: i + 1,
                    head: h,
                });
            }
        }
        let Some(_) = root else {
            return Err(TreebankError::NoRoot { sentence: index });
        };
        // every word must reach the root by following heads
        for start in 0..n {
            let mut cur = start;
            for _ in 0..=n {
                if heads[cur] == 0 {
                    break;
                }
                cur = heads[cur] - 1;
            }
            if heads[cur] != 0 {
                return Err(TreebankError::Cycle {
                    sentence: index,
                    word: start + 1,
                });
            }
        }
        let edges: Vec<Edge> = heads
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != 0)
            .map(|(i, &h)| Edge::new(i, h - 1))
            .collect();
        let tree = GoldTree::from_edges(id, n, &edges)?;
        Ok(AnnotatedSentence { words, heads, tree })
    }
}

pub fn load_treebank(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_treebank(&text)?)
}

pub fn parse_treebank(text: &str) -> Result<Vec<AnnotatedSentence>, TreebankError> {
    let mut sentences = Vec::new();
    let mut words = Vec::new();
    let mut heads = Vec::new();
    let mut sent_id: Option<String> = None;

    let flush = |words: &mut Vec<String>, heads: &mut Vec<usize>, sent_id: &mut Option<String>, sentences: &mut Vec<AnnotatedSentence>| {
        if words.is_empty() {
            *sent_id = None;
            return Ok(());
        }
        let index = sentences.len();
        let id = sent_id.take().unwrap_or_else(|| format!("s{}", index + 1));
        sentences.push(AnnotatedSentence::new(id, index, std::mem::take(words), std::mem::take(heads))?);
        Ok(())
    };

    for (line_idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() {
            flush(&mut words, &mut heads, &mut sent_id, &mut sentences)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                let id = id.trim_start().trim_start_matches('=').trim();
                if !id.is_empty() {
                    sent_id = Some(id.to_string());
                }
            }
            continue;
        }
        let format_err = |message: String| TreebankError::Format {
            sentence: sentences.len(),
            line: line_idx + 1,
            message,
        };
        let cols: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        let id_col = cols[0];
        if id_col.contains('-') || id_col.contains('.') {
            log::warn!("line {}: skipping multi-word token or empty node {id_col}", line_idx + 1);
            continue;
        }
        let id: usize = id_col
            .parse()
            .map_err(|_| format_err(format!("invalid ID {id_col:?}")))?;
        if id != words.len() + 1 {
            return Err(format_err(format!("expected ID {}, found {id}", words.len() + 1)));
        }
        let (form, head) = match cols.len() {
            n if n >= 7 => (cols[1], cols[6]),
            3 => (cols[1], cols[2]),
            n => return Err(format_err(format!("expected 3 or at least 7 columns, found {n}"))),
        };
        let head: usize = head
            .parse()
            .map_err(|_| format_err(format!("invalid HEAD {head:?}")))?;
        words.push(form.to_string());
        heads.push(head);
    }
    flush(&mut words, &mut heads, &mut sent_id, &mut sentences)?;
    Ok(sentences)
}

/// Renders sentences in the three-column subset format.
pub fn write_treebank(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# sent_id = {}", s.tree.sentence_id);
        for (i, (w, h)) in s.words.iter().zip(&s.heads).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, w, h);
        }
        out.push('\n');
    }
    out
}

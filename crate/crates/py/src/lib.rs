//! Python bindings for the garden-path probing engine.
//!
//! Values cross the boundary as plain Python types: edges are `(a, b)` tuples,
//! matrices and vectors are nested lists of floats.

use std::path::PathBuf;

use gpprobe::attention::{head_sensitivity, SpanReduction};
use gpprobe::fixtures::{self, SyntheticModel};
use gpprobe::probe::{self, TrainingSentence};
use gpprobe::{DistanceMatrix, Edge, GardenPathItem, GoldRoles, GoldTree, TrainConfig, Variant};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: impl Into<gpprobe::Error>) -> PyErr {
    match e.into() {
        e @ gpprobe::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn variant(name: &str) -> PyResult<Variant> {
    Variant::parse(name).ok_or_else(|| value_err(format!("unknown variant {name:?}; use comma_absent or comma_present")))
}

fn edges(pairs: Vec<(usize, usize)>) -> Vec<Edge> {
    pairs.into_iter().map(|(a, b)| Edge::new(a, b)).collect()
}

fn pairs(edges: &[Edge]) -> Vec<(usize, usize)> {
    edges.iter().map(|e| (e.0, e.1)).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DistanceMatrix> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(value_err(format!("distance matrix is not square: row of {} in {n} rows", r.len())));
    }
    DistanceMatrix::new(n, rows.concat()).map_err(err)
}

fn rows(m: &DistanceMatrix) -> Vec<Vec<f64>> {
    (0..m.len()).map(|i| (0..m.len()).map(|j| m.get(i, j)).collect()).collect()
}

/// One corpus item.
#[pyclass(name = "Item", frozen)]
struct PyItem(GardenPathItem);

#[pymethods]
impl PyItem {
    #[getter]
    fn id(&self) -> &str {
        self.0.id()
    }

    #[getter]
    fn verb_class(&self) -> &'static str {
        self.0.verb_class().as_str()
    }

    #[getter]
    fn chunks(&self) -> Vec<String> {
        self.0.chunks().to_vec()
    }

    #[getter]
    fn sentence(&self) -> String {
        self.0.sentence()
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.0.words().into_iter().map(String::from).collect()
    }

    /// `(verb1, np_head, verb2)` word indices.
    #[getter]
    fn roles(&self) -> (usize, usize, usize) {
        let r = self.0.gold_roles();
        (r.verb1_word, r.np_head_word, r.verb2_word)
    }

    fn prefix_word_count(&self, prefix_index: usize) -> usize {
        self.0.prefix_word_count(prefix_index)
    }

    /// The five cumulative prefixes of one variant.
    fn prefixes(&self, variant_name: &str) -> PyResult<Vec<String>> {
        let v = self.0.render(variant(variant_name)?);
        Ok((1..=gpprobe::N_CHUNKS).filter_map(|k| v.prefix(k).map(String::from)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Item({:?}, {:?})", self.0.id(), self.0.sentence())
    }
}

#[pyfunction]
fn load_corpus(path: PathBuf) -> PyResult<Vec<PyItem>> {
    Ok(gpprobe::load_corpus(path).map_err(err)?.into_iter().map(PyItem).collect())
}

/// Full text of both variants: `(comma_absent, comma_present)`.
#[pyfunction]
fn render_variants(item: &PyItem) -> (String, String) {
    let (a, p) = gpprobe::corpus::render_variants(&item.0);
    let full = |v: gpprobe::StimulusVariant| v.prefix(gpprobe::N_CHUNKS).unwrap_or_default().to_string();
    (full(a), full(p))
}

#[pyfunction]
fn example_item() -> PyItem {
    PyItem(fixtures::example_item())
}

#[pyfunction]
fn decode_mst(distances: Vec<Vec<f64>>) -> PyResult<Vec<(usize, usize)>> {
    Ok(pairs(&probe::decode_mst(&matrix(distances)?).map_err(err)?))
}

#[pyfunction]
fn tree_weight(distances: Vec<Vec<f64>>, tree: Vec<(usize, usize)>) -> PyResult<f64> {
    Ok(probe::tree_weight(&matrix(distances)?, &edges(tree)))
}

/// "correct", "misinterpretation" or "other".
#[pyfunction]
fn judge_attachment(n_words: usize, tree: Vec<(usize, usize)>, verb1: usize, np_head: usize, verb2: usize) -> &'static str {
    let roles = GoldRoles {
        verb1_word: verb1,
        np_head_word: np_head,
        verb2_word: verb2,
    };
    probe::judge_attachment(n_words, &edges(tree), &roles).as_str()
}

#[pyfunction]
fn uuas(predicted: Vec<(usize, usize)>, gold: Vec<(usize, usize)>) -> f64 {
    probe::uuas_edges(&edges(predicted), &edges(gold))
}

#[pyclass(name = "TTest", frozen, get_all)]
struct PyTTest {
    test_name: String,
    t: f64,
    df: f64,
    p: f64,
    mean_difference: f64,
    n: usize,
}

#[pymethods]
impl PyTTest {
    fn __repr__(&self) -> String {
        format!("TTest({}, t={:.4}, df={:.2}, p={:.4}, n={})", self.test_name, self.t, self.df, self.p, self.n)
    }
}

impl From<gpprobe::StatsResult> for PyTTest {
    fn from(r: gpprobe::StatsResult) -> Self {
        PyTTest {
            test_name: r.test_name,
            t: r.t,
            df: r.df,
            p: r.p,
            mean_difference: r.mean_difference,
            n: r.n,
        }
    }
}

#[pyfunction]
fn paired_t(x: Vec<f64>, y: Vec<f64>) -> PyResult<PyTTest> {
    gpprobe::stats::paired_t(&x, &y).map(PyTTest::from).map_err(err)
}

#[pyfunction]
fn welch_t(x: Vec<f64>, y: Vec<f64>) -> PyResult<PyTTest> {
    gpprobe::stats::welch_t(&x, &y).map(PyTTest::from).map_err(err)
}

/// Two-sided tail probability of Student's t.
#[pyfunction]
fn t_sf(t: f64, df: f64) -> PyResult<f64> {
    gpprobe::stats::t_sf(t, df).map_err(err)
}

/// A validated activation bundle.
#[pyclass(name = "Bundle", frozen)]
struct PyBundle(gpprobe::Bundle);

#[pymethods]
impl PyBundle {
    #[getter]
    fn model_id(&self) -> &str {
        &self.0.manifest.model_id
    }

    #[getter]
    fn item_id(&self) -> &str {
        &self.0.manifest.item_id
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.0.manifest.variant.as_str()
    }

    #[getter]
    fn prefix_index(&self) -> usize {
        self.0.manifest.prefix_index
    }

    #[getter]
    fn tokens(&self) -> Vec<String> {
        self.0.manifest.tokens.clone()
    }

    #[getter]
    fn n_layers(&self) -> usize {
        self.0.manifest.n_layers
    }

    #[getter]
    fn n_heads(&self) -> usize {
        self.0.manifest.n_heads
    }

    #[getter]
    fn hidden_dim(&self) -> usize {
        self.0.manifest.hidden_dim
    }

    /// `[layer][head]` sensitivity to the correct attachment.
    #[pyo3(signature = (reduction = "max"))]
    fn head_sensitivity(&self, reduction: &str) -> PyResult<Vec<Vec<f64>>> {
        let r = match reduction {
            "max" => SpanReduction::Max,
            "mean" => SpanReduction::Mean,
            other => return Err(value_err(format!("unknown reduction {other:?}; use max or mean"))),
        };
        let m = head_sensitivity(&self.0, r).map_err(err)?;
        let (l, h) = (self.0.manifest.n_layers, self.0.manifest.n_heads);
        Ok((0..l).map(|layer| (0..h).map(|head| m.get(layer, head)).collect()).collect())
    }

    /// Word vectors at `layer`, pooled over each word's tokens.
    fn word_vectors(&self, layer: usize) -> PyResult<Vec<Vec<f64>>> {
        let hidden = self.0.hidden().map_err(err)?;
        probe::pool_word_vectors(&self.0.manifest, hidden, layer).map_err(err)
    }

    fn __repr__(&self) -> String {
        let m = &self.0.manifest;
        format!("Bundle({}, {}, {}, prefix {})", m.model_id, m.item_id, m.variant.as_str(), m.prefix_index)
    }
}

#[pyfunction]
fn read_bundle(path: PathBuf) -> PyResult<PyBundle> {
    gpprobe::read_bundle(path).map(PyBundle).map_err(err)
}

/// A trained structural probe.
#[pyclass(name = "Probe", frozen)]
struct PyProbe(gpprobe::StructuralProbe);

#[pymethods]
impl PyProbe {
    /// Trains on sentences given as word vectors plus gold tree edges.
    #[staticmethod]
    #[pyo3(signature = (vectors, trees, layer = 0, rank = 64, lr = 1e-3, epochs = 40, batch_size = 20, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        vectors: Vec<Vec<Vec<f64>>>,
        trees: Vec<Vec<(usize, usize)>>,
        layer: usize,
        rank: usize,
        lr: f64,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<(PyProbe, Vec<f64>)> {
        if vectors.len() != trees.len() {
            return Err(value_err(format!("{} vector sets but {} trees", vectors.len(), trees.len())));
        }
        let sentences = vectors
            .into_iter()
            .zip(trees)
            .enumerate()
            .map(|(i, (v, t))| {
                let tree = GoldTree::from_edges(format!("s{i}"), v.len(), &edges(t)).map_err(err)?;
                Ok(TrainingSentence::from_tree(v, &tree))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let config = TrainConfig {
            rank,
            learning_rate: lr,
            epochs,
            batch_size,
            seed,
        };
        let (p, report) = probe::train_probe(&sentences, layer, &config).map_err(err)?;
        Ok((PyProbe(p), report.epoch_losses))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PyProbe> {
        probe::read_checkpoint(path).map(PyProbe).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        probe::write_checkpoint(&self.0, path).map_err(err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn hidden_dim(&self) -> usize {
        self.0.hidden_dim()
    }

    #[getter]
    fn layer(&self) -> usize {
        self.0.layer()
    }

    /// Squared distance ‖B(h_i − h_j)‖².
    fn distance(&self, h_i: Vec<f64>, h_j: Vec<f64>) -> PyResult<f64> {
        self.0.distance(&h_i, &h_j).map_err(err)
    }

    fn distance_matrix(&self, vectors: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.0.distance_matrix(&vectors).map_err(err)?))
    }

    /// Minimum spanning tree of the probe distances.
    fn parse(&self, vectors: Vec<Vec<f64>>) -> PyResult<Vec<(usize, usize)>> {
        let d = self.0.distance_matrix(&vectors).map_err(err)?;
        Ok(pairs(&probe::decode_mst(&d).map_err(err)?))
    }

    /// `(tree edges, verdict)` for one prefix bundle of `item`.
    fn snapshot(&self, bundle: &PyBundle, item: &PyItem) -> PyResult<(Vec<(usize, usize)>, &'static str)> {
        let s = probe::extract_snapshot(&self.0, &bundle.0, &item.0).map_err(err)?;
        Ok((pairs(&s.edges), s.verdict.as_str()))
    }

    fn __repr__(&self) -> String {
        format!("Probe(rank={}, hidden_dim={}, layer={})", self.0.rank(), self.0.hidden_dim(), self.0.layer())
    }
}

/// Writes a synthetic corpus, treebank and bundle tree under `dir`.
///
/// Returns the paths as a dict with keys corpus, treebank, bundle_root and
/// treebank_activations.
#[pyfunction]
#[pyo3(signature = (dir, n_items = 24, n_sentences = 200, seed = 0))]
fn write_synthetic_workspace(dir: PathBuf, n_items: usize, n_sentences: usize, seed: u64) -> PyResult<Vec<(&'static str, PathBuf)>> {
    let model = SyntheticModel {
        seed,
        ..SyntheticModel::default()
    };
    let ws = fixtures::write_synthetic_workspace(&dir, &model, n_items, n_sentences).map_err(err)?;
    Ok(vec![
        ("corpus", ws.corpus),
        ("treebank", ws.treebank),
        ("bundle_root", ws.bundle_root),
        ("treebank_activations", ws.treebank_activations),
    ])
}

#[pymodule]
fn gpprobe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyItem>()?;
    m.add_class::<PyTTest>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyProbe>()?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(render_variants, m)?)?;
    m.add_function(wrap_pyfunction!(example_item, m)?)?;
    m.add_function(wrap_pyfunction!(decode_mst, m)?)?;
    m.add_function(wrap_pyfunction!(tree_weight, m)?)?;
    m.add_function(wrap_pyfunction!(judge_attachment, m)?)?;
    m.add_function(wrap_pyfunction!(uuas, m)?)?;
    m.add_function(wrap_pyfunction!(paired_t, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t, m)?)?;
    m.add_function(wrap_pyfunction!(t_sf, m)?)?;
    m.add_function(wrap_pyfunction!(read_bundle, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_workspace, m)?)?;
    Ok(())
}

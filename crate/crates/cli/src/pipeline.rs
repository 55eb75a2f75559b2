//! The analysis stages behind each subcommand.
//!
//! Stages read bundles through the core crate, fan out per item on the
//! current rayon pool and collect results back in corpus order, so the
//! worker count never changes an output byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gpprobe::attention::{aggregate_maps, difference_map, head_sensitivity, SpanReduction};
use gpprobe::bundle::{load_bundles, BundleError};
use gpprobe::interpret::{
    accuracy_summary, comma_effect_test, comma_effect_welch, mean_trajectory, pair_final_answers, trajectory,
    Question, TrajectoryPoint,
};
use gpprobe::probe::{
    correct_shift_percent, extract_snapshot, pool_word_vectors, read_checkpoint, select_layer, train_probe,
    write_checkpoint, LayerData, ParseTreeSnapshot, TrainingSentence,
};
use gpprobe::report::{self, ReportError, ShiftRow, StatsRow, SurprisalMeanRow, SurprisalRow, TrajectoryRow, VerdictRow};
use gpprobe::stats::{paired_t, welch_t, StatsError, StatsResult};
use gpprobe::surprisal::{chunk_surprisal, mean_chunk, SurprisalProfile};
use gpprobe::{
    load_corpus, load_treebank, read_bundle, Bundle, BundleFilter, GardenPathItem, Strictness, TrainConfig, Variant,
    Verdict, N_CHUNKS,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::LayerChoice;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gpprobe::Error),
    /// Bad flags, config or inputs that cannot be analysed.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_surprisal_unavailable(&self) -> bool {
        matches!(
            self,
            CliError::Core(gpprobe::Error::Bundle(BundleError::SurprisalUnavailable { .. }))
        )
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.into(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

/// Files one stage wrote for one model.
#[derive(Debug, Clone, Serialize)]
pub struct StageOutput {
    pub model: String,
    pub files: Vec<PathBuf>,
}

/// Items paired with their bundles, in corpus order.
struct Inputs {
    model_id: String,
    items: Vec<(GardenPathItem, Vec<Bundle>)>,
}

impl Inputs {
    fn model_dir(&self, analysis_root: &Path) -> PathBuf {
        analysis_root.join(report::model_dir_name(&self.model_id))
    }
}

fn load_inputs(bundle_root: &Path, corpus: &Path, prefix: Option<usize>, strictness: Strictness) -> Result<Inputs> {
    let corpus = load_corpus(corpus)?;
    if !bundle_root.is_dir() {
        return Err(CliError::Io {
            path: bundle_root.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "bundle root not found"),
        });
    }
    let mut filter = BundleFilter::all();
    if let Some(k) = prefix {
        filter = filter.prefix(k);
    }
    let loaded: Vec<Result<(GardenPathItem, Vec<Bundle>)>> = corpus
        .par_iter()
        .map(|item| {
            let bundles = load_bundles(bundle_root, &filter.clone().item(item.id()), strictness)?;
            let mut kept = Vec::with_capacity(bundles.len());
            for b in bundles {
                match b.check_item(item) {
                    Ok(()) => kept.push(b),
                    Err(e) if strictness == Strictness::Lenient => log::warn!("skipping bundle: {e}"),
                    Err(e) => return Err(gpprobe::Error::from(e).into()),
                }
            }
            Ok((item.clone(), kept))
        })
        .collect();

    let mut items = Vec::new();
    let mut model_id: Option<String> = None;
    for entry in loaded {
        let (item, bundles) = entry?;
        if bundles.is_empty() {
            let msg = format!("no bundles for item {} under {}", item.id(), bundle_root.display());
            if strictness == Strictness::Lenient {
                log::warn!("{msg}");
                continue;
            }
            return Err(CliError::Invalid(msg));
        }
        for b in &bundles {
            match &model_id {
                None => model_id = Some(b.manifest.model_id.clone()),
                Some(id) if *id != b.manifest.model_id => {
                    return Err(CliError::Invalid(format!(
                        "bundle root mixes models {id} and {}",
                        b.manifest.model_id
                    )))
                }
                Some(_) => {}
            }
        }
        items.push((item, bundles));
    }
    let model_id = model_id.ok_or_else(|| CliError::Invalid(format!("no bundles under {}", bundle_root.display())))?;
    log::info!("{model_id}: {} items from {}", items.len(), bundle_root.display());
    Ok(Inputs { model_id, items })
}

/// Runs `f` per item in parallel; lenient mode drops failing items.
fn per_item<T: Send>(
    inputs: &Inputs,
    strictness: Strictness,
    f: impl Fn(&GardenPathItem, &[Bundle]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<(String, Result<T>)> = inputs
        .items
        .par_iter()
        .map(|(item, bundles)| (item.id().to_string(), f(item, bundles)))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (id, r) in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) if strictness == Strictness::Lenient && e.exit_code() == 1 => {
                log::warn!("skipping item {id}: {e}")
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

// ---- validate-corpus ----

pub fn validate_corpus(corpus: &Path, bundle_root: Option<&Path>, strictness: Strictness) -> Result<String> {
    let items = load_corpus(corpus)?;
    let ot = items.iter().filter(|i| i.verb_class() == gpprobe::VerbClass::Ot).count();
    let mut summary = format!("{} items ({ot} OT, {} RAT)", items.len(), items.len() - ot);
    if let Some(root) = bundle_root {
        let inputs = load_inputs(root, corpus, None, strictness)?;
        let n: usize = inputs.items.iter().map(|(_, b)| b.len()).sum();
        summary.push_str(&format!("; {n} valid bundles for {}", inputs.model_id));
    }
    Ok(summary)
}

// ---- train-probe ----

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub treebank: PathBuf,
    pub activations: PathBuf,
    pub out: PathBuf,
    pub layer: LayerChoice,
    /// `None` means 64, capped at the hidden size.
    pub rank: Option<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub layer: usize,
    pub rank: usize,
    pub hidden_dim: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub config: TrainConfig,
    /// Dev UUAS per layer when the layer was chosen automatically.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_uuas: Option<Vec<(usize, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch_losses: Option<Vec<f64>>,
}

/// Sidecar with the training summary, next to the checkpoint.
pub fn train_summary_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    checkpoint.with_file_name(name)
}

pub fn train(opts: &TrainOptions, strictness: Strictness) -> Result<TrainSummary> {
    let sentences = load_treebank(&opts.treebank)?;
    // activations for a sentence live in a directory named after its sent_id
    let loaded: Vec<Result<Option<(usize, Bundle)>>> = sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.words.len() < 2 {
                return Ok(None);
            }
            let dir = opts.activations.join(&s.tree.sentence_id);
            let check = |b: Bundle| -> Result<Bundle> {
                if b.manifest.n_words() != s.words.len() {
                    return Err(CliError::Invalid(format!(
                        "{}: {} aligned words, treebank sentence has {}",
                        dir.display(),
                        b.manifest.n_words(),
                        s.words.len()
                    )));
                }
                b.hidden().map_err(gpprobe::Error::from)?;
                Ok(b)
            };
            match read_bundle(&dir).map_err(CliError::from).and_then(check) {
                Ok(b) => Ok(Some((i, b))),
                Err(e) if strictness == Strictness::Lenient => {
                    log::warn!("skipping sentence {}: {e}", s.tree.sentence_id);
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut usable = Vec::new();
    for r in loaded {
        if let Some(pair) = r? {
            usable.push(pair);
        }
    }
    if usable.is_empty() {
        return Err(CliError::Invalid("no usable treebank sentences".into()));
    }
    let first = &usable[0].1.manifest;
    let (n_layers, hidden_dim) = (first.n_layers, first.hidden_dim);
    if let Some((_, b)) = usable
        .iter()
        .find(|(_, b)| (b.manifest.n_layers, b.manifest.hidden_dim) != (n_layers, hidden_dim))
    {
        return Err(CliError::Invalid(format!(
            "{}: activations from a different model shape",
            b.path.display()
        )));
    }
    let rank = opts.rank.unwrap_or(64.min(hidden_dim));
    let config = TrainConfig {
        rank,
        learning_rate: opts.lr,
        epochs: opts.epochs,
        batch_size: opts.batch_size,
        seed: opts.seed,
    };
    let pool = |layer: usize| -> Result<Vec<Vec<Vec<f64>>>> {
        usable
            .par_iter()
            .map(|(_, b)| {
                let hidden = b.hidden().map_err(gpprobe::Error::from)?;
                pool_word_vectors(&b.manifest, hidden, layer).map_err(|e| gpprobe::Error::from(e).into())
            })
            .collect()
    };
    let gold: Vec<_> = usable.iter().map(|(i, _)| sentences[*i].tree.clone()).collect();

    let (probe, n_train, n_dev, dev_uuas, epoch_losses) = match opts.layer {
        LayerChoice::Fixed(layer) => {
            if layer > n_layers {
                return Err(CliError::Invalid(format!(
                    "layer {layer} out of range, activations have layers 0..={n_layers}"
                )));
            }
            let train: Vec<_> = pool(layer)?
                .into_iter()
                .zip(&gold)
                .map(|(v, t)| TrainingSentence::from_tree(v, t))
                .collect();
            let (probe, rep) = train_probe(&train, layer, &config).map_err(gpprobe::Error::from)?;
            (probe, train.len(), 0, None, Some(rep.epoch_losses))
        }
        LayerChoice::Auto => {
            if usable.len() < 2 {
                return Err(CliError::Invalid("layer sweep needs at least 2 sentences".into()));
            }
            // the last fifth of the treebank is the dev split
            let n_dev = (usable.len() / 5).max(1);
            let n_train = usable.len() - n_dev;
            let mut layers = Vec::with_capacity(n_layers + 1);
            for layer in 0..=n_layers {
                let mut vectors = pool(layer)?;
                let dev = vectors.split_off(n_train);
                let train = vectors
                    .into_iter()
                    .zip(&gold)
                    .map(|(v, t)| TrainingSentence::from_tree(v, t))
                    .collect();
                layers.push(LayerData { layer, train, dev });
            }
            let (probe, sweep) = select_layer(&layers, &gold[n_train..], &config).map_err(gpprobe::Error::from)?;
            (probe, n_train, n_dev, Some(sweep.dev_uuas), None)
        }
    };
    if let Some(parent) = opts.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.into(),
            source,
        })?;
    }
    write_checkpoint(&probe, &opts.out)?;
    let summary = TrainSummary {
        layer: probe.layer(),
        rank,
        hidden_dim,
        n_train,
        n_dev,
        config,
        dev_uuas,
        epoch_losses,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&train_summary_path(&opts.out), format!("{json}\n").as_bytes())?;
    log::info!("trained probe on layer {} ({n_train} sentences)", probe.layer());
    Ok(summary)
}

// ---- extract-trees ----

pub fn extract_trees(
    bundle_root: &Path,
    corpus: &Path,
    probe_path: &Path,
    analysis_root: &Path,
    strictness: Strictness,
) -> Result<StageOutput> {
    let probe = read_checkpoint(probe_path)?;
    let inputs = load_inputs(bundle_root, corpus, None, strictness)?;
    let per: Vec<Vec<ParseTreeSnapshot>> = per_item(&inputs, strictness, |item, bundles| {
        bundles
            .iter()
            .map(|b| extract_snapshot(&probe, b, item).map_err(CliError::from))
            .collect()
    })?;
    let snapshots: Vec<ParseTreeSnapshot> = per.into_iter().flatten().collect();
    let dir = inputs.model_dir(analysis_root);
    let model = &inputs.model_id;

    let mut jsonl = String::new();
    for s in &snapshots {
        jsonl.push_str(&serde_json::to_string(s).expect("snapshot serializes"));
        jsonl.push('\n');
    }
    let trees = dir.join(report::TREES_JSONL);
    write_file(&trees, jsonl.as_bytes())?;

    let verdicts = dir.join(report::VERDICTS_CSV);
    report::write_csv(&verdicts, &report::verdict_rows(model, &snapshots))?;

    let shift: Vec<ShiftRow> = Variant::ALL
        .into_iter()
        .flat_map(|variant| (1..=N_CHUNKS).map(move |chunk| (variant, chunk)))
        .map(|(variant, chunk)| {
            let found = correct_shift_percent(&snapshots, variant, chunk);
            ShiftRow {
                model: model.clone(),
                variant,
                chunk,
                percent: found.map(|(p, _)| p),
                n: found.map_or(0, |(_, n)| n),
            }
        })
        .collect();
    let shift_path = dir.join(report::SHIFT_CSV);
    report::write_csv(&shift_path, &shift)?;
    Ok(StageOutput {
        model: model.clone(),
        files: vec![trees, verdicts, shift_path],
    })
}

// ---- track-interpretation ----

pub fn track_interpretation(bundle_root: &Path, corpus: &Path, analysis_root: &Path, strictness: Strictness) -> Result<StageOutput> {
    let inputs = load_inputs(bundle_root, corpus, None, strictness)?;
    let has_correct = inputs
        .items
        .iter()
        .flat_map(|(_, b)| b)
        .all(|b| b.activations.answer.as_ref().is_some_and(|a| a.q_correct.is_some()));
    type Trajectories = BTreeMap<(Variant, Question), Vec<TrajectoryPoint>>;
    let per: Vec<Trajectories> = per_item(&inputs, strictness, |_, bundles| {
        let mut out = BTreeMap::new();
        for variant in Variant::ALL {
            let selected: Vec<&Bundle> = bundles.iter().filter(|b| b.manifest.variant == variant).collect();
            if selected.is_empty() {
                continue;
            }
            out.insert((variant, Question::Misinterpretation), trajectory(&selected, Question::Misinterpretation)?);
            if has_correct {
                out.insert((variant, Question::Correct), trajectory(&selected, Question::Correct)?);
            }
        }
        Ok(out)
    })?;
    if !has_correct {
        log::warn!("{}: some bundles lack probe (2) probabilities; tracking probe (1) only", inputs.model_id);
    }

    let model = &inputs.model_id;
    let dir = inputs.model_dir(analysis_root);
    let mut files = Vec::new();
    let questions: &[Question] = if has_correct {
        &[Question::Misinterpretation, Question::Correct]
    } else {
        &[Question::Misinterpretation]
    };
    let mut means = Vec::new();
    for &question in questions {
        let mut rows: Vec<TrajectoryRow> = Vec::new();
        for item in &per {
            for variant in Variant::ALL {
                if let Some(points) = item.get(&(variant, question)) {
                    rows.extend(report::trajectory_rows(model, points));
                }
            }
        }
        let path = dir.join(match question {
            Question::Misinterpretation => report::TRAJECTORY_CSV,
            Question::Correct => report::TRAJECTORY_CORRECT_CSV,
        });
        report::write_csv(&path, &rows)?;
        files.push(path);
        for variant in Variant::ALL {
            let trajs: Vec<Vec<TrajectoryPoint>> = per.iter().filter_map(|m| m.get(&(variant, question)).cloned()).collect();
            if !trajs.is_empty() {
                means.extend(report::trajectory_mean_rows(model, variant, question, &mean_trajectory(&trajs)));
            }
        }
    }
    let mean_path = dir.join(report::TRAJECTORY_MEAN_CSV);
    report::write_csv(&mean_path, &means)?;
    files.push(mean_path);

    let corpus_items: Vec<GardenPathItem> = inputs.items.iter().map(|(i, _)| i.clone()).collect();
    let mut accuracy = Vec::new();
    for variant in Variant::ALL {
        let trajs: Vec<Vec<TrajectoryPoint>> = per
            .iter()
            .filter_map(|m| m.get(&(variant, Question::Misinterpretation)).cloned())
            .collect();
        if !trajs.is_empty() {
            accuracy.push(report::accuracy_row(&accuracy_summary(model, variant, &corpus_items, &trajs)?));
        }
    }
    let acc_path = dir.join(report::ACCURACY_CSV);
    report::write_csv(&acc_path, &accuracy)?;
    files.push(acc_path);
    Ok(StageOutput {
        model: model.clone(),
        files,
    })
}

// ---- surprisal ----

pub fn surprisal(bundle_root: &Path, corpus: &Path, analysis_root: &Path, strictness: Strictness) -> Result<StageOutput> {
    let inputs = load_inputs(bundle_root, corpus, Some(N_CHUNKS), strictness)?;
    let model = &inputs.model_id;
    // a model without log-probabilities fails every item, so this error is
    // never downgraded to a per-item skip
    let per: Vec<Vec<SurprisalProfile>> = per_item(&inputs, Strictness::Strict, |item, bundles| {
        bundles.iter().map(|b| chunk_surprisal(b, item).map_err(CliError::from)).collect()
    })?;
    let profiles: Vec<SurprisalProfile> = per.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for p in &profiles {
        rows.extend(report::surprisal_rows(model, p));
    }
    let mut means = Vec::new();
    for variant in Variant::ALL {
        let selected: Vec<SurprisalProfile> = profiles
            .iter()
            .filter(|p| p.chunks.first().is_some_and(|c| c.variant == variant))
            .cloned()
            .collect();
        for chunk in 1..=N_CHUNKS {
            means.push(SurprisalMeanRow {
                model: model.clone(),
                variant,
                chunk,
                mean_bits: mean_chunk(&selected, chunk),
                n_items: selected.len(),
            });
        }
    }
    let dir = inputs.model_dir(analysis_root);
    let (a, b) = (dir.join(report::SURPRISAL_CSV), dir.join(report::SURPRISAL_MEAN_CSV));
    report::write_csv(&a, &rows)?;
    report::write_csv(&b, &means)?;
    Ok(StageOutput {
        model: model.clone(),
        files: vec![a, b],
    })
}

// ---- attention-sensitivity ----

pub struct AttentionOptions {
    pub prefix: usize,
    pub threshold: f64,
    pub reduction: SpanReduction,
}

pub fn attention(
    bundle_root: &Path,
    corpus: &Path,
    analysis_root: &Path,
    opts: &AttentionOptions,
    strictness: Strictness,
) -> Result<StageOutput> {
    if !(4..=N_CHUNKS).contains(&opts.prefix) {
        return Err(CliError::Invalid(format!(
            "attention prefix must be 4 or 5 (all three roles visible), got {}",
            opts.prefix
        )));
    }
    if !opts.threshold.is_finite() || opts.threshold < 0.0 {
        return Err(CliError::Invalid(format!("threshold must be non-negative, got {}", opts.threshold)));
    }
    let inputs = load_inputs(bundle_root, corpus, Some(opts.prefix), strictness)?;
    let model = &inputs.model_id;
    let per = per_item(&inputs, strictness, |_, bundles| {
        bundles
            .iter()
            .map(|b| Ok((b.manifest.variant, head_sensitivity(b, opts.reduction)?)))
            .collect::<Result<Vec<_>>>()
    })?;
    let dir = inputs.model_dir(analysis_root);
    let mut maps = BTreeMap::new();
    let mut files = Vec::new();
    for variant in Variant::ALL {
        let mats: Vec<_> = per.iter().flatten().filter(|(v, _)| *v == variant).map(|(_, m)| m.clone()).collect();
        if mats.is_empty() {
            log::warn!("{model}: no {variant} bundles at prefix {}", opts.prefix);
            continue;
        }
        let map = aggregate_maps(model, variant, &mats)?;
        let path = dir.join(report::attention_csv(variant.as_str()));
        report::write_csv(&path, &report::head_rows(&map.matrix))?;
        files.push(path);
        maps.insert(variant, map);
    }
    if let (Some(p), Some(a)) = (maps.get(&Variant::CommaPresent), maps.get(&Variant::CommaAbsent)) {
        let diff = difference_map(p, a, opts.threshold)?;
        let path = dir.join(report::attention_csv("difference"));
        report::write_csv(&path, &report::head_rows(&diff))?;
        files.push(path);
    }
    Ok(StageOutput {
        model: model.clone(),
        files,
    })
}

// ---- stats ----

fn model_dirs(analysis_root: &Path) -> Result<Vec<PathBuf>> {
    let io = |source| CliError::Io {
        path: analysis_root.into(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(analysis_root).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<Vec<T>>> {
    if path.is_file() {
        Ok(Some(report::read_csv(path)?))
    } else {
        Ok(None)
    }
}

fn stats_row(model: &str, contrast: &str, test: &str, n: usize, result: Result<StatsResult, StatsError>) -> StatsRow {
    match result {
        Ok(r) => StatsRow {
            model: model.into(),
            contrast: contrast.into(),
            test: test.into(),
            t: Some(r.t),
            df: Some(r.df),
            p: Some(r.p),
            mean_difference: Some(r.mean_difference),
            n: r.n,
            note: String::new(),
        },
        Err(e) => StatsRow {
            model: model.into(),
            contrast: contrast.into(),
            test: test.into(),
            t: None,
            df: None,
            p: None,
            mean_difference: None,
            n,
            note: e.to_string(),
        },
    }
}

/// Paired and Welch tests of `x − y` for matched observations.
fn both_tests(model: &str, contrast: &str, x: &[f64], y: &[f64]) -> [StatsRow; 2] {
    [
        stats_row(model, contrast, "paired_t", x.len(), paired_t(x, y)),
        stats_row(model, contrast, "welch_t", x.len(), welch_t(x, y)),
    ]
}

fn points_from_rows(rows: &[TrajectoryRow], variant: Variant) -> Vec<Vec<TrajectoryPoint>> {
    let mut by_item: BTreeMap<&str, Vec<TrajectoryPoint>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.variant == variant) {
        by_item.entry(&r.item).or_default().push(TrajectoryPoint {
            item_id: r.item.clone(),
            variant,
            prefix_index: r.chunk,
            p_yes: r.p_yes,
            p_no: r.p_no,
            p_yes_normalized: r.p_yes_norm,
        });
    }
    by_item.into_values().collect()
}

fn model_stats(dir: &Path) -> Result<Vec<StatsRow>> {
    let mut rows = Vec::new();
    let mut model = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();

    if let Some(traj) = read_optional::<TrajectoryRow>(&dir.join(report::TRAJECTORY_CSV))? {
        if let Some(r) = traj.first() {
            model = r.model.clone();
        }
        let pairs = pair_final_answers(
            &points_from_rows(&traj, Variant::CommaAbsent),
            &points_from_rows(&traj, Variant::CommaPresent),
        )?;
        let answers: Vec<_> = pairs.into_iter().map(|(_, p)| p).collect();
        let contrast = "final_answer_rejects: comma_present - comma_absent";
        let n = answers.len();
        let split = |r: gpprobe::Result<StatsResult>| -> Result<Result<StatsResult, StatsError>> {
            match r {
                Ok(r) => Ok(Ok(r)),
                Err(gpprobe::Error::Stats(e)) => Ok(Err(e)),
                Err(e) => Err(e.into()),
            }
        };
        rows.push(stats_row(&model, contrast, "paired_t", n, split(comma_effect_test(&answers))?));
        rows.push(stats_row(&model, contrast, "welch_t", n, split(comma_effect_welch(&answers))?));
    }

    if let Some(verdicts) = read_optional::<VerdictRow>(&dir.join(report::VERDICTS_CSV))? {
        let correct: BTreeMap<(&str, Variant, usize), f64> = verdicts
            .iter()
            .map(|r| ((r.item.as_str(), r.variant, r.chunk), f64::from(u8::from(r.verdict == Verdict::Correct))))
            .collect();
        let matched = |a: (Variant, usize), b: (Variant, usize)| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (&(item, v, c), &x) in &correct {
                if (v, c) == a {
                    if let Some(&y) = correct.get(&(item, b.0, b.1)) {
                        xs.push(x);
                        ys.push(y);
                    }
                }
            }
            (xs, ys)
        };
        let (x, y) = matched((Variant::CommaPresent, N_CHUNKS), (Variant::CommaAbsent, N_CHUNKS));
        rows.extend(both_tests(&model, "correct_verdict_chunk5: comma_present - comma_absent", &x, &y));
        let (x, y) = matched((Variant::CommaAbsent, N_CHUNKS), (Variant::CommaAbsent, 4));
        rows.extend(both_tests(&model, "correct_verdict_comma_absent: chunk5 - chunk4", &x, &y));
    }

    if let Some(surprisal) = read_optional::<SurprisalRow>(&dir.join(report::SURPRISAL_CSV))? {
        let mut by_item: BTreeMap<&str, [f64; N_CHUNKS]> = BTreeMap::new();
        for r in surprisal.iter().filter(|r| r.variant == Variant::CommaAbsent) {
            if (1..=N_CHUNKS).contains(&r.chunk) {
                by_item.entry(&r.item).or_insert([f64::NAN; N_CHUNKS])[r.chunk - 1] = r.mean_bits;
            }
        }
        let (x, y): (Vec<f64>, Vec<f64>) = by_item.values().map(|c| (c[3], (c[0] + c[1] + c[2]) / 3.0)).unzip();
        rows.extend(both_tests(&model, "surprisal_comma_absent: chunk4 - mean(chunks1-3)", &x, &y));
    }
    Ok(rows)
}

pub fn stats(analysis_root: &Path) -> Result<Vec<StageOutput>> {
    let mut out = Vec::new();
    for dir in model_dirs(analysis_root)? {
        let rows = model_stats(&dir)?;
        if rows.is_empty() {
            continue;
        }
        let path = dir.join(report::STATS_CSV);
        report::write_csv(&path, &rows)?;
        out.push(StageOutput {
            model: rows[0].model.clone(),
            files: vec![path],
        });
    }
    Ok(out)
}

// ---- report ----

pub fn render(analysis_root: &Path, reports_root: &Path) -> Result<Vec<PathBuf>> {
    let artifacts = report::render_reports(analysis_root, reports_root)?;
    Ok(artifacts.into_iter().map(|a| a.path).collect())
}

mod config;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use gpprobe::attention::SpanReduction;
use gpprobe::{Strictness, TrainConfig};
use serde::Serialize;

use config::{Config, LayerChoice};
use pipeline::{AttentionOptions, CliError, Result, StageOutput, TrainOptions};

const WORKERS_ENV: &str = "GPPROBE_WORKERS";

/// Garden-path probing: structural probes, answer trajectories, surprisal
/// and attention sensitivity over exported activation bundles.
#[derive(Debug, Parser)]
#[command(name = "gpprobe", version)]
struct Cli {
    /// TOML run configuration; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-item stages [default: $GPPROBE_WORKERS, else all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for every random choice (probe initialisation and batching).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip invalid bundles and items with a warning instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a stimulus corpus (and optionally its bundles).
    ValidateCorpus {
        file: PathBuf,
        /// Also validate every bundle under this root against the corpus.
        #[arg(long)]
        bundle_root: Option<PathBuf>,
    },
    /// Train a structural probe on treebank activations.
    TrainProbe {
        /// CoNLL-U treebank.
        #[arg(long)]
        treebank: Option<PathBuf>,
        /// Directory holding one bundle per treebank sentence, named by sent_id.
        #[arg(long)]
        activations: Option<PathBuf>,
        /// Checkpoint to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Decode probe trees for every prefix and judge the attachment.
    ExtractTrees {
        #[command(flatten)]
        input: InputArgs,
        /// Probe checkpoint written by train-probe.
        #[arg(long)]
        probe: Option<PathBuf>,
        #[command(flatten)]
        out: AnalysisOut,
    },
    /// Yes/no answer trajectories and final-answer accuracy.
    TrackInterpretation {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: AnalysisOut,
    },
    /// Mean per-chunk surprisal from the full-sentence bundles.
    Surprisal {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: AnalysisOut,
    },
    /// Per-head attention sensitivity maps and their comma difference.
    AttentionSensitivity {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        attention: AttentionArgs,
        #[command(flatten)]
        out: AnalysisOut,
    },
    /// t-tests over the analysis CSVs of every model.
    Stats {
        /// Analysis root with one directory per model [default: analysis].
        #[arg(long)]
        analysis: Option<PathBuf>,
    },
    /// Render SVG/CSV/Markdown reports from the analysis CSVs.
    Report {
        /// Analysis root [default: analysis].
        #[arg(long)]
        analysis: Option<PathBuf>,
        /// Report root [default: reports].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage in order, into one output directory.
    All {
        #[command(flatten)]
        input: InputArgs,
        /// Existing probe checkpoint; otherwise one is trained when a treebank is given.
        #[arg(long)]
        probe: Option<PathBuf>,
        /// CoNLL-U treebank for training a probe.
        #[arg(long)]
        treebank: Option<PathBuf>,
        /// Bundles of the treebank sentences, named by sent_id.
        #[arg(long)]
        activations: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        attention: AttentionArgs,
        /// Output directory [default: out].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Bundle root of one model: <root>/<item>/<variant>/prefix_<k>/.
    #[arg(long)]
    bundle_root: Option<PathBuf>,
    /// Stimulus corpus (JSON lines).
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalysisOut {
    /// Analysis root; results go to <out>/<model>/ [default: analysis].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Hidden layer index, or `auto` for the best dev-UUAS layer [default: auto].
    #[arg(long)]
    layer: Option<LayerChoice>,
    /// Probe rank [default: 64, capped at the hidden size].
    #[arg(long)]
    rank: Option<usize>,
    /// Initial learning rate [default: 0.001].
    #[arg(long)]
    lr: Option<f64>,
    /// [default: 40]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Reduction {
    Max,
    Mean,
}

#[derive(Debug, Args)]
struct AttentionArgs {
    /// Prefix whose attention is read (4 or 5) [default: 5].
    #[arg(long)]
    prefix: Option<usize>,
    /// Difference-map cells below this are zeroed [default: 0.05].
    #[arg(long)]
    threshold: Option<f64>,
    /// How a span of tokens is reduced to one weight [default: max].
    #[arg(long, value_enum)]
    reduction: Option<Reduction>,
}

/// Command line merged over the config file.
struct Ctx {
    cfg: Config,
    seed: Option<u64>,
    strictness: Strictness,
}

fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| CliError::Invalid(format!("missing --{name} (or `{}` in the config)", name.replace('-', "_"))))
}

impl Ctx {
    fn inputs(&self, a: InputArgs) -> Result<(PathBuf, PathBuf)> {
        Ok((
            required(a.bundle_root, &self.cfg.bundle_root, "bundle-root")?,
            required(a.corpus, &self.cfg.corpus, "corpus")?,
        ))
    }

    fn analysis_root(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.cfg.analysis.out.clone())
            .unwrap_or_else(|| "analysis".into())
    }

    fn train_options(&self, a: TrainArgs, treebank: PathBuf, activations: PathBuf, out: PathBuf) -> TrainOptions {
        let p = &self.cfg.probe;
        let d = TrainConfig::default();
        TrainOptions {
            treebank,
            activations,
            out,
            layer: a.layer.or(p.layer).unwrap_or(LayerChoice::Auto),
            rank: a.rank.or(p.rank),
            lr: a.lr.or(p.lr).unwrap_or(d.learning_rate),
            epochs: a.epochs.or(p.epochs).unwrap_or(d.epochs),
            batch_size: a.batch_size.or(p.batch_size).unwrap_or(d.batch_size),
            seed: self.seed(),
        }
    }

    /// `--seed`, then `probe.seed`, then the top-level `seed` key.
    fn seed(&self) -> u64 {
        self.seed
            .or(self.cfg.probe.seed)
            .or(self.cfg.seed)
            .unwrap_or(TrainConfig::default().seed)
    }

    fn attention_options(&self, a: AttentionArgs) -> AttentionOptions {
        let c = &self.cfg.attention;
        AttentionOptions {
            prefix: a.prefix.or(c.prefix).unwrap_or(gpprobe::N_CHUNKS),
            threshold: a.threshold.or(c.threshold).unwrap_or(0.05),
            reduction: a
                .reduction
                .map(|r| match r {
                    Reduction::Max => SpanReduction::Max,
                    Reduction::Mean => SpanReduction::Mean,
                })
                .or(c.reduction)
                .unwrap_or_default(),
        }
    }
}

fn print_outputs(outputs: &[StageOutput]) {
    for o in outputs {
        for f in &o.files {
            println!("{}\t{}", o.model, f.display());
        }
    }
}

fn extract_trees_usage() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut("extract-trees")
        .expect("subcommand exists")
        .render_usage()
        .to_string()
}

fn run(command: Command, ctx: &Ctx) -> Result<()> {
    match command {
        Command::ValidateCorpus { file, bundle_root } => {
            let root = bundle_root.or_else(|| ctx.cfg.bundle_root.clone());
            let summary = pipeline::validate_corpus(&file, root.as_deref(), ctx.strictness)?;
            println!("{}: {summary}", file.display());
        }
        Command::TrainProbe {
            treebank,
            activations,
            out,
            train,
        } => {
            let p = &ctx.cfg.probe;
            let opts = ctx.train_options(
                train,
                required(treebank, &p.treebank, "treebank")?,
                required(activations, &p.activations, "activations")?,
                required(out, &p.path, "out")?,
            );
            let summary = pipeline::train(&opts, ctx.strictness)?;
            println!("{}\tlayer {}", opts.out.display(), summary.layer);
        }
        Command::ExtractTrees { input, probe, out } => {
            let Some(probe) = probe.or_else(|| ctx.cfg.probe.path.clone()) else {
                eprintln!("error: extract-trees needs a probe checkpoint (--probe, or probe.path in the config)\n");
                eprintln!("{}", extract_trees_usage());
                return Err(CliError::Invalid(String::new()));
            };
            let (root, corpus) = ctx.inputs(input)?;
            let o = pipeline::extract_trees(&root, &corpus, &probe, &ctx.analysis_root(out.out), ctx.strictness)?;
            print_outputs(&[o]);
        }
        Command::TrackInterpretation { input, out } => {
            let (root, corpus) = ctx.inputs(input)?;
            let o = pipeline::track_interpretation(&root, &corpus, &ctx.analysis_root(out.out), ctx.strictness)?;
            print_outputs(&[o]);
        }
        Command::Surprisal { input, out } => {
            let (root, corpus) = ctx.inputs(input)?;
            let o = pipeline::surprisal(&root, &corpus, &ctx.analysis_root(out.out), ctx.strictness)?;
            print_outputs(&[o]);
        }
        Command::AttentionSensitivity { input, attention, out } => {
            let (root, corpus) = ctx.inputs(input)?;
            let opts = ctx.attention_options(attention);
            let o = pipeline::attention(&root, &corpus, &ctx.analysis_root(out.out), &opts, ctx.strictness)?;
            print_outputs(&[o]);
        }
        Command::Stats { analysis } => {
            print_outputs(&pipeline::stats(&ctx.analysis_root(analysis))?);
        }
        Command::Report { analysis, out } => {
            let out = out
                .or_else(|| ctx.cfg.report.out.clone())
                .unwrap_or_else(|| "reports".into());
            for path in pipeline::render(&ctx.analysis_root(analysis), &out)? {
                println!("{}", path.display());
            }
        }
        Command::All {
            input,
            probe,
            treebank,
            activations,
            train,
            attention,
            out,
        } => run_all(ctx, input, probe, treebank, activations, train, attention, out)?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StageRecord {
    stage: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    outputs: Vec<String>,
}

/// Written beside the reports. Holds nothing that varies between identical
/// runs: no timestamps, no absolute paths, no worker count.
#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    model: String,
    strict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_layer: Option<usize>,
    stages: Vec<StageRecord>,
}

fn relative(base: &Path, paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| {
            p.strip_prefix(base)
                .unwrap_or(p)
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/")
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_all(
    ctx: &Ctx,
    input: InputArgs,
    probe: Option<PathBuf>,
    treebank: Option<PathBuf>,
    activations: Option<PathBuf>,
    train: TrainArgs,
    attention: AttentionArgs,
    out: Option<PathBuf>,
) -> Result<()> {
    let (root, corpus) = ctx.inputs(input)?;
    let out = out.or_else(|| ctx.cfg.out.clone()).unwrap_or_else(|| "out".into());
    let analysis = out.join("analysis");
    let reports = out.join("reports");
    let p = &ctx.cfg.probe;
    let mut stages = Vec::new();
    let ok = |stage, files: &[PathBuf]| StageRecord {
        stage,
        status: "ok",
        reason: None,
        outputs: relative(&out, files),
    };

    let summary = pipeline::validate_corpus(&corpus, Some(&root), ctx.strictness)?;
    log::info!("corpus: {summary}");
    stages.push(ok("validate-corpus", &[]));

    let treebank = treebank.or_else(|| p.treebank.clone());
    let activations = activations.or_else(|| p.activations.clone());
    let mut probe_layer = None;
    let probe = match (probe.or_else(|| p.path.clone()), treebank, activations) {
        (Some(path), _, _) => Some(path),
        (None, Some(tb), Some(act)) => {
            let opts = ctx.train_options(train, tb, act, out.join("probe.bin"));
            let s = pipeline::train(&opts, ctx.strictness)?;
            probe_layer = Some(s.layer);
            stages.push(ok("train-probe", &[opts.out.clone(), pipeline::train_summary_path(&opts.out)]));
            Some(opts.out)
        }
        _ => None,
    };
    let skipped = |stage, reason: String| {
        log::warn!("skipping {stage}: {reason}");
        StageRecord {
            stage,
            status: "skipped",
            reason: Some(reason),
            outputs: Vec::new(),
        }
    };

    let mut model = None;
    match &probe {
        Some(path) => {
            let o = pipeline::extract_trees(&root, &corpus, path, &analysis, ctx.strictness)?;
            stages.push(ok("extract-trees", &o.files));
            model = Some(o.model);
        }
        None => stages.push(skipped("extract-trees", "no probe checkpoint and no treebank to train one".into())),
    }

    let o = pipeline::track_interpretation(&root, &corpus, &analysis, ctx.strictness)?;
    stages.push(ok("track-interpretation", &o.files));
    model.get_or_insert(o.model);

    match pipeline::surprisal(&root, &corpus, &analysis, ctx.strictness) {
        Ok(o) => stages.push(ok("surprisal", &o.files)),
        Err(e) if e.is_surprisal_unavailable() => stages.push(skipped("surprisal", e.to_string())),
        Err(e) => return Err(e),
    }

    let o = pipeline::attention(&root, &corpus, &analysis, &ctx.attention_options(attention), ctx.strictness)?;
    stages.push(ok("attention-sensitivity", &o.files));

    let files: Vec<PathBuf> = pipeline::stats(&analysis)?.into_iter().flat_map(|o| o.files).collect();
    stages.push(ok("stats", &files));

    let files = pipeline::render(&analysis, &reports)?;
    stages.push(ok("report", &files));

    let run = RunSummary {
        seed: ctx.seed(),
        model: model.unwrap_or_default(),
        strict: ctx.strictness == Strictness::Strict,
        probe_layer,
        stages,
    };
    let json = serde_json::to_string_pretty(&run).expect("summary serializes");
    let path = out.join("run_summary.json");
    std::fs::write(&path, format!("{json}\n")).map_err(|source| CliError::Io { path: path.clone(), source })?;
    println!("{}", path.display());
    Ok(())
}

fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    let cfg = config::parse(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(cfg.rebase(path.parent().unwrap_or(Path::new("."))))
}

fn worker_count(flag: Option<usize>, cfg: &Config) -> Result<Option<usize>> {
    if let Some(n) = flag.or(cfg.workers) {
        return Ok(Some(n));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    let workers = worker_count(cli.workers, &cfg)?;
    if workers == Some(0) {
        return Err(CliError::Invalid("worker count must be at least 1".into()));
    }
    let lenient = cli.lenient || cfg.lenient.unwrap_or(false);
    let ctx = Ctx {
        seed: cli.seed,
        strictness: if lenient { Strictness::Lenient } else { Strictness::Strict },
        cfg,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(cli.command, &ctx))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

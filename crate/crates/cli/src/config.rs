//! Run configuration file. Every key mirrors a command-line flag; flags win.
//!
//! Relative paths in the file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use gpprobe::attention::SpanReduction;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub bundle_root: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Base output directory of `all`.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub lenient: Option<bool>,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub attention: AttentionSection,
    #[serde(default)]
    pub analysis: OutSection,
    #[serde(default)]
    pub report: OutSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    /// Checkpoint to read (extract-trees) or write (train-probe).
    pub path: Option<PathBuf>,
    pub treebank: Option<PathBuf>,
    pub activations: Option<PathBuf>,
    pub rank: Option<usize>,
    pub layer: Option<LayerChoice>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionSection {
    pub prefix: Option<usize>,
    pub threshold: Option<f64>,
    pub reduction: Option<SpanReduction>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutSection {
    pub out: Option<PathBuf>,
}

/// Probe layer: a fixed index or the best dev-UUAS layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum LayerChoice {
    Fixed(usize),
    #[serde(deserialize_with = "auto")]
    Auto,
}

fn auto<'de, D: serde::Deserializer<'de>>(d: D) -> Result<(), D::Error> {
    let s = String::deserialize(d)?;
    if s == "auto" {
        Ok(())
    } else {
        Err(serde::de::Error::custom(format!("expected a layer index or \"auto\", got {s:?}")))
    }
}

impl std::str::FromStr for LayerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(LayerChoice::Auto);
        }
        s.parse()
            .map(LayerChoice::Fixed)
            .map_err(|_| format!("expected a layer index or \"auto\", got {s:?}"))
    }
}

pub fn parse(text: &str) -> Result<Config, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

impl Config {
    /// Makes relative paths relative to `base`.
    pub fn rebase(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.bundle_root);
        fix(&mut self.corpus);
        fix(&mut self.out);
        fix(&mut self.probe.path);
        fix(&mut self.probe.treebank);
        fix(&mut self.probe.activations);
        fix(&mut self.analysis.out);
        fix(&mut self.report.out);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let cfg = parse(
            r#"
bundle_root = "bundles/m"
corpus = "corpus.jsonl"
seed = 3
[probe]
rank = 16
layer = "auto"
lr = 0.01
epochs = 5
seed = 9
[attention]
prefix = 4
threshold = 0.1
reduction = "mean"
[report]
out = "reports"
"#,
        )
        .unwrap();
        assert_eq!(cfg.probe.layer, Some(LayerChoice::Auto));
        assert_eq!(cfg.attention.reduction, Some(SpanReduction::Mean));
        let cfg = cfg.rebase(Path::new("/base"));
        assert_eq!(cfg.corpus.unwrap(), Path::new("/base/corpus.jsonl"));
        assert_eq!(parse("[probe]\nlayer = 2").unwrap().probe.layer, Some(LayerChoice::Fixed(2)));
    }

    #[test]
    fn unknown_keys_and_bad_layers_rejected() {
        assert!(parse("bundle = \"x\"").is_err());
        assert!(parse("[probe]\nlayer = \"best\"").is_err());
        assert!(parse("[attention]\nwidth = 3").is_err());
    }
}

//! Writes a synthetic corpus, treebank and activation bundles that the CLI
//! can run on end to end.
//!
//! cargo run -p gpprobe --example synthetic_workspace -- <dir> [items] [sentences] [seed]

use std::path::PathBuf;

use gpprobe::fixtures::{write_synthetic_workspace, SyntheticModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().ok_or("usage: synthetic_workspace <dir> [items] [sentences] [seed]")?);
    let n_items = args.next().map(|s| s.parse()).transpose()?.unwrap_or(24);
    let n_sentences = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let model = SyntheticModel {
        seed,
        ..SyntheticModel::default()
    };
    let ws = write_synthetic_workspace(&dir, &model, n_items, n_sentences)?;
    println!("corpus       {}", ws.corpus.display());
    println!("treebank     {}", ws.treebank.display());
    println!("bundles      {}", ws.bundle_root.display());
    println!("activations  {}", ws.treebank_activations.display());
    Ok(())
}
